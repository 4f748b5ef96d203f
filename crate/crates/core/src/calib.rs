//! Measured-trace ingestion and in-situ calibration: differential line
//! loss, frequency-dependent phase delay, and modulation-phase offset
//! estimation.
//!
//! The de-embedding operations compare a modulated forward/backward trace
//! pair against an unmodulated reference pair taken through the same
//! cabling; the chain is reciprocal without modulation, so any reference
//! asymmetry is line offset and is subtracted per frequency point.
//!
//! This module works in the units of the instruments: dB, degrees, MHz.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

use crate::numerics::{golden_min, linspace};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibError {
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("frequency axis is not strictly increasing at line {line}")]
    NonMonotonicAxis { line: usize },
    #[error("traces do not share a frequency axis (first mismatch at index {index})")]
    AxisMismatch { index: usize },
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("antisymmetry center is ambiguous (no unique minimum)")]
    AmbiguousMinimum,
    #[error("io error: {0}")]
    Io(String),
}

/// Text column layout of a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    /// `freq_MHz, mag_dB, phase_deg`
    MagPhase,
    /// `freq_MHz, real, imag`
    ReIm,
}

impl TraceFormat {
    fn from_tag(tag: &str) -> Option<Self> {
        match tag.trim() {
            "A" => Some(Self::MagPhase),
            "B" => Some(Self::ReIm),
            _ => None,
        }
    }
}

impl fmt::Display for TraceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MagPhase => "A",
            Self::ReIm => "B",
        })
    }
}

/// A complex-valued transmission trace over a strictly increasing frequency
/// axis, with free-form metadata from `# key=value` comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredTrace {
    pub freq_mhz: Vec<f64>,
    pub values: Vec<C64>,
    /// Port-pair identifier, e.g. `S41`.
    pub label: String,
    pub meta: BTreeMap<String, String>,
}

impl MeasuredTrace {
    pub fn len(&self) -> usize {
        self.freq_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_mhz.is_empty()
    }

    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| 20.0 * v.norm().log10()).collect()
    }

    pub fn phases_deg(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.arg().to_degrees()).collect()
    }
}

/// Parses trace text. The column meaning comes from a `# format=A|B` header
/// line or, failing that, from `format_hint`.
pub fn parse_trace(
    text: &str,
    format_hint: Option<TraceFormat>,
    default_label: &str,
) -> Result<MeasuredTrace, CalibError> {
    let mut format = None;
    let mut meta = BTreeMap::new();
    let mut label = default_label.to_string();
    let mut freq = Vec::new();
    let mut values_raw: Vec<(f64, f64)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let key = key.trim();
                let value = value.trim();
                match key {
                    "format" => {
                        format = Some(TraceFormat::from_tag(value).ok_or_else(|| {
                            CalibError::ParseError {
                                line: line_no,
                                message: format!("unknown format tag `{value}`"),
                            }
                        })?);
                    }
                    "label" => label = value.to_string(),
                    _ => {
                        meta.insert(key.to_string(), value.to_string());
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CalibError::ParseError {
                line: line_no,
                message: format!("expected 3 comma-separated columns, got {}", fields.len()),
            });
        }
        let mut nums = [0.0f64; 3];
        for (k, field) in fields.iter().enumerate() {
            nums[k] = field.parse::<f64>().map_err(|e| CalibError::ParseError {
                line: line_no,
                message: format!("column {}: {e}", k + 1),
            })?;
            if !nums[k].is_finite() {
                return Err(CalibError::ParseError {
                    line: line_no,
                    message: format!("column {} is not finite", k + 1),
                });
            }
        }
        if let Some(&last) = freq.last() {
            if nums[0] <= last {
                return Err(CalibError::NonMonotonicAxis { line: line_no });
            }
        }
        freq.push(nums[0]);
        values_raw.push((nums[1], nums[2]));
    }

    let format = format.or(format_hint).ok_or(CalibError::ParseError {
        line: 0,
        message: "no `# format=` header and no format hint given".into(),
    })?;
    if freq.is_empty() {
        return Err(CalibError::ParseError { line: 0, message: "no data rows".into() });
    }
    let values = values_raw
        .into_iter()
        .map(|(a, b)| match format {
            TraceFormat::MagPhase => C64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
            TraceFormat::ReIm => C64::new(a, b),
        })
        .collect();
    Ok(MeasuredTrace { freq_mhz: freq, values, label, meta })
}

/// Loads a trace file from disk. See [`parse_trace`].
pub fn load_trace(path: &Path, format_hint: Option<TraceFormat>) -> Result<MeasuredTrace, CalibError> {
    let text = std::fs::read_to_string(path).map_err(|e| CalibError::Io(e.to_string()))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    parse_trace(&text, format_hint, &label)
}

fn check_shared_axis(traces: &[&MeasuredTrace]) -> Result<(), CalibError> {
    let first = traces[0];
    for t in &traces[1..] {
        if t.len() != first.len() {
            return Err(CalibError::AxisMismatch { index: first.len().min(t.len()) });
        }
        for (i, (a, b)) in first.freq_mhz.iter().zip(t.freq_mhz.iter()).enumerate() {
            if a != b {
                return Err(CalibError::AxisMismatch { index: i });
            }
        }
    }
    Ok(())
}

/// Line-loss-calibrated magnitude contrast in dB per frequency point:
/// `(|fwd| - |bwd|) - (|ref_fwd| - |ref_bwd|)`, all in dB. The references
/// are unmodulated traces, so their difference is the line-loss offset.
pub fn deembed_magnitude(
    fwd: &MeasuredTrace,
    bwd: &MeasuredTrace,
    ref_fwd: &MeasuredTrace,
    ref_bwd: &MeasuredTrace,
) -> Result<Vec<(f64, f64)>, CalibError> {
    check_shared_axis(&[fwd, bwd, ref_fwd, ref_bwd])?;
    let f = fwd.magnitudes_db();
    let b = bwd.magnitudes_db();
    let rf = ref_fwd.magnitudes_db();
    let rb = ref_bwd.magnitudes_db();
    Ok(fwd
        .freq_mhz
        .iter()
        .enumerate()
        .map(|(i, &freq)| (freq, (f[i] - b[i]) - (rf[i] - rb[i])))
        .collect())
}

/// Removes +-180 degree wrap jumps scanning in increasing frequency.
pub fn unwrap_phases_deg(phases: &mut [f64]) {
    for i in 1..phases.len() {
        let mut d = phases[i] - phases[i - 1];
        while d > 180.0 {
            phases[i] -= 360.0;
            d = phases[i] - phases[i - 1];
        }
        while d < -180.0 {
            phases[i] += 360.0;
            d = phases[i] - phases[i - 1];
        }
    }
}

fn wrap_deg(x: f64) -> f64 {
    let y = x.rem_euclid(360.0);
    if y > 180.0 {
        y - 360.0
    } else {
        y
    }
}

/// Delay-calibrated phase contrast in degrees per frequency point:
/// `(arg fwd - arg bwd) - (arg ref_fwd - arg ref_bwd)`, phases unwrapped
/// along the axis first, result wrapped to (-180, 180].
pub fn deembed_phase(
    fwd: &MeasuredTrace,
    bwd: &MeasuredTrace,
    ref_fwd: &MeasuredTrace,
    ref_bwd: &MeasuredTrace,
) -> Result<Vec<(f64, f64)>, CalibError> {
    check_shared_axis(&[fwd, bwd, ref_fwd, ref_bwd])?;
    let mut f = fwd.phases_deg();
    let mut b = bwd.phases_deg();
    let mut rf = ref_fwd.phases_deg();
    let mut rb = ref_bwd.phases_deg();
    for p in [&mut f, &mut b, &mut rf, &mut rb] {
        unwrap_phases_deg(p);
    }
    Ok(fwd
        .freq_mhz
        .iter()
        .enumerate()
        .map(|(i, &freq)| (freq, wrap_deg((f[i] - b[i]) - (rf[i] - rb[i]))))
        .collect())
}

/// Minimum number of samples accepted by [`estimate_phi_offset`].
pub const PHI_OFFSET_MIN_SAMPLES: usize = 5;

/// Estimates the instrumental phase offset `phi0` from a contrast-vs-phase
/// sweep. The true contrast is odd around `phi0`, so `phi0` minimizes the
/// mean squared sum of the piecewise-linearly interpolated contrast at
/// mirrored offsets, `J(c) = mean_d [M(c+d) + M(c-d)]^2`.
///
/// Both `phi` and the returned offset are in degrees.
pub fn estimate_phi_offset(samples: &[(f64, f64)]) -> Result<f64, CalibError> {
    if samples.len() < PHI_OFFSET_MIN_SAMPLES {
        return Err(CalibError::InsufficientSamples {
            got: samples.len(),
            need: PHI_OFFSET_MIN_SAMPLES,
        });
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = pts[0].0;
    let hi = pts[pts.len() - 1].0;
    if !(hi > lo) {
        return Err(CalibError::AmbiguousMinimum);
    }

    let interp = |x: f64| -> f64 {
        // piecewise linear; callers keep x inside [lo, hi]
        let idx = pts.partition_point(|p| p.0 < x);
        if idx == 0 {
            return pts[0].1;
        }
        if idx >= pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (x0, y0) = pts[idx - 1];
        let (x1, y1) = pts[idx];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };

    // Mirror-offset grid tied to the sample spacing.
    let step = (hi - lo) / (pts.len() - 1) as f64;
    let objective = |center: f64| -> f64 {
        let max_delta = (center - lo).min(hi - center);
        let n_delta = (max_delta / step).floor() as usize;
        if n_delta < 2 {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for k in 1..=n_delta {
            let d = k as f64 * step;
            let s = interp(center + d) + interp(center - d);
            acc += s * s;
        }
        acc / n_delta as f64
    };

    // Coarse scan, ambiguity detection, then golden-section refinement.
    let grid = linspace(lo, hi, 401);
    let vals: Vec<f64> = grid.iter().map(|&c| objective(c)).collect();
    let finite: Vec<(usize, f64)> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .map(|(i, &v)| (i, v))
        .collect();
    if finite.is_empty() {
        return Err(CalibError::AmbiguousMinimum);
    }
    let v_min = finite.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
    let v_max = finite.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    if v_max - v_min <= 1e-12 * v_max.max(1e-300) {
        return Err(CalibError::AmbiguousMinimum);
    }

    // Strict local minima of the coarse objective.
    let mut minima: Vec<(usize, f64)> = Vec::new();
    for w in 1..grid.len() - 1 {
        let (a, b, c) = (vals[w - 1], vals[w], vals[w + 1]);
        if b.is_finite() && b <= a && b <= c && (b < a || b < c) {
            minima.push((w, b));
        }
    }
    if minima.is_empty() {
        return Err(CalibError::AmbiguousMinimum);
    }
    minima.sort_by(|x, y| x.1.total_cmp(&y.1));
    if minima.len() >= 2 {
        let best = minima[0].1;
        let second = minima[1].1;
        let far_apart = (grid[minima[0].0] - grid[minima[1].0]).abs() > 3.0 * step;
        if far_apart && second <= 2.0 * best.max(1e-12 * v_max) {
            return Err(CalibError::AmbiguousMinimum);
        }
    }
    let best_idx = minima[0].0;
    let a = grid[best_idx.saturating_sub(1)];
    let b = grid[(best_idx + 1).min(grid.len() - 1)];
    let (phi0, _) = golden_min(objective, a, b, 1e-7);
    Ok(phi0)
}
