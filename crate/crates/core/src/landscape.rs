//! Modulation-parameter-space mapping: contrast grids, exceptional-point
//! contour tracing, the critical modulation strength, and pure-gyration
//! operating points.
//!
//! Exceptional points are located as sign changes of the real part of one
//! effective coupling at the center frequency (the couplings are real there
//! to numerical precision), with an imaginary-part guard flagging points
//! where that assumption degrades.

use crate::floquet::FloquetError;
use crate::hn::{contrast_at_omega0, hn_couplings, HnError};
use crate::model::{ChainModel, Modulation, Truncation};
use crate::numerics::{golden_min, linspace, strictly_increasing};
use crate::C64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LandscapeError {
    #[error("invalid axis: {0}")]
    InvalidAxis(&'static str),
    /// The critical-strength bracket does not straddle the ring transition.
    #[error("bracket does not straddle the transition: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}")]
    BracketInvalid { g_lo: f64, g_hi: f64 },
    #[error("no valid evaluations inside the search window")]
    NoValidPoints,
    #[error(transparent)]
    Floquet(#[from] FloquetError),
}

/// Which effective coupling a contour traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSide {
    Lambda12,
    Lambda21,
}

impl CouplingSide {
    pub fn name(&self) -> &'static str {
        match self {
            CouplingSide::Lambda12 => "lambda12",
            CouplingSide::Lambda21 => "lambda21",
        }
    }
}

/// Values stored per grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValues {
    pub lambda12: C64,
    pub lambda21: C64,
    pub mag_contrast_db: f64,
    /// Radians, wrapped to (-pi, pi].
    pub phase_contrast: f64,
    pub p_used: usize,
}

/// Sampled map of the effective couplings over (omega_m, phi) at fixed
/// per-site modulation strengths. Cells are stored row-major with the
/// omega_m index outermost; per-cell failures are recorded in place.
#[derive(Debug, Clone)]
pub struct LandscapeGrid {
    pub beta1: f64,
    pub beta2: f64,
    pub omega_m_axis: Vec<f64>,
    /// Radians.
    pub phi_axis: Vec<f64>,
    pub cells: Vec<Result<CellValues, FloquetError>>,
}

impl LandscapeGrid {
    pub fn cell(&self, i_omega: usize, j_phi: usize) -> &Result<CellValues, FloquetError> {
        &self.cells[i_omega * self.phi_axis.len() + j_phi]
    }
}

fn validate_axis(axis: &[f64], name: &'static str) -> Result<(), LandscapeError> {
    if !strictly_increasing(axis) {
        return Err(LandscapeError::InvalidAxis(name));
    }
    Ok(())
}

/// Evaluates the effective couplings on the product grid. Cells are
/// independent and computed in parallel; assembly order is deterministic.
pub fn parameter_map(
    chain: &ChainModel,
    beta1: f64,
    beta2: f64,
    omega_m_axis: &[f64],
    phi_axis: &[f64],
    truncation: &Truncation,
) -> Result<LandscapeGrid, LandscapeError> {
    validate_axis(omega_m_axis, "omega_m axis must be non-empty and strictly increasing")?;
    validate_axis(phi_axis, "phi axis must be non-empty and strictly increasing")?;
    if omega_m_axis[0] <= 0.0 {
        return Err(LandscapeError::InvalidAxis("omega_m axis must be positive"));
    }
    let indices: Vec<(usize, usize)> = (0..omega_m_axis.len())
        .flat_map(|i| (0..phi_axis.len()).map(move |j| (i, j)))
        .collect();
    let cells: Vec<Result<CellValues, FloquetError>> = indices
        .par_iter()
        .map(|&(i, j)| {
            let modulation = Modulation::new(beta1, beta2, omega_m_axis[i], phi_axis[j])
                .expect("validated axis");
            hn_couplings(chain, &modulation, truncation).map(|hn| CellValues {
                lambda12: hn.lambda12,
                lambda21: hn.lambda21,
                mag_contrast_db: hn.mag_contrast_db,
                phase_contrast: hn.phase_contrast,
                p_used: hn.p_used,
            })
        })
        .collect();
    Ok(LandscapeGrid {
        beta1,
        beta2,
        omega_m_axis: omega_m_axis.to_vec(),
        phi_axis: phi_axis.to_vec(),
        cells,
    })
}

/// Search window and resolution for contour tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourWindow {
    /// (min, max) modulation frequency, MHz.
    pub omega_m: (f64, f64),
    /// (min, max) differential phase, radians.
    pub phi: (f64, f64),
    pub n_omega: usize,
    pub n_phi: usize,
    /// Bisection target on |Re lambda| at refined points, MHz.
    pub refine_tol: f64,
    /// Imaginary-part guard, MHz; defaults to 1e-4 times the static coupling.
    pub imag_guard: Option<f64>,
}

impl Default for ContourWindow {
    fn default() -> Self {
        Self {
            omega_m: (14.0, 26.0),
            phi: (-PI, PI),
            n_omega: 121,
            n_phi: 181,
            refine_tol: 1e-6,
            imag_guard: None,
        }
    }
}

/// One traced zero contour of a coupling in the (omega_m, phi) plane.
#[derive(Debug, Clone)]
pub struct EpContour {
    pub which: CouplingSide,
    /// Ordered polyline of (omega_m MHz, phi radians) pairs.
    pub points: Vec<(f64, f64)>,
    /// Whether the contour closes inside the sampled window.
    pub closed: bool,
    /// Indices of points where the imaginary-part guard was violated.
    pub guard_violations: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct EdgeId {
    i: usize,
    j: usize,
    horizontal: bool,
}

/// Traces the zero set of `Re lambda_which` over the window by marching
/// squares with bisection refinement of every crossing. An empty result is
/// a valid outcome (no exceptional points in the window).
pub fn ep_contour(
    chain: &ChainModel,
    beta: f64,
    which: CouplingSide,
    window: &ContourWindow,
    truncation: &Truncation,
) -> Result<Vec<EpContour>, LandscapeError> {
    if window.n_omega < 2 || window.n_phi < 2 {
        return Err(LandscapeError::InvalidAxis("contour grid needs at least 2x2 points"));
    }
    if window.refine_tol <= 0.0 {
        return Err(LandscapeError::InvalidAxis("refine_tol must be positive"));
    }
    let xs = linspace(window.omega_m.0, window.omega_m.1, window.n_omega);
    let ys = linspace(window.phi.0, window.phi.1, window.n_phi);
    validate_axis(&xs, "omega_m window must be increasing")?;
    validate_axis(&ys, "phi window must be increasing")?;
    if xs[0] <= 0.0 {
        return Err(LandscapeError::InvalidAxis("omega_m window must be positive"));
    }
    let imag_guard = window.imag_guard.unwrap_or(1e-4 * chain.lambda());

    let eval = |omega_m: f64, phi: f64| -> Result<C64, FloquetError> {
        let modulation = Modulation::new(beta, beta, omega_m, phi).expect("validated window");
        let hn = hn_couplings(chain, &modulation, truncation)?;
        Ok(match which {
            CouplingSide::Lambda12 => hn.lambda12,
            CouplingSide::Lambda21 => hn.lambda21,
        })
    };

    // Sample the grid (parallel over nodes).
    let nodes: Vec<(usize, usize)> = (0..xs.len())
        .flat_map(|i| (0..ys.len()).map(move |j| (i, j)))
        .collect();
    let field: Vec<f64> = nodes
        .par_iter()
        .map(|&(i, j)| eval(xs[i], ys[j]).map(|l| l.re).unwrap_or(f64::NAN))
        .collect();
    let value = |i: usize, j: usize| field[i * ys.len() + j];

    // Marching squares: collect per-cell segments between crossed edges.
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let va = value(i, j);
            let vb = value(i + 1, j);
            let vc = value(i + 1, j + 1);
            let vd = value(i, j + 1);
            if !(va.is_finite() && vb.is_finite() && vc.is_finite() && vd.is_finite()) {
                continue;
            }
            let pos = |v: f64| v >= 0.0;
            let bottom = EdgeId { i, j, horizontal: true };
            let right = EdgeId { i: i + 1, j, horizontal: false };
            let top = EdgeId { i, j: j + 1, horizontal: true };
            let left = EdgeId { i, j, horizontal: false };
            let mut crossed = Vec::with_capacity(4);
            if pos(va) != pos(vb) {
                crossed.push(bottom);
            }
            if pos(vb) != pos(vc) {
                crossed.push(right);
            }
            if pos(vd) != pos(vc) {
                crossed.push(top);
            }
            if pos(va) != pos(vd) {
                crossed.push(left);
            }
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    // Saddle cell: decide the pairing from the center value.
                    let xc = 0.5 * (xs[i] + xs[i + 1]);
                    let yc = 0.5 * (ys[j] + ys[j + 1]);
                    let vcenter = eval(xc, yc)
                        .map(|l| l.re)
                        .unwrap_or(0.25 * (va + vb + vc + vd));
                    if pos(vcenter) == pos(va) {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }

    // Refine every crossing once by bisection along its grid edge.
    let mut crossings: BTreeMap<EdgeId, ((f64, f64), bool)> = BTreeMap::new();
    for &(e0, e1) in &segments {
        for edge in [e0, e1] {
            if crossings.contains_key(&edge) {
                continue;
            }
            let (pa, pb) = if edge.horizontal {
                ((xs[edge.i], ys[edge.j]), (xs[edge.i + 1], ys[edge.j]))
            } else {
                ((xs[edge.i], ys[edge.j]), (xs[edge.i], ys[edge.j + 1]))
            };
            let fa = value(edge.i, edge.j);
            let mut lo = pa;
            let mut hi = pb;
            let mut flo = fa;
            let mut point = (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1));
            let mut lam_at_point: Option<C64> = None;
            for _ in 0..80 {
                point = (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1));
                match eval(point.0, point.1) {
                    Ok(lam) => {
                        lam_at_point = Some(lam);
                        if lam.re.abs() <= window.refine_tol {
                            break;
                        }
                        if (flo >= 0.0) != (lam.re >= 0.0) {
                            hi = point;
                        } else {
                            lo = point;
                            flo = lam.re;
                        }
                    }
                    Err(_) => break,
                }
            }
            let guard_ok = lam_at_point.map(|l| l.im.abs() <= imag_guard).unwrap_or(false);
            crossings.insert(edge, (point, guard_ok));
        }
    }

    // Stitch segments into polylines.
    let mut adjacency: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    for (idx, &(e0, e1)) in segments.iter().enumerate() {
        adjacency.entry(e0).or_default().push(idx);
        adjacency.entry(e1).or_default().push(idx);
    }
    let mut used = vec![false; segments.len()];
    let mut contours = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (e0, e1) = segments[start];
        let mut path: std::collections::VecDeque<EdgeId> = [e0, e1].into_iter().collect();
        let mut closed = false;
        // extend forward from the back, then backward from the front
        loop {
            let tail = *path.back().unwrap();
            let next = adjacency[&tail].iter().find(|&&s| !used[s]).copied();
            match next {
                Some(s) => {
                    used[s] = true;
                    let (a, b) = segments[s];
                    let other = if a == tail { b } else { a };
                    if other == *path.front().unwrap() {
                        closed = true;
                        break;
                    }
                    path.push_back(other);
                }
                None => break,
            }
        }
        if !closed {
            loop {
                let head = *path.front().unwrap();
                let next = adjacency[&head].iter().find(|&&s| !used[s]).copied();
                match next {
                    Some(s) => {
                        used[s] = true;
                        let (a, b) = segments[s];
                        let other = if a == head { b } else { a };
                        path.push_front(other);
                    }
                    None => break,
                }
            }
        }
        let mut points = Vec::with_capacity(path.len());
        let mut guard_violations = Vec::new();
        for (idx, edge) in path.iter().enumerate() {
            let ((x, y), guard_ok) = crossings[edge];
            if !guard_ok {
                guard_violations.push(idx);
            }
            points.push((x, y));
        }
        contours.push(EpContour { which, points, closed, guard_violations });
    }
    Ok(contours)
}

fn orient(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0)
}

fn on_collinear_segment(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
    r.0 >= p.0.min(q.0) && r.0 <= p.0.max(q.0) && r.1 >= p.1.min(q.1) && r.1 <= p.1.max(q.1)
}

/// Proper or touching intersection of two closed segments. Contour
/// crossings frequently share a refined point exactly (both couplings
/// vanish there), so touching must count.
fn segments_cross(a0: (f64, f64), a1: (f64, f64), b0: (f64, f64), b1: (f64, f64)) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return true;
    }
    (d1 == 0.0 && on_collinear_segment(b0, b1, a0))
        || (d2 == 0.0 && on_collinear_segment(b0, b1, a1))
        || (d3 == 0.0 && on_collinear_segment(a0, a1, b0))
        || (d4 == 0.0 && on_collinear_segment(a0, a1, b1))
}

fn contour_segments(c: &EpContour) -> Vec<((f64, f64), (f64, f64))> {
    let mut segs: Vec<_> = c.points.windows(2).map(|w| (w[0], w[1])).collect();
    if c.closed && c.points.len() > 2 {
        segs.push((*c.points.last().unwrap(), c.points[0]));
    }
    segs
}

/// True when two traced contours cross anywhere.
pub fn contours_intersect(a: &EpContour, b: &EpContour) -> bool {
    let sa = contour_segments(a);
    let sb = contour_segments(b);
    sa.iter()
        .any(|&(p0, p1)| sb.iter().any(|&(q0, q1)| segments_cross(p0, p1, q0, q1)))
}

/// Smallest common modulation strength at which the exceptional rings of
/// the two couplings meet at zero differential phase.
///
/// Defined through `g(beta) = min over the omega_m window of
/// Re lambda12(beta, omega_m, phi = 0)` (the couplings coincide at phi = 0);
/// the transition `g = 0` is bisected to `tol` in beta.
pub fn critical_beta(
    chain: &ChainModel,
    beta_bracket: (f64, f64),
    omega_m_window: (f64, f64),
    truncation: &Truncation,
    tol: f64,
) -> Result<f64, LandscapeError> {
    const INNER_POINTS: usize = 121;
    if !(beta_bracket.0 >= 0.0 && beta_bracket.1 > beta_bracket.0) {
        return Err(LandscapeError::InvalidAxis("beta bracket must be increasing and non-negative"));
    }
    if !(omega_m_window.0 > 0.0 && omega_m_window.1 > omega_m_window.0) {
        return Err(LandscapeError::InvalidAxis("omega_m window must be increasing and positive"));
    }
    if tol <= 0.0 {
        return Err(LandscapeError::InvalidAxis("tol must be positive"));
    }
    let axis = linspace(omega_m_window.0, omega_m_window.1, INNER_POINTS);

    let coupling_at = |beta: f64, omega_m: f64| -> Option<f64> {
        let modulation = Modulation::new(beta, beta, omega_m, 0.0).ok()?;
        hn_couplings(chain, &modulation, truncation).ok().map(|hn| hn.lambda12.re)
    };
    let g = |beta: f64| -> Result<f64, LandscapeError> {
        let values: Vec<Option<f64>> = axis.par_iter().map(|&om| coupling_at(beta, om)).collect();
        let mut best: Option<(usize, f64)> = None;
        for (idx, v) in values.iter().enumerate() {
            if let Some(v) = v {
                if best.map(|(_, b)| *v < b).unwrap_or(true) {
                    best = Some((idx, *v));
                }
            }
        }
        let (idx, grid_min) = best.ok_or(LandscapeError::NoValidPoints)?;
        // Golden-section polish around the best grid sample.
        let lo = axis[idx.saturating_sub(1)];
        let hi = axis[(idx + 1).min(axis.len() - 1)];
        let (_, refined) = golden_min(
            |om| coupling_at(beta, om).unwrap_or(f64::INFINITY),
            lo,
            hi,
            1e-9 * (hi - lo).max(1e-12),
        );
        Ok(grid_min.min(refined))
    };

    let (mut lo, mut hi) = beta_bracket;
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(LandscapeError::BracketInvalid { g_lo, g_hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A located pure-gyration operating point: `Re(lambda21 + lambda12) = 0`
/// with the two couplings of opposite sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyrationPoint {
    pub beta: f64,
    pub omega_m: f64,
    /// Radians.
    pub phi: f64,
    /// `|lambda21 + lambda12|` at the located point, MHz.
    pub residual: f64,
    pub lambda12: C64,
    pub lambda21: C64,
}

/// Number of scan points of the full phase circle used to bracket
/// pure-gyration roots (0.25 degree spacing).
const GYRATION_SCAN_POINTS: usize = 1440;

/// Finds all pure-gyration phases at fixed `(beta, omega_m)`: sign changes
/// of `Re(lambda21 + lambda12)` restricted to phase intervals where the two
/// couplings have opposite signs, each bisected until the residual drops
/// below `tol` (MHz). An empty result is a valid outcome.
pub fn gyration_find(
    chain: &ChainModel,
    beta: f64,
    omega_m: f64,
    truncation: &Truncation,
    tol: f64,
) -> Result<Vec<GyrationPoint>, LandscapeError> {
    if tol <= 0.0 {
        return Err(LandscapeError::InvalidAxis("tol must be positive"));
    }
    let n = GYRATION_SCAN_POINTS;
    let phis: Vec<f64> = (1..=n)
        .map(|i| -PI + i as f64 * std::f64::consts::TAU / n as f64)
        .collect();
    let eval = |phi: f64| -> Option<(C64, C64)> {
        let modulation = Modulation::new(beta, beta, omega_m, phi).ok()?;
        hn_couplings(chain, &modulation, truncation).ok().map(|hn| (hn.lambda12, hn.lambda21))
    };
    let samples: Vec<Option<(C64, C64)>> = phis.par_iter().map(|&p| eval(p)).collect();

    let opposite = |v: &(C64, C64)| v.0.re * v.1.re < 0.0;
    let f_of = |v: &(C64, C64)| v.0.re + v.1.re;

    let mut points = Vec::new();
    for w in 0..n - 1 {
        let (Some(a), Some(b)) = (&samples[w], &samples[w + 1]) else { continue };
        if !(opposite(a) && opposite(b)) {
            continue;
        }
        let (fa, fb) = (f_of(a), f_of(b));
        if fa * fb >= 0.0 {
            continue;
        }
        let mut lo = phis[w];
        let mut hi = phis[w + 1];
        let mut flo = fa;
        let mut found: Option<(f64, (C64, C64))> = None;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let Some(v) = eval(mid) else { break };
            let fm = f_of(&v);
            if fm.abs() <= tol {
                found = Some((mid, v));
                break;
            }
            if (flo >= 0.0) != (fm >= 0.0) {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        if let Some((phi, (l12, l21))) = found {
            points.push(GyrationPoint {
                beta,
                omega_m,
                phi,
                residual: (l21 + l12).norm(),
                lambda12: l12,
                lambda21: l21,
            });
        }
    }
    Ok(points)
}

/// One row of a phase sweep of the through-chain contrast.
#[derive(Debug, Clone)]
pub struct IsolationRow {
    /// Radians.
    pub phi: f64,
    /// (magnitude contrast dB, phase contrast radians).
    pub result: Result<(f64, f64), HnError>,
}

/// Result of [`isolation_scan`]: per-phase contrast plus summary figures.
#[derive(Debug, Clone)]
pub struct IsolationScan {
    pub rows: Vec<IsolationRow>,
    /// Largest magnitude contrast over the axis (dB).
    pub max_contrast_db: f64,
    /// Phase at the maximum (radians).
    pub phi_at_max: f64,
    /// Width (radians) of the contiguous region around the maximum where
    /// the contrast exceeds 20 dB, with linearly interpolated boundaries.
    pub width_over_20db: f64,
}

/// Isolation threshold used for the reported width.
pub const ISOLATION_THRESHOLD_DB: f64 = 20.0;

/// Sweeps the scattering contrast at the center frequency over a phase axis.
pub fn isolation_scan(
    chain: &ChainModel,
    beta: f64,
    omega_m: f64,
    phi_axis: &[f64],
    truncation: &Truncation,
) -> Result<IsolationScan, LandscapeError> {
    validate_axis(phi_axis, "phi axis must be non-empty and strictly increasing")?;
    let rows: Vec<IsolationRow> = phi_axis
        .par_iter()
        .map(|&phi| {
            let result = Modulation::new(beta, beta, omega_m, phi)
                .map_err(|_| {
                    HnError::Floquet(FloquetError::InvalidGrid("invalid modulation parameters"))
                })
                .and_then(|m| contrast_at_omega0(chain, &m, truncation));
            IsolationRow { phi, result }
        })
        .collect();

    let contrast = |row: &IsolationRow| row.result.as_ref().ok().map(|&(mag, _)| mag);
    let mut max_contrast_db = f64::NEG_INFINITY;
    let mut i_max = 0;
    for (i, row) in rows.iter().enumerate() {
        if let Some(mag) = contrast(&rows[i]) {
            if mag > max_contrast_db {
                max_contrast_db = mag;
                i_max = i;
            }
        }
        let _ = row;
    }
    let phi_at_max = phi_axis.get(i_max).copied().unwrap_or(f64::NAN);

    let width_over_20db = if max_contrast_db > ISOLATION_THRESHOLD_DB {
        let th = ISOLATION_THRESHOLD_DB;
        let above = |i: usize| contrast(&rows[i]).map(|m| m > th).unwrap_or(false);
        let mut left = i_max;
        while left > 0 && above(left - 1) {
            left -= 1;
        }
        let mut right = i_max;
        while right + 1 < rows.len() && above(right + 1) {
            right += 1;
        }
        // Interpolate the 20 dB crossings just outside the plateau.
        let mut lo_phi = phi_axis[left];
        if left > 0 {
            if let (Some(mo), Some(mi)) = (contrast(&rows[left - 1]), contrast(&rows[left])) {
                let t = (th - mo) / (mi - mo);
                lo_phi = phi_axis[left - 1] + t * (phi_axis[left] - phi_axis[left - 1]);
            }
        }
        let mut hi_phi = phi_axis[right];
        if right + 1 < rows.len() {
            if let (Some(mi), Some(mo)) = (contrast(&rows[right]), contrast(&rows[right + 1])) {
                let t = (mi - th) / (mi - mo);
                hi_phi = phi_axis[right] + t * (phi_axis[right + 1] - phi_axis[right]);
            }
        }
        hi_phi - lo_phi
    } else {
        0.0
    };

    Ok(IsolationScan { rows, max_contrast_db, phi_at_max, width_over_20db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SiteParams;

    fn table_device() -> ChainModel {
        let s1 = SiteParams::from_port_rates(6870.5, 3.9, 3.7, 3.7, 0.4).unwrap();
        let s2 = SiteParams::from_port_rates(6870.5, 3.6, 3.4, 3.4, 0.4).unwrap();
        ChainModel::new(s1, s2, 16.4).unwrap()
    }

    fn symmetric_device() -> ChainModel {
        let s = SiteParams::from_port_rates(6870.5, 3.75, 3.55, 3.55, 0.4).unwrap();
        ChainModel::new(s, s, 16.4).unwrap()
    }

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn single_cell_static_map_has_zero_contrast() {
        let grid = parameter_map(
            &table_device(),
            0.0,
            0.0,
            &[20.0],
            &[0.5],
            &Truncation::default(),
        )
        .unwrap();
        assert_eq!(grid.cells.len(), 1);
        let cell = grid.cell(0, 0).as_ref().unwrap();
        assert_eq!(cell.mag_contrast_db, 0.0);
        assert_eq!(cell.phase_contrast, 0.0);
    }

    #[test]
    fn map_rejects_bad_axes() {
        let chain = table_device();
        let t = Truncation::default();
        assert!(parameter_map(&chain, 1.0, 1.0, &[], &[0.0], &t).is_err());
        assert!(parameter_map(&chain, 1.0, 1.0, &[2.0, 1.0], &[0.0], &t).is_err());
        assert!(parameter_map(&chain, 1.0, 1.0, &[-1.0, 2.0], &[0.0], &t).is_err());
    }

    #[test]
    fn map_is_bit_identical_across_worker_counts() {
        let chain = table_device();
        let omega_m_axis = linspace(18.0, 22.0, 9);
        let phi_axis = linspace(-3.0, 3.0, 13);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                parameter_map(&chain, 26.0, 26.0, &omega_m_axis, &phi_axis, &Truncation::default())
                    .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        for (ca, cb) in a.cells.iter().zip(b.cells.iter()) {
            let (ca, cb) = (ca.as_ref().unwrap(), cb.as_ref().unwrap());
            assert!(ca.lambda12 == cb.lambda12 && ca.lambda21 == cb.lambda21);
            assert!(ca.mag_contrast_db.to_bits() == cb.mag_contrast_db.to_bits());
        }
    }

    #[test]
    fn landscape_contrast_is_antisymmetric_in_phase() {
        let chain = symmetric_device();
        let phi_half: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let phi_axis: Vec<f64> = phi_half
            .iter()
            .rev()
            .map(|&p| -p)
            .chain(std::iter::once(0.0))
            .chain(phi_half.iter().copied())
            .collect();
        let grid =
            parameter_map(&chain, 20.0, 20.0, &[19.5, 20.6], &phi_axis, &Truncation::default())
                .unwrap();
        let n = phi_axis.len();
        for i in 0..grid.omega_m_axis.len() {
            for j in 0..n / 2 {
                let neg = grid.cell(i, j).as_ref().unwrap();
                let pos = grid.cell(i, n - 1 - j).as_ref().unwrap();
                assert!(
                    (neg.mag_contrast_db + pos.mag_contrast_db).abs() < 1e-6,
                    "mag contrast not antisymmetric"
                );
                let wrapped = crate::numerics::wrap_angle(neg.phase_contrast + pos.phase_contrast);
                assert!(wrapped.abs() < 1e-6, "phase contrast not antisymmetric");
            }
        }
    }

    #[test]
    fn weak_drive_has_no_contour() {
        let contours = ep_contour(
            &table_device(),
            2.0,
            CouplingSide::Lambda12,
            &ContourWindow { n_omega: 31, n_phi: 46, ..ContourWindow::default() },
            &Truncation::default(),
        )
        .unwrap();
        assert!(contours.is_empty());
    }

    #[test]
    fn ring_near_surface_tip_is_closed_and_sits_near_quarter_phase() {
        // Just above the first appearance of the exceptional surface the
        // lambda12 ring is a small closed loop near phi = +90 deg.
        let window = ContourWindow {
            omega_m: (17.5, 21.5),
            phi: (deg(40.0), deg(140.0)),
            n_omega: 41,
            n_phi: 51,
            refine_tol: 1e-6,
            imag_guard: None,
        };
        let chain = table_device();
        let contours =
            ep_contour(&chain, 17.0, CouplingSide::Lambda12, &window, &Truncation::default())
                .unwrap();
        assert_eq!(contours.len(), 1);
        let ring = &contours[0];
        assert!(ring.closed, "expected a closed ring");
        assert!(ring.guard_violations.is_empty());
        // Contour consistency: every refined point re-evaluates to a small
        // real part.
        for &(om, phi) in &ring.points {
            let modn = Modulation::common(17.0, om, phi).unwrap();
            let hn = hn_couplings(&chain, &modn, &Truncation::default()).unwrap();
            assert!(hn.lambda12.re.abs() < window.refine_tol * 1.01);
        }
        let min_dist_to_90 = ring
            .points
            .iter()
            .map(|&(_, phi)| (phi - deg(90.0)).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(min_dist_to_90 < deg(10.0), "ring misses the +90 deg tip region");
    }

    #[test]
    fn gyration_points_at_strong_drive() {
        let chain = table_device();
        let points =
            gyration_find(&chain, 26.0, 20.6, &Truncation::default(), 1e-9).unwrap();
        assert_eq!(points.len(), 2);
        // Mirror pair; regression against the frozen locus.
        let phi_deg: Vec<f64> = points.iter().map(|p| p.phi.to_degrees()).collect();
        assert!((phi_deg[0] + 28.67).abs() < 0.5, "phi[0] = {}", phi_deg[0]);
        assert!((phi_deg[1] - 28.67).abs() < 0.5, "phi[1] = {}", phi_deg[1]);
        for p in &points {
            assert!(p.residual < 1e-3 * chain.lambda());
            assert!(p.lambda12.re * p.lambda21.re < 0.0);
        }
    }

    #[test]
    fn no_gyration_below_critical_drive() {
        let chain = table_device();
        let points = gyration_find(&chain, 10.0, 20.6, &Truncation::default(), 1e-9).unwrap();
        assert!(points.is_empty());
    }

    #[test]
    fn critical_beta_rejects_one_sided_brackets() {
        let chain = table_device();
        let err = critical_beta(&chain, (0.5, 5.0), (14.0, 26.0), &Truncation::default(), 0.01)
            .unwrap_err();
        assert!(matches!(err, LandscapeError::BracketInvalid { g_lo, g_hi } if g_lo > 0.0 && g_hi > 0.0));
    }

    #[test]
    fn alternating_exceptional_points_force_interleaved_gyration() {
        // Along the om = 20.6 cut at strong drive the EPs of the two
        // couplings alternate; a gyration root must lie strictly inside
        // each interval bounded by an adjacent opposite pair.
        let chain = table_device();
        let trunc = Truncation::default();
        let n = 720;
        let mut zeros: Vec<(f64, CouplingSide)> = Vec::new();
        let mut prev: Option<(f64, f64, f64)> = None;
        for i in 0..=n {
            let phi = -PI + i as f64 * std::f64::consts::TAU / n as f64;
            let modn = Modulation::common(26.0, 20.6, phi).unwrap();
            let hn = hn_couplings(&chain, &modn, &trunc).unwrap();
            if let Some((p_phi, p12, p21)) = prev {
                if p12 * hn.lambda12.re < 0.0 {
                    zeros.push((0.5 * (p_phi + phi), CouplingSide::Lambda12));
                }
                if p21 * hn.lambda21.re < 0.0 {
                    zeros.push((0.5 * (p_phi + phi), CouplingSide::Lambda21));
                }
            }
            prev = Some((phi, hn.lambda12.re, hn.lambda21.re));
        }
        zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(zeros.len(), 4, "expected four EPs along the cut");
        for w in zeros.windows(2) {
            assert_ne!(w[0].1, w[1].1, "EPs must alternate between couplings");
        }
        // Every inter-EP interval where the couplings hold opposite signs
        // must contain a gyration root, and every root must be bracketed by
        // an alternating pair.
        let gyr = gyration_find(&chain, 26.0, 20.6, &trunc, 1e-9).unwrap();
        for w in zeros.windows(2) {
            let mid = 0.5 * (w[0].0 + w[1].0);
            let modn = Modulation::common(26.0, 20.6, mid).unwrap();
            let hn = hn_couplings(&chain, &modn, &trunc).unwrap();
            let opposite = hn.lambda12.re * hn.lambda21.re < 0.0;
            let has_root = gyr.iter().any(|g| g.phi > w[0].0 && g.phi < w[1].0);
            assert_eq!(has_root, opposite, "interval ({}, {})", w[0].0, w[1].0);
        }
        for g in &gyr {
            let bracketed = zeros.windows(2).any(|w| g.phi > w[0].0 && g.phi < w[1].0);
            assert!(bracketed);
        }
    }

    #[test]
    fn static_isolation_scan_is_flat_zero() {
        let chain = table_device();
        let axis = linspace(-PI, PI, 41);
        let scan = isolation_scan(&chain, 0.0, 20.22, &axis, &Truncation::default()).unwrap();
        for row in &scan.rows {
            let (mag, phase) = row.result.as_ref().unwrap();
            assert_eq!(*mag, 0.0);
            assert_eq!(*phase, 0.0);
        }
        assert_eq!(scan.max_contrast_db, 0.0);
        assert_eq!(scan.width_over_20db, 0.0);
    }

    #[test]
    fn polyline_intersection_detects_crossings() {
        let a = EpContour {
            which: CouplingSide::Lambda12,
            points: vec![(0.0, 0.0), (2.0, 2.0)],
            closed: false,
            guard_violations: vec![],
        };
        let b = EpContour {
            which: CouplingSide::Lambda21,
            points: vec![(0.0, 2.0), (2.0, 0.0)],
            closed: false,
            guard_violations: vec![],
        };
        let c = EpContour {
            which: CouplingSide::Lambda21,
            points: vec![(3.0, 0.0), (4.0, 1.0)],
            closed: false,
            guard_violations: vec![],
        };
        // touching at a shared vertex counts as intersecting
        let touching = EpContour {
            which: CouplingSide::Lambda21,
            points: vec![(1.0, 1.0), (1.0, 3.0)],
            closed: false,
            guard_violations: vec![],
        };
        assert!(contours_intersect(&a, &b));
        assert!(!contours_intersect(&a, &c));
        assert!(contours_intersect(&a, &touching));
    }
}
