//! Subcommand implementations. Each returns the complete output document
//! as a string; the caller decides where it goes. Grid evaluation runs on
//! the ambient rayon pool, output assembly is single-threaded and ordered,
//! so documents are byte-identical for identical configs regardless of the
//! worker count.

use crate::config::Resolved;
use crate::output::{fmt_f, Document};
use crate::CliError;
use gyrsim::calib::{
    deembed_magnitude, deembed_phase, estimate_phi_offset, load_trace, CalibError, TraceFormat,
};
use gyrsim::floquet::{spectrum, ScatteringResult};
use gyrsim::hn::{alpha_first_order, hn_couplings};
use gyrsim::landscape::{
    critical_beta, ep_contour, gyration_find, isolation_scan, parameter_map, ContourWindow,
    CouplingSide,
};
use gyrsim::timedomain::{oracle_compare, IntegrationSettings};
use serde_json::{json, Value};
use std::path::PathBuf;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
        .collect()
}

fn wrap_deg(x: f64) -> f64 {
    let y = x.rem_euclid(360.0);
    if y > 180.0 {
        y - 360.0
    } else {
        y
    }
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Config echo embedded in every output document. The output block is
/// deliberately excluded: it does not influence the computed values.
fn echo(resolved: &Resolved, task: Value, with_modulation: bool) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("device".into(), resolved.device_echo());
    if with_modulation {
        let (b1, b2) = resolved.betas().unwrap_or((f64::NAN, f64::NAN));
        obj.insert(
            "modulation".into(),
            json!({
                "beta1": b1,
                "beta2": b2,
                "omega_m": resolved.modulation.omega_m,
                "phi_deg": resolved.modulation.phi_deg,
            }),
        );
    }
    obj.insert("truncation".into(), resolved.truncation_echo());
    obj.insert("task".into(), task);
    Value::Object(obj)
}

fn want_kv(resolved: &Resolved, default_kv: bool) -> Result<bool, CliError> {
    match resolved.output_format.as_deref() {
        None => Ok(default_kv),
        Some("kv") => Ok(true),
        Some("csv") => Ok(false),
        Some(other) => Err(CliError::Config(format!("output.format: unknown format `{other}`"))),
    }
}

// ---------------------------------------------------------------- spectrum

pub fn cmd_spectrum(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let modulation = resolved.build_modulation()?;
    let task = resolved.file.spectrum.clone().unwrap_or(crate::config::SpectrumTask {
        omega_min: None,
        omega_max: None,
        points: None,
    });
    let center = chain.mean_omega0();
    let omega_min = task.omega_min.unwrap_or(center - 60.0);
    let omega_max = task.omega_max.unwrap_or(center + 60.0);
    let points = task.points.unwrap_or(401);
    if !(omega_max > omega_min) || points < 1 {
        return Err(CliError::Config("spectrum: omega_max must exceed omega_min".into()));
    }
    let grid = linspace(omega_min, omega_max, points);

    let rows = spectrum(&chain, &modulation, &grid, &resolved.truncation).map_err(numerical)?;

    let task_echo = json!({"omega_min": omega_min, "omega_max": omega_max, "points": points});
    let mut doc = Document::new("spectrum", &echo(resolved, task_echo, true));
    let mut cols: Vec<String> = vec!["omega_mhz".into()];
    for r in 1..=4 {
        for c in 1..=4 {
            cols.push(format!("s{r}{c}_re"));
            cols.push(format!("s{r}{c}_im"));
        }
    }
    for extra in [
        "s41_db",
        "s41_phase_deg",
        "s23_db",
        "s23_phase_deg",
        "mag_contrast_db",
        "phase_contrast_deg",
        "p_used",
        "status",
    ] {
        cols.push(extra.into());
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    doc.columns(&col_refs);

    for row in &rows {
        let mut fields = vec![fmt_f(row.omega)];
        match &row.result {
            Ok(ScatteringResult { s, p_used, .. }) => {
                for r in 0..4 {
                    for c in 0..4 {
                        fields.push(fmt_f(s[(r, c)].re));
                        fields.push(fmt_f(s[(r, c)].im));
                    }
                }
                let s41 = s[(3, 0)];
                let s23 = s[(1, 2)];
                fields.push(fmt_f(20.0 * s41.norm().log10()));
                fields.push(fmt_f(s41.arg().to_degrees()));
                fields.push(fmt_f(20.0 * s23.norm().log10()));
                fields.push(fmt_f(s23.arg().to_degrees()));
                fields.push(fmt_f(20.0 * (s41.norm().log10() - s23.norm().log10())));
                fields.push(fmt_f(wrap_deg(s41.arg().to_degrees() - s23.arg().to_degrees())));
                fields.push(p_used.to_string());
                fields.push("ok".into());
            }
            Err(e) => {
                for _ in 0..38 {
                    fields.push("NaN".into());
                }
                fields.push("0".into());
                fields.push(e.to_string().replace(',', ";"));
            }
        }
        doc.row(&fields);
    }
    Ok(doc.finish())
}

// ---------------------------------------------------------------------- hn

pub fn cmd_hn(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let modulation = resolved.build_modulation()?;
    let hn = hn_couplings(&chain, &modulation, &resolved.truncation).map_err(numerical)?;

    let fields: Vec<(&str, String)> = vec![
        ("lambda12_re_mhz", fmt_f(hn.lambda12.re)),
        ("lambda12_im_mhz", fmt_f(hn.lambda12.im)),
        ("lambda21_re_mhz", fmt_f(hn.lambda21.re)),
        ("lambda21_im_mhz", fmt_f(hn.lambda21.im)),
        ("gamma_eff_mhz", fmt_f(hn.gamma_eff)),
        ("diag_real_shift_mhz", fmt_f(hn.diag_real_shift)),
        ("alpha12_re", fmt_f(hn.alpha12.re)),
        ("alpha12_im", fmt_f(hn.alpha12.im)),
        ("alpha21_re", fmt_f(hn.alpha21.re)),
        ("alpha21_im", fmt_f(hn.alpha21.im)),
        ("mag_contrast_db", fmt_f(hn.mag_contrast_db)),
        ("phase_contrast_deg", fmt_f(hn.phase_contrast.to_degrees())),
        ("omega_eval_mhz", fmt_f(hn.omega_eval)),
        ("p_used", hn.p_used.to_string()),
    ];
    single_record(resolved, "hn", json!({}), fields)
}

fn single_record(
    resolved: &Resolved,
    name: &str,
    task_echo: Value,
    fields: Vec<(&str, String)>,
) -> Result<String, CliError> {
    let mut doc = Document::new(name, &echo(resolved, task_echo, name != "critical-beta"));
    if want_kv(resolved, true)? {
        for (key, value) in fields {
            doc.kv(key, &value);
        }
    } else {
        let cols: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        doc.columns(&cols);
        doc.row(&fields.into_iter().map(|(_, v)| v).collect::<Vec<_>>());
    }
    Ok(doc.finish())
}

// ------------------------------------------------------------------- alpha

pub fn cmd_alpha(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let beta = resolved.common_beta("alpha")?;
    let omega_m = resolved.omega_m()?;
    let phi = resolved.phi_rad()?;
    let lambda = chain.lambda();
    let gamma0 = chain.mean_gamma();
    let (a12, a21) = alpha_first_order(beta, omega_m, phi, lambda, gamma0);
    let fields: Vec<(&str, String)> = vec![
        ("alpha12", fmt_f(a12)),
        ("alpha21", fmt_f(a21)),
        ("lambda12_mhz", fmt_f(lambda * (1.0 - a12))),
        ("lambda21_mhz", fmt_f(lambda * (1.0 - a21))),
        ("gamma0_mhz", fmt_f(gamma0)),
    ];
    single_record(resolved, "alpha", json!({}), fields)
}

// --------------------------------------------------------------------- map

pub fn cmd_map(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let (beta1, beta2) = resolved.betas()?;
    let task = resolved.file.map.clone().unwrap_or(crate::config::MapTask {
        omega_m_min: None,
        omega_m_max: None,
        omega_m_points: None,
        phi_min_deg: None,
        phi_max_deg: None,
        phi_points: None,
    });
    let om_min = task.omega_m_min.unwrap_or(14.0);
    let om_max = task.omega_m_max.unwrap_or(26.0);
    let om_points = task.omega_m_points.unwrap_or(121);
    let phi_min = task.phi_min_deg.unwrap_or(-180.0);
    let phi_max = task.phi_max_deg.unwrap_or(180.0);
    let phi_points = task.phi_points.unwrap_or(181);
    let omega_axis = linspace(om_min, om_max, om_points);
    let phi_axis: Vec<f64> = linspace(phi_min, phi_max, phi_points)
        .into_iter()
        .map(f64::to_radians)
        .collect();

    let grid = parameter_map(&chain, beta1, beta2, &omega_axis, &phi_axis, &resolved.truncation)
        .map_err(numerical)?;

    let task_echo = json!({
        "omega_m_min": om_min, "omega_m_max": om_max, "omega_m_points": om_points,
        "phi_min_deg": phi_min, "phi_max_deg": phi_max, "phi_points": phi_points,
    });
    let mut doc = Document::new("map", &echo(resolved, task_echo, true));
    doc.columns(&[
        "omega_m_mhz",
        "phi_deg",
        "lambda12_re_mhz",
        "lambda12_im_mhz",
        "lambda21_re_mhz",
        "lambda21_im_mhz",
        "mag_contrast_db",
        "phase_contrast_deg",
        "p_used",
        "status",
    ]);
    for (i, &om) in grid.omega_m_axis.iter().enumerate() {
        for (j, &phi) in grid.phi_axis.iter().enumerate() {
            let mut fields = vec![fmt_f(om), fmt_f(phi.to_degrees())];
            match grid.cell(i, j) {
                Ok(cell) => {
                    fields.push(fmt_f(cell.lambda12.re));
                    fields.push(fmt_f(cell.lambda12.im));
                    fields.push(fmt_f(cell.lambda21.re));
                    fields.push(fmt_f(cell.lambda21.im));
                    fields.push(fmt_f(cell.mag_contrast_db));
                    fields.push(fmt_f(cell.phase_contrast.to_degrees()));
                    fields.push(cell.p_used.to_string());
                    fields.push("ok".into());
                }
                Err(e) => {
                    for _ in 0..6 {
                        fields.push("NaN".into());
                    }
                    fields.push("0".into());
                    fields.push(e.to_string().replace(',', ";"));
                }
            }
            doc.row(&fields);
        }
    }
    Ok(doc.finish())
}

// ----------------------------------------------------------------- contour

pub fn cmd_contour(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let beta = resolved.common_beta("contour")?;
    let task = resolved.file.contour.clone().unwrap_or(crate::config::ContourTask {
        which: None,
        omega_m_min: None,
        omega_m_max: None,
        omega_m_points: None,
        phi_min_deg: None,
        phi_max_deg: None,
        phi_points: None,
        refine_tol: None,
        imag_guard: None,
    });
    let window = ContourWindow {
        omega_m: (task.omega_m_min.unwrap_or(14.0), task.omega_m_max.unwrap_or(26.0)),
        phi: (
            task.phi_min_deg.unwrap_or(-180.0).to_radians(),
            task.phi_max_deg.unwrap_or(180.0).to_radians(),
        ),
        n_omega: task.omega_m_points.unwrap_or(121),
        n_phi: task.phi_points.unwrap_or(181),
        refine_tol: task.refine_tol.unwrap_or(1e-6),
        imag_guard: task.imag_guard,
    };
    let sides: Vec<CouplingSide> = match task.which.as_deref().unwrap_or("both") {
        "lambda12" => vec![CouplingSide::Lambda12],
        "lambda21" => vec![CouplingSide::Lambda21],
        "both" => vec![CouplingSide::Lambda12, CouplingSide::Lambda21],
        other => {
            return Err(CliError::Config(format!(
                "contour.which: expected lambda12|lambda21|both, got `{other}`"
            )))
        }
    };

    let task_echo = json!({
        "which": task.which.as_deref().unwrap_or("both"),
        "omega_m_min": window.omega_m.0, "omega_m_max": window.omega_m.1,
        "omega_m_points": window.n_omega,
        "phi_min_deg": window.phi.0.to_degrees(), "phi_max_deg": window.phi.1.to_degrees(),
        "phi_points": window.n_phi,
        "refine_tol": window.refine_tol,
        "beta": beta,
    });
    let mut doc = Document::new("contour", &echo(resolved, task_echo, true));
    doc.columns(&[
        "which",
        "contour_id",
        "point_index",
        "omega_m_mhz",
        "phi_deg",
        "closed",
        "guard_ok",
    ]);
    for side in sides {
        let contours =
            ep_contour(&chain, beta, side, &window, &resolved.truncation).map_err(numerical)?;
        for (cid, contour) in contours.iter().enumerate() {
            for (pidx, &(om, phi)) in contour.points.iter().enumerate() {
                let guard_ok = !contour.guard_violations.contains(&pidx);
                doc.row(&[
                    side.name().into(),
                    cid.to_string(),
                    pidx.to_string(),
                    fmt_f(om),
                    fmt_f(phi.to_degrees()),
                    contour.closed.to_string(),
                    guard_ok.to_string(),
                ]);
            }
        }
    }
    Ok(doc.finish())
}

// ----------------------------------------------------------- critical-beta

pub fn cmd_critical_beta(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let task = resolved.file.critical_beta.clone().unwrap_or(crate::config::CriticalBetaTask {
        beta_min: None,
        beta_max: None,
        omega_m_min: None,
        omega_m_max: None,
        tol: None,
    });
    let bracket = (task.beta_min.unwrap_or(18.0), task.beta_max.unwrap_or(28.0));
    let window = (task.omega_m_min.unwrap_or(14.0), task.omega_m_max.unwrap_or(26.0));
    let tol = task.tol.unwrap_or(1e-3);
    let beta_star =
        critical_beta(&chain, bracket, window, &resolved.truncation, tol).map_err(numerical)?;

    let task_echo = json!({
        "beta_min": bracket.0, "beta_max": bracket.1,
        "omega_m_min": window.0, "omega_m_max": window.1,
        "tol": tol,
    });
    let fields: Vec<(&str, String)> = vec![("beta_star_mhz", fmt_f(beta_star))];
    single_record(resolved, "critical-beta", task_echo, fields)
}

// ---------------------------------------------------------------- gyration

pub fn cmd_gyration(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let beta = resolved.common_beta("gyration")?;
    let task = resolved
        .file
        .gyration
        .clone()
        .unwrap_or(crate::config::GyrationTask { omega_m_values: None, tol: None });
    let omega_m_values = match &task.omega_m_values {
        Some(v) if !v.is_empty() => v.clone(),
        _ => vec![resolved.omega_m()?],
    };
    let tol = task.tol.unwrap_or(1e-9);

    let task_echo = json!({"omega_m_values": omega_m_values, "tol": tol, "beta": beta});
    let mut doc = Document::new("gyration", &echo(resolved, task_echo, true));
    doc.columns(&[
        "omega_m_mhz",
        "phi_deg",
        "residual_mhz",
        "lambda12_re_mhz",
        "lambda12_im_mhz",
        "lambda21_re_mhz",
        "lambda21_im_mhz",
    ]);
    for &om in &omega_m_values {
        let points =
            gyration_find(&chain, beta, om, &resolved.truncation, tol).map_err(numerical)?;
        for p in points {
            doc.row(&[
                fmt_f(p.omega_m),
                fmt_f(p.phi.to_degrees()),
                fmt_f(p.residual),
                fmt_f(p.lambda12.re),
                fmt_f(p.lambda12.im),
                fmt_f(p.lambda21.re),
                fmt_f(p.lambda21.im),
            ]);
        }
    }
    Ok(doc.finish())
}

// --------------------------------------------------------------- isolation

pub fn cmd_isolation(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let beta = resolved.common_beta("isolation")?;
    let omega_m = resolved.omega_m()?;
    let task = resolved.file.isolation.clone().unwrap_or(crate::config::IsolationTask {
        phi_min_deg: None,
        phi_max_deg: None,
        points: None,
    });
    let phi_min = task.phi_min_deg.unwrap_or(-180.0);
    let phi_max = task.phi_max_deg.unwrap_or(180.0);
    let points = task.points.unwrap_or(721);
    let axis: Vec<f64> = linspace(phi_min, phi_max, points)
        .into_iter()
        .map(f64::to_radians)
        .collect();

    let scan =
        isolation_scan(&chain, beta, omega_m, &axis, &resolved.truncation).map_err(numerical)?;

    let task_echo = json!({
        "phi_min_deg": phi_min, "phi_max_deg": phi_max, "points": points, "beta": beta,
    });
    let mut doc = Document::new("isolation", &echo(resolved, task_echo, true));
    doc.comment(&format!("max_contrast_db = {}", fmt_f(scan.max_contrast_db)));
    doc.comment(&format!("phi_at_max_deg = {}", fmt_f(scan.phi_at_max.to_degrees())));
    doc.comment(&format!(
        "width_over_20db_deg = {}",
        fmt_f(scan.width_over_20db.to_degrees())
    ));
    doc.columns(&["phi_deg", "mag_contrast_db", "phase_contrast_deg", "status"]);
    for row in &scan.rows {
        match &row.result {
            Ok((mag, phase)) => doc.row(&[
                fmt_f(row.phi.to_degrees()),
                fmt_f(*mag),
                fmt_f(phase.to_degrees()),
                "ok".into(),
            ]),
            Err(e) => doc.row(&[
                fmt_f(row.phi.to_degrees()),
                "NaN".into(),
                "NaN".into(),
                e.to_string().replace(',', ";"),
            ]),
        }
    }
    Ok(doc.finish())
}

// ------------------------------------------------------------------ oracle

pub fn cmd_oracle(resolved: &Resolved) -> Result<String, CliError> {
    let chain = resolved.chain()?;
    let modulation = resolved.build_modulation()?;
    let task = resolved
        .file
        .oracle
        .clone()
        .unwrap_or(crate::config::OracleTask { omegas: None, periods_per_window: None });
    let omegas = match &task.omegas {
        Some(v) if !v.is_empty() => v.clone(),
        _ => vec![chain.mean_omega0()],
    };
    let settings = IntegrationSettings {
        periods_per_window: task.periods_per_window.unwrap_or(20),
        ..IntegrationSettings::default()
    };

    let report = oracle_compare(&chain, &modulation, &omegas, &resolved.truncation, &settings)
        .map_err(numerical)?;

    let task_echo = json!({
        "omegas": omegas,
        "periods_per_window": settings.periods_per_window,
    });
    let mut doc = Document::new("oracle", &echo(resolved, task_echo, true));
    doc.comment(&format!("max_rel_dev = {}", fmt_f(report.max_rel_dev)));
    doc.columns(&[
        "omega_mhz",
        "drive_port",
        "out_port",
        "extracted_re",
        "extracted_im",
        "predicted_re",
        "predicted_im",
        "col_rel_dev",
    ]);
    for row in &report.rows {
        for out in 0..4 {
            doc.row(&[
                fmt_f(row.omega),
                row.drive_port.to_string(),
                (out + 1).to_string(),
                fmt_f(row.extracted[out].re),
                fmt_f(row.extracted[out].im),
                fmt_f(row.predicted[out].re),
                fmt_f(row.predicted[out].im),
                fmt_f(row.max_rel_dev),
            ]);
        }
    }
    Ok(doc.finish())
}

// --------------------------------------------------------------- calibrate

fn calib_error(e: CalibError) -> CliError {
    match e {
        CalibError::Io(m) => CliError::Io(m),
        CalibError::AmbiguousMinimum => CliError::Numerical(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn parse_phi_table(path: &PathBuf) -> Result<Vec<(f64, f64)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read `{}`: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(CliError::Config(format!(
                "phi table line {}: expected `phi_deg, contrast_db`",
                idx + 1
            )));
        }
        let phi: f64 = parts[0].parse().map_err(|e| {
            CliError::Config(format!("phi table line {}: {e}", idx + 1))
        })?;
        let contrast: f64 = parts[1].parse().map_err(|e| {
            CliError::Config(format!("phi table line {}: {e}", idx + 1))
        })?;
        rows.push((phi, contrast));
    }
    Ok(rows)
}

pub fn cmd_calibrate(resolved: &Resolved) -> Result<String, CliError> {
    let task = resolved
        .file
        .calibrate
        .clone()
        .ok_or_else(|| CliError::Config("calibrate: task block required".into()))?;
    let hint = match task.format.as_deref() {
        None => None,
        Some("A") => Some(TraceFormat::MagPhase),
        Some("B") => Some(TraceFormat::ReIm),
        Some(other) => {
            return Err(CliError::Config(format!(
                "calibrate.format: expected A or B, got `{other}`"
            )))
        }
    };

    match task.mode.as_str() {
        "deembed" => {
            let need = |p: &Option<PathBuf>, name: &str| {
                p.clone().ok_or_else(|| {
                    CliError::Config(format!("calibrate.{name}: required in deembed mode"))
                })
            };
            let fwd = load_trace(&need(&task.fwd, "fwd")?, hint).map_err(calib_error)?;
            let bwd = load_trace(&need(&task.bwd, "bwd")?, hint).map_err(calib_error)?;
            let ref_fwd = load_trace(&need(&task.ref_fwd, "ref_fwd")?, hint).map_err(calib_error)?;
            let ref_bwd = load_trace(&need(&task.ref_bwd, "ref_bwd")?, hint).map_err(calib_error)?;
            let mag = deembed_magnitude(&fwd, &bwd, &ref_fwd, &ref_bwd).map_err(calib_error)?;
            let phase = deembed_phase(&fwd, &bwd, &ref_fwd, &ref_bwd).map_err(calib_error)?;

            let task_echo = json!({
                "mode": "deembed",
                "fwd": task.fwd, "bwd": task.bwd,
                "ref_fwd": task.ref_fwd, "ref_bwd": task.ref_bwd,
                "labels": [fwd.label, bwd.label, ref_fwd.label, ref_bwd.label],
            });
            let mut doc = Document::new("calibrate", &echo(resolved, task_echo, false));
            doc.columns(&["freq_mhz", "mag_contrast_db", "phase_contrast_deg"]);
            for ((freq, m), (_, p)) in mag.iter().zip(phase.iter()) {
                doc.row(&[fmt_f(*freq), fmt_f(*m), fmt_f(*p)]);
            }
            Ok(doc.finish())
        }
        "phi-offset" => {
            let path = task.phi_table.clone().ok_or_else(|| {
                CliError::Config("calibrate.phi_table: required in phi-offset mode".into())
            })?;
            let samples = parse_phi_table(&path)?;
            let phi0 = estimate_phi_offset(&samples).map_err(calib_error)?;
            let task_echo = json!({"mode": "phi-offset", "phi_table": path, "samples": samples.len()});
            let fields: Vec<(&str, String)> = vec![("phi0_deg", fmt_f(phi0))];
            let mut doc = Document::new("calibrate", &echo(resolved, task_echo, false));
            if want_kv(resolved, true)? {
                for (k, v) in fields {
                    doc.kv(k, &v);
                }
            } else {
                doc.columns(&["phi0_deg"]);
                doc.row(&[fields.into_iter().next().unwrap().1]);
            }
            Ok(doc.finish())
        }
        other => Err(CliError::Config(format!(
            "calibrate.mode: expected deembed|phi-offset, got `{other}`"
        ))),
    }
}
