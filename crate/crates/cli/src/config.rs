//! Run configuration: JSON file plus scalar flag overrides (flags win).
//! Unknown keys are rejected; validation errors carry field paths.

use crate::CliError;
use gyrsim::model::{ChainModel, Modulation, SiteParams, Truncation, ADAPTIVE_TOL_DEFAULT};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub device: Option<DeviceConfig>,
    pub modulation: Option<ModulationConfig>,
    pub truncation: Option<TruncationConfig>,
    pub spectrum: Option<SpectrumTask>,
    pub map: Option<MapTask>,
    pub contour: Option<ContourTask>,
    pub critical_beta: Option<CriticalBetaTask>,
    pub gyration: Option<GyrationTask>,
    pub isolation: Option<IsolationTask>,
    pub oracle: Option<OracleTask>,
    pub calibrate: Option<CalibrateTask>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub omega0: f64,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_a_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_b_sq: Option<f64>,
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub site1: SiteConfig,
    pub site2: SiteConfig,
    pub lambda: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "mode", rename_all = "lowercase")]
pub enum TruncationConfig {
    Fixed { p: usize },
    Adaptive { tol: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumTask {
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapTask {
    pub omega_m_min: Option<f64>,
    pub omega_m_max: Option<f64>,
    pub omega_m_points: Option<usize>,
    pub phi_min_deg: Option<f64>,
    pub phi_max_deg: Option<f64>,
    pub phi_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourTask {
    /// "lambda12" | "lambda21" | "both"
    pub which: Option<String>,
    pub omega_m_min: Option<f64>,
    pub omega_m_max: Option<f64>,
    pub omega_m_points: Option<usize>,
    pub phi_min_deg: Option<f64>,
    pub phi_max_deg: Option<f64>,
    pub phi_points: Option<usize>,
    pub refine_tol: Option<f64>,
    pub imag_guard: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalBetaTask {
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub omega_m_min: Option<f64>,
    pub omega_m_max: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GyrationTask {
    /// Modulation frequencies to scan; defaults to the modulation block's.
    pub omega_m_values: Option<Vec<f64>>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolationTask {
    pub phi_min_deg: Option<f64>,
    pub phi_max_deg: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleTask {
    /// Probe frequencies; defaults to the device center frequency.
    pub omegas: Option<Vec<f64>>,
    pub periods_per_window: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateTask {
    /// "deembed" | "phi-offset"
    pub mode: String,
    pub fwd: Option<PathBuf>,
    pub bwd: Option<PathBuf>,
    pub ref_fwd: Option<PathBuf>,
    pub ref_bwd: Option<PathBuf>,
    /// "A" | "B" format hint for files without a format header.
    pub format: Option<String>,
    pub phi_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    /// "csv" | "kv"
    pub format: Option<String>,
}

/// Scalar overrides collected from the command line; these win over the
/// config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed_params: Option<String>,
    pub truncation: Option<String>,
    pub beta: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub omega_m: Option<f64>,
    pub phi_deg: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

/// Fully resolved run inputs shared by the subcommands.
pub struct Resolved {
    pub file: FileConfig,
    pub device: Option<DeviceConfig>,
    pub modulation: ModulationConfig,
    pub truncation: Truncation,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<String>,
}

pub fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config `{}`: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config file: {e}")))
}

/// Bundled reference-device preset, selected with `--seed-params NAME`.
pub fn preset_device(name: &str) -> Result<DeviceConfig, CliError> {
    match name {
        "table-s1" => Ok(DeviceConfig {
            site1: SiteConfig {
                omega0: 6870.5,
                gamma: 3.9,
                k_a: None,
                k_a_sq: Some(3.7),
                k_b: None,
                k_b_sq: Some(3.7),
                kappa: 0.4,
            },
            site2: SiteConfig {
                omega0: 6870.5,
                gamma: 3.6,
                k_a: None,
                k_a_sq: Some(3.4),
                k_b: None,
                k_b_sq: Some(3.4),
                kappa: 0.4,
            },
            lambda: 16.4,
        }),
        other => Err(CliError::Config(format!(
            "unknown --seed-params preset `{other}` (available: table-s1)"
        ))),
    }
}

pub fn parse_truncation_flag(s: &str) -> Result<Truncation, CliError> {
    if let Ok(p) = s.parse::<usize>() {
        return Ok(Truncation::Fixed(p));
    }
    if s == "auto" {
        return Ok(Truncation::Adaptive { tol: ADAPTIVE_TOL_DEFAULT });
    }
    if let Some(tol_str) = s.strip_prefix("auto:") {
        let tol: f64 = tol_str
            .parse()
            .map_err(|e| CliError::Config(format!("--truncation: bad tolerance `{tol_str}`: {e}")))?;
        if tol <= 0.0 {
            return Err(CliError::Config("--truncation: tolerance must be positive".into()));
        }
        return Ok(Truncation::Adaptive { tol });
    }
    Err(CliError::Config(format!(
        "--truncation: expected an integer order or `auto[:tol]`, got `{s}`"
    )))
}

pub fn resolve(file: FileConfig, over: &Overrides) -> Result<Resolved, CliError> {
    let device = match &over.seed_params {
        Some(name) => Some(preset_device(name)?),
        None => file.device.clone(),
    };

    let mut modulation = file.modulation.clone().unwrap_or_default();
    if let Some(b) = over.beta {
        modulation.beta = Some(b);
        modulation.beta1 = None;
        modulation.beta2 = None;
    }
    if let Some(b) = over.beta1 {
        modulation.beta1 = Some(b);
    }
    if let Some(b) = over.beta2 {
        modulation.beta2 = Some(b);
    }
    if let Some(w) = over.omega_m {
        modulation.omega_m = Some(w);
    }
    if let Some(p) = over.phi_deg {
        modulation.phi_deg = Some(p);
    }

    let truncation = match &over.truncation {
        Some(flag) => parse_truncation_flag(flag)?,
        None => match &file.truncation {
            Some(TruncationConfig::Fixed { p }) => Truncation::Fixed(*p),
            Some(TruncationConfig::Adaptive { tol }) => {
                if *tol <= 0.0 {
                    return Err(CliError::Config("truncation.tol: must be positive".into()));
                }
                Truncation::Adaptive { tol: *tol }
            }
            None => Truncation::default(),
        },
    };

    let output_path = over.out.clone().or_else(|| file.output.as_ref().and_then(|o| o.path.clone()));
    let output_format =
        over.format.clone().or_else(|| file.output.as_ref().and_then(|o| o.format.clone()));
    if let Some(fmt) = &output_format {
        if fmt != "csv" && fmt != "kv" {
            return Err(CliError::Config(format!(
                "output.format: expected `csv` or `kv`, got `{fmt}`"
            )));
        }
    }

    Ok(Resolved { file, device, modulation, truncation, output_path, output_format })
}

fn site_params(site: &SiteConfig, path: &str) -> Result<SiteParams, CliError> {
    let amp = |a: Option<f64>, sq: Option<f64>, name: &str| -> Result<f64, CliError> {
        match (a, sq) {
            (Some(v), None) => Ok(v),
            (None, Some(v)) => {
                if v < 0.0 {
                    Err(CliError::Config(format!("{path}.{name}_sq: must be non-negative")))
                } else {
                    Ok(v.sqrt())
                }
            }
            (None, None) => Err(CliError::Config(format!(
                "{path}: one of `{name}` or `{name}_sq` is required"
            ))),
            (Some(_), Some(_)) => Err(CliError::Config(format!(
                "{path}: give only one of `{name}` and `{name}_sq`"
            ))),
        }
    };
    let k_a = amp(site.k_a, site.k_a_sq, "k_a")?;
    let k_b = amp(site.k_b, site.k_b_sq, "k_b")?;
    SiteParams::new(site.omega0, site.gamma, k_a, k_b, site.kappa)
        .map_err(|e| CliError::Config(format!("{path}: {e}")))
}

impl Resolved {
    pub fn chain(&self) -> Result<ChainModel, CliError> {
        let device = self
            .device
            .as_ref()
            .ok_or_else(|| CliError::Config("device: required (or pass --seed-params table-s1)".into()))?;
        let s1 = site_params(&device.site1, "device.site1")?;
        let s2 = site_params(&device.site2, "device.site2")?;
        ChainModel::new(s1, s2, device.lambda)
            .map_err(|e| CliError::Config(format!("device.lambda: {e}")))
    }

    /// Per-site modulation strengths; `beta` fills both when the split
    /// fields are absent.
    pub fn betas(&self) -> Result<(f64, f64), CliError> {
        match (self.modulation.beta, self.modulation.beta1, self.modulation.beta2) {
            (Some(b), None, None) => Ok((b, b)),
            (None, Some(b1), Some(b2)) => Ok((b1, b2)),
            (None, None, None) => {
                Err(CliError::Config("modulation: `beta` or `beta1`+`beta2` is required".into()))
            }
            (Some(_), _, _) => Err(CliError::Config(
                "modulation: give either `beta` or `beta1`+`beta2`, not both".into(),
            )),
            _ => Err(CliError::Config("modulation: both `beta1` and `beta2` are required".into())),
        }
    }

    /// Common modulation strength, for tasks defined at equal drive.
    pub fn common_beta(&self, task: &str) -> Result<f64, CliError> {
        let (b1, b2) = self.betas()?;
        if b1 != b2 {
            return Err(CliError::Config(format!(
                "modulation: `{task}` needs a common strength (beta1 == beta2)"
            )));
        }
        Ok(b1)
    }

    pub fn omega_m(&self) -> Result<f64, CliError> {
        self.modulation
            .omega_m
            .ok_or_else(|| CliError::Config("modulation.omega_m: required".into()))
    }

    pub fn phi_rad(&self) -> Result<f64, CliError> {
        Ok(self
            .modulation
            .phi_deg
            .ok_or_else(|| CliError::Config("modulation.phi_deg: required".into()))?
            .to_radians())
    }

    pub fn build_modulation(&self) -> Result<Modulation, CliError> {
        let (b1, b2) = self.betas()?;
        Modulation::new(b1, b2, self.omega_m()?, self.phi_rad()?)
            .map_err(|e| CliError::Config(format!("modulation: {e}")))
    }

    /// Echo of the truncation policy for output headers.
    pub fn truncation_echo(&self) -> serde_json::Value {
        match self.truncation {
            Truncation::Fixed(p) => serde_json::json!({"mode": "fixed", "p": p}),
            Truncation::Adaptive { tol } => serde_json::json!({"mode": "adaptive", "tol": tol}),
        }
    }

    /// Echo of the resolved device/modulation blocks for output headers.
    pub fn device_echo(&self) -> serde_json::Value {
        match (&self.device, self.chain().ok()) {
            (Some(_), Some(chain)) => serde_json::json!({
                "site1": site_echo(chain.site1()),
                "site2": site_echo(chain.site2()),
                "lambda": chain.lambda(),
            }),
            _ => serde_json::Value::Null,
        }
    }
}

fn site_echo(s: &SiteParams) -> serde_json::Value {
    serde_json::json!({
        "omega0": s.omega0(),
        "gamma": s.gamma(),
        "k_a": s.k_a(),
        "k_b": s.k_b(),
        "kappa": s.kappa(),
    })
}
