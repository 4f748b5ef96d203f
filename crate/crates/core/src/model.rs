//! Physical domain types and device-level helper computations.
//!
//! All types validate their invariants at construction and are immutable
//! afterwards, so they can be shared freely between concurrent workers.

use crate::numerics::wrap_angle;
use thiserror::Error;

/// Relative tolerance on the energy balance `2*gamma = k_a^2 + k_b^2 + kappa`.
pub const ENERGY_BALANCE_RTOL: f64 = 1e-9;

/// Reduced Planck constant, J*s.
const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
const E_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// `2*gamma` does not match `k_a^2 + k_b^2 + kappa`.
    #[error("energy conservation violated: 2*gamma - (k_a^2 + k_b^2 + kappa) = {residual:e} MHz")]
    EnergyConservationViolated { residual: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },
    /// The SQUID inductance diverges (asymmetry factor 1 at half-integer flux).
    #[error("degenerate SQUID: inductance diverges at flux {flux} Phi_0")]
    DegenerateSquid { flux: f64 },
}

fn require_finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFiniteParameter { name, value })
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    require_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveParameter { name, value })
    }
}

fn require_non_negative(name: &'static str, value: f64) -> Result<(), ModelError> {
    require_finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::NegativeParameter { name, value })
    }
}

/// One resonator site: resonance frequency, total decay rate, port coupling
/// amplitudes for its two feedline ports, and internal power loss rate.
///
/// `gamma` is half the sum of internal and external power loss rates, so the
/// balance `2*gamma = k_a^2 + k_b^2 + kappa` must hold (checked to
/// [`ENERGY_BALANCE_RTOL`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteParams {
    omega0: f64,
    gamma: f64,
    k_a: f64,
    k_b: f64,
    kappa: f64,
}

impl SiteParams {
    /// Builds a site from the resonance frequency (MHz), total decay rate
    /// gamma (MHz), port coupling amplitudes (sqrt(MHz)), and internal loss
    /// rate kappa (MHz).
    pub fn new(omega0: f64, gamma: f64, k_a: f64, k_b: f64, kappa: f64) -> Result<Self, ModelError> {
        require_positive("omega0", omega0)?;
        require_positive("gamma", gamma)?;
        require_non_negative("k_a", k_a)?;
        require_non_negative("k_b", k_b)?;
        require_non_negative("kappa", kappa)?;
        let external = k_a * k_a + k_b * k_b;
        let residual = 2.0 * gamma - (external + kappa);
        if residual.abs() > ENERGY_BALANCE_RTOL * 2.0 * gamma {
            return Err(ModelError::EnergyConservationViolated { residual });
        }
        Ok(Self { omega0, gamma, k_a, k_b, kappa })
    }

    /// Same as [`SiteParams::new`] but takes port coupling *rates*
    /// `k_a^2, k_b^2` in MHz, as they are usually quoted.
    pub fn from_port_rates(
        omega0: f64,
        gamma: f64,
        k_a_sq: f64,
        k_b_sq: f64,
        kappa: f64,
    ) -> Result<Self, ModelError> {
        require_non_negative("k_a_sq", k_a_sq)?;
        require_non_negative("k_b_sq", k_b_sq)?;
        Self::new(omega0, gamma, k_a_sq.sqrt(), k_b_sq.sqrt(), kappa)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_a(&self) -> f64 {
        self.k_a
    }

    pub fn k_b(&self) -> f64 {
        self.k_b
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// The static two-site device. Ports 1 and 2 couple to site 1 through
/// `(k_a, k_b)` of `site1`; ports 3 and 4 couple to site 2 likewise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainModel {
    site1: SiteParams,
    site2: SiteParams,
    lambda: f64,
}

impl ChainModel {
    pub fn new(site1: SiteParams, site2: SiteParams, lambda_static: f64) -> Result<Self, ModelError> {
        require_positive("lambda_static", lambda_static)?;
        Ok(Self { site1, site2, lambda: lambda_static })
    }

    pub fn site1(&self) -> &SiteParams {
        &self.site1
    }

    pub fn site2(&self) -> &SiteParams {
        &self.site2
    }

    /// Static inter-site coupling (MHz).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Port coupling amplitudes `[k1, k2, k3, k4]` in port order.
    pub fn port_amplitudes(&self) -> [f64; 4] {
        [self.site1.k_a, self.site1.k_b, self.site2.k_a, self.site2.k_b]
    }

    /// Mean of the two site resonance frequencies; the evaluation frequency
    /// used for effective-coupling extraction.
    pub fn mean_omega0(&self) -> f64 {
        0.5 * (self.site1.omega0 + self.site2.omega0)
    }

    pub fn mean_gamma(&self) -> f64 {
        0.5 * (self.site1.gamma + self.site2.gamma)
    }

    pub fn min_gamma(&self) -> f64 {
        self.site1.gamma.min(self.site2.gamma)
    }
}

/// Validating constructor mirroring the chain-building operation.
pub fn build_chain(site1: SiteParams, site2: SiteParams, lambda_static: f64) -> Result<ChainModel, ModelError> {
    ChainModel::new(site1, site2, lambda_static)
}

/// Sinusoidal on-site frequency modulation: site 1 is driven as
/// `beta1*cos(w_m t)` and site 2 as `beta2*cos(w_m t + phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    beta1: f64,
    beta2: f64,
    omega_m: f64,
    phi: f64,
}

impl Modulation {
    /// `phi` in radians; stored wrapped to (-pi, pi].
    pub fn new(beta1: f64, beta2: f64, omega_m: f64, phi: f64) -> Result<Self, ModelError> {
        require_non_negative("beta1", beta1)?;
        require_non_negative("beta2", beta2)?;
        require_positive("omega_m", omega_m)?;
        require_finite("phi", phi)?;
        Ok(Self { beta1, beta2, omega_m, phi: wrap_angle(phi) })
    }

    /// Common modulation strength on both sites.
    pub fn common(beta: f64, omega_m: f64, phi: f64) -> Result<Self, ModelError> {
        Self::new(beta, beta, omega_m, phi)
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn omega_m(&self) -> f64 {
        self.omega_m
    }

    /// Differential modulation phase, radians in (-pi, pi].
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// True when both modulation strengths vanish.
    pub fn is_static(&self) -> bool {
        self.beta1 == 0.0 && self.beta2 == 0.0
    }
}

/// Sideband truncation policy for the Floquet reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Keep exactly `P` sideband pairs.
    Fixed(usize),
    /// Increase `P` until the max-entry relative change between consecutive
    /// orders drops below `tol` (capped at [`ADAPTIVE_P_CAP`]).
    Adaptive { tol: f64 },
}

/// Cap on the adaptive truncation order.
pub const ADAPTIVE_P_CAP: usize = 40;

/// Default relative tolerance for adaptive truncation.
pub const ADAPTIVE_TOL_DEFAULT: f64 = 1e-9;

impl Truncation {
    pub fn adaptive(tol: f64) -> Result<Self, ModelError> {
        require_positive("tol", tol)?;
        Ok(Self::Adaptive { tol })
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self::Adaptive { tol: ADAPTIVE_TOL_DEFAULT }
    }
}

/// dc-SQUID array parameters: critical current of the smaller junction,
/// junction asymmetry factor, and the number of SQUIDs in series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidParams {
    ic_ua: f64,
    gamma_asym: f64,
    n_series: u32,
}

impl SquidParams {
    pub fn new(ic_ua: f64, gamma_asym: f64, n_series: u32) -> Result<Self, ModelError> {
        require_positive("ic_ua", ic_ua)?;
        require_non_negative("gamma_asym", gamma_asym)?;
        if n_series == 0 {
            return Err(ModelError::NonPositiveParameter { name: "n_series", value: 0.0 });
        }
        Ok(Self { ic_ua, gamma_asym, n_series })
    }

    pub fn ic_ua(&self) -> f64 {
        self.ic_ua
    }

    pub fn gamma_asym(&self) -> f64 {
        self.gamma_asym
    }

    pub fn n_series(&self) -> u32 {
        self.n_series
    }
}

/// Flux-tunable inductance of a series SQUID array, in nH. `flux` is the
/// external flux in units of the flux quantum.
///
/// L = n * hbar / (2 e Ic sqrt(1 + g^2 + 2 g cos(2 pi flux)))
pub fn squid_inductance(flux: f64, p: &SquidParams) -> Result<f64, ModelError> {
    require_finite("flux", flux)?;
    let g = p.gamma_asym;
    let arg = 1.0 + g * g + 2.0 * g * (std::f64::consts::TAU * flux).cos();
    if arg <= 1e-12 {
        return Err(ModelError::DegenerateSquid { flux });
    }
    let single = HBAR / (2.0 * E_CHARGE * p.ic_ua * 1e-6 * arg.sqrt());
    Ok(p.n_series as f64 * single * 1e9)
}

/// Linear bias-voltage-to-modulation-strength calibration: `beta = ratio *
/// voltage_pp`, with the conversion ratio in MHz per mVpp supplied per
/// resonator from an external calibration.
pub fn bias_to_beta(voltage_pp: f64, ratio: f64) -> Result<f64, ModelError> {
    require_non_negative("voltage_pp", voltage_pp)?;
    require_positive("ratio", ratio)?;
    Ok(ratio * voltage_pp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_site1() -> SiteParams {
        SiteParams::from_port_rates(6870.5, 3.9, 3.7, 3.7, 0.4).unwrap()
    }

    fn table_site2() -> SiteParams {
        SiteParams::from_port_rates(6870.5, 3.6, 3.4, 3.4, 0.4).unwrap()
    }

    #[test]
    fn build_chain_accepts_characterized_device() {
        let chain = build_chain(table_site1(), table_site2(), 16.4).unwrap();
        assert_eq!(chain.lambda(), 16.4);
        assert_eq!(chain.mean_omega0(), 6870.5);
        let [k1, k2, k3, k4] = chain.port_amplitudes();
        assert_relative_eq!(k1 * k1, 3.7, epsilon = 1e-12);
        assert_relative_eq!(k2 * k2, 3.7, epsilon = 1e-12);
        assert_relative_eq!(k3 * k3, 3.4, epsilon = 1e-12);
        assert_relative_eq!(k4 * k4, 3.4, epsilon = 1e-12);
    }

    #[test]
    fn build_chain_accepts_exact_balance() {
        // 2*1 = 1 + 1 + 0
        let s = SiteParams::new(1000.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(build_chain(s, s, 5.0).is_ok());
    }

    #[test]
    fn energy_balance_violation_reports_residual() {
        let err = SiteParams::new(1000.0, 1.0, 1.0, 1.0, 0.5).unwrap_err();
        match err {
            ModelError::EnergyConservationViolated { residual } => {
                assert_relative_eq!(residual, -0.5, epsilon = 1e-12);
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn non_positive_parameters_rejected() {
        assert!(matches!(
            SiteParams::new(-1.0, 1.0, 1.0, 1.0, 0.0),
            Err(ModelError::NonPositiveParameter { name: "omega0", .. })
        ));
        assert!(matches!(
            SiteParams::new(1000.0, 0.0, 0.0, 0.0, 0.0),
            Err(ModelError::NonPositiveParameter { name: "gamma", .. })
        ));
        let s = table_site1();
        assert!(matches!(
            build_chain(s, s, 0.0),
            Err(ModelError::NonPositiveParameter { name: "lambda_static", .. })
        ));
        assert!(matches!(
            Modulation::common(1.0, 0.0, 0.0),
            Err(ModelError::NonPositiveParameter { name: "omega_m", .. })
        ));
        assert!(matches!(
            Modulation::new(-1.0, 0.0, 20.0, 0.0),
            Err(ModelError::NegativeParameter { name: "beta1", .. })
        ));
    }

    #[test]
    fn modulation_wraps_phase() {
        let m = Modulation::common(17.0, 20.22, 3.0 * std::f64::consts::PI).unwrap();
        assert_relative_eq!(m.phi(), std::f64::consts::PI, epsilon = 1e-12);
        let m = Modulation::common(17.0, 20.22, -std::f64::consts::PI).unwrap();
        assert_eq!(m.phi(), std::f64::consts::PI);
    }

    #[test]
    fn squid_inductance_matches_design_tuning_range() {
        // Two-SQUID array, Ic = 4 uA, asymmetry 1.5: 0.066 to 0.329 nH.
        let p = SquidParams::new(4.0, 1.5, 2).unwrap();
        let l0 = squid_inductance(0.0, &p).unwrap();
        let l_half = squid_inductance(0.5, &p).unwrap();
        assert_relative_eq!(l0, 0.065_821_195_654_760_74, epsilon = 1e-9);
        assert_relative_eq!(l_half, 0.329_105_978_273_803_8, epsilon = 1e-9);
    }

    #[test]
    fn squid_degenerate_at_symmetric_half_flux() {
        let p = SquidParams::new(4.0, 1.0, 1).unwrap();
        assert!(matches!(
            squid_inductance(0.5, &p),
            Err(ModelError::DegenerateSquid { .. })
        ));
        // Slightly away from half flux the inductance is finite again.
        assert!(squid_inductance(0.501, &p).is_ok());
    }

    #[test]
    fn bias_to_beta_is_linear() {
        assert_relative_eq!(bias_to_beta(10.0, 1.58).unwrap(), 15.8, epsilon = 1e-12);
        assert_relative_eq!(bias_to_beta(10.0, 0.54).unwrap(), 5.4, epsilon = 1e-12);
        assert_eq!(bias_to_beta(0.0, 1.58).unwrap(), 0.0);
        assert!(bias_to_beta(-1.0, 1.58).is_err());
        assert!(bias_to_beta(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn squid_periodic_and_even_in_flux(
            flux in -3.0f64..3.0,
            g in prop_oneof![Just(0.0), 0.0f64..0.99, 1.01f64..4.0],
            ic in 0.5f64..20.0,
        ) {
            let p = SquidParams::new(ic, g, 2).unwrap();
            let l = squid_inductance(flux, &p).unwrap();
            let l_shift = squid_inductance(flux + 1.0, &p).unwrap();
            let l_neg = squid_inductance(-flux, &p).unwrap();
            prop_assert!((l - l_shift).abs() < 1e-12 * l);
            prop_assert!((l - l_neg).abs() < 1e-9 * l);
        }

        #[test]
        fn squid_extrema_at_integer_and_half_flux(g in 0.0f64..0.95, ic in 0.5f64..20.0) {
            let p = SquidParams::new(ic, g, 2).unwrap();
            let l0 = squid_inductance(0.0, &p).unwrap();
            let l_half = squid_inductance(0.5, &p).unwrap();
            for i in 0..=100 {
                let l = squid_inductance(i as f64 / 100.0, &p).unwrap();
                prop_assert!(l >= l0 * (1.0 - 1e-12));
                prop_assert!(l <= l_half * (1.0 + 1e-12));
            }
        }

        #[test]
        fn revalidating_built_sites_never_fails(
            gamma in 0.1f64..10.0,
            split in 0.1f64..0.9,
            kappa_frac in 0.0f64..0.5,
        ) {
            let kappa = kappa_frac * 2.0 * gamma;
            let external = 2.0 * gamma - kappa;
            let ka = (split * external).sqrt();
            let kb = ((1.0 - split) * external).sqrt();
            let s = SiteParams::new(6870.5, gamma, ka, kb, kappa).unwrap();
            // Rebuilding from the stored fields must succeed.
            let again = SiteParams::new(s.omega0(), s.gamma(), s.k_a(), s.k_b(), s.kappa());
            prop_assert!(again.is_ok());
        }
    }
}
