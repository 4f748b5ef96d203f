//! Equivalent static Hatano-Nelson description of the modulated chain.
//!
//! Folding the sideband ladders into the probe band turns the chain into a
//! static two-site system with an effective non-Hermitian Hamiltonian
//! `H_eff = H0 + O_minus + O_plus`. Its off-diagonal entries are the
//! direction-dependent couplings `lambda12` (entry 1,2) and `lambda21`
//! (entry 2,1, driving site-1 to site-2 transfer); their asymmetry encodes
//! the non-reciprocity of the device. At the evaluation frequency the
//! couplings are real to numerical precision, one of them crossing zero at
//! an exceptional point and `lambda21 = -lambda12` at pure gyration.

use crate::floquet::{self, FloquetError};
use crate::model::{ChainModel, Modulation, Truncation, ADAPTIVE_P_CAP};
use crate::numerics::wrap_angle;
use crate::{C64, CMat2};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HnError {
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    /// One of the through-chain transmissions underflowed to exactly zero,
    /// signalling an operating point on top of an exceptional point.
    #[error("transmission underflow: one direction is exactly zero (surviving direction {surviving_db:.1} dB)")]
    ZeroTransmission { surviving_db: f64 },
}

/// Effective couplings and contrast figures extracted from `H_eff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HnCouplings {
    /// (1,2) entry of `H_eff` (MHz).
    pub lambda12: C64,
    /// (2,1) entry of `H_eff` (MHz); drives site-1 to site-2 transfer.
    pub lambda21: C64,
    /// Mean imaginary part of the diagonal (MHz): the effective decay,
    /// increased over the bare gamma by sideband conversion loss.
    pub gamma_eff: f64,
    /// Mean real diagonal deviation from the evaluation frequency (MHz).
    /// Diagnostic only.
    pub diag_real_shift: f64,
    /// Coupling modification factor `1 - lambda12/lambda`.
    pub alpha12: C64,
    /// Coupling modification factor `1 - lambda21/lambda`.
    pub alpha21: C64,
    /// `20 log10 |lambda21 / lambda12|` (dB).
    pub mag_contrast_db: f64,
    /// `arg(lambda21) - arg(lambda12)` wrapped to (-pi, pi] (radians).
    pub phase_contrast: f64,
    /// Frequency the extraction was evaluated at (MHz).
    pub omega_eval: f64,
    /// Truncation order actually used.
    pub p_used: usize,
}

/// Magnitude (dB) and phase (radians, wrapped) contrast of a coupling pair.
pub fn coupling_contrast(lambda21: C64, lambda12: C64) -> (f64, f64) {
    let mag = 20.0 * (lambda21.norm().log10() - lambda12.norm().log10());
    let phase = wrap_angle(lambda21.arg() - lambda12.arg());
    (mag, phase)
}

/// Effective Hamiltonian `H_eff = H0 + O_minus + O_plus` at probe frequency
/// `omega`, together with the truncation order used.
///
/// Adaptive truncation raises the order until the max-entry relative change
/// of `H_eff` between consecutive orders drops below the tolerance.
pub fn effective_hamiltonian(
    chain: &ChainModel,
    modulation: &Modulation,
    omega: f64,
    truncation: &Truncation,
) -> Result<(CMat2, usize), FloquetError> {
    let h0 = floquet::static_hamiltonian(chain);
    let at_order = |p: usize| -> Result<CMat2, FloquetError> {
        let red = floquet::sideband_reduction(chain, modulation, omega, p)?;
        Ok(h0 + red.o_minus + red.o_plus)
    };
    match *truncation {
        Truncation::Fixed(p) => Ok((at_order(p)?, p)),
        Truncation::Adaptive { tol } => {
            let mut prev = h0;
            let mut last_change = f64::INFINITY;
            for p in 1..=ADAPTIVE_P_CAP {
                let cur = at_order(p)?;
                let scale = cur.iter().map(|z| z.norm()).fold(0.0, f64::max);
                last_change = (cur - prev).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
                if last_change <= tol {
                    return Ok((cur, p));
                }
                prev = cur;
            }
            Err(FloquetError::NoConvergence { cap: ADAPTIVE_P_CAP, last_change })
        }
    }
}

/// Extracts the effective couplings at the chain's mean resonance frequency.
pub fn hn_couplings(
    chain: &ChainModel,
    modulation: &Modulation,
    truncation: &Truncation,
) -> Result<HnCouplings, FloquetError> {
    let omega_eval = chain.mean_omega0();
    let (h_eff, p_used) = effective_hamiltonian(chain, modulation, omega_eval, truncation)?;
    let lambda12 = h_eff[(0, 1)];
    let lambda21 = h_eff[(1, 0)];
    let lam = C64::new(chain.lambda(), 0.0);
    let one = C64::new(1.0, 0.0);
    let (mag_contrast_db, phase_contrast) = coupling_contrast(lambda21, lambda12);
    Ok(HnCouplings {
        lambda12,
        lambda21,
        gamma_eff: 0.5 * (h_eff[(0, 0)].im + h_eff[(1, 1)].im),
        diag_real_shift: 0.5 * (h_eff[(0, 0)].re + h_eff[(1, 1)].re) - omega_eval,
        alpha12: one - lambda12 / lam,
        alpha21: one - lambda21 / lam,
        mag_contrast_db,
        phase_contrast,
        omega_eval,
        p_used,
    })
}

/// First-order analytic coupling modification factors `(alpha12, alpha21)`
/// for a symmetric chain with common modulation strength, exact when a
/// single sideband pair is retained:
///
/// `alpha = (beta^2/2) [(g0^2 + l^2 - wm^2) cos(phi) +/- 2 g0 wm sin(phi)]
///  / ([g0^2 + (l - wm)^2][g0^2 + (l + wm)^2])`
///
/// with the `+` sign for `alpha12`.
pub fn alpha_first_order(
    beta: f64,
    omega_m: f64,
    phi: f64,
    lambda_static: f64,
    gamma0: f64,
) -> (f64, f64) {
    let g2 = gamma0 * gamma0;
    let den = (g2 + (lambda_static - omega_m) * (lambda_static - omega_m))
        * (g2 + (lambda_static + omega_m) * (lambda_static + omega_m));
    let symmetric = (g2 + lambda_static * lambda_static - omega_m * omega_m) * phi.cos();
    let antisymmetric = 2.0 * gamma0 * omega_m * phi.sin();
    let scale = 0.5 * beta * beta / den;
    (scale * (symmetric + antisymmetric), scale * (symmetric - antisymmetric))
}

/// Magnitude (dB) and phase (radians) contrast of the through-chain
/// transmissions `S41` vs `S23`, evaluated at the mean resonance frequency.
pub fn contrast_at_omega0(
    chain: &ChainModel,
    modulation: &Modulation,
    truncation: &Truncation,
) -> Result<(f64, f64), HnError> {
    let omega = chain.mean_omega0();
    let s = floquet::scattering_matrix(chain, modulation, omega, truncation)?.s;
    let s41 = s[(3, 0)];
    let s23 = s[(1, 2)];
    if s41.norm() == 0.0 || s23.norm() == 0.0 {
        let surviving = s41.norm().max(s23.norm());
        return Err(HnError::ZeroTransmission { surviving_db: 20.0 * surviving.log10() });
    }
    let mag = 20.0 * (s41.norm().log10() - s23.norm().log10());
    let phase = wrap_angle(s41.arg() - s23.arg());
    Ok((mag, phase))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SiteParams;
    use approx::assert_relative_eq;

    fn table_device() -> ChainModel {
        let s1 = SiteParams::from_port_rates(6870.5, 3.9, 3.7, 3.7, 0.4).unwrap();
        let s2 = SiteParams::from_port_rates(6870.5, 3.6, 3.4, 3.4, 0.4).unwrap();
        ChainModel::new(s1, s2, 16.4).unwrap()
    }

    fn symmetric_device() -> ChainModel {
        let s = SiteParams::from_port_rates(6870.5, 3.75, 3.55, 3.55, 0.4).unwrap();
        ChainModel::new(s, s, 16.4).unwrap()
    }

    #[test]
    fn effective_hamiltonian_reduces_to_static_without_modulation() {
        let chain = table_device();
        let modn = Modulation::common(0.0, 20.0, 0.4).unwrap();
        let (h, _) = effective_hamiltonian(&chain, &modn, 6870.5, &Truncation::default()).unwrap();
        assert_eq!(h, floquet::static_hamiltonian(&chain));
    }

    #[test]
    fn first_order_diagonal_correction_is_purely_imaginary() {
        // At the site resonance the two first-order diagonal terms are
        // complex conjugates, so the real diagonal stays at omega0.
        let chain = symmetric_device();
        let modn = Modulation::common(17.0, 20.22, 1.0).unwrap();
        let (h, _) = effective_hamiltonian(&chain, &modn, 6870.5, &Truncation::Fixed(1)).unwrap();
        assert!((h[(0, 0)].re - 6870.5).abs() < 1e-12 * 6870.5);
        assert!((h[(1, 1)].re - 6870.5).abs() < 1e-12 * 6870.5);
    }

    #[test]
    fn static_couplings_recover_bare_values() {
        let chain = table_device();
        let modn = Modulation::common(0.0, 20.0, 0.0).unwrap();
        let hn = hn_couplings(&chain, &modn, &Truncation::default()).unwrap();
        assert_eq!(hn.lambda12, C64::new(16.4, 0.0));
        assert_eq!(hn.lambda21, C64::new(16.4, 0.0));
        assert_relative_eq!(hn.gamma_eff, 3.75, epsilon = 1e-12);
        assert_eq!(hn.alpha12, C64::new(0.0, 0.0));
        assert_eq!(hn.alpha21, C64::new(0.0, 0.0));
        assert_eq!(hn.mag_contrast_db, 0.0);
        assert_eq!(hn.phase_contrast, 0.0);
    }

    #[test]
    fn alpha_first_order_frozen_value_and_symmetries() {
        // Independent evaluation of the closed form at the pinned point
        // (beta=17, wm=20.22, phi=90deg, lambda=16.4, gamma0=3.75).
        let (a12, a21) = alpha_first_order(17.0, 20.22, std::f64::consts::FRAC_PI_2, 16.4, 3.75);
        assert_relative_eq!(a12, 0.564_344_397_140_480_3, max_relative = 1e-12);
        assert_relative_eq!(a21, -0.564_344_397_140_480_3, max_relative = 1e-12);
        // beta = 0 kills both.
        assert_eq!(alpha_first_order(0.0, 20.0, 1.0, 16.4, 3.75), (0.0, 0.0));
        // phi = 0 makes them equal.
        let (s12, s21) = alpha_first_order(21.0, 18.0, 0.0, 16.4, 3.75);
        assert_eq!(s12, s21);
        // phi negation swaps the pair exactly.
        let (p12, p21) = alpha_first_order(21.0, 18.0, 0.7, 16.4, 3.75);
        let (n12, n21) = alpha_first_order(21.0, 18.0, -0.7, 16.4, 3.75);
        assert_eq!(p12, n21);
        assert_eq!(p21, n12);
    }

    #[test]
    fn first_order_truncation_matches_analytic_couplings() {
        let chain = symmetric_device();
        let lam = chain.lambda();
        for (beta, omega_m, phi_deg) in [(17.0, 20.22, 90.0), (26.0, 20.6, -40.4), (9.5, 15.0, 170.0)] {
            let phi = (phi_deg as f64).to_radians();
            let modn = Modulation::common(beta, omega_m, phi).unwrap();
            let hn = hn_couplings(&chain, &modn, &Truncation::Fixed(1)).unwrap();
            let (a12, a21) = alpha_first_order(beta, omega_m, phi, lam, chain.mean_gamma());
            assert!((hn.lambda12 - C64::new(lam * (1.0 - a12), 0.0)).norm() <= 1e-12 * lam);
            assert!((hn.lambda21 - C64::new(lam * (1.0 - a21), 0.0)).norm() <= 1e-12 * lam);
        }
    }

    #[test]
    fn couplings_cross_zero_twice_per_phase_sweep_above_critical_drive() {
        // At beta=26, wm=20.6 each coupling changes sign twice over a full
        // phase sweep.
        let chain = table_device();
        let mut signs12 = 0;
        let mut signs21 = 0;
        let n = 721;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..n {
            let phi = -std::f64::consts::PI + (i as f64 + 1.0) * std::f64::consts::TAU / n as f64;
            let modn = Modulation::common(26.0, 20.6, phi).unwrap();
            let hn = hn_couplings(&chain, &modn, &Truncation::default()).unwrap();
            if let Some((p12, p21)) = prev {
                if p12 * hn.lambda12.re < 0.0 {
                    signs12 += 1;
                }
                if p21 * hn.lambda21.re < 0.0 {
                    signs21 += 1;
                }
            }
            prev = Some((hn.lambda12.re, hn.lambda21.re));
        }
        assert_eq!(signs12, 2);
        assert_eq!(signs21, 2);
    }

    #[test]
    fn realness_and_diagonal_degeneracy_at_center_frequency() {
        let chain = symmetric_device();
        let lam = chain.lambda();
        for beta in [5.0, 17.0, 26.0] {
            for omega_m in [14.0, 20.22, 26.0] {
                for phi_deg in [-150.0, -40.4, 0.0, 90.0, 180.0] {
                    let modn = Modulation::common(beta, omega_m, (phi_deg as f64).to_radians()).unwrap();
                    for trunc in [Truncation::Fixed(20), Truncation::default()] {
                        let hn = hn_couplings(&chain, &modn, &trunc).unwrap();
                        assert!(hn.lambda12.im.abs() < 1e-6 * lam, "Im l12 = {}", hn.lambda12.im);
                        assert!(hn.lambda21.im.abs() < 1e-6 * lam, "Im l21 = {}", hn.lambda21.im);
                    }
                    let (h, _) = effective_hamiltonian(&chain, &modn, 6870.5, &Truncation::default()).unwrap();
                    let scale = h[(0, 0)].norm();
                    assert!((h[(0, 0)] - h[(1, 1)]).norm() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn phi_negation_swaps_numeric_couplings() {
        let chain = symmetric_device();
        let lam = chain.lambda();
        for (beta, omega_m, phi_deg) in [(17.0, 20.22, 55.0), (26.0, 20.6, -40.4), (22.0, 24.0, 121.0)] {
            let phi = (phi_deg as f64).to_radians();
            let pos = hn_couplings(&chain, &Modulation::common(beta, omega_m, phi).unwrap(), &Truncation::default()).unwrap();
            let neg = hn_couplings(&chain, &Modulation::common(beta, omega_m, -phi).unwrap(), &Truncation::default()).unwrap();
            assert!((pos.alpha12 - neg.alpha21).norm() <= 1e-9);
            assert!((pos.alpha21 - neg.alpha12).norm() <= 1e-9);
            let _ = lam;
        }
    }

    #[test]
    fn contrast_definition_is_antisymmetric_under_argument_swap() {
        let a = C64::new(3.2, 0.0);
        let b = C64::new(-1.7, 0.0);
        let (m1, p1) = coupling_contrast(a, b);
        let (m2, p2) = coupling_contrast(b, a);
        assert_eq!(m1 + m2, 0.0);
        assert_eq!(p1, std::f64::consts::PI);
        assert_eq!(p2, std::f64::consts::PI);
    }

    #[test]
    fn scattering_contrast_matches_coupling_ratio() {
        // With equal port couplings within each site, S41/S23 at the center
        // frequency equals lambda21/lambda12.
        let chain = table_device();
        let modn = Modulation::common(17.0, 20.22, 1.2).unwrap();
        let trunc = Truncation::default();
        let (mag_s, phase_s) = contrast_at_omega0(&chain, &modn, &trunc).unwrap();
        let hn = hn_couplings(&chain, &modn, &trunc).unwrap();
        assert_relative_eq!(mag_s, hn.mag_contrast_db, max_relative = 1e-9, epsilon = 1e-9);
        assert_relative_eq!(phase_s, hn.phase_contrast, max_relative = 1e-9, epsilon = 1e-9);
    }

    #[test]
    fn static_contrast_is_zero() {
        let chain = table_device();
        let modn = Modulation::common(0.0, 20.0, 0.0).unwrap();
        let (mag, phase) = contrast_at_omega0(&chain, &modn, &Truncation::default()).unwrap();
        assert_eq!(mag, 0.0);
        assert_eq!(phase, 0.0);
    }

    #[test]
    fn zero_transmission_reports_surviving_direction() {
        // Port 2 decoupled makes S23 exactly zero while S41 survives.
        let s1 = SiteParams::new(6870.5, 3.9, (7.4f64).sqrt(), 0.0, 0.4).unwrap();
        let s2 = SiteParams::from_port_rates(6870.5, 3.6, 3.4, 3.4, 0.4).unwrap();
        let chain = ChainModel::new(s1, s2, 16.4).unwrap();
        let modn = Modulation::common(0.0, 20.0, 0.0).unwrap();
        let err = contrast_at_omega0(&chain, &modn, &Truncation::default()).unwrap_err();
        match err {
            HnError::ZeroTransmission { surviving_db } => assert!(surviving_db.is_finite()),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn gyration_operating_point_has_opposed_couplings() {
        // Near the pure-gyration locus the two couplings have opposite sign
        // and comparable magnitude, so the transmissions carry a pi phase
        // contrast with vanishing magnitude contrast.
        let chain = table_device();
        let modn = Modulation::common(26.0, 20.6, (-28.67f64).to_radians()).unwrap();
        let hn = hn_couplings(&chain, &modn, &Truncation::default()).unwrap();
        assert!(hn.lambda12.re * hn.lambda21.re < 0.0);
        assert!((hn.lambda21 + hn.lambda12).norm() / hn.lambda21.norm() < 0.05);
        let (mag, phase) = contrast_at_omega0(&chain, &modn, &Truncation::default()).unwrap();
        assert!(mag.abs() < 0.5, "magnitude contrast {mag} dB");
        assert!((phase.abs() - std::f64::consts::PI).abs() < 0.05, "phase contrast {phase}");
    }
}
