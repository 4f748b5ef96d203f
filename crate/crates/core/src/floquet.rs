//! Single-frequency four-port scattering of the modulated chain.
//!
//! The sinusoidal on-site modulation couples the resonator amplitudes at a
//! probe frequency to an infinite ladder of sidebands spaced by the
//! modulation frequency. Truncating the ladder at order `P` and eliminating
//! the sideband amplitudes yields two 2x2 reduction matrices (one per
//! ladder direction) built from nested 2x2 inverses; folding them into the
//! static Hamiltonian gives the same-frequency scattering matrix
//!
//! `S(w) = C - i D [w I - H0 - O_minus - O_plus]^-1 K^T`
//!
//! with hanger-style port matrices `C`, `D`, `K`. [`banded_solve`] solves
//! the same truncated ladder as one block-tridiagonal linear system and is
//! kept as an independent algebraic route for cross-checking.

use crate::model::{ChainModel, Modulation, Truncation, ADAPTIVE_P_CAP};
use crate::{C64, CMat2, CMat4};
use nalgebra::{DMatrix, Matrix2x4, Matrix4x2};
use rayon::prelude::*;
use thiserror::Error;

/// Condition-number guard for the nested 2x2 inverses, one decade under the
/// reciprocal of double-precision epsilon.
pub const COND_LIMIT: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloquetError {
    /// A nested sideband inverse is numerically singular; `band` is the
    /// sideband index at fault (0 is the probe band).
    #[error("near-singular sideband level at band {band} (condition number {cond:.3e})")]
    SingularLevel { band: i32, cond: f64 },
    /// The truncated block-tridiagonal system has no LU solution.
    #[error("singular truncated sideband system")]
    SingularSystem,
    /// Adaptive truncation failed to converge below the cap.
    #[error("no convergence at truncation order {cap} (last relative change {last_change:.3e})")]
    NoConvergence { cap: usize, last_change: f64 },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(&'static str),
}

/// Scattering matrix at a single probe frequency. Rows are output ports,
/// columns input ports, both in port order 1..4.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringResult {
    /// Probe frequency (MHz).
    pub omega: f64,
    /// 4x4 complex scattering amplitudes.
    pub s: CMat4,
    /// Truncation order actually used.
    pub p_used: usize,
}

/// The two sideband-reduction matrices at one probe frequency and order.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandReduction {
    /// Contribution of the lower sideband ladder (MHz).
    pub o_minus: CMat2,
    /// Contribution of the upper sideband ladder (MHz).
    pub o_plus: CMat2,
    /// Evaluation frequency (MHz).
    pub omega: f64,
    /// Truncation order.
    pub p: usize,
}

/// Static Hamiltonian `H0 = Omega_0 + i Gamma` of the unmodulated chain.
pub fn static_hamiltonian(chain: &ChainModel) -> CMat2 {
    let lam = C64::new(chain.lambda(), 0.0);
    CMat2::new(
        C64::new(chain.site1().omega0(), chain.site1().gamma()),
        lam,
        lam,
        C64::new(chain.site2().omega0(), chain.site2().gamma()),
    )
}

/// Sideband coupling matrix `B = diag(beta1/2, beta2/2 e^{i phi})`.
pub(crate) fn sideband_coupling(modulation: &Modulation) -> CMat2 {
    CMat2::new(
        C64::new(0.5 * modulation.beta1(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(0.5 * modulation.beta2(), modulation.phi()),
    )
}

/// `H_p = H0 - p w_m I`, the diagonal block of sideband `p`.
fn shifted_hamiltonian(h0: &CMat2, p: i32, omega_m: f64) -> CMat2 {
    let shift = C64::new(p as f64 * omega_m, 0.0);
    CMat2::new(h0[(0, 0)] - shift, h0[(0, 1)], h0[(1, 0)], h0[(1, 1)] - shift)
}

/// Closed-form cofactor inverse of a 2x2 with a condition-number guard.
fn checked_inverse(m: &CMat2, band: i32) -> Result<CMat2, FloquetError> {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    // Exact 2x2 condition number: smax^2 from the Frobenius norm, and
    // smin = |det| / smax (the singular values multiply to |det|), which
    // avoids the cancellation of the direct smin formula.
    let fro2 = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let disc = (fro2 * fro2 - 4.0 * det.norm_sqr()).max(0.0).sqrt();
    let smax2 = 0.5 * (fro2 + disc);
    let abs_det = det.norm();
    let cond = if abs_det > 0.0 { smax2 / abs_det } else { f64::INFINITY };
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(FloquetError::SingularLevel { band, cond });
    }
    let inv_det = C64::new(1.0, 0.0) / det;
    Ok(CMat2::new(
        m[(1, 1)] * inv_det,
        -m[(0, 1)] * inv_det,
        -m[(1, 0)] * inv_det,
        m[(0, 0)] * inv_det,
    ))
}

fn identity_times(omega: f64) -> CMat2 {
    CMat2::new(
        C64::new(omega, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(omega, 0.0),
    )
}

/// Collapses the sideband ladders at truncation order `p` into the two
/// reduction matrices, iterating each nested chain from its innermost level.
///
/// `p = 0` (or a static modulation) returns zero matrices.
pub fn sideband_reduction(
    chain: &ChainModel,
    modulation: &Modulation,
    omega: f64,
    p: usize,
) -> Result<SidebandReduction, FloquetError> {
    let zero = CMat2::zeros();
    if p == 0 || modulation.is_static() {
        return Ok(SidebandReduction { o_minus: zero, o_plus: zero, omega, p });
    }
    let h0 = static_hamiltonian(chain);
    let b = sideband_coupling(modulation);
    let b_dag = b.adjoint();
    let w = identity_times(omega);
    let om = modulation.omega_m();

    // Lower ladder: bands -P..-1, entered from the probe band through B.
    let mut level = checked_inverse(&(w - shifted_hamiltonian(&h0, -(p as i32), om)), -(p as i32))?;
    for q in (1..p).rev() {
        let m = w - shifted_hamiltonian(&h0, -(q as i32), om) - b * level * b_dag;
        level = checked_inverse(&m, -(q as i32))?;
    }
    let o_minus = b * level * b_dag;

    // Upper ladder: bands 1..P, entered through B^dag.
    let mut level = checked_inverse(&(w - shifted_hamiltonian(&h0, p as i32, om)), p as i32)?;
    for q in (1..p).rev() {
        let m = w - shifted_hamiltonian(&h0, q as i32, om) - b_dag * level * b;
        level = checked_inverse(&m, q as i32)?;
    }
    let o_plus = b_dag * level * b;

    Ok(SidebandReduction { o_minus, o_plus, omega, p })
}

/// Port matrices of the hanger-style geometry. `C` swaps the two ports of
/// each feedline (direct feedthrough), `K` couples ports to sites, and the
/// output matrix `D` carries `-k*`.
fn port_matrices(chain: &ChainModel) -> (CMat4, Matrix4x2<C64>, Matrix2x4<C64>) {
    let [k1, k2, k3, k4] = chain.port_amplitudes();
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let c = CMat4::new(
        z, one, z, z, //
        one, z, z, z, //
        z, z, z, one, //
        z, z, one, z,
    );
    let d = Matrix4x2::new(
        C64::new(-k1, 0.0),
        z,
        C64::new(-k2, 0.0),
        z,
        z,
        C64::new(-k3, 0.0),
        z,
        C64::new(-k4, 0.0),
    );
    let k_t = Matrix2x4::new(
        C64::new(k1, 0.0),
        C64::new(k2, 0.0),
        z,
        z,
        z,
        z,
        C64::new(k3, 0.0),
        C64::new(k4, 0.0),
    );
    (c, d, k_t)
}

fn assemble_s(chain: &ChainModel, probe_band_green: &CMat2) -> CMat4 {
    let (c, d, k_t) = port_matrices(chain);
    let i = C64::new(0.0, 1.0);
    c - (d * probe_band_green * k_t).map(|z| i * z)
}

fn s_at_order(
    chain: &ChainModel,
    modulation: &Modulation,
    omega: f64,
    p: usize,
) -> Result<CMat4, FloquetError> {
    let red = sideband_reduction(chain, modulation, omega, p)?;
    let h0 = static_hamiltonian(chain);
    let m = identity_times(omega) - h0 - red.o_minus - red.o_plus;
    let green = checked_inverse(&m, 0)?;
    Ok(assemble_s(chain, &green))
}

fn max_abs(m: &CMat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Scattering matrix of the modulated chain at probe frequency `omega`.
///
/// In adaptive mode the truncation order is raised until the max-entry
/// relative change of the full 4x4 matrix between consecutive orders drops
/// below the tolerance; the accepted order is recorded in `p_used`.
pub fn scattering_matrix(
    chain: &ChainModel,
    modulation: &Modulation,
    omega: f64,
    truncation: &Truncation,
) -> Result<ScatteringResult, FloquetError> {
    match *truncation {
        Truncation::Fixed(p) => {
            let s = s_at_order(chain, modulation, omega, p)?;
            Ok(ScatteringResult { omega, s, p_used: p })
        }
        Truncation::Adaptive { tol } => {
            let mut prev = s_at_order(chain, modulation, omega, 0)?;
            let mut last_change = f64::INFINITY;
            for p in 1..=ADAPTIVE_P_CAP {
                let cur = s_at_order(chain, modulation, omega, p)?;
                let scale = max_abs(&cur);
                last_change = max_abs(&(cur - prev)) / scale;
                if last_change <= tol {
                    return Ok(ScatteringResult { omega, s: cur, p_used: p });
                }
                prev = cur;
            }
            Err(FloquetError::NoConvergence { cap: ADAPTIVE_P_CAP, last_change })
        }
    }
}

/// Same scattering matrix computed by assembling the truncated
/// block-tridiagonal ladder explicitly and solving it with input injected
/// only at the probe band. Algebraically identical to [`scattering_matrix`]
/// at equal order; kept as an internal oracle.
pub fn banded_solve(
    chain: &ChainModel,
    modulation: &Modulation,
    omega: f64,
    p: usize,
) -> Result<ScatteringResult, FloquetError> {
    let nblocks = 2 * p + 1;
    let n = 2 * nblocks;
    let h0 = static_hamiltonian(chain);
    let b = sideband_coupling(modulation);
    let b_dag = b.adjoint();
    let om = modulation.omega_m();

    let mut m = DMatrix::<C64>::zeros(n, n);
    for j in 0..nblocks {
        let band = p as i32 - j as i32; // +P at the top of the ladder
        let diag = identity_times(omega) - shifted_hamiltonian(&h0, band, om);
        m.view_mut((2 * j, 2 * j), (2, 2)).copy_from(&diag);
        if j + 1 < nblocks {
            m.view_mut((2 * j, 2 * (j + 1)), (2, 2)).copy_from(&(-b));
            m.view_mut((2 * (j + 1), 2 * j), (2, 2)).copy_from(&(-b_dag));
        }
    }
    let mut rhs = DMatrix::<C64>::zeros(n, 2);
    let z = 2 * p; // row offset of the probe band
    rhs[(z, 0)] = C64::new(1.0, 0.0);
    rhs[(z + 1, 1)] = C64::new(1.0, 0.0);

    let x = m.lu().solve(&rhs).ok_or(FloquetError::SingularSystem)?;
    let green = CMat2::new(x[(z, 0)], x[(z, 1)], x[(z + 1, 0)], x[(z + 1, 1)]);
    Ok(ScatteringResult { omega, s: assemble_s(chain, &green), p_used: p })
}

/// One row of a frequency sweep; per-point failures are recorded without
/// aborting the sweep.
#[derive(Debug, Clone)]
pub struct SpectrumRow {
    pub omega: f64,
    pub result: Result<ScatteringResult, FloquetError>,
}

/// Evaluates [`scattering_matrix`] over a strictly increasing frequency
/// grid. Grid points are independent and evaluated in parallel; rows come
/// back in grid order.
pub fn spectrum(
    chain: &ChainModel,
    modulation: &Modulation,
    omega_grid: &[f64],
    truncation: &Truncation,
) -> Result<Vec<SpectrumRow>, FloquetError> {
    if !crate::numerics::strictly_increasing(omega_grid) {
        return Err(FloquetError::InvalidGrid(
            "frequency grid must be non-empty and strictly increasing",
        ));
    }
    Ok(omega_grid
        .par_iter()
        .map(|&omega| SpectrumRow {
            omega,
            result: scattering_matrix(chain, modulation, omega, truncation),
        })
        .collect())
}
