//! Simulator and analysis toolkit for spatio-temporally modulated
//! two-resonator chains.
//!
//! The library computes the single-frequency four-port scattering matrix of
//! a pair of coupled resonators whose on-site frequencies are modulated
//! sinusoidally, extracts the equivalent static Hatano-Nelson couplings,
//! and maps modulation-parameter space for exceptional points, the critical
//! modulation strength, and pure-gyration operating points.
//!
//! Unit conventions, used everywhere:
//!
//! * frequencies, decay rates, and couplings are ordinary frequencies in
//!   MHz (value = angular frequency / 2pi); the spectral-domain equations
//!   are homogeneous in frequency units, so no 2pi factors appear there,
//! * the time-domain integrator ([`timedomain`]) is the one place where
//!   angular factors enter, with time in microseconds,
//! * angles are radians inside the library; degrees belong to external
//!   interfaces.

pub mod calib;
pub mod floquet;
pub mod hn;
pub mod landscape;
pub mod model;
mod numerics;
pub mod timedomain;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// 2x2 complex matrix (site space).
pub type CMat2 = nalgebra::Matrix2<C64>;
/// 4x4 complex matrix (port space).
pub type CMat4 = nalgebra::Matrix4<C64>;
