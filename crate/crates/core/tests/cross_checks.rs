//! Randomized cross-route equivalences: the continued-fraction reduction,
//! the block-tridiagonal solve, and the time-domain integrator must all
//! describe the same device.

use gyrsim::floquet::{banded_solve, scattering_matrix};
use gyrsim::model::{ChainModel, Modulation, SiteParams, Truncation};
use gyrsim::timedomain::{integrate, IntegrationSettings};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_chain(rng: &mut ChaCha8Rng) -> ChainModel {
    let mut site = |rng: &mut ChaCha8Rng| {
        let gamma: f64 = rng.random_range(0.8..6.0);
        let kappa = rng.random_range(0.0..0.3) * 2.0 * gamma;
        let external = 2.0 * gamma - kappa;
        let split: f64 = rng.random_range(0.3..0.7);
        SiteParams::new(
            6870.5,
            gamma,
            (split * external).sqrt(),
            ((1.0 - split) * external).sqrt(),
            kappa,
        )
        .unwrap()
    };
    let s1 = site(rng);
    let s2 = site(rng);
    ChainModel::new(s1, s2, rng.random_range(5.0..25.0)).unwrap()
}

fn random_modulation(rng: &mut ChaCha8Rng) -> Modulation {
    Modulation::new(
        rng.random_range(0.0..26.0),
        rng.random_range(0.0..26.0),
        rng.random_range(14.0..26.0),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
    .unwrap()
}

#[test]
fn continued_fraction_equals_banded_solve_on_random_devices() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..8 {
        let chain = random_chain(&mut rng);
        let modn = random_modulation(&mut rng);
        let omega = 6870.5 + rng.random_range(-40.0..40.0);
        for p in 1..=6 {
            let a = scattering_matrix(&chain, &modn, omega, &Truncation::Fixed(p)).unwrap();
            let b = banded_solve(&chain, &modn, omega, p).unwrap();
            let scale = a.s.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let dev = (a.s - b.s).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(dev <= 1e-10 * scale, "P={p}: dev {dev:e} vs scale {scale:e}");
        }
    }
}

#[test]
fn time_integration_tracks_frequency_domain_on_random_devices() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let settings = IntegrationSettings::default();
    for _ in 0..3 {
        let chain = random_chain(&mut rng);
        let modn = random_modulation(&mut rng);
        let omega = 6870.5 + rng.random_range(-15.0..15.0);
        let s = scattering_matrix(&chain, &modn, omega, &Truncation::default())
            .unwrap()
            .s;
        let port = rng.random_range(1..=4usize);
        let run = integrate(&chain, &modn, port, omega, &settings).unwrap();
        let scale = (0..4).map(|o| s[(o, port - 1)].norm()).fold(0.0, f64::max);
        for out in 0..4 {
            let dev = (run.extracted[out] - s[(out, port - 1)]).norm() / scale;
            assert!(dev < 1e-3, "port {port} -> {}: dev {dev:e}", out + 1);
        }
    }
}
