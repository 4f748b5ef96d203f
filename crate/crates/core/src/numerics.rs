//! Small numeric helpers shared across modules.

use std::f64::consts::{PI, TAU};

/// Wraps an angle to the half-open interval (-pi, pi], with exactly -pi
/// reported as +pi.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU); // [0, 2pi)
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Golden-section minimization of `f` on `[a, b]` to an interval width of
/// `xtol`. Returns `(x_min, f_min)`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > xtol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// True when the slice is strictly increasing and non-empty.
pub(crate) fn strictly_increasing(xs: &[f64]) -> bool {
    !xs.is_empty() && xs.windows(2).all(|w| w[0] < w[1])
}

/// Evenly spaced grid over `[a, b]` with `n >= 2` points (or the singleton
/// `[a]` for `n == 1`).
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + i as f64 * step })
        .collect()
}
