//! Integer-order Bessel functions and their positive zeros.

use std::f64::consts::PI;

/// `J_m(x) = (2π)⁻¹ ∫₀^{2π} cos(mτ − x sin τ) dτ`; the trapezoid rule on the
/// full period converges geometrically once the node count exceeds `m + |x|`.
pub(crate) fn bessel_j(m: i64, x: f64) -> f64 {
    let n = 2 * (m.unsigned_abs() as usize + x.abs().ceil() as usize) + 48;
    let dt = 2.0 * PI / n as f64;
    let s: f64 = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            (m as f64 * t - x * t.sin()).cos()
        })
        .sum();
    s / n as f64
}

fn bessel_j_prime(m: i64, x: f64) -> f64 {
    0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))
}

/// Positive zeros of `J_m` not exceeding `limit`, ascending.
pub(crate) fn bessel_zeros(m: usize, limit: f64) -> Vec<f64> {
    let m = m as i64;
    let step = 0.25;
    let mut zeros = Vec::new();
    let mut x = (m as f64).max(step);
    let mut fx = bessel_j(m, x);
    while x < limit + step {
        let x1 = x + step;
        let f1 = bessel_j(m, x1);
        if fx == 0.0 || fx.signum() != f1.signum() {
            let (mut lo, mut hi) = (x, x1);
            let mut z = 0.5 * (lo + hi);
            for _ in 0..60 {
                let f = bessel_j(m, z);
                if f.signum() == bessel_j(m, lo).signum() {
                    lo = z;
                } else {
                    hi = z;
                }
                let newton = z - f / bessel_j_prime(m, z);
                z = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if (hi - lo) < 1e-15 * z || f == 0.0 {
                    break;
                }
            }
            if z <= limit {
                zeros.push(z);
            }
        }
        x = x1;
        fx = f1;
    }
    zeros
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values() {
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(3, 7.5) - (-0.258_060_913_193_460_3)).abs() < 1e-14);
        let z = bessel_zeros(0, 10.0);
        assert_eq!(z.len(), 3);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-13);
        assert!((bessel_zeros(1, 4.0)[0] - 3.831_705_970_207_512).abs() < 1e-13);
    }
}
