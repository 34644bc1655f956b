//! Brute-force reference computations for tests and acceptance runs.
//!
//! Nothing here calls into the grid, kernel or asymptotics code: quadrature
//! is adaptive Simpson written out below, rectangle modes are re-derived in
//! closed form, and channel momenta are recomputed from scratch.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::cross_section::{Domain2D, Shape};
use crate::error::{Error, Result};
use crate::twist_profile::TwistProfile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleConfig {
    /// Absolute tolerance handed to each adaptive integration.
    pub tol: f64,
    pub max_depth: u32,
    /// Largest mode index enumerated in each direction.
    pub enumeration_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { tol: 1e-11, max_depth: 48, enumeration_cap: 64 }
    }
}

impl OracleConfig {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-8) {
            return Err(Error::Config(format!("oracle tolerance must lie in (0, 1e-8] (got {})", self.tol)));
        }
        Ok(())
    }
}

/// Value with the accumulated Richardson error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: C,
    pub error: f64,
}

fn simpson_rec<F: Fn(f64) -> C>(
    f: &F,
    a: f64,
    b: f64,
    fa: C,
    fm: C,
    fb: C,
    whole: C,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> C {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || (delta.norm() <= 15.0 * tol && depth < 44) {
        *err += delta.norm() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)
}

/// Adaptive Simpson on `[a, b]`, started from 16 panels so narrow features
/// are not skipped.
pub fn adaptive_simpson<F: Fn(f64) -> C>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Estimate {
    let mut err = 0.0;
    let mut value = C::new(0.0, 0.0);
    if b <= a {
        return Estimate { value, error: 0.0 };
    }
    let panels = 16;
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let (x0, x1) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
        let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
        value += simpson_rec(&f, x0, x1, f0, fm, f1, whole, tol / panels as f64, max_depth, &mut err);
    }
    Estimate { value, error: err }
}

/// Half-width outside which `|ε|` and `|ε′|` are below `1e-17` of their peak,
/// found by outward doubling.
fn profile_extent(profile: &TwistProfile) -> f64 {
    if let Some((a, b)) = profile.support() {
        return a.abs().max(b.abs());
    }
    let w = profile.width();
    let peak = (0..=400)
        .map(|i| {
            let x = -4.0 * w + 8.0 * w * i as f64 / 400.0;
            let (e, d) = profile.eval(x);
            e.abs().max(d.abs())
        })
        .fold(0.0, f64::max);
    let mut s = w;
    loop {
        let tail = (0..=50)
            .map(|i| {
                let x = s + s * i as f64 / 50.0;
                let (e, d) = profile.eval(x);
                let (e2, d2) = profile.eval(-x);
                e.abs().max(d.abs()).max(e2.abs()).max(d2.abs())
            })
            .fold(0.0, f64::max);
        if tail <= 1e-17 * peak || s > 1e7 * w {
            return s;
        }
        s *= 2.0;
    }
}

/// Channel momentum recomputed for the oracle: kernel `e^{−κ|d|}/(2κ)`.
fn oracle_kappa(c: f64, k: C) -> C {
    let i = C::new(0.0, 1.0);
    if c > 0.0 {
        (c - k * k).sqrt()
    } else {
        // (i/2p) e^{ip|d|} with p = √(k² + |c|), principal branch.
        let p = (k * k + c.abs()).sqrt();
        -i * p
    }
}

/// `∫∫ a(x) K(x, y) b(y) dy dx` with the inner integral split at `y = x`.
pub fn oracle_double_integral(
    a: impl Fn(f64) -> f64,
    kernel: impl Fn(f64, f64) -> C,
    b: impl Fn(f64) -> f64,
    extent: f64,
    cfg: &OracleConfig,
) -> Result<Estimate> {
    cfg.check()?;
    let inner_tol = 0.1 * cfg.tol / (2.0 * extent).max(1.0);
    let total_err = std::cell::Cell::new(0.0f64);
    let outer = adaptive_simpson(
        |x| {
            let av = a(x);
            if av == 0.0 {
                return C::new(0.0, 0.0);
            }
            let l = adaptive_simpson(|y| kernel(x, y) * b(y), -extent, x, inner_tol, cfg.max_depth);
            let r = adaptive_simpson(|y| kernel(x, y) * b(y), x, extent, inner_tol, cfg.max_depth);
            total_err.set(total_err.get().max(l.error + r.error));
            av * (l.value + r.value)
        },
        -extent,
        extent,
        0.5 * cfg.tol,
        cfg.max_depth,
    );
    let error = outer.error + 2.0 * extent * total_err.get();
    if error > cfg.tol * (1.0 + outer.value.norm()) * 10.0 {
        return Err(Error::Quadrature { achieved: error });
    }
    Ok(Estimate { value: outer.value, error })
}

/// `⟨ε, (D² + c − k²)^{-1} ε⟩` by brute-force double integration.
pub fn oracle_j(profile: &TwistProfile, c: f64, k: C, cfg: &OracleConfig) -> Result<Estimate> {
    oracle_form(profile, c, k, cfg, false)
}

/// `⟨ε′, (D² + c − k²)^{-1} ε′⟩` by brute-force double integration.
pub fn oracle_j_prime(profile: &TwistProfile, c: f64, k: C, cfg: &OracleConfig) -> Result<Estimate> {
    oracle_form(profile, c, k, cfg, true)
}

fn oracle_form(profile: &TwistProfile, c: f64, k: C, cfg: &OracleConfig, prime: bool) -> Result<Estimate> {
    if c == 0.0 {
        return Err(Error::Config("oracle J needs c ≠ 0".into()));
    }
    let kappa = oracle_kappa(c, k);
    let f = |x: f64| if prime { profile.eval(x).1 } else { profile.eval(x).0 };
    oracle_double_integral(
        f,
        |x, y| (-kappa * (x - y).abs()).exp() / (2.0 * kappa),
        f,
        profile_extent(profile),
        cfg,
    )
}

fn real_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, cfg: &OracleConfig) -> f64 {
    adaptive_simpson(|x| C::new(f(x), 0.0), a, b, cfg.tol, cfg.max_depth).value.re
}

/// Closed-form sine mode on `[-L/2, L/2]` and its derivative.
fn sine(len: f64, m: usize, x: f64) -> (f64, f64) {
    let w = m as f64 * PI / len;
    let arg = w * (x + len / 2.0);
    let c = (2.0 / len).sqrt();
    (c * arg.sin(), c * w * arg.cos())
}

/// Everything the oracle knows about one rectangle channel.
#[derive(Clone, Debug, Serialize)]
pub struct OracleChannel {
    pub m: usize,
    pub n: usize,
    pub eigenvalue: f64,
    /// `⟨ψ_q, ∂_φψ₁⟩`.
    pub coupling: f64,
}

/// Rectangle channels sorted by eigenvalue with their couplings to the ground
/// state, from separable one-dimensional quadrature.
pub fn oracle_rectangle_channels(
    a: f64,
    b: f64,
    axis: [f64; 2],
    count: usize,
    cfg: &OracleConfig,
) -> Result<Vec<OracleChannel>> {
    cfg.check()?;
    let cap = cfg.enumeration_cap;
    let mut all = Vec::new();
    for m in 1..=cap {
        for n in 1..=cap {
            all.push((PI * PI * ((m * m) as f64 / (a * a) + (n * n) as f64 / (b * b)), m, n));
        }
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    if count > all.len() || all[count.max(1) - 1].1 == cap || all[count.max(1) - 1].2 == cap {
        return Err(Error::Config("oracle enumeration cap too small for the requested count".into()));
    }
    let (ha, hb) = (a / 2.0, b / 2.0);
    let x_moment = |p: usize| real_integral(|x| sine(a, p, x).0 * (x - axis[0]) * sine(a, 1, x).0, -ha, ha, cfg);
    let x_deriv = |p: usize| real_integral(|x| sine(a, p, x).0 * sine(a, 1, x).1, -ha, ha, cfg);
    let y_moment = |p: usize| real_integral(|y| sine(b, p, y).0 * (y - axis[1]) * sine(b, 1, y).0, -hb, hb, cfg);
    let y_deriv = |p: usize| real_integral(|y| sine(b, p, y).0 * sine(b, 1, y).1, -hb, hb, cfg);
    Ok(all[..count]
        .iter()
        .map(|&(lam, m, n)| {
            let (xm, xd) = (x_moment(m), x_deriv(m));
            let (ym, yd) = (y_moment(n), y_deriv(n));
            // ∂_φψ₁ = x̃ X₁ Y₁′ − ỹ X₁′ Y₁.
            OracleChannel { m, n, eigenvalue: lam, coupling: xm * yd - xd * ym }
        })
        .collect())
}

/// `‖∂_φψ₁‖²` on the rectangle by nested two-dimensional adaptive quadrature.
pub fn oracle_rectangle_derivative_norm(a: f64, b: f64, axis: [f64; 2], cfg: &OracleConfig) -> Result<f64> {
    cfg.check()?;
    let (ha, hb) = (a / 2.0, b / 2.0);
    let field = |x: f64, y: f64| {
        let (fx, dfx) = sine(a, 1, x);
        let (fy, dfy) = sine(b, 1, y);
        (x - axis[0]) * fx * dfy - (y - axis[1]) * dfx * fy
    };
    Ok(real_integral(
        |x| real_integral(|y| field(x, y).powi(2), -hb, hb, cfg),
        -ha,
        ha,
        cfg,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleMu {
    pub accelerated: f64,
    pub direct: f64,
    pub accelerated_tail: f64,
    pub direct_tail: f64,
    pub derivative_norm: f64,
    pub channels_used: usize,
}

/// First-threshold coefficient on a rectangle, assembled from closed-form
/// modes and brute-force resolvent forms, in both series forms.
pub fn oracle_mu_rectangle(
    domain: &Domain2D,
    profile: &TwistProfile,
    count: usize,
    cfg: &OracleConfig,
) -> Result<OracleMu> {
    let Shape::Rectangle { width: a, height: b } = domain.shape else {
        return Err(Error::Unsupported("the μ oracle handles rectangles only".into()));
    };
    let axis = domain.axis_offset;
    let channels = oracle_rectangle_channels(a, b, axis, count + 1, cfg)?;
    let lam1 = channels[0].eigenvalue;
    if channels[1].eigenvalue - lam1 < 1e-9 * lam1 {
        return Err(Error::Unsupported("ground state is degenerate".into()));
    }
    let norm = oracle_rectangle_derivative_norm(a, b, axis, cfg)?;
    let extent = profile_extent(profile);
    let eps_sq = real_integral(|x| profile.eval(x).0.powi(2), -extent, extent, cfg);
    let eps_prime_sq = real_integral(|x| profile.eval(x).1.powi(2), -extent, extent, cfg);
    let (mut direct, mut corr, mut mass) = (0.0, 0.0, 0.0);
    for ch in &channels[1..count] {
        let cq = ch.coupling * ch.coupling;
        mass += cq;
        // Selection rules leave many channels uncoupled.
        if cq < 1e-24 {
            continue;
        }
        let c = ch.eigenvalue - lam1;
        let j = oracle_j(profile, c, C::new(0.0, 0.0), cfg)?.value.re;
        let jp = oracle_j_prime(profile, c, C::new(0.0, 0.0), cfg)?.value.re;
        direct += 0.5 * c * cq * j;
        corr += 0.5 * cq * jp;
    }
    let rest = (norm - mass).max(0.0);
    let next = channels[count].eigenvalue;
    Ok(OracleMu {
        accelerated: 0.5 * norm * eps_sq - corr,
        direct,
        accelerated_tail: 0.5 * eps_prime_sq * rest / (next - lam1),
        direct_tail: 0.5 * eps_sq * rest,
        derivative_norm: norm,
        channels_used: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_on_smooth_integrand() {
        let e = adaptive_simpson(|x| C::new(x.exp(), 0.0), 0.0, 1.0, 1e-12, 40);
        assert!((e.value.re - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn large_offset_bound() {
        let p = TwistProfile::gaussian(1.0, 1.0).unwrap();
        let j = oracle_j(&p, 1e6, C::new(0.0, 0.0), &OracleConfig::default()).unwrap();
        assert!(j.value.re > 0.0 && j.value.re <= p.norm_sq() / 1e6);
    }

    #[test]
    fn disc_is_rejected() {
        let p = TwistProfile::gaussian(1.0, 1.0).unwrap();
        let d = Domain2D::disc(1.0).unwrap();
        assert!(matches!(
            oracle_mu_rectangle(&d, &p, 5, &OracleConfig::default()),
            Err(Error::Unsupported(_))
        ));
    }
}
