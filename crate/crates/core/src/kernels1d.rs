//! One-dimensional longitudinal resolvent kernels, continued in the momentum
//! variable `k`.
//!
//! Every channel kernel is written as `e^{−κ|x−y|}/(2κ)` with a channel
//! momentum `κ(k)`; the usual oscillatory form `(i/2p) e^{ip|x−y|}` is the
//! same expression with `p = iκ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::twist_profile::TwistProfile;

pub type C64 = Complex64;

const I: C64 = C64::new(0.0, 1.0);

/// Uniform grid on `[−L, L]` with trapezoid weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    pub half_length: f64,
    pub step: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid1D {
    /// The step is adjusted down so that `L/h` is an integer.
    pub fn new(half_length: f64, step: f64) -> Result<Self> {
        if !(half_length > 0.0 && step > 0.0) || !half_length.is_finite() || step >= half_length {
            return Err(Error::Config(format!(
                "axis grid needs 0 < h₃ < L (got L = {half_length}, h₃ = {step})"
            )));
        }
        let m = (half_length / step).round().max(1.0) as usize;
        let h = half_length / m as f64;
        let n = 2 * m + 1;
        let nodes = (0..n).map(|i| -half_length + i as f64 * h).collect();
        let mut weights = vec![h; n];
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        Ok(Self { half_length, step: h, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.half_length, self.step / factor as f64).expect("refinement of a valid grid")
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

/// Exponential weight `η(x) = e^{−N⟨x⟩}`, `⟨x⟩ = √(1+x²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub exponent: f64,
}

impl WeightConfig {
    pub fn eta(&self, x: f64) -> f64 {
        (-self.exponent * (1.0 + x * x).sqrt()).exp()
    }

    /// Checks `r < N < α/2`.
    pub fn validate(&self, radius: f64, alpha: f64) -> Result<()> {
        let n = self.exponent;
        if !(n > radius) {
            return Err(Error::Config(format!(
                "weight exponent N = {n} must exceed the working radius r = {radius}"
            )));
        }
        if !(n < alpha / 2.0) {
            return Err(Error::Config(format!(
                "weight exponent N = {n} must be below α/2 = {}",
                alpha / 2.0
            )));
        }
        Ok(())
    }
}

/// Longitudinal momentum of one transverse channel relative to a threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchMomentum {
    pub lambda_q: f64,
    pub lambda_th: f64,
}

impl BranchMomentum {
    pub fn new(lambda_q: f64, lambda_th: f64) -> Self {
        Self { lambda_q, lambda_th }
    }

    pub fn offset(&self) -> f64 {
        self.lambda_q - self.lambda_th
    }

    /// `κ(k)` with `e^{−κ|x−y|}/(2κ)` the kernel of `(D² + c − k²)^{-1}`:
    /// `√(c − k²)` above the threshold, `−i√(k² + |c|)` below it (continued
    /// from the quarter plane `Re k, Im k > 0`), and `−ik` on it.
    pub fn kappa(&self, k: C64) -> Result<C64> {
        let c = self.offset();
        if c != 0.0 && k.norm_sqr() >= c.abs() {
            return Err(Error::Branch { modulus: k.norm(), radius: c.abs().sqrt() });
        }
        Ok(kappa_unchecked(c, k))
    }

    /// `p = iκ`, so the kernel reads `(i/2p) e^{ip|x−y|}`.
    pub fn momentum(&self, k: C64) -> Result<C64> {
        Ok(I * self.kappa(k)?)
    }
}

pub(crate) fn kappa_unchecked(c: f64, k: C64) -> C64 {
    if c > 0.0 {
        (C64::from(c) - k * k).sqrt()
    } else if c < 0.0 {
        -I * (k * k - c).sqrt()
    } else {
        -I * k
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `e^{−κ|d|}/(2κ)`.
    Resolvent,
    /// `(e^{−κ|d|} − 1)/(2κ)`, with limit `−|d|/2` at `κ = 0`.
    ThresholdRegularized,
    /// `−½ sign(d) e^{−κ|d|}`, the `x`-derivative of either kernel above.
    Derivative,
}

/// `(e^{−z} − 1)/z`, by series near zero.
pub(crate) fn expm1_over(z: C64) -> C64 {
    if z.norm() >= 0.1 {
        return ((-z).exp() - 1.0) / z;
    }
    // Σ_{n≥1} (−1)ⁿ zⁿ⁻¹/n!
    let mut sum = C64::from(0.0);
    let mut term = C64::from(-1.0);
    for n in 1..16 {
        sum += term;
        term *= -z / (n + 1) as f64;
    }
    sum
}

/// `(e^{−κ|d|} − 1)/(2κ)` for a scalar distance, series near `κd = 0`.
pub(crate) fn threshold_kernel(kappa: C64, d: f64) -> C64 {
    let z = kappa * d.abs();
    if z.norm() < 1e-4 {
        // −d/2 (1 − z/2 + z²/6 − z³/24)
        -0.5 * d.abs() * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
    } else {
        ((-z).exp() - 1.0) / (2.0 * kappa)
    }
}

/// Apply a channel kernel on a uniform grid of step `h` in O(n):
/// `out_i = Σ_j K(x_i − x_j) f_j` (quadrature weights belong in `f`).
pub fn sweep_apply(kind: KernelKind, kappa: C64, h: f64, f: &[C64], out: &mut [C64]) {
    let n = f.len();
    let rho = (-kappa * h).exp();
    match kind {
        KernelKind::Resolvent | KernelKind::Derivative => {
            let mut p = C64::from(0.0);
            for i in 0..n {
                if i > 0 {
                    p = rho * (p + f[i - 1]);
                }
                out[i] = p;
            }
            let mut s = C64::from(0.0);
            for i in (0..n).rev() {
                if i + 1 < n {
                    s = rho * (s + f[i + 1]);
                }
                out[i] = match kind {
                    KernelKind::Resolvent => (out[i] + f[i] + s) / (2.0 * kappa),
                    _ => -0.5 * (out[i] - s),
                };
            }
        }
        KernelKind::ThresholdRegularized => {
            // g_{i+1} = ρ g_i + ((ρ − 1)/κ) Σ_{j≤i} f_j, and mirrored.
            let c = h * expm1_over(kappa * h);
            let mut g = C64::from(0.0);
            let mut acc = C64::from(0.0);
            for i in 0..n {
                if i > 0 {
                    acc += f[i - 1];
                    g = rho * g + c * acc;
                }
                out[i] = g;
            }
            let mut g = C64::from(0.0);
            let mut acc = C64::from(0.0);
            for i in (0..n).rev() {
                if i + 1 < n {
                    acc += f[i + 1];
                    g = rho * g + c * acc;
                }
                out[i] = 0.5 * (out[i] + g);
            }
        }
    }
}

fn kernel_entry(kind: KernelKind, kappa: C64, d: f64) -> C64 {
    match kind {
        KernelKind::Resolvent => (-kappa * d.abs()).exp() / (2.0 * kappa),
        KernelKind::ThresholdRegularized => threshold_kernel(kappa, d),
        KernelKind::Derivative => {
            if d == 0.0 {
                C64::from(0.0)
            } else {
                -0.5 * d.signum() * (-kappa * d.abs()).exp()
            }
        }
    }
}

fn check_kind(kind: KernelKind, c: f64) -> Result<()> {
    match (kind, c == 0.0) {
        (KernelKind::Resolvent, true) => Err(Error::Config(
            "the plain resolvent kernel is singular on the threshold channel".into(),
        )),
        (KernelKind::ThresholdRegularized, false) => Err(Error::Config(
            "the regularised kernel applies only to the threshold channel".into(),
        )),
        _ => Ok(()),
    }
}

/// Dense η-weighted kernel matrix, quadrature weights included:
/// `η(x_i) K(x_i − x_j) η(x_j) w_j` for the resolvent and regularised kinds,
/// `K(x_i − x_j) η(x_j) w_j` for the derivative kind.
pub fn weighted_kernel_matrix(
    kind: KernelKind,
    lambda_q: f64,
    lambda_th: f64,
    k: C64,
    grid: &Grid1D,
    weights: &WeightConfig,
) -> Result<DMatrix<C64>> {
    let branch = BranchMomentum::new(lambda_q, lambda_th);
    check_kind(kind, branch.offset())?;
    let kappa = branch.kappa(k)?;
    let eta = grid.sample(|x| weights.eta(x));
    let n = grid.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let left = if kind == KernelKind::Derivative { 1.0 } else { eta[i] };
        kernel_entry(kind, kappa, grid.nodes[i] - grid.nodes[j]) * left * eta[j] * grid.weights[j]
    }))
}

/// Quadratic form `Σ_i w_i a_i Σ_j K_ij w_j a_j` by sweeping.
fn trapezoid_form(kind: KernelKind, kappa: C64, grid: &Grid1D, a: &[f64]) -> C64 {
    let f: Vec<C64> = a.iter().zip(&grid.weights).map(|(v, w)| C64::from(v * w)).collect();
    let mut g = vec![C64::from(0.0); f.len()];
    sweep_apply(kind, kappa, grid.step, &f, &mut g);
    f.iter().zip(&g).map(|(x, y)| x * y).sum()
}

/// Romberg extrapolation over steps `h, h/2, h/4, h/8`. The trapezoid error
/// of these kernel forms has an even expansion in `h`.
fn romberg(grid: &Grid1D, eval: impl Fn(&Grid1D) -> C64) -> C64 {
    let mut t: Vec<C64> = (0..4).map(|l| eval(&grid.refined(1 << l))).collect();
    let mut f = 4.0;
    for level in 1..4 {
        for i in (level..4).rev() {
            t[i] = (f * t[i] - t[i - 1]) / (f - 1.0);
        }
        f *= 4.0;
    }
    t[3]
}

fn form(
    profile: &TwistProfile,
    lambda_q: f64,
    lambda_th: f64,
    k: C64,
    grid: &Grid1D,
    prime: bool,
) -> Result<C64> {
    let branch = BranchMomentum::new(lambda_q, lambda_th);
    if branch.offset() == 0.0 {
        return Err(Error::Config(
            "resolvent form is undefined on the threshold channel itself".into(),
        ));
    }
    let kappa = branch.kappa(k)?;
    Ok(romberg(grid, |g| {
        let a = g.sample(|x| if prime { profile.eps_prime(x) } else { profile.eps(x) });
        trapezoid_form(KernelKind::Resolvent, kappa, g, &a)
    }))
}

/// `J_q(k) = ⟨ε, (D₃² + λ_q − λ_th − k²)^{-1} ε⟩`, continued in `k`.
pub fn resolvent_form(
    profile: &TwistProfile,
    lambda_q: f64,
    lambda_th: f64,
    k: C64,
    grid: &Grid1D,
) -> Result<C64> {
    form(profile, lambda_q, lambda_th, k, grid, false)
}

/// `⟨ε′, (D₃² + λ_q − λ_th − k²)^{-1} ε′⟩`, computed directly from `ε′`.
pub fn resolvent_form_prime(
    profile: &TwistProfile,
    lambda_q: f64,
    lambda_th: f64,
    k: C64,
    grid: &Grid1D,
) -> Result<C64> {
    form(profile, lambda_q, lambda_th, k, grid, true)
}
