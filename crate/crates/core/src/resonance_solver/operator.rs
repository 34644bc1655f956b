use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::gmres::gmres;
use super::ResonanceProblem;
use crate::error::{Error, Result};
use crate::kernels1d::{kappa_unchecked, sweep_apply, KernelKind};

/// `T(δ, k) = δ⁻¹ η⁻¹ W(δ) η⁻¹ A₀(k)` on `span{ψ_q} ⊗ L²(−L, L)`, stored as an
/// `n × Q` array (column `q` is the axial profile of channel `q`).
pub struct DiscretizedOperator {
    n: usize,
    q: usize,
    h: f64,
    eta: Vec<f64>,
    eta_w: Vec<f64>,
    /// `η⁻¹ε`, `η⁻¹ε′`, `η⁻¹ε²`.
    s_eps: Vec<f64>,
    s_eps_prime: Vec<f64>,
    s_eps_sq: Vec<f64>,
    a: DMatrix<f64>,
    at: DMatrix<f64>,
    bt: DMatrix<f64>,
    offsets: Vec<f64>,
    active: Vec<usize>,
    threshold_modes: Vec<usize>,
    tol: f64,
    restart: usize,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

impl DiscretizedOperator {
    pub(crate) fn new(p: &ResonanceProblem) -> Self {
        let grid = &p.grid;
        let weight = crate::kernels1d::WeightConfig { exponent: p.config.weight_exponent };
        let eta = grid.sample(|x| weight.eta(x));
        let (mut s1, mut s2, mut s3) = (Vec::new(), Vec::new(), Vec::new());
        for (&x, &e) in grid.nodes.iter().zip(&eta) {
            let (v, dv) = p.profile.eval(x);
            s1.push(v / e);
            s2.push(dv / e);
            s3.push(v * v / e);
        }
        let a = p.couplings.a.clone();
        let b = &p.couplings.b;
        let q = a.nrows();
        let mut offsets = vec![0.0; q];
        for cl in &p.modes.clusters {
            for i in cl.indices() {
                offsets[i] = if cl.id == p.cluster { 0.0 } else { cl.eigenvalue - p.threshold() };
            }
        }
        let active = (0..q)
            .filter(|&j| (0..q).any(|i| a[(i, j)] != 0.0 || b[(i, j)] != 0.0))
            .collect();
        Self {
            n: grid.len(),
            q,
            h: grid.step,
            eta_w: eta.iter().zip(&grid.weights).map(|(e, w)| e * w).collect(),
            eta,
            s_eps: s1,
            s_eps_prime: s2,
            s_eps_sq: s3,
            at: a.transpose(),
            bt: b.transpose(),
            a,
            offsets,
            active,
            threshold_modes: p.modes.clusters[p.cluster].indices().collect(),
            tol: p.config.gmres_tol,
            restart: p.config.gmres_restart,
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.q
    }

    /// Channel momenta at `k`; fails if `k` reaches a neighbouring threshold.
    pub fn kappas(&self, k: C) -> Result<Vec<C>> {
        let mut nearest = f64::INFINITY;
        for &c in &self.offsets {
            if c != 0.0 {
                nearest = nearest.min(c.abs());
            }
        }
        if k.norm_sqr() >= nearest {
            return Err(Error::Branch { modulus: k.norm(), radius: nearest.sqrt() });
        }
        Ok(self.offsets.iter().map(|&c| kappa_unchecked(c, k)).collect())
    }

    /// `out = T u`.
    pub fn apply(&self, delta: f64, kappas: &[C], u: &[C], out: &mut [C]) {
        let (n, q) = (self.n, self.q);
        let mut z1r = DMatrix::<f64>::zeros(n, q);
        let mut z1i = DMatrix::<f64>::zeros(n, q);
        let mut z2r = DMatrix::<f64>::zeros(n, q);
        let mut z2i = DMatrix::<f64>::zeros(n, q);
        let mut f = vec![C::new(0.0, 0.0); n];
        let mut g = vec![C::new(0.0, 0.0); n];
        let mut d = vec![C::new(0.0, 0.0); n];
        let c = self.h * self.h / 12.0;
        for &ch in &self.active {
            let col = &u[ch * n..(ch + 1) * n];
            for i in 0..n {
                f[i] = col[i] * self.eta_w[i];
            }
            let kind = if self.offsets[ch] == 0.0 {
                KernelKind::ThresholdRegularized
            } else {
                KernelKind::Resolvent
            };
            sweep_apply(kind, kappas[ch], self.h, &f, &mut g);
            sweep_apply(KernelKind::Derivative, kappas[ch], self.h, &f, &mut d);
            // Euler–Maclaurin terms at the kink of the kernel on the diagonal:
            // the trapezoid sums are off by `+(h²/12)φ` and `−(h²/12)φ′`,
            // `φ = ηu`, which leaves an O(h⁴) error.
            for i in 0..n {
                let phi = col[i] * self.eta[i];
                let dphi = if i == 0 {
                    col[1] * self.eta[1] - phi
                } else if i + 1 == n {
                    phi - col[i - 1] * self.eta[i - 1]
                } else {
                    0.5 * (col[i + 1] * self.eta[i + 1] - col[i - 1] * self.eta[i - 1])
                } / self.h;
                g[i] -= c * phi;
                d[i] += c * dphi;
            }
            for i in 0..n {
                let v1 = -2.0 * self.s_eps[i] * d[i] - self.s_eps_prime[i] * g[i];
                let v2 = -self.s_eps_sq[i] * g[i];
                z1r[(i, ch)] = v1.re;
                z1i[(i, ch)] = v1.im;
                z2r[(i, ch)] = v2.re;
                z2i[(i, ch)] = v2.im;
            }
        }
        let re = &z1r * &self.at + (&z2r * &self.bt) * delta;
        let im = &z1i * &self.at + (&z2i * &self.bt) * delta;
        for (o, (r, i)) in out.iter_mut().zip(re.iter().zip(im.iter())) {
            *o = C::new(*r, *i);
        }
    }

    /// Dense matrix of `T(δ, k)`, column by column. Only for small problems.
    pub fn to_dense(&self, delta: f64, k: C) -> Result<DMatrix<C>> {
        let kap = self.kappas(k)?;
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = vec![C::new(0.0, 0.0); dim];
        let mut col = vec![C::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = C::new(1.0, 0.0);
            self.apply(delta, &kap, &e, &mut col);
            m.column_mut(j).copy_from_slice(&col);
            e[j] = C::new(0.0, 0.0);
        }
        Ok(m)
    }

    /// Right-hand side `Φ_j` for each threshold mode `j`.
    pub fn phi(&self, delta: f64) -> Vec<Vec<C>> {
        let n = self.n;
        self.threshold_modes
            .iter()
            .map(|&j| {
                let mut v = vec![C::new(0.0, 0.0); self.dim()];
                for p in 0..self.q {
                    let (ap, bp) = (self.a[(p, j)], self.bt[(j, p)]);
                    if ap == 0.0 && bp == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        let s = ap * self.s_eps_prime[i] + delta * bp * self.s_eps_sq[i];
                        v[p * n + i] = C::new(0.0, -0.5 * s);
                    }
                }
                v
            })
            .collect()
    }

    /// `⟨u, ψ_l ⊗ η⟩` for the threshold modes, bilinear in `u`.
    pub fn pair_with_threshold(&self, u: &[C]) -> Vec<C> {
        let n = self.n;
        self.threshold_modes
            .iter()
            .map(|&l| (0..n).map(|i| u[l * n + i] * self.eta_w[i]).sum())
            .collect()
    }

    /// Solve `(I + δT) x = Φ_j` for all threshold modes.
    pub fn solve(&self, delta: f64, k: C) -> Result<(Vec<Vec<C>>, SolveStats)> {
        let kap = self.kappas(k)?;
        let mut stats = SolveStats::default();
        let mut sols = Vec::new();
        for rhs in self.phi(delta) {
            let mut x = rhs.clone();
            let mut apply = |u: &[C], out: &mut [C]| {
                self.apply(delta, &kap, u, out);
                for (o, v) in out.iter_mut().zip(u) {
                    *o = v + delta * *o;
                }
            };
            let o = gmres(&mut apply, &rhs, &mut x, self.tol, self.restart, 20 * self.restart);
            if !o.converged {
                let est = delta * self.spectral_radius(k, 60)?;
                return Err(Error::DeltaTooLarge {
                    delta,
                    norm_estimate: est,
                    detail: format!(
                        "GMRES stalled at relative residual {:.3e} after {} iterations",
                        o.relative_residual, o.iterations
                    ),
                });
            }
            stats.iterations += o.iterations;
            stats.relative_residual = stats.relative_residual.max(o.relative_residual);
            sols.push(x);
        }
        Ok((sols, stats))
    }

    /// `w(δ, k)`, the `m₀ × m₀` correction in `M = k I + w`.
    pub fn w_matrix(&self, delta: f64, k: C) -> Result<(DMatrix<C>, SolveStats)> {
        let (sols, stats) = self.solve(delta, k)?;
        let m0 = self.threshold_modes.len();
        let mut w = DMatrix::zeros(m0, m0);
        for (j, x) in sols.iter().enumerate() {
            for (l, v) in self.pair_with_threshold(x).into_iter().enumerate() {
                w[(j, l)] = delta * v;
            }
        }
        Ok((w, stats))
    }

    pub fn m_matrix(&self, delta: f64, k: C) -> Result<DMatrix<C>> {
        let (w, _) = self.w_matrix(delta, k)?;
        let m0 = w.nrows();
        Ok(w + DMatrix::identity(m0, m0) * k)
    }

    pub fn det_m(&self, delta: f64, k: C) -> Result<C> {
        Ok(self.m_matrix(delta, k)?.determinant())
    }

    /// Power-iteration estimate of the spectral radius of `T(0, k)`.
    pub fn spectral_radius(&self, k: C, iterations: usize) -> Result<f64> {
        let kap = self.kappas(k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x7157_0002);
        let mut x: Vec<C> =
            (0..self.dim()).map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let mut y = vec![C::new(0.0, 0.0); self.dim()];
        let norm = |v: &[C]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n0 = norm(&x);
        x.iter_mut().for_each(|v| *v /= n0);
        let mut logs = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            self.apply(0.0, &kap, &x, &mut y);
            let ny = norm(&y);
            if ny == 0.0 {
                return Ok(0.0);
            }
            logs.push(ny.ln());
            for (a, b) in x.iter_mut().zip(&y) {
                *a = b / ny;
            }
        }
        // Geometric mean over the second half damps transient growth.
        let tail = &logs[iterations / 2..];
        Ok((tail.iter().sum::<f64>() / tail.len() as f64).exp())
    }

    pub fn threshold_modes(&self) -> &[usize] {
        &self.threshold_modes
    }
}
