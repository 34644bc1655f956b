use nalgebra::DMatrix;
use serde::Serialize;

use super::bessel::bessel_j;
use super::modes::{sine_mode, DiscMode, ModeBasis, ModeSet};
use crate::error::Result;
use crate::quadrature::gauss_legendre;

/// Angular-derivative matrix elements for a mode set, plus the projected
/// couplings of one threshold cluster.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingTable {
    /// Cluster id of the threshold.
    pub cluster: usize,
    /// `a_pq = ⟨ψ_p, ∂_φψ_q⟩`.
    pub a: DMatrix<f64>,
    /// `b_pq = ⟨ψ_p, ∂_φ²ψ_q⟩ = −⟨∂_φψ_p, ∂_φψ_q⟩`, symmetrised.
    pub b: DMatrix<f64>,
    /// `C_c^{(j,l)} = Σ_{i ∈ c} a_{i,j} a_{i,l}` for every cluster `c`, with
    /// `j, l` running over the threshold cluster.
    pub projected: Vec<DMatrix<f64>>,
    /// `‖∂_φψ_{q₀,j}‖²` for the threshold members.
    pub derivative_norms: Vec<f64>,
    /// `max |a_pq + a_qp|`.
    pub antisymmetry_residual: f64,
    pub quadrature_tol: f64,
}

impl CouplingTable {
    /// Partial sums `Σ_{c ≤ C} C_c^{(j,j)}` over clusters, in cluster order.
    pub fn parseval_partial_sums(&self, j: usize) -> Vec<f64> {
        let mut acc = 0.0;
        self.projected
            .iter()
            .map(|c| {
                acc += c[(j, j)];
                acc
            })
            .collect()
    }
}

/// Quadrature tolerance used for the coupling invariants: `10 h²` on a grid,
/// `1e-8` for closed-form modes.
pub(crate) fn quadrature_tol(modes: &ModeSet) -> f64 {
    modes.grid_step().map_or(1e-8, |h| 10.0 * h * h)
}

pub fn coupling_table(modes: &ModeSet, cluster: usize) -> Result<CouplingTable> {
    if cluster >= modes.clusters.len() {
        return Err(crate::Error::Config(format!("cluster {cluster} does not exist")));
    }
    let (a, b) = match &modes.basis {
        ModeBasis::Grid { grid, vectors } => {
            let q = vectors.ncols();
            let mut dv = DMatrix::zeros(vectors.nrows(), q);
            let mut d2v = DMatrix::zeros(vectors.nrows(), q);
            let mut out = vec![0.0; vectors.nrows()];
            for j in 0..q {
                grid.apply_angular_derivative(vectors.column(j).as_slice(), &mut out);
                dv.column_mut(j).copy_from_slice(&out);
                grid.apply_angular_second(vectors.column(j).as_slice(), &mut out);
                d2v.column_mut(j).copy_from_slice(&out);
            }
            let w = grid.weight();
            let b = vectors.tr_mul(&d2v) * w;
            (vectors.tr_mul(&dv) * w, (&b + b.transpose()) * 0.5)
        }
        ModeBasis::Rectangle { width, height, indices } => {
            rectangle_couplings(*width, *height, modes.domain.axis_offset, indices)
        }
        ModeBasis::Disc { modes, .. } => disc_couplings(modes),
    };
    Ok(CouplingTable::from_tables(modes, cluster, a, b))
}

impl CouplingTable {
    fn from_tables(modes: &ModeSet, cluster: usize, a: DMatrix<f64>, b: DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut residual: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                residual = residual.max((a[(i, j)] + a[(j, i)]).abs());
            }
        }
        let idx: Vec<usize> = modes.clusters[cluster].indices().collect();
        let m0 = idx.len();
        let projected = modes
            .clusters
            .iter()
            .map(|c| {
                DMatrix::from_fn(m0, m0, |j, l| {
                    c.indices().map(|i| a[(i, idx[j])] * a[(i, idx[l])]).sum()
                })
            })
            .collect();
        let derivative_norms = idx.iter().map(|&q| -b[(q, q)]).collect();
        CouplingTable {
            cluster,
            a,
            b,
            projected,
            derivative_norms,
            antisymmetry_residual: residual,
            quadrature_tol: quadrature_tol(modes),
        }
    }

    /// Tables for the basis in which the threshold cluster's modes are
    /// replaced by `ψ′_j = Σ_i u_ij ψ_i` (`u` orthogonal, `m₀ × m₀`).
    pub fn rotate_cluster(&self, modes: &ModeSet, u: &DMatrix<f64>) -> Result<CouplingTable> {
        let c = &modes.clusters[self.cluster];
        if u.nrows() != c.multiplicity || u.ncols() != c.multiplicity {
            return Err(crate::Error::Config("rotation size must match the cluster".into()));
        }
        let n = self.a.nrows();
        let mut p = DMatrix::identity(n, n);
        p.view_mut((c.start, c.start), (c.multiplicity, c.multiplicity)).copy_from(u);
        let a = p.transpose() * &self.a * &p;
        let b = p.transpose() * &self.b * &p;
        Ok(CouplingTable::from_tables(modes, self.cluster, a, b))
    }
}

/// One-dimensional integrals of sine modes on `[-len/2, len/2]` with the
/// coordinate measured from `centre`.
struct SineTables {
    gram: DMatrix<f64>,
    x: DMatrix<f64>,
    d: DMatrix<f64>,
    xx: DMatrix<f64>,
    dd: DMatrix<f64>,
    xd: DMatrix<f64>,
}

fn sine_tables(len: f64, centre: f64, max_index: usize) -> SineTables {
    let nodes = 3 * max_index + 60;
    let (t, w) = gauss_legendre(nodes);
    let m = max_index;
    let mut f = DMatrix::zeros(nodes, m);
    let mut df = DMatrix::zeros(nodes, m);
    let mut xs = vec![0.0; nodes];
    let mut ws = vec![0.0; nodes];
    for k in 0..nodes {
        let x = 0.5 * len * t[k];
        xs[k] = x - centre;
        ws[k] = 0.5 * len * w[k];
        for j in 0..m {
            let (v, dv) = sine_mode(len, j + 1, x);
            f[(k, j)] = v;
            df[(k, j)] = dv;
        }
    }
    let weigh = |g: &DMatrix<f64>, p: i32| {
        DMatrix::from_fn(nodes, m, |k, j| ws[k] * xs[k].powi(p) * g[(k, j)])
    };
    SineTables {
        gram: weigh(&f, 0).tr_mul(&f),
        x: weigh(&f, 1).tr_mul(&f),
        d: weigh(&f, 0).tr_mul(&df),
        xx: weigh(&f, 2).tr_mul(&f),
        dd: weigh(&df, 0).tr_mul(&df),
        xd: weigh(&f, 1).tr_mul(&df),
    }
}

fn rectangle_couplings(
    width: f64,
    height: f64,
    axis: [f64; 2],
    indices: &[(usize, usize)],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mx = indices.iter().map(|p| p.0).max().unwrap_or(1);
    let my = indices.iter().map(|p| p.1).max().unwrap_or(1);
    let tx = sine_tables(width, axis[0], mx);
    let ty = sine_tables(height, axis[1], my);
    let n = indices.len();
    let mut a = DMatrix::zeros(n, n);
    let mut g = DMatrix::zeros(n, n);
    for (p, &(px, py)) in indices.iter().enumerate() {
        for (q, &(qx, qy)) in indices.iter().enumerate() {
            let (i, j, k, l) = (px - 1, qx - 1, py - 1, qy - 1);
            a[(p, q)] = tx.x[(i, j)] * ty.d[(k, l)] - tx.d[(i, j)] * ty.x[(k, l)];
            g[(p, q)] = tx.xx[(i, j)] * ty.dd[(k, l)]
                - tx.xd[(i, j)] * ty.xd[(l, k)]
                - tx.xd[(j, i)] * ty.xd[(k, l)]
                + tx.dd[(i, j)] * ty.xx[(k, l)];
        }
    }
    (a, -g)
}

/// On the disc `∂_φ = ∂_θ` maps each cosine mode onto `−m` times its sine
/// partner, so the tables are exact and block diagonal.
fn disc_couplings(modes: &[DiscMode]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = modes.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for (p, mp) in modes.iter().enumerate() {
        let m = mp.order as f64;
        b[(p, p)] = -m * m;
        for (q, mq) in modes.iter().enumerate() {
            if mp.order == mq.order && mp.zero == mq.zero && mp.sine != mq.sine {
                a[(p, q)] = if mq.sine { m } else { -m };
            }
        }
    }
    (a, b)
}

pub(crate) fn disc_gram_residual(radius: f64, modes: &[DiscMode]) -> f64 {
    let maxz = modes.iter().map(|d| d.zero).fold(0.0, f64::max);
    let (t, w) = gauss_legendre(2 * maxz.ceil() as usize + 60);
    let mut worst: f64 = 0.0;
    for (p, mp) in modes.iter().enumerate() {
        for (q, mq) in modes.iter().enumerate() {
            let e = if p == q { 1.0 } else { 0.0 };
            let v = if mp.order != mq.order || mp.sine != mq.sine {
                0.0
            } else {
                let ang = if mp.order == 0 { 2.0 } else { 1.0 } * std::f64::consts::PI;
                let radial: f64 = t
                    .iter()
                    .zip(&w)
                    .map(|(&ti, &wi)| {
                        let r = 0.5 * radius * (ti + 1.0);
                        let m = mp.order as i64;
                        0.5 * radius
                            * wi
                            * r
                            * bessel_j(m, mp.zero * r / radius)
                            * bessel_j(m, mq.zero * r / radius)
                    })
                    .sum();
                ang * radial * mp.norm_const(radius) * mq.norm_const(radius)
            };
            worst = worst.max((v - e).abs());
        }
    }
    worst
}

pub(crate) fn rectangle_gram_residual(width: f64, height: f64, indices: &[(usize, usize)]) -> f64 {
    let mx = indices.iter().map(|p| p.0).max().unwrap_or(1);
    let my = indices.iter().map(|p| p.1).max().unwrap_or(1);
    let gx = sine_tables(width, 0.0, mx).gram;
    let gy = sine_tables(height, 0.0, my).gram;
    let mut worst: f64 = 0.0;
    for (p, &(px, py)) in indices.iter().enumerate() {
        for (q, &(qx, qy)) in indices.iter().enumerate() {
            let v = gx[(px - 1, qx - 1)] * gy[(py - 1, qy - 1)];
            let e = if p == q { 1.0 } else { 0.0 };
            worst = worst.max((v - e).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::{analytic_rectangle_modes, build_modes, Domain2D};

    #[test]
    fn analytic_square_couplings_are_antisymmetric() {
        let m = analytic_rectangle_modes(1.0, 1.0, 20).unwrap();
        let c = coupling_table(&m, 0).unwrap();
        assert!(c.antisymmetry_residual < 1e-12);
        let sums = c.parseval_partial_sums(0);
        assert!(sums.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(*sums.last().unwrap() <= c.derivative_norms[0] + 1e-12);
    }

    #[test]
    fn fd_and_analytic_norms_agree() {
        let d = Domain2D::rectangle(1.0, 1.0).unwrap();
        let fd = build_modes(&d, 1.0 / 48.0, 1).unwrap();
        let an = analytic_rectangle_modes(1.0, 1.0, 1).unwrap();
        let nf = coupling_table(&fd, 0).unwrap().derivative_norms[0];
        let na = coupling_table(&an, 0).unwrap().derivative_norms[0];
        assert!((nf / na - 1.0).abs() < 5e-3, "{nf} {na}");
    }
}
