//! Lowest eigenpairs of the five-point Dirichlet Laplacian.
//!
//! Shift-invert at zero through a banded Cholesky factor, with a block Krylov
//! subspace rebuilt around the current Ritz vectors on every restart.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::Grid2D;
use crate::error::{Error, Result};

const SEED: u64 = 0x7157_0001;
const DENSE_LIMIT: usize = 400;
const MAX_RESTARTS: usize = 300;
const KRYLOV_DEPTH: usize = 3;
const EXTRA: usize = 8;

/// Lower band of a symmetric positive definite matrix and its Cholesky factor.
struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row-major: entry (i, i - bw + t) lives at `i * (bw + 1) + t`.
    l: Vec<f64>,
}

impl BandCholesky {
    fn factor(n: usize, bw: usize, mut l: Vec<f64>) -> Result<Self> {
        let w = bw + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(Error::Geometry(
                            "discrete Laplacian is not positive definite".into(),
                        ));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    fn solve(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + (i + bw - k)] * x[k];
            }
            x[i] = s / self.l[i * w + bw];
        }
    }
}

fn laplacian_band(grid: &Grid2D) -> (usize, Vec<f64>) {
    let n = grid.len();
    let bw = grid.bandwidth().max(1);
    let w = bw + 1;
    let inv_h2 = 1.0 / (grid.step * grid.step);
    let mut band = vec![0.0; n * w];
    for i in 0..n {
        band[i * w + bw] = 4.0 * inv_h2;
        for m in grid.neighbors(i).into_iter().flatten() {
            if m < i {
                band[i * w + (m + bw - i)] = -inv_h2;
            }
        }
    }
    (bw, band)
}

/// Result of the eigensolve: ascending eigenvalues and grid-orthonormal
/// eigenvectors (columns, normalised so that `h² Σ ψ² = 1`).
pub(crate) struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub(crate) fn lowest_eigenpairs(grid: &Grid2D, count: usize, tol: f64) -> Result<EigenPairs> {
    let n = grid.len();
    if count > n {
        return Err(Error::Geometry(format!(
            "requested {count} modes but the grid has only {n} interior nodes"
        )));
    }
    let (values, mut vectors) = if n <= DENSE_LIMIT {
        dense_pairs(grid, count)
    } else {
        krylov_pairs(grid, count, tol)?
    };
    let scale = 1.0 / grid.step;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
        let peak = col.amax();
        let lead = col.iter().find(|v| v.abs() > 0.5 * peak).copied().unwrap_or(1.0);
        if lead < 0.0 {
            col.neg_mut();
        }
        col *= scale;
    }
    Ok(EigenPairs { values, vectors })
}

fn dense_pairs(grid: &Grid2D, count: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = grid.len();
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        grid.apply_laplacian(&e, &mut col);
        e[j] = 0.0;
        a.set_column(j, &nalgebra::DVector::from_column_slice(&col));
    }
    let eig = SymmetricEigen::new(a);
    sorted_pairs(&eig.eigenvalues.as_slice().to_vec(), &eig.eigenvectors, count, true)
}

fn sorted_pairs(
    theta: &[f64],
    vecs: &DMatrix<f64>,
    count: usize,
    ascending: bool,
) -> (Vec<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        let c = theta[a].total_cmp(&theta[b]);
        if ascending { c } else { c.reverse() }
    });
    let values = order[..count].iter().map(|&i| theta[i]).collect();
    let vectors = DMatrix::from_columns(
        &order[..count].iter().map(|&i| vecs.column(i).into_owned()).collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Classical Gram–Schmidt against the accepted columns, repeated while a pass
/// removes more than half of the remaining norm. Columns that vanish to
/// rounding level are dropped. Returns the number of columns kept.
fn orthonormalize(basis: &mut DMatrix<f64>, k: usize, m: usize) -> usize {
    let mut kept = k;
    for j in k..k + m {
        let original = basis.column(j).norm();
        let mut norm = original;
        for _ in 0..5 {
            if kept == 0 {
                break;
            }
            let proj = basis.columns(0, kept).tr_mul(&basis.column(j));
            let corr = basis.columns(0, kept) * proj;
            let mut c = basis.column_mut(j);
            c -= corr;
            let after = c.norm();
            let settled = after > 0.5 * norm;
            norm = after;
            if settled {
                break;
            }
        }
        if norm > 1e-13 * original {
            let col = basis.column(j) / norm;
            basis.set_column(kept, &col);
            kept += 1;
        }
    }
    kept
}

fn krylov_pairs(grid: &Grid2D, count: usize, tol: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = grid.len();
    let (bw, band) = laplacian_band(grid);
    let chol = BandCholesky::factor(n, bw, band)?;
    let p = (count + EXTRA).min(n / (KRYLOV_DEPTH + 1)).max(count);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.gen::<f64>() - 0.5);
    let mut worst = f64::INFINITY;
    let mut tmp = vec![0.0; n];
    let mut ax = vec![0.0; n];

    for _ in 0..MAX_RESTARTS {
        let dim = p * (KRYLOV_DEPTH + 1);
        let mut v = DMatrix::zeros(n, dim);
        v.columns_mut(0, p).copy_from(&x);
        let mut kept = orthonormalize(&mut v, 0, p);
        let mut block_start = 0;
        for _ in 0..KRYLOV_DEPTH {
            let block_end = kept;
            for j in block_start..block_end {
                tmp.copy_from_slice(v.column(j).as_slice());
                chol.solve(&mut tmp);
                v.column_mut(kept + j - block_start).copy_from_slice(&tmp);
            }
            let added = block_end - block_start;
            block_start = block_end;
            kept = orthonormalize(&mut v, kept, added);
        }
        let basis = v.columns(0, kept).into_owned();
        // Rayleigh–Ritz with the Laplacian itself for accurate low eigenvalues.
        let mut av = DMatrix::zeros(n, kept);
        for j in 0..kept {
            grid.apply_laplacian(basis.column(j).as_slice(), &mut ax);
            av.column_mut(j).copy_from_slice(&ax);
        }
        let mut h = basis.tr_mul(&av);
        h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let (vals, coeffs) = sorted_pairs(eig.eigenvalues.as_slice(), &eig.eigenvectors, p, true);
        let ritz = &basis * &coeffs;
        let aritz = &av * &coeffs;
        worst = 0.0;
        for j in 0..count {
            let r = (aritz.column(j) - ritz.column(j) * vals[j]).norm() / vals[j];
            worst = f64::max(worst, r);
        }
        if worst <= tol {
            let vectors = ritz.columns(0, count).into_owned();
            return Ok((vals[..count].to_vec(), vectors));
        }
        x = ritz;
    }
    Err(Error::EigenNotConverged {
        iterations: MAX_RESTARTS,
        residual: worst,
    })
}
