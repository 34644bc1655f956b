//! Gauss–Legendre rules shared by the main numerical path.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Golub–Welsch).
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    pairs.into_iter().unzip()
}

const PANEL_NODES: usize = 10;

/// Composite 10-point Gauss–Legendre over the given breakpoints, each panel
/// split into `split` equal pieces.
pub(crate) fn composite<F: Fn(f64) -> Complex64>(breaks: &[f64], split: usize, f: &F) -> Complex64 {
    thread_local! {
        static RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(PANEL_NODES);
    }
    RULE.with(|(t, w)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for pair in breaks.windows(2) {
            let step = (pair[1] - pair[0]) / split as f64;
            for s in 0..split {
                let a = pair[0] + s as f64 * step;
                let (c, r) = (a + 0.5 * step, 0.5 * step);
                for (ti, wi) in t.iter().zip(w) {
                    acc += f(c + r * ti) * (wi * r);
                }
            }
        }
        acc
    })
}

/// Composite rule refined by doubling until two successive values agree to
/// `rel` relative (or `abs` absolute). Returns the finer value.
pub(crate) fn composite_converged<F: Fn(f64) -> Complex64>(
    breaks: &[f64],
    start_split: usize,
    rel: f64,
    abs: f64,
    f: F,
) -> Complex64 {
    let mut split = start_split.max(1);
    let mut prev = composite(breaks, split, &f);
    for _ in 0..14 {
        split *= 2;
        let next = composite(breaks, split, &f);
        if (next - prev).norm() <= rel * next.norm() + abs {
            return next;
        }
        prev = next;
    }
    prev
}
