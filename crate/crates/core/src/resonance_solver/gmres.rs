//! Restarted GMRES for complex systems.

use num_complex::Complex64 as C;

pub(crate) struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solve `A x = b` with `x` holding the initial guess on entry.
pub(crate) fn gmres(
    apply: &mut dyn FnMut(&[C], &mut [C]),
    b: &[C],
    x: &mut [C],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = C::new(0.0, 0.0));
        return GmresOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut total = 0;
    let mut r = vec![C::new(0.0, 0.0); n];
    let mut previous = f64::INFINITY;
    loop {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        // A restart cycle that does not halve the residual means roundoff
        // has taken over.
        if rel <= rel_tol || total >= max_iter || rel > 0.5 * previous {
            return GmresOutcome { iterations: total, relative_residual: rel, converged: rel <= rel_tol };
        }
        previous = rel;
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<C>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut h = vec![vec![C::new(0.0, 0.0); m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![C::new(0.0, 0.0); m]);
        let mut g = vec![C::new(0.0, 0.0); m + 1];
        g[0] = C::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut w = vec![C::new(0.0, 0.0); n];
            apply(&v[j], &mut w);
            total += 1;
            // Modified Gram–Schmidt, applied twice for stability.
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(vi, &w);
                    h[i][j] += hij;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= hij * vk;
                    }
                }
            }
            let wn = norm(&w);
            h[j + 1][j] = C::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[j] = 1.0;
                sn[j] = C::new(0.0, 0.0);
            } else {
                cs[j] = a.norm() / den;
                let phase = if a.norm() == 0.0 { C::new(1.0, 0.0) } else { a / a.norm() };
                sn[j] = phase * bb.conj() / den;
            }
            h[j][j] = cs[j] * a + sn[j] * bb;
            h[j + 1][j] = C::new(0.0, 0.0);
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] *= cs[j];
            used = j + 1;
            let est = g[j + 1].norm() / bnorm;
            if wn == 0.0 || est <= 0.5 * rel_tol || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|z| z / wn).collect());
        }
        let mut y = vec![C::new(0.0, 0.0); used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[k]) {
                *xi += yk * vi;
            }
        }
    }
}
