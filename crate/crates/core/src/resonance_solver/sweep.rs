use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use super::roots::{find_resonances, ResonanceReport, SearchOptions};
use super::ResonanceProblem;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub report: ResonanceReport,
}

/// Least-squares fit `k(δ) ≈ c₂δ² + c₃δ³` of one tracked root branch.
#[derive(Clone, Debug, Serialize)]
pub struct BranchFit {
    pub nu: C,
    pub c2: C,
    pub c3: C,
    /// `−iν`, the leading coefficient expected from the asymptotics.
    pub predicted_c2: C,
    pub c2_relative_error: f64,
    /// Slope of `log |k(δ) + iνδ²|` against `log δ`.
    pub remainder_order: f64,
    pub residual: f64,
    pub deltas: Vec<f64>,
    pub roots: Vec<C>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    pub fits: Vec<BranchFit>,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn fit_branch(nu: C, deltas: &[f64], roots: &[C]) -> Result<BranchFit> {
    if deltas.len() < 3 || deltas.len() != roots.len() {
        return Err(Error::Config("a branch fit needs at least three (δ, k) pairs".into()));
    }
    let n = deltas.len();
    let design = DMatrix::from_fn(n, 2, |i, j| deltas[i].powi(2 + j as i32));
    let svd = design.clone().svd(true, true);
    let solve = |rhs: DVector<f64>| svd.solve(&rhs, 1e-14).expect("SVD with vectors");
    let re = solve(DVector::from_iterator(n, roots.iter().map(|k| k.re)));
    let im = solve(DVector::from_iterator(n, roots.iter().map(|k| k.im)));
    let c2 = C::new(re[0], im[0]);
    let c3 = C::new(re[1], im[1]);
    let residual = deltas
        .iter()
        .zip(roots)
        .map(|(&d, k)| (k - c2 * d * d - c3 * d * d * d).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let predicted_c2 = -C::i() * nu;
    let (lx, ly): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(roots)
        .map(|(&d, k)| (d.ln(), (k - predicted_c2 * d * d).norm().max(f64::MIN_POSITIVE).ln()))
        .unzip();
    Ok(BranchFit {
        nu,
        c2,
        c3,
        predicted_c2,
        c2_relative_error: (c2 - predicted_c2).norm() / predicted_c2.norm(),
        remainder_order: slope(&lx, &ly),
        residual,
        deltas: deltas.to_vec(),
        roots: roots.to_vec(),
    })
}

/// Solve at each `δ` (ascending, in parallel) and fit every branch that was
/// found at all of them. A point that recovers fewer roots than the best
/// point is re-solved, in order, seeded with its neighbour's roots rescaled
/// by `(δ/δ_nb)²`.
pub fn sweep(problem: &ResonanceProblem, deltas: &[f64], count_poles: bool) -> Result<SweepReport> {
    let mut ds = deltas.to_vec();
    ds.sort_by(f64::total_cmp);
    let mut points = ds
        .par_iter()
        .map(|&d| {
            let opts = SearchOptions { extra_seeds: Vec::new(), count_poles };
            find_resonances(problem, d, &opts).map(|report| SweepPoint { delta: d, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points.iter().map(|p| p.report.total_multiplicity()).max().unwrap_or(0);
    for i in 0..points.len() {
        if points[i].report.total_multiplicity() >= best {
            continue;
        }
        let Some(nb) = (0..points.len())
            .filter(|&j| j != i && points[j].report.total_multiplicity() == best)
            .min_by(|&a, &b| (a.abs_diff(i)).cmp(&b.abs_diff(i)))
        else {
            continue;
        };
        let s = (points[i].delta / points[nb].delta).powi(2);
        let opts = SearchOptions {
            extra_seeds: points[nb].report.roots.iter().map(|r| r.k * s).collect(),
            count_poles,
        };
        points[i].report = find_resonances(problem, points[i].delta, &opts)?;
    }
    let mut fits = Vec::new();
    let Some(first) = points.first() else {
        return Ok(SweepReport { points, fits });
    };
    let mut branches: Vec<C> = Vec::new();
    for nu in &first.report.upsilon_eigenvalues {
        if branches.iter().all(|b| (b - nu).norm() > 1e-8 * nu.norm().max(1e-300)) {
            branches.push(*nu);
        }
    }
    for &nu in &branches {
        if nu.norm() == 0.0 {
            continue;
        }
        let mut roots = Vec::new();
        for p in &points {
            let d2 = p.delta * p.delta;
            let target = -C::i() * nu * d2;
            let Some(r) = p
                .report
                .roots
                .iter()
                .min_by(|a, b| (a.k - target).norm().total_cmp(&(b.k - target).norm()))
            else {
                continue;
            };
            let own = (r.k - target).norm();
            if branches.iter().any(|&o| o != nu && (r.k + C::i() * o * d2).norm() < own) {
                return Err(Error::BranchTracking(format!(
                    "at δ = {} the root {:.6e} lies closer to another branch than to ν = {nu:.6e}",
                    p.delta, r.k
                )));
            }
            roots.push(r.k);
        }
        if roots.len() == points.len() && roots.len() >= 3 {
            fits.push(fit_branch(nu, &ds, &roots)?);
        }
    }
    Ok(SweepReport { points, fits })
}
