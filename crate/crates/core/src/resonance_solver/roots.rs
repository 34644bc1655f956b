use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::Serialize;

use super::operator::DiscretizedOperator;
use super::{ResolvedConfig, ResonanceProblem};
use crate::error::{Error, Result};
use crate::threshold_asymptotics::{compute_upsilon, predicted_resonances, small_eigenvalues};

#[derive(Clone, Debug, Serialize)]
pub struct Root {
    pub k: C,
    /// Nullity of `M(δ, k)` at the root.
    pub multiplicity: usize,
    pub predicted: C,
    /// `|k − k_pred| / |k_pred|`.
    pub relative_deviation: f64,
    /// `|Re k| / |k|`.
    pub real_fraction: f64,
    pub branch_residual: f64,
    pub det_residual: f64,
    pub newton_iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourCount {
    /// Zeros of `det M` inside the circle, with multiplicity.
    pub winding: i64,
    /// Order of the zero at the branch point `k = 0` (nullity of `M(δ, 0)`);
    /// it is part of `winding` but never a resonance.
    pub origin_order: usize,
    /// `winding − origin_order`.
    pub resonance_count: i64,
    pub radius: f64,
    pub evaluations: usize,
    pub min_abs_det: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub delta: f64,
    pub cluster: usize,
    pub threshold: f64,
    pub multiplicity: usize,
    /// Eigenvalues `ν_l` of the second-order matrix.
    pub upsilon_eigenvalues: Vec<C>,
    pub predictions: Vec<C>,
    pub roots: Vec<Root>,
    pub contour: Option<ContourCount>,
    /// `δ` times the estimated spectral radius of `T`.
    pub contraction_estimate: f64,
    pub notes: Vec<String>,
    pub config: ResolvedConfig,
}

impl ResonanceReport {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CauchyCheck {
    pub center: C,
    pub contour_mean: C,
    pub relative_error: f64,
    pub nodes: usize,
}

/// Options for [`find_resonances`].
#[derive(Clone, Debug, Default)]
pub struct SearchOptions {
    pub extra_seeds: Vec<C>,
    pub count_poles: bool,
}

fn nearest_eigenvalue(m: &DMatrix<C>, target: Option<C>) -> C {
    let eig = small_eigenvalues(m);
    let t = target.unwrap_or(C::new(0.0, 0.0));
    eig.into_iter()
        .min_by(|a, b| (a - t).norm().total_cmp(&(b - t).norm()))
        .expect("non-empty cluster")
}

struct NewtonResult {
    k: C,
    value: C,
    iterations: usize,
}

fn newton(
    op: &DiscretizedOperator,
    delta: f64,
    seed: C,
    scale: f64,
    cfg: &ResolvedConfig,
) -> Result<NewtonResult> {
    let mut k = seed;
    let mut target = None;
    for it in 1..=cfg.max_newton {
        let sigma = nearest_eigenvalue(&op.m_matrix(delta, k)?, target);
        let h = 1e-4 * k.norm().max(scale);
        let up = nearest_eigenvalue(&op.m_matrix(delta, k + C::new(0.0, h))?, Some(sigma));
        let dn = nearest_eigenvalue(&op.m_matrix(delta, k - C::new(0.0, h))?, Some(sigma));
        let slope = (up - dn) / C::new(0.0, 2.0 * h);
        if slope.norm() == 0.0 || !slope.is_finite() {
            if sigma.norm() == 0.0 {
                return Ok(NewtonResult { k, value: sigma, iterations: it });
            }
            break;
        }
        let step = sigma / slope;
        k -= step;
        target = Some(sigma - step * slope);
        if k.norm() >= cfg.radius {
            return Err(Error::RootNotConverged {
                seed: format!("{seed}"),
                detail: format!("iterate left the working disc (|k| = {:.3e})", k.norm()),
            });
        }
        if step.norm() <= cfg.tol_k * k.norm().max(scale) {
            let value = nearest_eigenvalue(&op.m_matrix(delta, k)?, Some(C::new(0.0, 0.0)));
            return Ok(NewtonResult { k, value, iterations: it });
        }
    }
    Err(Error::RootNotConverged {
        seed: format!("{seed}"),
        detail: format!("no convergence in {} Newton steps", cfg.max_newton),
    })
}

fn nullity(m: &DMatrix<C>, tol: f64) -> usize {
    let sv = m.clone().singular_values();
    sv.iter().filter(|&&s| s <= tol).count()
}

/// Contraction estimate `δ ρ(T)`, sampled at the centre and the bottom of
/// the contour where the kernels grow fastest.
fn contraction(op: &DiscretizedOperator, delta: f64, cfg: &ResolvedConfig) -> Result<f64> {
    let a = op.spectral_radius(C::new(0.0, 0.0), 40)?;
    let b = op.spectral_radius(C::new(0.0, -cfg.contour_radius), 40)?;
    Ok(delta * a.max(b))
}

/// Locate the resonances near the threshold for one coupling `δ`.
pub fn find_resonances(
    problem: &ResonanceProblem,
    delta: f64,
    options: &SearchOptions,
) -> Result<ResonanceReport> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Config(format!("δ must be positive (got {delta})")));
    }
    let cfg = &problem.config;
    let op = problem.operator();
    let ups = compute_upsilon(
        &problem.modes,
        &problem.couplings,
        problem.cluster,
        &problem.profile,
        &problem.grid,
    )?;
    let predictions = predicted_resonances(&ups.eigenvalues, delta);
    let contraction_estimate = contraction(&op, delta, cfg)?;
    if contraction_estimate >= 0.5 {
        return Err(Error::DeltaTooLarge {
            delta,
            norm_estimate: contraction_estimate,
            detail: "the Neumann series for (I + δT)^{-1} is not certified (need δρ(T) < 1/2)".into(),
        });
    }
    let nu_max = ups.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = (delta * delta * nu_max).max(1e-12 * delta * delta);
    let mut notes = Vec::new();
    let mut found: Vec<(C, NewtonResult)> = Vec::new();
    let mut seeds: Vec<C> = predictions.clone();
    seeds.extend(options.extra_seeds.iter().copied());
    let mut failures = 0;
    for &seed in &seeds {
        match newton(&op, delta, seed, scale, cfg) {
            Ok(r) => {
                if found.iter().all(|(_, f)| (f.k - r.k).norm() > 1e-6 * scale.max(r.k.norm())) {
                    found.push((seed, r));
                }
            }
            Err(e) => {
                failures += 1;
                notes.push(format!("seed {seed:.6e}: {e}"));
            }
        }
    }
    if failures == seeds.len() {
        return Err(Error::RootNotConverged {
            seed: format!("{seeds:?}"),
            detail: "every seed failed".into(),
        });
    }
    let mut roots = Vec::new();
    for (seed, r) in found {
        if r.k.norm() <= 10.0 * cfg.tol_k * scale {
            notes.push(format!(
                "zero of det M at the threshold itself (k = {:.3e}); not a resonance",
                r.k
            ));
            continue;
        }
        let m = op.m_matrix(delta, r.k)?;
        let predicted = predictions
            .iter()
            .copied()
            .min_by(|a, b| (a - r.k).norm().total_cmp(&(b - r.k).norm()))
            .unwrap_or(seed);
        if r.k.re > 0.0 && r.k.re.abs() > 1e-6 * r.k.norm() {
            notes.push(format!("root {:.6e} has Re k > 0 (unphysical sheet)", r.k));
        }
        roots.push(Root {
            k: r.k,
            multiplicity: nullity(&m, 1e-6 * r.k.norm()).max(1),
            predicted,
            relative_deviation: if predicted.norm() > 0.0 {
                (r.k - predicted).norm() / predicted.norm()
            } else {
                f64::INFINITY
            },
            real_fraction: r.k.re.abs() / r.k.norm(),
            branch_residual: r.value.norm(),
            det_residual: m.determinant().norm(),
            newton_iterations: r.iterations,
        });
    }
    let contour = if options.count_poles {
        let c = count_poles_contour(problem, delta, cfg.contour_radius, cfg.contour_nodes)?;
        let total: usize = roots.iter().map(|r| r.multiplicity).sum();
        if c.resonance_count < total as i64 {
            notes.push(format!(
                "contour count {} is below the number of located roots {total}",
                c.resonance_count
            ));
        }
        if c.origin_order > 0 {
            notes.push(format!(
                "det M vanishes at k = 0 to order {}; counted in the winding, not as a resonance",
                c.origin_order
            ));
        }
        Some(c)
    } else {
        None
    };
    Ok(ResonanceReport {
        delta,
        cluster: problem.cluster,
        threshold: problem.threshold(),
        multiplicity: problem.multiplicity(),
        upsilon_eigenvalues: ups.eigenvalues,
        predictions,
        roots,
        contour,
        contraction_estimate,
        notes,
        config: cfg.clone(),
    })
}

fn arg_step(a: C, b: C) -> f64 {
    (b / a).arg()
}

/// Zeros of `det M(δ, ·)` inside `|k| = radius`, by accumulating the phase
/// along the circle. Intervals where the phase moves by more than `π/4` are
/// bisected; the radius is nudged inward if the determinant nearly vanishes
/// on the contour.
pub fn count_poles_contour(
    problem: &ResonanceProblem,
    delta: f64,
    radius: f64,
    nodes: usize,
) -> Result<ContourCount> {
    let op = problem.operator();
    let mut rad = radius;
    for _attempt in 0..4 {
        let det = |t: f64| op.det_m(delta, C::from_polar(rad, t));
        let mut evals = 0;
        let mut ts: Vec<f64> = (0..nodes).map(|i| 2.0 * PI * i as f64 / nodes as f64).collect();
        let mut ds = Vec::with_capacity(nodes);
        for &t in &ts {
            ds.push(det(t)?);
            evals += 1;
        }
        ts.push(2.0 * PI);
        ds.push(ds[0]);
        let scale = ds.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let mut min_abs = ds.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
        if min_abs <= 1e-8 * scale {
            rad *= 0.97;
            continue;
        }
        let mut total = 0.0;
        let mut i = 0;
        let mut stuck = false;
        while i + 1 < ts.len() {
            let step = arg_step(ds[i], ds[i + 1]);
            if step.abs() > PI / 4.0 {
                if ts[i + 1] - ts[i] < 2.0 * PI / (nodes as f64 * 4096.0) {
                    stuck = true;
                    break;
                }
                let tm = 0.5 * (ts[i] + ts[i + 1]);
                let dm = det(tm)?;
                evals += 1;
                min_abs = min_abs.min(dm.norm());
                ts.insert(i + 1, tm);
                ds.insert(i + 1, dm);
                continue;
            }
            total += step;
            i += 1;
        }
        if stuck || min_abs <= 1e-8 * scale {
            rad *= 0.97;
            continue;
        }
        let w = total / (2.0 * PI);
        if (w - w.round()).abs() > 1e-6 {
            return Err(Error::Contour { radius: rad, detail: format!("non-integer winding {w}") });
        }
        let origin_order = origin_order(problem, &op, delta)?;
        let winding = w.round() as i64;
        return Ok(ContourCount {
            winding,
            origin_order,
            resonance_count: winding - origin_order as i64,
            radius: rad,
            evaluations: evals,
            min_abs_det: min_abs,
        });
    }
    Err(Error::Contour {
        radius: rad,
        detail: "det M kept nearly vanishing on the contour after perturbing the radius".into(),
    })
}

fn origin_order(problem: &ResonanceProblem, op: &DiscretizedOperator, delta: f64) -> Result<usize> {
    let strength: f64 = problem.couplings.derivative_norms.iter().sum::<f64>() * problem.profile.norm_sq();
    let tol = 1e-10 * delta * delta * (1.0 + strength);
    Ok(nullity(&op.m_matrix(delta, C::new(0.0, 0.0))?, tol))
}

/// Compare `det M(δ, 0)` with its mean over the contour (trapezoid rule on
/// the circle, exponentially accurate for functions analytic in the disc).
/// The node count starts at `nodes` and doubles, reusing earlier values, until
/// two successive means agree to `1e-9 |det M(δ, 0)|` (or to roundoff
/// on the contour) or 16× `nodes` is
/// reached. At a degenerate threshold the centre value is `O(δ^{2m₀})` while
/// the contour values are `O(ρ^{m₀})`, so the base rule is often too coarse.
pub fn cauchy_check(problem: &ResonanceProblem, delta: f64, nodes: usize) -> Result<CauchyCheck> {
    let op = problem.operator();
    let rad = problem.config.contour_radius;
    let center = op.det_m(delta, C::new(0.0, 0.0))?;
    let at = |t: f64| op.det_m(delta, C::from_polar(rad, 2.0 * PI * t));
    let mut n = nodes.max(1);
    let (mut sum, mut peak) = (C::new(0.0, 0.0), 0.0f64);
    for i in 0..n {
        let v = at(i as f64 / n as f64)?;
        peak = peak.max(v.norm());
        sum += v;
    }
    let mut mean = sum / n as f64;
    while n < 16 * nodes.max(1) {
        for i in 0..n {
            let v = at((2 * i + 1) as f64 / (2 * n) as f64)?;
            peak = peak.max(v.norm());
            sum += v;
        }
        n *= 2;
        let next = sum / n as f64;
        let change = (next - mean).norm();
        mean = next;
        if change <= (1e-9 * center.norm()).max(1e-14 * peak) {
            break;
        }
    }
    Ok(CauchyCheck {
        center,
        contour_mean: mean,
        relative_error: (mean - center).norm() / center.norm(),
        nodes: n,
    })
}
