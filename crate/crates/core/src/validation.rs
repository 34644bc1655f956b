//! Invariant checks run against one configured problem.

use num_complex::Complex64 as C;
use serde::Serialize;

use crate::error::Result;
use crate::kernels1d::{resolvent_form, resolvent_form_prime};
use crate::resonance_solver::{cauchy_check, ResonanceProblem};

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance, detail }
    }
}

/// Tolerance on mode orthonormality: quadrature-limited on a grid, tight for
/// closed-form modes.
pub fn orthonormality_tol(problem: &ResonanceProblem) -> f64 {
    problem.modes.grid_step().map_or(1e-10, |h| 10.0 * h * h)
}

/// Run the suite. `delta` is used for the analyticity and imaginary-axis
/// checks.
pub fn run_property_suite(problem: &ResonanceProblem, delta: f64) -> Result<Vec<PropertyCheck>> {
    let modes = &problem.modes;
    let cp = &problem.couplings;
    let mut out = Vec::new();

    out.push(PropertyCheck::at_most(
        "orthonormality",
        modes.orthonormality_residual(),
        orthonormality_tol(problem),
        format!("max |⟨ψ_p, ψ_q⟩ − δ_pq| over {} modes", modes.len()),
    ));

    out.push(PropertyCheck::at_most(
        "a_antisymmetry",
        cp.antisymmetry_residual,
        cp.quadrature_tol,
        "max |a_pq + a_qp|".into(),
    ));

    let mut worst_drop: f64 = 0.0;
    let mut worst_excess: f64 = 0.0;
    for (j, norm) in cp.derivative_norms.iter().enumerate() {
        let sums = cp.parseval_partial_sums(j);
        for w in sums.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        worst_excess = worst_excess.max(sums.last().copied().unwrap_or(0.0) - norm);
    }
    out.push(PropertyCheck::at_most(
        "parseval_monotone",
        worst_drop.max(worst_excess),
        cp.quadrature_tol,
        "partial sums of C_q^{(j,j)} must not decrease nor exceed ‖∂_φψ_j‖²".into(),
    ));

    let mut worst_psd: f64 = 0.0;
    for block in &cp.projected {
        let min = block.clone().symmetric_eigen().eigenvalues.min();
        worst_psd = worst_psd.max(-min);
    }
    out.push(PropertyCheck::at_most(
        "coupling_blocks_psd",
        worst_psd,
        cp.quadrature_tol,
        "most negative eigenvalue of the C_q blocks".into(),
    ));

    if !problem.profile.is_zero() {
        let thr = problem.threshold();
        let above = modes.clusters[problem.cluster + 1].eigenvalue;
        let c = above - thr;
        let zero = C::new(0.0, 0.0);
        let j = resolvent_form(&problem.profile, above, thr, zero, &problem.grid)?;
        let jp = resolvent_form_prime(&problem.profile, above, thr, zero, &problem.grid)?;
        let eps = problem.profile.norm_sq();
        out.push(PropertyCheck::at_most(
            "resolvent_identity",
            (jp + c * j - eps).norm() / eps,
            1e-8,
            format!("|⟨ε′,R ε′⟩ + c J − ‖ε‖²| / ‖ε‖² at c = {c:.6}"),
        ));
    }

    let op = problem.operator();
    if problem.cluster == 0 {
        let (w, _) = op.w_matrix(delta, C::new(0.0, 1e-3))?;
        let (mut re, mut abs): (f64, f64) = (0.0, 0.0);
        for v in w.iter() {
            re = re.max(v.re.abs());
            abs = abs.max(v.norm());
        }
        let value = if abs == 0.0 { 0.0 } else { re / abs };
        out.push(PropertyCheck::at_most(
            "w_imaginary_on_axis",
            value,
            1e-10,
            format!("max |Re w| / max |w| at k = 0.001i, δ = {delta}"),
        ));
    }

    let cc = cauchy_check(problem, delta, problem.config.contour_nodes)?;
    let value = if cc.center.norm() == 0.0 { cc.contour_mean.norm() } else { cc.relative_error };
    out.push(PropertyCheck::at_most(
        "cauchy_analyticity",
        value,
        1e-6,
        format!("det M(0) = {:.6e} vs contour mean {:.6e} ({} nodes)", cc.center, cc.contour_mean, cc.nodes),
    ));
    Ok(out)
}
