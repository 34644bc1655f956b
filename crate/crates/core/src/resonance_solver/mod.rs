//! Non-perturbative resonance search near one threshold.
//!
//! The weighted resolvent near the threshold splits into a rank-`m₀` pole
//! part and an analytic remainder. Resonances are the zeros of
//! `det M(δ, k)` with `M = k I + w(δ, k)` and
//! `w_jl = δ ⟨(I + δT)^{-1} Φ_j, ψ_l ⊗ η⟩`.

mod gmres;
mod operator;
mod roots;
mod sweep;

pub use operator::{DiscretizedOperator, SolveStats};
pub use roots::{
    cauchy_check, count_poles_contour, find_resonances, CauchyCheck, ContourCount, ResonanceReport,
    Root, SearchOptions,
};
pub use sweep::{fit_branch, sweep, BranchFit, SweepPoint, SweepReport};

use serde::{Deserialize, Serialize};

use crate::cross_section::{coupling_table, CouplingTable, ModeSet};
use crate::error::{Error, Result};
use crate::kernels1d::{Grid1D, WeightConfig};
use crate::twist_profile::{validate_decay, TwistProfile};

/// Numerical parameters of the solver. `None` fields are derived from the
/// threshold gap `r₀` and the profile's decay rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Working radius `r`; default `0.6 r₀`.
    pub radius: Option<f64>,
    /// Weight exponent `N`; default midway between `r` and `α/2`, or
    /// `1.25 r` for profiles decaying faster than any exponential.
    pub weight_exponent: Option<f64>,
    /// Override of the profile's exponential decay rate `α`.
    pub decay_rate: Option<f64>,
    pub half_length: f64,
    pub step: f64,
    /// Relative tolerance on root positions.
    pub tol_k: f64,
    /// Contour radius `ρ`; default `0.5 r₀`.
    pub contour_radius: Option<f64>,
    pub contour_nodes: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub max_newton: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            radius: None,
            weight_exponent: None,
            decay_rate: None,
            half_length: 15.0,
            step: 1.0 / 32.0,
            tol_k: 1e-10,
            contour_radius: None,
            contour_nodes: 64,
            gmres_tol: 1e-11,
            gmres_restart: 60,
            max_newton: 40,
        }
    }
}

/// Parameters after defaults have been filled in and checked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub gap_radius: f64,
    pub radius: f64,
    pub weight_exponent: f64,
    pub decay_rate: f64,
    pub half_length: f64,
    pub step: f64,
    pub tol_k: f64,
    pub contour_radius: f64,
    pub contour_nodes: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub max_newton: usize,
}

impl SolverConfig {
    pub fn resolve(&self, gap_radius: f64, profile: &TwistProfile) -> Result<ResolvedConfig> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(gap_radius > 0.0) {
            return cfg("threshold gap radius must be positive".into());
        }
        let radius = self.radius.unwrap_or(0.6 * gap_radius);
        if !(radius > 0.0 && radius < gap_radius) {
            return cfg(format!("working radius r = {radius} must lie in (0, r₀ = {gap_radius})"));
        }
        let alpha = self.decay_rate.unwrap_or_else(|| profile.decay_rate());
        if !(alpha > 2.0 * radius) {
            return cfg(format!(
                "profile decay rate α = {alpha} is too slow: need α/2 > r = {radius}"
            ));
        }
        let weight_exponent = self.weight_exponent.unwrap_or(if alpha.is_finite() {
            0.5 * (radius + 0.5 * alpha)
        } else {
            1.25 * radius
        });
        WeightConfig { exponent: weight_exponent }.validate(radius, alpha)?;
        let contour_radius = self.contour_radius.unwrap_or(0.5 * gap_radius);
        if !(contour_radius > 0.0 && contour_radius < radius) {
            return cfg(format!("contour radius ρ = {contour_radius} must lie in (0, r = {radius})"));
        }
        if self.half_length < 10.0 * profile.width() {
            return cfg(format!(
                "axis half-length L = {} must be at least 10 profile widths ({})",
                self.half_length,
                10.0 * profile.width()
            ));
        }
        if !(self.tol_k > 0.0 && self.tol_k < 1e-3) {
            return cfg(format!("tol_k = {} must lie in (0, 1e-3)", self.tol_k));
        }
        if !(self.gmres_tol > 0.0 && self.gmres_tol < 1e-6) {
            return cfg(format!("gmres_tol = {} must lie in (0, 1e-6)", self.gmres_tol));
        }
        if self.contour_nodes < 16 || self.gmres_restart < 2 || self.max_newton == 0 {
            return cfg("contour_nodes ≥ 16, gmres_restart ≥ 2 and max_newton ≥ 1 are required".into());
        }
        Ok(ResolvedConfig {
            gap_radius,
            radius,
            weight_exponent,
            decay_rate: alpha,
            half_length: self.half_length,
            step: self.step,
            tol_k: self.tol_k,
            contour_radius,
            contour_nodes: self.contour_nodes,
            gmres_tol: self.gmres_tol,
            gmres_restart: self.gmres_restart,
            max_newton: self.max_newton,
        })
    }
}

/// Everything the solver needs at one threshold: modes, couplings, profile
/// and the discretised axis.
pub struct ResonanceProblem {
    pub modes: ModeSet,
    pub couplings: CouplingTable,
    pub profile: TwistProfile,
    pub cluster: usize,
    pub config: ResolvedConfig,
    pub grid: Grid1D,
}

impl ResonanceProblem {
    pub fn new(
        modes: ModeSet,
        cluster: usize,
        profile: TwistProfile,
        config: &SolverConfig,
    ) -> Result<Self> {
        if cluster >= modes.clusters.len() {
            return Err(Error::Config(format!("cluster {cluster} does not exist")));
        }
        if cluster + 1 >= modes.clusters.len() {
            return Err(Error::Config(
                "the mode set must contain at least one cluster above the threshold".into(),
            ));
        }
        let config = config.resolve(modes.clusters[cluster].gap_radius, &profile)?;
        if !profile.is_zero() {
            validate_decay(&profile, 2.0 * config.weight_exponent)?;
        }
        let couplings = coupling_table(&modes, cluster)?;
        let grid = Grid1D::new(config.half_length, config.step)?;
        Ok(Self { modes, couplings, profile, cluster, config, grid })
    }

    pub fn multiplicity(&self) -> usize {
        self.modes.clusters[self.cluster].multiplicity
    }

    pub fn threshold(&self) -> f64 {
        self.modes.clusters[self.cluster].eigenvalue
    }

    pub fn operator(&self) -> DiscretizedOperator {
        DiscretizedOperator::new(self)
    }
}
