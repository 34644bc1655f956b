use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twistres::cross_section::{Domain2D, Shape};
use twistres::resonance_solver::SolverConfig;
use twistres::twist_profile::{make_profile, ProfileSpec};

use crate::error::CliError;

/// How transverse modes are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeMethod {
    /// Closed form for rectangles and centred discs, finite differences otherwise.
    Auto,
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModeOptions {
    /// Number of retained modes `Q` (raised to complete the last cluster).
    pub count: usize,
    pub method: ModeMethod,
    /// Cross-section grid step for finite-difference modes; default is the
    /// domain's feature size over 40.
    pub grid_step: Option<f64>,
    /// Absolute eigenvalue tolerance for grouping finite-difference modes.
    pub cluster_tol: Option<f64>,
}

impl Default for ModeOptions {
    fn default() -> Self {
        Self { count: 60, method: ModeMethod::Auto, grid_step: None, cluster_tol: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self { dir: PathBuf::from("twistres-out"), format: Format::Both }
    }
}

fn default_deltas() -> Vec<f64> {
    vec![0.02, 0.04, 0.08]
}

/// One run: geometry, profile, numerics and command parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain2D,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub modes: ModeOptions,
    /// Cluster index of the threshold under study (0 is the bottom of the
    /// spectrum).
    #[serde(default)]
    pub threshold: usize,
    /// Coupling strengths for `sweep`, strictly ascending.
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Coupling strength for `resonances` and `validate`; defaults to the
    /// first entry of `deltas`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub output: OutputOptions,
}

impl RunConfig {
    /// Parse JSON text, fill defaults and run the cross-field checks.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        raw.resolve()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.deltas[0])
    }

    fn resolve(mut self) -> Result<Self, CliError> {
        let bad = |m: String| Err(CliError::Invalid(m));
        self.domain.validate()?;
        let profile = make_profile(self.profile.clone())?;
        if self.deltas.is_empty() {
            return bad("deltas must not be empty".into());
        }
        if !self.deltas.iter().all(|d| d.is_finite() && *d > 0.0) {
            return bad("every entry of deltas must be positive".into());
        }
        if self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            return bad("deltas must be strictly ascending".into());
        }
        let delta = self.delta.unwrap_or(self.deltas[0]);
        if !(delta.is_finite() && delta > 0.0) {
            return bad(format!("delta = {delta} must be positive"));
        }
        self.delta = Some(delta);
        if self.modes.count < 2 {
            return bad("modes.count must be at least 2".into());
        }
        let centred_disc = matches!(self.domain.shape, Shape::Disc { .. }) && self.domain.axis_offset == [0.0; 2];
        let closed_form = matches!(self.domain.shape, Shape::Rectangle { .. }) || centred_disc;
        self.modes.method = match self.modes.method {
            ModeMethod::Auto if closed_form => ModeMethod::Analytic,
            ModeMethod::Auto => ModeMethod::FiniteDifference,
            ModeMethod::Analytic if !closed_form => {
                return bad("closed-form modes need a rectangle or a disc twisted about its centre".into())
            }
            m => m,
        };
        let step = self.modes.grid_step.unwrap_or(self.domain.feature_size() / 40.0);
        if !(step > 0.0 && step < self.domain.feature_size()) {
            return bad(format!("modes.grid_step = {step} must lie in (0, feature size)"));
        }
        self.modes.grid_step = Some(step);
        if let Some(t) = self.modes.cluster_tol {
            if !(t > 0.0) {
                return bad("modes.cluster_tol must be positive".into());
            }
        }
        // Checks that do not depend on the threshold gap; the rest run when
        // the problem is built.
        let s = &self.solver;
        let alpha = s.decay_rate.unwrap_or_else(|| profile.decay_rate());
        if let Some(n) = s.weight_exponent {
            if !(n < alpha / 2.0) {
                return bad(format!("weight exponent N = {n} must be below α/2 = {}", alpha / 2.0));
            }
            if let Some(r) = s.radius {
                if !(n > r) {
                    return bad(format!("weight exponent N = {n} must exceed the working radius r = {r}"));
                }
            }
        }
        if !(s.step > 0.0 && s.step < s.half_length) {
            return bad(format!("solver.step = {} must lie in (0, half_length)", s.step));
        }
        Ok(self)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Read { path: path.to_path_buf(), source: e })?;
    RunConfig::from_json(&text)
}
