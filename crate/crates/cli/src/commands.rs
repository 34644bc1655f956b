use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde_json::{json, Value};
use twistres::cross_section::{analytic_disc_modes_on, analytic_rectangle_modes_on, build_modes_with, ModeSet, Shape};
use twistres::resonance_solver::{find_resonances, sweep, ResonanceProblem, ResonanceReport, SearchOptions};
use twistres::threshold_asymptotics::{compute_mu, compute_upsilon, predicted_resonances};
use twistres::twist_profile::make_profile;
use twistres::validation::run_property_suite;

use crate::config::{ModeMethod, RunConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Eigenvalue and cluster table of the cross-section.
    Modes,
    /// Second-order coefficient at a simple ground threshold.
    Mu,
    /// Second-order matrix and its eigenvalues at the configured threshold.
    Upsilon,
    /// Resonances at a single coupling strength.
    Resonances,
    /// Resonances over the coupling list, with branch fits.
    Sweep,
    /// Invariant checks on the configured problem.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Mu => "mu",
            Command::Upsilon => "upsilon",
            Command::Resonances => "resonances",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Everything a command produces. `failure` is set when the artifacts are
/// complete but the run must still exit non-zero.
#[derive(Debug)]
pub struct Artifacts {
    pub json: Value,
    pub table: Table,
    pub failure: Option<CliError>,
}

pub const RESONANCE_COLUMNS: [&str; 7] =
    ["delta", "re_k", "im_k", "residual", "predicted_re", "predicted_im", "winding"];

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn build_modes(cfg: &RunConfig) -> Result<ModeSet, CliError> {
    let m = &cfg.modes;
    let modes = match (m.method, &cfg.domain.shape) {
        (ModeMethod::Analytic, Shape::Rectangle { .. }) => analytic_rectangle_modes_on(&cfg.domain, m.count)?,
        (ModeMethod::Analytic, _) => analytic_disc_modes_on(&cfg.domain, m.count)?,
        _ => {
            let step = m.grid_step.unwrap_or(cfg.domain.feature_size() / 40.0);
            build_modes_with(&cfg.domain, step, m.count, m.cluster_tol)?
        }
    };
    Ok(modes)
}

pub fn build_problem(cfg: &RunConfig) -> Result<ResonanceProblem, CliError> {
    let modes = build_modes(cfg)?;
    let profile = make_profile(cfg.profile.clone())?;
    Ok(ResonanceProblem::new(modes, cfg.threshold, profile, &cfg.solver)?)
}

fn envelope(command: Command, cfg: &RunConfig, problem: Option<&ResonanceProblem>, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command.name(),
        "config": cfg,
        "solver": problem.map(|p| &p.config),
        "result": result,
    })
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Artifacts, CliError> {
    if command == Command::Modes {
        return modes(cfg);
    }
    let problem = build_problem(cfg)?;
    let (result, table, failure) = match command {
        Command::Modes => unreachable!(),
        Command::Mu => mu(cfg, &problem)?,
        Command::Upsilon => upsilon(cfg, &problem)?,
        Command::Resonances => {
            let opts = SearchOptions { extra_seeds: Vec::new(), count_poles: true };
            let report = find_resonances(&problem, cfg.delta(), &opts)?;
            let table = resonance_table(std::slice::from_ref(&report));
            (serde_json::to_value(&report).expect("report serializes"), table, None)
        }
        Command::Sweep => {
            let report = sweep(&problem, &cfg.deltas, true)?;
            let reports: Vec<ResonanceReport> = report.points.iter().map(|p| p.report.clone()).collect();
            (serde_json::to_value(&report).expect("report serializes"), resonance_table(&reports), None)
        }
        Command::Validate => validate(cfg, &problem)?,
    };
    Ok(Artifacts { json: envelope(command, cfg, Some(&problem), result), table, failure })
}

fn modes(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let modes = build_modes(cfg)?;
    let cluster_of = |q: usize| modes.cluster_of(q).map(|c| c.id).unwrap_or(usize::MAX);
    let rows: Vec<Vec<String>> = modes
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(q, lam)| vec![q.to_string(), num(*lam), cluster_of(q).to_string()])
        .collect();
    let entries: Vec<Value> = modes
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(q, lam)| json!({ "index": q, "eigenvalue": lam, "cluster": cluster_of(q) }))
        .collect();
    let result = json!({
        "Q": modes.len(),
        "modes": entries,
        "clusters": modes.clusters,
        "next_eigenvalue": modes.next_eigenvalue,
        "grid_step": modes.grid_step(),
        "orthonormality_residual": modes.orthonormality_residual(),
    });
    Ok(Artifacts {
        json: envelope(Command::Modes, cfg, None, result),
        table: Table { header: vec!["index", "eigenvalue", "cluster"], rows },
        failure: None,
    })
}

type Output = (Value, Table, Option<CliError>);

fn mu(cfg: &RunConfig, p: &ResonanceProblem) -> Result<Output, CliError> {
    if cfg.threshold != 0 {
        return Err(CliError::Invalid("`mu` is defined at the ground threshold; use `upsilon`".into()));
    }
    let mu = compute_mu(&p.modes, &p.couplings, &p.profile, &p.grid)?;
    let predictions: Vec<Value> = cfg
        .deltas
        .iter()
        .map(|&d| json!({ "delta": d, "k": [0.0, -mu.mu * d * d] }))
        .collect();
    let rows = mu
        .terms
        .iter()
        .map(|t| vec![t.cluster.to_string(), num(t.eigenvalue), num(t.coupling), num(t.form), num(t.form_prime)])
        .collect();
    let result = json!({
        "mu": mu.mu,
        "tail_bound": mu.tail_bound,
        "Q": mu.modes_used,
        "direct": mu.direct,
        "direct_tail_bound": mu.direct_tail_bound,
        "derivative_norm": mu.derivative_norm,
        "threshold": p.threshold(),
        "predictions": predictions,
        "terms": mu.terms,
    });
    let header = vec!["cluster", "eigenvalue", "coupling", "form", "form_prime"];
    Ok((result, Table { header, rows }, None))
}

fn matrix(m: &DMatrix<C>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect()).collect()
}

fn upsilon(cfg: &RunConfig, p: &ResonanceProblem) -> Result<Output, CliError> {
    let u = compute_upsilon(&p.modes, &p.couplings, p.cluster, &p.profile, &p.grid)?;
    let predictions: Vec<Value> = cfg
        .deltas
        .iter()
        .map(|&d| {
            let k: Vec<[f64; 2]> = predicted_resonances(&u.eigenvalues, d).into_iter().map(pair).collect();
            json!({ "delta": d, "k": k })
        })
        .collect();
    let cluster_term: Vec<Vec<f64>> =
        (0..u.cluster_term.nrows()).map(|i| u.cluster_term.row(i).iter().copied().collect()).collect();
    let rows = u
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(l, nu)| vec![l.to_string(), num(nu.re), num(nu.im)])
        .collect();
    let result = json!({
        "cluster": u.cluster,
        "threshold": u.threshold,
        "multiplicity": u.entries.nrows(),
        "basis": u.basis,
        "entries": matrix(&u.entries),
        "direct": matrix(&u.direct),
        "eigenvalues": u.eigenvalues.iter().copied().map(pair).collect::<Vec<_>>(),
        "cluster_term": cluster_term,
        "tail_bound": u.tail_bound,
        "direct_tail_bound": u.direct_tail_bound,
        "Q": p.modes.len(),
        "predictions": predictions,
    });
    Ok((result, Table { header: vec!["index", "re_nu", "im_nu"], rows }, None))
}

/// One row per root; a coupling with no root still gets a row, with empty
/// `k` columns, so the winding number can be plotted against `δ`.
fn resonance_table(reports: &[ResonanceReport]) -> Table {
    let mut rows = Vec::new();
    for r in reports {
        let winding = r.contour.as_ref().map_or(String::new(), |c| c.winding.to_string());
        if r.roots.is_empty() {
            rows.push(vec![num(r.delta), String::new(), String::new(), String::new(), String::new(), String::new(), winding.clone()]);
        }
        for root in &r.roots {
            rows.push(vec![
                num(r.delta),
                num(root.k.re),
                num(root.k.im),
                num(root.branch_residual),
                num(root.predicted.re),
                num(root.predicted.im),
                winding.clone(),
            ]);
        }
    }
    Table { header: RESONANCE_COLUMNS.to_vec(), rows }
}

fn validate(cfg: &RunConfig, p: &ResonanceProblem) -> Result<Output, CliError> {
    let checks = run_property_suite(p, cfg.delta())?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let failure = (!failed.is_empty()).then(|| CliError::ChecksFailed {
        failed: failed.len(),
        total: checks.len(),
        names: failed.join(", "),
    });
    let rows = checks
        .iter()
        .map(|c| vec![c.name.clone(), num(c.value), num(c.tolerance), c.passed.to_string()])
        .collect();
    let result = json!({ "delta": cfg.delta(), "passed": failed.is_empty(), "checks": checks });
    Ok((result, Table { header: vec!["name", "value", "tolerance", "passed"], rows }, failure))
}
