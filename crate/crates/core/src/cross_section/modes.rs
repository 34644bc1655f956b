use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use super::bessel::{bessel_j, bessel_zeros};
use super::domain::{Domain2D, Shape};
use super::eigen::lowest_eigenpairs;
use super::grid::{Grid2D, GridFunction};
use crate::error::{Error, Result};

/// Extra eigenpairs computed beyond the request so the last cluster can be
/// completed and the next eigenvalue above it is known.
const LOOKAHEAD: usize = 8;

/// Group of (numerically) degenerate eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub id: usize,
    /// First mode index (0-based) of the cluster.
    pub start: usize,
    pub multiplicity: usize,
    /// Mean of the member eigenvalues; used as the threshold value.
    pub eigenvalue: f64,
    /// `r₀ = min √|λ_neighbour − λ|` over the adjacent clusters.
    pub gap_radius: f64,
}

impl Cluster {
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.multiplicity
    }
}

/// How the cluster tolerance is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClusterTol {
    Absolute(f64),
    /// `max(1e-8 λ, 5 h² λ)`, evaluated at the eigenvalue being compared.
    Scaled { step: f64 },
}

impl ClusterTol {
    pub fn at(&self, lambda: f64) -> f64 {
        match *self {
            ClusterTol::Absolute(t) => t,
            ClusterTol::Scaled { step } => (1e-8 * lambda).max(5.0 * step * step * lambda),
        }
    }
}

/// Partition sorted eigenvalues into clusters. `next` is the first eigenvalue
/// above the list, if known; it only enters the gap radius of the last
/// cluster.
pub fn cluster_modes(values: &[f64], tol: ClusterTol, next: Option<f64>) -> Result<Vec<Cluster>> {
    if let ClusterTol::Absolute(t) = tol {
        if !(t > 0.0) {
            return Err(Error::Config(format!("cluster tolerance must be positive (got {t})")));
        }
    }
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some((s, m)) if v - values[*s + *m - 1] < tol.at(v) => *m += 1,
            _ => groups.push((i, 1)),
        }
    }
    let means: Vec<f64> = groups
        .iter()
        .map(|&(s, m)| values[s..s + m].iter().sum::<f64>() / m as f64)
        .collect();
    for w in groups.windows(2) {
        let (lo, hi) = (values[w[0].0 + w[0].1 - 1], values[w[1].0]);
        let t = tol.at(hi);
        if hi - lo < 2.0 * t {
            return Err(Error::AmbiguousClusters(format!(
                "gap {:.3e} between λ = {lo} and λ = {hi} is less than twice the tolerance {t:.3e}",
                hi - lo
            )));
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (id, &(start, multiplicity)) in groups.iter().enumerate() {
        let lam = means[id];
        let below = (id > 0).then(|| lam - means[id - 1]);
        let above = if id + 1 < means.len() {
            Some(means[id + 1] - lam)
        } else {
            next.map(|n| n - lam)
        };
        let gap = match (below, above) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => f64::INFINITY,
        };
        out.push(Cluster {
            id,
            start,
            multiplicity,
            eigenvalue: lam,
            gap_radius: gap.sqrt(),
        });
    }
    Ok(out)
}

/// Eigenfunction representation.
#[derive(Clone, Debug)]
pub enum ModeBasis {
    /// Grid vectors, one column per mode, normalised with the `h²` weight.
    Grid { grid: Arc<Grid2D>, vectors: DMatrix<f64> },
    /// Products of sines on the centered rectangle; `(m, n)` per mode.
    Rectangle { width: f64, height: f64, indices: Vec<(usize, usize)> },
    /// `J_m(j r/R)·(cos mθ | sin mθ)` on the disc of radius `R`.
    Disc { radius: f64, modes: Vec<DiscMode> },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscMode {
    pub order: usize,
    /// Zero `j` of `J_order` fixing the eigenvalue `(j/R)²`.
    pub zero: f64,
    pub sine: bool,
}

impl DiscMode {
    pub(crate) fn norm_const(&self, radius: f64) -> f64 {
        let jn = bessel_j(self.order as i64 + 1, self.zero).abs();
        let ang = if self.order == 0 { 1.0 } else { 2f64.sqrt() };
        ang / (std::f64::consts::PI.sqrt() * radius * jn)
    }
}

/// Lowest transverse Dirichlet eigenpairs with their clusters.
#[derive(Clone, Debug)]
pub struct ModeSet {
    pub domain: Domain2D,
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub basis: ModeBasis,
    /// First eigenvalue above the retained set.
    pub next_eigenvalue: f64,
    pub cluster_tol: ClusterTol,
}

/// Either a grid function or a closed-form field on the cross-section.
#[derive(Clone, Debug)]
pub enum ModeFunction {
    Grid(GridFunction),
    Rectangle(RectangleField),
    Disc(DiscField),
}

/// Closed-form `ψ` or `∂_φψ = ∂_θψ` for a disc mode (axis at the centre).
#[derive(Clone, Copy, Debug)]
pub struct DiscField {
    pub radius: f64,
    pub mode: DiscMode,
    pub angular: bool,
}

impl DiscField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        if r >= self.radius {
            return 0.0;
        }
        let m = self.mode.order as f64;
        let th = y.atan2(x);
        let radial = self.mode.norm_const(self.radius)
            * bessel_j(self.mode.order as i64, self.mode.zero * r / self.radius);
        let (c, s) = ((m * th).cos(), (m * th).sin());
        match (self.mode.sine, self.angular) {
            (false, false) => radial * c,
            (true, false) => radial * s,
            (false, true) => -m * radial * s,
            (true, true) => m * radial * c,
        }
    }
}

/// Closed-form `ψ` or `∂_φψ` for a sine-product rectangle mode.
#[derive(Clone, Copy, Debug)]
pub struct RectangleField {
    pub width: f64,
    pub height: f64,
    pub m: usize,
    pub n: usize,
    pub axis: [f64; 2],
    pub angular: bool,
}

pub(crate) fn sine_mode(len: f64, m: usize, x: f64) -> (f64, f64) {
    let c = (2.0 / len).sqrt();
    let kx = m as f64 * std::f64::consts::PI / len;
    let t = kx * (x + 0.5 * len);
    (c * t.sin(), c * kx * t.cos())
}

impl RectangleField {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if x.abs() >= 0.5 * self.width || y.abs() >= 0.5 * self.height {
            return 0.0;
        }
        let (fx, dfx) = sine_mode(self.width, self.m, x);
        let (fy, dfy) = sine_mode(self.height, self.n, y);
        if self.angular {
            (x - self.axis[0]) * fx * dfy - (y - self.axis[1]) * dfx * fy
        } else {
            fx * fy
        }
    }
}

impl ModeFunction {
    /// Largest magnitude over the grid, or over a 201 × 201 sample lattice
    /// for closed-form fields.
    pub fn max_abs(&self) -> f64 {
        match self {
            ModeFunction::Grid(g) => g.max_abs(),
            ModeFunction::Rectangle(r) => {
                sample_max(r.width, r.height, |x, y| r.eval(x, y))
            }
            ModeFunction::Disc(d) => {
                sample_max(2.0 * d.radius, 2.0 * d.radius, |x, y| d.eval(x, y))
            }
        }
    }
}

fn sample_max(w: f64, h: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..=200 {
        for j in 0..=200 {
            m = m.max(f(w * (i as f64 / 200.0 - 0.5), h * (j as f64 / 200.0 - 0.5)).abs());
        }
    }
    m
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn cluster_of(&self, mode: usize) -> Result<&Cluster> {
        self.clusters
            .iter()
            .find(|c| c.indices().contains(&mode))
            .ok_or_else(|| Error::Config(format!("mode index {} outside the mode set", mode + 1)))
    }

    pub fn grid_step(&self) -> Option<f64> {
        match &self.basis {
            ModeBasis::Grid { grid, .. } => Some(grid.step),
            _ => None,
        }
    }

    pub fn mode(&self, q: usize) -> ModeFunction {
        self.field(q, false)
    }

    /// `∂_φψ_q`, by centered differences on the grid or analytically for the
    /// closed-form rectangle basis.
    pub fn angular_derivative(&self, q: usize) -> ModeFunction {
        self.field(q, true)
    }

    fn field(&self, q: usize, angular: bool) -> ModeFunction {
        assert!(q < self.len(), "mode index out of range");
        match &self.basis {
            ModeBasis::Grid { grid, vectors } => {
                let col = vectors.column(q);
                let mut values = col.as_slice().to_vec();
                if angular {
                    grid.apply_angular_derivative(col.as_slice(), &mut values);
                }
                ModeFunction::Grid(GridFunction { grid: grid.clone(), values })
            }
            ModeBasis::Rectangle { width, height, indices } => {
                ModeFunction::Rectangle(RectangleField {
                    width: *width,
                    height: *height,
                    m: indices[q].0,
                    n: indices[q].1,
                    axis: self.domain.axis_offset,
                    angular,
                })
            }
            ModeBasis::Disc { radius, modes } => ModeFunction::Disc(DiscField {
                radius: *radius,
                mode: modes[q],
                angular,
            }),
        }
    }

    /// `max |⟨ψ_p, ψ_q⟩ − δ_pq|` (grid quadrature for grid modes).
    pub fn orthonormality_residual(&self) -> f64 {
        match &self.basis {
            ModeBasis::Grid { grid, vectors } => {
                let g = vectors.tr_mul(vectors) * grid.weight();
                let mut worst: f64 = 0.0;
                for i in 0..g.nrows() {
                    for j in 0..g.ncols() {
                        let e = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((g[(i, j)] - e).abs());
                    }
                }
                worst
            }
            ModeBasis::Rectangle { width, height, indices } => {
                super::coupling::rectangle_gram_residual(*width, *height, indices)
            }
            ModeBasis::Disc { radius, modes } => super::coupling::disc_gram_residual(*radius, modes),
        }
    }
}

/// Truncate to the smallest complete-cluster prefix of length at least
/// `count`, recording the next eigenvalue above it.
fn finish(
    domain: Domain2D,
    values: Vec<f64>,
    tol: ClusterTol,
    count: usize,
) -> Result<(Vec<f64>, Vec<Cluster>, f64)> {
    let clusters = cluster_modes(&values, tol, None)?;
    let cut = clusters
        .iter()
        .map(|c| c.start + c.multiplicity)
        .find(|&end| end >= count)
        .filter(|&end| end < values.len())
        .ok_or_else(|| {
            Error::AmbiguousClusters(format!(
                "cluster containing mode {count} on {:?} extends past the computed range",
                domain.shape
            ))
        })?;
    let next = values[cut];
    let kept = values[..cut].to_vec();
    let clusters = cluster_modes(&kept, tol, Some(next))?;
    Ok((kept, clusters, next))
}

/// Finite-difference modes on a uniform grid with spacing `h`. The mode count
/// is raised, if needed, so the last retained cluster is complete.
pub fn build_modes(domain: &Domain2D, h: f64, count: usize) -> Result<ModeSet> {
    build_modes_with(domain, h, count, None)
}

pub fn build_modes_with(
    domain: &Domain2D,
    h: f64,
    count: usize,
    cluster_tol: Option<f64>,
) -> Result<ModeSet> {
    if count == 0 {
        return Err(Error::Config("mode count must be at least 1".into()));
    }
    let grid = Arc::new(Grid2D::new(domain, h)?);
    let want = (count + LOOKAHEAD).min(grid.len());
    let pairs = lowest_eigenpairs(&grid, want, 1e-9)?;
    let tol = cluster_tol.map_or(ClusterTol::Scaled { step: h }, ClusterTol::Absolute);
    let (values, clusters, next) = finish(domain.clone(), pairs.values, tol, count)?;
    let vectors = pairs.vectors.columns(0, values.len()).into_owned();
    Ok(ModeSet {
        domain: domain.clone(),
        eigenvalues: values,
        clusters,
        basis: ModeBasis::Grid { grid, vectors },
        next_eigenvalue: next,
        cluster_tol: tol,
    })
}

/// Closed-form modes `√(4/ab) sin(mπ(x+a/2)/a) sin(nπ(y+b/2)/b)` of the
/// centered `a × b` rectangle, sorted by eigenvalue and then by `(m, n)`.
pub fn analytic_rectangle_modes(a: f64, b: f64, count: usize) -> Result<ModeSet> {
    analytic_rectangle_modes_on(&Domain2D::rectangle(a, b)?, count)
}

pub fn analytic_rectangle_modes_on(domain: &Domain2D, count: usize) -> Result<ModeSet> {
    let Shape::Rectangle { width: a, height: b } = domain.shape else {
        return Err(Error::Unsupported("closed-form modes exist only for rectangles".into()));
    };
    if count == 0 {
        return Err(Error::Config("mode count must be at least 1".into()));
    }
    let want = count + LOOKAHEAD;
    let pi2 = std::f64::consts::PI.powi(2);
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(want * want);
    for m in 1..=want {
        for n in 1..=want {
            let (mf, nf) = (m as f64, n as f64);
            all.push((pi2 * (mf * mf / (a * a) + nf * nf / (b * b)), m, n));
        }
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    all.truncate(want);
    let values: Vec<f64> = all.iter().map(|t| t.0).collect();
    let tol = ClusterTol::Scaled { step: 0.0 };
    let (values, clusters, next) = finish(domain.clone(), values, tol, count)?;
    let indices = all[..values.len()].iter().map(|t| (t.1, t.2)).collect();
    Ok(ModeSet {
        domain: domain.clone(),
        eigenvalues: values,
        clusters,
        basis: ModeBasis::Rectangle { width: a, height: b, indices },
        next_eigenvalue: next,
        cluster_tol: tol,
    })
}

/// Closed-form modes of a disc twisted about its centre. Each `m ≥ 1` order
/// contributes a cosine and a sine mode with identical eigenvalue.
pub fn analytic_disc_modes(radius: f64, count: usize) -> Result<ModeSet> {
    analytic_disc_modes_on(&Domain2D::disc(radius)?, count)
}

pub fn analytic_disc_modes_on(domain: &Domain2D, count: usize) -> Result<ModeSet> {
    let Shape::Disc { radius } = domain.shape else {
        return Err(Error::Unsupported("closed-form disc modes need a disc".into()));
    };
    if domain.axis_offset != [0.0, 0.0] {
        return Err(Error::Unsupported(
            "closed-form disc modes require the twist axis at the centre".into(),
        ));
    }
    if count == 0 {
        return Err(Error::Config("mode count must be at least 1".into()));
    }
    let want = count + LOOKAHEAD;
    // Weyl: roughly λR²/4 modes below λ.
    let mut zmax = (4.0 * want as f64).sqrt() * 1.5 + 5.0;
    let mut all = loop {
        let mut all: Vec<DiscMode> = Vec::new();
        for m in 0.. {
            if m as f64 > zmax {
                break;
            }
            for z in bessel_zeros(m, zmax) {
                all.push(DiscMode { order: m, zero: z, sine: false });
                if m > 0 {
                    all.push(DiscMode { order: m, zero: z, sine: true });
                }
            }
        }
        if all.len() > want + 4 {
            break all;
        }
        zmax *= 1.5;
    };
    all.sort_by(|a, b| {
        a.zero
            .total_cmp(&b.zero)
            .then(a.order.cmp(&b.order))
            .then(a.sine.cmp(&b.sine))
    });
    all.truncate(want);
    let values: Vec<f64> = all.iter().map(|d| (d.zero / radius).powi(2)).collect();
    let tol = ClusterTol::Scaled { step: 0.0 };
    let (values, clusters, next) = finish(domain.clone(), values, tol, count)?;
    all.truncate(values.len());
    Ok(ModeSet {
        domain: domain.clone(),
        eigenvalues: values,
        clusters,
        basis: ModeBasis::Disc { radius, modes: all },
        next_eigenvalue: next,
        cluster_tol: tol,
    })
}
