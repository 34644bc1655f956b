//! Second-order resonance coefficients at a threshold.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::Serialize;

use crate::cross_section::{CouplingTable, ModeSet};
use crate::error::{Error, Result};
use crate::kernels1d::{resolvent_form, resolvent_form_prime, Grid1D};
use crate::twist_profile::TwistProfile;

/// Contribution of one transverse cluster to the first-threshold series.
#[derive(Clone, Debug, Serialize)]
pub struct MuTerm {
    pub cluster: usize,
    pub eigenvalue: f64,
    /// `⟨∂_φψ₁, π_q ∂_φψ₁⟩`.
    pub coupling: f64,
    /// `J_q(0)`.
    pub form: f64,
    /// `⟨ε′, (D₃² + λ_q − λ₁)^{-1} ε′⟩`.
    pub form_prime: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MuResult {
    /// Accelerated series value (the reported coefficient).
    pub mu: f64,
    /// Direct series `½ Σ (λ_q − λ₁) C_q J_q(0)`.
    pub direct: f64,
    /// Bound on the discarded part of the accelerated series.
    pub tail_bound: f64,
    /// Bound on the discarded part of the direct series.
    pub direct_tail_bound: f64,
    /// Number of transverse modes entering the sums.
    pub modes_used: usize,
    pub derivative_norm: f64,
    pub terms: Vec<MuTerm>,
}

impl MuResult {
    /// Both tails together; the two series can differ by at most this much.
    pub fn combined_tail(&self) -> f64 {
        self.tail_bound + self.direct_tail_bound
    }
}

fn check_threshold_couplings(couplings: &CouplingTable, cluster: usize) -> Result<()> {
    if couplings.cluster != cluster {
        return Err(Error::Config(format!(
            "coupling table was built for cluster {} but cluster {cluster} was requested",
            couplings.cluster
        )));
    }
    Ok(())
}

/// First-threshold coefficient `μ`, in the accelerated form
/// `½‖∂_φψ₁‖²‖ε‖² − ½ Σ C_q ⟨ε′, R_q ε′⟩` with the direct form alongside.
pub fn compute_mu(
    modes: &ModeSet,
    couplings: &CouplingTable,
    profile: &TwistProfile,
    grid: &Grid1D,
) -> Result<MuResult> {
    check_threshold_couplings(couplings, 0)?;
    if modes.clusters[0].multiplicity != 1 {
        return Err(Error::Unsupported(
            "the lowest transverse eigenvalue is degenerate; use compute_upsilon".into(),
        ));
    }
    let lam1 = modes.clusters[0].eigenvalue;
    let norm = couplings.derivative_norms[0];
    let (eps, eps_prime) = (profile.norm_sq(), profile.norm_prime_sq());
    let mut terms = Vec::new();
    let (mut direct, mut corr, mut mass) = (0.0, 0.0, 0.0);
    let zero = C::new(0.0, 0.0);
    for cl in &modes.clusters[1..] {
        let cq = couplings.projected[cl.id][(0, 0)];
        mass += cq;
        let (j, jp) = if cq == 0.0 || profile.is_zero() {
            (0.0, 0.0)
        } else {
            (
                resolvent_form(profile, cl.eigenvalue, lam1, zero, grid)?.re,
                resolvent_form_prime(profile, cl.eigenvalue, lam1, zero, grid)?.re,
            )
        };
        direct += 0.5 * (cl.eigenvalue - lam1) * cq * j;
        corr += 0.5 * cq * jp;
        terms.push(MuTerm { cluster: cl.id, eigenvalue: cl.eigenvalue, coupling: cq, form: j, form_prime: jp });
    }
    let rest = (norm - mass).max(0.0);
    Ok(MuResult {
        mu: 0.5 * norm * eps - corr,
        direct,
        tail_bound: 0.5 * eps_prime * rest / (modes.next_eigenvalue - lam1),
        direct_tail_bound: 0.5 * eps * rest,
        modes_used: modes.len(),
        derivative_norm: norm,
        terms,
    })
}

/// Second-order coefficient matrix at a possibly degenerate threshold.
#[derive(Clone, Debug, Serialize)]
pub struct UpsilonMatrix {
    pub cluster: usize,
    pub threshold: f64,
    /// `μ_{j,l} = ½ Σ_{q ∉ cluster} (λ_q − λ_{q₀}) C_q^{(j,l)} J_q(0)`, summed in
    /// the accelerated form.
    pub entries: DMatrix<C>,
    /// The same sum taken term by term.
    pub direct: DMatrix<C>,
    pub eigenvalues: Vec<C>,
    /// `⟨∂_φψ_{q₀,j}, π_{q₀} ∂_φψ_{q₀,l}⟩ ‖ε‖²`, the within-cluster term.
    /// The second-order expansion of `w` cancels it against the regularised
    /// threshold kernel, so it is reported but not included in `entries`.
    pub cluster_term: DMatrix<f64>,
    /// Mode indices (0-based) spanning the cluster basis used.
    pub basis: Vec<usize>,
    pub tail_bound: f64,
    pub direct_tail_bound: f64,
}

/// Eigenvalues of a small complex matrix: closed form up to 2×2, Schur
/// decomposition beyond.
pub fn small_eigenvalues(m: &DMatrix<C>) -> Vec<C> {
    let n = m.nrows();
    let mut ev = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr / 4.0 - det).sqrt();
            vec![tr / 2.0 + disc, tr / 2.0 - disc]
        }
        _ => m.clone().schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default(),
    };
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

pub fn compute_upsilon(
    modes: &ModeSet,
    couplings: &CouplingTable,
    cluster: usize,
    profile: &TwistProfile,
    grid: &Grid1D,
) -> Result<UpsilonMatrix> {
    check_threshold_couplings(couplings, cluster)?;
    let thr = &modes.clusters[cluster];
    let m0 = thr.multiplicity;
    let lam = thr.eigenvalue;
    let idx: Vec<usize> = thr.indices().collect();
    let eps = profile.norm_sq();
    let eps_prime = profile.norm_prime_sq();
    let cluster_block = &couplings.projected[cluster];
    // Accelerated form: ½‖ε‖²(⟨∂_φψ_j, ∂_φψ_l⟩ − C_{q₀}) − ½ Σ C_q ⟨ε′, R_q ε′⟩.
    let mut entries = DMatrix::<C>::from_fn(m0, m0, |r, s| {
        C::from(0.5 * eps * (-couplings.b[(idx[r], idx[s])] - cluster_block[(r, s)]))
    });
    let mut direct = DMatrix::<C>::zeros(m0, m0);
    let zero = C::new(0.0, 0.0);
    let mut mass = 0.0;
    for cl in &modes.clusters {
        if cl.id == cluster {
            continue;
        }
        let block = &couplings.projected[cl.id];
        mass += block.trace();
        if block.iter().all(|v| *v == 0.0) || profile.is_zero() {
            continue;
        }
        let j = resolvent_form(profile, cl.eigenvalue, lam, zero, grid)?;
        let jp = resolvent_form_prime(profile, cl.eigenvalue, lam, zero, grid)?;
        for r in 0..m0 {
            for s in 0..m0 {
                direct[(r, s)] += 0.5 * (cl.eigenvalue - lam) * block[(r, s)] * j;
                entries[(r, s)] -= 0.5 * block[(r, s)] * jp;
            }
        }
    }
    let cluster_term = cluster_block * eps;
    let total: f64 = couplings.derivative_norms.iter().sum();
    let rest = (total - mass - cluster_block.trace()).max(0.0);
    Ok(UpsilonMatrix {
        cluster,
        threshold: lam,
        eigenvalues: small_eigenvalues(&entries),
        entries,
        direct,
        cluster_term,
        basis: idx,
        tail_bound: 0.5 * eps_prime * rest / (modes.next_eigenvalue - lam),
        direct_tail_bound: 0.5 * eps * rest,
    })
}

/// `Im μ_{q₀}` from Fourier data alone:
/// `−Σ_{q<q₀} (π m_q / 2) ‖π_q ∂_φψ_{q₀}‖² |ε̂(m_q)|²`, `m_q = √(λ_{q₀} − λ_q)`.
pub fn im_mu_fourier(
    modes: &ModeSet,
    couplings: &CouplingTable,
    cluster: usize,
    profile: &TwistProfile,
) -> Result<f64> {
    check_threshold_couplings(couplings, cluster)?;
    let thr = &modes.clusters[cluster];
    if thr.multiplicity != 1 {
        return Err(Error::Unsupported(format!(
            "the Fourier formula needs a simple threshold (multiplicity {})",
            thr.multiplicity
        )));
    }
    Ok(modes.clusters[..cluster]
        .iter()
        .map(|cl| {
            let m = (thr.eigenvalue - cl.eigenvalue).sqrt();
            -0.5 * PI * m * couplings.projected[cl.id][(0, 0)] * profile.fourier_transform(m).norm_sqr()
        })
        .sum())
}

/// Leading-order resonance positions `−i ν_l δ²`.
pub fn predicted_resonances(eigenvalues: &[C], delta: f64) -> Vec<C> {
    eigenvalues.iter().map(|nu| -C::i() * nu * delta * delta).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross_section::{analytic_disc_modes, analytic_rectangle_modes, coupling_table};

    fn axis() -> Grid1D {
        Grid1D::new(15.0, 1.0 / 32.0).unwrap()
    }

    #[test]
    fn disc_mu_vanishes() {
        let m = analytic_disc_modes(1.0, 20).unwrap();
        let c = coupling_table(&m, 0).unwrap();
        let p = TwistProfile::gaussian(1.0, 1.0).unwrap();
        let mu = compute_mu(&m, &c, &p, &axis()).unwrap();
        assert_eq!(mu.mu, 0.0);
        assert_eq!(mu.direct, 0.0);
    }

    #[test]
    fn first_threshold_upsilon_is_mu() {
        let m = analytic_rectangle_modes(1.0, 1.0, 30).unwrap();
        let c = coupling_table(&m, 0).unwrap();
        let p = TwistProfile::gaussian(1.0, 1.0).unwrap();
        let mu = compute_mu(&m, &c, &p, &axis()).unwrap();
        let up = compute_upsilon(&m, &c, 0, &p, &axis()).unwrap();
        assert!((up.entries[(0, 0)].re - mu.mu).abs() < 1e-14 * mu.mu);
        assert!((up.direct[(0, 0)].re - mu.direct).abs() < 1e-14 * mu.direct);
        assert_eq!(up.entries[(0, 0)].im, 0.0);
        assert!(mu.mu > 0.0);
        assert!((mu.mu - mu.direct).abs() <= mu.combined_tail() * (1.0 + 1e-9));
    }

    #[test]
    fn degenerate_or_mismatched_threshold_is_rejected() {
        let m = analytic_rectangle_modes(1.0, 1.0, 5).unwrap();
        let c = coupling_table(&m, 1).unwrap();
        let p = TwistProfile::gaussian(1.0, 1.0).unwrap();
        assert!(im_mu_fourier(&m, &c, 1, &p).is_err());
        assert!(compute_mu(&m, &c, &p, &axis()).is_err());
    }

    #[test]
    fn predictions_scale_with_delta_squared() {
        let k = predicted_resonances(&[C::new(2.0, -0.5)], 0.1);
        assert!((k[0] - C::new(-0.005, -0.02)).norm() < 1e-15);
        assert_eq!(predicted_resonances(&[C::new(2.0, 0.0)], 0.0)[0], C::new(0.0, 0.0));
    }
}
