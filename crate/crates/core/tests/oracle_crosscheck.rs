//! Production routines against the independent brute-force oracle.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use twistres::cross_section::{analytic_rectangle_modes, analytic_rectangle_modes_on, coupling_table, Domain2D};
use twistres::kernels1d::{resolvent_form, resolvent_form_prime, Grid1D};
use twistres::oracle::{
    oracle_j, oracle_j_prime, oracle_mu_rectangle, oracle_rectangle_channels, oracle_rectangle_derivative_norm,
    OracleConfig,
};
use twistres::threshold_asymptotics::compute_mu;
use twistres::twist_profile::TwistProfile;

fn axis() -> Grid1D {
    Grid1D::new(15.0, 1.0 / 32.0).unwrap()
}

fn gaussian() -> TwistProfile {
    TwistProfile::gaussian(1.0, 1.0).unwrap()
}

#[test]
fn resolvent_forms_match_oracle_above_threshold() {
    let p = gaussian();
    let cfg = OracleConfig::default();
    for c in [1.0, 2.0 * PI * PI, 100.0] {
        let j = resolvent_form(&p, c, 0.0, C::new(0.0, 0.0), &axis()).unwrap();
        let o = oracle_j(&p, c, C::new(0.0, 0.0), &cfg).unwrap();
        assert!((j - o.value).norm() <= 1e-8 * o.value.norm(), "c = {c}: {j} vs {}", o.value);
        let jp = resolvent_form_prime(&p, c, 0.0, C::new(0.0, 0.0), &axis()).unwrap();
        let op = oracle_j_prime(&p, c, C::new(0.0, 0.0), &cfg).unwrap();
        assert!((jp - op.value).norm() <= 1e-8 * op.value.norm(), "c = {c}: {jp} vs {}", op.value);
    }
}

#[test]
fn resolvent_forms_match_oracle_off_axis_and_below_threshold() {
    let p = TwistProfile::modulated_gaussian_with_zero(0.7, 1.2, 1.5, 0.3).unwrap();
    let cfg = OracleConfig::default();
    for (c, k) in [(4.0, C::new(0.5, -0.3)), (-9.0, C::new(0.2, 0.1)), (30.0, C::new(0.0, -1.0))] {
        let j = resolvent_form(&p, c, 0.0, k, &axis()).unwrap();
        let o = oracle_j(&p, c, k, &cfg).unwrap();
        assert!((j - o.value).norm() <= 1e-8 * o.value.norm(), "c = {c}, k = {k}: {j} vs {}", o.value);
    }
}

#[test]
fn rectangle_couplings_match_oracle_channels() {
    let cfg = OracleConfig::default();
    for (a, b, off) in [(1.0, 1.0, [0.0, 0.0]), (1.0, 0.7, [0.13, -0.08])] {
        let d = Domain2D::rectangle(a, b).unwrap().with_axis_offset(off);
        let modes = analytic_rectangle_modes_on(&d, 25).unwrap();
        let table = coupling_table(&modes, 0).unwrap();
        let oracle = oracle_rectangle_channels(a, b, off, modes.len(), &cfg).unwrap();
        for (q, ch) in oracle.iter().enumerate() {
            assert!((modes.eigenvalues[q] - ch.eigenvalue).abs() <= 1e-12 * ch.eigenvalue);
            // Channel signs are conventional; compare couplings squared.
            let got = table.a[(q, 0)].powi(2);
            assert!((got - ch.coupling.powi(2)).abs() <= 1e-9, "q = {q}: {got} vs {}", ch.coupling.powi(2));
        }
        let norm = oracle_rectangle_derivative_norm(a, b, off, &cfg).unwrap();
        assert!((table.derivative_norms[0] - norm).abs() <= 1e-8 * norm);
    }
}

#[test]
fn second_rectangle_eigenvalue_by_enumeration() {
    let b = 1.0 / 2f64.sqrt();
    let mut all: Vec<f64> = (1..20)
        .flat_map(|m| (1..20).map(move |n| PI * PI * ((m * m) as f64 + (n * n) as f64 / (b * b))))
        .collect();
    all.sort_by(f64::total_cmp);
    let modes = analytic_rectangle_modes(1.0, b, 2).unwrap();
    assert!((modes.eigenvalues[1] - all[1]).abs() <= 1e-12 * all[1]);
    assert_eq!(modes.clusters[1].multiplicity, 1);
    assert!(all[2] - all[1] > 1.0);
}

#[test]
fn mu_matches_oracle_mu() {
    let p = gaussian();
    let cfg = OracleConfig::default();
    let d = Domain2D::rectangle(1.0, 1.0).unwrap();
    let count = 20;
    let modes = analytic_rectangle_modes_on(&d, count).unwrap();
    assert_eq!(modes.len(), count);
    let table = coupling_table(&modes, 0).unwrap();
    let mu = compute_mu(&modes, &table, &p, &axis()).unwrap();
    let o = oracle_mu_rectangle(&d, &p, count, &cfg).unwrap();
    assert!((mu.mu - o.accelerated).abs() <= 1e-8 * o.accelerated, "{} vs {}", mu.mu, o.accelerated);
    assert!((mu.direct - o.direct).abs() <= 1e-8 * o.direct, "{} vs {}", mu.direct, o.direct);
    assert!((mu.tail_bound - o.accelerated_tail).abs() <= 1e-8 * o.accelerated_tail.max(1e-12));
}
