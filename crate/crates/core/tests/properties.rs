use std::f64::consts::PI;

use num_complex::Complex64 as C;
use proptest::prelude::*;
use twistres::cross_section::{analytic_rectangle_modes_on, cluster_modes, coupling_table, ClusterTol, Domain2D};
use twistres::kernels1d::{
    resolvent_form, resolvent_form_prime, sweep_apply, weighted_kernel_matrix, Grid1D, KernelKind, WeightConfig,
};
use twistres::resonance_solver::fit_branch;
use twistres::threshold_asymptotics::predicted_resonances;
use twistres::twist_profile::{validate_decay, TwistProfile};

fn axis() -> Grid1D {
    Grid1D::new(15.0, 1.0 / 32.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn rectangle_couplings_invariants(
        a in 0.6f64..1.8, b in 0.6f64..1.8, ox in -0.2f64..0.2, oy in -0.2f64..0.2,
    ) {
        let d = Domain2D::rectangle(a, b).unwrap().with_axis_offset([ox, oy]);
        let modes = analytic_rectangle_modes_on(&d, 12).unwrap();
        prop_assert!(modes.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(modes.eigenvalues[0] > 0.0);
        let mut covered = 0;
        for c in &modes.clusters {
            prop_assert_eq!(c.start, covered);
            prop_assert!(c.gap_radius > 0.0);
            covered += c.multiplicity;
        }
        prop_assert_eq!(covered, modes.len());
        prop_assert!(modes.orthonormality_residual() < 1e-10);
        let t = coupling_table(&modes, 0).unwrap();
        prop_assert!(t.antisymmetry_residual < 1e-10);
        for q in 0..modes.len() {
            prop_assert!(t.a[(q, q)].abs() < 1e-10);
        }
        for block in &t.projected {
            prop_assert!(block.clone().symmetric_eigen().eigenvalues.min() > -1e-10);
        }
        let sums = t.parseval_partial_sums(0);
        prop_assert!(sums.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(*sums.last().unwrap() <= t.derivative_norms[0] + 1e-10);
    }

    #[test]
    fn sweep_matches_dense_kernels(
        re in 0.05f64..4.0, im in -3.0f64..3.0, c_sign in 0usize..3, seed in 0u64..1000,
    ) {
        let grid = Grid1D::new(4.0, 0.1).unwrap();
        let n = grid.len();
        let weights = WeightConfig { exponent: 5.0 };
        let k = C::new(0.3 * re.min(1.0), -0.2 * im.abs().min(1.0));
        let (lam_q, kind) = match c_sign {
            0 => (0.0, KernelKind::ThresholdRegularized),
            1 => (re * re + 2.0, KernelKind::Resolvent),
            _ => (-(im * im) - 2.0, KernelKind::Resolvent),
        };
        let u: Vec<C> = (0..n)
            .map(|i| {
                let t = (i as u64 * 2654435761 + seed) % 1000;
                C::new(t as f64 / 1000.0 - 0.5, ((t * 7) % 1000) as f64 / 1000.0 - 0.5)
            })
            .collect();
        for kind in [kind, KernelKind::Derivative] {
            let dense = weighted_kernel_matrix(kind, lam_q, 0.0, k, &grid, &weights).unwrap();
            let eta = grid.sample(|x| weights.eta(x));
            let f: Vec<C> = (0..n).map(|j| u[j] * eta[j] * grid.weights[j]).collect();
            let mut out = vec![C::new(0.0, 0.0); n];
            let branch = twistres::kernels1d::BranchMomentum::new(lam_q, 0.0);
            sweep_apply(kind, branch.kappa(k).unwrap(), grid.step, &f, &mut out);
            for i in 0..n {
                let left = if kind == KernelKind::Derivative { 1.0 } else { eta[i] };
                let want: C = (0..n).map(|j| dense[(i, j)] * u[j]).sum::<C>() / left;
                prop_assert!((out[i] - want).norm() <= 1e-10 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn resolvent_identity_holds(c in 0.5f64..200.0, width in 0.5f64..1.5, amp in 0.1f64..3.0) {
        let p = TwistProfile::gaussian(amp, width).unwrap();
        let z = C::new(0.0, 0.0);
        let j = resolvent_form(&p, c, 0.0, z, &axis()).unwrap();
        let jp = resolvent_form_prime(&p, c, 0.0, z, &axis()).unwrap();
        let e = p.norm_sq();
        prop_assert!((jp + c * j - e).norm() <= 1e-8 * e);
    }

    #[test]
    fn imaginary_part_is_fourier_weight(m in 0.5f64..3.0, width in 0.5f64..1.2) {
        let p = TwistProfile::gaussian(1.0, width).unwrap();
        let j = resolvent_form(&p, 0.0, m * m, C::new(0.0, 0.0), &axis()).unwrap();
        let want = PI / m * p.fourier_transform(m).norm_sqr();
        prop_assert!((j.im - want).abs() <= 1e-6 * want, "{} vs {}", j.im, want);
    }

    #[test]
    fn decay_certificate_bounds_profile(amp in 0.1f64..5.0, width in 0.3f64..3.0, alpha in 0.2f64..8.0) {
        let p = TwistProfile::gaussian(amp, width).unwrap();
        let cert = validate_decay(&p, alpha).unwrap();
        for i in 0..400 {
            let x = -cert.range + 2.0 * cert.range * i as f64 / 399.0;
            let (e, de) = p.eval(x);
            let bound = cert.constant * (-alpha * (1.0 + x * x).sqrt()).exp();
            prop_assert!(e.abs() <= bound * (1.0 + 1e-9) && de.abs() <= bound * (1.0 + 1e-9));
        }
    }

    #[test]
    fn clusters_partition_sorted_values(mut v in prop::collection::vec(1.0f64..100.0, 2..30)) {
        v.sort_by(f64::total_cmp);
        if let Ok(cl) = cluster_modes(&v, ClusterTol::Absolute(1e-9), None) {
            let total: usize = cl.iter().map(|c| c.multiplicity).sum();
            prop_assert_eq!(total, v.len());
            for c in &cl {
                for i in c.indices() {
                    prop_assert!((v[i] - c.eigenvalue).abs() <= 1e-9 * c.multiplicity as f64);
                }
            }
        }
    }

    #[test]
    fn predictions_scale_quadratically(re in -1.0f64..1.0, im in -1.0f64..1.0, delta in 0.001f64..0.1) {
        let nu = [C::new(re, im)];
        let a = predicted_resonances(&nu, delta)[0];
        let b = predicted_resonances(&nu, 2.0 * delta)[0];
        prop_assert!((b - 4.0 * a).norm() <= 1e-14 * b.norm().max(1e-300));
    }

    #[test]
    fn branch_fit_recovers_polynomials(
        c2r in -2.0f64..2.0, c2i in -2.0f64..2.0, c3r in -5.0f64..5.0, c3i in -5.0f64..5.0,
    ) {
        let (c2, c3) = (C::new(c2r, c2i), C::new(c3r, c3i));
        let deltas = [0.02, 0.04, 0.08];
        let roots: Vec<C> = deltas.iter().map(|&d| c2 * d * d + c3 * d * d * d).collect();
        let fit = fit_branch(C::i() * c2, &deltas, &roots).unwrap();
        prop_assert!((fit.c2 - c2).norm() <= 1e-9 * (1.0 + c2.norm()));
        prop_assert!((fit.c3 - c3).norm() <= 1e-7 * (1.0 + c3.norm()));
    }
}
