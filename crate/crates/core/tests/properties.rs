//! Randomized invariants of the step-size rule, the network model, the
//! objective and the convergence certificate.

use dgmbb_core::bb::{bb_long, bb_short, CurvaturePair};
use dgmbb_core::graph::{generate_erdos_renyi, metropolis_weights, validate_weights, STOCHASTIC_TOL};
use dgmbb_core::objective::{generate_sensing_instance, SensingSpec};
use dgmbb_core::theory::{
    alpha_hat, build_g_alpha, delta_bound, matvec, min_inner_loops, select_c, spectral_radius_3x3, C3_MARGIN,
};
use dgmbb_core::{Error, Objective, ProblemConstants};
use nalgebra::{DMatrix, DVector, Matrix3};
use proptest::prelude::*;

fn constants() -> impl Strategy<Value = ProblemConstants> {
    (0.2f64..5.0, 0.02f64..1.0, 1usize..400).prop_map(|(l, ratio, n)| ProblemConstants::new(l, l * ratio, n).unwrap())
}

/// `(constants, c)` with `c₃` strictly above its floor.
fn admissible_c() -> impl Strategy<Value = (ProblemConstants, [f64; 3])> {
    (constants(), 0.01f64..10.0, 0.01f64..10.0, 1e-3f64..5.0)
        .prop_map(|(k, c1, c2, slack)| (k, [c1, c2, k.c3_floor(c1, c2) * (1.0 + slack)]))
}

fn spd(p: usize, entries: &[f64], lipschitz: f64, mu: f64) -> DMatrix<f64> {
    let a = DMatrix::from_column_slice(p, p, &entries[..p * p]);
    let ata = a.transpose() * &a;
    let top = ata.symmetric_eigenvalues().max();
    let mut h = ata * ((lipschitz - mu) / top.max(1e-300));
    for i in 0..p {
        h[(i, i)] += mu;
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bb_steps_lie_in_the_curvature_bracket(
        p in 1usize..7,
        entries in prop::collection::vec(-1.0f64..1.0, 36),
        s in prop::collection::vec(-10.0f64..10.0, 6),
        lipschitz in 0.1f64..10.0,
        ratio in 0.01f64..1.0,
        scale in 1e-6f64..1e6,
    ) {
        let mu = lipschitz * ratio;
        let h = spd(p, &entries, lipschitz, mu);
        let s = DVector::from_column_slice(&s[..p]);
        prop_assume!(s.norm() > 1e-6);
        let z = &h * &s;
        let pair = CurvaturePair { s: s.as_slice(), z: z.as_slice() };
        let (long, short) = (bb_long(pair).unwrap(), bb_short(pair).unwrap());
        let tol = 1e-12 / mu;
        prop_assert!(short >= 1.0 / lipschitz - tol && long <= 1.0 / mu + tol, "short={short} long={long}");
        prop_assert!(short <= long * (1.0 + 1e-12));

        // Both quotients are invariant under s → ts (z scales with it).
        let (ts, tz) = (&s * scale, &z * scale);
        let scaled = CurvaturePair { s: ts.as_slice(), z: tz.as_slice() };
        prop_assert!((bb_long(scaled).unwrap() / long - 1.0).abs() < 1e-12);
        prop_assert!((bb_short(scaled).unwrap() / short - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erdos_renyi_is_deterministic_connected_and_mixes(n in 1usize..40, r_c in 0.05f64..1.0, seed in any::<u64>()) {
        let g = match generate_erdos_renyi(n, r_c, seed) {
            Ok(g) => g,
            // Sparse small graphs may never connect; that must be reported, not hidden.
            Err(Error::RetriesExhausted { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(&g, &generate_erdos_renyi(n, r_c, seed).unwrap());
        prop_assert!(g.is_connected());
        let w = metropolis_weights(&g).unwrap();
        let report = validate_weights(w.matrix(), Some(&g), STOCHASTIC_TOL);
        prop_assert!(report.passed(), "{report:?}");
        prop_assert!(w.delta() < 1.0);
    }

    #[test]
    fn local_objectives_are_strongly_convex_and_smooth(
        n in 1usize..6,
        p in 2usize..6,
        extra in 0usize..5,
        ratio in 0.05f64..1.0,
        seed in any::<u64>(),
        a in prop::collection::vec(-3.0f64..3.0, 6),
        b in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let spec = SensingSpec { n, m: p + extra, p, lipschitz: 2.0, mu: 2.0 * ratio, noise: 0.1 };
        let inst = generate_sensing_instance(&spec, seed).unwrap();
        let (x, y) = (&a[..p], &b[..p]);
        let d: Vec<f64> = y.iter().zip(x).map(|(u, v)| u - v).collect();
        let dd: f64 = d.iter().map(|v| v * v).sum();
        for i in 0..n {
            let (gx, gy) = (inst.gradient(i, x), inst.gradient(i, y));
            let lin: f64 = gx.iter().zip(&d).map(|(g, v)| g * v).sum();
            let (fx, fy) = (inst.value(i, x), inst.value(i, y));
            let slack = 1e-9 * (1.0 + fx.abs() + fy.abs());
            prop_assert!(fy >= fx + lin + 0.5 * spec.mu * dd - slack);
            prop_assert!(fy <= fx + lin + 0.5 * spec.lipschitz * dd + slack);
            let gd: f64 = gx.iter().zip(&gy).map(|(u, v)| (u - v) * (u - v)).sum();
            prop_assert!(gd.sqrt() <= spec.lipschitz * dd.sqrt() * (1.0 + 1e-9) + 1e-12);
            let mut z = vec![0.0; p];
            inst.gradient_difference_into(i, &d, &gy, &gx, &mut z);
            for c in 0..p {
                prop_assert!((z[c] - (gy[c] - gx[c])).abs() <= 1e-12 * (1.0 + gx[c].abs() + gy[c].abs()));
            }
        }
    }

    #[test]
    fn spectral_radius_matches_a_general_eigensolver(entries in prop::collection::vec(0.0f64..5.0, 9)) {
        let g = [[entries[0], entries[1], entries[2]], [entries[3], entries[4], entries[5]], [entries[6], entries[7], entries[8]]];
        let ours = spectral_radius_3x3(&g).unwrap();
        let m = Matrix3::from_row_slice(&entries);
        let reference = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((ours - reference).abs() <= 1e-9 * (1.0 + reference), "{ours} vs {reference}");
    }

    #[test]
    fn witness_implies_contraction(
        k in constants(),
        delta in 0.0f64..0.999,
        rounds in 1usize..12,
        alpha in 0.01f64..20.0,
        c in prop::collection::vec(0.01f64..10.0, 3),
    ) {
        let g = build_g_alpha(delta, rounds, &k, alpha / k.lipschitz).unwrap();
        let c = [c[0], c[1], c[2]];
        let gc = matvec(&g, &c);
        if (0..3).all(|i| gc[i] < c[i]) {
            prop_assert!(spectral_radius_3x3(&g).unwrap() < 1.0);
        }
    }

    #[test]
    fn more_rounds_never_increase_the_radius(
        k in constants(),
        delta in 0.0f64..0.999,
        rounds in 1usize..15,
        alpha in 0.01f64..20.0,
    ) {
        let a = alpha / k.lipschitz;
        let here = spectral_radius_3x3(&build_g_alpha(delta, rounds, &k, a).unwrap()).unwrap();
        let next = spectral_radius_3x3(&build_g_alpha(delta, rounds + 1, &k, a).unwrap()).unwrap();
        prop_assert!(next <= here + 1e-12, "R={rounds}: {here} -> {next}");
    }

    #[test]
    fn delta_bound_and_round_count_are_scale_free((k, c) in admissible_c(), t in 1e-3f64..1e3, delta in 0.0f64..0.999) {
        let scaled = [t * c[0], t * c[1], t * c[2]];
        let (a, b) = (delta_bound(&c, &k).unwrap(), delta_bound(&scaled, &k).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert_eq!(min_inner_loops(a, delta).unwrap(), min_inner_loops(b, delta).unwrap());
    }

    #[test]
    fn enough_rounds_admit_steps_beyond_one_over_mu((k, c) in admissible_c(), delta in 0.0f64..0.999, extra in 0usize..4) {
        let big_delta = delta_bound(&c, &k).unwrap();
        let r_min = min_inner_loops(big_delta, delta).unwrap();
        prop_assert!(delta.powi(r_min as i32) < big_delta);
        if r_min > 1 {
            prop_assert!(delta.powi(r_min as i32 - 1) >= big_delta * (1.0 - 1e-12));
        }
        let hat = alpha_hat(&c, delta, r_min + extra, &k).unwrap();
        prop_assert!(hat > 1.0 / k.mu, "alpha_hat={hat}, 1/mu={}", 1.0 / k.mu);
    }

    /// Below `α̂` the chosen `c` certifies contraction row by row.
    #[test]
    fn steps_below_alpha_hat_give_a_witness((k, c) in admissible_c(), delta in 0.0f64..0.999, extra in 0usize..4, frac in 0.01f64..0.999) {
        let r = min_inner_loops(delta_bound(&c, &k).unwrap(), delta).unwrap() + extra;
        let hat = alpha_hat(&c, delta, r, &k).unwrap();
        let g = build_g_alpha(delta, r, &k, frac * hat).unwrap();
        let gc = matvec(&g, &c);
        prop_assert!((0..3).all(|i| gc[i] < c[i]), "Gc={gc:?} c={c:?}");
        prop_assert!(spectral_radius_3x3(&g).unwrap() < 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// No point of a dense log-lattice over `(c₂, c₃)` beats the selected `c`.
    #[test]
    fn selected_c_beats_a_lattice(k in constants(), delta in 0.0f64..0.99) {
        let (c, r) = select_c(&k, delta).unwrap();
        let chosen = delta_bound(&c, &k).unwrap();
        prop_assert_eq!(r, min_inner_loops(chosen, delta).unwrap());
        let mut best: f64 = 0.0;
        for i in 0..=80 {
            let c2 = 10f64.powf(-4.0 + 8.0 * i as f64 / 80.0);
            let floor = k.c3_floor(1.0, c2) * (1.0 + C3_MARGIN);
            for j in 0..=40 {
                let c3 = floor * 10f64.powf(4.0 * j as f64 / 40.0);
                best = best.max(delta_bound(&[1.0, c2, c3], &k).unwrap());
            }
        }
        prop_assert!(chosen >= best * (1.0 - 1e-6), "selected {chosen}, lattice {best}");
    }
}
