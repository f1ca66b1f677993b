use std::f64::consts::PI;

use maser_core::bell::{bell_sum, bell_sum_with, detect_map, joint_probs};
use maser_core::fock::sandwich;
use maser_core::steady_state::{continued_fraction, steady_state_stats};
use maser_core::sweep::{find_peaks, parse_csv, to_csv, Metadata, Mode, SweepConfig, SweepFile};
use maser_core::{
    make_measurement_ops, CavityParams, DensityMatrix, E0Mode, FockDim, FockOperator, Outcome,
    PhaseTriple, SweepRow,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn diagonal_state(weights: &[f64]) -> DensityMatrix {
    // Two empty top levels leave room for the probe photons.
    let mut p = weights.to_vec();
    p.extend([0.0, 0.0]);
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    DensityMatrix::from_diagonal(FockDim::new(p.len() - 1).unwrap(), &p).unwrap()
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..25)
}

fn complex_matrix(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        DMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| Complex64::new(re, im)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sandwich_adjoint_symmetry(
        l in complex_matrix(5),
        r in complex_matrix(5),
        h in complex_matrix(5),
    ) {
        let dim = FockDim::new(4).unwrap();
        let herm = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let rho = DensityMatrix::from_matrix(dim, herm).unwrap();
        let lo = FockOperator::from_matrix(dim, l).unwrap();
        let ro = FockOperator::from_matrix(dim, r).unwrap();
        let lhs = sandwich(&lo, &rho, &ro).unwrap().adjoint();
        let rhs = sandwich(&ro, &rho, &lo).unwrap();
        prop_assert!((lhs.entries() - rhs.entries()).norm() < 1e-12);
    }

    #[test]
    fn diagonal_states_detect_with_probability_one_half(
        w in weights(),
        theta in 0.0f64..12.0,
        phi in -PI..PI,
    ) {
        let rho = diagonal_state(&w);
        let ops = make_measurement_ops(theta, rho.dim()).unwrap();
        for o in Outcome::BOTH {
            let m = detect_map(&rho, &ops, phi, o).unwrap();
            prop_assert!((m.trace() - 0.5).abs() < 1e-12);
            prop_assert!(m.hermiticity_error() < 1e-12);
            prop_assert!(m.eigenvalues()[0] > -1e-10);
        }
    }

    #[test]
    fn joint_probabilities_are_a_distribution(
        w in weights(),
        theta in 0.0f64..12.0,
        pa in -PI..PI,
        pb in -PI..PI,
    ) {
        let rho = diagonal_state(&w);
        let ops = make_measurement_ops(theta, rho.dim()).unwrap();
        let jp = joint_probs(&rho, &ops, pa, pb).unwrap();
        prop_assert!((jp.total() - 1.0).abs() < 1e-10);
        for p in [jp.p_ee, jp.p_eg, jp.p_ge, jp.p_gg] {
            prop_assert!((-1e-10..=1.0 + 1e-10).contains(&p));
        }
        let e = maser_core::correlation_e(&jp);
        prop_assert!((e - (2.0 * (jp.p_ee + jp.p_gg) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn probabilities_are_two_pi_periodic(
        w in weights(),
        theta in 0.0f64..12.0,
        pa in -PI..PI,
        pb in -PI..PI,
        k in -3i32..3,
    ) {
        let rho = diagonal_state(&w);
        let ops = make_measurement_ops(theta, rho.dim()).unwrap();
        let shift = 2.0 * PI * k as f64;
        let a = joint_probs(&rho, &ops, pa, pb).unwrap();
        let b = joint_probs(&rho, &ops, pa + shift, pb - shift).unwrap();
        prop_assert!((a.p_ee - b.p_ee).abs() < 1e-12);
        prop_assert!((a.p_eg - b.p_eg).abs() < 1e-12);
        prop_assert!((a.p_ge - b.p_ge).abs() < 1e-12);
        prop_assert!((a.p_gg - b.p_gg).abs() < 1e-12);
    }

    #[test]
    fn bell_sum_ignores_a_global_phase(
        w in weights(),
        theta in 0.0f64..12.0,
        delta in -PI..PI,
    ) {
        let rho = diagonal_state(&w);
        let ops = make_measurement_ops(theta, rho.dim()).unwrap();
        let phases = PhaseTriple::default();
        let a = bell_sum(&rho, &ops, &phases).unwrap();
        let b = bell_sum(&rho, &ops, &phases.shifted(delta)).unwrap();
        prop_assert!((a.b - b.b).abs() < 1e-10);
    }

    #[test]
    fn bell_result_is_consistent(w in weights(), theta in 0.0f64..12.0) {
        let rho = diagonal_state(&w);
        let ops = make_measurement_ops(theta, rho.dim()).unwrap();
        let r = bell_sum(&rho, &ops, &PhaseTriple::default()).unwrap();
        for e in [r.e12, r.e13, r.e23, r.e0] {
            prop_assert!(e.abs() <= 1.0 + 1e-10);
        }
        prop_assert!((r.e0 - (2.0 * r.m0 - 1.0)).abs() < 1e-10);
        prop_assert!(r.m0 >= -1e-10 && r.m0 <= 1.0 + 1e-10);
        prop_assert_eq!(r.b, (r.e12 - r.e13).abs() + r.sign_e0 * (r.e23 - r.e0));
        // For a diagonal field the equal-phase correlation does not depend on the phase.
        let avg = bell_sum_with(&rho, &ops, &PhaseTriple::default(), E0Mode::Averaged).unwrap();
        prop_assert!((avg.e0 - r.e0).abs() < 1e-10);
    }

    #[test]
    fn completeness_below_the_edge(theta in 0.0f64..30.0, n_max in 1usize..64) {
        let ops = make_measurement_ops(theta, FockDim::new(n_max).unwrap()).unwrap();
        prop_assert!(ops.completeness_defect() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn thermal_ratios_are_the_detailed_balance_value(nth in 0.0f64..3.0, kappa in 1e-7f64..1e-1) {
        let p = CavityParams::new(0.0, kappa, 0.0, nth, 1.0).unwrap();
        let v = continued_fraction(&p, FockDim::new(300).unwrap()).unwrap();
        let q = nth / (1.0 + nth);
        // The zero seed at the top is forgotten geometrically going down.
        for x in v.iter().take(100) {
            prop_assert!((x - q).abs() < 1e-12);
        }
    }

    #[test]
    fn micromaser_steady_state_is_normalized(
        n in 1.0f64..60.0,
        d in 0.05f64..8.0,
        nth in 0.0f64..0.5,
    ) {
        let p = CavityParams::new(n, 1e-7, 0.0, nth, 0.0).unwrap().with_pump_parameter(d).unwrap();
        let s = steady_state_stats(&p).unwrap();
        let total: f64 = s.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(s.probabilities().iter().all(|&x| x >= 0.0));
        prop_assert!(s.mean().is_finite() && s.variance().is_finite());
        prop_assert!(s.tail_mass() < 1e-10);
    }

    #[test]
    fn steady_state_is_continuous_in_tau(n in 2.0f64..40.0, d in 0.3f64..5.0) {
        let p = CavityParams::new(n, 1e-7, 0.0, 0.15, 0.0).unwrap().with_pump_parameter(d).unwrap();
        let mut q = p;
        q.tau *= 1.0 + 1e-6;
        let a = steady_state_stats(&p).unwrap();
        let b = steady_state_stats(&q).unwrap();
        let trapped = maser_core::steady_state::trapped_states(&p, a.dim(), 1e-3);
        prop_assume!(trapped.is_empty());
        prop_assert!(a.l1_distance(&b) < 1e-3);
    }
}

fn row_strategy() -> impl Strategy<Value = SweepRow> {
    (
        (0.0f64..20.0, 0.0f64..5.0, -1.0f64..1.0, -1.0f64..1.0),
        (-1.0f64..1.0, -1.0f64..1.0, -2.0f64..2.0, 0.0f64..200.0),
        (1usize..2000, 0.0f64..10.0),
    )
        .prop_map(|((a, t, e12, e13), (e23, e0, b, m), (n, w))| SweepRow {
            axis_value: a,
            tau: t,
            e12,
            e13,
            e23,
            e0,
            b,
            mean_photon: m,
            n_max: n,
            wall_time: w,
            status: "ok".into(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_emit_parse_emit_is_idempotent(rows in prop::collection::vec(row_strategy(), 0..20)) {
        let file = SweepFile {
            metadata: Metadata::for_config(&SweepConfig::preset(Mode::Laser)),
            rows,
        };
        let once = to_csv(&file).unwrap();
        let parsed = parse_csv(&once).unwrap();
        prop_assert_eq!(parsed.rows.len(), file.rows.len());
        for (a, b) in parsed.rows.iter().zip(&file.rows) {
            prop_assert!((a.b - b.b).abs() <= 1e-11 * b.b.abs().max(1e-300));
        }
        prop_assert_eq!(to_csv(&parsed).unwrap(), once);
    }

    #[test]
    fn peaks_are_strict_interior_maxima(
        bs in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]), 3..40)
    ) {
        let rows: Vec<SweepRow> = bs
            .iter()
            .enumerate()
            .map(|(i, &b)| SweepRow {
                axis_value: i as f64,
                tau: 0.0,
                e12: 0.0,
                e13: 0.0,
                e23: 0.0,
                e0: 0.0,
                b,
                mean_photon: 0.0,
                n_max: 1,
                wall_time: 0.0,
                status: "ok".into(),
            })
            .collect();
        let s = find_peaks(&rows).unwrap();
        for p in &s.peaks {
            let i = p.index;
            prop_assert!(i > 0 && i + 1 < bs.len());
            prop_assert!(bs[i - 1] < bs[i]);
            let mut j = i;
            while bs[j + 1] == bs[i] {
                j += 1;
            }
            prop_assert!(bs[j + 1] < bs[i]);
        }
        let max = bs.iter().copied().fold(f64::MIN, f64::max);
        prop_assert_eq!(s.global_max.unwrap().b, max);
        prop_assert_eq!(s.second_peak, s.peaks.get(1).copied());
    }
}
