//! The master-equation oracle against the continued fraction where the two
//! models coincide (negligible cavity damping during a transit).

use maser_core::oracle::{
    compare_with_cf, compare_with_cf_params, rate_equation_state, transit_map, FieldDecay,
    OracleRun, PumpModel, Tolerances,
};
use maser_core::steady_state::continued_fraction;
use maser_core::{CavityParams, FockDim};

fn point(n: f64, kappa: f64, nth: f64, d: f64) -> CavityParams {
    CavityParams::new(n, kappa, 0.0, nth, 0.0)
        .unwrap()
        .with_pump_parameter(d)
        .unwrap()
}

#[test]
fn oracle_matches_small_micromaser() {
    let p = point(5.0, 1e-7, 0.0, 2.0);
    let r = compare_with_cf(&p, &PumpModel::from_params(&p), &OracleRun::default(), &Tolerances::default())
        .unwrap();
    assert!(r.pass, "L1 = {}", r.l1);
    assert!(r.l1 < 1e-2);
}

#[test]
fn oracle_matches_thermal_micromaser_profile() {
    let p = point(20.0, 1e-7, 0.15, 3.0);
    let r = compare_with_cf(&p, &PumpModel::from_params(&p), &OracleRun::default(), &Tolerances::default())
        .unwrap();
    assert!(r.l1 < 1e-2, "L1 = {}", r.l1);
    assert!(r.delta_mean.abs() < 0.05);
}

#[test]
fn ratios_match_rate_equation_of_exact_transit_map() {
    let p = point(20.0, 1e-7, 0.0, 3.0);
    let dim = FockDim::new(50).unwrap();
    let map = transit_map(&p, p.tau, dim).unwrap();
    let decay = FieldDecay::new(&p, dim.size());
    let exact = rate_equation_state(&map, &decay, p.pump_rate()).unwrap();
    let v = continued_fraction(&p, FockDim::new(120).unwrap()).unwrap();
    let mut checked = 0;
    for n in 1..dim.size() {
        if exact[n] > 1e-8 && exact[n - 1] > 1e-8 {
            let ratio = exact[n] / exact[n - 1];
            assert!(
                ((v[n - 1] - ratio) / ratio).abs() < 1e-3,
                "n = {n}: v = {}, oracle ratio = {ratio}",
                v[n - 1]
            );
            checked += 1;
        }
    }
    assert!(checked > 10);
}

#[test]
fn mismatched_kappa_is_flagged() {
    let oracle = point(5.0, 1e-3, 0.0, 2.0);
    let mut cf = oracle;
    cf.kappa = 1e-1;
    let run = OracleRun {
        trajectories: 200,
        ..OracleRun::default()
    };
    let r = compare_with_cf_params(&oracle, &cf, &PumpModel::from_params(&oracle), &run, &Tolerances::default())
        .unwrap();
    assert!(!r.pass);
    assert!(r.l1 > 0.1, "L1 = {}", r.l1);
}

#[test]
fn report_serializes() {
    let p = point(1.0, 1e-2, 0.15, 1.0);
    let run = OracleRun {
        trajectories: 100,
        n_max: Some(12),
        ..OracleRun::default()
    };
    let r = compare_with_cf(&p, &PumpModel::from_params(&p), &run, &Tolerances::default()).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    for key in ["l1", "max_abs_dev", "delta_mean", "pass", "p_oracle", "p_cf", "l1_noise"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["oracle_params"]["N"], 1.0);
}
