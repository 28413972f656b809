use std::f64::consts::PI;
use std::sync::Arc;

use dnflow::convex::ProxConfig;
use dnflow::diagnostics::{
    chain_rule_report, energy_suprema, first_energy_report, margins_to_csv, moreau_yosida_report,
    regularization_report, second_energy_report, summarize, telescoped_gap, InequalityMargin,
};
use dnflow::forcing::{SpaceProfile, TimeProfile};
use dnflow::{ExponentField, ExponentSpec, ForcingSpec, Grid, GridFunction, RunReport};

fn variable_run(cells: usize, n: usize, forcing: ForcingSpec) -> RunReport {
    let g = Arc::new(Grid::new_1d(cells, 0.0, 1.0).unwrap());
    let p = ExponentSpec::SineBump { base: 2.5, amplitude: 0.4 }.sample(&g).unwrap();
    let m = ExponentSpec::Ramp { base: 2.0, slope: 0.5 }.sample(&g).unwrap();
    let u0 = GridFunction::from_fn_dirichlet(&g, |x| (PI * x[0]).sin()).unwrap();
    dnflow::run(&u0, &forcing, 0.2, n, &p, &m, &ProxConfig::default()).unwrap()
}

fn heat_run(cells: usize, n: usize) -> RunReport {
    let g = Arc::new(Grid::new_1d(cells, 0.0, 1.0).unwrap());
    let two = ExponentField::constant(&g, 2.0).unwrap();
    let u0 = GridFunction::from_fn_dirichlet(&g, |x| (PI * x[0]).sin()).unwrap();
    dnflow::run(&u0, &ForcingSpec::zero(), 0.1, n, &two, &two, &ProxConfig::default()).unwrap()
}

fn all_hold(ms: &[InequalityMargin]) {
    for m in ms {
        assert!(m.holds, "{m:?}");
    }
}

fn decaying() -> ForcingSpec {
    ForcingSpec::Separable { space: SpaceProfile::SineBump { amplitude: 3.0 }, time: TimeProfile::ExpDecay { rate: 2.0 } }
}

#[test]
fn trivial_trajectory_has_zero_sides() {
    let g = Arc::new(Grid::new_1d(12, 0.0, 1.0).unwrap());
    let p = ExponentField::constant(&g, 2.2).unwrap();
    let r = dnflow::run(&GridFunction::zeros(&g), &ForcingSpec::zero(), 1.0, 6, &p, &p, &ProxConfig::default()).unwrap();
    for m in first_energy_report(&r).unwrap().iter().chain(&chain_rule_report(&r).unwrap()).chain(&second_energy_report(&r).unwrap()) {
        assert!(m.holds, "{m:?}");
        if m.name != "dps_bdd" {
            assert_eq!(m.margin, 0.0, "{m:?}");
        }
    }
    assert_eq!(telescoped_gap(&r), 0.0);
}

#[test]
fn counts_follow_the_step_structure() {
    let r = variable_run(32, 10, decaying());
    let first = first_energy_report(&r).unwrap();
    assert_eq!(first.iter().filter(|m| m.name == "ei01").count(), 10);
    assert_eq!(first.iter().filter(|m| m.name == "est0").count(), 10);
    let second = second_energy_report(&r).unwrap();
    assert_eq!(second.iter().filter(|m| m.name == "dexdu").count(), 9);
    assert_eq!(second.iter().filter(|m| m.name == "star_eq").count(), 9);
    assert_eq!(second.iter().filter(|m| m.name == "ee2").count(), 7);
    let chain = chain_rule_report(&r).unwrap();
    assert_eq!(chain.len(), 21);
}

#[test]
fn ladder_holds_on_forced_and_unforced_runs() {
    for forcing in [ForcingSpec::zero(), decaying()] {
        let r = variable_run(48, 16, forcing);
        all_hold(&first_energy_report(&r).unwrap());
        all_hold(&chain_rule_report(&r).unwrap());
        all_hold(&second_energy_report(&r).unwrap());
        let s = energy_suprema(&r).unwrap();
        assert!([s.est1, s.est2, s.est3, s.est4, s.est5].iter().all(|v| v.is_finite()));
    }
}

#[test]
fn unforced_est0_is_dissipation() {
    let r = variable_run(32, 8, ForcingSpec::zero());
    for m in first_energy_report(&r).unwrap().iter().filter(|m| m.name == "est0") {
        assert_eq!(m.rhs, r.phi0);
    }
}

#[test]
fn time_independent_forcing_zeroes_dexdu_right_side() {
    let f = ForcingSpec::Separable { space: SpaceProfile::Constant { value: 2.0 }, time: TimeProfile::Constant };
    let r = variable_run(32, 8, f);
    for m in second_energy_report(&r).unwrap().iter().filter(|m| m.name == "dexdu") {
        assert_eq!(m.rhs, 0.0);
        assert!(m.lhs <= 1e-12 && m.holds);
    }
}

#[test]
fn telescoped_gap_halves_under_refinement() {
    let coarse = telescoped_gap(&heat_run(64, 50));
    let fine = telescoped_gap(&heat_run(128, 100));
    let ratio = coarse / fine;
    assert!((1.5..=3.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn regularization_shape() {
    let r = heat_run(64, 64);
    let t = r.t_final;
    let rep = regularization_report(&r, &[t / 8.0, t / 4.0, t / 2.0]).unwrap();
    assert!(rep.skipped.is_none());
    all_hold(&rep.margins);
    assert!(rep.points.windows(2).all(|w| w[1].s <= w[0].s));
    assert!(rep.points.iter().all(|p| p.delta_s <= rep.c_run));

    let rough = ForcingSpec::Separable { space: SpaceProfile::SineBump { amplitude: 1.0 }, time: TimeProfile::InverseSqrt };
    let r = variable_run(24, 8, rough);
    let rep = regularization_report(&r, &[0.05]).unwrap();
    assert!(rep.skipped.unwrap().contains("unbounded"));
    assert!(rep.margins.is_empty());
}

#[test]
fn moreau_yosida_checks() {
    let g = Arc::new(Grid::new_1d(32, 0.0, 1.0).unwrap());
    let p = ExponentSpec::SineBump { base: 2.5, amplitude: 0.4 }.sample(&g).unwrap();
    let m = ExponentSpec::Ramp { base: 2.0, slope: 0.5 }.sample(&g).unwrap();
    let samples = vec![
        GridFunction::from_fn_dirichlet(&g, |x| (PI * x[0]).sin()).unwrap(),
        GridFunction::from_fn_dirichlet(&g, |x| x[0] * (1.0 - x[0])).unwrap(),
    ];
    let rep = moreau_yosida_report(&p, &m, &samples, &[1.0, 0.1, 0.01, 1e-4], &ProxConfig::default()).unwrap();
    all_hold(&rep.margins);
    assert!(rep.margins.iter().any(|m| m.name == "my_convergence"));
    assert!(rep.margins.iter().any(|m| m.name == "my_commute"));
    let zero = moreau_yosida_report(&p, &m, &[GridFunction::zeros(&g)], &[1.0, 0.1], &ProxConfig::default()).unwrap();
    assert!(zero.rows.iter().all(|r| r.envelope == 0.0 && r.phi == 0.0));
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let ms = vec![InequalityMargin::new("ei01", 3, 0.1, 1.0 / 3.0, 0.0)];
    let csv = margins_to_csv(&ms);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("name,index,lhs,rhs,margin,holds"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "ei01");
    assert_eq!(row[2], "1.0000000000000001e-1");
    assert_eq!(row[3], "3.3333333333333331e-1");
    assert_eq!(row[5], "true");
    assert_eq!(summarize(&ms).violations, 0);
}
