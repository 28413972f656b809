//! Manufactured heat-equation solution: p ≡ m ≡ 2, f ≡ 0, u₀ = sin(πx) on
//! (0, 1), exact solution e^{−π²t} sin(πx).

use std::f64::consts::PI;
use std::sync::Arc;

use dnflow::convex::ProxConfig;
use dnflow::{ExponentField, ForcingSpec, Grid, GridFunction};

/// Final time of the heat study.
const HEAT_T: f64 = 0.1;

fn max_l2_error(n_steps: usize, cells: usize, t_final: f64) -> f64 {
    let g = Arc::new(Grid::new_1d(cells, 0.0, 1.0).unwrap());
    let two = ExponentField::constant(&g, 2.0).unwrap();
    let u0 = GridFunction::from_fn_dirichlet(&g, |x| (PI * x[0]).sin()).unwrap();
    let r = dnflow::run(&u0, &ForcingSpec::zero(), t_final, n_steps, &two, &two, &ProxConfig::default()).unwrap();
    (0..=n_steps)
        .map(|n| {
            let t = r.time(n);
            let exact = GridFunction::from_fn(&g, |x| (-PI * PI * t).exp() * (PI * x[0]).sin()).unwrap();
            let d = r.u(n).sub(&exact);
            dnflow::field::inner(&d, &d).sqrt()
        })
        .fold(0.0, f64::max)
}

#[test]
fn heat_error_is_small_and_first_order() {
    let coarse = max_l2_error(100, 128, HEAT_T);
    let fine = max_l2_error(200, 256, HEAT_T);
    let ratio = coarse / fine;
    eprintln!("heat: coarse {coarse:e}, fine {fine:e}, ratio {ratio}");
    assert!(coarse <= 0.02);
    assert!((1.5..=4.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn heat_energy_dissipates() {
    let g = Arc::new(Grid::new_1d(64, 0.0, 1.0).unwrap());
    let two = ExponentField::constant(&g, 2.0).unwrap();
    let u0 = GridFunction::from_fn_dirichlet(&g, |x| (PI * x[0]).sin()).unwrap();
    let r = dnflow::run(&u0, &ForcingSpec::zero(), HEAT_T, 20, &two, &two, &ProxConfig::default()).unwrap();
    for n in 0..20 {
        assert!(r.phi(n + 1) < r.phi(n));
    }
}

#[test]
fn tiny_horizon_stays_near_initial_data() {
    let g = Arc::new(Grid::new_1d(32, 0.0, 1.0).unwrap());
    let two = ExponentField::constant(&g, 2.0).unwrap();
    let u0 = GridFunction::from_fn_dirichlet(&g, |x| (PI * x[0]).sin()).unwrap();
    let r = dnflow::run(&u0, &ForcingSpec::zero(), 1e-8, 2, &two, &two, &ProxConfig::default()).unwrap();
    let d = r.u(2).sub(&u0);
    assert!(d.max_abs() < 1e-6);
}
