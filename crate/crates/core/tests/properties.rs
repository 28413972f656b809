//! Randomized invariants of the modular toolkit, the energy and the
//! proximal family.

use std::sync::Arc;

use dnflow::convex::{prox, ProxConfig};
use dnflow::energy::{dphi, phi, DirichletEnergy};
use dnflow::field::inner;
use dnflow::modular::{
    dpsi, dual_norm_bound_check, holder_pairing_bound, luxemburg_norm, modular, psi, psi_star, sigma_bounds,
    young_pointwise,
};
use dnflow::{ExponentField, ExponentSpec, Grid, GridFunction};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Arc<Grid>> {
    prop_oneof![
        (4usize..40).prop_map(|n| Arc::new(Grid::new_1d(n, 0.0, 1.0).unwrap())),
        (3usize..9, 3usize..9).prop_map(|(a, b)| Arc::new(Grid::new_2d([a, b], [0.0, 0.0], [1.0, 1.5]).unwrap())),
    ]
}

fn spec_strategy() -> impl Strategy<Value = ExponentSpec> {
    prop_oneof![
        (1.1f64..4.0).prop_map(|value| ExponentSpec::Constant { value }),
        (1.1f64..3.0, 0.0f64..1.0).prop_map(|(base, slope)| ExponentSpec::Ramp { base, slope }),
        (1.6f64..3.0, 0.0f64..0.5).prop_map(|(base, amplitude)| ExponentSpec::SineBump { base, amplitude }),
        (1.1f64..4.0, 1.1f64..4.0, 0.2f64..0.8).prop_map(|(left, right, split)| ExponentSpec::Step { left, right, split }),
    ]
}

/// Grid, exponent and two fields with entries of widely varying scale.
fn case() -> impl Strategy<Value = (Arc<Grid>, ExponentField, GridFunction, GridFunction)> {
    (grid_strategy(), spec_strategy(), -3.0f64..3.0, any::<u64>()).prop_map(|(g, spec, log_scale, seed)| {
        let p = spec.sample(&g).unwrap();
        let scale = 10f64.powf(log_scale);
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut field = |interior: bool| {
            let vals = (0..g.len()).map(|i| if interior && g.is_boundary(i) { 0.0 } else { scale * next() }).collect();
            GridFunction::new(g.clone(), vals).unwrap()
        };
        let a = field(true);
        let b = field(true);
        (g, p, a, b)
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sandwich_and_unit_ball((_, p, w, _) in case()) {
        let norm = luxemburg_norm(&w, &p).unwrap();
        let rho = modular(&w, &p);
        let (lo, hi) = sigma_bounds(norm, &p);
        prop_assert!(lo <= rho * (1.0 + 1e-10));
        prop_assert!(rho <= hi * (1.0 + 1e-10));
        if rho < 1.0 - 1e-10 {
            prop_assert!(norm <= 1.0);
        }
        if rho > 1.0 + 1e-10 {
            prop_assert!(norm > 1.0);
        }
    }

    #[test]
    fn norm_is_homogeneous((_, p, w, _) in case(), alpha in -50.0f64..50.0) {
        let a = luxemburg_norm(&w.scale(alpha), &p).unwrap();
        let b = alpha.abs() * luxemburg_norm(&w, &p).unwrap();
        prop_assert!(close(a, b, 1e-10));
    }

    #[test]
    fn holder_with_factor_two((_, p, f, g) in case()) {
        let r = holder_pairing_bound(&f, &g, &p).unwrap();
        prop_assert!(r.holds, "{r:?}");
    }

    #[test]
    fn young_inequality((g, p, a, b) in case(), k in -10i32..=10) {
        let eps = 2f64.powi(k);
        let mut rhs = 0.0;
        for i in 0..g.len() {
            rhs += young_pointwise(a.values()[i], b.values()[i], p.get(i), eps, p.p_minus(), p.p_plus()).0;
            prop_assert!(
                (a.values()[i] * b.values()[i]).abs()
                    <= young_pointwise(a.values()[i], b.values()[i], p.get(i), eps, p.p_minus(), p.p_plus()).0 * (1.0 + 1e-10)
            );
        }
        let lhs: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x * y).abs()).sum();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10));
    }

    #[test]
    fn fenchel_young_and_conjugate_identity((g, p, v, _) in case()) {
        let eta = dpsi(&v, &p);
        let lhs = psi(&v, &p) + psi_star(&eta, &p);
        prop_assert!(close(lhs, inner(&eta, &v), 1e-12));
        let vol = g.cell_volume();
        let direct: f64 = (0..g.len())
            .map(|i| {
                let e = p.get(i);
                vol * v.values()[i].abs().powf(e) * (1.0 - 1.0 / e)
            })
            .sum();
        prop_assert!(close(psi_star(&eta, &p), direct, 1e-12));
    }

    #[test]
    fn duality_map_is_monotone_and_bounded((_, p, u, v) in case()) {
        let d = inner(&dpsi(&u, &p).sub(&dpsi(&v, &p)), &u.sub(&v));
        let scale = inner(&dpsi(&u, &p), &u) + inner(&dpsi(&v, &p), &v);
        prop_assert!(d >= -1e-14 * scale);
        if u != v {
            prop_assert!(d > 0.0);
        }
        prop_assert!(dual_norm_bound_check(&u, &p).unwrap().holds);
    }

    #[test]
    fn conjugate_convexity_standalone((_, p, a, b) in case()) {
        let (ea, eb) = (dpsi(&a, &p), dpsi(&b, &p));
        let lhs = psi_star(&ea, &p) - psi_star(&eb, &p);
        let rhs = inner(&ea.sub(&eb), &a);
        let scale = psi_star(&ea, &p) + psi_star(&eb, &p);
        prop_assert!(rhs - lhs >= -1e-12 * scale);
    }

    #[test]
    fn energy_is_convex_monotone_and_summable((_, m, u, v) in case()) {
        let eps = if m.p_minus() < 2.0 { 1e-10 } else { 0.0 };
        let du = dphi(&u, &m, eps);
        let dv = dphi(&v, &m, eps);
        let mono = inner(&du.sub(&dv), &u.sub(&v));
        let scale = inner(&du, &u).abs() + inner(&dv, &v).abs();
        prop_assert!(mono >= -1e-12 * scale);
        let e = DirichletEnergy::new(&m, eps);
        prop_assert!(close(inner(&du, &u), e.flux_pairing(u.values()), 1e-12) || scale == 0.0);
        prop_assert!(e.flux_pairing(u.values()) >= 0.0);
        let mid = u.lincomb(0.5, &v, 0.5);
        prop_assert!(phi(&mid, &m) <= 0.5 * (phi(&u, &m) + phi(&v, &m)) * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn proximal_family_properties(n in 8usize..24, pb in 1.6f64..3.0, mb in 1.6f64..3.0, k in 0u32..3, seed in any::<u64>()) {
        let g = Arc::new(Grid::new_1d(n, 0.0, 1.0).unwrap());
        let p = ExponentSpec::Ramp { base: pb, slope: 0.3 }.sample(&g).unwrap();
        let m = ExponentSpec::SineBump { base: mb, amplitude: 0.2 }.sample(&g).unwrap();
        let cfg = ProxConfig::default().with_default_eps(&m);
        let phase = (seed % 1000) as f64 / 1000.0;
        let u = GridFunction::from_fn_dirichlet(&g, |x| (std::f64::consts::PI * x[0]).sin() * (1.0 + phase * x[0])).unwrap();
        let v = GridFunction::from_fn_dirichlet(&g, |x| (2.0 * std::f64::consts::PI * x[0] + phase).sin()).unwrap();
        let lambda = 10f64.powi(-(k as i32));
        let pu = prox(&u, lambda, &p, &m, &cfg).unwrap();
        let pv = prox(&v, lambda, &p, &m, &cfg).unwrap();
        let mono = inner(&pu.yosida.sub(&pv.yosida), &u.sub(&v));
        let scale = inner(&pu.yosida, &u).abs() + inner(&pv.yosida, &v).abs();
        prop_assert!(mono >= -1e-10 * scale.max(1.0));
        let phi_u = dnflow::energy::phi_regularized(&u, &m, cfg.eps_reg);
        prop_assert!(pu.phi_resolvent <= pu.envelope && pu.envelope <= phi_u * (1.0 + 1e-12));
        let smaller = prox(&u, lambda / 10.0, &p, &m, &cfg).unwrap();
        prop_assert!(smaller.envelope >= pu.envelope * (1.0 - 1e-9));
        let du = u.sub(&pu.resolvent);
        let ds = u.sub(&smaller.resolvent);
        prop_assert!(luxemburg_norm(&ds, &p).unwrap() <= luxemburg_norm(&du, &p).unwrap() * (1.0 + 1e-9));
    }
}

#[test]
fn reductions_are_deterministic_across_pools() {
    let g = Arc::new(Grid::new_2d([64, 64], [0.0, 0.0], [1.0, 1.0]).unwrap());
    let p = ExponentSpec::SineBump { base: 2.5, amplitude: 0.4 }.sample(&g).unwrap();
    let w = GridFunction::from_fn(&g, |x| (13.0 * x[0]).sin() * (7.0 * x[1]).cos() + 1e-3).unwrap();
    let reference = (modular(&w, &p), luxemburg_norm(&w, &p).unwrap(), phi(&w.interior(), &p));
    for workers in [1usize, 2, 3, 8] {
        let got = dnflow::par::run_batch(vec![()], workers, |_| (modular(&w, &p), luxemburg_norm(&w, &p).unwrap(), phi(&w.interior(), &p)));
        assert_eq!(got[0].0.to_bits(), reference.0.to_bits());
        assert_eq!(got[0].1.to_bits(), reference.1.to_bits());
        assert_eq!(got[0].2.to_bits(), reference.2.to_bits());
    }
}
