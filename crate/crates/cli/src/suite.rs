//! Randomized checks of the modular toolkit, shared by `check` and the
//! acceptance target. Bounds are recomputed here from their defining
//! formulas rather than taken from the library.

use std::sync::Arc;

use dnflow::exponent::conjugate_exponent;
use dnflow::modular::{dpsi, luxemburg_norm, modular, psi, psi_star, young_pointwise};
use dnflow::{ExponentField, ExponentSpec, Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative tolerance of the norm and inequality checks.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Relative tolerance of the conjugate identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Largest relative excess over the bound, `0` when none.
    pub worst: f64,
}

impl CheckResult {
    fn new(name: &'static str) -> Self {
        CheckResult { name, samples: 0, violations: 0, worst: 0.0 }
    }

    /// Records `lhs ≤ rhs` up to `tol` relative to `max(|lhs|, |rhs|)`.
    fn le(&mut self, lhs: f64, rhs: f64, tol: f64) {
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        let excess = (lhs - rhs) / scale;
        if !(excess <= tol) {
            self.violations += 1;
        }
        self.worst = self.worst.max(if excess.is_nan() { f64::INFINITY } else { excess });
    }

    fn close(&mut self, a: f64, b: f64, tol: f64) {
        self.le(a, b, tol);
        self.le(b, a, tol);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Sample {
    grid: Arc<Grid>,
    p: ExponentField,
    a: GridFunction,
    b: GridFunction,
}

fn random_grid(rng: &mut ChaCha8Rng) -> Arc<Grid> {
    let g = if rng.random_bool(0.5) {
        Grid::new_1d(rng.random_range(8..64), 0.0, 1.0)
    } else {
        Grid::new_2d([rng.random_range(4..12), rng.random_range(4..12)], [0.0, 0.0], [1.0, 1.5])
    };
    Arc::new(g.expect("valid grid"))
}

fn random_exponent(rng: &mut ChaCha8Rng, grid: &Arc<Grid>) -> ExponentField {
    let spec = match rng.random_range(0..5) {
        0 => ExponentSpec::Constant { value: rng.random_range(1.1..5.0) },
        1 => ExponentSpec::Ramp { base: rng.random_range(1.1..3.0), slope: rng.random_range(0.0..1.5) },
        2 => ExponentSpec::SineBump { base: rng.random_range(1.6..3.0), amplitude: rng.random_range(0.0..0.5) },
        3 => ExponentSpec::Step {
            left: rng.random_range(1.1..4.0),
            right: rng.random_range(1.1..4.0),
            split: rng.random_range(0.2..0.8),
        },
        _ => {
            let values = (0..grid.len()).map(|_| rng.random_range(1.1..5.0)).collect();
            return ExponentField::new(grid.clone(), values).expect("valid exponent");
        }
    };
    spec.sample(grid).expect("valid exponent")
}

fn random_field(rng: &mut ChaCha8Rng, grid: &Arc<Grid>, scale: f64) -> GridFunction {
    let values = (0..grid.len()).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    GridFunction::new(grid.clone(), values).expect("finite field")
}

fn sample(rng: &mut ChaCha8Rng) -> Sample {
    let grid = random_grid(rng);
    let p = random_exponent(rng, &grid);
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    let a = random_field(rng, &grid, scale);
    let b = random_field(rng, &grid, scale);
    Sample { grid, p, a, b }
}

fn pairing(a: &GridFunction, b: &GridFunction) -> f64 {
    let vol = a.grid().cell_volume();
    vol * a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>()
}

/// Sandwich, unit ball, homogeneity, Hölder with factor 2 and the
/// variable-exponent Young inequality on `samples` random cases each.
pub fn modular_suite(samples: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sandwich = CheckResult::new("sandwich");
    let mut unit_ball = CheckResult::new("unit_ball");
    let mut homogeneity = CheckResult::new("homogeneity");
    let mut holder = CheckResult::new("holder");
    let mut young = CheckResult::new("young");
    let tol = NORM_TOLERANCE;
    for _ in 0..samples {
        let Sample { grid, p, a, b } = sample(&mut rng);
        let (pm, pp) = (p.p_minus(), p.p_plus());
        let norm = luxemburg_norm(&a, &p).expect("norm");
        let rho = modular(&a, &p);
        let (s1, s2) = (norm.powf(pm), norm.powf(pp));
        sandwich.samples += 1;
        sandwich.le(s1.min(s2), rho, tol);
        sandwich.le(rho, s1.max(s2), tol);

        unit_ball.samples += 1;
        if norm > 0.0 {
            unit_ball.close(modular(&a.scale(1.0 / norm), &p), 1.0, tol);
        }
        if rho <= 1.0 - tol {
            unit_ball.le(norm, 1.0, tol);
        } else if rho >= 1.0 + tol {
            unit_ball.le(1.0, norm, tol);
        }

        let alpha = rng.random_range(-50.0..50.0);
        homogeneity.samples += 1;
        homogeneity.close(luxemburg_norm(&a.scale(alpha), &p).expect("norm"), alpha.abs() * norm, tol);

        let q = p.conjugate();
        let vol = grid.cell_volume();
        let lhs = vol * a.values().iter().zip(b.values()).map(|(x, y)| (x * y).abs()).sum::<f64>();
        holder.samples += 1;
        holder.le(lhs, 2.0 * norm * luxemburg_norm(&b, &q).expect("norm"), tol);

        let eps = 2f64.powi(rng.random_range(-10..=10));
        young.samples += 1;
        for i in 0..grid.len() {
            let (x, y) = (a.values()[i], b.values()[i]);
            young.le((x * y).abs(), young_pointwise(x, y, p.get(i), eps, pm, pp).0, tol);
        }
    }
    vec![sandwich, unit_ball, homogeneity, holder, young]
}

/// Fenchel–Young equality and `ψ*(∂ψ(v)) = ∫ |v|^p / p'` on random fields.
pub fn conjugate_suite(samples: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fenchel = CheckResult::new("fenchel_young");
    let mut identity = CheckResult::new("conjugate_identity");
    for _ in 0..samples {
        let Sample { grid, p, a, .. } = sample(&mut rng);
        let eta = dpsi(&a, &p);
        fenchel.samples += 1;
        fenchel.close(psi(&a, &p) + psi_star(&eta, &p), pairing(&eta, &a), IDENTITY_TOLERANCE);
        let vol = grid.cell_volume();
        let direct: f64 = (0..grid.len())
            .map(|i| {
                let e = p.get(i);
                vol * a.values()[i].abs().powf(e) / conjugate_exponent(e)
            })
            .sum();
        identity.samples += 1;
        identity.close(psi_star(&eta, &p), direct, IDENTITY_TOLERANCE);
    }
    vec![fenchel, identity]
}
