//! Flat TOML run configuration.
//!
//! Every key has a default, unknown keys are rejected, and [`RunConfig::echo`]
//! renders the canonical form that is stored with each run.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use dnflow::convex::ProxConfig;
use dnflow::energy::default_eps_reg;
use dnflow::forcing::{SpaceProfile, TimeProfile};
use dnflow::{ExponentField, ExponentSpec, ForcingSpec, Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    /// An exponent bound that can be decided before sampling the fields.
    #[error("{0}")]
    Hypothesis(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentKind {
    Constant,
    Ramp,
    SineBump,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    Sine,
    RandomSmooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Zero,
    Constant,
    SineBump,
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeKind {
    Constant,
    Polynomial,
    ExpDecay,
    InverseSqrt,
}

/// `eps_reg` is either a number or the word `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsReg {
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EpsRegRepr {
    Number(f64),
    Word(String),
}

impl Serialize for EpsReg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            EpsReg::Auto => EpsRegRepr::Word("auto".into()).serialize(s),
            EpsReg::Fixed(v) => EpsRegRepr::Number(v).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for EpsReg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match EpsRegRepr::deserialize(d)? {
            EpsRegRepr::Number(v) => Ok(EpsReg::Fixed(v)),
            EpsRegRepr::Word(w) if w == "auto" => Ok(EpsReg::Auto),
            EpsRegRepr::Word(w) => Err(serde::de::Error::custom(format!("expected a number or \"auto\", got \"{w}\""))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    /// Cells per axis, boundary layer included.
    pub cells: usize,
    pub lower: f64,
    pub upper: f64,
    pub t_final: f64,
    pub steps: usize,

    pub p_kind: ExponentKind,
    /// Constant value, ramp/sine base, or the left value of a step.
    pub p_base: f64,
    /// Ramp slope, sine amplitude, or the jump `right - left` of a step.
    pub p_amplitude: f64,
    pub p_split: f64,
    pub m_kind: ExponentKind,
    pub m_base: f64,
    pub m_amplitude: f64,
    pub m_split: f64,

    pub u0_kind: InitialKind,
    pub u0_mode: usize,
    pub u0_amplitude: f64,

    pub forcing_space: SpaceKind,
    pub forcing_amplitude: f64,
    pub forcing_lower: f64,
    pub forcing_upper: f64,
    pub forcing_time: TimeKind,
    pub forcing_coeffs: Vec<f64>,
    pub forcing_rate: f64,

    pub tolerance: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub newton: bool,
    pub eps_reg: EpsReg,

    pub diag_first: bool,
    pub diag_chain: bool,
    pub diag_second: bool,
    pub diag_regularization: bool,
    pub diag_moreau_yosida: bool,
    pub my_lambdas: Vec<f64>,

    pub seed: u64,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let prox = ProxConfig::default();
        RunConfig {
            dimension: 1,
            cells: 64,
            lower: 0.0,
            upper: 1.0,
            t_final: 0.1,
            steps: 50,
            p_kind: ExponentKind::Constant,
            p_base: 2.0,
            p_amplitude: 0.0,
            p_split: 0.5,
            m_kind: ExponentKind::Constant,
            m_base: 2.0,
            m_amplitude: 0.0,
            m_split: 0.5,
            u0_kind: InitialKind::Sine,
            u0_mode: 1,
            u0_amplitude: 1.0,
            forcing_space: SpaceKind::Zero,
            forcing_amplitude: 1.0,
            forcing_lower: 0.25,
            forcing_upper: 0.75,
            forcing_time: TimeKind::Constant,
            forcing_coeffs: vec![1.0],
            forcing_rate: 1.0,
            tolerance: prox.tolerance,
            max_iterations: prox.max_iterations,
            armijo: prox.armijo,
            backtrack: prox.backtrack,
            newton: prox.newton,
            eps_reg: EpsReg::Auto,
            diag_first: true,
            diag_chain: true,
            diag_second: true,
            diag_regularization: true,
            diag_moreau_yosida: true,
            my_lambdas: vec![1.0, 0.1, 0.01, 1e-4],
            seed: 0,
            out_dir: "out".into(),
        }
    }
}

/// Everything a run needs, sampled on the grid.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Arc<Grid>,
    pub p: ExponentField,
    pub m: ExponentField,
    pub u0: GridFunction,
    pub forcing: ForcingSpec,
    pub prox: ProxConfig,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

/// Parses and validates.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn invalid(field: &'static str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.to_string() }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn open_unit(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in (0, 1), got {v}")))
    }
}

impl RunConfig {
    /// Canonical TOML rendering: every key, in declaration order.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn p_spec(&self) -> ExponentSpec {
        spec(self.p_kind, self.p_base, self.p_amplitude, self.p_split)
    }

    pub fn m_spec(&self) -> ExponentSpec {
        spec(self.m_kind, self.m_base, self.m_amplitude, self.m_split)
    }

    pub fn grid(&self) -> Result<Arc<Grid>, ConfigError> {
        Grid::uniform(self.dimension, self.cells, self.lower, self.upper)
            .map(Arc::new)
            .map_err(|e| invalid("cells", e))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dimension == 1 || self.dimension == 2) {
            return Err(invalid("dimension", format!("must be 1 or 2, got {}", self.dimension)));
        }
        if self.cells < 3 {
            return Err(invalid("cells", format!("must be at least 3, got {}", self.cells)));
        }
        finite("lower", self.lower)?;
        finite("upper", self.upper)?;
        if !(self.upper > self.lower) {
            return Err(invalid("upper", format!("must exceed lower = {}, got {}", self.lower, self.upper)));
        }
        positive("t_final", self.t_final)?;
        if self.steps < 2 {
            return Err(invalid("steps", format!("must be at least 2, got {}", self.steps)));
        }
        for (field, v) in [
            ("p_base", self.p_base),
            ("p_amplitude", self.p_amplitude),
            ("p_split", self.p_split),
            ("m_base", self.m_base),
            ("m_amplitude", self.m_amplitude),
            ("m_split", self.m_split),
            ("u0_amplitude", self.u0_amplitude),
            ("forcing_amplitude", self.forcing_amplitude),
            ("forcing_lower", self.forcing_lower),
            ("forcing_upper", self.forcing_upper),
            ("forcing_rate", self.forcing_rate),
        ] {
            finite(field, v)?;
        }
        if self.u0_mode == 0 {
            return Err(invalid("u0_mode", "must be at least 1"));
        }
        if self.forcing_space == SpaceKind::Indicator && !(self.forcing_lower <= self.forcing_upper) {
            return Err(invalid("forcing_upper", "must not be below forcing_lower"));
        }
        if self.forcing_time == TimeKind::Polynomial
            && (self.forcing_coeffs.is_empty() || self.forcing_coeffs.iter().any(|c| !c.is_finite()))
        {
            return Err(invalid("forcing_coeffs", "polynomial forcing needs at least one finite coefficient"));
        }
        positive("tolerance", self.tolerance)?;
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations", "must be at least 1"));
        }
        open_unit("armijo", self.armijo)?;
        open_unit("backtrack", self.backtrack)?;
        if let EpsReg::Fixed(v) = self.eps_reg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid("eps_reg", format!("must be \"auto\" or a finite non-negative number, got {v}")));
            }
        }
        if self.diag_moreau_yosida {
            if self.my_lambdas.is_empty() {
                return Err(invalid("my_lambdas", "needs at least one value when diag_moreau_yosida is on"));
            }
            if let Some(l) = self.my_lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                return Err(invalid("my_lambdas", format!("values must be positive and finite, got {l}")));
            }
        }
        self.exponent_bounds()
    }

    /// Exponent extrema over the cell centres, checked before any field is
    /// built so that `p⁻ ≤ 1` is reported as a hypothesis failure.
    fn exponent_bounds(&self) -> Result<(), ConfigError> {
        let grid = self.grid()?;
        for (name, field, s) in [("p", "p_base", self.p_spec()), ("m", "m_base", self.m_spec())] {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..grid.len() {
                let v = s.eval(grid.center(i));
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(invalid(field, format!("{name}(x) is not finite on the grid")));
            }
            if !(lo > 1.0) {
                return Err(ConfigError::Hypothesis(format!("(H1) requires {name}⁻ > 1, got {name}⁻ = {lo}")));
            }
        }
        Ok(())
    }

    pub fn forcing(&self) -> ForcingSpec {
        let space = match self.forcing_space {
            SpaceKind::Zero => SpaceProfile::Zero,
            SpaceKind::Constant => SpaceProfile::Constant { value: self.forcing_amplitude },
            SpaceKind::SineBump => SpaceProfile::SineBump { amplitude: self.forcing_amplitude },
            SpaceKind::Indicator => SpaceProfile::Indicator {
                amplitude: self.forcing_amplitude,
                lower: self.forcing_lower,
                upper: self.forcing_upper,
            },
        };
        let time = match self.forcing_time {
            TimeKind::Constant => TimeProfile::Constant,
            TimeKind::Polynomial => TimeProfile::Polynomial { coeffs: self.forcing_coeffs.clone() },
            TimeKind::ExpDecay => TimeProfile::ExpDecay { rate: self.forcing_rate },
            TimeKind::InverseSqrt => TimeProfile::InverseSqrt,
        };
        ForcingSpec::Separable { space, time }
    }

    pub fn initial(&self, grid: &Arc<Grid>) -> Result<GridFunction, ConfigError> {
        let (a, b) = (self.lower, self.upper);
        let xi = move |x: f64| (x - a) / (b - a);
        let dim = self.dimension;
        let amp = self.u0_amplitude;
        let u = match self.u0_kind {
            InitialKind::Zero => Ok(GridFunction::zeros(grid)),
            InitialKind::Sine => {
                let k = self.u0_mode as f64;
                GridFunction::from_fn_dirichlet(grid, move |x| {
                    (0..dim).map(|d| (k * PI * xi(x[d])).sin()).product::<f64>() * amp
                })
            }
            InitialKind::RandomSmooth => {
                let modes = random_modes(self.seed, dim);
                GridFunction::from_fn_dirichlet(grid, move |x| {
                    amp * modes
                        .iter()
                        .map(|&(k, l, c)| {
                            let y = if dim == 2 { (l * PI * xi(x[1])).sin() } else { 1.0 };
                            c * (k * PI * xi(x[0])).sin() * y
                        })
                        .sum::<f64>()
                })
            }
        };
        u.map_err(|e| invalid("u0_kind", e))
    }

    pub fn prox(&self, m: &ExponentField) -> ProxConfig {
        ProxConfig {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            armijo: self.armijo,
            backtrack: self.backtrack,
            eps_reg: match self.eps_reg {
                EpsReg::Auto => default_eps_reg(m),
                EpsReg::Fixed(v) => v,
            },
            newton: self.newton,
        }
    }

    /// Samples the exponents, the initial state and the forcing. Exponent
    /// bounds are assumed validated; (H2) is left to the stepper.
    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let grid = self.grid()?;
        let p = self.p_spec().sample(&grid).map_err(|e| invalid("p_base", e))?;
        let m = self.m_spec().sample(&grid).map_err(|e| invalid("m_base", e))?;
        let u0 = self.initial(&grid)?;
        let forcing = self.forcing();
        forcing.validate(&grid).map_err(|e| invalid("forcing_space", e))?;
        let prox = self.prox(&m);
        Ok(Problem { grid, p, m, u0, forcing, prox })
    }
}

fn spec(kind: ExponentKind, base: f64, amplitude: f64, split: f64) -> ExponentSpec {
    match kind {
        ExponentKind::Constant => ExponentSpec::Constant { value: base },
        ExponentKind::Ramp => ExponentSpec::Ramp { base, slope: amplitude },
        ExponentKind::SineBump => ExponentSpec::SineBump { base, amplitude },
        ExponentKind::Step => ExponentSpec::Step { left: base, right: base + amplitude, split },
    }
}

/// Four modes per axis with coefficients decaying like `1/(k² + l²)`.
fn random_modes(seed: u64, dim: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ls = if dim == 2 { 1..=4 } else { 1..=1 };
    let mut out = Vec::new();
    for k in 1..=4 {
        for l in ls.clone() {
            let c: f64 = rng.random_range(-1.0..1.0);
            out.push((k as f64, l as f64, c / (k * k + l * l) as f64));
        }
    }
    out
}
