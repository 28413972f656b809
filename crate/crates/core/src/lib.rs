//! Implicit time stepping for the doubly nonlinear parabolic problem
//!
//! ```text
//! |u_t|^{p(x)-2} u_t - div(|∇u|^{m(x)-2} ∇u) = f   in Ω × (0, T),
//! u = 0 on ∂Ω,   u(0) = u0,
//! ```
//!
//! on Cartesian grids in one or two dimensions, together with the
//! variable-exponent toolkit the scheme is built from (modulars, Luxemburg
//! norms, the modified resolvent / Yosida approximation / Moreau–Yosida
//! envelope) and a diagnostics layer that evaluates the a priori energy
//! inequalities of the scheme on completed runs.
//!
//! Module map:
//!
//! * [`grid`], [`exponent`]: meshes and variable exponents p(x), m(x).
//! * [`field`], [`modular`]: grid functions, modulars, norms, ψ, ∂ψ, ψ*.
//! * [`energy`]: the discrete m(x)-Dirichlet energy φ and −Δ_{m(x)}.
//! * [`convex`]: the inner convex minimizer and the proximal family.
//! * [`forcing`], [`stepper`]: right-hand sides and the time loop.
//! * [`diagnostics`]: inequality margins over a finished run.
//! * [`par`]: data-parallel helpers (rayon behind the `parallel` feature).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod convex;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod field;
pub mod forcing;
pub mod grid;
pub mod modular;
pub mod par;
pub mod stepper;

pub use convex::{minimize_convex, moreau_yosida_value, resolvent, yosida, CompositeObjective, MinimizeOutcome, ProxConfig};
pub use error::{Error, Result};
pub use exponent::{ExponentField, ExponentSpec};
pub use field::GridFunction;
pub use forcing::ForcingSpec;
pub use grid::Grid;
pub use stepper::{run, step, RunReport, StepRecord};
