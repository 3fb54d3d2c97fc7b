//! Numerical stochastic calculus via regularization.
//!
//! Sample paths live on a uniform dyadic grid of `[0, 1]`. Evaluation outside
//! the interval follows the clamp convention `X_t = X_{(t v 0) ^ 1}`. On top of
//! the paths the crate provides the epsilon-regularized n-covariation
//! functionals, symmetric/forward/Young integrals, residual checkers for the
//! Ito-type formulas of finite cubic variation calculus, and a solver for
//! one-dimensional SDEs driven by non-semimartingales through the
//! diffusion-reduction transform `H(t, x) = int_c^x dz / sigma(t, z)`.

pub mod error;
pub mod expr;
pub mod grid;
pub mod itocheck;
pub mod pathgen;
pub mod quad;
pub mod reginteg;
pub mod regvar;
pub mod rng;
pub mod rootfind;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
pub use grid::{Grid, SamplePath};
pub use pathgen::{CompositePath, GeneratorSpec, PathEnsemble};
pub use regvar::{EpsLadder, EstimateReport};
