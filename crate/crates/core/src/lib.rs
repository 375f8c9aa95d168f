//! Exact merit functions for constrained optimization.
//!
//! Two merit functions are provided:
//!
//! * [`auglag`]: a continuously differentiable exact augmented Lagrangian for
//!   nonlinear semidefinite programs `min f(x)` s.t. `G(x) ⪯ 0`, `h(x) = 0`.
//! * [`penalty`]: the singular penalty function `F(x, p, c)` with an auxiliary
//!   scalar `p ≥ 0`, whose exact minimizers sit on the face `p = 0`.
//!
//! [`solver`] minimizes either one and runs penalty-parameter continuation,
//! [`certify`] checks KKT residuals, nondegeneracy, second-order sufficiency
//! and the exactness hypotheses, and [`oracle`] provides brute-force grid
//! minimization for cross-checks at desk scale.

pub mod auglag;
pub mod certify;
pub mod cli;
pub mod error;
pub mod ext;
pub mod oracle;
pub mod penalty;
pub mod problems;
pub mod solver;
pub mod symmat;

pub use error::{Error, Result};
pub use ext::ExtReal;
