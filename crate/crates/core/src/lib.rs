//! Numerical laboratory for the fractional free boundary problem
//!
//! ```text
//! minimise  J(u) = 1/2 int y^alpha |grad u|^2 + int_{y=0} u^gamma,   u >= 0,
//! ```
//!
//! posed on the Caffarelli-Silvestre extension of `(-Delta)^s` with
//! `alpha = 1 - 2s` and `0 <= gamma < 1`.

pub mod comparison;
pub mod error;
pub mod fb;
pub mod frac;
pub mod functionals;
pub mod grid;
pub mod minimizer;
pub mod ode;
pub mod operator;
pub mod params;
pub mod profile;
pub mod quad;
pub mod roots;
pub mod solver;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use params::Params;
