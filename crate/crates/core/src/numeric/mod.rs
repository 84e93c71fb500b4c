//! One-dimensional root finding and quadrature.

mod brent;
mod gauss_legendre;

pub use brent::{brent, BrentOptions};
pub use gauss_legendre::GaussLegendre;
