//! Special functions and interpolation/quadrature primitives.

mod airy;
mod cheb;
mod quad;

pub use airy::{ai, ai_and_prime, ai_split, airy_ai, airy_ai_prime};
pub use cheb::{cheb_derivative, cheb_eval, cheb_fit, cheb_integral, cheb_points, ChebSeries};
pub use quad::{composite_gauss_legendre, gauss_legendre, gauss_legendre_in, QuadRule};
