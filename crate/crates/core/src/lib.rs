//! Exact multi-time correlation functions of `N` non-colliding Brownian
//! motions started at the origin and conditioned not to collide on `(0, T]`.
//!
//! The correlation functions are pfaffians of a 2x2 matrix kernel built from
//! Hermite-type skew-orthonormal functions. Every identity used on the way
//! (de Bruijn, Andreief, `Pf^2 = det`, skew-orthogonality, the Fredholm
//! pfaffian representation of the characteristic function) is exposed
//! together with an independent quadrature or Monte Carlo route so that it
//! can be checked numerically.
//!
//! Module map:
//!
//! - [`stochastic`]: heat kernel, Karlin-McGregor determinant, survival
//!   probability, transition and multi-time densities, brute-force
//!   correlation functions.
//! - [`skewlin`]: skew-symmetric matrices, pfaffians, de Bruijn and Andreief
//!   matrices.
//! - [`basis`]: Hermite skew-orthonormal functions `R_k`, `Phi_k`.
//! - [`kernels`]: the matrix kernel `A^{mu,nu}(x, y)` and pfaffian
//!   correlation functions.
//! - [`fredholm`]: discretized Fredholm determinants and pfaffians, the
//!   characteristic function.
//! - [`montecarlo`]: rejection sampler for the conditioned process.
//! - [`quadrature`]: adaptive Gauss-Kronrod and Gauss-Legendre rules.

pub mod basis;
pub mod error;
pub mod fredholm;
pub mod kernels;
pub mod montecarlo;
pub mod quadrature;
pub mod skewlin;
pub mod special;
pub mod stochastic;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
