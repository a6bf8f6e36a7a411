//! Oracles and random generators for the property suites.
//!
//! Nothing here reuses the numerical kernels under test: quadrature rules come
//! from the Golub–Welsch eigenproblem, subspaces from dense SVD, and the
//! quadratic forms are summed directly from sampled kernels.

pub mod lambda;
pub mod nullspace;
pub mod psd;
pub mod quad;
pub mod suites;

pub use lambda::{LambdaSampler, PolyFn};
pub use nullspace::{constraint_matrix, null_space};
pub use psd::random_psd;
pub use quad::Rule;
pub use suites::{
    derivative_identity, sigma_plus_positivity, spacing_annihilation, spacing_quadratic_form, SuiteReport, SPACING_BCS,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
