//! Sum-of-squares Lyapunov certificates for coupled linear PDEs on an interval,
//! `u_t = A(x) u_xx + B(x) u_x + C(x) u` with boundary conditions `D Υ = 0`.
//!
//! The pipeline is: [`model`] describes the system, [`functional`] and
//! [`spacing`] build the parameterized operator families, [`derivative`]
//! assembles the feasibility problem, [`sdp`] canonicalizes, solves and
//! verifies it, and [`search`] turns verdicts into certified parameter
//! margins. [`simulator`] is an independent finite-difference oracle.
//!
//! The symbolic layers are generic over [`Scalar`]; the aliases below fix the
//! common choices.

pub mod decision;
pub mod derivative;
pub mod functional;
pub mod model;
pub mod polymat;
pub mod quadrature;
pub mod scalar;
pub mod sdp;
pub mod search;
pub mod simulator;
pub mod spacing;

pub use scalar::{Rational, Scalar};

pub type Poly = polymat::Polynomial<f64>;
pub type PolyMat = polymat::PolyMatrix<f64>;
pub type System = model::PdeSystem<f64>;
pub type SystemF32 = model::PdeSystem<f32>;
pub type ExactPoly = polymat::Polynomial<Rational>;
pub type ExactPolyMat = polymat::PolyMatrix<Rational>;
pub type ExactSystem = model::PdeSystem<Rational>;
