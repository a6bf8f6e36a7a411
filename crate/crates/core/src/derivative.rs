//! Time derivative of the functional along solutions, and the full
//! feasibility problem.
//!
//! Along `u_t = A u'' + B u' + C u` with `U = (u, u', u'')`,
//! `d/dt V(u) = ∫ Uᵀ K U + ∫∫ U(x)ᵀ L(x, y) U(y)` where
//!
//! ```text
//! K = [CᵀM + MC  MB  MA]      L = [C(x)ᵀN + N C(y)  N B(y)  N A(y)]
//!     [BᵀM       0   0 ]          [B(x)ᵀN           0       0     ]
//!     [AᵀM       0   0 ]          [A(x)ᵀN           0       0     ]
//! ```
//!
//! Stability follows if `(K, L) = (T + H, R + G)` with `(T, R)` a spacing
//! operator and `(H, G)` a negative functional on the `3n` coordinates.

use thiserror::Error;

use crate::decision::DecisionSpace;
use crate::functional::{build_sigma_minus, build_sigma_plus, FunctionalError, FunctionalTemplate};
use crate::model::PdeSystem;
use crate::polymat::{LinearConstraint, PolyError, PolyMatrix, Var, VarSet};
use crate::scalar::Scalar;
use crate::spacing::{build_sigma0, SpacingTemplate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("functional has dimension {got}, system has {expected}")]
    Dimension { expected: usize, got: usize },
}

/// `K(x)` and `L(x, y)`, both `3n x 3n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeKernels<S: Scalar> {
    pub k: PolyMatrix<S>,
    pub l: PolyMatrix<S>,
}

pub fn build_kernels<S: Scalar>(
    m: &PolyMatrix<S>,
    kernel: &PolyMatrix<S>,
    sys: &PdeSystem<S>,
) -> Result<DerivativeKernels<S>, AssemblyError> {
    let n = sys.n;
    if m.shape() != (n, n) || kernel.shape() != (n, n) {
        return Err(AssemblyError::Dimension { expected: n, got: m.rows() });
    }
    let (a, b, c) = (&sys.diffusion, &sys.drift, &sys.reaction);
    let k11 = c.transpose().matmul(m)?.add(&m.matmul(c)?)?;
    let mb = m.matmul(b)?;
    let ma = m.matmul(a)?;
    let mut k = PolyMatrix::zeros(3 * n, 3 * n, VarSet::X);
    k.set_block(0, 0, &k11);
    k.set_block(0, n, &mb);
    k.set_block(0, 2 * n, &ma);
    k.set_block(n, 0, &mb.transpose());
    k.set_block(2 * n, 0, &ma.transpose());

    let to_y = |p: &PolyMatrix<S>| p.remap(&[(Var::X, Var::Y)]).map(|q| q.with_vars(VarSet::XY));
    let to_xy = |p: &PolyMatrix<S>| p.clone().with_vars(VarSet::XY);
    let (ay, by, cy) = (to_y(a)?, to_y(b)?, to_y(c)?);
    let (ax, bx, cx) = (to_xy(a), to_xy(b), to_xy(c));
    let l11 = cx.transpose().matmul(kernel)?.add(&kernel.matmul(&cy)?)?;
    let mut l = PolyMatrix::zeros(3 * n, 3 * n, VarSet::XY);
    l.set_block(0, 0, &l11);
    l.set_block(0, n, &kernel.matmul(&by)?);
    l.set_block(0, 2 * n, &kernel.matmul(&ay)?);
    l.set_block(n, 0, &bx.transpose().matmul(kernel)?);
    l.set_block(2 * n, 0, &ax.transpose().matmul(kernel)?);
    Ok(DerivativeKernels { k, l })
}

/// Which coordinates of the negative functional carry `eps2 I`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Eps2Scope {
    /// Only the `u` block: `d/dt V <= eps2 ‖u‖²`.
    State,
    /// All `3n` coordinates of `(u, u', u'')`. Infeasible whenever the
    /// `(u'', u'')` block of `K` and `T` vanishes, which it always does.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssemblyOptions<S> {
    pub eps1: S,
    pub eps2: S,
    pub eps2_scope: Eps2Scope,
}

impl<S: Scalar> Default for AssemblyOptions<S> {
    fn default() -> Self {
        Self { eps1: S::from_ratio(1, 1000), eps2: S::from_ratio(-1, 1000), eps2_scope: Eps2Scope::State }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemMeta {
    pub n: usize,
    pub d: u32,
    pub gamma: u32,
    pub spacing_degree: u32,
    pub negative_degree: u32,
    pub eps1: f64,
    pub eps2: f64,
}

/// Decision variables, linear equalities and PSD cones of the stability test.
#[derive(Clone, Debug, PartialEq)]
pub struct AssembledProblem<S: Scalar> {
    pub space: DecisionSpace,
    pub constraints: Vec<LinearConstraint<S>>,
    pub meta: ProblemMeta,
    pub lyapunov: FunctionalTemplate<S>,
    pub negative: FunctionalTemplate<S>,
    pub spacing: SpacingTemplate<S>,
    pub kernels: DerivativeKernels<S>,
}

/// Builds the complete feasibility problem at degree `d`.
pub fn assemble<S: Scalar>(
    sys: &PdeSystem<S>,
    d: u32,
    opts: &AssemblyOptions<S>,
) -> Result<AssembledProblem<S>, AssemblyError> {
    let n = sys.n;
    let gamma = sys.max_degree();
    let spacing_degree = 2 * d + 2 + gamma;
    let negative_degree = d + gamma;
    let mut space = DecisionSpace::new();
    let lyapunov = build_sigma_plus(&mut space, "V", n, d, opts.eps1.clone(), n, &sys.interval)?;
    let spacing = build_sigma0(&mut space, "S", n, spacing_degree, &sys.interval, &sys.boundary)?;
    let eps_dims = match opts.eps2_scope {
        Eps2Scope::State => n,
        Eps2Scope::Full => 3 * n,
    };
    let negative =
        build_sigma_minus(&mut space, "H", 3 * n, negative_degree, opts.eps2.clone(), eps_dims, &sys.interval)?;
    let kernels = build_kernels(&lyapunov.m, &lyapunov.kernel, sys)?;

    let mut constraints = spacing.constraints.clone();
    constraints.extend(kernels.k.equate(&spacing.t.add(&negative.m)?, "K")?);
    constraints.extend(kernels.l.equate(&spacing.r.add(&negative.kernel)?, "L")?);
    Ok(AssembledProblem {
        space,
        constraints,
        meta: ProblemMeta {
            n,
            d,
            gamma,
            spacing_degree,
            negative_degree,
            eps1: opts.eps1.to_f64(),
            eps2: opts.eps2.to_f64(),
        },
        lyapunov,
        negative,
        spacing,
        kernels,
    })
}
