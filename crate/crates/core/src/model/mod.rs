//! Coupled linear PDE systems on an interval.
//!
//! A [`PdeSystem`] describes `u_t = A(x) u_xx + B(x) u_x + C(x) u` for
//! `u(t, x) ∈ R^n`, `x ∈ [a, b]`, together with homogeneous boundary
//! conditions `D [u(a); u(b); u_x(a); u_x(b)] = 0` where `D` is stored as a
//! square `4n x 4n` matrix (unused rows are zero).

mod document;
mod expr;
mod presets;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::polymat::{PolyMatrix, Var, VarSet};
use crate::scalar::Scalar;

pub use document::{load_model, save_model, BcSpec, Coefficient, ModelDocument, ModelFamily};
pub use expr::eval_expression;
pub use presets::{acoustic_raw_document, preset, preset_document, PRESET_NAMES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Schema(String),
    #[error("interval must satisfy a < b, got a = {a}, b = {b}")]
    Interval { a: f64, b: f64 },
    #[error("coefficient {name} must be {n}x{n}")]
    NotSquare { name: &'static str, n: usize },
    #[error("boundary matrix must have {expected} columns and at most {expected} rows, got {rows}x{cols}")]
    BoundaryShape { expected: usize, rows: usize, cols: usize },
    #[error("coefficient is not polynomial in x: {0}")]
    NonPolynomial(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("missing parameter {0:?}")]
    MissingParameter(String),
    #[error("cannot evaluate expression {expr:?}: {reason}")]
    Expression { expr: String, reason: String },
    #[error("state dimension must be positive")]
    ZeroDimension,
}

/// Square boundary matrix `D` of side `4n`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrix<S> {
    side: usize,
    data: Vec<S>,
}

impl<S: Scalar> BoundaryMatrix<S> {
    pub fn zeros(side: usize) -> Self {
        Self { side, data: vec![S::zero(); side * side] }
    }

    pub fn identity(side: usize) -> Self {
        let mut m = Self::zeros(side);
        for i in 0..side {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.side + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.side + j] = v;
    }

    /// `I - D`.
    pub fn complement(&self) -> Self {
        let mut out = Self::zeros(self.side);
        for i in 0..self.side {
            for j in 0..self.side {
                let id = if i == j { S::one() } else { S::zero() };
                out.set(i, j, id - self.get(i, j).clone());
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.side, self.side, |i, j| self.get(i, j).to_f64())
    }

    pub fn to_polymatrix(&self) -> PolyMatrix<S> {
        PolyMatrix::from_scalars(self.side, self.side, VarSet::EMPTY, &self.data)
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.side).map(<[S]>::to_vec).collect()
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> BoundaryMatrix<T> {
        BoundaryMatrix { side: self.side, data: self.data.iter().map(f).collect() }
    }
}

/// Named boundary-condition families plus an explicit escape hatch.
#[derive(Clone, Debug, PartialEq)]
pub enum BcShorthand<S> {
    /// `u(a) = u(b) = 0`.
    Dirichlet,
    /// `u_x(a) = u_x(b) = 0`.
    Neumann,
    /// `u_x(a) = 0`, `u(b) = 0`.
    MixedNeumannDirichlet,
    /// `u(a) = 0`, `u_x(b) = 0`.
    MixedDirichletNeumann,
    /// Explicit rows of length `4n`; padded with zero rows to `4n x 4n`.
    Custom(Vec<Vec<S>>),
}

impl<S: Scalar> BcShorthand<S> {
    pub fn name(&self) -> Option<&'static str> {
        match self {
            BcShorthand::Dirichlet => Some("dirichlet"),
            BcShorthand::Neumann => Some("neumann"),
            BcShorthand::MixedNeumannDirichlet => Some("mixed_na_db"),
            BcShorthand::MixedDirichletNeumann => Some("mixed_da_nb"),
            BcShorthand::Custom(_) => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "dirichlet" => Some(BcShorthand::Dirichlet),
            "neumann" => Some(BcShorthand::Neumann),
            "mixed_na_db" => Some(BcShorthand::MixedNeumannDirichlet),
            "mixed_da_nb" => Some(BcShorthand::MixedDirichletNeumann),
            _ => None,
        }
    }
}

/// Expands a shorthand into the `4n x 4n` boundary matrix.
///
/// Block `k` of the boundary vector is `u(a)`, `u(b)`, `u_x(a)`, `u_x(b)` for
/// `k = 0..4`; a named condition places `I_n` on the diagonal blocks it pins.
pub fn expand_bc<S: Scalar>(bc: &BcShorthand<S>, n: usize) -> Result<BoundaryMatrix<S>, ModelError> {
    let side = 4 * n;
    let pinned: [bool; 4] = match bc {
        BcShorthand::Dirichlet => [true, true, false, false],
        BcShorthand::Neumann => [false, false, true, true],
        BcShorthand::MixedNeumannDirichlet => [false, true, true, false],
        BcShorthand::MixedDirichletNeumann => [true, false, false, true],
        BcShorthand::Custom(rows) => {
            let cols = rows.first().map_or(side, Vec::len);
            if rows.len() > side || rows.iter().any(|r| r.len() != side) {
                return Err(ModelError::BoundaryShape { expected: side, rows: rows.len(), cols });
            }
            let mut d = BoundaryMatrix::zeros(side);
            for (i, r) in rows.iter().enumerate() {
                for (j, v) in r.iter().enumerate() {
                    d.set(i, j, v.clone());
                }
            }
            return Ok(d);
        }
    };
    let mut d = BoundaryMatrix::zeros(side);
    for (k, on) in pinned.iter().enumerate() {
        if *on {
            for i in 0..n {
                d.set(k * n + i, k * n + i, S::one());
            }
        }
    }
    Ok(d)
}

/// Closed interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Self {
        Self { lo, hi }
    }

    pub fn unit() -> Self {
        Self::new(S::zero(), S::one())
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.lo.to_f64(), self.hi.to_f64())
    }

    pub fn length(&self) -> S {
        self.hi.clone() - self.lo.clone()
    }
}

/// `u_t = diffusion(x) u_xx + drift(x) u_x + reaction(x) u` with boundary matrix `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeSystem<S: Scalar> {
    pub n: usize,
    pub interval: Interval<S>,
    pub diffusion: PolyMatrix<S>,
    pub drift: PolyMatrix<S>,
    pub reaction: PolyMatrix<S>,
    pub boundary: BoundaryMatrix<S>,
}

impl<S: Scalar> PdeSystem<S> {
    /// Validates shapes and the interval.
    pub fn new(
        interval: Interval<S>,
        diffusion: PolyMatrix<S>,
        drift: PolyMatrix<S>,
        reaction: PolyMatrix<S>,
        boundary: BoundaryMatrix<S>,
    ) -> Result<Self, ModelError> {
        let n = diffusion.rows();
        if n == 0 {
            return Err(ModelError::ZeroDimension);
        }
        if interval.lo >= interval.hi {
            let (a, b) = interval.to_f64();
            return Err(ModelError::Interval { a, b });
        }
        for (name, m) in [("A", &diffusion), ("B", &drift), ("C", &reaction)] {
            if m.shape() != (n, n) {
                return Err(ModelError::NotSquare { name, n });
            }
            if m.has_decisions() || m.vars().iter().any(|v| v != Var::X) {
                return Err(ModelError::NonPolynomial(format!("{} must be a numeric polynomial in x", name)));
            }
        }
        if boundary.side() != 4 * n {
            return Err(ModelError::BoundaryShape { expected: 4 * n, rows: boundary.side(), cols: boundary.side() });
        }
        Ok(Self {
            n,
            interval,
            diffusion: diffusion.with_vars(VarSet::X),
            drift: drift.with_vars(VarSet::X),
            reaction: reaction.with_vars(VarSet::X),
            boundary,
        })
    }

    /// `max(deg A, deg B, deg C)`.
    pub fn max_degree(&self) -> u32 {
        self.diffusion.degree().max(self.drift.degree()).max(self.reaction.degree())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PdeSystem<T> {
        PdeSystem {
            n: self.n,
            interval: Interval::new(f(&self.interval.lo), f(&self.interval.hi)),
            diffusion: self.diffusion.map_scalar(&f),
            drift: self.drift.map_scalar(&f),
            reaction: self.reaction.map_scalar(&f),
            boundary: self.boundary.map_scalar(&f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::Polynomial;
    use crate::scalar::Rational;

    fn as_f64(d: &BoundaryMatrix<f64>) -> Vec<Vec<f64>> {
        d.rows()
    }

    #[test]
    fn dirichlet_scalar_blocks() {
        let d = expand_bc::<f64>(&BcShorthand::Dirichlet, 1).unwrap();
        assert_eq!(
            as_f64(&d),
            vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.0]
            ]
        );
    }

    #[test]
    fn mixed_selects_neumann_left_dirichlet_right() {
        let d = expand_bc::<Rational>(&BcShorthand::MixedNeumannDirichlet, 1).unwrap();
        // rows pick u(b) and u_x(a)
        let dm = d.to_dmatrix();
        let ones: Vec<(usize, usize)> =
            (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| dm[(i, j)] != 0.0).collect();
        assert_eq!(ones, vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn custom_rows_zero_padded() {
        let rows = vec![vec![0.0, 1.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0]];
        let d = expand_bc(&BcShorthand::Custom(rows.clone()), 2).unwrap();
        assert_eq!(d.side(), 8);
        assert_eq!(d.rows()[0], rows[0]);
        assert!(d.rows()[1..].iter().all(|r| r.iter().all(|v| *v == 0.0)));
        assert!(expand_bc(&BcShorthand::Custom(vec![vec![1.0; 3]]), 2).is_err());
    }

    #[test]
    fn dirichlet_kills_vanishing_boundary_vectors() {
        let n = 2;
        let d = expand_bc::<f64>(&BcShorthand::Dirichlet, n).unwrap().to_dmatrix();
        // w(a) = w(b) = 0, arbitrary derivatives
        let ups = nalgebra::DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.5, -2.0, 0.3, 7.0]);
        assert!((d * ups).norm() == 0.0);
    }

    #[test]
    fn system_validation() {
        let one = PolyMatrix::<f64>::identity(1, VarSet::X);
        let d = expand_bc(&BcShorthand::Dirichlet, 1).unwrap();
        assert!(PdeSystem::new(Interval::new(1.0, 0.0), one.clone(), one.clone(), one.clone(), d.clone()).is_err());
        let two = PolyMatrix::<f64>::identity(2, VarSet::X);
        assert!(matches!(
            PdeSystem::new(Interval::unit(), one.clone(), two, one.clone(), d.clone()),
            Err(ModelError::NotSquare { name: "B", .. })
        ));
        let quad = PolyMatrix::from_polys(1, 1, vec![Polynomial::univariate(Var::X, &[0.0, 0.0, 3.0])]);
        let sys = PdeSystem::new(Interval::unit(), one.clone(), quad, one, d).unwrap();
        assert_eq!(sys.max_degree(), 2);
    }
}
