//! Finite-difference oracle.
//!
//! Grid `x_j = a + j h`, `j = 0..N-1`. Interior rows use second-order central
//! differences for `u_xx` and `u_x`; boundary slopes use the one-sided
//! stencils `u_x(a) ≈ (-3u_0 + 4u_1 - u_2) / 2h` and
//! `u_x(b) ≈ (3u_{N-1} - 4u_{N-2} + u_{N-3}) / 2h`. The `4n` discrete
//! boundary equations `D [u(a); u(b); u_x(a); u_x(b)] = 0` are solved for the
//! `2n` boundary nodal values, leaving an ODE in the interior unknowns.

use nalgebra::{DMatrix, DVector, SVD};
use thiserror::Error;

use crate::model::{ModelError, PdeSystem};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("grid needs at least 16 nodes, got {0}")]
    GridTooSmall(usize),
    #[error("boundary conditions do not determine the boundary values: rank {rank} of {needed}")]
    UnsupportedBoundary { rank: usize, needed: usize },
    #[error("eigenvalue iteration did not converge")]
    Eigensolver,
    #[error("endpoints must straddle zero: abscissa {lo_value} at {lo}, {hi_value} at {hi}")]
    SameSign { lo: f64, hi: f64, lo_value: f64, hi_value: f64 },
    #[error("initial state has length {got}, grid has {expected}")]
    InitialState { expected: usize, got: usize },
    #[error("time step must be positive and not exceed the horizon")]
    TimeStep,
    #[error("implicit step matrix is singular")]
    Singular,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Discrete generator on the interior unknowns.
#[derive(Clone, Debug)]
pub struct GridOperator {
    pub n: usize,
    pub ngrid: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    /// `n (N - 2)` square, acting on interior values ordered node-major.
    pub matrix: DMatrix<f64>,
    /// Full nodal vector (length `n N`) from interior values.
    pub extension: DMatrix<f64>,
}

impl GridOperator {
    pub fn interior_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn full_len(&self) -> usize {
        self.n * self.ngrid
    }

    /// Interior values of a full nodal vector.
    pub fn restrict(&self, full: &DVector<f64>) -> DVector<f64> {
        full.rows(self.n, self.interior_len()).into_owned()
    }

    pub fn extend(&self, interior: &DVector<f64>) -> DVector<f64> {
        &self.extension * interior
    }

    /// Trapezoidal `‖u‖²_{L2}` of a full nodal vector.
    pub fn l2_norm_sq(&self, full: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.ngrid {
            let w = if j == 0 || j + 1 == self.ngrid { 0.5 * self.h } else { self.h };
            for c in 0..self.n {
                acc += w * full[j * self.n + c].powi(2);
            }
        }
        acc
    }
}

pub fn discretize<S: Scalar>(sys: &PdeSystem<S>, ngrid: usize) -> Result<GridOperator, SimError> {
    if ngrid < 16 {
        return Err(SimError::GridTooSmall(ngrid));
    }
    let n = sys.n;
    let (a, b) = sys.interval.to_f64();
    let h = (b - a) / (ngrid - 1) as f64;
    let nodes: Vec<f64> = (0..ngrid).map(|j| a + j as f64 * h).collect();
    let full = n * ngrid;
    let nint = n * (ngrid - 2);

    // Boundary values from the full nodal vector: [u(a); u(b); u_x(a); u_x(b)].
    let mut s = DMatrix::<f64>::zeros(4 * n, full);
    let last = ngrid - 1;
    for c in 0..n {
        s[(c, c)] = 1.0;
        s[(n + c, last * n + c)] = 1.0;
        s[(2 * n + c, c)] = -1.5 / h;
        s[(2 * n + c, n + c)] = 2.0 / h;
        s[(2 * n + c, 2 * n + c)] = -0.5 / h;
        s[(3 * n + c, last * n + c)] = 1.5 / h;
        s[(3 * n + c, (last - 1) * n + c)] = -2.0 / h;
        s[(3 * n + c, (last - 2) * n + c)] = 0.5 / h;
    }
    let d = sys.boundary.to_dmatrix();
    let bc = &d * &s;
    let bnd: Vec<usize> = (0..n).chain(last * n..full).collect();
    let int: Vec<usize> = (n..last * n).collect();
    let bc_b = bc.select_columns(&bnd);
    let bc_i = bc.select_columns(&int);
    let svd = SVD::new(bc.clone(), false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rank = svd.singular_values.iter().filter(|v| **v > 1e-10 * smax.max(1.0)).count();
    let svd_b = SVD::new(bc_b.clone(), true, true);
    let rank_b = svd_b.singular_values.iter().filter(|v| **v > 1e-10 * smax.max(1.0)).count();
    if rank != 2 * n || rank_b != 2 * n {
        return Err(SimError::UnsupportedBoundary { rank: rank.min(rank_b), needed: 2 * n });
    }
    // u_b = -pinv(bc_b) bc_i u_i
    let pinv = svd_b.pseudo_inverse(1e-10 * smax.max(1.0)).map_err(|_| SimError::Eigensolver)?;
    let elim = -(pinv * bc_i);
    let mut ext = DMatrix::<f64>::zeros(full, nint);
    for (k, row) in int.iter().enumerate() {
        ext[(*row, k)] = 1.0;
    }
    for (k, row) in bnd.iter().enumerate() {
        for j in 0..nint {
            ext[(*row, j)] = elim[(k, j)];
        }
    }

    let mut lfull = DMatrix::<f64>::zeros(nint, full);
    for j in 1..last {
        let x = nodes[j];
        let am = sys.diffusion.eval_numeric(&[x, 0.0, 0.0]);
        let bm = sys.drift.eval_numeric(&[x, 0.0, 0.0]);
        let cm = sys.reaction.eval_numeric(&[x, 0.0, 0.0]);
        let r0 = (j - 1) * n;
        for p in 0..n {
            for q in 0..n {
                let (av, bv, cv) = (am[(p, q)], bm[(p, q)], cm[(p, q)]);
                lfull[(r0 + p, (j - 1) * n + q)] += av / (h * h) - bv / (2.0 * h);
                lfull[(r0 + p, j * n + q)] += -2.0 * av / (h * h) + cv;
                lfull[(r0 + p, (j + 1) * n + q)] += av / (h * h) + bv / (2.0 * h);
            }
        }
    }
    Ok(GridOperator { n, ngrid, h, nodes, matrix: lfull * &ext, extension: ext })
}

/// Largest real part of the eigenvalues of a square matrix.
pub fn abscissa_of(m: &DMatrix<f64>) -> Result<f64, SimError> {
    if m.nrows() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let eig = fm.eigenvalues().map_err(|_| SimError::Eigensolver)?;
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn spectral_abscissa(op: &GridOperator) -> Result<f64, SimError> {
    abscissa_of(&op.matrix)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Threshold {
    /// Last parameter with negative abscissa.
    pub value: f64,
    pub upper: f64,
    pub probes: Vec<(f64, f64)>,
}

/// Bisection on the sign of the spectral abscissa.
pub fn numeric_threshold(
    family: impl Fn(f64) -> Result<PdeSystem<f64>, ModelError>,
    lo: f64,
    hi: f64,
    tol: f64,
    ngrid: usize,
) -> Result<Threshold, SimError> {
    let eval = |v: f64| -> Result<f64, SimError> { spectral_abscissa(&discretize(&family(v)?, ngrid)?) };
    let (fl, fh) = (eval(lo)?, eval(hi)?);
    if !(fl < 0.0 && fh > 0.0) {
        return Err(SimError::SameSign { lo, hi, lo_value: fl, hi_value: fh });
    }
    let mut probes = vec![(lo, fl), (hi, fh)];
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let f = eval(mid)?;
        probes.push((mid, f));
        if f < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(Threshold { value: a, upper: b, probes })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `‖u(t)‖_{L2}`.
    pub norms: Vec<f64>,
    /// Full nodal vectors.
    pub states: Vec<DVector<f64>>,
}

/// Trapezoidal (Crank–Nicolson) integration from a full nodal initial vector.
pub fn simulate(op: &GridOperator, u0: &DVector<f64>, t_end: f64, dt: f64) -> Result<Trajectory, SimError> {
    if u0.len() != op.full_len() {
        return Err(SimError::InitialState { expected: op.full_len(), got: u0.len() });
    }
    if !(dt > 0.0 && dt <= t_end) {
        return Err(SimError::TimeStep);
    }
    let k = op.interior_len();
    let id = DMatrix::<f64>::identity(k, k);
    let lhs = &id - &op.matrix * (0.5 * dt);
    let rhs = &id + &op.matrix * (0.5 * dt);
    let lu = lhs.lu();
    let steps = (t_end / dt).round() as usize;
    let mut ui = op.restrict(u0);
    let mut out = Trajectory { times: Vec::new(), norms: Vec::new(), states: Vec::new() };
    let push = |t: f64, ui: &DVector<f64>, out: &mut Trajectory| {
        let full = op.extend(ui);
        out.times.push(t);
        out.norms.push(op.l2_norm_sq(&full).sqrt());
        out.states.push(full);
    };
    push(0.0, &ui, &mut out);
    for s in 1..=steps {
        ui = lu.solve(&(&rhs * &ui)).ok_or(SimError::Singular)?;
        push(s as f64 * dt, &ui, &mut out);
    }
    Ok(out)
}

/// Nodal samples of `f` on the grid, node-major.
pub fn sample(op: &GridOperator, f: impl Fn(f64) -> Vec<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(op.full_len());
    for (j, x) in op.nodes.iter().enumerate() {
        for (c, val) in f(*x).into_iter().enumerate().take(op.n) {
            v[j * op.n + c] = val;
        }
    }
    v
}
