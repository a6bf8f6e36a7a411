//! Block semidefinite feasibility problems.
//!
//! Variables are flattened into one vector: every PSD block stores its upper
//! triangle row by row, blocks in construction order, followed by the free
//! scalars. An equality row `Σ c_k x_k = b` therefore reads, for a block
//! entry `x_k = X_pq` with `p < q`, as the symmetric coefficient matrix
//! `A_pq = A_qp = c_k / 2`, so that `A • X = Σ c_k x_k`.

mod ipm;
mod presolve;
mod sdpa;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{DecisionSpace, VarId};
use crate::polymat::LinearConstraint;
use crate::scalar::Scalar;

pub use ipm::IpmStats;
pub use presolve::PresolveStats;
pub use sdpa::{read_csdp_solution, read_plain_solution, sdpa_string, write_sdpa, SDPA_COMMENT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("coefficient of {label} is not finite")]
    NonFinite { label: String },
    #[error("constraint {label} references undeclared variable {var}")]
    UndeclaredVariable { label: String, var: u32 },
    #[error("assignment has {got} values, problem has {expected}")]
    Shape { expected: usize, got: usize },
    #[error("malformed solution file: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub side: usize,
    /// Position of the block's first stored entry in the flat vector.
    pub offset: usize,
}

impl BlockSpec {
    pub fn len(&self) -> usize {
        self.side * (self.side + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Flat index of `(p, q)`, either order.
    pub fn index(&self, p: usize, q: usize) -> usize {
        let (r, c) = if p <= q { (p, q) } else { (q, p) };
        self.offset + r * self.side - r * (r + 1) / 2 + c
    }

    /// `(p, q)` with `p <= q` for a flat index inside the block.
    pub fn position(&self, flat: usize) -> (usize, usize) {
        let mut off = flat - self.offset;
        let mut r = 0;
        while off >= self.side - r {
            off -= self.side - r;
            r += 1;
        }
        (r, r + off)
    }
}

/// One equality row, indices ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseRow {
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut idx: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut val: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if idx.last() == Some(&i) {
                *val.last_mut().expect("nonempty") += v;
            } else {
                idx.push(i);
                val.push(v);
            }
        }
        Self { idx, val }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(i, v)| v * x[*i]).sum()
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }
}

/// Canonical block SDP feasibility problem: find `x` with every block PSD and `A x = b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub n_free: usize,
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<f64>,
    pub labels: Vec<String>,
    /// Flat index of every decision variable, indexed by `VarId`.
    pub var_index: Vec<usize>,
}

impl SdpProblem {
    /// Empty problem with the given PSD block sides and number of free scalars.
    pub fn with_blocks(sides: &[(&str, usize)], n_free: usize) -> Self {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for (name, side) in sides {
            let b = BlockSpec { name: name.to_string(), side: *side, offset };
            offset += b.len();
            blocks.push(b);
        }
        let var_index = (0..offset + n_free).collect();
        Self { blocks, n_free, rows: Vec::new(), rhs: Vec::new(), labels: Vec::new(), var_index }
    }

    pub fn push_row(&mut self, pairs: Vec<(usize, f64)>, rhs: f64, label: impl Into<String>) {
        self.rows.push(SparseRow::from_pairs(pairs));
        self.rhs.push(rhs);
        self.labels.push(label.into());
    }

    pub fn n_psd(&self) -> usize {
        self.blocks.iter().map(BlockSpec::len).sum()
    }

    pub fn n_vars(&self) -> usize {
        self.n_psd() + self.n_free
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Full symmetric matrix of block `b` from a flat assignment.
    pub fn block_matrix(&self, x: &[f64], b: usize) -> DMatrix<f64> {
        let blk = &self.blocks[b];
        DMatrix::from_fn(blk.side, blk.side, |p, q| x[blk.index(p, q)])
    }

    /// Values per `VarId`, for substitution into the symbolic templates.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.var_index.iter().map(|&k| x[k]).collect()
    }

    /// `A x - b` per row.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().zip(&self.rhs).map(|(r, b)| r.dot(x) - b).collect()
    }

    /// Block and entry of a flat index, or the free-variable offset.
    pub fn describe(&self, flat: usize) -> String {
        for b in &self.blocks {
            if flat >= b.offset && flat < b.offset + b.len() {
                let (p, q) = b.position(flat);
                return format!("{}[{},{}]", b.name, p, q);
            }
        }
        format!("free[{}]", flat - self.n_psd())
    }
}

/// Flattens decision variables and constraints: PSD blocks first, free groups after.
pub fn canonicalize<S: Scalar>(
    space: &DecisionSpace,
    constraints: &[LinearConstraint<S>],
) -> Result<SdpProblem, SdpError> {
    let sides: Vec<(&str, usize)> = space.blocks().iter().map(|b| (b.name.as_str(), b.side)).collect();
    let mut p = SdpProblem::with_blocks(&sides, space.n_free());
    let mut var_index = vec![usize::MAX; space.n_vars()];
    for (blk, spec) in space.blocks().iter().zip(&p.blocks) {
        for (k, v) in blk.vars().enumerate() {
            var_index[v as usize] = spec.offset + k;
        }
    }
    let mut next = p.n_psd();
    for g in space.free_groups() {
        for v in g.vars() {
            var_index[v as usize] = next;
            next += 1;
        }
    }
    for c in constraints {
        let mut pairs = Vec::with_capacity(c.expr.n_terms());
        for (v, coeff) in c.expr.terms() {
            let k = *var_index
                .get(v.index())
                .filter(|k| **k != usize::MAX)
                .ok_or_else(|| SdpError::UndeclaredVariable { label: c.label.clone(), var: v.0 })?;
            let f = coeff.to_f64();
            if !f.is_finite() {
                return Err(SdpError::NonFinite { label: c.label.clone() });
            }
            pairs.push((k, f));
        }
        let rhs = 0.0 - c.expr.constant_part().to_f64();
        if !rhs.is_finite() {
            return Err(SdpError::NonFinite { label: c.label.clone() });
        }
        if pairs.is_empty() && rhs == 0.0 {
            continue;
        }
        p.push_row(pairs, rhs, c.label.clone());
    }
    p.var_index = var_index;
    Ok(p)
}

/// A-posteriori check of an assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub tol_psd: f64,
    pub tol_eq: f64,
    /// `(block name, minimum eigenvalue)`.
    pub min_eigs: Vec<(String, f64)>,
    pub max_residual: f64,
    /// `(row index, label, residual)` of the largest residual.
    pub worst_row: Option<(usize, String, f64)>,
    /// Block with the smallest eigenvalue.
    pub worst_block: Option<(String, f64)>,
    /// Every row above `tol_eq`, largest first, at most 20.
    pub violated_rows: Vec<(usize, String, f64)>,
}

impl VerifyReport {
    pub fn summary(&self) -> String {
        let eig =
            self.worst_block.as_ref().map_or("no blocks".to_string(), |(n, e)| format!("min eig {:.3e} in {}", e, n));
        let row = self
            .worst_row
            .as_ref()
            .map_or("no rows".to_string(), |(i, l, r)| format!("max residual {:.3e} at row {} ({})", r.abs(), i, l));
        format!("{}: {}; {}", if self.passed { "pass" } else { "FAIL" }, eig, row)
    }
}

/// Recomputes block eigenvalues and row residuals.
pub fn verify(p: &SdpProblem, x: &[f64], tol_psd: f64, tol_eq: f64) -> Result<VerifyReport, SdpError> {
    if x.len() != p.n_vars() {
        return Err(SdpError::Shape { expected: p.n_vars(), got: x.len() });
    }
    let mut min_eigs = Vec::new();
    for (b, blk) in p.blocks.iter().enumerate() {
        let e = if blk.side == 0 {
            0.0
        } else {
            let m = p.block_matrix(x, b);
            SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        min_eigs.push((blk.name.clone(), e));
    }
    let res = p.residuals(x);
    let mut violated: Vec<(usize, String, f64)> = res
        .iter()
        .enumerate()
        .filter(|(_, r)| !(r.abs() <= tol_eq))
        .map(|(i, r)| (i, p.labels[i].clone(), *r))
        .collect();
    violated.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()).then(a.0.cmp(&b.0)));
    violated.truncate(20);
    let worst_row = res
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .map(|(i, r)| (i, p.labels[i].clone(), *r));
    let max_residual = res.iter().fold(0.0f64, |m, r| if r.is_nan() { f64::NAN } else { m.max(r.abs()) });
    let worst_block = min_eigs.iter().cloned().min_by(|a, b| a.1.total_cmp(&b.1));
    let eig_ok = min_eigs.iter().all(|(_, e)| *e >= -tol_psd);
    let passed = eig_ok && max_residual <= tol_eq && x.iter().all(|v| v.is_finite());
    Ok(VerifyReport {
        passed,
        tol_psd,
        tol_eq,
        min_eigs,
        max_residual,
        worst_row,
        worst_block,
        violated_rows: violated,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Primal residual target on normalized rows.
    pub tol_feas: f64,
    pub tol_psd: f64,
    pub tol_eq: f64,
    /// Weight of the trace objective that selects an interior point.
    pub trace_weight: f64,
    /// A dual ray `ŷ` with `bᵀŷ = 1` and `λmax(Σ ŷ_i A_i) <= infeas_tol` proves infeasibility.
    pub infeas_tol: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 120,
            tol_feas: 1e-10,
            tol_psd: 1e-7,
            tol_eq: 1e-7,
            trace_weight: 1e-6,
            infeas_tol: 1e-8,
            step_fraction: 0.98,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Flat assignment in canonical order.
    pub x: Vec<f64>,
    pub report: VerifyReport,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Feasible(Certificate),
    Infeasible(String),
    Unknown(String),
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Feasible(_) => "feasible",
            SolveStatus::Infeasible(_) => "infeasible",
            SolveStatus::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub presolve: PresolveStats,
    pub ipm: Option<IpmStats>,
}

/// Presolve, interior-point solve, and a-posteriori verification on the original rows.
pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> SolveResult {
    let reduced = match presolve::presolve(p) {
        Ok(r) => r,
        Err(presolve::PresolveOutcome::Infeasible(reason, stats)) => {
            return SolveResult { status: SolveStatus::Infeasible(reason), presolve: stats, ipm: None }
        }
    };
    let stats = reduced.stats.clone();
    let (xred, ipm_stats) = if reduced.problem.rows.is_empty() {
        (reduced.problem.zero_point(), None)
    } else {
        let (outcome, st) = ipm::run(&reduced.problem, opts);
        match outcome {
            ipm::IpmOutcome::Feasible(x) => (x, Some(st)),
            ipm::IpmOutcome::Infeasible(reason) => {
                return SolveResult { status: SolveStatus::Infeasible(reason), presolve: stats, ipm: Some(st) }
            }
            ipm::IpmOutcome::Stalled(reason, Some(x)) => {
                let status = match certify(p, &reduced, &x, opts) {
                    Ok(c) => SolveStatus::Feasible(c),
                    Err(report) => SolveStatus::Unknown(format!("{}; best iterate: {}", reason, report)),
                };
                return SolveResult { status, presolve: stats, ipm: Some(st) };
            }
            ipm::IpmOutcome::Stalled(reason, None) => {
                return SolveResult { status: SolveStatus::Unknown(reason), presolve: stats, ipm: Some(st) }
            }
        }
    };
    let status = match certify(p, &reduced, &xred, opts) {
        Ok(c) => SolveStatus::Feasible(c),
        Err(report) => SolveStatus::Unknown(format!("solver point failed verification: {}", report)),
    };
    SolveResult { status, presolve: stats, ipm: ipm_stats }
}

/// Expands a reduced point, polished and as returned, and keeps the first that verifies.
fn certify(
    p: &SdpProblem,
    reduced: &presolve::Presolved,
    xred: &[Vec<f64>],
    opts: &SolveOptions,
) -> Result<Certificate, String> {
    let mut last = String::new();
    let candidates = if reduced.problem.rows.is_empty() {
        vec![xred.to_vec()]
    } else {
        vec![ipm::polish(&reduced.problem, xred, 2), xred.to_vec()]
    };
    for cand in candidates {
        let x = reduced.expand(p, &cand);
        match verify(p, &x, opts.tol_psd, opts.tol_eq) {
            Ok(report) if report.passed => return Ok(Certificate { x, report }),
            Ok(report) => last = report.summary(),
            Err(e) => last = e.to_string(),
        }
    }
    Err(last)
}

/// Values per `VarId` as a map from decision variable to value.
pub fn assignment_map(p: &SdpProblem, x: &[f64]) -> BTreeMap<VarId, f64> {
    p.var_index.iter().enumerate().map(|(v, &k)| (VarId(v as u32), x[k])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_block() -> SdpProblem {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
        p.push_row(vec![(0, 1.0)], 1.0, "X11 = 1");
        p
    }

    #[test]
    fn block_indexing() {
        let b = BlockSpec { name: "X".into(), side: 3, offset: 4 };
        assert_eq!(b.index(0, 0), 4);
        assert_eq!(b.index(2, 1), 4 + 4);
        for k in 4..10 {
            let (p, q) = b.position(k);
            assert_eq!(b.index(p, q), k);
        }
    }

    #[test]
    fn trivial_feasible() {
        let p = one_block();
        assert_eq!(p.n_vars(), 3);
        assert_eq!(p.n_rows(), 1);
        let r = solve(&p, &SolveOptions::default());
        match r.status {
            SolveStatus::Feasible(c) => {
                assert!((c.x[0] - 1.0).abs() < 1e-7);
                assert!(c.report.passed);
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn negative_trace_infeasible() {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
        p.push_row(vec![(0, 1.0), (2, 1.0)], -1.0, "trace = -1");
        assert!(matches!(solve(&p, &SolveOptions::default()).status, SolveStatus::Infeasible(_)));
    }

    #[test]
    fn off_diagonal_too_large_is_infeasible_by_ray() {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
        p.push_row(vec![(0, 1.0)], 1.0, "X11");
        p.push_row(vec![(2, 1.0)], 1.0, "X22");
        p.push_row(vec![(1, 1.0)], 2.0, "X12");
        let r = solve(&p, &SolveOptions::default());
        assert!(matches!(r.status, SolveStatus::Infeasible(_)), "{:?}", r.status);
        assert!(r.ipm.is_some());
    }

    #[test]
    fn empty_problem_is_feasible_at_zero() {
        let p = SdpProblem::with_blocks(&[("X", 3)], 2);
        match solve(&p, &SolveOptions::default()).status {
            SolveStatus::Feasible(c) => assert!(c.x.iter().all(|v| *v == 0.0)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn verify_reports_worst_row() {
        let p = one_block();
        let good = verify(&p, &[1.0, 0.0, 0.0], 1e-7, 1e-7).unwrap();
        assert!(good.passed);
        assert_eq!(good.max_residual, 0.0);
        let bad = verify(&p, &[1.01, 0.0, 0.0], 1e-7, 1e-7).unwrap();
        assert!(!bad.passed);
        assert_eq!(bad.worst_row.as_ref().unwrap().1, "X11 = 1");
        assert_eq!(bad.violated_rows.len(), 1);
        let neg = verify(&p, &[1.0, 0.0, -1.0], 1e-7, 1e-7).unwrap();
        assert!(!neg.passed);
        assert!(verify(&p, &[1.0], 1e-7, 1e-7).is_err());
    }

    #[test]
    fn free_variables_are_recovered() {
        // X ⪰ 0 (1x1), f free: X + f = 3, f = 1
        let mut p = SdpProblem::with_blocks(&[("X", 1)], 1);
        p.push_row(vec![(0, 1.0), (1, 1.0)], 3.0, "sum");
        p.push_row(vec![(1, 1.0)], 1.0, "f");
        match solve(&p, &SolveOptions::default()).status {
            SolveStatus::Feasible(c) => {
                assert!((c.x[0] - 2.0).abs() < 1e-8);
                assert!((c.x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{:?}", other),
        }
    }
}
