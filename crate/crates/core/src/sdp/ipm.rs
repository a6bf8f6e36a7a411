//! Primal-dual interior-point method (HKM direction, Mehrotra
//! predictor-corrector) for
//!
//! ```text
//! min  w·tr(X)   s.t.  A_i • X = b_i,  X ⪰ 0
//! max  bᵀy       s.t.  Σ y_i A_i + Z = w·I,  Z ⪰ 0
//! ```
//!
//! The small trace weight `w` keeps iterates interior; the method stops as
//! soon as the primal residual is negligible. A dual ray `ŷ = y / bᵀy` with
//! `Σ ŷ_i A_i ⪯ δ I` shows that every feasible `X` has `tr X >= 1/δ`, which is
//! reported as infeasibility.

use std::time::Instant;

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::DenseSolveCore;
use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Accum, Mat, Par, Side};

use super::presolve::ReducedProblem;
use super::SolveOptions;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IpmStats {
    pub iterations: usize,
    pub rows: usize,
    pub block_sides: Vec<usize>,
    pub primal_residual: f64,
    pub mu: f64,
    pub seconds: f64,
}

pub(crate) enum IpmOutcome {
    /// Dense row-major blocks.
    Feasible(Vec<Vec<f64>>),
    Infeasible(String),
    /// Reason, and the iterate with the smallest primal residual once it is small.
    Stalled(String, Option<Vec<Vec<f64>>>),
}

fn dense(x: &[Mat<f64>]) -> Vec<Vec<f64>> {
    x.iter().map(|xb| (0..xb.nrows() * xb.ncols()).map(|k| xb[(k / xb.ncols(), k % xb.ncols())]).collect()).collect()
}

/// Below this primal residual an iterate is worth handing to verification.
const KEEP: f64 = 1e-6;

struct BlockRow {
    row: usize,
    entries: Vec<(usize, usize, f64)>,
    cols: Vec<usize>,
}

struct Structure {
    sides: Vec<usize>,
    per_block: Vec<Vec<BlockRow>>,
    m: usize,
}

impl Structure {
    fn new(p: &ReducedProblem) -> Self {
        let mut per_block: Vec<Vec<BlockRow>> = p.sides.iter().map(|_| Vec::new()).collect();
        for (i, row) in p.rows.iter().enumerate() {
            for e in row {
                let list = &mut per_block[e.block as usize];
                if list.last().map(|r| r.row) != Some(i) {
                    list.push(BlockRow { row: i, entries: Vec::new(), cols: Vec::new() });
                }
                list.last_mut().expect("just pushed").entries.push((e.p as usize, e.q as usize, e.a));
            }
        }
        for list in &mut per_block {
            for br in list.iter_mut() {
                let mut cols: Vec<usize> = br.entries.iter().flat_map(|(p, q, _)| [*p, *q]).collect();
                cols.sort_unstable();
                cols.dedup();
                br.cols = cols;
            }
        }
        Self { sides: p.sides.clone(), per_block, m: p.rows.len() }
    }

    /// `Σ y_i A_i` per block.
    fn adjoint(&self, y: &[f64]) -> Vec<Mat<f64>> {
        self.sides
            .iter()
            .zip(&self.per_block)
            .map(|(s, rows)| {
                let mut out = Mat::zeros(*s, *s);
                for br in rows {
                    let yi = y[br.row];
                    for (p, q, a) in &br.entries {
                        out[(*p, *q)] += yi * a;
                        if p != q {
                            out[(*q, *p)] += yi * a;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `A_i • H` for every row; `H` need not be symmetric.
    fn apply(&self, h: &[Mat<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (rows, hb) in self.per_block.iter().zip(h) {
            for br in rows {
                out[br.row] += inner(&br.entries, hb);
            }
        }
        out
    }

    /// `M_ij = A_i • (X A_j Z⁻¹)`.
    fn schur(&self, x: &[Mat<f64>], zi: &[Mat<f64>]) -> Mat<f64> {
        let m = self.m;
        let mut out = Mat::<f64>::zeros(m, m);
        for ((rows, xb), zb) in self.per_block.iter().zip(x).zip(zi) {
            let s = xb.nrows();
            let mut pos = vec![usize::MAX; s];
            for (ii, br) in rows.iter().enumerate() {
                let c = br.cols.len();
                for (k, col) in br.cols.iter().enumerate() {
                    pos[*col] = k;
                }
                let mut u = Mat::<f64>::zeros(s, c);
                for (p, q, a) in &br.entries {
                    axpy_col(&mut u, pos[*q], *a, xb, *p);
                    if p != q {
                        axpy_col(&mut u, pos[*p], *a, xb, *q);
                    }
                }
                let zsub = Mat::<f64>::from_fn(c, s, |k, j| zb[(br.cols[k], j)]);
                let mut g = Mat::<f64>::zeros(s, s);
                matmul(&mut g, Accum::Replace, &u, &zsub, 1.0, Par::Seq);
                for bj in &rows[ii..] {
                    out[(br.row, bj.row)] += inner(&bj.entries, &g);
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }
}

fn inner(entries: &[(usize, usize, f64)], h: &Mat<f64>) -> f64 {
    entries.iter().map(|(p, q, a)| if p == q { a * h[(*p, *p)] } else { a * (h[(*p, *q)] + h[(*q, *p)]) }).sum()
}

fn axpy_col(u: &mut Mat<f64>, dst: usize, a: f64, x: &Mat<f64>, src: usize) {
    let xs = x.col_as_slice(src);
    for (o, v) in u.col_as_slice_mut(dst).iter_mut().zip(xs) {
        *o += a * v;
    }
}

fn mul(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(&mut out, Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

fn symmetrize(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        acc += a.col_as_slice(j).iter().zip(b.col_as_slice(j)).map(|(x, y)| x * y).sum::<f64>();
    }
    acc
}

fn eigenvalues(a: &Mat<f64>) -> Option<Vec<f64>> {
    if a.nrows() == 0 {
        return Some(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower).ok()
}

/// Largest `α` with `X + α dX ⪰ 0`, infinite if every direction is feasible.
fn max_step(x: &Mat<f64>, dx: &Mat<f64>) -> f64 {
    let Ok(llt) = x.llt(Side::Lower) else { return 0.0 };
    let mut w = dx.clone();
    solve_lower_triangular_in_place(llt.L(), w.as_mut(), Par::Seq);
    let mut w = w.transpose().to_owned();
    solve_lower_triangular_in_place(llt.L(), w.as_mut(), Par::Seq);
    match eigenvalues(&symmetrize(&w)) {
        Some(e) => {
            let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo < 0.0 {
                -1.0 / lo
            } else {
                f64::INFINITY
            }
        }
        None => 0.0,
    }
}

fn step_length(xs: &[Mat<f64>], dxs: &[Mat<f64>], fraction: f64) -> f64 {
    let amax = xs.iter().zip(dxs).map(|(x, d)| max_step(x, d)).fold(f64::INFINITY, f64::min);
    (fraction * amax).min(1.0)
}

pub(crate) fn run(p: &ReducedProblem, opts: &SolveOptions) -> (IpmOutcome, IpmStats) {
    let start = Instant::now();
    let st = Structure::new(p);
    let m = st.m;
    let n_tot: usize = st.sides.iter().sum();
    let mut stats = IpmStats { rows: m, block_sides: st.sides.clone(), ..Default::default() };
    let bmax = p.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let xi = 10.0 * bmax.max(1.0);
    let ident = |s: usize, v: f64| Mat::<f64>::from_fn(s, s, |i, j| if i == j { v } else { 0.0 });
    let mut x: Vec<Mat<f64>> = st.sides.iter().map(|s| ident(*s, xi)).collect();
    let mut z: Vec<Mat<f64>> = st.sides.iter().map(|s| ident(*s, xi)).collect();
    let c: Vec<Mat<f64>> = st.sides.iter().map(|s| ident(*s, opts.trace_weight)).collect();
    let mut y = vec![0.0; m];
    let mut stalls = 0;
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;

    let finish = |stats: &mut IpmStats, it: usize| {
        stats.iterations = it;
        stats.seconds = start.elapsed().as_secs_f64();
    };

    for it in 0..opts.max_iter {
        let ax = st.apply(&x);
        let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rp_norm = rp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mu = x.iter().zip(&z).map(|(a, b)| dot(a, b)).sum::<f64>() / n_tot as f64;
        stats.primal_residual = rp_norm;
        stats.mu = mu;
        log::trace!("ipm {:3}: rp {:.3e}, mu {:.3e}", it, rp_norm, mu);
        if rp_norm <= opts.tol_feas {
            finish(&mut stats, it);
            return (IpmOutcome::Feasible(dense(&x)), stats);
        }
        let best_rp = best.as_ref().map(|b| b.0);
        if let Some(r) = best_rp.filter(|r| rp_norm > 100.0 * r) {
            finish(&mut stats, it);
            let reason = format!("primal residual grew from {:.3e} to {:.3e}", r, rp_norm);
            return (IpmOutcome::Stalled(reason, best.map(|b| b.1)), stats);
        }
        if rp_norm <= KEEP && best_rp.is_none_or(|r| rp_norm < r) {
            best = Some((rp_norm, dense(&x)));
        }
        let by: f64 = p.b.iter().zip(&y).map(|(b, v)| b * v).sum();
        if by > 0.0 {
            let ray = st.adjoint(&y.iter().map(|v| v / by).collect::<Vec<_>>());
            let lmax = ray.iter().filter_map(eigenvalues).flat_map(|e| e.into_iter()).fold(f64::NEG_INFINITY, f64::max);
            if lmax <= opts.infeas_tol {
                finish(&mut stats, it);
                let bound = if lmax > 0.0 { format!("{:.3e}", 1.0 / lmax) } else { "infinity".to_string() };
                return (
                    IpmOutcome::Infeasible(format!(
                        "dual ray with λmax = {:.3e}: any feasible point has trace at least {} in scaled units",
                        lmax, bound
                    )),
                    stats,
                );
            }
        }

        let zi: Vec<Mat<f64>> = match z.iter().map(|zb| zb.llt(Side::Lower).map(|l| l.inverse())).collect() {
            Ok(v) => v,
            Err(_) => {
                finish(&mut stats, it);
                return (IpmOutcome::Stalled("dual slack lost definiteness".into(), best.map(|b| b.1)), stats);
            }
        };
        let aty = st.adjoint(&y);
        let rd: Vec<Mat<f64>> = (0..x.len()).map(|b| &c[b] - &z[b] - &aty[b]).collect();
        let schur = st.schur(&x, &zi);
        let chol = match schur.llt(Side::Lower) {
            Ok(l) => l,
            Err(_) => {
                let dmax = (0..m).map(|i| schur[(i, i)]).fold(0.0f64, f64::max);
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[(i, i)] += 1e-12 * dmax.max(1e-300);
                }
                match reg.llt(Side::Lower) {
                    Ok(l) => l,
                    Err(_) => {
                        finish(&mut stats, it);
                        return (IpmOutcome::Stalled("Schur complement is singular".into(), best.map(|b| b.1)), stats);
                    }
                }
            }
        };
        let xrd: Vec<Mat<f64>> = x.iter().zip(&rd).map(|(a, b)| mul(a, b)).collect();

        // Direction for a given centering and second-order term.
        let direction = |sigma_mu: f64, corr: Option<&[Mat<f64>]>| {
            let h: Vec<Mat<f64>> = (0..x.len())
                .map(|b| {
                    let mut inner = xrd[b].clone();
                    if let Some(cc) = corr {
                        inner += &cc[b];
                    }
                    let mut hb = &zi[b] * sigma_mu - &x[b];
                    hb -= mul(&inner, &zi[b]);
                    hb
                })
                .collect();
            let ah = st.apply(&h);
            let rhs = Mat::<f64>::from_fn(m, 1, |i, _| rp[i] - ah[i]);
            let dy_m = chol.solve(&rhs);
            let dy: Vec<f64> = (0..m).map(|i| dy_m[(i, 0)]).collect();
            let atdy = st.adjoint(&dy);
            let dz: Vec<Mat<f64>> = (0..x.len()).map(|b| &rd[b] - &atdy[b]).collect();
            let dx: Vec<Mat<f64>> = (0..x.len())
                .map(|b| {
                    let mut inner = mul(&x[b], &dz[b]);
                    if let Some(cc) = corr {
                        inner += &cc[b];
                    }
                    let mut d = &zi[b] * sigma_mu - &x[b];
                    d -= mul(&inner, &zi[b]);
                    symmetrize(&d)
                })
                .collect();
            (dx, dy, dz)
        };

        let (dxp, _, dzp) = direction(0.0, None);
        let ap = step_length(&x, &dxp, 1.0);
        let ad = step_length(&z, &dzp, 1.0);
        let mu_aff =
            (0..x.len()).map(|b| dot(&(&x[b] + &dxp[b] * ap), &(&z[b] + &dzp[b] * ad))).sum::<f64>() / n_tot as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Vec<Mat<f64>> = dxp.iter().zip(&dzp).map(|(a, b)| mul(a, b)).collect();
        let (dx, dy, dz) = direction(sigma * mu, Some(&corr));
        let ap = step_length(&x, &dx, opts.step_fraction);
        let ad = step_length(&z, &dz, opts.step_fraction);
        for b in 0..x.len() {
            x[b] += &dx[b] * ap;
            z[b] += &dz[b] * ad;
            x[b] = symmetrize(&x[b]);
            z[b] = symmetrize(&z[b]);
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                finish(&mut stats, it + 1);
                return (IpmOutcome::Stalled("step lengths collapsed".into(), best.map(|b| b.1)), stats);
            }
        } else {
            stalls = 0;
        }
    }
    finish(&mut stats, opts.max_iter);
    (
        IpmOutcome::Stalled(
            format!("iteration limit reached with primal residual {:.3e}", stats.primal_residual),
            best.map(|b| b.1),
        ),
        stats,
    )
}

/// Least-norm corrections `X += Σ c_i A_i` with `G c = b - A(X)`, `G` the
/// Gram matrix of the rows. Leaves an interior point interior when the
/// residual is small against its smallest eigenvalue.
pub(crate) fn polish(p: &ReducedProblem, blocks: &[Vec<f64>], rounds: usize) -> Vec<Vec<f64>> {
    let st = Structure::new(p);
    let m = st.m;
    let g = super::presolve::gram(&p.rows, &p.sides);
    let gm = Mat::<f64>::from_fn(m, m, |i, j| g[i * m + j]);
    let Ok(chol) = gm.llt(Side::Lower) else { return blocks.to_vec() };
    let mut x: Vec<Mat<f64>> =
        st.sides.iter().zip(blocks).map(|(s, xb)| Mat::from_fn(*s, *s, |i, j| xb[i * s + j])).collect();
    for _ in 0..rounds {
        let ax = st.apply(&x);
        let r = Mat::<f64>::from_fn(m, 1, |i, _| p.b[i] - ax[i]);
        let c = chol.solve(&r);
        let cv: Vec<f64> = (0..m).map(|i| c[(i, 0)]).collect();
        for (xb, d) in x.iter_mut().zip(st.adjoint(&cv)) {
            *xb += &d;
        }
    }
    dense(&x)
}
