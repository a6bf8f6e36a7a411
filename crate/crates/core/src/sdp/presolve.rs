//! Reductions applied before the interior-point solve.
//!
//! 1. Free scalars are eliminated by sparse Gaussian elimination with a
//!    Markowitz-style pivot choice; their values are recovered afterwards by
//!    back-substitution.
//! 2. A row with zero right-hand side whose remaining entries are diagonal
//!    entries of one sign forces those diagonals, hence their whole rows and
//!    columns, to vanish. Those indices are removed from their blocks and the
//!    rule is repeated until nothing changes.
//! 3. Rows are scaled to unit Frobenius norm and linearly dependent rows are
//!    dropped after a pivoted Cholesky factorization of their Gram matrix.

use std::collections::BTreeSet;

use super::SdpProblem;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresolveStats {
    pub rows_in: usize,
    pub free_in: usize,
    pub free_eliminated: usize,
    pub indices_removed: usize,
    pub empty_rows: usize,
    pub dependent_rows: usize,
    pub rows_out: usize,
    pub block_sides_out: Vec<usize>,
}

pub(crate) enum PresolveOutcome {
    Infeasible(String, PresolveStats),
}

/// One entry of a symmetric constraint matrix: `A[p][q] = A[q][p] = a`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub(crate) struct Entry {
    pub block: u32,
    pub p: u32,
    pub q: u32,
    pub a: f64,
}

/// Problem handed to the interior-point method: PSD blocks only.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ReducedProblem {
    pub sides: Vec<usize>,
    pub rows: Vec<Vec<Entry>>,
    pub b: Vec<f64>,
}

impl ReducedProblem {
    pub fn zero_point(&self) -> Vec<Vec<f64>> {
        self.sides.iter().map(|s| vec![0.0; s * s]).collect()
    }
}

struct Pivot {
    col: usize,
    row: Vec<(usize, f64)>,
    rhs: f64,
}

pub(crate) struct Presolved {
    pub problem: ReducedProblem,
    pub stats: PresolveStats,
    /// Original block and surviving indices of each reduced block.
    alive: Vec<(usize, Vec<usize>)>,
    pivots: Vec<Pivot>,
}

impl Presolved {
    /// Flat assignment of the original problem from reduced blocks (row-major, dense).
    pub fn expand(&self, p: &SdpProblem, blocks: &[Vec<f64>]) -> Vec<f64> {
        let mut x = vec![0.0; p.n_vars()];
        for ((orig, idx), xb) in self.alive.iter().zip(blocks) {
            let spec = &p.blocks[*orig];
            let s = idx.len();
            for i in 0..s {
                for j in i..s {
                    x[spec.index(idx[i], idx[j])] = 0.5 * (xb[i * s + j] + xb[j * s + i]);
                }
            }
        }
        for piv in self.pivots.iter().rev() {
            let mut acc = piv.rhs;
            let mut diag = 0.0;
            for (k, v) in &piv.row {
                if *k == piv.col {
                    diag = *v;
                } else {
                    acc -= v * x[*k];
                }
            }
            x[piv.col] = acc / diag;
        }
        x
    }
}

const DROP: f64 = 1e-13;
const ZERO_RHS: f64 = 1e-12;
const DEPENDENT: f64 = 1e-11;
const INCONSISTENT: f64 = 1e-7;

pub(crate) fn presolve(p: &SdpProblem) -> Result<Presolved, PresolveOutcome> {
    let n_psd = p.n_psd();
    let mut stats = PresolveStats { rows_in: p.n_rows(), free_in: p.n_free, ..Default::default() };
    let mut rows: Vec<Vec<(usize, f64)>> =
        p.rows.iter().map(|r| r.idx.iter().cloned().zip(r.val.iter().cloned()).collect()).collect();
    let mut rhs = p.rhs.clone();
    let mut active = vec![true; rows.len()];
    let scale: Vec<f64> = rows.iter().map(|r| r.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()))).collect();

    let pivots = eliminate_free(&mut rows, &mut rhs, &mut active, n_psd, p.n_free);
    stats.free_eliminated = pivots.len();

    // Remaining rows reference PSD entries only.
    let mut alive: Vec<Vec<bool>> = p.blocks.iter().map(|b| vec![true; b.side]).collect();
    let mut entries: Vec<Vec<(usize, usize, usize, f64)>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|(k, v)| {
                    let b = p.blocks.iter().rposition(|b| b.offset <= *k).expect("psd index");
                    let (i, j) = p.blocks[b].position(*k);
                    (b, i, j, *v)
                })
                .collect()
        })
        .collect();
    loop {
        let mut changed = false;
        for r in 0..entries.len() {
            if !active[r] {
                continue;
            }
            entries[r].retain(|(b, i, j, _)| alive[*b][*i] && alive[*b][*j]);
            let tol = ZERO_RHS * scale[r].max(1.0);
            if entries[r].is_empty() {
                if rhs[r].abs() > tol {
                    return Err(PresolveOutcome::Infeasible(
                        format!("row {} ({}) reduces to 0 = {:.3e}", r, p.labels[r], rhs[r]),
                        stats,
                    ));
                }
                active[r] = false;
                stats.empty_rows += 1;
                continue;
            }
            let all_diag = entries[r].iter().all(|(_, i, j, _)| i == j);
            let pos = entries[r].iter().all(|e| e.3 > 0.0);
            let neg = entries[r].iter().all(|e| e.3 < 0.0);
            if !(all_diag && (pos || neg)) {
                continue;
            }
            let signed = if pos { rhs[r] } else { -rhs[r] };
            if signed < -tol {
                return Err(PresolveOutcome::Infeasible(
                    format!(
                        "row {} ({}) asks a nonnegative sum of PSD diagonals to equal {:.3e}",
                        r, p.labels[r], signed
                    ),
                    stats,
                ));
            }
            if signed <= tol {
                for (b, i, _, _) in &entries[r] {
                    if alive[*b][*i] {
                        alive[*b][*i] = false;
                        stats.indices_removed += 1;
                    }
                }
                active[r] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Reduced block numbering.
    let mut kept_blocks = Vec::new();
    let mut new_block = vec![usize::MAX; p.blocks.len()];
    let mut new_index: Vec<Vec<usize>> = Vec::new();
    for (b, a) in alive.iter().enumerate() {
        let idx: Vec<usize> = (0..a.len()).filter(|i| a[*i]).collect();
        let mut map = vec![usize::MAX; a.len()];
        for (k, i) in idx.iter().enumerate() {
            map[*i] = k;
        }
        new_index.push(map);
        if !idx.is_empty() {
            new_block[b] = kept_blocks.len();
            kept_blocks.push((b, idx));
        }
    }
    let sides: Vec<usize> = kept_blocks.iter().map(|(_, i)| i.len()).collect();

    let mut red_rows: Vec<Vec<Entry>> = Vec::new();
    let mut red_b = Vec::new();
    let mut red_label = Vec::new();
    for r in 0..entries.len() {
        if !active[r] {
            continue;
        }
        let mut row: Vec<Entry> = entries[r]
            .iter()
            .map(|(b, i, j, v)| Entry {
                block: new_block[*b] as u32,
                p: new_index[*b][*i] as u32,
                q: new_index[*b][*j] as u32,
                a: if i == j { *v } else { 0.5 * v },
            })
            .collect();
        let norm = row.iter().map(|e| if e.p == e.q { e.a * e.a } else { 2.0 * e.a * e.a }).sum::<f64>().sqrt();
        for e in &mut row {
            e.a /= norm;
        }
        row.sort_by_key(|e| (e.block, e.p, e.q));
        red_rows.push(row);
        red_b.push(rhs[r] / norm);
        red_label.push(r);
    }

    let keep = match independent_rows(&red_rows, &red_b, &sides) {
        Ok(k) => k,
        Err(j) => {
            let r = red_label[j];
            return Err(PresolveOutcome::Infeasible(
                format!("row {} ({}) is a combination of other rows with a different right-hand side", r, p.labels[r]),
                stats,
            ));
        }
    };
    stats.dependent_rows = red_rows.len() - keep.len();
    let rows_out: Vec<Vec<Entry>> = keep.iter().map(|i| red_rows[*i].clone()).collect();
    let b_out: Vec<f64> = keep.iter().map(|i| red_b[*i]).collect();
    stats.rows_out = rows_out.len();
    stats.block_sides_out = sides.clone();
    Ok(Presolved { problem: ReducedProblem { sides, rows: rows_out, b: b_out }, stats, alive: kept_blocks, pivots })
}

fn eliminate_free(
    rows: &mut [Vec<(usize, f64)>],
    rhs: &mut [f64],
    active: &mut [bool],
    n_psd: usize,
    n_free: usize,
) -> Vec<Pivot> {
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_free];
    for (r, row) in rows.iter().enumerate() {
        for (k, _) in row {
            if *k >= n_psd {
                col_rows[k - n_psd].insert(r);
            }
        }
    }
    let mut pivots = Vec::new();
    let mut done = vec![false; n_free];
    while let Some(j) = (0..n_free).filter(|j| !done[*j] && !col_rows[*j].is_empty()).min_by_key(|j| col_rows[*j].len())
    {
        let col = n_psd + j;
        let coeff = |row: &Vec<(usize, f64)>| row.binary_search_by_key(&col, |e| e.0).map(|i| row[i].1).unwrap_or(0.0);
        let max = col_rows[j].iter().map(|r| coeff(&rows[*r]).abs()).fold(0.0, f64::max);
        let prow = *col_rows[j]
            .iter()
            .filter(|r| coeff(&rows[**r]).abs() >= 0.1 * max)
            .min_by_key(|r| rows[**r].len())
            .expect("candidate row");
        let pivot_row = std::mem::take(&mut rows[prow]);
        let pv = coeff(&pivot_row);
        active[prow] = false;
        for (k, _) in &pivot_row {
            if *k >= n_psd {
                col_rows[k - n_psd].remove(&prow);
            }
        }
        let targets: Vec<usize> = col_rows[j].iter().cloned().collect();
        for r in targets {
            let f = coeff(&rows[r]) / pv;
            let old = std::mem::take(&mut rows[r]);
            let merged = axpy_merge(&old, &pivot_row, -f, col);
            for (k, _) in &old {
                if *k >= n_psd {
                    col_rows[k - n_psd].remove(&r);
                }
            }
            for (k, _) in &merged {
                if *k >= n_psd {
                    col_rows[k - n_psd].insert(r);
                }
            }
            rows[r] = merged;
            rhs[r] -= f * rhs[prow];
        }
        col_rows[j].clear();
        done[j] = true;
        pivots.push(Pivot { col, row: pivot_row, rhs: rhs[prow] });
    }
    pivots
}

/// `a + f b` over sorted sparse rows, with `skip` forced out and cancellations dropped.
fn axpy_merge(a: &[(usize, f64)], b: &[(usize, f64)], f: f64, skip: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map_or(usize::MAX, |e| e.0);
        let kb = b.get(j).map_or(usize::MAX, |e| e.0);
        let (k, v, mag) = if ka == kb {
            let (x, y) = (a[i].1, f * b[j].1);
            i += 1;
            j += 1;
            (ka, x + y, x.abs().max(y.abs()))
        } else if ka < kb {
            i += 1;
            (ka, a[i - 1].1, a[i - 1].1.abs())
        } else {
            j += 1;
            (kb, f * b[j - 1].1, (f * b[j - 1].1).abs())
        };
        if k != skip && v.abs() > DROP * mag {
            out.push((k, v));
        }
    }
    out
}

/// Indices of a maximal independent subset of rows, in original order, or
/// the index of a dependent row whose right-hand side disagrees.
fn independent_rows(rows: &[Vec<Entry>], b: &[f64], sides: &[usize]) -> Result<Vec<usize>, usize> {
    let m = rows.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let g = gram(rows, sides);
    let (order, l) = pivoted_cholesky(&g, m, DEPENDENT);
    let rank = order.len();
    if rank < m {
        // Dependent row `j`: coefficients c with L11ᵀ c = l_j, consistency cᵀ b_K = b_j.
        let mut w: Vec<f64> = order.iter().map(|i| b[*i]).collect();
        for t in 0..rank {
            let row = &l[order[t] * m..order[t] * m + t];
            let acc = w[t] - row.iter().zip(&w[..t]).map(|(a, c)| a * c).sum::<f64>();
            w[t] = acc / l[order[t] * m + t];
        }
        let mut picked = vec![false; m];
        for i in &order {
            picked[*i] = true;
        }
        for j in (0..m).filter(|j| !picked[*j]) {
            let pred: f64 = l[j * m..j * m + rank].iter().zip(&w).map(|(a, c)| a * c).sum();
            if (pred - b[j]).abs() > INCONSISTENT * (1.0 + b[j].abs()) {
                return Err(j);
            }
        }
    }
    let mut keep = order;
    keep.sort_unstable();
    Ok(keep)
}

/// Dense row-major Gram matrix `⟨A_i, A_j⟩` of symmetric constraint matrices.
pub(crate) fn gram(rows: &[Vec<Entry>], sides: &[usize]) -> Vec<f64> {
    let m = rows.len();
    let mut offsets = vec![0usize; sides.len() + 1];
    for (k, s) in sides.iter().enumerate() {
        offsets[k + 1] = offsets[k] + s * s;
    }
    let mut by_col: Vec<Vec<(u32, f64)>> = vec![Vec::new(); offsets[sides.len()]];
    for (i, row) in rows.iter().enumerate() {
        for e in row {
            let s = sides[e.block as usize];
            let key = offsets[e.block as usize] + e.p as usize * s + e.q as usize;
            let w: f64 = if e.p == e.q { 1.0 } else { 2.0 };
            by_col[key].push((i as u32, e.a * w.sqrt()));
        }
    }
    let mut g = vec![0.0f64; m * m];
    for col in &by_col {
        for (x, (i, a)) in col.iter().enumerate() {
            for (j, c) in &col[x..] {
                let (r, s) = (*i as usize, *j as usize);
                g[r * m + s] += a * c;
                if r != s {
                    g[s * m + r] += a * c;
                }
            }
        }
    }
    g
}

/// Left-looking Cholesky with diagonal pivoting of a dense symmetric
/// row-major `m x m` matrix. Stops when the largest remaining pivot is below
/// `tol`. Returns the pivot order and `L`, stored by original row with
/// column `t` belonging to the `t`-th pivot.
fn pivoted_cholesky(g: &[f64], m: usize, tol: f64) -> (Vec<usize>, Vec<f64>) {
    let mut l = vec![0.0; m * m];
    let mut diag: Vec<f64> = (0..m).map(|i| g[i * m + i]).collect();
    let mut picked = vec![false; m];
    let mut order = Vec::new();
    for t in 0..m {
        let (piv, best) = (0..m)
            .filter(|i| !picked[*i])
            .map(|i| (i, diag[i]))
            .fold((usize::MAX, f64::NEG_INFINITY), |a, c| if c.1 > a.1 { c } else { a });
        if !(best > tol) {
            break;
        }
        picked[piv] = true;
        order.push(piv);
        let d = best.sqrt();
        l[piv * m + t] = d;
        let (lp_start, lp_end) = (piv * m, piv * m + t);
        for j in 0..m {
            if picked[j] {
                continue;
            }
            let mut acc = g[j * m + piv];
            let (lj, lp) = if j < piv {
                let (lo, hi) = l.split_at(lp_start);
                (&lo[j * m..j * m + t], &hi[..lp_end - lp_start])
            } else {
                let (lo, hi) = l.split_at(j * m);
                (&hi[..t], &lo[lp_start..lp_end])
            };
            acc -= lj.iter().zip(lp).map(|(a, c)| a * c).sum::<f64>();
            let v = acc / d;
            l[j * m + t] = v;
            diag[j] -= v * v;
        }
    }
    (order, l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_cancels_and_skips() {
        let a = vec![(0, 1.0), (3, 2.0), (5, 1.0)];
        let b = vec![(3, 1.0), (4, 1.0)];
        assert_eq!(axpy_merge(&a, &b, -2.0, 99), vec![(0, 1.0), (4, -2.0), (5, 1.0)]);
        assert_eq!(axpy_merge(&a, &b, 1.0, 3), vec![(0, 1.0), (4, 1.0), (5, 1.0)]);
    }

    #[test]
    fn pivoted_cholesky_rank() {
        // Rows (1,0), (0,1), (1,1): Gram has rank 2.
        let g = vec![1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0];
        let (order, _) = pivoted_cholesky(&g, 3, 1e-12);
        assert_eq!(order.len(), 2);
        assert_eq!(order[0], 2);
    }

    #[test]
    fn duplicate_rows_are_dropped_and_checked() {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
        p.push_row(vec![(0, 1.0)], 1.0, "a");
        p.push_row(vec![(0, 2.0)], 2.0, "b");
        let r = presolve(&p).ok().unwrap();
        assert_eq!(r.stats.dependent_rows, 1);
        p.rhs[1] = 3.0;
        assert!(presolve(&p).is_err());
    }

    #[test]
    fn facial_reduction_cascades() {
        // X11 = 0 forces X12 = 0; then X12 + X22 = 0 reduces to X22 = 0.
        let mut p = SdpProblem::with_blocks(&[("X", 3)], 0);
        p.push_row(vec![(0, 1.0)], 0.0, "x11");
        p.push_row(vec![(1, 1.0), (3, 1.0)], 0.0, "x12+x22");
        p.push_row(vec![(5, 1.0)], 1.0, "x33");
        let r = presolve(&p).ok().unwrap();
        assert_eq!(r.stats.indices_removed, 2);
        assert_eq!(r.problem.sides, vec![1]);
        assert_eq!(r.problem.rows.len(), 1);
    }

    #[test]
    fn free_elimination_and_back_substitution() {
        let mut p = SdpProblem::with_blocks(&[("X", 1)], 2);
        // f0 + f1 = X, f0 - f1 = 1, X = 4
        p.push_row(vec![(1, 1.0), (2, 1.0), (0, -1.0)], 0.0, "sum");
        p.push_row(vec![(1, 1.0), (2, -1.0)], 1.0, "diff");
        p.push_row(vec![(0, 1.0)], 4.0, "x");
        let r = presolve(&p).ok().unwrap();
        assert_eq!(r.stats.free_eliminated, 2);
        let x = r.expand(&p, &[vec![4.0]]);
        assert!((x[1] - 2.5).abs() < 1e-14 && (x[2] - 1.5).abs() < 1e-14);
    }
}
