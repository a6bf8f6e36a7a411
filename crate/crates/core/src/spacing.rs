//! Spacing operators: kernels `(T, R)` whose quadratic form
//! `∫ Wᵀ T W + ∫∫ W(x)ᵀ R(x, y) W(y)` vanishes for every `W = (w, w', w'')`
//! whose boundary vector `Υ = (w(a), w(b), w'(a), w'(b))` satisfies `D Υ = 0`.
//!
//! Each family is an exact derivative, so its form equals a boundary term in
//! `Υ`; the family's constraints make that term vanish on `ker D`.
//!
//! * `T` is the `x`-derivative of `[w; w']ᵀ P [w; w']` with `P = [P₁ P₂; P₃ P₄]`,
//!   boundary term `Υᵀ Π₁ Υ`.
//! * `R₁` is the mixed derivative of `[w(x); w'(x)]ᵀ [Q₁ Q₃; Q₂ Q₄] [w(y); w'(y)]`,
//!   boundary term `Υᵀ Θ₁ Υ`.
//! * `R₂` is the `y`-derivative of `w''(x)ᵀ [Q₅ Q₆] [w(y); w'(y)]`,
//!   boundary term `∫ w''(x)ᵀ Θ₂(x) Υ dx`.
//! * `R₃` is the `x`-derivative of `[w(x); w'(x)]ᵀ [Q₇; Q₈] w''(y)`,
//!   boundary term `∫ Υᵀ Θ₃(y) w''(y) dy`.

use crate::decision::{DecisionSpace, FreeGroup};
use crate::model::{BoundaryMatrix, Interval};
use crate::polymat::{mono_basis, LinExpr, LinearConstraint, PolyError, PolyMatrix, Polynomial, Var, VarSet};
use crate::scalar::Scalar;

/// One spacing family with its boundary matrix and membership constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingPart<S: Scalar> {
    /// Free polynomial matrices, `n x n` each.
    pub polys: Vec<PolyMatrix<S>>,
    pub groups: Vec<FreeGroup>,
    /// `3n x 3n` in `x`; zero except for the first family.
    pub t: PolyMatrix<S>,
    /// `3n x 3n` in `(x, y)`; zero for the first family.
    pub r: PolyMatrix<S>,
    /// `Π₁`, `Θ₁` (`4n x 4n`), `Θ₂(x)` (`n x 4n`) or `Θ₃(y)` (`4n x n`).
    pub boundary: PolyMatrix<S>,
    pub constraints: Vec<LinearConstraint<S>>,
}

/// The sum of all four families.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingTemplate<S: Scalar> {
    pub n: usize,
    pub degree: u32,
    pub t: PolyMatrix<S>,
    pub r: PolyMatrix<S>,
    pub constraints: Vec<LinearConstraint<S>>,
    pub parts: Vec<SpacingPart<S>>,
}

/// `n x n` matrix of polynomials of total degree `<= degree` with fresh free coefficients.
pub fn free_poly_matrix<S: Scalar>(
    space: &mut DecisionSpace,
    name: &str,
    n: usize,
    degree: u32,
    vars: VarSet,
) -> (PolyMatrix<S>, FreeGroup) {
    let basis = mono_basis(degree, vars).expect("one or two variables");
    let group = space.free_group(name, n * n * basis.len());
    let mut out = PolyMatrix::zeros(n, n, vars);
    let mut next = group.first.0;
    for i in 0..n {
        for j in 0..n {
            let mut p = Polynomial::zero(vars);
            for m in basis.entries() {
                p.add_term(*m, LinExpr::var(crate::decision::VarId(next)));
                next += 1;
            }
            out.set(i, j, p);
        }
    }
    (out, group)
}

fn check_boundary<S: Scalar>(n: usize, d: &BoundaryMatrix<S>) -> Result<(), PolyError> {
    if d.side() != 4 * n {
        return Err(PolyError::DimensionMismatch { left: (4 * n, 4 * n), right: (d.side(), d.side()) });
    }
    Ok(())
}

fn diff<S: Scalar>(m: &PolyMatrix<S>, v: Var) -> PolyMatrix<S> {
    m.differentiate(v).expect("variable declared")
}

fn at<S: Scalar>(m: &PolyMatrix<S>, v: Var, value: &S) -> PolyMatrix<S> {
    m.evaluate_at(v, value).expect("variable declared")
}

fn sum<S: Scalar>(terms: &[&PolyMatrix<S>]) -> PolyMatrix<S> {
    let mut acc = terms[0].clone();
    for t in &terms[1..] {
        acc = acc.add(t).expect("equal shapes");
    }
    acc
}

/// Assembles a `3 x 3` block matrix of `n x n` blocks; `None` is zero.
fn blocks3<S: Scalar>(n: usize, vars: VarSet, grid: [[Option<PolyMatrix<S>>; 3]; 3]) -> PolyMatrix<S> {
    let mut out = PolyMatrix::zeros(3 * n, 3 * n, vars);
    for (bi, row) in grid.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            if let Some(b) = blk {
                out.set_block(bi * n, bj * n, &b.clone().with_vars(vars));
            }
        }
    }
    out
}

/// Assembles a block matrix of `n x n` blocks laid out by `layout[block_row][block_col]`.
fn block_grid<S: Scalar>(
    n: usize,
    rows: usize,
    cols: usize,
    layout: Vec<(usize, usize, PolyMatrix<S>)>,
) -> PolyMatrix<S> {
    let vars = layout.iter().fold(VarSet::EMPTY, |v, (_, _, m)| v.union(m.vars()));
    let mut out = PolyMatrix::zeros(rows * n, cols * n, vars);
    for (bi, bj, m) in layout {
        out.set_block(bi * n, bj * n, &m.with_vars(vars));
    }
    out
}

fn zero_constraints<S: Scalar>(m: &PolyMatrix<S>, label: &str) -> Vec<LinearConstraint<S>> {
    let zero = PolyMatrix::zeros(m.rows(), m.cols(), m.vars());
    m.equate(&zero, label).expect("equal shapes")
}

/// First family: `T` from `P₁..P₄` (polynomials in `x`) with `(I - D)ᵀ Π₁ (I - D) = 0`.
pub fn build_xi1<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    degree: u32,
    interval: &Interval<S>,
    d: &BoundaryMatrix<S>,
) -> Result<SpacingPart<S>, PolyError> {
    check_boundary(n, d)?;
    let (p1, g1) = free_poly_matrix(space, &format!("{}.P1", label), n, degree, VarSet::X);
    let (p2, g2) = free_poly_matrix(space, &format!("{}.P2", label), n, degree, VarSet::X);
    let (p3, g3) = free_poly_matrix(space, &format!("{}.P3", label), n, degree, VarSet::X);
    let (p4, g4) = free_poly_matrix(space, &format!("{}.P4", label), n, degree, VarSet::X);
    let dx = |m: &PolyMatrix<S>| diff(m, Var::X);
    let t = blocks3(
        n,
        VarSet::X,
        [
            [Some(dx(&p1)), Some(sum(&[&p1, &dx(&p2)])), Some(p2.clone())],
            [Some(sum(&[&p1, &dx(&p3)])), Some(sum(&[&p2, &p3, &dx(&p4)])), Some(p4.clone())],
            [Some(p3.clone()), Some(p4.clone()), None],
        ],
    );
    let (a, b) = (&interval.lo, &interval.hi);
    let ev = |m: &PolyMatrix<S>, v: &S| at(m, Var::X, v);
    let pi1 = block_grid(
        n,
        4,
        4,
        vec![
            (0, 0, ev(&p1, a).neg()),
            (0, 2, ev(&p2, a).neg()),
            (1, 1, ev(&p1, b)),
            (1, 3, ev(&p2, b)),
            (2, 0, ev(&p3, a).neg()),
            (2, 2, ev(&p4, a).neg()),
            (3, 1, ev(&p3, b)),
            (3, 3, ev(&p4, b)),
        ],
    );
    let c = d.complement().to_polymatrix();
    let reduced = c.transpose().matmul(&pi1)?.matmul(&c)?;
    let constraints = zero_constraints(&reduced, &format!("{}.Pi1", label));
    Ok(SpacingPart {
        polys: vec![p1, p2, p3, p4],
        groups: vec![g1, g2, g3, g4],
        t,
        r: PolyMatrix::zeros(3 * n, 3 * n, VarSet::XY),
        boundary: pi1,
        constraints,
    })
}

/// Second family: `R₁` from `Q₁..Q₄` (polynomials in `(x, y)`) with `(I - D)ᵀ Θ₁ (I - D) = 0`.
pub fn build_xi2<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    degree: u32,
    interval: &Interval<S>,
    d: &BoundaryMatrix<S>,
) -> Result<SpacingPart<S>, PolyError> {
    check_boundary(n, d)?;
    let mut qs = Vec::new();
    let mut groups = Vec::new();
    for k in 1..=4 {
        let (q, g) = free_poly_matrix(space, &format!("{}.Q{}", label, k), n, degree, VarSet::XY);
        qs.push(q);
        groups.push(g);
    }
    let (q1, q2, q3, q4) = (&qs[0], &qs[1], &qs[2], &qs[3]);
    let dx = |m: &PolyMatrix<S>| diff(m, Var::X);
    let dy = |m: &PolyMatrix<S>| diff(m, Var::Y);
    let dxy = |m: &PolyMatrix<S>| diff(&diff(m, Var::X), Var::Y);
    let r = blocks3(
        n,
        VarSet::XY,
        [
            [Some(dxy(q1)), Some(sum(&[&dx(q1), &dxy(q3)])), Some(dx(q3))],
            [Some(sum(&[&dy(q1), &dxy(q2)])), Some(sum(&[q1, &dx(q2), &dy(q3), &dxy(q4)])), Some(sum(&[&dx(q4), q3]))],
            [Some(dy(q2)), Some(sum(&[&dy(q4), q2])), Some(q4.clone())],
        ],
    );
    // Boundary value f(p, q) enters with sign s(p) s(q), s(a) = -1, s(b) = +1.
    let ends = [(&interval.lo, false), (&interval.hi, true)];
    let mut layout = Vec::new();
    for (pi, (pv, pb)) in ends.iter().enumerate() {
        for (qi, (qv, qb)) in ends.iter().enumerate() {
            let positive = pb == qb;
            for (dr, dc, q) in [(0, 0, q1), (0, 2, q3), (2, 0, q2), (2, 2, q4)] {
                let v = at(&at(q, Var::X, pv), Var::Y, qv);
                layout.push((pi + dr, qi + dc, if positive { v } else { v.neg() }));
            }
        }
    }
    let theta1 = block_grid(n, 4, 4, layout);
    let c = d.complement().to_polymatrix();
    let reduced = c.transpose().matmul(&theta1)?.matmul(&c)?;
    let constraints = zero_constraints(&reduced, &format!("{}.Theta1", label));
    Ok(SpacingPart {
        polys: qs,
        groups,
        t: PolyMatrix::zeros(3 * n, 3 * n, VarSet::X),
        r,
        boundary: theta1,
        constraints,
    })
}

/// Third family: `R₂` from `Q₅, Q₆` with `Θ₂(x) (I - D) ≡ 0`.
pub fn build_xi3<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    degree: u32,
    interval: &Interval<S>,
    d: &BoundaryMatrix<S>,
) -> Result<SpacingPart<S>, PolyError> {
    check_boundary(n, d)?;
    let (q5, g5) = free_poly_matrix(space, &format!("{}.Q5", label), n, degree, VarSet::XY);
    let (q6, g6) = free_poly_matrix(space, &format!("{}.Q6", label), n, degree, VarSet::XY);
    let dy = |m: &PolyMatrix<S>| diff(m, Var::Y);
    let r = blocks3(
        n,
        VarSet::XY,
        [[None, None, None], [None, None, None], [Some(dy(&q5)), Some(sum(&[&dy(&q6), &q5])), Some(q6.clone())]],
    );
    let (a, b) = (&interval.lo, &interval.hi);
    let ev = |m: &PolyMatrix<S>, v: &S| at(m, Var::Y, v);
    let theta2 = block_grid(
        n,
        1,
        4,
        vec![(0, 0, ev(&q5, a).neg()), (0, 1, ev(&q5, b)), (0, 2, ev(&q6, a).neg()), (0, 3, ev(&q6, b))],
    );
    let c = d.complement().to_polymatrix();
    let reduced = theta2.matmul(&c)?;
    let constraints = zero_constraints(&reduced, &format!("{}.Theta2", label));
    Ok(SpacingPart {
        polys: vec![q5, q6],
        groups: vec![g5, g6],
        t: PolyMatrix::zeros(3 * n, 3 * n, VarSet::X),
        r,
        boundary: theta2,
        constraints,
    })
}

/// Fourth family: `R₃` from `Q₇, Q₈` with `(I - D)ᵀ Θ₃(y) ≡ 0`.
pub fn build_xi4<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    degree: u32,
    interval: &Interval<S>,
    d: &BoundaryMatrix<S>,
) -> Result<SpacingPart<S>, PolyError> {
    check_boundary(n, d)?;
    let (q7, g7) = free_poly_matrix(space, &format!("{}.Q7", label), n, degree, VarSet::XY);
    let (q8, g8) = free_poly_matrix(space, &format!("{}.Q8", label), n, degree, VarSet::XY);
    let dx = |m: &PolyMatrix<S>| diff(m, Var::X);
    let r = blocks3(
        n,
        VarSet::XY,
        [[None, None, Some(dx(&q7))], [None, None, Some(sum(&[&dx(&q8), &q7]))], [None, None, Some(q8.clone())]],
    );
    let (a, b) = (&interval.lo, &interval.hi);
    let ev = |m: &PolyMatrix<S>, v: &S| at(m, Var::X, v);
    let theta3 = block_grid(
        n,
        4,
        1,
        vec![(0, 0, ev(&q7, a).neg()), (1, 0, ev(&q7, b)), (2, 0, ev(&q8, a).neg()), (3, 0, ev(&q8, b))],
    );
    let c = d.complement().to_polymatrix();
    let reduced = c.transpose().matmul(&theta3)?;
    let constraints = zero_constraints(&reduced, &format!("{}.Theta3", label));
    Ok(SpacingPart {
        polys: vec![q7, q8],
        groups: vec![g7, g8],
        t: PolyMatrix::zeros(3 * n, 3 * n, VarSet::X),
        r,
        boundary: theta3,
        constraints,
    })
}

/// All four families with disjoint coefficients; `R = R₁ + R₂ + R₃`.
pub fn build_sigma0<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    degree: u32,
    interval: &Interval<S>,
    d: &BoundaryMatrix<S>,
) -> Result<SpacingTemplate<S>, PolyError> {
    let parts = vec![
        build_xi1(space, label, n, degree, interval, d)?,
        build_xi2(space, label, n, degree, interval, d)?,
        build_xi3(space, label, n, degree, interval, d)?,
        build_xi4(space, label, n, degree, interval, d)?,
    ];
    let t = parts[0].t.clone();
    let r = parts[1].r.add(&parts[2].r)?.add(&parts[3].r)?;
    let constraints = parts.iter().flat_map(|p| p.constraints.iter().cloned()).collect();
    Ok(SpacingTemplate { n, degree, t, r, constraints, parts })
}
