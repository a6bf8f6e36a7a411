use std::fmt;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::decision::VarId;
use crate::polymat::{LinExpr, LinearConstraint, PolyError, Polynomial, Var, VarSet};
use crate::scalar::Scalar;

/// Dense matrix of polynomials sharing one declared variable set.
#[derive(Clone, PartialEq)]
pub struct PolyMatrix<S> {
    rows: usize,
    cols: usize,
    vars: VarSet,
    entries: Vec<Polynomial<S>>,
}

impl<S: Scalar> PolyMatrix<S> {
    pub fn zeros(rows: usize, cols: usize, vars: VarSet) -> Self {
        Self { rows, cols, vars, entries: vec![Polynomial::zero(vars); rows * cols] }
    }

    pub fn identity(n: usize, vars: VarSet) -> Self {
        let mut m = Self::zeros(n, n, vars);
        for i in 0..n {
            m.set(i, i, Polynomial::one(vars));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, vars: VarSet, mut f: impl FnMut(usize, usize) -> LinExpr<S>) -> Self {
        let mut m = Self::zeros(rows, cols, vars);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, Polynomial::from_linexpr(vars, f(i, j)));
            }
        }
        m
    }

    pub fn from_polys(rows: usize, cols: usize, polys: Vec<Polynomial<S>>) -> Self {
        assert_eq!(polys.len(), rows * cols, "entry count does not match shape");
        let vars = polys.iter().fold(VarSet::EMPTY, |s, p| s.union(p.vars()));
        let entries = polys.into_iter().map(|p| p.with_vars(vars)).collect();
        Self { rows, cols, vars, entries }
    }

    /// Constant matrix from row-major scalars.
    pub fn from_scalars(rows: usize, cols: usize, vars: VarSet, data: &[S]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self::from_fn(rows, cols, vars, |i, j| LinExpr::constant(data[i * cols + j].clone()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn get(&self, i: usize, j: usize) -> &Polynomial<S> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Polynomial<S>) {
        if !p.vars().union(self.vars).eq(&self.vars) {
            self.extend_vars(p.vars());
        }
        self.entries[i * self.cols + j] = p.with_vars(self.vars);
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Polynomial<S>)> {
        let cols = self.cols;
        self.entries.iter().enumerate().map(move |(k, p)| (k / cols, k % cols, p))
    }

    fn extend_vars(&mut self, vars: VarSet) {
        self.vars = self.vars.union(vars);
        let v = self.vars;
        for e in &mut self.entries {
            *e = std::mem::replace(e, Polynomial::zero(v)).with_vars(v);
        }
    }

    pub fn with_vars(mut self, vars: VarSet) -> Self {
        self.extend_vars(vars);
        self
    }

    /// Narrows the declared variables; fails if a dropped variable occurs.
    pub fn restrict_vars(&self, vars: VarSet) -> Result<Self, PolyError> {
        let entries = self.entries.iter().map(|p| p.clone().restrict_vars(vars)).collect::<Result<_, _>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, vars, entries })
    }

    fn map_entries(&self, f: impl Fn(&Polynomial<S>) -> Polynomial<S>) -> Self {
        Self::from_polys(self.rows, self.cols, self.entries.iter().map(f).collect())
    }

    fn try_map_entries(
        &self,
        f: impl Fn(&Polynomial<S>) -> Result<Polynomial<S>, PolyError>,
    ) -> Result<Self, PolyError> {
        let polys = self.entries.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_polys(self.rows, self.cols, polys))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Polynomial::is_zero)
    }

    pub fn has_decisions(&self) -> bool {
        self.entries.iter().any(Polynomial::has_decisions)
    }

    pub fn degree(&self) -> u32 {
        self.entries.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.entries.iter().map(|p| p.degree_in(v)).max().unwrap_or(0)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows, self.vars);
        for (i, j, p) in self.entries() {
            out.entries[j * self.rows + i] = p.clone();
        }
        out
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), PolyError> {
        if self.shape() != other.shape() {
            return Err(PolyError::DimensionMismatch { left: self.shape(), right: other.shape() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_shape(other)?;
        let polys = self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect();
        Ok(Self::from_polys(self.rows, self.cols, polys))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_same_shape(other)?;
        let polys = self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect();
        Ok(Self::from_polys(self.rows, self.cols, polys))
    }

    pub fn neg(&self) -> Self {
        self.map_entries(Polynomial::neg)
    }

    pub fn scale(&self, factor: &S) -> Self {
        self.map_entries(|p| p.scale(factor))
    }

    /// Entrywise product with a scalar polynomial.
    pub fn mul_poly(&self, p: &Polynomial<S>) -> Result<Self, PolyError> {
        self.try_map_entries(|e| e.mul(p))
    }

    /// Exact matrix product; at most one operand may carry decision variables.
    pub fn matmul(&self, rhs: &Self) -> Result<Self, PolyError> {
        if self.cols != rhs.rows {
            return Err(PolyError::DimensionMismatch { left: self.shape(), right: rhs.shape() });
        }
        if self.has_decisions() && rhs.has_decisions() {
            return Err(PolyError::Bilinear);
        }
        let vars = self.vars.union(rhs.vars);
        let mut out = Self::zeros(self.rows, rhs.cols, vars);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    out.entries[i * rhs.cols + j].add_product(a, b)?;
                }
            }
        }
        Ok(out)
    }

    /// Copy of `rows x cols`.
    pub fn block(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len(), self.vars);
        for (oi, i) in rows.clone().enumerate() {
            for (oj, j) in cols.clone().enumerate() {
                out.entries[oi * cols.len() + oj] = self.get(i, j).clone();
            }
        }
        out
    }

    /// Writes `src` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Self) {
        for (i, j, p) in src.entries() {
            self.set(r0 + i, c0 + j, p.clone());
        }
    }

    /// Assembles a block matrix. `None` stands for a zero block; every block
    /// row must contain at least one `Some` to fix its height, and likewise
    /// for block columns.
    pub fn from_blocks(grid: &[Vec<Option<&Self>>]) -> Result<Self, PolyError> {
        let nbr = grid.len();
        let nbc = grid.first().map_or(0, Vec::len);
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        let mut vars = VarSet::EMPTY;
        for (bi, row) in grid.iter().enumerate() {
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    vars = vars.union(b.vars);
                    for (slot, val) in [(&mut heights[bi], b.rows), (&mut widths[bj], b.cols)] {
                        match slot {
                            Some(prev) if *prev != val => {
                                return Err(PolyError::DimensionMismatch { left: (*prev, *prev), right: (val, val) })
                            }
                            _ => *slot = Some(val),
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights.into_iter().map(|h| h.unwrap_or(0)).collect();
        let widths: Vec<usize> = widths.into_iter().map(|w| w.unwrap_or(0)).collect();
        let mut out = Self::zeros(heights.iter().sum(), widths.iter().sum(), vars);
        let mut r0 = 0;
        for (bi, row) in grid.iter().enumerate() {
            let mut c0 = 0;
            for (bj, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    out.set_block(r0, c0, b);
                }
                c0 += widths[bj];
            }
            r0 += heights[bi];
        }
        Ok(out)
    }

    pub fn differentiate(&self, v: Var) -> Result<Self, PolyError> {
        if !self.vars.contains(v) {
            return Err(PolyError::UndeclaredVariable(v));
        }
        self.try_map_entries(|p| p.differentiate(v))
    }

    pub fn integrate_definite(&self, v: Var, lo: &S, hi: &S) -> Result<Self, PolyError> {
        if !self.vars.contains(v) {
            return Err(PolyError::UndeclaredVariable(v));
        }
        let mut out = self.try_map_entries(|p| p.integrate_definite(v, lo, hi))?;
        out.vars = self.vars.without(v);
        Ok(out)
    }

    pub fn evaluate_at(&self, v: Var, value: &S) -> Result<Self, PolyError> {
        if !self.vars.contains(v) {
            return Err(PolyError::UndeclaredVariable(v));
        }
        let mut out = self.try_map_entries(|p| p.evaluate_at(v, value))?;
        out.vars = self.vars.without(v);
        Ok(out)
    }

    pub fn swap_vars(&self, u: Var, v: Var) -> Result<Self, PolyError> {
        for w in [u, v] {
            if !self.vars.contains(w) {
                return Err(PolyError::UndeclaredVariable(w));
            }
        }
        self.try_map_entries(|p| p.swap_vars(u, v))
    }

    pub fn remap(&self, map: &[(Var, Var)]) -> Result<Self, PolyError> {
        for (from, _) in map {
            if !self.vars.contains(*from) {
                return Err(PolyError::UndeclaredVariable(*from));
            }
        }
        let mut vars = self.vars;
        for (from, _) in map {
            vars = vars.without(*from);
        }
        for (_, to) in map {
            vars = vars.with(*to);
        }
        let polys =
            self.entries.iter().map(|p| p.clone().with_vars(self.vars).remap(map)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_polys(self.rows, self.cols, polys).with_vars(vars))
    }

    pub fn substitute_decisions(&self, value: impl Fn(VarId) -> S) -> Self {
        self.map_entries(|p| p.substitute_decisions(&value))
    }

    /// Numeric value at `point` given decision values.
    pub fn eval(&self, point: &[f64; 3], values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(point, values))
    }

    pub fn eval_numeric(&self, point: &[f64; 3]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval_numeric(point))
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PolyMatrix<T> {
        PolyMatrix::from_polys(self.rows, self.cols, self.entries.iter().map(|p| p.map_scalar(&f)).collect())
            .with_vars(self.vars)
    }

    /// Coefficient-wise equality constraints for `self ≡ rhs`.
    ///
    /// One constraint per `(entry, monomial)` present in `self - rhs`, labelled
    /// `"{label}[i,j]{monomial}"`. An empty result means the two sides agree
    /// identically.
    pub fn equate(&self, rhs: &Self, label: &str) -> Result<Vec<LinearConstraint<S>>, PolyError> {
        let diff = self.sub(rhs)?;
        let mut out = Vec::new();
        for (i, j, p) in diff.entries() {
            for (m, c) in p.terms() {
                out.push(LinearConstraint::new(c.clone(), format!("{}[{},{}]{}", label, i, j, m)));
            }
        }
        Ok(out)
    }
}

impl<S: Scalar> fmt::Debug for PolyMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PolyMatrix {}x{} {:?}", self.rows, self.cols, self.vars)?;
        for i in 0..self.rows {
            let row: Vec<_> = (0..self.cols).map(|j| format!("{}", self.get(i, j))).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::Monomial;

    fn x() -> Polynomial<f64> {
        Polynomial::variable(Var::X)
    }

    #[test]
    fn product_of_scalars() {
        let a = PolyMatrix::from_polys(1, 1, vec![x()]);
        let p = a.matmul(&a).unwrap();
        assert_eq!(p.get(0, 0), &Polynomial::monomial(VarSet::X, Monomial::new(2, 0, 0), 1.0));
    }

    #[test]
    fn identity_is_neutral() {
        let m = PolyMatrix::from_polys(2, 2, vec![x(), x().scale(&2.0), Polynomial::one(VarSet::X), x()]);
        let i = PolyMatrix::identity(2, VarSet::X);
        assert_eq!(i.matmul(&m).unwrap(), m);
        assert_eq!(m.matmul(&i).unwrap(), m);
    }

    #[test]
    fn dimension_mismatch() {
        let a = PolyMatrix::<f64>::zeros(2, 3, VarSet::X);
        let b = PolyMatrix::<f64>::zeros(2, 3, VarSet::X);
        assert!(matches!(a.matmul(&b), Err(PolyError::DimensionMismatch { .. })));
        assert!(a.add(&b.transpose()).is_err());
    }

    #[test]
    fn bilinear_matmul_rejected() {
        let a = PolyMatrix::<f64>::from_fn(1, 1, VarSet::X, |_, _| LinExpr::var(VarId(0)));
        assert_eq!(a.matmul(&a), Err(PolyError::Bilinear));
    }

    #[test]
    fn equate_examples() {
        let a = PolyMatrix::from_polys(1, 1, vec![x()]);
        assert!(a.equate(&a, "t").unwrap().is_empty());

        // [[p x + q]] = [[2x]]  ->  {p - 2 = 0, q = 0}
        let mut lhs = Polynomial::<f64>::zero(VarSet::X);
        lhs.add_term(Monomial::new(1, 0, 0), LinExpr::var(VarId(0)));
        lhs.add_term(Monomial::ONE, LinExpr::var(VarId(1)));
        let l = PolyMatrix::from_polys(1, 1, vec![lhs]);
        let r = PolyMatrix::from_polys(1, 1, vec![x().scale(&2.0)]);
        let cons = l.equate(&r, "e").unwrap();
        assert_eq!(cons.len(), 2);
        let q = cons.iter().find(|c| c.expr.coeff(VarId(1)).is_some()).unwrap();
        assert_eq!(*q.expr.constant_part(), 0.0);
        let p = cons.iter().find(|c| c.expr.coeff(VarId(0)).is_some()).unwrap();
        assert_eq!(*p.expr.constant_part(), -2.0);
    }

    #[test]
    fn blocks_round_trip() {
        let a = PolyMatrix::from_polys(1, 2, vec![x(), Polynomial::one(VarSet::X)]);
        let b = PolyMatrix::<f64>::identity(2, VarSet::X);
        let m = PolyMatrix::from_blocks(&[vec![Some(&a)], vec![Some(&b)]]).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(m.block(0..1, 0..2), a);
        assert_eq!(m.block(1..3, 0..2), b);
    }
}
