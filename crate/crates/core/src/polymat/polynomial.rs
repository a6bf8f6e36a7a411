use std::collections::BTreeMap;
use std::fmt;

use crate::decision::VarId;
use crate::polymat::{LinExpr, Monomial, PolyError, Var, VarSet};
use crate::scalar::{pow, Scalar};

/// A polynomial in up to three variables whose coefficients are affine in
/// decision variables.
///
/// Exponents of undeclared variables are always zero and no stored
/// coefficient is identically zero.
#[derive(Clone, PartialEq)]
pub struct Polynomial<S> {
    vars: VarSet,
    terms: BTreeMap<Monomial, LinExpr<S>>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero(vars: VarSet) -> Self {
        Self { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: VarSet, c: S) -> Self {
        Self::from_linexpr(vars, LinExpr::constant(c))
    }

    pub fn one(vars: VarSet) -> Self {
        Self::constant(vars, S::one())
    }

    pub fn from_linexpr(vars: VarSet, e: LinExpr<S>) -> Self {
        let mut p = Self::zero(vars);
        if !e.is_zero() {
            p.terms.insert(Monomial::ONE, e);
        }
        p
    }

    /// `coeff * m`. Panics in debug builds if `m` uses an undeclared variable.
    pub fn monomial(vars: VarSet, m: Monomial, coeff: S) -> Self {
        debug_assert!(m.support().union(vars) == vars);
        let mut p = Self::zero(vars);
        p.add_term(m, LinExpr::constant(coeff));
        p
    }

    /// The polynomial `v`.
    pub fn variable(v: Var) -> Self {
        Self::monomial(VarSet::EMPTY.with(v), Monomial::of(v, 1), S::one())
    }

    /// `sum coeffs[k] * v^k`.
    pub fn univariate(v: Var, coeffs: &[S]) -> Self {
        let vars = VarSet::EMPTY.with(v);
        let mut p = Self::zero(vars);
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::of(v, k as u16), LinExpr::constant(c.clone()));
        }
        p
    }

    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &LinExpr<S>)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&LinExpr<S>> {
        self.terms.get(m)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_decisions(&self) -> bool {
        self.terms.values().any(LinExpr::has_decisions)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp(v) as u32).max().unwrap_or(0)
    }

    /// Declares additional variables without changing the value.
    pub fn with_vars(mut self, vars: VarSet) -> Self {
        self.vars = self.vars.union(vars);
        self
    }

    /// Narrows the declared variables; fails if a dropped variable occurs.
    pub fn restrict_vars(mut self, vars: VarSet) -> Result<Self, PolyError> {
        for m in self.terms.keys() {
            if let Some(v) = m.support().iter().find(|v| !vars.contains(*v)) {
                return Err(PolyError::UndeclaredVariable(v));
            }
        }
        self.vars = vars;
        Ok(self)
    }

    pub fn add_term(&mut self, m: Monomial, coeff: LinExpr<S>) {
        self.add_scaled_term(m, &coeff, &S::one());
    }

    fn add_scaled_term(&mut self, m: Monomial, coeff: &LinExpr<S>, factor: &S) {
        if coeff.is_zero() {
            return;
        }
        self.vars = self.vars.union(m.support());
        let slot = self.terms.entry(m).or_default();
        slot.add_scaled(coeff, factor);
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Polynomial<S>, factor: &S) {
        self.vars = self.vars.union(other.vars);
        for (m, c) in &other.terms {
            self.add_scaled_term(*m, c, factor);
        }
    }

    pub fn add(&self, other: &Polynomial<S>) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &S::one());
        out
    }

    pub fn sub(&self, other: &Polynomial<S>) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &-S::one());
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn scale(&self, factor: &S) -> Self {
        let mut out = Self::zero(self.vars);
        out.add_scaled(self, factor);
        out
    }

    /// Exact product.
    ///
    /// Fails with [`PolyError::Bilinear`] when both operands carry decision
    /// variables.
    pub fn mul(&self, other: &Polynomial<S>) -> Result<Self, PolyError> {
        let mut out = Self::zero(self.vars.union(other.vars));
        out.add_product(self, other)?;
        Ok(out)
    }

    /// `self += a * b`.
    pub fn add_product(&mut self, a: &Polynomial<S>, b: &Polynomial<S>) -> Result<(), PolyError> {
        if a.is_zero() || b.is_zero() {
            self.vars = self.vars.union(a.vars).union(b.vars);
            return Ok(());
        }
        let a_dec = a.has_decisions();
        let b_dec = b.has_decisions();
        if a_dec && b_dec {
            return Err(PolyError::Bilinear);
        }
        self.vars = self.vars.union(a.vars).union(b.vars);
        let (sym, num) = if a_dec { (a, b) } else { (b, a) };
        for (mn, cn) in &num.terms {
            let factor = cn.constant_part().clone();
            for (ms, cs) in &sym.terms {
                self.add_scaled_term(ms.mul(mn), cs, &factor);
            }
        }
        Ok(())
    }

    /// Partial derivative in `v`.
    pub fn differentiate(&self, v: Var) -> Result<Self, PolyError> {
        if !self.vars.contains(v) {
            return Err(PolyError::UndeclaredVariable(v));
        }
        let mut out = Self::zero(self.vars);
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e > 0 {
                out.add_scaled_term(m.with_exp(v, e - 1), c, &S::from_i64(e as i64));
            }
        }
        Ok(out)
    }

    /// `∫_lo^hi p dv`; the result no longer declares `v`.
    pub fn integrate_definite(&self, v: Var, lo: &S, hi: &S) -> Result<Self, PolyError> {
        if !self.vars.contains(v) {
            return Err(PolyError::UndeclaredVariable(v));
        }
        let mut out = Self::zero(self.vars.without(v));
        for (m, c) in &self.terms {
            let e = m.exp(v) as u32;
            let weight = (pow(hi, e + 1) - pow(lo, e + 1)) / S::from_i64(e as i64 + 1);
            out.add_scaled_term(m.with_exp(v, 0), c, &weight);
        }
        Ok(out)
    }

    /// Substitutes the scalar `value` for `v`; the result no longer declares `v`.
    pub fn evaluate_at(&self, v: Var, value: &S) -> Result<Self, PolyError> {
        if !self.vars.contains(v) {
            return Err(PolyError::UndeclaredVariable(v));
        }
        let mut out = Self::zero(self.vars.without(v));
        for (m, c) in &self.terms {
            let w = pow(value, m.exp(v) as u32);
            out.add_scaled_term(m.with_exp(v, 0), c, &w);
        }
        Ok(out)
    }

    /// Exchanges the exponents of `u` and `v` in every monomial.
    pub fn swap_vars(&self, u: Var, v: Var) -> Result<Self, PolyError> {
        for w in [u, v] {
            if !self.vars.contains(w) {
                return Err(PolyError::UndeclaredVariable(w));
            }
        }
        self.remap(&[(u, v), (v, u)])
    }

    /// Simultaneous substitution `from -> to` for every pair in `map`.
    ///
    /// Sources must be declared. A target that is also kept as a variable
    /// receives the sum of exponents, i.e. this is a genuine substitution.
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
        let mut out = Self::zero(vars);
        for (m, c) in &self.terms {
            let mut e = m.0;
            for (from, _) in map {
                e[from.index()] = 0;
            }
            for (from, to) in map {
                e[to.index()] += m.exp(*from);
            }
            out.add_scaled_term(Monomial(e), c, &S::one());
        }
        Ok(out)
    }

    /// Replaces each decision variable by a scalar.
    pub fn substitute_decisions(&self, value: impl Fn(VarId) -> S) -> Self {
        let mut out = Self::zero(self.vars);
        for (m, c) in &self.terms {
            let s = c.substitute(&value);
            out.add_term(*m, LinExpr::constant(s));
        }
        out
    }

    /// Evaluates at `point = [x, y, z]` with decision values `values`.
    pub fn eval(&self, point: &[f64; 3], values: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| m.eval(point) * c.eval(values)).sum()
    }

    /// Evaluates a decision-free polynomial.
    pub fn eval_numeric(&self, point: &[f64; 3]) -> f64 {
        self.terms.iter().map(|(m, c)| m.eval(point) * c.constant_part().to_f64()).sum()
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Polynomial<T> {
        let mut out = Polynomial::zero(self.vars);
        for (m, c) in &self.terms {
            out.add_term(*m, c.map_scalar(&f));
        }
        out
    }
}

impl<S: Scalar> fmt::Debug for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<S: Scalar> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<_> = self
            .terms
            .iter()
            .map(|(m, c)| if m.degree() == 0 { format!("({})", c) } else { format!("({})*{}", c, m) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
