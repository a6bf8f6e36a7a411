use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::decision::VarId;
use crate::scalar::Scalar;

/// `constant + sum(coeff * var)` over decision variables.
///
/// Terms whose coefficient is negligible for `S` are never stored.
#[derive(Clone, PartialEq)]
pub struct LinExpr<S> {
    constant: S,
    terms: BTreeMap<VarId, S>,
}

impl<S: Scalar> LinExpr<S> {
    pub fn zero() -> Self {
        Self { constant: S::zero(), terms: BTreeMap::new() }
    }

    pub fn constant(c: S) -> Self {
        let constant = if c.is_negligible() { S::zero() } else { c };
        Self { constant, terms: BTreeMap::new() }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, S::one())
    }

    pub fn term(v: VarId, coeff: S) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    pub fn constant_part(&self) -> &S {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, &S)> {
        self.terms.iter().map(|(v, c)| (*v, c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, v: VarId) -> Option<&S> {
        self.terms.get(&v)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_negligible()
    }

    /// True when no decision variable appears.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_decisions(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn add_term(&mut self, v: VarId, coeff: S) {
        if coeff.is_negligible() {
            return;
        }
        match self.terms.get_mut(&v) {
            Some(c) => {
                *c = c.clone() + coeff;
                if c.is_negligible() {
                    self.terms.remove(&v);
                }
            }
            None => {
                self.terms.insert(v, coeff);
            }
        }
    }

    pub fn add_constant(&mut self, c: S) {
        self.constant = self.constant.clone() + c;
        if self.constant.is_negligible() {
            self.constant = S::zero();
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &LinExpr<S>, factor: &S) {
        if factor.is_negligible() {
            return;
        }
        self.add_constant(other.constant.clone() * factor.clone());
        for (v, c) in &other.terms {
            self.add_term(*v, c.clone() * factor.clone());
        }
    }

    pub fn scale(&self, factor: &S) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, factor);
        out
    }

    /// Product of two expressions, defined only when at least one is constant.
    pub fn checked_mul(&self, other: &LinExpr<S>) -> Option<Self> {
        if self.is_constant() {
            Some(other.scale(&self.constant))
        } else if other.is_constant() {
            Some(self.scale(&other.constant))
        } else {
            None
        }
    }

    /// Evaluates with `values[v]` for each variable `v`.
    pub fn eval(&self, values: &[f64]) -> f64 {
        let mut acc = self.constant.to_f64();
        for (v, c) in &self.terms {
            acc += c.to_f64() * values[v.index()];
        }
        acc
    }

    /// Replaces every decision variable by a scalar value.
    pub fn substitute(&self, value: impl Fn(VarId) -> S) -> S {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc = acc + c.clone() * value(*v);
        }
        acc
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LinExpr<T> {
        let mut out = LinExpr::constant(f(&self.constant));
        for (v, c) in &self.terms {
            out.add_term(*v, f(c));
        }
        out
    }
}

impl<S: Scalar> Default for LinExpr<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> fmt::Debug for LinExpr<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<S: Scalar> fmt::Display for LinExpr<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if !self.constant.is_negligible() || self.terms.is_empty() {
            write!(f, "{}", self.constant)?;
            first = false;
        }
        for (v, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{}*v{}", c, v.0)?;
            first = false;
        }
        Ok(())
    }
}

impl<S: Scalar> AddAssign<&LinExpr<S>> for LinExpr<S> {
    fn add_assign(&mut self, rhs: &LinExpr<S>) {
        self.add_scaled(rhs, &S::one());
    }
}

impl<S: Scalar> SubAssign<&LinExpr<S>> for LinExpr<S> {
    fn sub_assign(&mut self, rhs: &LinExpr<S>) {
        self.add_scaled(rhs, &-S::one());
    }
}

impl<S: Scalar> Add for &LinExpr<S> {
    type Output = LinExpr<S>;
    fn add(self, rhs: &LinExpr<S>) -> LinExpr<S> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<S: Scalar> Sub for &LinExpr<S> {
    type Output = LinExpr<S>;
    fn sub(self, rhs: &LinExpr<S>) -> LinExpr<S> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<S: Scalar> Neg for &LinExpr<S> {
    type Output = LinExpr<S>;
    fn neg(self) -> LinExpr<S> {
        self.scale(&-S::one())
    }
}

impl<S: Scalar> Mul<&S> for &LinExpr<S> {
    type Output = LinExpr<S>;
    fn mul(self, rhs: &S) -> LinExpr<S> {
        self.scale(rhs)
    }
}
