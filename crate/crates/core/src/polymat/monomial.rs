use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the three spatial variables.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub const ALL: [Var; 3] = [Var::X, Var::Y, Var::Z];

    pub fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
        }
    }
}

/// An ordered subset of `{x, y, z}`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);
    pub const X: VarSet = VarSet(0b001);
    pub const XY: VarSet = VarSet(0b011);
    pub const XYZ: VarSet = VarSet(0b111);

    pub fn of(vars: &[Var]) -> Self {
        vars.iter().fold(Self::EMPTY, |s, v| s.with(*v))
    }

    pub fn with(self, v: Var) -> Self {
        VarSet(self.0 | (1 << v.index()))
    }

    pub fn without(self, v: Var) -> Self {
        VarSet(self.0 & !(1 << v.index()))
    }

    pub fn contains(self, v: Var) -> bool {
        self.0 & (1 << v.index()) != 0
    }

    pub fn union(self, other: VarSet) -> Self {
        VarSet(self.0 | other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        Var::ALL.into_iter().filter(move |v| self.contains(*v))
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Var::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Exponents of `x^i y^j z^k`.
///
/// Ordering is graded: lower total degree first, and within one degree the
/// larger power of `x` (then of `y`) comes first, so a sorted list of the
/// bivariate monomials of degree at most 2 reads `1, x, y, x², xy, y²`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Monomial(pub [u16; 3]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0, 0, 0]);

    pub fn new(x: u16, y: u16, z: u16) -> Self {
        Monomial([x, y, z])
    }

    pub fn of(v: Var, power: u16) -> Self {
        let mut e = [0; 3];
        e[v.index()] = power;
        Monomial(e)
    }

    pub fn exp(&self, v: Var) -> u16 {
        self.0[v.index()]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial([self.0[0] + other.0[0], self.0[1] + other.0[1], self.0[2] + other.0[2]])
    }

    pub fn with_exp(&self, v: Var, power: u16) -> Monomial {
        let mut e = self.0;
        e[v.index()] = power;
        Monomial(e)
    }

    /// The variables with a non-zero exponent.
    pub fn support(&self) -> VarSet {
        Var::ALL.into_iter().filter(|v| self.exp(*v) > 0).fold(VarSet::EMPTY, VarSet::with)
    }

    pub fn eval(&self, point: &[f64; 3]) -> f64 {
        let mut acc = 1.0;
        for (k, &e) in self.0.iter().enumerate() {
            if e > 0 {
                acc *= point[k].powi(e as i32);
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0[0].cmp(&self.0[0]))
            .then_with(|| other.0[1].cmp(&self.0[1]))
            .then_with(|| other.0[2].cmp(&self.0[2]))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut parts = Vec::new();
        for v in Var::ALL {
            match self.exp(v) {
                0 => {}
                1 => parts.push(v.name().to_string()),
                e => parts.push(format!("{}^{}", v.name(), e)),
            }
        }
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_order() {
        let mut m = [
            Monomial::new(0, 2, 0),
            Monomial::new(1, 0, 0),
            Monomial::ONE,
            Monomial::new(1, 1, 0),
            Monomial::new(0, 1, 0),
            Monomial::new(2, 0, 0),
        ];
        m.sort();
        let names: Vec<_> = m.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x", "y", "x^2", "x*y", "y^2"]);
    }

    #[test]
    fn varset_ops() {
        let s = VarSet::of(&[Var::Y, Var::X]);
        assert_eq!(s, VarSet::XY);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![Var::X, Var::Y]);
        assert_eq!(s.without(Var::X).len(), 1);
    }
}
