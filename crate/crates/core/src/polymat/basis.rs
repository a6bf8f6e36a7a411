use crate::polymat::{Monomial, PolyError, PolyMatrix, Polynomial, Var, VarSet};
use crate::scalar::Scalar;

/// All monomials of total degree at most `degree` in `vars`, in graded order.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialVector {
    vars: VarSet,
    degree: u32,
    entries: Vec<Monomial>,
}

impl MonomialVector {
    pub fn vars(&self) -> VarSet {
        self.vars
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The vector with `from -> to` substituted in every entry.
    pub fn remap(&self, map: &[(Var, Var)]) -> Result<Self, PolyError> {
        let p: Vec<Polynomial<f64>> = self
            .entries
            .iter()
            .map(|m| Polynomial::monomial(self.vars, *m, 1.0).remap(map))
            .collect::<Result<_, _>>()?;
        let vars = p.first().map_or(self.vars, Polynomial::vars);
        let entries = p.iter().map(|q| *q.terms().next().expect("monomial").0).collect();
        Ok(Self { vars, degree: self.degree, entries })
    }
}

/// Number of monomials of total degree at most `d` in `k` variables.
pub fn basis_len(d: u32, k: usize) -> usize {
    // binomial(d + k, k)
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..=k as u128 {
        num *= d as u128 + i;
        den *= i;
    }
    (num / den) as usize
}

/// Graded monomial vector `Z_d` over one or two variables.
pub fn mono_basis(degree: u32, vars: VarSet) -> Result<MonomialVector, PolyError> {
    let vs: Vec<Var> = vars.iter().collect();
    let mut entries = Vec::new();
    match vs.as_slice() {
        [v] => {
            for k in 0..=degree {
                entries.push(Monomial::of(*v, k as u16));
            }
        }
        [u, v] => {
            for total in 0..=degree {
                for pu in (0..=total).rev() {
                    let m = Monomial::of(*u, pu as u16).mul(&Monomial::of(*v, (total - pu) as u16));
                    entries.push(m);
                }
            }
        }
        _ => return Err(PolyError::UnsupportedVariableCount(vars.len())),
    }
    Ok(MonomialVector { vars, degree, entries })
}

/// `Z ⊗ I_n`: row `k * n + i`, column `i` holds `Z[k]`.
pub fn kron_identity<S: Scalar>(z: &MonomialVector, n: usize) -> PolyMatrix<S> {
    let mut out = PolyMatrix::zeros(z.len() * n, n, z.vars());
    for (k, m) in z.entries().iter().enumerate() {
        for i in 0..n {
            out.set(k * n + i, i, Polynomial::monomial(z.vars(), *m, S::one()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_basis() {
        let z = mono_basis(2, VarSet::X).unwrap();
        let names: Vec<_> = z.entries().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x", "x^2"]);
    }

    #[test]
    fn bivariate_basis() {
        let z = mono_basis(1, VarSet::XY).unwrap();
        let names: Vec<_> = z.entries().iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x", "y"]);
        assert_eq!(mono_basis(3, VarSet::XY).unwrap().len(), 10);
        let mut sorted = mono_basis(4, VarSet::XY).unwrap().entries().to_vec();
        sorted.sort();
        assert_eq!(sorted, mono_basis(4, VarSet::XY).unwrap().entries());
    }

    #[test]
    fn basis_rejects_bad_arity() {
        assert!(mono_basis(2, VarSet::EMPTY).is_err());
        assert!(mono_basis(2, VarSet::XYZ).is_err());
    }

    #[test]
    fn basis_lengths_closed_form() {
        for d in 0..=10u32 {
            assert_eq!(mono_basis(d, VarSet::X).unwrap().len(), (d + 1) as usize);
            assert_eq!(mono_basis(d, VarSet::XY).unwrap().len(), ((d + 1) * (d + 2) / 2) as usize);
            assert_eq!(basis_len(d, 2), ((d + 1) * (d + 2) / 2) as usize);
        }
    }

    #[test]
    fn kron_examples() {
        let z = mono_basis(1, VarSet::X).unwrap();
        let k = kron_identity::<f64>(&z, 2);
        assert_eq!(k.shape(), (4, 2));
        let x = Polynomial::variable(Var::X);
        let one = Polynomial::one(VarSet::X);
        let zero = Polynomial::zero(VarSet::X);
        let expected = PolyMatrix::from_polys(
            4,
            2,
            vec![one.clone(), zero.clone(), zero.clone(), one, x.clone(), zero.clone(), zero, x],
        );
        assert_eq!(k, expected);

        let k0 = kron_identity::<f64>(&mono_basis(0, VarSet::X).unwrap(), 3);
        assert_eq!(k0, PolyMatrix::identity(3, VarSet::X));
        let k2 = kron_identity::<f64>(&mono_basis(2, VarSet::X).unwrap(), 2);
        assert_eq!(k2.shape(), (6, 2));
    }
}
