//! Quadratic Lyapunov functionals
//! `V(w) = ∫ w(x)ᵀ M(x) w(x) dx + ∫∫ w(x)ᵀ N(x, y) w(y) dy dx`
//! parameterized by positive semidefinite matrices.
//!
//! With `Z₁(x) = Z_d(x) ⊗ I_n`, `Z₂(x, y) = Z_d(x, y) ⊗ I_n`, `g(x) = (x - a)(b - x)`
//! and `P, Q ⪰ 0` partitioned conformally with `[Z₁; Z₂]`:
//!
//! ```text
//! M(x)    = Z₁(x)ᵀ (P₁₁ + g(x) Q₁₁) Z₁(x) + ε I
//! N(x, y) = Z₁(x)ᵀ (P₁₂ + g(x) Q₁₂) Z₂(x, y)
//!         + Z₂(y, x)ᵀ (P₂₁ + g(y) Q₂₁) Z₁(y)
//!         + ∫ Z₂(z, x)ᵀ (P₂₂ + g(z) Q₂₂) Z₂(z, y) dz
//! ```
//!
//! gives `V(w) ≥ ε ‖w‖²`. The negative family flips every sign.

use nalgebra::DVector;
use thiserror::Error;

use crate::decision::{DecisionSpace, PsdBlock};
use crate::model::Interval;
use crate::polymat::{mono_basis, LinExpr, Monomial, PolyMatrix, Polynomial, Var, VarSet};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("eps must be {0}")]
    EpsSign(&'static str),
    #[error("eps applies to {eps_dims} leading coordinates but the state has dimension {n}")]
    EpsScope { eps_dims: usize, n: usize },
    #[error("sample {index} has length {got}, expected {expected}")]
    SampleShape { index: usize, got: usize, expected: usize },
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("kernel shape {0:?} does not match the samples")]
    KernelShape((usize, usize)),
}

/// A symbolic `(M, N)` pair with the PSD blocks that generate it.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalTemplate<S: Scalar> {
    pub n: usize,
    pub d: u32,
    pub eps: S,
    /// `eps I` is applied to the first `eps_dims` coordinates only.
    pub eps_dims: usize,
    pub interval: Interval<S>,
    /// `n x n` in `x`.
    pub m: PolyMatrix<S>,
    /// `n x n` in `(x, y)`.
    pub kernel: PolyMatrix<S>,
    pub p: PsdBlock,
    pub q: PsdBlock,
}

impl<S: Scalar> FunctionalTemplate<S> {
    /// Side of `P` and `Q`: `n(d+1) + n(d+1)(d+2)/2`.
    pub fn block_side(n: usize, d: u32) -> usize {
        let d = d as usize;
        n * (d + 1) + n * (d + 1) * (d + 2) / 2
    }

    /// `(-M, -N)` with the sign of `eps` flipped.
    pub fn negated(&self) -> Self {
        Self { eps: -self.eps.clone(), m: self.m.neg(), kernel: self.kernel.neg(), ..self.clone() }
    }
}

/// `g(x) = (x - a)(b - x)` as a polynomial in `v`.
pub fn interval_weight<S: Scalar>(interval: &Interval<S>, v: Var) -> Polynomial<S> {
    let a = interval.lo.clone();
    let b = interval.hi.clone();
    // -x² + (a + b) x - a b
    Polynomial::univariate(v, &[-(a.clone() * b.clone()), a + b, -S::one()])
}

/// Output entry `(i, j)` accumulates `Σ_{k,l} weight · left[k] · right[l] · X[r0 + k n + i, c0 + l n + j]`.
#[allow(clippy::too_many_arguments)]
fn add_form<S: Scalar>(
    out: &mut PolyMatrix<S>,
    n: usize,
    left: &[Monomial],
    right: &[Monomial],
    weight: &Polynomial<S>,
    block: &PsdBlock,
    r0: usize,
    c0: usize,
) {
    let wterms: Vec<(Monomial, S)> = weight.terms().map(|(m, c)| (*m, c.constant_part().clone())).collect();
    for i in 0..n {
        for j in 0..n {
            let mut p = out.get(i, j).clone();
            for (k, lm) in left.iter().enumerate() {
                for (l, rm) in right.iter().enumerate() {
                    let var = block.var(r0 + k * n + i, c0 + l * n + j);
                    let base = lm.mul(rm);
                    for (wm, wc) in &wterms {
                        p.add_term(base.mul(wm), LinExpr::term(var, wc.clone()));
                    }
                }
            }
            out.set(i, j, p);
        }
    }
}

fn bivariate(entries: &[Monomial], first: Var, second: Var) -> Vec<Monomial> {
    entries.iter().map(|m| Monomial::of(first, m.exp(Var::X)).mul(&Monomial::of(second, m.exp(Var::Y)))).collect()
}

/// Builds `(M, N)` from fresh blocks `P, Q` allocated in `space`.
///
/// `eps` must be positive. `eps_dims` selects how many leading coordinates receive `eps I`.
pub fn build_sigma_plus<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    d: u32,
    eps: S,
    eps_dims: usize,
    interval: &Interval<S>,
) -> Result<FunctionalTemplate<S>, FunctionalError> {
    if eps <= S::zero() {
        return Err(FunctionalError::EpsSign("positive"));
    }
    if eps_dims > n {
        return Err(FunctionalError::EpsScope { eps_dims, n });
    }
    let side = FunctionalTemplate::<S>::block_side(n, d);
    let p = space.psd_block(format!("{}.P", label), side);
    let q = space.psd_block(format!("{}.Q", label), side);
    let m1 = n * (d as usize + 1);

    let z1: Vec<Monomial> = mono_basis(d, VarSet::X).expect("one variable").entries().to_vec();
    let z2 = mono_basis(d, VarSet::XY).expect("two variables").entries().to_vec();
    let z2_xy = bivariate(&z2, Var::X, Var::Y);
    let z2_yx = bivariate(&z2, Var::Y, Var::X);
    let z2_zx = bivariate(&z2, Var::Z, Var::X);
    let z2_zy = bivariate(&z2, Var::Z, Var::Y);
    let z1_y: Vec<Monomial> = z1.iter().map(|m| Monomial::of(Var::Y, m.exp(Var::X))).collect();

    let one = Polynomial::one(VarSet::XYZ);
    let gx = interval_weight(interval, Var::X).with_vars(VarSet::XYZ);
    let gy = interval_weight(interval, Var::Y).with_vars(VarSet::XYZ);
    let gz = interval_weight(interval, Var::Z).with_vars(VarSet::XYZ);

    let mut m = PolyMatrix::zeros(n, n, VarSet::XYZ);
    add_form(&mut m, n, &z1, &z1, &one, &p, 0, 0);
    add_form(&mut m, n, &z1, &z1, &gx, &q, 0, 0);
    for i in 0..eps_dims {
        let mut e = m.get(i, i).clone();
        e.add_term(Monomial::ONE, LinExpr::constant(eps.clone()));
        m.set(i, i, e);
    }
    let m = m.restrict_vars(VarSet::X).expect("M depends on x only");

    let mut direct = PolyMatrix::zeros(n, n, VarSet::XYZ);
    add_form(&mut direct, n, &z1, &z2_xy, &one, &p, 0, m1);
    add_form(&mut direct, n, &z1, &z2_xy, &gx, &q, 0, m1);
    add_form(&mut direct, n, &z2_yx, &z1_y, &one, &p, m1, 0);
    add_form(&mut direct, n, &z2_yx, &z1_y, &gy, &q, m1, 0);
    let mut inner = PolyMatrix::zeros(n, n, VarSet::XYZ);
    add_form(&mut inner, n, &z2_zx, &z2_zy, &one, &p, m1, m1);
    add_form(&mut inner, n, &z2_zx, &z2_zy, &gz, &q, m1, m1);
    let inner = inner.integrate_definite(Var::Z, &interval.lo, &interval.hi).expect("z is declared");
    let kernel = direct.restrict_vars(VarSet::XY).and_then(|k| k.add(&inner)).expect("N depends on x and y only");

    Ok(FunctionalTemplate { n, d, eps, eps_dims, interval: interval.clone(), m, kernel, p, q })
}

/// The negative family: `(-M, -N)` of a positive template with parameter `-eps`.
///
/// `eps` must be negative.
pub fn build_sigma_minus<S: Scalar>(
    space: &mut DecisionSpace,
    label: &str,
    n: usize,
    d: u32,
    eps: S,
    eps_dims: usize,
    interval: &Interval<S>,
) -> Result<FunctionalTemplate<S>, FunctionalError> {
    if eps >= S::zero() {
        return Err(FunctionalError::EpsSign("negative"));
    }
    Ok(build_sigma_plus(space, label, n, d, -eps, eps_dims, interval)?.negated())
}

/// `V(w)` by tensor-product quadrature; `samples[k]` is `w(rule.nodes[k])`.
pub fn evaluate_functional(
    m: &PolyMatrix<f64>,
    kernel: &PolyMatrix<f64>,
    rule: &GaussLegendre,
    samples: &[DVector<f64>],
) -> Result<f64, FunctionalError> {
    let n = m.rows();
    check_samples(n, rule, samples)?;
    if m.shape() != (n, n) || kernel.shape() != (n, n) {
        return Err(FunctionalError::KernelShape(kernel.shape()));
    }
    let mut total = 0.0;
    for (k, (&x, &wx)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let mx = m.eval_numeric(&[x, 0.0, 0.0]);
        total += wx * samples[k].dot(&(&mx * &samples[k]));
        for (l, (&y, &wy)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let nxy = kernel.eval_numeric(&[x, y, 0.0]);
            total += wx * wy * samples[k].dot(&(&nxy * &samples[l]));
        }
    }
    Ok(total)
}

/// `‖w‖²` in `L₂` by the same rule.
pub fn l2_norm_sq(rule: &GaussLegendre, samples: &[DVector<f64>]) -> f64 {
    samples.iter().zip(&rule.weights).map(|(w, wt)| wt * w.norm_squared()).sum()
}

fn check_samples(n: usize, rule: &GaussLegendre, samples: &[DVector<f64>]) -> Result<(), FunctionalError> {
    if samples.len() != rule.len() {
        return Err(FunctionalError::SampleCount { expected: rule.len(), got: samples.len() });
    }
    for (index, s) in samples.iter().enumerate() {
        if s.len() != n {
            return Err(FunctionalError::SampleShape { index, got: s.len(), expected: n });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn unit<S: Scalar>() -> Interval<S> {
        Interval::unit()
    }

    #[test]
    fn block_sides() {
        assert_eq!(FunctionalTemplate::<f64>::block_side(2, 2), 18);
        assert_eq!(FunctionalTemplate::<f64>::block_side(2, 1), 10);
        assert_eq!(FunctionalTemplate::<f64>::block_side(6, 1), 30);
        let mut s = DecisionSpace::new();
        let t = build_sigma_plus::<f64>(&mut s, "V", 2, 2, 1e-3, 2, &unit()).unwrap();
        assert_eq!(t.p.side, 18);
        assert_eq!(t.q.side, 18);
        assert_eq!(s.n_vars(), 2 * 18 * 19 / 2);
    }

    #[test]
    fn zero_blocks_leave_eps() {
        let mut s = DecisionSpace::new();
        let t = build_sigma_plus::<Rational>(&mut s, "V", 1, 0, Rational::from_i64(1), 1, &unit()).unwrap();
        let m = t.m.substitute_decisions(|_| Rational::from_i64(0));
        let k = t.kernel.substitute_decisions(|_| Rational::from_i64(0));
        assert_eq!(m, PolyMatrix::identity(1, VarSet::X));
        assert!(k.is_zero());
    }

    #[test]
    fn identity_p_gives_one_plus_x_squared() {
        // n = 1, d = 1: Z = [1, x | 1, x, y], P = I, Q = 0.
        let mut s = DecisionSpace::new();
        let eps = Rational::from_ratio(1, 1000);
        let t = build_sigma_plus(&mut s, "V", 1, 1, eps.clone(), 1, &unit()).unwrap();
        let val = |v: crate::decision::VarId| {
            if t.p.contains(v) {
                let (r, c) = t.p.position(v.index() - t.p.first.index());
                if r == c {
                    return Rational::from_i64(1);
                }
            }
            Rational::from_i64(0)
        };
        let m = t.m.substitute_decisions(val);
        let expect = Polynomial::univariate(
            Var::X,
            &[Rational::from_i64(1) + eps, Rational::from_i64(0), Rational::from_i64(1)],
        );
        assert_eq!(m.get(0, 0), &expect);
        // N = Z₁(x)ᵀ[0 0 0; 0 0 0] ... only the z-integral survives:
        // ∫₀¹ (1·1 + z·z + x·y) dz = 4/3 + x y
        let k = t.kernel.substitute_decisions(val);
        let mut want = Polynomial::constant(VarSet::XY, Rational::from_ratio(4, 3));
        want.add_term(Monomial::new(1, 1, 0), LinExpr::constant(Rational::from_i64(1)));
        assert_eq!(k.get(0, 0), &want);
    }

    #[test]
    fn kernel_transpose_symmetry() {
        let mut s = DecisionSpace::new();
        let t = build_sigma_plus::<f64>(&mut s, "V", 2, 2, 1e-3, 2, &Interval::new(-0.5, 2.0)).unwrap();
        let swapped = t.kernel.transpose().swap_vars(Var::X, Var::Y).unwrap();
        assert!(t.kernel.equate(&swapped, "sym").unwrap().is_empty());
    }

    #[test]
    fn with_zero_q_matches_no_multiplier_form() {
        let mut s = DecisionSpace::new();
        let t = build_sigma_plus::<Rational>(&mut s, "V", 1, 1, Rational::from_i64(1), 1, &unit()).unwrap();
        let q = t.q.clone();
        let zero_q = |m: &PolyMatrix<Rational>| {
            m.substitute_decisions(|v| Rational::from_i64(if q.contains(v) { 0 } else { 1 }))
        };
        // Hand expansion with P = ones (5x5), Q = 0:
        // M = (1 + x)² + 1, N = (1 + x)(1 + x + y) + (1 + x + y)(1 + y) + ∫ (1+z+x)(1+z+y) dz
        let m = zero_q(&t.m);
        assert_eq!(m.get(0, 0), &Polynomial::univariate(Var::X, &[2, 2, 1].map(Rational::from_i64)));
        let k = zero_q(&t.kernel);
        let pt = [0.3, -0.7, 0.0];
        let (x, y) = (pt[0], pt[1]);
        let direct = (1.0 + x) * (1.0 + x + y) + (1.0 + x + y) * (1.0 + y);
        // ∫₀¹ (1+z+x)(1+z+y) dz = (1+x)(1+y) + (2+x+y)/2 + 1/3
        let exact_int = (1.0 + x) * (1.0 + y) + (2.0 + x + y) / 2.0 + 1.0 / 3.0;
        assert!((k.get(0, 0).eval_numeric(&pt) - (direct + exact_int)).abs() < 1e-12);
    }

    #[test]
    fn weight_vanishes_at_endpoints() {
        let iv = Interval::new(Rational::from_ratio(-1, 2), Rational::from_i64(2));
        let g = interval_weight(&iv, Var::X);
        let at =
            |v: Rational| g.evaluate_at(Var::X, &v).unwrap().coeff(&Monomial::ONE).map(|e| e.constant_part().clone());
        assert_eq!(at(iv.lo.clone()), None);
        assert_eq!(at(iv.hi.clone()), None);
        let mid = (iv.lo.clone() + iv.hi.clone()) / Rational::from_i64(2);
        let len = iv.length();
        assert_eq!(at(mid), Some(len.clone() * len / Rational::from_i64(4)));
    }

    #[test]
    fn sigma_minus_sign_and_zero_blocks() {
        let mut s = DecisionSpace::new();
        assert!(build_sigma_minus::<f64>(&mut s, "H", 1, 1, 1e-3, 1, &unit()).is_err());
        let t = build_sigma_minus::<f64>(&mut s, "H", 2, 1, -0.25, 2, &unit()).unwrap();
        let m = t.m.substitute_decisions(|_| 0.0);
        assert_eq!(m, PolyMatrix::identity(2, VarSet::X).scale(&-0.25));
        let back = t.negated();
        assert_eq!(back.eps, 0.25);
        assert_eq!(back.m.substitute_decisions(|_| 0.0).get(1, 1).eval_numeric(&[0.0; 3]), 0.25);
    }

    #[test]
    fn eps_scope_limits_diagonal() {
        let mut s = DecisionSpace::new();
        let t = build_sigma_plus::<f64>(&mut s, "V", 3, 0, 0.5, 1, &unit()).unwrap();
        let m = t.m.substitute_decisions(|_| 0.0).eval_numeric(&[0.2, 0.0, 0.0]);
        assert_eq!((m[(0, 0)], m[(1, 1)], m[(2, 2)]), (0.5, 0.0, 0.0));
        assert!(build_sigma_plus::<f64>(&mut s, "V", 1, 0, 0.5, 2, &unit()).is_err());
    }

    #[test]
    fn evaluate_simple_functionals() {
        let rule = GaussLegendre::on_interval(16, 0.0, 1.0);
        let w: Vec<DVector<f64>> = rule.nodes.iter().map(|_| DVector::from_vec(vec![1.0, 0.0])).collect();
        let m = PolyMatrix::<f64>::identity(2, VarSet::X);
        let zero = PolyMatrix::<f64>::zeros(2, 2, VarSet::XY);
        assert!((evaluate_functional(&m, &zero, &rule, &w).unwrap() - 1.0).abs() < 1e-14);
        let w1: Vec<DVector<f64>> = rule.nodes.iter().map(|_| DVector::from_vec(vec![1.0])).collect();
        let m0 = PolyMatrix::<f64>::zeros(1, 1, VarSet::X);
        let n1 = PolyMatrix::<f64>::identity(1, VarSet::XY);
        assert!((evaluate_functional(&m0, &n1, &rule, &w1).unwrap() - 1.0).abs() < 1e-14);
        assert!(evaluate_functional(&m0, &n1, &rule, &w[..3]).is_err());
        assert!(evaluate_functional(&m0, &n1, &rule, &w).is_err());
    }
}
