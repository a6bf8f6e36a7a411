use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::nullspace::null_space;

/// `w(x) = Σ_k c_k x^k` with `c_k ∈ Rⁿ`.
#[derive(Clone, Debug)]
pub struct PolyFn {
    pub n: usize,
    pub coeffs: Vec<DVector<f64>>,
}

impl PolyFn {
    pub fn random(n: usize, degree: usize, rng: &mut impl Rng) -> Self {
        let coeffs = (0..=degree).map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))).collect();
        Self { n, coeffs }
    }

    fn from_flat(n: usize, flat: &DVector<f64>) -> Self {
        let coeffs = flat.as_slice().chunks(n).map(DVector::from_column_slice).collect();
        Self { n, coeffs }
    }

    /// `order`-th derivative at `x`.
    pub fn deriv(&self, x: f64, order: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (k, c) in self.coeffs.iter().enumerate().skip(order) {
            let falling: f64 = (k - order + 1..=k).map(|j| j as f64).product();
            out += c * (falling * x.powi((k - order) as i32));
        }
        out
    }

    pub fn value(&self, x: f64) -> DVector<f64> {
        self.deriv(x, 0)
    }

    /// `(w, w', w'')` stacked.
    pub fn triple(&self, x: f64) -> DVector<f64> {
        let mut out = DVector::zeros(3 * self.n);
        for k in 0..3 {
            out.rows_mut(k * self.n, self.n).copy_from(&self.deriv(x, k));
        }
        out
    }

    /// `(w(a), w(b), w'(a), w'(b))`.
    pub fn boundary_vector(&self, a: f64, b: f64) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(4 * n);
        out.rows_mut(0, n).copy_from(&self.deriv(a, 0));
        out.rows_mut(n, n).copy_from(&self.deriv(b, 0));
        out.rows_mut(2 * n, n).copy_from(&self.deriv(a, 1));
        out.rows_mut(3 * n, n).copy_from(&self.deriv(b, 1));
        out
    }
}

/// Random polynomial triples `(w, w', w'')` with `D Υ(w) = 0`.
#[derive(Clone, Debug)]
pub struct LambdaSampler {
    pub n: usize,
    pub degree: usize,
    pub interval: (f64, f64),
    basis: DMatrix<f64>,
}

impl LambdaSampler {
    pub fn new(n: usize, degree: usize, interval: (f64, f64), d: &DMatrix<f64>) -> Self {
        let (a, b) = interval;
        let dim = n * (degree + 1);
        let mut e = DMatrix::zeros(4 * n, dim);
        for col in 0..dim {
            let mut unit = DVector::zeros(dim);
            unit[col] = 1.0;
            e.set_column(col, &PolyFn::from_flat(n, &unit).boundary_vector(a, b));
        }
        let basis = null_space(&(d * e), 1e-12);
        Self { n, degree, interval, basis }
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> PolyFn {
        let c = DVector::from_fn(self.basis.ncols(), |_, _| rng.gen_range(-1.0..=1.0));
        PolyFn::from_flat(self.n, &(&self.basis * c))
    }
}
