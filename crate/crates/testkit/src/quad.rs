use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre rule from the eigen-decomposition of the Jacobi matrix.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn golub_welsch(n: usize, lo: f64, hi: f64) -> Self {
        let mut j = DMatrix::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let beta = kf / (4.0 * kf * kf - 1.0).sqrt();
            j[(k - 1, k)] = beta;
            j[(k, k - 1)] = beta;
        }
        let eig = SymmetricEigen::new(j);
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        Self {
            nodes: pairs.iter().map(|p| mid + half * p.0).collect(),
            weights: pairs.iter().map(|p| half * p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}
