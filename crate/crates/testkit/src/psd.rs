use nalgebra::DMatrix;
use rand::Rng;

/// `G Gᵀ` with `G` of shape `side x rank`, entries uniform in `[-scale, scale]`.
pub fn random_psd(side: usize, rank: usize, scale: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(side, rank, |_, _| rng.gen_range(-scale..=scale));
    &g * g.transpose()
}
