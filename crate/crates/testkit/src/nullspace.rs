use nalgebra::DMatrix;
use sospde::polymat::LinearConstraint;

/// Orthonormal basis (columns) of `{v : M v = 0}`; singular values below
/// `rel_tol * σ_max` count as zero.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let mut sq = DMatrix::zeros(m.nrows().max(cols), cols);
    sq.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..cols).filter(|&i| svd.singular_values[i] <= rel_tol * smax.max(f64::MIN_POSITIVE)).collect();
    DMatrix::from_fn(cols, keep.len(), |r, c| vt[(keep[c], r)])
}

/// Dense coefficient matrix of homogeneous constraints over `n_vars` unknowns.
pub fn constraint_matrix(cs: &[LinearConstraint<f64>], n_vars: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(cs.len(), n_vars);
    for (r, c) in cs.iter().enumerate() {
        assert!(c.expr.constant_part().abs() < 1e-14, "constraint {} is not homogeneous", c.label);
        for (v, a) in c.expr.terms() {
            m[(r, v.index())] = *a;
        }
    }
    m
}
