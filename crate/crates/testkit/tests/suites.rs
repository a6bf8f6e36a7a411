use sospde_testkit::{derivative_identity, sigma_plus_positivity, spacing_annihilation};

#[test]
fn positivity_small_run() {
    let r = sigma_plus_positivity(24, 5, 11);
    assert!(r.passed(), "{}", r.summary());
    assert_eq!(r.cases, 24 * 5 * 2);
}

#[test]
fn spacing_small_run() {
    let r = spacing_annihilation(4, 3, 12);
    assert!(r.passed(), "{}", r.summary());
    assert_eq!(r.cases, 4 * 4 * 4 * 3);
}

#[test]
fn derivative_small_run() {
    let r = derivative_identity(10, 13);
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn seeds_reproduce() {
    let a = derivative_identity(3, 5);
    let b = derivative_identity(3, 5);
    assert_eq!(a.worst, b.worst);
}

#[test]
#[ignore]
fn full_size() {
    for r in [sigma_plus_positivity(200, 20, 1), spacing_annihilation(100, 10, 2), derivative_identity(50, 3)] {
        println!("{}", r.summary());
    }
}

mod controls {
    use nalgebra::DVector;
    use rand::Rng;
    use sospde::decision::DecisionSpace;
    use sospde::model::{expand_bc, BcShorthand, Interval};
    use sospde::spacing::build_xi2;
    use sospde_testkit::{constraint_matrix, null_space, rng, spacing_quadratic_form, LambdaSampler, Rule};

    /// The oracle must see a nonzero form once either side leaves the constrained set.
    #[test]
    fn spacing_oracle_detects_violations() {
        let mut r = rng(4);
        let d = expand_bc(&BcShorthand::<f64>::Dirichlet, 1).unwrap();
        let mut space = DecisionSpace::new();
        let part = build_xi2(&mut space, "S", 1, 4, &Interval::unit(), &d).unwrap();
        let basis = null_space(&constraint_matrix(&part.constraints, space.n_vars()), 1e-11);
        assert!(basis.ncols() < space.n_vars());
        let rule = Rule::golub_welsch(16, 0.0, 1.0);
        let inside = LambdaSampler::new(1, 6, (0.0, 1.0), &d.to_dmatrix());
        let outside = LambdaSampler::new(1, 6, (0.0, 1.0), &nalgebra::DMatrix::zeros(4, 4));

        let member = &basis * DVector::from_fn(basis.ncols(), |_, _| r.gen_range(-1.0..=1.0));
        let free = DVector::from_fn(space.n_vars(), |_, _| r.gen_range(-1.0..=1.0));
        let w_in = inside.sample(&mut r);
        let w_out = outside.sample(&mut r);
        assert!(spacing_quadratic_form(&part, member.as_slice(), &w_in, &rule).0.abs() < 1e-10);
        assert!(spacing_quadratic_form(&part, free.as_slice(), &w_in, &rule).0.abs() > 1e-4);
        assert!(spacing_quadratic_form(&part, member.as_slice(), &w_out, &rule).0.abs() > 1e-4);
    }
}
