//! Randomized suites for the functional, spacing and derivative layers.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sospde::decision::DecisionSpace;
use sospde::derivative::build_kernels;
use sospde::functional::{build_sigma_plus, evaluate_functional, l2_norm_sq};
use sospde::model::{expand_bc, BcShorthand, Interval, PdeSystem};
use sospde::polymat::{mono_basis, LinExpr, PolyMatrix, Polynomial, Var, VarSet};
use sospde::quadrature::GaussLegendre;
use sospde::spacing::{build_xi1, build_xi2, build_xi3, build_xi4, SpacingPart};

use crate::lambda::{LambdaSampler, PolyFn};
use crate::nullspace::{constraint_matrix, null_space};
use crate::psd::random_psd;
use crate::quad::Rule;
use crate::rng;

/// Outcome of a suite. `worst` is the largest ratio of observed error to the
/// allowed error, so a run passes when it is at most 1.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
    pub seconds: f64,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: 0, worst: f64::NEG_INFINITY, seconds: 0.0, first_failure: None }
    }

    fn record(&mut self, ratio: f64, context: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.max(ratio);
        if !(ratio <= 1.0) {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} cases, {} failures, worst error/allowance {:.3e}, {:.1}s{}",
            self.name,
            self.cases,
            self.failures,
            self.worst,
            self.seconds,
            self.first_failure.as_ref().map(|f| format!(", first failure: {}", f)).unwrap_or_default()
        )
    }
}

fn random_test_function(n: usize, (a, b): (f64, f64), rng: &mut impl Rng) -> impl Fn(f64) -> DVector<f64> {
    let poly = PolyFn::random(n, rng.gen_range(0..=5), rng);
    let amps = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..=2.0));
    let freq = rng.gen_range(1..=6) as f64 * std::f64::consts::PI / (b - a);
    move |x| poly.value(x) + &amps * (freq * (x - a)).sin()
}

/// `V(w) ≥ ε ‖w‖² - 1e-8` for random numeric `P, Q ⪰ 0`.
///
/// Each draw also checks `V(w) - ε‖w‖²` against the sum-of-squares form
/// `∫ φᵀ (P + g Q) φ` with `φ(x) = [Z₁(x) w(x); ∫ Z₂(x, y) w(y) dy]`, summed
/// directly from the monomial vectors.
pub fn sigma_plus_positivity(draws: usize, functions: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut report = SuiteReport::new("sigma_plus_positivity");
    let mut rng = rng(seed);
    let configs = [(1usize, 1u32), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)];
    let intervals = [(0.0, 1.0), (-1.0, 2.0)];
    let nq = 24;
    for draw in 0..draws {
        let (n, d) = configs[draw % configs.len()];
        let (a, b) = intervals[(draw / configs.len()) % intervals.len()];
        let eps = 10f64.powf(rng.gen_range(-3.0..=0.0));
        let mut space = DecisionSpace::new();
        let interval = Interval::new(a, b);
        let t = build_sigma_plus(&mut space, "V", n, d, eps, n, &interval).expect("valid template");
        let side = t.p.side;
        let rank_p = [0, 1, side / 2, side][rng.gen_range(0..4)];
        let rank_q = [0, 1, side / 2, side][rng.gen_range(0..4)];
        let p = random_psd(side, rank_p, 1.0, &mut rng);
        let q = random_psd(side, rank_q, 1.0, &mut rng);
        let mut values = vec![0.0; space.n_vars()];
        for i in 0..side {
            for j in i..side {
                values[t.p.var(i, j).index()] = p[(i, j)];
                values[t.q.var(i, j).index()] = q[(i, j)];
            }
        }
        let m = t.m.substitute_decisions(|v| values[v.index()]);
        let kernel = t.kernel.substitute_decisions(|v| values[v.index()]);

        let core_rule = GaussLegendre::on_interval(nq, a, b);
        let rule = Rule::golub_welsch(nq, a, b);
        let z1 = mono_basis(d, VarSet::X).expect("basis").entries().to_vec();
        let z2 = mono_basis(d, VarSet::XY).expect("basis").entries().to_vec();
        for f in 0..functions {
            let w = random_test_function(n, (a, b), &mut rng);
            let core_samples: Vec<DVector<f64>> = core_rule.nodes.iter().map(|&x| w(x)).collect();
            let v = evaluate_functional(&m, &kernel, &core_rule, &core_samples).expect("shapes");
            let norm = l2_norm_sq(&core_rule, &core_samples);
            let excess = v - eps * norm;
            report.record(-excess / 1e-8, || {
                format!("draw {} fn {}: V - eps|w|^2 = {:.3e} (n = {}, d = {})", draw, f, excess, n, d)
            });

            let samples: Vec<DVector<f64>> = rule.nodes.iter().map(|&x| w(x)).collect();
            let m1 = n * z1.len();
            let mut sos = 0.0;
            for (k, &x) in rule.nodes.iter().enumerate() {
                let mut phi = DVector::zeros(side);
                for (j, mono) in z1.iter().enumerate() {
                    let s = mono.eval(&[x, 0.0, 0.0]);
                    for i in 0..n {
                        phi[j * n + i] = s * samples[k][i];
                    }
                }
                for (l, &y) in rule.nodes.iter().enumerate() {
                    for (j, mono) in z2.iter().enumerate() {
                        let s = rule.weights[l] * mono.eval(&[x, y, 0.0]);
                        for i in 0..n {
                            phi[m1 + j * n + i] += s * samples[l][i];
                        }
                    }
                }
                let g = (x - a) * (b - x);
                sos += rule.weights[k] * (phi.dot(&(&p * &phi)) + g * phi.dot(&(&q * &phi)));
            }
            let gap = (excess - sos).abs();
            report.record(gap / (1e-9 * (1.0 + v.abs())), || {
                format!("draw {} fn {}: V - eps|w|^2 = {:.6e} but the SOS form gives {:.6e}", draw, f, excess, sos)
            });
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    report
}

/// A spacing family with numeric coefficients evaluated on a tensor grid.
struct SampledKernels {
    t: Vec<DMatrix<f64>>,
    r: Vec<DMatrix<f64>>,
}

fn sample_part(part: &SpacingPart<f64>, values: &[f64], rule: &Rule) -> SampledKernels {
    let t = part.t.substitute_decisions(|v| values[v.index()]);
    let r = part.r.substitute_decisions(|v| values[v.index()]);
    let q = rule.len();
    let mut rs = Vec::with_capacity(q * q);
    for &x in &rule.nodes {
        for &y in &rule.nodes {
            rs.push(r.eval_numeric(&[x, y, 0.0]));
        }
    }
    SampledKernels { t: rule.nodes.iter().map(|&x| t.eval_numeric(&[x, 0.0, 0.0])).collect(), r: rs }
}

/// `∫ Wᵀ T W + ∫∫ W(x)ᵀ R(x, y) W(y)` and `‖W‖²`.
fn spacing_form(k: &SampledKernels, w: &[DVector<f64>], rule: &Rule) -> (f64, f64) {
    let q = rule.len();
    let mut form = 0.0;
    let mut norm = 0.0;
    for i in 0..q {
        form += rule.weights[i] * w[i].dot(&(&k.t[i] * &w[i]));
        norm += rule.weights[i] * w[i].norm_squared();
        for j in 0..q {
            form += rule.weights[i] * rule.weights[j] * w[i].dot(&(&k.r[i * q + j] * &w[j]));
        }
    }
    (form, norm)
}

/// The spacing form of one family at decision values `values` on a single `W`.
pub fn spacing_quadratic_form(part: &SpacingPart<f64>, values: &[f64], w: &PolyFn, rule: &Rule) -> (f64, f64) {
    let samples: Vec<DVector<f64>> = rule.nodes.iter().map(|&x| w.triple(x)).collect();
    spacing_form(&sample_part(part, values, rule), &samples, rule)
}

pub const SPACING_BCS: [(&str, BcShorthand<f64>); 4] = [
    ("dirichlet", BcShorthand::Dirichlet),
    ("neumann", BcShorthand::Neumann),
    ("mixed_na_db", BcShorthand::MixedNeumannDirichlet),
    ("mixed_da_nb", BcShorthand::MixedDirichletNeumann),
];

/// For each family and boundary preset, `instances` random members of the
/// constrained family, each tested on `functions` random `W ∈ Λ`:
/// `|form| ≤ 1e-8 (1 + ‖W‖²)`.
pub fn spacing_annihilation(instances: usize, functions: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut report = SuiteReport::new("spacing_annihilation");
    let mut rng = rng(seed);
    let shapes = [(1usize, 6u32, (0.0, 1.0)), (2, 4, (-0.5, 1.5))];
    let rule_len = 20;
    for family in 1..=4 {
        for (bc_name, bc) in SPACING_BCS.iter() {
            for (s, &(n, degree, (a, b))) in shapes.iter().enumerate() {
                let count = instances / shapes.len() + usize::from(s < instances % shapes.len());
                let d = expand_bc(bc, n).expect("named condition");
                let mut space = DecisionSpace::new();
                let interval = Interval::new(a, b);
                let part = match family {
                    1 => build_xi1(&mut space, "S", n, degree, &interval, &d),
                    2 => build_xi2(&mut space, "S", n, degree, &interval, &d),
                    3 => build_xi3(&mut space, "S", n, degree, &interval, &d),
                    _ => build_xi4(&mut space, "S", n, degree, &interval, &d),
                }
                .expect("valid family");
                let basis = null_space(&constraint_matrix(&part.constraints, space.n_vars()), 1e-11);
                let sampler = LambdaSampler::new(n, 7, (a, b), &d.to_dmatrix());
                let rule = Rule::golub_welsch(rule_len, a, b);
                for inst in 0..count {
                    let c = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..=1.0));
                    let values = &basis * c;
                    let kernels = sample_part(&part, values.as_slice(), &rule);
                    for f in 0..functions {
                        let w = sampler.sample(&mut rng);
                        let samples: Vec<DVector<f64>> = rule.nodes.iter().map(|&x| w.triple(x)).collect();
                        let (form, norm) = spacing_form(&kernels, &samples, &rule);
                        report.record(form.abs() / (1e-8 * (1.0 + norm)), || {
                            format!(
                                "family {} {} n = {} instance {} fn {}: form = {:.3e}, |W|^2 = {:.3e}",
                                family, bc_name, n, inst, f, form, norm
                            )
                        });
                    }
                }
            }
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    report
}

fn random_poly_x(degree: usize, rng: &mut impl Rng) -> Polynomial<f64> {
    let coeffs: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Polynomial::univariate(Var::X, &coeffs)
}

fn random_matrix_x(n: usize, degree: usize, rng: &mut impl Rng) -> PolyMatrix<f64> {
    PolyMatrix::from_polys(n, n, (0..n * n).map(|_| random_poly_x(degree, rng)).collect()).with_vars(VarSet::X)
}

fn random_poly_xy(degree: u32, rng: &mut impl Rng) -> Polynomial<f64> {
    let mut p = Polynomial::zero(VarSet::XY);
    for m in mono_basis(degree, VarSet::XY).expect("basis").entries() {
        p.add_term(*m, LinExpr::constant(rng.gen_range(-1.0..=1.0)));
    }
    p
}

/// `d/dt V(u)` along `u_t = A u'' + B u' + C u`, computed from the product rule
/// on sampled `u` and `u_t`, against `∫ Uᵀ K U + ∫∫ Uᵀ L U`.
pub fn derivative_identity(instances: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut report = SuiteReport::new("derivative_identity");
    let mut rng = rng(seed);
    for inst in 0..instances {
        let n = 1 + inst % 2;
        let a = rng.gen_range(-1.0..=0.0);
        let b = a + rng.gen_range(0.5..=2.0);
        let sys = PdeSystem::new(
            Interval::new(a, b),
            random_matrix_x(n, 2, &mut rng),
            random_matrix_x(n, 2, &mut rng),
            random_matrix_x(n, 2, &mut rng),
            expand_bc(&BcShorthand::Dirichlet, n).expect("named condition"),
        )
        .expect("valid system");

        let mut m = PolyMatrix::zeros(n, n, VarSet::X);
        for i in 0..n {
            for j in i..n {
                let p = random_poly_x(3, &mut rng);
                m.set(i, j, p.clone());
                m.set(j, i, p);
            }
        }
        let s = PolyMatrix::from_polys(n, n, (0..n * n).map(|_| random_poly_xy(3, &mut rng)).collect());
        let kernel = s.add(&s.transpose().swap_vars(Var::X, Var::Y).expect("declared")).expect("shapes");
        let kl = build_kernels(&m, &kernel, &sys).expect("shapes");

        let u = PolyFn::random(n, 5, &mut rng);
        let rule = Rule::golub_welsch(16, a, b);
        let at = |p: &PolyMatrix<f64>, x: f64, y: f64| p.eval_numeric(&[x, y, 0.0]);
        let uu: Vec<DVector<f64>> = rule.nodes.iter().map(|&x| u.value(x)).collect();
        let ut: Vec<DVector<f64>> = rule
            .nodes
            .iter()
            .map(|&x| {
                at(&sys.diffusion, x, 0.0) * u.deriv(x, 2)
                    + at(&sys.drift, x, 0.0) * u.deriv(x, 1)
                    + at(&sys.reaction, x, 0.0) * u.deriv(x, 0)
            })
            .collect();
        let triples: Vec<DVector<f64>> = rule.nodes.iter().map(|&x| u.triple(x)).collect();

        let mut direct = 0.0;
        let mut via_kernels = 0.0;
        for (i, &x) in rule.nodes.iter().enumerate() {
            let wi = rule.weights[i];
            let mx = at(&m, x, 0.0);
            direct += wi * (uu[i].dot(&(&mx * &ut[i])) + ut[i].dot(&(&mx * &uu[i])));
            via_kernels += wi * triples[i].dot(&(at(&kl.k, x, 0.0) * &triples[i]));
            for (j, &y) in rule.nodes.iter().enumerate() {
                let wij = wi * rule.weights[j];
                let nxy = at(&kernel, x, y);
                direct += wij * (ut[i].dot(&(&nxy * &uu[j])) + uu[i].dot(&(&nxy * &ut[j])));
                via_kernels += wij * triples[i].dot(&(at(&kl.l, x, y) * &triples[j]));
            }
        }
        let rel = (direct - via_kernels).abs() / direct.abs().max(via_kernels.abs()).max(f64::MIN_POSITIVE);
        report.record(rel / 1e-8, || {
            format!("instance {} (n = {}): direct {:.12e} vs kernels {:.12e}", inst, n, direct, via_kernels)
        });
    }
    report.seconds = start.elapsed().as_secs_f64();
    report
}
