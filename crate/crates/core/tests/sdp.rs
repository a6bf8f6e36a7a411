use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;
use sospde::derivative::{assemble, AssemblyOptions};
use sospde::model::preset;
use sospde::sdp::{
    canonicalize, read_csdp_solution, read_plain_solution, sdpa_string, solve, verify, write_sdpa, SdpProblem,
    SolveOptions, SolveStatus,
};
use sospde::System;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn example1(lambda: f64) -> System {
    preset("example1", &[("lambda".to_string(), lambda)].into()).unwrap()
}

fn canonical(sys: &System, d: u32) -> (sospde::derivative::AssembledProblem<f64>, SdpProblem) {
    let ap = assemble(sys, d, &AssemblyOptions::default()).unwrap();
    let p = canonicalize(&ap.space, &ap.constraints).unwrap();
    (ap, p)
}

fn trivial() -> SdpProblem {
    let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
    p.push_row(vec![(0, 1.0)], 1.0, "x11");
    p
}

#[test]
fn trivial_problem_shape_solution_and_golden() {
    let p = trivial();
    assert_eq!((p.n_vars(), p.n_rows()), (3, 1));
    let exact = verify(&p, &[1.0, 0.0, 0.0], 1e-7, 1e-7).unwrap();
    assert!(exact.passed);
    assert_eq!(exact.max_residual, 0.0);
    assert!(matches!(solve(&p, &SolveOptions::default()).status, SolveStatus::Feasible(_)));
    let golden = std::fs::read_to_string(fixtures().join("sdpa/trivial.dat-s")).unwrap();
    assert_eq!(sdpa_string(&p), golden);
}

#[test]
fn negative_trace_is_infeasible() {
    let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
    p.push_row(vec![(0, 1.0), (2, 1.0)], -1.0, "trace");
    assert!(matches!(solve(&p, &SolveOptions::default()).status, SolveStatus::Infeasible(_)));
}

#[test]
fn empty_constraint_set_is_feasible_at_zero() {
    let sys = example1(1.0);
    let ap = assemble(&sys, 1, &AssemblyOptions::default()).unwrap();
    let p = canonicalize::<f64>(&ap.space, &[]).unwrap();
    match solve(&p, &SolveOptions::default()).status {
        SolveStatus::Feasible(c) => assert!(c.x.iter().all(|v| *v == 0.0)),
        other => panic!("{:?}", other.name()),
    }
}

#[test]
fn structural_audit_of_example1_degree_one() {
    let text = std::fs::read_to_string(fixtures().join("audit/example1_d1.txt")).unwrap();
    let mut want = BTreeMap::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (key, value) = match line.strip_prefix("blocks ") {
            Some(sides) => ("blocks", sides),
            None => line.rsplit_once(' ').unwrap(),
        };
        want.insert(key.to_string(), value.to_string());
    }
    let (_, p) = canonical(&example1(4.0), 1);
    let sides: Vec<String> = p.blocks.iter().map(|b| b.side.to_string()).collect();
    assert_eq!(want["blocks"], sides.join(" "));
    assert_eq!(want["free"], p.n_free.to_string());
    assert_eq!(want["rows total"], p.n_rows().to_string());
    let mut by_source: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &p.labels {
        *by_source.entry(l.split('[').next().unwrap()).or_default() += 1;
    }
    for (source, count) in by_source {
        assert_eq!(want[&format!("rows {}", source)], count.to_string(), "{}", source);
    }
    let x2y2: Vec<(usize, usize)> = p
        .labels
        .iter()
        .filter(|l| l.starts_with("L[") && l.ends_with("]x^2*y^2"))
        .map(|l| {
            let inner = &l[2..l.find(']').unwrap()];
            let (i, j) = inner.split_once(',').unwrap();
            (i.parse().unwrap(), j.parse().unwrap())
        })
        .collect();
    assert_eq!(x2y2.len(), 16);
    assert!(x2y2.iter().all(|&(i, j)| (2..6).contains(&i) && (2..6).contains(&j)));
}

#[test]
fn export_is_deterministic() {
    let (_, p1) = canonical(&example1(4.0), 1);
    let (_, p2) = canonical(&example1(4.0), 1);
    let dir = std::env::temp_dir().join(format!("sospde-sdp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    write_sdpa(&p1, &dir.join("a.dat-s")).unwrap();
    write_sdpa(&p2, &dir.join("b.dat-s")).unwrap();
    let a = std::fs::read(dir.join("a.dat-s")).unwrap();
    assert_eq!(a, std::fs::read(dir.join("b.dat-s")).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next().unwrap(), p1.n_rows().to_string());
    assert_eq!(lines.next().unwrap(), "5");
    assert_eq!(lines.next().unwrap(), format!("10 10 30 30 -{}", 2 * p1.n_free));
}

/// Writes a certificate as an external solver would and reads it back.
fn as_csdp(p: &SdpProblem, x: &[f64]) -> String {
    let mut out = vec![vec!["0"; p.n_rows()].join(" ")];
    for (b, blk) in p.blocks.iter().enumerate() {
        for i in 0..blk.side {
            for j in i..blk.side {
                out.push(format!("2 {} {} {} {:e}", b + 1, i + 1, j + 1, x[blk.index(i, j)]));
            }
        }
    }
    for f in 0..p.n_free {
        let v = x[p.n_psd() + f];
        let lp = p.blocks.len() + 1;
        out.push(format!("2 {} {} {} {:e}", lp, 2 * f + 1, 2 * f + 1, v.max(0.0)));
        out.push(format!("2 {} {} {} {:e}", lp, 2 * f + 2, 2 * f + 2, (-v).max(0.0)));
    }
    out.join("\n")
}

#[test]
fn certificate_round_trips_and_reconstructs_identities() {
    let sys = example1(4.99);
    let (ap, p) = canonical(&sys, 1);
    let cert = match solve(&p, &SolveOptions::default()).status {
        SolveStatus::Feasible(c) => c,
        other => panic!("expected a certificate, got {}", other.name()),
    };
    let report = verify(&p, &cert.x, 1e-7, 1e-7).unwrap();
    assert!(report.passed, "{}", report.summary());

    let values = p.decision_values(&cert.x);
    for c in &ap.constraints {
        assert!(c.residual(&values).abs() <= 1e-7, "{}", c.label);
    }
    // the reconstructed kernels satisfy K = T + H pointwise
    let k = ap.kernels.k.substitute_decisions(|v| values[v.index()]);
    let rhs = ap.spacing.t.add(&ap.negative.m).unwrap().substitute_decisions(|v| values[v.index()]);
    for x in [0.0, 0.3, 0.77, 1.0] {
        let diff = k.eval_numeric(&[x, 0.0, 0.0]) - rhs.eval_numeric(&[x, 0.0, 0.0]);
        assert!(diff.amax() < 1e-6);
    }

    let plain: Vec<String> = cert.x.iter().map(|v| format!("{:e}", v)).collect();
    let back = read_plain_solution(&plain.join("\n"), &p).unwrap();
    assert!(verify(&p, &back, 1e-7, 1e-7).unwrap().passed);
    let back = read_csdp_solution(&as_csdp(&p, &cert.x), &p).unwrap();
    assert!(verify(&p, &back, 1e-7, 1e-7).unwrap().passed);
}

#[test]
fn corrupted_certificate_names_the_row() {
    let (_, mut p) = canonical(&example1(3.0), 1);
    let cert = match solve(&p, &SolveOptions::default()).status {
        SolveStatus::Feasible(c) => c,
        other => panic!("{}", other.name()),
    };
    let row = p.n_rows() / 2;
    p.rhs[row] += 1e-2;
    let report = verify(&p, &cert.x, 1e-7, 1e-7).unwrap();
    assert!(!report.passed);
    assert_eq!(report.violated_rows.len(), 1);
    let (i, label, r) = report.worst_row.clone().unwrap();
    assert_eq!((i, label.as_str()), (row, p.labels[row].as_str()));
    assert!((r.abs() - 1e-2).abs() < 1e-6);
    assert!(report.summary().contains(&p.labels[row]));

    p.rhs[row] -= 1e-2;
    let mut x = cert.x.clone();
    let b = &p.blocks[2];
    x[b.index(0, 0)] = -1.0;
    let report = verify(&p, &x, 1e-7, 1e-7).unwrap();
    assert!(!report.passed);
    assert!(!report.violated_rows.is_empty());
    assert_eq!(report.worst_block.unwrap().0, b.name);
}

#[test]
fn example1_degree_four_at_table_value_is_feasible() {
    let (_, p) = canonical(&example1(8.1), 4);
    match solve(&p, &SolveOptions::default()).status {
        SolveStatus::Feasible(c) => assert!(c.report.passed),
        other => panic!("{}", other.name()),
    }
}

/// Small random problems: one or two PSD blocks, a free variable, dense rows.
fn random_problem(seed: u64, rows: usize) -> SdpProblem {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut p = SdpProblem::with_blocks(&[("A", 3), ("B", 2)], 1);
    let x0: Vec<f64> = {
        let g: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gm = nalgebra::DMatrix::from_row_slice(3, 3, &g);
        let a = &gm * gm.transpose();
        let mut x = Vec::new();
        for i in 0..3 {
            for j in i..3 {
                x.push(a[(i, j)]);
            }
        }
        x.extend([1.0, 0.2, 0.5, rng.gen_range(-1.0..1.0)]);
        x
    };
    for r in 0..rows {
        let pairs: Vec<(usize, f64)> = (0..p.n_vars()).map(|k| (k, rng.gen_range(-1.0..1.0))).collect();
        let consistent: f64 = pairs.iter().map(|(k, a)| a * x0[*k]).sum();
        let rhs = if rng.gen_bool(0.5) { consistent } else { rng.gen_range(-2.0..2.0) };
        p.push_row(pairs, rhs, format!("r{}", r));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adding_a_row_never_restores_feasibility(seed in any::<u64>(), rows in 1usize..6) {
        let opts = SolveOptions::default();
        let p = random_problem(seed, rows + 1);
        let mut fewer = p.clone();
        fewer.rows.pop();
        fewer.rhs.pop();
        fewer.labels.pop();
        let before = solve(&fewer, &opts).status;
        let after = solve(&p, &opts).status;
        for (problem, status) in [(&fewer, &before), (&p, &after)] {
            if let SolveStatus::Feasible(c) = status {
                let passed = verify(problem, &c.x, 1e-7, 1e-7).unwrap().passed;
                prop_assert!(passed);
            }
        }
        prop_assert!(!(matches!(before, SolveStatus::Infeasible(_)) && matches!(after, SolveStatus::Feasible(_))));
    }
}
