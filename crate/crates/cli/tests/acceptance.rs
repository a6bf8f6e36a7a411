//! One PASS/FAIL line per acceptance criterion. Criteria with a known,
//! documented discrepancy print FAIL without failing the target.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use sospde::model::{preset, ModelError};
use sospde::sdp::verify;
use sospde::search::{check_stability, margin_bisection_observed, CheckOptions, CheckOutcome, MarginResult, Verdict};
use sospde::simulator::{discretize, numeric_threshold, spectral_abscissa};
use sospde::System;
use sospde_testkit::{derivative_identity, sigma_plus_positivity, spacing_annihilation, SuiteReport};

const SEED: u64 = 20_240_601;
const MARGIN_TOL: f64 = 0.05;
const TABLE_TOL: f64 = 0.2;
const SOLVE_LIMIT_S: f64 = 300.0;
const VERIFY_TOL: f64 = 1e-7;
const ORACLE_REL: f64 = 0.01;
const NGRID: usize = 201;

fn family(name: &'static str) -> impl Fn(f64) -> Result<System, ModelError> {
    move |v| preset(name, &BTreeMap::from([("lambda".to_string(), v)]))
}

struct Run {
    example: &'static str,
    degree: u32,
    result: MarginResult,
    max_solve_s: f64,
}

#[derive(Default)]
struct Ledger {
    outcomes: Vec<(String, CheckOutcome)>,
    failures: Vec<String>,
    known: Vec<String>,
}

impl Ledger {
    fn report(&mut self, id: u32, pass: bool, known_red: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let note = if !pass && known_red { " [known discrepancy, see README]" } else { "" };
        println!("criterion {:2}: {} {}{}", id, tag, detail, note);
        if !pass {
            if known_red {
                self.known.push(format!("criterion {}", id));
            } else {
                self.failures.push(format!("criterion {}", id));
            }
        }
    }

    fn margin(&mut self, example: &'static str, degree: u32, lo: f64, hi: f64) -> Run {
        let opts = CheckOptions::default();
        let mut max_solve_s: f64 = 0.0;
        let mut seen = Vec::new();
        let result = margin_bisection_observed(family(example), degree, lo, hi, MARGIN_TOL, &opts, |v, out| {
            max_solve_s = max_solve_s.max(out.seconds);
            seen.push((format!("{} d={} lambda={}", example, degree, v), out.clone()));
        })
        .unwrap_or_else(|e| panic!("{} d={}: {}", example, degree, e));
        self.outcomes.extend(seen);
        println!(
            "    {} d={}: margin {:.4} ({} probes, slowest solve {:.1}s)",
            example,
            degree,
            result.value,
            result.probes.len(),
            max_solve_s
        );
        Run { example, degree, result, max_solve_s }
    }
}

fn suite(ledger: &mut Ledger, id: u32, report: SuiteReport, limit_s: Option<f64>) {
    let in_time = limit_s.is_none_or(|l| report.seconds <= l);
    ledger.report(id, report.passed() && in_time, false, report.summary());
}

fn table(ledger: &mut Ledger, id: u32, runs: &[Run], targets: &[(u32, f64)]) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (run, &(d, target)) in runs.iter().zip(targets) {
        assert_eq!(run.degree, d);
        let ok = (run.result.value - target).abs() <= TABLE_TOL && run.max_solve_s <= SOLVE_LIMIT_S;
        pass &= ok;
        parts.push(format!("d={} {:.3} vs {} {}", d, run.result.value, target, if ok { "ok" } else { "off" }));
    }
    ledger.report(id, pass, true, format!("{} (±{}): {}", runs[0].example, TABLE_TOL, parts.join(", ")));
}

fn oracle(name: &'static str, lo: f64, hi: f64) -> f64 {
    numeric_threshold(family(name), lo, hi, 1e-3, NGRID).unwrap().value
}

fn max_certified(run: &Run) -> f64 {
    run.result
        .probes
        .iter()
        .filter(|p| p.verdict == Verdict::Certified)
        .map(|p| p.value)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn main() {
    let start = Instant::now();
    let mut ledger = Ledger::default();

    suite(&mut ledger, 1, sigma_plus_positivity(200, 20, SEED), Some(60.0));
    suite(&mut ledger, 2, spacing_annihilation(100, 10, SEED + 1), Some(120.0));
    suite(&mut ledger, 3, derivative_identity(50, SEED + 2), None);

    let ex1: Vec<Run> = [1, 2, 4].iter().map(|&d| ledger.margin("example1", d, 1.0, 12.0)).collect();
    table(&mut ledger, 4, &ex1, &[(1, 5.0), (2, 5.8), (4, 8.1)]);
    let ex2: Vec<Run> = [2, 4].iter().map(|&d| ledger.margin("example2", d, 1.0, 12.0)).collect();
    table(&mut ledger, 5, &ex2, &[(2, 5.8), (4, 7.2)]);

    let ex4_sys: System = preset("example4", &BTreeMap::new()).unwrap();
    let ex4 = check_stability(&ex4_sys, 4, &CheckOptions::default()).unwrap();
    ledger.report(
        6,
        ex4.verdict == Verdict::Certified,
        false,
        format!("example4 d=4: {} in {:.1}s", ex4.verdict, ex4.seconds),
    );
    let ex4_certified = ex4.verdict == Verdict::Certified;
    ledger.outcomes.push(("example4 d=4".to_string(), ex4));

    let o1 = oracle("example1", 5.0, 15.0);
    let o2 = oracle("example2", 5.0, 15.0);
    let e1 = (o1 - PI * PI).abs() / (PI * PI);
    let e2 = (o2 - (PI * PI - 1.0)).abs() / (PI * PI - 1.0);
    ledger.report(
        7,
        e1 <= ORACLE_REL && e2 <= ORACLE_REL,
        false,
        format!("Ngrid={}: example1 {:.4} (rel err {:.1e}), example2 {:.4} (rel err {:.1e})", NGRID, o1, e1, o2, e2),
    );

    let o3 = oracle("example3", 0.0, 5.0);
    let ex3: Vec<Run> = [1, 3].iter().map(|&d| ledger.margin("example3", d, 0.1, 5.0)).collect();
    let mut sound = true;
    let mut parts = Vec::new();
    for (runs, o) in [(&ex1, o1), (&ex2, o2), (&ex3, o3)] {
        for run in runs {
            let m = max_certified(run);
            sound &= m <= o;
            parts.push(format!("{} d={} {:.3} <= {:.3}", run.example, run.degree, m, o));
        }
    }
    let a4 = spectral_abscissa(&discretize(&ex4_sys, NGRID).unwrap()).unwrap();
    sound &= !ex4_certified || a4 < 0.0;
    parts.push(format!("example4 abscissa {:.3e}", a4));
    ledger.report(8, sound, false, format!("{}; example3 oracle {:.4}", parts.join(", "), o3));

    let mut verified = 0;
    let mut bad = Vec::new();
    for (name, out) in &ledger.outcomes {
        if let Some(c) = &out.certificate {
            verified += 1;
            let r = verify(&out.problem, &c.x, VERIFY_TOL, VERIFY_TOL).unwrap();
            if !r.passed {
                bad.push(format!("{}: {}", name, r.summary()));
            }
        }
    }
    let (name, out) = ledger.outcomes.iter().find(|(_, o)| o.certificate.is_some()).expect("a certificate");
    let p = &out.problem;
    let mut x = out.certificate.as_ref().unwrap().x.clone();
    let k = p.n_psd();
    x[k] += 1e-2;
    let r = verify(p, &x, VERIFY_TOL, VERIFY_TOL).unwrap();
    let named = r.worst_row.clone().map(|(i, label, _)| (i, label));
    let blamed_ok = !r.passed
        && !r.violated_rows.is_empty()
        && r.violated_rows.iter().all(|(i, _, _)| p.rows[*i].idx.contains(&k))
        && named.as_ref().is_some_and(|(i, label)| &p.labels[*i] == label);
    for b in &bad {
        println!("    {}", b);
    }
    ledger.report(
        9,
        bad.is_empty() && blamed_ok,
        false,
        format!(
            "{} certificates re-verified at {:e}; corrupted {} names row {:?}",
            verified,
            VERIFY_TOL,
            name,
            named.map(|(_, l)| l).unwrap_or_default()
        ),
    );

    let model = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/models/example1.json");
    let args =
        ["margin", "--model", model, "--param", "lambda", "--lo", "1", "--hi", "12", "--degree", "2", "--tol", "0.05"];
    let run = || Command::new(env!("CARGO_BIN_EXE_sospde")).args(args).output().unwrap();
    let (a, b) = (run(), run());
    let same = a.status.success() && a.stdout == b.stdout;
    let text = String::from_utf8_lossy(&a.stdout);
    let last = text.lines().last().unwrap_or("").to_string();
    ledger.report(10, same, false, format!("{} probe lines identical across runs: {}", text.lines().count() - 1, last));

    println!(
        "acceptance: {} failed, {} known discrepancies, {:.0}s",
        ledger.failures.len(),
        ledger.known.len(),
        start.elapsed().as_secs_f64()
    );
    if !ledger.failures.is_empty() {
        eprintln!("unexpected failures: {}", ledger.failures.join(", "));
        std::process::exit(1);
    }
}
