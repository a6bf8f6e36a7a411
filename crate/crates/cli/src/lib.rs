//! Command-line front end. Exit codes: 0 certified or complete, 1 error,
//! 2 not certified, 3 unknown.

pub mod fixtures;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sospde::derivative::Eps2Scope;
use sospde::model::ModelDocument;
use sospde::sdp::{read_csdp_solution, read_plain_solution, verify, write_sdpa, SolveOptions};
use sospde::search::{build_problem, check_stability, margin_bisection, CheckOptions, Verdict};
use sospde::simulator::{discretize, numeric_threshold, sample, simulate};
use sospde::System;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_CERTIFIED: u8 = 2;
pub const EXIT_UNKNOWN: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "sospde", version, about = "Sum-of-squares stability certificates for coupled 1-D PDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model document (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Parameter override, `NAME=VALUE`; repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct CertArgs {
    #[arg(long)]
    pub degree: u32,
    /// Lyapunov coercivity ε₁.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    /// Decay bound ε₂ (negative).
    #[arg(long, default_value_t = -1e-3, allow_hyphen_values = true)]
    pub eps2: f64,
    /// Apply ε₂ to all of (u, u_x, u_xx) rather than u only.
    #[arg(long)]
    pub eps2_full: bool,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_psd: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_eq: f64,
}

impl CertArgs {
    pub fn options(&self) -> CheckOptions {
        CheckOptions {
            eps1: self.eps,
            eps2: self.eps2,
            eps2_scope: if self.eps2_full { Eps2Scope::Full } else { Eps2Scope::State },
            solve: SolveOptions { tol_psd: self.tol_psd, tol_eq: self.tol_eq, ..Default::default() },
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertFormat {
    /// One value per line in canonical order.
    Plain,
    /// CSDP/SDPA-style `.sol` with `matrix block i j value` lines.
    Csdp,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify stability at a fixed degree.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        cert: CertArgs,
        /// Write the certificate as a plain vector.
        #[arg(long)]
        cert_out: Option<PathBuf>,
    },
    /// Largest certified parameter value by bisection.
    Margin {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[command(flatten)]
        cert: CertArgs,
    },
    /// Write the feasibility problem in sparse SDPA format.
    ExportSdp {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        cert: CertArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an externally produced solution against the problem.
    VerifyCert {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, value_enum, default_value_t = CertFormat::Plain)]
        format: CertFormat,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        opts: CertArgs,
    },
    /// Finite-difference simulation; prints `t,norm` CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 201)]
        ngrid: usize,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: f64,
        /// Initial state sin(k π (x - a)/(b - a)) in every component.
        #[arg(long, default_value_t = 1)]
        mode: u32,
        /// Also write full nodal snapshots as CSV (`t,x,u1,..,un`).
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Stability threshold of the finite-difference operator by bisection.
    Threshold {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 201)]
        ngrid: usize,
    },
    /// Regenerate the fixture tree, or with `--check` report stale files.
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
        #[arg(long)]
        check: bool,
    },
}

pub fn load_document(args: &ModelArgs) -> Result<ModelDocument> {
    let text = std::fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let mut doc = ModelDocument::from_json(&text)?;
    for s in &args.set {
        let (name, value) = s.split_once('=').with_context(|| format!("expected NAME=VALUE, got {:?}", s))?;
        let value: f64 = value.trim().parse().with_context(|| format!("bad value in {:?}", s))?;
        doc = doc.with_param(name.trim(), value);
    }
    Ok(doc)
}

fn load_system(args: &ModelArgs) -> Result<System> {
    Ok(load_document(args)?.to_system()?)
}

pub fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Certified => EXIT_OK,
        Verdict::NotCertified => EXIT_NOT_CERTIFIED,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

fn write_vector(path: &Path, x: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(24 * x.len());
    for v in x {
        s.push_str(&format!("{:e}\n", v));
    }
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    match &cli.command {
        Command::Check { model, cert, cert_out } => {
            let sys = load_system(model)?;
            let res = check_stability(&sys, cert.degree, &cert.options())?;
            let sides: Vec<String> = res.problem.blocks.iter().map(|b| b.side.to_string()).collect();
            writeln!(out, "verdict: {}", res.verdict)?;
            writeln!(out, "reason: {}", res.reason)?;
            writeln!(
                out,
                "problem: {} rows, blocks [{}], {} free",
                res.problem.n_rows(),
                sides.join(" "),
                res.problem.n_free
            )?;
            writeln!(out, "seconds: {:.2}", res.seconds)?;
            if let (Some(path), Some(c)) = (cert_out, &res.certificate) {
                write_vector(path, &c.x)?;
            }
            Ok(verdict_code(res.verdict))
        }
        Command::Margin { model, param, lo, hi, tol, cert } => {
            let doc = load_document(model)?;
            let family = |v: f64| doc.clone().with_param(param, v).to_system();
            let r = margin_bisection(family, cert.degree, *lo, *hi, *tol, &cert.options())?;
            for p in &r.probes {
                writeln!(out, "probe {} = {}: {}", param, p.value, p.verdict)?;
            }
            match r.upper {
                Some(u) => writeln!(out, "margin {} = {} (not certified at {})", param, r.value, u)?,
                None => writeln!(out, "margin {} = {} (upper end certified)", param, r.value)?,
            }
            Ok(EXIT_OK)
        }
        Command::ExportSdp { model, cert, out: path } => {
            let p = build_problem(&load_system(model)?, cert.degree, &cert.options())?;
            write_sdpa(&p, path)?;
            writeln!(
                out,
                "wrote {}: {} rows, {} blocks, {} free",
                path.display(),
                p.n_rows(),
                p.blocks.len(),
                p.n_free
            )?;
            Ok(EXIT_OK)
        }
        Command::VerifyCert { cert, format, model, opts } => {
            let p = build_problem(&load_system(model)?, opts.degree, &opts.options())?;
            let text = std::fs::read_to_string(cert).with_context(|| format!("reading {}", cert.display()))?;
            let x = match format {
                CertFormat::Plain => read_plain_solution(&text, &p)?,
                CertFormat::Csdp => read_csdp_solution(&text, &p)?,
            };
            let report = verify(&p, &x, opts.tol_psd, opts.tol_eq)?;
            writeln!(out, "{}", report.summary())?;
            for (i, label, r) in &report.violated_rows {
                writeln!(out, "violated row {} ({}): residual {:.3e}", i, label, r)?;
            }
            for (name, e) in report.min_eigs.iter().filter(|(_, e)| *e < -opts.tol_psd) {
                writeln!(out, "block {}: min eigenvalue {:.3e}", name, e)?;
            }
            Ok(if report.passed { EXIT_OK } else { EXIT_NOT_CERTIFIED })
        }
        Command::Simulate { model, ngrid, t_end, dt, mode, snapshots } => {
            let sys = load_system(model)?;
            let (a, b) = sys.interval.to_f64();
            let op = discretize(&sys, *ngrid)?;
            let k = *mode as f64 * std::f64::consts::PI / (b - a);
            let u0 = sample(&op, |x| vec![(k * (x - a)).sin(); sys.n]);
            let tr = simulate(&op, &u0, *t_end, *dt)?;
            writeln!(out, "t,norm")?;
            for (t, nrm) in tr.times.iter().zip(&tr.norms) {
                writeln!(out, "{:.6e},{:.9e}", t, nrm)?;
            }
            if let Some(path) = snapshots {
                let mut s = String::from("t,x");
                for c in 0..sys.n {
                    s.push_str(&format!(",u{}", c + 1));
                }
                s.push('\n');
                for (t, state) in tr.times.iter().zip(&tr.states) {
                    for (j, x) in op.nodes.iter().enumerate() {
                        s.push_str(&format!("{:.6e},{:.6e}", t, x));
                        for c in 0..sys.n {
                            s.push_str(&format!(",{:.9e}", state[j * sys.n + c]));
                        }
                        s.push('\n');
                    }
                }
                std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Threshold { model, param, lo, hi, tol, ngrid } => {
            let doc = load_document(model)?;
            let family = |v: f64| doc.clone().with_param(param, v).to_system();
            let t = numeric_threshold(family, *lo, *hi, *tol, *ngrid)?;
            writeln!(out, "threshold {} = {} (unstable at {})", param, t.value, t.upper)?;
            Ok(EXIT_OK)
        }
        Command::Fixtures { out: root, check } => {
            if *check {
                let stale = fixtures::stale(root)?;
                for p in &stale {
                    writeln!(out, "stale: {}", p.display())?;
                }
                if !stale.is_empty() {
                    bail!("{} fixture file(s) differ from a fresh generation", stale.len());
                }
                writeln!(out, "fixtures up to date")?;
            } else {
                for p in fixtures::write_all(root)? {
                    writeln!(out, "wrote {}", root.join(p).display())?;
                }
            }
            Ok(EXIT_OK)
        }
    }
}
