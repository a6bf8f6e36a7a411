//! Certification at a fixed degree and bisection on a scalar parameter.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derivative::{assemble, AssemblyError, AssemblyOptions, Eps2Scope};
use crate::model::{ModelError, PdeSystem};
use crate::scalar::Scalar;
use crate::sdp::{canonicalize, solve, Certificate, SdpError, SdpProblem, SolveOptions, SolveStatus};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("bracket must satisfy lo < hi and tol > 0, got lo = {lo}, hi = {hi}, tol = {tol}")]
    Bracket { lo: f64, hi: f64, tol: f64 },
    #[error("lower end {lo} is not certified ({verdict}): {reason}")]
    LowerEnd { lo: f64, verdict: Verdict, reason: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Certified => "certified",
            Verdict::NotCertified => "not certified",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOptions {
    pub eps1: f64,
    pub eps2: f64,
    pub eps2_scope: Eps2Scope,
    pub solve: SolveOptions,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { eps1: 1e-3, eps2: -1e-3, eps2_scope: Eps2Scope::State, solve: SolveOptions::default() }
    }
}

impl CheckOptions {
    fn assembly<S: Scalar>(&self) -> AssemblyOptions<S> {
        AssemblyOptions { eps1: S::from_f64(self.eps1), eps2: S::from_f64(self.eps2), eps2_scope: self.eps2_scope }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub reason: String,
    pub certificate: Option<Certificate>,
    pub problem: SdpProblem,
    pub seconds: f64,
}

/// Builds the SDP for `sys` at degree `d` in the scalar `S`, then solves in `f64`.
pub fn build_problem<S: Scalar>(sys: &PdeSystem<S>, d: u32, opts: &CheckOptions) -> Result<SdpProblem, SearchError> {
    let ap = assemble(sys, d, &opts.assembly())?;
    Ok(canonicalize(&ap.space, &ap.constraints)?)
}

pub fn check_stability<S: Scalar>(
    sys: &PdeSystem<S>,
    d: u32,
    opts: &CheckOptions,
) -> Result<CheckOutcome, SearchError> {
    let start = Instant::now();
    let problem = build_problem(sys, d, opts)?;
    let result = solve(&problem, &opts.solve);
    let (verdict, reason, certificate) = match result.status {
        SolveStatus::Feasible(c) => (Verdict::Certified, c.report.summary(), Some(c)),
        SolveStatus::Infeasible(r) => (Verdict::NotCertified, r, None),
        SolveStatus::Unknown(r) => (Verdict::Unknown, r, None),
    };
    Ok(CheckOutcome { verdict, reason, certificate, problem, seconds: start.elapsed().as_secs_f64() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub value: f64,
    pub verdict: Verdict,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginResult {
    /// Largest probed value that was certified.
    pub value: f64,
    /// Smallest probed value above it that was not, absent when `hi` itself certified.
    pub upper: Option<f64>,
    pub probes: Vec<Probe>,
}

/// Bisection for the largest certified parameter in `[lo, hi]`; `Unknown` counts as not certified.
pub fn margin_bisection(
    family: impl Fn(f64) -> Result<PdeSystem<f64>, ModelError>,
    d: u32,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &CheckOptions,
) -> Result<MarginResult, SearchError> {
    margin_bisection_observed(family, d, lo, hi, tol, opts, |_, _| {})
}

/// [`margin_bisection`], handing every probe outcome to `observe` before it is reduced to a [`Probe`].
pub fn margin_bisection_observed(
    family: impl Fn(f64) -> Result<PdeSystem<f64>, ModelError>,
    d: u32,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &CheckOptions,
    mut observe: impl FnMut(f64, &CheckOutcome),
) -> Result<MarginResult, SearchError> {
    if !(lo < hi && tol > 0.0) {
        return Err(SearchError::Bracket { lo, hi, tol });
    }
    let mut probes = Vec::new();
    let mut probe = |v: f64, probes: &mut Vec<Probe>| -> Result<Verdict, SearchError> {
        let out = check_stability(&family(v)?, d, opts)?;
        log::info!("probe {} -> {} ({})", v, out.verdict, out.reason);
        observe(v, &out);
        probes.push(Probe { value: v, verdict: out.verdict, reason: out.reason });
        Ok(out.verdict)
    };
    let first = probe(lo, &mut probes)?;
    if first != Verdict::Certified {
        let reason = probes[0].reason.clone();
        return Err(SearchError::LowerEnd { lo, verdict: first, reason });
    }
    if probe(hi, &mut probes)? == Verdict::Certified {
        return Ok(MarginResult { value: hi, upper: None, probes });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if probe(mid, &mut probes)? == Verdict::Certified {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(MarginResult { value: a, upper: Some(b), probes })
}
