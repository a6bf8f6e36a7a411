//! Sparse SDPA interchange.
//!
//! The problem `A_i • X = b_i, X ⪰ 0` is written in SDPA dual form:
//! `F_i = A_i`, `c = b`, `F_0 = 0`. Free scalars become pairs `f = f⁺ - f⁻`
//! in a trailing diagonal (LP) block. For the one-block problem
//! `{X ⪰ 0 (2x2), X₁₁ = 1}` the file is
//!
//! ```text
//! * sospde feasibility problem, dual form: F_i . Y = c_i, Y psd, F_0 = 0
//! 1
//! 1
//! 2
//! 1
//! 1 1 1 1 1
//! ```
//!
//! Lines: comment, number of constraints, number of blocks, block sides
//! (negative for the LP block), right-hand sides, then one
//! `matrix block i j value` entry per line with `i <= j`, 1-based.

use std::fmt::Write as _;
use std::path::Path;

use super::{SdpError, SdpProblem};

pub const SDPA_COMMENT: &str = "* sospde feasibility problem, dual form: F_i . Y = c_i, Y psd, F_0 = 0";

fn num(v: f64) -> String {
    format!("{}", v + 0.0)
}

/// Deterministic `.dat-s` text.
pub fn sdpa_string(p: &SdpProblem) -> String {
    let mut out = String::new();
    let lp = p.n_free > 0;
    let n_blocks = p.blocks.len() + usize::from(lp);
    let mut sides: Vec<String> = p.blocks.iter().map(|b| b.side.to_string()).collect();
    if lp {
        sides.push(format!("-{}", 2 * p.n_free));
    }
    writeln!(out, "{}", SDPA_COMMENT).unwrap();
    writeln!(out, "{}", p.n_rows()).unwrap();
    writeln!(out, "{}", n_blocks).unwrap();
    writeln!(out, "{}", sides.join(" ")).unwrap();
    writeln!(out, "{}", p.rhs.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" ")).unwrap();
    let n_psd = p.n_psd();
    for (r, row) in p.rows.iter().enumerate() {
        for (k, v) in row.idx.iter().zip(&row.val) {
            if *k < n_psd {
                let b = p.blocks.iter().rposition(|b| b.offset <= *k).expect("psd index");
                let (i, j) = p.blocks[b].position(*k);
                let a = if i == j { *v } else { 0.5 * v };
                writeln!(out, "{} {} {} {} {}", r + 1, b + 1, i + 1, j + 1, num(a)).unwrap();
            } else {
                let f = k - n_psd;
                let lpb = p.blocks.len() + 1;
                writeln!(out, "{} {} {} {} {}", r + 1, lpb, 2 * f + 1, 2 * f + 1, num(*v)).unwrap();
                writeln!(out, "{} {} {} {} {}", r + 1, lpb, 2 * f + 2, 2 * f + 2, num(-v)).unwrap();
            }
        }
    }
    out
}

pub fn write_sdpa(p: &SdpProblem, path: &Path) -> Result<(), SdpError> {
    std::fs::write(path, sdpa_string(p)).map_err(|e| SdpError::Io(e.to_string()))
}

/// Whitespace-separated flat assignment in canonical order.
pub fn read_plain_solution(text: &str, p: &SdpProblem) -> Result<Vec<f64>, SdpError> {
    let x: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| SdpError::Parse(format!("not a number: {}", t))))
        .collect::<Result<_, _>>()?;
    if x.len() != p.n_vars() {
        return Err(SdpError::Shape { expected: p.n_vars(), got: x.len() });
    }
    Ok(x)
}

/// CSDP-style solution: the first line holds `y`, then `matrix block i j value`
/// lines where matrix 1 is `Z` and matrix 2 is the primal matrix `X` of our form.
pub fn read_csdp_solution(text: &str, p: &SdpProblem) -> Result<Vec<f64>, SdpError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or_else(|| SdpError::Parse("empty solution".into()))?;
    let ny = first.split_whitespace().count();
    if ny != p.n_rows() {
        return Err(SdpError::Parse(format!("expected {} dual values, found {}", p.n_rows(), ny)));
    }
    let n_psd = p.n_psd();
    let mut x = vec![0.0; p.n_vars()];
    let mut split = vec![(0.0, 0.0); p.n_free];
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 5 {
            return Err(SdpError::Parse(format!("bad entry line: {}", line)));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| SdpError::Parse(format!("bad index in: {}", line)));
        let (mat, blk, i, j) = (int(t[0])?, int(t[1])?, int(t[2])?, int(t[3])?);
        let v: f64 = t[4].parse().map_err(|_| SdpError::Parse(format!("bad value in: {}", line)))?;
        if mat != 2 {
            continue;
        }
        if blk == 0 || i == 0 || j == 0 {
            return Err(SdpError::Parse(format!("indices are 1-based: {}", line)));
        }
        if blk <= p.blocks.len() {
            let b = &p.blocks[blk - 1];
            if i > b.side || j > b.side {
                return Err(SdpError::Parse(format!("entry outside block: {}", line)));
            }
            x[b.index(i - 1, j - 1)] = v;
        } else if blk == p.blocks.len() + 1 && p.n_free > 0 && i == j && i <= 2 * p.n_free {
            let f = (i - 1) / 2;
            if i % 2 == 1 {
                split[f].0 = v;
            } else {
                split[f].1 = v;
            }
        } else {
            return Err(SdpError::Parse(format!("unknown block: {}", line)));
        }
    }
    for (f, (pos, neg)) in split.iter().enumerate() {
        x[n_psd + f] = pos - neg;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_problem_text() {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 0);
        p.push_row(vec![(0, 1.0)], 1.0, "x11");
        let s = sdpa_string(&p);
        assert_eq!(s.lines().count(), 6);
        assert_eq!(s, format!("{}\n1\n1\n2\n1\n1 1 1 1 1\n", SDPA_COMMENT));
    }

    #[test]
    fn free_variables_become_lp_pairs() {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 1);
        p.push_row(vec![(1, 3.0), (3, 2.0)], 0.5, "r");
        let s = sdpa_string(&p);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[3], "2 -2");
        assert_eq!(&lines[5..], &["1 1 1 2 1.5", "1 2 1 1 2", "1 2 2 2 -2"]);
    }

    #[test]
    fn csdp_reader_recombines_free_pairs() {
        let mut p = SdpProblem::with_blocks(&[("X", 2)], 1);
        p.push_row(vec![(0, 1.0), (3, 1.0)], 1.0, "r");
        let sol = "0.5\n1 1 1 1 0.1\n2 1 1 1 0.75\n2 1 1 2 0.25\n2 2 1 1 0.5\n2 2 2 2 0.25\n";
        let x = read_csdp_solution(sol, &p).unwrap();
        assert_eq!(x, vec![0.75, 0.25, 0.0, 0.25]);
        assert!(read_csdp_solution("0.5\n2 3 1 1 1\n", &p).is_err());
        assert!(read_plain_solution("1 2 3", &p).is_err());
        assert_eq!(read_plain_solution("1 2 3 4", &p).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }
}
