//! Plain-text exchange with external SDP solvers.
//!
//! [`export_sdpa`] writes the slack-maximization problem in the SDPA sparse
//! format (`.dat-s`). The primal vector is `x = (v_1, …, v_d, t)` in the
//! variable order listed in the header comments; the objective is
//! `minimize −t`. Every LMI becomes one block
//! `Σ_k v_k (σF_k) − tI − (−σF_0) ⪰ 0` with `σ = +1` for `⪰/≻` and `−1` for
//! `⪯/≺`; the box `[lo, hi]` becomes a final diagonal (LP) block with rows
//! `v_k − lo_k ≥ 0` and `hi_k − v_k ≥ 0`.
//!
//! [`import_solution`] reads a solver's primal vector back, either from an
//! SDPA result file (the braces following `xVec`) or from a bare list of
//! numbers, and re-verifies it exactly like a built-in witness.

use std::fmt::Write as _;

use super::{variable_box, verify_witness, FeasibilityResult, SolverOptions, Status};
use crate::error::{Error, Result};
use crate::lmi::{Assignment, LmiProgram};

fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

pub fn export_sdpa(prog: &LmiProgram, opts: &SolverOptions) -> Result<String> {
    prog.validate()?;
    let d = prog.variables.len();
    let index: std::collections::HashMap<_, _> = prog.variables.iter().enumerate().map(|(i, v)| (*v, i + 1)).collect();
    let blocks: Vec<_> = prog.constraints.iter().filter(|c| c.dim() > 0).collect();
    let (lo, hi) = variable_box(prog, opts.bound);
    let mut out = String::new();
    writeln!(out, "\"distcert slack maximization: minimize -t").unwrap();
    writeln!(out, "\"gamma = {}, strict = {}, B = {}", prog.gamma, prog.strict, opts.bound).unwrap();
    for (i, v) in prog.variables.iter().enumerate() {
        writeln!(out, "* x{} = {v}", i + 1).unwrap();
    }
    writeln!(out, "* x{} = t", d + 1).unwrap();
    for (j, c) in blocks.iter().enumerate() {
        writeln!(out, "* block {} = {} ({:?})", j + 1, c.label, c.sense).unwrap();
    }
    writeln!(out, "{}", d + 1).unwrap();
    let lp_block = d > 0;
    writeln!(out, "{}", blocks.len() + usize::from(lp_block)).unwrap();
    let mut sizes: Vec<String> = blocks.iter().map(|c| c.dim().to_string()).collect();
    if lp_block {
        sizes.push(format!("-{}", 2 * d));
    }
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    let mut costs = vec!["0".to_string(); d];
    costs.push("-1".into());
    writeln!(out, "{}", costs.join(" ")).unwrap();
    for (j, c) in blocks.iter().enumerate() {
        let blk = j + 1;
        let sign = c.sense.sign();
        let n = c.dim();
        let mut emit = |mat: usize, m: &crate::matlib::SymMatrix, s: f64| {
            for r in 0..n {
                for col in r..n {
                    let v = s * m[(r, col)];
                    if v != 0.0 {
                        writeln!(out, "{mat} {blk} {} {} {}", r + 1, col + 1, fmt_num(v)).unwrap();
                    }
                }
            }
        };
        emit(0, &c.constant, -sign);
        for (var, coef) in &c.terms {
            emit(index[var], coef, sign);
        }
        for r in 0..n {
            writeln!(out, "{} {blk} {} {} -1", d + 1, r + 1, r + 1).unwrap();
        }
    }
    if lp_block {
        let blk = blocks.len() + 1;
        for k in 0..d {
            let (lower, upper) = (2 * k + 1, 2 * k + 2);
            writeln!(out, "0 {blk} {lower} {lower} {}", fmt_num(lo[k])).unwrap();
            writeln!(out, "{} {blk} {lower} {lower} 1", k + 1).unwrap();
            writeln!(out, "0 {blk} {upper} {upper} {}", fmt_num(-hi[k])).unwrap();
            writeln!(out, "{} {blk} {upper} {upper} -1", k + 1).unwrap();
        }
    }
    Ok(out)
}

fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    let body = match text.find("xVec") {
        Some(pos) => {
            let rest = &text[pos..];
            let open = rest.find('{').ok_or_else(|| Error::Parse("xVec without '{'".into()))?;
            let close = rest[open..].find('}').ok_or_else(|| Error::Parse("unterminated xVec".into()))?;
            rest[open + 1..open + close].to_string()
        }
        None => text
            .lines()
            .filter(|l| !l.trim_start().starts_with(['"', '*', '#']))
            .collect::<Vec<_>>()
            .join(" "),
    };
    body.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
        .collect()
}

/// Reads an external primal vector (`d` values, optionally followed by `t`)
/// and verifies it against the program.
pub fn import_solution(prog: &LmiProgram, text: &str, opts: &SolverOptions) -> Result<FeasibilityResult> {
    let nums = parse_numbers(text)?;
    let d = prog.variables.len();
    if nums.len() != d && nums.len() != d + 1 {
        return Err(Error::DimensionMismatch(format!("expected {d} or {} values, found {}", d + 1, nums.len())));
    }
    let witness: Assignment = prog.variables.iter().copied().zip(nums.iter().copied()).collect();
    let margins = prog.margins(&witness)?;
    let margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    let verified = margin > opts.eps && verify_witness(prog, &witness, Some(opts.bound))?.is_some();
    Ok(FeasibilityResult {
        status: if verified { Status::Feasible } else { Status::Undecided },
        margin,
        upper_bound: f64::INFINITY,
        witness: verified.then_some(witness),
        iterations: 0,
    })
}
