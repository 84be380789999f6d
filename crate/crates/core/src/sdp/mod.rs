//! Feasibility of an [`LmiProgram`] with a quantified margin, and bisection
//! over the contraction rate.
//!
//! The engine maximizes the common slack `t` in
//!
//! ```text
//! F_j(v) − tI ⪰ 0      for ⪰ / ≻ constraints
//! −F_j(v) − tI ⪰ 0     for ⪯ / ≺ constraints
//! v ∈ [−B, B]^d,  multipliers in [0, B]
//! ```
//!
//! and reports `Feasible` only when `t* > eps` and an independent Jacobi
//! eigenvalue check confirms every constraint at the returned witness.

mod barrier;
pub mod sdpa;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::{build_program, Assignment, LmiProgram};
use crate::matlib::min_eigenvalue;
use crate::model::DistributedAlgorithm;

/// Every non-strict constraint must hold with this eigenvalue margin at a witness.
pub const EPS_POST: f64 = 1e-9;
/// Margin demanded of strict (`≻` / `≺`) constraints.
pub const EPS_STRICT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Box bound `B` on every decision variable.
    #[serde(rename = "B")]
    pub bound: f64,
    /// Feasible iff the optimal slack exceeds `eps`.
    pub eps: f64,
    /// Newton iteration budget.
    pub max_iter: usize,
    /// Seeds the jitter of the starting point.
    pub seed: u64,
    /// Stop as soon as the feasibility decision is settled instead of
    /// driving the slack to its optimum.
    pub early_exit: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { bound: 1e4, eps: 1e-7, max_iter: 5000, seed: 0, early_exit: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Feasible,
    Infeasible,
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: Status,
    /// Achieved common slack `t`.
    pub margin: f64,
    /// Certified upper bound on the optimal slack.
    pub upper_bound: f64,
    pub witness: Option<Assignment>,
    pub iterations: usize,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Pluggable feasibility backend; [`BuiltinEngine`] is the default.
pub trait FeasibilityEngine: Sync {
    fn solve(&self, prog: &LmiProgram, opts: &SolverOptions) -> Result<FeasibilityResult>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinEngine;

impl FeasibilityEngine for BuiltinEngine {
    fn solve(&self, prog: &LmiProgram, opts: &SolverOptions) -> Result<FeasibilityResult> {
        solve_feasibility(prog, opts)
    }
}

fn check_options(opts: &SolverOptions) -> Result<()> {
    if !(opts.bound > 0.0 && opts.bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("box bound B = {} must be positive", opts.bound)));
    }
    if !(opts.eps >= 0.0 && opts.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps = {} must be nonnegative", opts.eps)));
    }
    Ok(())
}

/// Lower and upper box bounds per declared variable.
pub(crate) fn variable_box(prog: &LmiProgram, bound: f64) -> (Vec<f64>, Vec<f64>) {
    let lo = prog.variables.iter().map(|v| if prog.nonneg.contains(v) { 0.0 } else { -bound }).collect();
    (lo, vec![bound; prog.variables.len()])
}

fn compile(prog: &LmiProgram, opts: &SolverOptions) -> barrier::Problem {
    let index: std::collections::HashMap<_, _> = prog.variables.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let (lo, hi) = variable_box(prog, opts.bound);
    let blocks = prog
        .constraints
        .iter()
        .filter(|c| c.dim() > 0)
        .map(|c| {
            let sign = c.sense.sign();
            barrier::Block {
                dim: c.dim(),
                constant: c.constant.as_matrix().data().iter().map(|x| sign * x).collect(),
                terms: c
                    .terms
                    .iter()
                    .map(|(v, m)| (index[v], m.as_matrix().data().iter().map(|x| sign * x).collect()))
                    .collect(),
            }
        })
        .collect();
    barrier::Problem { lo, hi, blocks }
}

/// Checks a candidate witness against every constraint with Jacobi
/// eigenvalues, independent of the solver's internal state. Returns the
/// per-constraint margins on success.
pub fn verify_witness(prog: &LmiProgram, values: &Assignment, bound: Option<f64>) -> Result<Option<Vec<f64>>> {
    for var in &prog.variables {
        let Some(&x) = values.get(var) else { return Ok(None) };
        if !x.is_finite() || (prog.nonneg.contains(var) && x < 0.0) {
            return Ok(None);
        }
        if let Some(b) = bound {
            if x.abs() > b {
                return Ok(None);
            }
        }
    }
    let mut margins = Vec::with_capacity(prog.constraints.len());
    for c in &prog.constraints {
        let m = c.margin(values)?;
        let need = if c.sense.is_strict() { EPS_STRICT } else { EPS_POST };
        if m < need {
            return Ok(None);
        }
        margins.push(m);
    }
    Ok(Some(margins))
}

pub fn solve_feasibility(prog: &LmiProgram, opts: &SolverOptions) -> Result<FeasibilityResult> {
    check_options(opts)?;
    prog.validate()?;
    if prog.variables.is_empty() {
        let values = Assignment::new();
        let mut t = f64::INFINITY;
        for c in &prog.constraints {
            t = t.min(min_eigenvalue(&c.evaluate(&values).scale(c.sense.sign()))?);
        }
        let feasible = t > opts.eps && verify_witness(prog, &values, None)?.is_some();
        return Ok(FeasibilityResult {
            status: if feasible { Status::Feasible } else { Status::Infeasible },
            margin: t,
            upper_bound: t,
            witness: feasible.then_some(values),
            iterations: 0,
        });
    }
    let problem = compile(prog, opts);
    let outcome = problem.solve(&barrier::Settings {
        eps: opts.eps,
        max_iter: opts.max_iter,
        seed: opts.seed,
        early_exit: opts.early_exit,
    });
    let witness: Assignment = prog.variables.iter().copied().zip(outcome.v.iter().copied()).collect();
    let (status, witness) = if outcome.t > opts.eps {
        match verify_witness(prog, &witness, Some(opts.bound))? {
            Some(_) => (Status::Feasible, Some(witness)),
            None => (Status::Undecided, None),
        }
    } else if outcome.upper_bound <= opts.eps {
        (Status::Infeasible, None)
    } else {
        (Status::Undecided, None)
    };
    Ok(FeasibilityResult {
        status,
        margin: outcome.t,
        upper_bound: outcome.upper_bound,
        witness,
        iterations: outcome.iterations,
    })
}

/// Result of the rate search.
#[derive(Debug, Clone)]
pub enum RateSearch {
    /// Smallest feasible rate within tolerance, with its witness.
    Contractive { gamma: f64, result: FeasibilityResult },
    /// No rate below one is certified; carries the solve at the last rate tried.
    NotContractive { result: FeasibilityResult },
}

/// Bisects the rate `γ` over `(0, 1)` on the non-strict program.
pub fn bisect_gamma(
    alg: &DistributedAlgorithm,
    opts: &SolverOptions,
    gamma_tol: f64,
    engine: &dyn FeasibilityEngine,
) -> Result<RateSearch> {
    if !(gamma_tol > 0.0 && gamma_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma tolerance {gamma_tol} not in (0, 1)")));
    }
    let at_one = engine.solve(&build_program(alg, 1.0, false)?, opts)?;
    if !at_one.is_feasible() {
        return Ok(RateSearch::NotContractive { result: at_one });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best: Option<FeasibilityResult> = None;
    let mut last = at_one;
    while hi - lo > gamma_tol {
        let mid = 0.5 * (lo + hi);
        let res = engine.solve(&build_program(alg, mid, false)?, opts)?;
        if res.is_feasible() {
            hi = mid;
            best = Some(res);
        } else {
            lo = mid;
            last = res;
        }
    }
    Ok(match best {
        Some(result) => RateSearch::Contractive { gamma: hi, result },
        None => RateSearch::NotContractive { result: last },
    })
}
