//! Certification pipeline: exponential rate or sublinear (nonexpansive)
//! certificates, independent re-verification, the classical DGD step-size
//! test, and grid searches over step sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::{build_program, lift_assignment, Assignment, LmiProgram, VarId};
use crate::model::{
    check_detectable, dgd_algorithm, laplacian, well_posedness, DgdParams, DistributedAlgorithm, Graph,
};
use crate::sdp::{bisect_gamma, solve_feasibility, verify_witness, BuiltinEngine, RateSearch, SolverOptions, Status};

/// Relative widening of strict sector bounds used by the sublinear path.
pub const DEFAULT_DELTA: f64 = 1e-9;
/// Default resolution of the rate bisection.
pub const DEFAULT_GAMMA_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CertMode {
    Exponential { gamma: f64 },
    Sublinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WitnessEntry {
    #[serde(flatten)]
    var: VarId,
    value: f64,
}

mod witness_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &Assignment, s: S) -> std::result::Result<S::Ok, S::Error> {
        let list: Vec<WitnessEntry> = w.iter().map(|(&var, &value)| WitnessEntry { var, value }).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Assignment, D::Error> {
        let list = Vec::<WitnessEntry>::deserialize(d)?;
        Ok(list.into_iter().map(|e| (e.var, e.value)).collect())
    }
}

/// A verified solution of the certification LMIs.
///
/// The storage function is `V(Δx) = Σ_i Δx_iᵀ P_i Δx_i` with `P_i` read from
/// the witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(flatten)]
    pub mode: CertMode,
    /// Model fingerprint at the dimension the witness was computed for.
    pub fingerprint: String,
    /// Strictification used for the sector bounds (sublinear mode only).
    pub delta: Option<f64>,
    /// Eigenvalue margin of each constraint at the witness, program order.
    pub margins: Vec<f64>,
    #[serde(with = "witness_list")]
    pub witness: Assignment,
}

impl Certificate {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn gamma(&self) -> f64 {
        match self.mode {
            CertMode::Exponential { gamma } => gamma,
            CertMode::Sublinear => 1.0,
        }
    }
}

/// Why certification did not succeed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Failure {
    /// Agents (1-based) whose `(C_opt, A)` pair fails the PBH test.
    NotDetectable { agents: Vec<usize> },
    /// The LMI program was not decided feasible.
    Solver { status: Status, margin: f64, upper_bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Certified(Certificate),
    NotCertified(Failure),
}

impl Verdict {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Certified(c) => Some(c),
            Verdict::NotCertified(_) => None,
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified(_))
    }
}

fn require_well_posed(alg: &DistributedAlgorithm) -> Result<()> {
    let wp = well_posedness(alg);
    if wp.interconnection_invertible {
        Ok(())
    } else {
        Err(Error::ModelError(wp.diagnostic))
    }
}

fn finish(
    prog: &LmiProgram,
    res: crate::sdp::FeasibilityResult,
    mode: CertMode,
    fingerprint: String,
    delta: Option<f64>,
    opts: &SolverOptions,
) -> Result<Verdict> {
    if let (Status::Feasible, Some(witness)) = (res.status, res.witness) {
        if let Some(margins) = verify_witness(prog, &witness, Some(opts.bound))? {
            return Ok(Verdict::Certified(Certificate { mode, fingerprint, delta, margins, witness }));
        }
    }
    Ok(Verdict::NotCertified(Failure::Solver { status: res.status, margin: res.margin, upper_bound: res.upper_bound }))
}

/// Exponential contraction with the given rate `γ ∈ (0, 1)`.
pub fn certify_exponential(alg: &DistributedAlgorithm, gamma: f64, opts: &SolverOptions) -> Result<Verdict> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("rate gamma = {gamma} must lie in (0, 1)")));
    }
    require_well_posed(alg)?;
    let prog = build_program(alg, gamma, false)?;
    let res = solve_feasibility(&prog, opts)?;
    finish(&prog, res, CertMode::Exponential { gamma }, alg.fingerprint(), None, opts)
}

/// Smallest certifiable rate up to `gamma_tol`, by bisection.
pub fn certify_best_rate(alg: &DistributedAlgorithm, opts: &SolverOptions, gamma_tol: f64) -> Result<Verdict> {
    require_well_posed(alg)?;
    match bisect_gamma(alg, opts, gamma_tol, &BuiltinEngine)? {
        RateSearch::Contractive { gamma, result } => {
            let prog = build_program(alg, gamma, false)?;
            finish(&prog, result, CertMode::Exponential { gamma }, alg.fingerprint(), None, opts)
        }
        RateSearch::NotContractive { result } => Ok(Verdict::NotCertified(Failure::Solver {
            status: result.status,
            margin: result.margin,
            upper_bound: result.upper_bound,
        })),
    }
}

/// 1-based indices of agents whose `(C_opt, A)` pair is not detectable.
pub fn undetectable_agents(alg: &DistributedAlgorithm) -> Result<Vec<usize>> {
    let mut bad = Vec::new();
    for (i, a) in alg.agents().iter().enumerate() {
        if !check_detectable(&a.dynamics.c_opt, &a.dynamics.a)? {
            bad.push(i + 1);
        }
    }
    Ok(bad)
}

/// Nonexpansive interconnection with vanishing increments: detectability of
/// every agent, sector bounds tightened by `delta`, `γ = 1` and a strict
/// interconnection inequality.
pub fn certify_sublinear(alg: &DistributedAlgorithm, opts: &SolverOptions, delta: f64) -> Result<Verdict> {
    require_well_posed(alg)?;
    let bad = undetectable_agents(alg)?;
    if !bad.is_empty() {
        return Ok(Verdict::NotCertified(Failure::NotDetectable { agents: bad }));
    }
    let strict = alg.strictified(delta)?;
    let prog = build_program(&strict, 1.0, true)?;
    let res = solve_feasibility(&prog, opts)?;
    finish(&prog, res, CertMode::Sublinear, alg.fingerprint(), Some(delta), opts)
}

/// Result of re-checking a certificate against a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub ok: bool,
    /// Margins recomputed from scratch (empty when the check stopped early).
    pub margins: Vec<f64>,
    /// Lifting factor `n` when the certificate belongs to the `⊗ I_n`-reduced model.
    pub lifted_by: Option<usize>,
    pub detail: String,
}

fn program_for(alg: &DistributedAlgorithm, cert: &Certificate) -> Result<LmiProgram> {
    match cert.mode {
        CertMode::Exponential { gamma } => build_program(alg, gamma, false),
        CertMode::Sublinear => {
            let delta = cert
                .delta
                .ok_or_else(|| Error::InvalidParameter("sublinear certificate without delta".into()))?;
            build_program(&alg.strictified(delta)?, 1.0, true)
        }
    }
}

/// Rebuilds every LMI from `alg` and checks the stored witness.
///
/// Accepts a certificate computed for the `⊗ I_n`-reduced model of `alg`: the
/// witness is lifted blockwise and checked against the full-size LMIs.
pub fn verify_certificate(alg: &DistributedAlgorithm, cert: &Certificate, opts: &SolverOptions) -> Result<Verification> {
    let (witness, lifted_by) = if alg.fingerprint() == cert.fingerprint {
        (cert.witness.clone(), None)
    } else {
        match alg.kron_reduce() {
            Some((base, n)) if base.fingerprint() == cert.fingerprint => (lift_assignment(&cert.witness, n), Some(n)),
            _ => {
                return Ok(Verification {
                    ok: false,
                    margins: vec![],
                    lifted_by: None,
                    detail: "certificate fingerprint does not match the model".into(),
                })
            }
        }
    };
    if cert.mode == CertMode::Sublinear {
        let bad = undetectable_agents(alg)?;
        if !bad.is_empty() {
            return Ok(Verification {
                ok: false,
                margins: vec![],
                lifted_by,
                detail: format!("agents {bad:?} not detectable"),
            });
        }
    }
    let prog = program_for(alg, cert)?;
    let mut values = witness;
    for var in &prog.variables {
        values.entry(*var).or_insert(0.0);
    }
    let margins = prog.margins(&values)?;
    let ok = verify_witness(&prog, &values, Some(opts.bound))?.is_some();
    let detail = if ok {
        format!("all {} constraints hold, min margin {:.3e}", margins.len(), margins.iter().copied().fold(f64::INFINITY, f64::min))
    } else {
        let worst = margins
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, m)| format!("{} (margin {m:.3e})", prog.constraints[i].label))
            .unwrap_or_default();
        format!("violated: {worst}")
    };
    Ok(Verification { ok, margins, lifted_by, detail })
}

/// The textbook DGD step-size test `ρ < 1/d_max`, `η < (2 − ρλ_max(L))/K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCheck {
    pub ok: bool,
    pub rho_bound: f64,
    pub eta_bound: f64,
    pub d_max: f64,
    pub lambda_max: f64,
}

pub fn classical_dgd_check(params: &DgdParams, graph: &Graph) -> Result<ClassicalCheck> {
    params.validate()?;
    let (rho, eta) = params.common_steps().ok_or_else(|| {
        Error::NotApplicable("the classical bound only covers a common step size for all agents".into())
    })?;
    let info = laplacian(graph)?;
    let rho_bound = 1.0 / info.d_max;
    let eta_bound = (2.0 - rho * info.lambda_max) / params.k;
    Ok(ClassicalCheck {
        ok: rho < rho_bound && eta < eta_bound,
        rho_bound,
        eta_bound,
        d_max: info.d_max,
        lambda_max: info.lambda_max,
    })
}

/// A swept parameter. Agent indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Rho,
    Eta,
    AgentRho(usize),
    AgentEta(usize),
}

impl Param {
    pub fn name(&self) -> String {
        match self {
            Param::Rho => "rho".into(),
            Param::Eta => "eta".into(),
            Param::AgentRho(i) => format!("rho_{i}"),
            Param::AgentEta(i) => format!("eta_{i}"),
        }
    }

    /// Writes `value` into the step sizes it controls.
    pub fn apply(&self, params: &mut DgdParams, value: f64) -> Result<()> {
        let n = params.agents();
        let slot = |i: usize| {
            if i == 0 || i > n {
                Err(Error::InvalidParameter(format!("agent {i} out of range 1..={n}")))
            } else {
                Ok(i - 1)
            }
        };
        match *self {
            Param::Rho => params.rho.iter_mut().for_each(|r| *r = value),
            Param::Eta => params.eta.iter_mut().for_each(|e| *e = value),
            Param::AgentRho(i) => params.rho[slot(i)?] = value,
            Param::AgentEta(i) => params.eta[slot(i)?] = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: Param, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput(format!("axis {} has no values", param.name())));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!("axis {} must be finite and strictly increasing", param.name())));
        }
        Ok(Axis { param, values })
    }

    /// `lo, lo + step, …` up to `hi` (inclusive up to rounding).
    pub fn range(param: Param, lo: f64, step: f64, hi: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) {
            return Err(Error::InvalidParameter(format!("bad range {lo}:{step}:{hi}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Axis::new(param, (0..count).map(|k| lo + step * k as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    Sublinear,
    Exponential,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub mode: GridMode,
    pub solver: SolverOptions,
    pub gamma_tol: f64,
    pub delta: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { mode: GridMode::Sublinear, solver: SolverOptions::default(), gamma_tol: DEFAULT_GAMMA_TOL, delta: DEFAULT_DELTA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// One value per axis.
    pub point: Vec<f64>,
    /// `None` where the classical test does not apply.
    pub classical_ok: Option<bool>,
    /// `None` when the sublinear path was not run.
    pub sublinear: Option<bool>,
    pub gamma_star: Option<f64>,
    /// Solver slack of the sublinear program, or of the rate search when
    /// only that ran.
    pub margin: Option<f64>,
    pub error: Option<String>,
}

impl GridCell {
    pub fn certified(&self) -> bool {
        self.sublinear == Some(true) || self.gamma_star.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub axes: Vec<Axis>,
    /// Row-major: the last axis varies fastest.
    pub cells: Vec<GridCell>,
}

impl GridReport {
    pub fn certified_count(&self) -> usize {
        self.cells.iter().filter(|c| c.certified()).count()
    }
}

fn cell_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![vec![]];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

fn margin_of(v: &Verdict) -> Option<f64> {
    match v {
        Verdict::Certified(c) => Some(c.min_margin()),
        Verdict::NotCertified(Failure::Solver { margin, .. }) => Some(*margin),
        Verdict::NotCertified(_) => None,
    }
}

fn evaluate_cell(alg: &DistributedAlgorithm, classical_ok: Option<bool>, opts: &GridOptions) -> Result<GridCell> {
    let mut cell = GridCell { point: vec![], classical_ok, sublinear: None, gamma_star: None, margin: None, error: None };
    if matches!(opts.mode, GridMode::Sublinear | GridMode::Both) {
        let v = certify_sublinear(alg, &opts.solver, opts.delta)?;
        cell.sublinear = Some(v.is_certified());
        cell.margin = margin_of(&v);
    }
    if matches!(opts.mode, GridMode::Exponential | GridMode::Both) {
        let v = certify_best_rate(alg, &opts.solver, opts.gamma_tol)?;
        cell.gamma_star = v.certificate().map(Certificate::gamma);
        if cell.margin.is_none() {
            cell.margin = margin_of(&v);
        }
    }
    Ok(cell)
}

/// Evaluates every grid point independently (in parallel) with a model
/// produced by `build`, which also returns the classical verdict if any.
/// Per-cell errors are recorded in the cell.
pub fn grid_search_with<F>(axes: Vec<Axis>, opts: &GridOptions, build: F) -> Result<GridReport>
where
    F: Fn(&[f64]) -> Result<(DistributedAlgorithm, Option<bool>)> + Sync,
{
    if axes.is_empty() {
        return Err(Error::EmptyInput("grid search needs at least one axis".into()));
    }
    let points = cell_points(&axes);
    let cells = points
        .into_par_iter()
        .map(|point| {
            let outcome = build(&point).and_then(|(alg, classical)| evaluate_cell(&alg, classical, opts));
            match outcome {
                Ok(mut cell) => {
                    cell.point = point;
                    cell
                }
                Err(e) => GridCell {
                    point,
                    classical_ok: None,
                    sublinear: None,
                    gamma_star: None,
                    margin: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(GridReport { axes, cells })
}

/// Grid search over DGD step sizes around `template`.
pub fn grid_search(template: &DgdParams, graph: &Graph, axes: Vec<Axis>, opts: &GridOptions) -> Result<GridReport> {
    let params: Vec<Param> = axes.iter().map(|a| a.param).collect();
    grid_search_with(axes, opts, |point| {
        let mut p = template.clone();
        for (param, &v) in params.iter().zip(point) {
            param.apply(&mut p, v)?;
        }
        let classical = match classical_dgd_check(&p, graph) {
            Ok(c) => Some(c.ok),
            Err(Error::NotApplicable(_)) => None,
            Err(e) => return Err(e),
        };
        Ok((dgd_algorithm(&p, graph, None)?, classical))
    })
}
