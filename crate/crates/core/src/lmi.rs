//! Affine symmetric-matrix-valued expressions in scalar decision variables,
//! and assembly of the local dissipativity, interconnection and storage
//! positivity constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlib::{min_eigenvalue, Matrix, SymMatrix};
use crate::model::{AgentDynamics, DistributedAlgorithm, Network, SectorBound};

/// Scalar decision variable. Symmetric blocks (`P`, `Q`, `R`) are scalarized
/// over their upper triangle (`row <= col`); `S` is a full rectangular block.
/// Agent indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum VarId {
    P { agent: usize, row: usize, col: usize },
    Alpha { agent: usize, bound: usize },
    Q { agent: usize, row: usize, col: usize },
    S { agent: usize, row: usize, col: usize },
    R { agent: usize, row: usize, col: usize },
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarId::P { agent, row, col } => write!(f, "P{}[{},{}]", agent + 1, row + 1, col + 1),
            VarId::Alpha { agent, bound } => write!(f, "alpha{}[{}]", agent + 1, bound + 1),
            VarId::Q { agent, row, col } => write!(f, "Q{}[{},{}]", agent + 1, row + 1, col + 1),
            VarId::S { agent, row, col } => write!(f, "S{}[{},{}]", agent + 1, row + 1, col + 1),
            VarId::R { agent, row, col } => write!(f, "R{}[{},{}]", agent + 1, row + 1, col + 1),
        }
    }
}

impl VarId {
    pub fn agent(&self) -> usize {
        match *self {
            VarId::P { agent, .. }
            | VarId::Alpha { agent, .. }
            | VarId::Q { agent, .. }
            | VarId::S { agent, .. }
            | VarId::R { agent, .. } => agent,
        }
    }
}

/// Values of the decision variables.
pub type Assignment = BTreeMap<VarId, f64>;

/// Required sign of an LMI's value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `F ⪰ 0`
    Psd,
    /// `F ≻ 0`
    Pd,
    /// `F ⪯ 0`
    Nsd,
    /// `F ≺ 0`
    Nd,
}

impl Sense {
    pub fn is_strict(self) -> bool {
        matches!(self, Sense::Pd | Sense::Nd)
    }

    /// `+1` if the constraint is `sign·F ⪰ 0` with sign positive.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Psd | Sense::Pd => 1.0,
            Sense::Nsd | Sense::Nd => -1.0,
        }
    }
}

/// `F(v) = F_0 + Σ_k v_k F_k` with a required sign.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLmi {
    pub label: String,
    pub constant: SymMatrix,
    pub terms: Vec<(VarId, SymMatrix)>,
    pub sense: Sense,
}

impl AffineLmi {
    pub fn new(label: impl Into<String>, dim: usize, sense: Sense) -> Self {
        AffineLmi { label: label.into(), constant: SymMatrix::zeros(dim), terms: Vec::new(), sense }
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    fn push(&mut self, var: VarId, coefficient: SymMatrix) {
        debug_assert_eq!(coefficient.dim(), self.dim());
        self.terms.push((var, coefficient));
    }

    pub fn coefficient(&self, var: VarId) -> Option<&SymMatrix> {
        self.terms.iter().find(|(v, _)| *v == var).map(|(_, c)| c)
    }

    /// `F(v)`; variables missing from the assignment count as zero.
    pub fn evaluate(&self, values: &Assignment) -> SymMatrix {
        let mut out = self.constant.clone();
        for (var, coef) in &self.terms {
            if let Some(&v) = values.get(var) {
                if v != 0.0 {
                    out.axpy(v, coef);
                }
            }
        }
        out
    }

    /// `λ_min(sign·F(v))`: nonnegative iff the constraint holds.
    pub fn margin(&self, values: &Assignment) -> Result<f64> {
        min_eigenvalue(&self.evaluate(values).scale(self.sense.sign()))
    }
}

/// Simultaneous LMIs for one candidate rate `gamma`.
#[derive(Debug, Clone)]
pub struct LmiProgram {
    pub constraints: Vec<AffineLmi>,
    pub variables: Vec<VarId>,
    /// Multipliers constrained to be nonnegative.
    pub nonneg: BTreeSet<VarId>,
    pub gamma: f64,
    /// Interconnection LMI is strict (`γ = 1` nonexpansive path).
    pub strict: bool,
}

impl LmiProgram {
    pub fn validate(&self) -> Result<()> {
        let declared: BTreeSet<VarId> = self.variables.iter().copied().collect();
        if declared.len() != self.variables.len() {
            return Err(Error::InvalidParameter("duplicate variable declaration".into()));
        }
        for c in &self.constraints {
            if let Some((v, _)) = c.terms.iter().find(|(v, _)| !declared.contains(v)) {
                return Err(Error::InvalidParameter(format!("{}: undeclared variable {v}", c.label)));
            }
            if c.terms.iter().any(|(_, m)| m.dim() != c.dim()) {
                return Err(Error::DimensionMismatch(format!("{}: coefficient size", c.label)));
            }
        }
        if let Some(v) = self.nonneg.iter().find(|v| !declared.contains(v)) {
            return Err(Error::InvalidParameter(format!("undeclared nonnegative variable {v}")));
        }
        Ok(())
    }

    /// Margin of every constraint at `values`, in constraint order.
    pub fn margins(&self, values: &Assignment) -> Result<Vec<f64>> {
        self.constraints.iter().map(|c| c.margin(values)).collect()
    }
}

fn p_vars(agent: usize, nx: usize) -> impl Iterator<Item = (VarId, usize, usize)> {
    (0..nx).flat_map(move |r| (r..nx).map(move |c| (VarId::P { agent, row: r, col: c }, r, c)))
}

fn q_vars(agent: usize, p: usize) -> impl Iterator<Item = (VarId, usize, usize)> {
    (0..p).flat_map(move |r| (r..p).map(move |c| (VarId::Q { agent, row: r, col: c }, r, c)))
}

fn s_vars(agent: usize, p: usize, nu: usize) -> impl Iterator<Item = (VarId, usize, usize)> {
    (0..p).flat_map(move |r| (0..nu).map(move |c| (VarId::S { agent, row: r, col: c }, r, c)))
}

fn r_vars(agent: usize, nu: usize) -> impl Iterator<Item = (VarId, usize, usize)> {
    (0..nu).flat_map(move |r| (r..nu).map(move |c| (VarId::R { agent, row: r, col: c }, r, c)))
}

/// Declared variables of one agent, in program order.
pub fn agent_variables(agent: usize, dynamics: &AgentDynamics, bounds: usize) -> Vec<VarId> {
    let d = dynamics.dims();
    p_vars(agent, d.nx)
        .map(|t| t.0)
        .chain((0..bounds).map(|bound| VarId::Alpha { agent, bound }))
        .chain(q_vars(agent, d.p).map(|t| t.0))
        .chain(s_vars(agent, d.p, d.nu).map(|t| t.0))
        .chain(r_vars(agent, d.nu).map(|t| t.0))
        .collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 1]")))
    }
}

/// `rowᵀ col + colᵀ row` for two row vectors.
fn sym_outer(a: &[f64], b: &[f64]) -> SymMatrix {
    let n = a.len();
    let m = Matrix::from_fn(n, n, |r, c| a[r] * b[c] + b[r] * a[c]);
    SymMatrix::new(m).expect("square")
}

fn row(m: &Matrix, r: usize) -> Vec<f64> {
    (0..m.cols()).map(|c| m[(r, c)]).collect()
}

/// Local incremental dissipativity LMI of agent `agent` (zero-based):
///
/// ```text
/// [A B G; I 0 0]ᵀ diag(−P, γP) [A B G; I 0 0]
///   + Σ_j α_j [C_opt D_opt H_opt; 0 0 I]ᵀ S_j [C_opt D_opt H_opt; 0 0 I]
///   + [C_con D_con H_con; 0 I 0]ᵀ [Q S; Sᵀ R] [C_con D_con H_con; 0 I 0]  ⪰ 0
/// ```
///
/// in the stacked increment `(Δx, Δu, Δw)`.
pub fn local_dissipativity_lmi(
    agent: usize,
    dynamics: &AgentDynamics,
    bounds: &[SectorBound],
    gamma: f64,
) -> Result<AffineLmi> {
    check_gamma(gamma)?;
    let d = dynamics.dims();
    for b in bounds {
        if b.dim() != d.q + d.nw {
            return Err(Error::DimensionMismatch(format!(
                "sector bound of size {} for (z, w) of size {}",
                b.dim(),
                d.q + d.nw
            )));
        }
    }
    let dim = d.nx + d.nu + d.nw;
    let transition = Matrix::hstack(&[&dynamics.a, &dynamics.b, &dynamics.g])?;
    let state = Matrix::hstack(&[&Matrix::identity(d.nx), &Matrix::zeros(d.nx, d.nu + d.nw)])?;
    let oracle_io = Matrix::vstack(&[
        &Matrix::hstack(&[&dynamics.c_opt, &dynamics.d_opt, &dynamics.h_opt])?,
        &Matrix::hstack(&[&Matrix::zeros(d.nw, d.nx + d.nu), &Matrix::identity(d.nw)])?,
    ])?;
    let con_out = Matrix::hstack(&[&dynamics.c_con, &dynamics.d_con, &dynamics.h_con])?;
    let con_in = Matrix::hstack(&[&Matrix::zeros(d.nu, d.nx), &Matrix::identity(d.nu), &Matrix::zeros(d.nu, d.nw)])?;

    let mut lmi = AffineLmi::new(format!("local dissipativity, agent {}", agent + 1), dim, Sense::Psd);
    for (var, r, c) in p_vars(agent, d.nx) {
        let e = SymMatrix::unit(d.nx, r, c);
        let decay = SymMatrix::congruence(&e, &transition)?;
        let current = SymMatrix::congruence(&e, &state)?;
        lmi.push(var, current.scale(gamma).sub(&decay)?);
    }
    for (j, b) in bounds.iter().enumerate() {
        lmi.push(VarId::Alpha { agent, bound: j }, SymMatrix::congruence(&b.s, &oracle_io)?);
    }
    for (var, r, c) in q_vars(agent, d.p) {
        lmi.push(var, SymMatrix::congruence(&SymMatrix::unit(d.p, r, c), &con_out)?);
    }
    for (var, r, c) in s_vars(agent, d.p, d.nu) {
        lmi.push(var, sym_outer(&row(&con_out, r), &row(&con_in, c)));
    }
    for (var, r, c) in r_vars(agent, d.nu) {
        lmi.push(var, SymMatrix::congruence(&SymMatrix::unit(d.nu, r, c), &con_in)?);
    }
    Ok(lmi)
}

/// Coupling LMI `[I; M]ᵀ [Q S; Sᵀ R] [I; M] = Q + SM + MᵀSᵀ + MᵀRM`,
/// `⪯ 0` or `≺ 0` when `strict`, with block-diagonal `Q, S, R`.
pub fn interconnection_lmi(alg: &DistributedAlgorithm, strict: bool) -> Result<AffineLmi> {
    interconnection_lmi_for(alg.agents().iter().map(|a| &a.dynamics), alg.network(), strict)
}

pub fn interconnection_lmi_for<'a>(
    agents: impl Iterator<Item = &'a AgentDynamics> + Clone,
    network: &Network,
    strict: bool,
) -> Result<AffineLmi> {
    let dims: Vec<_> = agents.map(AgentDynamics::dims).collect();
    let total_p: usize = dims.iter().map(|d| d.p).sum();
    let total_u: usize = dims.iter().map(|d| d.nu).sum();
    let m = &network.m;
    if m.shape() != (total_u, total_p) {
        return Err(Error::DimensionMismatch(format!(
            "coupling matrix is {:?}, blocks need ({total_u}, {total_p})",
            m.shape()
        )));
    }
    let sense = if strict { Sense::Nd } else { Sense::Nsd };
    let mut lmi = AffineLmi::new("interconnection", total_p, sense);
    let m_rows: Vec<Vec<f64>> = (0..total_u).map(|r| row(m, r)).collect();
    let (mut off_p, mut off_u) = (0, 0);
    for (i, d) in dims.iter().enumerate() {
        for (var, r, c) in q_vars(i, d.p) {
            lmi.push(var, SymMatrix::unit(total_p, off_p + r, off_p + c));
        }
        // S_i picks row off_p + r of the identity against row off_u + c of M
        for (var, r, c) in s_vars(i, d.p, d.nu) {
            let mut e = vec![0.0; total_p];
            e[off_p + r] = 1.0;
            lmi.push(var, sym_outer(&e, &m_rows[off_u + c]));
        }
        for (var, r, c) in r_vars(i, d.nu) {
            let coef = if r == c {
                sym_outer(&m_rows[off_u + r], &m_rows[off_u + r]).scale(0.5)
            } else {
                sym_outer(&m_rows[off_u + r], &m_rows[off_u + c])
            };
            lmi.push(var, coef);
        }
        off_p += d.p;
        off_u += d.nu;
    }
    Ok(lmi)
}

/// `P_i ≻ 0`.
pub fn storage_positivity_lmi(agent: usize, nx: usize) -> AffineLmi {
    let mut lmi = AffineLmi::new(format!("storage positivity, agent {}", agent + 1), nx, Sense::Pd);
    for (var, r, c) in p_vars(agent, nx) {
        lmi.push(var, SymMatrix::unit(nx, r, c));
    }
    lmi
}

/// All constraints for one candidate rate: one local LMI per agent, the
/// interconnection LMI, and storage positivity. `strict` selects the
/// nonexpansive path and requires `gamma == 1`.
pub fn build_program(alg: &DistributedAlgorithm, gamma: f64, strict: bool) -> Result<LmiProgram> {
    check_gamma(gamma)?;
    if strict && gamma != 1.0 {
        return Err(Error::InvalidParameter("the strict interconnection test requires gamma = 1".into()));
    }
    let mut constraints = Vec::with_capacity(2 * alg.len() + 1);
    let mut variables = Vec::new();
    let mut nonneg = BTreeSet::new();
    for (i, agent) in alg.agents().iter().enumerate() {
        let bounds = &agent.oracle.bounds;
        constraints.push(local_dissipativity_lmi(i, &agent.dynamics, bounds, gamma)?);
        variables.extend(agent_variables(i, &agent.dynamics, bounds.len()));
        nonneg.extend((0..bounds.len()).map(|bound| VarId::Alpha { agent: i, bound }));
    }
    constraints.push(interconnection_lmi(alg, strict)?);
    for (i, agent) in alg.agents().iter().enumerate() {
        constraints.push(storage_positivity_lmi(i, agent.dynamics.dims().nx));
    }
    let prog = LmiProgram { constraints, variables, nonneg, gamma, strict };
    prog.validate()?;
    Ok(prog)
}

/// Dense storage block `P_i` from an assignment.
pub fn storage_block(values: &Assignment, agent: usize, nx: usize) -> SymMatrix {
    let mut m = Matrix::zeros(nx, nx);
    for (var, r, c) in p_vars(agent, nx) {
        let v = values.get(&var).copied().unwrap_or(0.0);
        m[(r, c)] = v;
        m[(c, r)] = v;
    }
    SymMatrix::new(m).expect("square")
}

/// Maps a witness of the base model to the model lifted by `⊗ I_n`: every
/// block `X` becomes `X ⊗ I_n`, multipliers are unchanged.
pub fn lift_assignment(base: &Assignment, n: usize) -> Assignment {
    let mut out = Assignment::new();
    for (&var, &value) in base {
        match var {
            VarId::Alpha { .. } => {
                out.insert(var, value);
            }
            VarId::P { agent, row, col } => {
                for k in 0..n {
                    out.insert(VarId::P { agent, row: row * n + k, col: col * n + k }, value);
                }
            }
            VarId::Q { agent, row, col } => {
                for k in 0..n {
                    out.insert(VarId::Q { agent, row: row * n + k, col: col * n + k }, value);
                }
            }
            VarId::S { agent, row, col } => {
                for k in 0..n {
                    out.insert(VarId::S { agent, row: row * n + k, col: col * n + k }, value);
                }
            }
            VarId::R { agent, row, col } => {
                for k in 0..n {
                    out.insert(VarId::R { agent, row: row * n + k, col: col * n + k }, value);
                }
            }
        }
    }
    out
}
