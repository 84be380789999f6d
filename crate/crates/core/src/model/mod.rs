//! Distributed algorithms as networks of LTI agents closed by static oracles
//! and coupled through `u = M y`.

mod dgd;
mod graph;
mod sector;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matlib::{block_diag, kron, Matrix, SymMatrix};

pub use dgd::{dgd_algorithm, DgdParams, QuadraticCost};
pub use graph::{laplacian, Graph, LaplacianInfo};
pub use sector::{
    sector_combine, sector_custom, sector_lipschitz, sector_monotone, sector_slope_restricted,
    SectorBound, SectorOrigin,
};

/// Condition number above which `I − D̄M` counts as singular.
pub const WELL_POSED_COND_LIMIT: f64 = 1e12;
/// Eigenvalues with modulus at least `1 − TOL_STAB` must be observable.
pub const TOL_STAB: f64 = 1e-9;
/// Relative rank tolerance used by the PBH test.
pub const PBH_RANK_TOL: f64 = 1e-9;

/// The nine matrices of one agent:
///
/// ```text
/// x⁺ = A x + B u + G w
/// y  = C_con x + D_con u + H_con w
/// z  = C_opt x + D_opt u + H_opt w
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDynamics {
    pub a: Matrix,
    pub b: Matrix,
    pub g: Matrix,
    pub c_con: Matrix,
    pub d_con: Matrix,
    pub h_con: Matrix,
    pub c_opt: Matrix,
    pub d_opt: Matrix,
    pub h_opt: Matrix,
}

/// Channel dimensions of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentDims {
    pub nx: usize,
    pub nu: usize,
    pub nw: usize,
    pub p: usize,
    pub q: usize,
}

impl AgentDynamics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Matrix,
        b: Matrix,
        g: Matrix,
        c_con: Matrix,
        d_con: Matrix,
        h_con: Matrix,
        c_opt: Matrix,
        d_opt: Matrix,
        h_opt: Matrix,
    ) -> Result<Self> {
        let agent = AgentDynamics { a, b, g, c_con, d_con, h_con, c_opt, d_opt, h_opt };
        agent.validate()?;
        Ok(agent)
    }

    /// Agent without interconnection or oracle channels' feedthrough: only
    /// `A, B, G, C_con, C_opt` given, the D and H blocks are zero.
    pub fn without_feedthrough(a: Matrix, b: Matrix, g: Matrix, c_con: Matrix, c_opt: Matrix) -> Result<Self> {
        let (nu, nw, p, q) = (b.cols(), g.cols(), c_con.rows(), c_opt.rows());
        Self::new(
            a,
            b,
            g,
            c_con,
            Matrix::zeros(p, nu),
            Matrix::zeros(p, nw),
            c_opt,
            Matrix::zeros(q, nu),
            Matrix::zeros(q, nw),
        )
    }

    pub fn dims(&self) -> AgentDims {
        AgentDims {
            nx: self.a.rows(),
            nu: self.b.cols(),
            nw: self.g.cols(),
            p: self.c_con.rows(),
            q: self.c_opt.rows(),
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dims();
        if d.nx == 0 {
            return Err(Error::DimensionMismatch("agent state dimension must be at least 1".into()));
        }
        let expect = [
            ("A", &self.a, (d.nx, d.nx)),
            ("B", &self.b, (d.nx, d.nu)),
            ("G", &self.g, (d.nx, d.nw)),
            ("C_con", &self.c_con, (d.p, d.nx)),
            ("D_con", &self.d_con, (d.p, d.nu)),
            ("H_con", &self.h_con, (d.p, d.nw)),
            ("C_opt", &self.c_opt, (d.q, d.nx)),
            ("D_opt", &self.d_opt, (d.q, d.nu)),
            ("H_opt", &self.h_opt, (d.q, d.nw)),
        ];
        for (name, m, shape) in expect {
            if m.shape() != shape {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {:?}, expected {shape:?}",
                    m.shape()
                )));
            }
            if !m.is_finite() {
                return Err(Error::InvalidMatrix(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    fn matrices(&self) -> [&Matrix; 9] {
        [
            &self.a, &self.b, &self.g, &self.c_con, &self.d_con, &self.h_con, &self.c_opt, &self.d_opt,
            &self.h_opt,
        ]
    }
}

/// Oracle map `z ↦ w`, used by the simulator only. Must be reentrant.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Serialize, Deserialize)]
pub struct OracleSpec {
    pub bounds: Vec<SectorBound>,
    #[serde(skip)]
    pub evaluator: Option<Evaluator>,
}

impl fmt::Debug for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleSpec")
            .field("bounds", &self.bounds)
            .field("evaluator", &self.evaluator.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl OracleSpec {
    pub fn new(bounds: Vec<SectorBound>, evaluator: Option<Evaluator>) -> Result<Self> {
        let first = bounds.first().ok_or_else(|| Error::EmptyInput("oracle needs at least one sector bound".into()))?;
        if bounds.iter().any(|b| b.dim() != first.dim()) {
            return Err(Error::DimensionMismatch("sector bounds of one oracle differ in size".into()));
        }
        Ok(OracleSpec { bounds, evaluator })
    }

    pub fn dim(&self) -> usize {
        self.bounds[0].dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkOrigin {
    Explicit,
    LaplacianOfGraph,
    AdjacencyOfGraph,
}

/// Coupling `u = M y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub m: Matrix,
    pub origin: NetworkOrigin,
    pub graph: Option<Graph>,
    /// Per-node channel dimension for graph-derived couplings.
    pub channel_dim: usize,
}

impl Network {
    pub fn explicit(m: Matrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidMatrix("coupling matrix has non-finite entries".into()));
        }
        Ok(Network { m, origin: NetworkOrigin::Explicit, graph: None, channel_dim: 1 })
    }

    /// `M = L ⊗ I_channel_dim`.
    pub fn laplacian(graph: &Graph, channel_dim: usize) -> Result<Self> {
        let m = kron(&graph.laplacian_matrix(), &Matrix::identity(channel_dim))?;
        Ok(Network { m, origin: NetworkOrigin::LaplacianOfGraph, graph: Some(graph.clone()), channel_dim })
    }

    pub fn adjacency(graph: &Graph, channel_dim: usize) -> Result<Self> {
        let m = kron(&graph.adjacency(), &Matrix::identity(channel_dim))?;
        Ok(Network { m, origin: NetworkOrigin::AdjacencyOfGraph, graph: Some(graph.clone()), channel_dim })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Agent {
    pub dynamics: AgentDynamics,
    pub oracle: OracleSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributedAlgorithm {
    agents: Vec<Agent>,
    network: Network,
}

impl DistributedAlgorithm {
    pub fn new(agents: Vec<Agent>, network: Network) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyInput("algorithm needs at least one agent".into()));
        }
        for (i, agent) in agents.iter().enumerate() {
            let d = agent.dynamics.dims();
            if agent.oracle.dim() != d.q + d.nw {
                return Err(Error::DimensionMismatch(format!(
                    "agent {}: sector bound of size {} but (z, w) has size {}",
                    i + 1,
                    agent.oracle.dim(),
                    d.q + d.nw
                )));
            }
        }
        let nu: usize = agents.iter().map(|a| a.dynamics.dims().nu).sum();
        let p: usize = agents.iter().map(|a| a.dynamics.dims().p).sum();
        if network.m.shape() != (nu, p) {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix is {:?}, stacked channels need ({nu}, {p})",
                network.m.shape()
            )));
        }
        Ok(DistributedAlgorithm { agents, network })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.agents.iter().map(|a| a.dynamics.dims().nx).sum()
    }

    /// Start offsets of each agent's block in a stacked signal, plus the total.
    pub fn offsets(&self, select: impl Fn(AgentDims) -> usize) -> (Vec<usize>, usize) {
        let mut offs = Vec::with_capacity(self.agents.len());
        let mut acc = 0;
        for a in &self.agents {
            offs.push(acc);
            acc += select(a.dynamics.dims());
        }
        (offs, acc)
    }

    fn stacked(&self, pick: impl Fn(&AgentDynamics) -> &Matrix) -> Matrix {
        let blocks: Vec<Matrix> = self.agents.iter().map(|a| pick(&a.dynamics).clone()).collect();
        block_diag(&blocks).expect("at least one agent")
    }

    pub fn stacked_a(&self) -> Matrix {
        self.stacked(|d| &d.a)
    }
    pub fn stacked_b(&self) -> Matrix {
        self.stacked(|d| &d.b)
    }
    pub fn stacked_g(&self) -> Matrix {
        self.stacked(|d| &d.g)
    }
    pub fn stacked_c_con(&self) -> Matrix {
        self.stacked(|d| &d.c_con)
    }
    pub fn stacked_d_con(&self) -> Matrix {
        self.stacked(|d| &d.d_con)
    }
    pub fn stacked_h_con(&self) -> Matrix {
        self.stacked(|d| &d.h_con)
    }
    pub fn stacked_c_opt(&self) -> Matrix {
        self.stacked(|d| &d.c_opt)
    }

    /// Same model with every sector bound replaced by its strict version.
    pub fn strictified(&self, delta: f64) -> Result<Self> {
        let agents = self
            .agents
            .iter()
            .map(|a| {
                let bounds = a.oracle.bounds.iter().map(|b| b.strictified(delta)).collect::<Result<Vec<_>>>()?;
                Ok(Agent {
                    dynamics: a.dynamics.clone(),
                    oracle: OracleSpec { bounds, evaluator: a.oracle.evaluator.clone() },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DistributedAlgorithm { agents, network: self.network.clone() })
    }

    /// SHA-256 over the canonical JSON encoding of matrices, bounds and coupling.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Detects the largest `n > 1` such that every agent matrix, sector bound
    /// and the coupling matrix have the form `base ⊗ I_n`, and returns the
    /// base model. Oracle evaluators are dropped from the reduced model.
    pub fn kron_reduce(&self) -> Option<(DistributedAlgorithm, usize)> {
        let mut dims = Vec::new();
        for a in &self.agents {
            let d = a.dynamics.dims();
            dims.extend([d.nx, d.nu, d.nw, d.p, d.q]);
        }
        let g = dims.iter().copied().filter(|&d| d > 0).fold(0, gcd);
        (2..=g).rev().filter(|n| g % n == 0).find_map(|n| self.reduce_by(n).map(|base| (base, n)))
    }

    fn reduce_by(&self, n: usize) -> Option<DistributedAlgorithm> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for a in &self.agents {
            let mats = a.dynamics.matrices().map(|m| kron_base(m, n));
            let [a_, b, g, cc, dc, hc, co, dopt, ho] = mats;
            let dynamics = AgentDynamics::new(a_?, b?, g?, cc?, dc?, hc?, co?, dopt?, ho?).ok()?;
            let mut bounds = Vec::with_capacity(a.oracle.bounds.len());
            for bound in &a.oracle.bounds {
                bounds.push(reduce_bound(bound, n)?);
            }
            agents.push(Agent { dynamics, oracle: OracleSpec { bounds, evaluator: None } });
        }
        let m = kron_base(&self.network.m, n)?;
        let network = Network {
            m,
            origin: self.network.origin,
            graph: self.network.graph.clone(),
            channel_dim: if self.network.channel_dim.is_multiple_of(n) { self.network.channel_dim / n } else { 1 },
        };
        DistributedAlgorithm::new(agents, network).ok()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `base` with `m == base ⊗ I_n`, if such a base exists.
fn kron_base(m: &Matrix, n: usize) -> Option<Matrix> {
    if !m.rows().is_multiple_of(n) || !m.cols().is_multiple_of(n) {
        return None;
    }
    let base = Matrix::from_fn(m.rows() / n, m.cols() / n, |r, c| m[(r * n, c * n)]);
    let lifted = kron(&base, &Matrix::identity(n)).ok()?;
    (lifted.max_abs_diff(m) <= 1e-14 * m.max_abs().max(1.0)).then_some(base)
}

fn reduce_bound(bound: &SectorBound, n: usize) -> Option<SectorBound> {
    let s = SymMatrix::new(kron_base(bound.s.as_matrix(), n)?).ok()?;
    let q = s.dim() / 2;
    let origin = match &bound.origin {
        SectorOrigin::Combination { parts } => {
            let mut reduced = Vec::with_capacity(parts.len());
            for (b, w) in parts {
                reduced.push((reduce_bound(b, n)?, *w));
            }
            SectorOrigin::Combination { parts: reduced }
        }
        other => other.clone(),
    };
    // the analytic constructors must reproduce the reduced matrix exactly
    let rebuilt = match &origin {
        SectorOrigin::Monotone { mu } => Some(sector_monotone(*mu, q).ok()?.s),
        SectorOrigin::Lipschitz { k } => Some(sector_lipschitz(*k, q).ok()?.s),
        SectorOrigin::SlopeRestricted { mu, k } => Some(sector_slope_restricted(*mu, *k, q).ok()?.s),
        _ => None,
    };
    if let Some(r) = rebuilt {
        if r.as_matrix().max_abs_diff(s.as_matrix()) > 1e-14 * s.as_matrix().max_abs().max(1.0) {
            return None;
        }
    }
    Some(SectorBound { s, strict: bound.strict, origin })
}

/// Outcome of the well-posedness test.
#[derive(Debug, Clone, PartialEq)]
pub struct WellPosedness {
    /// `I − D̄_con M` is invertible with condition number below the limit.
    pub interconnection_invertible: bool,
    /// `D_opt = 0` and `H_opt = 0` for every agent, so `w = φ(z)` can be
    /// evaluated before the interconnection solve.
    pub explicit_oracle_loop: bool,
    pub condition_number: f64,
    pub diagnostic: String,
}

impl WellPosedness {
    pub fn is_well_posed(&self) -> bool {
        self.interconnection_invertible && self.explicit_oracle_loop
    }
}

pub fn well_posedness(alg: &DistributedAlgorithm) -> WellPosedness {
    let dm = alg.stacked_d_con().matmul(&alg.network.m).expect("dimensions validated");
    let loop_matrix = Matrix::identity(dm.rows()).sub(&dm).expect("square");
    let condition_number = loop_matrix.cond2().unwrap_or(f64::INFINITY);
    let interconnection_invertible = condition_number < WELL_POSED_COND_LIMIT;
    let explicit_oracle_loop = alg
        .agents
        .iter()
        .all(|a| a.dynamics.d_opt.max_abs() == 0.0 && a.dynamics.h_opt.max_abs() == 0.0);
    let mut notes = Vec::new();
    if !interconnection_invertible {
        notes.push(format!("I - D_con M is singular (condition number {condition_number:.3e})"));
    }
    if !explicit_oracle_loop {
        notes.push("nonzero D_opt or H_opt: oracle loop is implicit, simulation unsupported".to_string());
    }
    WellPosedness {
        interconnection_invertible,
        explicit_oracle_loop,
        condition_number,
        diagnostic: if notes.is_empty() { "well-posed".into() } else { notes.join("; ") },
    }
}

pub fn check_well_posed(alg: &DistributedAlgorithm) -> bool {
    well_posedness(alg).is_well_posed()
}

/// PBH detectability of `(C, A)`: every eigenvalue with modulus at least
/// `1 − TOL_STAB` must leave `[A − λI; C]` with full column rank.
pub fn check_detectable(c: &Matrix, a: &Matrix) -> Result<bool> {
    if !a.is_square() || c.cols() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "C is {:?} but A is {:?}",
            c.shape(),
            a.shape()
        )));
    }
    let n = a.rows();
    let norm_a = a.singular_values()?.first().copied().unwrap_or(0.0);
    let tol = PBH_RANK_TOL * norm_a;
    for (re, im) in a.eigenvalues()? {
        if re.hypot(im) < 1.0 - TOL_STAB {
            continue;
        }
        // real embedding of the complex matrix [A − λI; C]
        let q = c.rows();
        let mut emb = Matrix::zeros(2 * (n + q), 2 * n);
        for r in 0..n {
            for col in 0..n {
                let v = a[(r, col)] - if r == col { re } else { 0.0 };
                emb[(r, col)] = v;
                emb[(n + q + r, n + col)] = v;
            }
            emb[(r, n + r)] = im;
            emb[(n + q + r, r)] = -im;
        }
        for r in 0..q {
            for col in 0..n {
                emb[(n + r, col)] = c[(r, col)];
                emb[(2 * n + q + r, n + col)] = c[(r, col)];
            }
        }
        if emb.rank(tol)? < 2 * n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Consensus residual `max_{i,j} ‖y_i − y_j‖₂` and optimality residual
/// `‖Σ_i w_i‖₂` of a stacked fixed point split evenly across `agents`.
pub fn fixed_point_residuals(y_star: &[f64], w_star: &[f64], agents: usize) -> Result<(f64, f64)> {
    if agents == 0 || !y_star.len().is_multiple_of(agents) || !w_star.len().is_multiple_of(agents) {
        return Err(Error::DimensionMismatch(format!(
            "cannot split {} / {} entries across {agents} agents",
            y_star.len(),
            w_star.len()
        )));
    }
    let ys: Vec<&[f64]> = y_star.chunks(y_star.len() / agents).collect();
    let mut consensus: f64 = 0.0;
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            let d = ys[i].iter().zip(ys[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            consensus = consensus.max(d);
        }
    }
    let wdim = w_star.len() / agents;
    let mut total = vec![0.0; wdim];
    for chunk in w_star.chunks(wdim.max(1)) {
        for (t, w) in total.iter_mut().zip(chunk) {
            *t += w;
        }
    }
    let optimality = total.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((consensus, optimality))
}
