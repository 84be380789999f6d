//! TOML job description.
//!
//! ```toml
//! [model.dgd]
//! edges = [[1, 2], [2, 3], [3, 4], [4, 2]]
//! rho = [1.05, 0.35, 0.35, 0.35]   # or one value for all agents
//! eta = 0.025
//! mu = 0.05
//! K = 1.0
//! n = 1                 # optional, default 1
//! costs = { a = [0.125, 0.4, 0.475, 0.06], b = [1, 3, -0.5, 4] }   # optional
//!
//! [solver]              # optional, all keys optional
//! B = 1e4
//! eps = 1e-7
//! max_iter = 5000
//! seed = 0
//!
//! [task]                # optional
//! gamma_tol = 1e-3
//! delta = 1e-9
//! init_box = [-25.0, 25.0]
//! ```
//!
//! A general model replaces `[model.dgd]` with `[model.general]`: an
//! `agents` array of tables holding the matrices `A, B, G, C_con, C_opt`
//! (required) and `D_con, H_con, D_opt, H_opt` (zero if omitted) as
//! row-major nested arrays plus a `sectors` list, and either `M = [[…]]` or
//! `graph = { edges = […], kind = "laplacian" | "adjacency", channel_dim = 1 }`.
//! Sector entries are `{ kind = "monotone", mu }`, `{ kind = "lipschitz", K }`,
//! `{ kind = "slope_restricted", mu, K }` or `{ kind = "custom", S, strict }`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use distcert::matlib::{Matrix, SymMatrix};
use distcert::model::{
    dgd_algorithm, sector_custom, sector_lipschitz, sector_monotone, sector_slope_restricted, Agent, AgentDynamics,
    DgdParams, DistributedAlgorithm, Graph, Network, OracleSpec, QuadraticCost, SectorBound,
};
use distcert::sdp::SolverOptions;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub task: TaskSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub dgd: Option<DgdSection>,
    pub general: Option<GeneralSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Steps {
    Common(f64),
    PerAgent(Vec<f64>),
}

impl Steps {
    fn expand(&self, agents: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            Steps::Common(v) => Ok(vec![*v; agents]),
            Steps::PerAgent(v) if v.len() == agents => Ok(v.clone()),
            Steps::PerAgent(v) => bail!("{name} has {} entries for {agents} agents", v.len()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgdSection {
    pub edges: Vec<(usize, usize)>,
    /// Defaults to the largest node index in `edges`.
    pub nodes: Option<usize>,
    pub rho: Steps,
    pub eta: Steps,
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(default = "one")]
    pub n: usize,
    pub costs: Option<CostSection>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSection {
    pub agents: Vec<AgentSection>,
    #[serde(rename = "M")]
    pub m: Option<Vec<Vec<f64>>>,
    pub graph: Option<GraphSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct AgentSection {
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
    pub G: Vec<Vec<f64>>,
    pub C_con: Vec<Vec<f64>>,
    pub C_opt: Vec<Vec<f64>>,
    pub D_con: Option<Vec<Vec<f64>>>,
    pub H_con: Option<Vec<Vec<f64>>>,
    pub D_opt: Option<Vec<Vec<f64>>>,
    pub H_opt: Option<Vec<Vec<f64>>>,
    pub sectors: Vec<SectorSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SectorSection {
    Monotone {
        mu: f64,
    },
    Lipschitz {
        #[serde(rename = "K")]
        k: f64,
    },
    SlopeRestricted {
        mu: f64,
        #[serde(rename = "K")]
        k: f64,
    },
    Custom {
        #[serde(rename = "S")]
        s: Vec<Vec<f64>>,
        #[serde(default)]
        strict: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Laplacian,
    Adjacency,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub edges: Vec<(usize, usize)>,
    pub nodes: Option<usize>,
    pub kind: GraphKind,
    #[serde(default = "one")]
    pub channel_dim: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSection {
    pub gamma_tol: f64,
    pub delta: f64,
    pub init_box: (f64, f64),
}

impl Default for TaskSection {
    fn default() -> Self {
        TaskSection {
            gamma_tol: distcert::certify::DEFAULT_GAMMA_TOL,
            delta: distcert::certify::DEFAULT_DELTA,
            init_box: (-25.0, 25.0),
        }
    }
}

fn graph(edges: &[(usize, usize)], nodes: Option<usize>) -> Result<Graph> {
    let n = match nodes {
        Some(n) => n,
        None => edges.iter().map(|&(a, b)| a.max(b)).max().ok_or_else(|| anyhow!("graph has no edges"))?,
    };
    Ok(Graph::new(n, edges)?)
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<Matrix> {
    Matrix::from_rows(rows).with_context(|| format!("matrix {name}"))
}

impl DgdSection {
    pub fn graph(&self) -> Result<Graph> {
        graph(&self.edges, self.nodes)
    }

    pub fn params(&self) -> Result<DgdParams> {
        let agents = self.graph()?.nodes();
        let p = DgdParams {
            rho: self.rho.expand(agents, "rho")?,
            eta: self.eta.expand(agents, "eta")?,
            mu: self.mu,
            k: self.k,
            n: self.n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn costs(&self) -> Result<Option<Vec<QuadraticCost>>> {
        let Some(c) = &self.costs else { return Ok(None) };
        if c.a.len() != c.b.len() {
            bail!("costs: {} curvatures but {} minimizers", c.a.len(), c.b.len());
        }
        Ok(Some(c.a.iter().zip(&c.b).map(|(&a, &b)| QuadraticCost::new(a, b)).collect::<distcert::Result<_>>()?))
    }
}

fn sector(s: &SectorSection, q: usize) -> Result<SectorBound> {
    Ok(match s {
        SectorSection::Monotone { mu } => sector_monotone(*mu, q)?,
        SectorSection::Lipschitz { k } => sector_lipschitz(*k, q)?,
        SectorSection::SlopeRestricted { mu, k } => sector_slope_restricted(*mu, *k, q)?,
        SectorSection::Custom { s, strict } => sector_custom(SymMatrix::from_rows(s)?, *strict)?,
    })
}

impl GeneralSection {
    pub fn algorithm(&self) -> Result<DistributedAlgorithm> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            let ctx = || format!("agent {}", i + 1);
            let (am, b, g) = (matrix(&a.A, "A")?, matrix(&a.B, "B")?, matrix(&a.G, "G")?);
            let (cc, co) = (matrix(&a.C_con, "C_con")?, matrix(&a.C_opt, "C_opt")?);
            let or_zero = |m: &Option<Vec<Vec<f64>>>, name: &str, r: usize, c: usize| match m {
                Some(rows) => matrix(rows, name),
                None => Ok(Matrix::zeros(r, c)),
            };
            let dc = or_zero(&a.D_con, "D_con", cc.rows(), b.cols())?;
            let hc = or_zero(&a.H_con, "H_con", cc.rows(), g.cols())?;
            let dopt = or_zero(&a.D_opt, "D_opt", co.rows(), b.cols())?;
            let hopt = or_zero(&a.H_opt, "H_opt", co.rows(), g.cols())?;
            let dynamics = AgentDynamics::new(am, b, g, cc, dc, hc, co, dopt, hopt).with_context(ctx)?;
            let q = dynamics.dims().q;
            let bounds = a.sectors.iter().map(|s| sector(s, q)).collect::<Result<Vec<_>>>().with_context(ctx)?;
            agents.push(Agent { dynamics, oracle: OracleSpec::new(bounds, None).with_context(ctx)? });
        }
        let network = match (&self.m, &self.graph) {
            (Some(m), None) => Network::explicit(matrix(m, "M")?)?,
            (None, Some(g)) => {
                let gr = graph(&g.edges, g.nodes)?;
                match g.kind {
                    GraphKind::Laplacian => Network::laplacian(&gr, g.channel_dim)?,
                    GraphKind::Adjacency => Network::adjacency(&gr, g.channel_dim)?,
                }
            }
            _ => bail!("model.general needs exactly one of M or graph"),
        };
        Ok(DistributedAlgorithm::new(agents, network)?)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).context("invalid config")?;
        match (&cfg.model.dgd, &cfg.model.general) {
            (Some(_), None) | (None, Some(_)) => Ok(cfg),
            _ => bail!("config needs exactly one of [model.dgd] or [model.general]"),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn dgd(&self) -> Option<&DgdSection> {
        self.model.dgd.as_ref()
    }

    /// The model, with gradient oracles attached when DGD costs are given.
    pub fn algorithm(&self) -> Result<DistributedAlgorithm> {
        match (&self.model.dgd, &self.model.general) {
            (Some(d), _) => Ok(dgd_algorithm(&d.params()?, &d.graph()?, d.costs()?.as_deref())?),
            (_, Some(g)) => g.algorithm(),
            _ => unreachable!("validated in parse"),
        }
    }
}
