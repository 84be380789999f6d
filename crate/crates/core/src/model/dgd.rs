use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    sector_slope_restricted, Agent, AgentDynamics, DistributedAlgorithm, Evaluator, Graph, Network, OracleSpec,
};
use crate::error::{Error, Result};
use crate::matlib::Matrix;

/// Step sizes and cost class of distributed gradient descent
/// `x_i⁺ = x_i − ρ_i (Lx)_i − η_i ∇f_i(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgdParams {
    pub rho: Vec<f64>,
    pub eta: Vec<f64>,
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub n: usize,
}

impl DgdParams {
    /// Same `(rho, eta)` at all `agents`.
    pub fn homogeneous(agents: usize, rho: f64, eta: f64, mu: f64, k: f64, n: usize) -> Self {
        DgdParams { rho: vec![rho; agents], eta: vec![eta; agents], mu, k, n }
    }

    pub fn agents(&self) -> usize {
        self.rho.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.len() != self.eta.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} consensus steps but {} gradient steps",
                self.rho.len(),
                self.eta.len()
            )));
        }
        if self.rho.iter().chain(&self.eta).any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter("step sizes must be positive and finite".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite() && self.k.is_finite() && self.mu <= self.k) {
            return Err(Error::InvalidParameter(format!("need 0 < mu <= K, got mu = {}, K = {}", self.mu, self.k)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("ambient dimension n must be at least 1".into()));
        }
        Ok(())
    }

    /// `Some((ρ, η))` when every agent uses the same steps.
    pub fn common_steps(&self) -> Option<(f64, f64)> {
        let (r, e) = (*self.rho.first()?, *self.eta.first()?);
        (self.rho.iter().all(|&x| x == r) && self.eta.iter().all(|&x| x == e)).then_some((r, e))
    }
}

/// `f(x) = a ‖x − b·1‖²`, gradient `2a (x − b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCost {
    pub a: f64,
    pub b: f64,
}

impl QuadraticCost {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("quadratic cost needs a > 0, got a = {a}")));
        }
        Ok(QuadraticCost { a, b })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.a * x.iter().map(|xi| (xi - self.b) * (xi - self.b)).sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|xi| 2.0 * self.a * (xi - self.b)).collect()
    }

    /// Gradient slope `2a`.
    pub fn curvature(&self) -> f64 {
        2.0 * self.a
    }
}

/// Builds DGD as a network of agents `x⁺ = x − ρ_i u − η_i w`, `y = z = x`,
/// with `u = (L ⊗ I_n) y` and slope-restricted gradient oracles.
pub fn dgd_algorithm(params: &DgdParams, graph: &Graph, costs: Option<&[QuadraticCost]>) -> Result<DistributedAlgorithm> {
    params.validate()?;
    let agents = params.agents();
    if agents < 2 {
        return Err(Error::InvalidParameter("DGD needs at least two agents".into()));
    }
    if graph.nodes() != agents {
        return Err(Error::DimensionMismatch(format!("graph has {} nodes for {agents} agents", graph.nodes())));
    }
    if !graph.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    if let Some(costs) = costs {
        if costs.len() != agents {
            return Err(Error::DimensionMismatch(format!("{} costs for {agents} agents", costs.len())));
        }
        for (i, c) in costs.iter().enumerate() {
            let slope = c.curvature();
            if slope < params.mu || slope > params.k {
                return Err(Error::InvalidParameter(format!(
                    "cost {} has gradient slope {slope}, outside [mu, K] = [{}, {}]",
                    i + 1,
                    params.mu,
                    params.k
                )));
            }
        }
    }
    let n = params.n;
    let eye = Matrix::identity(n);
    let bound = sector_slope_restricted(params.mu, params.k, n)?;
    let mut list = Vec::with_capacity(agents);
    for i in 0..agents {
        let dynamics = AgentDynamics::without_feedthrough(
            eye.clone(),
            eye.scale(-params.rho[i]),
            eye.scale(-params.eta[i]),
            eye.clone(),
            eye.clone(),
        )?;
        let evaluator = costs.map(|c| {
            let cost = c[i];
            Arc::new(move |z: &[f64]| cost.gradient(z)) as Evaluator
        });
        list.push(Agent { dynamics, oracle: OracleSpec::new(vec![bound.clone()], evaluator)? });
    }
    DistributedAlgorithm::new(list, Network::laplacian(graph, n)?)
}
