//! Closed-loop simulation, fixed points of affine instances and empirical
//! error curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::Certificate;
use crate::error::{Error, Result};
use crate::lmi::storage_block;
use crate::matlib::{block_diag, Matrix};
use crate::model::{well_posedness, DistributedAlgorithm, Evaluator, QuadraticCost, WELL_POSED_COND_LIMIT};

/// Floor for `log10` of an error, so exact zeros stay finite.
pub const LOG_FLOOR: f64 = -16.0;

/// Precomputed stacked matrices of a simulatable model.
pub struct Simulator {
    a: Matrix,
    b: Matrix,
    g: Matrix,
    c_opt: Matrix,
    m: Matrix,
    /// `(I − D̄_con M)⁻¹ C̄_con` and `(I − D̄_con M)⁻¹ H̄_con`.
    y_from_x: Matrix,
    y_from_w: Matrix,
    oracles: Vec<Evaluator>,
    z_offsets: Vec<usize>,
    w_offsets: Vec<usize>,
}

impl Simulator {
    pub fn new(alg: &DistributedAlgorithm) -> Result<Self> {
        let wp = well_posedness(alg);
        if !wp.is_well_posed() {
            return Err(Error::ModelError(wp.diagnostic));
        }
        let oracles = alg
            .agents()
            .iter()
            .enumerate()
            .map(|(i, a)| a.oracle.evaluator.clone().ok_or(Error::NoOracleEvaluator(i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let m = alg.network().m.clone();
        let loop_m = Matrix::identity(m.cols()).sub(&alg.stacked_d_con().matmul(&m)?)?;
        let inv = loop_m.inverse()?;
        let (mut z_offsets, q) = alg.offsets(|d| d.q);
        let (mut w_offsets, nw) = alg.offsets(|d| d.nw);
        z_offsets.push(q);
        w_offsets.push(nw);
        Ok(Simulator {
            a: alg.stacked_a(),
            b: alg.stacked_b(),
            g: alg.stacked_g(),
            c_opt: alg.stacked_c_opt(),
            y_from_x: inv.matmul(&alg.stacked_c_con())?,
            y_from_w: inv.matmul(&alg.stacked_h_con())?,
            m,
            oracles,
            z_offsets,
            w_offsets,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn step(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch(format!("state has {} entries, model {}", x.len(), self.state_dim())));
        }
        let z = self.c_opt.mat_vec(x)?;
        let mut w = Vec::with_capacity(self.g.cols());
        for (i, oracle) in self.oracles.iter().enumerate() {
            let zi = &z[self.z_offsets[i]..self.z_offsets[i + 1]];
            let wi = oracle(zi);
            if wi.len() != self.w_offsets[i + 1] - self.w_offsets[i] {
                return Err(Error::DimensionMismatch(format!("oracle {} returned {} values", i + 1, wi.len())));
            }
            w.extend(wi);
        }
        let y: Vec<f64> = self
            .y_from_x
            .mat_vec(x)?
            .iter()
            .zip(self.y_from_w.mat_vec(&w)?)
            .map(|(a, b)| a + b)
            .collect();
        let u = self.m.mat_vec(&y)?;
        let (ax, bu, gw) = (self.a.mat_vec(x)?, self.b.mat_vec(&u)?, self.g.mat_vec(&w)?);
        Ok((0..ax.len()).map(|k| ax[k] + bu[k] + gw[k]).collect())
    }

    pub fn simulate(&self, x0: Vec<f64>, horizon: usize) -> Result<Trajectory> {
        let mut states = Vec::with_capacity(horizon + 1);
        states.push(x0);
        for k in 0..horizon {
            let next = self.step(&states[k])?;
            states.push(next);
        }
        Ok(Trajectory { states })
    }
}

/// One closed-loop update of the stacked state.
pub fn step(alg: &DistributedAlgorithm, x: &[f64]) -> Result<Vec<f64>> {
    Simulator::new(alg)?.step(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }
}

/// `x⁺ = Jx + c` recovered from a model whose oracles are affine, checked on
/// a probe point.
pub fn affine_map(alg: &DistributedAlgorithm) -> Result<(Matrix, Vec<f64>)> {
    let sim = Simulator::new(alg)?;
    let n = sim.state_dim();
    let c = sim.step(&vec![0.0; n])?;
    let mut j = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for col in 0..n {
        e[col] = 1.0;
        let fx = sim.step(&e)?;
        for row in 0..n {
            j[(row, col)] = fx[row] - c[row];
        }
        e[col] = 0.0;
    }
    let probe: Vec<f64> = (0..n).map(|k| 1.0 - 0.37 * k as f64).collect();
    let predicted = j.mat_vec(&probe)?;
    let actual = sim.step(&probe)?;
    let scale = actual.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if predicted.iter().zip(&c).zip(&actual).any(|((p, c), a)| (p + c - a).abs() > 1e-9 * scale) {
        return Err(Error::NotApplicable("closed loop is not affine in the state".into()));
    }
    Ok((j, c))
}

/// The unique fixed point of an affine closed loop, `(I − J) x* = c`.
pub fn fixed_point_affine(alg: &DistributedAlgorithm) -> Result<Vec<f64>> {
    let (j, c) = affine_map(alg)?;
    let system = Matrix::identity(j.rows()).sub(&j)?;
    let cond = system.cond2()?;
    if !(cond < WELL_POSED_COND_LIMIT) {
        return Err(Error::NoUniqueFixedPoint(format!("I - J has condition number {cond:.3e}")));
    }
    system.solve(&c).map_err(|e| Error::NoUniqueFixedPoint(e.to_string()))
}

/// Minimizer of `Σ_i f_i` for scalar-coupled quadratic costs, replicated at
/// every agent in dimension `n`.
pub fn dgd_optimizer(costs: &[QuadraticCost], n: usize) -> Result<Vec<f64>> {
    if costs.is_empty() {
        return Err(Error::EmptyInput("no costs".into()));
    }
    let num: f64 = costs.iter().map(|c| c.a * c.b).sum();
    let den: f64 = costs.iter().map(|c| c.a).sum();
    Ok(vec![num / den; costs.len() * n])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEnsemble {
    pub runs: usize,
    pub seed: u64,
    /// `e(k)` per run, `horizon + 1` entries each.
    pub error_curves: Vec<Vec<f64>>,
    /// Elementwise mean over runs of `log10 e(k)`.
    pub mean_log_error: Vec<f64>,
}

impl RunEnsemble {
    pub fn horizon(&self) -> usize {
        self.mean_log_error.len().saturating_sub(1)
    }
}

fn log_error(e: f64) -> f64 {
    e.log10().max(LOG_FLOOR)
}

/// Uniform initial state for run `run`; independent of how runs are scheduled.
pub fn initial_state(seed: u64, run: u64, dim: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    (0..dim).map(|_| rng.random_range(lo..hi)).collect()
}

/// Error curves `e(k) = ‖x(k) − x_ref‖₂` from `runs` uniform initial states
/// in `init_box`. `reference` defaults to the closed loop's own fixed point.
pub fn error_ensemble(
    alg: &DistributedAlgorithm,
    runs: usize,
    horizon: usize,
    init_box: (f64, f64),
    seed: u64,
    reference: Option<&[f64]>,
) -> Result<RunEnsemble> {
    if runs == 0 {
        return Err(Error::InvalidParameter("need at least one run".into()));
    }
    if !(init_box.0 < init_box.1) {
        return Err(Error::InvalidParameter(format!("empty initial box {init_box:?}")));
    }
    let sim = Simulator::new(alg)?;
    let target = match reference {
        Some(r) if r.len() == sim.state_dim() => r.to_vec(),
        Some(r) => {
            return Err(Error::DimensionMismatch(format!("reference has {} entries, state {}", r.len(), sim.state_dim())))
        }
        None => fixed_point_affine(alg)?,
    };
    let error_curves = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let traj = sim.simulate(initial_state(seed, r, sim.state_dim(), init_box), horizon)?;
            Ok(traj
                .states
                .iter()
                .map(|x| x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_log_error = (0..=horizon)
        .map(|k| error_curves.iter().map(|c| log_error(c[k])).sum::<f64>() / runs as f64)
        .collect();
    Ok(RunEnsemble { runs, seed, error_curves, mean_log_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    /// Largest observed ratio `‖Δx(k+1)‖² / ‖Δx(k)‖²`.
    pub rate_estimate: f64,
    pub per_step_ratios: Vec<f64>,
}

/// Metric `V(Δx) = Σ Δx_iᵀ P_i Δx_i` from a certificate, or Euclidean.
fn metric(alg: &DistributedAlgorithm, cert: Option<&Certificate>) -> Result<Option<Matrix>> {
    let Some(cert) = cert else { return Ok(None) };
    let blocks: Vec<Matrix> = alg
        .agents()
        .iter()
        .enumerate()
        .map(|(i, a)| storage_block(&cert.witness, i, a.dynamics.dims().nx).into_matrix())
        .collect();
    Ok(Some(block_diag(&blocks)?))
}

fn squared_norm(p: Option<&Matrix>, v: &[f64]) -> Result<f64> {
    Ok(match p {
        Some(p) => p.mat_vec(v)?.iter().zip(v).map(|(a, b)| a * b).sum(),
        None => v.iter().map(|x| x * x).sum(),
    })
}

/// Step ratios along given trajectory pairs; pairs with zero increment at a
/// step are skipped at that step.
pub fn contraction_ratios(
    alg: &DistributedAlgorithm,
    pairs: &[(Vec<f64>, Vec<f64>)],
    horizon: usize,
    cert: Option<&Certificate>,
) -> Result<ContractionEstimate> {
    let sim = Simulator::new(alg)?;
    let p = metric(alg, cert)?;
    let mut ratios = Vec::new();
    for (x0, x1) in pairs {
        let (t0, t1) = (sim.simulate(x0.clone(), horizon)?, sim.simulate(x1.clone(), horizon)?);
        let diffs: Vec<Vec<f64>> =
            t0.states.iter().zip(&t1.states).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        for k in 0..horizon {
            let now = squared_norm(p.as_ref(), &diffs[k])?;
            if now > 0.0 {
                ratios.push(squared_norm(p.as_ref(), &diffs[k + 1])? / now);
            }
        }
    }
    let rate_estimate = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ContractionEstimate { rate_estimate, per_step_ratios: ratios })
}

/// Random trajectory pairs from the box `init_box`, then [`contraction_ratios`].
pub fn empirical_contraction(
    alg: &DistributedAlgorithm,
    pairs: usize,
    horizon: usize,
    init_box: (f64, f64),
    seed: u64,
    cert: Option<&Certificate>,
) -> Result<ContractionEstimate> {
    let n = alg.state_dim();
    let samples: Vec<_> = (0..pairs as u64)
        .map(|r| (initial_state(seed, 2 * r, n, init_box), initial_state(seed, 2 * r + 1, n, init_box)))
        .collect();
    contraction_ratios(alg, &samples, horizon, cert)
}
