//! Log-barrier path following for `max t  s.t.  G_j(v) − tI ⪰ 0, lo ≤ v ≤ hi`.
//!
//! Each centering step minimizes
//!
//! ```text
//! −τ t − Σ_j log det(G_j(v) − tI) − Σ_k [log(hi_k − v_k) + log(v_k − lo_k)]
//! ```
//!
//! by damped Newton. Any iterate yields a dual point `Z_j ∝ X_j⁻¹` with
//! `Σ tr Z_j = 1`, from which a rigorous upper bound on `t*` follows:
//!
//! ```text
//! t* ≤ Σ_j tr(Z_j G_j0) + Σ_k max(r_k hi_k, r_k lo_k),   r_k = Σ_j tr(Z_j G_jk)
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One constraint `sign·F_j(v) ⪰ t I` in dense row-major storage.
pub(crate) struct Block {
    pub dim: usize,
    pub constant: Vec<f64>,
    pub terms: Vec<(usize, Vec<f64>)>,
}

pub(crate) struct Problem {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub blocks: Vec<Block>,
}

pub(crate) struct Outcome {
    pub v: Vec<f64>,
    pub t: f64,
    pub upper_bound: f64,
    pub iterations: usize,
}

pub(crate) struct Settings {
    /// Stop as soon as the decision `t > eps` or `ub ≤ eps` is certain.
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub early_exit: bool,
}

const GAP_REL_TOL: f64 = 1e-7;
const CENTER_TOL: f64 = 1e-9;
const TAU_GROWTH: f64 = 10.0;
/// Newton steps allowed per centering before τ is increased regardless.
const MAX_CENTERING_STEPS: usize = 40;

/// Cholesky factor in place; `None` if not positive definite.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

fn inverse_from_cholesky(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[c] = 1.0;
        cholesky_solve(l, n, &mut col);
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    inv
}

fn log_det_from_cholesky(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0
}

fn matmul(a: &[f64], b: &[f64], n: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
}

/// `tr(A B)` for square row-major matrices.
fn trace_prod(a: &[f64], b: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i * n + j] * b[j * n + i];
        }
    }
    s
}

impl Block {
    fn value(&self, v: &[f64], t: f64) -> Vec<f64> {
        let mut x = self.constant.clone();
        for (k, coef) in &self.terms {
            let vk = v[*k];
            if vk != 0.0 {
                for (xi, ci) in x.iter_mut().zip(coef) {
                    *xi += vk * ci;
                }
            }
        }
        for i in 0..self.dim {
            x[i * self.dim + i] -= t;
        }
        x
    }

    /// Smallest eigenvalue estimate via bisection on Cholesky success.
    fn min_eig_lower(&self, v: &[f64]) -> f64 {
        let x = self.value(v, 0.0);
        let n = self.dim;
        let radius = x.iter().map(|a| a.abs()).sum::<f64>().max(1e-300);
        let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let mut shifted = x.clone();
            for i in 0..n {
                shifted[i * n + i] -= mid;
            }
            if cholesky(&shifted, n).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * radius {
                break;
            }
        }
        lo
    }
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl Problem {
    fn nvars(&self) -> usize {
        self.lo.len()
    }

    fn strictly_inside_box(&self, v: &[f64]) -> bool {
        v.iter().zip(&self.lo).zip(&self.hi).all(|((x, lo), hi)| x > lo && x < hi)
    }

    /// Barrier value only; `None` outside the domain.
    fn barrier(&self, v: &[f64], t: f64, tau: f64) -> Option<f64> {
        if !self.strictly_inside_box(v) {
            return None;
        }
        let mut f = -tau * t;
        for b in &self.blocks {
            let l = cholesky(&b.value(v, t), b.dim)?;
            f -= log_det_from_cholesky(&l, b.dim);
        }
        for ((x, lo), hi) in v.iter().zip(&self.lo).zip(&self.hi) {
            f -= (hi - x).ln() + (x - lo).ln();
        }
        Some(f)
    }

    /// Barrier value, gradient and Hessian in `(v, t)`, `t` last.
    fn evaluate(&self, v: &[f64], t: f64, tau: f64) -> Option<Eval> {
        let d = self.nvars();
        let nt = d + 1;
        let mut grad = vec![0.0; nt];
        let mut hess = vec![0.0; nt * nt];
        let mut value = -tau * t;
        grad[d] = -tau;
        for b in &self.blocks {
            let n = b.dim;
            let l = cholesky(&b.value(v, t), n)?;
            value -= log_det_from_cholesky(&l, n);
            let xinv = inverse_from_cholesky(&l, n);
            let mut ws: Vec<(usize, Vec<f64>)> = Vec::with_capacity(b.terms.len());
            for (k, coef) in &b.terms {
                let mut w = vec![0.0; n * n];
                matmul(&xinv, coef, n, &mut w);
                grad[*k] -= (0..n).map(|i| w[i * n + i]).sum::<f64>();
                ws.push((*k, w));
            }
            // t enters as −I
            grad[d] += (0..n).map(|i| xinv[i * n + i]).sum::<f64>();
            hess[d * nt + d] += trace_prod(&xinv, &xinv, n);
            for (a, (ka, wa)) in ws.iter().enumerate() {
                let ht = -trace_prod(wa, &xinv, n);
                hess[ka * nt + d] += ht;
                hess[d * nt + ka] += ht;
                for (kb, wb) in ws.iter().skip(a) {
                    let h = trace_prod(wa, wb, n);
                    hess[ka * nt + kb] += h;
                    if ka != kb {
                        hess[kb * nt + ka] += h;
                    }
                }
            }
        }
        for k in 0..d {
            let (up, down) = (self.hi[k] - v[k], v[k] - self.lo[k]);
            if !(up > 0.0 && down > 0.0) {
                return None;
            }
            value -= up.ln() + down.ln();
            grad[k] += 1.0 / up - 1.0 / down;
            hess[k * nt + k] += 1.0 / (up * up) + 1.0 / (down * down);
        }
        Some(Eval { value, grad, hess })
    }

    /// Rigorous upper bound on `t*` from the dual point `Z_j ∝ X_j(v, t)⁻¹`.
    fn dual_bound(&self, v: &[f64], t: f64) -> Option<f64> {
        let d = self.nvars();
        let mut r = vec![0.0; d];
        let mut c = 0.0;
        let mut total_trace = 0.0;
        for b in &self.blocks {
            let n = b.dim;
            let l = cholesky(&b.value(v, t), n)?;
            let z = inverse_from_cholesky(&l, n);
            total_trace += (0..n).map(|i| z[i * n + i]).sum::<f64>();
            c += trace_prod(&z, &b.constant, n);
            for (k, coef) in &b.terms {
                r[*k] += trace_prod(&z, coef, n);
            }
        }
        if !(total_trace > 0.0) {
            return None;
        }
        let mut ub = c / total_trace;
        for ((rk, hi), lo) in r.iter().zip(&self.hi).zip(&self.lo) {
            let rk = rk / total_trace;
            ub += (rk * hi).max(rk * lo);
        }
        Some(ub)
    }

    fn start(&self, seed: u64) -> (Vec<f64>, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| {
                let width = hi - lo;
                let center = if lo < 0.0 && hi > 0.0 { 0.0 } else { 0.5 * (lo + hi) };
                center + 1e-3 * width * rng.random_range(-0.5..0.5)
            })
            .collect();
        let min_eig = self.blocks.iter().map(|b| b.min_eig_lower(&v)).fold(f64::INFINITY, f64::min);
        let t = min_eig - 1.0 - 0.1 * min_eig.abs();
        (v, t)
    }

    pub(crate) fn solve(&self, settings: &Settings) -> Outcome {
        let d = self.nvars();
        let nt = d + 1;
        let (mut v, mut t) = self.start(settings.seed);
        let barrier_dim: usize = self.blocks.iter().map(|b| b.dim).sum::<usize>() + 2 * d;
        let scale = self.hi.iter().chain(&self.lo).fold(1.0f64, |m, x| m.max(x.abs()));
        let mut tau = barrier_dim as f64 / scale;
        let mut iterations = 0;
        let mut upper_bound = f64::INFINITY;
        let mut step = vec![0.0; nt];
        'outer: loop {
            // centering
            for _ in 0..MAX_CENTERING_STEPS {
                if iterations >= settings.max_iter {
                    break 'outer;
                }
                let Some(eval) = self.evaluate(&v, t, tau) else { break 'outer };
                iterations += 1;
                step.iter_mut().zip(&eval.grad).for_each(|(s, g)| *s = -g);
                let mut reg = 0.0;
                let l = loop {
                    let mut h = eval.hess.clone();
                    for i in 0..nt {
                        h[i * nt + i] += reg;
                    }
                    if let Some(l) = cholesky(&h, nt) {
                        break l;
                    }
                    reg = if reg == 0.0 { 1e-12 * eval.hess[d * nt + d].abs().max(1.0) } else { reg * 100.0 };
                };
                cholesky_solve(&l, nt, &mut step);
                let decrement: f64 = -step.iter().zip(&eval.grad).map(|(s, g)| s * g).sum::<f64>();
                if decrement / 2.0 <= CENTER_TOL * eval.value.abs().max(1.0) {
                    break;
                }
                let mut s = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let cand_v: Vec<f64> = v.iter().zip(&step).map(|(x, dx)| x + s * dx).collect();
                    let cand_t = t + s * step[d];
                    if let Some(f) = self.barrier(&cand_v, cand_t, tau) {
                        if f <= eval.value - 0.25 * s * decrement {
                            v = cand_v;
                            t = cand_t;
                            moved = true;
                            break;
                        }
                    }
                    s *= 0.5;
                }
                if !moved {
                    break;
                }
                if settings.early_exit && t > settings.eps {
                    break 'outer;
                }
            }
            if let Some(ub) = self.dual_bound(&v, t) {
                upper_bound = upper_bound.min(ub);
            }
            if settings.early_exit && (t > settings.eps || upper_bound <= settings.eps) {
                break;
            }
            if upper_bound - t <= GAP_REL_TOL * upper_bound.abs().max(1.0) {
                break;
            }
            // the decision is settled and the gap cannot shrink any further in floating point
            if tau > 1e18 {
                break;
            }
            tau *= TAU_GROWTH;
        }
        Outcome { v, t, upper_bound, iterations }
    }
}
