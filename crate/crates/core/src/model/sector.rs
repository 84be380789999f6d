//! Incremental sector bounds `[Δz; Δw]ᵀ S [Δz; Δw] ≤ 0` on oracle increments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlib::{Matrix, SymMatrix};

/// How a bound was obtained; lets the bound be tightened into a strict one
/// by perturbing its constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectorOrigin {
    Monotone { mu: f64 },
    Lipschitz { k: f64 },
    /// Slopes in `[mu, k]`: `(Δw − μΔz)ᵀ(Δw − KΔz) ≤ 0`, scaled by two.
    SlopeRestricted { mu: f64, k: f64 },
    Combination { parts: Vec<(SectorBound, f64)> },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorBound {
    /// Stacked in the order (Δz, Δw).
    pub s: SymMatrix,
    /// `s(Δz, Δw) < 0` whenever the increment pair is nonzero.
    pub strict: bool,
    pub origin: SectorOrigin,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn two_by_two_blocks(q: usize, zz: f64, zw: f64, ww: f64) -> SymMatrix {
    let mut m = Matrix::zeros(2 * q, 2 * q);
    for i in 0..q {
        m[(i, i)] = zz;
        m[(i, q + i)] = zw;
        m[(q + i, i)] = zw;
        m[(q + i, q + i)] = ww;
    }
    SymMatrix::new(m).expect("square by construction")
}

/// Strong monotonicity with parameter `mu`: `S = [[2μI, −I], [−I, 0]]`.
pub fn sector_monotone(mu: f64, q: usize) -> Result<SectorBound> {
    check_positive("mu", mu)?;
    Ok(SectorBound {
        s: two_by_two_blocks(q, 2.0 * mu, -1.0, 0.0),
        strict: false,
        origin: SectorOrigin::Monotone { mu },
    })
}

/// Lipschitz continuity with constant `k`: `S = [[−K²I, 0], [0, I]]`.
pub fn sector_lipschitz(k: f64, q: usize) -> Result<SectorBound> {
    check_positive("K", k)?;
    Ok(SectorBound {
        s: two_by_two_blocks(q, -k * k, 0.0, 1.0),
        strict: false,
        origin: SectorOrigin::Lipschitz { k },
    })
}

/// Gradients of μ-strongly convex functions with K-Lipschitz gradients:
/// `S = [[2KμI, −(K+μ)I], [−(K+μ)I, 2I]]`.
pub fn sector_slope_restricted(mu: f64, k: f64, q: usize) -> Result<SectorBound> {
    check_positive("mu", mu)?;
    check_positive("K", k)?;
    if mu > k {
        return Err(Error::InvalidParameter(format!("mu = {mu} exceeds K = {k}")));
    }
    Ok(SectorBound {
        s: two_by_two_blocks(q, 2.0 * k * mu, -(k + mu), 2.0),
        strict: false,
        origin: SectorOrigin::SlopeRestricted { mu, k },
    })
}

/// A user-supplied bound matrix of even dimension.
pub fn sector_custom(s: SymMatrix, strict: bool) -> Result<SectorBound> {
    if s.dim() == 0 {
        return Err(Error::DimensionMismatch("empty sector matrix".into()));
    }
    Ok(SectorBound { s, strict, origin: SectorOrigin::Custom })
}

/// Conic combination `Σ w_j S_j`.
pub fn sector_combine(bounds: &[SectorBound], weights: &[f64]) -> Result<SectorBound> {
    let first = bounds.first().ok_or_else(|| Error::EmptyInput("no bounds to combine".into()))?;
    if bounds.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} bounds but {} weights",
            bounds.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParameter("weights are all zero".into()));
    }
    let dim = first.dim();
    if let Some(b) = bounds.iter().find(|b| b.dim() != dim) {
        return Err(Error::DimensionMismatch(format!("bound of dim {} vs {dim}", b.dim())));
    }
    let mut s = SymMatrix::zeros(dim);
    for (b, &w) in bounds.iter().zip(weights) {
        s.axpy(w, &b.s);
    }
    let strict = bounds.iter().zip(weights).any(|(b, &w)| w > 0.0 && b.strict);
    let parts = bounds.iter().cloned().zip(weights.iter().copied()).collect();
    Ok(SectorBound { s, strict, origin: SectorOrigin::Combination { parts } })
}

impl SectorBound {
    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// `s(Δz, Δw)`.
    pub fn value(&self, dz: &[f64], dw: &[f64]) -> Result<f64> {
        let stacked: Vec<f64> = dz.iter().chain(dw).copied().collect();
        self.s.quad_form(&stacked)
    }

    /// Strict version obtained by widening the underlying constants by the
    /// relative amount `delta` (μ shrinks, K grows). Bounds that are already
    /// strict are returned unchanged.
    pub fn strictified(&self, delta: f64) -> Result<SectorBound> {
        if self.strict {
            return Ok(self.clone());
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("perturbation {delta} not in (0, 1)")));
        }
        let q = self.dim() / 2;
        let mut out = match &self.origin {
            SectorOrigin::Monotone { mu } => sector_monotone(mu * (1.0 - delta), q)?,
            SectorOrigin::Lipschitz { k } => sector_lipschitz(k * (1.0 + delta), q)?,
            SectorOrigin::SlopeRestricted { mu, k } => {
                sector_slope_restricted(mu * (1.0 - delta), k * (1.0 + delta), q)?
            }
            SectorOrigin::Combination { parts } => {
                let (bounds, weights): (Vec<_>, Vec<_>) = parts
                    .iter()
                    .map(|(b, w)| Ok((if *w > 0.0 { b.strictified(delta)? } else { b.clone() }, *w)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                sector_combine(&bounds, &weights)?
            }
            SectorOrigin::Custom => {
                return Err(Error::NotApplicable(
                    "a custom non-strict sector bound cannot be tightened automatically".into(),
                ))
            }
        };
        out.strict = true;
        Ok(out)
    }
}
