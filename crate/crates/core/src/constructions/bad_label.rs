//! Labels y_d = Ψ(ᾱ) + s·v with v ⊥ V and |s| beyond the cone threshold,
//! for which an embedded ᾱ is a spurious local minimum.

use serde::{Deserialize, Serialize};

use super::embed::EmbeddingResult;
use super::saturation::expressiveness_witness;
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::scheme::Scheme;
use crate::yspace::{complement_direction, YVector};

/// Maximum number of doublings of s while chasing a target gap.
const MAX_DOUBLINGS: usize = 30;

/// Where the θ used for a threshold came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSource {
    /// The proof-backed bound 1 − 1/n.
    Cap,
    /// A numerical estimate; not certified.
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadLabel {
    pub y_d: YVector,
    pub s: f64,
    /// Unit direction orthogonal to the embedding subspace.
    pub v: YVector,
    /// Ψ(ᾱ, x_d).
    pub base: YVector,
    pub theta_used: f64,
    pub theta_source: ThetaSource,
    /// √(θ/(1−θ))·‖base‖_Y.
    pub threshold: f64,
}

/// √(θ/(1−θ))·‖base‖, or 0 when the base vanishes.
pub fn s_threshold(theta: f64, base_norm: f64) -> f64 {
    if base_norm == 0.0 {
        0.0
    } else {
        (theta / (1.0 - theta)).sqrt() * base_norm
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..1.0).contains(&theta) {
        Ok(())
    } else {
        Err(invalid(format!("theta must lie in [0, 1), got {theta}")))
    }
}

/// s = multiplier·threshold (s = multiplier if the base is zero).
pub fn bad_label(
    scheme: &Scheme,
    data: &Dataset,
    embedding: &EmbeddingResult,
    multiplier: f64,
    theta: f64,
    source: ThetaSource,
    rng: &mut Rng,
) -> Result<BadLabel> {
    check_theta(theta)?;
    if !(multiplier > 1.0 && multiplier.is_finite()) {
        return Err(invalid("s multiplier must exceed 1"));
    }
    let base = scheme.eval_batch(&embedding.alpha_bar, data)?;
    let v = complement_direction(&embedding.subspace, rng)?;
    let threshold = s_threshold(theta, base.norm());
    let s = if threshold == 0.0 { multiplier } else { multiplier * threshold };
    Ok(assemble(base, v, s, theta, source, threshold))
}

fn assemble(base: YVector, v: YVector, s: f64, theta: f64, source: ThetaSource, threshold: f64) -> BadLabel {
    let mut y_d = base.clone();
    y_d.axpy(s, &v);
    BadLabel { y_d, s, v, base, theta_used: theta, theta_source: source, threshold }
}

/// Like `bad_label`, but s is raised until the explicit witness beats ᾱ by at
/// least `target_gap`. Starts from the smallest s for which a θ-bounded
/// witness would already achieve the gap, then doubles.
#[allow(clippy::too_many_arguments)]
pub fn bad_label_with_gap(
    scheme: &Scheme,
    data: &Dataset,
    embedding: &EmbeddingResult,
    multiplier: f64,
    theta: f64,
    source: ThetaSource,
    target_gap: f64,
    rng: &mut Rng,
) -> Result<BadLabel> {
    if !(target_gap >= 0.0) {
        return Err(invalid("target gap must be nonnegative"));
    }
    let first = bad_label(scheme, data, embedding, multiplier, theta, source, rng)?;
    let base_sq = first.base.norm_sq();
    let needed = ((target_gap + theta * base_sq) / (1.0 - theta)).sqrt() * (1.0 + 1e-9);
    let mut s = first.s.max(needed);
    let mut wrng = rng.clone();
    for _ in 0..=MAX_DOUBLINGS {
        let label = assemble(first.base.clone(), first.v.clone(), s, theta, source, first.threshold);
        let loss_bar = scheme.loss(&embedding.alpha_bar, data, &label.y_d)?;
        let w = expressiveness_witness(scheme, data, &label.y_d, &mut wrng)?;
        if loss_bar - w.witness_loss >= target_gap && w.witness_loss < loss_bar {
            *rng = wrng;
            return Ok(label);
        }
        s *= 2.0;
    }
    Err(Error::SearchFailed(format!("witness gap stayed below {target_gap} after {MAX_DOUBLINGS} doublings of s")))
}
