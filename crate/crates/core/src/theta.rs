//! Bounds and numerical estimates for Θ, the worst-case squared relative
//! approximation error over unit labels, and the thresholds derived from it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::saturation::expressiveness_witness;
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::optim::{minimize_loss, multistart, DescentSettings};
use crate::rng::{self, task_rng};
use crate::scheme::Scheme;
use crate::yspace::YVector;

pub use crate::constructions::bad_label::s_threshold;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSample {
    pub y_d: YVector,
    pub best_loss: f64,
    pub witness_loss: f64,
    pub starts_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    /// Largest best loss found over the sampled unit labels. Not certified.
    pub heuristic: f64,
    /// Proof-backed upper bound.
    pub cap: f64,
    pub certified: bool,
    pub samples: Vec<ThetaSample>,
}

/// Exact interpolant when the scheme can hit every label at these inputs
/// (free-knot with n ≤ p, the linear scheme with n = 2).
fn interpolating_start(scheme: &Scheme, data: &Dataset, y: &YVector) -> Option<Vec<f64>> {
    let xs = data.scalars()?;
    match scheme {
        Scheme::FreeKnotSpline { knots } if data.n() <= *knots => {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
            let mut gamma: Vec<f64> = idx.iter().map(|&k| xs[k]).collect();
            let mut beta: Vec<f64> = idx.iter().map(|&k| y.block(k)[0]).collect();
            let last = *gamma.last()?;
            let spacing = (last - gamma[0]).max(1.0);
            while gamma.len() < *knots {
                gamma.push(last + spacing * (gamma.len() + 1 - idx.len()) as f64);
                beta.push(*beta.last()?);
            }
            beta.extend(gamma);
            Some(beta)
        }
        Scheme::Linear if data.n() == 2 => {
            let slope = (y.block(1)[0] - y.block(0)[0]) / (xs[1] - xs[0]);
            Some(vec![slope, y.block(0)[0] - slope * xs[0]])
        }
        _ => None,
    }
}

/// Multistart estimate of the best loss for one label: the explicit witness
/// (and an exact interpolant when one exists) plus random starts.
pub fn best_loss(
    scheme: &Scheme,
    data: &Dataset,
    y: &YVector,
    num_starts: usize,
    settings: &DescentSettings,
    seed: u64,
) -> Result<ThetaSample> {
    let mut rng = rng::seeded(seed);
    let witness = expressiveness_witness(scheme, data, y, &mut rng)?;
    let span = data.scalars().map_or((-1.0, 1.0), |xs| {
        (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    });
    let mut starts = vec![witness.alpha.clone()];
    starts.extend(interpolating_start(scheme, data, y));
    for _ in 0..num_starts {
        starts.push(scheme.random_params(&mut rng, 1.0, span));
    }
    let (results, best) = multistart(&starts, |s| minimize_loss(scheme, data, y, s, settings));
    let found = best.and_then(|i| results[i].as_ref()).map_or(f64::INFINITY, |r| r.value);
    Ok(ThetaSample {
        y_d: y.clone(),
        best_loss: found.min(witness.witness_loss),
        witness_loss: witness.witness_loss,
        starts_used: starts.len(),
    })
}

/// Heuristic Θ: max over `num_labels` random unit labels of the best loss found.
pub fn theta_heuristic(
    scheme: &Scheme,
    data: &Dataset,
    num_labels: usize,
    num_starts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<ThetaEstimate> {
    let settings = DescentSettings { max_iters, ..DescentSettings::default() };
    let dy = scheme.output_dim();
    let samples = (0..num_labels)
        .into_par_iter()
        .map(|i| {
            let mut r = task_rng(seed, i as u64);
            let y = YVector::random_unit(data.n(), dy, &mut r);
            best_loss(scheme, data, &y, num_starts, &settings, rng::child_seed(&mut r))
        })
        .collect::<Result<Vec<_>>>()?;
    let heuristic = samples.iter().map(|s| s.best_loss).fold(0.0, f64::max);
    Ok(ThetaEstimate { heuristic, cap: scheme.theta_cap(data.n()), certified: false, samples })
}

/// Label norm C·√((dim Y − 1)/(2·dim Y·(θ − θ²))) at which best approximations
/// of two nearby labels can be 2C apart.
pub fn instability_scale(theta: f64, dim_y: usize, c: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid(format!("theta must lie in (0, 1), got {theta}")));
    }
    if dim_y == 0 {
        return Err(invalid("dim Y must be positive"));
    }
    let d = dim_y as f64;
    Ok(c * ((d - 1.0) / (2.0 * d * (theta - theta * theta))).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::scheme::Network;

    #[test]
    fn instability_formula() {
        assert!((instability_scale(0.5, 2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(instability_scale(1e-13, 4, 1.0).unwrap() > 1e6);
        assert!(instability_scale(1.0 - 1e-13, 4, 1.0).unwrap() > 1e6);
        let a = instability_scale(0.3, 5, 1.0).unwrap();
        assert!((instability_scale(0.3, 5, 2.0).unwrap() - 2.0 * a).abs() < 1e-15);
        assert!(instability_scale(0.0, 3, 1.0).is_err());
    }

    #[test]
    fn interpolating_free_knot_has_zero_heuristic() {
        let d = Dataset::from_scalars(&[0.0, 0.7, 1.5]).unwrap();
        let est = theta_heuristic(&Scheme::free_knot(3).unwrap(), &d, 10, 2, 200, 1).unwrap();
        assert!(est.heuristic <= 1e-6, "{}", est.heuristic);
    }

    #[test]
    fn free_knot_overdetermined_is_positive_and_capped() {
        let d = Dataset::from_scalars(&[0.0, 0.3, 0.7, 1.0, 1.6, 2.0]).unwrap();
        let s = Scheme::free_knot(3).unwrap();
        let est = theta_heuristic(&s, &d, 8, 4, 500, 2).unwrap();
        assert!(est.heuristic > 0.0);
        assert!(est.heuristic <= est.cap + 1e-12);
        for smp in &est.samples {
            assert!(smp.witness_loss <= 1.0 - 1.0 / 6.0 + 1e-12);
            assert!(smp.best_loss <= smp.witness_loss);
        }
    }

    #[test]
    fn realizable_pattern_has_zero_loss() {
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let s = Scheme::feed_forward(Network::uniform(1, 1, &[2], Activation::Heaviside { c: 0.5 }).unwrap()).unwrap();
        let y = YVector::single_block(4, 1, 2, &[2f64.sqrt() * 2.0]).unwrap();
        let smp = best_loss(&s, &d, &y, 0, &DescentSettings::default(), 0).unwrap();
        assert!(smp.best_loss <= 1e-15);
    }
}
