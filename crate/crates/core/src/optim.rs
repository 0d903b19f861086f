//! Gradient descent with Armijo backtracking and a deterministic multistart
//! wrapper. Objectives return `None` outside their domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::scheme::Scheme;
use crate::yspace::YVector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Relative step of the finite-difference fallback.
    pub fd_step: f64,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self { max_iters: 2000, grad_tol: 1e-8, initial_step: 1.0, armijo: 1e-4, fd_step: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentResult {
    pub alpha: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize `f` from `x0`. Returns `None` if `x0` is outside the domain.
pub fn descend<F, G>(f: F, grad: G, x0: &[f64], settings: &DescentSettings) -> Option<DescentResult>
where
    F: Fn(&[f64]) -> Option<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut step = settings.initial_step;
    let mut g = grad(&x);
    let mut gn = norm(&g);
    let mut iters = 0;
    while iters < settings.max_iters {
        if !(gn > settings.grad_tol) {
            break;
        }
        iters += 1;
        let mut t = (2.0 * step).min(1e6);
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            if let Some(ft) = f(&trial) {
                if ft <= fx - settings.armijo * t * gn * gn {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nx, nf)) = accepted else {
            break;
        };
        step = t;
        x = nx;
        fx = nf;
        g = grad(&x);
        gn = norm(&g);
    }
    Some(DescentResult { converged: gn <= settings.grad_tol, alpha: x, value: fx, grad_norm: gn, iters })
}

/// Loss minimization for a scheme; analytic gradients, switching to finite
/// differences at iterates that touch a kink.
pub fn minimize_loss(scheme: &Scheme, data: &Dataset, y: &YVector, start: &[f64], settings: &DescentSettings) -> Option<DescentResult> {
    let f = |a: &[f64]| {
        if scheme.in_domain(a) {
            Some(scheme.loss_unchecked(a, data, y))
        } else {
            None
        }
    };
    let g = |a: &[f64]| match scheme.grad_loss(a, data, y) {
        Ok(gr) if gr.differentiable() => gr.grad,
        Ok(gr) => scheme.fd_grad(a, data, y, settings.fd_step).unwrap_or(gr.grad),
        Err(_) => vec![0.0; a.len()],
    };
    descend(f, g, start, settings)
}

/// Runs every start (in parallel) and returns all results in start order
/// together with the index of the best one (lowest value, earliest on ties).
pub fn multistart<F>(starts: &[Vec<f64>], run: F) -> (Vec<Option<DescentResult>>, Option<usize>)
where
    F: Fn(&[f64]) -> Option<DescentResult> + Sync,
{
    let results: Vec<Option<DescentResult>> = starts.par_iter().map(|s| run(s)).collect();
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some(r) = r {
            if best.is_none_or(|b| r.value < results[b].as_ref().map_or(f64::INFINITY, |q| q.value)) {
                best = Some(i);
            }
        }
    }
    (results, best)
}
