//! Free-knot linear splines: constant outside [γ₁, γ_p], piecewise linear
//! between knots, with parameters (β₁..β_p, γ₁..γ_p).

use crate::error::{Error, Result};

/// Strict knot ordering check; the error names the first violating knot (1-based).
pub fn check_knots(knots: &[f64]) -> Result<()> {
    for j in 1..knots.len() {
        if !(knots[j - 1] < knots[j]) {
            return Err(Error::KnotOrder(j + 1));
        }
    }
    if knots.iter().any(|g| !g.is_finite()) {
        return Err(Error::KnotOrder(0));
    }
    Ok(())
}

/// Which branch `x` falls in: `Left`, `Between(j)` for γ_j < x ≤ γ_{j+1}
/// (0-based j), or `Right`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Left,
    Between(usize),
    Right,
}

pub fn branch(knots: &[f64], x: f64) -> Branch {
    let p = knots.len();
    if x <= knots[0] {
        return Branch::Left;
    }
    if x > knots[p - 1] {
        return Branch::Right;
    }
    // First j with x ≤ γ_{j+1}; knots are sorted, so binary search works.
    let idx = knots.partition_point(|&g| g < x);
    Branch::Between(idx - 1)
}

pub fn eval(coef: &[f64], knots: &[f64], x: f64) -> f64 {
    match branch(knots, x) {
        Branch::Left => coef[0],
        Branch::Right => coef[coef.len() - 1],
        Branch::Between(j) => {
            let (g0, g1) = (knots[j], knots[j + 1]);
            ((g1 - x) * coef[j] + (x - g0) * coef[j + 1]) / (g1 - g0)
        }
    }
}

/// Gradient of ψ w.r.t. (β, γ), added with weight `w` into `grad` (length 2p).
pub fn add_grad(coef: &[f64], knots: &[f64], x: f64, w: f64, grad: &mut [f64]) {
    let p = coef.len();
    match branch(knots, x) {
        Branch::Left => grad[0] += w,
        Branch::Right => grad[p - 1] += w,
        Branch::Between(j) => {
            let (g0, g1) = (knots[j], knots[j + 1]);
            let delta = g1 - g0;
            let jump = coef[j + 1] - coef[j];
            grad[j] += w * (g1 - x) / delta;
            grad[j + 1] += w * (x - g0) / delta;
            grad[p + j] += w * jump * (x - g1) / (delta * delta);
            grad[p + j + 1] += w * -jump * (x - g0) / (delta * delta);
        }
    }
}
