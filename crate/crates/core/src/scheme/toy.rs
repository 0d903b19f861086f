//! One-dimensional two- and three-parameter schemes: the toy lightning
//! scheme σ(α₁x + α₂), its conic repair α₃σ(α₁x + α₂), and the linear
//! scheme α₁x + α₂ used for comparison.

use crate::activation::Activation;

const SIGMA: Activation = Activation::ToyLightning;

pub fn lightning(alpha: &[f64], x: f64) -> f64 {
    SIGMA.eval(alpha[0] * x + alpha[1])
}

pub fn lightning_grad(alpha: &[f64], x: f64) -> [f64; 2] {
    let d = SIGMA.deriv(alpha[0] * x + alpha[1]);
    [d * x, d]
}

pub fn conic(alpha: &[f64], x: f64) -> f64 {
    alpha[2] * SIGMA.eval(alpha[0] * x + alpha[1])
}

pub fn conic_grad(alpha: &[f64], x: f64) -> [f64; 3] {
    let u = alpha[0] * x + alpha[1];
    let d = alpha[2] * SIGMA.deriv(u);
    [d * x, d, SIGMA.eval(u)]
}

pub fn linear(alpha: &[f64], x: f64) -> f64 {
    alpha[0] * x + alpha[1]
}

pub fn preactivation(alpha: &[f64], x: f64) -> f64 {
    alpha[0] * x + alpha[1]
}

/// ᾱ_{l,δ}: slope 3/(minimum input spacing) and offset placing x_l at δ,
/// so that ψ(ᾱ, x_l) = δ and every other sample lands on the flat tails.
pub fn single_sample_params(xs: &[f64], l: usize, delta: f64) -> [f64; 2] {
    let mut spacing = f64::INFINITY;
    for (j, a) in xs.iter().enumerate() {
        for b in &xs[j + 1..] {
            spacing = spacing.min((a - b).abs());
        }
    }
    let slope = 3.0 / spacing;
    [slope, -slope * xs[l] + delta]
}
