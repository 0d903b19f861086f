//! Parameters ᾱ with a certified ∞-ball on which Ψ(·, x_d) maps into a proper
//! subspace V: affine-segment networks (V = affine functions of x), constant
//! segments (V = constants) and free-knot splines (V = affine functions).

use serde::{Deserialize, Serialize};

use super::poly::{constant_space_basis, poly_space_basis};
use crate::activation::Activation;
use crate::dataset::Dataset;
use crate::error::{dim, invalid, Error, Result};
use crate::rng::{self, Rng};
use crate::scheme::{Network, Scheme};
use crate::yspace::SubspaceBasis;

/// Outward slack applied to every interval bound.
const SLACK: f64 = 1e-12;
const BISECTIONS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum EmbeddingRoute {
    AffineSegments,
    ConstantSegment { layer: usize },
    FreeKnotLine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub alpha_bar: Vec<f64>,
    /// ∞-norm radius ρ of the certified neighbourhood.
    pub neighborhood_radius: f64,
    pub subspace: SubspaceBasis,
    pub route: EmbeddingRoute,
}

impl EmbeddingResult {
    /// Largest distance to V of Ψ(ᾱ + h) over `samples` uniform draws with
    /// ‖h‖∞ ≤ ρ (ᾱ itself included).
    pub fn membership_residual(&self, scheme: &Scheme, data: &Dataset, samples: usize, rng: &mut Rng) -> Result<f64> {
        let rho = self.neighborhood_radius;
        let mut worst = self.subspace.distance(&scheme.eval_batch(&self.alpha_bar, data)?)?;
        for _ in 0..samples {
            let a: Vec<f64> = self.alpha_bar.iter().map(|v| v + rng::uniform(rng, -rho, rho)).collect();
            worst = worst.max(self.subspace.distance(&scheme.eval_batch(&a, data)?)?);
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, Debug)]
struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn widened(c: f64, r: f64) -> Self {
        Self { lo: c - r, hi: c + r }
    }

    fn mul(self, o: Self) -> Self {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Self { lo: p.iter().copied().fold(f64::INFINITY, f64::min), hi: p.iter().copied().fold(f64::NEG_INFINITY, f64::max) }
    }

    fn add(self, o: Self) -> Self {
        Self { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }

    fn outward(self) -> Self {
        Self { lo: self.lo - SLACK * (1.0 + self.lo.abs()), hi: self.hi + SLACK * (1.0 + self.hi.abs()) }
    }
}

/// Required open interval (lo, hi) for the pre-activations of a hidden layer, if any.
type LayerConstraint = Option<(f64, f64)>;

/// Whether every parameter within ∞-distance ρ of α keeps each constrained
/// hidden pre-activation strictly inside its interval, for every sample.
fn ball_is_certified(net: &Network, alpha: &[f64], data: &Dataset, constraints: &[LayerConstraint], rho: f64) -> bool {
    let layers = net.unpack(alpha);
    for x in data.inputs() {
        let mut z: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
        for (i, (a, b)) in layers.iter().enumerate().take(net.depth()) {
            let act: Activation = net.activations[i];
            let mut next = Vec::with_capacity(a.len());
            for (row, &bias) in a.iter().zip(b) {
                let mut pre = Interval::widened(bias, rho);
                for (&w, &zi) in row.iter().zip(&z) {
                    pre = pre.add(Interval::widened(w, rho).mul(zi));
                }
                let pre = pre.outward();
                if !(pre.lo.is_finite() && pre.hi.is_finite()) {
                    return false;
                }
                if let Some((lo, hi)) = constraints[i] {
                    if !(pre.lo > lo && pre.hi < hi) {
                        return false;
                    }
                }
                let (lo, hi) = act.range(pre.lo, pre.hi);
                next.push(Interval { lo, hi }.outward());
            }
            z = next;
        }
    }
    true
}

fn op_inf_norm(a: &[Vec<f64>]) -> f64 {
    a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest certified radius: start from margin/(1 + Σ‖A_i‖∞ + max‖x‖∞),
/// grow by doubling while certified, then bisect.
fn certify_radius(net: &Network, alpha: &[f64], data: &Dataset, constraints: &[LayerConstraint], margin: f64) -> Result<f64> {
    let norms: f64 = net.unpack(alpha).iter().map(|(a, _)| op_inf_norm(a)).sum();
    let mut good = 0.0;
    let mut bad;
    let mut guess = margin / (1.0 + norms + data.max_abs());
    if ball_is_certified(net, alpha, data, constraints, guess) {
        good = guess;
        bad = f64::INFINITY;
        for _ in 0..60 {
            let g = 2.0 * good;
            if ball_is_certified(net, alpha, data, constraints, g) {
                good = g;
            } else {
                bad = g;
                break;
            }
        }
        if bad.is_infinite() {
            return Ok(good);
        }
    } else {
        bad = guess;
        for _ in 0..200 {
            guess *= 0.5;
            if ball_is_certified(net, alpha, data, constraints, guess) {
                good = guess;
                break;
            }
            bad = guess;
        }
        if good == 0.0 {
            return Err(Error::SearchFailed("no certified neighbourhood radius".into()));
        }
    }
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (good + bad);
        if ball_is_certified(net, alpha, data, constraints, mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

fn feed_forward_net(scheme: &Scheme) -> Result<&Network> {
    match scheme {
        Scheme::FeedForward(n) => Ok(n),
        _ => Err(Error::Hypothesis(format!("embedding needs a feed-forward network, got {}", scheme.name()))),
    }
}

/// Smallest distance of the hidden pre-activations at ᾱ to the boundaries of
/// their constraint intervals.
fn constraint_margin(net: &Network, alpha: &[f64], data: &Dataset, constraints: &[LayerConstraint]) -> f64 {
    let mut margin = f64::INFINITY;
    for x in data.inputs() {
        let t = net.trace(alpha, x);
        for (i, c) in constraints.iter().enumerate() {
            if let Some((lo, hi)) = c {
                for &u in &t.pre[i] {
                    margin = margin.min(u - lo).min(hi - u);
                }
            }
        }
    }
    margin
}

/// Network realizing x ↦ A x + b exactly, with every hidden pre-activation
/// inside its activation's affine segment.
pub fn affine_embed(scheme: &Scheme, data: &Dataset, a: &[Vec<f64>], b: &[f64]) -> Result<EmbeddingResult> {
    let net = feed_forward_net(scheme)?;
    let (dx, dy) = (net.input_dim, net.output_dim);
    if data.dx() != dx || a.len() != dy || a.iter().any(|r| r.len() != dx) || b.len() != dy {
        return Err(dim("affine map must be d_y × d_x with a length-d_y offset"));
    }
    let segs = net
        .activations
        .iter()
        .enumerate()
        .map(|(i, act)| {
            let s = act
                .affine_segment()
                .ok_or_else(|| Error::Hypothesis(format!("activation {} in layer {} has no affine segment", act.name(), i + 1)))?;
            if !(s.radius > 0.0) || s.slope == 0.0 {
                return Err(Error::Hypothesis("affine segment is degenerate".into()));
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let min_width = *net.widths.iter().min().expect("networks have hidden layers");
    // Carry x itself when it fits through every layer, otherwise carry A x.
    let carry_input = dx <= min_width;
    if !carry_input && dy > min_width {
        return Err(Error::Hypothesis(format!("min(d_x, d_y) = {} exceeds the smallest width {min_width}", dx.min(dy))));
    }
    let m = if carry_input { dx } else { dy };
    let carried = |x: &[f64]| -> Vec<f64> {
        if carry_input {
            x.to_vec()
        } else {
            a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
        }
    };
    let bound = data.inputs().iter().map(|x| carried(x).iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);
    let scales: Vec<f64> = segs.iter().map(|s| s.radius / (2.0 * bound + 1.0)).collect();
    let depth = net.depth();
    let mut layers = Vec::with_capacity(depth + 1);
    for i in 0..depth {
        let (rows, cols) = (net.width(i + 1), net.width(i));
        let mut w = vec![vec![0.0; cols]; rows];
        let mut bias = vec![segs[i].centre; rows];
        if i == 0 {
            for r in 0..m {
                if carry_input {
                    w[r][r] = scales[0];
                } else {
                    w[r] = a[r].iter().map(|v| scales[0] * v).collect();
                }
            }
        } else {
            let prev = &segs[i - 1];
            let f = scales[i] / (prev.slope * scales[i - 1]);
            let level = prev.slope * prev.centre + prev.intercept;
            for r in 0..m {
                w[r][r] = f;
                bias[r] -= level * f;
            }
        }
        layers.push((w, bias));
    }
    let last = &segs[depth - 1];
    let f = 1.0 / (last.slope * scales[depth - 1]);
    let level = last.slope * last.centre + last.intercept;
    let mut top = vec![vec![0.0; net.width(depth)]; dy];
    let mut top_b = b.to_vec();
    for (r, row) in top.iter_mut().enumerate() {
        for j in 0..m {
            let coef = if carry_input { a[r][j] } else if r == j { 1.0 } else { 0.0 };
            row[j] = coef * f;
            top_b[r] -= coef * f * level;
        }
    }
    layers.push((top, top_b));
    let alpha = net.pack(&layers)?;
    let constraints: Vec<LayerConstraint> = segs.iter().map(|s| Some((s.centre - s.radius, s.centre + s.radius))).collect();
    let margin = constraint_margin(net, &alpha, data, &constraints);
    let rho = certify_radius(net, &alpha, data, &constraints, margin)?;
    Ok(EmbeddingResult {
        alpha_bar: alpha,
        neighborhood_radius: rho,
        subspace: poly_space_basis(data, 1, dy)?,
        route: EmbeddingRoute::AffineSegments,
    })
}

/// Network with all weight matrices zero, the first constant-segment layer
/// biased to the segment centre, and output bias `b`.
pub fn constant_embed(scheme: &Scheme, data: &Dataset, b: &[f64]) -> Result<EmbeddingResult> {
    let net = feed_forward_net(scheme)?;
    if b.len() != net.output_dim {
        return Err(dim("constant must have length d_y"));
    }
    if data.dx() != net.input_dim {
        return Err(dim("data dimension does not match the network input"));
    }
    let (j, seg) = net
        .activations
        .iter()
        .enumerate()
        .find_map(|(i, a)| a.constant_segment().map(|s| (i, s)))
        .ok_or_else(|| Error::Hypothesis("no hidden activation has a constant segment".into()))?;
    if !(seg.radius > 0.0) {
        return Err(Error::Hypothesis("constant segment is degenerate".into()));
    }
    let mut alpha = vec![0.0; net.param_count()];
    for r in 0..net.width(j + 1) {
        alpha[net.b_index(j + 1, r)] = seg.centre;
    }
    for (r, &v) in b.iter().enumerate() {
        alpha[net.b_index(net.depth() + 1, r)] = v;
    }
    let mut constraints: Vec<LayerConstraint> = vec![None; net.depth()];
    constraints[j] = Some((seg.centre - seg.radius, seg.centre + seg.radius));
    let rho = certify_radius(net, &alpha, data, &constraints, seg.radius)?;
    Ok(EmbeddingResult {
        alpha_bar: alpha,
        neighborhood_radius: rho,
        subspace: constant_space_basis(data.n(), net.output_dim)?,
        route: EmbeddingRoute::ConstantSegment { layer: j + 1 },
    })
}

/// Spline equal to a·x + b on the samples: two knots enclosing every input,
/// remaining knots to the right, coefficients on the line.
pub fn freeknot_affine_embed(scheme: &Scheme, data: &Dataset, a: f64, b: f64) -> Result<EmbeddingResult> {
    let Scheme::FreeKnotSpline { knots } = scheme else {
        return Err(Error::Hypothesis(format!("free-knot embedding needs a spline scheme, got {}", scheme.name())));
    };
    let p = *knots;
    let xs = data.scalars().ok_or_else(|| dim("free-knot splines need scalar inputs"))?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(invalid("line coefficients must be finite"));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = 0.5 * (hi - lo).max(1.0);
    let mut gamma = vec![lo - delta, hi + delta];
    for j in 3..=p {
        gamma.push(hi + delta * (j - 1) as f64);
    }
    let mut alpha: Vec<f64> = gamma.iter().map(|g| a * g + b).collect();
    alpha.extend(&gamma);
    // Samples stay strictly between the first two knots and knots stay
    // ordered while every knot moves by less than half of δ.
    let rho = 0.5 * delta * (1.0 - 1e-9);
    Ok(EmbeddingResult {
        alpha_bar: alpha,
        neighborhood_radius: rho,
        subspace: poly_space_basis(data, 1, 1)?,
        route: EmbeddingRoute::FreeKnotLine,
    })
}
