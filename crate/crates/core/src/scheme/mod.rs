//! Approximation schemes ψ(α, x), their batched evaluation Ψ(α, x_d), the
//! squared loss in Y and its gradients.

pub mod net;
pub mod spline;
pub mod toy;

use serde::{Deserialize, Serialize};

pub use net::Network;

use crate::dataset::Dataset;
use crate::error::{dim, invalid, Result};
use crate::rng::{self, Rng};
use crate::yspace::YVector;

/// Distance to a kink below which a gradient is flagged.
pub const KINK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Scheme {
    /// σ(α₁x + α₂) with the toy lightning activation; not conic.
    ToyLightning,
    /// α₃σ(α₁x + α₂), the conic variant of the toy scheme.
    ConicToy,
    /// α₁x + α₂.
    Linear,
    FreeKnotSpline {
        knots: usize,
    },
    FeedForward(Network),
    ResNet(Network),
}

/// A pre-activation (or sample-on-knot) within `KINK_TOL` of a kink.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkContact {
    pub sample: usize,
    /// Hidden layer (1-based) for networks, 1 for the toy schemes, 0 for splines.
    pub layer: usize,
    /// Unit within the layer, or the knot index for splines.
    pub unit: usize,
    pub preactivation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub grad: Vec<f64>,
    pub kinks: Vec<KinkContact>,
}

impl Gradient {
    pub fn differentiable(&self) -> bool {
        self.kinks.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

impl Scheme {
    pub fn free_knot(knots: usize) -> Result<Self> {
        let s = Scheme::FreeKnotSpline { knots };
        s.validate()?;
        Ok(s)
    }

    pub fn feed_forward(net: Network) -> Result<Self> {
        if net.is_resnet() {
            return Err(invalid("feed-forward scheme given skip matrices"));
        }
        net.validate()?;
        Ok(Scheme::FeedForward(net))
    }

    pub fn res_net(net: Network) -> Result<Self> {
        if !net.is_resnet() {
            return Err(invalid("ResNet scheme needs skip matrices"));
        }
        net.validate()?;
        Ok(Scheme::ResNet(net))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scheme::FreeKnotSpline { knots } if *knots < 3 => Err(invalid("free-knot splines need at least 3 knots")),
            Scheme::FeedForward(n) => {
                if n.is_resnet() {
                    return Err(invalid("feed-forward scheme given skip matrices"));
                }
                n.validate()
            }
            Scheme::ResNet(n) => {
                if !n.is_resnet() {
                    return Err(invalid("ResNet scheme needs skip matrices"));
                }
                n.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ToyLightning => "toy_lightning",
            Scheme::ConicToy => "conic_toy",
            Scheme::Linear => "linear",
            Scheme::FreeKnotSpline { .. } => "free_knot_spline",
            Scheme::FeedForward(_) => "feed_forward",
            Scheme::ResNet(_) => "res_net",
        }
    }

    pub fn network(&self) -> Option<&Network> {
        match self {
            Scheme::FeedForward(n) | Scheme::ResNet(n) => Some(n),
            _ => None,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Scheme::ToyLightning | Scheme::Linear => 2,
            Scheme::ConicToy => 3,
            Scheme::FreeKnotSpline { knots } => 2 * knots,
            Scheme::FeedForward(n) | Scheme::ResNet(n) => n.param_count(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.network().map_or(1, |n| n.input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.network().map_or(1, |n| n.output_dim)
    }

    /// Whether the image Ψ(D, x_d) is a cone.
    pub fn is_conic(&self) -> bool {
        !matches!(self, Scheme::ToyLightning)
    }

    /// Whether every activation is twice differentiable (trivially true for
    /// the linear scheme, false for the piecewise-linear ones).
    pub fn is_smooth(&self) -> bool {
        match self {
            Scheme::Linear => true,
            Scheme::FeedForward(n) | Scheme::ResNet(n) => n.activations.iter().all(|a| a.is_twice_differentiable()),
            _ => false,
        }
    }

    /// Certified upper bound for Θ: 1 − 1/n for conic schemes with an exact or
    /// limiting single-sample fit, 1 otherwise.
    pub fn theta_cap(&self, n: usize) -> f64 {
        match self {
            Scheme::ToyLightning | Scheme::Linear => 1.0,
            _ => 1.0 - 1.0 / n as f64,
        }
    }

    pub fn check_params(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.param_count() {
            return Err(dim(format!("expected {} parameters, got {}", self.param_count(), alpha.len())));
        }
        if let Scheme::FreeKnotSpline { knots } = self {
            spline::check_knots(&alpha[*knots..])?;
        }
        Ok(())
    }

    pub fn in_domain(&self, alpha: &[f64]) -> bool {
        self.check_params(alpha).is_ok() && alpha.iter().all(|a| a.is_finite())
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.dx() != self.input_dim() {
            return Err(dim(format!("scheme expects inputs of dimension {}, data has {}", self.input_dim(), data.dx())));
        }
        Ok(())
    }

    fn check_label(&self, data: &Dataset, y: &YVector) -> Result<()> {
        if y.n() != data.n() || y.dy() != self.output_dim() {
            return Err(dim(format!(
                "label shape ({}, {}) does not match ({}, {})",
                y.n(),
                y.dy(),
                data.n(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// ψ(α, x).
    pub fn eval(&self, alpha: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_params(alpha)?;
        if x.len() != self.input_dim() {
            return Err(dim("input has the wrong dimension"));
        }
        Ok(self.eval_unchecked(alpha, x))
    }

    pub(crate) fn eval_unchecked(&self, alpha: &[f64], x: &[f64]) -> Vec<f64> {
        match self {
            Scheme::ToyLightning => vec![toy::lightning(alpha, x[0])],
            Scheme::ConicToy => vec![toy::conic(alpha, x[0])],
            Scheme::Linear => vec![toy::linear(alpha, x[0])],
            Scheme::FreeKnotSpline { knots } => vec![spline::eval(&alpha[..*knots], &alpha[*knots..], x[0])],
            Scheme::FeedForward(n) | Scheme::ResNet(n) => n.eval(alpha, x),
        }
    }

    /// Ψ(α, x_d).
    pub fn eval_batch(&self, alpha: &[f64], data: &Dataset) -> Result<YVector> {
        self.check_params(alpha)?;
        self.check_data(data)?;
        let mut out = Vec::with_capacity(data.n() * self.output_dim());
        for x in data.inputs() {
            out.extend(self.eval_unchecked(alpha, x));
        }
        YVector::new(data.n(), self.output_dim(), out)
    }

    /// ‖Ψ(α, x_d) − y_d‖²_Y.
    pub fn loss(&self, alpha: &[f64], data: &Dataset, y: &YVector) -> Result<f64> {
        self.check_label(data, y)?;
        let psi = self.eval_batch(alpha, data)?;
        Ok(psi.sub(y)?.norm_sq())
    }

    /// Reverse-mode gradient of the loss, with kink contacts.
    pub fn grad_loss(&self, alpha: &[f64], data: &Dataset, y: &YVector) -> Result<Gradient> {
        self.check_params(alpha)?;
        self.check_data(data)?;
        self.check_label(data, y)?;
        let n = data.n() as f64;
        let mut grad = vec![0.0; self.param_count()];
        let mut kinks = Vec::new();
        for (k, x) in data.inputs().iter().enumerate() {
            match self {
                Scheme::FeedForward(net) | Scheme::ResNet(net) => {
                    let trace = net.trace(alpha, x);
                    let out = trace.post.last().expect("trace has an output");
                    let dout: Vec<f64> = out.iter().zip(y.block(k)).map(|(o, t)| (o - t) / n).collect();
                    net.backprop(alpha, &trace, &dout, &mut grad, k, KINK_TOL, &mut kinks);
                }
                _ => {
                    let w = (self.eval_unchecked(alpha, x)[0] - y.block(k)[0]) / n;
                    self.add_scalar_grad(alpha, x[0], w, &mut grad, k, &mut kinks);
                }
            }
        }
        Ok(Gradient { grad, kinks })
    }

    /// Adds w·∂ψ(α, x)/∂α for the one-dimensional schemes.
    fn add_scalar_grad(&self, alpha: &[f64], x: f64, w: f64, grad: &mut [f64], sample: usize, kinks: &mut Vec<KinkContact>) {
        let toy_kink = |kinks: &mut Vec<KinkContact>| {
            let u = toy::preactivation(alpha, x);
            if crate::activation::Activation::ToyLightning.near_kink(u, KINK_TOL) {
                kinks.push(KinkContact { sample, layer: 1, unit: 0, preactivation: u });
            }
        };
        match self {
            Scheme::ToyLightning => {
                toy_kink(kinks);
                let g = toy::lightning_grad(alpha, x);
                grad[0] += w * g[0];
                grad[1] += w * g[1];
            }
            Scheme::ConicToy => {
                toy_kink(kinks);
                let g = toy::conic_grad(alpha, x);
                for i in 0..3 {
                    grad[i] += w * g[i];
                }
            }
            Scheme::Linear => {
                grad[0] += w * x;
                grad[1] += w;
            }
            Scheme::FreeKnotSpline { knots } => {
                let (coef, kn) = alpha.split_at(*knots);
                for (j, &g) in kn.iter().enumerate() {
                    if (x - g).abs() <= KINK_TOL {
                        kinks.push(KinkContact { sample, layer: 0, unit: j, preactivation: x - g });
                    }
                }
                spline::add_grad(coef, kn, x, w, grad);
            }
            Scheme::FeedForward(_) | Scheme::ResNet(_) => unreachable!("networks use backprop"),
        }
    }

    /// Central finite differences of the loss with h_i = h·(1 + |α_i|).
    pub fn fd_grad(&self, alpha: &[f64], data: &Dataset, y: &YVector, h: f64) -> Result<Vec<f64>> {
        self.check_params(alpha)?;
        let mut a = alpha.to_vec();
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let orig = a[i];
            let step = h * (1.0 + orig.abs());
            a[i] = orig + step;
            let up = self.loss_unchecked(&a, data, y);
            a[i] = orig - step;
            let dn = self.loss_unchecked(&a, data, y);
            a[i] = orig;
            out.push((up - dn) / (2.0 * step));
        }
        Ok(out)
    }

    /// Loss without the domain check; used where finite differences may step
    /// across a knot collision. Shapes must already be validated.
    pub(crate) fn loss_unchecked(&self, alpha: &[f64], data: &Dataset, y: &YVector) -> f64 {
        let mut s = 0.0;
        for (k, x) in data.inputs().iter().enumerate() {
            let out = self.eval_unchecked(alpha, x);
            s += out.iter().zip(y.block(k)).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        }
        s / (2.0 * data.n() as f64)
    }

    /// Jacobian-vector product ∂_αΨ(α, x_d)⟨h⟩.
    pub fn jvp(&self, alpha: &[f64], data: &Dataset, h: &[f64]) -> Result<YVector> {
        self.check_params(alpha)?;
        self.check_data(data)?;
        if h.len() != alpha.len() {
            return Err(dim("direction has the wrong length"));
        }
        let mut out = Vec::with_capacity(data.n() * self.output_dim());
        for (k, x) in data.inputs().iter().enumerate() {
            match self {
                Scheme::FeedForward(n) | Scheme::ResNet(n) => out.extend(n.directional(alpha, h, x).0),
                _ => {
                    let mut g = vec![0.0; alpha.len()];
                    let mut sink = Vec::new();
                    self.add_scalar_grad(alpha, x[0], 1.0, &mut g, k, &mut sink);
                    out.push(g.iter().zip(h).map(|(p, q)| p * q).sum());
                }
            }
        }
        YVector::new(data.n(), self.output_dim(), out)
    }

    /// Second directional derivative ∂²_αΨ(α, x_d)⟨h, h⟩ (networks only).
    pub fn second_directional(&self, alpha: &[f64], data: &Dataset, h: &[f64]) -> Result<YVector> {
        let net = self.network().ok_or_else(|| invalid("second directional derivatives are implemented for networks"))?;
        self.check_params(alpha)?;
        self.check_data(data)?;
        let mut out = Vec::with_capacity(data.n() * self.output_dim());
        for x in data.inputs() {
            out.extend(net.directional(alpha, h, x).1);
        }
        YVector::new(data.n(), self.output_dim(), out)
    }

    /// Copy of α whose image is scaled by `s` (top layer or coefficients).
    pub fn scale_output(&self, alpha: &[f64], s: f64) -> Option<Vec<f64>> {
        let mut a = alpha.to_vec();
        match self {
            Scheme::ToyLightning => return None,
            Scheme::ConicToy => a[2] *= s,
            Scheme::Linear => {
                a[0] *= s;
                a[1] *= s;
            }
            Scheme::FreeKnotSpline { knots } => a[..*knots].iter_mut().for_each(|v| *v *= s),
            Scheme::FeedForward(n) | Scheme::ResNet(n) => a[n.top_layer_range()].iter_mut().for_each(|v| *v *= s),
        }
        Some(a)
    }

    /// Random parameters in the domain; spline knots spread over `span`.
    pub fn random_params(&self, rng: &mut Rng, scale: f64, span: (f64, f64)) -> Vec<f64> {
        match self {
            Scheme::FeedForward(n) | Scheme::ResNet(n) => n.random_params(rng, scale),
            Scheme::FreeKnotSpline { knots } => {
                let mut out: Vec<f64> = (0..*knots).map(|_| scale * rng::gaussian(rng)).collect();
                let width = (span.1 - span.0).max(1e-6);
                loop {
                    let mut g: Vec<f64> =
                        (0..*knots).map(|_| rng::uniform(rng, span.0 - 0.1 * width, span.1 + 0.1 * width)).collect();
                    g.sort_by(f64::total_cmp);
                    if spline::check_knots(&g).is_ok() {
                        out.extend(g);
                        return out;
                    }
                }
            }
            _ => (0..self.param_count()).map(|_| scale * rng::gaussian(rng)).collect(),
        }
    }
}

/// Largest relative componentwise error |g − f| / max(|g|, |f|, floor).
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter().zip(b).map(|(g, f)| (g - f).abs() / g.abs().max(f.abs()).max(floor)).fold(0.0, f64::max)
}
