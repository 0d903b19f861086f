//! Single-sample fits: parameters whose batched output is (close to) the
//! pattern y_l·e_l, built from a virtual Heaviside network and realized with
//! saturated step-type or difference-type activations.

use serde::{Deserialize, Serialize};

use super::separation::{separating_hyperplane, Separation};
use crate::activation::Activation;
use crate::dataset::Dataset;
use crate::error::{dim, invalid, Error, Result};
use crate::rng::Rng;
use crate::scheme::{toy, Network, Scheme};
use crate::yspace::YVector;

/// Gain used by witnesses built from saturating activations.
pub const DEFAULT_GAIN: f64 = 1e6;

/// Gain used for the per-layer scale of ResNet realizations.
pub const RESNET_GAIN: f64 = 1e9;

type Layer = (Vec<Vec<f64>>, Vec<f64>);

/// How a hidden layer emulates a Heaviside unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    /// σ(γs) itself tends to a step with limits (lo, hi).
    Step { lo: f64, hi: f64 },
    /// σ(γs) − σ(γs − 1) tends to a step with limits (lo, hi); uses paired rows.
    Difference { lo: f64, hi: f64 },
}

impl LayerKind {
    fn of(act: &Activation) -> Option<Self> {
        if let Some((lo, hi)) = act.saturation_limits() {
            Some(LayerKind::Step { lo, hi })
        } else {
            act.relu_type_limits().map(|(lo, hi)| LayerKind::Difference { lo, hi })
        }
    }

    fn limits(&self) -> (f64, f64) {
        match *self {
            LayerKind::Step { lo, hi } | LayerKind::Difference { lo, hi } => (lo, hi),
        }
    }

    /// Number of emulated Heaviside units a layer of `width` provides.
    fn virtual_width(&self, width: usize) -> usize {
        match self {
            LayerKind::Step { .. } => width,
            LayerKind::Difference { .. } => width / 2,
        }
    }
}

/// Order in which hidden layers are pushed into saturation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationOrder {
    /// Gain γ·2^{L−i} at layer i: the bottom layer is the most saturated.
    BottomUp,
    /// Gain γ·2^{i−1}: the top hidden layer is the most saturated.
    TopDown,
}

impl SaturationOrder {
    fn gains(&self, gamma: f64, depth: usize) -> Vec<f64> {
        (1..=depth)
            .map(|i| match self {
                SaturationOrder::BottomUp => gamma * 2f64.powi((depth - i) as i32),
                SaturationOrder::TopDown => gamma * 2f64.powi(i as i32 - 1),
            })
            .collect()
    }
}

/// Which construction produced a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessRoute {
    SingleSampleToy,
    ConicToyScaling,
    LeastSquaresLine,
    FreeKnotHat,
    HeavisideUnit,
    SaturatedSteps,
    LeakyHat,
    ResNetLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub alpha: Vec<f64>,
    pub witness_loss: f64,
    pub route: WitnessRoute,
    /// Sample whose block is fitted.
    pub sample: usize,
}

fn net_of(scheme: &Scheme) -> Result<&Network> {
    scheme.network().ok_or_else(|| invalid(format!("{} is not a network scheme", scheme.name())))
}

fn check_common(net: &Network, data: &Dataset, y_l: &[f64], l: usize) -> Result<()> {
    if data.dx() != net.input_dim {
        return Err(dim("data dimension does not match the network input"));
    }
    if y_l.len() != net.output_dim {
        return Err(dim("target block has the wrong dimension"));
    }
    if l >= data.n() {
        return Err(invalid(format!("sample index {l} out of range")));
    }
    Ok(())
}

/// Layers of a Heaviside network with the given hidden widths whose output is
/// y_l at x_l and 0 elsewhere. Every hidden pre-activation is nonzero.
fn unit_pattern_layers(sep: &Separation, dx: usize, widths: &[usize], y_l: &[f64]) -> Vec<Layer> {
    let depth = widths.len();
    let mut layers = Vec::with_capacity(depth + 1);
    let mut first = (vec![vec![0.0; dx]; widths[0]], vec![0.0; widths[0]]);
    first.0[0] = sep.matrix[0].clone();
    first.0[1] = sep.matrix[1].clone();
    first.1[0] = sep.bias[0];
    first.1[1] = sep.bias[1];
    layers.push(first);
    for i in 1..depth {
        let (rows, cols) = (widths[i], widths[i - 1]);
        let mut a = vec![vec![0.0; cols]; rows];
        if i == 1 {
            a[0][0] = 1.0;
            a[0][1] = -1.0;
        } else {
            a[0][0] = 1.0;
        }
        layers.push((a, vec![-0.5; rows]));
    }
    let last = widths[depth - 1];
    let mut top = vec![vec![0.0; last]; y_l.len()];
    for (row, &v) in top.iter_mut().zip(y_l) {
        row[0] = v;
        if depth == 1 {
            row[1] = -v;
        }
    }
    layers.push((top, vec![0.0; y_l.len()]));
    layers
}

/// Exact single-sample fit for an all-Heaviside feed-forward network.
pub fn heaviside_unit_fit(scheme: &Scheme, data: &Dataset, y_l: &[f64], l: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let net = net_of(scheme)?;
    check_common(net, data, y_l, l)?;
    if net.is_resnet() {
        return Err(Error::Hypothesis("Heaviside unit fit needs a feed-forward network".into()));
    }
    if !net.activations.iter().all(Activation::is_heaviside) {
        return Err(Error::Hypothesis("every hidden activation must be Heaviside".into()));
    }
    if net.width(1) < 2 {
        return Err(Error::Hypothesis("the first hidden layer needs width at least 2".into()));
    }
    let sep = separating_hyperplane(data, l, rng)?;
    net.pack(&unit_pattern_layers(&sep, data.dx(), &net.widths, y_l))
}

/// Per-layer emulation kinds if the network meets the saturation hypotheses:
/// every activation step- or difference-type, w_i ≥ 2 for difference layers,
/// w₁ ≥ 2 (step) or w₁ ≥ 4 (difference).
pub fn saturation_kinds(net: &Network) -> Result<Vec<LayerKind>> {
    let mut kinds = Vec::with_capacity(net.depth());
    for (i, act) in net.activations.iter().enumerate() {
        let kind = LayerKind::of(act)
            .ok_or_else(|| Error::Hypothesis(format!("activation {} in layer {} is neither step- nor ReLU-type", act.name(), i + 1)))?;
        let need = match (i, kind) {
            (0, LayerKind::Step { .. }) => 2,
            (0, LayerKind::Difference { .. }) => 4,
            (_, LayerKind::Step { .. }) => 1,
            (_, LayerKind::Difference { .. }) => 2,
        };
        if net.widths[i] < need {
            return Err(Error::Hypothesis(format!("layer {} has width {} but needs at least {need}", i + 1, net.widths[i])));
        }
        kinds.push(kind);
    }
    Ok(kinds)
}

/// Virtual Heaviside layers rescaled so that every pre-activation has
/// magnitude at least 1 (Heaviside is invariant under positive scaling).
fn normalized_pattern(sep: &Separation, dx: usize, vwidths: &[usize], y_l: &[f64]) -> Vec<Layer> {
    let mut layers = unit_pattern_layers(sep, dx, vwidths, y_l);
    let depth = vwidths.len();
    for (i, (a, b)) in layers.iter_mut().enumerate().take(depth) {
        let f = if i == 0 { 1.0 / sep.epsilon } else { 2.0 };
        a.iter_mut().flatten().for_each(|v| *v *= f);
        b.iter_mut().for_each(|v| *v *= f);
    }
    layers
}

/// Affine map from a real layer output to the normalized emulated output
/// (D z − lo)/Δ, folded into the next layer's virtual weights.
fn fold_input(virt: &Layer, prev: Option<(LayerKind, usize)>) -> Layer {
    let (a, b) = virt;
    let Some((kind, width)) = prev else {
        return (a.clone(), b.clone());
    };
    let (lo, hi) = kind.limits();
    let delta = hi - lo;
    let vw = a.first().map_or(0, |r| r.len());
    let mut w = vec![vec![0.0; width]; a.len()];
    let mut c = b.clone();
    for (r, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().take(vw) {
            w[r][j] += v / delta;
            if let LayerKind::Difference { .. } = kind {
                w[r][j + vw] -= v / delta;
            }
            c[r] -= v * lo / delta;
        }
    }
    (w, c)
}

/// Realize normalized virtual layers on a network with the given kinds and gains.
fn realize(net: &Network, kinds: &[LayerKind], virt: &[Layer], gains: &[f64]) -> Result<Vec<f64>> {
    let depth = net.depth();
    let mut layers = Vec::with_capacity(depth + 1);
    for i in 0..=depth {
        let prev = (i > 0).then(|| (kinds[i - 1], net.width(i)));
        let (w, c) = fold_input(&virt[i], prev);
        if i == depth {
            layers.push((w, c));
            break;
        }
        let (rows, cols) = (net.width(i + 1), net.width(i));
        let g = gains[i];
        let mut a = vec![vec![0.0; cols]; rows];
        let mut b = vec![0.0; rows];
        let vw = w.len();
        for r in 0..vw {
            let scaled: Vec<f64> = w[r].iter().map(|v| g * v).collect();
            a[r].clone_from(&scaled);
            b[r] = g * c[r];
            if let LayerKind::Difference { .. } = kinds[i] {
                a[r + vw] = scaled;
                b[r + vw] = g * c[r] - 1.0;
            }
        }
        layers.push((a, b));
    }
    net.pack(&layers)
}

fn virtual_widths(net: &Network, kinds: &[LayerKind]) -> Vec<usize> {
    kinds.iter().zip(&net.widths).map(|(k, &w)| k.virtual_width(w)).collect()
}

/// Saturated single-sample fit with an explicit layer order.
pub fn saturated_fit_ordered(
    scheme: &Scheme,
    data: &Dataset,
    y_l: &[f64],
    l: usize,
    gamma: f64,
    order: SaturationOrder,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    let net = net_of(scheme)?;
    check_common(net, data, y_l, l)?;
    if net.is_resnet() {
        return Err(Error::Hypothesis("saturated fit needs a feed-forward network; use resnet_fit".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid("gain must be positive and finite"));
    }
    let kinds = saturation_kinds(net)?;
    let sep = separating_hyperplane(data, l, rng)?;
    let virt = normalized_pattern(&sep, data.dx(), &virtual_widths(net, &kinds), y_l);
    realize(net, &kinds, &virt, &order.gains(gamma, net.depth()))
}

/// Saturated single-sample fit, bottom layer saturated first.
pub fn saturated_fit(scheme: &Scheme, data: &Dataset, y_l: &[f64], l: usize, gamma: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    saturated_fit_ordered(scheme, data, y_l, l, gamma, SaturationOrder::BottomUp, rng)
}

/// ‖Ψ(α, x_d) − y_l·e_l‖_Y.
pub fn pattern_residual(scheme: &Scheme, alpha: &[f64], data: &Dataset, y_l: &[f64], l: usize) -> Result<f64> {
    let psi = scheme.eval_batch(alpha, data)?;
    let target = YVector::single_block(data.n(), y_l.len(), l, y_l)?;
    psi.distance(&target)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderComparison {
    pub bottom_up: f64,
    pub top_down: f64,
    pub discrepancy: f64,
}

/// Residuals of both saturation orders at the same gain and separating direction.
pub fn compare_orders(scheme: &Scheme, data: &Dataset, y_l: &[f64], l: usize, gamma: f64, seed: u64) -> Result<OrderComparison> {
    let mut res = [0.0; 2];
    for (slot, order) in res.iter_mut().zip([SaturationOrder::BottomUp, SaturationOrder::TopDown]) {
        let alpha = saturated_fit_ordered(scheme, data, y_l, l, gamma, order, &mut crate::rng::seeded(seed))?;
        *slot = pattern_residual(scheme, &alpha, data, y_l, l)?;
    }
    Ok(OrderComparison { bottom_up: res[0], top_down: res[1], discrepancy: (res[0] - res[1]).abs() })
}

/// Whether the leaky-hat construction applies: positively homogeneous
/// piecewise-linear activations, L ≥ 2 and every width ≥ 2.
fn hat_slopes(net: &Network) -> Option<Vec<(f64, f64)>> {
    if net.depth() < 2 || net.widths.iter().any(|&w| w < 2) || net.is_resnet() {
        return None;
    }
    net.activations
        .iter()
        .map(|a| match a {
            Activation::Relu | Activation::LeakyRelu { .. } => a.homogeneous_limits(),
            _ => None,
        })
        .collect()
}

/// Exact single-sample fit for narrow ReLU/leaky-ReLU networks. With slopes
/// (σ⁻, σ⁺), a pair (σ(t), σ(−t)) determines relu(t) and |t| linearly; layer 2
/// evaluates h − |t|, which is positive only at x_l, and later layers pass its
/// positive part upward.
pub fn hat_fit(scheme: &Scheme, data: &Dataset, y_l: &[f64], l: usize, rng: &mut Rng) -> Result<Vec<f64>> {
    let net = net_of(scheme)?;
    check_common(net, data, y_l, l)?;
    let slopes = hat_slopes(net).ok_or_else(|| {
        Error::Hypothesis("hat fit needs ReLU or leaky ReLU activations, depth ≥ 2 and widths ≥ 2".into())
    })?;
    let sep = separating_hyperplane(data, l, rng)?;
    let depth = net.depth();
    let h = sep.epsilon;
    let tl: f64 = sep.direction.iter().zip(data.input(l)).map(|(a, v)| a * v).sum();
    // relu(t) = (σ⁺σ(t) + σ⁻σ(−t)) / (σ⁺² − σ⁻²),  |t| = (σ(t) + σ(−t)) / (σ⁺ − σ⁻).
    let relu_row = |(lo, hi): (f64, f64)| {
        let d = hi * hi - lo * lo;
        (hi / d, lo / d)
    };
    let mut layers: Vec<Layer> = Vec::with_capacity(depth + 1);
    let dx = data.dx();
    let mut a1 = vec![vec![0.0; dx]; net.width(1)];
    let mut b1 = vec![0.0; net.width(1)];
    a1[0] = sep.direction.clone();
    a1[1] = sep.direction.iter().map(|v| -v).collect();
    b1[0] = -tl;
    b1[1] = tl;
    layers.push((a1, b1));
    for i in 2..=depth {
        let (rows, cols) = (net.width(i), net.width(i - 1));
        let (lo, hi) = slopes[i - 2];
        let (p, q) = if i == 2 {
            let s = 1.0 / (hi - lo);
            (-s, -s)
        } else {
            relu_row((lo, hi))
        };
        let offset = if i == 2 { h } else { 0.0 };
        let mut a = vec![vec![0.0; cols]; rows];
        let mut b = vec![0.0; rows];
        a[0][0] = p;
        a[0][1] = q;
        b[0] = offset;
        a[1][0] = -p;
        a[1][1] = -q;
        b[1] = -offset;
        layers.push((a, b));
    }
    let (p, q) = relu_row(slopes[depth - 1]);
    let mut top = vec![vec![0.0; net.width(depth)]; y_l.len()];
    for (row, &v) in top.iter_mut().zip(y_l) {
        row[0] = v * p / h;
        row[1] = v * q / h;
    }
    layers.push((top, vec![0.0; y_l.len()]));
    net.pack(&layers)
}

/// ResNet fit: exact parameters for the limit network with activations
/// σ⁻min(0,s) + σ⁺max(0,s), realized with per-layer scales γ^i so that the
/// skip paths become negligible.
pub fn resnet_fit(scheme: &Scheme, data: &Dataset, y_l: &[f64], l: usize, gamma: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    let Scheme::ResNet(net) = scheme else {
        return Err(Error::Hypothesis("resnet_fit needs a ResNet scheme".into()));
    };
    check_common(net, data, y_l, l)?;
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(invalid("ResNet gain must exceed 1"));
    }
    let mut kinds = Vec::with_capacity(net.depth());
    for (i, act) in net.activations.iter().enumerate() {
        let (lo, hi) = act
            .homogeneous_limits()
            .filter(|(lo, hi)| lo != hi)
            .ok_or_else(|| Error::Hypothesis(format!("activation {} has no distinct homogeneous limits", act.name())))?;
        let need = if i == 0 { 4 } else { 2 };
        if net.widths[i] < need {
            return Err(Error::Hypothesis(format!("layer {} has width {} but needs at least {need}", i + 1, net.widths[i])));
        }
        kinds.push(LayerKind::Difference { lo, hi });
    }
    let sep = separating_hyperplane(data, l, rng)?;
    let virt = normalized_pattern(&sep, data.dx(), &virtual_widths(net, &kinds), y_l);
    // The limit activations are piecewise linear with a single kink, so their
    // unit differences are exact steps once |s| ≥ 1; gain 2 leaves slack.
    let limit = realize(net, &kinds, &virt, &vec![2.0; net.depth()])?;
    let mut layers = net.unpack(&limit);
    let depth = net.depth();
    for (i, (a, b)) in layers.iter_mut().enumerate() {
        if i < depth {
            let s = gamma.powi(i as i32 + 1);
            a.iter_mut().flatten().for_each(|v| *v *= gamma);
            b.iter_mut().for_each(|v| *v *= s);
        } else {
            let s = gamma.powi(depth as i32);
            a.iter_mut().flatten().for_each(|v| *v /= s);
        }
    }
    net.pack(&layers)
}

/// Parameters whose loss strictly beats the zero guess ‖y_d‖², built for the
/// sample with the largest label block.
pub fn expressiveness_witness(scheme: &Scheme, data: &Dataset, y: &YVector, rng: &mut Rng) -> Result<Witness> {
    if y.n() != data.n() || y.dy() != scheme.output_dim() {
        return Err(dim("label shape does not match the data and scheme"));
    }
    if y.norm_sq() == 0.0 {
        return Err(invalid("the zero label is trivially realizable; no witness exists"));
    }
    let l = y.argmax_block();
    let y_l = y.block(l).to_vec();
    let (alpha, route) = match scheme {
        Scheme::ToyLightning => {
            let xs = data.scalars().ok_or_else(|| dim("toy scheme needs scalar inputs"))?;
            let delta = y_l[0].signum() * y_l[0].abs().min(1.0);
            (toy::single_sample_params(&xs, l, delta).to_vec(), WitnessRoute::SingleSampleToy)
        }
        Scheme::ConicToy => {
            let xs = data.scalars().ok_or_else(|| dim("toy scheme needs scalar inputs"))?;
            let [a, b] = toy::single_sample_params(&xs, l, 1.0);
            (vec![a, b, y_l[0]], WitnessRoute::ConicToyScaling)
        }
        Scheme::Linear => (least_squares_line(data, y)?, WitnessRoute::LeastSquaresLine),
        Scheme::FreeKnotSpline { knots } => (free_knot_hat(data, *knots, y_l[0], l)?, WitnessRoute::FreeKnotHat),
        Scheme::ResNet(_) => (resnet_fit(scheme, data, &y_l, l, RESNET_GAIN, rng)?, WitnessRoute::ResNetLimit),
        Scheme::FeedForward(net) => {
            if net.activations.iter().all(Activation::is_heaviside) && net.width(1) >= 2 {
                (heaviside_unit_fit(scheme, data, &y_l, l, rng)?, WitnessRoute::HeavisideUnit)
            } else if saturation_kinds(net).is_ok() {
                (saturated_fit(scheme, data, &y_l, l, DEFAULT_GAIN, rng)?, WitnessRoute::SaturatedSteps)
            } else if hat_slopes(net).is_some() {
                (hat_fit(scheme, data, &y_l, l, rng)?, WitnessRoute::LeakyHat)
            } else {
                return Err(Error::Hypothesis(format!(
                    "no single-sample construction for activations {:?} with widths {:?}",
                    net.activations.iter().map(Activation::name).collect::<Vec<_>>(),
                    net.widths
                )));
            }
        }
    };
    let witness_loss = scheme.loss(&alpha, data, y)?;
    Ok(Witness { alpha, witness_loss, route, sample: l })
}

/// Spline that is y_l at x_l and 0 at every other sample: knots
/// x_l − ε, x_l, then up to x_l + ε, with ε half the minimum spacing.
pub fn free_knot_hat(data: &Dataset, p: usize, y_l: f64, l: usize) -> Result<Vec<f64>> {
    let xs = data.scalars().ok_or_else(|| dim("free-knot splines need scalar inputs"))?;
    if p < 3 {
        return Err(invalid("free-knot splines need at least 3 knots"));
    }
    let eps = 0.5 * data.min_separation();
    let xl = xs[l];
    let mut knots = vec![xl - eps, xl];
    for j in 3..=p {
        knots.push(xl + eps * (j - 2) as f64 / (p - 1) as f64);
    }
    let mut coef = vec![y_l; p];
    coef[0] = 0.0;
    coef[p - 1] = 0.0;
    coef.extend(knots);
    Ok(coef)
}

fn least_squares_line(data: &Dataset, y: &YVector) -> Result<Vec<f64>> {
    let xs = data.scalars().ok_or_else(|| dim("linear scheme needs scalar inputs"))?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = y.as_slice().iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(y.as_slice()).map(|(x, v)| (x - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    Ok(vec![slope, my - slope * mx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn net_scheme(dx: usize, dy: usize, widths: &[usize], act: Activation) -> Scheme {
        Scheme::feed_forward(Network::uniform(dx, dy, widths, act).unwrap()).unwrap()
    }

    #[test]
    fn heaviside_single_layer_on_three_points() {
        let s = net_scheme(1, 1, &[2], Activation::Heaviside { c: 0.5 });
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let a = heaviside_unit_fit(&s, &d, &[5.0], 1, &mut seeded(0)).unwrap();
        assert_eq!(s.eval_batch(&a, &d).unwrap().as_slice(), &[0.0, 5.0, 0.0]);
        let z = heaviside_unit_fit(&s, &d, &[0.0], 1, &mut seeded(0)).unwrap();
        assert!(s.eval_batch(&z, &d).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn heaviside_deep_exact_pattern() {
        let net = Network::feed_forward(3, 2, vec![4, 2, 2], vec![Activation::Heaviside { c: 0.0 }; 3]).unwrap();
        let s = Scheme::feed_forward(net).unwrap();
        let mut rng = seeded(5);
        let d = Dataset::random(10, 3, &mut rng).unwrap();
        for l in 0..10 {
            let y_l = [1.5, -0.25];
            let a = heaviside_unit_fit(&s, &d, &y_l, l, &mut rng).unwrap();
            let psi = s.eval_batch(&a, &d).unwrap();
            for k in 0..10 {
                let want: &[f64] = if k == l { &y_l } else { &[0.0, 0.0] };
                assert_eq!(psi.block(k), want);
            }
        }
    }

    #[test]
    fn heaviside_rejects_narrow_or_smooth() {
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let narrow = net_scheme(1, 1, &[1], Activation::Heaviside { c: 0.5 });
        assert!(matches!(heaviside_unit_fit(&narrow, &d, &[1.0], 0, &mut seeded(0)), Err(Error::Hypothesis(_))));
        let smooth = net_scheme(1, 1, &[2], Activation::Tanh);
        assert!(matches!(heaviside_unit_fit(&smooth, &d, &[1.0], 0, &mut seeded(0)), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn tanh_single_layer_saturates() {
        let s = net_scheme(1, 1, &[2], Activation::Tanh);
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let a = saturated_fit(&s, &d, &[1.0], 1, 1e3, &mut seeded(1)).unwrap();
        assert!(pattern_residual(&s, &a, &d, &[1.0], 1).unwrap() <= 1e-3);
    }

    #[test]
    fn relu_difference_emulation_is_exact() {
        let s = net_scheme(2, 1, &[4, 2], Activation::Relu);
        let mut rng = seeded(2);
        let d = Dataset::random(8, 2, &mut rng).unwrap();
        for gamma in [1.0, 10.0, 1e6] {
            let a = saturated_fit(&s, &d, &[2.0], 3, gamma, &mut seeded(9)).unwrap();
            assert!(pattern_residual(&s, &a, &d, &[2.0], 3).unwrap() <= 1e-12, "gamma {gamma}");
        }
    }

    #[test]
    fn residual_nonincreasing_in_gain() {
        let mut rng = seeded(3);
        let d = Dataset::random(6, 2, &mut rng).unwrap();
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::SoftPlus, Activation::Arctan] {
            let s = net_scheme(2, 1, &[4, 3], act);
            let mut prev = f64::INFINITY;
            for e in 1..=6 {
                let a = saturated_fit(&s, &d, &[1.0], 2, 10f64.powi(e), &mut seeded(4)).unwrap();
                let r = pattern_residual(&s, &a, &d, &[1.0], 2).unwrap();
                assert!(r <= prev + 1e-12, "{act:?} at 1e{e}: {r} > {prev}");
                prev = r;
            }
            assert!(prev <= act.saturation_tolerance(), "{act:?}: {prev}");
        }
    }

    #[test]
    fn both_orders_agree_for_exact_activations() {
        let s = net_scheme(1, 1, &[4, 2, 2], Activation::Relu);
        let d = Dataset::from_scalars(&[-1.0, 0.0, 0.5, 2.0]).unwrap();
        let cmp = compare_orders(&s, &d, &[1.0], 2, 10.0, 7).unwrap();
        assert!(cmp.discrepancy <= 1e-12 && cmp.bottom_up <= 1e-12);
    }

    #[test]
    fn saturated_rejects_narrow_difference_layer() {
        let s = net_scheme(1, 1, &[2], Activation::Relu);
        let d = Dataset::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(matches!(saturated_fit(&s, &d, &[1.0], 0, 10.0, &mut seeded(0)), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn leaky_hat_is_exact() {
        let d = Dataset::from_scalars(&[-1.0, -0.2, 0.3, 1.1, 2.0]).unwrap();
        for act in [Activation::LeakyRelu { c: 0.01 }, Activation::LeakyRelu { c: -0.3 }, Activation::Relu] {
            for widths in [vec![2, 2], vec![2, 3, 2]] {
                let s = net_scheme(1, 1, &widths, act);
                for l in 0..5 {
                    let a = hat_fit(&s, &d, &[-1.7], l, &mut seeded(l as u64)).unwrap();
                    assert!(pattern_residual(&s, &a, &d, &[-1.7], l).unwrap() <= 1e-12, "{act:?} {widths:?} l={l}");
                }
            }
        }
    }

    #[test]
    fn resnet_limit_fit() {
        let skips = vec![vec![vec![0.3]; 4], vec![vec![0.5, -0.2, 0.1, 0.4]; 2]];
        let net = Network::res_net(1, 1, vec![4, 2], vec![Activation::SoftPlus, Activation::Relu], skips).unwrap();
        let s = Scheme::res_net(net).unwrap();
        let d = Dataset::from_scalars(&[0.0, 0.4, 1.0, 1.5]).unwrap();
        let a = resnet_fit(&s, &d, &[1.0], 2, RESNET_GAIN, &mut seeded(0)).unwrap();
        assert!(pattern_residual(&s, &a, &d, &[1.0], 2).unwrap() <= 1e-4);
    }

    #[test]
    fn free_knot_hat_on_three_points() {
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let a = free_knot_hat(&d, 3, 2.0, 1).unwrap();
        assert_eq!(&a[3..], &[0.5, 1.0, 1.25]);
        let psi = Scheme::free_knot(3).unwrap().eval_batch(&a, &d).unwrap();
        assert_eq!(psi.as_slice(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn witness_bound_for_unit_labels() {
        let d = Dataset::from_scalars(&[-0.8, -0.1, 0.4, 0.9, 1.6]).unwrap();
        let n = 5.0;
        let schemes = vec![
            Scheme::free_knot(3).unwrap(),
            net_scheme(1, 1, &[2], Activation::Heaviside { c: 1.0 }),
            net_scheme(1, 1, &[2, 2], Activation::Sigmoid),
            net_scheme(1, 1, &[2, 2], Activation::LeakyRelu { c: 0.01 }),
            Scheme::ConicToy,
        ];
        let mut rng = seeded(8);
        for s in &schemes {
            for _ in 0..20 {
                let y = YVector::random_unit(5, 1, &mut rng);
                let w = expressiveness_witness(s, &d, &y, &mut rng).unwrap();
                assert!(w.witness_loss < 1.0);
                assert!(w.witness_loss <= 1.0 - 1.0 / n + 1e-6, "{}: {}", s.name(), w.witness_loss);
            }
        }
    }

    #[test]
    fn toy_and_linear_witnesses_beat_zero() {
        let d = Dataset::from_scalars(&[-0.5, 0.5, 1.0]).unwrap();
        let mut rng = seeded(1);
        for s in [Scheme::ToyLightning, Scheme::Linear] {
            for _ in 0..50 {
                let y = YVector::random(3, 1, &mut rng).scaled(3.0);
                let w = expressiveness_witness(&s, &d, &y, &mut rng).unwrap();
                assert!(w.witness_loss < y.norm_sq());
            }
        }
        let zero = YVector::zeros(3, 1);
        assert!(expressiveness_witness(&Scheme::Linear, &d, &zero, &mut rng).is_err());
    }
}
