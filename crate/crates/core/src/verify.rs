//! Independent checks of constructed certificates: stationarity, sampled
//! local growth, loss gaps against a witness, and saddle classification.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::constructions::bad_label::{bad_label, bad_label_with_gap, s_threshold, ThetaSource};
use crate::constructions::embed::EmbeddingResult;
use crate::constructions::poly::poly_space_basis;
use crate::constructions::saturation::expressiveness_witness;
use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::regularized::{self, RegTerms};
use crate::rng::{self, seeded, Rng};
use crate::scheme::Scheme;
use crate::yspace::{complement_direction, YVector};

/// Additive slack for "≥" comparisons, scaled by magnitude.
pub const SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    SpuriousMin,
    SaddlePair,
    RegularizedSpurious,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Slack in lhs ≥ rhs − slack.
    pub growth_slack: f64,
    /// Relative tolerance of the growth equality inside the certified radius.
    pub equality: f64,
    /// Relative minimum gap for spuriousness.
    pub min_gap: f64,
    /// Relative agreement between stored and recomputed losses.
    pub recompute: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { growth_slack: SLACK, equality: SLACK, min_gap: SLACK, recompute: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    /// ‖h‖∞.
    pub perturbation_norm: f64,
    /// loss(ᾱ + h) − loss(ᾱ).
    pub lhs: f64,
    /// ‖Ψ(ᾱ + h) − Ψ(ᾱ)‖².
    pub rhs: f64,
    pub inside_radius: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpuriousCertificate {
    pub kind: CertificateKind,
    pub scheme: Scheme,
    pub dataset: Dataset,
    pub dataset_hash: String,
    pub alpha_bar: Vec<f64>,
    pub y_d: YVector,
    pub loss_at_bar: f64,
    pub witness: Vec<f64>,
    pub witness_loss: f64,
    pub gap: f64,
    #[serde(default)]
    pub target_gap: Option<f64>,
    #[serde(default)]
    pub grad_norm: Option<f64>,
    #[serde(default)]
    pub neighborhood_radius: Option<f64>,
    pub growth_report: Vec<GrowthRow>,
    pub s: f64,
    pub v: YVector,
    pub theta_used: f64,
    pub theta_source: ThetaSource,
    /// Name of the construction that produced ᾱ.
    pub provenance: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub regularization: Option<RegTerms>,
}

impl SpuriousCertificate {
    /// Objective used for the gap: the plain loss, or the regularized one.
    pub fn objective(&self, alpha: &[f64], y: &YVector) -> Result<f64> {
        match &self.regularization {
            None => self.scheme.loss(alpha, &self.dataset, y),
            Some(r) => regularized::objective(&self.scheme, &self.dataset, y, r, alpha),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub grad_norm: f64,
    pub differentiable: bool,
    pub pass: bool,
}

/// ‖∇loss(α)‖₂ ≤ tol at a differentiable configuration.
pub fn check_stationarity(scheme: &Scheme, alpha: &[f64], data: &Dataset, y: &YVector, tol: f64) -> Result<StationarityReport> {
    let g = scheme.grad_loss(alpha, data, y)?;
    let grad_norm = g.norm();
    let differentiable = g.differentiable();
    Ok(StationarityReport { grad_norm, differentiable, pass: differentiable && grad_norm <= tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// Whether the equality part was asserted (radius within the certified ρ).
    pub equality_checked: bool,
    pub warning: Option<String>,
    pub pass: bool,
}

/// Samples ᾱ + h with ‖h‖∞ ≤ radius (the first sample is h = 0) and checks
/// loss(ᾱ+h) − loss(ᾱ) ≥ ‖Ψ(ᾱ+h) − Ψ(ᾱ)‖² − slack, with equality inside ρ.
pub fn check_local_growth(
    scheme: &Scheme,
    data: &Dataset,
    alpha_bar: &[f64],
    y: &YVector,
    rho: Option<f64>,
    radius: f64,
    num_samples: usize,
    tol: &Tolerances,
    rng: &mut Rng,
) -> Result<GrowthReport> {
    if !(radius >= 0.0) {
        return Err(invalid("growth radius must be nonnegative"));
    }
    let within = rho.is_some_and(|r| radius <= r);
    let warning = (!within).then(|| match rho {
        Some(r) => format!("radius {radius:e} exceeds the certified radius {r:e}; equality not asserted"),
        None => "no certified radius; equality not asserted".to_string(),
    });
    let base_psi = scheme.eval_batch(alpha_bar, data)?;
    let base_loss = scheme.loss(alpha_bar, data, y)?;
    let mut rows = Vec::with_capacity(num_samples);
    for i in 0..num_samples {
        // Mix of full-size and shrunken perturbations.
        let shrink = if i == 0 { 0.0 } else { 10f64.powf(-3.0 * rng::uniform(rng, 0.0, 1.0)) };
        let h: Vec<f64> = alpha_bar.iter().map(|_| shrink * rng::uniform(rng, -radius, radius)).collect();
        let a: Vec<f64> = alpha_bar.iter().zip(&h).map(|(p, q)| p + q).collect();
        if !scheme.in_domain(&a) {
            continue;
        }
        let psi = scheme.eval_batch(&a, data)?;
        let lhs = scheme.loss(&a, data, y)? - base_loss;
        let rhs = psi.sub(&base_psi)?.norm_sq();
        let mut pass = lhs >= rhs - tol.growth_slack * (1.0 + base_loss);
        if within {
            pass &= (lhs - rhs).abs() <= tol.equality * (1.0 + lhs.abs() + base_loss);
        }
        let perturbation_norm = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rows.push(GrowthRow { perturbation_norm, lhs, rhs, inside_radius: within, pass });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(GrowthReport { rows, equality_checked: within, warning, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpuriousCheck {
    pub loss_at_bar: f64,
    pub witness_loss: f64,
    pub gap: f64,
    pub min_gap: f64,
    /// Stored scalars agree with the recomputation.
    pub consistent: bool,
    pub pass: bool,
}

/// Recomputes both objective values and checks witness + min_gap ≤ loss(ᾱ)
/// (and the target gap when one is recorded).
pub fn check_spurious(cert: &SpuriousCertificate) -> Result<SpuriousCheck> {
    if cert.dataset.hash() != cert.dataset_hash {
        return Ok(SpuriousCheck {
            loss_at_bar: f64::NAN,
            witness_loss: f64::NAN,
            gap: f64::NAN,
            min_gap: f64::NAN,
            consistent: false,
            pass: false,
        });
    }
    let loss_at_bar = cert.objective(&cert.alpha_bar, &cert.y_d)?;
    let witness_loss = cert.objective(&cert.witness, &cert.y_d)?;
    let gap = loss_at_bar - witness_loss;
    let min_gap = cert.tolerances.min_gap * (1.0 + loss_at_bar.abs());
    let agree = |stored: f64, fresh: f64| (stored - fresh).abs() <= cert.tolerances.recompute * (1.0 + fresh.abs());
    let consistent = agree(cert.loss_at_bar, loss_at_bar) && agree(cert.witness_loss, witness_loss) && agree(cert.gap, gap);
    let mut pass = consistent && witness_loss + min_gap <= loss_at_bar;
    if let Some(c) = cert.target_gap {
        pass &= gap >= c;
    }
    Ok(SpuriousCheck { loss_at_bar, witness_loss, gap, min_gap, consistent, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub spurious: SpuriousCheck,
    pub growth: Option<GrowthReport>,
    pub stationarity: Option<StationarityReport>,
    /// y_d − Ψ(ᾱ) = s·v with v a unit vector.
    pub label_consistent: bool,
    pub pass: bool,
}

/// Full re-verification of a stored certificate.
pub fn verify_certificate(cert: &SpuriousCertificate, growth_samples: usize) -> Result<CertificateVerdict> {
    let spurious = check_spurious(cert)?;
    let data = &cert.dataset;
    let base = cert.scheme.eval_batch(&cert.alpha_bar, data)?;
    let mut rebuilt = base.clone();
    rebuilt.axpy(cert.s, &cert.v);
    let label_consistent = rebuilt.distance(&cert.y_d)? <= 1e-9 * (1.0 + cert.y_d.norm()) && (cert.v.norm() - 1.0).abs() <= 1e-9;
    let mut pass = spurious.pass && label_consistent;
    let mut growth = None;
    let mut stationarity = None;
    match cert.kind {
        CertificateKind::SpuriousMin => {
            if let Some(rho) = cert.neighborhood_radius {
                let mut rng = seeded(cert.seed);
                let g = check_local_growth(
                    &cert.scheme,
                    data,
                    &cert.alpha_bar,
                    &cert.y_d,
                    Some(rho),
                    rho,
                    growth_samples,
                    &cert.tolerances,
                    &mut rng,
                )?;
                pass &= g.pass;
                growth = Some(g);
            }
        }
        CertificateKind::SaddlePair => {
            let st = check_stationarity(&cert.scheme, &cert.alpha_bar, data, &cert.y_d, 1e-8)?;
            pass &= st.pass;
            stationarity = Some(st);
        }
        CertificateKind::RegularizedSpurious => {}
    }
    Ok(CertificateVerdict { spurious, growth, stationarity, label_consistent, pass })
}

/// Certificate for an embedding: bad label beyond the θ threshold (raised to
/// reach `target_gap` if given), explicit witness, and a growth report on
/// `growth_samples` perturbations inside ρ.
#[allow(clippy::too_many_arguments)]
pub fn build_spurious_certificate(
    scheme: &Scheme,
    data: &Dataset,
    embedding: &EmbeddingResult,
    multiplier: f64,
    theta: f64,
    source: ThetaSource,
    target_gap: Option<f64>,
    growth_samples: usize,
    seed: u64,
) -> Result<SpuriousCertificate> {
    let mut rng = seeded(seed);
    let label = match target_gap {
        Some(c) => bad_label_with_gap(scheme, data, embedding, multiplier, theta, source, c, &mut rng)?,
        None => bad_label(scheme, data, embedding, multiplier, theta, source, &mut rng)?,
    };
    let witness = expressiveness_witness(scheme, data, &label.y_d, &mut rng)?;
    let loss_at_bar = scheme.loss(&embedding.alpha_bar, data, &label.y_d)?;
    let tolerances = Tolerances::default();
    let rho = embedding.neighborhood_radius;
    let growth = check_local_growth(
        scheme,
        data,
        &embedding.alpha_bar,
        &label.y_d,
        Some(rho),
        rho,
        growth_samples,
        &tolerances,
        &mut seeded(seed),
    )?;
    let grad = scheme.grad_loss(&embedding.alpha_bar, data, &label.y_d)?;
    Ok(SpuriousCertificate {
        kind: CertificateKind::SpuriousMin,
        scheme: scheme.clone(),
        dataset: data.clone(),
        dataset_hash: data.hash(),
        alpha_bar: embedding.alpha_bar.clone(),
        y_d: label.y_d,
        loss_at_bar,
        witness: witness.alpha,
        witness_loss: witness.witness_loss,
        gap: loss_at_bar - witness.witness_loss,
        target_gap,
        grad_norm: grad.differentiable().then(|| grad.norm()),
        neighborhood_radius: Some(rho),
        growth_report: growth.rows,
        s: label.s,
        v: label.v,
        theta_used: label.theta_used,
        theta_source: label.theta_source,
        provenance: match embedding.route {
            crate::constructions::EmbeddingRoute::AffineSegments => "affine_segment_embedding".into(),
            crate::constructions::EmbeddingRoute::ConstantSegment { .. } => "constant_segment_embedding".into(),
            crate::constructions::EmbeddingRoute::FreeKnotLine => "free_knot_line_embedding".into(),
        },
        seed,
        tolerances,
        regularization: None,
    })
}

/// Stationary point data for the ± pair: ᾱ must have a zero first weight
/// matrix, so every first-order variation of Ψ lies in the affine space V₁
/// and any v ⊥ V₁ makes ᾱ stationary for Ψ(ᾱ) ± s·v.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSetup {
    pub base: YVector,
    pub v: YVector,
    pub s: f64,
    pub threshold: f64,
    pub theta_used: f64,
}

pub fn pair_setup(scheme: &Scheme, data: &Dataset, alpha_bar: &[f64], multiplier: f64, theta: f64, rng: &mut Rng) -> Result<PairSetup> {
    let net = scheme.network().ok_or_else(|| Error::Hypothesis("the ± pair construction needs a network".into()))?;
    if alpha_bar[net.first_weight_range()].iter().any(|v| *v != 0.0) {
        return Err(Error::Hypothesis("first weight matrix of ᾱ must be zero".into()));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(invalid("theta must lie in [0, 1)"));
    }
    let v1 = poly_space_basis(data, 1, net.output_dim)?;
    let v = complement_direction(&v1, rng)?;
    let base = scheme.eval_batch(alpha_bar, data)?;
    let threshold = s_threshold(theta, base.norm());
    let s = if threshold == 0.0 { multiplier } else { multiplier * threshold };
    Ok(PairSetup { base, v, s, threshold, theta_used: theta })
}

/// Certificate for one sign τ of the pair y = Ψ(ᾱ) + τ·s·v.
pub fn build_pair_certificate(
    scheme: &Scheme,
    data: &Dataset,
    alpha_bar: &[f64],
    setup: &PairSetup,
    sign: f64,
    seed: u64,
) -> Result<SpuriousCertificate> {
    let mut y = setup.base.clone();
    y.axpy(sign * setup.s, &setup.v);
    let witness = expressiveness_witness(scheme, data, &y, &mut seeded(seed))?;
    let loss_at_bar = scheme.loss(alpha_bar, data, &y)?;
    let grad = scheme.grad_loss(alpha_bar, data, &y)?;
    Ok(SpuriousCertificate {
        kind: CertificateKind::SaddlePair,
        scheme: scheme.clone(),
        dataset: data.clone(),
        dataset_hash: data.hash(),
        alpha_bar: alpha_bar.to_vec(),
        y_d: y,
        loss_at_bar,
        witness: witness.alpha,
        witness_loss: witness.witness_loss,
        gap: loss_at_bar - witness.witness_loss,
        target_gap: None,
        grad_norm: Some(grad.norm()),
        neighborhood_radius: None,
        growth_report: Vec::new(),
        s: sign * setup.s,
        v: setup.v.clone(),
        theta_used: setup.theta_used,
        theta_source: ThetaSource::Cap,
        provenance: "zero_first_layer_pair".into(),
        seed,
        tolerances: Tolerances::default(),
        regularization: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    LocalMinLike,
    SaddleLike,
    MaxLike,
    Flat,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub sign: f64,
    pub classification: Classification,
    pub probe_radius: f64,
    pub min_diff: f64,
    pub max_diff: f64,
    pub hessian_min: Option<f64>,
    pub hessian_max: Option<f64>,
    pub grad_norm: f64,
    pub witness_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairClassification {
    pub plus: BranchReport,
    pub minus: BranchReport,
    /// Some sign is neither max-like nor a global minimum.
    pub pass: bool,
}

/// Finite-difference Hessian of the loss from analytic gradients.
fn fd_hessian(scheme: &Scheme, alpha: &[f64], data: &Dataset, y: &YVector) -> Result<DMatrix<f64>> {
    let m = alpha.len();
    let mut h = DMatrix::zeros(m, m);
    let mut a = alpha.to_vec();
    for j in 0..m {
        let step = 1e-5 * (1.0 + alpha[j].abs());
        a[j] = alpha[j] + step;
        let up = scheme.grad_loss(&a, data, y)?.grad;
        a[j] = alpha[j] - step;
        let dn = scheme.grad_loss(&a, data, y)?.grad;
        a[j] = alpha[j];
        for i in 0..m {
            h[(i, j)] = (up[i] - dn[i]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

fn classify_branch(
    scheme: &Scheme,
    alpha_bar: &[f64],
    data: &Dataset,
    y: &YVector,
    sign: f64,
    radius: f64,
    rng: &mut Rng,
) -> Result<BranchReport> {
    let m = alpha_bar.len();
    let base_loss = scheme.loss(alpha_bar, data, y)?;
    let grad = scheme.grad_loss(alpha_bar, data, y)?;
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(2 * m + 64);
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[i] = s;
            dirs.push(e);
        }
    }
    for _ in 0..64 {
        dirs.push(rng::unit_sphere(rng, m));
    }
    let mut min_diff = f64::INFINITY;
    let mut max_diff = f64::NEG_INFINITY;
    for d in &dirs {
        let a: Vec<f64> = alpha_bar.iter().zip(d).map(|(p, q)| p + radius * q).collect();
        if !scheme.in_domain(&a) {
            continue;
        }
        let diff = scheme.loss(&a, data, y)? - base_loss;
        min_diff = min_diff.min(diff);
        max_diff = max_diff.max(diff);
    }
    let tol = 1e-12 * (1.0 + base_loss);
    let (hessian_min, hessian_max) = if grad.differentiable() && scheme.is_smooth() {
        let eig = SymmetricEigen::new(fd_hessian(scheme, alpha_bar, data, y)?).eigenvalues;
        (Some(eig.min()), Some(eig.max()))
    } else {
        (None, None)
    };
    let htol = 1e-6 * (1.0 + base_loss);
    let classification = if !grad.differentiable() {
        Classification::Inconclusive
    } else if hessian_min.is_some_and(|l| l < -htol) && hessian_max.is_some_and(|u| u > htol) {
        Classification::SaddleLike
    } else if max_diff.abs() <= tol && min_diff.abs() <= tol {
        Classification::Flat
    } else if min_diff >= -tol {
        Classification::LocalMinLike
    } else if max_diff <= tol {
        Classification::MaxLike
    } else {
        Classification::SaddleLike
    };
    let witness = expressiveness_witness(scheme, data, y, rng)?;
    Ok(BranchReport {
        sign,
        classification,
        probe_radius: radius,
        min_diff,
        max_diff,
        hessian_min,
        hessian_max,
        grad_norm: grad.norm(),
        witness_gap: base_loss - witness.witness_loss,
    })
}

/// Classifies ᾱ for the labels base ± s·v. The probe radius is
/// min(ρ/2, 1e−3·(1 + ‖ᾱ‖∞)).
#[allow(clippy::too_many_arguments)]
pub fn classify_pair(
    scheme: &Scheme,
    alpha_bar: &[f64],
    data: &Dataset,
    base: &YVector,
    v: &YVector,
    s: f64,
    rho: Option<f64>,
    seed: u64,
) -> Result<PairClassification> {
    let scale = 1e-3 * (1.0 + alpha_bar.iter().fold(0.0f64, |m, a| m.max(a.abs())));
    let radius = rho.map_or(scale, |r| scale.min(0.5 * r));
    let mut out = Vec::with_capacity(2);
    for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
        let mut y = base.clone();
        y.axpy(sign * s, v);
        out.push(classify_branch(scheme, alpha_bar, data, &y, sign, radius, &mut rng::task_rng(seed, i as u64))?);
    }
    let minus = out.pop().expect("two branches");
    let plus = out.pop().expect("two branches");
    let good = |b: &BranchReport| b.classification != Classification::MaxLike && b.witness_gap > 0.0;
    let pass = good(&plus) || good(&minus);
    Ok(PairClassification { plus, minus, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub gamma: f64,
    pub loss_rel_err: f64,
    pub witness_rel_err: f64,
    pub gap_rel_err: f64,
    pub verdict_preserved: bool,
}

/// Replaces (y_d, top layer of ᾱ and witness) by γ times themselves and
/// compares losses and gap with γ² times the originals.
pub fn scaling_check(cert: &SpuriousCertificate, gamma: f64) -> Result<ScalingCheck> {
    if !(gamma > 0.0) {
        return Err(invalid("scaling factor must be positive"));
    }
    let unsupported = || Error::Unsupported(format!("{} is not conic", cert.scheme.name()));
    let mut scaled = cert.clone();
    scaled.alpha_bar = cert.scheme.scale_output(&cert.alpha_bar, gamma).ok_or_else(unsupported)?;
    scaled.witness = cert.scheme.scale_output(&cert.witness, gamma).ok_or_else(unsupported)?;
    scaled.y_d = cert.y_d.scaled(gamma);
    scaled.v = cert.v.clone();
    scaled.s = cert.s * gamma;
    scaled.target_gap = cert.target_gap.map(|c| c * gamma * gamma);
    if scaled.regularization.is_some() {
        return Err(Error::Unsupported("regularized objectives are not homogeneous under output scaling".into()));
    }
    let g2 = gamma * gamma;
    let loss = scaled.objective(&scaled.alpha_bar, &scaled.y_d)?;
    let wl = scaled.objective(&scaled.witness, &scaled.y_d)?;
    scaled.loss_at_bar = loss;
    scaled.witness_loss = wl;
    scaled.gap = loss - wl;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let before = check_spurious(cert)?.pass;
    let after = check_spurious(&scaled)?.pass;
    Ok(ScalingCheck {
        gamma,
        loss_rel_err: rel(loss, g2 * cert.loss_at_bar),
        witness_rel_err: rel(wl, g2 * cert.witness_loss),
        gap_rel_err: rel(loss - wl, g2 * cert.gap),
        verdict_preserved: before == after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::constructions::embed::{affine_embed, freeknot_affine_embed};
    use crate::scheme::Network;

    fn leaky_setup() -> (Scheme, Dataset, EmbeddingResult) {
        let net = Network::uniform(1, 1, &[2, 2], Activation::LeakyRelu { c: 0.01 }).unwrap();
        let s = Scheme::feed_forward(net).unwrap();
        let d = Dataset::from_scalars(&[-1.0, -0.4, 0.1, 0.7, 1.3]).unwrap();
        let e = affine_embed(&s, &d, &[vec![0.8]], &[-0.2]).unwrap();
        (s, d, e)
    }

    #[test]
    fn leaky_certificate_passes() {
        let (s, d, e) = leaky_setup();
        let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(5), ThetaSource::Cap, Some(10.0), 200, 3).unwrap();
        assert!(cert.gap >= 10.0);
        assert!(cert.growth_report.iter().all(|r| r.pass));
        assert_eq!(cert.growth_report[0].lhs, 0.0);
        assert_eq!(cert.growth_report[0].rhs, 0.0);
        assert!(cert.grad_norm.unwrap() <= 1e-9);
        let v = verify_certificate(&cert, 100).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn tampering_is_detected() {
        let (s, d, e) = leaky_setup();
        let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(5), ThetaSource::Cap, None, 50, 1).unwrap();
        assert!(check_spurious(&cert).unwrap().pass);
        let mut t = cert.clone();
        t.y_d.as_mut_slice()[0] += 0.5;
        assert!(!check_spurious(&t).unwrap().pass);
        let mut w = cert.clone();
        w.witness = w.alpha_bar.clone();
        w.witness_loss = w.loss_at_bar;
        w.gap = 0.0;
        assert!(!check_spurious(&w).unwrap().pass);
    }

    #[test]
    fn non_orthogonal_direction_breaks_equality() {
        let (s, d, e) = leaky_setup();
        let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(5), ThetaSource::Cap, None, 10, 1).unwrap();
        let line = YVector::new(5, 1, d.scalars().unwrap()).unwrap();
        let mut y = cert.y_d.clone();
        y.axpy(1e-2 * cert.s / line.norm(), &line);
        let rho = cert.neighborhood_radius.unwrap();
        let rep = check_local_growth(&s, &d, &cert.alpha_bar, &y, Some(rho), rho, 100, &Tolerances::default(), &mut seeded(2)).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn growth_outside_radius_skips_equality() {
        let (s, d, e) = leaky_setup();
        let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(5), ThetaSource::Cap, None, 10, 1).unwrap();
        let rho = cert.neighborhood_radius.unwrap();
        let rep = check_local_growth(&s, &d, &cert.alpha_bar, &cert.y_d, Some(rho), 10.0 * rho, 20, &Tolerances::default(), &mut seeded(2))
            .unwrap();
        assert!(!rep.equality_checked && rep.warning.is_some());
    }

    #[test]
    fn free_knot_certificate_and_scaling() {
        let s = Scheme::free_knot(3).unwrap();
        let d = Dataset::random_sorted_1d(10, -1.0, 1.0, &mut seeded(4)).unwrap();
        let e = freeknot_affine_embed(&s, &d, 0.5, 0.1).unwrap();
        let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(10), ThetaSource::Cap, Some(10.0), 200, 8).unwrap();
        assert!(verify_certificate(&cert, 200).unwrap().pass);
        for gamma in [0.1, 3.0, 1e3] {
            let c = scaling_check(&cert, gamma).unwrap();
            assert!(c.loss_rel_err <= 1e-10 && c.gap_rel_err <= 1e-10 && c.verdict_preserved, "{c:?}");
        }
    }

    #[test]
    fn stationarity_controls() {
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let y = YVector::new(3, 1, vec![1.0, 3.0, 5.0]).unwrap();
        assert!(check_stationarity(&Scheme::Linear, &[2.0, 1.0], &d, &y, 1e-12).unwrap().pass);
        assert!(!check_stationarity(&Scheme::Linear, &[0.3, -1.0], &d, &y, 1e-8).unwrap().pass);
    }

    #[test]
    fn tanh_pair_is_stationary_and_classified() {
        let net = Network::uniform(1, 1, &[3], Activation::Tanh).unwrap();
        let s = Scheme::feed_forward(net.clone()).unwrap();
        let d = Dataset::from_scalars(&[-1.0, -0.5, 0.0, 0.6, 1.2]).unwrap();
        let mut rng = seeded(5);
        let mut alpha = s.random_params(&mut rng, 1.0, (-1.0, 1.0));
        alpha[net.first_weight_range()].iter_mut().for_each(|v| *v = 0.0);
        let setup = pair_setup(&s, &d, &alpha, 2.0, s.theta_cap(5), &mut rng).unwrap();
        for sign in [1.0, -1.0] {
            let cert = build_pair_certificate(&s, &d, &alpha, &setup, sign, 1).unwrap();
            assert!(cert.grad_norm.unwrap() <= 1e-8);
        }
        let cls = classify_pair(&s, &alpha, &d, &setup.base, &setup.v, setup.s, None, 2).unwrap();
        assert!(cls.pass, "{cls:?}");
    }
}
