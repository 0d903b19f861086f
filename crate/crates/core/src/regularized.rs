//! Regularized training problems ‖Ψ(α) − y_d‖² + ν‖α − α_ref‖_p^p: their
//! spurious minima, the loss of expressiveness for small labels, Taylor
//! structure at points with a zero first layer, and nonuniqueness.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::poly::poly_space_basis;
use crate::constructions::saturation::expressiveness_witness;
use crate::dataset::Dataset;
use crate::error::{dim, invalid, Error, Result};
use crate::optim::{descend, multistart, DescentResult, DescentSettings};
use crate::rng::{self, seeded, task_rng, Rng};
use crate::scheme::Scheme;
use crate::verify::{CertificateKind, SpuriousCertificate};
use crate::yspace::{complement_direction, SubspaceBasis, YVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegTerms {
    pub nu: f64,
    pub p: f64,
    /// Centre of the penalty; `None` means the origin.
    #[serde(default)]
    pub reference: Option<Vec<f64>>,
}

impl RegTerms {
    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(invalid("ν must be finite and nonnegative"));
        }
        if !(1.0..=2.0).contains(&self.p) {
            return Err(invalid(format!("p must lie in [1, 2], got {}", self.p)));
        }
        if self.reference.as_ref().is_some_and(|r| r.len() != m) {
            return Err(dim("penalty reference has the wrong length"));
        }
        Ok(())
    }

    fn shift(&self, alpha: &[f64]) -> Vec<f64> {
        match &self.reference {
            Some(r) => alpha.iter().zip(r).map(|(a, b)| a - b).collect(),
            None => alpha.to_vec(),
        }
    }

    /// g(α − α_ref) = Σ|·|^p.
    pub fn penalty(&self, alpha: &[f64]) -> f64 {
        p_norm_pow(&self.shift(alpha), self.p)
    }
}

pub fn p_norm_pow(z: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        z.iter().map(|v| v * v).sum()
    } else {
        z.iter().map(|v| v.abs().powf(p)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegProblem {
    pub scheme: Scheme,
    pub dataset: Dataset,
    pub y_d: YVector,
    pub terms: RegTerms,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegGradient {
    pub grad: Vec<f64>,
    /// p = 1 with a coordinate at its reference, or a kink in the loss.
    pub nonsmooth: bool,
}

impl RegProblem {
    pub fn new(scheme: Scheme, dataset: Dataset, y_d: YVector, terms: RegTerms) -> Result<Self> {
        terms.validate(scheme.param_count())?;
        Ok(Self { scheme, dataset, y_d, terms })
    }

    pub fn reg_loss(&self, alpha: &[f64]) -> Result<f64> {
        objective(&self.scheme, &self.dataset, &self.y_d, &self.terms, alpha)
    }

    pub fn reg_grad(&self, alpha: &[f64]) -> Result<RegGradient> {
        let g = self.scheme.grad_loss(alpha, &self.dataset, &self.y_d)?;
        let mut nonsmooth = !g.differentiable();
        let mut grad = g.grad;
        let z = self.terms.shift(alpha);
        let (nu, p) = (self.terms.nu, self.terms.p);
        for (gi, zi) in grad.iter_mut().zip(&z) {
            if p == 1.0 {
                if *zi == 0.0 {
                    nonsmooth = true;
                }
                *gi += nu * zi.signum() * (*zi != 0.0) as u8 as f64;
            } else {
                *gi += nu * p * zi.abs().powf(p - 1.0) * zi.signum();
            }
        }
        Ok(RegGradient { grad, nonsmooth })
    }

    /// Armijo descent on the regularized objective.
    pub fn minimize(&self, start: &[f64], settings: &DescentSettings) -> Option<DescentResult> {
        let f = |a: &[f64]| {
            if self.scheme.in_domain(a) {
                Some(self.scheme.loss_unchecked(a, &self.dataset, &self.y_d) + self.terms.nu * self.terms.penalty(a))
            } else {
                None
            }
        };
        let g = |a: &[f64]| self.reg_grad(a).map(|r| r.grad).unwrap_or_else(|_| vec![0.0; a.len()]);
        descend(f, g, start, settings)
    }
}

/// ‖Ψ(α) − y‖² + ν·g(α − α_ref).
pub fn objective(scheme: &Scheme, data: &Dataset, y: &YVector, terms: &RegTerms, alpha: &[f64]) -> Result<f64> {
    terms.validate(alpha.len())?;
    Ok(scheme.loss(alpha, data, y)? + terms.nu * terms.penalty(alpha))
}

fn zero_first_layer(scheme: &Scheme, alpha: &[f64]) -> Result<()> {
    let net = match scheme {
        Scheme::FeedForward(n) => n,
        _ => return Err(Error::Hypothesis("needs a feed-forward network".into())),
    };
    scheme.check_params(alpha)?;
    if alpha[net.first_weight_range()].iter().any(|v| *v != 0.0) {
        return Err(Error::Hypothesis("first weight matrix must be zero".into()));
    }
    Ok(())
}

fn check_quadratic_room(scheme: &Scheme, data: &Dataset) -> Result<SubspaceBasis> {
    let dx = data.dx();
    if (dx + 2) * (dx + 1) / 2 >= data.n() {
        return Err(Error::Hypothesis(format!(
            "need (d_x+2)(d_x+1)/2 < n, have {} ≥ {}",
            (dx + 2) * (dx + 1) / 2,
            data.n()
        )));
    }
    poly_space_basis(data, 2, scheme.output_dim())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegSpuriousResult {
    pub y_d: YVector,
    pub nu: f64,
    pub witness: Vec<f64>,
    /// Saturation gain of the witness.
    pub gain: f64,
    pub certificate: SpuriousCertificate,
}

/// Spurious minimum of the regularized problem centred at ᾱ (zero first
/// layer): labels Ψ(ᾱ) + s·v with v ⊥ V₂; s doubles until a saturated witness
/// at the smallest gain 2^k beats ᾱ by C + 2 in plain loss; then
/// ν = 1/(2·g(α̃ − ᾱ)) keeps the regularized gap at least C.
pub fn reg_spurious_construct(scheme: &Scheme, data: &Dataset, alpha_bar: &[f64], p: f64, target_gap: f64, seed: u64) -> Result<RegSpuriousResult> {
    use crate::constructions::saturation::saturated_fit;
    zero_first_layer(scheme, alpha_bar)?;
    if !scheme.is_smooth() {
        return Err(Error::Hypothesis("activations must be twice differentiable".into()));
    }
    if !(target_gap >= 0.0) {
        return Err(invalid("target gap must be nonnegative"));
    }
    let v2 = check_quadratic_room(scheme, data)?;
    let mut rng = seeded(seed);
    let v = complement_direction(&v2, &mut rng)?;
    let base = scheme.eval_batch(alpha_bar, data)?;
    let sep_seed = rng::child_seed(&mut rng);
    let mut s = base.norm().max(1.0);
    for _ in 0..=30 {
        let mut y = base.clone();
        y.axpy(s, &v);
        let l = y.argmax_block();
        let loss_bar = scheme.loss(alpha_bar, data, &y)?;
        for k in 0..=20 {
            let gain = 2f64.powi(k);
            let w = saturated_fit(scheme, data, y.block(l), l, gain, &mut seeded(sep_seed))?;
            let wl = scheme.loss(&w, data, &y)?;
            if loss_bar - wl >= target_gap + 2.0 {
                let shift: Vec<f64> = w.iter().zip(alpha_bar).map(|(a, b)| a - b).collect();
                let nu = 0.5 / p_norm_pow(&shift, p).max(1e-300);
                let terms = RegTerms { nu, p, reference: Some(alpha_bar.to_vec()) };
                let at_bar = objective(scheme, data, &y, &terms, alpha_bar)?;
                let at_w = objective(scheme, data, &y, &terms, &w)?;
                let certificate = SpuriousCertificate {
                    kind: CertificateKind::RegularizedSpurious,
                    scheme: scheme.clone(),
                    dataset: data.clone(),
                    dataset_hash: data.hash(),
                    alpha_bar: alpha_bar.to_vec(),
                    y_d: y.clone(),
                    loss_at_bar: at_bar,
                    witness: w.clone(),
                    witness_loss: at_w,
                    gap: at_bar - at_w,
                    target_gap: Some(target_gap),
                    grad_norm: Some(RegProblem::new(scheme.clone(), data.clone(), y.clone(), terms.clone())?.reg_grad(alpha_bar)?.grad.iter().map(|g| g * g).sum::<f64>().sqrt()),
                    neighborhood_radius: None,
                    growth_report: Vec::new(),
                    s,
                    v: v.clone(),
                    theta_used: scheme.theta_cap(data.n()),
                    theta_source: crate::constructions::ThetaSource::Cap,
                    provenance: "zero_first_layer_regularized".into(),
                    seed,
                    tolerances: Default::default(),
                    regularization: Some(terms),
                };
                return Ok(RegSpuriousResult { y_d: y, nu, witness: w, gain, certificate });
            }
        }
        s *= 2.0;
    }
    Err(Error::SearchFailed("no witness reached the requested gap".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegVerifyReport {
    /// Smallest observed quotient (R(ᾱ+h) − R(ᾱ))/‖h‖₂².
    pub epsilon: f64,
    pub radius: f64,
    pub halvings: usize,
    pub gap: f64,
    pub target_gap: f64,
    pub growth_pass: bool,
    pub gap_pass: bool,
    pub pass: bool,
}

/// Sampled quadratic growth around ᾱ (radius halved until every quotient is
/// positive, at most 40 times) and the recomputed regularized gap.
pub fn verify_reg_certificate(cert: &SpuriousCertificate, radius: f64, samples: usize, seed: u64) -> Result<RegVerifyReport> {
    let terms = cert.regularization.as_ref().ok_or_else(|| invalid("certificate carries no regularization terms"))?;
    let (scheme, data, y) = (&cert.scheme, &cert.dataset, &cert.y_d);
    let base_psi = scheme.eval_batch(&cert.alpha_bar, data)?;
    let resid = base_psi.sub(y)?;
    let mut r = radius;
    let mut halvings = 0;
    let mut epsilon = f64::NEG_INFINITY;
    let mut growth_pass = false;
    while halvings <= 40 {
        let mut rng = seeded(seed);
        let mut worst = f64::INFINITY;
        for _ in 0..samples {
            let scale = r * rng::uniform(&mut rng, 0.05, 1.0);
            let dir = rng::unit_sphere(&mut rng, cert.alpha_bar.len());
            let h: Vec<f64> = dir.iter().map(|d| scale * d).collect();
            let a: Vec<f64> = cert.alpha_bar.iter().zip(&h).map(|(p, q)| p + q).collect();
            let dpsi = scheme.eval_batch(&a, data)?.sub(&base_psi)?;
            let pen = terms.penalty(&a) - terms.penalty(&cert.alpha_bar);
            let num = dpsi.norm_sq() + 2.0 * dpsi.inner(&resid)? + terms.nu * pen;
            worst = worst.min(num / (scale * scale));
        }
        epsilon = worst;
        if worst > 0.0 {
            growth_pass = true;
            break;
        }
        r *= 0.5;
        halvings += 1;
    }
    let at_bar = cert.objective(&cert.alpha_bar, y)?;
    let at_w = cert.objective(&cert.witness, y)?;
    let gap = at_bar - at_w;
    let target_gap = cert.target_gap.unwrap_or(0.0);
    let gap_pass = gap >= target_gap && gap > 0.0;
    Ok(RegVerifyReport { epsilon, radius: r, halvings, gap, target_gap, growth_pass, gap_pass, pass: growth_pass && gap_pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KillRow {
    pub s: f64,
    /// R(0) = s².
    pub value_at_zero: f64,
    pub best_value: f64,
    pub beaten: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxKillReport {
    pub nu: f64,
    pub p: f64,
    pub rows: Vec<KillRow>,
    /// Largest grid s below which no start beat α = 0.
    pub empirical_threshold: f64,
    /// min(ν, √ν·r) with r the measured Taylor radius.
    pub predicted_threshold: f64,
    pub taylor_radius: f64,
    pub certified: bool,
}

/// Radius r such that sampled α with ‖α‖₂ ≤ r keep the V₂-orthogonal part of
/// Ψ(α) below ½‖α‖₂² (bisection over [1e−6, 10]).
fn taylor_radius(scheme: &Scheme, data: &Dataset, v2: &SubspaceBasis, seed: u64) -> Result<f64> {
    let m = scheme.param_count();
    let ok = |r: f64| -> Result<bool> {
        let mut rng = seeded(seed);
        for _ in 0..64 {
            let scale = r * rng::uniform(&mut rng, 0.1, 1.0);
            let a: Vec<f64> = rng::unit_sphere(&mut rng, m).iter().map(|d| scale * d).collect();
            if v2.distance(&scheme.eval_batch(&a, data)?)? > 0.5 * scale * scale {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (mut lo, mut hi) = (1e-6, 10.0);
    if ok(hi)? {
        return Ok(hi);
    }
    if !ok(lo)? {
        return Ok(0.0);
    }
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Multistart search for points beating α = 0 on labels s·v, v ⊥ V₂.
pub fn approx_kill_probe(scheme: &Scheme, data: &Dataset, nu: f64, p: f64, s_grid: &[f64], starts: usize, seed: u64) -> Result<ApproxKillReport> {
    let m = scheme.param_count();
    let zero = vec![0.0; m];
    if scheme.eval_batch(&zero, data)?.norm() != 0.0 {
        return Err(Error::Hypothesis("ψ(0, ·) must vanish".into()));
    }
    if !(nu > 0.0) {
        return Err(invalid("ν must be positive"));
    }
    let v2 = poly_space_basis(data, 2, scheme.output_dim())?;
    let mut rng = seeded(seed);
    let v = complement_direction(&v2, &mut rng)?;
    let terms = RegTerms { nu, p, reference: None };
    let settings = DescentSettings { max_iters: 1000, ..DescentSettings::default() };
    let mut grid = s_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows = grid
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut r = task_rng(seed, i as u64 + 1);
            let y = v.scaled(s);
            let prob = RegProblem::new(scheme.clone(), data.clone(), y.clone(), terms.clone())?;
            let mut st: Vec<Vec<f64>> = Vec::with_capacity(starts + 1);
            if s != 0.0 {
                let w = expressiveness_witness(scheme, data, &y, &mut r)?;
                let img = scheme.eval_batch(&w.alpha, data)?;
                let t = img.inner(&y)? / img.norm_sq().max(1e-300);
                st.extend(scheme.scale_output(&w.alpha, t));
            }
            for _ in 0..starts {
                st.push(scheme.random_params(&mut r, 1.0, (-1.0, 1.0)));
            }
            let (res, best) = multistart(&st, |a| prob.minimize(a, &settings));
            let best_value = best.and_then(|b| res[b].as_ref()).map_or(f64::INFINITY, |b| b.value);
            let value_at_zero = prob.reg_loss(&zero)?;
            Ok(KillRow { s, value_at_zero, best_value, beaten: best_value < value_at_zero - 1e-9 * (1.0 + value_at_zero) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut empirical_threshold = 0.0;
    for row in &rows {
        if row.beaten {
            break;
        }
        empirical_threshold = row.s;
    }
    let taylor = taylor_radius(scheme, data, &v2, seed)?;
    let predicted_threshold = nu.min(nu.sqrt() * taylor);
    Ok(ApproxKillReport { nu, p, rows, empirical_threshold, predicted_threshold, taylor_radius: taylor, certified: false })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorReport {
    /// max_h dist_{V₁}(Ψ(ᾱ) + ∂Ψ⟨h⟩) / scale.
    pub r1: f64,
    /// max_h dist_{V₂}(Ψ(ᾱ) + ∂Ψ⟨h⟩ + ½∂²Ψ⟨h,h⟩) / scale, second term by
    /// central differences of the directional derivative.
    pub r2: f64,
    /// Same with the exact second directional derivative.
    pub r2_exact: f64,
    /// Median ratios dist_{V_k}(Ψ(ᾱ+h))/‖h‖ at h versus h/10 (≈ 10 and ≈ 100).
    pub shrink_ratio_1: f64,
    pub shrink_ratio_2: f64,
    pub shrink_pass: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Taylor structure at a point with zero first weight matrix: first- and
/// second-order expansions land in the polynomial spaces V₁ and V₂.
pub fn taylor_subspace_check(scheme: &Scheme, data: &Dataset, alpha_bar: &[f64], seed: u64) -> Result<TaylorReport> {
    zero_first_layer(scheme, alpha_bar)?;
    if !scheme.is_smooth() {
        return Err(Error::Hypothesis("activations must be twice differentiable".into()));
    }
    let dy = scheme.output_dim();
    let v1 = poly_space_basis(data, 1, dy)?;
    let v2 = poly_space_basis(data, 2, dy)?;
    let base = scheme.eval_batch(alpha_bar, data)?;
    let m = alpha_bar.len();
    let mut rng = seeded(seed);
    let (mut r1, mut r2, mut r2x) = (0.0f64, 0.0f64, 0.0f64);
    let mut ratios1 = Vec::new();
    let mut ratios2 = Vec::new();
    for _ in 0..50 {
        let h = rng::unit_sphere(&mut rng, m);
        let jh = scheme.jvp(alpha_bar, data, &h)?;
        let scale = 1.0 + base.norm() + jh.norm();
        let mut first = base.clone();
        first.axpy(1.0, &jh);
        r1 = r1.max(v1.distance(&first)? / scale);
        let t = 1e-4;
        let plus: Vec<f64> = alpha_bar.iter().zip(&h).map(|(a, b)| a + t * b).collect();
        let minus: Vec<f64> = alpha_bar.iter().zip(&h).map(|(a, b)| a - t * b).collect();
        let d2 = scheme.jvp(&plus, data, &h)?.sub(&scheme.jvp(&minus, data, &h)?)?.scaled(1.0 / (2.0 * t));
        let mut second = first.clone();
        second.axpy(0.5, &d2);
        r2 = r2.max(v2.distance(&second)? / (scale + d2.norm()));
        let d2x = scheme.second_directional(alpha_bar, data, &h)?;
        let mut second_x = first.clone();
        second_x.axpy(0.5, &d2x);
        r2x = r2x.max(v2.distance(&second_x)? / (scale + d2x.norm()));

        let at = |f: f64| -> Result<(f64, f64)> {
            let a: Vec<f64> = alpha_bar.iter().zip(&h).map(|(p, q)| p + f * q).collect();
            let psi = scheme.eval_batch(&a, data)?;
            Ok((v1.distance(&psi)? / f, v2.distance(&psi)? / f))
        };
        let (e1a, e2a) = at(0.1)?;
        let (e1b, e2b) = at(0.01)?;
        ratios1.push(e1a / e1b.max(1e-300));
        ratios2.push(e2a / e2b.max(1e-300));
    }
    let shrink_ratio_1 = median(ratios1);
    let shrink_ratio_2 = median(ratios2);
    let shrink_pass = (5.0..=20.0).contains(&shrink_ratio_1) && (50.0..=200.0).contains(&shrink_ratio_2);
    Ok(TaylorReport { r1, r2, r2_exact: r2x, shrink_ratio_1, shrink_ratio_2, shrink_pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub s: f64,
    /// Multistart infimum F(s) of the regularized objective.
    pub f: f64,
    /// Objective value at ᾱ.
    pub at_bar: f64,
    /// ∞-distance of the best point from ᾱ.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstabilityDemo {
    pub nu: f64,
    pub p: f64,
    pub v: YVector,
    pub base: YVector,
    /// None when the crossing was not bracketed.
    pub s0: Option<f64>,
    pub trace: Vec<TracePoint>,
    /// Labels just above s₀ with minimizers away from ᾱ.
    pub above: Vec<TracePoint>,
    /// Objective at y^{s₀} of the minimizers above, minus the value at ᾱ.
    pub excess_at_s0: Vec<f64>,
    pub certified: bool,
}

fn best_of(prob: &RegProblem, starts: &[Vec<f64>], settings: &DescentSettings) -> Option<DescentResult> {
    let (res, best) = multistart(starts, |a| prob.minimize(a, settings));
    best.and_then(|b| res[b].clone())
}

/// Traces F(s) along y^s = Ψ(ᾱ) + s·v (v ⊥ V₂) with continuation, brackets
/// the first s where some point beats ᾱ, and bisects to s₀.
pub fn reg_instability_demo(scheme: &Scheme, data: &Dataset, alpha_bar: &[f64], nu: f64, p: f64, seed: u64) -> Result<InstabilityDemo> {
    zero_first_layer(scheme, alpha_bar)?;
    let v2 = check_quadratic_room(scheme, data)?;
    let mut rng = seeded(seed);
    let v = complement_direction(&v2, &mut rng)?;
    let base = scheme.eval_batch(alpha_bar, data)?;
    let terms = RegTerms { nu, p, reference: Some(alpha_bar.to_vec()) };
    terms.validate(alpha_bar.len())?;
    let settings = DescentSettings { max_iters: 400, ..DescentSettings::default() };
    let random_starts: Vec<Vec<f64>> = (0..19).map(|_| scheme.random_params(&mut rng, 1.0, (-1.0, 1.0))).collect();
    let label = |s: f64| {
        let mut y = base.clone();
        y.axpy(s, &v);
        y
    };
    let eval_f = |s: f64, warm: Option<&Vec<f64>>, r: &mut Rng| -> Result<(TracePoint, Vec<f64>)> {
        let y = label(s);
        let prob = RegProblem::new(scheme.clone(), data.clone(), y.clone(), terms.clone())?;
        let mut starts = random_starts.clone();
        starts.push(match warm {
            Some(w) => w.clone(),
            None => expressiveness_witness(scheme, data, &y, r)?.alpha,
        });
        let at_bar = prob.reg_loss(alpha_bar)?;
        let best = best_of(&prob, &starts, &settings).ok_or_else(|| Error::SearchFailed("no start in the domain".into()))?;
        let distance = best.alpha.iter().zip(alpha_bar).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok((TracePoint { s, f: best.value.min(at_bar), at_bar, distance }, best.alpha))
    };
    let beaten = |t: &TracePoint| t.f < t.at_bar - 1e-9 * (1.0 + t.at_bar);
    let mut trace = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut s = 0.25;
    let mut bracket = None;
    let mut prev_s = 0.0;
    for _ in 0..12 {
        let (pt, a) = eval_f(s, warm.as_ref(), &mut rng)?;
        let hit = beaten(&pt);
        trace.push(pt);
        if hit {
            bracket = Some((prev_s, s, a));
            break;
        }
        warm = Some(a);
        prev_s = s;
        s *= 2.0;
    }
    let Some((mut lo, mut hi, mut hi_alpha)) = bracket else {
        return Ok(InstabilityDemo { nu, p, v, base, s0: None, trace, above: Vec::new(), excess_at_s0: Vec::new(), certified: false });
    };
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let (pt, a) = eval_f(mid, Some(&hi_alpha), &mut rng)?;
        if beaten(&pt) {
            hi = mid;
            hi_alpha = a;
        } else {
            lo = mid;
        }
    }
    let s0 = hi;
    let prob0 = RegProblem::new(scheme.clone(), data.clone(), label(s0), terms.clone())?;
    let at_bar0 = prob0.reg_loss(alpha_bar)?;
    let mut above = Vec::new();
    let mut excess = Vec::new();
    for k in 0..4 {
        let sk = s0 + 0.5f64.powi(k) * (hi - lo).max(1e-4) * 8.0;
        let (pt, a) = eval_f(sk, Some(&hi_alpha), &mut rng)?;
        excess.push(prob0.reg_loss(&a)? - at_bar0);
        above.push(pt);
    }
    Ok(InstabilityDemo { nu, p, v, base, s0: Some(s0), trace, above, excess_at_s0: excess, certified: false })
}
