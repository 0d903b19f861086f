//! One function per subcommand. Each returns the pass/fail verdict, a few
//! summary lines, the machine report and any extra artifacts.

use anyhow::{Context, Result};
use landscape::constructions::{affine_embed, constant_embed, expressiveness_witness, freeknot_affine_embed, EmbeddingResult, ThetaSource};
use landscape::projection::{
    discontinuity_probe, find_multivalued, sample_image, solar_check, sublevel_components, theta_from_cloud, CloudSpec, GridSpec,
};
use landscape::regularized::{approx_kill_probe, reg_instability_demo, reg_spurious_construct, verify_reg_certificate};
use landscape::rng::{seeded, task_rng};
use landscape::theta::theta_heuristic;
use landscape::verify::{
    build_pair_certificate, build_spurious_certificate, classify_pair, pair_setup, verify_certificate, CertificateKind, SpuriousCertificate,
};
use landscape::yspace::{diameter, jung_bound, jung_check, regular_simplex};
use landscape::{Dataset, Scheme, YVector};
use serde_json::{json, Value};

use crate::config::{EmbeddingRouteSpec, ExperimentConfig};
use crate::ConfigError;

pub struct Outcome {
    pub pass: bool,
    pub summary: Vec<String>,
    pub report: Value,
    /// Extra files (name, contents) written next to the report.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

pub struct Context_<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub base: &'a std::path::Path,
}

fn scheme_and_data(ctx: &Context_) -> Result<(Scheme, Dataset)> {
    let scheme = ctx.cfg.scheme().map_err(|e| ConfigError(e.to_string()))?.clone();
    let data = ctx.cfg.dataset(ctx.base, ctx.seed).map_err(|e| ConfigError(e.to_string()))?;
    Ok((scheme, data))
}

fn theta_for(ctx: &Context_, scheme: &Scheme, n: usize) -> (f64, ThetaSource) {
    match ctx.cfg.options.theta {
        Some(t) => (t, ThetaSource::Heuristic),
        None => (scheme.theta_cap(n), ThetaSource::Cap),
    }
}

/// The configured ᾱ, or random parameters with the first weight matrix zeroed.
fn zero_first_layer_point(ctx: &Context_, scheme: &Scheme) -> Result<Vec<f64>> {
    if let Some(a) = &ctx.cfg.options.alpha_bar {
        return Ok(a.clone());
    }
    let net = scheme.network().ok_or_else(|| ConfigError("this command needs a network scheme".into()))?;
    let mut a = scheme.random_params(&mut task_rng(ctx.seed, 0), 1.0, (-1.0, 1.0));
    a[net.first_weight_range()].iter_mut().for_each(|v| *v = 0.0);
    Ok(a)
}

pub fn witness(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let labels = ctx.cfg.options.labels;
    let rows = (0..labels)
        .map(|i| {
            let mut rng = task_rng(ctx.seed, i as u64);
            let y = YVector::random_unit(data.n(), scheme.output_dim(), &mut rng);
            let w = expressiveness_witness(&scheme, &data, &y, &mut rng)?;
            Ok(json!({ "y_d": y, "witness": w, "beats_zero": w.witness_loss < y.norm_sq() }))
        })
        .collect::<Result<Vec<Value>>>()?;
    let worst = rows.iter().map(|r| r["witness"]["witness_loss"].as_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let bound = 1.0 - 1.0 / data.n() as f64;
    let pass = rows.iter().all(|r| r["beats_zero"] == json!(true));
    Ok(Outcome {
        pass,
        summary: vec![format!("{labels} unit labels, worst witness loss {worst:.6} (1 − 1/n = {bound:.6})")],
        report: json!({ "scheme": scheme, "dataset": data, "worst_witness_loss": worst, "one_minus_inv_n": bound, "rows": rows }),
        artifacts: Vec::new(),
    })
}

pub fn theta(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let o = &ctx.cfg.options;
    let est = theta_heuristic(&scheme, &data, o.labels, o.starts, o.max_iters, ctx.seed)?;
    let pass = est.heuristic <= est.cap + 1e-9;
    Ok(Outcome {
        pass,
        summary: vec![format!("heuristic Θ {:.6} (not certified), cap {:.6}", est.heuristic, est.cap)],
        report: json!({ "scheme": scheme, "dataset": data, "estimate": est }),
        artifacts: Vec::new(),
    })
}

fn embedding(ctx: &Context_, scheme: &Scheme, data: &Dataset) -> Result<EmbeddingResult> {
    let default_route = if matches!(scheme, Scheme::FreeKnotSpline { .. }) { EmbeddingRouteSpec::FreeKnot } else { EmbeddingRouteSpec::Affine };
    let (route, a, b) = match &ctx.cfg.options.embedding {
        Some(e) => (e.route, e.a.clone(), e.b.clone()),
        None => {
            let mut row = vec![0.0; data.dx()];
            row[0] = 0.8;
            (default_route, vec![row], vec![-0.2])
        }
    };
    Ok(match route {
        EmbeddingRouteSpec::Affine => affine_embed(scheme, data, &a, &b)?,
        EmbeddingRouteSpec::Constant => constant_embed(scheme, data, &b)?,
        EmbeddingRouteSpec::FreeKnot => {
            let slope = a.first().and_then(|r| r.first()).copied().ok_or_else(|| ConfigError("free_knot embedding needs a = [[slope]]".into()))?;
            let offset = *b.first().ok_or_else(|| ConfigError("free_knot embedding needs b = [offset]".into()))?;
            freeknot_affine_embed(scheme, data, slope, offset)?
        }
    })
}

pub fn spurious(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let o = &ctx.cfg.options;
    let e = embedding(ctx, &scheme, &data)?;
    let (theta, source) = theta_for(ctx, &scheme, data.n());
    let cert = build_spurious_certificate(&scheme, &data, &e, o.multiplier, theta, source, o.target_gap, o.growth_samples, ctx.seed)?;
    let verdict = verify_certificate(&cert, o.growth_samples)?;
    Ok(Outcome {
        pass: verdict.pass,
        summary: vec![format!(
            "certificate via {}: loss at ᾱ {:.6}, witness {:.6}, gap {:.6}, ρ {:.3e}",
            cert.provenance, cert.loss_at_bar, cert.witness_loss, cert.gap, e.neighborhood_radius
        )],
        report: json!({ "certificate_file": "certificate.json", "verdict": verdict }),
        artifacts: vec![("certificate.json".into(), serde_json::to_vec_pretty(&cert)?)],
    })
}

pub fn saddle_pair(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let o = &ctx.cfg.options;
    let alpha = zero_first_layer_point(ctx, &scheme)?;
    let (theta, _) = theta_for(ctx, &scheme, data.n());
    let setup = pair_setup(&scheme, &data, &alpha, o.multiplier, theta, &mut seeded(ctx.seed))?;
    let mut artifacts = Vec::new();
    let mut grads = Vec::new();
    for (sign, name) in [(1.0, "certificate_plus.json"), (-1.0, "certificate_minus.json")] {
        let cert = build_pair_certificate(&scheme, &data, &alpha, &setup, sign, ctx.seed)?;
        grads.push(cert.grad_norm.unwrap_or(f64::INFINITY));
        artifacts.push((name.to_string(), serde_json::to_vec_pretty(&cert)?));
    }
    let cls = classify_pair(&scheme, &alpha, &data, &setup.base, &setup.v, setup.s, None, ctx.seed)?;
    let stationary = grads.iter().all(|g| *g <= 1e-8);
    Ok(Outcome {
        pass: cls.pass && stationary,
        summary: vec![format!(
            "s = {:.4}: +s {:?} (gap {:.4}), −s {:?} (gap {:.4}), ‖∇‖ ≤ {:.2e}",
            setup.s,
            cls.plus.classification,
            cls.plus.witness_gap,
            cls.minus.classification,
            cls.minus.witness_gap,
            grads.iter().cloned().fold(0.0, f64::max)
        )],
        report: json!({ "alpha_bar": alpha, "s": setup.s, "threshold": setup.threshold, "classification": cls, "grad_norms": grads }),
        artifacts,
    })
}

pub fn reg_spurious(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let o = &ctx.cfg.options;
    let alpha = zero_first_layer_point(ctx, &scheme)?;
    let res = reg_spurious_construct(&scheme, &data, &alpha, o.p, o.target_gap.unwrap_or(1.0), ctx.seed)?;
    let rep = verify_reg_certificate(&res.certificate, o.reg_radius, o.growth_samples, ctx.seed)?;
    Ok(Outcome {
        pass: rep.pass,
        summary: vec![format!("ν = {:.4e}, gain {}, ε = {:.3e} on radius {:.3e}, gap {:.4}", res.nu, res.gain, rep.epsilon, rep.radius, rep.gap)],
        report: json!({ "nu": res.nu, "gain": res.gain, "verification": rep, "certificate_file": "certificate.json" }),
        artifacts: vec![("certificate.json".into(), serde_json::to_vec_pretty(&res.certificate)?)],
    })
}

pub fn reg_kill(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let o = &ctx.cfg.options;
    let rep = approx_kill_probe(&scheme, &data, o.nu, o.p, &o.s_grid, o.starts, ctx.seed)?;
    let pass = rep.empirical_threshold >= rep.predicted_threshold * (1.0 - 1e-9);
    Ok(Outcome {
        pass,
        summary: vec![format!(
            "empirical threshold {:.4} vs predicted {:.4} (Taylor radius {:.4}); heuristic, not certified",
            rep.empirical_threshold, rep.predicted_threshold, rep.taylor_radius
        )],
        report: serde_json::to_value(&rep)?,
        artifacts: Vec::new(),
    })
}

pub fn instability(ctx: &Context_) -> Result<Outcome> {
    let (scheme, data) = scheme_and_data(ctx)?;
    let o = &ctx.cfg.options;
    let alpha = zero_first_layer_point(ctx, &scheme)?;
    let demo = reg_instability_demo(&scheme, &data, &alpha, o.nu, o.p, ctx.seed)?;
    let line = match demo.s0 {
        Some(s0) => format!("crossing s₀ ≈ {s0:.5}; excess at s₀ of the minimizers above: {:?}", demo.excess_at_s0),
        None => "crossing not bracketed in the scanned range; no demo".to_string(),
    };
    Ok(Outcome { pass: true, summary: vec![line], report: serde_json::to_value(&demo)?, artifacts: Vec::new() })
}

fn csv_bytes(cloud: &landscape::projection::ImageCloud, stride: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    cloud.write_csv(&mut buf, stride)?;
    Ok(buf)
}

pub fn figure1(ctx: &Context_) -> Result<Outcome> {
    let o = &ctx.cfg.options;
    let data = match &ctx.cfg.dataset {
        Some(_) => ctx.cfg.dataset(ctx.base, ctx.seed).map_err(|e| ConfigError(e.to_string()))?,
        None => Dataset::from_scalars(&[-0.5, 0.5, 1.0])?,
    };
    let toy_spec = o.toy_cloud.clone().unwrap_or_else(CloudSpec::toy_default);
    let linear_spec = o.linear_cloud.clone().unwrap_or(CloudSpec { grid: Some(GridSpec { lo: -2.0, hi: 2.0, step: 0.01 }), random_points: 0, random_lo: -2.0, random_hi: 2.0 });
    let toy = sample_image(&Scheme::ToyLightning, &data, &toy_spec, ctx.seed)?;
    let linear = sample_image(&Scheme::Linear, &data, &linear_spec, ctx.seed)?;
    let reproduction = toy.reproduction_error()?.max(linear.reproduction_error()?);
    let planar = linear.pca_residual();

    let artifacts = vec![("figure1_toy.csv".into(), csv_bytes(&toy, o.csv_stride)?), ("figure1_linear.csv".into(), csv_bytes(&linear, o.csv_stride)?)];
    let mut summary = vec![format!(
        "toy cloud {} points (resolution {:.2e}), linear cloud {} points (PCA residual {:.1e})",
        toy.len(),
        toy.resolution,
        linear.len(),
        planar
    )];
    let mut report = json!({
        "dataset": data,
        "toy": toy.summary(),
        "linear": linear.summary(),
        "reproduction_error": reproduction,
        "linear_pca_residual": planar,
        "csv_columns": "y1..y_n then a1..a_m",
    });
    let shape_ok = reproduction <= 1e-12 && planar <= 1e-10;

    // A coarse cloud may not expose a multivalued label; keep the clouds and report the miss.
    let mv = match find_multivalued(&toy, 5.0 * toy.resolution, 400, ctx.seed) {
        Ok(mv) => mv,
        Err(e) => {
            summary.push(format!("multivalued search failed: {e}"));
            report["multivalued"] = json!({ "error": e.to_string() });
            return Ok(Outcome { pass: false, summary, report, artifacts });
        }
    };
    let z1 = mv.projection.clusters[0].representative.clone();
    let z2 = mv.projection.clusters[1].representative.clone();
    let probe = discontinuity_probe(&toy, &mv.y_d, &z1, &z2, 20)?;
    let theta = theta_from_cloud(&toy, 1024, ctx.seed);
    let solar = solar_check(&toy, &mv.y_d, &z1, theta, &[0.5, 1.0, 2.0, 4.0])?;
    let mut perturbed = mv.y_d.scaled(0.95);
    perturbed.axpy(0.05, &z1);
    let g = toy_spec.grid.clone().unwrap_or(GridSpec { lo: toy_spec.random_lo, hi: toy_spec.random_hi, step: 0.02 });
    let sweep = GridSpec { step: g.step.max(0.02), ..g };
    let sublevel = sublevel_components(&Scheme::ToyLightning, &data, &perturbed, &z1, &z2, &sweep)?;

    let pass = shape_ok && probe.pass && solar.pass && sublevel.disjoint;
    summary.push(format!(
        "multivalued label at distance {:.4}: clusters {} apart; discontinuity probe {}",
        mv.projection.min_dist,
        probe.target_separation,
        if probe.pass { "passes" } else { "fails" }
    ));
    summary.push(format!("solar check with cloud Θ̂ = {theta:.4} (heuristic, toy is not conic): {}", if solar.pass { "passes" } else { "fails" }));
    summary.push(format!("sublevel basins disjoint: {}", sublevel.disjoint));
    report["multivalued"] = json!(mv);
    report["discontinuity"] = json!(probe);
    report["theta_from_cloud"] = json!(theta);
    report["solar"] = json!(solar);
    report["sublevel"] = json!(sublevel);
    Ok(Outcome { pass, summary, report, artifacts })
}

pub fn jung(ctx: &Context_) -> Result<Outcome> {
    let o = &ctx.cfg.options;
    let mut reports = Vec::new();
    let mut violations = 0;
    for d in 1..=o.jung_max_dim {
        let rep = jung_check(d, 1.0, o.jung_trials, &mut task_rng(ctx.seed, d as u64))?;
        violations += rep.violations;
        reports.push(json!({ "d": d, "trials": rep.trials.len(), "violations": rep.violations, "bound": rep.r * ((2.0 * d as f64 + 2.0) / d as f64).sqrt() }));
    }
    let mut equality = Vec::new();
    for d in [1usize, 2] {
        let pts = regular_simplex(d, 1.0)?;
        equality.push((diameter(&pts) - jung_bound(d, 1.0)).abs());
    }
    let pass = violations == 0 && equality.iter().all(|e| *e <= 1e-12);
    Ok(Outcome {
        pass,
        summary: vec![format!("{violations} violations over d = 1..{}; simplex equality gaps {:?}", o.jung_max_dim, equality)],
        report: json!({ "dimensions": reports, "equality_gaps": equality }),
        artifacts: Vec::new(),
    })
}

pub fn verify(ctx: &Context_, path: &std::path::Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(|e| ConfigError(format!("{e:#}")))?;
    let cert: SpuriousCertificate = serde_json::from_str(&text).map_err(|e| ConfigError(format!("parsing {}: {e}", path.display())))?;
    let verdict = verify_certificate(&cert, ctx.cfg.options.growth_samples)?;
    let mut pass = verdict.pass;
    let mut reg = None;
    if cert.kind == CertificateKind::RegularizedSpurious {
        let r = verify_reg_certificate(&cert, ctx.cfg.options.reg_radius, ctx.cfg.options.growth_samples, cert.seed)?;
        pass &= r.pass;
        reg = Some(r);
    }
    Ok(Outcome {
        pass,
        summary: vec![format!(
            "{:?} certificate: gap {:.6} (recomputed), spurious check {}, label {}",
            cert.kind,
            verdict.spurious.gap,
            if verdict.spurious.pass { "passes" } else { "fails" },
            if verdict.label_consistent { "consistent" } else { "inconsistent" }
        )],
        report: json!({ "certificate": path.file_name().map(|f| f.to_string_lossy().to_string()), "verdict": verdict, "regularized": reg }),
        artifacts: Vec::new(),
    })
}
