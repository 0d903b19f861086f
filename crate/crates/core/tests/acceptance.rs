//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::Instant;

use landscape::constructions::{affine_embed, expressiveness_witness, freeknot_affine_embed, EmbeddingResult, ThetaSource};
use landscape::projection::{
    discontinuity_probe, find_multivalued, project, sample_image, solar_check, theta_from_cloud, CloudSpec, GridSpec, CLUSTER_TOL,
};
use landscape::regularized::{approx_kill_probe, reg_spurious_construct, taylor_subspace_check, verify_reg_certificate};
use landscape::rng::{seeded, task_rng};
use landscape::scheme::max_relative_error;
use landscape::theta::theta_heuristic;
use landscape::verify::{build_pair_certificate, build_spurious_certificate, classify_pair, pair_setup, scaling_check, verify_certificate, Classification};
use landscape::yspace::{diameter, jung_bound, jung_check, regular_simplex};
use landscape::{Activation, Dataset, Network, Result, Scheme, YVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn net(widths: &[usize], act: Activation) -> Scheme {
    Scheme::feed_forward(Network::uniform(1, 1, widths, act).unwrap()).unwrap()
}

/// Largest witness loss over 200 unit labels.
fn worst_witness(scheme: &Scheme, data: &Dataset, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..200 {
        let mut rng = task_rng(seed, i);
        let y = YVector::random_unit(data.n(), 1, &mut rng);
        worst = worst.max(expressiveness_witness(scheme, data, &y, &mut rng)?.witness_loss);
    }
    Ok(worst)
}

fn witness_bound() -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [4usize, 8, 16] {
        let data = Dataset::random_sorted_1d(n, -1.0, 1.0, &mut seeded(n as u64)).unwrap();
        let bound = 1.0 - 1.0 / n as f64;
        let exact = [
            ("free_knot_p3", Scheme::free_knot(3)?),
            ("heaviside_L1", net(&[2], Activation::Heaviside { c: 0.5 })),
            ("heaviside_L3", net(&[2, 2, 2], Activation::Heaviside { c: 0.5 })),
        ];
        for (name, s) in &exact {
            let w = worst_witness(s, &data, 11)?;
            let ok = w <= bound + 4.0 * f64::EPSILON;
            pass &= ok;
            lines.push(format!("{name}/n={n}: {w:.6}≤{bound:.6}{}", if ok { "" } else { " VIOLATED" }));
        }
        let saturated = [
            ("tanh", net(&[2], Activation::Tanh)),
            ("sigmoid", net(&[2, 2], Activation::Sigmoid)),
            ("relu", net(&[2, 2], Activation::Relu)),
        ];
        for (name, s) in &saturated {
            let w = worst_witness(s, &data, 12)?;
            let ok = w <= bound + 1e-3;
            pass &= ok;
            lines.push(format!("{name}/n={n}: {w:.6}{}", if ok { "" } else { " VIOLATED" }));
        }
    }
    Ok(outcome(pass, lines.join(", ")))
}

fn leaky_setup() -> Result<(Scheme, Dataset, EmbeddingResult)> {
    let s = net(&[2, 2], Activation::LeakyRelu { c: 0.01 });
    let d = Dataset::from_scalars(&[-1.0, -0.4, 0.1, 0.7, 1.3])?;
    let e = affine_embed(&s, &d, &[vec![0.8]], &[-0.2])?;
    Ok((s, d, e))
}

fn spline_setup() -> Result<(Scheme, Dataset, EmbeddingResult)> {
    let s = Scheme::free_knot(3)?;
    let d = Dataset::random_sorted_1d(10, -1.0, 1.0, &mut seeded(10))?;
    let e = freeknot_affine_embed(&s, &d, 0.8, -0.2)?;
    Ok((s, d, e))
}

fn spurious_certificates() -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, (s, d, e)) in [("leaky_relu", leaky_setup()?), ("free_knot", spline_setup()?)] {
        let theta = s.theta_cap(d.n());
        let plain = build_spurious_certificate(&s, &d, &e, 2.0, theta, ThetaSource::Cap, None, 200, 1)?;
        let equality = plain.growth_report.len() == 200 && plain.growth_report.iter().all(|r| r.inside_radius && r.pass && (r.lhs - r.rhs).abs() <= 1e-9 * (1.0 + r.rhs.abs()));
        let gap_positive = plain.gap > 0.0 && verify_certificate(&plain, 200)?.pass;
        let target = build_spurious_certificate(&s, &d, &e, 2.0, theta, ThetaSource::Cap, Some(10.0), 200, 2)?;
        let gap_ten = target.gap >= 10.0 && verify_certificate(&target, 200)?.pass;
        pass &= equality && gap_positive && gap_ten;
        lines.push(format!("{name}: equality={equality} gap={:.4} gap(C=10)={:.4}", plain.gap, target.gap));
    }
    Ok(outcome(pass, lines.join(", ")))
}

fn saddle_pair() -> Result<Outcome> {
    let network = Network::uniform(1, 1, &[3], Activation::Tanh)?;
    let s = Scheme::feed_forward(network.clone())?;
    let d = Dataset::from_scalars(&[-1.0, -0.5, 0.0, 0.6, 1.2])?;
    let mut rng = seeded(5);
    let mut alpha = s.random_params(&mut rng, 1.0, (-1.0, 1.0));
    alpha[network.first_weight_range()].iter_mut().for_each(|v| *v = 0.0);
    let setup = pair_setup(&s, &d, &alpha, 2.0, s.theta_cap(5), &mut rng)?;
    let mut grads = Vec::new();
    for sign in [1.0, -1.0] {
        grads.push(build_pair_certificate(&s, &d, &alpha, &setup, sign, 1)?.grad_norm.unwrap_or(f64::INFINITY));
    }
    let cls = classify_pair(&s, &alpha, &d, &setup.base, &setup.v, setup.s, None, 2)?;
    let useful = [&cls.plus, &cls.minus].iter().any(|b| b.classification != Classification::MaxLike && b.witness_gap > 0.0);
    let pass = grads.iter().all(|g| *g <= 1e-8) && useful;
    Ok(outcome(
        pass,
        format!("grad=({:.2e}, {:.2e}) plus={:?}/gap {:.3} minus={:?}/gap {:.3}", grads[0], grads[1], cls.plus.classification, cls.plus.witness_gap, cls.minus.classification, cls.minus.witness_gap),
    ))
}

fn regularized_minimum() -> Result<Outcome> {
    let network = Network::uniform(1, 1, &[2], Activation::Tanh)?;
    let s = Scheme::feed_forward(network.clone())?;
    let mut rng = seeded(7);
    let d = Dataset::random_sorted_1d(4, -1.0, 1.0, &mut rng)?;
    let mut alpha = s.random_params(&mut rng, 1.0, (-1.0, 1.0));
    alpha[network.first_weight_range()].iter_mut().for_each(|v| *v = 0.0);
    let res = reg_spurious_construct(&s, &d, &alpha, 2.0, 1.0, 11)?;
    let rep = verify_reg_certificate(&res.certificate, 0.1, 500, 3)?;
    let pass = rep.pass && rep.epsilon > 0.0 && rep.gap >= 1.0;
    Ok(outcome(pass, format!("ν={:.3e} ε={:.3e} radius={:.3e} gap={:.4}", res.nu, rep.epsilon, rep.radius, rep.gap)))
}

fn taylor_residuals() -> Result<Outcome> {
    let network = Network::uniform(1, 1, &[3, 2], Activation::Sigmoid)?;
    let s = Scheme::feed_forward(network.clone())?;
    let mut rng = seeded(9);
    let d = Dataset::random_sorted_1d(6, -1.0, 1.0, &mut rng)?;
    let mut alpha = s.random_params(&mut rng, 1.0, (-1.0, 1.0));
    alpha[network.first_weight_range()].iter_mut().for_each(|v| *v = 0.0);
    let rep = taylor_subspace_check(&s, &d, &alpha, 4)?;
    let pass = rep.r1 <= 1e-6 && rep.r2 <= 1e-6 && rep.shrink_pass;
    Ok(outcome(pass, format!("r1={:.2e} r2={:.2e} shrink=({:.1}, {:.1})", rep.r1, rep.r2, rep.shrink_ratio_1, rep.shrink_ratio_2)))
}

fn projection_lab() -> Result<Outcome> {
    let d = Dataset::from_scalars(&[-0.5, 0.5, 1.0])?;
    let cloud = sample_image(&Scheme::ToyLightning, &d, &CloudSpec::toy_default(), 1)?;
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let csv_path = dir.join("figure1_toy.csv");
    cloud.write_csv(std::fs::File::create(&csv_path)?, 1)?;
    let linear_spec = CloudSpec { grid: Some(GridSpec { lo: -2.0, hi: 2.0, step: 0.01 }), random_points: 0, random_lo: -2.0, random_hi: 2.0 };
    let linear = sample_image(&Scheme::Linear, &d, &linear_spec, 1)?;
    linear.write_csv(std::fs::File::create(dir.join("figure1_linear.csv"))?, 1)?;
    let planar = linear.pca_residual() <= 1e-10 && cloud.pca_residual() > 1e-2;
    let reproduces = cloud.reproduction_error()? <= 1e-12;

    let mv = find_multivalued(&cloud, 5.0 * cloud.resolution, 400, 7)?;
    let z1 = mv.projection.clusters[0].representative.clone();
    let z2 = mv.projection.clusters[1].representative.clone();
    let separated = mv.projection.multivalued && z1.distance(&z2)? >= cloud.sep_tol();
    let probe = discontinuity_probe(&cloud, &mv.y_d, &z1, &z2, 20)?;
    let theta = theta_from_cloud(&cloud, 1024, 3);
    let solar = solar_check(&cloud, &mv.y_d, &z1, theta, &[2.0])?;
    let pass = planar && reproduces && separated && probe.pass && solar.pass;
    Ok(outcome(
        pass,
        format!(
            "points={} resolution={:.2e} planar={planar} d={:.4} |z1−z2|={:.4} probe_sep={:.4} θ̂={:.3} solar={} csv={}",
            cloud.len(),
            cloud.resolution,
            mv.projection.min_dist,
            probe.target_separation,
            probe.final_separation,
            theta,
            solar.pass,
            csv_path.display()
        ),
    ))
}

fn jung_suite() -> Result<Outcome> {
    let mut violations = 0;
    for d in 1..=6 {
        violations += jung_check(d, 1.0, 1000, &mut seeded(100 + d as u64))?.violations;
    }
    let mut eq = Vec::new();
    for d in [1usize, 2] {
        let pts = regular_simplex(d, 1.0)?;
        eq.push((diameter(&pts) - jung_bound(d, 1.0)).abs());
    }
    let pass = violations == 0 && eq.iter().all(|e| *e <= 1e-12);
    Ok(outcome(pass, format!("violations={violations} equality gaps d=1: {:.1e}, d=2: {:.1e}", eq[0], eq[1])))
}

fn oracle_agreement() -> Result<Outcome> {
    let acts = [Activation::Tanh, Activation::Sigmoid, Activation::SoftPlus, Activation::Arctan, Activation::Silu];
    let mut grad_err = 0.0f64;
    for i in 0..100u64 {
        let mut rng = task_rng(8, i);
        let (dx, dy) = (1 + (i % 3) as usize, 1 + (i % 2) as usize);
        let widths: Vec<usize> = (0..1 + i % 3).map(|k| 2 + ((i + k) % 3) as usize).collect();
        let s = Scheme::feed_forward(Network::uniform(dx, dy, &widths, acts[(i % 5) as usize])?)?;
        let d = Dataset::random(4, dx, &mut rng)?;
        let y = YVector::random(4, dy, &mut rng);
        let a = s.random_params(&mut rng, 1.0, (-1.0, 1.0));
        let g = s.grad_loss(&a, &d, &y)?;
        grad_err = grad_err.max(max_relative_error(&g.grad, &s.fd_grad(&a, &d, &y, 1e-6)?, 1e-3));
    }
    let mut conic_err = 0.0f64;
    for i in 0..100u64 {
        let mut rng = task_rng(9, i);
        let s = if i % 2 == 0 { Scheme::feed_forward(Network::uniform(2, 2, &[3, 2], acts[(i % 5) as usize])?)? } else { Scheme::free_knot(3)? };
        let d = if i % 2 == 0 { Dataset::random(5, 2, &mut rng)? } else { Dataset::random_sorted_1d(5, -1.0, 1.0, &mut rng)? };
        let a = s.random_params(&mut rng, 1.0, (-1.0, 1.0));
        let factor = landscape::rng::uniform(&mut rng, -20.0, 20.0);
        let psi = s.eval_batch(&a, &d)?;
        let scaled = s.eval_batch(&s.scale_output(&a, factor).expect("conic"), &d)?;
        conic_err = conic_err.max(scaled.sub(&psi.scaled(factor))?.norm() / (factor.abs() * psi.norm()).max(1e-300));
    }
    let mut scale_err = 0.0f64;
    let mut verdicts = true;
    for (s, d, e) in [leaky_setup()?, spline_setup()?] {
        let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(d.n()), ThetaSource::Cap, Some(10.0), 50, 4)?;
        for gamma in [0.1, 3.0, 1e3] {
            let c = scaling_check(&cert, gamma)?;
            scale_err = scale_err.max(c.loss_rel_err).max(c.witness_rel_err).max(c.gap_rel_err);
            verdicts &= c.verdict_preserved;
        }
    }
    let pass = grad_err <= 1e-5 && conic_err <= 1e-12 && scale_err <= 1e-10 && verdicts;
    Ok(outcome(pass, format!("grad={grad_err:.2e} conicity={conic_err:.2e} certificate scaling={scale_err:.2e}")))
}

/// JSON of a small cross-section of every suite.
fn suite_snapshot() -> Result<String> {
    let (s, d, e) = leaky_setup()?;
    let cert = build_spurious_certificate(&s, &d, &e, 2.0, s.theta_cap(5), ThetaSource::Cap, Some(10.0), 50, 1)?;
    let theta = theta_heuristic(&net(&[2], Activation::Tanh), &Dataset::from_scalars(&[-1.0, 0.0, 0.5, 1.0])?, 8, 4, 200, 2)?;
    let kill = approx_kill_probe(&net(&[2], Activation::Tanh), &Dataset::from_scalars(&[-1.0, -0.3, 0.2, 0.9])?, 1.0, 2.0, &[0.05, 0.1, 50.0], 3, 3)?;
    let toy = Dataset::from_scalars(&[-0.5, 0.5, 1.0])?;
    let spec = CloudSpec { grid: Some(GridSpec { lo: -6.0, hi: 6.0, step: 0.03 }), random_points: 5000, random_lo: -6.0, random_hi: 6.0 };
    let cloud = sample_image(&Scheme::ToyLightning, &toy, &spec, 4)?;
    let proj = project(&cloud, &YVector::new(3, 1, vec![0.3, -0.2, 0.4])?, CLUSTER_TOL, cloud.sep_tol())?;
    Ok(serde_json::to_string(&(cert, theta, kill, cloud.summary(), proj))?)
}

fn determinism() -> Result<Outcome> {
    let mut snaps = Vec::new();
    for threads in [1usize, 4, 1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        snaps.push(pool.install(suite_snapshot)?);
    }
    let pass = snaps.windows(2).all(|w| w[0] == w[1]);
    Ok(outcome(pass, format!("{} bytes, runs at 1/4/1/4 threads identical={pass}", snaps[0].len())))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("witness bound", witness_bound),
        ("spurious-minimum certificates", spurious_certificates),
        ("saddle-or-spurious pair", saddle_pair),
        ("regularized spurious minimum", regularized_minimum),
        ("taylor-subspace residuals", taylor_residuals),
        ("projection lab", projection_lab),
        ("jung suite", jung_suite),
        ("oracle agreement", oracle_agreement),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !result.pass {
            failures += 1;
        }
        println!(
            "criterion {} [{}] {name}: {} ({:.1}s)",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
