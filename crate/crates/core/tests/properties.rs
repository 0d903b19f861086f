//! Property tests over seeds: algebraic identities in Y, conicity, gradient
//! agreement, construction invariants and certificate robustness.

use landscape::constructions::{
    affine_embed, expressiveness_witness, heaviside_unit_fit, saturated_fit, separating_hyperplane, ThetaSource,
};
use landscape::constructions::saturation::pattern_residual;
use landscape::regularized::{objective, RegTerms};
use landscape::rng::seeded;
use landscape::scheme::max_relative_error;
use landscape::verify::{build_spurious_certificate, check_local_growth, check_spurious, scaling_check, Tolerances};
use landscape::yspace::{cone_k_test, jung_check, orthonormalize};
use landscape::{Activation, Dataset, Network, Scheme, YVector};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

fn smooth_nets() -> Vec<Scheme> {
    [Activation::Tanh, Activation::Sigmoid, Activation::SoftPlus, Activation::Arctan]
        .into_iter()
        .map(|a| Scheme::feed_forward(Network::uniform(2, 2, &[3, 2], a).unwrap()).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn parallelogram_law(seed in any::<u64>(), n in 1usize..6, dy in 1usize..3) {
        let mut rng = seeded(seed);
        let y = YVector::random(n, dy, &mut rng);
        let z = YVector::random(n, dy, &mut rng);
        let lhs = y.add(&z).unwrap().norm_sq() + y.sub(&z).unwrap().norm_sq();
        let rhs = 2.0 * (y.norm_sq() + z.norm_sq());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn decomposition_is_pythagorean_and_cone_is_scale_free(seed in any::<u64>(), k in 0usize..4, s in 1e-3f64..1e3) {
        let mut rng = seeded(seed);
        let raw: Vec<YVector> = (0..k).map(|_| YVector::random(5, 1, &mut rng)).collect();
        let basis = orthonormalize(&raw).unwrap_or_else(|_| landscape::SubspaceBasis::empty(5, 1));
        let y = YVector::random(5, 1, &mut rng);
        let dec = basis.decompose(&y).unwrap();
        prop_assert!((y.norm_sq() - dec.y1.norm_sq() - dec.y2.norm_sq()).abs() <= 1e-10 * (1.0 + y.norm_sq()));
        let a = cone_k_test(&y, &basis, 0.3).unwrap().member;
        let b = cone_k_test(&y.scaled(s), &basis, 0.3).unwrap().member;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn conicity_of_top_layer_scaling(seed in any::<u64>(), s in -50.0f64..50.0) {
        let mut rng = seeded(seed);
        let data = Dataset::random(6, 2, &mut rng).unwrap();
        let mut schemes = smooth_nets();
        // Skip E_i maps layer i−1 (width 2 for the input) to layer i.
        let skips = vec![vec![vec![0.5, -0.3], vec![0.2, 0.7]], vec![vec![1.0, 0.0], vec![-0.4, 0.9]]];
        let res = Network::res_net(2, 2, vec![2, 2], vec![Activation::Tanh; 2], skips).unwrap();
        schemes.push(Scheme::res_net(res).unwrap());
        for scheme in schemes {
            let a = scheme.random_params(&mut rng, 1.0, (-1.0, 1.0));
            let psi = scheme.eval_batch(&a, &data).unwrap();
            let scaled = scheme.eval_batch(&scheme.scale_output(&a, s).unwrap(), &data).unwrap();
            let err = scaled.sub(&psi.scaled(s)).unwrap().norm();
            prop_assert!(err <= 1e-12 * s.abs() * psi.norm() + 1e-300, "{}: {err}", scheme.name());
        }
        let spline = Scheme::free_knot(3).unwrap();
        let d1 = Dataset::random_sorted_1d(6, -1.0, 1.0, &mut rng).unwrap();
        let a = spline.random_params(&mut rng, 1.0, (-1.0, 1.0));
        let psi = spline.eval_batch(&a, &d1).unwrap();
        let scaled = spline.eval_batch(&spline.scale_output(&a, s).unwrap(), &d1).unwrap();
        prop_assert!(scaled.sub(&psi.scaled(s)).unwrap().norm() <= 1e-12 * s.abs() * psi.norm() + 1e-300);
    }

    #[test]
    fn analytic_gradient_matches_differences(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let data = Dataset::random(4, 2, &mut rng).unwrap();
        let y = YVector::random(4, 2, &mut rng);
        for scheme in smooth_nets() {
            let a = scheme.random_params(&mut rng, 1.0, (-1.0, 1.0));
            let g = scheme.grad_loss(&a, &data, &y).unwrap();
            let fd = scheme.fd_grad(&a, &data, &y, 1e-6).unwrap();
            prop_assert!(max_relative_error(&g.grad, &fd, 1e-3) <= 1e-5, "{}", scheme.name());
        }
    }

    #[test]
    fn spline_is_continuous_across_knots(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let scheme = Scheme::free_knot(3).unwrap();
        let a = scheme.random_params(&mut rng, 1.0, (-1.0, 1.0));
        let spacing = (3..5).map(|j| a[j + 1] - a[j]).fold(f64::INFINITY, f64::min);
        let h = 1e-3 * spacing;
        let f = |x: f64| scheme.eval(&a, &[x]).unwrap()[0];
        for j in 3..6 {
            let knot = a[j];
            // Two-point extrapolation is exact on each affine piece.
            let left = 2.0 * f(knot - h) - f(knot - 2.0 * h);
            let right = 2.0 * f(knot + h) - f(knot + 2.0 * h);
            prop_assert!((left - right).abs() <= 1e-12 * (1.0 + left.abs()), "{left} vs {right}");
        }
    }

    #[test]
    fn heaviside_first_layer_scale_invariance(seed in any::<u64>(), s in 1e-3f64..1e3) {
        let mut rng = seeded(seed);
        let net = Network::uniform(2, 1, &[3, 2], Activation::Heaviside { c: 0.5 }).unwrap();
        let scheme = Scheme::feed_forward(net.clone()).unwrap();
        let data = Dataset::random(5, 2, &mut rng).unwrap();
        let mut a = scheme.random_params(&mut rng, 1.0, (-1.0, 1.0));
        let psi = scheme.eval_batch(&a, &data).unwrap();
        a[net.first_weight_range()].iter_mut().for_each(|v| *v *= s);
        for row in 0..3 {
            a[net.b_index(1, row)] *= s;
        }
        prop_assert_eq!(scheme.eval_batch(&a, &data).unwrap(), psi);
    }

    #[test]
    fn separation_sign_pattern(seed in any::<u64>(), n in 2usize..8, dx in 1usize..4) {
        let mut rng = seeded(seed);
        let data = Dataset::random(n, dx, &mut rng).unwrap();
        let l = seed as usize % n;
        let sep = separating_hyperplane(&data, l, &mut rng).unwrap();
        prop_assert!(sep.check(&data, l));
    }

    #[test]
    fn heaviside_unit_fit_is_exact(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = seeded(seed);
        let scheme = Scheme::feed_forward(Network::uniform(1, 2, &[2], Activation::Heaviside { c: 0.0 }).unwrap()).unwrap();
        let data = Dataset::random_sorted_1d(n, -1.0, 1.0, &mut rng).unwrap();
        let l = seed as usize % n;
        let y_l = [rng_value(seed), rng_value(seed.rotate_left(7))];
        let a = heaviside_unit_fit(&scheme, &data, &y_l, l, &mut rng).unwrap();
        let expected = YVector::single_block(n, 2, l, &y_l).unwrap();
        prop_assert_eq!(scheme.eval_batch(&a, &data).unwrap(), expected);
    }

    #[test]
    fn saturation_residual_is_monotone(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let scheme = Scheme::feed_forward(Network::uniform(1, 1, &[2, 2], Activation::Tanh).unwrap()).unwrap();
        let data = Dataset::random_sorted_1d(5, -1.0, 1.0, &mut rng).unwrap();
        let l = seed as usize % 5;
        let mut prev = f64::INFINITY;
        for k in 0..6 {
            let gamma = 10f64.powi(k + 1);
            let a = saturated_fit(&scheme, &data, &[1.0], l, gamma, &mut seeded(seed)).unwrap();
            let r = pattern_residual(&scheme, &a, &data, &[1.0], l).unwrap();
            prop_assert!(r <= prev * (1.0 + 1e-12) + 1e-15, "γ = {gamma}: {r} > {prev}");
            prev = r;
        }
    }

    #[test]
    fn witness_beats_zero_and_the_unit_bound(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let data = Dataset::random_sorted_1d(6, -1.0, 1.0, &mut rng).unwrap();
        let schemes = [
            Scheme::free_knot(3).unwrap(),
            Scheme::feed_forward(Network::uniform(1, 1, &[2], Activation::Heaviside { c: 0.5 }).unwrap()).unwrap(),
            Scheme::feed_forward(Network::uniform(1, 1, &[2, 2], Activation::Relu).unwrap()).unwrap(),
        ];
        for scheme in &schemes {
            let y = YVector::random_unit(6, 1, &mut rng).scaled(0.1 + (seed % 97) as f64);
            let w = expressiveness_witness(scheme, &data, &y, &mut rng).unwrap();
            prop_assert!(w.witness_loss < y.norm_sq());
            let unit = YVector::random_unit(6, 1, &mut rng);
            let w = expressiveness_witness(scheme, &data, &unit, &mut rng).unwrap();
            prop_assert!(w.witness_loss <= 1.0 - 1.0 / 6.0 + 1e-9, "{}: {}", scheme.name(), w.witness_loss);
        }
    }

    #[test]
    fn embedding_moves_orthogonally_to_bad_direction(seed in any::<u64>()) {
        let scheme = Scheme::feed_forward(Network::uniform(1, 1, &[2, 2], Activation::LeakyRelu { c: 0.01 }).unwrap()).unwrap();
        let data = Dataset::from_scalars(&[-1.0, -0.4, 0.1, 0.7, 1.3]).unwrap();
        let e = affine_embed(&scheme, &data, &[vec![0.8]], &[-0.2]).unwrap();
        let cert = build_spurious_certificate(&scheme, &data, &e, 2.0, scheme.theta_cap(5), ThetaSource::Cap, None, 4, seed).unwrap();
        let mut rng = seeded(seed);
        let base = scheme.eval_batch(&e.alpha_bar, &data).unwrap();
        for _ in 0..20 {
            let a: Vec<f64> = e.alpha_bar.iter().map(|v| v + e.neighborhood_radius * landscape::rng::uniform(&mut rng, -1.0, 1.0)).collect();
            let d = scheme.eval_batch(&a, &data).unwrap().sub(&base).unwrap();
            prop_assert!(d.inner(&cert.v).unwrap().abs() <= 1e-9 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn certificates_pass_and_scale(seed in any::<u64>(), gamma in 0.1f64..10.0) {
        let scheme = Scheme::feed_forward(Network::uniform(1, 1, &[2, 2], Activation::LeakyRelu { c: 0.01 }).unwrap()).unwrap();
        let data = Dataset::from_scalars(&[-1.0, -0.4, 0.1, 0.7, 1.3]).unwrap();
        let e = affine_embed(&scheme, &data, &[vec![0.8]], &[-0.2]).unwrap();
        let cert = build_spurious_certificate(&scheme, &data, &e, 2.0, scheme.theta_cap(5), ThetaSource::Cap, None, 20, seed).unwrap();
        prop_assert!(check_spurious(&cert).unwrap().pass);
        let growth = check_local_growth(&scheme, &data, &cert.alpha_bar, &cert.y_d, Some(e.neighborhood_radius), e.neighborhood_radius, 20, &Tolerances::default(), &mut seeded(seed)).unwrap();
        prop_assert!(growth.pass);
        let sc = scaling_check(&cert, gamma).unwrap();
        prop_assert!(sc.loss_rel_err <= 1e-10 && sc.witness_rel_err <= 1e-10 && sc.gap_rel_err <= 1e-10 && sc.verdict_preserved, "{sc:?}");

        // Tilting v by a non-orthogonal component of relative size 1e−2 breaks the equality.
        let mut tilted = cert.clone();
        let tilt = scheme.eval_batch(&e.alpha_bar, &data).unwrap();
        let mut v = tilted.v.clone();
        v.axpy(1e-2 / tilt.norm().max(1e-300), &tilt);
        let v = v.scaled(1.0 / v.norm());
        tilted.y_d = scheme.eval_batch(&e.alpha_bar, &data).unwrap();
        tilted.y_d.axpy(cert.s, &v);
        let growth = check_local_growth(&scheme, &data, &tilted.alpha_bar, &tilted.y_d, Some(e.neighborhood_radius), e.neighborhood_radius, 50, &Tolerances::default(), &mut seeded(seed)).unwrap();
        prop_assert!(!growth.pass);
    }

    #[test]
    fn unregularized_objective_is_the_loss(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let data = Dataset::random(4, 2, &mut rng).unwrap();
        let y = YVector::random(4, 2, &mut rng);
        for scheme in smooth_nets() {
            let a = scheme.random_params(&mut rng, 1.0, (-1.0, 1.0));
            let terms = RegTerms { nu: 0.0, p: 1.5, reference: None };
            prop_assert_eq!(objective(&scheme, &data, &y, &terms, &a).unwrap(), scheme.loss(&a, &data, &y).unwrap());
        }
    }
}

fn rng_value(seed: u64) -> f64 {
    (seed % 1000) as f64 / 100.0 - 5.0
}

#[test]
fn jung_has_no_violations() {
    for d in 1..=6 {
        let rep = jung_check(d, 1.0, 1000, &mut seeded(d as u64)).unwrap();
        assert_eq!(rep.violations, 0);
    }
}
