//! Shared fixtures for the criterion benchmarks in `benches/`.

use landscape::rng::seeded;
use landscape::{Activation, Dataset, Network, Scheme, YVector};

/// A `[widths]` tanh network on `n` sorted scalar inputs, with random
/// parameters and a random unit label.
pub fn tanh_fixture(widths: &[usize], n: usize, seed: u64) -> (Scheme, Dataset, Vec<f64>, YVector) {
    let mut rng = seeded(seed);
    let net = Network::uniform(1, 1, widths, Activation::Tanh).expect("valid network");
    let scheme = Scheme::feed_forward(net).expect("valid scheme");
    let data = Dataset::random_sorted_1d(n, -1.0, 1.0, &mut rng).expect("distinct inputs");
    let alpha = scheme.random_params(&mut rng, 1.0, (-1.0, 1.0));
    let y = YVector::random_unit(n, 1, &mut rng);
    (scheme, data, alpha, y)
}
