//! Affine maps that isolate one training input: A x_l + b lands in
//! (0,∞)×(−∞,0) while every other input lands in (−∞,0)² or (0,∞)².

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{dim, invalid, Error, Result};
use crate::rng::{self, Rng};

const MAX_DRAWS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    /// Shared direction of both rows of A.
    pub direction: Vec<f64>,
    /// A as two rows.
    pub matrix: [Vec<f64>; 2],
    pub bias: [f64; 2],
    /// min_{k≠l} |aᵀ(x_k − x_l)|.
    pub margin: f64,
    /// Half the margin; the offset placed on either side of x_l.
    pub epsilon: f64,
}

impl Separation {
    /// A x + b.
    pub fn apply(&self, x: &[f64]) -> [f64; 2] {
        let t: f64 = self.direction.iter().zip(x).map(|(a, v)| a * v).sum();
        [t + self.bias[0], t + self.bias[1]]
    }

    /// Whether the sign pattern holds for every sample.
    pub fn check(&self, data: &Dataset, l: usize) -> bool {
        data.inputs().iter().enumerate().all(|(k, x)| {
            let [p, q] = self.apply(x);
            if k == l {
                p > 0.0 && q < 0.0
            } else {
                (p > 0.0 && q > 0.0) || (p < 0.0 && q < 0.0)
            }
        })
    }
}

/// Separation along a fixed direction; fails if some projection collides with x_l.
pub fn separating_hyperplane_with_direction(data: &Dataset, l: usize, direction: &[f64]) -> Result<Separation> {
    if l >= data.n() {
        return Err(invalid(format!("sample index {l} out of range for n = {}", data.n())));
    }
    if direction.len() != data.dx() {
        return Err(dim("direction length must equal the input dimension"));
    }
    let xl = data.input(l);
    let proj = |x: &[f64]| -> f64 { direction.iter().zip(x).map(|(a, v)| a * v).sum() };
    let tl = proj(xl);
    let mut margin = f64::INFINITY;
    let mut scale: f64 = 0.0;
    for (k, x) in data.inputs().iter().enumerate() {
        if k == l {
            continue;
        }
        margin = margin.min((proj(x) - tl).abs());
        scale = scale.max(x.iter().zip(xl).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
    }
    if !(margin > 1e-9 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::SearchFailed(format!("direction does not separate sample {l} (margin {margin:e})")));
    }
    let epsilon = 0.5 * margin;
    Ok(Separation {
        direction: direction.to_vec(),
        matrix: [direction.to_vec(), direction.to_vec()],
        bias: [epsilon - tl, -epsilon - tl],
        margin,
        epsilon,
    })
}

/// Random unit direction, redrawn until every other sample projects away from x_l.
pub fn separating_hyperplane(data: &Dataset, l: usize, rng: &mut Rng) -> Result<Separation> {
    let mut last = None;
    for _ in 0..MAX_DRAWS {
        let a = rng::unit_sphere(rng, data.dx());
        match separating_hyperplane_with_direction(data, l, &a) {
            Ok(s) => return Ok(s),
            Err(Error::SearchFailed(m)) => last = Some(m),
            Err(e) => return Err(e),
        }
    }
    Err(Error::SearchFailed(last.unwrap_or_else(|| "no separating direction".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn middle_sample_on_a_line() {
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let s = separating_hyperplane_with_direction(&d, 1, &[1.0]).unwrap();
        assert_eq!(s.bias, [-0.5, -1.5]);
        assert_eq!(s.epsilon, 0.5);
        assert_eq!(s.apply(&[0.0]), [-0.5, -1.5]);
        assert_eq!(s.apply(&[2.0]), [1.5, 0.5]);
        assert_eq!(s.apply(&[1.0]), [0.5, -0.5]);
        assert!(s.check(&d, 1));
    }

    #[test]
    fn two_samples() {
        let d = Dataset::from_scalars(&[3.0, -1.0]).unwrap();
        for l in 0..2 {
            assert!(separating_hyperplane(&d, l, &mut seeded(4)).unwrap().check(&d, l));
        }
    }

    #[test]
    fn random_five_dimensional() {
        let mut rng = seeded(11);
        let d = Dataset::random(20, 5, &mut rng).unwrap();
        for l in 0..20 {
            let s = separating_hyperplane(&d, l, &mut rng).unwrap();
            assert!(s.check(&d, l), "sample {l}");
            assert_eq!(s.matrix[0], s.matrix[1]);
        }
    }

    #[test]
    fn collision_is_rejected() {
        let d = Dataset::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(separating_hyperplane_with_direction(&d, 0, &[1.0, 0.0]).is_err());
    }
}
