//! Spaces of vector-valued polynomials of degree ≤ 1 or ≤ 2 evaluated on the
//! training inputs.

use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::yspace::{orthonormalize, SubspaceBasis, YVector};

/// Exponent tuples of all monomials in `dx` variables of total degree ≤ `degree`.
fn monomials(dx: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; dx]];
    if degree >= 1 {
        for i in 0..dx {
            let mut e = vec![0; dx];
            e[i] = 1;
            out.push(e);
        }
    }
    if degree >= 2 {
        for i in 0..dx {
            for j in i..dx {
                let mut e = vec![0; dx];
                e[i] += 1;
                e[j] += 1;
                out.push(e);
            }
        }
    }
    out
}

/// Upper bound on the dimension: d_y·(d_x+1) or d_y·(d_x+2)(d_x+1)/2.
pub fn poly_dim_bound(dx: usize, dy: usize, degree: usize) -> usize {
    match degree {
        0 => dy,
        1 => dy * (dx + 1),
        _ => dy * (dx + 2) * (dx + 1) / 2,
    }
}

/// Orthonormal basis of {(P(x_k))_k : P polynomial of degree ≤ `degree`}.
pub fn poly_space_basis(data: &Dataset, degree: usize, dy: usize) -> Result<SubspaceBasis> {
    if degree > 2 {
        return Err(invalid(format!("polynomial degree must be 0, 1 or 2, got {degree}")));
    }
    if dy == 0 {
        return Err(invalid("output dimension must be positive"));
    }
    let n = data.n();
    let mut raw = Vec::new();
    for exps in monomials(data.dx(), degree) {
        let values: Vec<f64> = data
            .inputs()
            .iter()
            .map(|x| x.iter().zip(&exps).map(|(v, &e)| v.powi(e as i32)).product())
            .collect();
        for c in 0..dy {
            let mut y = YVector::zeros(n, dy);
            for (k, v) in values.iter().enumerate() {
                y.block_mut(k)[c] = *v;
            }
            raw.push(y);
        }
    }
    orthonormalize(&raw)
}

/// The subspace of label vectors with identical blocks.
pub fn constant_space_basis(n: usize, dy: usize) -> Result<SubspaceBasis> {
    let raw: Vec<YVector> = (0..dy)
        .map(|c| {
            let mut y = YVector::zeros(n, dy);
            for k in 0..n {
                y.block_mut(k)[c] = 1.0;
            }
            y
        })
        .collect();
    orthonormalize(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn dimensions() {
        let d3 = Dataset::from_scalars(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(poly_space_basis(&d3, 1, 1).unwrap().dim(), 2);
        assert_eq!(poly_space_basis(&d3, 2, 1).unwrap().dim(), 3);
        let d4 = Dataset::from_scalars(&[0.0, 1.0, 3.0, 4.0]).unwrap();
        assert_eq!(poly_space_basis(&d4, 2, 1).unwrap().dim(), 3);
        assert_eq!(poly_space_basis(&d4, 1, 2).unwrap().dim(), 4);
        let d = Dataset::random(12, 3, &mut seeded(1)).unwrap();
        assert_eq!(poly_space_basis(&d, 2, 1).unwrap().dim(), poly_dim_bound(3, 1, 2));
        assert_eq!(constant_space_basis(5, 2).unwrap().dim(), 2);
    }

    #[test]
    fn degenerate_inputs_lower_the_dimension() {
        // Collinear points in the plane: x₂ = 2x₁, so {1, x₁, x₂} has rank 2.
        let d = Dataset::new(vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(poly_space_basis(&d, 1, 1).unwrap().dim(), 2);
    }

    #[test]
    fn quadratic_values_lie_in_space() {
        let d = Dataset::from_scalars(&[-1.0, 0.0, 0.5, 2.0, 3.0]).unwrap();
        let v2 = poly_space_basis(&d, 2, 1).unwrap();
        let q = YVector::new(5, 1, d.scalars().unwrap().iter().map(|x| 3.0 * x * x - x + 2.0).collect()).unwrap();
        assert!(v2.distance(&q).unwrap() <= 1e-10 * q.norm());
        let cubic = YVector::new(5, 1, d.scalars().unwrap().iter().map(|x| x * x * x).collect()).unwrap();
        assert!(v2.distance(&cubic).unwrap() > 1e-3);
    }
}
