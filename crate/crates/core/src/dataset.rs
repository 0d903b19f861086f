//! Training inputs (pairwise distinct) with optional labels.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{dim, invalid, Result};
use crate::rng::{self, Rng};
use crate::yspace::YVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<YVector>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>) -> Result<Self> {
        let n = inputs.len();
        if n < 2 {
            return Err(invalid(format!("need at least two samples, got {n}")));
        }
        let dx = inputs[0].len();
        if dx == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        for (k, x) in inputs.iter().enumerate() {
            if x.len() != dx {
                return Err(dim(format!("sample {k} has dimension {}, expected {dx}", x.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("sample {k} has a non-finite coordinate")));
            }
        }
        for j in 0..n {
            for k in j + 1..n {
                if inputs[j] == inputs[k] {
                    return Err(invalid(format!("samples {j} and {k} coincide")));
                }
            }
        }
        Ok(Self { inputs, labels: None })
    }

    /// One-dimensional inputs.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn with_labels(mut self, labels: YVector) -> Result<Self> {
        if labels.n() != self.n() {
            return Err(dim(format!("{} labels for {} samples", labels.n(), self.n())));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Inputs i.i.d. standard normal; distinct with probability one.
    pub fn random(n: usize, dx: usize, rng: &mut Rng) -> Result<Self> {
        Self::new((0..n).map(|_| rng::gaussian_vec(rng, dx)).collect())
    }

    /// Sorted uniform inputs on [lo, hi] in one dimension.
    pub fn random_sorted_1d(n: usize, lo: f64, hi: f64, rng: &mut Rng) -> Result<Self> {
        let mut xs: Vec<f64> = (0..n).map(|_| rng::uniform(rng, lo, hi)).collect();
        xs.sort_by(f64::total_cmp);
        Self::from_scalars(&xs)
    }

    /// Read a CSV whose header names input columns `x…` and optional label
    /// columns `y…`, in that order.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let mut x_cols = Vec::new();
        let mut y_cols = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            match h.trim().chars().next() {
                Some('x') => x_cols.push(i),
                Some('y') => y_cols.push(i),
                _ => return Err(invalid(format!("unexpected CSV column {h:?}"))),
            }
        }
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record[i].trim().parse::<f64>().map_err(|e| invalid(format!("bad number {:?}: {e}", &record[i])))
            };
            inputs.push(x_cols.iter().map(|&i| parse(i)).collect::<Result<Vec<_>>>()?);
            if !y_cols.is_empty() {
                labels.push(y_cols.iter().map(|&i| parse(i)).collect::<Result<Vec<_>>>()?);
            }
        }
        let ds = Self::new(inputs)?;
        if y_cols.is_empty() {
            Ok(ds)
        } else {
            ds.with_labels(YVector::from_blocks(&labels)?)
        }
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }

    pub fn dx(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k]
    }

    pub fn labels(&self) -> Option<&YVector> {
        self.labels.as_ref()
    }

    /// Scalar inputs, if d_x = 1.
    pub fn scalars(&self) -> Option<Vec<f64>> {
        (self.dx() == 1).then(|| self.inputs.iter().map(|x| x[0]).collect())
    }

    /// Smallest pairwise ∞-distance between inputs.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (j, a) in self.inputs.iter().enumerate() {
            for b in &self.inputs[j + 1..] {
                let d = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                best = best.min(d);
            }
        }
        best
    }

    /// Largest ∞-norm of an input.
    pub fn max_abs(&self) -> f64 {
        self.inputs.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// SHA-256 over the little-endian bytes of n, d_x and the inputs.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.dx() as u64).to_le_bytes());
        for v in self.inputs.iter().flatten() {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn rejects_duplicates_and_small_sets() {
        assert!(Dataset::from_scalars(&[1.0]).is_err());
        assert!(Dataset::from_scalars(&[1.0, 2.0, 1.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Dataset::from_scalars(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn separation_and_hash() {
        let d = Dataset::from_scalars(&[0.0, 1.0, 2.5]).unwrap();
        assert_eq!(d.min_separation(), 1.0);
        assert_eq!(d.max_abs(), 2.5);
        let e = Dataset::from_scalars(&[0.0, 1.0, 2.5]).unwrap();
        assert_eq!(d.hash(), e.hash());
        let f = Dataset::from_scalars(&[0.0, 1.0, 2.25]).unwrap();
        assert_ne!(d.hash(), f.hash());
        assert_eq!(d.hash().len(), 64);
    }

    #[test]
    fn csv_with_labels() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x1,x2,y1").unwrap();
        writeln!(f, "0,1,3").unwrap();
        writeln!(f, "1,0,-2").unwrap();
        let d = Dataset::from_csv(f.path()).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.dx(), 2);
        assert_eq!(d.labels().unwrap().as_slice(), &[3.0, -2.0]);
    }
}
