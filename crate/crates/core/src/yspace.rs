//! The label space Y = (R^{d_y})^n with the 1/(2n)-scaled inner product,
//! subspace bases, the cone membership test and the Jung-inequality oracle.

use serde::{Deserialize, Serialize};

use crate::error::{dim, invalid, Error, Result};
use crate::rng::{self, Rng};

/// An element of Y: `n` blocks of length `d_y`, stored block-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YVector {
    n: usize,
    dy: usize,
    data: Vec<f64>,
}

impl YVector {
    pub fn new(n: usize, dy: usize, data: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("need at least two samples, got {n}")));
        }
        if dy == 0 {
            return Err(invalid("output dimension must be positive"));
        }
        if data.len() != n * dy {
            return Err(dim(format!("expected {} entries, got {}", n * dy, data.len())));
        }
        Ok(Self { n, dy, data })
    }

    /// Zero vector. Panics if `n < 2` or `dy == 0`.
    pub fn zeros(n: usize, dy: usize) -> Self {
        assert!(n >= 2 && dy >= 1, "invalid Y dimensions ({n}, {dy})");
        Self { n, dy, data: vec![0.0; n * dy] }
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let dy = blocks.first().map(|b| b.len()).unwrap_or(0);
        if blocks.iter().any(|b| b.len() != dy) {
            return Err(dim("blocks have different lengths"));
        }
        Self::new(blocks.len(), dy, blocks.concat())
    }

    /// The pattern that is `value` in block `l` and zero elsewhere.
    pub fn single_block(n: usize, dy: usize, l: usize, value: &[f64]) -> Result<Self> {
        if l >= n || value.len() != dy {
            return Err(dim("single_block index or block length out of range"));
        }
        let mut y = Self::zeros(n, dy);
        y.block_mut(l).copy_from_slice(value);
        Ok(y)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    /// Dimension of Y, `n * d_y`.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.data[k * self.dy..(k + 1) * self.dy]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dy..(k + 1) * self.dy]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dy)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.dy != other.dy {
            return Err(dim(format!(
                "Y shapes differ: ({}, {}) vs ({}, {})",
                self.n, self.dy, other.n, other.dy
            )));
        }
        Ok(())
    }

    /// (y, z)_Y, checked.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.dot(other))
    }

    /// (y, z)_Y without the shape check; callers guarantee matching shapes.
    pub(crate) fn dot(&self, other: &Self) -> f64 {
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s / (2.0 * self.n as f64)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, dy: self.dy, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.data.len(), x.data.len());
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.axpy(1.0, other);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Index of the block with the largest Euclidean norm (first on ties).
    pub fn argmax_block(&self) -> usize {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (k, b) in self.blocks().enumerate() {
            let nb: f64 = b.iter().map(|v| v * v).sum();
            if nb > best_norm {
                best_norm = nb;
                best = k;
            }
        }
        best
    }

    /// Random vector with i.i.d. standard normal entries.
    pub fn random(n: usize, dy: usize, rng: &mut Rng) -> Self {
        Self { n, dy, data: rng::gaussian_vec(rng, n * dy) }
    }

    /// Uniform random vector on the unit sphere of (Y, ‖·‖_Y).
    pub fn random_unit(n: usize, dy: usize, rng: &mut Rng) -> Self {
        loop {
            let y = Self::random(n, dy, rng);
            let norm = y.norm();
            if norm > 1e-12 {
                return y.scaled(1.0 / norm);
            }
        }
    }
}

/// (y, z)_Y = (1/2n) Σ_k ⟨y_k, z_k⟩.
pub fn inner(y: &YVector, z: &YVector) -> Result<f64> {
    y.inner(z)
}

/// Orthonormal basis (w.r.t. (·,·)_Y) of a subspace of Y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    n: usize,
    dy: usize,
    vectors: Vec<YVector>,
}

/// Relative residual below which Gram–Schmidt treats a vector as dependent.
pub const DROP_TOL: f64 = 1e-9;

impl SubspaceBasis {
    pub fn empty(n: usize, dy: usize) -> Self {
        Self { n, dy, vectors: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n * self.dy
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dy(&self) -> usize {
        self.dy
    }

    pub fn vectors(&self) -> &[YVector] {
        &self.vectors
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, y: &YVector) -> Result<YVector> {
        let mut out = YVector::zeros(self.n.max(2), self.dy.max(1));
        if y.n() != self.n || y.dy() != self.dy {
            return Err(dim("vector shape does not match the subspace"));
        }
        for b in &self.vectors {
            out.axpy(b.dot(y), b);
        }
        Ok(out)
    }

    /// Component orthogonal to the subspace, projected twice for accuracy.
    pub fn residual(&self, y: &YVector) -> Result<YVector> {
        let mut r = y.sub(&self.project(y)?)?;
        let correction = self.project(&r)?;
        r.axpy(-1.0, &correction);
        Ok(r)
    }

    /// Distance from `y` to the subspace in ‖·‖_Y.
    pub fn distance(&self, y: &YVector) -> Result<f64> {
        Ok(self.residual(y)?.norm())
    }

    /// Gram matrix of the stored vectors (should be the identity).
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|a| self.vectors.iter().map(|b| a.dot(b)).collect())
            .collect()
    }

    /// Split `y` into its components in V and V^⊥.
    pub fn decompose(&self, y: &YVector) -> Result<ConeDecomposition> {
        let y1 = self.project(y)?;
        let mut y2 = y.sub(&y1)?;
        let correction = self.project(&y2)?;
        y2.axpy(-1.0, &correction);
        let y1 = y.sub(&y2)?;
        // Components at rounding level are exact zeros, so that y ∈ V is never
        // reported as having a complement part.
        let scale = y.norm();
        if y2.norm() <= 1e-12 * scale {
            y2 = YVector::zeros(y.n(), y.dy());
        }
        let ratio = y2.norm() / y1.norm().max(1e-300);
        Ok(ConeDecomposition { y1, y2, ratio })
    }
}

/// Gram–Schmidt (two passes) with respect to (·,·)_Y.
///
/// Vectors whose residual norm falls below `DROP_TOL` times the largest input
/// norm are dropped.
pub fn orthonormalize(raw: &[YVector]) -> Result<SubspaceBasis> {
    let first = raw.first().ok_or_else(|| invalid("orthonormalize needs at least one vector"))?;
    let (n, dy) = (first.n(), first.dy());
    if raw.iter().any(|v| v.n() != n || v.dy() != dy) {
        return Err(dim("input vectors have different shapes"));
    }
    let max_norm = raw.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return Err(Error::EmptyBasis);
    }
    let tol = DROP_TOL * max_norm;
    let mut basis: Vec<YVector> = Vec::new();
    for v in raw {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&r);
                r.axpy(-c, b);
            }
        }
        let norm = r.norm();
        if norm >= tol {
            basis.push(r.scaled(1.0 / norm));
        }
        if basis.len() == n * dy {
            break;
        }
    }
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(SubspaceBasis { n, dy, vectors: basis })
}

/// Extend a basis by more raw vectors, keeping orthonormality.
pub fn extend(basis: &SubspaceBasis, raw: &[YVector]) -> Result<SubspaceBasis> {
    let mut all = basis.vectors.clone();
    all.extend_from_slice(raw);
    if all.is_empty() {
        return Ok(basis.clone());
    }
    orthonormalize(&all)
}

/// A unit vector orthogonal to every basis vector of `v`.
pub fn complement_direction(v: &SubspaceBasis, rng: &mut Rng) -> Result<YVector> {
    if v.dim() >= v.ambient_dim() {
        return Err(Error::NoComplement);
    }
    for _ in 0..100 {
        let y = YVector::random(v.n, v.dy, rng);
        let r = v.residual(&y)?;
        let norm = r.norm();
        if norm > 1e-6 * y.norm() {
            let mut u = r.scaled(1.0 / norm);
            let fix = v.project(&u)?;
            u.axpy(-1.0, &fix);
            let norm = u.norm();
            return Ok(u.scaled(1.0 / norm));
        }
    }
    Err(Error::SearchFailed("no complement direction after 100 draws".into()))
}

/// Split of a label into the parts in V and V^⊥.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeDecomposition {
    pub y1: YVector,
    pub y2: YVector,
    /// ‖y2‖ / max(‖y1‖, 1e-300).
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeTest {
    pub member: bool,
    pub threshold: f64,
    pub decomposition: ConeDecomposition,
}

/// Membership in the open cone ‖y2‖ > √(θ/(1−θ))·‖y1‖.
pub fn cone_k_test(y: &YVector, v: &SubspaceBasis, theta: f64) -> Result<ConeTest> {
    if !(0.0..1.0).contains(&theta) {
        return Err(invalid(format!("theta must lie in [0, 1), got {theta}")));
    }
    let decomposition = v.decompose(y)?;
    let threshold = (theta / (1.0 - theta)).sqrt();
    let member = decomposition.y2.norm() > threshold * decomposition.y1.norm();
    Ok(ConeTest { member, threshold, decomposition })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JungTrial {
    pub points: usize,
    pub diameter: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JungReport {
    pub d: usize,
    pub r: f64,
    pub trials: Vec<JungTrial>,
    pub violations: usize,
}

/// √((2d+2)/d)·r, the lower bound on the diameter.
pub fn jung_bound(d: usize, r: f64) -> f64 {
    ((2.0 * d as f64 + 2.0) / d as f64).sqrt() * r
}

pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.max(d2.sqrt());
        }
    }
    best
}

/// Random sets on a sphere of radius `r` whose centre lies in their convex hull,
/// checked against the diameter bound.
///
/// Each set is built from antipodal pairs ȳ ± r·u, which puts ȳ in the hull
/// without any LP.
pub fn jung_check(d: usize, r: f64, trials: usize, rng: &mut Rng) -> Result<JungReport> {
    if d == 0 {
        return Err(invalid("jung_check needs d >= 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid(format!("radius must be positive and finite, got {r}")));
    }
    let bound = jung_bound(d, r);
    let mut out = Vec::with_capacity(trials);
    for _ in 0..trials {
        let centre = rng::gaussian_vec(rng, d);
        let pairs = 1 + rng::index(rng, d + 1);
        let mut points = Vec::with_capacity(2 * pairs);
        for _ in 0..pairs {
            let u = rng::unit_sphere(rng, d);
            points.push(centre.iter().zip(&u).map(|(c, x)| c + r * x).collect::<Vec<_>>());
            points.push(centre.iter().zip(&u).map(|(c, x)| c - r * x).collect::<Vec<_>>());
        }
        let diameter = diameter(&points);
        out.push(JungTrial { points: points.len(), diameter, bound, pass: diameter >= bound - 1e-9 });
    }
    let violations = out.iter().filter(|t| !t.pass).count();
    Ok(JungReport { d, r, trials: out, violations })
}

/// Vertices of a regular simplex in R^d inscribed in the sphere of radius `r`
/// about the origin. Its diameter attains the bound exactly.
pub fn regular_simplex(d: usize, r: f64) -> Result<Vec<Vec<f64>>> {
    if d == 0 || !(r > 0.0) {
        return Err(invalid("regular_simplex needs d >= 1 and r > 0"));
    }
    // Centred standard basis of R^{d+1}, expressed in an orthonormal basis of
    // the hyperplane Σ x_i = 0.
    let m = d + 1;
    let centred: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 } - 1.0 / m as f64).collect())
        .collect();
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for v in &centred {
        let mut w = v.clone();
        for _ in 0..2 {
            for f in &frame {
                let c: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, fi) in w.iter_mut().zip(f) {
                    *wi -= c * fi;
                }
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 && frame.len() < d {
            frame.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    let radius0 = (1.0 - 1.0 / m as f64).sqrt();
    Ok(centred
        .iter()
        .map(|v| {
            frame
                .iter()
                .map(|f| r / radius0 * f.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        })
        .collect())
}
