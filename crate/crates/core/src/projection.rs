//! Brute-force best-approximation oracle in small label spaces (n·d_y ≤ 4):
//! sampled image clouds, set-valued projections, discontinuity sequences,
//! solar-point checks and sublevel connectivity on parameter grids.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use rustc_hash::FxHashMap as HashMap;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::rng::{self, seeded};
use crate::scheme::{toy, Scheme};
use crate::yspace::YVector;

pub const MAX_DIM: usize = 4;
pub const MAX_POINTS: usize = 10_000_000;
pub const CLUSTER_TOL: f64 = 1e-3;
/// sep_tol = SEP_FACTOR × resolution.
pub const SEP_FACTOR: f64 = 10.0;
/// Dedup cells have diameter DEDUP_FRACTION × grid resolution.
const DEDUP_FRACTION: f64 = 0.5;

type Point = [f64; MAX_DIM];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn count(&self) -> usize {
        ((self.hi - self.lo) / self.step).round() as usize + 1
    }

    fn value(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSpec {
    /// Tensor grid applied to every parameter coordinate.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub random_points: usize,
    /// Box for the random refinement.
    pub random_lo: f64,
    pub random_hi: f64,
}

impl CloudSpec {
    /// [−20, 20]² at step 5e−3 plus 10⁶ uniform points in the same box.
    pub fn toy_default() -> Self {
        Self { grid: Some(GridSpec { lo: -20.0, hi: 20.0, step: 5e-3 }), random_points: 1_000_000, random_lo: -20.0, random_hi: 20.0 }
    }
}

/// Sampled image Ψ(D, x_d). Points are stored in coordinates scaled by
/// 1/√(2n), where the Y-norm is Euclidean.
#[derive(Clone, Debug)]
pub struct ImageCloud {
    pub scheme: Scheme,
    pub dataset: Dataset,
    pub spec: CloudSpec,
    pub dim: usize,
    pub params: usize,
    /// Bound (analytic when `resolution_certified`) on the distance from any
    /// sampled-box image point to the cloud.
    pub resolution: f64,
    pub resolution_certified: bool,
    /// Parameters evaluated before deduplication.
    pub generated: usize,
    points: Vec<Point>,
    alphas: Vec<f64>,
    index: BucketIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub scheme: String,
    pub points: usize,
    pub generated: usize,
    pub resolution: f64,
    pub resolution_certified: bool,
    pub sep_tol: f64,
    pub cluster_tol: f64,
}

fn iso_scale(n: usize) -> f64 {
    1.0 / ((2 * n) as f64).sqrt()
}

fn dist(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Evaluates Ψ in scaled coordinates; closed forms for the two-parameter schemes.
fn evaluator<'a>(scheme: &'a Scheme, data: &'a Dataset) -> impl Fn(&[f64]) -> Point + Sync + 'a {
    let xs: Vec<f64> = data.inputs().iter().map(|x| x[0]).collect();
    let scale = iso_scale(data.n());
    move |alpha: &[f64]| {
        let mut p = [0.0; MAX_DIM];
        match scheme {
            Scheme::ToyLightning => xs.iter().enumerate().for_each(|(k, &x)| p[k] = toy::lightning(alpha, x) * scale),
            Scheme::Linear => xs.iter().enumerate().for_each(|(k, &x)| p[k] = toy::linear(alpha, x) * scale),
            Scheme::ConicToy => xs.iter().enumerate().for_each(|(k, &x)| p[k] = toy::conic(alpha, x) * scale),
            _ => {
                let mut k = 0;
                for x in data.inputs() {
                    for v in scheme.eval_unchecked(alpha, x) {
                        p[k] = v * scale;
                        k += 1;
                    }
                }
            }
        }
        p
    }
}

/// Lipschitz constant of α ↦ Ψ(α) (Y-norm over ‖·‖₂) on the box, where a
/// closed form exists.
fn lipschitz_bound(scheme: &Scheme, data: &Dataset, bound: f64) -> Option<f64> {
    let xs: Vec<f64> = data.inputs().iter().map(|x| x[0]).collect();
    let two_n = (2 * data.n()) as f64;
    let s: f64 = xs.iter().map(|x| x * x + 1.0).sum();
    match scheme {
        // |σ'| ≤ 1 for the toy activation.
        Scheme::ToyLightning | Scheme::Linear => Some((s / two_n).sqrt()),
        Scheme::ConicToy => Some(((bound * bound * s + xs.len() as f64) / two_n).sqrt()),
        _ => None,
    }
}

fn dedup_key(p: &Point, side: f64) -> [i64; MAX_DIM] {
    let mut k = [0i64; MAX_DIM];
    for (ki, v) in k.iter_mut().zip(p) {
        *ki = (v / side).floor() as i64;
    }
    k
}

struct Accumulator {
    side: f64,
    seen: HashMap<[i64; MAX_DIM], ()>,
    points: Vec<Point>,
    alphas: Vec<f64>,
}

impl Accumulator {
    fn absorb(&mut self, batch: Vec<(Point, Vec<f64>)>) -> Result<()> {
        for (p, a) in batch {
            if self.seen.insert(dedup_key(&p, self.side), ()).is_none() {
                self.points.push(p);
                self.alphas.extend(a);
                if self.points.len() > MAX_POINTS {
                    return Err(invalid(format!("cloud exceeds {MAX_POINTS} points")));
                }
            }
        }
        Ok(())
    }
}

fn local_dedup(batch: Vec<(Point, Vec<f64>)>, side: f64) -> Vec<(Point, Vec<f64>)> {
    let mut seen = HashMap::default();
    batch.into_iter().filter(|(p, _)| seen.insert(dedup_key(p, side), ()).is_none()).collect()
}

/// Dense parameter grid plus uniform random refinement, deduplicated on a
/// fine cell grid in Y; merge order is fixed so the cloud is deterministic.
pub fn sample_image(scheme: &Scheme, data: &Dataset, spec: &CloudSpec, seed: u64) -> Result<ImageCloud> {
    scheme.validate()?;
    let dim = data.n() * scheme.output_dim();
    if dim > MAX_DIM {
        return Err(Error::Unsupported(format!("brute-force regime needs n·d_y ≤ {MAX_DIM}, have {dim}")));
    }
    if scheme.input_dim() != data.dx() {
        return Err(crate::error::dim("dataset does not match the scheme input"));
    }
    if spec.grid.is_none() && spec.random_points == 0 {
        return Err(invalid("cloud spec samples nothing"));
    }
    if !(spec.random_hi > spec.random_lo) {
        return Err(invalid("random box is empty"));
    }
    let m = scheme.param_count();
    let eval = evaluator(scheme, data);
    let bound = spec.random_lo.abs().max(spec.random_hi.abs());

    let grid_res = match &spec.grid {
        Some(g) => {
            if !(g.step > 0.0 && g.hi > g.lo) {
                return Err(invalid("grid needs hi > lo and a positive step"));
            }
            let cells = (g.count() as f64).powi(m as i32);
            if cells > 1e10 {
                return Err(invalid(format!("grid has {cells:.3e} nodes")));
            }
            lipschitz_bound(scheme, data, g.lo.abs().max(g.hi.abs()).max(bound)).map(|l| l * 0.5 * g.step * (m as f64).sqrt())
        }
        None => None,
    };
    let side_for = |res: f64| DEDUP_FRACTION * res / (dim as f64).sqrt();
    // Without a closed form the dedup cell falls back to a fixed fraction of the box.
    let side = grid_res.map_or(1e-3, side_for);
    let mut acc = Accumulator { side, seen: HashMap::default(), points: Vec::new(), alphas: Vec::new() };
    let mut generated = 0usize;

    if let Some(g) = &spec.grid {
        let k = g.count();
        let inner = k.pow(m as u32 - 1);
        let rows: Vec<usize> = (0..k).collect();
        for chunk in rows.chunks(256) {
            let batches: Vec<Vec<(Point, Vec<f64>)>> = chunk
                .par_iter()
                .map(|&i0| {
                    let mut out = Vec::new();
                    let mut alpha = vec![0.0; m];
                    for j in 0..inner {
                        alpha[0] = g.value(i0);
                        let mut r = j;
                        for c in (1..m).rev() {
                            alpha[c] = g.value(r % k);
                            r /= k;
                        }
                        if scheme.in_domain(&alpha) {
                            out.push((eval(&alpha), alpha.clone()));
                        }
                    }
                    local_dedup(out, side)
                })
                .collect();
            for b in batches {
                acc.absorb(b)?;
            }
        }
        generated += k.pow(m as u32);
    }
    if spec.random_points > 0 {
        let mut rng = seeded(seed);
        let draws: Vec<Vec<f64>> = (0..spec.random_points).map(|_| (0..m).map(|_| rng::uniform(&mut rng, spec.random_lo, spec.random_hi)).collect()).collect();
        for chunk in draws.chunks(65_536) {
            let batch: Vec<(Point, Vec<f64>)> = chunk.par_iter().filter(|a| scheme.in_domain(a)).map(|a| (eval(a), a.clone())).collect();
            acc.absorb(local_dedup(batch, side))?;
        }
        generated += spec.random_points;
    }
    if acc.points.is_empty() {
        return Err(invalid("no parameter in the domain"));
    }
    let index = BucketIndex::build(&acc.points, dim);
    let mut cloud = ImageCloud {
        scheme: scheme.clone(),
        dataset: data.clone(),
        spec: spec.clone(),
        dim,
        params: m,
        resolution: 0.0,
        resolution_certified: grid_res.is_some(),
        generated,
        points: acc.points,
        alphas: acc.alphas,
        index,
    };
    cloud.resolution = match grid_res {
        Some(r) => r * (1.0 + DEDUP_FRACTION),
        None => cloud.empirical_resolution(seed ^ 0x5eed, 512),
    };
    Ok(cloud)
}

impl ImageCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sep_tol(&self) -> f64 {
        SEP_FACTOR * self.resolution
    }

    pub fn summary(&self) -> CloudSummary {
        CloudSummary {
            scheme: self.scheme.name().into(),
            points: self.len(),
            generated: self.generated,
            resolution: self.resolution,
            resolution_certified: self.resolution_certified,
            sep_tol: self.sep_tol(),
            cluster_tol: CLUSTER_TOL,
        }
    }

    pub fn alpha(&self, i: usize) -> &[f64] {
        &self.alphas[i * self.params..(i + 1) * self.params]
    }

    /// The i-th point as a label vector.
    pub fn point(&self, i: usize) -> YVector {
        self.to_label(&self.points[i])
    }

    fn to_label(&self, p: &Point) -> YVector {
        let s = 1.0 / iso_scale(self.dataset.n());
        YVector::new(self.dataset.n(), self.scheme.output_dim(), p[..self.dim].iter().map(|v| v * s).collect()).expect("cloud dimension")
    }

    fn to_point(&self, y: &YVector) -> Result<Point> {
        if y.dim() != self.dim || y.n() != self.dataset.n() {
            return Err(crate::error::dim("label does not live in the cloud's Y"));
        }
        let s = iso_scale(self.dataset.n());
        let mut p = [0.0; MAX_DIM];
        p.iter_mut().zip(y.as_slice()).for_each(|(q, v)| *q = v * s);
        Ok(p)
    }

    /// Largest deviation between stored points and Ψ recomputed from their α.
    pub fn reproduction_error(&self) -> Result<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| Ok(self.scheme.eval_batch(self.alpha(i), &self.dataset)?.sub(&self.point(i))?.norm()))
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    }

    /// Largest cloud distance of fresh random image points.
    fn empirical_resolution(&self, seed: u64, probes: usize) -> f64 {
        let eval = evaluator(&self.scheme, &self.dataset);
        let mut rng = seeded(seed);
        let qs: Vec<Point> = (0..probes)
            .map(|_| {
                let a: Vec<f64> = (0..self.params).map(|_| rng::uniform(&mut rng, self.spec.random_lo, self.spec.random_hi)).collect();
                eval(&a)
            })
            .collect();
        qs.par_iter().map(|q| self.index.nearest(&self.points, q).1).reduce(|| 0.0, f64::max)
    }

    /// RFC-4180 CSV, one point per row: y-coordinates (unscaled) then α.
    pub fn write_csv<W: Write>(&self, writer: W, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|k| format!("y{k}")).collect();
        header.extend((1..=self.params).map(|k| format!("a{k}")));
        w.write_record(&header)?;
        let s = 1.0 / iso_scale(self.dataset.n());
        for i in (0..self.len()).step_by(stride.max(1)) {
            let mut row: Vec<String> = self.points[i][..self.dim].iter().map(|v| format!("{:e}", v * s)).collect();
            row.extend(self.alpha(i).iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// √(λ_min/λ_max) of the uncentred second-moment matrix of the cloud.
    pub fn pca_residual(&self) -> f64 {
        let d = self.dim;
        let mut m = DMatrix::<f64>::zeros(d, d);
        for p in &self.points {
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += p[i] * p[j];
                }
            }
        }
        let eig = SymmetricEigen::new(m).eigenvalues;
        let max = eig.iter().cloned().fold(0.0, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
        if max == 0.0 {
            0.0
        } else {
            (min / max).sqrt()
        }
    }
}

/// Uniform bucket grid over the occupied bounding box.
#[derive(Clone, Debug)]
struct BucketIndex {
    dim: usize,
    side: f64,
    /// Occupied cells: lower corner and member range in `members`.
    corners: Vec<Point>,
    ranges: Vec<(u32, u32)>,
    members: Vec<u32>,
}

impl BucketIndex {
    fn build(points: &[Point], dim: usize) -> Self {
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for c in 0..dim {
            lo[c] = points.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
            hi[c] = points.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
        }
        let extent = (0..dim).map(|c| hi[c] - lo[c]).fold(0.0, f64::max).max(1e-12);
        // About 16 points per occupied cell for a two-dimensional image.
        let per_axis = ((points.len() as f64 / 16.0).sqrt().ceil()).clamp(1.0, 256.0);
        let side = extent / per_axis;
        let mut cells: HashMap<[i64; MAX_DIM], Vec<u32>> = HashMap::default();
        for (i, p) in points.iter().enumerate() {
            let mut key = [0i64; MAX_DIM];
            for c in 0..dim {
                key[c] = ((p[c] - lo[c]) / side).floor() as i64;
            }
            cells.entry(key).or_default().push(i as u32);
        }
        let mut keys: Vec<_> = cells.keys().copied().collect();
        keys.sort_unstable();
        let mut corners = Vec::with_capacity(keys.len());
        let mut ranges = Vec::with_capacity(keys.len());
        let mut members = Vec::with_capacity(points.len());
        for k in keys {
            let mut corner = [0.0; MAX_DIM];
            for c in 0..dim {
                corner[c] = lo[c] + k[c] as f64 * side;
            }
            let start = members.len() as u32;
            members.extend(&cells[&k]);
            corners.push(corner);
            ranges.push((start, members.len() as u32));
        }
        Self { dim, side, corners, ranges, members }
    }

    fn lower_bounds(&self, q: &Point) -> Vec<f64> {
        self.corners
            .iter()
            .map(|c| {
                let mut s = 0.0;
                for k in 0..self.dim {
                    let d = if q[k] < c[k] {
                        c[k] - q[k]
                    } else if q[k] > c[k] + self.side {
                        q[k] - c[k] - self.side
                    } else {
                        0.0
                    };
                    s += d * d;
                }
                s.sqrt()
            })
            .collect()
    }

    fn scan(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let (a, b) = self.ranges[cell];
        self.members[a as usize..b as usize].iter().map(|&i| i as usize)
    }

    /// (index, distance) of the nearest point; ties go to the lower index.
    fn nearest(&self, points: &[Point], q: &Point) -> (usize, f64) {
        self.within(points, q, 0.0).into_iter().next().expect("nonempty index")
    }

    /// All points within (1 + rel)·(nearest distance), sorted by (distance, index).
    fn within(&self, points: &[Point], q: &Point, rel: f64) -> Vec<(usize, f64)> {
        let lb = self.lower_bounds(q);
        let first = (0..lb.len()).min_by(|&a, &b| lb[a].total_cmp(&lb[b])).expect("nonempty index");
        let mut best = self.scan(first).map(|i| dist(&points[i], q)).fold(f64::INFINITY, f64::min);
        for (c, l) in lb.iter().enumerate() {
            if *l <= best {
                for i in self.scan(c) {
                    best = best.min(dist(&points[i], q));
                }
            }
        }
        let cut = best * (1.0 + rel);
        let mut out = Vec::new();
        for (c, l) in lb.iter().enumerate() {
            if *l <= cut {
                for i in self.scan(c) {
                    let d = dist(&points[i], q);
                    if d <= cut {
                        out.push((i, d));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: YVector,
    pub alpha: Vec<f64>,
    pub distance: f64,
    pub members: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub y_d: YVector,
    pub min_dist: f64,
    pub clusters: Vec<Cluster>,
    pub multivalued: bool,
    pub cluster_tol: f64,
    pub sep_tol: f64,
    pub resolution: f64,
}

impl ProjectionResult {
    pub fn representative(&self) -> &YVector {
        &self.clusters[0].representative
    }
}

/// Candidates within (1 + cluster_tol)·min_dist, grouped greedily so that
/// representatives are mutually at least sep_tol apart.
pub fn project(cloud: &ImageCloud, y_d: &YVector, cluster_tol: f64, sep_tol: f64) -> Result<ProjectionResult> {
    if !(cluster_tol >= 0.0 && sep_tol > 0.0) {
        return Err(invalid("tolerances must be nonnegative, sep_tol positive"));
    }
    let q = cloud.to_point(y_d)?;
    let cands = cloud.index.within(&cloud.points, &q, cluster_tol);
    let min_dist = cands[0].1;
    let mut reps: Vec<(usize, f64, usize)> = Vec::new();
    for (i, d) in cands {
        match reps.iter_mut().find(|(r, _, _)| dist(&cloud.points[*r], &cloud.points[i]) < sep_tol) {
            Some(r) => r.2 += 1,
            None => reps.push((i, d, 1)),
        }
    }
    let clusters: Vec<Cluster> = reps
        .into_iter()
        .map(|(i, d, members)| Cluster { representative: cloud.point(i), alpha: cloud.alpha(i).to_vec(), distance: d, members })
        .collect();
    Ok(ProjectionResult { y_d: y_d.clone(), min_dist, multivalued: clusters.len() >= 2, clusters, cluster_tol, sep_tol, resolution: cloud.resolution })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultivaluedLabel {
    pub y_d: YVector,
    pub projection: ProjectionResult,
    /// The two cloud points whose segment was scanned.
    pub endpoints: [YVector; 2],
    pub pairs_tried: usize,
}

/// Scans segments between pairs of distant cloud points for a jump of the
/// nearest point and bisects the segment onto the jump, where the label is
/// equidistant from two separated parts of the cloud.
pub fn find_multivalued(cloud: &ImageCloud, min_offset: f64, max_pairs: usize, seed: u64) -> Result<MultivaluedLabel> {
    let sep = cloud.sep_tol();
    let mut rng = seeded(seed);
    for tried in 1..=max_pairs {
        let a = cloud.point(rng::index(&mut rng, cloud.len()));
        let b = cloud.point(rng::index(&mut rng, cloud.len()));
        if a.distance(&b)? < 2.0 * sep {
            continue;
        }
        let at = |t: f64| {
            let mut y = a.scaled(1.0 - t);
            y.axpy(t, &b);
            y
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let (mut z_lo, mut z_hi) = (a.clone(), b.clone());
        for _ in 0..64 {
            if z_lo.distance(&z_hi)? < sep {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let y = at(mid);
            let p = project(cloud, &y, CLUSTER_TOL, sep)?;
            if p.multivalued && p.min_dist >= min_offset {
                return Ok(MultivaluedLabel { y_d: y, projection: p, endpoints: [a, b], pairs_tried: tried });
            }
            let r = p.representative().clone();
            if r.distance(&z_lo)? <= r.distance(&z_hi)? {
                lo = mid;
                z_lo = r;
            } else {
                hi = mid;
                z_hi = r;
            }
        }
    }
    Err(Error::SearchFailed(format!("no multivalued label after {max_pairs} segments")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeStep {
    pub l: usize,
    pub label: YVector,
    pub representative: YVector,
    pub min_dist: f64,
    pub single_valued: bool,
    pub label_to_target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscontinuityReport {
    pub y_d: YVector,
    pub targets: [YVector; 2],
    pub sequences: [Vec<ProbeStep>; 2],
    pub target_separation: f64,
    pub final_separation: f64,
    pub pass: bool,
}

/// Labels (1 − 1/l)·y_d + (1/l)·z_i, l = 1..L, for the two cluster
/// representatives; each should project uniquely near its own z_i.
pub fn discontinuity_probe(cloud: &ImageCloud, y_d: &YVector, z1: &YVector, z2: &YVector, steps: usize) -> Result<DiscontinuityReport> {
    if steps < 2 {
        return Err(invalid("need at least two steps"));
    }
    let sep = cloud.sep_tol();
    let seq = |z: &YVector| -> Result<Vec<ProbeStep>> {
        (1..=steps)
            .map(|l| {
                let t = 1.0 / l as f64;
                let mut y = y_d.scaled(1.0 - t);
                y.axpy(t, z);
                let p = project(cloud, &y, CLUSTER_TOL, sep)?;
                Ok(ProbeStep { l, label_to_target: y.distance(y_d)?, representative: p.representative().clone(), min_dist: p.min_dist, single_valued: !p.multivalued, label: y })
            })
            .collect()
    };
    let s1 = seq(z1)?;
    let s2 = seq(z2)?;
    let target_separation = z1.distance(z2)?;
    let final_separation = s1[steps - 1].representative.distance(&s2[steps - 1].representative)?;
    let single = s1.iter().chain(&s2).filter(|s| s.l >= 2).all(|s| s.single_valued);
    let converge = s1[steps - 1].label_to_target <= z1.distance(y_d)? / steps as f64 * (1.0 + 1e-9) + 1e-12
        && s2[steps - 1].label_to_target <= z2.distance(y_d)? / steps as f64 * (1.0 + 1e-9) + 1e-12;
    let pass = single && converge && final_separation >= 0.9 * target_separation;
    Ok(DiscontinuityReport { y_d: y_d.clone(), targets: [z1.clone(), z2.clone()], sequences: [s1, s2], target_separation, final_separation, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolarRow {
    pub s: f64,
    pub min_dist: f64,
    pub bar_distance: f64,
    /// Only labels beyond the threshold carry a claim.
    pub asserted: bool,
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolarReport {
    pub theta: f64,
    pub threshold: f64,
    pub rows: Vec<SolarRow>,
    pub pass: bool,
}

/// Labels ȳ + s·(y_d − ȳ)/‖y_d − ȳ‖ with s = factor × √(Θ/(1−Θ))‖ȳ‖ (or s =
/// factor when the threshold vanishes); beyond the threshold ȳ must not be a
/// nearest point, by more than sep_tol.
pub fn solar_check(cloud: &ImageCloud, y_d: &YVector, y_bar: &YVector, theta: f64, factors: &[f64]) -> Result<SolarReport> {
    if !(0.0..1.0).contains(&theta) {
        return Err(invalid(format!("Θ must lie in [0, 1), got {theta}")));
    }
    let diff = y_d.sub(y_bar)?;
    let norm = diff.norm();
    if norm == 0.0 {
        return Err(invalid("y_d must differ from ȳ"));
    }
    let dir = diff.scaled(1.0 / norm);
    let threshold = (theta / (1.0 - theta)).sqrt() * y_bar.norm();
    let sep = cloud.sep_tol();
    let mut rows = Vec::new();
    for &f in factors {
        let s = if threshold > 0.0 { f * threshold } else { f };
        let mut y = y_bar.clone();
        y.axpy(s, &dir);
        let p = project(cloud, &y, CLUSTER_TOL, sep)?;
        let bar_distance = y.distance(y_bar)?;
        rows.push(SolarRow { s, min_dist: p.min_dist, bar_distance, asserted: s > threshold, excluded: bar_distance - p.min_dist > sep });
    }
    let pass = rows.iter().filter(|r| r.asserted).all(|r| r.excluded);
    Ok(SolarReport { theta, threshold, rows, pass })
}

/// Largest squared cloud distance over random unit labels: an estimate of
/// Θ from below (not certified).
pub fn theta_from_cloud(cloud: &ImageCloud, labels: usize, seed: u64) -> f64 {
    let (n, dy) = (cloud.dataset.n(), cloud.scheme.output_dim());
    let qs: Vec<YVector> = (0..labels).map(|i| YVector::random_unit(n, dy, &mut rng::task_rng(seed, i as u64))).collect();
    qs.par_iter()
        .map(|y| {
            let q = cloud.to_point(y).expect("matching dimension");
            let d = cloud.index.nearest(&cloud.points, &q).1;
            d * d
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelReport {
    pub y_d: YVector,
    /// Best grid loss whose image is nearer z_i than the other representative.
    pub levels: [f64; 2],
    pub best_alphas: [Vec<f64>; 2],
    /// Lowest level at which the two cells share a 4-connected component.
    pub merge_level: Option<f64>,
    pub disjoint: bool,
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

/// Union-find sweep of a two-parameter grid in increasing loss: the two
/// basins around z₁ and z₂ stay disjoint below the merge level.
pub fn sublevel_components(scheme: &Scheme, data: &Dataset, y_d: &YVector, z1: &YVector, z2: &YVector, grid: &GridSpec) -> Result<SublevelReport> {
    if scheme.param_count() != 2 {
        return Err(Error::Unsupported("sublevel sweep needs a two-parameter scheme".into()));
    }
    let k = grid.count();
    let total = k * k;
    if total > u32::MAX as usize {
        return Err(invalid("grid too large"));
    }
    let sc = iso_scale(data.n());
    let eval = evaluator(scheme, data);
    let to = |y: &YVector| {
        let mut p = [0.0; MAX_DIM];
        p.iter_mut().zip(y.as_slice()).for_each(|(q, v)| *q = v * sc);
        p
    };
    let (yq, q1, q2) = (to(y_d), to(z1), to(z2));
    // Per cell: loss and basin tag (0 none, 1 or 2).
    let cells: Vec<(f64, u8)> = (0..total)
        .into_par_iter()
        .map(|c| {
            let a = [grid.value(c / k), grid.value(c % k)];
            let p = eval(&a);
            let loss = dist(&p, &yq).powi(2);
            let (d1, d2) = (dist(&p, &q1), dist(&p, &q2));
            let tag = if d1 < d2 { 1 } else if d2 < d1 { 2 } else { 0 };
            (loss, tag)
        })
        .collect();
    let best = |t: u8| (0..total).filter(|&c| cells[c].1 == t).min_by(|&a, &b| cells[a].0.total_cmp(&cells[b].0).then(a.cmp(&b)));
    let (Some(c1), Some(c2)) = (best(1), best(2)) else {
        return Err(Error::SearchFailed("grid misses one of the basins".into()));
    };
    let mut order: Vec<u32> = (0..total as u32).collect();
    order.par_sort_unstable_by(|&a, &b| cells[a as usize].0.total_cmp(&cells[b as usize].0).then(a.cmp(&b)));
    let mut parent: Vec<u32> = (0..total as u32).collect();
    let mut active = vec![false; total];
    let mut merge_level = None;
    for &c in &order {
        let c = c as usize;
        active[c] = true;
        let (i, j) = (c / k, c % k);
        let mut nbrs = Vec::with_capacity(4);
        if i > 0 {
            nbrs.push(c - k);
        }
        if i + 1 < k {
            nbrs.push(c + k);
        }
        if j > 0 {
            nbrs.push(c - 1);
        }
        if j + 1 < k {
            nbrs.push(c + 1);
        }
        for nb in nbrs {
            if active[nb] {
                let (ra, rb) = (find(&mut parent, c as u32), find(&mut parent, nb as u32));
                if ra != rb {
                    parent[ra.max(rb) as usize] = ra.min(rb);
                }
            }
        }
        if active[c1] && active[c2] && find(&mut parent, c1 as u32) == find(&mut parent, c2 as u32) {
            merge_level = Some(cells[c].0);
            break;
        }
    }
    let levels = [cells[c1].0, cells[c2].0];
    let top = levels[0].max(levels[1]);
    let disjoint = merge_level.map_or(true, |m| m > top + 1e-12 * (1.0 + top));
    let alpha_of = |c: usize| vec![grid.value(c / k), grid.value(c % k)];
    Ok(SublevelReport { y_d: y_d.clone(), levels, best_alphas: [alpha_of(c1), alpha_of(c2)], merge_level, disjoint })
}
