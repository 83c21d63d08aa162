//! Hard clustering: weighted k-means and spectral clustering.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, KernelMatrix, SymMatrix};
use crate::rng::{stream_rng, ChaCha8Rng};

/// Lloyd iteration cap.
pub const MAX_LLOYD_ITER: usize = 300;

/// Default number of k-means restarts.
pub const DEFAULT_RESTARTS: usize = 10;

/// A hard partition of the data into `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringSolution {
    pub k: usize,
    /// Cluster index in `0..k` for every point.
    pub assignment: Vec<usize>,
    /// `k × d` centroids, each the weighted mean of its members.
    pub centroids: Array2<f64>,
    /// `Σ p_i ‖x_i − y_{c(i)}‖²`.
    pub distortion: f64,
}

impl ClusteringSolution {
    /// Builds the solution induced by a given assignment.
    pub fn from_assignment(data: &Dataset, assignment: Vec<usize>, k: usize) -> Result<Self> {
        if assignment.len() != data.n_points() {
            return Err(Error::InvalidParameter(format!(
                "assignment has {} entries for {} points",
                assignment.len(),
                data.n_points()
            )));
        }
        if let Some(&c) = assignment.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidParameter(format!("cluster index {c} out of range for k = {k}")));
        }
        let centroids = weighted_means(data.points(), data.weights(), &assignment, k)?;
        let distortion = distortion(data.points(), data.weights(), &assignment, &centroids);
        Ok(Self {
            k,
            assignment,
            centroids,
            distortion,
        })
    }

    /// Number of members of each cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn weighted_means(
    points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
    assignment: &[usize],
    k: usize,
) -> Result<Array2<f64>> {
    let d = points.ncols();
    let mut sums = Array2::<f64>::zeros((k, d));
    let mut plain = Array2::<f64>::zeros((k, d));
    let mut mass = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        let x = points.row(i);
        sums.row_mut(c).scaled_add(weights[i], &x);
        plain.row_mut(c).scaled_add(1.0, &x);
        mass[c] += weights[i];
        count[c] += 1;
    }
    for c in 0..k {
        if count[c] == 0 {
            return Err(Error::EmptyCluster { cluster: c });
        }
        if mass[c] > 0.0 {
            sums.row_mut(c).mapv_inplace(|v| v / mass[c]);
        } else {
            // zero-weight cluster: fall back to the plain mean
            let row = plain.row(c).mapv(|v| v / count[c] as f64);
            sums.row_mut(c).assign(&row);
        }
    }
    Ok(sums)
}

fn distortion(
    points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
    assignment: &[usize],
    centroids: &Array2<f64>,
) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| weights[i] * sq_dist(points.row(i), centroids.row(c)))
        .sum()
}

/// Nearest centroid for every point, ties to the lowest index.
fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>) -> Vec<usize> {
    points
        .axis_iter(Axis(0))
        .map(|x| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, y) in centroids.axis_iter(Axis(0)).enumerate() {
                let d = sq_dist(x, y);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: ArrayView2<'_, f64>, assignment: &mut [usize], centroids: &Array2<f64>, k: usize) {
    let mut count = vec![0usize; k];
    for &c in assignment.iter() {
        count[c] += 1;
    }
    for empty in 0..k {
        if count[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &c) in assignment.iter().enumerate() {
            if count[c] < 2 {
                continue;
            }
            let d = sq_dist(points.row(i), centroids.row(c));
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("k <= N leaves a cluster with two or more members");
        count[assignment[i]] -= 1;
        assignment[i] = empty;
        count[empty] = 1;
    }
}

/// Draws an index with probability proportional to `mass`.
fn sample_index(rng: &mut ChaCha8Rng, mass: &[f64]) -> usize {
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return rng.random_range(0..mass.len());
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &m) in mass.iter().enumerate() {
        if u < m {
            return i;
        }
        u -= m;
    }
    mass.iter().rposition(|&m| m > 0.0).unwrap_or(mass.len() - 1)
}

/// Greedy k-means++ seeding with `2 + ⌊ln k⌋` candidates per step.
fn seed_centroids(
    points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let n = points.nrows();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = Array2::<f64>::zeros((k, points.ncols()));
    let w: Vec<f64> = weights.to_vec();
    let first = sample_index(rng, &w);
    centroids.row_mut(0).assign(&points.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();

    for c in 1..k {
        let mass: Vec<f64> = closest.iter().zip(&w).map(|(d, w)| d * w).collect();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = sample_index(rng, &mass);
            let updated: Vec<f64> = (0..n)
                .map(|i| closest[i].min(sq_dist(points.row(i), points.row(cand))))
                .collect();
            let pot: f64 = updated.iter().zip(&w).map(|(d, w)| d * w).sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least two trials");
        centroids.row_mut(c).assign(&points.row(cand));
        closest = updated;
    }
    centroids
}

fn lloyd(
    points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Array2<f64>, f64) {
    let mut centroids = seed_centroids(points, weights, k, rng);
    let mut assignment = assign(points, &centroids);
    let mut previous = f64::INFINITY;
    for iter in 0..MAX_LLOYD_ITER {
        repair_empty(points, &mut assignment, &centroids, k);
        centroids = weighted_means(points, weights, &assignment, k).expect("no empty clusters after repair");
        let current = distortion(points, weights, &assignment, &centroids);
        debug_assert!(
            current <= previous * (1.0 + 1e-9) + 1e-12,
            "distortion increased from {previous} to {current}"
        );
        previous = current;
        if iter + 1 == MAX_LLOYD_ITER {
            log::debug!("k-means hit the iteration cap at k = {k}");
            break;
        }
        let next = assign(points, &centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    if hartigan(points, weights, &mut assignment, &mut centroids, previous) {
        centroids = weighted_means(points, weights, &assignment, k).expect("moves never empty a cluster");
        let current = distortion(points, weights, &assignment, &centroids);
        debug_assert!(current <= previous * (1.0 + 1e-9) + 1e-12);
        previous = current;
    }
    (assignment, centroids, previous)
}

/// Hartigan refinement: moves single points between clusters while that
/// lowers the distortion, accounting for the centroid shift the move causes.
/// A partition stable under these moves is also stable under Lloyd's.
fn hartigan(
    points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
    assignment: &mut [usize],
    centroids: &mut Array2<f64>,
    distortion: f64,
) -> bool {
    let k = centroids.nrows();
    let mut mass = vec![0.0; k];
    let mut count = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        mass[c] += weights[i];
        count[c] += 1;
    }
    let threshold = 1e-12 * distortion;
    let mut moved_any = false;
    for _ in 0..MAX_LLOYD_ITER {
        let mut moved = false;
        for i in 0..assignment.len() {
            let (w, a) = (weights[i], assignment[i]);
            if w <= 0.0 || count[a] < 2 || mass[a] - w <= 0.0 {
                continue;
            }
            let x = points.row(i);
            let leave = mass[a] * w / (mass[a] - w) * sq_dist(x, centroids.row(a));
            let mut best = None;
            let mut best_gain = threshold;
            for b in (0..k).filter(|&b| b != a) {
                let gain = leave - mass[b] * w / (mass[b] + w) * sq_dist(x, centroids.row(b));
                if gain > best_gain {
                    best_gain = gain;
                    best = Some(b);
                }
            }
            let Some(b) = best else { continue };
            let ya = (&centroids.row(a) * mass[a] - &x * w) / (mass[a] - w);
            let yb = (&centroids.row(b) * mass[b] + &x * w) / (mass[b] + w);
            centroids.row_mut(a).assign(&ya);
            centroids.row_mut(b).assign(&yb);
            mass[a] -= w;
            mass[b] += w;
            count[a] -= 1;
            count[b] += 1;
            assignment[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    moved_any
}

fn check_k(k: usize, n: usize, restarts: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds the number of points {n}")));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    Ok(())
}

fn best_of_restarts(
    points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
    k: usize,
    restarts: usize,
    seed: u64,
) -> (Vec<usize>, Array2<f64>, f64) {
    let runs: Vec<_> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, &[k as u64, r as u64]);
            lloyd(points, weights, k, &mut rng)
        })
        .collect();
    // strict `<` keeps the lowest restart index on ties
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.2 < runs[best].2 {
            best = r;
        }
    }
    runs.into_iter().nth(best).expect("restarts >= 1")
}

/// Weighted k-means: k-means++ seeding, Lloyd iterations refined by
/// single-point moves, best of
/// `restarts` runs. Deterministic for a given `seed`.
pub fn kmeans(data: &Dataset, k: usize, restarts: usize, seed: u64) -> Result<ClusteringSolution> {
    check_k(k, data.n_points(), restarts)?;
    let (assignment, centroids, distortion) = best_of_restarts(data.points(), data.weights(), k, restarts, seed);
    Ok(ClusteringSolution {
        k,
        assignment,
        centroids,
        distortion,
    })
}

/// Leading eigenvectors of `D^{-1/2} K D^{-1/2}`, computed once and reused
/// for every `k`.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `N × max_k`, columns ordered by decreasing eigenvalue.
    vectors: Array2<f64>,
    /// The matching eigenvalues, decreasing.
    values: Array1<f64>,
}

impl SpectralEmbedding {
    pub fn new(kernel: &KernelMatrix, max_k: usize) -> Result<Self> {
        let n = kernel.order();
        if max_k == 0 || max_k > n {
            return Err(Error::InvalidParameter(format!(
                "embedding dimension {max_k} out of range for {n} points"
            )));
        }
        let k = kernel.as_array();
        let degree = k.sum_axis(Axis(1));
        if let Some(index) = degree.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::IsolatedPoint { index });
        }
        let inv_sqrt = degree.mapv(|d| 1.0 / d.sqrt());
        let m = Array2::from_shape_fn((n, n), |(i, j)| inv_sqrt[i] * k[[i, j]] * inv_sqrt[j]);
        let eig = symmetric_eigen(&SymMatrix::symmetrized(m))?;
        let cols: Vec<usize> = (n - max_k..n).rev().collect();
        Ok(Self {
            vectors: eig.vectors.select(Axis(1), &cols),
            values: eig.values.select(Axis(0), &cols),
        })
    }

    pub fn max_k(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn eigenvalues(&self) -> ArrayView1<'_, f64> {
        self.values.view()
    }

    /// The first `k` eigenvector coordinates of each point, rows scaled to
    /// unit length. All-zero rows stay zero.
    pub fn embed(&self, k: usize) -> Array2<f64> {
        let mut u = self.vectors.slice(ndarray::s![.., ..k]).to_owned();
        for mut row in u.axis_iter_mut(Axis(0)) {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
        u
    }

    /// k-means on the `k`-dimensional embedding. Centroids and distortion in
    /// the returned solution live in embedding space.
    pub fn cluster(&self, k: usize, restarts: usize, seed: u64) -> Result<ClusteringSolution> {
        let n = self.vectors.nrows();
        check_k(k, n, restarts)?;
        if k > self.max_k() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds the embedding dimension {}",
                self.max_k()
            )));
        }
        let u = self.embed(k);
        let weights = Array1::from_elem(n, 1.0 / n as f64);
        let (assignment, centroids, distortion) = best_of_restarts(u.view(), weights.view(), k, restarts, seed);
        Ok(ClusteringSolution {
            k,
            assignment,
            centroids,
            distortion,
        })
    }
}

/// Spectral clustering of a similarity matrix into `k` groups.
pub fn spectral_cluster(kernel: &KernelMatrix, k: usize, restarts: usize, seed: u64) -> Result<ClusteringSolution> {
    check_k(k, kernel.order(), restarts)?;
    SpectralEmbedding::new(kernel, k)?.cluster(k, restarts, seed)
}
