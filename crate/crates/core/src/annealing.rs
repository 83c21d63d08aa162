//! Deterministic annealing: free energy, Gibbs associations, the centroid
//! fixed point, the Hessian quadratic form, and a β sweep that records the
//! resolutions at which centroids split.
//!
//! Everything here uses the soft posterior covariance, normalized so that
//! `Σ_i p(i|j) = 1`. The hard, unnormalized cluster scatter lives in
//! [`crate::linalg::scatter_matrix`].

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{largest_eigenvalue, SymMatrix};
use crate::rng::stream_rng;

/// Default geometric ratio between consecutive β values.
pub const DEFAULT_SCHEDULE_RATIO: f64 = 1.05;

/// Default split perturbation, relative to the data diameter.
pub const DEFAULT_PERTURBATION_REL: f64 = 1e-6;

/// Centroids closer than this (relative to the data diameter) are one.
pub const DISTINCT_REL: f64 = 1e-4;

/// Fixed-point tolerance used by [`anneal`], relative to the diameter.
pub const ANNEAL_TOL_REL: f64 = 1e-9;

/// Fixed-point iteration cap used by [`anneal`].
pub const ANNEAL_MAX_ITER: usize = 100_000;

/// Relative size of the random tilt added to split directions.
const DIRECTION_JITTER: f64 = 1e-3;

fn check_beta(beta: f64, allow_zero: bool) -> Result<()> {
    let ok = beta.is_finite() && (beta > 0.0 || (allow_zero && beta == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "beta must be {}, got {beta}",
            if allow_zero { "nonnegative" } else { "positive" }
        )))
    }
}

fn check_centroids(data: &Dataset, centroids: ArrayView2<'_, f64>) -> Result<()> {
    if centroids.nrows() == 0 {
        return Err(Error::InvalidParameter("no centroids".into()));
    }
    if centroids.ncols() != data.dim() {
        return Err(Error::InvalidParameter(format!(
            "centroids have dimension {}, data has {}",
            centroids.ncols(),
            data.dim()
        )));
    }
    Ok(())
}

/// `N × k` squared distances `‖x_i − y_j‖²`.
fn sq_distances(points: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((points.nrows(), centroids.nrows()), |(i, j)| {
        points
            .row(i)
            .iter()
            .zip(centroids.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    })
}

/// Row-wise softmax of `−β d` with max-subtraction.
fn softmax_rows(dist: &Array2<f64>, beta: f64) -> Array2<f64> {
    let mut p = dist.mapv(|d| -beta * d);
    for mut row in p.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    p
}

/// Gibbs associations `p(j|i) ∝ exp(−β‖x_i − y_j‖²)`, rows summing to one.
pub fn gibbs_associations(data: &Dataset, centroids: ArrayView2<'_, f64>, beta: f64) -> Result<Array2<f64>> {
    check_beta(beta, true)?;
    check_centroids(data, centroids)?;
    Ok(softmax_rows(&sq_distances(data.points(), centroids), beta))
}

/// Facility-location distortion `D = Σ_i p_i min_j ‖x_i − y_j‖²`.
pub fn distortion(data: &Dataset, centroids: ArrayView2<'_, f64>) -> Result<f64> {
    check_centroids(data, centroids)?;
    let dist = sq_distances(data.points(), centroids);
    Ok(dist
        .axis_iter(Axis(0))
        .zip(data.weights().iter())
        .map(|(row, w)| w * row.fold(f64::INFINITY, |a, &b| a.min(b)))
        .sum())
}

/// Free energy `F = −(1/β) Σ_i p_i log Σ_j exp(−β‖x_i − y_j‖²)`.
pub fn free_energy(data: &Dataset, centroids: ArrayView2<'_, f64>, beta: f64) -> Result<f64> {
    check_beta(beta, false)?;
    check_centroids(data, centroids)?;
    let dist = sq_distances(data.points(), centroids);
    let total: f64 = dist
        .axis_iter(Axis(0))
        .zip(data.weights().iter())
        .map(|(row, w)| {
            let (arg, m) = row
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (j, &d)| if d < acc.1 { (j, d) } else { acc });
            // ln_1p keeps the tiny tail terms that matter at large β
            let tail: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != arg)
                .map(|(_, &d)| (-beta * (d - m)).exp())
                .sum();
            w * (-beta * m + tail.ln_1p())
        })
        .sum();
    Ok(-total / beta)
}

/// Mass `Σ_i p_i p(j|i)` and weighted sums `Σ_i p_i p(j|i) x_i` per centroid.
fn soft_moments(data: &Dataset, assoc: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let weighted = assoc * &data.weights().insert_axis(Axis(1));
    let mass = weighted.sum_axis(Axis(0));
    let sums = weighted.t().dot(&data.points());
    (mass, sums)
}

/// One application of the centroid condition
/// `y_j ← Σ_i p_i p(j|i) x_i / Σ_i p_i p(j|i)`.
///
/// A centroid that receives no mass stays where it is.
pub fn da_step(data: &Dataset, centroids: ArrayView2<'_, f64>, beta: f64) -> Result<Array2<f64>> {
    let assoc = gibbs_associations(data, centroids, beta)?;
    let (mass, sums) = soft_moments(data, &assoc);
    let mut next = centroids.to_owned();
    for j in 0..next.nrows() {
        if mass[j] > 0.0 {
            next.row_mut(j).assign(&(&sums.row(j) / mass[j]));
        }
    }
    Ok(next)
}

fn max_movement(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    a.axis_iter(Axis(0))
        .zip(b.axis_iter(Axis(0)))
        .map(|(x, y)| (&x - &y).mapv(|v| v * v).sum().sqrt())
        .fold(0.0, f64::max)
}

/// Iterates [`da_step`] until no centroid moves by `tol` or more.
pub fn da_fixed_point(
    data: &Dataset,
    centroids_init: ArrayView2<'_, f64>,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    match iterate_fixed_point(data, centroids_init, beta, tol, max_iter)? {
        (y, true, _) => Ok(y),
        (_, false, residual) => Err(Error::FixedPointNonConvergence {
            iterations: max_iter,
            residual,
        }),
    }
}

/// Returns the last iterate, whether it converged, and the last movement.
fn iterate_fixed_point(
    data: &Dataset,
    centroids_init: ArrayView2<'_, f64>,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Array2<f64>, bool, f64)> {
    check_beta(beta, false)?;
    check_centroids(data, centroids_init)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut y = centroids_init.to_owned();
    let mut movement = f64::INFINITY;
    for _ in 0..max_iter {
        let next = da_step(data, y.view(), beta)?;
        movement = max_movement(next.view(), y.view());
        y = next;
        if movement < tol {
            return Ok((y, true, movement));
        }
    }
    Ok((y, false, movement))
}

/// Posterior covariance of centroid `j`:
/// `C_j = Σ_i p(i|j)(x_i − y_j)(x_i − y_j)ᵀ` with
/// `p(i|j) = p_i p(j|i) / Σ_l p_l p(j|l)`.
pub fn posterior_covariance(data: &Dataset, centroids: ArrayView2<'_, f64>, beta: f64, j: usize) -> Result<SymMatrix> {
    let assoc = gibbs_associations(data, centroids, beta)?;
    if j >= centroids.nrows() {
        return Err(Error::InvalidParameter(format!("centroid index {j} out of range")));
    }
    Ok(posterior_covariance_from(data, &assoc, centroids.row(j), j))
}

fn posterior_covariance_from(data: &Dataset, assoc: &Array2<f64>, y: ArrayView1<'_, f64>, j: usize) -> SymMatrix {
    let post = &assoc.column(j) * &data.weights();
    let mass = post.sum();
    let d = data.dim();
    if !(mass > 0.0) {
        return SymMatrix::symmetrized(Array2::zeros((d, d)));
    }
    let centred = &data.points() - &y;
    let scaled = &centred * &(&post / mass).insert_axis(Axis(1));
    SymMatrix::symmetrized(scaled.t().dot(&centred))
}

/// The resolution `1 / (2 λ_max(C_j))` at which centroid `j` becomes
/// unstable.
pub fn critical_beta_posterior(data: &Dataset, centroids: ArrayView2<'_, f64>, beta: f64, j: usize) -> Result<f64> {
    let c = posterior_covariance(data, centroids, beta, j)?;
    let lambda = largest_eigenvalue(&c)?.value;
    if lambda > 0.0 {
        Ok(1.0 / (2.0 * lambda))
    } else {
        Err(Error::UnboundedResolution)
    }
}

/// `1 / (2 λ_max(C))` for a single centroid at the weighted mean, where `C`
/// is the weighted covariance of the whole dataset.
pub fn first_critical_beta(data: &Dataset) -> Result<f64> {
    let mean = data.weighted_mean().insert_axis(Axis(0));
    critical_beta_posterior(data, mean.view(), 1.0, 0)
}

/// The quadratic form
/// `H = Σ_j Σ_i p_i p(j|i) ψ_jᵀ(I − 2βC_j)ψ_j + Σ_i p_i [Σ_j p(j|i)(x_i − y_j)ᵀψ_j]²`.
///
/// `psi` holds one perturbation row per centroid.
pub fn hessian_quadratic_form(
    data: &Dataset,
    centroids: ArrayView2<'_, f64>,
    beta: f64,
    psi: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_beta(beta, true)?;
    if psi.dim() != centroids.dim() {
        return Err(Error::InvalidParameter(format!(
            "perturbation has shape {:?}, centroids {:?}",
            psi.dim(),
            centroids.dim()
        )));
    }
    let assoc = gibbs_associations(data, centroids, beta)?;
    let (mass, _) = soft_moments(data, &assoc);
    let mut first = 0.0;
    for j in 0..centroids.nrows() {
        let c = posterior_covariance_from(data, &assoc, centroids.row(j), j);
        let p = psi.row(j);
        let cp = c.as_array().dot(&p);
        first += mass[j] * (p.dot(&p) - 2.0 * beta * p.dot(&cp));
    }
    let mut second = 0.0;
    for (i, x) in data.points().axis_iter(Axis(0)).enumerate() {
        let s: f64 = (0..centroids.nrows())
            .map(|j| assoc[[i, j]] * (&x - &centroids.row(j)).dot(&psi.row(j)))
            .sum();
        second += data.weights()[i] * s * s;
    }
    Ok(first + second)
}

/// Geometric schedule from `start` up to and including the first value
/// `≥ end`.
pub fn geometric_schedule(start: f64, end: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && start.is_finite() && end.is_finite() && end > start) {
        return Err(Error::InvalidParameter(format!(
            "schedule needs 0 < start < end, got {start}..{end}"
        )));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("schedule ratio must exceed 1, got {ratio}")));
    }
    let mut betas = vec![start];
    while *betas.last().unwrap() < end {
        betas.push(betas.last().unwrap() * ratio);
    }
    Ok(betas)
}

/// Converged annealing state at one β.
#[derive(Debug, Clone)]
pub struct AnnealState {
    pub beta: f64,
    /// Distinct centroids, one row each.
    pub centroids: Array2<f64>,
    /// `N × k` Gibbs associations for `centroids`.
    pub associations: Array2<f64>,
    pub free_energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub beta: f64,
    pub k_distinct: usize,
    pub free_energy: f64,
    /// Whether the fixed-point iteration met its tolerance at this β.
    pub converged: bool,
}

/// A centroid that separated into two at `beta`. `cluster` indexes the
/// centroids of the previous step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitEvent {
    pub beta: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone)]
pub struct AnnealTrace {
    pub steps: Vec<TraceStep>,
    pub split_events: Vec<SplitEvent>,
    pub final_state: AnnealState,
}

impl AnnealTrace {
    /// β of the first split, if any.
    pub fn first_split(&self) -> Option<f64> {
        self.split_events.first().map(|e| e.beta)
    }

    /// CSV with columns `beta,k_distinct,free_energy`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["beta", "k_distinct", "free_energy"])?;
        for s in &self.steps {
            w.write_record([s.beta.to_string(), s.k_distinct.to_string(), s.free_energy.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Deterministic annealing over an increasing β schedule.
///
/// At every β each distinct centroid is replaced by two copies offset by
/// `±perturbation` along the top eigenvector of its posterior covariance
/// (tilted by a small seeded random vector so degenerate spectra still get a
/// direction). After the fixed point, copies closer than
/// [`DISTINCT_REL`]` · diameter` are merged. A centroid whose copies stay
/// apart has split.
pub fn anneal(data: &Dataset, beta_schedule: &[f64], perturbation: f64, seed: u64) -> Result<AnnealTrace> {
    if beta_schedule.is_empty() {
        return Err(Error::InvalidParameter("empty beta schedule".into()));
    }
    if beta_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("beta schedule must be strictly increasing".into()));
    }
    check_beta(beta_schedule[0], false)?;
    if !(perturbation > 0.0 && perturbation.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "split perturbation must be positive, got {perturbation}"
        )));
    }
    let diameter = data.diameter_bound();
    if diameter == 0.0 {
        return Err(Error::InvalidParameter("all points coincide".into()));
    }
    let beta_c = first_critical_beta(data)?;
    if beta_schedule[0] >= beta_c {
        return Err(Error::InvalidParameter(format!(
            "schedule starts at {} but must start below the first critical beta {beta_c}",
            beta_schedule[0]
        )));
    }

    let tol = ANNEAL_TOL_REL * diameter;
    let merge = DISTINCT_REL * diameter;
    let mut rng = stream_rng(seed, &[0xA11E]);
    let mut reps = data.weighted_mean().insert_axis(Axis(0));
    let mut steps = Vec::with_capacity(beta_schedule.len());
    let mut split_events = Vec::new();

    for &beta in beta_schedule {
        let m = reps.nrows();
        let d = data.dim();
        let assoc = gibbs_associations(data, reps.view(), beta)?;
        let mut candidates = Array2::<f64>::zeros((2 * m, d));
        for j in 0..m {
            let c = posterior_covariance_from(data, &assoc, reps.row(j), j);
            let mut u = largest_eigenvalue(&c)?.vector;
            for v in u.iter_mut() {
                *v += DIRECTION_JITTER * rng.sample::<f64, _>(StandardNormal);
            }
            let norm = u.dot(&u).sqrt();
            u.mapv_inplace(|v| v / norm);
            candidates.row_mut(2 * j).assign(&(&reps.row(j) + &(&u * perturbation)));
            candidates.row_mut(2 * j + 1).assign(&(&reps.row(j) - &(&u * perturbation)));
        }

        let (y, converged, residual) = iterate_fixed_point(data, candidates.view(), beta, tol, ANNEAL_MAX_ITER)?;
        if !converged {
            log::warn!("fixed point at beta = {beta} stopped with movement {residual:e}");
        }
        let assoc = gibbs_associations(data, y.view(), beta)?;
        let (mass, _) = soft_moments(data, &assoc);
        let (groups, next) = merge_close(y.view(), mass.view(), merge);
        for j in 0..m {
            if groups[2 * j] != groups[2 * j + 1] {
                split_events.push(SplitEvent { beta, cluster: j });
            }
        }
        reps = next;
        steps.push(TraceStep {
            beta,
            k_distinct: reps.nrows(),
            free_energy: free_energy(data, reps.view(), beta)?,
            converged,
        });
    }

    let beta = *beta_schedule.last().unwrap();
    let associations = gibbs_associations(data, reps.view(), beta)?;
    let free_energy = free_energy(data, reps.view(), beta)?;
    Ok(AnnealTrace {
        steps,
        split_events,
        final_state: AnnealState {
            beta,
            centroids: reps,
            associations,
            free_energy,
        },
    })
}

/// Groups rows closer than `radius` to a group's first member and returns
/// each row's group with the mass-weighted group means.
fn merge_close(y: ArrayView2<'_, f64>, mass: ArrayView1<'_, f64>, radius: f64) -> (Vec<usize>, Array2<f64>) {
    let mut leaders: Vec<usize> = Vec::new();
    let mut groups = Vec::with_capacity(y.nrows());
    for i in 0..y.nrows() {
        let found = leaders
            .iter()
            .position(|&l| (&y.row(i) - &y.row(l)).mapv(|v| v * v).sum().sqrt() <= radius);
        match found {
            Some(g) => groups.push(g),
            None => {
                groups.push(leaders.len());
                leaders.push(i);
            }
        }
    }
    let mut means = Array2::<f64>::zeros((leaders.len(), y.ncols()));
    let mut totals = vec![0.0; leaders.len()];
    for (i, &g) in groups.iter().enumerate() {
        means.row_mut(g).scaled_add(mass[i], &y.row(i));
        totals[g] += mass[i];
    }
    for (g, &l) in leaders.iter().enumerate() {
        if totals[g] > 0.0 {
            means.row_mut(g).mapv_inplace(|v| v / totals[g]);
        } else {
            means.row_mut(g).assign(&y.row(l));
        }
    }
    (groups, means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    use crate::clustering::kmeans;
    use crate::dataset::{gen_gaussian_mixture, gen_two_disks};

    fn toy() -> Dataset {
        Dataset::new(array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [4.0, 4.0], [5.0, 4.0]], None, "toy").unwrap()
    }

    fn toy_centroids() -> Array2<f64> {
        array![[0.3, 0.3], [4.5, 4.0]]
    }

    #[test]
    fn associations_limits() {
        let data = toy();
        let y = toy_centroids();
        let p0 = gibbs_associations(&data, y.view(), 0.0).unwrap();
        assert!(p0.iter().all(|&v| (v - 0.5).abs() < 1e-15));

        let one = array![[1.0, 1.0]];
        let p1 = gibbs_associations(&data, one.view(), 3.0).unwrap();
        assert!(p1.iter().all(|&v| v == 1.0));

        let hot = gibbs_associations(&data, y.view(), 1e6).unwrap();
        for i in 0..5 {
            let nearest = if i < 3 { 0 } else { 1 };
            assert_eq!(hot[[i, nearest]], 1.0);
        }
        for beta in [0.0, 0.1, 1.0, 1e3, 1e12] {
            let p = gibbs_associations(&data, y.view(), beta).unwrap();
            for row in p.axis_iter(Axis(0)) {
                assert!((row.sum() - 1.0).abs() < 1e-9);
            }
        }
        assert!(gibbs_associations(&data, y.view(), -1.0).is_err());
    }

    #[test]
    fn free_energy_bounds() {
        let data = toy();
        let one = array![[1.0, 1.0]];
        let f1 = free_energy(&data, one.view(), 2.0).unwrap();
        assert_relative_eq!(f1, distortion(&data, one.view()).unwrap(), max_relative = 1e-12);

        let y = array![[0.0, 0.5], [1.0, 0.5]];
        let d = distortion(&data, y.view()).unwrap();
        let mut gaps = Vec::new();
        for beta in [1.0, 10.0, 100.0] {
            let f = free_energy(&data, y.view(), beta).unwrap();
            assert!(f <= d + 1e-12);
            gaps.push((f - d).abs());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[2] < 0.05 * d);
        assert!(free_energy(&data, y.view(), 0.0).is_err());
    }

    #[test]
    fn fixed_point_limits() {
        let data = toy();
        let mean = data.weighted_mean();
        let y = da_fixed_point(&data, toy_centroids().view(), 1e-6, 1e-12, 10_000).unwrap();
        for row in y.axis_iter(Axis(0)) {
            assert!((&row - &mean).iter().all(|v| v.abs() < 1e-4));
        }
        let one = array![[9.0, -3.0]];
        let y1 = da_step(&data, one.view(), 50.0).unwrap();
        assert_relative_eq!(y1[[0, 0]], mean[0], epsilon = 1e-12);
        assert_relative_eq!(y1[[0, 1]], mean[1], epsilon = 1e-12);
    }

    #[test]
    fn fixed_point_reports_non_convergence() {
        let data = toy();
        match da_fixed_point(&data, toy_centroids().view(), 0.5, 1e-300, 2) {
            Err(Error::FixedPointNonConvergence { iterations: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_energy_non_increasing_along_iteration() {
        let data = gen_two_disks(1.0, 4.0, 100, 5).unwrap();
        for beta in [0.05, 0.5, 3.0] {
            let mut y = array![[0.5, -1.0], [-0.2, 3.0], [0.1, 0.2]];
            let mut f = free_energy(&data, y.view(), beta).unwrap();
            for _ in 0..50 {
                y = da_step(&data, y.view(), beta).unwrap();
                let next = free_energy(&data, y.view(), beta).unwrap();
                assert!(next <= f + 1e-12, "F rose from {f} to {next} at beta {beta}");
                f = next;
            }
        }
    }

    #[test]
    fn two_centroids_find_disk_centres() {
        let data = gen_two_disks(1.0, 4.0, 500, 6).unwrap();
        let init = array![[0.3, 1.0], [-0.3, 3.0]];
        let y = da_fixed_point(&data, init.view(), 1.0, 1e-10, 10_000).unwrap();
        let hard = kmeans(&data, 2, 4, 0).unwrap();
        for row in y.axis_iter(Axis(0)) {
            let closest = hard
                .centroids
                .axis_iter(Axis(0))
                .map(|c| (&row - &c).mapv(|v| v * v).sum().sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 0.05, "DA centroid {row} is {closest} from k-means");
        }
    }

    #[test]
    fn hessian_basics() {
        let data = toy();
        let y = toy_centroids();
        let zero = Array2::zeros((2, 2));
        assert_eq!(hessian_quadratic_form(&data, y.view(), 1.0, zero.view()).unwrap(), 0.0);
        let psi = array![[0.6, 0.8], [0.0, 1.0]];
        assert!(hessian_quadratic_form(&data, y.view(), 1e-9, psi.view()).unwrap() > 0.0);
    }

    /// Two coincident centroids at the mean, perturbed by `±u`.
    fn antisymmetric_setup(data: &Dataset) -> (Array2<f64>, Array2<f64>, f64) {
        let mean = data.weighted_mean();
        let y = ndarray::stack(Axis(0), &[mean.view(), mean.view()]).unwrap();
        let c = posterior_covariance(data, y.view(), 1.0, 0).unwrap();
        let top = largest_eigenvalue(&c).unwrap();
        let psi = ndarray::stack(Axis(0), &[top.vector.view(), (-&top.vector).view()]).unwrap();
        (y, psi, 1.0 / (2.0 * top.value))
    }

    #[test]
    fn hessian_changes_sign_at_critical_beta() {
        let data = gen_two_disks(1.0, 4.0, 400, 7).unwrap();
        let (y, psi, beta_c) = antisymmetric_setup(&data);
        let h = |b: f64| hessian_quadratic_form(&data, y.view(), b, psi.view()).unwrap();
        assert!(h(0.9 * beta_c) > 0.0);
        assert!(h(1.1 * beta_c) < 0.0);
        let (mut lo, mut hi) = (0.5 * beta_c, 2.0 * beta_c);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - beta_c).abs() < 0.02 * beta_c);
    }

    #[test]
    fn hessian_tracks_free_energy_curvature() {
        // Along an antisymmetric perturbation of coincident centroids the
        // second difference of F equals 2H.
        let data = gen_two_disks(1.0, 4.0, 300, 8).unwrap();
        let (y, psi, beta_c) = antisymmetric_setup(&data);
        let eps = 1e-3;
        for beta in [0.5 * beta_c, 1.5 * beta_c] {
            let f = |s: f64| free_energy(&data, (&y + &(&psi * s)).view(), beta).unwrap();
            let curvature = (f(eps) - 2.0 * f(0.0) + f(-eps)) / (eps * eps);
            let h = hessian_quadratic_form(&data, y.view(), beta, psi.view()).unwrap();
            assert_relative_eq!(curvature, 2.0 * h, max_relative = 1e-3);
        }
    }

    #[test]
    fn schedule_is_geometric() {
        let s = geometric_schedule(1.0, 2.0, 1.5).unwrap();
        assert_eq!(s, vec![1.0, 1.5, 2.25]);
        assert!(geometric_schedule(1.0, 2.0, 1.0).is_err());
        assert!(geometric_schedule(0.0, 2.0, 1.1).is_err());
    }

    #[test]
    fn no_split_below_critical_beta() {
        let data = gen_two_disks(1.0, 4.0, 200, 9).unwrap();
        let beta_c = first_critical_beta(&data).unwrap();
        let schedule = geometric_schedule(0.2 * beta_c, 0.9 * beta_c, 1.05).unwrap();
        let trace = anneal(&data, &schedule, 1e-6 * data.diameter_bound(), 0).unwrap();
        assert!(trace.split_events.is_empty());
        assert!(trace.steps.iter().all(|s| s.k_distinct == 1));
    }

    #[test]
    fn first_split_matches_prediction() {
        let means = array![[0.0, 0.0], [3.0, 1.0], [-1.0, 4.0]];
        let cov = array![[0.5, 0.1], [0.1, 0.4]];
        let data = gen_gaussian_mixture(&means, &[cov.clone(), cov.clone(), cov], &[80, 80, 80], 3).unwrap();
        let beta_c = first_critical_beta(&data).unwrap();
        let schedule = geometric_schedule(0.5 * beta_c, 1.5 * beta_c, 1.01).unwrap();
        let trace = anneal(&data, &schedule, 1e-6 * data.diameter_bound(), 1).unwrap();
        let first = trace.first_split().expect("a split");
        assert!((first - beta_c).abs() < 0.05 * beta_c, "{first} vs {beta_c}");
    }

    #[test]
    fn anneal_validates_schedule() {
        let data = toy();
        let beta_c = first_critical_beta(&data).unwrap();
        assert!(anneal(&data, &[], 1e-6, 0).is_err());
        assert!(anneal(&data, &[0.2 * beta_c, 0.1 * beta_c], 1e-6, 0).is_err());
        assert!(anneal(&data, &[2.0 * beta_c, 3.0 * beta_c], 1e-6, 0).is_err());
        assert!(anneal(&data, &[0.5 * beta_c], 0.0, 0).is_err());
    }

    #[test]
    fn trace_csv() {
        let data = toy();
        let beta_c = first_critical_beta(&data).unwrap();
        let trace = anneal(&data, &[0.5 * beta_c, 0.6 * beta_c], 1e-6, 0).unwrap();
        let mut out = Vec::new();
        trace.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("beta,k_distinct,free_energy"));
        assert_eq!(text.lines().count(), 3);
    }
}
