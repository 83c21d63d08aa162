//! Seeded synthetic datasets. Every generator is a pure function of its
//! parameters and seed.

use std::f64::consts::{PI, TAU};

use ndarray::{array, Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(cov: &Array2<f64>, index: usize) -> Result<Array2<f64>> {
    let d = cov.nrows();
    if cov.ncols() != d {
        return Err(Error::InvalidParameter(format!("covariance {index} is not square")));
    }
    let scale = cov.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (cov[[i, j]] - cov[[j, i]]).abs() > 1e-12 * scale {
                return Err(Error::NotPositiveDefinite { index });
            }
        }
    }
    let mut l = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut diag = cov[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { index });
        }
        let diag = diag.sqrt();
        l[[j, j]] = diag;
        for i in j + 1..d {
            let mut s = cov[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / diag;
        }
    }
    Ok(l)
}

/// Samples `counts[c]` points from `N(means[c], covariances[c])` for each
/// component `c`, in component order. Labels are component indices.
pub fn gen_gaussian_mixture(
    means: &Array2<f64>,
    covariances: &[Array2<f64>],
    counts: &[usize],
    seed: u64,
) -> Result<Dataset> {
    let (k, d) = means.dim();
    if k == 0 || d == 0 {
        return Err(Error::InvalidParameter("mixture needs at least one component".into()));
    }
    if covariances.len() != k || counts.len() != k {
        return Err(Error::InvalidParameter(format!(
            "{k} means, {} covariances, {} counts",
            covariances.len(),
            counts.len()
        )));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::InvalidParameter(format!("component {c} has zero points")));
    }
    let factors = covariances
        .iter()
        .enumerate()
        .map(|(c, cov)| {
            if cov.dim() != (d, d) {
                return Err(Error::InvalidParameter(format!("covariance {c} is not {d}x{d}")));
            }
            cholesky(cov, c)
        })
        .collect::<Result<Vec<_>>>()?;

    let total: usize = counts.iter().sum();
    let mut rng = rng_from_seed(seed);
    let mut points = Array2::<f64>::zeros((total, d));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    let mut z = Array1::<f64>::zeros(d);
    for (c, (&count, l)) in counts.iter().zip(&factors).enumerate() {
        for _ in 0..count {
            z.mapv_inplace(|_| StandardNormal.sample(&mut rng));
            let x = &means.row(c) + &l.dot(&z);
            points.row_mut(row).assign(&x);
            labels.push(c as i64);
            row += 1;
        }
    }
    Dataset::new(points, Some(labels), "gaussian-mixture")
}

/// Two disks of radius `radius` filled uniformly, centred at `(0, 0)` and
/// `(0, center_gap)`. Labels 0 and 1.
pub fn gen_two_disks(radius: f64, center_gap: f64, n_per_disk: usize, seed: u64) -> Result<Dataset> {
    if !(radius > 0.0) || !(center_gap > 0.0) {
        return Err(Error::InvalidParameter("radius and center gap must be positive".into()));
    }
    if n_per_disk == 0 {
        return Err(Error::InvalidParameter("n_per_disk must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut points = Array2::<f64>::zeros((2 * n_per_disk, 2));
    let mut labels = Vec::with_capacity(2 * n_per_disk);
    for disk in 0..2 {
        let cy = disk as f64 * center_gap;
        for i in 0..n_per_disk {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = TAU * rng.random::<f64>();
            let row = disk * n_per_disk + i;
            points[[row, 0]] = r * theta.cos();
            points[[row, 1]] = cy + r * theta.sin();
            labels.push(disk as i64);
        }
    }
    Dataset::new(points, Some(labels), "two-disks")
}

/// Vertices of an equilateral triangle with side `side` centred at `center`,
/// the first vertex at angle `90° + rotation`.
fn triangle(center: [f64; 2], side: f64, rotation: f64) -> [[f64; 2]; 3] {
    let r = side / 3f64.sqrt();
    let mut out = [[0.0; 2]; 3];
    for (m, v) in out.iter_mut().enumerate() {
        let a = rotation + PI / 2.0 + m as f64 * TAU / 3.0;
        *v = [center[0] + r * a.cos(), center[1] + r * a.sin()];
    }
    out
}

/// Nine 2-d Gaussian blobs in three groups of three.
///
/// Group centres form an equilateral triangle with side `super_spacing`;
/// within each group the blob means form an inverted triangle with side
/// `sub_spacing`. Labels 0..8, grouped so that `label / 3` is the group.
pub fn gen_supercluster_grid(
    super_spacing: f64,
    sub_spacing: f64,
    sub_cov: &Array2<f64>,
    n_per_sub: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(sub_spacing > 0.0) || !(super_spacing > sub_spacing) {
        return Err(Error::InvalidParameter(
            "need super_spacing > sub_spacing > 0".into(),
        ));
    }
    if sub_cov.dim() != (2, 2) {
        return Err(Error::InvalidParameter("sub_cov must be 2x2".into()));
    }
    let mut means = Array2::<f64>::zeros((9, 2));
    for (g, c) in triangle([0.0, 0.0], super_spacing, 0.0).into_iter().enumerate() {
        for (s, m) in triangle(c, sub_spacing, PI).into_iter().enumerate() {
            means.row_mut(3 * g + s).assign(&array![m[0], m[1]]);
        }
    }
    let covs = vec![sub_cov.clone(); 9];
    let data = gen_gaussian_mixture(&means, &covs, &[n_per_sub; 9], seed)?;
    Ok(data.with_name("supercluster-grid"))
}

/// Concentric rings. Each ring gets `n_per_ring` points at evenly spaced
/// angles with a random phase, and Gaussian radial noise of `noise_sd`.
pub fn gen_rings(radii: &[f64], n_per_ring: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if radii.is_empty() || n_per_ring == 0 {
        return Err(Error::InvalidParameter("need at least one ring and one point per ring".into()));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidParameter("noise_sd must be nonnegative".into()));
    }
    let mut rng = rng_from_seed(seed);
    let n = radii.len() * n_per_ring;
    let mut points = Array2::<f64>::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for (ring, &radius) in radii.iter().enumerate() {
        let phase = TAU * rng.random::<f64>();
        for i in 0..n_per_ring {
            let theta = phase + TAU * i as f64 / n_per_ring as f64;
            let r = if noise_sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                radius + noise_sd * z
            } else {
                radius
            };
            let row = ring * n_per_ring + i;
            points[[row, 0]] = r * theta.cos();
            points[[row, 1]] = r * theta.sin();
            labels.push(ring as i64);
        }
    }
    Dataset::new(points, Some(labels), "rings")
}

/// Interleaved Archimedean spiral arms `r = t`, `t ∈ [0.9π, 3π]`, arm `a`
/// rotated by `2πa / n_arms`, with isotropic Gaussian noise of `noise_sd`.
pub fn gen_spirals(n_arms: usize, n_per_arm: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n_arms == 0 || n_per_arm == 0 {
        return Err(Error::InvalidParameter("need at least one arm and one point per arm".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidParameter("noise_sd must be nonnegative".into()));
    }
    const T_START: f64 = 0.9 * PI;
    const T_END: f64 = 3.0 * PI;
    let mut rng = rng_from_seed(seed);
    let n = n_arms * n_per_arm;
    let mut points = Array2::<f64>::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for arm in 0..n_arms {
        let offset = TAU * arm as f64 / n_arms as f64;
        for i in 0..n_per_arm {
            let frac = if n_per_arm > 1 { i as f64 / (n_per_arm - 1) as f64 } else { 0.0 };
            let t = T_START + (T_END - T_START) * frac;
            let row = arm * n_per_arm + i;
            let (mut x, mut y) = (t * (t + offset).cos(), t * (t + offset).sin());
            if noise_sd > 0.0 {
                let (zx, zy): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                x += noise_sd * zx;
                y += noise_sd * zy;
            }
            points[[row, 0]] = x;
            points[[row, 1]] = y;
            labels.push(arm as i64);
        }
    }
    Dataset::new(points, Some(labels), "spirals")
}

/// Four isotropic Gaussians with standard deviation `sd` centred on the
/// corners of a square with side `gap`.
pub fn four_gaussians(gap: f64, sd: f64, n_per: usize, seed: u64) -> Result<Dataset> {
    let h = gap / 2.0;
    let means = array![[-h, -h], [-h, h], [h, -h], [h, h]];
    let cov = Array2::eye(2) * (sd * sd);
    let data = gen_gaussian_mixture(&means, &vec![cov; 4], &[n_per; 4], seed)?;
    Ok(data.with_name("four-gaussians"))
}

/// Eight anisotropic Gaussians of unequal size arranged as four well
/// separated pairs: a two-level structure with 4 groups and 8 clusters.
pub fn combo_setting(seed: u64) -> Result<Dataset> {
    const GROUP: f64 = 7.0;
    const OFFSET: f64 = 3.0;
    const SDS: [(f64, f64); 4] = [(0.5, 0.5), (0.7, 0.4), (0.4, 0.6), (0.6, 0.6)];
    const COUNTS: [usize; 4] = [150, 250, 200, 300];
    let groups = [(-GROUP, -GROUP), (-GROUP, GROUP), (GROUP, -GROUP), (GROUP, GROUP)];
    let mut means = Array2::<f64>::zeros((8, 2));
    let mut covs = Vec::with_capacity(8);
    let mut counts = Vec::with_capacity(8);
    for (g, &(cx, cy)) in groups.iter().enumerate() {
        for (h, o) in [-OFFSET, OFFSET].into_iter().enumerate() {
            let c = 2 * g + h;
            // pairs alternate between horizontal and vertical
            let m = if g % 2 == 0 { [cx + o, cy] } else { [cx, cy + o] };
            means.row_mut(c).assign(&array![m[0], m[1]]);
            let (sx, sy) = SDS[(g + h) % 4];
            covs.push(array![[sx * sx, 0.0], [0.0, sy * sy]]);
            counts.push(COUNTS[(g + 2 * h) % 4]);
        }
    }
    Ok(gen_gaussian_mixture(&means, &covs, &counts, seed)?.with_name("combo-setting"))
}

/// `rows × cols` isotropic Gaussians on a square lattice with the given spacing.
pub fn gaussian_grid(rows: usize, cols: usize, spacing: f64, sd: f64, n_per: usize, seed: u64) -> Result<Dataset> {
    let k = rows * cols;
    let means = Array2::from_shape_fn((k, 2), |(c, axis)| {
        let idx = if axis == 0 { c / cols } else { c % cols };
        idx as f64 * spacing
    });
    let cov = Array2::eye(2) * (sd * sd);
    let data = gen_gaussian_mixture(&means, &vec![cov; k], &vec![n_per; k], seed)?;
    Ok(data.with_name("gaussian-grid"))
}
