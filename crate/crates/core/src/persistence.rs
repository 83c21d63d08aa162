//! Critical temperatures of hard clustering solutions and the persistence
//! profile used to pick the number of clusters.
//!
//! For a solution with `k` clusters, `β̄_k = 1 / (2 max_j λ_max(C_j))` where
//! `C_j` is the unnormalized scatter of cluster `j`. The persistence of `k`
//! is `v(k) = ln β̄_k − ln β̄_{k−1}` and the estimate `k_t` is its argmax.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, ClusteringSolution, SpectralEmbedding};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{cluster_members, gaussian_kernel, kernel_scatter_matrix, lambda_max, scatter_matrix, KernelMatrix};

/// Geometry in which clusters are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Mode {
    /// k-means in input space, scatter of the points.
    Linear,
    /// Spectral clustering with a Gaussian kernel of width `sigma`, scatter
    /// in feature space.
    Kernel { sigma: f64 },
}

/// `β̄` of one solution and the cluster that sets it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalBeta {
    pub beta_bar: f64,
    pub cluster: usize,
    pub cluster_size: usize,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub k: usize,
    pub beta_bar: f64,
    pub log_beta_bar: f64,
    /// `None` for the first `k` of the scanned range.
    pub v: Option<f64>,
    pub critical_cluster_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceProfile {
    pub mode: Mode,
    pub k_t: usize,
    pub rows: Vec<ProfileRow>,
}

impl PersistenceProfile {
    /// Builds the profile from `β̄` values for consecutive `k` starting at
    /// `k_first`.
    pub fn from_critical(mode: Mode, k_first: usize, critical: &[CriticalBeta]) -> Result<Self> {
        if critical.len() < 2 {
            return Err(Error::InvalidParameter(
                "a profile needs at least two consecutive values of k".into(),
            ));
        }
        let mut rows: Vec<ProfileRow> = Vec::with_capacity(critical.len());
        for (i, c) in critical.iter().enumerate() {
            let k = k_first + i;
            let log_beta_bar = c.beta_bar.ln();
            let v = rows.last().map(|prev| log_beta_bar - prev.log_beta_bar);
            if let Some(v) = v.filter(|v| *v < 0.0) {
                log::debug!("negative persistence v({k}) = {v:.4}");
            }
            rows.push(ProfileRow {
                k,
                beta_bar: c.beta_bar,
                log_beta_bar,
                v,
                critical_cluster_size: c.cluster_size,
            });
        }
        let k_t = argmax_v(&rows);
        Ok(Self { mode, k_t, rows })
    }

    pub fn ks(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.k)
    }

    fn row(&self, k: usize) -> Option<&ProfileRow> {
        let first = self.rows.first()?.k;
        self.rows.get(k.checked_sub(first)?)
    }

    pub fn beta_bar(&self, k: usize) -> Option<f64> {
        self.row(k).map(|r| r.beta_bar)
    }

    pub fn v(&self, k: usize) -> Option<f64> {
        self.row(k).and_then(|r| r.v)
    }

    /// `k` values ordered by decreasing `v`, ties to the smaller `k`.
    pub fn ranked(&self) -> Vec<usize> {
        let mut rows: Vec<&ProfileRow> = self.rows.iter().filter(|r| r.v.is_some()).collect();
        rows.sort_by(|a, b| b.v.unwrap().total_cmp(&a.v.unwrap()).then(a.k.cmp(&b.k)));
        rows.into_iter().map(|r| r.k).collect()
    }

    /// CSV with columns `k,beta_bar,log_beta_bar,v`; `v` is blank in the
    /// first row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "beta_bar", "log_beta_bar", "v"])?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.beta_bar.to_string(),
                r.log_beta_bar.to_string(),
                r.v.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn argmax_v(rows: &[ProfileRow]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for r in rows {
        if let Some(v) = r.v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((r.k, v));
            }
        }
    }
    best.expect("at least one v").0
}

fn pick_critical(per_cluster: impl Iterator<Item = Result<(usize, usize, f64)>>) -> Result<CriticalBeta> {
    let mut best: Option<(usize, usize, f64)> = None;
    for item in per_cluster {
        let (cluster, size, lambda) = item?;
        if best.is_none_or(|(_, _, l)| lambda > l) {
            best = Some((cluster, size, lambda));
        }
    }
    match best {
        Some((cluster, cluster_size, lambda_max)) if lambda_max > 0.0 => Ok(CriticalBeta {
            beta_bar: 1.0 / (2.0 * lambda_max),
            cluster,
            cluster_size,
            lambda_max,
        }),
        _ => Err(Error::UnboundedResolution),
    }
}

/// `β̄` of a solution in input space. Singleton clusters are skipped.
pub fn critical_beta(data: &Dataset, solution: &ClusteringSolution) -> Result<CriticalBeta> {
    let sizes = solution.sizes();
    pick_critical((0..solution.k).filter(|&j| sizes[j] >= 2).map(|j| {
        let s = scatter_matrix(data, &solution.assignment, solution.centroids.row(j), j)?;
        Ok((j, sizes[j], lambda_max(&s)?))
    }))
}

/// `β̄` of a partition measured in the feature space of `kernel`.
/// Singleton clusters are skipped.
pub fn critical_beta_kernel(kernel: &KernelMatrix, assignment: &[usize], k: usize) -> Result<CriticalBeta> {
    let sizes: Vec<usize> = (0..k).map(|j| cluster_members(assignment, j).len()).collect();
    if let Some(j) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::EmptyCluster { cluster: j });
    }
    pick_critical((0..k).filter(|&j| sizes[j] >= 2).map(|j| {
        let a = kernel_scatter_matrix(kernel, assignment, j)?;
        Ok((j, sizes[j], lambda_max(&a)?))
    }))
}

fn check_range(n: usize, k_first: usize, k_last: usize, restarts: usize) -> Result<()> {
    if k_first == 0 {
        return Err(Error::InvalidParameter("k starts at 1".into()));
    }
    if k_last <= k_first {
        return Err(Error::InvalidParameter(format!(
            "k range {k_first}..={k_last} needs at least two values"
        )));
    }
    if k_last > n {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_last} exceeds the number of points {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    Ok(())
}

/// Persistence profile for `k = 1..=k_max`.
pub fn persistence_profile(
    data: &Dataset,
    k_max: usize,
    mode: Mode,
    restarts: usize,
    seed: u64,
) -> Result<PersistenceProfile> {
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!("k_max must be at least 2, got {k_max}")));
    }
    persistence_profile_range(data, 1, k_max, mode, restarts, seed)
}

/// Persistence profile over `k = k_first..=k_last`; `v` is reported from
/// `k_first + 1`.
pub fn persistence_profile_range(
    data: &Dataset,
    k_first: usize,
    k_last: usize,
    mode: Mode,
    restarts: usize,
    seed: u64,
) -> Result<PersistenceProfile> {
    check_range(data.n_points(), k_first, k_last, restarts)?;
    let ks: Vec<usize> = (k_first..=k_last).collect();
    let critical: Vec<CriticalBeta> = match mode {
        Mode::Linear => ks
            .par_iter()
            .map(|&k| {
                kmeans(data, k, restarts, seed)
                    .and_then(|sol| critical_beta(data, &sol))
                    .map_err(|e| e.at_k(k))
            })
            .collect::<Result<_>>()?,
        Mode::Kernel { sigma } => {
            let kernel = gaussian_kernel(data.points(), sigma)?;
            let embedding = SpectralEmbedding::new(&kernel, k_last)?;
            ks.par_iter()
                .map(|&k| {
                    let assignment = if k == 1 {
                        vec![0; data.n_points()]
                    } else {
                        embedding.cluster(k, restarts, seed)?.assignment
                    };
                    critical_beta_kernel(&kernel, &assignment, k)
                })
                .enumerate()
                .map(|(i, r)| r.map_err(|e| e.at_k(ks[i])))
                .collect::<Result<_>>()?
        }
    };
    PersistenceProfile::from_critical(mode, k_first, &critical)
}

/// Profile of given input-space solutions for consecutive `k`.
pub fn profile_from_solutions(data: &Dataset, solutions: &[ClusteringSolution]) -> Result<PersistenceProfile> {
    let k_first = solutions
        .first()
        .ok_or_else(|| Error::InvalidParameter("no solutions".into()))?
        .k;
    let critical = solutions
        .iter()
        .enumerate()
        .map(|(i, sol)| {
            if sol.k != k_first + i {
                return Err(Error::InvalidParameter("solutions must have consecutive k".into()));
            }
            critical_beta(data, sol).map_err(|e| e.at_k(sol.k))
        })
        .collect::<Result<Vec<_>>>()?;
    PersistenceProfile::from_critical(Mode::Linear, k_first, &critical)
}

/// The estimated number of clusters, `argmax_k v(k)` over `2..=k_max`.
pub fn estimate_k(data: &Dataset, k_max: usize, mode: Mode, restarts: usize, seed: u64) -> Result<usize> {
    Ok(persistence_profile(data, k_max, mode, restarts, seed)?.k_t)
}
