//! Datasets: the point matrix `X`, per-point weights `p_i`, optional labels.

mod builtin;
mod csv_io;
mod generators;

pub use builtin::BuiltinDataset;
pub use csv_io::{load_csv, read_csv, write_csv};
pub use generators::{
    combo_setting, four_gaussians, gaussian_grid, gen_gaussian_mixture, gen_rings, gen_spirals,
    gen_supercluster_grid, gen_two_disks,
};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Tolerance on `Σ p_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// `N` points in `R^d` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
    weights: Array1<f64>,
    labels: Option<Vec<i64>>,
    name: String,
}

impl Dataset {
    /// Builds a dataset with uniform weights `1/N`.
    pub fn new(points: Array2<f64>, labels: Option<Vec<i64>>, name: impl Into<String>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some((idx, _)) = points.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                idx / d + 1,
                idx % d + 1
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {} points",
                    labels.len(),
                    n
                )));
            }
        }
        Ok(Self {
            weights: Array1::from_elem(n, 1.0 / n as f64),
            points,
            labels,
            name: name.into(),
        })
    }

    /// Replaces the weights. They must be nonnegative and sum to one.
    pub fn with_weights(mut self, weights: Array1<f64>) -> Result<Self> {
        if weights.len() != self.n_points() {
            return Err(Error::InvalidDataset(format!(
                "{} weights for {} points",
                weights.len(),
                self.n_points()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDataset("weights must be finite and nonnegative".into()));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDataset(format!("weights sum to {total}, not 1")));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Same labels, weights and name over a new point matrix of the same shape.
    pub fn with_points(&self, points: Array2<f64>) -> Result<Self> {
        if points.dim() != self.points.dim() {
            return Err(Error::InvalidDataset(format!(
                "shape {:?} does not match {:?}",
                points.dim(),
                self.points.dim()
            )));
        }
        let mut out = Dataset::new(points, self.labels.clone(), self.name.clone())?;
        out.weights = self.weights.clone();
        Ok(out)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_points(&self) -> usize {
        self.points.nrows()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Weighted mean `Σ p_i x_i`.
    pub fn weighted_mean(&self) -> Array1<f64> {
        self.points.t().dot(&self.weights)
    }

    /// Largest distance from the weighted mean, doubled. A cheap upper bound
    /// on the diameter used to scale tolerances.
    pub fn diameter_bound(&self) -> f64 {
        let mean = self.weighted_mean();
        let radius = self
            .points
            .axis_iter(Axis(0))
            .map(|row| (&row - &mean).mapv(|v| v * v).sum().sqrt())
            .fold(0.0, f64::max);
        2.0 * radius
    }

    /// Short human-readable summary.
    pub fn describe(&self) -> String {
        let classes = self.labels.as_ref().map(|l| {
            let mut u = l.clone();
            u.sort_unstable();
            u.dedup();
            u.len()
        });
        match classes {
            Some(c) => format!("{}: N={}, d={}, {} labelled classes", self.name, self.n_points(), self.dim(), c),
            None => format!("{}: N={}, d={}, unlabelled", self.name, self.n_points(), self.dim()),
        }
    }
}

/// Z-scores every column: mean zero, population standard deviation one.
///
/// Constant columns become all-zero columns. Labels, weights and name are kept.
pub fn normalize_zscore(data: &Dataset) -> Result<Dataset> {
    let points = zscore_columns(data.points())?;
    data.with_points(points)
}

/// Column-wise z-scoring of a raw matrix (population standard deviation).
pub fn zscore_columns(points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = points.nrows();
    if n == 0 || points.ncols() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut out = points.to_owned();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let sd = (col.mapv(|v| v * v).sum() / n as f64).sqrt();
        if sd <= 1e-12 * mean.abs().max(1.0) {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| v / sd);
        }
    }
    Ok(out)
}
