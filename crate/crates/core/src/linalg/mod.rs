//! Symmetric matrices, scatter matrices, kernels and eigensolvers.

mod eigen;

pub use eigen::{
    lambda_max, largest_eigenvalue, power_iteration, residual, symmetric_eigen, symmetric_eigenvalues,
    EigenPair, SymmetricEigen, DENSE_ORDER_LIMIT, POWER_MAX_ITER, POWER_REL_TOL,
};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray::parallel::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Relative tolerance for checking a centroid against its members' mean.
pub const CENTROID_TOL: f64 = 1e-9;

fn max_abs(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_symmetric(a: ArrayView2<'_, f64>) -> Result<()> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::InvalidParameter(format!("matrix is {r}x{c}, not square")));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("matrix has order 0".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let mut asymmetry = 0.0f64;
    for i in 0..r {
        for j in i + 1..r {
            asymmetry = asymmetry.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Replaces `a` by `(a + aᵀ) / 2`.
fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// A real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    /// Validates squareness, finiteness and symmetry up to [`SYMMETRY_TOL`].
    pub fn new(a: Array2<f64>) -> Result<Self> {
        check_symmetric(a.view())?;
        Ok(Self(a))
    }

    /// Wraps a matrix that is symmetric up to rounding, averaging it with its
    /// transpose.
    pub(crate) fn symmetrized(mut a: Array2<f64>) -> Self {
        symmetrize(&mut a);
        Self(a)
    }

    pub fn identity(n: usize) -> Self {
        Self(Array2::eye(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(Array2::from_diag(&ArrayView1::from(diag)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.0
    }

    /// `M + tI`.
    pub fn add_identity(&self, t: f64) -> Self {
        let mut a = self.0.clone();
        a.diag_mut().mapv_inplace(|x| x + t);
        Self(a)
    }

    /// `cM`.
    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }
}

/// A symmetric `N × N` similarity (Gram) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix(Array2<f64>);

impl KernelMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        check_symmetric(a.view())?;
        Ok(Self(a))
    }

    /// The linear kernel `XXᵀ`.
    pub fn linear(points: ArrayView2<'_, f64>) -> Self {
        let mut k = points.dot(&points.t());
        symmetrize(&mut k);
        Self(k)
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }
}

/// Gaussian kernel `K_ij = exp(−‖x_i − x_j‖² / (2σ²))`.
pub fn gaussian_kernel(points: ArrayView2<'_, f64>, sigma: f64) -> Result<KernelMatrix> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kernel width must be positive, got {sigma}"
        )));
    }
    let n = points.nrows();
    let denom = 2.0 * sigma * sigma;
    let mut k = Array2::<f64>::zeros((n, n));
    k.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let xi = points.row(i);
            for (j, out) in row.iter_mut().enumerate() {
                let d2: f64 = xi
                    .iter()
                    .zip(points.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                *out = (-d2 / denom).exp();
            }
        });
    Ok(KernelMatrix(k))
}

/// Indices `i` with `assignment[i] == cluster`.
pub fn cluster_members(assignment: &[usize], cluster: usize) -> Vec<usize> {
    assignment
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == cluster)
        .map(|(i, _)| i)
        .collect()
}

/// Unnormalized scatter `Σ_{x ∈ cluster} (x − y)(x − y)ᵀ` about `centroid`.
///
/// The centroid must match the weighted mean of the members to within
/// [`CENTROID_TOL`] relative to the coordinate scale.
pub fn scatter_matrix(
    data: &Dataset,
    assignment: &[usize],
    centroid: ArrayView1<'_, f64>,
    cluster: usize,
) -> Result<SymMatrix> {
    if assignment.len() != data.n_points() {
        return Err(Error::InvalidParameter(format!(
            "assignment has {} entries for {} points",
            assignment.len(),
            data.n_points()
        )));
    }
    if centroid.len() != data.dim() {
        return Err(Error::InvalidParameter(format!(
            "centroid has dimension {}, data has {}",
            centroid.len(),
            data.dim()
        )));
    }
    let members = cluster_members(assignment, cluster);
    if members.is_empty() {
        return Err(Error::EmptyCluster { cluster });
    }
    let sub = data.points().select(Axis(0), &members);
    let w = data.weights().select(Axis(0), &members);
    let total: f64 = w.sum();
    let mean = if total > 0.0 {
        w.dot(&sub) / total
    } else {
        sub.mean_axis(Axis(0)).expect("nonempty")
    };
    let scale = max_abs(sub.view()).max(1.0);
    let offset = (&mean - &centroid).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if offset > CENTROID_TOL * scale {
        return Err(Error::CentroidMismatch { cluster, offset });
    }
    let centred = &sub - &centroid;
    Ok(SymMatrix::symmetrized(centred.t().dot(&centred)))
}

/// Cluster Gram matrix in feature space, double-centred over the members.
///
/// `A_kl = K_kl − r_k − r_l + μ`, where `r` holds the member row means of
/// `K` and `μ` its member block mean. Its nonzero eigenvalues coincide with
/// those of the feature-space scatter of the cluster.
pub fn kernel_scatter_matrix(kernel: &KernelMatrix, assignment: &[usize], cluster: usize) -> Result<SymMatrix> {
    if assignment.len() != kernel.order() {
        return Err(Error::InvalidParameter(format!(
            "assignment has {} entries for a kernel of order {}",
            assignment.len(),
            kernel.order()
        )));
    }
    let members = cluster_members(assignment, cluster);
    if members.is_empty() {
        return Err(Error::EmptyCluster { cluster });
    }
    let k = kernel.as_array();
    let sub = k.select(Axis(0), &members).select(Axis(1), &members);
    let row_means: Array1<f64> = sub.mean_axis(Axis(1)).expect("nonempty");
    let block_mean = row_means.mean().expect("nonempty");
    let m = members.len();
    let a = Array2::from_shape_fn((m, m), |(i, j)| sub[[i, j]] - row_means[i] - row_means[j] + block_mean);
    Ok(SymMatrix::symmetrized(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::dataset::gen_two_disks;
    use crate::rng::rng_from_seed;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from_seed(seed);
        let b = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
        &b + &b.t()
    }

    fn oracle_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
        let n = a.nrows();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        let mut v: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn identity_spectrum() {
        let pair = largest_eigenvalue(&SymMatrix::identity(5)).unwrap();
        assert_relative_eq!(pair.value, 1.0, epsilon = 1e-14);
        assert_relative_eq!(pair.vector.dot(&pair.vector), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_largest_and_vector() {
        let m = SymMatrix::from_diagonal(&[2.0, 1.0]);
        let pair = largest_eigenvalue(&m).unwrap();
        assert_relative_eq!(pair.value, 2.0, epsilon = 1e-14);
        assert_relative_eq!(pair.vector[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(pair.vector[1], 0.0, epsilon = 1e-12);

        let m = SymMatrix::from_diagonal(&[2.0, 0.0]);
        assert_relative_eq!(lambda_max(&m).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn one_by_one() {
        let m = SymMatrix::new(array![[-3.5]]).unwrap();
        assert_eq!(lambda_max(&m).unwrap(), -3.5);
        let eig = symmetric_eigen(&m).unwrap();
        assert_eq!(eig.vectors[[0, 0]], 1.0);
    }

    #[test]
    fn dense_matches_oracle() {
        for (n, seed) in [(2, 1), (3, 2), (8, 3), (31, 4), (64, 5)] {
            let a = random_symmetric(n, seed);
            let m = SymMatrix::new(a.clone()).unwrap();
            let want = oracle_eigenvalues(&a);
            let eig = symmetric_eigen(&m).unwrap();
            let vals = symmetric_eigenvalues(&m).unwrap();
            let scale = want.iter().fold(1.0f64, |s, x| s.max(x.abs()));
            for i in 0..n {
                assert!((eig.values[i] - want[i]).abs() <= 1e-10 * scale, "n={n} i={i}");
                assert!((vals[i] - want[i]).abs() <= 1e-10 * scale, "n={n} i={i}");
                let r = residual(&m, eig.values[i], eig.vectors.column(i));
                assert!(r <= 1e-9 * scale, "n={n} residual {r}");
            }
            let vtv = eig.vectors.t().dot(&eig.vectors);
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv[[i, j]] - e).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rank_deficient_and_degenerate() {
        let mut rng = rng_from_seed(9);
        let b = Array2::from_shape_fn((20, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let a = b.dot(&b.t());
        let m = SymMatrix::new(a.clone()).unwrap();
        let vals = symmetric_eigenvalues(&m).unwrap();
        let want = oracle_eigenvalues(&a);
        for i in 0..20 {
            assert!((vals[i] - want[i]).abs() < 1e-9 * want[19]);
        }
        assert!(vals.iter().take(17).all(|v| v.abs() < 1e-9 * want[19]));

        let m = SymMatrix::new(Array2::from_elem((6, 6), 1.0)).unwrap();
        assert_relative_eq!(lambda_max(&m).unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let mut rng = rng_from_seed(11);
        let b = Array2::from_shape_fn((40, 5), |_| rng.sample::<f64, _>(StandardNormal));
        let m = SymMatrix::new(b.t().dot(&b)).unwrap();
        let dense = lambda_max(&m).unwrap();
        let pi = power_iteration(&m, POWER_MAX_ITER, POWER_REL_TOL).unwrap();
        assert!((pi.value - dense).abs() < 1e-8 * dense);
    }

    #[test]
    fn power_iteration_handles_negative_dominant() {
        let m = SymMatrix::from_diagonal(&[-5.0, 1.0, 0.5]);
        let pi = power_iteration(&m, POWER_MAX_ITER, POWER_REL_TOL).unwrap();
        assert_relative_eq!(pi.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn power_iteration_reports_non_convergence() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.999_999]);
        match power_iteration(&m, 3, 1e-14) {
            Err(Error::EigenNonConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_and_non_square() {
        assert!(matches!(
            SymMatrix::new(array![[1.0, 2.0], [0.0, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(SymMatrix::new(Array2::zeros((2, 3))).is_err());
        assert!(KernelMatrix::new(array![[1.0, f64::NAN], [f64::NAN, 1.0]]).is_err());
    }

    #[test]
    fn shift_and_scale() {
        let a = random_symmetric(10, 21);
        let m = SymMatrix::new(a).unwrap();
        let l = lambda_max(&m).unwrap();
        assert_relative_eq!(lambda_max(&m.add_identity(2.5)).unwrap(), l + 2.5, epsilon = 1e-10);
        assert_relative_eq!(lambda_max(&m.scaled(3.0)).unwrap(), 3.0 * l, max_relative = 1e-12);
    }

    #[test]
    fn uniform_disk_scatter() {
        let data = gen_two_disks(1.0, 10.0, 20_000, 3).unwrap();
        let labels: Vec<usize> = data.labels().unwrap().iter().map(|&l| l as usize).collect();
        let members = cluster_members(&labels, 0);
        let centroid = data.points().select(Axis(0), &members).mean_axis(Axis(0)).unwrap();
        let s = scatter_matrix(&data, &labels, centroid.view(), 0).unwrap();
        let l = lambda_max(&s).unwrap();
        let want = 20_000.0 / 4.0;
        assert!((l - want).abs() < 0.05 * want, "{l} vs {want}");
    }

    #[test]
    fn scatter_errors() {
        let data = Dataset::new(array![[0.0, 0.0], [2.0, 0.0]], None, "t").unwrap();
        let centroid = array![1.0, 0.0];
        assert!(matches!(
            scatter_matrix(&data, &[0, 0], centroid.view(), 1),
            Err(Error::EmptyCluster { cluster: 1 })
        ));
        let off = array![1.5, 0.0];
        assert!(matches!(
            scatter_matrix(&data, &[0, 0], off.view(), 0),
            Err(Error::CentroidMismatch { cluster: 0, .. })
        ));
        let s = scatter_matrix(&data, &[0, 0], centroid.view(), 0).unwrap();
        assert_eq!(s.as_array(), array![[2.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn linear_kernel_scatter_matches_feature_scatter() {
        let mut rng = rng_from_seed(5);
        let pts = Array2::from_shape_fn((30, 3), |_| rng.sample::<f64, _>(StandardNormal));
        let assignment: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let data = Dataset::new(pts.clone(), None, "t").unwrap();
        let k = KernelMatrix::linear(pts.view());
        for c in 0..2 {
            let members = cluster_members(&assignment, c);
            let centroid = pts.select(Axis(0), &members).mean_axis(Axis(0)).unwrap();
            let s = scatter_matrix(&data, &assignment, centroid.view(), c).unwrap();
            let a = kernel_scatter_matrix(&k, &assignment, c).unwrap();
            let sv = symmetric_eigenvalues(&s).unwrap();
            let av = symmetric_eigenvalues(&a).unwrap();
            let m = av.len();
            for i in 0..3 {
                assert_relative_eq!(sv[2 - i], av[m - 1 - i], max_relative = 1e-10);
            }
            assert!(av.iter().take(m - 3).all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn gaussian_kernel_properties() {
        let mut rng = rng_from_seed(8);
        let pts = Array2::from_shape_fn((25, 2), |_| rng.sample::<f64, _>(StandardNormal));
        let k = gaussian_kernel(pts.view(), 0.7).unwrap();
        let a = k.as_array();
        for i in 0..25 {
            assert_eq!(a[[i, i]], 1.0);
            for j in 0..25 {
                assert_eq!(a[[i, j]], a[[j, i]]);
                assert!(a[[i, j]] > 0.0 && a[[i, j]] <= 1.0);
            }
        }
        let d2: f64 = (0..2).map(|c| (pts[[0, c]] - pts[[1, c]]).powi(2)).sum();
        assert_relative_eq!(a[[0, 1]], (-d2 / (2.0 * 0.49)).exp(), max_relative = 1e-14);

        let assignment = vec![0usize; 25];
        let s = kernel_scatter_matrix(&k, &assignment, 0).unwrap();
        let vals = symmetric_eigenvalues(&s).unwrap();
        assert!(vals[0] > -1e-10, "not PSD: {}", vals[0]);

        assert!(gaussian_kernel(pts.view(), 0.0).is_err());
        assert!(gaussian_kernel(pts.view(), -1.0).is_err());
    }
}
