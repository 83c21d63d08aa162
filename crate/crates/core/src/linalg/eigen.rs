//! Symmetric eigensolvers.
//!
//! The dense path is Householder tridiagonalization followed by the
//! implicit QL algorithm (the EISPACK `tred2`/`tql2` pair). The matrix is
//! kept in a row-major buffer holding the transpose of the working matrix so
//! that every inner loop walks contiguous memory.

use ndarray::{Array1, Array2, ArrayView1};

use super::SymMatrix;
use crate::error::{Error, Result};

/// Order above which [`largest_eigenvalue`] switches from the dense solver
/// to power iteration.
pub const DENSE_ORDER_LIMIT: usize = 2048;

/// Iteration cap for power iteration.
pub const POWER_MAX_ITER: usize = 10_000;

/// Relative tolerance for power iteration.
pub const POWER_REL_TOL: f64 = 1e-10;

/// Full spectrum of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Array1<f64>,
    /// Unit eigenvectors as columns, matching `values`.
    pub vectors: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Array1<f64>,
}

/// Full eigendecomposition, eigenvalues ascending.
pub fn symmetric_eigen(m: &SymMatrix) -> Result<SymmetricEigen> {
    let n = m.order();
    let (values, rows) = tridiagonal_ql(m, true)?;
    let rows = rows.expect("vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = Array1::from_iter(order.iter().map(|&i| values[i]));
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| rows[order[c] * n + r]);
    Ok(SymmetricEigen {
        values: sorted,
        vectors,
    })
}

/// Eigenvalues only, ascending. Cheaper than [`symmetric_eigen`].
pub fn symmetric_eigenvalues(m: &SymMatrix) -> Result<Array1<f64>> {
    let (mut values, _) = tridiagonal_ql(m, false)?;
    values.sort_by(f64::total_cmp);
    Ok(Array1::from(values))
}

/// Largest (algebraic) eigenvalue with a unit eigenvector.
///
/// Dense up to [`DENSE_ORDER_LIMIT`], power iteration beyond it.
pub fn largest_eigenvalue(m: &SymMatrix) -> Result<EigenPair> {
    if m.order() <= DENSE_ORDER_LIMIT {
        let eig = symmetric_eigen(m)?;
        let last = m.order() - 1;
        Ok(EigenPair {
            value: eig.values[last],
            vector: eig.vectors.column(last).to_owned(),
        })
    } else {
        power_iteration(m, POWER_MAX_ITER, POWER_REL_TOL)
    }
}

/// Largest eigenvalue without the eigenvector.
pub fn lambda_max(m: &SymMatrix) -> Result<f64> {
    if m.order() <= DENSE_ORDER_LIMIT {
        let values = symmetric_eigenvalues(m)?;
        Ok(values[values.len() - 1])
    } else {
        Ok(power_iteration(m, POWER_MAX_ITER, POWER_REL_TOL)?.value)
    }
}

/// Residual `‖Mv − λv‖`.
pub fn residual(m: &SymMatrix, value: f64, vector: ArrayView1<'_, f64>) -> f64 {
    let mv = m.as_array().dot(&vector);
    (&mv - &(&vector * value)).mapv(|x| x * x).sum().sqrt()
}

/// Power iteration with Rayleigh-quotient estimates.
///
/// Stops when `‖Mv − λv‖ ≤ rel_tol · max(1, ‖M‖_F)`. If the dominant
/// eigenvalue in magnitude is negative, the run is repeated on `M − λI` so
/// the result is the largest algebraic eigenvalue.
pub fn power_iteration(m: &SymMatrix, max_iter: usize, rel_tol: f64) -> Result<EigenPair> {
    let first = power_iteration_shifted(m, 0.0, max_iter, rel_tol)?;
    if first.value >= 0.0 {
        return Ok(first);
    }
    power_iteration_shifted(m, first.value, max_iter, rel_tol)
}

fn power_iteration_shifted(m: &SymMatrix, shift: f64, max_iter: usize, rel_tol: f64) -> Result<EigenPair> {
    let a = m.as_array();
    let n = m.order();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = rel_tol * scale;

    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut best = f64::INFINITY;
    let mut perturbed = false;
    for _ in 0..max_iter {
        let mut w = a.dot(&v);
        if shift != 0.0 {
            w.scaled_add(-shift, &v);
        }
        let lambda = v.dot(&w);
        let res = (&w - &(&v * lambda)).mapv(|x| x * x).sum().sqrt();
        best = best.min(res);
        if res <= tol {
            return Ok(EigenPair {
                value: lambda + shift,
                vector: v,
            });
        }
        let norm = w.dot(&w).sqrt();
        if norm <= f64::MIN_POSITIVE || (lambda.abs() <= tol && !perturbed) {
            // start vector orthogonal to the dominant eigenspace
            perturbed = true;
            for (i, x) in v.iter_mut().enumerate() {
                *x += ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5;
            }
            let nv = v.dot(&v).sqrt();
            v.mapv_inplace(|x| x / nv);
            continue;
        }
        v = w / norm;
    }
    Err(Error::EigenNonConvergence {
        iterations: max_iter,
        residual: best,
    })
}

/// Householder tridiagonalization + implicit QL.
///
/// Returns unsorted eigenvalues and, when requested, the eigenvectors as
/// rows of a row-major `n × n` buffer.
fn tridiagonal_ql(m: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = m.order();
    // w[j * n + k] holds V[k][j] of the textbook formulation.
    let mut w: Vec<f64> = m.as_array().t().iter().copied().collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok((vec![w[0]], want_vectors.then(|| vec![1.0])));
    }
    tred2(&mut w, &mut d, &mut e, n, want_vectors);
    tql2(&mut w, &mut d, &mut e, n, want_vectors)?;
    Ok((d, want_vectors.then_some(w)))
}

fn tred2(w: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize, want_vectors: bool) {
    for j in 0..n {
        d[j] = w[j * n + (n - 1)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = w[j * n + (i - 1)];
                w[j * n + i] = 0.0;
                w[i * n + j] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);

            for j in 0..i {
                f = d[j];
                w[i * n + j] = f;
                let row = &w[j * n..j * n + i];
                g = e[j] + row[j] * f;
                for k in j + 1..i {
                    g += row[k] * d[k];
                    e[k] += row[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j], e[j]);
                let row = &mut w[j * n..j * n + i];
                for k in j..i {
                    row[k] -= f * e[k] + g * d[k];
                }
                d[j] = row[i - 1];
                w[j * n + i] = 0.0;
            }
        }
        d[i] = h;
    }

    if !want_vectors {
        for j in 0..n {
            d[j] = w[j * n + j];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        w[i * n + (n - 1)] = w[i * n + i];
        w[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            let (head, tail) = w.split_at_mut((i + 1) * n);
            let next = &tail[..n];
            for k in 0..=i {
                d[k] = next[k] / h;
            }
            for j in 0..=i {
                let row = &mut head[j * n..j * n + n];
                let g: f64 = (0..=i).map(|k| next[k] * row[k]).sum();
                for k in 0..=i {
                    row[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            w[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = w[j * n + (n - 1)];
        w[j * n + (n - 1)] = 0.0;
    }
    w[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(w: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize, want_vectors: bool) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let max_sweeps = 30 * n.max(1);
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::EigenNonConvergence {
                        iterations: sweeps,
                        residual: e[l].abs(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        let (lo, hi) = w.split_at_mut((i + 1) * n);
                        let vi = &mut lo[i * n..i * n + n];
                        let vi1 = &mut hi[..n];
                        for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
