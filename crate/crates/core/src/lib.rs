//! Estimating the number of clusters in a dataset from the persistence of
//! clustering solutions across resolution scales.
//!
//! For each candidate `k` a clustering is computed (k-means for linearly
//! separable data, spectral clustering for shapes). The critical resolution
//! `β̄_k = 1 / (2 max_j λmax(C̄_j))` is the inverse of twice the largest
//! eigenvalue over the clusters' scatter matrices; the persistence of the
//! `k`-cluster solution is `v(k) = log β̄_k − log β̄_{k−1}` and the estimate
//! is the `k` with the largest persistence.
//!
//! ```
//! use kpersist::dataset::gen_two_disks;
//! use kpersist::persistence::{persistence_profile, Mode};
//!
//! let data = gen_two_disks(1.0, 4.0, 300, 1).unwrap();
//! let profile = persistence_profile(&data, 4, Mode::Linear, 4, 0).unwrap();
//! assert_eq!(profile.k_t, 2);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod annealing;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod persistence;
pub mod rng;

pub use error::{Error, Result};
