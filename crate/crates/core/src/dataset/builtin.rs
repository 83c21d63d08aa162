//! Small standard datasets embedded as CSV.
//!
//! Iris, Wine, Wisconsin (original breast cancer, rows with missing values
//! removed), Glass and Thyroid (new-thyroid, features only) from the UCI
//! repository. Labels are the published class labels where available.

use std::fmt;
use std::str::FromStr;

use super::{read_csv, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinDataset {
    Iris,
    Wine,
    Wisconsin,
    Thyroid,
    Glass,
}

impl BuiltinDataset {
    pub const ALL: [BuiltinDataset; 5] = [
        BuiltinDataset::Iris,
        BuiltinDataset::Wine,
        BuiltinDataset::Wisconsin,
        BuiltinDataset::Thyroid,
        BuiltinDataset::Glass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinDataset::Iris => "iris",
            BuiltinDataset::Wine => "wine",
            BuiltinDataset::Wisconsin => "wisconsin",
            BuiltinDataset::Thyroid => "thyroid",
            BuiltinDataset::Glass => "glass",
        }
    }

    fn source(self) -> (&'static str, bool) {
        match self {
            BuiltinDataset::Iris => (include_str!("../../data/iris.csv"), true),
            BuiltinDataset::Wine => (include_str!("../../data/wine.csv"), true),
            BuiltinDataset::Wisconsin => (include_str!("../../data/wisconsin.csv"), true),
            BuiltinDataset::Thyroid => (include_str!("../../data/thyroid.csv"), false),
            BuiltinDataset::Glass => (include_str!("../../data/glass.csv"), true),
        }
    }

    pub fn load(self) -> Dataset {
        let (text, labelled) = self.source();
        let width = text.lines().next().map_or(0, |h| h.split(',').count());
        let label_col = labelled.then(|| width - 1);
        read_csv(text.as_bytes(), true, label_col, self.name()).expect("embedded dataset is well formed")
    }
}

impl fmt::Display for BuiltinDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinDataset::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown builtin dataset {s:?}")))
    }
}
