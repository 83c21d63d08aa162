use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ndarray::Array2;

use kpersist::dataset::{
    combo_setting, four_gaussians, gaussian_grid, gen_rings, gen_spirals, gen_supercluster_grid, gen_two_disks,
    load_csv, normalize_zscore, BuiltinDataset, Dataset,
};

use crate::args::{GenParams, Shape, Source};

/// Builds the requested synthetic dataset.
pub fn generate(shape: Shape, p: &GenParams, seed: u64) -> Result<Dataset> {
    let data = match shape {
        Shape::TwoDisks => gen_two_disks(p.radius.unwrap_or(1.0), p.gap.unwrap_or(4.0), p.n.unwrap_or(1000), seed)?,
        Shape::Rings => {
            let radii = p.radii.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0]);
            gen_rings(&radii, p.n.unwrap_or(500), p.noise.unwrap_or(0.025), seed)?
        }
        Shape::Spirals => gen_spirals(p.arms.unwrap_or(3), p.n.unwrap_or(500), p.noise.unwrap_or(0.05), seed)?,
        Shape::Supercluster => {
            let sd = p.sd.unwrap_or(1.0);
            gen_supercluster_grid(
                p.super_spacing.unwrap_or(150.0),
                p.sub_spacing.unwrap_or(10.0),
                &(Array2::eye(2) * (sd * sd)),
                p.n.unwrap_or(200),
                seed,
            )?
        }
        Shape::Gaussians4 => four_gaussians(p.gap.unwrap_or(8.0), p.sd.unwrap_or(1.0), p.n.unwrap_or(250), seed)?,
        Shape::Combo => combo_setting(seed)?,
        Shape::Grid => gaussian_grid(
            p.rows.unwrap_or(10),
            p.cols.unwrap_or(10),
            p.spacing.unwrap_or(10.0),
            p.sd.unwrap_or(1.0),
            p.n.unwrap_or(100),
            seed,
        )?,
    };
    Ok(data)
}

/// True when some field of the first line is not a number.
fn first_line_is_header(path: &Path) -> Result<bool> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut line = String::new();
    BufReader::new(file).read_line(&mut line)?;
    Ok(line
        .trim()
        .split(',')
        .any(|f| !f.trim().is_empty() && f.trim().parse::<f64>().is_err()))
}

/// The dataset named by `source`, normalized if requested, and whether
/// normalization was applied.
pub fn load(source: &Source, seed: u64) -> Result<(Dataset, bool)> {
    let (data, default_normalize) = if let Some(path) = &source.input {
        let header = if source.has_header {
            true
        } else if source.no_header {
            false
        } else {
            first_line_is_header(path)?
        };
        (load_csv(path, header, source.label_col)?, true)
    } else if let Some(name) = &source.builtin {
        let set: BuiltinDataset = name.parse()?;
        (set.load(), true)
    } else if let Some(shape) = source.gen {
        // the two-disk geometry is only meaningful in its original units
        (generate(shape, &source.params, seed)?, shape != Shape::TwoDisks)
    } else {
        bail!("no data source given");
    };
    let normalize = if source.normalize {
        true
    } else if source.no_normalize {
        false
    } else {
        default_normalize
    };
    let data = if normalize { normalize_zscore(&data)? } else { data };
    Ok((data, normalize))
}
