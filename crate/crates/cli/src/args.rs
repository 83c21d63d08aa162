use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kpersist::dataset::BuiltinDataset;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "kpersist", version, about = "Estimate the number of clusters from the persistence of clustering solutions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the estimated number of clusters k_t.
    Estimate(RunArgs),
    /// Write the persistence profile (k, beta_bar, log_beta_bar, v).
    Profile(RunArgs),
    /// Generate a synthetic dataset as CSV.
    Gen(GenCommand),
    /// Trace deterministic annealing over a geometric beta schedule.
    DaTrace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    TwoDisks,
    Rings,
    Spirals,
    Supercluster,
    Gaussians4,
    Combo,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Generator parameters; unset values take per-shape defaults.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GenParams {
    /// Disk radius (two-disks).
    #[arg(long = "R", value_name = "R")]
    pub radius: Option<f64>,
    /// Distance between disk centres (two-disks) or between neighbouring
    /// means (gaussians4).
    #[arg(long)]
    pub gap: Option<f64>,
    /// Points per component (disk, ring, arm, blob).
    #[arg(long)]
    pub n: Option<usize>,
    /// Ring radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Number of spiral arms.
    #[arg(long)]
    pub arms: Option<usize>,
    /// Noise standard deviation (rings, spirals).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Component standard deviation (supercluster, gaussians4, grid).
    #[arg(long)]
    pub sd: Option<f64>,
    /// Side of the outer triangle (supercluster).
    #[arg(long)]
    pub super_spacing: Option<f64>,
    /// Side of the inner triangles (supercluster).
    #[arg(long)]
    pub sub_spacing: Option<f64>,
    /// Grid rows (grid).
    #[arg(long)]
    pub rows: Option<usize>,
    /// Grid columns (grid).
    #[arg(long)]
    pub cols: Option<usize>,
    /// Distance between grid neighbours (grid).
    #[arg(long)]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(id = "source", required = true, multiple = false, args = ["input", "builtin", "gen"])]
pub struct Source {
    /// CSV file of points, one row per point.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Treat the first CSV row as a header (detected automatically if
    /// neither flag is given).
    #[arg(long, conflicts_with = "no_header", conflicts_with_all = ["builtin", "gen"])]
    pub has_header: bool,
    /// Treat the first CSV row as data.
    #[arg(long, conflicts_with_all = ["builtin", "gen"])]
    pub no_header: bool,
    /// Zero-based column holding class labels; excluded from the features.
    #[arg(long, conflicts_with_all = ["builtin", "gen"])]
    pub label_col: Option<usize>,
    /// Embedded dataset: iris, wine, wisconsin, thyroid, glass.
    #[arg(long, value_parser = parse_builtin)]
    pub builtin: Option<String>,
    /// Synthetic dataset generated on the fly.
    #[arg(long, value_enum)]
    pub gen: Option<Shape>,
    #[command(flatten)]
    pub params: GenParams,
    /// Z-score every feature (default, except for two-disks).
    #[arg(long, conflicts_with = "no_normalize")]
    pub normalize: bool,
    /// Use the features as given.
    #[arg(long)]
    pub no_normalize: bool,
}

fn parse_builtin(s: &str) -> Result<String, String> {
    s.parse::<BuiltinDataset>().map_err(|e| e.to_string())?;
    Ok(s.to_ascii_lowercase())
}

fn parse_k_max(s: &str) -> Result<usize, String> {
    let k: usize = s.parse().map_err(|_| format!("{s:?} is not a whole number"))?;
    if k < 2 {
        return Err("k_max must be at least 2".into());
    }
    Ok(k)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !(x > 0.0 && x.is_finite()) {
        return Err("must be a positive number".into());
    }
    Ok(x)
}

fn parse_restarts(s: &str) -> Result<usize, String> {
    let r: usize = s.parse().map_err(|_| format!("{s:?} is not a whole number"))?;
    if r == 0 {
        return Err("restarts must be at least 1".into());
    }
    Ok(r)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    /// Largest number of clusters to consider.
    #[arg(long, default_value = "10", value_parser = parse_k_max)]
    pub k_max: usize,
    /// Use spectral clustering with a Gaussian kernel of this width.
    #[arg(long, value_parser = parse_positive)]
    pub kernel_sigma: Option<f64>,
    /// k-means restarts per k.
    #[arg(long, default_value = "10", value_parser = parse_restarts)]
    pub restarts: usize,
    /// Seed for data generation, k-means and annealing.
    #[arg(long, default_value = "0")]
    pub seed: u64,
    /// Where to write the profile; stdout when omitted (profile only).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Profile format; defaults to json for estimate and csv for profile.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenCommand {
    #[arg(value_enum)]
    pub shape: Shape,
    #[command(flatten)]
    pub params: GenParams,
    /// Seed for data generation, k-means and annealing.
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceArgs {
    #[command(flatten)]
    pub source: Source,
    /// First beta, as a fraction of the predicted first critical beta.
    #[arg(long, default_value = "0.5", value_parser = parse_positive)]
    pub beta_start: f64,
    /// Last beta, as a multiple of the predicted first critical beta.
    #[arg(long, default_value = "4.0", value_parser = parse_positive)]
    pub beta_end: f64,
    /// Ratio between consecutive betas.
    #[arg(long, default_value = "1.05", value_parser = parse_positive)]
    pub ratio: f64,
    /// Split perturbation relative to the data diameter.
    #[arg(long, default_value = "1e-6", value_parser = parse_positive)]
    pub perturbation: f64,
    /// Seed for data generation, k-means and annealing.
    #[arg(long, default_value = "0")]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
