mod args;
mod source;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;

use kpersist::annealing::{anneal, first_critical_beta, geometric_schedule};
use kpersist::clustering::kmeans;
use kpersist::dataset::{write_csv, Dataset};
use kpersist::persistence::{critical_beta, persistence_profile, Mode, PersistenceProfile, ProfileRow};

use args::{Cli, Command, Format, GenCommand, RunArgs, TraceArgs};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Profile(args) => cmd_profile(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::DaTrace(args) => cmd_da_trace(&args),
    }
}

/// Opens `path` for writing, or stdout when it is `None`.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct DatasetInfo<'a> {
    name: &'a str,
    n_points: usize,
    dim: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunArgs,
    normalized: bool,
    dataset: DatasetInfo<'a>,
    mode: Mode,
    k_t: usize,
    profile: &'a [ProfileRow],
}

fn compute_profile(args: &RunArgs) -> Result<(Dataset, bool, PersistenceProfile)> {
    let (data, normalized) = source::load(&args.source, args.seed)?;
    let mode = match args.kernel_sigma {
        Some(sigma) => Mode::Kernel { sigma },
        None => Mode::Linear,
    };
    let profile = persistence_profile(&data, args.k_max, mode, args.restarts, args.seed)?;
    Ok((data, normalized, profile))
}

fn write_profile(
    command: &'static str,
    args: &RunArgs,
    data: &Dataset,
    normalized: bool,
    profile: &PersistenceProfile,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    match format {
        Format::Csv => profile.write_csv(&mut *out)?,
        Format::Json => {
            let report = Report {
                tool: "kpersist",
                version: env!("CARGO_PKG_VERSION"),
                command,
                config: args,
                normalized,
                dataset: DatasetInfo {
                    name: data.name(),
                    n_points: data.n_points(),
                    dim: data.dim(),
                },
                mode: profile.mode,
                k_t: profile.k_t,
                profile: &profile.rows,
            };
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_estimate(args: &RunArgs) -> Result<()> {
    let (data, normalized, profile) = compute_profile(args)?;
    println!("k_t = {}", profile.k_t);
    if let Some(path) = &args.output {
        let mut out = sink(Some(path))?;
        let format = args.format.unwrap_or(Format::Json);
        write_profile("estimate", args, &data, normalized, &profile, format, &mut out)?;
    }
    Ok(())
}

fn cmd_profile(args: &RunArgs) -> Result<()> {
    let (data, normalized, profile) = compute_profile(args)?;
    let mut out = sink(args.output.as_deref())?;
    let format = args.format.unwrap_or(Format::Csv);
    write_profile("profile", args, &data, normalized, &profile, format, &mut out)?;
    if args.output.is_some() {
        println!("k_t = {}", profile.k_t);
    }
    Ok(())
}

fn cmd_gen(args: &GenCommand) -> Result<()> {
    let data = source::generate(args.shape, &args.params, args.seed)?;
    let mut out = sink(args.output.as_deref())?;
    write_csv(&data, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_da_trace(args: &TraceArgs) -> Result<()> {
    let (data, normalized) = source::load(&args.source, args.seed)?;
    let beta_c = first_critical_beta(&data)?;
    // the hard scatter is an unnormalized sum, so N·β̄_1 is on the same scale
    let whole = kmeans(&data, 1, 1, args.seed)?;
    let hard = critical_beta(&data, &whole)?.beta_bar * data.n_points() as f64;
    let schedule = geometric_schedule(args.beta_start * beta_c, args.beta_end * beta_c, args.ratio)?;
    let trace = anneal(&data, &schedule, args.perturbation * data.diameter_bound(), args.seed)?;

    let mut out = sink(args.output.as_deref())?;
    trace.write_csv(&mut out)?;
    out.flush()?;

    let mut summary = vec![
        format!("dataset: {} (normalized: {normalized})", data.describe()),
        format!("predicted first critical beta: {beta_c:.6e}"),
        format!("N * beta_bar_1 from the k = 1 scatter: {hard:.6e}"),
    ];
    match trace.first_split() {
        Some(b) => summary.push(format!(
            "first split beta: {b:.6e} ({:+.2}% from prediction)",
            100.0 * (b - beta_c) / beta_c
        )),
        None => summary.push("first split beta: none within the schedule".into()),
    }
    summary.push(format!(
        "split events: {}; distinct centroids at the end: {}",
        trace.split_events.len(),
        trace.final_state.centroids.nrows()
    ));
    if trace.steps.iter().any(|s| !s.converged) {
        summary.push("warning: some fixed points hit the iteration cap".into());
    }
    for line in summary {
        if args.output.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(())
}
