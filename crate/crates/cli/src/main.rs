//! `dualfair`: ingest datasets, run the bias/mitigation experiment matrix,
//! and render result tables and figures.
//!
//! Exit codes: 0 on success (a run with failed cells still succeeds), 2 on a
//! configuration or usage error, 3 when an input file is missing.

use clap::{Parser, Subcommand};
use dualfair_core::config::RunConfig;
use dualfair_core::ingest::{
    self, load_oulad, load_student, make_complex_variant, make_student_balanced, read_cache,
    summarize, write_cache, OuladFiles, SUMMARY_HEADER,
};
use dualfair_core::pipeline;
use dualfair_core::plot::{render, PlotFamily};
use dualfair_core::report::{
    aggregates_from_csv, aggregates_to_csv, audit_to_text, records_to_csv, RunMeta,
};
use dualfair_core::{Dataset64, Error};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Datasets `ingest` knows how to build, in summary-table order.
const KNOWN_DATASETS: [&str; 6] = [
    "student",
    "student_balanced",
    "oulad_stem",
    "oulad_social",
    "oulad_stem_complex",
    "oulad_social_complex",
];

const STUDENT_FILE: &str = "student-por.csv";

#[derive(Parser)]
#[command(
    name = "dualfair",
    version,
    about = "Bias injection, mitigation, and dual fair/biased evaluation for tabular classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build dataset caches from raw CSV files and print the summary table.
    Ingest(IngestArgs),
    /// Run the experiment matrix described by a config file.
    Run(RunArgs),
    /// Render one figure family from an aggregates CSV.
    Plot(PlotArgs),
    /// Print the summary table for existing cache files.
    Summarize(SummarizeArgs),
}

#[derive(clap::Args)]
struct IngestArgs {
    /// Directory holding the raw CSV files (student-por.csv and the five
    /// OULAD tables).
    #[arg(long)]
    data: PathBuf,
    /// Directory the caches and summary table are written to.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Datasets to build (comma separated); defaults to every known one.
    #[arg(long, value_delimiter = ',')]
    datasets: Vec<String>,
    /// Seed for the balanced-variant subsample.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the experiment matrix; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(clap::Args)]
struct PlotArgs {
    /// Aggregates CSV produced by `run`.
    #[arg(long)]
    aggregates: PathBuf,
    /// Figure family to render.
    #[arg(long)]
    family: PlotFamily,
    /// Directory the SVG files are written to.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Keep only these datasets (comma separated).
    #[arg(long, value_delimiter = ',')]
    dataset: Vec<String>,
    /// Keep only these bias kinds (comma separated).
    #[arg(long, value_delimiter = ',')]
    kind: Vec<String>,
}

#[derive(clap::Args)]
struct SummarizeArgs {
    /// Cache files to summarize; alternative to --cache-dir.
    caches: Vec<PathBuf>,
    /// Directory scanned for *.bin cache files.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Plot(args) => cmd_plot(&args),
        Command::Summarize(args) => cmd_summarize(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MissingInput(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

/// Builds one named dataset, loading raw files and parent datasets at most
/// once per invocation.
fn build_dataset(
    name: &str,
    args: &IngestArgs,
    memo: &mut BTreeMap<String, Dataset64>,
) -> dualfair_core::Result<Dataset64> {
    if let Some(ds) = memo.get(name) {
        return Ok(ds.clone());
    }
    let ds = match name {
        "student" => load_student(&args.data.join(STUDENT_FILE))?,
        "student_balanced" => {
            let parent = build_dataset("student", args, memo)?;
            make_student_balanced(&parent, args.seed)?
        }
        "oulad_stem" => load_oulad(&OuladFiles::in_dir(&args.data), "FFF")?,
        "oulad_social" => load_oulad(&OuladFiles::in_dir(&args.data), "BBB")?,
        "oulad_stem_complex" => {
            let parent = build_dataset("oulad_stem", args, memo)?;
            make_complex_variant(&parent)?
        }
        "oulad_social_complex" => {
            let parent = build_dataset("oulad_social", args, memo)?;
            make_complex_variant(&parent)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown dataset {other:?}; known: {}",
                KNOWN_DATASETS.join(", ")
            )))
        }
    };
    memo.insert(name.to_string(), ds.clone());
    Ok(ds)
}

fn cmd_ingest(args: &IngestArgs) -> dualfair_core::Result<()> {
    let wanted: Vec<String> = if args.datasets.is_empty() {
        KNOWN_DATASETS.iter().map(|s| s.to_string()).collect()
    } else {
        args.datasets.clone()
    };
    fs::create_dir_all(&args.out)?;
    let mut memo = BTreeMap::new();
    let mut table = vec![SUMMARY_HEADER.to_string()];
    for name in &wanted {
        let ds = build_dataset(name, args, &mut memo)?;
        let cache = args.out.join(format!("{name}.bin"));
        write_cache(&ds, &cache)?;
        let row = ingest::format_summary_row(&summarize(&ds)?);
        log::info!("wrote {} ({} rows)", cache.display(), ds.n());
        table.push(row);
    }
    let mut body = table.join("\n");
    body.push('\n');
    fs::write(args.out.join("summary.csv"), &body)?;
    print!("{body}");
    Ok(())
}

fn cmd_run(args: &RunArgs) -> dualfair_core::Result<()> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let text = fs::read_to_string(&args.config)
        .map_err(|_| Error::MissingInput(args.config.display().to_string()))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    let dataset_names: Vec<String> = cfg.datasets.keys().cloned().collect();
    for name in &dataset_names {
        let cache = cfg.cache_path(name)?;
        let ds = read_cache(&cache)?;
        if ds.name != *name {
            return Err(Error::Config(format!(
                "cache {} holds dataset {:?}, config section says {name:?}",
                cache.display(),
                ds.name
            )));
        }
        let plan = cfg.to_plan(name)?;
        let out = pipeline::run(&ds, &plan)?;
        let records: Vec<_> = out
            .records
            .into_iter()
            .filter(|r| cfg.eval_modes.contains(&r.eval_mode))
            .collect();
        let aggregates = pipeline::aggregate(&records);
        let dir = Path::new(&cfg.out_dir).join(name);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("records.csv"), records_to_csv(&records)?)?;
        fs::write(dir.join("aggregates.csv"), aggregates_to_csv(&aggregates)?)?;
        fs::write(dir.join("run_meta.json"), RunMeta::new(name, &plan).to_json())?;
        fs::write(dir.join("audit.log"), audit_to_text(&out.audit))?;
        let failed = records
            .iter()
            .filter(|r| r.status == pipeline::CellStatus::MethodFailed)
            .count();
        println!(
            "{name}: {} records ({failed} failed) -> {}",
            records.len(),
            dir.display()
        );
    }
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> dualfair_core::Result<()> {
    let text = fs::read_to_string(&args.aggregates)
        .map_err(|_| Error::MissingInput(args.aggregates.display().to_string()))?;
    let mut aggregates = aggregates_from_csv(&text)?;
    if !args.dataset.is_empty() {
        aggregates.retain(|a| args.dataset.contains(&a.dataset));
    }
    if !args.kind.is_empty() {
        aggregates.retain(|a| args.kind.iter().any(|k| k == a.kind.as_str()));
    }
    let files = render(args.family, &aggregates)?;
    fs::create_dir_all(&args.out)?;
    for file in &files {
        fs::write(args.out.join(&file.name), &file.svg)?;
    }
    println!("{} figures -> {}", files.len(), args.out.display());
    Ok(())
}

fn cmd_summarize(args: &SummarizeArgs) -> dualfair_core::Result<()> {
    let mut files = args.caches.clone();
    if let Some(dir) = &args.cache_dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "bin"))
            .collect();
        found.sort();
        files.extend(found);
    }
    if files.is_empty() {
        return Err(Error::Config(
            "no cache files given; pass paths or --cache-dir".into(),
        ));
    }
    println!("{SUMMARY_HEADER}");
    for path in &files {
        let ds = read_cache(path)?;
        println!("{}", ingest::format_summary_row(&summarize(&ds)?));
    }
    Ok(())
}
