//! `othpo`: run, score, rank and compare ordered transfer HPO experiments.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use othpo::benchmarks::{BenchmarkSpec, Direction, NewsVendorParams};
use othpo::harness::{
    downstream_comparison, mean_rankings, read_jsonl, run_experiment, score_table, write_csv,
    write_jsonl, ExperimentPlan, Traces,
};
use othpo::schedulers::Method;

#[derive(Parser)]
#[command(name = "othpo", version, about = "Ordered transfer hyperparameter optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan and write JSONL records.
    Run {
        /// TOML experiment plan.
        config: PathBuf,
        /// Inclusive range `a..b` or a comma list; overrides the plan.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated method names; overrides the plan.
        #[arg(long)]
        methods: Option<String>,
        /// Evaluations per task; overrides the plan.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
        /// Concurrent (method, seed) runs; defaults to all hardware threads.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Overwrite an existing output file.
        #[arg(long)]
        force: bool,
    },
    /// Per-task normalized scores (mean and 2·SE) as CSV.
    Score {
        results: PathBuf,
        /// Iterations to report; default 1, 10 and 25 (those within budget).
        #[arg(long = "iteration", value_delimiter = ',')]
        iterations: Vec<usize>,
        /// Restrict to these tasks.
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Mean rank over tasks (and 2·SE) per method and iteration as CSV.
    Rank {
        results: PathBuf,
        /// Iterations to report; default every iteration.
        #[arg(long = "iteration", value_delimiter = ',')]
        iterations: Vec<usize>,
        /// Methods to rank; default all in the file.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Downstream comparison of method A against method B.
    Compare {
        results: PathBuf,
        method_a: String,
        method_b: String,
        #[arg(long, default_value_t = 1)]
        iteration: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Print a documented example plan.
    ExportExampleConfig {
        #[arg(long, value_enum, default_value_t = ExampleKind::Newsvendor)]
        benchmark: ExampleKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleKind {
    Newsvendor,
    SyntheticDrift,
    Tabular,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("bad seed range `{s}`"))?;
        let b: u64 = b.trim().parse().with_context(|| format!("bad seed range `{s}`"))?;
        if b < a {
            bail!("empty seed range `{s}`");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().with_context(|| format!("bad seed `{x}`")))
        .collect()
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    Ok(s.split(',')
        .map(|x| x.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?)
}

fn output_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_traces(path: &Path) -> Result<Traces> {
    let records = read_jsonl(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Traces::from_records(&records)?)
}

/// Exit code 2 when any run aborted.
fn cmd_run(
    config: &Path,
    seeds: Option<&str>,
    methods: Option<&str>,
    budget: Option<usize>,
    output: &Path,
    parallelism: Option<usize>,
    force: bool,
) -> Result<u8> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut plan = ExperimentPlan::from_toml(&text)?;
    if let Some(s) = seeds {
        plan.seeds = parse_seeds(s)?;
    }
    if let Some(m) = methods {
        plan.methods = parse_methods(m)?;
    }
    if let Some(b) = budget {
        plan.budget = b;
    }
    plan.validate()?;
    if parallelism == Some(0) {
        bail!("--parallelism must be >= 1");
    }
    let parent = output.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
    }
    let mut opts = OpenOptions::new();
    opts.write(true);
    if force {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    let file = opts.open(output).with_context(|| {
        format!("cannot create {} (use --force to overwrite)", output.display())
    })?;

    let table = run_experiment(&plan, parallelism)?;
    write_jsonl(BufWriter::new(file), &table.records)?;
    let meta_path = PathBuf::from(format!("{}.meta.json", output.display()));
    let meta = serde_json_meta(&plan, &table)?;
    std::fs::write(&meta_path, meta)?;
    eprintln!(
        "{} records written to {}; {} run(s) aborted",
        table.records.len(),
        output.display(),
        table.aborted.len()
    );
    for a in &table.aborted {
        eprintln!("aborted: {} seed {} task {} iteration {}: {}", a.method, a.seed, a.task, a.iteration, a.error);
    }
    Ok(if table.aborted.is_empty() { 0 } else { 2 })
}

fn serde_json_meta(plan: &ExperimentPlan, table: &othpo::harness::ResultsTable) -> Result<String> {
    let meta = MetaFile {
        n_records: table.records.len(),
        n_aborted: table.aborted.len(),
        aborted: &table.aborted,
        budget: plan.budget,
        methods: &plan.methods,
        seeds: &plan.seeds,
    };
    Ok(format!("{}\n", serde_json_pretty(&meta)?))
}

#[derive(serde::Serialize)]
struct MetaFile<'a> {
    n_records: usize,
    n_aborted: usize,
    aborted: &'a [othpo::harness::AbortedRun],
    budget: usize,
    methods: &'a [Method],
    seeds: &'a [u64],
}

fn serde_json_pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| anyhow!(e))
}

fn cmd_score(results: &Path, iterations: &[usize], tasks: &[usize], output: Option<&Path>) -> Result<()> {
    let traces = load_traces(results)?;
    let iterations: Vec<usize> = if iterations.is_empty() {
        let d: Vec<usize> = [1, 10, 25].into_iter().filter(|&m| m <= traces.budget).collect();
        if d.is_empty() { vec![traces.budget] } else { d }
    } else {
        iterations.to_vec()
    };
    let tasks = (!tasks.is_empty()).then_some(tasks);
    let rows = score_table(&traces, &iterations, tasks)?;
    let undefined = rows.iter().filter(|r| r.score.is_none()).count();
    if undefined > 0 {
        eprintln!("warning: {undefined} score(s) undefined (RandomSearch mean equals the best mean)");
    }
    eprintln!(
        "best reference: lowest seed-mean loss over methods at iteration {}",
        traces.budget
    );
    write_csv(output_writer(output)?, &rows)?;
    Ok(())
}

fn cmd_rank(results: &Path, iterations: &[usize], methods: Option<&str>, output: Option<&Path>) -> Result<()> {
    let traces = load_traces(results)?;
    let methods = match methods {
        Some(m) => parse_methods(m)?,
        None => traces.methods.clone(),
    };
    let iterations: Vec<usize> = if iterations.is_empty() {
        (1..=traces.budget).collect()
    } else {
        iterations.to_vec()
    };
    let mut rows = Vec::new();
    for it in iterations {
        rows.extend(mean_rankings(&traces, &methods, it)?);
    }
    write_csv(output_writer(output)?, &rows)?;
    Ok(())
}

fn cmd_compare(results: &Path, a: &str, b: &str, iteration: usize, output: Option<&Path>) -> Result<()> {
    let traces = load_traces(results)?;
    let (a, b) = (a.parse::<Method>()?, b.parse::<Method>()?);
    let d = downstream_comparison(&traces, a, b, iteration)?;
    let fmt = |s: &Option<othpo::harness::Summary>| match s {
        Some(s) => match s.two_se {
            Some(e) => format!("{:.2} ± {:.2} (n={})", s.mean, e, s.n),
            None => format!("{:.2} (n={})", s.mean, s.n),
        },
        None => "undefined".into(),
    };
    eprintln!("{a} over {b} at iteration {iteration}");
    eprintln!("  reduction in standard error (%): {}", fmt(&d.se_reduction));
    eprintln!("  improvement in mean (%):         {}", fmt(&d.mean_improvement));
    if d.excluded > 0 {
        eprintln!("  warning: {} per-task value(s) undefined and excluded", d.excluded);
    }
    write_csv(output_writer(output)?, &d.rows)?;
    Ok(())
}

fn example_plan(kind: ExampleKind) -> ExperimentPlan {
    let benchmark = match kind {
        ExampleKind::Newsvendor => BenchmarkSpec::Newsvendor {
            seed: 0,
            n_tasks: 9,
            params: NewsVendorParams::default(),
        },
        ExampleKind::SyntheticDrift => BenchmarkSpec::SyntheticDrift {
            seed: 0,
            dim: 2,
            n_tasks: Some(20),
            sizes: None,
        },
        ExampleKind::Tabular => BenchmarkSpec::Tabular {
            path: "table.csv".into(),
            space: None,
            direction: Direction::Minimize,
        },
    };
    ExperimentPlan::new(benchmark)
}

const EXAMPLE_HEADER: &str = "\
# othpo experiment plan.
#
# methods: any of RandomSearch, BO, BoundingBox, ZeroShot, CTS, TransferBO,
#   SimpleOrdered, SimpleOrderedShuffled, SimplePrevious, SimplePreviousNoBO
# budget: evaluations per task; seeds: one full task sequence per seed.
# [benchmark] type: newsvendor | synthetic_drift | tabular
#   tabular reads a CSV with one column per hyperparameter, a `context`
#   column and an `objective` column; an optional `space` list fixes bounds.
# [scheduler]: warm-start length, BO initial design, MC-EI and GP settings.
";

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            methods,
            budget,
            output,
            parallelism,
            force,
        } => cmd_run(&config, seeds.as_deref(), methods.as_deref(), budget, &output, parallelism, force),
        Command::Score {
            results,
            iterations,
            tasks,
            output,
        } => cmd_score(&results, &iterations, &tasks, output.as_deref()).map(|_| 0),
        Command::Rank {
            results,
            iterations,
            methods,
            output,
        } => cmd_rank(&results, &iterations, methods.as_deref(), output.as_deref()).map(|_| 0),
        Command::Compare {
            results,
            method_a,
            method_b,
            iteration,
            output,
        } => cmd_compare(&results, &method_a, &method_b, iteration, output.as_deref()).map(|_| 0),
        Command::ExportExampleConfig { benchmark } => {
            print!("{EXAMPLE_HEADER}\n{}", example_plan(benchmark).to_toml()?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
