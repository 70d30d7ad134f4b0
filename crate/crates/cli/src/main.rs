use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ladmap_core::ladmap::{LadmapConfig, SolveStatus};
use ladmap_core::lrr::LrrProblem;
use ladmap_core::pipeline::io::{load_labels, load_matrix, load_skinny, save_labels, save_matrix, save_skinny};
use ladmap_core::pipeline::{
    accuracy, cluster_from_z, format_table, gen_synthetic, run_benchmark, run_method, write_csv, Method,
    MethodSettings, SuiteConfig, SyntheticSpec,
};

/// Exit status for a solve that hit its iteration cap.
const EXIT_CAPPED: u8 = 2;

#[derive(Parser)]
#[command(name = "ladmap", version, about = "LADMAP solvers for low-rank representation")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic union-of-subspaces dataset.
    Gen(GenArgs),
    /// Solve an LRR problem.
    Solve(SolveArgs),
    /// Run a comparison suite described by a key=value file.
    Bench(BenchArgs),
    /// Cluster from a coefficient matrix and score against labels.
    Cluster(ClusterArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    s: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    corrupt_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_scale: f64,
    /// Data file; `.csv` selects CSV, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
    /// Label file (default: next to the data file, `<stem>.labels.csv`).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    eps1: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps2: f64,
    #[arg(long, default_value_t = 1e10)]
    beta_max: f64,
    #[arg(long, default_value_t = 1.9)]
    rho0: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Per-iteration trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for `E.bin` and `Z.svd`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Factor file written by `solve`, or a dense matrix file.
    #[arg(long)]
    z: PathBuf,
    #[arg(long)]
    clusters: usize,
    /// Ground-truth labels; when given, accuracy is printed.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the predicted labels.
    #[arg(long)]
    pred_out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: ladmap_core::Error| e.to_string())
}

fn default_labels_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    out.with_file_name(format!("{stem}.labels.csv"))
}

fn gen(args: GenArgs) -> Result<u8> {
    let spec = SyntheticSpec {
        corrupt_frac: args.corrupt_frac,
        noise_scale: args.noise_scale,
        ..SyntheticSpec::new(args.s, args.p, args.d, args.rank, args.seed)
    };
    let ds = gen_synthetic(&spec)?;
    save_matrix(&ds.x, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let labels = args.labels.unwrap_or_else(|| default_labels_path(&args.out));
    save_labels(&ds.labels, &labels).with_context(|| format!("writing {}", labels.display()))?;
    println!(
        "wrote {}x{} data to {} and labels to {}",
        ds.x.nrows(),
        ds.x.ncols(),
        args.out.display(),
        labels.display()
    );
    Ok(0)
}

fn solve(args: SolveArgs) -> Result<u8> {
    let x = load_matrix(&args.data).with_context(|| format!("reading {}", args.data.display()))?;
    let problem = LrrProblem::new(x, args.mu)?;
    let settings = MethodSettings::from_ladmap(LadmapConfig {
        eps1: args.eps1,
        eps2: args.eps2,
        beta_max: args.beta_max,
        rho0: args.rho0,
        max_iter: args.max_iter,
        ..LadmapConfig::default()
    });
    settings.ladmap.validate()?;
    let started = Instant::now();
    let out = run_method(args.method, &problem, &settings)?;
    let elapsed = started.elapsed().as_secs_f64();

    fs::create_dir_all(&args.out_dir)?;
    save_matrix(&out.e, &args.out_dir.join("E.bin"))?;
    save_skinny(&out.z, &args.out_dir.join("Z.svd"))?;
    if let Some(path) = &args.trace {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        out.trace.write_csv(BufWriter::new(file))?;
    }
    let status = match out.status {
        SolveStatus::Converged => "converged",
        SolveStatus::IterationCapped => "iteration cap reached",
    };
    println!(
        "{}: {status} after {} iterations in {elapsed:.3} s; rank(Z) = {}, feasibility {:.3e}, objective {:.6}",
        args.method,
        out.iterations,
        out.z.rank(),
        problem.feasibility(&out.e, &out.z),
        problem.objective(&out.e, &out.z)
    );
    Ok(match out.status {
        SolveStatus::Converged => 0,
        SolveStatus::IterationCapped => EXIT_CAPPED,
    })
}

fn bench(args: BenchArgs) -> Result<u8> {
    let suite = SuiteConfig::load(&args.suite).with_context(|| format!("reading {}", args.suite.display()))?;
    let rows = run_benchmark(&suite)?;
    print!("{}", format_table(&rows));
    if let Some(path) = &args.out {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        write_csv(&rows, BufWriter::new(file))?;
    }
    Ok(0)
}

fn cluster(args: ClusterArgs) -> Result<u8> {
    let z = load_skinny(&args.z).with_context(|| format!("reading {}", args.z.display()))?;
    let pred = cluster_from_z(&z, args.clusters, args.seed)?;
    if let Some(path) = &args.pred_out {
        save_labels(&pred, path)?;
    }
    match &args.labels {
        Some(path) => {
            let truth = load_labels(path).with_context(|| format!("reading {}", path.display()))?;
            if truth.len() != pred.len() {
                bail!("{} labels for {} points", truth.len(), pred.len());
            }
            println!("accuracy {:.2}%", 100.0 * accuracy(&pred, &truth)?);
        }
        None => println!("clustered {} points into {} groups", pred.len(), args.clusters),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Cluster(a) => cluster(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
