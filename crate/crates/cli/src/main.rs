mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use usparse::eval::QueryKind;
use usparse::graph::ProbSampler;

use commands::{parse_query, parse_sampler, CompareConfig, EvalConfig};
use config::{BackboneKind, CutOrder, Method, ModeArg, RunConfig};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "usparse", version, about = "Sparsify and evaluate uncertain graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random connected uncertain graph.
    Generate {
        #[arg(short = 'n', long)]
        vertices: usize,
        /// Edge count over n(n-1)/2.
        #[arg(short = 'd', long)]
        density: f64,
        /// constant:P, uniform[:LOW:HIGH] or beta:A:B
        #[arg(long, default_value = "uniform", value_parser = parse_sampler)]
        probs: ProbSampler,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sparsify a graph and optionally write a run manifest.
    Sparsify(SparsifyArgs),
    /// Compare query distributions of an original and a sparsified graph.
    Eval {
        #[arg(short = 'g', long)]
        original: PathBuf,
        #[arg(short = 's', long)]
        sparsified: PathBuf,
        #[arg(short, long, value_parser = parse_query)]
        query: QueryKind,
        #[command(flatten)]
        mc: McArgs,
        /// Per-unit CSV; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// JSON summary.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Sweep methods, ratios and queries over one graph into a CSV.
    Compare {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_query)]
        queries: Vec<QueryKind>,
        #[command(flatten)]
        mc: McArgs,
        /// Random cuts per cut size for the cut MAE.
        #[arg(long, default_value_t = 100)]
        cuts: usize,
        #[command(flatten)]
        tuning: TuningArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact reliability or connectivity probability by enumerating worlds.
    Oracle {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, requires = "target")]
        source: Option<usize>,
        #[arg(long, requires = "source")]
        target: Option<usize>,
    },
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Runs of the variance protocol; 0 skips it.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Random vertex pairs for sp and rl.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TuningArgs {
    #[arg(long = "alpha-prime")]
    alpha_prime: Option<f64>,
    #[arg(long, value_enum, default_value = "spanning")]
    backbone: BackboneKind,
    #[arg(long, value_enum, default_value = "abs")]
    mode: ModeArg,
    /// Cut size of the objective, or "all".
    #[arg(short = 'k', long, default_value = "1")]
    k: CutOrder,
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct SparsifyArgs {
    #[arg(short, long, required_unless_present = "from_manifest")]
    input: Option<PathBuf>,
    #[arg(short, long, value_enum, required_unless_present = "from_manifest")]
    method: Option<Method>,
    #[arg(short, long, required_unless_present = "from_manifest")]
    alpha: Option<f64>,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sparsified graph; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Include wall time in the manifest (makes it non-reproducible).
    #[arg(long)]
    record_time: bool,
    /// Re-run the configuration stored in a manifest; other run flags are ignored
    /// except --output and --manifest.
    #[arg(long, conflicts_with_all = ["input", "method", "alpha"])]
    from_manifest: Option<PathBuf>,
}

fn run_config(
    input: PathBuf,
    method: Method,
    alpha: f64,
    t: TuningArgs,
    seed: u64,
    output: Option<PathBuf>,
) -> RunConfig {
    RunConfig {
        input,
        method,
        alpha,
        alpha_prime: t.alpha_prime,
        backbone: t.backbone,
        mode: t.mode,
        k: t.k,
        h: t.h,
        tau: t.tau,
        max_sweeps: t.max_sweeps,
        max_iters: t.max_iters,
        theta: t.theta,
        seed,
        output,
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("USPARSE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::usage(format!("USPARSE_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(e.to_string()))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate {
            vertices,
            density,
            probs,
            seed,
            output,
        } => commands::generate(vertices, density, probs, seed, output.as_deref()),
        Command::Sparsify(a) => {
            let cfg = match &a.from_manifest {
                Some(path) => {
                    let mut cfg = commands::read_manifest(path)?;
                    if a.output.is_some() {
                        cfg.output = a.output.clone();
                    }
                    cfg
                }
                None => run_config(
                    a.input.expect("required by clap"),
                    a.method.expect("required by clap"),
                    a.alpha.expect("required by clap"),
                    a.tuning,
                    a.seed,
                    a.output.clone(),
                ),
            };
            commands::sparsify(&cfg, a.manifest.as_deref(), a.record_time)
        }
        Command::Eval {
            original,
            sparsified,
            query,
            mc,
            output,
            summary,
        } => {
            let cfg = EvalConfig {
                original,
                sparsified,
                query,
                samples: mc.samples,
                runs: mc.runs,
                pairs: mc.pairs,
                seed: mc.seed,
            };
            commands::eval(&cfg, output.as_deref(), summary.as_deref())
        }
        Command::Compare {
            input,
            methods,
            alphas,
            queries,
            mc,
            cuts,
            tuning,
            output,
        } => {
            let base = run_config(input.clone(), Method::Gdb, 0.0, tuning, mc.seed, None);
            let cfg = CompareConfig {
                input,
                methods,
                alphas,
                queries,
                samples: mc.samples,
                runs: mc.runs,
                pairs: mc.pairs,
                cuts,
                seed: mc.seed,
                base,
            };
            let failures = commands::compare(&cfg, output.as_deref())?;
            if failures > 0 {
                eprintln!("warning: {failures} cell(s) failed; see the status column");
            }
            Ok(())
        }
        Command::Oracle { input, source, target } => commands::oracle(&input, source.zip(target)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match configure_threads().and_then(|()| dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
