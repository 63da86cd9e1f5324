use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use usparse::eval::{emd_report_with_seeds, relative_entropy, sample_units, variance_protocol, QueryKind, Unit};
use usparse::graph::{
    degree_discrepancies, exact_query_probability, generate_synthetic, graph_entropy, load_graph, load_sparsified,
    sampled_k_discrepancy_mae, write_graph, ProbSampler,
};
use usparse::{rng, UncertainGraph};

use crate::config::{Method, RunConfig};
use crate::error::{CliError, CliResult};

/// Opens `path` for writing, or stdout when absent.
fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_at(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_at(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load(path: &Path, sparsified: bool) -> CliResult<UncertainGraph> {
    let res = if sparsified {
        load_sparsified(path)
    } else {
        load_graph(path)
    };
    res.map_err(|e| match e {
        usparse::Error::Io(io) => io_at(path, io),
        other => CliError::Domain(format!("{}: {other}", path.display())),
    })
}

fn write_json(path: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn d1(g: &UncertainGraph, g2: &UncertainGraph) -> CliResult<f64> {
    Ok(degree_discrepancies(g, g2)?.iter().map(|d| d * d).sum())
}

pub fn parse_sampler(s: &str) -> Result<ProbSampler, String> {
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or_default();
    let nums: Vec<f64> = parts
        .map(|x| x.parse::<f64>().map_err(|_| format!("bad number '{x}' in '{s}'")))
        .collect::<Result<_, _>>()?;
    match (kind, nums.as_slice()) {
        ("constant", [p]) => Ok(ProbSampler::Constant { p: *p }),
        ("uniform", []) => Ok(ProbSampler::Uniform { low: 0.0, high: 1.0 }),
        ("uniform", [low, high]) => Ok(ProbSampler::Uniform { low: *low, high: *high }),
        ("beta", [a, b]) => Ok(ProbSampler::Beta { alpha: *a, beta: *b }),
        _ => Err(format!(
            "expected constant:P, uniform[:LOW:HIGH] or beta:A:B, got '{s}'"
        )),
    }
}

pub fn parse_query(s: &str) -> Result<QueryKind, String> {
    QueryKind::parse(s).ok_or_else(|| format!("unknown query '{s}', expected pr, sp, rl or cc"))
}

pub fn generate(n: usize, density: f64, sampler: ProbSampler, seed: u64, output: Option<&Path>) -> CliResult<()> {
    let g = generate_synthetic(n, density, sampler, seed)?;
    let mut out = sink(output)?;
    write_graph(&g, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Contents of a sparsification manifest.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub edges: usize,
    pub d1: f64,
    pub entropy_original: f64,
    pub entropy_sparsified: f64,
    pub report: Value,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_secs: Option<f64>,
}

pub fn read_manifest(path: &Path) -> CliResult<RunConfig> {
    let file = File::open(path).map_err(|e| io_at(path, e))?;
    let m: Manifest = serde_json::from_reader(io::BufReader::new(file))?;
    Ok(m.config)
}

pub fn sparsify(cfg: &RunConfig, manifest: Option<&Path>, record_time: bool) -> CliResult<()> {
    cfg.validate()?;
    let g = load(&cfg.input, false)?;
    let start = Instant::now();
    let (g2, report) = cfg.run(&g)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut out = sink(cfg.output.as_deref())?;
    write_graph(&g2, &mut out)?;
    out.flush()?;

    if let Some(path) = manifest {
        let m = Manifest {
            config: cfg.clone(),
            edges: g2.edge_count(),
            d1: d1(&g, &g2)?,
            entropy_original: graph_entropy(&g),
            entropy_sparsified: graph_entropy(&g2),
            report,
            wall_time_secs: record_time.then_some(elapsed),
        };
        write_json(Some(path), &serde_json::to_value(&m)?)?;
    }
    Ok(())
}

/// Parameters of the Monte-Carlo evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct EvalConfig {
    pub original: PathBuf,
    pub sparsified: PathBuf,
    pub query: QueryKind,
    pub samples: usize,
    pub runs: usize,
    pub pairs: usize,
    pub seed: u64,
}

struct EvalOutcome {
    units: Vec<Unit>,
    dem: Vec<Option<f64>>,
    means: Vec<(Option<f64>, Option<f64>)>,
    mean_dem: f64,
    median_dem: f64,
    max_dem: f64,
    excluded: usize,
    variance: Option<(f64, f64)>,
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64)
}

fn evaluate(
    g: &UncertainGraph,
    g2: &UncertainGraph,
    query: QueryKind,
    samples: usize,
    runs: usize,
    pairs: usize,
    seed: u64,
) -> CliResult<EvalOutcome> {
    let units = sample_units(
        g,
        query,
        if query.on_pairs() { pairs } else { usize::MAX },
        rng::derive(seed, 0),
    )?;
    let summary = emd_report_with_seeds(
        g,
        g2,
        query,
        &units,
        samples,
        (rng::derive(seed, 1), rng::derive(seed, 2)),
    )?;
    let variance = if runs >= 2 {
        let v1 = variance_protocol(g, query, &units, samples, runs, rng::derive(seed, 3))?;
        let v2 = variance_protocol(g2, query, &units, samples, runs, rng::derive(seed, 4))?;
        mean_of(&v1).zip(mean_of(&v2))
    } else {
        None
    };
    Ok(EvalOutcome {
        units,
        dem: summary.per_unit,
        means: summary.means,
        mean_dem: summary.mean,
        median_dem: summary.median,
        max_dem: summary.max,
        excluded: summary.excluded,
        variance,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// JSON has no NaN; absent aggregates become null.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn eval(cfg: &EvalConfig, csv_path: Option<&Path>, json_path: Option<&Path>) -> CliResult<()> {
    if cfg.samples == 1 {
        eprintln!("warning: --samples 1 gives a single world per graph; D_em estimates will have very high variance");
    }
    if cfg.runs == 1 {
        return Err(CliError::usage("--runs must be 0 (skip variance) or at least 2"));
    }
    let g = load(&cfg.original, false)?;
    let g2 = load(&cfg.sparsified, true)?;
    let out = evaluate(&g, &g2, cfg.query, cfg.samples, cfg.runs, cfg.pairs, cfg.seed)?;

    let mut w = csv::Writer::from_writer(sink(csv_path)?);
    w.write_record(["unit", "mean_original", "mean_sparsified", "dem"])?;
    for ((unit, dem), (m1, m2)) in out.units.iter().zip(&out.dem).zip(&out.means) {
        w.write_record([unit.to_string(), opt(*m1), opt(*m2), opt(*dem)])?;
    }
    w.flush()?;

    if let Some(path) = json_path {
        let summary = json!({
            "config": cfg,
            "units": out.units.len(),
            "excluded": out.excluded,
            "mean_dem": finite(out.mean_dem),
            "median_dem": finite(out.median_dem),
            "max_dem": finite(out.max_dem),
            "relative_entropy": relative_entropy(&g, &g2).ok(),
            "variance_original": out.variance.map(|v| v.0),
            "variance_sparsified": out.variance.map(|v| v.1),
        });
        write_json(Some(path), &summary)?;
    }
    Ok(())
}

/// Sweep parameters shared by every cell of `compare`.
#[derive(Debug, Clone, Serialize)]
pub struct CompareConfig {
    pub input: PathBuf,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub queries: Vec<QueryKind>,
    pub samples: usize,
    pub runs: usize,
    pub pairs: usize,
    pub cuts: usize,
    pub seed: u64,
    pub base: RunConfig,
}

#[derive(Debug, Serialize)]
struct CompareRow {
    method: &'static str,
    alpha: f64,
    query: &'static str,
    status: String,
    edges: Option<usize>,
    mae_degree: Option<f64>,
    mae_cut: Option<f64>,
    relative_entropy: Option<f64>,
    mean_dem: Option<f64>,
    relative_variance: Option<f64>,
}

struct CellMetrics {
    edges: usize,
    mae_degree: f64,
    mae_cut: f64,
    relative_entropy: Option<f64>,
}

/// Mean over cut sizes k = 1, 2, 4, ... up to n/2 of the sampled cut MAE.
fn cut_mae(g: &UncertainGraph, g2: &UncertainGraph, cuts: usize, seed: u64) -> CliResult<f64> {
    let n = g.vertex_count();
    let mut ks = vec![1];
    while ks.last().unwrap() * 2 <= n / 2 {
        ks.push(ks.last().unwrap() * 2);
    }
    let mut total = 0.0;
    for (i, &k) in ks.iter().enumerate() {
        total += sampled_k_discrepancy_mae(g, g2, k, cuts, rng::derive(seed, i as u64))?;
    }
    Ok(total / ks.len() as f64)
}

fn cell_metrics(g: &UncertainGraph, g2: &UncertainGraph, cuts: usize, seed: u64) -> CliResult<CellMetrics> {
    let disc = degree_discrepancies(g, g2)?;
    Ok(CellMetrics {
        edges: g2.edge_count(),
        mae_degree: disc.iter().map(|d| d.abs()).sum::<f64>() / disc.len().max(1) as f64,
        mae_cut: cut_mae(g, g2, cuts, seed)?,
        relative_entropy: relative_entropy(g, g2).ok(),
    })
}

pub fn compare(cfg: &CompareConfig, output: Option<&Path>) -> CliResult<usize> {
    if cfg.runs == 1 {
        return Err(CliError::usage("--runs must be 0 (skip variance) or at least 2"));
    }
    if cfg.cuts == 0 {
        return Err(CliError::usage("--cuts must be at least 1"));
    }
    let g = load(&cfg.input, false)?;
    let mut w = csv::Writer::from_writer(sink(output)?);
    let mut failures = 0;
    for &method in &cfg.methods {
        for &alpha in &cfg.alphas {
            let run = RunConfig {
                method,
                alpha,
                output: None,
                ..cfg.base.clone()
            };
            let sparse = run
                .run(&g)
                .and_then(|(g2, _)| cell_metrics(&g, &g2, cfg.cuts, rng::derive(cfg.seed, 5)).map(|m| (g2, m)));
            for &query in &cfg.queries {
                let mut row = CompareRow {
                    method: method.label(),
                    alpha,
                    query: query.label(),
                    status: "ok".into(),
                    edges: None,
                    mae_degree: None,
                    mae_cut: None,
                    relative_entropy: None,
                    mean_dem: None,
                    relative_variance: None,
                };
                match &sparse {
                    Ok((g2, m)) => {
                        row.edges = Some(m.edges);
                        row.mae_degree = Some(m.mae_degree);
                        row.mae_cut = Some(m.mae_cut);
                        row.relative_entropy = m.relative_entropy;
                        match evaluate(&g, g2, query, cfg.samples, cfg.runs, cfg.pairs, cfg.seed) {
                            Ok(e) => {
                                row.mean_dem = finite(e.mean_dem);
                                row.relative_variance = e.variance.and_then(|(v1, v2)| (v1 > 0.0).then(|| v2 / v1));
                            }
                            Err(e) => {
                                failures += 1;
                                row.status = format!("error: {}", strip_prefix(&e));
                            }
                        }
                    }
                    Err(e) => {
                        failures += 1;
                        row.status = format!("error: {}", strip_prefix(e));
                    }
                }
                w.serialize(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(failures)
}

fn strip_prefix(e: &CliError) -> String {
    match e {
        CliError::Domain(m) | CliError::Io(m) => m.clone(),
    }
}

pub fn oracle(input: &Path, pair: Option<(usize, usize)>) -> CliResult<()> {
    let g = load(input, true)?;
    let (query, probability) = match pair {
        Some((s, t)) => {
            let n = g.vertex_count();
            if s >= n || t >= n {
                return Err(usparse::Error::VertexOutOfRange { vertex: s.max(t), n }.into());
            }
            ("reliability", exact_query_probability(&g, |w| w.reachable(s, t))?)
        }
        None => ("connectivity", exact_query_probability(&g, |w| w.is_connected())?),
    };
    let value = json!({
        "query": query,
        "source": pair.map(|p| p.0),
        "target": pair.map(|p| p.1),
        "edges": g.edge_count(),
        "probability": probability,
    });
    write_json(None, &value)
}
