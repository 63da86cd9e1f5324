//! Monte-Carlo query evaluation over sampled possible worlds.
//!
//! Sample `i` always draws from stream `i` of the master seed, so results do
//! not depend on how many worker threads evaluate them.

use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{graph_entropy, sample_world, DeterministicWorld, UncertainGraph, VertexId};
use crate::rng;

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOLERANCE: f64 = 1e-10;
pub const PAGERANK_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryKind {
    #[serde(rename = "pr")]
    PageRank,
    #[serde(rename = "sp")]
    ShortestPath,
    #[serde(rename = "rl")]
    Reliability,
    #[serde(rename = "cc")]
    ClusteringCoefficient,
}

impl QueryKind {
    pub const ALL: [QueryKind; 4] = [
        QueryKind::PageRank,
        QueryKind::ShortestPath,
        QueryKind::Reliability,
        QueryKind::ClusteringCoefficient,
    ];

    pub fn on_pairs(self) -> bool {
        matches!(self, QueryKind::ShortestPath | QueryKind::Reliability)
    }

    pub fn label(self) -> &'static str {
        match self {
            QueryKind::PageRank => "pr",
            QueryKind::ShortestPath => "sp",
            QueryKind::Reliability => "rl",
            QueryKind::ClusteringCoefficient => "cc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.label() == s)
    }
}

/// A vertex for PR/CC, a vertex pair for SP/RL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    Vertex(VertexId),
    Pair(VertexId, VertexId),
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Unit::Vertex(v) => write!(f, "{v}"),
            Unit::Pair(a, b) => write!(f, "{a}-{b}"),
        }
    }
}

/// Observed results of one query unit, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDistribution {
    pub kind: QueryKind,
    pub unit: Unit,
    values: Vec<f64>,
    /// Worlds sampled; SP may record fewer values than this.
    pub samples: usize,
}

impl QueryDistribution {
    pub fn new(kind: QueryKind, unit: Unit, mut values: Vec<f64>, samples: usize) -> Self {
        values.sort_by(f64::total_cmp);
        Self {
            kind,
            unit,
            values,
            samples,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Empirical `F(x)`: fraction of observations `≤ x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.values.iter().sum::<f64>() / self.values.len() as f64)
    }
}

/// Power iteration with uniform teleport; dangling mass is spread uniformly.
pub fn pagerank_world(world: &DeterministicWorld<'_>) -> Vec<f64> {
    let n = world.vertex_count();
    if n == 0 {
        return Vec::new();
    }
    let deg: Vec<usize> = (0..n).map(|u| world.degree(u)).collect();
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITERS {
        let dangling: f64 = (0..n).filter(|&u| deg[u] == 0).map(|u| rank[u]).sum();
        let base = (1.0 - PAGERANK_DAMPING) / nf + PAGERANK_DAMPING * dangling / nf;
        next.fill(base);
        for u in 0..n {
            if deg[u] > 0 {
                let share = PAGERANK_DAMPING * rank[u] / deg[u] as f64;
                for w in world.neighbors(u) {
                    next[w] += share;
                }
            }
        }
        let change: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change < PAGERANK_TOLERANCE {
            break;
        }
    }
    rank
}

/// Local clustering coefficient; 0 below degree 2.
pub fn clustering_coefficient_world(world: &DeterministicWorld<'_>, u: VertexId) -> f64 {
    let nbrs: Vec<VertexId> = world.neighbors(u).collect();
    let d = nbrs.len();
    if d < 2 {
        return 0.0;
    }
    let mut mark = vec![false; world.vertex_count()];
    nbrs.iter().for_each(|&v| mark[v] = true);
    let links: usize = nbrs
        .iter()
        .map(|&v| world.neighbors(v).filter(|&w| mark[w]).count())
        .sum();
    // every link among neighbours was counted from both ends
    links as f64 / (d * (d - 1)) as f64
}

fn check_units(g: &UncertainGraph, kind: QueryKind, units: &[Unit]) -> Result<()> {
    for unit in units {
        match (*unit, kind.on_pairs()) {
            (Unit::Vertex(v), false) => g.check_vertex(v)?,
            (Unit::Pair(a, b), true) => {
                g.check_vertex(a)?;
                g.check_vertex(b)?;
            }
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unit {unit} does not fit query {}",
                    kind.label()
                )))
            }
        }
    }
    Ok(())
}

/// Evaluates the query on one world; `None` where SP finds no path.
fn evaluate(world: &DeterministicWorld<'_>, kind: QueryKind, units: &[Unit]) -> Vec<Option<f64>> {
    match kind {
        QueryKind::PageRank => {
            let rank = pagerank_world(world);
            units
                .iter()
                .map(|u| match *u {
                    Unit::Vertex(v) => Some(rank[v]),
                    Unit::Pair(..) => unreachable!("checked units"),
                })
                .collect()
        }
        QueryKind::ClusteringCoefficient => units
            .iter()
            .map(|u| match *u {
                Unit::Vertex(v) => Some(clustering_coefficient_world(world, v)),
                Unit::Pair(..) => unreachable!("checked units"),
            })
            .collect(),
        QueryKind::ShortestPath | QueryKind::Reliability => {
            let hops = pair_hops(world, units);
            hops.into_iter()
                .map(|h| match kind {
                    QueryKind::ShortestPath => h.map(f64::from),
                    _ => Some(if h.is_some() { 1.0 } else { 0.0 }),
                })
                .collect()
        }
    }
}

/// Hop counts for pair units, one BFS per run of equal sources that stops
/// once every target in the run is settled.
fn pair_hops(world: &DeterministicWorld<'_>, units: &[Unit]) -> Vec<Option<u32>> {
    let n = world.vertex_count();
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut touched = Vec::new();
    let mut wanted = vec![false; n];
    let mut queue = VecDeque::new();
    let mut out = Vec::with_capacity(units.len());
    let pair = |u: &Unit| match *u {
        Unit::Pair(a, b) => (a, b),
        Unit::Vertex(_) => unreachable!("checked units"),
    };
    let mut start = 0;
    while start < units.len() {
        let source = pair(&units[start]).0;
        let end = start + units[start..].iter().take_while(|u| pair(u).0 == source).count();
        let mut pending = 0;
        for u in &units[start..end] {
            let t = pair(u).1;
            if !wanted[t] {
                wanted[t] = true;
                pending += 1;
            }
        }
        dist[source] = Some(0);
        touched.push(source);
        queue.push_back(source);
        if wanted[source] {
            pending -= 1;
        }
        while pending > 0 {
            let Some(u) = queue.pop_front() else { break };
            let du = dist[u].unwrap();
            for w in world.neighbors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    touched.push(w);
                    queue.push_back(w);
                    if wanted[w] {
                        pending -= 1;
                    }
                }
            }
        }
        out.extend(units[start..end].iter().map(|u| dist[pair(u).1]));
        for u in &units[start..end] {
            wanted[pair(u).1] = false;
        }
        for v in touched.drain(..) {
            dist[v] = None;
        }
        queue.clear();
        start = end;
    }
    out
}

/// Per-unit result distributions over `n_samples` sampled worlds.
pub fn mc_distributions(
    g: &UncertainGraph,
    kind: QueryKind,
    units: &[Unit],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<QueryDistribution>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    check_units(g, kind, units)?;
    let per_world: Vec<Vec<Option<f64>>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let world = sample_world(g, &mut r);
            evaluate(&world, kind, units)
        })
        .collect();
    Ok(units
        .iter()
        .enumerate()
        .map(|(j, &unit)| {
            let values = per_world.iter().filter_map(|row| row[j]).collect();
            QueryDistribution::new(kind, unit, values, n_samples)
        })
        .collect())
}

/// Fraction of sampled worlds satisfying `predicate`.
pub fn mc_probability<F>(g: &UncertainGraph, n_samples: usize, seed: u64, predicate: F) -> Result<f64>
where
    F: Fn(&DeterministicWorld<'_>) -> bool + Sync,
{
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let hits: usize = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            predicate(&sample_world(g, &mut r)) as usize
        })
        .sum();
    Ok(hits as f64 / n_samples as f64)
}

/// `Σ_i |F1(x_{i-1}) - F2(x_{i-1})| (x_i - x_{i-1})` over the merged sorted
/// support: the area between the two step CDFs.
pub fn earth_movers_distance(f1: &QueryDistribution, f2: &QueryDistribution) -> Result<f64> {
    if f1.is_empty() || f2.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let (a, b) = (f1.values(), f2.values());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        if let Some(px) = prev {
            total += (i as f64 / na - j as f64 / nb).abs() * (x - px);
        }
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        prev = Some(x);
    }
    Ok(total)
}

/// Sample variance with divisor `len - 1`.
pub fn unbiased_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter("variance needs at least two runs".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
}

/// Variance of the per-unit MC mean across `n_runs` independent runs.
///
/// A unit gets `None` when some run recorded no value for it (SP only).
pub fn variance_protocol(
    g: &UncertainGraph,
    kind: QueryKind,
    units: &[Unit],
    n_samples: usize,
    n_runs: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    if n_runs < 2 {
        return Err(Error::InvalidParameter("n_runs must be at least 2".into()));
    }
    let mut estimates: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(n_runs); units.len()];
    for run in 0..n_runs {
        let dists = mc_distributions(g, kind, units, n_samples, rng::derive(seed, run as u64))?;
        for (slot, d) in estimates.iter_mut().zip(&dists) {
            slot.push(d.mean());
        }
    }
    estimates
        .into_iter()
        .map(|runs| {
            runs.into_iter()
                .collect::<Option<Vec<f64>>>()
                .map(|v| unbiased_variance(&v))
                .transpose()
        })
        .collect()
}

/// `H(g2) / H(g)`.
pub fn relative_entropy(g: &UncertainGraph, g2: &UncertainGraph) -> Result<f64> {
    let h = graph_entropy(g);
    if h <= 0.0 {
        return Err(Error::ZeroEntropy);
    }
    Ok(graph_entropy(g2) / h)
}

/// Query units: every vertex (or a sample of `count`), or `count` random pairs.
pub fn sample_units(g: &UncertainGraph, kind: QueryKind, count: usize, seed: u64) -> Result<Vec<Unit>> {
    let n = g.vertex_count();
    let mut r = rng::seeded(seed);
    if kind.on_pairs() {
        if n < 2 {
            return Err(Error::InvalidParameter("pair queries need two vertices".into()));
        }
        let mut pairs: Vec<Unit> = (0..count)
            .map(|_| {
                let a = r.random_range(0..n);
                let mut b = r.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                Unit::Pair(a.min(b), a.max(b))
            })
            .collect();
        // grouping by source lets one BFS serve several pairs
        pairs.sort_by_key(|u| match *u {
            Unit::Pair(a, b) => (a, b),
            Unit::Vertex(v) => (v, v),
        });
        Ok(pairs)
    } else if count >= n {
        Ok((0..n).map(Unit::Vertex).collect())
    } else {
        let mut picked = index::sample(&mut r, n, count).into_vec();
        picked.sort_unstable();
        Ok(picked.into_iter().map(Unit::Vertex).collect())
    }
}

/// Per-unit D_em between two graphs and its aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmdSummary {
    pub per_unit: Vec<Option<f64>>,
    /// Means of the original and sparsified distributions per unit.
    pub means: Vec<(Option<f64>, Option<f64>)>,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Units left out because one of the distributions is empty.
    pub excluded: usize,
}

pub fn emd_report_with_seeds(
    g: &UncertainGraph,
    g2: &UncertainGraph,
    kind: QueryKind,
    units: &[Unit],
    n_samples: usize,
    seeds: (u64, u64),
) -> Result<EmdSummary> {
    if g.vertex_count() != g2.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "graphs have {} and {} vertices",
            g.vertex_count(),
            g2.vertex_count()
        )));
    }
    let d1 = mc_distributions(g, kind, units, n_samples, seeds.0)?;
    let d2 = mc_distributions(g2, kind, units, n_samples, seeds.1)?;
    let mut per_unit = Vec::with_capacity(units.len());
    let mut means = Vec::with_capacity(units.len());
    for (a, b) in d1.iter().zip(&d2) {
        per_unit.push(earth_movers_distance(a, b).ok());
        means.push((a.mean(), b.mean()));
    }
    let mut kept: Vec<f64> = per_unit.iter().flatten().copied().collect();
    let excluded = per_unit.len() - kept.len();
    kept.sort_by(f64::total_cmp);
    let (mean, median, max) = if kept.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let k = kept.len();
        let median = if k % 2 == 1 {
            kept[k / 2]
        } else {
            0.5 * (kept[k / 2 - 1] + kept[k / 2])
        };
        (kept.iter().sum::<f64>() / k as f64, median, kept[k - 1])
    };
    Ok(EmdSummary {
        per_unit,
        means,
        mean,
        median,
        max,
        excluded,
    })
}

/// Same seed for both graphs.
pub fn emd_report(
    g: &UncertainGraph,
    g2: &UncertainGraph,
    kind: QueryKind,
    units: &[Unit],
    n_samples: usize,
    seed: u64,
) -> Result<EmdSummary> {
    emd_report_with_seeds(g, g2, kind, units, n_samples, (seed, seed))
}
