//! Deterministic-graph sparsifiers adapted to uncertain graphs.
//!
//! NI samples edges by their index in a sequence of contiguous spanning
//! forests over integer weights `p / p_min`; SS keeps a `(2t-1)`-spanner of the
//! `-ln p` weighted graph. Both are calibrated towards `α|E|` edges and then
//! topped up with probability-weighted draws.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backbone::{max_spanning_forest, probability_top_up, target_edge_count};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, UncertainGraph, VertexId};
use crate::rng;

/// Calibration steps allowed before giving up.
pub const MAX_CALIBRATION_STEPS: usize = 100;

/// Largest number of stretch increments tried by SS.
pub const MAX_STRETCH_STEPS: usize = 16;

const MAX_STRETCH: usize = 64;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")))
    }
}

/// Integer edge weights `max(1, round(p / p_min))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiWeights {
    pub p_min: f64,
    pub weights: Vec<u64>,
}

pub fn to_ni_weights(g: &UncertainGraph) -> Result<NiWeights> {
    let p_min = g
        .edges()
        .iter()
        .map(|e| e.p)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::InvalidParameter("graph has no edges".into()))?;
    if p_min.is_nan() || p_min <= 0.0 {
        return Err(Error::InvalidParameter("NI needs positive probabilities".into()));
    }
    // halves round up
    let weights = g
        .edges()
        .iter()
        .map(|e| ((e.p / p_min + 0.5).floor() as u64).max(1))
        .collect();
    Ok(NiWeights { p_min, weights })
}

/// `min(w' p_min, 1)`.
pub fn ni_inverse(weight: f64, p_min: f64) -> f64 {
    (weight * p_min).min(1.0)
}

/// Edges in the order their residual weight reaches zero, with that round.
///
/// Forest `F_r` starts from the edges of `F_{r-1}` that are still available
/// and is completed over the remaining available edges by descending weight,
/// ties in canonical order.
/// While no edge finishes the forest repeats unchanged, so such runs of
/// rounds are taken in one step.
pub fn ni_schedule(g: &UncertainGraph, weights: &[u64]) -> Vec<(EdgeId, usize)> {
    let m = g.edge_count();
    assert_eq!(weights.len(), m);
    let mut residual = weights.to_vec();
    let mut available = vec![true; m];
    let mut left = m;
    let mut previous: Vec<EdgeId> = Vec::new();
    let mut finished = Vec::with_capacity(m);
    let mut round = 0;
    let order = heaviest_first(weights);
    while left > 0 {
        let mut dsu = DisjointSets::new(g.vertex_count());
        let mut forest = Vec::new();
        for id in previous.iter().copied().chain(order.iter().copied()) {
            if available[id] {
                let e = g.edge(id);
                if dsu.union(e.u, e.v) {
                    forest.push(id);
                }
            }
        }
        let span = forest
            .iter()
            .map(|&id| residual[id])
            .min()
            .expect("available edges form a forest");
        round += span as usize;
        for &id in &forest {
            residual[id] -= span;
            if residual[id] == 0 {
                available[id] = false;
                left -= 1;
                finished.push((id, round));
            }
        }
        forest.retain(|&id| available[id]);
        previous = forest;
    }
    finished
}

fn heaviest_first(weights: &[u64]) -> Vec<EdgeId> {
    let mut order: Vec<EdgeId> = (0..weights.len()).collect();
    order.sort_by_key(|&id| (std::cmp::Reverse(weights[id]), id));
    order
}

/// `ℓ = min(ln n / (ε² r), 1)`.
pub fn ni_sampling_probability(n: usize, epsilon: f64, round: usize) -> f64 {
    ((n as f64).ln() / (epsilon * epsilon * round as f64)).min(1.0)
}

/// Sampled edges and their reweighted values `w / ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiSample {
    pub kept: Vec<(EdgeId, f64)>,
}

/// Decides every finished edge against its own uniform draw, so one set of
/// draws serves every `ε` tried during calibration.
fn ni_apply(n: usize, weights: &[u64], schedule: &[(EdgeId, usize)], uniforms: &[f64], epsilon: f64) -> NiSample {
    let kept = schedule
        .iter()
        .zip(uniforms)
        .filter_map(|(&(id, round), &u)| {
            let ell = ni_sampling_probability(n, epsilon, round);
            (u < ell).then(|| (id, weights[id] as f64 / ell))
        })
        .collect();
    NiSample { kept }
}

fn uniforms(count: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    (0..count).map(|_| r.random::<f64>()).collect()
}

pub fn ni_core(g: &UncertainGraph, weights: &NiWeights, epsilon: f64, seed: u64) -> Result<NiSample> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let schedule = ni_schedule(g, &weights.weights);
    let draws = uniforms(schedule.len(), seed);
    Ok(ni_apply(g.vertex_count(), &weights.weights, &schedule, &draws, epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NiReport {
    pub initial_epsilon: f64,
    pub epsilon: f64,
    pub calibration_steps: usize,
    pub sampled: usize,
    pub topped_up: usize,
}

/// `ε_0 = sqrt(n ln² n / (α |E|))`.
pub fn ni_initial_epsilon(n: usize, m: usize, alpha: f64) -> f64 {
    let ln = (n as f64).ln();
    (n as f64 * ln * ln / (alpha * m as f64)).sqrt()
}

pub fn ni_sparsify(g: &UncertainGraph, alpha: f64, theta: f64, seed: u64) -> Result<(UncertainGraph, NiReport)> {
    check_alpha(alpha)?;
    if theta.is_nan() || theta <= 1.0 {
        return Err(Error::InvalidParameter(format!("theta = {theta} must exceed 1")));
    }
    let weights = to_ni_weights(g)?;
    let (n, m) = (g.vertex_count(), g.edge_count());
    let target = target_edge_count(m, alpha);
    let schedule = ni_schedule(g, &weights.weights);
    let draws = uniforms(schedule.len(), rng::derive(seed, 1));
    let run = |eps: f64| ni_apply(n, &weights.weights, &schedule, &draws, eps);

    let initial = ni_initial_epsilon(n, m, alpha);
    let mut epsilon = initial;
    let mut sample = run(epsilon);
    let mut steps = 0;
    if sample.kept.len() > target {
        while sample.kept.len() > target {
            if steps == MAX_CALIBRATION_STEPS {
                return Err(Error::CalibrationFailed(steps));
            }
            epsilon *= theta;
            sample = run(epsilon);
            steps += 1;
        }
    } else {
        // shrink ε while the next run still fits; stop once nothing more can be added
        while sample.kept.len() < m && steps < MAX_CALIBRATION_STEPS {
            let next = run(epsilon / theta);
            if next.kept.len() > target {
                break;
            }
            epsilon /= theta;
            sample = next;
            steps += 1;
        }
    }

    let mut ids: Vec<EdgeId> = Vec::with_capacity(target);
    let mut probs = vec![0.0; m];
    let mut in_sample = vec![false; m];
    for &(id, w) in &sample.kept {
        ids.push(id);
        probs[id] = ni_inverse(w, weights.p_min);
        in_sample[id] = true;
    }
    let sampled = ids.len();
    let mut remaining: Vec<EdgeId> = (0..m).filter(|&id| !in_sample[id]).collect();
    let mut r = rng::seeded(rng::derive(seed, 2));
    probability_top_up(g, &mut ids, &mut remaining, target, &mut r);
    let topped_up = ids.len() - sampled;
    for &id in &ids[sampled..] {
        probs[id] = g.edge(id).p;
    }
    ids.sort_unstable();
    let out: Vec<f64> = ids.iter().map(|&id| probs[id]).collect();
    let graph = g.subgraph_with(&ids, &out)?;
    Ok((
        graph,
        NiReport {
            initial_epsilon: initial,
            epsilon,
            calibration_steps: steps,
            sampled,
            topped_up,
        },
    ))
}

/// `w = -ln p`; certain edges weigh 0.
pub fn to_ss_weights(g: &UncertainGraph) -> Vec<f64> {
    g.edges()
        .iter()
        .map(|e| if e.p >= 1.0 { 0.0 } else { -e.p.ln() })
        .collect()
}

type Key = (f64, EdgeId);

fn lighter(a: Key, b: Key) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_lt()
}

/// Lightest alive edge from `v` into each adjacent cluster.
fn cluster_links(
    g: &UncertainGraph,
    weights: &[f64],
    alive: &[bool],
    cluster: &[Option<VertexId>],
    v: VertexId,
) -> BTreeMap<VertexId, Key> {
    let mut best: BTreeMap<VertexId, Key> = BTreeMap::new();
    for &(w, id) in g.neighbors(v) {
        if !alive[id] {
            continue;
        }
        let c = cluster[w].expect("alive edges join clustered vertices");
        let key = (weights[id], id);
        best.entry(c)
            .and_modify(|k| {
                if lighter(key, *k) {
                    *k = key
                }
            })
            .or_insert(key);
    }
    best
}

/// Edge set of a `(2t-1)`-spanner of the weighted graph, by cluster growing.
///
/// Phases use the clustering at the start of the phase for every vertex.
/// After `t - 1` phases each vertex keeps its lightest edge into every
/// adjacent remaining cluster. `t = 1` keeps every edge.
pub fn ss_core(g: &UncertainGraph, weights: &[f64], t: usize, seed: u64) -> Result<Vec<EdgeId>> {
    if t == 0 {
        return Err(Error::InvalidParameter("stretch parameter t must be at least 1".into()));
    }
    if weights.len() != g.edge_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} edges",
            weights.len(),
            g.edge_count()
        )));
    }
    let (n, m) = (g.vertex_count(), g.edge_count());
    if t == 1 {
        return Ok((0..m).collect());
    }
    let keep_prob = (n as f64).powf(-1.0 / t as f64);
    let mut r = rng::seeded(seed);
    let mut alive = vec![true; m];
    let mut spanner = vec![false; m];
    let mut cluster: Vec<Option<VertexId>> = (0..n).map(Some).collect();

    for _ in 1..t {
        let mut sampled = vec![false; n];
        let mut centers: Vec<VertexId> = cluster.iter().flatten().copied().collect();
        centers.sort_unstable();
        centers.dedup();
        for c in centers {
            sampled[c] = r.random::<f64>() < keep_prob;
        }
        let mut next = vec![None; n];
        let mut kill: Vec<(VertexId, VertexId)> = Vec::new();
        for v in 0..n {
            let Some(c) = cluster[v] else { continue };
            if sampled[c] {
                next[v] = Some(c);
                continue;
            }
            let links = cluster_links(g, weights, &alive, &cluster, v);
            let nearest = links
                .iter()
                .filter(|(c, _)| sampled[**c])
                .map(|(&c, &k)| (c, k))
                .reduce(|a, b| if lighter(b.1, a.1) { b } else { a });
            match nearest {
                None => {
                    for (&c, &(_, id)) in &links {
                        spanner[id] = true;
                        kill.push((v, c));
                    }
                }
                Some((joined, key)) => {
                    spanner[key.1] = true;
                    kill.push((v, joined));
                    next[v] = Some(joined);
                    for (&c, &k) in &links {
                        if lighter(k, key) {
                            spanner[k.1] = true;
                            kill.push((v, c));
                        }
                    }
                }
            }
        }
        for (v, c) in kill {
            for &(w, id) in g.neighbors(v) {
                if cluster[w] == Some(c) {
                    alive[id] = false;
                }
            }
        }
        cluster = next;
        for (id, e) in g.edges().iter().enumerate() {
            if alive[id] && (cluster[e.u].is_none() || cluster[e.u] == cluster[e.v]) {
                alive[id] = false;
            }
        }
    }

    for v in 0..n {
        if cluster[v].is_none() {
            continue;
        }
        for (_, (_, id)) in cluster_links(g, weights, &alive, &cluster, v) {
            spanner[id] = true;
        }
    }
    Ok((0..m).filter(|&id| spanner[id]).collect())
}

/// Smallest `t ≥ 1` with `t n^{1+1/t} ≤ budget`, else the minimizer of that bound.
pub fn initial_stretch(n: usize, budget: f64) -> usize {
    let size = |t: usize| t as f64 * (n as f64).powf(1.0 + 1.0 / t as f64);
    if let Some(t) = (1..=MAX_STRETCH).find(|&t| size(t) <= budget) {
        return t;
    }
    (1..=MAX_STRETCH)
        .min_by(|&a, &b| size(a).total_cmp(&size(b)).then(a.cmp(&b)))
        .unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsReport {
    pub initial_t: usize,
    pub t: usize,
    /// Spanner that was kept, before trimming and top-up.
    pub spanner: Vec<EdgeId>,
    pub trimmed: usize,
    pub topped_up: usize,
}

pub fn ss_sparsify(g: &UncertainGraph, alpha: f64, seed: u64) -> Result<(UncertainGraph, SsReport)> {
    check_alpha(alpha)?;
    let m = g.edge_count();
    let target = target_edge_count(m, alpha);
    let weights = to_ss_weights(g);
    let initial_t = initial_stretch(g.vertex_count(), alpha * m as f64);

    let mut t = initial_t;
    let mut best_t = t;
    let mut best = ss_core(g, &weights, t, rng::derive(seed, t as u64))?;
    let mut current = best.clone();
    for _ in 0..MAX_STRETCH_STEPS {
        if current.len() <= target {
            break;
        }
        t += 1;
        current = ss_core(g, &weights, t, rng::derive(seed, t as u64))?;
        if current.len() < best.len() {
            best = current.clone();
            best_t = t;
        }
    }
    if current.len() <= target {
        best = current;
        best_t = t;
    }
    let spanner = best.clone();

    let mut chosen = best;
    let mut trimmed = 0;
    if chosen.len() > target {
        // drop the least probable edges, sparing a spanning forest while possible
        let forest = max_spanning_forest(g, &chosen);
        let mut in_forest = vec![false; m];
        forest.iter().for_each(|&id| in_forest[id] = true);
        let mut order = chosen.clone();
        order.sort_by(|&a, &b| {
            in_forest[a]
                .cmp(&in_forest[b])
                .then(g.edge(a).p.total_cmp(&g.edge(b).p))
                .then(b.cmp(&a))
        });
        trimmed = chosen.len() - target;
        let mut drop = vec![false; m];
        order[..trimmed].iter().for_each(|&id| drop[id] = true);
        chosen.retain(|&id| !drop[id]);
    }
    let before = chosen.len();
    let mut taken = vec![false; m];
    chosen.iter().for_each(|&id| taken[id] = true);
    let mut remaining: Vec<EdgeId> = (0..m).filter(|&id| !taken[id]).collect();
    let mut r = rng::seeded(rng::derive(seed, 0x55));
    probability_top_up(g, &mut chosen, &mut remaining, target, &mut r);
    let topped_up = chosen.len() - before;
    chosen.sort_unstable();
    let probs: Vec<f64> = chosen.iter().map(|&id| g.edge(id).p).collect();
    let graph = g.subgraph_with(&chosen, &probs)?;
    Ok((
        graph,
        SsReport {
            initial_t,
            t: best_t,
            spanner,
            trimmed,
            topped_up,
        },
    ))
}
