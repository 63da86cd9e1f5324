//! Backbone initialization: choosing which `round(alpha |E|)` edges survive
//! before any probability is reassigned.
//!
//! The spanning construction takes iterated maximum spanning forests (edge
//! probabilities as weights) until `alpha' |E|` edges are in, then fills up to
//! the target by repeated probability-weighted passes over the remainder.
//! `|E|` always means the original edge count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, UncertainGraph};
use crate::rng;

/// Full passes over the remaining edges before the top-up gives up on
/// sampling and admits the most probable edges deterministically.
pub const MAX_TOP_UP_PASSES: usize = 100;

/// Number of iterated forests counted by [`default_alpha_prime`].
pub const DEFAULT_FOREST_ROUNDS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackboneSource {
    Spanning,
    Random,
    Explicit,
}

/// Unweighted edge subset of an uncertain graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackboneGraph {
    vertex_count: usize,
    edges: Vec<EdgeId>,
    source: BackboneSource,
}

impl BackboneGraph {
    /// Wraps an explicit edge selection; ids must be distinct edges of `g`.
    pub fn from_edges(g: &UncertainGraph, mut edges: Vec<EdgeId>) -> Result<Self> {
        edges.sort_unstable();
        if let Some(&bad) = edges.iter().find(|&&id| id >= g.edge_count()) {
            return Err(Error::InvalidBackbone(format!(
                "edge id {bad} not in graph with {} edges",
                g.edge_count()
            )));
        }
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidBackbone("repeated edge id".into()));
        }
        Ok(Self {
            vertex_count: g.vertex_count(),
            edges,
            source: BackboneSource::Explicit,
        })
    }

    /// Backbone containing every edge of `g`.
    pub fn full(g: &UncertainGraph) -> Self {
        Self {
            vertex_count: g.vertex_count(),
            edges: (0..g.edge_count()).collect(),
            source: BackboneSource::Explicit,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Edge ids in ascending (canonical) order.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn source(&self) -> BackboneSource {
        self.source
    }

    pub(crate) fn check_against(&self, g: &UncertainGraph) -> Result<()> {
        if self.vertex_count != g.vertex_count() {
            return Err(Error::InvalidBackbone(format!(
                "backbone has {} vertices, graph has {}",
                self.vertex_count,
                g.vertex_count()
            )));
        }
        if self.edges.last().is_some_and(|&id| id >= g.edge_count()) {
            return Err(Error::InvalidBackbone("edge id outside graph".into()));
        }
        Ok(())
    }

    pub fn is_connected(&self, g: &UncertainGraph) -> bool {
        let mut dsu = DisjointSets::new(self.vertex_count);
        for &id in &self.edges {
            let e = g.edge(id);
            dsu.union(e.u, e.v);
        }
        dsu.components() <= 1
    }
}

/// `round(alpha |E|)` with ties to even.
pub fn target_edge_count(edge_count: usize, alpha: f64) -> usize {
    (alpha * edge_count as f64).round_ties_even() as usize
}

/// Kruskal maximum-weight spanning forest over `available`, weights = `p`.
///
/// Edges are scanned by descending probability, ties in canonical order.
pub fn max_spanning_forest(g: &UncertainGraph, available: &[EdgeId]) -> Vec<EdgeId> {
    let mut order = available.to_vec();
    order.sort_by(|&a, &b| g.edge(b).p.total_cmp(&g.edge(a).p).then(a.cmp(&b)));
    let mut dsu = DisjointSets::new(g.vertex_count());
    order
        .into_iter()
        .filter(|&id| {
            let e = g.edge(id);
            dsu.union(e.u, e.v)
        })
        .collect()
}

/// Up to `rounds` edge-disjoint maximum spanning forests, each computed on
/// what the previous ones left over.
pub fn iterated_forests(g: &UncertainGraph, rounds: usize) -> Vec<Vec<EdgeId>> {
    let mut remaining: Vec<EdgeId> = (0..g.edge_count()).collect();
    let mut forests = Vec::new();
    for _ in 0..rounds {
        if remaining.is_empty() {
            break;
        }
        let forest = max_spanning_forest(g, &remaining);
        remove_all(&mut remaining, &forest);
        forests.push(forest);
    }
    forests
}

fn remove_all(remaining: &mut Vec<EdgeId>, taken: &[EdgeId]) {
    let mut taken = taken.to_vec();
    taken.sort_unstable();
    remaining.retain(|id| taken.binary_search(id).is_err());
}

/// `min(0.5 alpha, |first six forests| / |E|)`.
pub fn default_alpha_prime(g: &UncertainGraph, alpha: f64) -> f64 {
    if g.edge_count() == 0 {
        return 0.0;
    }
    let covered: usize = iterated_forests(g, DEFAULT_FOREST_ROUNDS).iter().map(Vec::len).sum();
    (0.5 * alpha).min(covered as f64 / g.edge_count() as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1]")))
    }
}

/// Fails when `alpha |E|` is below the size of a spanning forest.
pub fn check_connectivity_floor(g: &UncertainGraph, alpha: f64) -> Result<()> {
    let required = g.vertex_count() - g.component_count();
    let kept = alpha * g.edge_count() as f64;
    if kept + 1e-9 < required as f64 {
        return Err(Error::AlphaBelowConnectivityFloor {
            alpha,
            kept: target_edge_count(g.edge_count(), alpha),
            required,
            floor: required as f64 / g.edge_count().max(1) as f64,
        });
    }
    Ok(())
}

/// Fills `chosen` up to `target` edges by repeated passes over `remaining`,
/// admitting each edge with its probability.
pub(crate) fn probability_top_up<R: Rng + ?Sized>(
    g: &UncertainGraph,
    chosen: &mut Vec<EdgeId>,
    remaining: &mut Vec<EdgeId>,
    target: usize,
    rng: &mut R,
) {
    let mut passes = 0;
    while chosen.len() < target && !remaining.is_empty() {
        if passes == MAX_TOP_UP_PASSES {
            let mut order = remaining.clone();
            order.sort_by(|&a, &b| g.edge(b).p.total_cmp(&g.edge(a).p).then(a.cmp(&b)));
            let need = target - chosen.len();
            chosen.extend_from_slice(&order[..need.min(order.len())]);
            remove_all(remaining, &order[..need.min(order.len())]);
            break;
        }
        let mut admitted = Vec::new();
        for &id in remaining.iter() {
            if chosen.len() + admitted.len() == target {
                break;
            }
            if rng.random::<f64>() < g.edge(id).p {
                admitted.push(id);
            }
        }
        chosen.extend_from_slice(&admitted);
        remove_all(remaining, &admitted);
        passes += 1;
    }
}

/// Spanning-forest backbone with probability-weighted top-up.
pub fn build_backbone(g: &UncertainGraph, alpha: f64, alpha_prime: f64, seed: u64) -> Result<BackboneGraph> {
    check_alpha(alpha)?;
    if !(0.0..=alpha + 1e-12).contains(&alpha_prime) {
        return Err(Error::InvalidParameter(format!(
            "alpha' = {alpha_prime} must lie in [0, alpha = {alpha}]"
        )));
    }
    check_connectivity_floor(g, alpha)?;
    let m = g.edge_count();
    let target = target_edge_count(m, alpha);
    let spanning_goal = alpha_prime * m as f64;

    let mut remaining: Vec<EdgeId> = (0..m).collect();
    let mut chosen: Vec<EdgeId> = Vec::with_capacity(target);
    loop {
        let mut forest = max_spanning_forest(g, &remaining);
        if forest.is_empty() {
            break;
        }
        // the final forest is cut short in Kruskal order if it would overshoot
        forest.truncate(target - chosen.len());
        remove_all(&mut remaining, &forest);
        chosen.extend_from_slice(&forest);
        if chosen.len() as f64 >= spanning_goal || chosen.len() == target {
            break;
        }
    }

    let mut rng = rng::seeded(seed);
    probability_top_up(g, &mut chosen, &mut remaining, target, &mut rng);
    chosen.sort_unstable();
    Ok(BackboneGraph {
        vertex_count: g.vertex_count(),
        edges: chosen,
        source: BackboneSource::Spanning,
    })
}

/// Backbone built purely by probability-weighted passes; may be disconnected.
pub fn random_backbone(g: &UncertainGraph, alpha: f64, seed: u64) -> Result<BackboneGraph> {
    check_alpha(alpha)?;
    let target = target_edge_count(g.edge_count(), alpha);
    let mut remaining: Vec<EdgeId> = (0..g.edge_count()).collect();
    let mut chosen = Vec::with_capacity(target);
    let mut rng = rng::seeded(seed);
    probability_top_up(g, &mut chosen, &mut remaining, target, &mut rng);
    chosen.sort_unstable();
    Ok(BackboneGraph {
        vertex_count: g.vertex_count(),
        edges: chosen,
        source: BackboneSource::Random,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, ProbSampler};

    fn ids_to_pairs(g: &UncertainGraph, ids: &[EdgeId]) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = ids.iter().map(|&i| (g.edge(i).u, g.edge(i).v)).collect();
        v.sort();
        v
    }

    #[test]
    fn forest_of_a_tree_is_the_tree() {
        let g = UncertainGraph::new(4, [(0, 1, 0.2), (1, 2, 0.9), (1, 3, 0.4)]).unwrap();
        let f = max_spanning_forest(&g, &[0, 1, 2]);
        assert_eq!(ids_to_pairs(&g, &f), vec![(0, 1), (1, 2), (1, 3)]);
    }

    #[test]
    fn forest_of_triangle_keeps_heaviest() {
        let g = UncertainGraph::new(3, [(0, 1, 0.9), (1, 2, 0.5), (0, 2, 0.1)]).unwrap();
        let f = max_spanning_forest(&g, &[0, 1, 2]);
        let ps: Vec<f64> = f.iter().map(|&i| g.edge(i).p).collect();
        assert_eq!(ps, vec![0.9, 0.5]);
    }

    #[test]
    fn equal_cycle_tie_break_is_lexicographic() {
        // 4-cycle 0-1-2-3-0; canonical order (0,1) (0,3) (1,2) (2,3).
        let g = UncertainGraph::new(4, [(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (3, 0, 0.5)]).unwrap();
        let f = max_spanning_forest(&g, &[0, 1, 2, 3]);
        assert_eq!(ids_to_pairs(&g, &f), vec![(0, 1), (0, 3), (1, 2)]);
    }

    #[test]
    fn default_alpha_prime_examples() {
        let g = generate_synthetic(100, 1.0, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 3).unwrap();
        assert!((default_alpha_prime(&g, 0.5) - 594.0 / 4950.0).abs() < 1e-15);

        let tree = UncertainGraph::new(5, [(0, 1, 0.3), (1, 2, 0.4), (2, 3, 0.5), (3, 4, 0.6)]).unwrap();
        assert!((default_alpha_prime(&tree, 0.9) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn iterated_forests_are_disjoint() {
        let g = generate_synthetic(30, 0.5, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 8).unwrap();
        let forests = iterated_forests(&g, 6);
        let mut all: Vec<EdgeId> = forests.concat();
        let len = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), len);
        assert_eq!(forests[0].len(), 29);
    }

    #[test]
    fn minimal_alpha_gives_one_spanning_tree() {
        let g = generate_synthetic(40, 0.3, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 5).unwrap();
        let alpha = 39.0 / g.edge_count() as f64;
        let b = build_backbone(&g, alpha, 0.5 * alpha, 1).unwrap();
        assert_eq!(b.len(), 39);
        let mst = max_spanning_forest(&g, &(0..g.edge_count()).collect::<Vec<_>>());
        let mut mst_sorted = mst.clone();
        mst_sorted.sort_unstable();
        assert_eq!(b.edges(), &mst_sorted[..]);
    }

    #[test]
    fn full_alpha_keeps_everything() {
        let g = generate_synthetic(20, 0.4, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 6).unwrap();
        let b = build_backbone(&g, 1.0, 0.5, 2).unwrap();
        assert_eq!(b.len(), g.edge_count());
        let r = random_backbone(&g, 1.0, 2).unwrap();
        assert_eq!(r.len(), g.edge_count());
    }

    #[test]
    fn connectivity_floor_and_alpha_prime_checked() {
        let g = generate_synthetic(40, 0.3, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 5).unwrap();
        assert!(matches!(
            build_backbone(&g, 0.01, 0.005, 0),
            Err(Error::AlphaBelowConnectivityFloor { .. })
        ));
        assert!(build_backbone(&g, 0.3, 0.4, 0).is_err());
    }

    #[test]
    fn spanning_backbone_postconditions() {
        let g = generate_synthetic(50, 0.2, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 13).unwrap();
        for seed in 0..5 {
            let ap = default_alpha_prime(&g, 0.3);
            let b = build_backbone(&g, 0.3, ap, seed).unwrap();
            assert_eq!(b.len(), target_edge_count(g.edge_count(), 0.3));
            assert!(b.is_connected(&g));
        }
    }

    #[test]
    fn tiny_probabilities_fall_back_to_deterministic_admission() {
        let g = UncertainGraph::new(4, [(0, 1, 1e-6), (1, 2, 2e-6), (2, 3, 3e-6), (0, 3, 4e-6)]).unwrap();
        let b = random_backbone(&g, 0.5, 1).unwrap();
        assert_eq!(ids_to_pairs(&g, b.edges()), vec![(0, 3), (2, 3)]);
    }

    #[test]
    fn random_backbone_is_seeded() {
        let g = generate_synthetic(30, 0.3, ProbSampler::Constant { p: 0.3 }, 1).unwrap();
        let a = random_backbone(&g, 0.4, 77).unwrap();
        assert_eq!(a, random_backbone(&g, 0.4, 77).unwrap());
        assert_eq!(a.len(), target_edge_count(g.edge_count(), 0.4));
    }

    #[test]
    fn round_half_to_even() {
        assert_eq!(target_edge_count(5, 0.5), 2);
        assert_eq!(target_edge_count(7, 0.5), 4);
    }
}
