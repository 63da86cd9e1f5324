//! Possible worlds: sampling and exact enumeration.

use std::collections::VecDeque;

use rand::Rng;

use super::{EdgeId, UncertainGraph, VertexId};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};

/// Largest edge count accepted by [`exact_query_probability`].
pub const EXACT_EDGE_CAP: usize = 25;

/// A deterministic graph drawn from an uncertain one.
#[derive(Debug, Clone)]
pub struct DeterministicWorld<'g> {
    graph: &'g UncertainGraph,
    present: Vec<bool>,
}

impl<'g> DeterministicWorld<'g> {
    pub fn from_mask(graph: &'g UncertainGraph, present: Vec<bool>) -> Self {
        assert_eq!(present.len(), graph.edge_count());
        Self { graph, present }
    }

    pub fn graph(&self) -> &'g UncertainGraph {
        self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn contains(&self, id: EdgeId) -> bool {
        self.present[id]
    }

    pub fn present_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.present.iter().enumerate().filter(|(_, &b)| b).map(|(id, _)| id)
    }

    pub fn edge_count(&self) -> usize {
        self.present.iter().filter(|&&b| b).count()
    }

    pub fn neighbors(&self, u: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.graph
            .neighbors(u)
            .iter()
            .filter(|&&(_, id)| self.present[id])
            .map(|&(w, _)| w)
    }

    pub fn degree(&self, u: VertexId) -> usize {
        self.neighbors(u).count()
    }

    /// Hop distances from `source`; `None` marks unreachable vertices.
    pub fn bfs(&self, source: VertexId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for w in self.neighbors(u) {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn reachable(&self, s: VertexId, t: VertexId) -> bool {
        self.bfs(s)[t].is_some()
    }

    pub fn is_connected(&self) -> bool {
        let mut dsu = DisjointSets::new(self.vertex_count());
        for id in self.present_edges() {
            let e = self.graph.edge(id);
            dsu.union(e.u, e.v);
        }
        dsu.components() <= 1
    }
}

/// Draws a world: each edge kept independently with its probability.
pub fn sample_world<'g, R: Rng + ?Sized>(g: &'g UncertainGraph, rng: &mut R) -> DeterministicWorld<'g> {
    let present = g.edges().iter().map(|e| rng.random::<f64>() < e.p).collect();
    DeterministicWorld { graph: g, present }
}

/// Exact probability that `predicate` holds, summed over all `2^|E|` worlds.
pub fn exact_query_probability<F>(g: &UncertainGraph, predicate: F) -> Result<f64>
where
    F: Fn(&DeterministicWorld<'_>) -> bool,
{
    let m = g.edge_count();
    if m > EXACT_EDGE_CAP {
        return Err(Error::TooManyEdges {
            edges: m,
            cap: EXACT_EDGE_CAP,
        });
    }
    let probs = g.probabilities();
    let mut world = DeterministicWorld {
        graph: g,
        present: vec![false; m],
    };
    let mut total = 0.0;
    for mask in 0u64..(1u64 << m) {
        let mut weight = 1.0;
        for (i, &p) in probs.iter().enumerate() {
            let on = mask >> i & 1 == 1;
            world.present[i] = on;
            weight *= if on { p } else { 1.0 - p };
        }
        if weight > 0.0 && predicate(&world) {
            total += weight;
        }
    }
    Ok(total)
}
