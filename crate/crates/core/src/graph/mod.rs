//! Uncertain graph data model.
//!
//! An [`UncertainGraph`] is an undirected simple graph whose edges exist
//! independently with the attached probability. Edges are stored in canonical
//! `(min, max)` order and sorted, so an edge id doubles as its rank in the
//! canonical lexicographic order used for every deterministic tie-break.

mod io;
mod measures;
mod synthetic;
mod world;

pub use io::{load_graph, load_sparsified, parse_graph, parse_sparsified, write_graph};
pub use measures::{
    degree_discrepancies, discrepancy, edge_entropy, expected_cut_size, expected_degree, expected_degrees,
    graph_entropy, sampled_k_discrepancy_mae, DiscrepancyMode,
};
pub use synthetic::{generate_synthetic, ProbSampler};
pub use world::{exact_query_probability, sample_world, DeterministicWorld, EXACT_EDGE_CAP};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// An undirected edge `u < v` with existence probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub p: f64,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn touches(&self, x: VertexId) -> bool {
        self.u == x || self.v == x
    }
}

/// Accepted probability interval when building a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ProbabilityDomain {
    /// `(0, 1]`, the rule for original uncertain graphs.
    Open,
    /// `[0, 1]`, allowed for sparsified outputs whose edges may be driven to zero.
    Closed,
}

impl ProbabilityDomain {
    fn admits(self, p: f64) -> bool {
        match self {
            ProbabilityDomain::Open => p > 0.0 && p <= 1.0,
            ProbabilityDomain::Closed => (0.0..=1.0).contains(&p),
        }
    }

    fn label(self) -> &'static str {
        match self {
            ProbabilityDomain::Open => "(0, 1]",
            ProbabilityDomain::Closed => "[0, 1]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertainGraph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, EdgeId)>>,
}

impl UncertainGraph {
    /// Builds an original uncertain graph; every probability must lie in `(0, 1]`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>) -> Result<Self> {
        Self::build(n, edges, ProbabilityDomain::Open)
    }

    /// Builds a sparsified graph, where probability `0` is also legal.
    pub fn new_sparsified(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>) -> Result<Self> {
        Self::build(n, edges, ProbabilityDomain::Closed)
    }

    pub(crate) fn build(
        n: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId, f64)>,
        domain: ProbabilityDomain,
    ) -> Result<Self> {
        let mut list = Vec::new();
        for (i, (a, b, p)) in edges.into_iter().enumerate() {
            if a == b {
                return Err(Error::SelfLoop { line: i + 1, vertex: a });
            }
            for x in [a, b] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if !domain.admits(p) {
                return Err(Error::ProbabilityRange {
                    line: i + 1,
                    value: p,
                    range: domain.label(),
                });
            }
            list.push(Edge {
                u: a.min(b),
                v: a.max(b),
                p,
            });
        }
        list.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = list.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::DuplicateEdge { u: w[0].u, v: w[0].v });
        }
        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in list.iter().enumerate() {
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        Ok(Self {
            n,
            edges: list,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Neighbours of `u` with the connecting edge id.
    pub fn neighbors(&self, u: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: VertexId) -> usize {
        self.adjacency[u].len()
    }

    /// Looks up the id of edge `{a, b}` by binary search over canonical order.
    pub fn find_edge(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search_by_key(&key, |e| (e.u, e.v)).ok()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.p).collect()
    }

    pub(crate) fn check_vertex(&self, u: VertexId) -> Result<()> {
        if u < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: u, n: self.n })
        }
    }

    /// Number of connected components of the deterministic structure.
    pub fn component_count(&self) -> usize {
        let mut dsu = DisjointSets::new(self.n);
        for e in &self.edges {
            dsu.union(e.u, e.v);
        }
        dsu.components()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Subgraph on the same vertex set keeping `ids` with replacement probabilities.
    pub fn subgraph_with(&self, ids: &[EdgeId], probs: &[f64]) -> Result<UncertainGraph> {
        if ids.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} edge ids but {} probabilities",
                ids.len(),
                probs.len()
            )));
        }
        UncertainGraph::new_sparsified(
            self.n,
            ids.iter().zip(probs).map(|(&id, &p)| {
                let e = self.edges[id];
                (e.u, e.v, p)
            }),
        )
    }
}

/// A set of vertices `S`, stored sorted and without duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    members: Vec<VertexId>,
}

impl VertexSet {
    pub fn new(members: impl IntoIterator<Item = VertexId>) -> Self {
        let mut members: Vec<_> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        Self { members }
    }

    pub fn members(&self) -> &[VertexId] {
        &self.members
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub(crate) fn mask(&self, n: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; n];
        for &u in &self.members {
            if u >= n {
                return Err(Error::VertexOutOfRange { vertex: u, n });
            }
            mask[u] = true;
        }
        Ok(mask)
    }
}
