//! Entropy, expected degree and cut accounting.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{UncertainGraph, VertexId, VertexSet};
use crate::error::{Error, Result};
use crate::rng;

/// Absolute discrepancy `C(S) - C'(S)` or its ratio to the original cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscrepancyMode {
    Absolute,
    Relative,
}

/// Bernoulli entropy of one edge, in bits, with `0 log 0 = 0`.
pub fn edge_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

pub fn graph_entropy(g: &UncertainGraph) -> f64 {
    g.edges().iter().map(|e| edge_entropy(e.p)).sum()
}

pub fn expected_degree(g: &UncertainGraph, u: VertexId) -> Result<f64> {
    g.check_vertex(u)?;
    Ok(g.neighbors(u).iter().map(|&(_, id)| g.edge(id).p).sum())
}

/// Expected degree of every vertex, accumulated edge by edge.
pub fn expected_degrees(g: &UncertainGraph) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|u| g.neighbors(u).iter().map(|&(_, id)| g.edge(id).p).sum())
        .collect()
}

fn cut_with_mask(g: &UncertainGraph, members: &[VertexId], mask: &[bool]) -> f64 {
    members
        .iter()
        .flat_map(|&u| g.neighbors(u).iter())
        .filter(|&&(w, _)| !mask[w])
        .map(|&(_, id)| g.edge(id).p)
        .sum()
}

/// Sum of probabilities of edges with exactly one endpoint in `s`.
pub fn expected_cut_size(g: &UncertainGraph, s: &VertexSet) -> Result<f64> {
    let mask = s.mask(g.vertex_count())?;
    Ok(cut_with_mask(g, s.members(), &mask))
}

fn check_same_vertices(g: &UncertainGraph, g2: &UncertainGraph) -> Result<()> {
    if g.vertex_count() != g2.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "graphs have {} and {} vertices",
            g.vertex_count(),
            g2.vertex_count()
        )));
    }
    Ok(())
}

pub fn discrepancy(g: &UncertainGraph, g2: &UncertainGraph, s: &VertexSet, mode: DiscrepancyMode) -> Result<f64> {
    check_same_vertices(g, g2)?;
    let original = expected_cut_size(g, s)?;
    let sparse = expected_cut_size(g2, s)?;
    match mode {
        DiscrepancyMode::Absolute => Ok(original - sparse),
        DiscrepancyMode::Relative if original > 0.0 => Ok((original - sparse) / original),
        DiscrepancyMode::Relative => Err(Error::UndefinedRelativeDiscrepancy),
    }
}

/// Per-vertex absolute discrepancy `d_u - d'_u`.
pub fn degree_discrepancies(g: &UncertainGraph, g2: &UncertainGraph) -> Result<Vec<f64>> {
    check_same_vertices(g, g2)?;
    Ok(expected_degrees(g)
        .into_iter()
        .zip(expected_degrees(g2))
        .map(|(a, b)| a - b)
        .collect())
}

/// Mean `|δ_A(S)|` over `n_cuts` independently drawn uniform `k`-subsets.
///
/// Each draw is a uniform k-subset; distinct draws may repeat a subset.
pub fn sampled_k_discrepancy_mae(
    g: &UncertainGraph,
    g2: &UncertainGraph,
    k: usize,
    n_cuts: usize,
    seed: u64,
) -> Result<f64> {
    check_same_vertices(g, g2)?;
    let n = g.vertex_count();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if n_cuts == 0 {
        return Err(Error::InvalidParameter("n_cuts must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut mask = vec![false; n];
    let mut total = 0.0;
    for _ in 0..n_cuts {
        let members: Vec<VertexId> = index::sample(&mut rng, n, k).into_vec();
        for &u in &members {
            mask[u] = true;
        }
        total += (cut_with_mask(g, &members, &mask) - cut_with_mask(g2, &members, &mask)).abs();
        for &u in &members {
            mask[u] = false;
        }
    }
    Ok(total / n_cuts as f64)
}
