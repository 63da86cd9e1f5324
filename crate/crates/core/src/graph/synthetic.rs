//! Synthetic density-sweep graphs: a random spanning tree densified with
//! uniformly random extra pairs.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::UncertainGraph;
use crate::error::{Error, Result};
use crate::rng;

/// Smallest probability a sampler may emit; keeps draws inside `(0, 1]`.
const MIN_PROBABILITY: f64 = 1e-6;

/// Distribution of edge probabilities for generated graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProbSampler {
    Constant { p: f64 },
    Uniform { low: f64, high: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl ProbSampler {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProbSampler::Constant { p } => p > 0.0 && p <= 1.0,
            ProbSampler::Uniform { low, high } => (0.0..=1.0).contains(&low) && low < high && high <= 1.0,
            ProbSampler::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid probability sampler {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let raw = match *self {
            ProbSampler::Constant { p } => p,
            // (low, high]: 1 - U maps [0, 1) onto (0, 1]
            ProbSampler::Uniform { low, high } => low + (high - low) * (1.0 - rng.random::<f64>()),
            ProbSampler::Beta { alpha, beta } => Beta::new(alpha, beta).expect("validated beta parameters").sample(rng),
        };
        raw.clamp(MIN_PROBABILITY, 1.0)
    }
}

/// Edge count `⌈density · n(n-1)/2⌉`, robust to binary rounding of `density`.
pub(crate) fn target_edge_count(n: usize, density: f64) -> usize {
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    ((density * pairs) - 1e-9).ceil().max(0.0) as usize
}

pub fn generate_synthetic(n: usize, target_density: f64, sampler: ProbSampler, seed: u64) -> Result<UncertainGraph> {
    if !(target_density > 0.0 && target_density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target density {target_density} outside (0, 1]"
        )));
    }
    sampler.validate()?;
    let total_pairs = n * n.saturating_sub(1) / 2;
    let m = target_edge_count(n, target_density).min(total_pairs);
    let tree_edges = n.saturating_sub(1);
    if m < tree_edges {
        return Err(Error::DensityBelowConnectivity {
            density: target_density,
            edges: m,
            required: tree_edges,
        });
    }

    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(m);
    let mut taken = HashSet::with_capacity(m);
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        let child = order[i];
        let key = (child.min(parent), child.max(parent));
        taken.insert(key);
        pairs.push(key);
    }

    let extra = m - pairs.len();
    if extra > 0 && 2 * m <= total_pairs {
        while pairs.len() < m {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if taken.insert(key) {
                pairs.push(key);
            }
        }
    } else if extra > 0 {
        let mut missing: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|key| !taken.contains(key))
            .collect();
        let (chosen, _) = missing.partial_shuffle(&mut rng, extra);
        pairs.extend_from_slice(chosen);
    }

    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| (a, b, sampler.sample(&mut rng)))
        .collect();
    UncertainGraph::new(n, edges)
}
