//! Expectation-maximization sparsifier: alternates edge swaps guided by a
//! vertex heap (E-phase) with GDB probability sweeps (M-phase).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::backbone::BackboneGraph;
use crate::error::{Error, Result};
use crate::gdb::{degree_step, run_sweeps, GdbParams, RuleKind, SparsifierState};
use crate::graph::{DiscrepancyMode, EdgeId, UncertainGraph, VertexId};

#[derive(Debug, Clone, Copy)]
struct Entry {
    key: f64,
    vertex: VertexId,
    version: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // larger |δ| first, then the smaller vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.vertex.cmp(&self.vertex))
            .then_with(|| self.version.cmp(&other.version))
    }
}

/// Max-heap of vertices keyed by `|δ_A(u)|`, with lazy invalidation.
#[derive(Debug, Clone)]
pub struct VertexHeap {
    heap: BinaryHeap<Entry>,
    version: Vec<u64>,
}

impl VertexHeap {
    pub fn new(disc: &[f64]) -> Self {
        let heap = disc
            .iter()
            .enumerate()
            .map(|(vertex, d)| Entry {
                key: d.abs(),
                vertex,
                version: 0,
            })
            .collect();
        Self {
            heap,
            version: vec![0; disc.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.version.len()
    }

    pub fn is_empty(&self) -> bool {
        self.version.is_empty()
    }

    pub fn update(&mut self, u: VertexId, disc: f64) {
        self.version[u] += 1;
        self.heap.push(Entry {
            key: disc.abs(),
            vertex: u,
            version: self.version[u],
        });
        if self.heap.len() > 4 * self.version.len() + 16 {
            let version = &self.version;
            self.heap.retain(|e| e.version == version[e.vertex]);
        }
    }

    /// Vertex of largest `|δ_A|`, ties to the smaller id.
    pub fn top(&mut self) -> Option<VertexId> {
        while let Some(e) = self.heap.peek() {
            if e.version == self.version[e.vertex] {
                return Some(e.vertex);
            }
            self.heap.pop();
        }
        None
    }
}

/// `g = δ²(u)|₀ - δ²(u)|_p + δ²(v)|₀ - δ²(v)|_p` from the excluded-edge discrepancies.
pub fn gain_from(disc_u: f64, disc_v: f64, candidate: f64) -> f64 {
    let du = disc_u - candidate;
    let dv = disc_v - candidate;
    (disc_u * disc_u - du * du) + (disc_v * disc_v - dv * dv)
}

/// `D_1` improvement of inserting the excluded edge `id` at `candidate`.
pub fn gain(state: &SparsifierState<'_>, id: EdgeId, candidate: f64) -> f64 {
    debug_assert!(!state.in_backbone(id), "gain is defined for excluded edges");
    let e = state.graph().edge(id);
    gain_from(state.disc(e.u), state.disc(e.v), candidate)
}

/// Clamped degree-rule probability for an excluded edge.
fn rule_probability(state: &SparsifierState<'_>, id: EdgeId, mode: DiscrepancyMode) -> f64 {
    let e = state.graph().edge(id);
    let stp = degree_step(
        state.disc(e.u),
        state.disc(e.v),
        state.pi(e.u, mode),
        state.pi(e.v, mode),
    );
    stp.clamp(0.0, 1.0)
}

/// Counters from one E-phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EPhaseStats {
    pub examined: usize,
    /// Removals answered by a different edge.
    pub swaps: usize,
}

/// One E-phase over the backbone as it stood on entry, in canonical order.
///
/// Each examined edge is taken out, then the best of: itself at its prior
/// probability, itself at its rule probability, and every excluded edge at the
/// heap-top vertex at its rule probability, goes back in. Equal gains keep the
/// earlier candidate in that order, so the phase never raises `D_1`.
pub fn e_phase(state: &mut SparsifierState<'_>, mode: DiscrepancyMode) -> EPhaseStats {
    let g = state.graph();
    let mut heap = VertexHeap::new(state.vertex_disc());
    let mut stats = EPhaseStats::default();
    for id in state.backbone_edges() {
        let e = g.edge(id);
        let prior = state.remove_edge(id);
        heap.update(e.u, state.disc(e.u));
        heap.update(e.v, state.disc(e.v));
        let top = heap.top().expect("edge endpoints exist");

        let mut best = (id, prior, gain(state, id, prior));
        let mut consider = |cand: EdgeId, p: f64| {
            let gv = gain(state, cand, p);
            if gv > best.2 {
                best = (cand, p, gv);
            }
        };
        consider(id, rule_probability(state, id, mode));
        let mut incident: Vec<EdgeId> = g
            .neighbors(top)
            .iter()
            .map(|&(_, eid)| eid)
            .filter(|&eid| eid != id && !state.in_backbone(eid))
            .collect();
        incident.sort_unstable();
        for eid in incident {
            consider(eid, rule_probability(state, eid, mode));
        }

        let (chosen, p, _) = best;
        state.insert_edge(chosen, p);
        let c = g.edge(chosen);
        heap.update(c.u, state.disc(c.u));
        heap.update(c.v, state.disc(c.v));
        stats.examined += 1;
        if chosen != id {
            stats.swaps += 1;
        }
    }
    state.recompute();
    stats
}

/// Parameters of an EMD run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdParams {
    pub h: f64,
    pub mode: DiscrepancyMode,
    /// Threshold on the per-iteration change of `D_1`; `None` means `1e-6`
    /// times the initial `D_1`. Also passed to each M-phase.
    pub tau: Option<f64>,
    pub max_iters: usize,
    /// Sweep cap of each M-phase.
    pub max_sweeps: usize,
}

impl Default for EmdParams {
    fn default() -> Self {
        Self {
            h: 0.05,
            mode: DiscrepancyMode::Absolute,
            tau: None,
            max_iters: 20,
            max_sweeps: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmdOutcome {
    pub graph: UncertainGraph,
    pub backbone: BackboneGraph,
    pub iterations: usize,
    pub converged: bool,
    /// `D_1` before the first iteration and after each one.
    pub d1_trace: Vec<f64>,
    pub swaps: Vec<usize>,
}

pub fn emd_run(g: &UncertainGraph, backbone: &BackboneGraph, params: &EmdParams) -> Result<EmdOutcome> {
    if params.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be positive".into()));
    }
    let rule = match params.mode {
        DiscrepancyMode::Absolute => RuleKind::DegreeAbsolute,
        DiscrepancyMode::Relative => RuleKind::DegreeRelative,
    };
    let gdb = GdbParams {
        h: params.h,
        rule,
        tau: params.tau,
        max_sweeps: params.max_sweeps,
    };
    gdb.validate()?;
    let mut state = SparsifierState::new(g, backbone)?;
    let initial = state.d1();
    let tau = params.tau.unwrap_or(1e-6 * initial);
    let mut trace = vec![initial];
    let mut swaps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iters {
        iterations += 1;
        let before = state.d1();
        swaps.push(e_phase(&mut state, params.mode).swaps);
        run_sweeps(&mut state, &gdb)?;
        let after = state.d1();
        trace.push(after);
        if (before - after).abs() <= tau {
            converged = true;
            break;
        }
    }
    Ok(EmdOutcome {
        graph: state.to_graph(),
        backbone: state.backbone(),
        iterations,
        converged,
        d1_trace: trace,
        swaps,
    })
}
