//! Gradient-descent probability assignment on a fixed backbone.
//!
//! Each sweep visits the backbone edges in canonical order and moves one
//! probability at a time to the minimizer of the objective along that
//! coordinate, clamped to `[0, 1]`. When the full step would raise the edge's
//! entropy only a fraction `h` of it is taken.
//!
//! Discrepancies are kept as `δ_A(u) = d_u - Σ_{e∋u} p̂_e` over the ORIGINAL
//! incidence, so edges outside the backbone count with `p̂ = 0`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::backbone::BackboneGraph;
use crate::error::{Error, Result};
use crate::graph::{edge_entropy, expected_degrees, DiscrepancyMode, EdgeId, UncertainGraph, VertexId};
use crate::rng;

/// Which update rule a sweep applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    DegreeAbsolute,
    DegreeRelative,
    /// Cuts of cardinality up to `k`, absolute discrepancy.
    CutK(usize),
    /// The `k = n` rule: redistributes the whole missing mass.
    CutAll,
}

impl RuleKind {
    pub fn mode(self) -> DiscrepancyMode {
        match self {
            RuleKind::DegreeRelative => DiscrepancyMode::Relative,
            _ => DiscrepancyMode::Absolute,
        }
    }

    pub fn is_degree_rule(self) -> bool {
        matches!(self, RuleKind::DegreeAbsolute | RuleKind::DegreeRelative)
    }
}

/// `π(u)`: 1 for absolute discrepancy, the original expected degree for
/// relative discrepancy (1 again when that degree is zero).
pub fn pi(expected_degree: f64, mode: DiscrepancyMode) -> f64 {
    match mode {
        DiscrepancyMode::Absolute => 1.0,
        DiscrepancyMode::Relative if expected_degree > 0.0 => expected_degree,
        DiscrepancyMode::Relative => 1.0,
    }
}

/// Optimal coordinate step for edge `(u0, v0)` under the degree rule.
pub fn degree_step(disc_u: f64, disc_v: f64, pi_u: f64, pi_v: f64) -> f64 {
    (pi_v * disc_u + pi_u * disc_v) / (pi_u + pi_v)
}

/// `Σ_{i=0}^{min(k, n)} C(n, i)`, and 0 for negative `k`.
pub fn binom_sum(n: u64, k: i64) -> BigUint {
    if k < 0 {
        return BigUint::zero();
    }
    let top = (k as u64).min(n);
    let mut term = BigUint::from(1u32);
    let mut sum = term.clone();
    for i in 1..=top {
        term = term * (n - i + 1) / i;
        sum += &term;
    }
    sum
}

/// Weights of the general `k`-cut step, reduced exactly before rounding to f64.
///
/// `stp = degree_weight (δ(u0) + δ(v0)) + mass_weight Δ̂(e)` where
/// `degree_weight = C(n-3, k-1)_Σ / (2 C(n-2, k-1)_Σ)` and
/// `mass_weight = 4 C(n-4, k-2)_Σ / (2 C(n-2, k-1)_Σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutCoefficients {
    pub degree_weight: f64,
    pub mass_weight: f64,
}

impl CutCoefficients {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::KOutOfRange { k, n });
        }
        if k == 1 {
            return Ok(Self {
                degree_weight: 0.5,
                mass_weight: 0.0,
            });
        }
        if n < 4 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        let (n, k) = (n as u64, k as i64);
        let deg = BigInt::from(binom_sum(n - 3, k - 1));
        let mass: BigInt = BigInt::from(binom_sum(n - 4, k - 2)) * 4;
        let denom: BigInt = BigInt::from(binom_sum(n - 2, k - 1)) * 2;
        let to_f64 = |num: BigInt| {
            BigRational::new(num, denom.clone())
                .to_f64()
                .expect("ratio of binomial sums is finite")
        };
        Ok(Self {
            degree_weight: to_f64(deg),
            mass_weight: to_f64(mass),
        })
    }

    pub fn step(&self, disc_u: f64, disc_v: f64, delta_hat: f64) -> f64 {
        self.degree_weight * (disc_u + disc_v) + self.mass_weight * delta_hat
    }
}

/// Unclamped optimal step of the `k`-cut rule.
pub fn cut_step(disc_u: f64, disc_v: f64, delta_hat: f64, n: usize, k: usize) -> Result<f64> {
    Ok(CutCoefficients::new(n, k)?.step(disc_u, disc_v, delta_hat))
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Clamped update with the entropy gate: when the full step raises the edge
/// entropy relative to the current value, only `h · stp` is applied.
pub fn apply_update(current: f64, step: f64, h: f64) -> f64 {
    let candidate = clamp01(current + step);
    if edge_entropy(candidate) > edge_entropy(current) {
        clamp01(current + h * step)
    } else {
        candidate
    }
}

/// Working state shared by GDB sweeps and EMD swaps.
#[derive(Debug, Clone)]
pub struct SparsifierState<'g> {
    graph: &'g UncertainGraph,
    expected_degree: Vec<f64>,
    in_backbone: Vec<bool>,
    probs: Vec<f64>,
    vertex_disc: Vec<f64>,
    mass_gap: f64,
}

impl<'g> SparsifierState<'g> {
    /// Backbone edges start at their original probability.
    pub fn new(graph: &'g UncertainGraph, backbone: &BackboneGraph) -> Result<Self> {
        backbone.check_against(graph)?;
        let mut in_backbone = vec![false; graph.edge_count()];
        let mut probs = vec![0.0; graph.edge_count()];
        for &id in backbone.edges() {
            in_backbone[id] = true;
            probs[id] = graph.edge(id).p;
        }
        let mut state = Self {
            graph,
            expected_degree: expected_degrees(graph),
            in_backbone,
            probs,
            vertex_disc: Vec::new(),
            mass_gap: 0.0,
        };
        state.recompute();
        Ok(state)
    }

    pub fn graph(&self) -> &'g UncertainGraph {
        self.graph
    }

    /// Current probability of every original edge; zero outside the backbone.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, id: EdgeId) -> f64 {
        self.probs[id]
    }

    pub fn in_backbone(&self, id: EdgeId) -> bool {
        self.in_backbone[id]
    }

    pub fn vertex_disc(&self) -> &[f64] {
        &self.vertex_disc
    }

    pub fn disc(&self, u: VertexId) -> f64 {
        self.vertex_disc[u]
    }

    pub fn expected_degree(&self, u: VertexId) -> f64 {
        self.expected_degree[u]
    }

    pub fn mass_gap(&self) -> f64 {
        self.mass_gap
    }

    pub fn backbone_edges(&self) -> Vec<EdgeId> {
        (0..self.probs.len()).filter(|&id| self.in_backbone[id]).collect()
    }

    pub fn backbone(&self) -> BackboneGraph {
        BackboneGraph::from_edges(self.graph, self.backbone_edges()).expect("state edges belong to graph")
    }

    pub fn backbone_len(&self) -> usize {
        self.in_backbone.iter().filter(|&&b| b).count()
    }

    /// Rebuilds discrepancies and the mass gap from the probabilities.
    pub fn recompute(&mut self) {
        let (disc, gap) = self.from_scratch();
        self.vertex_disc = disc;
        self.mass_gap = gap;
    }

    /// Discrepancies and mass gap recomputed without touching the state.
    pub fn from_scratch(&self) -> (Vec<f64>, f64) {
        let g = self.graph;
        let disc = (0..g.vertex_count())
            .map(|u| self.expected_degree[u] - g.neighbors(u).iter().map(|&(_, id)| self.probs[id]).sum::<f64>())
            .collect();
        let gap = g.edges().iter().zip(&self.probs).map(|(e, &q)| e.p - q).sum();
        (disc, gap)
    }

    /// Sets `p̂_e`, updating endpoint discrepancies and the mass gap.
    pub fn set_prob(&mut self, id: EdgeId, value: f64) {
        let delta = value - self.probs[id];
        let e = self.graph.edge(id);
        self.vertex_disc[e.u] -= delta;
        self.vertex_disc[e.v] -= delta;
        self.mass_gap -= delta;
        self.probs[id] = value;
    }

    /// Removes `e` from the backbone, returning its previous probability.
    pub fn remove_edge(&mut self, id: EdgeId) -> f64 {
        let old = self.probs[id];
        self.set_prob(id, 0.0);
        self.in_backbone[id] = false;
        old
    }

    pub fn insert_edge(&mut self, id: EdgeId, value: f64) {
        self.in_backbone[id] = true;
        self.set_prob(id, value);
    }

    pub fn pi(&self, u: VertexId, mode: DiscrepancyMode) -> f64 {
        pi(self.expected_degree[u], mode)
    }

    /// `Δ̂(e)`: mass gap over original edges sharing no endpoint with `e`.
    pub fn delta_hat(&self, id: EdgeId) -> f64 {
        let e = self.graph.edge(id);
        self.mass_gap - self.vertex_disc[e.u] - self.vertex_disc[e.v] + (e.p - self.probs[id])
    }

    /// Mass gap of every edge other than `e`, the `k = n` step.
    pub fn ncut_step(&self, id: EdgeId) -> f64 {
        self.mass_gap - (self.graph.edge(id).p - self.probs[id])
    }

    /// `D_1 = Σ_u δ_A(u)^2`.
    pub fn d1(&self) -> f64 {
        self.vertex_disc.iter().map(|d| d * d).sum()
    }

    /// The quantity a rule's coordinate step descends.
    ///
    /// Absolute degree and cut rules track `D_1`; the relative degree rule
    /// minimizes `Σ_u δ_A(u)^2 / π(u)` along each coordinate.
    pub fn objective(&self, rule: RuleKind) -> f64 {
        match rule {
            RuleKind::DegreeRelative => self
                .vertex_disc
                .iter()
                .zip(&self.expected_degree)
                .map(|(d, &deg)| d * d / pi(deg, DiscrepancyMode::Relative))
                .sum(),
            _ => self.d1(),
        }
    }

    /// `δ_A(S) = Σ_{u∈S} δ_A(u) - 2 Σ_{e⊆S} (p_e - p̂_e)`.
    pub fn set_discrepancy(&self, members: &[VertexId], mask: &[bool]) -> f64 {
        let mut total = 0.0;
        let mut inside = 0.0;
        for &u in members {
            total += self.vertex_disc[u];
            for &(w, id) in self.graph.neighbors(u) {
                if mask[w] {
                    inside += self.graph.edge(id).p - self.probs[id];
                }
            }
        }
        // each internal edge was seen from both endpoints
        total - inside
    }

    /// Mean `δ_A(S)^2` over `budget` uniform `k`-subsets: an unbiased estimate
    /// of `Σ_{|S|=k} δ_A(S)^2 / C(n, k)`.
    pub fn sampled_cut_objective(&self, k: usize, budget: usize, seed: u64) -> Result<f64> {
        let n = self.graph.vertex_count();
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        if budget == 0 {
            return Err(Error::InvalidParameter("sample budget must be positive".into()));
        }
        let mut r = rng::seeded(seed);
        let mut mask = vec![false; n];
        let mut acc = 0.0;
        for _ in 0..budget {
            let members = index::sample(&mut r, n, k).into_vec();
            members.iter().for_each(|&u| mask[u] = true);
            let d = self.set_discrepancy(&members, &mask);
            acc += d * d;
            members.iter().for_each(|&u| mask[u] = false);
        }
        Ok(acc / budget as f64)
    }

    /// Sparsified graph over the current backbone (zero probabilities kept).
    pub fn to_graph(&self) -> UncertainGraph {
        let ids = self.backbone_edges();
        let probs: Vec<f64> = ids.iter().map(|&id| self.probs[id]).collect();
        self.graph
            .subgraph_with(&ids, &probs)
            .expect("probabilities stay in [0, 1]")
    }
}

/// Parameters of a GDB run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdbParams {
    /// Entropy parameter in `[0, 1]`.
    pub h: f64,
    pub rule: RuleKind,
    /// Convergence threshold on the per-sweep objective change; `None`
    /// means `1e-6` times the initial objective.
    pub tau: Option<f64>,
    pub max_sweeps: usize,
}

impl Default for GdbParams {
    fn default() -> Self {
        Self {
            h: 0.05,
            rule: RuleKind::DegreeAbsolute,
            tau: None,
            max_sweeps: 100,
        }
    }
}

impl GdbParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.h) {
            return Err(Error::InvalidParameter(format!("h = {} outside [0, 1]", self.h)));
        }
        if let Some(tau) = self.tau {
            if tau.is_nan() || tau <= 0.0 {
                return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
            }
        }
        if let RuleKind::CutK(0) = self.rule {
            return Err(Error::InvalidParameter("cut rule needs k >= 1".into()));
        }
        Ok(())
    }
}

/// Result of [`gdb_run`].
#[derive(Debug, Clone)]
pub struct GdbOutcome {
    pub graph: UncertainGraph,
    pub sweeps: usize,
    pub converged: bool,
    /// `D_1` recomputed from scratch before the first sweep and after each one.
    pub d1_trace: Vec<f64>,
}

/// Update rule prepared for one run.
enum Stepper {
    Degree(DiscrepancyMode),
    Cut(CutCoefficients),
    All,
}

impl Stepper {
    fn new(rule: RuleKind, n: usize) -> Result<Self> {
        Ok(match rule {
            RuleKind::DegreeAbsolute => Stepper::Degree(DiscrepancyMode::Absolute),
            RuleKind::DegreeRelative => Stepper::Degree(DiscrepancyMode::Relative),
            RuleKind::CutK(k) => Stepper::Cut(CutCoefficients::new(n, k)?),
            RuleKind::CutAll => Stepper::All,
        })
    }

    fn step(&self, state: &SparsifierState<'_>, id: EdgeId) -> f64 {
        let e = state.graph.edge(id);
        match self {
            Stepper::Degree(mode) => degree_step(
                state.disc(e.u),
                state.disc(e.v),
                state.pi(e.u, *mode),
                state.pi(e.v, *mode),
            ),
            Stepper::Cut(c) => c.step(state.disc(e.u), state.disc(e.v), state.delta_hat(id)),
            Stepper::All => state.ncut_step(id),
        }
    }
}

/// One pass over the backbone in canonical order.
fn sweep(state: &mut SparsifierState<'_>, stepper: &Stepper, h: f64, edges: &[EdgeId]) {
    for &id in edges {
        let current = state.prob(id);
        let next = apply_update(current, stepper.step(state, id), h);
        if next != current {
            state.set_prob(id, next);
        }
    }
    state.recompute();
}

/// Sweeps `state` until the objective changes by at most `tau` in one sweep.
///
/// Returns `(sweeps, converged, d1_trace)`.
pub(crate) fn run_sweeps(state: &mut SparsifierState<'_>, params: &GdbParams) -> Result<(usize, bool, Vec<f64>)> {
    params.validate()?;
    let stepper = Stepper::new(params.rule, state.graph.vertex_count())?;
    let edges = state.backbone_edges();
    let initial = state.objective(params.rule);
    let tau = params.tau.unwrap_or(1e-6 * initial);
    let mut trace = vec![state.d1()];
    let mut previous = initial;
    for sweep_no in 1..=params.max_sweeps {
        sweep(state, &stepper, params.h, &edges);
        trace.push(state.d1());
        let now = state.objective(params.rule);
        if (previous - now).abs() <= tau {
            return Ok((sweep_no, true, trace));
        }
        previous = now;
    }
    Ok((params.max_sweeps, false, trace))
}

/// Assigns probabilities to the backbone edges; the output has exactly the
/// backbone's edge set, including edges driven to probability zero.
pub fn gdb_run(g: &UncertainGraph, backbone: &BackboneGraph, params: &GdbParams) -> Result<GdbOutcome> {
    let mut state = SparsifierState::new(g, backbone)?;
    let (sweeps, converged, d1_trace) = run_sweeps(&mut state, params)?;
    Ok(GdbOutcome {
        graph: state.to_graph(),
        sweeps,
        converged,
        d1_trace,
    })
}
