//! Exact probability assignment on a fixed backbone by linear programming:
//! maximize `Σ p'` subject to `A_b p' ≤ d` and `0 ≤ p' ≤ 1`, where `A_b` is
//! the vertex/edge incidence matrix of the backbone and `d` the original
//! expected degrees.
//!
//! Solved with a dense bounded-variable primal simplex using Bland's rule.
//! The origin is feasible, so the slack basis starts the search directly.

use crate::backbone::BackboneGraph;
use crate::error::{Error, Result};
use crate::graph::{expected_degrees, EdgeId, UncertainGraph};

/// Backbones larger than this are refused.
pub const LP_EDGE_CAP: usize = 2000;

const EPS: f64 = 1e-10;

/// Constraint system `A_b p' ≤ d`.
#[derive(Debug, Clone)]
pub struct IncidenceSystem {
    /// Endpoints of each column (backbone edge).
    pub columns: Vec<(usize, usize)>,
    pub edge_ids: Vec<EdgeId>,
    /// Expected degree of each row (vertex) in the original graph.
    pub target: Vec<f64>,
}

impl IncidenceSystem {
    pub fn new(g: &UncertainGraph, backbone: &BackboneGraph) -> Result<Self> {
        backbone.check_against(g)?;
        Ok(Self {
            columns: backbone
                .edges()
                .iter()
                .map(|&id| (g.edge(id).u, g.edge(id).v))
                .collect(),
            edge_ids: backbone.edges().to_vec(),
            target: expected_degrees(g),
        })
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// `A_b x` for a column vector `x`.
    pub fn load(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        for (&(u, v), &xi) in self.columns.iter().zip(x) {
            out[u] += xi;
            out[v] += xi;
        }
        out
    }
}

/// Optimal assignment and the dual prices that certify it.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// One probability per backbone edge, in backbone order.
    pub probs: Vec<f64>,
    pub objective: f64,
    /// Row prices `y ≥ 0`.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic(usize),
    Lower,
    Upper,
}

struct Tableau {
    rows: usize,
    width: usize,
    /// `B^{-1} [A | I]`, row-major.
    body: Vec<f64>,
    /// Reduced costs `c_j - c_B B^{-1} a_j`.
    reduced: Vec<f64>,
    /// Value of the basic variable of each row.
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
}

impl Tableau {
    fn new(sys: &IncidenceSystem) -> Self {
        let (rows, cols) = (sys.rows(), sys.cols());
        let width = cols + rows;
        let mut body = vec![0.0; rows * width];
        for (j, &(u, v)) in sys.columns.iter().enumerate() {
            body[u * width + j] = 1.0;
            body[v * width + j] = 1.0;
        }
        for i in 0..rows {
            body[i * width + cols + i] = 1.0;
        }
        let mut reduced = vec![0.0; width];
        reduced[..cols].fill(1.0);
        let mut status = vec![Status::Lower; width];
        for i in 0..rows {
            status[cols + i] = Status::Basic(i);
        }
        let mut upper = vec![1.0; width];
        upper[cols..].fill(f64::INFINITY);
        Self {
            rows,
            width,
            body,
            reduced,
            beta: sys.target.clone(),
            basis: (cols..width).collect(),
            status,
            upper,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.body[i * self.width + j]
    }

    fn entering(&self) -> Option<(usize, f64)> {
        (0..self.width).find_map(|j| match self.status[j] {
            Status::Lower if self.reduced[j] > EPS => Some((j, 1.0)),
            Status::Upper if self.reduced[j] < -EPS => Some((j, -1.0)),
            _ => None,
        })
    }

    /// Returns false when the entering variable just flips bounds.
    fn step(&mut self, j: usize, sigma: f64) -> bool {
        let mut theta = self.upper[j];
        let mut leave: Option<(usize, Status)> = None;
        for i in 0..self.rows {
            let a = sigma * self.at(i, j);
            let b = self.basis[i];
            let (limit, bound) = if a > EPS {
                (self.beta[i] / a, Status::Lower)
            } else if a < -EPS && self.upper[b].is_finite() {
                ((self.upper[b] - self.beta[i]) / -a, Status::Upper)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            let better = match leave {
                _ if limit < theta - EPS => true,
                Some((r, _)) if limit <= theta + EPS => b < self.basis[r],
                None if limit <= theta + EPS => b < j,
                _ => false,
            };
            if better {
                theta = limit;
                leave = Some((i, bound));
            }
        }
        for i in 0..self.rows {
            self.beta[i] -= sigma * theta * self.at(i, j);
        }
        let Some((r, bound)) = leave else {
            self.status[j] = if sigma > 0.0 { Status::Upper } else { Status::Lower };
            return false;
        };
        let entering_value = if sigma > 0.0 { theta } else { self.upper[j] - theta };
        let old = self.basis[r];
        self.status[old] = bound;
        self.basis[r] = j;
        self.status[j] = Status::Basic(r);
        self.beta[r] = entering_value;
        self.pivot(r, j);
        true
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.at(r, j);
        for k in 0..w {
            self.body[r * w + k] /= p;
        }
        let pivot_row: Vec<f64> = self.body[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, j);
            if f != 0.0 {
                for (x, &pr) in self.body[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                self.body[i * w + j] = 0.0;
            }
        }
        let f = self.reduced[j];
        for (x, &pr) in self.reduced.iter_mut().zip(&pivot_row) {
            *x -= f * pr;
        }
        self.reduced[j] = 0.0;
    }

    fn values(&self) -> Vec<f64> {
        (0..self.width)
            .map(|j| match self.status[j] {
                Status::Basic(i) => self.beta[i],
                Status::Lower => 0.0,
                Status::Upper => self.upper[j],
            })
            .collect()
    }
}

/// Solves the system directly; `pivot_cap` bounds simplex pivots and flips.
pub fn solve_system(sys: &IncidenceSystem, pivot_cap: usize) -> Result<LpSolution> {
    if sys.target.iter().any(|&d| d < 0.0) {
        return Err(Error::InvalidParameter("negative expected degree".into()));
    }
    let mut t = Tableau::new(sys);
    let mut steps = 0;
    let mut pivots = 0;
    while let Some((j, sigma)) = t.entering() {
        if steps == pivot_cap {
            return Err(Error::IterationCap(pivot_cap));
        }
        steps += 1;
        if t.step(j, sigma) {
            pivots += 1;
        }
    }
    let cols = sys.cols();
    let probs: Vec<f64> = t.values()[..cols].iter().map(|x| x.clamp(0.0, 1.0)).collect();
    // reduced cost of slack i is -y_i
    let duals = (0..sys.rows()).map(|i| (-t.reduced[cols + i]).max(0.0)).collect();
    Ok(LpSolution {
        objective: probs.iter().sum(),
        probs,
        duals,
        pivots,
    })
}

fn default_pivot_cap(sys: &IncidenceSystem) -> usize {
    50 * (sys.rows() + sys.cols()) + 1000
}

/// Maximizer of `Σ p'` over the backbone; one probability per backbone edge.
pub fn solve_optimal_assignment(g: &UncertainGraph, backbone: &BackboneGraph) -> Result<LpSolution> {
    if backbone.len() > LP_EDGE_CAP {
        return Err(Error::SizeCap {
            edges: backbone.len(),
            cap: LP_EDGE_CAP,
        });
    }
    let sys = IncidenceSystem::new(g, backbone)?;
    solve_system(&sys, default_pivot_cap(&sys))
}

/// Sparsified graph carrying the optimal assignment.
pub fn lp_sparsify(g: &UncertainGraph, backbone: &BackboneGraph) -> Result<UncertainGraph> {
    let sol = solve_optimal_assignment(g, backbone)?;
    g.subgraph_with(backbone.edges(), &sol.probs)
}

/// Residuals proving (or refuting) optimality of a primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest violation of `A_b x ≤ d` or `0 ≤ x ≤ 1`.
    pub primal_violation: f64,
    /// Largest negative dual price.
    pub dual_violation: f64,
    /// `d·y + Σ_j max(0, 1 - y_u - y_v) - Σ x`, never negative for a feasible pair.
    pub duality_gap: f64,
    /// Largest complementary-slackness product.
    pub slackness: f64,
}

impl Certificate {
    pub fn max_residual(&self) -> f64 {
        self.primal_violation
            .max(self.dual_violation)
            .max(self.duality_gap.abs())
            .max(self.slackness)
    }
}

pub fn certificate(sys: &IncidenceSystem, x: &[f64], y: &[f64]) -> Certificate {
    let load = sys.load(x);
    let mut primal: f64 = 0.0;
    for (l, d) in load.iter().zip(&sys.target) {
        primal = primal.max(l - d);
    }
    for &xi in x {
        primal = primal.max(-xi).max(xi - 1.0);
    }
    let dual = y.iter().fold(0.0f64, |m, &yi| m.max(-yi));
    let mut dual_obj: f64 = sys.target.iter().zip(y).map(|(d, yi)| d * yi).sum();
    let mut slack: f64 = 0.0;
    for (&(u, v), &xi) in sys.columns.iter().zip(x) {
        let r = 1.0 - y[u] - y[v];
        let z = r.max(0.0);
        dual_obj += z;
        // x_j > 0 needs r_j ≥ 0; x_j < 1 needs r_j ≤ 0
        slack = slack.max(xi * (-r).max(0.0)).max((1.0 - xi) * z);
    }
    for ((l, d), &yi) in load.iter().zip(&sys.target).zip(y) {
        slack = slack.max(yi * (d - l).max(0.0));
    }
    Certificate {
        primal_violation: primal,
        dual_violation: dual,
        duality_gap: dual_obj - x.iter().sum::<f64>(),
        slackness: slack,
    }
}

/// Mean `|δ_A(u)|` over all vertices when the backbone carries `probs`.
pub fn lp_mae(g: &UncertainGraph, backbone: &BackboneGraph, probs: &[f64]) -> Result<f64> {
    backbone.check_against(g)?;
    if probs.len() != backbone.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for {} backbone edges",
            probs.len(),
            backbone.len()
        )));
    }
    let n = g.vertex_count();
    if n == 0 {
        return Ok(0.0);
    }
    let mut disc = expected_degrees(g);
    for (&id, &p) in backbone.edges().iter().zip(probs) {
        let e = g.edge(id);
        disc[e.u] -= p;
        disc[e.v] -= p;
    }
    Ok(disc.iter().map(|d| d.abs()).sum::<f64>() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::{build_backbone, default_alpha_prime};
    use crate::graph::{degree_discrepancies, generate_synthetic, ProbSampler};

    #[test]
    fn full_backbone_recovers_original() {
        let g = generate_synthetic(15, 0.4, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 3).unwrap();
        let bb = BackboneGraph::full(&g);
        let sol = solve_optimal_assignment(&g, &bb).unwrap();
        let total: f64 = g.probabilities().iter().sum();
        assert!((sol.objective - total).abs() < 1e-7);
        assert!(lp_mae(&g, &bb, &sol.probs).unwrap() < 1e-7);
    }

    #[test]
    fn single_edge_binds_smaller_side() {
        // d_0 = 0.4, d_1 = 0.9 with the (1,2) edge absent from the backbone
        let g = UncertainGraph::new(3, [(0, 1, 0.4), (1, 2, 0.5)]).unwrap();
        let bb = BackboneGraph::from_edges(&g, vec![0]).unwrap();
        let sol = solve_optimal_assignment(&g, &bb).unwrap();
        assert!((sol.probs[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn certificate_holds_on_random_instances() {
        for seed in 0..15 {
            let g = generate_synthetic(20, 0.5, ProbSampler::Uniform { low: 0.0, high: 1.0 }, seed).unwrap();
            let bb = build_backbone(&g, 0.3, default_alpha_prime(&g, 0.3), seed).unwrap();
            let sys = IncidenceSystem::new(&g, &bb).unwrap();
            let sol = solve_optimal_assignment(&g, &bb).unwrap();
            let cert = certificate(&sys, &sol.probs, &sol.duals);
            assert!(cert.max_residual() < 1e-7, "{cert:?}");
        }
    }

    #[test]
    fn certificate_rejects_suboptimal_points() {
        let g = UncertainGraph::new(3, [(0, 1, 0.4), (1, 2, 0.5)]).unwrap();
        let bb = BackboneGraph::full(&g);
        let sys = IncidenceSystem::new(&g, &bb).unwrap();
        let cert = certificate(&sys, &[0.2, 0.5], &[1.0, 0.0, 0.0]);
        assert!(cert.max_residual() > 1e-3);
    }

    #[test]
    fn lp_mae_cases() {
        let g = UncertainGraph::new(3, [(0, 1, 0.4), (1, 2, 0.5)]).unwrap();
        let bb = BackboneGraph::from_edges(&g, vec![0]).unwrap();
        // vertex 2 has no backbone edge: contributes d_2 = 0.5
        let mae = lp_mae(&g, &bb, &[0.4]).unwrap();
        assert!((mae - 0.5 / 3.0 - 0.5 / 3.0).abs() < 1e-15);
        let g2 = g.subgraph_with(bb.edges(), &[0.4]).unwrap();
        let direct: f64 = degree_discrepancies(&g, &g2)
            .unwrap()
            .iter()
            .map(|d| d.abs())
            .sum::<f64>()
            / 3.0;
        assert!((mae - direct).abs() < 1e-15);
        assert!(lp_mae(&g, &bb, &[0.4, 0.1]).is_err());
    }

    #[test]
    fn refuses_oversized_backbones() {
        let edges: Vec<_> = (0..LP_EDGE_CAP + 1).map(|i| (i, i + 1, 0.5)).collect();
        let g = UncertainGraph::new(LP_EDGE_CAP + 2, edges).unwrap();
        assert!(matches!(
            solve_optimal_assignment(&g, &BackboneGraph::full(&g)),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn pivot_cap_is_enforced() {
        let g = generate_synthetic(20, 0.5, ProbSampler::Uniform { low: 0.0, high: 1.0 }, 1).unwrap();
        let bb = build_backbone(&g, 0.3, default_alpha_prime(&g, 0.3), 1).unwrap();
        let sys = IncidenceSystem::new(&g, &bb).unwrap();
        assert!(matches!(solve_system(&sys, 1), Err(Error::IterationCap(1))));
    }
}
