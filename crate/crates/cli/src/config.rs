//! Run configuration shared by `sparsify` and `compare`, and the method dispatch.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use usparse::backbone::{build_backbone, default_alpha_prime, random_backbone, BackboneGraph};
use usparse::benchmarks::{ni_sparsify, ss_sparsify};
use usparse::emd::{emd_run, EmdParams};
use usparse::gdb::{gdb_run, GdbParams, RuleKind};
use usparse::lp::solve_optimal_assignment;
use usparse::{DiscrepancyMode, UncertainGraph};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gdb,
    Emd,
    Lp,
    Ni,
    Ss,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Gdb => "gdb",
            Method::Emd => "emd",
            Method::Lp => "lp",
            Method::Ni => "ni",
            Method::Ss => "ss",
        }
    }

    fn uses_backbone(self) -> bool {
        matches!(self, Method::Gdb | Method::Emd | Method::Lp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackboneKind {
    Spanning,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Abs,
    Rel,
}

impl From<ModeArg> for DiscrepancyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Abs => DiscrepancyMode::Absolute,
            ModeArg::Rel => DiscrepancyMode::Relative,
        }
    }
}

/// Cut cardinality of the objective: an integer or every cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutOrder {
    Upto(usize),
    All,
}

impl FromStr for CutOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(CutOrder::All);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(CutOrder::Upto(k)),
            _ => Err(format!("expected a positive integer or 'all', got '{s}'")),
        }
    }
}

impl fmt::Display for CutOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutOrder::Upto(k) => write!(f, "{k}"),
            CutOrder::All => f.write_str("all"),
        }
    }
}

impl Serialize for CutOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CutOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Every parameter of one sparsification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub method: Method,
    pub alpha: f64,
    pub alpha_prime: Option<f64>,
    pub backbone: BackboneKind,
    pub mode: ModeArg,
    pub k: CutOrder,
    pub h: f64,
    pub tau: Option<f64>,
    pub max_sweeps: usize,
    pub max_iters: usize,
    pub theta: Option<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

pub const DEFAULT_THETA: f64 = 1.1;

impl RunConfig {
    /// Rejects parameter combinations a method does not support.
    pub fn validate(&self) -> CliResult<()> {
        if self.theta.is_some() && self.method != Method::Ni {
            return Err(CliError::usage("--theta applies only to method ni"));
        }
        if self.k != CutOrder::Upto(1) {
            match self.method {
                Method::Emd => return Err(CliError::usage("method emd supports only k = 1")),
                Method::Gdb if self.mode == ModeArg::Rel => {
                    return Err(CliError::usage("cut rules with k > 1 use absolute discrepancy only"))
                }
                Method::Gdb => {}
                _ => {
                    return Err(CliError::usage(format!(
                        "-k has no effect for method {}",
                        self.method.label()
                    )))
                }
            }
        }
        if self.alpha_prime.is_some() && !self.method.uses_backbone() {
            return Err(CliError::usage(format!(
                "--alpha-prime has no effect for method {}",
                self.method.label()
            )));
        }
        Ok(())
    }

    fn rule(&self) -> RuleKind {
        match (self.k, self.mode) {
            (CutOrder::All, _) => RuleKind::CutAll,
            (CutOrder::Upto(1), ModeArg::Abs) => RuleKind::DegreeAbsolute,
            (CutOrder::Upto(1), ModeArg::Rel) => RuleKind::DegreeRelative,
            (CutOrder::Upto(k), _) => RuleKind::CutK(k),
        }
    }

    fn backbone(&self, g: &UncertainGraph) -> CliResult<BackboneGraph> {
        Ok(match self.backbone {
            BackboneKind::Spanning => {
                let ap = self.alpha_prime.unwrap_or_else(|| default_alpha_prime(g, self.alpha));
                build_backbone(g, self.alpha, ap, self.seed)?
            }
            BackboneKind::Random => random_backbone(g, self.alpha, self.seed)?,
        })
    }

    /// Runs the configured method; returns the sparsified graph and a
    /// method-specific report.
    pub fn run(&self, g: &UncertainGraph) -> CliResult<(UncertainGraph, Value)> {
        self.validate()?;
        match self.method {
            Method::Gdb => {
                let bb = self.backbone(g)?;
                let params = GdbParams {
                    h: self.h,
                    rule: self.rule(),
                    tau: self.tau,
                    max_sweeps: self.max_sweeps,
                };
                let out = gdb_run(g, &bb, &params)?;
                let report = json!({
                    "backbone_edges": bb.len(),
                    "sweeps": out.sweeps,
                    "converged": out.converged,
                    "d1_initial": out.d1_trace.first(),
                    "d1_final": out.d1_trace.last(),
                });
                Ok((out.graph, report))
            }
            Method::Emd => {
                let bb = self.backbone(g)?;
                let params = EmdParams {
                    h: self.h,
                    mode: self.mode.into(),
                    tau: self.tau,
                    max_iters: self.max_iters,
                    max_sweeps: self.max_sweeps,
                };
                let out = emd_run(g, &bb, &params)?;
                let report = json!({
                    "backbone_edges": bb.len(),
                    "iterations": out.iterations,
                    "converged": out.converged,
                    "swaps": out.swaps,
                    "d1_initial": out.d1_trace.first(),
                    "d1_final": out.d1_trace.last(),
                });
                Ok((out.graph, report))
            }
            Method::Lp => {
                let bb = self.backbone(g)?;
                let sol = solve_optimal_assignment(g, &bb)?;
                let graph = g.subgraph_with(bb.edges(), &sol.probs)?;
                let report = json!({
                    "backbone_edges": bb.len(),
                    "objective": sol.objective,
                    "pivots": sol.pivots,
                });
                Ok((graph, report))
            }
            Method::Ni => {
                let (graph, rep) = ni_sparsify(g, self.alpha, self.theta.unwrap_or(DEFAULT_THETA), self.seed)?;
                Ok((graph, serde_json::to_value(rep)?))
            }
            Method::Ss => {
                let (graph, rep) = ss_sparsify(g, self.alpha, self.seed)?;
                let report = json!({
                    "initial_t": rep.initial_t,
                    "t": rep.t,
                    "spanner_edges": rep.spanner.len(),
                    "trimmed": rep.trimmed,
                    "topped_up": rep.topped_up,
                });
                Ok((graph, report))
            }
        }
    }
}
