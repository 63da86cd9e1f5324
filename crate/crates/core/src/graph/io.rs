//! Edge-list text format.
//!
//! ```text
//! # n=5
//! 0 1 0.5
//! 1 2 0.25   # trailing comments are allowed
//! ```
//!
//! The optional `# n=<int>` header fixes the vertex count; otherwise it is
//! `max id + 1`. Edges are undirected and written back in canonical order.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ProbabilityDomain, UncertainGraph};
use crate::error::{Error, Result};

pub fn load_graph(path: impl AsRef<Path>) -> Result<UncertainGraph> {
    parse_graph(&fs::read_to_string(path)?)
}

/// Loads a sparsifier output, where zero-probability edges are legal.
pub fn load_sparsified(path: impl AsRef<Path>) -> Result<UncertainGraph> {
    parse_sparsified(&fs::read_to_string(path)?)
}

pub fn parse_graph(text: &str) -> Result<UncertainGraph> {
    parse(text, ProbabilityDomain::Open)
}

pub fn parse_sparsified(text: &str) -> Result<UncertainGraph> {
    parse(text, ProbabilityDomain::Closed)
}

fn parse_header(comment: &str) -> Option<&str> {
    let body = comment.trim();
    let rest = body.strip_prefix("n")?.trim_start();
    Some(rest.strip_prefix('=')?.trim())
}

fn parse(text: &str, domain: ProbabilityDomain) -> Result<UncertainGraph> {
    let mut header_n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut max_id: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (content, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
            None => (raw, None),
        };
        if content.trim().is_empty() {
            if let (Some(c), true) = (comment, edges.is_empty() && header_n.is_none()) {
                if let Some(value) = parse_header(c) {
                    header_n = Some(value.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("invalid vertex count header '{value}'"),
                    })?);
                }
            }
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 'u v p', found {} fields", fields.len()),
            });
        }
        let vertex = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid vertex id '{s}'"),
            })
        };
        let u = vertex(fields[0])?;
        let v = vertex(fields[1])?;
        let p: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid probability '{}'", fields[2]),
        })?;
        if u == v {
            return Err(Error::SelfLoop { line, vertex: u });
        }
        if !domain.admits(p) {
            return Err(Error::ProbabilityRange {
                line,
                value: p,
                range: domain.label(),
            });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::DuplicateEdge {
                u: u.min(v),
                v: u.max(v),
            });
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v, p));
    }

    let implied = max_id.map_or(0, |m| m + 1);
    let n = match header_n {
        Some(h) if h < implied => {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares n={h} but vertex id {} appears", implied - 1),
            })
        }
        Some(h) => h,
        None => implied,
    };
    UncertainGraph::build(n, edges, domain)
}

/// Writes the graph with a `# n=` header; probabilities use the shortest
/// round-trip decimal representation, so output is byte-stable.
pub fn write_graph<W: Write>(g: &UncertainGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# n={}", g.vertex_count())?;
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.p)?;
    }
    out.flush()
}
