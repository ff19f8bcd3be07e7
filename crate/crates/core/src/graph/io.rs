//! The `brw-graph-v1` JSON format.
//!
//! ```json
//! { "format": "brw-graph-v1", "oriented": false,
//!   "vertices": ["a", "b"], "edges": [["a", "b", 2], ["a", "a", 1]] }
//! ```
//!
//! Non-oriented files list each undirected edge once and the loader adds
//! the reverse direction (a loop is not doubled). Edges of oriented files
//! are taken as given.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::WeightedMultigraph;
use crate::error::{domain, Result};

pub const FORMAT: &str = "brw-graph-v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    format: String,
    oriented: bool,
    vertices: Vec<String>,
    edges: Vec<(String, String, Value)>,
}

pub fn from_json_str(text: &str) -> Result<WeightedMultigraph> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| domain(format!("malformed graph file: {e}")))?;
    if file.format != FORMAT {
        return Err(domain(format!("unsupported graph format {:?}", file.format)));
    }
    let index: HashMap<&str, usize> = file
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let lookup = |v: &str| {
        index
            .get(v)
            .copied()
            .ok_or_else(|| domain(format!("edge mentions unknown vertex {v:?}")))
    };
    let mut edges = Vec::with_capacity(file.edges.len());
    for (x, y, w) in &file.edges {
        let w = w
            .as_f64()
            .ok_or_else(|| domain(format!("edge ({x}, {y}) has a non-numeric weight")))?;
        edges.push((lookup(x)?, lookup(y)?, w));
    }
    let n = file.vertices.len();
    let graph = if file.oriented {
        WeightedMultigraph::new(n, edges, true)?
    } else {
        WeightedMultigraph::from_undirected_edges(n, edges)?
    };
    graph.with_labels(file.vertices)
}

pub fn load(path: &Path) -> Result<WeightedMultigraph> {
    from_json_str(&std::fs::read_to_string(path)?)
}

/// Serializes in the canonical form read by [`from_json_str`]; for
/// non-oriented graphs each edge appears once with source index ≤ target.
pub fn to_json_value(g: &WeightedMultigraph) -> Value {
    let labels = g.labels();
    let mut edges = Vec::new();
    for x in 0..g.len() {
        for (y, w) in g.neighbors(x) {
            if g.is_oriented() || x <= y {
                edges.push(serde_json::json!([labels[x], labels[y], weight_value(w)]));
            }
        }
    }
    serde_json::json!({
        "format": FORMAT,
        "oriented": g.is_oriented(),
        "vertices": labels,
        "edges": edges,
    })
}

fn weight_value(w: f64) -> Value {
    if w.fract() == 0.0 && w.abs() < 9.0e15 {
        Value::from(w as i64)
    } else {
        Value::from(w)
    }
}

pub fn save(g: &WeightedMultigraph, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&to_json_value(g))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
