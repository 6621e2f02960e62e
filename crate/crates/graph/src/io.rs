//! Interchange formats: the graph JSON schema and DOT export.
//!
//! Graph JSON: `{vertices:[{id,color}], rotation:{vertex-id:[half-edge ids]},
//! twins:[[h1,h2]]}`. Output is key-sorted so identical maps serialize to
//! identical bytes.

use crate::canonical::KeyBytes;
use crate::map::{ColoredMap, HalfEdgeId, MapError, VertexColor};
use crate::metagraph::{EdgeKind, Metagraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<VertexJson>,
    pub rotation: BTreeMap<String, Vec<HalfEdgeId>>,
    pub twins: Vec<(HalfEdgeId, HalfEdgeId)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VertexJson {
    pub id: u32,
    pub color: VertexColor,
}

pub fn to_json(map: &ColoredMap) -> GraphJson {
    GraphJson {
        vertices: (0..map.n_vertices() as u32)
            .map(|v| VertexJson {
                id: v,
                color: map.color(v),
            })
            .collect(),
        rotation: (0..map.n_vertices() as u32)
            .map(|v| (v.to_string(), map.rotation(v).to_vec()))
            .collect(),
        twins: (0..map.n_half_edges() as u32)
            .filter(|&h| h < map.twin(h))
            .map(|h| (h, map.twin(h)))
            .collect(),
    }
}

pub fn from_json(g: &GraphJson) -> Result<ColoredMap, MapError> {
    let mut ids: Vec<u32> = g.vertices.iter().map(|v| v.id).collect();
    ids.sort_unstable();
    if ids.iter().enumerate().any(|(i, &v)| i as u32 != v) {
        return Err(MapError::StructurallyMalformed(
            "vertex ids must be 0..n".into(),
        ));
    }
    let mut colors = vec![VertexColor::Sink; g.vertices.len()];
    for v in &g.vertices {
        colors[v.id as usize] = v.color;
    }
    let mut rotation = vec![Vec::new(); g.vertices.len()];
    for (k, rot) in &g.rotation {
        let v: usize = k
            .parse()
            .map_err(|_| MapError::StructurallyMalformed(format!("bad vertex key {k}")))?;
        if v >= rotation.len() {
            return Err(MapError::StructurallyMalformed(format!(
                "rotation for unknown vertex {v}"
            )));
        }
        rotation[v] = rot.clone();
    }
    ColoredMap::new(colors, rotation, &g.twins)
}

fn color_attr(c: VertexColor) -> &'static str {
    match c {
        VertexColor::Sink => "fillcolor=lightblue",
        VertexColor::Source => "fillcolor=salmon",
        VertexColor::Saddle => "fillcolor=palegreen",
    }
}

/// DOT rendering of a single map (abstract view; the embedding is carried by
/// the JSON rotations).
pub fn to_dot(map: &ColoredMap, name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("graph \"{name}\" {{\n"));
    out.push_str("  node [style=filled];\n");
    for v in 0..map.n_vertices() as u32 {
        out.push_str(&format!(
            "  v{v} [label=\"{v}\", {}];\n",
            color_attr(map.color(v))
        ));
    }
    for h in 0..map.n_half_edges() as u32 {
        if h < map.twin(h) {
            out.push_str(&format!("  v{} -- v{};\n", map.origin(h), map.head(h)));
        }
    }
    out.push_str("}\n");
    out
}

/// DOT rendering of the metagraph: thin edges are saddle-node transitions,
/// thick edges saddle-saddle transitions, dashed edges connect embeddings of
/// one abstract graph.
pub fn metagraph_dot(mg: &Metagraph) -> String {
    let mut out = String::new();
    out.push_str("graph metagraph {\n  node [shape=box, fontsize=10];\n");
    let short = |k: &KeyBytes| {
        let s = k.to_string();
        s[..s.len().min(12)].to_string()
    };
    for v in &mg.vertices {
        out.push_str(&format!(
            "  \"{}\" [label=\"{} {}\"];\n",
            v.key,
            v.class,
            short(&v.key)
        ));
    }
    for e in &mg.edges {
        let style = match e.kind {
            EdgeKind::Primary => "penwidth=1",
            EdgeKind::Secondary => "penwidth=3",
            EdgeKind::Tertiary => "style=dashed",
        };
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [{}];\n",
            e.from, e.to, style
        ));
    }
    out.push_str("}\n");
    out
}
