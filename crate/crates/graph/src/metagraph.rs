//! Enumeration of embedded quasi-dual classes and the metagraph of
//! saddle-node / saddle-saddle transitions between them.
//!
//! Vertices are tertiary classes (embedded maps up to homeomorphism,
//! mirror images identified), generated as the closure of P2 under vertex
//! splittings. Edges come in three kinds: primary (a splitting connects the
//! classes), secondary (a slide connects distinct abstract graphs) and
//! tertiary (a slide connects distinct embeddings of one abstract graph).

use crate::canonical::{secondary_key, tertiary_key, KeyBytes, MirrorPolicy};
use crate::map::{p2, primary_class, ColoredMap, PrimaryClass};
use crate::surgery::{
    all_slides, all_splittings, find_ancestor, split, AncestorOutcome, AncestorWitness,
    SlideWitness, SplitWitness,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetagraphError {
    #[error("enumeration exceeded the class budget of {0}")]
    BudgetExceeded(usize),
    #[error("key not present in the metagraph: {0}")]
    KeyNotFound(KeyBytes),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Primary,
    Secondary,
    Tertiary,
}

/// Witness payload attached to a metagraph edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum EdgeWitness {
    Split(SplitWitness),
    Slide(SlideWitness),
}

/// Abstract one-parameter family metadata carried by each edge: the single
/// bifurcation sits at an interior parameter value.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FamilyParameter {
    pub lambda_star: f64,
}

impl Default for FamilyParameter {
    fn default() -> Self {
        FamilyParameter { lambda_star: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaVertex {
    pub key: KeyBytes,
    pub secondary: KeyBytes,
    pub class: PrimaryClass,
    #[serde(skip)]
    pub map: ColoredMap,
}

impl MetaVertex {
    fn new(map: ColoredMap) -> MetaVertex {
        MetaVertex {
            key: tertiary_key(&map, MirrorPolicy::Identify),
            secondary: secondary_key(&map),
            class: primary_class(&map).expect("enumerated map violates index sum"),
            map,
        }
    }
}

// ColoredMap has no serde impls on purpose (the JSON schema in `io` is the
// interchange format); skipped fields need a default.
impl Default for ColoredMap {
    fn default() -> Self {
        p2()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaEdge {
    pub from: KeyBytes,
    pub to: KeyBytes,
    pub kind: EdgeKind,
    pub witness: EdgeWitness,
    pub family: FamilyParameter,
}

/// A (primary, primary, secondary) triangle certified by twin splittings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaFace {
    pub side_b: KeyBytes,
    pub side_c: KeyBytes,
    pub apex: KeyBytes,
    pub witness: AncestorWitness,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metagraph {
    pub max_total: usize,
    pub vertices: Vec<MetaVertex>,
    pub edges: Vec<MetaEdge>,
    pub faces: Vec<MetaFace>,
}

impl Metagraph {
    pub fn vertex(&self, key: &KeyBytes) -> Option<&MetaVertex> {
        self.vertices.iter().find(|v| &v.key == key)
    }

    pub fn index(&self) -> HashMap<&KeyBytes, &MetaVertex> {
        self.vertices.iter().map(|v| (&v.key, v)).collect()
    }
}

/// Closure of P2 under vertex splittings, deduplicated on the tertiary key,
/// restricted to classes with at most `max_total` sinks plus sources.
pub fn enumerate(max_total: usize, budget: usize) -> Result<Vec<MetaVertex>, MetagraphError> {
    assert!(max_total >= 2, "need room for at least {{1,1}}");
    let seed = MetaVertex::new(p2());
    let mut known: HashMap<KeyBytes, MetaVertex> = HashMap::new();
    let mut frontier = vec![seed.clone()];
    known.insert(seed.key.clone(), seed);

    while !frontier.is_empty() {
        if known.len() > budget {
            return Err(MetagraphError::BudgetExceeded(budget));
        }
        // Expand the whole frontier in parallel, then merge deterministically.
        let produced: Vec<MetaVertex> = frontier
            .par_iter()
            .flat_map_iter(|mv| {
                let mut out = Vec::new();
                if mv.class.total() < max_total {
                    for w in all_splittings(&mv.map) {
                        let child = split(&mv.map, &w).expect("splitting failed");
                        out.push(MetaVertex::new(child));
                    }
                }
                out
            })
            .collect();
        let mut next = Vec::new();
        for mv in produced {
            if !known.contains_key(&mv.key) {
                known.insert(mv.key.clone(), mv.clone());
                next.push(mv);
            }
        }
        next.sort_by(|a, b| a.key.cmp(&b.key));
        next.dedup_by(|a, b| a.key == b.key);
        frontier = next;
    }

    let mut vertices: Vec<MetaVertex> = known.into_values().collect();
    vertices.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(vertices)
}

/// Build all edges among the enumerated vertices: splitting-induced primary
/// edges and slide-induced secondary/tertiary edges. Triangular faces are
/// attached to each secondary edge by the ancestor search.
pub fn build_edges(vertices: Vec<MetaVertex>, max_total: usize) -> Metagraph {
    let key_set: HashSet<KeyBytes> = vertices.iter().map(|v| v.key.clone()).collect();

    let results: Vec<(Vec<MetaEdge>, Vec<MetaFace>)> = vertices
        .par_iter()
        .map(|mv| {
            let mut edges = Vec::new();
            let mut faces = Vec::new();
            // Primary edges: creations out of this class.
            if mv.class.total() < max_total {
                let mut seen_targets: HashSet<KeyBytes> = HashSet::new();
                for w in all_splittings(&mv.map) {
                    let child = split(&mv.map, &w).expect("splitting failed");
                    let key = tertiary_key(&child, MirrorPolicy::Identify);
                    debug_assert!(key_set.contains(&key));
                    if seen_targets.insert(key.clone()) {
                        edges.push(MetaEdge {
                            from: mv.key.clone(),
                            to: key,
                            kind: EdgeKind::Primary,
                            witness: EdgeWitness::Split(w),
                            family: FamilyParameter::default(),
                        });
                    }
                }
            }
            // Slide edges out of this class (recorded once per unordered
            // pair: keep from < to).
            let mut seen_targets: HashSet<KeyBytes> = HashSet::new();
            for w in all_slides(&mv.map) {
                let Ok(child) = crate::surgery::slide(&mv.map, &w) else {
                    continue;
                };
                let key = tertiary_key(&child, MirrorPolicy::Identify);
                if key == mv.key || !seen_targets.insert(key.clone()) {
                    continue;
                }
                if mv.key > key {
                    continue; // the partner vertex records this pair
                }
                let sec = secondary_key(&child);
                let kind = if sec == mv.secondary {
                    EdgeKind::Tertiary
                } else {
                    EdgeKind::Secondary
                };
                if kind == EdgeKind::Secondary {
                    if let Ok(AncestorOutcome::Found { ancestor, witness, .. }) =
                        find_ancestor(&mv.map, &child, &w)
                    {
                        let _ = ancestor;
                        faces.push(MetaFace {
                            side_b: mv.key.clone(),
                            side_c: key.clone(),
                            apex: witness.ancestor_key.clone(),
                            witness,
                        });
                    }
                }
                edges.push(MetaEdge {
                    from: mv.key.clone(),
                    to: key,
                    kind,
                    witness: EdgeWitness::Slide(w),
                    family: FamilyParameter::default(),
                });
            }
            (edges, faces)
        })
        .collect();

    let mut edges = Vec::new();
    let mut faces = Vec::new();
    for (e, f) in results {
        edges.extend(e);
        faces.extend(f);
    }
    edges.sort_by(|a, b| {
        (&a.from, &a.to, a.kind as u8).cmp(&(&b.from, &b.to, b.kind as u8))
    });
    edges.dedup_by(|a, b| a.from == b.from && a.to == b.to && a.kind == b.kind);
    faces.sort_by(|a, b| (&a.side_b, &a.side_c).cmp(&(&b.side_b, &b.side_c)));

    Metagraph {
        max_total,
        vertices,
        edges,
        faces,
    }
}

/// One failed lemma obligation.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaFailure {
    pub side_b: KeyBytes,
    pub side_c: KeyBytes,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub secondary_edges: usize,
    pub verified: usize,
    pub isomorphic_slides: usize,
    pub failures: Vec<LemmaFailure>,
}

/// Check that every secondary edge bounds a triangle whose other two sides
/// are primary edges: the ancestor exists in the vertex set, both splitting
/// targets reproduce the edge endpoints, and the splittings are twins.
pub fn verify_lemma(mg: &Metagraph) -> LemmaReport {
    let by_key = mg.index();
    let primary_pairs: HashSet<(KeyBytes, KeyBytes)> = mg
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Primary)
        .map(|e| (e.from.clone(), e.to.clone()))
        .collect();
    let has_primary = |a: &KeyBytes, b: &KeyBytes| {
        primary_pairs.contains(&(a.clone(), b.clone()))
            || primary_pairs.contains(&(b.clone(), a.clone()))
    };

    let mut report = LemmaReport {
        secondary_edges: 0,
        verified: 0,
        isomorphic_slides: 0,
        failures: Vec::new(),
    };
    for edge in &mg.edges {
        match edge.kind {
            EdgeKind::Tertiary => {
                report.isomorphic_slides += 1;
                continue;
            }
            EdgeKind::Primary => continue,
            EdgeKind::Secondary => {}
        }
        report.secondary_edges += 1;
        let (Some(bv), Some(_cv)) = (by_key.get(&edge.from), by_key.get(&edge.to)) else {
            report.failures.push(LemmaFailure {
                side_b: edge.from.clone(),
                side_c: edge.to.clone(),
                reason: "edge endpoint missing from vertex set".into(),
            });
            continue;
        };
        let EdgeWitness::Slide(w) = &edge.witness else {
            report.failures.push(LemmaFailure {
                side_b: edge.from.clone(),
                side_c: edge.to.clone(),
                reason: "secondary edge without slide witness".into(),
            });
            continue;
        };
        let c_map = match crate::surgery::slide(&bv.map, w) {
            Ok(m) => m,
            Err(e) => {
                report.failures.push(LemmaFailure {
                    side_b: edge.from.clone(),
                    side_c: edge.to.clone(),
                    reason: format!("witness replay failed: {e}"),
                });
                continue;
            }
        };
        match find_ancestor(&bv.map, &c_map, w) {
            Ok(AncestorOutcome::Found { witness, .. }) => {
                let apex = &witness.ancestor_key;
                if !by_key.contains_key(apex) {
                    report.failures.push(LemmaFailure {
                        side_b: edge.from.clone(),
                        side_c: edge.to.clone(),
                        reason: "ancestor not in vertex set".into(),
                    });
                } else if !has_primary(apex, &edge.from) || !has_primary(apex, &edge.to) {
                    report.failures.push(LemmaFailure {
                        side_b: edge.from.clone(),
                        side_c: edge.to.clone(),
                        reason: "triangle sides missing from primary edges".into(),
                    });
                } else {
                    report.verified += 1;
                }
            }
            Ok(AncestorOutcome::Isomorphic) => {
                report.failures.push(LemmaFailure {
                    side_b: edge.from.clone(),
                    side_c: edge.to.clone(),
                    reason: "secondary edge classified isomorphic".into(),
                });
            }
            Err(e) => {
                report.failures.push(LemmaFailure {
                    side_b: edge.from.clone(),
                    side_c: edge.to.clone(),
                    reason: format!("ancestor search failed: {e}"),
                });
            }
        }
    }
    report
}

/// A path of creation-direction primary edges between two classes, if one
/// exists. When the target class is smaller the path is searched in the
/// annihilation direction and reported from `from` to `to`.
pub fn monotone_path(
    mg: &Metagraph,
    from: &KeyBytes,
    to: &KeyBytes,
) -> Result<Option<Vec<KeyBytes>>, MetagraphError> {
    let by_key = mg.index();
    for k in [from, to] {
        if !by_key.contains_key(k) {
            return Err(MetagraphError::KeyNotFound(k.clone()));
        }
    }
    if from == to {
        return Ok(Some(vec![from.clone()]));
    }
    let (start, goal, reverse) =
        if by_key[from].class.total() <= by_key[to].class.total() {
            (from, to, false)
        } else {
            (to, from, true)
        };
    // Adjacency along creations only.
    let mut adj: BTreeMap<&KeyBytes, Vec<&KeyBytes>> = BTreeMap::new();
    for e in &mg.edges {
        if e.kind == EdgeKind::Primary {
            adj.entry(&e.from).or_default().push(&e.to);
        }
    }
    let mut prev: HashMap<&KeyBytes, &KeyBytes> = HashMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(k) = queue.pop_front() {
        if k == goal {
            let mut path = vec![goal.clone()];
            let mut cur = goal;
            while cur != start {
                cur = prev[cur];
                path.push(cur.clone());
            }
            if !reverse {
                path.reverse();
            }
            return Ok(Some(path));
        }
        if let Some(nexts) = adj.get(k) {
            for n in nexts {
                if *n != start && !prev.contains_key(*n) {
                    prev.insert(n, k);
                    queue.push_back(n);
                }
            }
        }
    }
    Ok(None)
}
