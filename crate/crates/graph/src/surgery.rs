//! Quadrangulation surgeries on quasi-dual maps: face contraction, vertex
//! splitting, diagonal slides, and the twin-splitting ancestor search.
//!
//! All operations take a Q2 map and produce a new Q2 map. A splitting is
//! identified by an ordered pair of darts at the split vertex; the pair
//! selects the cyclic window of edges handed to the new vertex. Equal darts
//! select the pendant splitting (the split edge triples), except on P2 where
//! the single edge doubles. These are exactly the inverses of the face
//! contractions, including the degenerate tree cases.

use crate::canonical::{secondary_key, tertiary_key, KeyBytes, MirrorPolicy};
use crate::convert::Builder;
use crate::map::{is_p2, ColoredMap, HalfEdgeId, VertexId};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurgeryError {
    #[error("half-edge {0} does not bound a quadrangular face")]
    NotAFace(HalfEdgeId),
    #[error("diagonal vertices {0} and {1} differ in color")]
    ColorMismatch(VertexId, VertexId),
    #[error("contraction of {0} and {1} would create a loop")]
    WouldCreateLoop(VertexId, VertexId),
    #[error("contraction requires more than two vertices")]
    TooSmall,
    #[error("diagonal vertices coincide")]
    DiagonalCoincides,
    #[error("splitting witness malformed: {0}")]
    MalformedPartition(String),
    #[error("the two faces of the slide edge coincide")]
    SameFace,
    #[error("slide faces are not quadrangles")]
    NotQuadFaces,
    #[error("slide witness does not transform the first map into the second")]
    WitnessMismatch,
    #[error("no twin-splitting ancestor found")]
    NoAncestor,
}

// ---------------------------------------------------------------------------
// Vertex splitting
// ---------------------------------------------------------------------------

/// A vertex splitting: the new vertex takes the closed cyclic run of darts
/// from `dart_x` to `dart_y` (both split into copies). Equal darts denote the
/// pendant splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitWitness {
    pub vertex: VertexId,
    pub dart_x: HalfEdgeId,
    pub dart_y: HalfEdgeId,
}

fn rot_run(rot: &[HalfEdgeId], from: usize, to: usize) -> Vec<HalfEdgeId> {
    // darts strictly between positions `from` and `to`, cyclically
    let n = rot.len();
    let mut out = Vec::new();
    let mut i = (from + 1) % n;
    while i != to {
        out.push(rot[i]);
        i = (i + 1) % n;
    }
    out
}

/// Apply a vertex splitting.
pub fn split(map: &ColoredMap, w: &SplitWitness) -> Result<ColoredMap, SurgeryError> {
    let v = w.vertex;
    if v as usize >= map.n_vertices() {
        return Err(SurgeryError::MalformedPartition(format!(
            "no vertex {v}"
        )));
    }
    let rot = map.rotation(v);
    let ix = rot.iter().position(|&h| h == w.dart_x);
    let iy = rot.iter().position(|&h| h == w.dart_y);
    let (ix, iy) = match (ix, iy) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(SurgeryError::MalformedPartition(
                "witness darts not at the split vertex".into(),
            ))
        }
    };

    let color = map.color(v);
    let mut b = Builder::from_map(map);

    if w.dart_x != w.dart_y {
        // Cross splitting: new vertex gets [dx', in-between run, dy'].
        let dx = w.dart_x;
        let dy = w.dart_y;
        let wx = map.head(dx);
        let wy = map.head(dy);
        let m_run = rot_run(rot, ix, iy);
        let k_run = rot_run(rot, iy, ix);
        let vp = b.add_vertex(color);
        let (dxp, txp) = b.add_edge_ids();
        let (dyp, typ_) = b.add_edge_ids();
        let mut rot_new = vec![dxp];
        rot_new.extend_from_slice(&m_run);
        rot_new.push(dyp);
        b.rotation[vp as usize] = rot_new;
        let mut rot_v = vec![dx, dy];
        rot_v.extend_from_slice(&k_run);
        b.rotation[v as usize] = rot_v;
        b.insert_before(wx, map.twin(dx), txp);
        b.insert_after(wy, map.twin(dy), typ_);
        Ok(b.finish())
    } else if is_p2(map) {
        // P2 rule: the single edge doubles, giving P3.
        let d = w.dart_x;
        let wv = map.head(d);
        let vp = b.add_vertex(color);
        let (dp, tp) = b.add_edge_ids();
        b.rotation[vp as usize] = vec![dp];
        b.insert_after(wv, map.twin(d), tp);
        Ok(b.finish())
    } else {
        // Pendant rule: the chosen edge triples; the new vertex hangs by one
        // copy inside the face corner between the two retained copies.
        let d = w.dart_x;
        let wv = map.head(d);
        let tw = map.twin(d);
        let m_run = rot_run(rot, ix, ix); // everything except d
        let vp = b.add_vertex(color);
        let (dp, tp) = b.add_edge_ids();
        let (db, tb) = b.add_edge_ids();
        b.rotation[vp as usize] = vec![dp];
        let mut rot_v = vec![d];
        rot_v.extend_from_slice(&m_run);
        rot_v.push(db);
        b.rotation[v as usize] = rot_v;
        b.insert_after(wv, tw, tp);
        b.insert_after(wv, tp, tb);
        Ok(b.finish())
    }
}

/// Every splitting witness of the map (ordered dart pairs per vertex,
/// including the pendant and P2 degenerate rules).
pub fn all_splittings(map: &ColoredMap) -> Vec<SplitWitness> {
    let mut out = Vec::new();
    for v in 0..map.n_vertices() as u32 {
        for &dx in map.rotation(v) {
            for &dy in map.rotation(v) {
                out.push(SplitWitness {
                    vertex: v,
                    dart_x: dx,
                    dart_y: dy,
                });
            }
        }
    }
    out
}

/// Darts handed to each side of the split, as closed runs including both
/// split darts; used for the twin-splitting test.
pub fn split_edge_sets(map: &ColoredMap, w: &SplitWitness) -> (Vec<HalfEdgeId>, Vec<HalfEdgeId>) {
    let rot = map.rotation(w.vertex);
    if w.dart_x == w.dart_y {
        let a1 = vec![w.dart_x];
        let a2 = rot.to_vec();
        (a1, a2)
    } else {
        let ix = rot.iter().position(|&h| h == w.dart_x).unwrap();
        let iy = rot.iter().position(|&h| h == w.dart_y).unwrap();
        let mut a1 = vec![w.dart_x];
        a1.extend(rot_run(rot, ix, iy));
        a1.push(w.dart_y);
        let mut a2 = vec![w.dart_y];
        a2.extend(rot_run(rot, iy, ix));
        a2.push(w.dart_x);
        (a1, a2)
    }
}

// ---------------------------------------------------------------------------
// Face contraction
// ---------------------------------------------------------------------------

/// A face contraction, identified by a dart on the face whose origin is one
/// of the two merged (diagonally opposite) vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContractWitness {
    pub dart: HalfEdgeId,
}

/// Contract the face of `dart` across the diagonal (origin(dart), opposite
/// corner). Returns the contracted map together with the splitting witness on
/// it that reverses the contraction.
pub fn contract(
    map: &ColoredMap,
    dart: HalfEdgeId,
) -> Result<(ColoredMap, SplitWitness), SurgeryError> {
    if map.n_vertices() <= 2 {
        return Err(SurgeryError::TooSmall);
    }
    let walk = map.face_of(dart);
    if walk.len() != 4 {
        return Err(SurgeryError::NotAFace(dart));
    }
    let (h0, h1, h2, h3) = (walk[0], walk[1], walk[2], walk[3]);
    let a = map.origin(h0);
    let c = map.origin(h2);
    if a == c {
        return Err(SurgeryError::DiagonalCoincides);
    }
    if map.color(a) != map.color(c) {
        return Err(SurgeryError::ColorMismatch(a, c));
    }
    for &h in map.rotation(a) {
        if map.head(h) == c {
            return Err(SurgeryError::WouldCreateLoop(a, c));
        }
    }

    let c1 = map.twin(h0) == h3; // first corner vertex is a pendant
    let c2 = map.twin(h1) == h2; // opposite corner vertex is a pendant

    if c2 && !c1 {
        // Restart from the opposite corner so the pendant end plays `a`.
        return contract(map, h2);
    }

    let mut b = Builder::from_map(map);
    if c1 && c2 {
        // Both diagonal ends are pendants on the same vertex (the map is P3
        // shaped at this face): the two parallel slots collapse to one edge.
        b.rotation[a as usize].clear();
        let (m, _v, hmap) = finish_with(b, &[a], &[h0, h3]);
        let d = hmap[h2 as usize];
        return Ok((
            m,
            SplitWitness {
                vertex: map_vertex_after(map, a, c),
                dart_x: d,
                dart_y: d,
            },
        ));
    }
    if c1 {
        // Pendant contraction: drop the pendant edge and one of the two
        // parallel retained slots.
        let th1 = map.twin(h1);
        b.rotation[a as usize].clear();
        // remove th1 from c's rotation
        b.rotation[c as usize].retain(|&h| h != th1);
        let (m, _v, hmap) = finish_with(b, &[a], &[h0, h3, h1, th1]);
        let d = hmap[h2 as usize];
        return Ok((
            m,
            SplitWitness {
                vertex: map_vertex_after(map, a, c),
                dart_x: d,
                dart_y: d,
            },
        ));
    }

    // Generic contraction: edges of the first and last walk slots are merged
    // with their partners; the diagonal pair fuses into `c`.
    let th1 = map.twin(h1);
    let th3 = map.twin(h3);
    let rot_a = map.rotation(a);
    let rot_c = map.rotation(c);
    let ia0 = rot_a.iter().position(|&h| h == h0).unwrap();
    let ia3 = rot_a.iter().position(|&h| h == th3).unwrap();
    let ic2 = rot_c.iter().position(|&h| h == h2).unwrap();
    let ic1 = rot_c.iter().position(|&h| h == th1).unwrap();
    let m_run = rot_run(rot_a, ia0, ia3);
    let k_run = rot_run(rot_c, ic2, ic1);
    let mut merged = vec![th1];
    merged.extend_from_slice(&m_run);
    merged.push(h2);
    merged.extend_from_slice(&k_run);
    b.rotation[a as usize].clear();
    b.rotation[c as usize] = merged;
    let (m, _vmap, hmap) = finish_with(b, &[a], &[h0, map.twin(h0), h3, th3]);
    Ok((
        m,
        SplitWitness {
            vertex: map_vertex_after(map, a, c),
            dart_x: hmap[th1 as usize],
            dart_y: hmap[h2 as usize],
        },
    ))
}

/// New id of vertex `c` once vertex `a` is removed.
fn map_vertex_after(_map: &ColoredMap, a: VertexId, c: VertexId) -> VertexId {
    if c > a {
        c - 1
    } else {
        c
    }
}

fn finish_with(
    b: Builder,
    drop_vertices: &[u32],
    drop_half: &[HalfEdgeId],
) -> (ColoredMap, Vec<u32>, Vec<u32>) {
    // mirror of Builder::finish_removing that also reports the renumbering
    let nv = b.colors.len();
    let nh = b.twin.len();
    let mut vkeep = vec![true; nv];
    for &v in drop_vertices {
        vkeep[v as usize] = false;
    }
    let mut hkeep = vec![true; nh];
    for &h in drop_half {
        hkeep[h as usize] = false;
    }
    let mut vmap = vec![u32::MAX; nv];
    let mut next = 0u32;
    for v in 0..nv {
        if vkeep[v] {
            vmap[v] = next;
            next += 1;
        }
    }
    let mut hmap = vec![u32::MAX; nh];
    let mut next = 0u32;
    for h in 0..nh {
        if hkeep[h] {
            hmap[h] = next;
            next += 1;
        }
    }
    let mut colors = Vec::new();
    let mut rotation = Vec::new();
    for v in 0..nv {
        if !vkeep[v] {
            continue;
        }
        colors.push(b.colors[v]);
        rotation.push(
            b.rotation[v]
                .iter()
                .filter(|&&h| hkeep[h as usize])
                .map(|&h| hmap[h as usize])
                .collect::<Vec<_>>(),
        );
    }
    let kept = hmap.iter().filter(|&&m| m != u32::MAX).count();
    let mut twin = vec![0u32; kept];
    for h in 0..nh {
        if hkeep[h] && hkeep[b.twin[h] as usize] {
            twin[hmap[h] as usize] = hmap[b.twin[h] as usize];
        }
    }
    (
        ColoredMap::from_parts(colors, rotation, twin),
        vmap,
        hmap,
    )
}

/// Every contractible (face, diagonal) of the map.
pub fn all_contractions(map: &ColoredMap) -> Vec<ContractWitness> {
    let mut out = Vec::new();
    if map.n_vertices() <= 2 {
        return out;
    }
    for walk in map.faces() {
        if walk.len() != 4 {
            continue;
        }
        for k in [0usize, 1] {
            let h0 = walk[k];
            let a = map.origin(h0);
            let c = map.origin(walk[k + 2]);
            if a == c || map.color(a) != map.color(c) {
                continue;
            }
            if map.rotation(a).iter().any(|&h| map.head(h) == c) {
                continue;
            }
            out.push(ContractWitness { dart: h0 });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Diagonal slides
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlideChoice {
    /// Replace the shared edge by the diagonal on the side of the first face.
    Left,
    /// Replace it by the other diagonal.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlideWitness {
    pub dart: HalfEdgeId,
    pub choice: SlideChoice,
}

fn slide_primitive(map: &ColoredMap, e: HalfEdgeId) -> Result<ColoredMap, SurgeryError> {
    let f1 = map.face_of(e);
    if f1.contains(&map.twin(e)) {
        return Err(SurgeryError::SameFace);
    }
    let f2 = map.face_of(map.twin(e));
    if f1.len() != 4 || f2.len() != 4 {
        return Err(SurgeryError::NotQuadFaces);
    }
    let b_dart = f1[2];
    let b2 = f2[2];
    let v2 = map.origin(b_dart);
    let w2 = map.origin(b2);
    let mut b = Builder::from_map(map);
    let (g, gt) = b.add_edge_ids();
    b.insert_before(v2, b_dart, g);
    b.insert_before(w2, b2, gt);
    Ok(b.finish_removing(&[], &[e, map.twin(e)]))
}

/// Apply a diagonal slide across the edge of `w.dart`.
pub fn slide(map: &ColoredMap, w: &SlideWitness) -> Result<ColoredMap, SurgeryError> {
    match w.choice {
        SlideChoice::Left => slide_primitive(map, w.dart),
        SlideChoice::Right => slide_primitive(map, map.twin(w.dart)),
    }
}

/// Every admissible slide witness (one per edge and choice).
pub fn all_slides(map: &ColoredMap) -> Vec<SlideWitness> {
    let mut out = Vec::new();
    for e in 0..map.n_half_edges() as u32 {
        if e > map.twin(e) {
            continue;
        }
        let f1 = map.face_of(e);
        if f1.contains(&map.twin(e)) || f1.len() != 4 {
            continue;
        }
        if map.face_of(map.twin(e)).len() != 4 {
            continue;
        }
        out.push(SlideWitness {
            dart: e,
            choice: SlideChoice::Left,
        });
        out.push(SlideWitness {
            dart: e,
            choice: SlideChoice::Right,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Ancestor search (twin splittings behind a slide)
// ---------------------------------------------------------------------------

/// A splitting expressed with its two edge windows, for reporting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSides {
    pub witness: SplitWitness,
    pub side_a: Vec<HalfEdgeId>,
    pub side_b: Vec<HalfEdgeId>,
}

/// An ancestor with the pair of twin splittings producing the two sides of a
/// secondary slide.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AncestorWitness {
    /// Key of the ancestor map (tertiary).
    pub ancestor_key: KeyBytes,
    pub split_to_b: SplitSides,
    pub split_to_c: SplitSides,
    /// A second ancestor, when the slide admits one (the generic case).
    pub alternate_key: Option<KeyBytes>,
}

#[derive(Debug, Clone)]
pub enum AncestorOutcome {
    /// The slide connects two embeddings of the same abstract graph; no
    /// common ancestor is required (or generally available).
    Isomorphic,
    Found {
        ancestor: ColoredMap,
        witness: AncestorWitness,
        alternate: Option<ColoredMap>,
    },
}

fn sets_differ_by_one(a: &[HalfEdgeId], b: &[HalfEdgeId]) -> bool {
    use std::collections::BTreeSet;
    let sa: BTreeSet<_> = a.iter().collect();
    let sb: BTreeSet<_> = b.iter().collect();
    sa.symmetric_difference(&sb).count() == 1
}

/// Twin condition: the first windows (or first against second) differ in
/// exactly one element.
pub fn are_twins(map: &ColoredMap, wa: &SplitWitness, wb: &SplitWitness) -> bool {
    if wa.vertex != wb.vertex {
        return false;
    }
    let (a1, a2) = split_edge_sets(map, wa);
    let (b1, b2) = split_edge_sets(map, wb);
    sets_differ_by_one(&a1, &b1)
        || sets_differ_by_one(&a1, &b2)
        || sets_differ_by_one(&a2, &b1)
        || sets_differ_by_one(&a2, &b2)
}

/// Given `c = slide(b_map, w)`, find an ancestor with twin splittings onto
/// both sides, or report that the sides are abstractly isomorphic (slides
/// within a secondary class have no ancestor obligation).
pub fn find_ancestor(
    b_map: &ColoredMap,
    c_map: &ColoredMap,
    w: &SlideWitness,
) -> Result<AncestorOutcome, SurgeryError> {
    let slid = slide(b_map, w)?;
    let key_c = tertiary_key(c_map, MirrorPolicy::Identify);
    if tertiary_key(&slid, MirrorPolicy::Identify) != key_c {
        return Err(SurgeryError::WitnessMismatch);
    }
    if secondary_key(b_map) == secondary_key(c_map) {
        return Ok(AncestorOutcome::Isomorphic);
    }
    let key_b = tertiary_key(b_map, MirrorPolicy::Identify);

    // The two candidate contractions: across the first face of the slide
    // edge, and across the second.
    let e = match w.choice {
        SlideChoice::Left => w.dart,
        SlideChoice::Right => b_map.twin(w.dart),
    };
    let f1 = b_map.face_of(e);
    let f2 = b_map.face_of(b_map.twin(e));
    let candidates = [f1[2], f2[2]];

    let mut found: Option<(ColoredMap, AncestorWitness)> = None;
    let mut alternate: Option<(ColoredMap, KeyBytes)> = None;
    for &cd in &candidates {
        let Ok((anc, _inv)) = contract(b_map, cd) else {
            continue;
        };
        // Enumerate splittings of the merged vertex and look for a twin pair
        // covering both sides of the slide.
        let vm = _inv.vertex;
        let mut to_b = Vec::new();
        let mut to_c = Vec::new();
        for &dx in anc.rotation(vm) {
            for &dy in anc.rotation(vm) {
                let sw = SplitWitness {
                    vertex: vm,
                    dart_x: dx,
                    dart_y: dy,
                };
                let Ok(res) = split(&anc, &sw) else { continue };
                let key = tertiary_key(&res, MirrorPolicy::Identify);
                if key == key_b {
                    to_b.push(sw);
                } else if key == key_c {
                    to_c.push(sw);
                }
            }
        }
        let mut pair = None;
        'outer: for wb in &to_b {
            for wc in &to_c {
                if are_twins(&anc, wb, wc) {
                    pair = Some((*wb, *wc));
                    break 'outer;
                }
            }
        }
        if let Some((wb, wc)) = pair {
            let (a1, a2) = split_edge_sets(&anc, &wb);
            let (b1, b2) = split_edge_sets(&anc, &wc);
            let anc_key = tertiary_key(&anc, MirrorPolicy::Identify);
            if found.is_none() {
                found = Some((
                    anc,
                    AncestorWitness {
                        ancestor_key: anc_key,
                        split_to_b: SplitSides {
                            witness: wb,
                            side_a: a1,
                            side_b: a2,
                        },
                        split_to_c: SplitSides {
                            witness: wc,
                            side_a: b1,
                            side_b: b2,
                        },
                        alternate_key: None,
                    },
                ));
            } else if alternate.is_none() {
                alternate = Some((anc, anc_key));
            }
        }
    }
    match found {
        Some((ancestor, mut witness)) => {
            let (alt_map, alt_key) = match alternate {
                Some((m, k)) => (Some(m), Some(k)),
                None => (None, None),
            };
            witness.alternate_key = alt_key;
            Ok(AncestorOutcome::Found {
                ancestor,
                witness,
                alternate: alt_map,
            })
        }
        None => Err(SurgeryError::NoAncestor),
    }
}
