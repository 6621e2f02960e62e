//! Conversions between the primary (Q3), triangulated (T3) and quasi-dual
//! (Q2) representations.
//!
//! Saddles are removed by deleting them from the rotation system; they are
//! reconstructed by inserting a degree-4 vertex inside each quadrangular
//! face. Sink-source diagonals connect the two non-saddle corners of a
//! primary face. All faces stay derived; each step rebuilds a fresh map.

use crate::map::{
    is_p2, p2, validate, ColoredMap, HalfEdgeId, MapError, Repr, VertexColor,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("input is not a valid {0:?} map")]
    InvalidInput(Repr),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Convert a valid `from`-representation map into the `to` representation.
pub fn convert(map: &ColoredMap, from: Repr, to: Repr) -> Result<ColoredMap, ConvertError> {
    let rep = validate(map, from)?;
    if !rep.passed() {
        return Err(ConvertError::InvalidInput(from));
    }
    let out = match (from, to) {
        (a, b) if a == b => map.clone(),
        (Repr::Q3, Repr::T3) => q3_to_t3(map),
        (Repr::T3, Repr::Q3) => t3_to_q3(map),
        (Repr::T3, Repr::Q2) => t3_to_q2(map),
        (Repr::Q2, Repr::T3) => q2_to_t3(map),
        (Repr::Q3, Repr::Q2) => t3_to_q2(&q3_to_t3(map)),
        (Repr::Q2, Repr::Q3) => t3_to_q3(&q2_to_t3(map)),
        _ => unreachable!(),
    };
    debug_assert!(validate(&out, to).map(|r| r.passed()).unwrap_or(false));
    Ok(out)
}

/// A growable copy of a map used by the conversion and surgery code.
pub(crate) struct Builder {
    pub colors: Vec<VertexColor>,
    pub rotation: Vec<Vec<HalfEdgeId>>,
    pub twin: Vec<HalfEdgeId>,
}

impl Builder {
    pub fn from_map(map: &ColoredMap) -> Builder {
        Builder {
            colors: map.colors().to_vec(),
            rotation: (0..map.n_vertices() as u32)
                .map(|v| map.rotation(v).to_vec())
                .collect(),
            twin: (0..map.n_half_edges() as u32).map(|h| map.twin(h)).collect(),
        }
    }

    pub fn add_vertex(&mut self, c: VertexColor) -> u32 {
        self.colors.push(c);
        self.rotation.push(Vec::new());
        (self.colors.len() - 1) as u32
    }

    /// Reserve a twin pair of half-edge ids; rotations are filled by caller.
    pub fn add_edge_ids(&mut self) -> (HalfEdgeId, HalfEdgeId) {
        let a = self.twin.len() as u32;
        let b = a + 1;
        self.twin.push(b);
        self.twin.push(a);
        (a, b)
    }

    /// Insert `dart` into `v`'s rotation immediately before `before`.
    pub fn insert_before(&mut self, v: u32, before: HalfEdgeId, dart: HalfEdgeId) {
        let rot = &mut self.rotation[v as usize];
        let i = rot.iter().position(|&h| h == before).expect("dart not at vertex");
        rot.insert(i, dart);
    }

    /// Insert `dart` into `v`'s rotation immediately after `after`.
    pub fn insert_after(&mut self, v: u32, after: HalfEdgeId, dart: HalfEdgeId) {
        let rot = &mut self.rotation[v as usize];
        let i = rot.iter().position(|&h| h == after).expect("dart not at vertex");
        rot.insert(i + 1, dart);
    }

    /// Drop the listed vertices and half-edges, renumbering everything.
    /// Returns the finished map.
    pub fn finish_removing(self, drop_vertices: &[u32], drop_half: &[HalfEdgeId]) -> ColoredMap {
        let nv = self.colors.len();
        let nh = self.twin.len();
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
            colors.push(self.colors[v]);
            rotation.push(
                self.rotation[v]
                    .iter()
                    .filter(|&&h| hkeep[h as usize])
                    .map(|&h| hmap[h as usize])
                    .collect(),
            );
        }
        let mut twin = vec![0u32; hmap.iter().filter(|&&m| m != u32::MAX).count()];
        for h in 0..nh {
            if hkeep[h] {
                debug_assert!(hkeep[self.twin[h] as usize], "dangling twin");
                twin[hmap[h] as usize] = hmap[self.twin[h] as usize];
            }
        }
        ColoredMap::from_parts(colors, rotation, twin)
    }

    pub fn finish(self) -> ColoredMap {
        self.finish_removing(&[], &[])
    }
}

/// Insert one source-sink diagonal inside each primary quadrangle.
fn q3_to_t3(map: &ColoredMap) -> ColoredMap {
    if map.n_half_edges() == 0 {
        // {1,1}: the triangulated representation keeps one representative
        // sink-source orbit, i.e. P2.
        return p2();
    }
    let mut b = Builder::from_map(map);
    for walk in map.faces() {
        debug_assert_eq!(walk.len(), 4);
        let corners: Vec<u32> = walk.iter().map(|&h| map.origin(h)).collect();
        let iu = corners
            .iter()
            .position(|&v| map.color(v) == VertexColor::Source)
            .expect("face without source");
        let is = (iu + 2) % 4;
        debug_assert_eq!(map.color(corners[is]), VertexColor::Sink);
        let (du, ds) = b.add_edge_ids();
        b.insert_before(corners[iu], walk[iu], du);
        b.insert_before(corners[is], walk[is], ds);
    }
    b.finish()
}

/// Remove every sink-source edge, leaving the primary graph.
fn t3_to_q3(map: &ColoredMap) -> ColoredMap {
    let b = Builder::from_map(map);
    let mut drop = Vec::new();
    for h in 0..map.n_half_edges() as u32 {
        let a = map.color(map.origin(h));
        let z = map.color(map.head(h));
        if a != VertexColor::Saddle && z != VertexColor::Saddle {
            drop.push(h);
        }
    }
    b.finish_removing(&[], &drop)
}

/// Remove every saddle along with its incident edges.
fn t3_to_q2(map: &ColoredMap) -> ColoredMap {
    let b = Builder::from_map(map);
    let mut drop_v = Vec::new();
    let mut drop_h = Vec::new();
    for v in 0..map.n_vertices() as u32 {
        if map.color(v) == VertexColor::Saddle {
            drop_v.push(v);
        }
    }
    for h in 0..map.n_half_edges() as u32 {
        if map.color(map.origin(h)) == VertexColor::Saddle
            || map.color(map.head(h)) == VertexColor::Saddle
        {
            drop_h.push(h);
        }
    }
    b.finish_removing(&drop_v, &drop_h)
}

/// Reconstruct a saddle inside each quadrangular face.
fn q2_to_t3(map: &ColoredMap) -> ColoredMap {
    let mut b = Builder::from_map(map);
    for walk in map.faces() {
        if walk.len() != 4 {
            debug_assert!(is_p2(map), "non-quad face outside P2");
            continue;
        }
        let x = b.add_vertex(VertexColor::Saddle);
        let mut spokes = Vec::with_capacity(4);
        for &h in &walk {
            let (at_x, at_corner) = b.add_edge_ids();
            b.insert_before(map.origin(h), h, at_corner);
            spokes.push(at_x);
        }
        // The interior vertex sees the face boundary in reversed cyclic order.
        spokes.reverse();
        b.rotation[x as usize] = spokes;
    }
    b.finish()
}

/// Round-trip helper used by tests and the metagraph: the Q2 view of any map
/// known to be valid in `from`.
pub fn to_q2(map: &ColoredMap, from: Repr) -> Result<ColoredMap, ConvertError> {
    convert(map, from, Repr::Q2)
}
