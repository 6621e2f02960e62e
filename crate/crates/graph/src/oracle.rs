//! Test-only generators and checkers, independent of the production
//! enumeration and canonical keys.
//!
//! * `all_quadrangulation_keys` enumerates quasi-dual maps directly: general
//!   genus-zero maps (loops and multiple edges allowed) are grown edge by
//!   edge, and each is expanded into its radial quadrangulation whose faces
//!   are the map's edges. This never touches vertex splitting.
//! * `embedded_isomorphic` / `abstract_isomorphic` are brute-force
//!   backtracking checkers used to certify the canonical keys.

use crate::canonical::{tertiary_key, KeyBytes, MirrorPolicy};
use crate::map::{p2, ColoredMap, VertexColor};
use std::collections::{BTreeSet, HashSet};

// ---------------------------------------------------------------------------
// General maps (rotation systems with loops permitted)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
struct GenMap {
    rotation: Vec<Vec<u32>>,
    twin: Vec<u32>,
}

impl GenMap {
    fn point() -> GenMap {
        GenMap {
            rotation: vec![vec![]],
            twin: vec![],
        }
    }

    fn n_darts(&self) -> usize {
        self.twin.len()
    }

    fn origin(&self) -> Vec<u32> {
        let mut o = vec![0u32; self.n_darts()];
        for (v, rot) in self.rotation.iter().enumerate() {
            for &d in rot {
                o[d as usize] = v as u32;
            }
        }
        o
    }

    fn sigma_tables(&self) -> (Vec<u32>, Vec<u32>) {
        let n = self.n_darts();
        let mut s = vec![0u32; n];
        let mut si = vec![0u32; n];
        for rot in &self.rotation {
            let l = rot.len();
            for (i, &d) in rot.iter().enumerate() {
                s[d as usize] = rot[(i + 1) % l];
                si[d as usize] = rot[(i + l - 1) % l];
            }
        }
        (s, si)
    }

    fn n_faces(&self) -> usize {
        let (s, _) = self.sigma_tables();
        let n = self.n_darts();
        let mut seen = vec![false; n];
        let mut faces = 0;
        for d0 in 0..n {
            if seen[d0] {
                continue;
            }
            faces += 1;
            let mut d = d0 as u32;
            loop {
                seen[d as usize] = true;
                d = s[self.twin[d as usize] as usize];
                if d as usize == d0 {
                    break;
                }
            }
        }
        faces
    }

    fn is_planar(&self) -> bool {
        if self.n_darts() == 0 {
            return self.rotation.len() == 1;
        }
        let v = self.rotation.len() as i64;
        let e = (self.n_darts() / 2) as i64;
        let f = self.n_faces() as i64;
        v - e + f == 2
    }

    /// BFS-minimal encoding over start darts and both orientations.
    fn canon(&self) -> Vec<u8> {
        let n = self.n_darts();
        if n == 0 {
            return vec![b'.'];
        }
        let (s, si) = self.sigma_tables();
        let mut best: Option<Vec<u8>> = None;
        for rev in [false, true] {
            let succ = if rev { &si } else { &s };
            for d0 in 0..n as u32 {
                let mut rename = vec![u32::MAX; n];
                let mut order = vec![d0];
                rename[d0 as usize] = 0;
                let mut next_id = 1u32;
                let mut out = Vec::with_capacity(2 * n);
                let mut i = 0;
                while i < order.len() {
                    let d = order[i] as usize;
                    for nb in [succ[d], self.twin[d]] {
                        if rename[nb as usize] == u32::MAX {
                            rename[nb as usize] = next_id;
                            next_id += 1;
                            order.push(nb);
                        }
                    }
                    out.push(rename[succ[d] as usize] as u8);
                    out.push(rename[self.twin[d] as usize] as u8);
                    i += 1;
                }
                if best.as_ref().map_or(true, |b| out < *b) {
                    best = Some(out);
                }
            }
        }
        best.unwrap()
    }

    /// All maps obtained by adding one edge (between existing corners,
    /// possibly a loop, or to a fresh pendant vertex).
    fn grow(&self) -> Vec<GenMap> {
        let mut out = Vec::new();
        let nv = self.rotation.len();
        let d1 = self.n_darts() as u32;
        let d2 = d1 + 1;
        let slots = |len: usize| if len == 0 { 1 } else { len };
        // edge between two corners (vertices may coincide: a loop)
        for v in 0..nv {
            for i in 0..slots(self.rotation[v].len()) {
                for w in 0..nv {
                    if w == v {
                        // loop: place the first dart, then the second into the
                        // grown rotation
                        let mut base = self.clone();
                        base.twin.push(d2);
                        base.twin.push(d1);
                        base.rotation[v].insert(i, d1);
                        for j in 0..base.rotation[v].len() {
                            let mut m = base.clone();
                            m.rotation[v].insert(j, d2);
                            out.push(m);
                        }
                    } else {
                        for j in 0..slots(self.rotation[w].len()) {
                            let mut m = self.clone();
                            m.twin.push(d2);
                            m.twin.push(d1);
                            m.rotation[v].insert(i, d1);
                            m.rotation[w].insert(j, d2);
                            out.push(m);
                        }
                    }
                }
                // pendant edge to a new vertex
                let mut m = self.clone();
                m.twin.push(d2);
                m.twin.push(d1);
                m.rotation[v].insert(i, d1);
                m.rotation.push(vec![d2]);
                out.push(m);
            }
        }
        out
    }
}

/// The radial quadrangulation of a general map: one sink per map vertex, one
/// source per map face, one quadrangular face per map edge.
fn radial(m: &GenMap) -> ColoredMap {
    if m.n_darts() == 0 {
        return p2();
    }
    let (s, si) = m.sigma_tables();
    let origin = m.origin();
    let nv = m.rotation.len();
    // face index per dart
    let n = m.n_darts();
    let mut face_of = vec![u32::MAX; n];
    let mut face_walks: Vec<Vec<u32>> = Vec::new();
    for d0 in 0..n as u32 {
        if face_of[d0 as usize] != u32::MAX {
            continue;
        }
        let fid = face_walks.len() as u32;
        let mut walk = Vec::new();
        let mut d = d0;
        loop {
            face_of[d as usize] = fid;
            walk.push(d);
            d = s[m.twin[d as usize] as usize];
            if d == d0 {
                break;
            }
        }
        face_walks.push(walk);
    }
    let nf = face_walks.len();
    // radial darts: 2*d at the map-vertex end, 2*d+1 at the face end
    let mut colors = Vec::with_capacity(nv + nf);
    colors.extend(std::iter::repeat(VertexColor::Sink).take(nv));
    colors.extend(std::iter::repeat(VertexColor::Source).take(nf));
    let mut rotation: Vec<Vec<u32>> = vec![Vec::new(); nv + nf];
    // vertex ends follow the reversed rotation of the map
    for v in 0..nv {
        if m.rotation[v].is_empty() {
            continue;
        }
        let mut d = m.rotation[v][0];
        loop {
            rotation[v].push(2 * d);
            d = si[d as usize];
            if d == m.rotation[v][0] {
                break;
            }
        }
    }
    // face ends follow the walk order
    for (f, walk) in face_walks.iter().enumerate() {
        for &d in walk {
            rotation[nv + f].push(2 * d + 1);
        }
    }
    let mut twin = vec![0u32; 2 * n];
    for d in 0..n as u32 {
        twin[(2 * d) as usize] = 2 * d + 1;
        twin[(2 * d + 1) as usize] = 2 * d;
    }
    let _ = origin;
    ColoredMap::from_parts(colors, rotation, twin)
}

/// Enumerate all connected genus-zero general maps with at most `max_edges`
/// edges (up to isomorphism, mirrors identified) and return the tertiary
/// keys of their radial quadrangulations. A radial map has `e+2` vertices,
/// so this is the direct face-assembly census of quasi-dual classes with at
/// most `max_edges + 2` sinks plus sources.
pub fn all_quadrangulation_keys(max_edges: usize) -> BTreeSet<KeyBytes> {
    let mut keys = BTreeSet::new();
    let mut level = vec![GenMap::point()];
    keys.insert(tertiary_key(&radial(&level[0]), MirrorPolicy::Identify));
    for _ in 0..max_edges {
        let mut seen: HashSet<Vec<u8>> = HashSet::new();
        let mut next = Vec::new();
        for m in &level {
            for child in m.grow() {
                if !child.is_planar() {
                    continue;
                }
                if seen.insert(child.canon()) {
                    next.push(child);
                }
            }
        }
        for m in &next {
            let q = radial(m);
            debug_assert!(
                crate::map::validate(&q, crate::map::Repr::Q2)
                    .map(|r| r.passed())
                    .unwrap_or(false),
                "radial construction produced an invalid quadrangulation"
            );
            keys.insert(tertiary_key(&q, MirrorPolicy::Identify));
        }
        level = next;
    }
    keys
}

// ---------------------------------------------------------------------------
// Brute-force isomorphism checkers
// ---------------------------------------------------------------------------

/// Embedded isomorphism by explicit dart-bijection construction: the image of
/// one dart (plus a global orientation flip) determines everything; try all.
pub fn embedded_isomorphic(a: &ColoredMap, b: &ColoredMap, allow_mirror: bool) -> bool {
    if a.n_half_edges() != b.n_half_edges()
        || a.n_vertices() != b.n_vertices()
    {
        return false;
    }
    if a.n_half_edges() == 0 {
        let mut ca: Vec<_> = a.colors().to_vec();
        let mut cb: Vec<_> = b.colors().to_vec();
        ca.sort();
        cb.sort();
        return ca == cb;
    }
    let n = a.n_half_edges();
    let orientations: &[bool] = if allow_mirror { &[false, true] } else { &[false] };
    for &rev in orientations {
        for t0 in 0..n as u32 {
            // attempt phi(0) = t0
            let mut phi = vec![u32::MAX; n];
            phi[0] = t0;
            let mut stack = vec![0u32];
            let mut ok = true;
            while let Some(d) = stack.pop() {
                let img = phi[d as usize];
                if a.color(a.origin(d)) != b.color(b.origin(img)) {
                    ok = false;
                    break;
                }
                let pairs = [
                    (a.sigma(d), if rev { b.sigma_inv(img) } else { b.sigma(img) }),
                    (a.twin(d), b.twin(img)),
                ];
                for (x, y) in pairs {
                    if phi[x as usize] == u32::MAX {
                        phi[x as usize] = y;
                        stack.push(x);
                    } else if phi[x as usize] != y {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok && phi.iter().all(|&x| x != u32::MAX) {
                // injectivity
                let mut used = vec![false; n];
                if phi.iter().all(|&x| {
                    let u = &mut used[x as usize];
                    !std::mem::replace(u, true)
                }) {
                    return true;
                }
            }
        }
    }
    false
}

/// Abstract colored multigraph isomorphism by backtracking over vertex
/// assignments.
pub fn abstract_isomorphic(a: &ColoredMap, b: &ColoredMap) -> bool {
    let n = a.n_vertices();
    if n != b.n_vertices() || a.n_edges() != b.n_edges() {
        return false;
    }
    let adj = |m: &ColoredMap| {
        let k = m.n_vertices();
        let mut adj = vec![vec![0u32; k]; k];
        for h in 0..m.n_half_edges() as u32 {
            adj[m.origin(h) as usize][m.head(h) as usize] += 1;
        }
        adj
    };
    let (aa, ab) = (adj(a), adj(b));

    fn backtrack(
        n: usize,
        a: &ColoredMap,
        b: &ColoredMap,
        aa: &[Vec<u32>],
        ab: &[Vec<u32>],
        phi: &mut Vec<Option<u32>>,
        used: &mut Vec<bool>,
        v: usize,
    ) -> bool {
        if v == n {
            return true;
        }
        for w in 0..n {
            if used[w] || a.color(v as u32) != b.color(w as u32) {
                continue;
            }
            if a.degree(v as u32) != b.degree(w as u32) {
                continue;
            }
            let consistent = (0..v).all(|u| {
                let img = phi[u].unwrap() as usize;
                aa[v][u] == ab[w][img]
            });
            if !consistent {
                continue;
            }
            phi[v] = Some(w as u32);
            used[w] = true;
            if backtrack(n, a, b, aa, ab, phi, used, v + 1) {
                return true;
            }
            phi[v] = None;
            used[w] = false;
        }
        false
    }

    let mut phi = vec![None; n];
    let mut used = vec![false; n];
    backtrack(n, a, b, &aa, &ab, &mut phi, &mut used, 0)
}
