//! Half-edge combinatorial maps on the sphere with colored vertices.
//!
//! A map is stored as a rotation system: every half-edge knows its origin
//! vertex and its twin, and every vertex carries the cyclic order of its
//! outgoing half-edges. Faces are always derived by tracing
//! `next(h) = sigma(twin(h))`, never stored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Critical-point color of a vertex. `Sink` and `Source` are the two colors
/// of quasi-dual quadrangulations; `Saddle` only appears in the primary and
/// triangulated representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexColor {
    Sink,
    Source,
    Saddle,
}

impl VertexColor {
    pub fn code(self) -> u8 {
        match self {
            VertexColor::Sink => 0,
            VertexColor::Source => 1,
            VertexColor::Saddle => 2,
        }
    }

    /// Sink <-> Source, Saddle fixed.
    pub fn swapped(self) -> Self {
        match self {
            VertexColor::Sink => VertexColor::Source,
            VertexColor::Source => VertexColor::Sink,
            VertexColor::Saddle => VertexColor::Saddle,
        }
    }
}

pub type VertexId = u32;
pub type HalfEdgeId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("structurally malformed map: {0}")]
    StructurallyMalformed(String),
    #[error("Poincare-Hopf violation: S={s} U={u} H={h}")]
    PoincareHopfViolation { s: usize, u: usize, h: usize },
}

/// The three topology-graph representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Repr {
    /// 3-colored quadrangulation, saddle degree 4.
    Q3,
    /// 3-colored triangulation, saddle degree 4.
    T3,
    /// 2-colored (quasi-dual) quadrangulation; the path trees P2 and P3 are
    /// admitted as degenerate members.
    Q2,
}

/// An embedded vertex-colored multigraph on the 2-sphere.
///
/// Immutable after construction; all surgeries build new maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColoredMap {
    colors: Vec<VertexColor>,
    origin: Vec<VertexId>,
    twin: Vec<HalfEdgeId>,
    rotation: Vec<Vec<HalfEdgeId>>,
    rot_pos: Vec<u32>,
}

impl ColoredMap {
    /// Build a map from vertex colors, per-vertex rotations, and a twin
    /// pairing. Half-edge ids must form `0..n` exactly.
    pub fn new(
        colors: Vec<VertexColor>,
        rotation: Vec<Vec<HalfEdgeId>>,
        twin_pairs: &[(HalfEdgeId, HalfEdgeId)],
    ) -> Result<Self, MapError> {
        if colors.len() != rotation.len() {
            return Err(MapError::StructurallyMalformed(
                "colors and rotation must have the same length".into(),
            ));
        }
        let n_half: usize = rotation.iter().map(|r| r.len()).sum();
        let mut origin = vec![u32::MAX; n_half];
        let mut rot_pos = vec![u32::MAX; n_half];
        for (v, rot) in rotation.iter().enumerate() {
            for (i, &h) in rot.iter().enumerate() {
                let hu = h as usize;
                if hu >= n_half || origin[hu] != u32::MAX {
                    return Err(MapError::StructurallyMalformed(format!(
                        "half-edge {h} out of range or listed twice in rotations"
                    )));
                }
                origin[hu] = v as u32;
                rot_pos[hu] = i as u32;
            }
        }
        let mut twin = vec![u32::MAX; n_half];
        for &(a, b) in twin_pairs {
            let (au, bu) = (a as usize, b as usize);
            if au >= n_half || bu >= n_half || au == bu {
                return Err(MapError::StructurallyMalformed(format!(
                    "bad twin pair ({a},{b})"
                )));
            }
            if twin[au] != u32::MAX || twin[bu] != u32::MAX {
                return Err(MapError::StructurallyMalformed(format!(
                    "half-edge in more than one twin pair: ({a},{b})"
                )));
            }
            twin[au] = b;
            twin[bu] = a;
        }
        let map = ColoredMap {
            colors,
            origin,
            twin,
            rotation,
            rot_pos,
        };
        map.check_structure()?;
        Ok(map)
    }

    /// Internal constructor for surgery results: callers guarantee the
    /// arrays are consistent; debug builds re-check.
    pub(crate) fn from_parts(
        colors: Vec<VertexColor>,
        rotation: Vec<Vec<HalfEdgeId>>,
        twin: Vec<HalfEdgeId>,
    ) -> Self {
        let n_half = twin.len();
        let mut origin = vec![u32::MAX; n_half];
        let mut rot_pos = vec![u32::MAX; n_half];
        for (v, rot) in rotation.iter().enumerate() {
            for (i, &h) in rot.iter().enumerate() {
                origin[h as usize] = v as u32;
                rot_pos[h as usize] = i as u32;
            }
        }
        let map = ColoredMap {
            colors,
            origin,
            twin,
            rotation,
            rot_pos,
        };
        debug_assert!(map.check_structure().is_ok(), "surgery produced bad map");
        map
    }

    fn check_structure(&self) -> Result<(), MapError> {
        let n = self.n_half_edges();
        for h in 0..n as u32 {
            let t = self.twin[h as usize];
            if t as usize >= n {
                return Err(MapError::StructurallyMalformed(format!(
                    "half-edge {h} has no twin"
                )));
            }
            if t == h || self.twin[t as usize] != h {
                return Err(MapError::StructurallyMalformed(format!(
                    "twin is not a fixed-point-free involution at {h}"
                )));
            }
            if self.origin[h as usize] == self.origin[t as usize] {
                return Err(MapError::StructurallyMalformed(format!(
                    "loop edge at vertex {}",
                    self.origin[h as usize]
                )));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.colors.len()
    }

    pub fn n_half_edges(&self) -> usize {
        self.twin.len()
    }

    pub fn n_edges(&self) -> usize {
        self.twin.len() / 2
    }

    pub fn color(&self, v: VertexId) -> VertexColor {
        self.colors[v as usize]
    }

    pub fn colors(&self) -> &[VertexColor] {
        &self.colors
    }

    pub fn origin(&self, h: HalfEdgeId) -> VertexId {
        self.origin[h as usize]
    }

    /// Head of the half-edge: origin of its twin.
    pub fn head(&self, h: HalfEdgeId) -> VertexId {
        self.origin[self.twin[h as usize] as usize]
    }

    pub fn twin(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.twin[h as usize]
    }

    pub fn rotation(&self, v: VertexId) -> &[HalfEdgeId] {
        &self.rotation[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.rotation[v as usize].len()
    }

    /// Rotation successor at the origin of `h` (counterclockwise).
    pub fn sigma(&self, h: HalfEdgeId) -> HalfEdgeId {
        let rot = &self.rotation[self.origin[h as usize] as usize];
        let i = self.rot_pos[h as usize] as usize;
        rot[(i + 1) % rot.len()]
    }

    /// Rotation predecessor at the origin of `h`.
    pub fn sigma_inv(&self, h: HalfEdgeId) -> HalfEdgeId {
        let rot = &self.rotation[self.origin[h as usize] as usize];
        let i = self.rot_pos[h as usize] as usize;
        rot[(i + rot.len() - 1) % rot.len()]
    }

    /// Successor of `h` along its face walk.
    pub fn next_in_face(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.sigma(self.twin(h))
    }

    /// All face walks, each a cyclic list of half-edges. Every half-edge lies
    /// on exactly one walk.
    pub fn faces(&self) -> Vec<Vec<HalfEdgeId>> {
        let n = self.n_half_edges();
        let mut seen = vec![false; n];
        let mut faces = Vec::new();
        for h0 in 0..n as u32 {
            if seen[h0 as usize] {
                continue;
            }
            let mut walk = Vec::new();
            let mut h = h0;
            loop {
                seen[h as usize] = true;
                walk.push(h);
                h = self.next_in_face(h);
                if h == h0 {
                    break;
                }
            }
            faces.push(walk);
        }
        faces
    }

    /// The face walk containing `h`, starting at `h`.
    pub fn face_of(&self, h0: HalfEdgeId) -> Vec<HalfEdgeId> {
        let mut walk = vec![h0];
        let mut h = self.next_in_face(h0);
        while h != h0 {
            walk.push(h);
            h = self.next_in_face(h);
        }
        walk
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &h in &self.rotation[v as usize] {
                let w = self.head(h);
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.faces().len() as i64
    }

    pub fn count_color(&self, c: VertexColor) -> usize {
        self.colors.iter().filter(|&&x| x == c).count()
    }

    /// Map with every rotation order reversed: the mirror image embedding.
    pub fn mirrored(&self) -> ColoredMap {
        let rotation = self
            .rotation
            .iter()
            .map(|r| r.iter().rev().copied().collect())
            .collect();
        ColoredMap::from_parts(self.colors.clone(), rotation, self.twin.clone())
    }

    /// Same map with vertex and half-edge ids permuted (for invariance tests).
    /// `vperm[v]` is the new id of vertex `v`, `hperm[h]` of half-edge `h`.
    pub fn relabeled(&self, vperm: &[u32], hperm: &[u32]) -> ColoredMap {
        let nv = self.n_vertices();
        let mut colors = vec![VertexColor::Sink; nv];
        let mut rotation = vec![Vec::new(); nv];
        for v in 0..nv {
            colors[vperm[v] as usize] = self.colors[v];
            rotation[vperm[v] as usize] = self.rotation[v]
                .iter()
                .map(|&h| hperm[h as usize])
                .collect();
        }
        let mut twin = vec![0u32; self.n_half_edges()];
        for h in 0..self.n_half_edges() {
            twin[hperm[h] as usize] = hperm[self.twin[h] as usize];
        }
        ColoredMap::from_parts(colors, rotation, twin)
    }

    /// Number of proper 2-colorings with colors {Sink, Source}. Connected
    /// bipartite maps have exactly 2.
    pub fn proper_two_colorings(&self) -> usize {
        let n = self.n_vertices();
        if n == 0 {
            return 0;
        }
        // Try both colors for vertex 0 and propagate.
        let mut count = 0;
        for start in [VertexColor::Sink, VertexColor::Source] {
            let mut assigned: Vec<Option<VertexColor>> = vec![None; n];
            assigned[0] = Some(start);
            let mut stack = vec![0u32];
            let mut ok = true;
            while let Some(v) = stack.pop() {
                let cv = assigned[v as usize].unwrap();
                for &h in &self.rotation[v as usize] {
                    let w = self.head(h) as usize;
                    match assigned[w] {
                        None => {
                            assigned[w] = Some(cv.swapped());
                            stack.push(w as u32);
                        }
                        Some(cw) => {
                            if cw == cv {
                                ok = false;
                            }
                        }
                    }
                }
            }
            if ok && assigned.iter().all(|a| a.is_some()) {
                count += 1;
            }
        }
        count
    }
}

/// Counts of sinks and sources; saddles follow from Poincare-Hopf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimaryClass {
    pub sinks: usize,
    pub sources: usize,
}

impl PrimaryClass {
    pub fn saddles(&self) -> usize {
        self.sinks + self.sources - 2
    }

    pub fn total(&self) -> usize {
        self.sinks + self.sources
    }
}

impl std::fmt::Display for PrimaryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{{},{}}}", self.sinks, self.sources)
    }
}

/// Count colors and assert the index sum. For saddle-free representations the
/// saddle count is implied by the face structure, so only S,U are reported.
pub fn primary_class(map: &ColoredMap) -> Result<PrimaryClass, MapError> {
    let s = map.count_color(VertexColor::Sink);
    let u = map.count_color(VertexColor::Source);
    let h = map.count_color(VertexColor::Saddle);
    if s + u < 2 || (h > 0 && s + u != h + 2) {
        return Err(MapError::PoincareHopfViolation { s, u, h });
    }
    Ok(PrimaryClass { sinks: s, sources: u })
}

/// One validation check outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of validating a map against a representation class.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub repr: Repr,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

/// True when the map is the edgeless two-vertex map {sink, source}: the
/// primary representation of the {1,1} class.
pub fn is_edgeless_pair(map: &ColoredMap) -> bool {
    map.n_vertices() == 2
        && map.n_half_edges() == 0
        && map.count_color(VertexColor::Sink) == 1
        && map.count_color(VertexColor::Source) == 1
}

/// True when the map is P2: one sink, one source, a single edge.
pub fn is_p2(map: &ColoredMap) -> bool {
    map.n_vertices() == 2
        && map.n_edges() == 1
        && map.count_color(VertexColor::Sink) == 1
        && map.count_color(VertexColor::Source) == 1
}

/// Validate `map` as a member of representation class `repr`.
///
/// Structural problems (twin/rotation inconsistency) surface as a
/// `MapError::StructurallyMalformed`; class-invariant failures are reported
/// per check in the returned report.
pub fn validate(map: &ColoredMap, repr: Repr) -> Result<ValidationReport, MapError> {
    map.check_structure()?;
    let mut rep = ValidationReport {
        repr,
        checks: Vec::new(),
    };

    let s = map.count_color(VertexColor::Sink);
    let u = map.count_color(VertexColor::Source);
    let h = map.count_color(VertexColor::Saddle);

    // Degenerate members first.
    match repr {
        Repr::Q3 if map.n_half_edges() == 0 => {
            rep.push(
                "edgeless",
                is_edgeless_pair(map),
                "an edgeless primary graph must be exactly {one sink, one source}",
            );
            return Ok(rep);
        }
        Repr::T3 | Repr::Q2 if is_p2(map) => {
            rep.push("tree", true, "P2 admitted by convention");
            return Ok(rep);
        }
        _ => {}
    }

    rep.push(
        "nonempty",
        map.n_half_edges() > 0 && map.n_vertices() > 0,
        "",
    );
    if map.n_half_edges() == 0 {
        return Ok(rep);
    }
    rep.push("no-isolated-vertices", map.rotation.iter().all(|r| !r.is_empty()), "");
    rep.push("connected", map.is_connected(), "");
    let euler = map.euler_characteristic();
    rep.push("euler", euler == 2, format!("V-E+F = {euler}"));

    let faces = map.faces();
    match repr {
        Repr::Q2 => {
            rep.push("two-colored", h == 0, format!("{h} saddles present"));
            let bipartite = (0..map.n_half_edges() as u32)
                .all(|e| map.color(map.origin(e)) != map.color(map.head(e)));
            rep.push("bipartite", bipartite, "every edge joins a sink and a source");
            let quad = faces.iter().all(|f| f.len() == 4);
            rep.push("quad-faces", quad, "all face walks have length 4");
        }
        Repr::Q3 => {
            let quad = faces.iter().all(|f| f.len() == 4);
            rep.push("quad-faces", quad, "");
            let alt = faces.iter().all(|f| {
                f.len() == 4 && {
                    let c: Vec<_> = f.iter().map(|&e| map.color(map.origin(e))).collect();
                    let saddles_opposite = c[0] == VertexColor::Saddle && c[2] == VertexColor::Saddle
                        || c[1] == VertexColor::Saddle && c[3] == VertexColor::Saddle;
                    let others: Vec<_> = c
                        .iter()
                        .filter(|&&x| x != VertexColor::Saddle)
                        .copied()
                        .collect();
                    saddles_opposite
                        && others.len() == 2
                        && others.contains(&VertexColor::Sink)
                        && others.contains(&VertexColor::Source)
                }
            });
            rep.push(
                "face-coloring",
                alt,
                "each face walk alternates source-saddle-sink-saddle",
            );
            let saddle_deg = (0..map.n_vertices() as u32)
                .filter(|&v| map.color(v) == VertexColor::Saddle)
                .all(|v| map.degree(v) == 4);
            rep.push("saddle-degree", saddle_deg, "deg(p)=4 for saddles");
            rep.push(
                "poincare-hopf",
                s + u == h + 2 && s >= 1 && u >= 1,
                format!("S={s} U={u} H={h}"),
            );
        }
        Repr::T3 => {
            let tri = faces.iter().all(|f| {
                f.len() == 3 && {
                    let mut c: Vec<_> = f.iter().map(|&e| map.color(map.origin(e))).collect();
                    c.sort();
                    c == vec![VertexColor::Sink, VertexColor::Source, VertexColor::Saddle]
                }
            });
            rep.push("tri-faces", tri, "each face has one vertex of each color");
            let saddle_deg = (0..map.n_vertices() as u32)
                .filter(|&v| map.color(v) == VertexColor::Saddle)
                .all(|v| map.degree(v) == 4);
            rep.push("saddle-degree", saddle_deg, "deg(p)=4 for saddles");
            rep.push(
                "poincare-hopf",
                s + u == h + 2 && s >= 1 && u >= 1,
                format!("S={s} U={u} H={h}"),
            );
        }
    }
    Ok(rep)
}

/// Convenience: build the path graph P2 (sink - source).
pub fn p2() -> ColoredMap {
    ColoredMap::new(
        vec![VertexColor::Sink, VertexColor::Source],
        vec![vec![0], vec![1]],
        &[(0, 1)],
    )
    .unwrap()
}

/// Build P3 with the given center and end colors (ends share a color).
pub fn p3(end_color: VertexColor) -> ColoredMap {
    let center = end_color.swapped();
    // vertices: 0,2 = ends, 1 = center; half-edges 0/1 on first edge, 2/3 on second
    ColoredMap::new(
        vec![end_color, center, end_color],
        vec![vec![0], vec![1, 2], vec![3]],
        &[(0, 1), (2, 3)],
    )
    .unwrap()
}

/// Build the 4-cycle sink-source-sink-source with two quadrangular faces.
pub fn four_cycle() -> ColoredMap {
    use VertexColor::*;
    // vertices 0..4 around the cycle, edges (0,1),(1,2),(2,3),(3,0)
    ColoredMap::new(
        vec![Sink, Source, Sink, Source],
        vec![vec![0, 7], vec![1, 2], vec![3, 4], vec![5, 6]],
        &[(0, 1), (2, 3), (4, 5), (6, 7)],
    )
    .unwrap()
}

/// The edgeless primary representation of the {1,1} class.
pub fn edgeless_pair() -> ColoredMap {
    ColoredMap::new(
        vec![VertexColor::Sink, VertexColor::Source],
        vec![vec![], vec![]],
        &[],
    )
    .unwrap()
}
