//! Canonical byte keys for embedded and abstract colored multigraphs.
//!
//! The tertiary key is a canonical form of the rotation system: for every
//! starting half-edge (and, when mirror images are identified, for both
//! orientations) the map is traversed in a breadth-first order determined
//! only by the structure, emitting one (sigma, twin, color) triple per
//! half-edge under the discovered renaming; the lexicographically smallest
//! emission wins. Maps are tiny, so the O(E^2) cost is irrelevant.
//!
//! The secondary key canonicalizes the abstract colored multigraph with a
//! partition-refinement plus individualization backtracking search.

use crate::map::ColoredMap;
use serde::{Deserialize, Serialize};

/// Whether mirror-image embeddings are identified (the default reading of
/// "homeomorphic embedded graphs") or kept distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MirrorPolicy {
    #[default]
    Identify,
    Distinguish,
}

/// Canonical keys of one map: `tertiary` decides embedded equivalence,
/// `secondary` abstract-graph equivalence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalKey {
    pub tertiary: KeyBytes,
    pub secondary: KeyBytes,
}

/// A canonical byte string, displayed as hex.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeyBytes(pub Vec<u8>);

impl std::fmt::Debug for KeyBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

impl std::fmt::Display for KeyBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl KeyBytes {
    pub fn parse_hex(s: &str) -> Option<KeyBytes> {
        if s.len() % 2 != 0 {
            return None;
        }
        let mut out = Vec::with_capacity(s.len() / 2);
        for i in (0..s.len()).step_by(2) {
            out.push(u8::from_str_radix(&s[i..i + 2], 16).ok()?);
        }
        Some(KeyBytes(out))
    }
}

pub fn canonical_key(map: &ColoredMap) -> CanonicalKey {
    canonical_key_with(map, MirrorPolicy::Identify)
}

pub fn canonical_key_with(map: &ColoredMap, policy: MirrorPolicy) -> CanonicalKey {
    CanonicalKey {
        tertiary: tertiary_key(map, policy),
        secondary: secondary_key(map),
    }
}

/// Emit the traversal encoding starting from `h0`. When `reversed` is set the
/// rotation orders are read backwards, encoding the mirror embedding.
fn encode_from(map: &ColoredMap, h0: u32, reversed: bool, best: Option<&[u8]>) -> Option<Vec<u8>> {
    let n = map.n_half_edges();
    let mut rename = vec![u32::MAX; n];
    let mut order: Vec<u32> = Vec::with_capacity(n);
    rename[h0 as usize] = 0;
    order.push(h0);
    let mut out: Vec<u8> = Vec::with_capacity(3 * n);
    let mut next_id = 1u32;
    let mut i = 0usize;
    while i < order.len() {
        let h = order[i];
        let s = if reversed { map.sigma_inv(h) } else { map.sigma(h) };
        let t = map.twin(h);
        for nb in [s, t] {
            if rename[nb as usize] == u32::MAX {
                rename[nb as usize] = next_id;
                next_id += 1;
                order.push(nb);
            }
        }
        debug_assert!(rename[s as usize] < 255 && rename[t as usize] < 255);
        out.push(rename[s as usize] as u8);
        out.push(rename[t as usize] as u8);
        out.push(map.color(map.origin(h)).code());
        // Early abort: no point finishing an encoding already larger.
        if let Some(b) = best {
            let k = out.len();
            if k <= b.len() && out[..k] > b[..k] {
                return None;
            }
        }
        i += 1;
    }
    Some(out)
}

/// Canonical key of the embedded map (connected; covers the edgeless {1,1}
/// case by encoding the color multiset).
pub fn tertiary_key(map: &ColoredMap, policy: MirrorPolicy) -> KeyBytes {
    if map.n_half_edges() == 0 {
        let mut codes: Vec<u8> = map.colors().iter().map(|c| c.code()).collect();
        codes.sort_unstable();
        let mut out = vec![b'v'];
        out.extend(codes);
        return KeyBytes(out);
    }
    let mut best: Option<Vec<u8>> = None;
    let orientations: &[bool] = match policy {
        MirrorPolicy::Identify => &[false, true],
        MirrorPolicy::Distinguish => &[false],
    };
    for &rev in orientations {
        for h0 in 0..map.n_half_edges() as u32 {
            if let Some(enc) = encode_from(map, h0, rev, best.as_deref()) {
                if best.as_deref().map_or(true, |b| enc.as_slice() < b) {
                    best = Some(enc);
                }
            }
        }
    }
    KeyBytes(best.unwrap())
}

// ---------------------------------------------------------------------------
// Abstract colored multigraph canonicalization
// ---------------------------------------------------------------------------

/// Adjacency with multiplicities, colors attached.
struct Abstract {
    colors: Vec<u8>,
    adj: Vec<Vec<u32>>, // n x n multiplicity matrix
}

impl Abstract {
    fn from_map(map: &ColoredMap) -> Abstract {
        let n = map.n_vertices();
        let mut adj = vec![vec![0u32; n]; n];
        for h in 0..map.n_half_edges() as u32 {
            let a = map.origin(h) as usize;
            let b = map.head(h) as usize;
            adj[a][b] += 1; // each edge contributes one half-edge per direction
        }
        Abstract {
            colors: map.colors().iter().map(|c| c.code()).collect(),
            adj,
        }
    }

    fn n(&self) -> usize {
        self.colors.len()
    }

    /// Encoding under a vertex ordering `ord` (ord[i] = old id in slot i).
    fn encode(&self, ord: &[usize]) -> Vec<u8> {
        let n = self.n();
        let mut out = Vec::with_capacity(n + n * n / 2 + 1);
        for &v in ord {
            out.push(self.colors[v]);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                debug_assert!(self.adj[ord[i]][ord[j]] < 256);
                out.push(self.adj[ord[i]][ord[j]] as u8);
            }
        }
        out
    }
}

/// Refine a partition (list of cells of vertex ids) until stable, splitting by
/// (color, multiset of edge multiplicities into each cell).
fn refine(g: &Abstract, parts: &mut Vec<Vec<usize>>) {
    loop {
        let mut changed = false;
        let mut cell_of = vec![0usize; g.n()];
        for (ci, cell) in parts.iter().enumerate() {
            for &v in cell {
                cell_of[v] = ci;
            }
        }
        let ncells = parts.len();
        let mut new_parts: Vec<Vec<usize>> = Vec::new();
        for cell in parts.iter() {
            if cell.len() == 1 {
                new_parts.push(cell.clone());
                continue;
            }
            // Signature: counts of edge-ends into each current cell.
            let mut sigs: Vec<(Vec<u32>, usize)> = cell
                .iter()
                .map(|&v| {
                    let mut sig = vec![0u32; ncells];
                    for w in 0..g.n() {
                        if g.adj[v][w] > 0 {
                            sig[cell_of[w]] += g.adj[v][w];
                        }
                    }
                    (sig, v)
                })
                .collect();
            sigs.sort();
            let mut cur: Vec<usize> = vec![sigs[0].1];
            for k in 1..sigs.len() {
                if sigs[k].0 == sigs[k - 1].0 {
                    cur.push(sigs[k].1);
                } else {
                    new_parts.push(std::mem::take(&mut cur));
                    cur = vec![sigs[k].1];
                    changed = true;
                }
            }
            new_parts.push(cur);
        }
        *parts = new_parts;
        if !changed {
            return;
        }
    }
}

fn search(g: &Abstract, parts: Vec<Vec<usize>>, best: &mut Option<Vec<u8>>) {
    // Find first non-singleton cell.
    let target = parts.iter().position(|c| c.len() > 1);
    match target {
        None => {
            let ord: Vec<usize> = parts.iter().map(|c| c[0]).collect();
            let enc = g.encode(&ord);
            if best.as_ref().map_or(true, |b| enc < *b) {
                *best = Some(enc);
            }
        }
        Some(ci) => {
            for k in 0..parts[ci].len() {
                let mut next = Vec::with_capacity(parts.len() + 1);
                for (j, cell) in parts.iter().enumerate() {
                    if j == ci {
                        let v = cell[k];
                        next.push(vec![v]);
                        let rest: Vec<usize> =
                            cell.iter().copied().filter(|&w| w != v).collect();
                        next.push(rest);
                    } else {
                        next.push(cell.clone());
                    }
                }
                refine(g, &mut next);
                search(g, next, best);
            }
        }
    }
}

/// Canonical key of the abstract vertex-colored multigraph.
pub fn secondary_key(map: &ColoredMap) -> KeyBytes {
    let g = Abstract::from_map(map);
    let n = g.n();
    if n == 0 {
        return KeyBytes(Vec::new());
    }
    // Initial partition by (color, degree).
    let mut by_sig: std::collections::BTreeMap<(u8, u32), Vec<usize>> = Default::default();
    for v in 0..n {
        let deg: u32 = g.adj[v].iter().sum();
        by_sig.entry((g.colors[v], deg)).or_default().push(v);
    }
    let mut parts: Vec<Vec<usize>> = by_sig.into_values().collect();
    refine(&g, &mut parts);
    let mut best = None;
    search(&g, parts, &mut best);
    KeyBytes(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{four_cycle, p2, p3, VertexColor};

    #[test]
    fn relabeling_invariance() {
        let m = four_cycle();
        // Rotate labels: v -> v+1 mod 4, h -> h+2 mod 8.
        let vperm: Vec<u32> = (0..4).map(|v| (v + 1) % 4).collect();
        let hperm: Vec<u32> = (0..8).map(|h| (h + 2) % 8).collect();
        let m2 = m.relabeled(&vperm, &hperm);
        assert_eq!(canonical_key(&m), canonical_key(&m2));
    }

    #[test]
    fn mirror_identified_by_default() {
        let m = four_cycle();
        let mir = m.mirrored();
        assert_eq!(
            tertiary_key(&m, MirrorPolicy::Identify),
            tertiary_key(&mir, MirrorPolicy::Identify)
        );
    }

    #[test]
    fn distinct_small_maps_have_distinct_keys() {
        let a = p2();
        let b = p3(VertexColor::Source);
        let c = p3(VertexColor::Sink);
        let d = four_cycle();
        let keys = [
            canonical_key(&a),
            canonical_key(&b),
            canonical_key(&c),
            canonical_key(&d),
        ];
        for i in 0..keys.len() {
            for j in (i + 1)..keys.len() {
                assert_ne!(keys[i], keys[j], "maps {i} and {j} collide");
            }
        }
    }

    #[test]
    fn color_swap_changes_key() {
        let b = p3(VertexColor::Source);
        let c = p3(VertexColor::Sink);
        assert_ne!(secondary_key(&b), secondary_key(&c));
    }
}
