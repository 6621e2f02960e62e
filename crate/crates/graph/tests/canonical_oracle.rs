//! Canonical keys certified against brute-force isomorphism search: key
//! equality must coincide with the existence of an explicit isomorphism,
//! embedded and abstract, over all pairs of small enumerated maps.

use pebble_graph::canonical::{secondary_key, tertiary_key, MirrorPolicy};
use pebble_graph::convert::convert;
use pebble_graph::map::Repr;
use pebble_graph::metagraph::enumerate;
use pebble_graph::oracle::{abstract_isomorphic, embedded_isomorphic};
use proptest::prelude::*;

#[test]
fn key_equality_matches_explicit_isomorphism() {
    let maps: Vec<_> = enumerate(6, 100_000).unwrap();
    // Quasi-dual forms have at most 6 vertices here, primary forms up to 10.
    let q3: Vec<_> = maps
        .iter()
        .map(|v| convert(&v.map, Repr::Q2, Repr::Q3).unwrap())
        .collect();
    for (i, a) in maps.iter().enumerate() {
        for (j, b) in maps.iter().enumerate().skip(i) {
            let keys_equal = a.key == b.key;
            let iso = embedded_isomorphic(&a.map, &b.map, true);
            assert_eq!(keys_equal, iso, "tertiary key vs oracle at pair ({i},{j})");
            let sec_equal = a.secondary == b.secondary;
            let abs = abstract_isomorphic(&a.map, &b.map);
            assert_eq!(sec_equal, abs, "secondary key vs oracle at pair ({i},{j})");
            // same discipline on the primary representation
            let q3_keys = tertiary_key(&q3[i], MirrorPolicy::Identify)
                == tertiary_key(&q3[j], MirrorPolicy::Identify);
            assert_eq!(q3_keys, embedded_isomorphic(&q3[i], &q3[j], true));
            assert_eq!(
                secondary_key(&q3[i]) == secondary_key(&q3[j]),
                abstract_isomorphic(&q3[i], &q3[j])
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Relabeling vertices and half-edges never changes either key.
    #[test]
    fn keys_invariant_under_relabeling(pick in 0usize..73, seed in any::<u64>()) {
        let maps = enumerate(6, 100_000).unwrap();
        let m = &maps[pick % maps.len()].map;
        // build a permutation from the seed (xorshift-style shuffle)
        let mut state = seed | 1;
        let mut shuffled = |n: usize| -> Vec<u32> {
            let mut v: Vec<u32> = (0..n as u32).collect();
            for i in (1..n).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let j = (state % (i as u64 + 1)) as usize;
                v.swap(i, j);
            }
            v
        };
        let vperm = shuffled(m.n_vertices());
        let hperm = shuffled(m.n_half_edges());
        let m2 = m.relabeled(&vperm, &hperm);
        prop_assert_eq!(tertiary_key(m, MirrorPolicy::Identify), tertiary_key(&m2, MirrorPolicy::Identify));
        prop_assert_eq!(secondary_key(m), secondary_key(&m2));
    }
}
