//! Exhaustive surgery laws over the small enumeration: every splitting is
//! undone by a contraction, slides preserve the primary class and face count,
//! the ancestor search certifies every secondary slide, and surgeries commute
//! with canonical keys under relabeling.

use pebble_graph::canonical::{secondary_key, tertiary_key, MirrorPolicy};
use pebble_graph::map::{primary_class, validate, Repr};
use pebble_graph::metagraph::enumerate;
use pebble_graph::surgery::{
    all_slides, all_splittings, contract, find_ancestor, slide, split, AncestorOutcome,
    SplitWitness,
};

#[test]
fn split_then_contract_is_identity_everywhere() {
    for v in enumerate(5, 100_000).unwrap() {
        for w in all_splittings(&v.map) {
            let child = split(&v.map, &w).unwrap();
            assert!(validate(&child, Repr::Q2).unwrap().passed());
            let pc0 = primary_class(&v.map).unwrap();
            let pc1 = primary_class(&child).unwrap();
            // exactly one of S,U grows by one (the split vertex color)
            assert_eq!(pc0.total() + 1, pc1.total());
            assert!(
                (pc1.sinks == pc0.sinks + 1 && pc1.sources == pc0.sources)
                    || (pc1.sources == pc0.sources + 1 && pc1.sinks == pc0.sinks)
            );
            // saddles grow by one in the primary view: one more quad face
            let quads =
                |m: &pebble_graph::ColoredMap| m.faces().iter().filter(|f| f.len() == 4).count();
            assert_eq!(quads(&v.map) + 1, quads(&child));
            let undone = pebble_graph::surgery::all_contractions(&child)
                .iter()
                .any(|cw| {
                    contract(&child, cw.dart)
                        .map(|(m, _)| tertiary_key(&m, MirrorPolicy::Identify) == v.key)
                        .unwrap_or(false)
                });
            assert!(undone);
        }
    }
}

#[test]
fn contract_then_split_is_identity_everywhere() {
    for v in enumerate(6, 100_000).unwrap() {
        for cw in pebble_graph::surgery::all_contractions(&v.map) {
            let (parent, inverse) = contract(&v.map, cw.dart).unwrap();
            assert!(validate(&parent, Repr::Q2).unwrap().passed());
            let back = split(&parent, &inverse).unwrap();
            assert_eq!(
                tertiary_key(&back, MirrorPolicy::Identify),
                v.key,
                "inverse witness does not restore the map"
            );
        }
    }
}

#[test]
fn slides_preserve_class_and_faces() {
    for v in enumerate(6, 100_000).unwrap() {
        let f0 = v.map.faces().len();
        for w in all_slides(&v.map) {
            let child = slide(&v.map, &w).unwrap();
            assert!(validate(&child, Repr::Q2).unwrap().passed());
            assert_eq!(primary_class(&child).unwrap(), v.class);
            assert_eq!(child.faces().len(), f0);
            assert_eq!(child.n_edges(), v.map.n_edges());
        }
    }
}

#[test]
fn every_secondary_slide_has_twin_ancestor() {
    // The combinatorial heart: for each slide between abstractly distinct
    // maps a twin-splitting ancestor exists; slides between isomorphic
    // abstract graphs report so.
    let mut secondary = 0usize;
    let mut isomorphic = 0usize;
    for v in enumerate(6, 100_000).unwrap() {
        for w in all_slides(&v.map) {
            let child = slide(&v.map, &w).unwrap();
            match find_ancestor(&v.map, &child, &w).unwrap() {
                AncestorOutcome::Found { ancestor, witness, .. } => {
                    secondary += 1;
                    assert_ne!(secondary_key(&child), v.secondary);
                    // replay both twin splittings
                    let b2 = split(&ancestor, &witness.split_to_b.witness).unwrap();
                    let c2 = split(&ancestor, &witness.split_to_c.witness).unwrap();
                    assert_eq!(tertiary_key(&b2, MirrorPolicy::Identify), v.key);
                    assert_eq!(
                        tertiary_key(&c2, MirrorPolicy::Identify),
                        tertiary_key(&child, MirrorPolicy::Identify)
                    );
                    // twin windows differ in exactly one element
                    let d1 = sym_diff(&witness.split_to_b.side_a, &witness.split_to_c.side_a);
                    let d2 = sym_diff(&witness.split_to_b.side_a, &witness.split_to_c.side_b);
                    let d3 = sym_diff(&witness.split_to_b.side_b, &witness.split_to_c.side_a);
                    let d4 = sym_diff(&witness.split_to_b.side_b, &witness.split_to_c.side_b);
                    assert!([d1, d2, d3, d4].contains(&1));
                }
                AncestorOutcome::Isomorphic => {
                    isomorphic += 1;
                    assert_eq!(secondary_key(&child), v.secondary);
                }
            }
        }
    }
    assert!(secondary > 0 && isomorphic > 0);
}

#[test]
fn surgeries_commute_with_relabeling() {
    let maps = enumerate(4, 100_000).unwrap();
    for v in &maps {
        let m = &v.map;
        let nv = m.n_vertices();
        let nh = m.n_half_edges();
        // a fixed nontrivial relabeling: rotate ids
        let vperm: Vec<u32> = (0..nv as u32).map(|x| (x + 1) % nv as u32).collect();
        let hperm: Vec<u32> = (0..nh as u32).map(|x| (x + 3) % nh.max(1) as u32).collect();
        let m2 = m.relabeled(&vperm, &hperm);
        for w in all_splittings(m) {
            let w2 = SplitWitness {
                vertex: vperm[w.vertex as usize],
                dart_x: hperm[w.dart_x as usize],
                dart_y: hperm[w.dart_y as usize],
            };
            let a = split(m, &w).unwrap();
            let b = split(&m2, &w2).unwrap();
            assert_eq!(
                tertiary_key(&a, MirrorPolicy::Identify),
                tertiary_key(&b, MirrorPolicy::Identify)
            );
        }
    }
}

fn sym_diff(a: &[u32], b: &[u32]) -> usize {
    use std::collections::BTreeSet;
    let sa: BTreeSet<_> = a.iter().collect();
    let sb: BTreeSet<_> = b.iter().collect();
    sa.symmetric_difference(&sb).count()
}
