use std::collections::BTreeMap;

use modsynth_core::crosscheck::{check_case, random_case};
use modsynth_core::inhabitation::{counts_by_size, max_term_size};
use modsynth_core::repo_gen::{dynamic_expand, static_repository, translate_request};
use modsynth_core::types::{is_subtype, parse_atom_set};
use modsynth_core::{bom, build_grammar, count, enumerate, interpret, solve, Atom, AtomSet, Count, Taxonomy, Term};
use proptest::prelude::*;

const NODES: usize = 8;

fn name(i: usize) -> String {
    format!("n{i}")
}

/// Random DAG over `n0..n7`; edges run from higher to lower index.
fn taxonomy() -> impl Strategy<Value = Taxonomy> {
    proptest::collection::vec((1..NODES, 0..NODES), 0..14).prop_map(|pairs| {
        let edges = pairs.into_iter().filter(|(c, p)| p < c).map(|(c, p)| (name(c), name(p)));
        Taxonomy::new("t", (0..NODES).map(name), edges).unwrap()
    })
}

fn atom() -> impl Strategy<Value = Atom> {
    prop_oneof![
        3 => (0..NODES).prop_map(|i| Atom::plain(name(i))),
        1 => (0..2usize, 0..4u64).prop_map(|(k, v)| Atom::property(format!("k{k}"), v)),
        1 => (0..NODES, 0..4u64).prop_map(|(i, v)| Atom::annotated(name(i), "k0", v)),
    ]
}

fn atom_set() -> impl Strategy<Value = AtomSet> {
    proptest::collection::vec(atom(), 0..4).prop_map(|v| v.into_iter().collect())
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = "[a-z][a-z0-9_]{0,3}(\\.[a-z][a-z0-9]{0,2})?".prop_map(Term::leaf);
    leaf.prop_recursive(4, 24, 3, |inner| {
        ("[a-z][a-z0-9]{0,3}", proptest::collection::vec(inner, 1..4)).prop_map(|(c, args)| Term::apply(c, args))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn subtyping_is_a_preorder(t in taxonomy(), a in atom_set(), b in atom_set(), c in atom_set()) {
        prop_assert!(a.leq(&a, &t));
        if a.leq(&b, &t) && b.leq(&c, &t) {
            prop_assert!(a.leq(&c, &t));
        }
        prop_assert!(a.leq(&AtomSet::omega(), &t));
    }

    #[test]
    fn subtyping_is_monotone_in_both_sides(t in taxonomy(), a in atom_set(), b in atom_set(), extra in atom()) {
        if a.leq(&b, &t) {
            prop_assert!(a.clone().with(extra.clone()).leq(&b, &t));
            prop_assert!(a.leq(&b.erase(), &t));
        }
        prop_assert!(a.union(&b).leq(&a, &t));
        prop_assert_eq!(is_subtype(&t, &a, &b).unwrap(), a.leq(&b, &t));
    }

    #[test]
    fn taxonomy_edges_imply_atom_order(t in taxonomy()) {
        for (child, parent) in t.edges() {
            prop_assert!(AtomSet::of([child.as_str()]).leq(&AtomSet::of([parent.as_str()]), &t));
        }
    }

    #[test]
    fn atom_sets_round_trip_through_text(a in atom_set()) {
        prop_assert_eq!(parse_atom_set(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn terms_round_trip_through_text(t in term()) {
        prop_assert_eq!(Term::parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn merge_is_commutative_and_associative(a in taxonomy(), b in taxonomy(), c in taxonomy()) {
        let ab = Taxonomy::merge(&[a.clone(), b.clone()]).unwrap();
        prop_assert_eq!(&ab, &Taxonomy::merge(&[b.clone(), a.clone()]).unwrap());
        // both sides index into the same node range, so unions stay acyclic
        let left = Taxonomy::merge(&[ab, c.clone()]).unwrap();
        let right = Taxonomy::merge(&[a, Taxonomy::merge(&[b, c]).unwrap()]).unwrap();
        prop_assert_eq!(left.nodes(), right.nodes());
        prop_assert_eq!(left.edges(), right.edges());
    }

    #[test]
    fn closure_grows_with_edges(t in taxonomy(), c in 1..NODES, p in 0..NODES) {
        prop_assume!(p < c);
        let bigger = t.with_edge(name(c), name(p)).unwrap();
        for x in t.nodes() {
            let before = t.supertype_closure(x).unwrap();
            let after = bigger.supertype_closure(x).unwrap();
            prop_assert!(before.is_subset(after));
        }
        prop_assert!(bigger.leq(&name(c), &name(p)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_matches_oracle(seed in any::<u64>(), max_size in 1..=6usize) {
        let case = random_case(seed, max_size);
        if let Err(v) = check_case(&case, 5_000_000) {
            return Err(TestCaseError::fail(v.to_string()));
        }
    }

    #[test]
    fn dynamic_entries_erase_to_their_origin(seed in any::<u64>()) {
        let case = random_case(seed, 4);
        let static_repo = static_repository(&case.catalog);
        let repo = dynamic_expand(&static_repo, &case.request, &case.catalog).unwrap();
        for (id, ty) in repo.iter() {
            let origin = static_repo.get(repo.origin_of(id)).unwrap();
            prop_assert_eq!(&ty.erase(), origin);
        }
    }

    #[test]
    fn counts_by_size_sum_to_count(seed in any::<u64>()) {
        let case = random_case(seed, 6);
        let repo = dynamic_expand(&static_repository(&case.catalog), &case.request, &case.catalog).unwrap();
        let g = build_grammar(&repo, case.catalog.taxonomy(), &translate_request(&case.request));
        let per_start: u64 = g.start().iter().map(|&s| counts_by_size(&g, s, 8).iter().sum::<u64>()).sum();
        match (count(&g), max_term_size(&g)) {
            (Count::Finite(n), Some(m)) if m <= 8 => prop_assert_eq!(n, per_start),
            (Count::Finite(n), None) => prop_assert_eq!(n, 0),
            (Count::Infinite, _) => prop_assert!(max_term_size(&g).is_none()),
            _ => {}
        }
    }

    #[test]
    fn solve_is_deterministic(seed in any::<u64>()) {
        let case = random_case(seed, 5);
        let a = solve(&case.catalog, &case.request).unwrap().document.to_json();
        let b = solve(&case.catalog, &case.request).unwrap().document.to_json();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn programs_mirror_their_terms(seed in any::<u64>()) {
        let case = random_case(seed, 6);
        let repo = dynamic_expand(&static_repository(&case.catalog), &case.request, &case.catalog).unwrap();
        let g = build_grammar(&repo, case.catalog.taxonomy(), &translate_request(&case.request));
        for t in enumerate(&g, 6, 64) {
            let program = interpret(&t, &repo, &case.catalog).unwrap();
            let n = t.size();
            prop_assert_eq!(program.instructions.len(), 2 * n - 1);
            prop_assert_eq!(program.inserts().count(), n);
            program.validate().unwrap();

            let mut expected: BTreeMap<String, u64> = BTreeMap::new();
            for id in t.preorder() {
                let component = &repo.binding(id).unwrap().component;
                *expected.entry(component.clone()).or_default() += 1;
            }
            let b = bom(&program, &case.catalog).unwrap();
            prop_assert_eq!(&b.lines, &expected);
            prop_assert_eq!(b.quantity(), n as u64);
        }
    }

    #[test]
    fn catalogs_round_trip_through_disk(seed in any::<u64>()) {
        let case = random_case(seed, 3);
        let dir = tempfile::tempdir().unwrap();
        modsynth_core::component::save_catalog(&case.catalog, dir.path()).unwrap();
        let loaded = modsynth_core::load_catalog(&[dir.path()]).unwrap();
        prop_assert_eq!(loaded, case.catalog);
    }
}
