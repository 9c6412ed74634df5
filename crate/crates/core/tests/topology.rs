use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use billiard_book::dynamics::{simulate, TrajectoryStatus};
use billiard_book::fixtures;
use billiard_book::game::{compile_simple, OrderedGame};
use billiard_book::topology::{
    build_fomenko_graph, classify_singular_level, critical_levels, enumerate_regimes, graphs_isomorphic,
    grazing_probe, pass_through_return, regime_witnesses, AtomType, RegimeState, TopologyError,
};
use billiard_book::{BilliardBook, LeafId};

fn regular_points(book: &BilliardBook, per_interval: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let levels = critical_levels(book);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for _ in 0..per_interval {
            out.push((lo, hi, lo + (hi - lo) * rng.gen_range(0.05..0.95)));
        }
    }
    out
}

fn multiset(book: &BilliardBook, lambda: f64) -> Vec<Vec<RegimeState>> {
    let mut m: Vec<_> = enumerate_regimes(book, lambda).unwrap().into_iter().map(|r| r.states).collect();
    m.sort();
    m
}

#[test]
fn regimes_are_locally_constant() {
    for (name, book) in fixtures::all() {
        let points = regular_points(&book, 2, 11);
        for pair in points.chunks(2) {
            let (lo, hi, l1) = pair[0];
            let l2 = pair[1].2;
            assert_eq!(multiset(&book, l1), multiset(&book, l2), "{name} on ({lo}, {hi})");
            for r in enumerate_regimes(&book, l1).unwrap() {
                assert_eq!(r.caustic_interval, (lo, hi), "{name}");
                assert!(!r.states.is_empty());
            }
        }
    }
}

#[test]
fn witnesses_reproduce_their_regimes() {
    for (name, book) in fixtures::all() {
        for (_, _, lambda) in regular_points(&book, 1, 5) {
            for (r, start) in regime_witnesses(&book, lambda).unwrap() {
                let n = r.states.len();
                let t = simulate(&book, start, 3 * n);
                assert_eq!(t.status, TrajectoryStatus::Completed, "{name} λ = {lambda}");
                let seen: Vec<RegimeState> = t.events.iter().map(RegimeState::from).collect();
                let offset = (0..n).find(|&o| (0..3 * n).all(|j| seen[j] == r.states[(j + o) % n]));
                assert!(offset.is_some(), "{name} λ = {lambda}: {seen:?} vs {:?}", r.states);
            }
        }
    }
}

#[test]
fn critical_caustics_are_rejected() {
    let book = fixtures::annulus_two_disks();
    for c in critical_levels(&book) {
        assert!(matches!(
            enumerate_regimes(&book, c),
            Err(TopologyError::CriticalLambda { .. } | TopologyError::OutOfRange(_))
        ), "{c}");
    }
    assert!(matches!(classify_singular_level(&book, 1.0), Err(TopologyError::NotCritical(_))));
}

fn compiled(betas: &[f64], sig: &[i32]) -> BilliardBook {
    compile_simple(&OrderedGame::new(fixtures::family(), betas.to_vec(), sig.to_vec()))
        .unwrap()
        .book
}

fn compiled_books() -> Vec<BilliardBook> {
    vec![
        compiled(&[0.0, 2.0], &[1, 1]),
        compiled(&[0.0, 2.0], &[1, -1]),
        compiled(&[0.0, 2.0, 3.5], &[1, 1, 1]),
        compiled(&[0.0, 2.0, 3.5], &[1, 1, -1]),
        compiled(&[0.0, 3.5, 2.0], &[1, 1, 1]),
        compiled(&[0.0, 3.5, 2.0], &[1, -1, 1]),
        compiled(&[0.0, 2.0, 0.0, 3.5], &[1, 1, 1, 1]),
        compiled(&[0.0, 2.0, 0.0, 3.5], &[1, -1, 1, -1]),
    ]
}

#[test]
fn graphs_respect_atom_capacities() {
    let books = fixtures::all().into_iter().map(|(_, b)| b).chain(compiled_books());
    for book in books {
        let g = build_fomenko_graph(&book).unwrap();
        assert!(!g.has_unknown(), "{}", g.census_string());
        assert!(g.capacity_violations().is_empty(), "{}", g.census_string());
        for a in &g.atoms {
            let expected = match a.atom_type {
                AtomType::A => (1, 0),
                AtomType::B => (1, 2),
                AtomType::C2 => (2, 4),
                AtomType::Unknown => unreachable!(),
            };
            assert_eq!((a.critical_circles, a.separatrix_count), expected, "{}", a.description);
        }
        for e in &g.edges {
            let (lo, hi) = (g.atoms[e.from].lambda.min(g.atoms[e.to].lambda), g.atoms[e.from].lambda.max(g.atoms[e.to].lambda));
            for r in &e.regimes {
                assert!(lo <= r.caustic_interval.0 && r.caustic_interval.1 <= hi);
            }
        }
    }
}

#[test]
fn grazing_probes_match_the_combinatorics() {
    for (name, book) in fixtures::all() {
        for sigma in &book.gluings {
            for leaf in &book.leaves {
                let Ok((ret, _)) = pass_through_return(&book, sigma.ellipse, leaf.id) else {
                    continue;
                };
                let probes = grazing_probe(&book, sigma.ellipse, leaf.id, 16).unwrap();
                assert!(probes.iter().all(|p| *p == Some(ret)), "{name} {} {}", sigma.ellipse, leaf.id);
            }
        }
    }
}

#[test]
fn compiled_books_match_the_reference_graphs() {
    let doubled = build_fomenko_graph(&fixtures::two_annuli_two_disks()).unwrap();
    let nested = build_fomenko_graph(&fixtures::nested_with_outer_annulus()).unwrap();
    for sig in [[1, 1], [1, -1]] {
        let g = build_fomenko_graph(&compiled(&[0.0, 2.0], &sig)).unwrap();
        assert!(graphs_isomorphic(&g, &doubled), "{}", g.census_string());
    }
    for (betas, sig) in [
        ([0.0, 2.0, 3.5], [1, 1, 1]),
        ([0.0, 2.0, 3.5], [1, 1, -1]),
        ([0.0, 3.5, 2.0], [1, 1, 1]),
        ([0.0, 3.5, 2.0], [1, -1, 1]),
    ] {
        let g = build_fomenko_graph(&compiled(&betas, &sig)).unwrap();
        assert!(graphs_isomorphic(&g, &nested), "{}", g.census_string());
    }
    assert!(!graphs_isomorphic(&doubled, &nested));
}

#[test]
fn unglued_ellipses_have_no_return() {
    let book = fixtures::plain_annulus();
    assert!(matches!(
        pass_through_return(&book, fixtures::BETA2, LeafId(1)),
        Err(TopologyError::NoInnerLeaf { .. })
    ));
}
