use proptest::prelude::*;

use billiard_book::book::validate_book;
use billiard_book::dynamics::{simulate, trace_to_game};
use billiard_book::fixtures::family;
use billiard_book::game::{
    admissible_start, compile_general, compile_simple, invert_book, leaf_count_bounds, validate_game, verify_game,
    GameError, OrderedGame,
};

const POOL: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 3.5];

/// Valid games without cyclically repeated neighbours, `2 ≤ n ≤ 6`.
fn repeat_free_game() -> impl Strategy<Value = OrderedGame> {
    (2usize..=6)
        .prop_flat_map(|n| {
            (
                0..POOL.len(),
                prop::collection::vec(1..POOL.len(), n - 1),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_filter_map("first and last ellipse coincide", |(first, steps, flips)| {
            let mut idx = vec![first];
            for s in steps {
                idx.push((idx[idx.len() - 1] + s) % POOL.len());
            }
            let n = idx.len();
            if idx[0] == idx[n - 1] {
                return None;
            }
            let betas: Vec<f64> = idx.iter().map(|&i| POOL[i]).collect();
            let mut sig = vec![1; n];
            for k in 0..n {
                let (p, q) = ((k + n - 1) % n, (k + 1) % n);
                if flips[k] && betas[k] > betas[p] && betas[k] > betas[q] && sig[p] == 1 && sig[q] == 1 {
                    sig[k] = -1;
                }
            }
            Some(OrderedGame::new(family(), betas, sig))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compiled_books_are_valid_and_bounded(g in repeat_free_game()) {
        prop_assert!(validate_game(&g).is_valid());
        let r = compile_simple(&g).unwrap();
        prop_assert!(validate_book(&r.book).is_empty());
        let (lo, hi, s) = leaf_count_bounds(&g).unwrap();
        prop_assert_eq!(s, r.s_count);
        prop_assert!(lo <= r.leaf_count && r.leaf_count <= hi);
        prop_assert_eq!(compile_general(&g).unwrap(), r.clone());
        prop_assert_eq!(invert_book(&invert_book(&r.book)), r.book);
    }

    #[test]
    fn compiled_books_realise_the_game(g in repeat_free_game(), seed in any::<u64>()) {
        let r = compile_simple(&g).unwrap();
        let m = verify_game(&r.book, &g, 4, seed).unwrap();
        prop_assert!(m.is_empty(), "{:?}", m);

        // long run from one admissible start
        let start = admissible_start(&r, 6.0, seed).unwrap();
        let n = g.len();
        let t = simulate(&r.book, start, 20 * n);
        let trace = trace_to_game(&t);
        prop_assert!(trace.len() >= 5 * n);
        let expected = r.game.expected_trace();
        for (j, e) in trace.iter().enumerate() {
            prop_assert_eq!(*e, expected[j % n]);
        }
    }

    #[test]
    fn inverted_books_realise_the_inverse_game(g in repeat_free_game(), seed in any::<u64>()) {
        let r = compile_simple(&g).unwrap();
        let inverse = r.game.inverse();
        let m = verify_game(&invert_book(&r.book), &inverse, 4, seed).unwrap();
        prop_assert!(m.is_empty(), "{:?}", m);
    }

    #[test]
    fn cyclic_shifts_compile_to_the_same_book(g in repeat_free_game(), k in 0usize..6) {
        let shifted = g.rotated(k % g.len());
        prop_assert_eq!(compile_simple(&shifted).unwrap().book, compile_simple(&g).unwrap().book);
    }
}

#[test]
fn inadmissible_caustics_are_rejected() {
    let g = OrderedGame::new(family(), vec![0.0, 2.0, 3.5], vec![1, 1, -1]);
    let r = compile_simple(&g).unwrap();
    for c in [1.0, 3.5, 4.0, 9.0, 10.0] {
        assert!(
            matches!(admissible_start(&r, c, 0), Err(GameError::InadmissibleCaustic { .. })),
            "{c}"
        );
    }
    assert!(admissible_start(&r, 3.7, 0).is_ok());
}

#[test]
fn starts_are_deterministic_in_the_seed() {
    let g = OrderedGame::new(family(), vec![0.0, 2.0], vec![1, 1]);
    let r = compile_simple(&g).unwrap();
    assert_eq!(admissible_start(&r, 6.0, 5).unwrap(), admissible_start(&r, 6.0, 5).unwrap());
    assert_ne!(admissible_start(&r, 6.0, 5).unwrap(), admissible_start(&r, 6.0, 6).unwrap());
}
