mod common;

use fairdiv_core::allocator::{fair_envy_cycles_enumerate, Step};

#[test]
fn corpus_exercises_both_lotteries() {
    let (mut with_cycles, mut branching) = (0, 0);
    for (_, inst) in common::corpus().iter().chain(&common::catalog_corpus()) {
        let (_, tree) = fair_envy_cycles_enumerate(inst, 100_000).unwrap();
        if tree.leaves().len() > 1 {
            branching += 1;
        }
        if tree.nodes().iter().any(|n| matches!(n.step, Some(Step::Cycle { .. }))) {
            with_cycles += 1;
        }
    }
    assert!(with_cycles >= 30, "only {with_cycles} instances eliminate a cycle");
    assert!(branching >= 200, "only {branching} instances branch");
}

#[test]
fn corpus_is_stable() {
    let a = common::corpus();
    let b = common::corpus();
    assert_eq!(a.len(), common::CORPUS_SIZE);
    assert!(a.iter().zip(&b).all(|(x, y)| x.1 == y.1));
    for (label, inst) in &a {
        assert!(inst.m() > inst.n() && inst.m() <= 7, "{label}");
        assert!((2..=4).contains(&inst.n()), "{label}");
    }
}
