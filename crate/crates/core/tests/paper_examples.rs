use fairdiv_core::allocator::{fair_envy_cycles_enumerate_with, UnenviedRule};
use fairdiv_core::experiment::{rsd_asymptotic, rsd_closed_form};
use fairdiv_core::fairness::expost_report;
use fairdiv_core::twoagents::impossibility_frontier;
use fairdiv_core::{paper_instance, InstanceParams, Ratio, Rational};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn tradeoff_frontier_approaches_the_curve() {
    for beta in [q(13, 20), q(3, 4), q(9, 10), q(1, 1)] {
        let target = (&beta + q(1, 1)) / (&beta * &beta + &beta * q(2, 1));
        let mut last: Option<Rational> = None;
        for eps in [q(1, 10), q(1, 100), q(1, 1000)] {
            let inst = paper_instance("prop-4.4", &InstanceParams::default().beta(beta.clone()).eps(eps)).unwrap();
            let f = impossibility_frontier(&inst, &beta).unwrap();
            let gap = (f.best_alpha.finite().unwrap() - &target).abs();
            if let Some(prev) = &last {
                assert!(gap < *prev, "beta {beta}: gap {gap} after {prev}");
            }
            last = Some(gap);
        }
        assert!(last.unwrap() < q(1, 100));
    }
}

#[test]
fn deterministic_tie_breaking_is_tight() {
    let eps = q(1, 1000);
    for n in 3..=5usize {
        let inst = paper_instance("tight-d", &InstanceParams::default().n(n).k(1).eps(eps.clone())).unwrap();
        let (d, _) = fair_envy_cycles_enumerate_with(&inst, 10_000, UnenviedRule::HighestIndex).unwrap();
        let r = expost_report(&inst, &d).unwrap();
        let bound = (q(1, 1) + q(n as i64 + 2, 2) * &eps) / (q(2, 1) + &eps);
        assert!(r.min_ex_ante <= Ratio::Finite(bound.clone()), "n={n}: {} vs {bound}", r.min_ex_ante);
        assert!(r.min_ex_ante.at_least(&q(1, 2)));
    }
}

#[test]
fn uniform_tie_breaking_misses_with_probability_two_to_the_minus_k() {
    for (n, k) in [(3, 2), (4, 2), (4, 3)] {
        let inst = paper_instance("tight-d", &InstanceParams::default().n(n).k(k).eps(q(1, 1000))).unwrap();
        let (d, _) = fair_envy_cycles_enumerate_with(&inst, 100_000, UnenviedRule::UniformRandom).unwrap();
        let miss: Rational =
            d.support().iter().filter(|(_, a)| a.bundle(n - 1).iter().all(|g| g < n)).map(|(p, _)| p.clone()).sum();
        assert_eq!(miss, q(1, 1 << k), "n={n} k={k}");
    }
}

#[test]
fn serial_dictatorship_table_tends_to_the_limit() {
    let exact = rsd_closed_form(10_000, 4142, &Rational::zero()).unwrap();
    let x = fairdiv_core::rational::to_f64(&exact);
    assert!((x - rsd_asymptotic(0.4142)).abs() < 1e-3);
    assert!((x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
}
