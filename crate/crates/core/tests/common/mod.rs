#![allow(dead_code)]

use fairdiv_core::model::{check_class, ClassVerdict};
use fairdiv_core::{pad_with_dummies, paper_instance, Instance, InstanceParams, Rational, Valuation, ValuationClass};
use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SIZE: usize = 400;

fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Additive,
    BudgetAdditive,
    UnitDemand,
    SubadditiveTable,
}

impl Kind {
    pub fn class(self) -> ValuationClass {
        match self {
            Kind::Additive => ValuationClass::Additive,
            Kind::BudgetAdditive | Kind::UnitDemand => ValuationClass::Submodular,
            Kind::SubadditiveTable => ValuationClass::Subadditive,
        }
    }
}

/// Numerators over `den`: independent, or a shared base plus small noise so
/// that agents compete for the same items.
fn numerators(rng: &mut ChaCha8Rng, m: usize, den: i64, base: Option<&[i64]>) -> Vec<i64> {
    match base {
        None => (0..m).map(|_| rng.gen_range(0..=3 * den)).collect(),
        Some(b) => b.iter().map(|&x| (x + rng.gen_range(-1..=1)).max(0)).collect(),
    }
}

fn values(rng: &mut ChaCha8Rng, m: usize, den: i64, base: Option<&[i64]>) -> Vec<Rational> {
    numerators(rng, m, den, base).into_iter().map(|x| q(x, den)).collect()
}

/// Monotone subadditive table: sets are filled by size, each value drawn on
/// the `1/den` grid between the largest immediate subset and the cheapest
/// split into two parts.
pub fn subadditive_table(rng: &mut ChaCha8Rng, m: usize, den: i64, base: Option<&[i64]>) -> Valuation {
    let full = 1usize << m;
    let singles = numerators(rng, m, den, base);
    let mut v = vec![0i64; full];
    let mut order: Vec<usize> = (1..full).collect();
    order.sort_by_key(|s| s.count_ones());
    for s in order {
        if s.count_ones() == 1 {
            v[s] = singles[s.trailing_zeros() as usize];
            continue;
        }
        let lower = (0..m).filter(|g| s >> g & 1 == 1).map(|g| v[s & !(1 << g)]).max().unwrap();
        let mut upper = i64::MAX;
        let mut a = (s - 1) & s;
        while a > 0 {
            upper = upper.min(v[a] + v[s & !a]);
            a = (a - 1) & s;
        }
        v[s] = rng.gen_range(lower..=upper);
    }
    Valuation::table_from_fn(m, |s| q(v[s as usize], den)).unwrap()
}

pub fn valuation(rng: &mut ChaCha8Rng, kind: Kind, m: usize, den: i64, base: Option<&[i64]>) -> Valuation {
    match kind {
        Kind::Additive => Valuation::Additive { values: values(rng, m, den, base) },
        Kind::UnitDemand => Valuation::UnitDemand { values: values(rng, m, den, base) },
        Kind::BudgetAdditive => {
            let vals = values(rng, m, den, base);
            let cap = q(rng.gen_range(1..=4 * den), den);
            Valuation::BudgetAdditive { values: vals, cap }
        }
        Kind::SubadditiveTable => subadditive_table(rng, m, den, base),
    }
}

pub fn random_instance(seed: u64, n: usize, m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [Kind::Additive, Kind::BudgetAdditive, Kind::UnitDemand, Kind::SubadditiveTable];
    let mixed = rng.gen_bool(0.25);
    let base = kinds[seed as usize % 4];
    let agent_kinds: Vec<Kind> = (0..n).map(|_| if mixed { kinds[rng.gen_range(0..4)] } else { base }).collect();
    let class = agent_kinds.iter().map(|k| k.class()).max().unwrap();
    let den = rng.gen_range(1..=20);
    let base: Option<Vec<i64>> = rng.gen_bool(0.6).then(|| (0..m).map(|_| rng.gen_range(0..=3 * den)).collect());
    let vals = agent_kinds.iter().map(|&k| valuation(&mut rng, k, m, den, base.as_deref())).collect();
    let inst = Instance::new(m, vals, class).unwrap();
    for v in inst.valuations() {
        assert_eq!(check_class(v, m, class).unwrap(), ClassVerdict::Holds, "seed {seed}");
    }
    inst
}

/// The fixed corpus: `n` cycles through 2, 3, 4 and `m` through `n+1..=7`.
pub fn corpus() -> Vec<(String, Instance)> {
    (0..CORPUS_SIZE as u64)
        .map(|seed| {
            let n = 2 + (seed as usize % 3);
            let choices = 7 - n;
            let m = n + 1 + (seed as usize / 3) % choices;
            (format!("seed {seed}"), random_instance(seed, n, m))
        })
        .collect()
}

/// Catalog families with at least subadditive valuations, padded.
pub fn catalog_corpus() -> Vec<(String, Instance)> {
    let p = InstanceParams::default;
    let eps = Rational::new(BigInt::from(1), BigInt::from(1000));
    [
        ("example-3.2", p().n(4).eps(eps.clone())),
        ("example-3.2", p().n(5)),
        ("example-c1", p()),
        ("prop-4.4", p()),
        ("prop-4.4", p().beta(Rational::new(BigInt::from(7), BigInt::from(10)))),
        ("prop-b1", p()),
        ("lemma-a2", p()),
        ("tight-d", p().n(3).k(2)),
        ("tight-d", p().n(4).k(3).eps(eps)),
        ("rsd-d1", p().n(5).k(1)),
    ]
    .into_iter()
    .map(|(name, params)| (format!("{name} {params:?}"), pad_with_dummies(&paper_instance(name, &params).unwrap())))
    .collect()
}

/// Two-agent instances with up to 10 items; every fourth is additive.
pub fn two_agent_corpus(count: usize) -> Vec<(u64, Instance)> {
    (0..count as u64)
        .map(|seed| {
            let m = 1 + (seed as usize % 10);
            (seed, random_instance(10_000 + seed, 2, m))
        })
        .collect()
}
