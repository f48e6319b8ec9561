//! Valuation oracles and exhaustive class verification.

use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::rational::{is_nonnegative, Rational};

/// Largest item count for which tables are stored or subsets enumerated.
pub const ENUMERATION_CAP: usize = 16;

/// Largest table for which the all-pairs subadditivity check runs when the
/// table is not monotone (the monotone case only needs disjoint pairs).
const NON_MONOTONE_PAIR_CAP: usize = 12;

/// A monotone set function with `v(∅) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Additive { values: Vec<Rational> },
    /// Dense table indexed by bitmask over items `0..domain`. Items at or
    /// beyond `domain` contribute nothing (this is how zero-value dummy items
    /// are attached to table valuations).
    Table { domain: usize, entries: Vec<Option<Rational>> },
    BudgetAdditive { values: Vec<Rational>, cap: Rational },
    UnitDemand { values: Vec<Rational> },
}

impl Valuation {
    /// Builds a table valuation from `(mask, value)` pairs over `domain` items.
    pub fn table<I>(domain: usize, entries: I) -> Result<Valuation>
    where
        I: IntoIterator<Item = (u64, Rational)>,
    {
        if domain > ENUMERATION_CAP {
            return Err(Error::EnumerationLimit {
                what: format!("table over {domain} items"),
                limit: ENUMERATION_CAP,
            });
        }
        let mut dense = vec![None; 1usize << domain];
        for (mask, value) in entries {
            if mask >> domain != 0 {
                return Err(Error::MalformedInstance(format!(
                    "table key {mask} names an item outside 0..{domain}"
                )));
            }
            dense[mask as usize] = Some(value);
        }
        Ok(Valuation::Table { domain, entries: dense })
    }

    /// Builds a complete table from a closure evaluated on every subset.
    pub fn table_from_fn(domain: usize, f: impl Fn(u64) -> Rational) -> Result<Valuation> {
        Valuation::table(domain, (0..1u64 << domain).map(|s| (s, f(s))))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Valuation::Additive { .. } => "additive",
            Valuation::Table { .. } => "table",
            Valuation::BudgetAdditive { .. } => "budget_additive",
            Valuation::UnitDemand { .. } => "unit_demand",
        }
    }

    /// Evaluates `v(S)`. Fails only for a table with a missing entry.
    pub fn try_evaluate(&self, set: &ItemSet) -> Result<Rational> {
        match self {
            Valuation::Additive { values } => Ok(sum_over(values, set)),
            Valuation::BudgetAdditive { values, cap } => {
                let s = sum_over(values, set);
                Ok(if &s > cap { cap.clone() } else { s })
            }
            Valuation::UnitDemand { values } => Ok(set
                .iter()
                .filter_map(|g| values.get(g))
                .max()
                .cloned()
                .unwrap_or_else(Rational::zero)),
            Valuation::Table { domain, entries } => {
                let mask = set.mask_below(*domain);
                match &entries[mask as usize] {
                    Some(v) => Ok(v.clone()),
                    None if mask == 0 => Ok(Rational::zero()),
                    None => Err(Error::MalformedInstance(format!(
                        "table has no entry for bundle {:?}",
                        ItemSet::from_mask(mask)
                    ))),
                }
            }
        }
    }

    /// Number of items the oracle was built over.
    pub fn declared_items(&self) -> usize {
        match self {
            Valuation::Additive { values }
            | Valuation::BudgetAdditive { values, .. }
            | Valuation::UnitDemand { values } => values.len(),
            Valuation::Table { domain, .. } => *domain,
        }
    }

    /// Structural validation against an instance with `m` items.
    pub fn validate(&self, m: usize) -> Result<()> {
        let check_values = |values: &[Rational]| -> Result<()> {
            if values.len() != m {
                return Err(Error::MalformedInstance(format!(
                    "{} values given for {m} items",
                    values.len()
                )));
            }
            if let Some(v) = values.iter().find(|v| !is_nonnegative(v)) {
                return Err(Error::MalformedInstance(format!("negative item value {v}")));
            }
            Ok(())
        };
        match self {
            Valuation::Additive { values } | Valuation::UnitDemand { values } => check_values(values),
            Valuation::BudgetAdditive { values, cap } => {
                check_values(values)?;
                if !is_nonnegative(cap) {
                    return Err(Error::MalformedInstance("negative budget cap".into()));
                }
                Ok(())
            }
            Valuation::Table { domain, entries } => {
                if *domain > m {
                    return Err(Error::MalformedInstance(format!(
                        "table over {domain} items exceeds m = {m}"
                    )));
                }
                for (mask, e) in entries.iter().enumerate() {
                    match e {
                        None if mask != 0 => {
                            return Err(Error::MalformedInstance(format!(
                                "table has no entry for bundle {:?}",
                                ItemSet::from_mask(mask as u64)
                            )))
                        }
                        Some(v) if mask == 0 && !v.is_zero() => {
                            return Err(Error::MalformedInstance("table value of the empty bundle must be 0".into()))
                        }
                        Some(v) if !is_nonnegative(v) => {
                            return Err(Error::MalformedInstance(format!("negative table value {v}")))
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
        }
    }

    /// Same valuation over `extra` additional zero-value items.
    pub fn with_dummy_items(&self, extra: usize) -> Valuation {
        let pad = |values: &[Rational]| {
            let mut v = values.to_vec();
            v.extend(std::iter::repeat_with(Rational::zero).take(extra));
            v
        };
        match self {
            Valuation::Additive { values } => Valuation::Additive { values: pad(values) },
            Valuation::UnitDemand { values } => Valuation::UnitDemand { values: pad(values) },
            Valuation::BudgetAdditive { values, cap } => Valuation::BudgetAdditive {
                values: pad(values),
                cap: cap.clone(),
            },
            Valuation::Table { .. } => self.clone(),
        }
    }

    /// Every subset value over `m` items, indexed by bitmask.
    fn dense(&self, m: usize) -> Result<Vec<Rational>> {
        (0..1u64 << m)
            .map(|mask| self.try_evaluate(&ItemSet::from_mask(mask)))
            .collect()
    }

    /// Width of the subset space the exhaustive checks must cover.
    fn check_width(&self, m: usize) -> Result<usize> {
        let width = match self {
            Valuation::Table { domain, .. } => (*domain).min(m),
            _ => m,
        };
        if width > ENUMERATION_CAP {
            return Err(Error::EnumerationLimit {
                what: format!("class check over {width} items"),
                limit: ENUMERATION_CAP,
            });
        }
        Ok(width)
    }
}

fn sum_over(values: &[Rational], set: &ItemSet) -> Rational {
    set.iter()
        .filter_map(|g| values.get(g))
        .fold(Rational::zero(), |acc, v| acc + v)
}

/// The valuation classes, ordered from most to least restrictive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValuationClass {
    Additive,
    Submodular,
    Subadditive,
    Monotone,
}

impl ValuationClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ValuationClass::Additive => "additive",
            ValuationClass::Submodular => "submodular",
            ValuationClass::Subadditive => "subadditive",
            ValuationClass::Monotone => "monotone",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(ValuationClass::Additive),
            "submodular" => Ok(ValuationClass::Submodular),
            "subadditive" => Ok(ValuationClass::Subadditive),
            "monotone" => Ok(ValuationClass::Monotone),
            other => Err(Error::MalformedInstance(format!("unknown valuation class {other:?}"))),
        }
    }

    /// True when every valuation of class `self` also belongs to `other`.
    pub fn within(self, other: ValuationClass) -> bool {
        self <= other
    }
}

/// A concrete witness that a valuation leaves a class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassViolation {
    /// `v(subset) > v(superset)`.
    NotMonotone { subset: ItemSet, superset: ItemSet },
    /// `v(left ∪ right) > v(left) + v(right)`.
    NotSubadditive { left: ItemSet, right: ItemSet },
    /// `v(smaller + item) - v(smaller) < v(larger + item) - v(larger)`.
    NotSubmodular { smaller: ItemSet, larger: ItemSet, item: usize },
    /// `v(set)` differs from the sum of its singleton values.
    NotAdditive { set: ItemSet },
}

impl std::fmt::Display for ClassViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClassViolation::NotMonotone { subset, superset } => {
                write!(f, "not monotone: v({:?}) > v({:?})", subset.to_vec(), superset.to_vec())
            }
            ClassViolation::NotSubadditive { left, right } => {
                write!(f, "not subadditive: v({:?} + {:?}) exceeds the sum", left.to_vec(), right.to_vec())
            }
            ClassViolation::NotSubmodular { smaller, larger, item } => write!(
                f,
                "not submodular: item {item} adds more to {:?} than to {:?}",
                larger.to_vec(),
                smaller.to_vec()
            ),
            ClassViolation::NotAdditive { set } => {
                write!(f, "not additive: v({:?}) differs from its singleton sum", set.to_vec())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[must_use]
pub enum ClassVerdict {
    Holds,
    Violated(ClassViolation),
}

impl ClassVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ClassVerdict::Holds)
    }
}

// Exhaustive checks operate on a dense table scaled to a common denominator
// so the inner loops run on machine integers whenever the values allow it.
enum Scaled {
    Small(Vec<i128>),
    Big(Vec<Rational>),
}

fn scale(dense: Vec<Rational>) -> Scaled {
    let lcm = dense
        .iter()
        .fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
    let ints: Option<Vec<i128>> = dense
        .iter()
        .map(|v| (v.numer() * (&lcm / v.denom())).to_i128())
        .collect();
    match ints {
        // keep headroom so that sums of two entries cannot overflow
        Some(v) if v.iter().all(|x| x.abs() < i128::MAX / 4) => Scaled::Small(v),
        _ => Scaled::Big(dense),
    }
}

fn monotone_scan<T: Ord>(t: &[T], m: usize) -> ClassVerdict {
    for s in 0..t.len() as u64 {
        for g in 0..m {
            if s & (1 << g) == 0 && t[s as usize] > t[(s | 1 << g) as usize] {
                return ClassVerdict::Violated(ClassViolation::NotMonotone {
                    subset: ItemSet::from_mask(s),
                    superset: ItemSet::from_mask(s | 1 << g),
                });
            }
        }
    }
    ClassVerdict::Holds
}

fn disjoint_pairs_scan<T>(t: &[T]) -> ClassVerdict
where
    T: Ord + Clone,
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    for u in 0..t.len() as u64 {
        // ascending submasks of u
        let mut s = 0u64;
        loop {
            let rest = u & !s;
            if t[u as usize] > &t[s as usize] + &t[rest as usize] {
                return ClassVerdict::Violated(ClassViolation::NotSubadditive {
                    left: ItemSet::from_mask(s),
                    right: ItemSet::from_mask(rest),
                });
            }
            if s == u {
                break;
            }
            s = ((s | !u).wrapping_add(1)) & u;
        }
    }
    ClassVerdict::Holds
}

fn all_pairs_scan<T>(t: &[T]) -> ClassVerdict
where
    T: Ord + Clone,
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    let len = t.len() as u64;
    for s in 0..len {
        for r in 0..len {
            if t[(s | r) as usize] > &t[s as usize] + &t[r as usize] {
                return ClassVerdict::Violated(ClassViolation::NotSubadditive {
                    left: ItemSet::from_mask(s),
                    right: ItemSet::from_mask(r),
                });
            }
        }
    }
    ClassVerdict::Holds
}

fn submodular_scan<T>(t: &[T], m: usize) -> ClassVerdict
where
    T: Ord + Clone,
    for<'a> &'a T: Add<&'a T, Output = T>,
{
    // local exchange form: v(S+g) + v(S+h) >= v(S+g+h) + v(S) for g < h
    // outside S, which is equivalent to diminishing marginals
    for s in 0..t.len() as u64 {
        for g in 0..m {
            if s & (1 << g) != 0 {
                continue;
            }
            for h in g + 1..m {
                if s & (1 << h) != 0 {
                    continue;
                }
                let sg = (s | 1 << g) as usize;
                let sh = (s | 1 << h) as usize;
                let sgh = (s | 1 << g | 1 << h) as usize;
                if &t[sg] + &t[sh] < &t[sgh] + &t[s as usize] {
                    return ClassVerdict::Violated(ClassViolation::NotSubmodular {
                        smaller: ItemSet::from_mask(s),
                        larger: ItemSet::from_mask(sg as u64),
                        item: h,
                    });
                }
            }
        }
    }
    ClassVerdict::Holds
}

/// `v(S) <= v(S + g)` for every `S` and `g ∉ S`.
pub fn check_monotone(v: &Valuation, m: usize) -> Result<ClassVerdict> {
    if !matches!(v, Valuation::Table { .. }) {
        return Ok(ClassVerdict::Holds);
    }
    let w = v.check_width(m)?;
    Ok(match scale(v.dense(w)?) {
        Scaled::Small(t) => monotone_scan(&t, w),
        Scaled::Big(t) => monotone_scan(&t, w),
    })
}

/// `v(S ∪ T) <= v(S) + v(T)` for every pair of bundles.
///
/// For monotone tables only disjoint pairs are scanned: any overlapping pair
/// is dominated by the disjoint pair `(S, T \ S)`.
pub fn check_subadditive(v: &Valuation, m: usize) -> Result<ClassVerdict> {
    if !matches!(v, Valuation::Table { .. }) {
        return Ok(ClassVerdict::Holds);
    }
    let w = v.check_width(m)?;
    let monotone = check_monotone(v, m)?.holds();
    if !monotone && w > NON_MONOTONE_PAIR_CAP {
        return Err(Error::EnumerationLimit {
            what: format!("all-pairs subadditivity over {w} items"),
            limit: NON_MONOTONE_PAIR_CAP,
        });
    }
    Ok(match (scale(v.dense(w)?), monotone) {
        (Scaled::Small(t), true) => disjoint_pairs_scan(&t),
        (Scaled::Big(t), true) => disjoint_pairs_scan(&t),
        (Scaled::Small(t), false) => all_pairs_scan(&t),
        (Scaled::Big(t), false) => all_pairs_scan(&t),
    })
}

/// Diminishing marginal values.
pub fn check_submodular(v: &Valuation, m: usize) -> Result<ClassVerdict> {
    if !matches!(v, Valuation::Table { .. }) {
        return Ok(ClassVerdict::Holds);
    }
    let w = v.check_width(m)?;
    Ok(match scale(v.dense(w)?) {
        Scaled::Small(t) => submodular_scan(&t, w),
        Scaled::Big(t) => submodular_scan(&t, w),
    })
}

/// `v(S) = Σ_{g∈S} v({g})` for every bundle.
pub fn check_additive(v: &Valuation, m: usize) -> Result<ClassVerdict> {
    if matches!(v, Valuation::Additive { .. }) {
        return Ok(ClassVerdict::Holds);
    }
    let w = v.check_width(m)?;
    let singles: Vec<Rational> = (0..w)
        .map(|g| v.try_evaluate(&ItemSet::singleton(g)))
        .collect::<Result<_>>()?;
    for mask in 0..1u64 << w {
        let set = ItemSet::from_mask(mask);
        let sum = set.iter().fold(Rational::zero(), |acc, g| acc + &singles[g]);
        if v.try_evaluate(&set)? != sum {
            return Ok(ClassVerdict::Violated(ClassViolation::NotAdditive { set }));
        }
    }
    // items past a table's domain, or past the checked width, are worth zero
    // on their own, so additivity over the checked width is additivity overall
    Ok(ClassVerdict::Holds)
}

/// Checks membership in `class` (which implies monotonicity for all classes).
pub fn check_class(v: &Valuation, m: usize, class: ValuationClass) -> Result<ClassVerdict> {
    let mono = check_monotone(v, m)?;
    if !mono.holds() {
        return Ok(mono);
    }
    match class {
        ValuationClass::Monotone => Ok(ClassVerdict::Holds),
        ValuationClass::Subadditive => check_subadditive(v, m),
        ValuationClass::Submodular => check_submodular(v, m),
        ValuationClass::Additive => check_additive(v, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    #[test]
    fn evaluate_closed_forms() {
        let add = Valuation::Additive { values: vec![int(100), int(50), int(50)] };
        assert_eq!(add.try_evaluate(&set(&[1, 2])).unwrap(), int(100));
        let budget = Valuation::BudgetAdditive { values: vec![int(2), int(2), int(2)], cap: int(3) };
        assert_eq!(budget.try_evaluate(&set(&[0, 1])).unwrap(), int(3));
        assert_eq!(budget.try_evaluate(&set(&[0])).unwrap(), int(2));
        let unit = Valuation::UnitDemand { values: vec![int(1), int(4), int(2)] };
        assert_eq!(unit.try_evaluate(&set(&[0, 2])).unwrap(), int(2));
        for v in [&add, &budget, &unit] {
            assert_eq!(v.try_evaluate(&ItemSet::new()).unwrap(), int(0));
        }
    }

    #[test]
    fn table_missing_entry_is_malformed() {
        let t = Valuation::table(2, [(1, int(1)), (3, int(2))]).unwrap();
        assert_eq!(t.try_evaluate(&set(&[0])).unwrap(), int(1));
        assert_eq!(t.try_evaluate(&ItemSet::new()).unwrap(), int(0));
        assert!(matches!(t.try_evaluate(&set(&[1])), Err(Error::MalformedInstance(_))));
        assert!(t.validate(2).is_err());
    }

    #[test]
    fn monotone_counterexample() {
        let t = Valuation::table(2, [(0, int(0)), (1, int(2)), (2, int(0)), (3, int(1))]).unwrap();
        assert_eq!(
            check_monotone(&t, 2).unwrap(),
            ClassVerdict::Violated(ClassViolation::NotMonotone { subset: set(&[0]), superset: set(&[0, 1]) })
        );
    }

    #[test]
    fn subadditive_counterexample() {
        let t = Valuation::table(2, [(0, int(0)), (1, int(1)), (2, int(1)), (3, int(3))]).unwrap();
        assert_eq!(
            check_subadditive(&t, 2).unwrap(),
            ClassVerdict::Violated(ClassViolation::NotSubadditive { left: set(&[0]), right: set(&[1]) })
        );
        let add = Valuation::Additive { values: vec![int(1), frac(1, 3)] };
        assert!(check_subadditive(&add, 2).unwrap().holds());
        assert!(check_submodular(&add, 2).unwrap().holds());
    }

    #[test]
    fn additivity_check_on_tables() {
        let additive_table = Valuation::table_from_fn(3, |s| int(s.count_ones() as i64)).unwrap();
        assert!(check_additive(&additive_table, 3).unwrap().holds());
        let capped = Valuation::BudgetAdditive { values: vec![int(2), int(2)], cap: int(3) };
        assert_eq!(
            check_additive(&capped, 2).unwrap(),
            ClassVerdict::Violated(ClassViolation::NotAdditive { set: set(&[0, 1]) })
        );
    }

    #[test]
    fn cap_is_enforced() {
        let unit = Valuation::UnitDemand { values: vec![int(1); 17] };
        assert!(matches!(check_additive(&unit, 17), Err(Error::EnumerationLimit { .. })));
        assert!(matches!(Valuation::table(17, []), Err(Error::EnumerationLimit { .. })));
    }

    #[test]
    fn big_values_take_the_rational_path() {
        let huge = Rational::new(BigInt::from(10).pow(40), BigInt::from(3));
        let t = Valuation::table_from_fn(2, |s| if s == 0 { int(0) } else { huge.clone() }).unwrap();
        assert!(check_subadditive(&t, 2).unwrap().holds());
        assert!(check_submodular(&t, 2).unwrap().holds());
    }
}
