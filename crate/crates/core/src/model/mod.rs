//! Instances, allocations, and the library of named instance families.

mod catalog;
mod valuation;

pub use catalog::{paper_instance, InstanceParams, CATALOG};
pub use valuation::{
    check_additive, check_class, check_monotone, check_subadditive, check_submodular, ClassVerdict,
    ClassViolation, Valuation, ValuationClass, ENUMERATION_CAP,
};

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::rational::Rational;

/// Agents `0..n`, items `0..m`, one valuation per agent, and the class the
/// valuations are declared to belong to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    m: usize,
    valuations: Vec<Valuation>,
    class: ValuationClass,
}

impl Instance {
    pub fn new(m: usize, valuations: Vec<Valuation>, class: ValuationClass) -> Result<Self> {
        let n = valuations.len();
        if n == 0 {
            return Err(Error::MalformedInstance("at least one agent is required".into()));
        }
        if m == 0 {
            return Err(Error::MalformedInstance("at least one item is required".into()));
        }
        for (i, v) in valuations.iter().enumerate() {
            v.validate(m)
                .map_err(|e| Error::MalformedInstance(format!("agent {i}: {e}")))?;
        }
        Ok(Instance { n, m, valuations, class })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn class(&self) -> ValuationClass {
        self.class
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn valuation(&self, agent: usize) -> &Valuation {
        &self.valuations[agent]
    }

    pub fn items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }

    /// `v_agent(bundle)`. Validated instances never fail to evaluate.
    pub fn value(&self, agent: usize, bundle: &ItemSet) -> Rational {
        self.valuations[agent]
            .try_evaluate(bundle)
            .expect("instance tables are complete after validation")
    }

    pub fn item_value(&self, agent: usize, item: usize) -> Rational {
        self.value(agent, &ItemSet::singleton(item))
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.n {
            return Err(Error::IndexOutOfRange { index: agent, limit: self.n });
        }
        Ok(())
    }

    /// Verifies every valuation against the declared class. Returns the first
    /// offending agent with its witness.
    pub fn verify_class(&self) -> Result<Option<(usize, ClassViolation)>> {
        for (i, v) in self.valuations.iter().enumerate() {
            if let ClassVerdict::Violated(w) = check_class(v, self.m, self.class)? {
                return Ok(Some((i, w)));
            }
        }
        Ok(None)
    }

    /// Same instance with `extra` zero-value items appended.
    pub fn with_dummy_items(&self, extra: usize) -> Instance {
        Instance {
            n: self.n,
            m: self.m + extra,
            valuations: self.valuations.iter().map(|v| v.with_dummy_items(extra)).collect(),
            class: self.class,
        }
    }
}

/// Guarantees `m > n` by appending zero-value items (up to `n + 1` items);
/// instances that already satisfy it are returned unchanged.
pub fn pad_with_dummies(instance: &Instance) -> Instance {
    if instance.m > instance.n {
        instance.clone()
    } else {
        instance.with_dummy_items(instance.n + 1 - instance.m)
    }
}

/// Disjoint bundles, one per agent, plus the pool of unallocated items.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    bundles: Vec<ItemSet>,
    unallocated: ItemSet,
}

impl Allocation {
    /// Nothing allocated yet.
    pub fn empty(n: usize, m: usize) -> Self {
        Allocation { bundles: vec![ItemSet::new(); n], unallocated: ItemSet::full(m) }
    }

    /// Validates disjointness and range; the unallocated pool is derived.
    pub fn from_bundles(bundles: Vec<ItemSet>, m: usize) -> Result<Self> {
        let mut seen = ItemSet::new();
        for (i, b) in bundles.iter().enumerate() {
            if let Some(g) = b.max().filter(|&g| g >= m) {
                return Err(Error::MalformedInstance(format!("agent {i} holds item {g} but m = {m}")));
            }
            if !seen.is_disjoint(b) {
                return Err(Error::MalformedInstance(format!("bundle of agent {i} overlaps another bundle")));
            }
            seen = seen.union(b);
        }
        let unallocated = ItemSet::full(m).difference(&seen);
        Ok(Allocation { bundles, unallocated })
    }

    /// Like [`Allocation::from_bundles`] but also checks an explicitly stated pool.
    pub fn with_unallocated(bundles: Vec<ItemSet>, unallocated: ItemSet, m: usize) -> Result<Self> {
        let a = Allocation::from_bundles(bundles, m)?;
        if a.unallocated != unallocated {
            return Err(Error::MalformedInstance(
                "bundles and unallocated items do not partition the items".into(),
            ));
        }
        Ok(a)
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundles(&self) -> &[ItemSet] {
        &self.bundles
    }

    pub fn bundle(&self, agent: usize) -> &ItemSet {
        &self.bundles[agent]
    }

    pub fn unallocated(&self) -> &ItemSet {
        &self.unallocated
    }

    pub fn is_complete(&self) -> bool {
        self.unallocated.is_empty()
    }

    /// Moves an unallocated item into an agent's bundle.
    pub fn give(&mut self, agent: usize, item: usize) {
        assert!(self.unallocated.remove(item), "item {item} is not unallocated");
        self.bundles[agent].insert(item);
    }

    /// Reallocates along an envy cycle `[u_1, ..., u_k]`: each `u_s`
    /// receives the bundle previously held by `u_{s+1}` (cyclically).
    pub fn rotate(&mut self, cycle: &[usize]) {
        if cycle.len() < 2 {
            return;
        }
        let old: Vec<ItemSet> = cycle.iter().map(|&u| self.bundles[u].clone()).collect();
        for (s, &u) in cycle.iter().enumerate() {
            self.bundles[u] = old[(s + 1) % cycle.len()].clone();
        }
    }

    /// Drops every item `>= m` (used to strip padding items).
    pub fn restrict(&self, m: usize) -> Allocation {
        Allocation {
            bundles: self.bundles.iter().map(|b| b.restrict(m)).collect(),
            unallocated: self.unallocated.restrict(m),
        }
    }

    /// `agent → item` when every agent holds exactly one item.
    pub fn as_matching(&self) -> Option<Vec<usize>> {
        self.bundles
            .iter()
            .map(|b| if b.len() == 1 { b.min() } else { None })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn additive(rows: &[&[i64]]) -> Instance {
        let m = rows[0].len();
        Instance::new(
            m,
            rows.iter()
                .map(|r| Valuation::Additive { values: r.iter().map(|&x| int(x)).collect() })
                .collect(),
            ValuationClass::Additive,
        )
        .unwrap()
    }

    #[test]
    fn padding_rule() {
        let inst = additive(&[&[1, 2], &[3, 4], &[5, 6]]);
        let padded = pad_with_dummies(&inst);
        assert_eq!(padded.m(), 4);
        assert_eq!(padded.item_value(0, 3), int(0));
        assert_eq!(padded.item_value(2, 1), int(6));

        let wide = additive(&[&[1, 1, 1, 1, 1], &[2, 2, 2, 2, 2]]);
        assert_eq!(pad_with_dummies(&wide), wide);

        let single = additive(&[&[7]]);
        assert_eq!(pad_with_dummies(&single).m(), 2);
    }

    #[test]
    fn padding_keeps_table_values() {
        let t = Valuation::table_from_fn(2, |s| int(s.count_ones() as i64 * 3)).unwrap();
        let inst = Instance::new(2, vec![t.clone(), t], ValuationClass::Subadditive).unwrap();
        let padded = pad_with_dummies(&inst);
        assert_eq!(padded.m(), 3);
        for mask in 0..4u64 {
            let s = ItemSet::from_mask(mask);
            assert_eq!(padded.value(0, &s), inst.value(0, &s));
            assert_eq!(padded.value(0, &s.with(2)), inst.value(0, &s));
        }
    }

    #[test]
    fn allocation_validation() {
        let ok = Allocation::from_bundles(vec![[0usize].into_iter().collect(), [2usize].into_iter().collect()], 3).unwrap();
        assert_eq!(ok.unallocated().to_vec(), vec![1]);
        assert!(!ok.is_complete());
        let overlap = Allocation::from_bundles(vec![[0usize].into_iter().collect(), [0usize].into_iter().collect()], 3);
        assert!(overlap.is_err());
        assert!(Allocation::from_bundles(vec![[5usize].into_iter().collect()], 3).is_err());
    }

    #[test]
    fn rotation_moves_bundles_backwards_along_cycle() {
        let mut a = Allocation::from_bundles(
            vec![ItemSet::singleton(0), ItemSet::singleton(1), ItemSet::singleton(2)],
            3,
        )
        .unwrap();
        a.rotate(&[0, 2]);
        assert_eq!(a.bundle(0), &ItemSet::singleton(2));
        assert_eq!(a.bundle(2), &ItemSet::singleton(0));
        assert_eq!(a.bundle(1), &ItemSet::singleton(1));
    }
}
