use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::rational::Rational;

/// Exact finite distribution over allocations. Duplicates are merged and the
/// support is kept in a canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllocationDistribution {
    support: Vec<(Rational, Allocation)>,
}

impl AllocationDistribution {
    /// Merges duplicate allocations and checks that the probabilities are
    /// positive and sum to one.
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Allocation)>,
    {
        let mut merged: BTreeMap<Allocation, Rational> = BTreeMap::new();
        let mut n = None;
        for (p, a) in entries {
            if p <= Rational::zero() {
                return Err(Error::MalformedInstance(format!("non-positive probability {p}")));
            }
            match n {
                None => n = Some(a.n()),
                Some(k) if k != a.n() => {
                    return Err(Error::MalformedInstance("support allocations disagree on n".into()))
                }
                _ => {}
            }
            *merged.entry(a).or_insert_with(Rational::zero) += p;
        }
        if merged.is_empty() {
            return Err(Error::MalformedInstance("empty support".into()));
        }
        let total: Rational = merged.values().sum();
        if !total.is_one() {
            return Err(Error::MalformedInstance(format!("probabilities sum to {total}, not 1")));
        }
        Ok(AllocationDistribution { support: merged.into_iter().map(|(a, p)| (p, a)).collect() })
    }

    pub fn point(allocation: Allocation) -> Self {
        AllocationDistribution { support: vec![(Rational::one(), allocation)] }
    }

    pub fn support(&self) -> &[(Rational, Allocation)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn n(&self) -> usize {
        self.support[0].1.n()
    }

    pub fn is_complete(&self) -> bool {
        self.support.iter().all(|(_, a)| a.is_complete())
    }

    pub fn probability_of(&self, allocation: &Allocation) -> Rational {
        self.support
            .iter()
            .find(|(_, a)| a == allocation)
            .map(|(p, _)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// `E[v_i(X_j)]`.
    pub fn expected_value(&self, instance: &Instance, i: usize, j: usize) -> Rational {
        self.support
            .iter()
            .map(|(p, a)| p * instance.value(i, a.bundle(j)))
            .sum()
    }

    /// Drops items `>= m` from every support allocation (merging any
    /// allocations that become equal).
    pub fn restrict(&self, m: usize) -> AllocationDistribution {
        AllocationDistribution::new(self.support.iter().map(|(p, a)| (p.clone(), a.restrict(m))))
            .expect("restriction preserves total mass")
    }
}
