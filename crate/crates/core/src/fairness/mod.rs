//! Fairness predicates for single allocations and for distributions over
//! allocations.

mod distribution;
mod dominance;

pub use distribution::AllocationDistribution;
pub use dominance::{stochastically_covers, stochastically_dominates, Dominance, FiniteRandomVariable, OutcomeSpace};


use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::rational::{frac, Ratio, Rational};

fn check_pair(instance: &Instance, allocation: &Allocation, i: usize, j: usize) -> Result<()> {
    instance.check_agent(i)?;
    instance.check_agent(j)?;
    if allocation.n() != instance.n() {
        return Err(Error::MalformedInstance(format!(
            "allocation has {} bundles for {} agents",
            allocation.n(),
            instance.n()
        )));
    }
    Ok(())
}

/// `v_i(X_i) / v_i(X_j)`.
pub fn envy_ratio(instance: &Instance, allocation: &Allocation, i: usize, j: usize) -> Result<Ratio> {
    check_pair(instance, allocation, i, j)?;
    Ok(Ratio::of(&instance.value(i, allocation.bundle(i)), &instance.value(i, allocation.bundle(j))))
}

fn removal_values(instance: &Instance, allocation: &Allocation, i: usize, j: usize) -> Vec<Rational> {
    let xj = allocation.bundle(j);
    xj.iter().map(|g| instance.value(i, &xj.without(g))).collect()
}

/// Largest `α` for which `i` is α-EF1 towards `j`.
pub fn ef1_ratio(instance: &Instance, allocation: &Allocation, i: usize, j: usize) -> Result<Ratio> {
    check_pair(instance, allocation, i, j)?;
    match removal_values(instance, allocation, i, j).into_iter().min() {
        None => Ok(Ratio::Infinite),
        Some(den) => Ok(Ratio::of(&instance.value(i, allocation.bundle(i)), &den)),
    }
}

/// Largest `β` for which `i` is β-EFX towards `j`.
pub fn efx_ratio(instance: &Instance, allocation: &Allocation, i: usize, j: usize) -> Result<Ratio> {
    check_pair(instance, allocation, i, j)?;
    match removal_values(instance, allocation, i, j).into_iter().max() {
        None => Ok(Ratio::Infinite),
        Some(den) => Ok(Ratio::of(&instance.value(i, allocation.bundle(i)), &den)),
    }
}

/// Minimum EFX ratio over all ordered pairs of distinct agents.
pub fn min_efx_ratio(instance: &Instance, allocation: &Allocation) -> Result<Ratio> {
    min_over_pairs(instance, allocation, efx_ratio)
}

pub fn min_ef1_ratio(instance: &Instance, allocation: &Allocation) -> Result<Ratio> {
    min_over_pairs(instance, allocation, ef1_ratio)
}

fn min_over_pairs(
    instance: &Instance,
    allocation: &Allocation,
    f: fn(&Instance, &Allocation, usize, usize) -> Result<Ratio>,
) -> Result<Ratio> {
    let mut best = Ratio::Infinite;
    for i in 0..instance.n() {
        for j in (0..instance.n()).filter(|&j| j != i) {
            best = best.min(f(instance, allocation, i, j)?);
        }
    }
    Ok(best)
}

/// Per ordered pair `(i, j)` figures of a distribution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    /// Worst EF1 ratio over the support.
    pub ef1: Ratio,
    /// Worst EFX ratio over the support.
    pub efx: Ratio,
    #[serde(with = "crate::rational::serde_rational")]
    pub expected_own: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub expected_other: Rational,
    /// `E[v_i(X_i)] / E[v_i(X_j)]`.
    pub ex_ante: Ratio,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FairnessReport {
    pub pairs: Vec<PairReport>,
    pub min_ef1: Ratio,
    pub min_efx: Ratio,
    pub min_ex_ante: Ratio,
}

impl FairnessReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairReport> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }

    /// Every support allocation is ½-EFX and EF1, and every ex-ante ratio is
    /// at least ½.
    pub fn meets_half_guarantees(&self) -> bool {
        let half = frac(1, 2);
        self.min_efx.at_least(&half) && self.min_ef1.at_least(&Rational::from_integer(1.into())) && self.min_ex_ante.at_least(&half)
    }
}

/// Worst-case ex-post ratios and exact ex-ante ratios of a distribution.
pub fn expost_report(instance: &Instance, dist: &AllocationDistribution) -> Result<FairnessReport> {
    if dist.is_empty() {
        return Err(Error::MalformedInstance("empty support".into()));
    }
    let n = instance.n();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        let own = dist.expected_value(instance, i, i);
        for j in (0..n).filter(|&j| j != i) {
            let mut ef1 = Ratio::Infinite;
            let mut efx = Ratio::Infinite;
            for (_, a) in dist.support() {
                ef1 = ef1.min(ef1_ratio(instance, a, i, j)?);
                efx = efx.min(efx_ratio(instance, a, i, j)?);
            }
            let other = dist.expected_value(instance, i, j);
            pairs.push(PairReport {
                i,
                j,
                ef1,
                efx,
                ex_ante: Ratio::of(&own, &other),
                expected_own: own.clone(),
                expected_other: other,
            });
        }
    }
    let fold = |f: fn(&PairReport) -> &Ratio| pairs.iter().map(f).cloned().fold(Ratio::Infinite, Ratio::min);
    Ok(FairnessReport {
        min_ef1: fold(|p| &p.ef1),
        min_efx: fold(|p| &p.efx),
        min_ex_ante: fold(|p| &p.ex_ante),
        pairs,
    })
}

/// Report of a single allocation (ex-ante ratios are the plain envy ratios).
pub fn allocation_report(instance: &Instance, allocation: &Allocation) -> Result<FairnessReport> {
    expost_report(instance, &AllocationDistribution::point(allocation.clone()))
}

/// Every agent weakly prefers her bundle to each unallocated item.
pub fn check_weak_separation(instance: &Instance, allocation: &Allocation) -> bool {
    weak_separation_violation(instance, allocation).is_none()
}

/// First `(agent, item)` with `v_agent(item) > v_agent(X_agent)`.
pub fn weak_separation_violation(instance: &Instance, allocation: &Allocation) -> Option<(usize, usize)> {
    (0..allocation.n()).find_map(|i| {
        let own = instance.value(i, allocation.bundle(i));
        allocation
            .unallocated()
            .iter()
            .find(|&u| instance.item_value(i, u) > own)
            .map(|u| (i, u))
    })
}

/// Strong separation of a lottery over matchings: in every support matching,
/// every agent weakly prefers her item to every item that is unallocated in
/// some support matching.
pub fn check_strong_separation(instance: &Instance, dist: &AllocationDistribution) -> Result<bool> {
    Ok(strong_separation_violation(instance, dist)?.is_none())
}

/// First `(support index, agent, item)` violating strong separation.
pub fn strong_separation_violation(
    instance: &Instance,
    dist: &AllocationDistribution,
) -> Result<Option<(usize, usize, usize)>> {
    for (k, (_, a)) in dist.support().iter().enumerate() {
        if a.as_matching().is_none() {
            return Err(Error::Precondition(format!("support allocation {k} is not a matching")));
        }
    }
    let mut free = crate::itemset::ItemSet::new();
    for (_, a) in dist.support() {
        free = free.union(a.unallocated());
    }
    for (k, (_, a)) in dist.support().iter().enumerate() {
        for i in 0..a.n() {
            let own = instance.value(i, a.bundle(i));
            if let Some(w) = free.iter().find(|&w| instance.item_value(i, w) > own) {
                return Ok(Some((k, i, w)));
            }
        }
    }
    Ok(None)
}

/// `v_i(X_i)` as a random variable under `dist`.
pub fn value_variable(instance: &Instance, dist: &AllocationDistribution, i: usize, j: usize) -> FiniteRandomVariable {
    let atoms = dist
        .support()
        .iter()
        .map(|(p, a)| (p.clone(), instance.value(i, a.bundle(j))))
        .collect();
    FiniteRandomVariable::new(atoms).expect("distribution probabilities are valid")
}

/// Checks `v_i(X_i) ⪰_SD v_i(X_j)` for every ordered pair; returns the first
/// failing pair with its witness threshold.
pub fn pairwise_dominance(
    instance: &Instance,
    dist: &AllocationDistribution,
) -> Option<(usize, usize, Rational)> {
    for i in 0..instance.n() {
        let own = value_variable(instance, dist, i, i);
        for j in (0..instance.n()).filter(|&j| j != i) {
            if let Dominance::Fails { threshold } = stochastically_dominates(&own, &value_variable(instance, dist, i, j)) {
                return Some((i, j, threshold));
            }
        }
    }
    None
}
