use std::collections::HashMap;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::eating::preference_orders;
use crate::error::{Error, Result};
use crate::fairness::AllocationDistribution;
use crate::itemset::ItemSet;
use crate::model::{Allocation, Instance};
use crate::rational::Rational;

/// Largest agent count for which all orders are enumerated.
pub const RSD_ENUMERATION_CAP: usize = 8;

fn require_items(instance: &Instance) -> Result<()> {
    if instance.m() < instance.n() {
        return Err(Error::Precondition(format!(
            "serial dictatorship needs m >= n (got n = {}, m = {})",
            instance.n(),
            instance.m()
        )));
    }
    Ok(())
}

fn pick(prefs: &[Vec<usize>], order: &[usize], m: usize) -> Allocation {
    let mut taken = vec![false; m];
    let mut bundles = vec![ItemSet::new(); prefs.len()];
    for &i in order {
        let g = *prefs[i].iter().find(|&&g| !taken[g]).expect("m >= n");
        taken[g] = true;
        bundles[i].insert(g);
    }
    Allocation::from_bundles(bundles, m).expect("one distinct item per agent")
}

/// Agents in `order` each take their favorite remaining single item.
pub fn serial_dictatorship(instance: &Instance, order: &[usize]) -> Result<Allocation> {
    require_items(instance)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..instance.n()).collect::<Vec<_>>() {
        return Err(Error::InvalidParameter("order must be a permutation of the agents".into()));
    }
    Ok(pick(&preference_orders(instance), order, instance.m()))
}

/// Serial dictatorship over a uniformly random order.
pub fn rsd_sample<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Result<Allocation> {
    require_items(instance)?;
    let mut order: Vec<usize> = (0..instance.n()).collect();
    order.shuffle(rng);
    Ok(pick(&preference_orders(instance), &order, instance.m()))
}

/// Exact distribution of random serial dictatorship over all `n!` orders.
pub fn rsd_enumerate(instance: &Instance) -> Result<AllocationDistribution> {
    require_items(instance)?;
    let n = instance.n();
    if n > RSD_ENUMERATION_CAP {
        return Err(Error::EnumerationLimit { what: format!("{n}! agent orders"), limit: RSD_ENUMERATION_CAP });
    }
    let prefs = preference_orders(instance);
    let mut counts: HashMap<Allocation, u64> = HashMap::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut total = 0u64;
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut visit = |order: &[usize]| {
        *counts.entry(pick(&prefs, order, instance.m())).or_insert(0) += 1;
        total += 1;
    };
    visit(&order);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                order.swap(0, i);
            } else {
                order.swap(c[i], i);
            }
            visit(&order);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    AllocationDistribution::new(
        counts.into_iter().map(|(a, k)| (Rational::new(BigInt::from(k), BigInt::from(total)), a)),
    )
}
