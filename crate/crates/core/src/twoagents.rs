//! Procedures specific to two agents: partition searches, the two-agent
//! lotteries and an exact certifier for the best ex-ante ratio under an
//! ex-post EFX constraint.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fairness::{efx_ratio, AllocationDistribution};
use crate::itemset::ItemSet;
use crate::model::{Allocation, Instance, ValuationClass};
use crate::rational::{frac, Ratio, Rational};

/// Largest item count for the partition searches.
pub const PARTITION_CAP: usize = 20;
/// Largest item count for the frontier search.
pub const FRONTIER_CAP: usize = 12;

/// A split of all items into two parts, judged by one agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition2 {
    pub parts: (ItemSet, ItemSet),
    pub owner: usize,
}

impl Partition2 {
    /// `v_owner(X_1) - v_owner(X_2)`.
    pub fn gap(&self, instance: &Instance) -> Rational {
        instance.value(self.owner, &self.parts.0) - instance.value(self.owner, &self.parts.1)
    }

    /// Largest `β` for which this is a β-EFX partition for the owner.
    pub fn efx_ratio(&self, instance: &Instance) -> Ratio {
        partition_efx_ratio(instance, self.owner, &self.parts.0, &self.parts.1)
    }

    /// The allocation giving `X_1` to agent `first` and `X_2` to the other.
    pub fn assign(&self, first: usize, m: usize) -> Allocation {
        let bundles = if first == 0 {
            vec![self.parts.0.clone(), self.parts.1.clone()]
        } else {
            vec![self.parts.1.clone(), self.parts.0.clone()]
        };
        Allocation::from_bundles(bundles, m).expect("partition parts are disjoint")
    }
}

fn one_way(instance: &Instance, i: usize, own: &ItemSet, other: &ItemSet) -> Ratio {
    match other.iter().map(|g| instance.value(i, &other.without(g))).max() {
        None => Ratio::Infinite,
        Some(den) => Ratio::of(&instance.value(i, own), &den),
    }
}

/// Largest `β` with `X_1` and `X_2` each β-EFX towards the other under `v_i`.
pub fn partition_efx_ratio(instance: &Instance, i: usize, x1: &ItemSet, x2: &ItemSet) -> Ratio {
    one_way(instance, i, x1, x2).min(one_way(instance, i, x2, x1))
}

fn require_two(instance: &Instance) -> Result<()> {
    if instance.n() != 2 {
        return Err(Error::Precondition(format!("needs exactly 2 agents, got {}", instance.n())));
    }
    Ok(())
}

fn require_cap(m: usize, cap: usize, what: &str) -> Result<()> {
    if m > cap {
        return Err(Error::EnumerationLimit { what: format!("{what} over {m} items"), limit: cap });
    }
    Ok(())
}

fn split(mask: u64, m: usize) -> (ItemSet, ItemSet) {
    let x1 = ItemSet::from_mask(mask);
    let x2 = ItemSet::full(m).difference(&x1);
    (x1, x2)
}

/// Partition with `v_i(X_1) >= v_i(X_2)` minimizing the gap, then `|X_1|`,
/// then lexicographically smallest `X_1`.
pub fn balanced_partition(instance: &Instance, i: usize) -> Result<Partition2> {
    require_two(instance)?;
    instance.check_agent(i)?;
    let m = instance.m();
    require_cap(m, PARTITION_CAP, "partitions")?;
    let best = (0..1u64 << m)
        .into_par_iter()
        .filter_map(|mask| {
            let (x1, x2) = split(mask, m);
            let gap = instance.value(i, &x1) - instance.value(i, &x2);
            (!gap.is_negative()).then_some((gap, x1, x2))
        })
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.lex_cmp(&b.1)))
        .expect("the full set is always a candidate");
    Ok(Partition2 { parts: (best.1, best.2), owner: i })
}

/// An EFX partition for agent `i` with `v_i(X_1) >= v_i(X_2)`, maximizing
/// `v_i(X_2)` and then taking the lexicographically smallest `X_1`.
pub fn efx_partition(instance: &Instance, i: usize) -> Result<Partition2> {
    require_two(instance)?;
    instance.check_agent(i)?;
    let m = instance.m();
    require_cap(m, PARTITION_CAP, "partitions")?;
    let unit = Rational::one();
    let best = (0..1u64 << m)
        .into_par_iter()
        .filter_map(|mask| {
            let (x1, x2) = split(mask, m);
            let low = instance.value(i, &x2);
            if instance.value(i, &x1) < low || !partition_efx_ratio(instance, i, &x1, &x2).at_least(&unit) {
                return None;
            }
            Some((low, x1, x2))
        })
        .min_by(|a, b| b.0.cmp(&a.0).then(a.1.lex_cmp(&b.1)))
        .ok_or_else(|| Error::Invariant(format!("no EFX partition exists for agent {i}")))?;
    Ok(Partition2 { parts: (best.1, best.2), owner: i })
}

/// Which two-agent lottery to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LotteryTarget {
    /// Ex-ante envy-free, ex-post ½-EFX (subadditive).
    EfPriority,
    /// Ex-ante ⅔-EF, ex-post EFX (subadditive).
    EfxPriority,
    /// Ex-ante envy-free and ex-post EFX (additive).
    Additive,
}

impl LotteryTarget {
    pub fn required_class(self) -> ValuationClass {
        match self {
            LotteryTarget::EfPriority | LotteryTarget::EfxPriority => ValuationClass::Subadditive,
            LotteryTarget::Additive => ValuationClass::Additive,
        }
    }
}

/// Two-agent lottery: each agent proposes a partition; if one of them
/// already yields an envy-free allocation it is returned outright,
/// otherwise each proposal is used with probability ½ with the proposer
/// receiving the part she likes less.
pub fn two_agent_lottery(instance: &Instance, target: LotteryTarget) -> Result<AllocationDistribution> {
    require_two(instance)?;
    let need = target.required_class();
    if !instance.class().within(need) {
        return Err(Error::ClassMismatch(format!(
            "{target:?} needs {} valuations, instance is {}",
            need.as_str(),
            instance.class().as_str()
        )));
    }
    let m = instance.m();
    let (a, b) = match target {
        LotteryTarget::EfxPriority => (efx_partition(instance, 0)?, efx_partition(instance, 1)?),
        _ => (balanced_partition(instance, 0)?, balanced_partition(instance, 1)?),
    };
    let v = |i: usize, s: &ItemSet| instance.value(i, s);
    if v(1, &a.parts.1) > v(1, &a.parts.0) {
        return Ok(AllocationDistribution::point(a.assign(0, m)));
    }
    if v(0, &b.parts.1) > v(0, &b.parts.0) {
        return Ok(AllocationDistribution::point(b.assign(1, m)));
    }
    AllocationDistribution::new([(frac(1, 2), a.assign(1, m)), (frac(1, 2), b.assign(0, m))])
}

/// Best ex-ante envy ratio achievable by lotteries over β-EFX allocations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frontier {
    /// 0 when no β-EFX allocation exists.
    pub best_alpha: Ratio,
    /// False when the optimum sits at an irrational mixing weight and
    /// `best_alpha` is a rational lower bound from bisecting the crossing.
    pub exact: bool,
    pub witness: Option<AllocationDistribution>,
    /// Number of distinct β-EFX allocations (by value profile).
    pub candidates: usize,
}

/// `(v_1(X_1), v_1(X_2), v_2(X_2), v_2(X_1))`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Profile([Rational; 4]);

impl Profile {
    fn dominated_by(&self, other: &Profile) -> bool {
        let [a1, b1, a2, b2] = &self.0;
        let [c1, d1, c2, d2] = &other.0;
        c1 >= a1 && d1 <= b1 && c2 >= a2 && d2 <= b2
    }
}

fn mix(p: &Rational, x: &Profile, y: &Profile) -> [Rational; 4] {
    let q = Rational::one() - p;
    std::array::from_fn(|t| p * &x.0[t] + &q * &y.0[t])
}

fn min_ratio(v: &[Rational; 4]) -> Ratio {
    Ratio::of(&v[0], &v[1]).min(Ratio::of(&v[2], &v[3]))
}

struct Candidate {
    value: Ratio,
    p: Rational,
    first: usize,
    second: usize,
}

/// Coefficients `[c0, c1, c2]` of `A1(p)·B2(p) − A2(p)·B1(p)` for the mixture
/// `p·x + (1−p)·y`.
fn crossing_polynomial(x: &Profile, y: &Profile) -> [Rational; 3] {
    let line = |t: usize| (y.0[t].clone(), &x.0[t] - &y.0[t]);
    let mul = |(a0, a1): (Rational, Rational), (b0, b1): (Rational, Rational)| {
        [&a0 * &b0, &a0 * &b1 + &a1 * &b0, &a1 * &b1]
    };
    let left = mul(line(0), line(3));
    let right = mul(line(2), line(1));
    std::array::from_fn(|t| &left[t] - &right[t])
}

fn eval_poly(c: &[Rational; 3], p: &Rational) -> Rational {
    &c[0] + p * (&c[1] + p * &c[2])
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    let (n, d) = (r.numer(), r.denom());
    let (sn, sd) = (n.sqrt(), d.sqrt());
    (&sn * &sn == *n && &sd * &sd == *d).then(|| Rational::new(sn, sd))
}

/// Real roots of the polynomial strictly inside (0, 1): exact ones, and
/// bracketing intervals `[lo, hi]` for irrational ones.
fn roots_in_unit(c: &[Rational; 3]) -> (Vec<Rational>, Vec<(Rational, Rational)>) {
    let (zero, one) = (Rational::zero(), Rational::one());
    let inside = |r: &Rational| *r > zero && *r < one;
    if c[2].is_zero() {
        if c[1].is_zero() {
            return (vec![], vec![]);
        }
        let r = -&c[0] / &c[1];
        return (if inside(&r) { vec![r] } else { vec![] }, vec![]);
    }
    let disc = &c[1] * &c[1] - Rational::from_integer(BigInt::from(4)) * &c[0] * &c[2];
    if disc.is_negative() {
        return (vec![], vec![]);
    }
    let two_a = &c[2] * Rational::from_integer(BigInt::from(2));
    if let Some(s) = rational_sqrt(&disc) {
        let roots = [(-&c[1] + &s) / &two_a, (-&c[1] - &s) / &two_a];
        return (roots.into_iter().filter(inside).collect(), vec![]);
    }
    // irrational roots: split (0,1) at the vertex and bracket sign changes
    let vertex = -&c[1] / &two_a;
    let mut cuts = vec![zero.clone()];
    if inside(&vertex) {
        cuts.push(vertex);
    }
    cuts.push(one);
    let mut brackets = Vec::new();
    for w in cuts.windows(2) {
        let (mut lo, mut hi) = (w[0].clone(), w[1].clone());
        let (flo, fhi) = (eval_poly(c, &lo), eval_poly(c, &hi));
        if flo.is_zero() || fhi.is_zero() || flo.signum() == fhi.signum() {
            continue;
        }
        let tol = Rational::new(BigInt::one(), BigInt::one() << 62);
        while &hi - &lo > tol {
            let mid = (&lo + &hi) / Rational::from_integer(BigInt::from(2));
            if eval_poly(c, &mid).signum() == flo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        brackets.push((lo, hi));
    }
    (vec![], brackets)
}

fn pair_candidates(profiles: &[Profile], k: usize, l: usize) -> (Candidate, Option<Ratio>) {
    let (x, y) = (&profiles[k], &profiles[l]);
    let at = |p: &Rational| min_ratio(&mix(p, x, y));
    let mut best = Candidate { value: at(&Rational::one()), p: Rational::one(), first: k, second: l };
    let consider = |p: Rational, best: &mut Candidate| {
        let value = at(&p);
        if value > best.value {
            *best = Candidate { value, p, first: k, second: l };
        }
    };
    consider(Rational::zero(), &mut best);
    let (exact, brackets) = roots_in_unit(&crossing_polynomial(x, y));
    for r in exact {
        consider(r, &mut best);
    }
    let mut bound: Option<Ratio> = None;
    for (lo, hi) in brackets {
        let (ml, mh) = (mix(&lo, x, y), mix(&hi, x, y));
        let f1 = Ratio::of(&ml[0], &ml[1]).max(Ratio::of(&mh[0], &mh[1]));
        let f2 = Ratio::of(&ml[2], &ml[3]).max(Ratio::of(&mh[2], &mh[3]));
        let upper = f1.min(f2);
        bound = Some(bound.map_or(upper.clone(), |b| b.max(upper)));
        consider(lo, &mut best);
        consider(hi, &mut best);
    }
    (best, bound)
}

/// Exact maximum over lotteries supported on β-EFX allocations of the
/// smaller of the two ex-ante ratios `E[v_i(X_i)] / E[v_i(X_j)]`.
///
/// Both ex-ante constraints are linear in the lottery, so an optimum is
/// attained on at most two allocations; single allocations and all pairs
/// are searched, with the mixing weight taken at the endpoints or where the
/// two ratios cross.
pub fn impossibility_frontier(instance: &Instance, beta: &Rational) -> Result<Frontier> {
    require_two(instance)?;
    if beta.is_negative() {
        return Err(Error::InvalidParameter(format!("beta must be non-negative, got {beta}")));
    }
    let m = instance.m();
    require_cap(m, FRONTIER_CAP, "allocations")?;
    let mut by_profile: BTreeMap<Profile, Allocation> = BTreeMap::new();
    for mask in 0..1u64 << m {
        let (x1, x2) = split(mask, m);
        let a = Allocation::from_bundles(vec![x1, x2], m).expect("disjoint");
        if !efx_ratio(instance, &a, 0, 1)?.at_least(beta) || !efx_ratio(instance, &a, 1, 0)?.at_least(beta) {
            continue;
        }
        let (b1, b2) = (a.bundle(0), a.bundle(1));
        let profile = Profile([
            instance.value(0, b1),
            instance.value(0, b2),
            instance.value(1, b2),
            instance.value(1, b1),
        ]);
        by_profile.entry(profile).or_insert(a);
    }
    let candidates = by_profile.len();
    if candidates == 0 {
        return Ok(Frontier { best_alpha: Ratio::Finite(Rational::zero()), exact: true, witness: None, candidates });
    }
    let all: Vec<(Profile, Allocation)> = by_profile.into_iter().collect();
    let kept: Vec<usize> = (0..all.len())
        .filter(|&k| {
            !(0..all.len()).any(|l| l != k && all[k].0.dominated_by(&all[l].0) && (all[k].0 != all[l].0))
        })
        .collect();
    let profiles: Vec<Profile> = kept.iter().map(|&k| all[k].0.clone()).collect();
    let pairs: Vec<(usize, usize)> =
        (0..profiles.len()).flat_map(|k| (k..profiles.len()).map(move |l| (k, l))).collect();
    let results: Vec<(Candidate, Option<Ratio>)> =
        pairs.par_iter().map(|&(k, l)| pair_candidates(&profiles, k, l)).collect();
    let mut best: Option<Candidate> = None;
    let mut bound: Option<Ratio> = None;
    for (c, b) in results {
        if let Some(b) = b {
            bound = Some(bound.map_or(b.clone(), |x| x.max(b)));
        }
        if best.as_ref().is_none_or(|x| c.value.cmp(&x.value) == Ordering::Greater) {
            best = Some(c);
        }
    }
    let best = best.expect("at least one candidate");
    let exact = bound.is_none_or(|b| b <= best.value);
    let q = Rational::one() - &best.p;
    let (x, y) = (&all[kept[best.first]].1, &all[kept[best.second]].1);
    let witness = if best.first == best.second || q.is_zero() {
        AllocationDistribution::point(x.clone())
    } else if best.p.is_zero() {
        AllocationDistribution::point(y.clone())
    } else {
        AllocationDistribution::new([(best.p.clone(), x.clone()), (q, y.clone())])?
    };
    Ok(Frontier { best_alpha: best.value, exact, witness: Some(witness), candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{expost_report, min_efx_ratio};
    use crate::model::{paper_instance, InstanceParams, Valuation};
    use crate::rational::int;

    fn additive(rows: &[&[i64]]) -> Instance {
        Instance::new(
            rows[0].len(),
            rows.iter()
                .map(|r| Valuation::Additive { values: r.iter().map(|&x| int(x)).collect() })
                .collect(),
            ValuationClass::Additive,
        )
        .unwrap()
    }

    fn set(items: &[usize]) -> ItemSet {
        let mut s = ItemSet::new();
        for &g in items {
            s.insert(g);
        }
        s
    }

    #[test]
    fn balanced_partition_tightness() {
        let inst = paper_instance("lemma-a2", &InstanceParams::default().eps(frac(1, 10))).unwrap();
        let p = balanced_partition(&inst, 0).unwrap();
        assert_eq!(p.parts, (set(&[0, 1]), set(&[2])));
        assert_eq!(p.gap(&inst), frac(9, 10));
        assert_eq!(p.efx_ratio(&inst), Ratio::Finite(frac(10, 19)));
    }

    #[test]
    fn balanced_partition_additive() {
        let inst = additive(&[&[100, 50, 50], &[100, 50, 50]]);
        let p = balanced_partition(&inst, 0).unwrap();
        assert_eq!(p.parts, (set(&[0]), set(&[1, 2])));
        assert!(p.gap(&inst).is_zero());
        let single = additive(&[&[5], &[5]]);
        assert_eq!(balanced_partition(&single, 1).unwrap().parts, (set(&[0]), ItemSet::new()));
    }

    #[test]
    fn efx_partitions() {
        let inst = additive(&[&[100, 50, 50], &[100, 50, 50]]);
        assert_eq!(efx_partition(&inst, 0).unwrap().parts, (set(&[0]), set(&[1, 2])));
        let pair = additive(&[&[1, 1], &[1, 1]]);
        assert_eq!(efx_partition(&pair, 0).unwrap().parts, (set(&[0]), set(&[1])));
        let b1 = paper_instance("prop-b1", &InstanceParams::default().eps(frac(1, 10))).unwrap();
        let p = efx_partition(&b1, 0).unwrap();
        let unordered = [p.parts.0.clone(), p.parts.1.clone()];
        assert!(unordered.contains(&set(&[0])) && unordered.contains(&set(&[1, 2])), "{p:?}");
        assert!(p.efx_ratio(&b1).at_least(&int(1)));
    }

    #[test]
    fn lottery_for_identical_additive_agents() {
        let inst = additive(&[&[100, 50, 50], &[100, 50, 50]]);
        let d = two_agent_lottery(&inst, LotteryTarget::Additive).unwrap();
        assert_eq!(d.len(), 2);
        let r = expost_report(&inst, &d).unwrap();
        assert!(r.min_ex_ante.at_least(&int(1)));
        for (_, a) in d.support() {
            assert!(min_efx_ratio(&inst, a).unwrap().at_least(&int(1)));
        }
    }

    #[test]
    fn lottery_for_opposed_agents_is_deterministic() {
        let inst = additive(&[&[1, 0], &[0, 1]]);
        let d = two_agent_lottery(&inst, LotteryTarget::EfPriority).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.support()[0].1.as_matching(), Some(vec![0, 1]));
    }

    #[test]
    fn lottery_targets_check_the_class() {
        let inst = paper_instance("prop-b1", &InstanceParams::default()).unwrap();
        assert!(matches!(two_agent_lottery(&inst, LotteryTarget::Additive), Err(Error::ClassMismatch(_))));
        let d = two_agent_lottery(&inst, LotteryTarget::EfxPriority).unwrap();
        let r = expost_report(&inst, &d).unwrap();
        assert!(r.min_ex_ante.at_least(&frac(2, 3)));
        assert!(r.min_efx.at_least(&int(1)));
        let c1 = paper_instance("prop-c1", &InstanceParams::default()).unwrap();
        assert!(matches!(two_agent_lottery(&c1, LotteryTarget::EfPriority), Err(Error::ClassMismatch(_))));
    }

    #[test]
    fn frontier_tradeoff_family() {
        let eps = frac(1, 1000);
        let inst = paper_instance("prop-4.4", &InstanceParams::default().eps(eps.clone())).unwrap();
        let f = impossibility_frontier(&inst, &int(1)).unwrap();
        assert!(f.exact);
        assert_eq!(f.best_alpha, Ratio::Finite((Rational::one() + &eps) / frac(3, 2)));
        let w = f.witness.unwrap();
        assert!(w.support().iter().all(|(p, _)| *p == frac(1, 2)), "{w:?}");
    }

    #[test]
    fn frontier_submodular_family() {
        let eps = frac(1, 1000);
        let inst = paper_instance("prop-b1", &InstanceParams::default().eps(eps.clone())).unwrap();
        let f = impossibility_frontier(&inst, &int(1)).unwrap();
        assert_eq!(f.candidates, 2);
        assert_eq!(f.best_alpha, Ratio::Finite((frac(1, 2) + &eps) / frac(3, 4)));
    }

    #[test]
    fn frontier_monotone_family() {
        let inst = paper_instance("prop-c1", &InstanceParams::default()).unwrap();
        let f = impossibility_frontier(&inst, &int(1)).unwrap();
        assert!(f.best_alpha <= Ratio::Finite(frac(2, 100)), "{}", f.best_alpha);
    }

    #[test]
    fn frontier_without_candidates() {
        let f = impossibility_frontier(&additive(&[&[1, 1, 1], &[1, 1, 1]]), &int(2)).unwrap();
        assert_eq!(f.best_alpha, Ratio::Finite(Rational::zero()));
        assert!(f.witness.is_none());
    }

    #[test]
    fn irrational_crossing_is_flagged() {
        // x^2 - 1/2 has its root at 1/sqrt(2)
        let c = [frac(-1, 2), Rational::zero(), Rational::one()];
        let (exact, brackets) = roots_in_unit(&c);
        assert!(exact.is_empty());
        let (lo, hi) = &brackets[0];
        assert!(eval_poly(&c, lo).is_negative() && eval_poly(&c, hi).is_positive());
        let (exact, _) = roots_in_unit(&[frac(-1, 4), Rational::zero(), Rational::one()]);
        assert_eq!(exact, vec![frac(1, 2)]);
    }
}
