//! Simultaneous eating (probabilistic serial) over single items.

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bvn::bvn_decompose;
use crate::error::{Error, Result};
use crate::fairness::AllocationDistribution;
use crate::itemset::ItemSet;
use crate::model::{Allocation, Instance};
use crate::rational::{int, Rational};

/// An `n × m` matrix of eaten fractions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalAllocation {
    rows: Vec<Vec<Rational>>,
    m: usize,
}

impl FractionalAllocation {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidMatrix("rows have different lengths".into()));
        }
        if rows.iter().flatten().any(|z| *z < Rational::zero() || *z > Rational::one()) {
            return Err(Error::InvalidMatrix("entries must lie in [0, 1]".into()));
        }
        Ok(FractionalAllocation { rows, m })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn row_sum(&self, i: usize) -> Rational {
        self.rows[i].iter().sum()
    }

    pub fn column_sum(&self, j: usize) -> Rational {
        self.rows.iter().map(|r| &r[j]).sum()
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().flatten().filter(|z| !z.is_zero()).count()
    }
}

/// An exhaustion event: the items that ran out at `time`, and the agents
/// that moved on (to `None` when nothing is left).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EatingEvent {
    #[serde(with = "crate::rational::serde_rational")]
    pub time: Rational,
    pub exhausted: Vec<usize>,
    pub switches: Vec<(usize, Option<usize>)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EatingTrace {
    pub events: Vec<EatingEvent>,
}

/// Item preference order of every agent by singleton value, ties to the
/// lowest index.
pub(crate) fn preference_orders(instance: &Instance) -> Vec<Vec<usize>> {
    (0..instance.n())
        .map(|i| {
            let values: Vec<Rational> = (0..instance.m()).map(|g| instance.item_value(i, g)).collect();
            let mut order: Vec<usize> = (0..instance.m()).collect();
            order.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
            order
        })
        .collect()
}

/// Runs the eating procedure for `units` time units. Returns, per time
/// unit, the `n × m` matrix eaten during that unit.
fn simulate(prefs: &[Vec<usize>], m: usize, units: usize) -> (Vec<Vec<Vec<Rational>>>, EatingTrace) {
    let n = prefs.len();
    let mut remaining = vec![Rational::one(); m];
    let mut eaten = vec![vec![vec![Rational::zero(); m]; n]; units];
    let mut cursor = vec![0usize; n];
    let current = |cursor: &mut [usize], remaining: &[Rational], i: usize| -> Option<usize> {
        while cursor[i] < prefs[i].len() && remaining[prefs[i][cursor[i]]].is_zero() {
            cursor[i] += 1;
        }
        prefs[i].get(cursor[i]).copied()
    };
    let mut trace = EatingTrace::default();
    let mut now = Rational::zero();
    let end = int(units as i64);
    let mut eating: Vec<Option<usize>> = (0..n).map(|i| current(&mut cursor, &remaining, i)).collect();
    while now < end {
        let mut eaters = vec![0i64; m];
        for g in eating.iter().flatten() {
            eaters[*g] += 1;
        }
        let unit = now.to_integer().to_usize().expect("time fits in usize");
        let unit_end = int(unit as i64 + 1);
        let mut step = &unit_end - &now;
        for g in 0..m {
            if eaters[g] > 0 {
                let t = &remaining[g] / int(eaters[g]);
                if t < step {
                    step = t;
                }
            }
        }
        if step.is_zero() {
            break;
        }
        for (i, g) in eating.iter().enumerate() {
            if let Some(g) = *g {
                eaten[unit][i][g] += &step;
            }
        }
        let mut exhausted = Vec::new();
        for g in 0..m {
            if eaters[g] > 0 {
                remaining[g] -= &step * int(eaters[g]);
                if remaining[g].is_zero() {
                    exhausted.push(g);
                }
            }
        }
        now += step;
        if !exhausted.is_empty() {
            let mut switches = Vec::new();
            for i in 0..n {
                if eating[i].is_some_and(|g| exhausted.contains(&g)) {
                    let next = current(&mut cursor, &remaining, i);
                    eating[i] = next;
                    switches.push((i, next));
                }
            }
            trace.events.push(EatingEvent { time: now.clone(), exhausted, switches });
        }
        if eating.iter().all(Option::is_none) {
            break;
        }
    }
    (eaten, trace)
}

/// Every agent eats her favorite remaining item at unit speed for exactly
/// one time unit. Requires `m > n`.
pub fn one_step_ps(instance: &Instance) -> Result<(FractionalAllocation, EatingTrace)> {
    if instance.m() <= instance.n() {
        return Err(Error::Precondition(format!(
            "one-step eating needs m > n (got n = {}, m = {}); pad with dummy items first",
            instance.n(),
            instance.m()
        )));
    }
    let (mut units, trace) = simulate(&preference_orders(instance), instance.m(), 1);
    let z = FractionalAllocation::new(units.pop().expect("one unit"))?;
    Ok((z, trace))
}

/// The multi-unit eating lottery: eating runs for `k = m / n` units, copy `r`
/// of each agent owns what she eats during unit `r`, the square copy matrix
/// is decomposed into matchings and copies are merged back per agent.
/// Items are padded with zero-value dummies until `n` divides `m`; the
/// dummies are removed from the result.
pub fn multi_step_ps_lottery(instance: &Instance) -> Result<AllocationDistribution> {
    let n = instance.n();
    let m0 = instance.m();
    let padded = if m0.is_multiple_of(n) { instance.clone() } else { instance.with_dummy_items(n - m0 % n) };
    let m = padded.m();
    let k = m / n;
    let (units, _) = simulate(&preference_orders(&padded), m, k);
    // row r*n + i is copy r of agent i
    let rows: Vec<Vec<Rational>> = units.into_iter().flatten().collect();
    let z = FractionalAllocation::new(rows)?;
    let lottery = bvn_decompose(&z)?;
    let entries = lottery.entries().iter().map(|(p, matching)| {
        let mut bundles = vec![ItemSet::new(); n];
        for (row, &g) in matching.iter().enumerate() {
            bundles[row % n].insert(g);
        }
        let a = Allocation::from_bundles(bundles, m).expect("copy matching is a partition");
        (p.clone(), a.restrict(m0))
    });
    AllocationDistribution::new(entries)
}
