//! The randomized envy-cycle allocation procedure (sampled and fully
//! enumerated), its deterministic counterpart, and random serial
//! dictatorship.

mod deterministic;
mod rsd;
mod sampling;
mod tree;
mod verify;

pub use deterministic::{deterministic_envy_cycles, deterministic_envy_cycles_from, lexicographic_cycle, weakly_separated_matching, CyclePolicy};
pub use rsd::{rsd_enumerate, rsd_sample, serial_dictatorship, RSD_ENUMERATION_CAP};
pub use sampling::sample_index;
pub use tree::{fair_envy_cycles_enumerate, fair_envy_cycles_enumerate_with, ExecutionNode, ExecutionTree, DEFAULT_MAX_LEAVES};
pub use verify::{
    check_bundle_monotonicity, check_leaf_guarantees, check_main_coverage, check_per_step_dominance,
    check_phase_one_separation, check_step_bounds, check_tree_probabilities, verify_execution, Check,
    TreeVerification,
};

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bvn::{bvn_decompose, MatchingLottery};
use crate::eating::{one_step_ps, EatingTrace, FractionalAllocation};
use crate::envy::{build_envy_graph, cycle_lottery, source_scc, unenvied_agents};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::model::{Allocation, Instance};
use crate::rational::{int, Rational};

/// How the receiver of an item is picked among unenvied agents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnenviedRule {
    #[default]
    LowestIndex,
    HighestIndex,
    UniformRandom,
}

/// One entry of a run log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Step {
    /// Eating finished; `matchings` is the size of the decomposed lottery.
    Ps { matchings: usize },
    BvnDraw {
        index: usize,
        #[serde(with = "crate::rational::serde_rational")]
        probability: Rational,
        matching: Vec<usize>,
    },
    /// First-phase matching of the deterministic procedure.
    Matching { matching: Vec<usize> },
    Gift {
        item: usize,
        agent: usize,
        #[serde(with = "crate::rational::serde_rational")]
        probability: Rational,
    },
    Cycle {
        index: usize,
        cycle: Vec<usize>,
        #[serde(with = "crate::rational::serde_rational")]
        probability: Rational,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RunLog {
    pub steps: Vec<Step>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepCounts {
    pub item_assignments: usize,
    pub cycle_eliminations: usize,
    pub max_consecutive_cycles: usize,
}

/// Counts second-phase gifts and cycle eliminations, failing when more than
/// `m` gifts occur or `n²` eliminations happen back to back.
pub fn step_counter(log: &RunLog, n: usize, m: usize) -> Result<StepCounts> {
    let mut counts = StepCounts { item_assignments: 0, cycle_eliminations: 0, max_consecutive_cycles: 0 };
    let mut run = 0;
    for step in &log.steps {
        match step {
            Step::Gift { .. } => {
                counts.item_assignments += 1;
                run = 0;
            }
            Step::Cycle { .. } => {
                counts.cycle_eliminations += 1;
                run += 1;
                counts.max_consecutive_cycles = counts.max_consecutive_cycles.max(run);
            }
            _ => {}
        }
    }
    if counts.item_assignments > m {
        return Err(Error::Invariant(format!("{} gifts for {m} items", counts.item_assignments)));
    }
    if counts.max_consecutive_cycles >= n * n {
        return Err(Error::Invariant(format!(
            "{} consecutive cycle eliminations with n = {n}",
            counts.max_consecutive_cycles
        )));
    }
    Ok(counts)
}

/// Output of the first phase: the eaten fractions and their decomposition.
#[derive(Clone, Debug)]
pub struct PhaseOne {
    pub fractional: FractionalAllocation,
    pub trace: EatingTrace,
    pub lottery: MatchingLottery,
}

pub fn phase_one(instance: &Instance) -> Result<PhaseOne> {
    let (fractional, trace) = one_step_ps(instance)?;
    let lottery = bvn_decompose(&fractional)?;
    Ok(PhaseOne { fractional, trace, lottery })
}

pub(crate) fn matching_allocation(matching: &[usize], m: usize) -> Allocation {
    Allocation::from_bundles(matching.iter().map(|&g| ItemSet::singleton(g)).collect(), m)
        .expect("matchings are injective")
}

/// Partial allocation plus the gift marker of every agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct State {
    pub allocation: Allocation,
    pub gifts: Vec<Option<usize>>,
}

impl State {
    pub fn after_matching(matching: &[usize], m: usize) -> Self {
        State { allocation: matching_allocation(matching, m), gifts: vec![None; matching.len()] }
    }

    pub fn apply(&self, step: &Step) -> State {
        let mut next = self.clone();
        match step {
            Step::Gift { item, agent, .. } => {
                next.allocation.give(*agent, *item);
                next.gifts[*agent] = Some(*item);
            }
            Step::Cycle { cycle, .. } => {
                next.allocation.rotate(cycle);
                for &u in cycle {
                    next.gifts[u] = None;
                }
            }
            _ => {}
        }
        next
    }
}

/// The possible next steps of the second phase with their probabilities, or
/// `None` once every item is allocated.
pub(crate) fn next_steps(instance: &Instance, state: &State, rule: UnenviedRule) -> Result<Option<Vec<Step>>> {
    let Some(item) = state.allocation.unallocated().min() else { return Ok(None) };
    let graph = build_envy_graph(instance, &state.allocation);
    let unenvied = unenvied_agents(&graph);
    if !unenvied.is_empty() {
        let gift = |agent, probability| Step::Gift { item, agent, probability };
        let steps = match rule {
            UnenviedRule::LowestIndex => vec![gift(unenvied[0], Rational::one())],
            UnenviedRule::HighestIndex => vec![gift(*unenvied.last().expect("non-empty"), Rational::one())],
            UnenviedRule::UniformRandom => {
                let p = Rational::one() / int(unenvied.len() as i64);
                unenvied.iter().map(|&a| gift(a, p.clone())).collect()
            }
        };
        return Ok(Some(steps));
    }
    let scc = source_scc(&graph)?;
    let lottery = cycle_lottery(&graph, &scc)?;
    Ok(Some(
        lottery
            .cycles
            .into_iter()
            .enumerate()
            .map(|(index, (probability, cycle))| Step::Cycle { index, cycle, probability })
            .collect(),
    ))
}

fn require_padded(instance: &Instance) -> Result<()> {
    if instance.m() <= instance.n() {
        return Err(Error::Precondition(format!(
            "the procedure needs m > n (got n = {}, m = {}); pad with dummy items first",
            instance.n(),
            instance.m()
        )));
    }
    Ok(())
}

/// One seeded run of the randomized envy-cycle procedure with lowest-index
/// choices. The generator is ChaCha8 seeded from `seed`.
pub fn fair_envy_cycles_sample(instance: &Instance, seed: u64) -> Result<(Allocation, RunLog)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fair_envy_cycles_sample_with(instance, &mut rng, UnenviedRule::LowestIndex)
}

pub fn fair_envy_cycles_sample_with<R: Rng + ?Sized>(
    instance: &Instance,
    rng: &mut R,
    rule: UnenviedRule,
) -> Result<(Allocation, RunLog)> {
    require_padded(instance)?;
    let first = phase_one(instance)?;
    fair_envy_cycles_sample_from(instance, &first, rng, rule)
}

/// A sampled run reusing an already computed first phase, for repeated
/// trials on one instance.
pub fn fair_envy_cycles_sample_from<R: Rng + ?Sized>(
    instance: &Instance,
    first: &PhaseOne,
    rng: &mut R,
    rule: UnenviedRule,
) -> Result<(Allocation, RunLog)> {
    require_padded(instance)?;
    let entries = first.lottery.entries();
    let probs: Vec<Rational> = entries.iter().map(|(p, _)| p.clone()).collect();
    let index = sample_index(rng, &probs);
    let mut log = RunLog { steps: vec![Step::Ps { matchings: entries.len() }] };
    log.steps.push(Step::BvnDraw { index, probability: probs[index].clone(), matching: entries[index].1.clone() });
    let mut state = State::after_matching(&entries[index].1, instance.m());
    let (n, m) = (instance.n(), instance.m());
    let mut run = 0;
    while let Some(mut options) = next_steps(instance, &state, rule)? {
        let pick = if options.len() == 1 {
            0
        } else {
            let probs: Vec<Rational> = options.iter().map(step_probability).collect();
            sample_index(rng, &probs)
        };
        let step = options.swap_remove(pick);
        if matches!(step, Step::Cycle { .. }) {
            run += 1;
            if run >= n * n {
                return Err(Error::Invariant(format!("{run} consecutive cycle eliminations with n = {n}")));
            }
        } else {
            run = 0;
        }
        state = state.apply(&step);
        log.steps.push(step);
    }
    step_counter(&log, n, m)?;
    Ok((state.allocation, log))
}

pub(crate) fn step_probability(step: &Step) -> Rational {
    match step {
        Step::BvnDraw { probability, .. } | Step::Gift { probability, .. } | Step::Cycle { probability, .. } => {
            probability.clone()
        }
        _ => Rational::one(),
    }
}
