use num_traits::One;

use super::{matching_allocation, require_padded, step_counter, RunLog, Step};
use crate::eating::preference_orders;
use crate::envy::{build_envy_graph, unenvied_agents, EnvyGraph};
use crate::error::{Error, Result};
use crate::fairness::weak_separation_violation;
use crate::model::{Allocation, Instance};

/// When the deterministic procedure eliminates envy cycles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CyclePolicy {
    /// Only when nobody is unenvied.
    #[default]
    WhenStuck,
    /// Whenever a cycle exists, before handing out the next item.
    Eager,
}

/// One item per agent with no agent preferring an unmatched item: agents
/// pick their favorite remaining item in index order, then any agent that
/// still prefers an unmatched item is moved to it until none does.
pub fn weakly_separated_matching(instance: &Instance) -> Vec<usize> {
    let prefs = preference_orders(instance);
    let mut taken = vec![false; instance.m()];
    let mut matching = Vec::with_capacity(instance.n());
    for order in &prefs {
        let g = *order.iter().find(|&&g| !taken[g]).expect("m >= n");
        taken[g] = true;
        matching.push(g);
    }
    loop {
        let a = matching_allocation(&matching, instance.m());
        match weak_separation_violation(instance, &a) {
            None => return matching,
            Some((i, _)) => {
                let best = *prefs[i].iter().find(|&&g| a.unallocated().contains(g)).expect("violation names a free item");
                matching[i] = best;
            }
        }
    }
}

/// Lexicographically smallest simple cycle `[u_1, ..., u_k]` with
/// `u_1 → u_2 → ... → u_k → u_1`, or `None` for an acyclic graph.
pub fn lexicographic_cycle(graph: &EnvyGraph) -> Option<Vec<usize>> {
    let n = graph.n();
    for s in 0..n {
        // s is the smallest node on the cycle, so only nodes >= s qualify
        let mut path = vec![s];
        let mut used = vec![false; n];
        used[s] = true;
        let reaches_s = |from: usize, used: &[bool]| -> bool {
            let mut seen = vec![false; n];
            let mut stack = vec![from];
            seen[from] = true;
            while let Some(x) = stack.pop() {
                for &y in graph.successors(x) {
                    if y == s {
                        return true;
                    }
                    if y > s && !used[y] && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            false
        };
        if !reaches_s(s, &used) {
            continue;
        }
        loop {
            let x = *path.last().expect("non-empty");
            if graph.has_arc(x, s) && path.len() >= 2 {
                return Some(path);
            }
            let y = graph
                .successors(x)
                .iter()
                .copied()
                .find(|&y| y > s && !used[y] && reaches_s(y, &used))
                .expect("some successor leads back");
            used[y] = true;
            path.push(y);
        }
    }
    None
}

/// The deterministic two-phase envy-cycle procedure with lowest-index
/// choices throughout.
pub fn deterministic_envy_cycles(instance: &Instance) -> Result<(Allocation, RunLog)> {
    require_padded(instance)?;
    let matching = weakly_separated_matching(instance);
    let start = matching_allocation(&matching, instance.m());
    deterministic_envy_cycles_from(instance, start, CyclePolicy::WhenStuck)
}

/// Second phase of the deterministic procedure from a given partial
/// allocation.
pub fn deterministic_envy_cycles_from(
    instance: &Instance,
    start: Allocation,
    policy: CyclePolicy,
) -> Result<(Allocation, RunLog)> {
    let (n, m) = (instance.n(), instance.m());
    if start.n() != n {
        return Err(Error::MalformedInstance(format!("start allocation has {} bundles", start.n())));
    }
    let mut log = RunLog::default();
    if let Some(matching) = start.as_matching() {
        log.steps.push(Step::Matching { matching });
    }
    let mut x = start;
    let mut run = 0;
    while let Some(item) = x.unallocated().min() {
        let graph = build_envy_graph(instance, &x);
        let unenvied = unenvied_agents(&graph);
        let cycle = match (policy, unenvied.first()) {
            (CyclePolicy::WhenStuck, Some(_)) => None,
            (CyclePolicy::WhenStuck, None) => Some(lexicographic_cycle(&graph).ok_or_else(|| {
                Error::Invariant("every agent is envied but the envy graph is acyclic".into())
            })?),
            (CyclePolicy::Eager, _) => lexicographic_cycle(&graph),
        };
        match cycle {
            Some(cycle) => {
                run += 1;
                if run >= n * n {
                    return Err(Error::Invariant(format!("{run} consecutive cycle eliminations")));
                }
                x.rotate(&cycle);
                log.steps.push(Step::Cycle { index: 0, cycle, probability: One::one() });
            }
            None => {
                let agent = *unenvied.first().expect("an acyclic envy graph has a source");
                run = 0;
                x.give(agent, item);
                log.steps.push(Step::Gift { item, agent, probability: One::one() });
            }
        }
    }
    step_counter(&log, n, m)?;
    Ok((x, log))
}
