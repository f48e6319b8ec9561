use num_traits::One;

use super::{next_steps, phase_one, require_padded, step_probability, RunLog, State, Step, UnenviedRule};
use crate::error::{Error, Result};
use crate::fairness::AllocationDistribution;
use crate::itemset::ItemSet;
use crate::model::{Allocation, Instance};
use crate::rational::Rational;

/// Leaf cap used when the caller has no better bound.
pub const DEFAULT_MAX_LEAVES: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionNode {
    pub allocation: Allocation,
    /// Item each agent last received as an unenvied agent, cleared when her
    /// bundle is replaced along a cycle.
    pub gifts: Vec<Option<usize>>,
    pub depth: usize,
    /// Probability of reaching this node.
    pub probability: Rational,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// The random or forced choice leading here (`None` at the root).
    pub step: Option<Step>,
}

impl ExecutionNode {
    /// `(Y_j, g_j)` with `X_j = Y_j + g_j`.
    pub fn split(&self, j: usize) -> (ItemSet, Option<usize>) {
        let x = self.allocation.bundle(j);
        match self.gifts[j] {
            Some(g) => (x.without(g), Some(g)),
            None => (x.clone(), None),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Every random branch of a run, with exact reach probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionTree {
    nodes: Vec<ExecutionNode>,
    leaves: Vec<usize>,
}

impl ExecutionTree {
    pub fn root(&self) -> &ExecutionNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &ExecutionNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[ExecutionNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf ids in depth-first order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    /// Node ids from the root down to `id`.
    pub fn path(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut at = id;
        while let Some(p) = self.nodes[at].parent {
            path.push(p);
            at = p;
        }
        path.reverse();
        path
    }

    /// The run log of the branch ending at `id`.
    pub fn run_log(&self, id: usize) -> RunLog {
        let mut steps = vec![Step::Ps { matchings: self.root().children.len() }];
        steps.extend(self.path(id).into_iter().filter_map(|k| self.nodes[k].step.clone()));
        RunLog { steps }
    }

    /// Leaves merged into a distribution over final allocations.
    pub fn distribution(&self) -> AllocationDistribution {
        AllocationDistribution::new(
            self.leaves.iter().map(|&l| (self.nodes[l].probability.clone(), self.nodes[l].allocation.clone())),
        )
        .expect("leaf probabilities sum to one")
    }
}

/// Expands every branch of the procedure with lowest-index choices.
pub fn fair_envy_cycles_enumerate(
    instance: &Instance,
    max_leaves: usize,
) -> Result<(AllocationDistribution, ExecutionTree)> {
    fair_envy_cycles_enumerate_with(instance, max_leaves, UnenviedRule::LowestIndex)
}

pub fn fair_envy_cycles_enumerate_with(
    instance: &Instance,
    max_leaves: usize,
    rule: UnenviedRule,
) -> Result<(AllocationDistribution, ExecutionTree)> {
    require_padded(instance)?;
    let (n, m) = (instance.n(), instance.m());
    let first = phase_one(instance)?;
    let mut nodes = vec![ExecutionNode {
        allocation: Allocation::empty(n, m),
        gifts: vec![None; n],
        depth: 0,
        probability: Rational::one(),
        parent: None,
        children: Vec::new(),
        step: None,
    }];
    let mut stack = Vec::new();
    for (index, (p, matching)) in first.lottery.entries().iter().enumerate().rev() {
        let state = State::after_matching(matching, m);
        let step = Step::BvnDraw { index, probability: p.clone(), matching: matching.clone() };
        stack.push((0usize, state, step));
    }
    let mut leaves = Vec::new();
    while let Some((parent, state, step)) = stack.pop() {
        let id = nodes.len();
        let probability = &nodes[parent].probability * step_probability(&step);
        let depth = nodes[parent].depth + 1;
        nodes[parent].children.push(id);
        let options = next_steps(instance, &state, rule)?;
        nodes.push(ExecutionNode {
            allocation: state.allocation.clone(),
            gifts: state.gifts.clone(),
            depth,
            probability,
            parent: Some(parent),
            children: Vec::new(),
            step: Some(step),
        });
        match options {
            None => {
                leaves.push(id);
                if leaves.len() > max_leaves {
                    return Err(Error::EnumerationLimit {
                        what: format!("execution tree leaves ({} branches still open)", stack.len()),
                        limit: max_leaves,
                    });
                }
            }
            Some(options) => {
                if depth > 4 * n * n * m + 2 * m {
                    return Err(Error::Invariant(format!("branch exceeds depth {depth}")));
                }
                for step in options.into_iter().rev() {
                    let child = state.apply(&step);
                    stack.push((id, child, step));
                }
            }
        }
    }
    let tree = ExecutionTree { nodes, leaves };
    Ok((tree.distribution(), tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::expost_report;
    use crate::model::{paper_instance, InstanceParams, Valuation, ValuationClass};
    use crate::rational::{frac, int};

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    #[test]
    fn apple_banana_distribution() {
        let inst = paper_instance("example-c1", &InstanceParams::default()).unwrap();
        let (d, tree) = fair_envy_cycles_enumerate(&inst, DEFAULT_MAX_LEAVES).unwrap();
        let a = Allocation::from_bundles(vec![set(&[0]), set(&[1, 2, 3])], 4).unwrap();
        let b = Allocation::from_bundles(vec![set(&[1, 2, 3]), set(&[0])], 4).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.probability_of(&a), frac(1, 2));
        assert_eq!(d.probability_of(&b), frac(1, 2));
        assert_eq!(tree.leaves().len(), 2);
        let r = expost_report(&inst, &d).unwrap();
        assert_eq!(r.min_ex_ante, crate::rational::Ratio::Finite(int(1)));
    }

    #[test]
    fn single_agent_single_leaf() {
        let inst = Instance::new(2, vec![Valuation::Additive { values: vec![int(1), int(0)] }], ValuationClass::Additive)
            .unwrap();
        let (d, tree) = fair_envy_cycles_enumerate(&inst, 10).unwrap();
        assert_eq!(tree.leaves().len(), 1);
        assert_eq!(d.support()[0].1.bundle(0), &set(&[0, 1]));
    }

    #[test]
    fn leaf_limit_is_enforced() {
        let inst = paper_instance("example-c1", &InstanceParams::default()).unwrap();
        assert!(matches!(fair_envy_cycles_enumerate(&inst, 1), Err(Error::EnumerationLimit { .. })));
    }

    #[test]
    fn uniform_rule_branches_on_gifts() {
        let inst = paper_instance("tight-d", &InstanceParams::default().n(3).k(2)).unwrap();
        let (_, tree) = fair_envy_cycles_enumerate_with(&inst, 1000, UnenviedRule::UniformRandom).unwrap();
        let total: Rational = tree.leaves().iter().map(|&l| tree.node(l).probability.clone()).sum();
        assert_eq!(total, Rational::one());
        // the last agent misses every extra item with probability 1/4
        let miss: Rational = tree
            .leaves()
            .iter()
            .filter(|&&l| tree.node(l).allocation.bundle(2).iter().all(|g| g < 3))
            .map(|&l| tree.node(l).probability.clone())
            .sum();
        assert_eq!(miss, frac(1, 4));
    }
}
