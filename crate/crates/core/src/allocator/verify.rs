use num_traits::Zero;
use serde::Serialize;

use super::{step_counter, ExecutionTree};
use crate::error::Result;
use crate::fairness::{
    ef1_ratio, efx_ratio, stochastically_covers, stochastically_dominates, strong_separation_violation,
    AllocationDistribution, Dominance, FiniteRandomVariable, OutcomeSpace,
};
use crate::model::Instance;
use crate::rational::{format_rational, frac, int, Rational};

/// Outcome of one invariant check over an execution tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeVerification {
    pub checks: Vec<Check>,
}

impl TreeVerification {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs every check on an enumerated execution tree.
pub fn verify_execution(instance: &Instance, tree: &ExecutionTree) -> Result<TreeVerification> {
    let mut checks = Vec::new();
    let mut push = |name, witness: Option<String>| checks.push(Check { name, passed: witness.is_none(), witness });
    push("probabilities", check_tree_probabilities(tree));
    push("bundle-monotonicity", check_bundle_monotonicity(instance, tree));
    push("gift-markers", check_gift_markers(tree));
    let (efx, ef1, ex_ante) = check_leaf_guarantees(instance, tree)?;
    push("leaves-half-efx", efx);
    push("leaves-ef1", ef1);
    push("ex-ante-half-ef", ex_ante);
    push("per-step-dominance", check_per_step_dominance(instance, tree)?);
    push("phase-one-strong-separation", check_phase_one_separation(instance, tree)?);
    push("main-coverage", check_main_coverage(instance, tree)?);
    push("step-bounds", check_step_bounds(instance, tree));
    Ok(TreeVerification { checks })
}

/// Children's probabilities add up to their parent's, leaves to one.
pub fn check_tree_probabilities(tree: &ExecutionTree) -> Option<String> {
    for (id, node) in tree.nodes().iter().enumerate() {
        if node.probability <= Rational::zero() {
            return Some(format!("node {id} has probability {}", node.probability));
        }
        if !node.is_leaf() {
            let sum: Rational = node.children.iter().map(|&c| &tree.node(c).probability).sum();
            if sum != node.probability {
                return Some(format!("children of node {id} carry {sum} of {}", node.probability));
            }
        }
    }
    let total: Rational = tree.leaves().iter().map(|&l| &tree.node(l).probability).sum();
    (total != int(1)).then(|| format!("leaves carry total probability {total}"))
}

/// No agent's value for her own bundle ever decreases along an edge.
pub fn check_bundle_monotonicity(instance: &Instance, tree: &ExecutionTree) -> Option<String> {
    for (id, node) in tree.nodes().iter().enumerate() {
        for &c in &node.children {
            let child = tree.node(c);
            for i in 0..instance.n() {
                if instance.value(i, child.allocation.bundle(i)) < instance.value(i, node.allocation.bundle(i)) {
                    return Some(format!("agent {i} loses value on edge {id} -> {c}"));
                }
            }
        }
    }
    None
}

fn check_gift_markers(tree: &ExecutionTree) -> Option<String> {
    for (id, node) in tree.nodes().iter().enumerate() {
        for (j, g) in node.gifts.iter().enumerate() {
            if let Some(g) = g {
                if !node.allocation.bundle(j).contains(*g) {
                    return Some(format!("node {id}: gift {g} of agent {j} is not in her bundle"));
                }
            }
        }
    }
    None
}

/// `(½-EFX witness, EF1 witness, ex-ante ½-EF witness)` over the leaves.
pub fn check_leaf_guarantees(
    instance: &Instance,
    tree: &ExecutionTree,
) -> Result<(Option<String>, Option<String>, Option<String>)> {
    let half = frac(1, 2);
    let one = int(1);
    let (mut efx, mut ef1) = (None, None);
    for &l in tree.leaves() {
        let a = &tree.node(l).allocation;
        for i in 0..instance.n() {
            for j in (0..instance.n()).filter(|&j| j != i) {
                let r = efx_ratio(instance, a, i, j)?;
                if efx.is_none() && !r.at_least(&half) {
                    efx = Some(format!("leaf {l}: pair ({i},{j}) EFX ratio {r}"));
                }
                let r = ef1_ratio(instance, a, i, j)?;
                if ef1.is_none() && !r.at_least(&one) {
                    ef1 = Some(format!("leaf {l}: pair ({i},{j}) EF1 ratio {r}"));
                }
            }
        }
    }
    let dist = tree.distribution();
    let mut ex_ante = None;
    'outer: for i in 0..instance.n() {
        let own = dist.expected_value(instance, i, i);
        for j in (0..instance.n()).filter(|&j| j != i) {
            let other = dist.expected_value(instance, i, j);
            if &own * int(2) < other {
                ex_ante = Some(format!(
                    "pair ({i},{j}): E own {} < half of E other {}",
                    format_rational(&own),
                    format_rational(&other)
                ));
                break 'outer;
            }
        }
    }
    Ok((efx, ef1, ex_ante))
}

/// At every internal node `u` with random child `u'`:
/// `v_i(X_i^{u'}) ⪰_SD v_i(Y_j^{u'}) · 1[X_j^u ≠ X_j^{u'}]`.
pub fn check_per_step_dominance(instance: &Instance, tree: &ExecutionTree) -> Result<Option<String>> {
    let n = instance.n();
    for (id, node) in tree.nodes().iter().enumerate() {
        if node.is_leaf() {
            continue;
        }
        let children: Vec<_> = node.children.iter().map(|&c| tree.node(c)).collect();
        let cond: Vec<Rational> = children.iter().map(|c| &c.probability / &node.probability).collect();
        for i in 0..n {
            let x = FiniteRandomVariable::new(
                children
                    .iter()
                    .zip(&cond)
                    .map(|(c, p)| (p.clone(), instance.value(i, c.allocation.bundle(i))))
                    .collect(),
            )?;
            for j in (0..n).filter(|&j| j != i) {
                let y = FiniteRandomVariable::new(
                    children
                        .iter()
                        .zip(&cond)
                        .map(|(c, p)| {
                            let changed = c.allocation.bundle(j) != node.allocation.bundle(j);
                            let v = if changed { instance.value(i, &c.split(j).0) } else { Rational::zero() };
                            (p.clone(), v)
                        })
                        .collect(),
                )?;
                if let Dominance::Fails { threshold } = stochastically_dominates(&x, &y) {
                    return Ok(Some(format!(
                        "node {id}, pair ({i},{j}), threshold {}",
                        format_rational(&threshold)
                    )));
                }
            }
        }
    }
    Ok(None)
}

/// The first-phase matchings are strongly separated.
pub fn check_phase_one_separation(instance: &Instance, tree: &ExecutionTree) -> Result<Option<String>> {
    let dist = AllocationDistribution::new(
        tree.root()
            .children
            .iter()
            .map(|&c| (tree.node(c).probability.clone(), tree.node(c).allocation.clone())),
    )?;
    Ok(strong_separation_violation(instance, &dist)?
        .map(|(k, i, w)| format!("matching {k}: agent {i} prefers item {w} which is unallocated somewhere")))
}

/// On the leaf space: `(v_i(X_i), v_i(X_i)) ⪰_SC (v_i(Y_j), v_i(g_j))`.
pub fn check_main_coverage(instance: &Instance, tree: &ExecutionTree) -> Result<Option<String>> {
    let leaves: Vec<_> = tree.leaves().iter().map(|&l| tree.node(l)).collect();
    let space = OutcomeSpace::new(leaves.iter().map(|l| l.probability.clone()).collect())?;
    let n = instance.n();
    for i in 0..n {
        let x: Vec<Rational> = leaves.iter().map(|l| instance.value(i, l.allocation.bundle(i))).collect();
        for j in (0..n).filter(|&j| j != i) {
            let (y, g): (Vec<Rational>, Vec<Rational>) = leaves
                .iter()
                .map(|l| {
                    let (rest, gift) = l.split(j);
                    let gv = gift.map_or_else(Rational::zero, |g| instance.item_value(i, g));
                    (instance.value(i, &rest), gv)
                })
                .unzip();
            if let Dominance::Fails { threshold } =
                stochastically_covers(&space, &[x.clone(), x.clone()], &[y, g])?
            {
                return Ok(Some(format!("pair ({i},{j}), threshold {}", format_rational(&threshold))));
            }
        }
    }
    Ok(None)
}

/// Every branch gives at most `m` gifts and fewer than `n²` consecutive
/// cycle eliminations.
pub fn check_step_bounds(instance: &Instance, tree: &ExecutionTree) -> Option<String> {
    tree.leaves().iter().find_map(|&l| {
        step_counter(&tree.run_log(l), instance.n(), instance.m())
            .err()
            .map(|e| format!("leaf {l}: {e}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::{fair_envy_cycles_enumerate, DEFAULT_MAX_LEAVES};
    use crate::fairness::expost_report;
    use crate::model::{paper_instance, InstanceParams};

    #[test]
    fn apple_banana_passes_everything() {
        let inst = paper_instance("example-c1", &InstanceParams::default()).unwrap();
        let (_, tree) = fair_envy_cycles_enumerate(&inst, DEFAULT_MAX_LEAVES).unwrap();
        let v = verify_execution(&inst, &tree).unwrap();
        assert!(v.all_passed(), "{:?}", v.failures().collect::<Vec<_>>());
    }

    #[test]
    fn durian_example_meets_guarantees() {
        let inst = paper_instance("example-3.2", &InstanceParams::default().n(4).eps(frac(1, 1000))).unwrap();
        let (d, tree) = fair_envy_cycles_enumerate(&inst, DEFAULT_MAX_LEAVES).unwrap();
        let v = verify_execution(&inst, &tree).unwrap();
        assert!(v.all_passed(), "{:?}", v.failures().collect::<Vec<_>>());
        assert!(expost_report(&inst, &d).unwrap().meets_half_guarantees());
    }
}
