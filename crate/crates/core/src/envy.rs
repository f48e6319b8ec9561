//! Envy graphs, their strongly connected components, and the fair lottery
//! over envy cycles built from a Markov chain on reversed arcs.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::stationary_distribution;
use crate::model::{Allocation, Instance};
use crate::rational::{int, Rational};

/// Directed graph on agents with an arc `i → j` when `i` strictly envies `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyGraph {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl EnvyGraph {
    /// Graph from an explicit arc list (self-loops rejected).
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(i, j) in arcs {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange { index: i.max(j), limit: n });
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at {i}")));
            }
            if !succ[i].contains(&j) {
                succ[i].push(j);
                pred[j].push(i);
            }
        }
        for v in succ.iter_mut().chain(pred.iter_mut()) {
            v.sort_unstable();
        }
        Ok(EnvyGraph { succ, pred })
    }

    pub fn n(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.pred[j]
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.pred[j].len()
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.succ[i].binary_search(&j).is_ok()
    }

    /// Arcs in lexicographic order.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
            .collect()
    }

    /// Nodes reachable from `start` using only nodes accepted by `allowed`.
    fn reachable(&self, start: usize, allowed: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(x) = stack.pop() {
            for &y in &self.succ[x] {
                if !seen[y] && allowed(y) {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }
}

pub fn build_envy_graph(instance: &Instance, allocation: &Allocation) -> EnvyGraph {
    let n = instance.n();
    let mut arcs = Vec::new();
    for i in 0..n {
        let own = instance.value(i, allocation.bundle(i));
        for j in (0..n).filter(|&j| j != i) {
            if instance.value(i, allocation.bundle(j)) > own {
                arcs.push((i, j));
            }
        }
    }
    EnvyGraph::from_arcs(n, &arcs).expect("arcs are in range")
}

/// Agents nobody envies, in increasing order.
pub fn unenvied_agents(graph: &EnvyGraph) -> Vec<usize> {
    (0..graph.n()).filter(|&j| graph.in_degree(j) == 0).collect()
}

/// Strongly connected components (Tarjan), each sorted, listed by their
/// smallest member.
pub fn strongly_connected_components(graph: &EnvyGraph) -> Vec<Vec<usize>> {
    struct State {
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        comps: Vec<Vec<usize>>,
    }
    fn visit(g: &EnvyGraph, v: usize, s: &mut State) {
        s.index[v] = Some(s.next);
        s.low[v] = s.next;
        s.next += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for &w in g.successors(v) {
            match s.index[w] {
                None => {
                    visit(g, w, s);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            loop {
                let w = s.stack.pop().expect("stack holds v");
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.comps.push(comp);
        }
    }
    let n = graph.n();
    let mut s = State {
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comps: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(graph, v, &mut s);
        }
    }
    s.comps.sort();
    s.comps
}

/// The strongly connected component without entering arcs that contains the
/// lowest-index agent among all such components. Only defined when every
/// agent is envied.
pub fn source_scc(graph: &EnvyGraph) -> Result<Vec<usize>> {
    if let Some(j) = unenvied_agents(graph).first() {
        return Err(Error::Precondition(format!("agent {j} is unenvied")));
    }
    let comps = strongly_connected_components(graph);
    let mut comp_of = vec![0; graph.n()];
    for (c, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = c;
        }
    }
    let source = comps
        .iter()
        .enumerate()
        .find(|(c, comp)| comp.iter().all(|&j| graph.predecessors(j).iter().all(|&i| comp_of[i] == *c)))
        .map(|(_, comp)| comp.clone())
        .ok_or_else(|| Error::Invariant("condensation has no source".into()))?;
    if source.len() < 2 {
        return Err(Error::Invariant(format!("source component {source:?} is a single envied agent")));
    }
    Ok(source)
}

pub fn is_strongly_connected(graph: &EnvyGraph, nodes: &[usize]) -> bool {
    let Some(&first) = nodes.first() else { return false };
    let inside = |v: usize| nodes.contains(&v);
    let fwd = graph.reachable(first, inside);
    if !nodes.iter().all(|&v| fwd[v]) {
        return false;
    }
    let rev = EnvyGraph { succ: graph.pred.clone(), pred: graph.succ.clone() };
    let back = rev.reachable(first, inside);
    nodes.iter().all(|&v| back[v])
}

/// Lottery over simple envy cycles in which, for every node, all entering
/// arcs lie on cycles of the same total probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleLottery {
    /// `(p_t, [u_1, ..., u_k])`: `u_s` envies `u_{s+1}` and receives its
    /// bundle.
    pub cycles: Vec<(Rational, Vec<usize>)>,
    /// Peeled flow mass of each cycle before normalization.
    pub raw_weights: Vec<Rational>,
    /// Stationary probability of each node of the component.
    pub stationary: BTreeMap<usize, Rational>,
    /// Flow on the reversed arc `j → i` of every envy arc `(i, j)`, keyed by
    /// the envy arc.
    pub flow: BTreeMap<(usize, usize), Rational>,
}

impl CycleLottery {
    /// Total (normalized) probability of the cycles using envy arc `(i, j)`.
    pub fn arc_probability(&self, i: usize, j: usize) -> Rational {
        self.arc_total(i, j, |t| &self.cycles[t].0)
    }

    /// Total peeled mass of the cycles using envy arc `(i, j)`.
    pub fn arc_raw_mass(&self, i: usize, j: usize) -> Rational {
        self.arc_total(i, j, |t| &self.raw_weights[t])
    }

    fn arc_total<'a>(&'a self, i: usize, j: usize, w: impl Fn(usize) -> &'a Rational) -> Rational {
        self.cycles
            .iter()
            .enumerate()
            .filter(|(_, (_, c))| cycle_arcs(c).any(|a| a == (i, j)))
            .map(|(t, _)| w(t))
            .sum()
    }

    /// First node whose entering arcs carry different probabilities.
    pub fn equal_incoming_violation(&self, graph: &EnvyGraph) -> Option<usize> {
        self.stationary.keys().copied().find(|&j| {
            let totals: Vec<Rational> = graph
                .predecessors(j)
                .iter()
                .filter(|i| self.stationary.contains_key(i))
                .map(|&i| self.arc_probability(i, j))
                .collect();
            totals.windows(2).any(|w| w[0] != w[1])
        })
    }
}

/// Arcs `(u_s, u_{s+1})` of a cycle, closing back to `u_1`.
pub fn cycle_arcs(cycle: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..cycle.len()).map(move |s| (cycle[s], cycle[(s + 1) % cycle.len()]))
}

/// Builds the cycle lottery on a strongly connected node set of size ≥ 2:
/// stationary distribution of the chain `p(j, i) = 1/in-deg(j)` on reversed
/// arcs, flow `w(j, i) = π(j) p(j, i)`, then repeated peeling of positive
/// flow cycles found by walking from the lowest node along the lowest
/// positive arc.
pub fn cycle_lottery(graph: &EnvyGraph, nodes: &[usize]) -> Result<CycleLottery> {
    let mut nodes = nodes.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.len() < 2 {
        return Err(Error::Precondition("cycle lottery needs at least two nodes".into()));
    }
    if !is_strongly_connected(graph, &nodes) {
        return Err(Error::Precondition(format!("nodes {nodes:?} are not strongly connected")));
    }
    let k = nodes.len();
    let pos = |v: usize| nodes.binary_search(&v).ok();
    let indeg: Vec<usize> = nodes
        .iter()
        .map(|&j| graph.predecessors(j).iter().filter(|&&i| pos(i).is_some()).count())
        .collect();

    let mut chain = vec![vec![Rational::zero(); k]; k];
    for (b, &j) in nodes.iter().enumerate() {
        for &i in graph.predecessors(j) {
            if let Some(a) = pos(i) {
                chain[b][a] = Rational::one() / int(indeg[b] as i64);
            }
        }
    }
    let pi = stationary_distribution(&chain)?;

    // flow graph over positions: arc b → a carries w(j, i)
    let mut flow = vec![vec![Rational::zero(); k]; k];
    let mut flow_map = BTreeMap::new();
    for (b, &j) in nodes.iter().enumerate() {
        for &i in graph.predecessors(j) {
            if let Some(a) = pos(i) {
                let w = &pi[b] / int(indeg[b] as i64);
                flow[b][a] = w.clone();
                flow_map.insert((i, j), w);
            }
        }
    }
    for x in 0..k {
        let out: Rational = flow[x].iter().sum();
        let inn: Rational = (0..k).map(|y| &flow[y][x]).sum();
        if out != pi[x] || inn != pi[x] {
            return Err(Error::Invariant(format!("flow is unbalanced at node {}", nodes[x])));
        }
    }

    let mut raw: Vec<(Rational, Vec<usize>)> = Vec::new();
    while let Some(start) = (0..k).find(|&x| flow[x].iter().any(|w| !w.is_zero())) {
        let mut walk = vec![start];
        let mut at = vec![None; k];
        at[start] = Some(0);
        let begin = loop {
            let x = *walk.last().expect("non-empty walk");
            let y = (0..k)
                .find(|&y| !flow[x][y].is_zero())
                .ok_or_else(|| Error::Invariant("balanced flow walk got stuck".into()))?;
            if let Some(s) = at[y] {
                break s;
            }
            at[y] = Some(walk.len());
            walk.push(y);
        };
        let flow_cycle = &walk[begin..];
        let arcs: Vec<(usize, usize)> =
            (0..flow_cycle.len()).map(|s| (flow_cycle[s], flow_cycle[(s + 1) % flow_cycle.len()])).collect();
        let w = arcs.iter().map(|&(x, y)| flow[x][y].clone()).min().expect("cycle has arcs");
        for &(x, y) in &arcs {
            flow[x][y] -= &w;
        }
        // flow x → y is envy y → x, so the envy cycle runs the walk backwards
        let mut cycle: Vec<usize> = flow_cycle.iter().rev().map(|&x| nodes[x]).collect();
        let lo = cycle.iter().enumerate().min_by_key(|(_, v)| **v).map(|(s, _)| s).expect("non-empty");
        cycle.rotate_left(lo);
        raw.push((w, cycle));
    }

    let total: Rational = raw.iter().map(|(w, _)| w).sum();
    let lottery = CycleLottery {
        cycles: raw.iter().map(|(w, c)| (w / &total, c.clone())).collect(),
        raw_weights: raw.into_iter().map(|(w, _)| w).collect(),
        stationary: nodes.iter().copied().zip(pi).collect(),
        flow: flow_map,
    };
    if let Some(j) = lottery.equal_incoming_violation(graph) {
        return Err(Error::Invariant(format!("arcs entering node {j} carry unequal probability")));
    }
    Ok(lottery)
}
