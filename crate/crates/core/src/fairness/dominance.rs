use std::cmp::Ordering;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A non-negative random variable with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteRandomVariable {
    atoms: Vec<(Rational, Rational)>,
}

impl FiniteRandomVariable {
    /// `atoms` are `(probability, value)` pairs.
    pub fn new(atoms: Vec<(Rational, Rational)>) -> Result<Self> {
        if atoms.iter().any(|(p, _)| *p <= Rational::zero()) {
            return Err(Error::InvalidParameter("atom probabilities must be positive".into()));
        }
        if atoms.iter().any(|(_, v)| *v < Rational::zero()) {
            return Err(Error::InvalidParameter("values must be non-negative".into()));
        }
        let total: Rational = atoms.iter().map(|(p, _)| p).sum();
        if !total.is_one() {
            return Err(Error::InvalidParameter(format!("atom probabilities sum to {total}")));
        }
        Ok(FiniteRandomVariable { atoms })
    }

    pub fn constant(value: Rational) -> Self {
        FiniteRandomVariable { atoms: vec![(Rational::one(), value)] }
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn expectation(&self) -> Rational {
        self.atoms.iter().map(|(p, v)| p * v).sum()
    }

    /// `P[X >= t]`.
    pub fn tail(&self, t: &Rational) -> Rational {
        self.atoms.iter().filter(|(_, v)| v >= t).map(|(p, _)| p).sum()
    }
}

/// Outcome of a dominance or coverage check. A failure names the largest
/// threshold at which the tail inequality is violated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dominance {
    Holds,
    Fails { threshold: Rational },
}

impl Dominance {
    pub fn holds(&self) -> bool {
        matches!(self, Dominance::Holds)
    }
}

/// Sweeps positive thresholds in decreasing order, keeping the running
/// difference of tail sums. `weighted` holds `(value, signed mass)`.
fn sweep(mut weighted: Vec<(Rational, Rational)>) -> Dominance {
    weighted.retain(|(v, _)| *v > Rational::zero());
    weighted.sort_by(|a, b| b.0.cmp(&a.0));
    let mut balance = Rational::zero();
    let mut k = 0;
    while k < weighted.len() {
        let t = weighted[k].0.clone();
        while k < weighted.len() && weighted[k].0.cmp(&t) == Ordering::Equal {
            balance += &weighted[k].1;
            k += 1;
        }
        if balance < Rational::zero() {
            return Dominance::Fails { threshold: t };
        }
    }
    Dominance::Holds
}

/// `X ⪰_SD Y`: `P[X >= t] >= P[Y >= t]` for every `t > 0`.
pub fn stochastically_dominates(x: &FiniteRandomVariable, y: &FiniteRandomVariable) -> Dominance {
    let mut w: Vec<(Rational, Rational)> = x.atoms.iter().map(|(p, v)| (v.clone(), p.clone())).collect();
    w.extend(y.atoms.iter().map(|(p, v)| (v.clone(), -p)));
    sweep(w)
}

/// A finite probability space given by its outcome probabilities. Random
/// variables on it are value vectors indexed by outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeSpace {
    probs: Vec<Rational>,
}

impl OutcomeSpace {
    pub fn new(probs: Vec<Rational>) -> Result<Self> {
        if probs.iter().any(|p| *p < Rational::zero()) {
            return Err(Error::InvalidParameter("negative outcome probability".into()));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidParameter(format!("outcome probabilities sum to {total}")));
        }
        Ok(OutcomeSpace { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    /// Marginal distribution of a variable on this space.
    pub fn marginal(&self, var: &[Rational]) -> Result<FiniteRandomVariable> {
        self.check(var)?;
        let atoms = self
            .probs
            .iter()
            .zip(var)
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, v)| (p.clone(), v.clone()))
            .collect();
        FiniteRandomVariable::new(atoms)
    }

    fn check(&self, var: &[Rational]) -> Result<()> {
        if var.len() != self.probs.len() {
            return Err(Error::InvalidParameter(format!(
                "variable has {} outcomes, space has {}",
                var.len(),
                self.probs.len()
            )));
        }
        if var.iter().any(|v| *v < Rational::zero()) {
            return Err(Error::InvalidParameter("variables must be non-negative".into()));
        }
        Ok(())
    }
}

/// `U ⪰_SC V`: `Σ_u P[u >= t] >= Σ_v P[v >= t]` for every `t > 0`.
pub fn stochastically_covers(
    space: &OutcomeSpace,
    u: &[Vec<Rational>],
    v: &[Vec<Rational>],
) -> Result<Dominance> {
    let mut w = Vec::new();
    for var in u {
        space.check(var)?;
        w.extend(space.probs.iter().zip(var).map(|(p, x)| (x.clone(), p.clone())));
    }
    for var in v {
        space.check(var)?;
        w.extend(space.probs.iter().zip(var).map(|(p, x)| (x.clone(), -p)));
    }
    Ok(sweep(w))
}
