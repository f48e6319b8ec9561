//! Randomized envy-cycle allocation of indivisible items with exact
//! verification of ex-ante and ex-post fairness.
//!
//! Every value and probability is an exact [`Rational`]. The main entry
//! points are [`allocator::fair_envy_cycles_enumerate`], which expands every
//! random branch of the allocation procedure into an [`ExecutionTree`], and
//! [`fairness::expost_report`], which evaluates a distribution of
//! allocations.

pub mod allocator;
pub mod bvn;
pub mod eating;
pub mod envy;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod io;
pub mod itemset;
pub mod linalg;
pub mod model;
pub mod rational;
pub mod twoagents;

pub use allocator::{ExecutionNode, ExecutionTree, RunLog, Step, UnenviedRule};
pub use bvn::MatchingLottery;
pub use eating::{EatingTrace, FractionalAllocation};
pub use envy::{CycleLottery, EnvyGraph};
pub use error::{Error, Result};
pub use fairness::{AllocationDistribution, FairnessReport, FiniteRandomVariable, OutcomeSpace};
pub use itemset::ItemSet;
pub use model::{pad_with_dummies, paper_instance, Allocation, Instance, InstanceParams, Valuation, ValuationClass};
pub use rational::{Ratio, Rational};
