//! Monte Carlo experiments on the serial-dictatorship and tight-analysis
//! instance families, with exact reference values where they are available.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::allocator::{fair_envy_cycles_enumerate_with, fair_envy_cycles_sample_from, phase_one, UnenviedRule};
use crate::eating::preference_orders;
use crate::error::{Error, Result};
use crate::model::{paper_instance, Instance, InstanceParams};
use crate::rational::{format_rational, int, to_f64, Ratio, Rational};

const Z95: f64 = 1.959963984540054;

/// Leaf cap for the exact reference of the tight experiment.
pub const TIGHT_REFERENCE_LEAVES: usize = 20_000;

fn decimal<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&render(*x))
}

fn decimal_pair<S: Serializer>(x: &(f64, f64), s: S) -> std::result::Result<S::Ok, S::Error> {
    [render(x.0), render(x.1)].serialize(s)
}

/// Fixed six-decimal rendering used in JSON and CSV output.
pub fn render(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.6}")
    }
}

/// Empirical ex-ante ratio `E[v_i(X_i)] / E[v_i(X_j)]` with a normal
/// (delta-method) 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioEstimate {
    pub i: usize,
    pub j: usize,
    #[serde(with = "crate::rational::serde_rational")]
    pub mean_own: Rational,
    #[serde(with = "crate::rational::serde_rational")]
    pub mean_other: Rational,
    pub ratio: Ratio,
    #[serde(serialize_with = "decimal")]
    pub ratio_decimal: f64,
    /// Sample variance of `v_i(X_i) - R·v_i(X_j)` at the estimated `R`.
    #[serde(serialize_with = "decimal")]
    pub linearized_variance: f64,
    #[serde(serialize_with = "decimal_pair")]
    pub ci95: (f64, f64),
}

/// Empirical frequency with a Wilson 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProportionEstimate {
    pub successes: u64,
    pub trials: u64,
    #[serde(serialize_with = "decimal")]
    pub estimate: f64,
    #[serde(serialize_with = "decimal_pair")]
    pub ci95: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub instance: String,
    pub trials: u64,
    pub seed: u64,
    pub pairs: Vec<RatioEstimate>,
    /// Exact ex-ante ratio of the estimated pair, when computable.
    pub reference_ratio: Option<Ratio>,
    /// Limit value of the ratio as the instance grows, when known.
    #[serde(serialize_with = "optional_decimal")]
    pub asymptotic_ratio: Option<f64>,
    pub gift: Option<ProportionEstimate>,
    #[serde(serialize_with = "optional_rational")]
    pub reference_gift: Option<Rational>,
}

fn optional_decimal<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.map(render).serialize(s)
}

fn optional_rational<S: Serializer>(x: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.as_ref().map(format_rational).serialize(s)
}

/// Counts of `(v_i(X_i), v_i(X_j))` outcomes.
type Tally = BTreeMap<(Rational, Rational), u64>;

fn merge(mut a: Tally, b: Tally) -> Tally {
    for (k, c) in b {
        *a.entry(k).or_insert(0) += c;
    }
    a
}

fn ratio_estimate(i: usize, j: usize, tally: &Tally) -> RatioEstimate {
    let total: u64 = tally.values().sum();
    let n = Rational::from_integer(BigInt::from(total));
    let mut sums = [Rational::zero(), Rational::zero()];
    for ((x, y), c) in tally {
        let c = Rational::from_integer(BigInt::from(*c));
        sums[0] += x * &c;
        sums[1] += y * &c;
    }
    let mean_own = &sums[0] / &n;
    let mean_other = &sums[1] / &n;
    let ratio = Ratio::of(&mean_own, &mean_other);
    let (variance, ci95) = match ratio.finite() {
        Some(r) if total > 1 => {
            let mut s = Rational::zero();
            for ((x, y), c) in tally {
                let d = x - r * y;
                s += &d * &d * Rational::from_integer(BigInt::from(*c));
            }
            let variance = to_f64(&(s / Rational::from_integer(BigInt::from(total - 1))));
            let se = (variance / total as f64).sqrt() / to_f64(&mean_other);
            let center = to_f64(r);
            (variance, (center - Z95 * se, center + Z95 * se))
        }
        Some(r) => (0.0, (to_f64(r), to_f64(r))),
        None => (0.0, (f64::INFINITY, f64::INFINITY)),
    };
    RatioEstimate {
        i,
        j,
        ratio_decimal: ratio.to_f64(),
        mean_own,
        mean_other,
        ratio,
        linearized_variance: variance,
        ci95,
    }
}

/// Wilson score interval at 95%.
pub fn wilson(successes: u64, trials: u64) -> ProportionEstimate {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ProportionEstimate { successes, trials, estimate: p, ci95: ((center - half).max(0.0), (center + half).min(1.0)) }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn require_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    Ok(())
}

/// Exact `E[v_1(X_1)] / E[v_1(X_2)]` for random serial dictatorship on the
/// serial-dictatorship family, from the six relative orders of the two
/// special agents and the `(k+1)`-th remaining agent (who takes item a).
pub fn rsd_closed_form(n: usize, k: usize, eps: &Rational) -> Result<Rational> {
    if n < k + 3 {
        return Err(Error::InvalidParameter(format!("needs n >= k + 3, got n={n}, k={k}")));
    }
    let r = |x: usize| int(x as i64);
    // agent 1 ahead of the taker of a
    let first_before = r(k + 1) / r(n - 1);
    // taker of a, then agent 1, then agent 2
    let taker_first = Rational::new(BigInt::one(), BigInt::from(2)) * r(n - k - 2) / r(n - 1) * r(n - k - 1) / r(n);
    let own = (Rational::one() + eps) * first_before + &taker_first;
    let other = Rational::one() - &taker_first;
    Ok(own / other)
}

/// `(1 + p²) / (2 − (1 − p)²)`, the large-`n` ratio at `p = k/n`.
pub fn rsd_asymptotic(p: f64) -> f64 {
    (1.0 + p * p) / (2.0 - (1.0 - p) * (1.0 - p))
}

fn params_label(name: &str, n: usize, k: usize, eps: &Rational) -> String {
    format!("{name} n={n} k={k} eps={}", format_rational(eps))
}

/// Agents grouped by identical preference order; members of a group share
/// one cursor into their common list.
struct GroupedPrefs {
    orders: Vec<Vec<usize>>,
    group: Vec<usize>,
}

impl GroupedPrefs {
    fn new(instance: &Instance) -> Self {
        let mut orders: Vec<Vec<usize>> = Vec::new();
        let mut group = Vec::new();
        for order in preference_orders(instance) {
            let g = orders.iter().position(|o| *o == order).unwrap_or_else(|| {
                orders.push(order);
                orders.len() - 1
            });
            group.push(g);
        }
        GroupedPrefs { orders, group }
    }

    fn run(&self, order: &[usize], m: usize) -> Vec<usize> {
        let mut taken = vec![false; m];
        let mut cursor = vec![0usize; self.orders.len()];
        let mut items = vec![0usize; order.len()];
        for &a in order {
            let g = self.group[a];
            let list = &self.orders[g];
            while taken[list[cursor[g]]] {
                cursor[g] += 1;
            }
            let item = list[cursor[g]];
            taken[item] = true;
            items[a] = item;
        }
        items
    }
}

/// Random serial dictatorship on the serial-dictatorship family, estimating
/// agent 0's ex-ante ratio towards agent 1.
pub fn rsd_experiment(n: usize, k: usize, eps: Option<Rational>, trials: u64, seed: u64) -> Result<ExperimentResult> {
    require_trials(trials)?;
    let mut params = InstanceParams::default().n(n).k(k);
    if let Some(e) = eps.clone() {
        params = params.eps(e);
    }
    let instance = paper_instance("rsd-d1", &params)?;
    let eps = eps.unwrap_or_else(|| params.eps_or_default().expect("default"));
    let prefs = GroupedPrefs::new(&instance);
    let m = instance.m();
    let items: BTreeMap<(usize, usize), u64> = (0..trials)
        .into_par_iter()
        .fold(BTreeMap::new, |mut acc, t| {
            let mut rng = trial_rng(seed, t);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let got = prefs.run(&order, m);
            *acc.entry((got[0], got[1])).or_insert(0) += 1;
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (key, c) in b {
                *a.entry(key).or_insert(0) += c;
            }
            a
        });
    let mut tally = Tally::new();
    for ((g0, g1), c) in items {
        *tally.entry((instance.item_value(0, g0), instance.item_value(0, g1))).or_insert(0) += c;
    }
    Ok(ExperimentResult {
        experiment: "rsd".into(),
        instance: params_label("rsd-d1", n, k, &eps),
        trials,
        seed,
        pairs: vec![ratio_estimate(0, 1, &tally)],
        reference_ratio: Some(Ratio::Finite(rsd_closed_form(n, k, &eps)?)),
        asymptotic_ratio: Some(rsd_asymptotic(k as f64 / n as f64)),
        gift: None,
        reference_gift: None,
    })
}

/// The randomized envy-cycle procedure with the given unenvied-agent rule
/// on the tight-analysis family. Estimates agent 0's ex-ante ratio towards
/// the last agent and how often the last agent receives one of the `k`
/// extra items.
pub fn tight_experiment(
    n: usize,
    k: usize,
    eps: Option<Rational>,
    trials: u64,
    seed: u64,
    rule: UnenviedRule,
) -> Result<ExperimentResult> {
    require_trials(trials)?;
    if rule == UnenviedRule::UniformRandom && !(n > k && k > 1) {
        return Err(Error::InvalidParameter(format!("the uniform variant needs n > k > 1, got n={n}, k={k}")));
    }
    let mut params = InstanceParams::default().n(n).k(k);
    if let Some(e) = eps.clone() {
        params = params.eps(e);
    }
    let instance = paper_instance("tight-d", &params)?;
    let eps = eps.unwrap_or_else(|| params.eps_or_default().expect("default"));
    let first = phase_one(&instance)?;
    let last = n - 1;
    let extra = |bundle: &crate::itemset::ItemSet| bundle.iter().any(|g| g >= n);
    let (tally, hits) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let (a, _) = fair_envy_cycles_sample_from(&instance, &first, &mut rng, rule)?;
            let key = (instance.value(0, a.bundle(0)), instance.value(0, a.bundle(last)));
            Ok((key, extra(a.bundle(last))))
        })
        .try_fold(
            || (Tally::new(), 0u64),
            |(mut tally, hits), r: Result<((Rational, Rational), bool)>| {
                let (key, hit) = r?;
                *tally.entry(key).or_insert(0) += 1;
                Ok::<_, Error>((tally, hits + hit as u64))
            },
        )
        .try_reduce(|| (Tally::new(), 0u64), |a, b| Ok((merge(a.0, b.0), a.1 + b.1)))?;
    let (reference_ratio, reference_gift) =
        match fair_envy_cycles_enumerate_with(&instance, TIGHT_REFERENCE_LEAVES, rule) {
            Ok((dist, _)) => {
                let own = dist.expected_value(&instance, 0, 0);
                let other = dist.expected_value(&instance, 0, last);
                let gift: Rational = dist
                    .support()
                    .iter()
                    .filter(|(_, a)| extra(a.bundle(last)))
                    .map(|(p, _)| p.clone())
                    .sum();
                (Some(Ratio::of(&own, &other)), Some(gift))
            }
            Err(Error::EnumerationLimit { .. }) => (None, None),
            Err(e) => return Err(e),
        };
    Ok(ExperimentResult {
        experiment: "tight".into(),
        instance: params_label("tight-d", n, k, &eps),
        trials,
        seed,
        pairs: vec![ratio_estimate(0, last, &tally)],
        reference_ratio,
        asymptotic_ratio: None,
        gift: Some(wilson(hits, trials)),
        reference_gift,
    })
}

/// One CSV line per estimated pair, preceded by a header.
pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(
        "experiment,instance,trials,seed,i,j,ratio,ratio_decimal,ci_low,ci_high,reference_ratio,reference_decimal,gift_rate,gift_ci_low,gift_ci_high\n",
    );
    for p in &result.pairs {
        let reference = result.reference_ratio.as_ref();
        let gift = result.gift.as_ref();
        let cells = [
            result.experiment.clone(),
            result.instance.clone(),
            result.trials.to_string(),
            result.seed.to_string(),
            p.i.to_string(),
            p.j.to_string(),
            p.ratio.to_string(),
            render(p.ratio_decimal),
            render(p.ci95.0),
            render(p.ci95.1),
            reference.map(|r| r.to_string()).unwrap_or_default(),
            reference.map(|r| render(r.to_f64())).unwrap_or_default(),
            gift.map(|g| render(g.estimate)).unwrap_or_default(),
            gift.map(|g| render(g.ci95.0)).unwrap_or_default(),
            gift.map(|g| render(g.ci95.1)).unwrap_or_default(),
        ];
        out.push_str(&cells.map(|c| if c.contains(',') { format!("\"{c}\"") } else { c }).join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::rsd_enumerate;
    use crate::rational::frac;

    #[test]
    fn closed_form_matches_enumeration() {
        for (n, k) in [(5, 1), (6, 2), (6, 1), (7, 3)] {
            let eps = frac(1, 100);
            let inst = paper_instance("rsd-d1", &InstanceParams::default().n(n).k(k).eps(eps.clone())).unwrap();
            let d = rsd_enumerate(&inst).unwrap();
            let exact = d.expected_value(&inst, 0, 0) / d.expected_value(&inst, 0, 1);
            assert_eq!(exact, rsd_closed_form(n, k, &eps).unwrap(), "n={n} k={k}");
        }
    }

    #[test]
    fn asymptotic_minimum() {
        let best = (1..1000).map(|t| rsd_asymptotic(t as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
        assert!((best - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn small_rsd_run_brackets_the_exact_value() {
        let r = rsd_experiment(6, 2, Some(frac(1, 100)), 20_000, 5).unwrap();
        let (lo, hi) = r.pairs[0].ci95;
        let exact = r.reference_ratio.as_ref().unwrap().to_f64();
        assert!(lo - 0.01 <= exact && exact <= hi + 0.01, "{lo} {exact} {hi}");
    }

    #[test]
    fn deterministic_output() {
        let a = rsd_experiment(7, 2, None, 500, 9).unwrap();
        let b = rsd_experiment(7, 2, None, 500, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, rsd_experiment(7, 2, None, 500, 10).unwrap());
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(matches!(rsd_experiment(6, 2, None, 0, 1), Err(Error::InvalidParameter(_))));
        assert!(tight_experiment(4, 2, None, 0, 1, UnenviedRule::UniformRandom).is_err());
        assert!(tight_experiment(3, 1, None, 10, 1, UnenviedRule::UniformRandom).is_err());
    }

    #[test]
    fn tight_gift_rate() {
        let r = tight_experiment(3, 2, Some(frac(1, 1000)), 2_000, 3, UnenviedRule::UniformRandom).unwrap();
        assert_eq!(r.reference_gift, Some(frac(3, 4)));
        let g = r.gift.unwrap();
        assert!(g.ci95.0 - 0.02 < 0.75 && 0.75 < g.ci95.1 + 0.02, "{g:?}");
    }

    #[test]
    fn wilson_interval() {
        let w = wilson(50, 100);
        assert!((w.ci95.0 - 0.4038).abs() < 1e-3 && (w.ci95.1 - 0.5962).abs() < 1e-3);
        let edge = wilson(0, 10);
        assert_eq!(edge.ci95.0, 0.0);
    }

    #[test]
    fn csv_has_header_and_row() {
        let r = rsd_experiment(5, 1, None, 50, 1).unwrap();
        let csv = to_csv(&r);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("experiment,"));
    }
}
