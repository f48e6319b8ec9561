//! Named instance families used throughout the tests, benchmarks, and CLI.

use num_traits::{One, Zero};

use super::{Instance, Valuation, ValuationClass};
use crate::error::{Error, Result};
use crate::rational::{frac, int, Rational};

/// Names accepted by [`paper_instance`].
pub const CATALOG: &[(&str, &str)] = &[
    ("example-3.2", "n agents, 2n+1 items: apple, banana, celery, n-3 durians, n+1 eggplants (params: n >= 4, eps)"),
    ("example-c1", "2 agents, apple/banana/celery/durian; balanced lotteries cannot be EFX (params: eps)"),
    ("prop-4.4", "2 subadditive agents over 3 items; ex-ante/ex-post trade-off curve (params: beta, eps)"),
    ("prop-b1", "2 submodular agents over 3 items; no ex-ante alpha-EF + EFX beyond 2/3 (params: eps)"),
    ("prop-c1", "2 monotone agents over 3 items; no approximation at all (params: big_k)"),
    ("lemma-a2", "2 identical submodular agents; the balanced partition is only 1/(2-eps)-EFX (params: eps)"),
    ("tight-d", "n agents, n+k additive items; the 1/2 ex-ante factor is tight (params: n, k, eps)"),
    ("rsd-d1", "n agents, n items; random serial dictatorship ex-ante envy (params: n, k, eps)"),
];

/// Parameters for the instance families. Unset values fall back to
/// `eps = 1/100`, `beta = 1`, `big_k = 100`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstanceParams {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub eps: Option<Rational>,
    pub beta: Option<Rational>,
    pub big_k: Option<Rational>,
}

impl InstanceParams {
    pub fn eps(mut self, eps: Rational) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn beta(mut self, beta: Rational) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn big_k(mut self, k: Rational) -> Self {
        self.big_k = Some(k);
        self
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn eps_or_default(&self) -> Result<Rational> {
        let eps = self.eps.clone().unwrap_or_else(|| frac(1, 100));
        if eps <= Rational::zero() {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Ok(eps)
    }

    pub fn beta_or_default(&self) -> Result<Rational> {
        let beta = self.beta.clone().unwrap_or_else(Rational::one);
        if beta <= Rational::zero() || beta > Rational::one() {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
        }
        Ok(beta)
    }

    fn big_k_or_default(&self) -> Result<Rational> {
        let k = self.big_k.clone().unwrap_or_else(|| int(100));
        if k <= Rational::zero() {
            return Err(Error::InvalidParameter(format!("K must be positive, got {k}")));
        }
        Ok(k)
    }

    fn require_n(&self, family: &str) -> Result<usize> {
        self.n
            .ok_or_else(|| Error::InvalidParameter(format!("{family} needs the agent count n")))
    }

    fn require_k(&self, family: &str) -> Result<usize> {
        self.k
            .ok_or_else(|| Error::InvalidParameter(format!("{family} needs the parameter k")))
    }
}

/// Builds a named instance family.
pub fn paper_instance(name: &str, params: &InstanceParams) -> Result<Instance> {
    match name {
        "example-3.2" => example_durians(params),
        "example-c1" => example_apple_banana(params),
        "prop-4.4" => subadditive_tradeoff(params),
        "prop-b1" => submodular_tradeoff(params),
        "prop-c1" => monotone_hopeless(params),
        "lemma-a2" => partition_tightness(params),
        "tight-d" => tight_analysis(params),
        "rsd-d1" => serial_dictatorship(params),
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}

fn additive(rows: Vec<Vec<Rational>>) -> Result<Instance> {
    let m = rows[0].len();
    Instance::new(
        m,
        rows.into_iter().map(|values| Valuation::Additive { values }).collect(),
        ValuationClass::Additive,
    )
}

/// Table over items a, b, c given in the column order
/// `∅, a, b, c, ab, ac, bc, abc`.
fn table3(cols: [Rational; 8]) -> Valuation {
    const MASKS: [u64; 8] = [0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111];
    Valuation::table(3, MASKS.into_iter().zip(cols)).expect("3-item table")
}

fn example_durians(p: &InstanceParams) -> Result<Instance> {
    let n = p.require_n("example-3.2")?;
    if n < 4 {
        return Err(Error::InvalidParameter(format!("example-3.2 needs n >= 4, got {n}")));
    }
    let eps = p.eps_or_default()?;
    let e = |c: i64| &eps * int(c);
    let row = |apple: Rational, banana: Rational, celery: Rational, durian: Rational, egg: Rational| {
        let mut r = vec![apple, banana, celery];
        r.extend(std::iter::repeat_n(durian, n - 3));
        r.extend(std::iter::repeat_n(egg, n + 1));
        r
    };
    let mut rows = vec![
        row(int(10), e(3), e(2), int(0), e(2)),
        row(int(10), e(2), e(3), int(0), e(2)),
    ];
    for _ in 2..n {
        rows.push(row(int(10), int(8), int(0), int(9), int(3)));
    }
    additive(rows)
}

fn example_apple_banana(p: &InstanceParams) -> Result<Instance> {
    let eps = p.eps_or_default()?;
    let e = |c: i64| &eps * int(c);
    additive(vec![
        vec![int(10), e(3), e(2), int(0)],
        vec![int(10), e(2), e(3), int(0)],
    ])
}

fn subadditive_tradeoff(p: &InstanceParams) -> Result<Instance> {
    let beta = p.beta_or_default()?;
    let eps = p.eps_or_default()?;
    let one_eps = Rational::one() + &eps;
    let one_beta = Rational::one() + &beta;
    let two_beta = &beta * int(2);
    let v1 = table3([
        int(0),
        one_eps.clone(),
        beta.clone(),
        beta.clone(),
        one_eps.clone(),
        one_eps.clone(),
        two_beta.clone(),
        two_beta,
    ]);
    let v2 = table3([
        int(0),
        beta,
        one_eps.clone(),
        one_eps.clone(),
        one_beta.clone(),
        one_beta.clone(),
        one_eps,
        one_beta,
    ]);
    Instance::new(3, vec![v1, v2], ValuationClass::Subadditive)
}

fn submodular_tradeoff(p: &InstanceParams) -> Result<Instance> {
    let eps = p.eps_or_default()?;
    let half = frac(1, 2);
    let half_eps = &half + &eps;
    let v1 = table3([
        int(0),
        half_eps.clone(),
        half.clone(),
        half.clone(),
        int(1),
        half_eps.clone(),
        int(1),
        int(1),
    ]);
    let v2 = table3([
        int(0),
        half.clone(),
        half_eps.clone(),
        half,
        int(1),
        int(1),
        half_eps,
        int(1),
    ]);
    Instance::new(3, vec![v1, v2], ValuationClass::Submodular)
}

fn monotone_hopeless(p: &InstanceParams) -> Result<Instance> {
    let k = p.big_k_or_default()?;
    let v1 = table3([int(0), int(1), int(0), int(0), int(1), int(1), k.clone(), k.clone()]);
    let v2 = table3([int(0), int(0), int(1), int(0), int(1), k.clone(), int(1), k]);
    Instance::new(3, vec![v1, v2], ValuationClass::Monotone)
}

fn partition_tightness(p: &InstanceParams) -> Result<Instance> {
    let eps = p.eps_or_default()?;
    let two = int(2) - &eps;
    let three = int(3) - &eps;
    let v = table3([
        int(0),
        two.clone(),
        two.clone(),
        int(1),
        two,
        three.clone(),
        three.clone(),
        three,
    ]);
    Instance::new(3, vec![v.clone(), v], ValuationClass::Subadditive)
}

fn tight_analysis(p: &InstanceParams) -> Result<Instance> {
    let n = p.require_n("tight-d")?;
    let k = p.require_k("tight-d")?;
    if n < 2 || k < 1 {
        return Err(Error::InvalidParameter(format!("tight-d needs n >= 2 and k >= 1, got n={n}, k={k}")));
    }
    let eps = p.eps_or_default()?;
    // item j (0-based, j < n) is worth 1 + (n - j) eps to agents 0..n-1
    let common: Vec<Rational> = (0..n + k)
        .map(|j| if j < n { Rational::one() + &eps * int((n - j) as i64) } else { int(1) })
        .collect();
    let mut last = vec![int(1); n + k];
    last[n - 1] = Rational::one() + &eps;
    let mut rows = vec![common; n - 1];
    rows.push(last);
    additive(rows)
}

fn serial_dictatorship(p: &InstanceParams) -> Result<Instance> {
    let n = p.require_n("rsd-d1")?;
    let k = p.require_k("rsd-d1")?;
    if n < k + 3 {
        return Err(Error::InvalidParameter(format!("rsd-d1 needs n >= k + 3, got n={n}, k={k}")));
    }
    let eps = p.eps_or_default()?;
    let one_eps = Rational::one() + &eps;
    let d = n - k - 2;
    // items: a, b, c_1..c_k, d_1..d_{n-k-2}
    let mut v1 = vec![one_eps.clone(), int(1)];
    v1.extend(std::iter::repeat_n(int(0), k + d));
    let mut v2 = vec![int(1), one_eps.clone()];
    v2.extend(std::iter::repeat_n(int(0), k + d));
    let mut rest = vec![int(1), int(0)];
    rest.extend(std::iter::repeat_n(one_eps, k));
    rest.extend(std::iter::repeat_n(eps, d));
    let mut rows = vec![v1, v2];
    rows.extend(std::iter::repeat_n(rest, n - 2));
    additive(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itemset::ItemSet;
    use crate::model::{check_submodular, ClassVerdict, ClassViolation};

    fn set(items: &[usize]) -> ItemSet {
        items.iter().copied().collect()
    }

    #[test]
    fn apple_banana_values() {
        let inst = paper_instance("example-c1", &InstanceParams::default()).unwrap();
        assert_eq!((inst.n(), inst.m()), (2, 4));
        let row: Vec<Rational> = (0..4).map(|g| inst.item_value(0, g)).collect();
        assert_eq!(row, vec![int(10), frac(3, 100), frac(2, 100), int(0)]);
    }

    #[test]
    fn tradeoff_table_entries() {
        let inst = paper_instance("prop-4.4", &InstanceParams::default().eps(frac(1, 10))).unwrap();
        assert_eq!(inst.value(0, &set(&[0])), frac(11, 10));
        assert_eq!(inst.value(0, &set(&[1, 2])), int(2));
        assert_eq!(inst.value(1, &set(&[0, 1, 2])), int(2));
        assert_eq!(inst.value(1, &set(&[1, 2])), frac(11, 10));
    }

    #[test]
    fn every_family_satisfies_its_declared_class() {
        let cases = [
            ("example-3.2", InstanceParams::default().n(5)),
            ("example-c1", InstanceParams::default()),
            ("prop-4.4", InstanceParams::default().eps(frac(1, 10))),
            ("prop-4.4", InstanceParams::default().beta(frac(7, 10)).eps(frac(1, 1000))),
            ("prop-b1", InstanceParams::default().eps(frac(1, 10))),
            ("prop-c1", InstanceParams::default().big_k(int(5))),
            ("lemma-a2", InstanceParams::default().eps(frac(1, 10))),
            ("tight-d", InstanceParams::default().n(5).k(2)),
            ("rsd-d1", InstanceParams::default().n(6).k(2)),
        ];
        for (name, params) in cases {
            let inst = paper_instance(name, &params).unwrap();
            assert_eq!(inst.verify_class().unwrap(), None, "{name}");
        }
    }

    #[test]
    fn tradeoff_table_is_not_submodular() {
        let inst = paper_instance("prop-4.4", &InstanceParams::default().eps(frac(1, 10))).unwrap();
        let verdict = check_submodular(inst.valuation(0), 3).unwrap();
        // v1(abc) - v1(ab) > v1(ac) - v1(a)
        assert_eq!(
            verdict,
            ClassVerdict::Violated(ClassViolation::NotSubmodular {
                smaller: set(&[0]),
                larger: set(&[0, 1]),
                item: 2
            })
        );
    }

    #[test]
    fn submodular_family_passes_submodularity() {
        let inst = paper_instance("prop-b1", &InstanceParams::default().eps(frac(1, 10))).unwrap();
        for i in 0..2 {
            assert!(check_submodular(inst.valuation(i), 3).unwrap().holds());
        }
    }

    #[test]
    fn dictatorship_family_shape() {
        let inst = paper_instance("rsd-d1", &InstanceParams::default().n(6).k(2)).unwrap();
        assert_eq!((inst.n(), inst.m()), (6, 6));
        // a, b, c1, c2, d1, d2
        let eps = frac(1, 100);
        let one_eps = int(1) + &eps;
        let expect = |agent: usize| -> Vec<Rational> {
            match agent {
                0 => vec![one_eps.clone(), int(1), int(0), int(0), int(0), int(0)],
                1 => vec![int(1), one_eps.clone(), int(0), int(0), int(0), int(0)],
                _ => vec![int(1), int(0), one_eps.clone(), one_eps.clone(), eps.clone(), eps.clone()],
            }
        };
        for i in 0..6 {
            let row: Vec<Rational> = (0..6).map(|g| inst.item_value(i, g)).collect();
            assert_eq!(row, expect(i));
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            paper_instance("example-3.2", &InstanceParams::default().n(3)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(paper_instance("nope", &InstanceParams::default()), Err(Error::UnknownInstance(_))));
        assert!(paper_instance("prop-4.4", &InstanceParams::default().eps(int(0))).is_err());
        assert!(paper_instance("tight-d", &InstanceParams::default().n(4)).is_err());
    }

    #[test]
    fn durian_example_layout() {
        let inst = paper_instance("example-3.2", &InstanceParams::default().n(4)).unwrap();
        assert_eq!(inst.m(), 9);
        assert_eq!(inst.item_value(2, 3), int(9));
        assert_eq!(inst.item_value(0, 8), frac(2, 100));
        assert_eq!(inst.item_value(3, 8), int(3));
    }
}
