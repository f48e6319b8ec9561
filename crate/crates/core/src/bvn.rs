//! Decomposition of a fractional one-item-per-agent assignment into an
//! exact lottery over matchings.

use num_traits::{One, Zero};

use crate::eating::FractionalAllocation;
use crate::error::{Error, Result};
use crate::fairness::AllocationDistribution;
use crate::itemset::ItemSet;
use crate::model::Allocation;
use crate::rational::Rational;

/// Lottery over injective agent → item maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingLottery {
    entries: Vec<(Rational, Vec<usize>)>,
    m: usize,
}

impl MatchingLottery {
    pub fn entries(&self) -> &[(Rational, Vec<usize>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Σ_k p^k X^k` as an `n × m` matrix.
    pub fn reconstruct(&self) -> Vec<Vec<Rational>> {
        let n = self.entries.first().map_or(0, |(_, x)| x.len());
        let mut z = vec![vec![Rational::zero(); self.m]; n];
        for (p, x) in &self.entries {
            for (i, &g) in x.iter().enumerate() {
                z[i][g] += p;
            }
        }
        z
    }

    /// Partial allocations with one item per agent.
    pub fn to_distribution(&self) -> AllocationDistribution {
        AllocationDistribution::new(self.entries.iter().map(|(p, x)| {
            let bundles = x.iter().map(|&g| ItemSet::singleton(g)).collect();
            (p.clone(), Allocation::from_bundles(bundles, self.m).expect("matching is injective"))
        }))
        .expect("matching lottery is a distribution")
    }
}

/// Kuhn's augmenting paths over the positive entries of a square matrix,
/// rows and columns explored in index order.
fn perfect_matching(support: &[Vec<usize>], size: usize) -> Option<Vec<usize>> {
    fn augment(r: usize, support: &[Vec<usize>], seen: &mut [bool], col_owner: &mut [Option<usize>]) -> bool {
        for &c in &support[r] {
            if seen[c] {
                continue;
            }
            seen[c] = true;
            if col_owner[c].is_none_or(|r2| augment(r2, support, seen, col_owner)) {
                col_owner[c] = Some(r);
                return true;
            }
        }
        false
    }
    let mut col_owner = vec![None; size];
    for r in 0..size {
        let mut seen = vec![false; size];
        if !augment(r, support, &mut seen, &mut col_owner) {
            return None;
        }
    }
    let mut row_match = vec![0; size];
    for (c, r) in col_owner.iter().enumerate() {
        row_match[r.expect("perfect")] = c;
    }
    Some(row_match)
}

/// Peels perfect matchings off `Z` (rows summing to 1, columns to at most 1).
/// Column slack is carried by internal dummy rows that never appear in the
/// output. Identical agent matchings are merged.
pub fn bvn_decompose(z: &FractionalAllocation) -> Result<MatchingLottery> {
    let (n, m) = (z.n(), z.m());
    if n == 0 || n > m {
        return Err(Error::InvalidMatrix(format!("need 1 <= n <= m, got {n} x {m}")));
    }
    for i in 0..n {
        if !z.row_sum(i).is_one() {
            return Err(Error::InvalidMatrix(format!("row {i} sums to {}", z.row_sum(i))));
        }
    }
    let slack: Vec<Rational> = (0..m).map(|j| Rational::one() - z.column_sum(j)).collect();
    if let Some(j) = slack.iter().position(|s| *s < Rational::zero()) {
        return Err(Error::InvalidMatrix(format!("column {j} sums to more than 1")));
    }

    let mut a: Vec<Vec<Rational>> = z.rows().to_vec();
    // northwest fill of the slack into m - n dummy rows
    let mut dummy = vec![vec![Rational::zero(); m]; m - n];
    let (mut r, mut room) = (0, Rational::one());
    for (j, s) in slack.iter().enumerate() {
        let mut left = s.clone();
        while !left.is_zero() {
            let take = if left < room { left.clone() } else { room.clone() };
            dummy[r][j] += &take;
            left -= &take;
            room -= &take;
            if room.is_zero() && r + 1 < m - n {
                r += 1;
                room = Rational::one();
            }
        }
    }
    a.extend(dummy);

    let mut entries: Vec<(Rational, Vec<usize>)> = Vec::new();
    let mut mass = Rational::zero();
    while mass < Rational::one() {
        let support: Vec<Vec<usize>> = a
            .iter()
            .map(|row| (0..m).filter(|&j| !row[j].is_zero()).collect())
            .collect();
        let matching = perfect_matching(&support, m)
            .ok_or_else(|| Error::Invariant("no perfect matching on a doubly stochastic support".into()))?;
        let theta = matching
            .iter()
            .enumerate()
            .map(|(r, &c)| a[r][c].clone())
            .min()
            .expect("non-empty");
        for (r, &c) in matching.iter().enumerate() {
            a[r][c] -= &theta;
        }
        mass += &theta;
        let agents = matching[..n].to_vec();
        match entries.iter_mut().find(|(_, x)| *x == agents) {
            Some((p, _)) => *p += theta,
            None => entries.push((theta, agents)),
        }
    }
    let lottery = MatchingLottery { entries, m };
    if lottery.reconstruct() != z.rows() {
        return Err(Error::Invariant("decomposition does not reconstruct the matrix".into()));
    }
    Ok(lottery)
}

/// Checks that every matching gives each agent one item, never uses a
/// column with zero mass and always uses every column with full mass.
pub fn check_matching_properties(z: &FractionalAllocation, lottery: &MatchingLottery) -> Result<()> {
    for (k, (_, x)) in lottery.entries().iter().enumerate() {
        if x.len() != z.n() {
            return Err(Error::Invariant(format!("matching {k} covers {} of {} agents", x.len(), z.n())));
        }
        let used: ItemSet = x.iter().copied().collect();
        if used.len() != x.len() {
            return Err(Error::Invariant(format!("matching {k} assigns an item twice")));
        }
        for j in 0..z.m() {
            let col = z.column_sum(j);
            if col.is_zero() && used.contains(j) {
                return Err(Error::Invariant(format!("matching {k} uses uneaten item {j}")));
            }
            if col.is_one() && !used.contains(j) {
                return Err(Error::Invariant(format!("matching {k} skips fully eaten item {j}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eating::one_step_ps;
    use crate::model::{paper_instance, InstanceParams};
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    fn matrix(rows: Vec<Vec<Rational>>) -> FractionalAllocation {
        FractionalAllocation::new(rows).unwrap()
    }

    #[test]
    fn apple_banana_matrix() {
        let inst = paper_instance("example-c1", &InstanceParams::default()).unwrap();
        let (z, _) = one_step_ps(&inst).unwrap();
        let l = bvn_decompose(&z).unwrap();
        let mut got = l.entries().to_vec();
        got.sort_by(|a, b| a.1.cmp(&b.1));
        assert_eq!(got, vec![(frac(1, 2), vec![0, 2]), (frac(1, 2), vec![1, 0])]);
        check_matching_properties(&z, &l).unwrap();
    }

    #[test]
    fn integral_matrix_single_entry() {
        let z = matrix(vec![vec![int(0), int(1), int(0)], vec![int(1), int(0), int(0)]]);
        let l = bvn_decompose(&z).unwrap();
        assert_eq!(l.entries(), &[(int(1), vec![1, 0])]);
    }

    #[test]
    fn copy_matrix_of_the_balanced_lottery() {
        let h = frac(1, 2);
        let o = int(0);
        // copies (1,1), (2,1), (1,2), (2,2) over a, b, c, d
        let z = matrix(vec![
            vec![h.clone(), h.clone(), o.clone(), o.clone()],
            vec![h.clone(), o.clone(), h.clone(), o.clone()],
            vec![o.clone(), h.clone(), o.clone(), h.clone()],
            vec![o.clone(), o.clone(), h.clone(), h.clone()],
        ]);
        let l = bvn_decompose(&z).unwrap();
        assert_eq!(l.len(), 2);
        assert!(l.entries().iter().all(|(p, _)| *p == h));
    }

    #[test]
    fn rejects_bad_rows() {
        let z = matrix(vec![vec![frac(1, 2), int(0)]]);
        assert!(matches!(bvn_decompose(&z), Err(Error::InvalidMatrix(_))));
        let over = matrix(vec![vec![int(1), int(0), int(0)], vec![int(1), int(0), int(0)]]);
        assert!(matches!(bvn_decompose(&over), Err(Error::InvalidMatrix(_))));
    }

    // random row-stochastic, column-substochastic matrices built as mixtures
    // of injective maps
    proptest! {
        #[test]
        fn reconstructs_mixtures(
            n in 1usize..4,
            extra in 0usize..3,
            maps in proptest::collection::vec((1i64..6, proptest::collection::vec(any::<u16>(), 4)), 1..5),
        ) {
            let m = n + extra;
            let total: i64 = maps.iter().map(|(w, _)| w).sum();
            let mut rows = vec![vec![int(0); m]; n];
            for (w, seeds) in &maps {
                let mut items: Vec<usize> = (0..m).collect();
                for i in 0..n {
                    let k = i + seeds[i] as usize % (m - i);
                    items.swap(i, k);
                    rows[i][items[i]] += frac(*w, total);
                }
            }
            let z = matrix(rows);
            let l = bvn_decompose(&z).unwrap();
            prop_assert_eq!(l.reconstruct(), z.rows().to_vec());
            prop_assert!(l.len() <= z.nonzeros());
            check_matching_properties(&z, &l).unwrap();
        }
    }
}
