use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::rational::Rational;

/// Draws an index with the given exact probabilities. A uniform point of
/// `[0, 1)` is revealed 64 bits at a time until the dyadic interval that
/// contains it falls inside a single cumulative bucket, so the result is
/// exactly distributed.
pub fn sample_index<R: RngCore + ?Sized>(rng: &mut R, probs: &[Rational]) -> usize {
    assert!(!probs.is_empty(), "cannot sample from an empty distribution");
    if probs.len() == 1 {
        return 0;
    }
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = Rational::zero();
    for p in probs {
        acc += p;
        cumulative.push(acc.clone());
    }
    debug_assert!(acc.is_one());
    let mut lo = BigInt::zero();
    let mut scale = BigInt::one();
    loop {
        lo = (lo << 64u32) + BigInt::from(rng.next_u64());
        scale <<= 64u32;
        let low = Rational::new(lo.clone(), scale.clone());
        let high = Rational::new(&lo + 1, scale.clone());
        let s = cumulative.iter().position(|c| low < *c).unwrap_or(probs.len() - 1);
        if high <= cumulative[s] {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let probs = vec![frac(1, 3), frac(0, 1), frac(2, 3)];
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[sample_index(&mut rng, &probs)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn reproducible() {
        let probs = vec![frac(1, 7), frac(6, 7)];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_index(&mut rng, &probs)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }
}
