//! Chatterjee's rank correlation ξₙ.
//!
//! The sample is sorted by X (ties in X are put in uniformly random order),
//! giving Y′₁, …, Y′ₙ. With rᵢ = #{j : Y′ⱼ ≤ Y′ᵢ} and lᵢ = #{j : Y′ⱼ ≥ Y′ᵢ},
//!
//! ```text
//! ξₙ = 1 − n Σᵢ₌₁ⁿ⁻¹ |rᵢ₊₁ − rᵢ| / (2 Σᵢ lᵢ (n − lᵢ))
//! ```
//!
//! Both sums are accumulated exactly in `u128`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Result, XiError};
use crate::model::Sample;
use crate::rng::rng_from_seed;

/// The X-sorted sample with its Y ranks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankData {
    /// Y values in X order.
    pub y_prime: Vec<f64>,
    /// `r[i] = #{j : y_prime[j] <= y_prime[i]}`.
    pub r: Vec<u64>,
    /// `l[i] = #{j : y_prime[j] >= y_prime[i]}`.
    pub l: Vec<u64>,
    /// Zero-based: position `k` of the sorted sample holds observation `perm[k]`.
    pub perm: Vec<usize>,
}

impl RankData {
    pub fn n(&self) -> usize {
        self.y_prime.len()
    }

    /// Builds ranks for Y values that are already in X order.
    pub fn from_ordered_y(y_prime: Vec<f64>) -> Self {
        let n = y_prime.len();
        let (r, l) = y_ranks(&y_prime);
        RankData { y_prime, r, l, perm: (0..n).collect() }
    }
}

/// Max-rank counts `(r, l)` in O(n log n).
fn y_ranks(y: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = y.len() as u64;
    y.iter()
        .map(|&v| {
            let le = sorted.partition_point(|&s| s <= v) as u64;
            let lt = sorted.partition_point(|&s| s < v) as u64;
            (le, n - lt)
        })
        .unzip()
}

/// Sorts the sample by X, breaking ties in X uniformly at random from `seed`.
pub fn reorder_by_x(sample: &Sample, seed: u64) -> RankData {
    let pairs = sample.pairs();
    let mut rng = rng_from_seed(seed);
    let keys: Vec<f64> = (0..pairs.len()).map(|_| rng.random()).collect();
    let mut perm: Vec<usize> = (0..pairs.len()).collect();
    perm.sort_by(|&a, &b| {
        pairs[a]
            .0
            .total_cmp(&pairs[b].0)
            .then(keys[a].total_cmp(&keys[b]))
            .then(a.cmp(&b))
    });
    let y_prime: Vec<f64> = perm.iter().map(|&k| pairs[k].1).collect();
    let (r, l) = y_ranks(&y_prime);
    RankData { y_prime, r, l, perm }
}

/// Exact numerator and denominator sums of ξₙ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct XiSums {
    pub n: u64,
    /// Σᵢ₌₁ⁿ⁻¹ |rᵢ₊₁ − rᵢ|
    pub numerator: u128,
    /// Σᵢ lᵢ (n − lᵢ)
    pub denominator: u128,
}

impl XiSums {
    pub fn xi(&self) -> Result<f64> {
        if self.denominator == 0 {
            return Err(XiError::AllYEqual);
        }
        let num = self.n as u128 * self.numerator;
        let den = 2 * self.denominator;
        Ok(1.0 - num as f64 / den as f64)
    }
}

pub fn xi_sums(rank_data: &RankData) -> XiSums {
    let n = rank_data.n() as u64;
    let numerator = rank_data.r.windows(2).map(|w| w[0].abs_diff(w[1]) as u128).sum();
    let denominator = rank_data.l.iter().map(|&l| l as u128 * (n - l) as u128).sum();
    XiSums { n, numerator, denominator }
}

/// ξₙ from ranked data. Fails with [`XiError::AllYEqual`] when every Y is equal.
pub fn xi_n(rank_data: &RankData) -> Result<f64> {
    xi_sums(rank_data).xi()
}

/// Convenience: rank with tie-break `seed`, then compute ξₙ.
pub fn xi(sample: &Sample, seed: u64) -> Result<f64> {
    xi_n(&reorder_by_x(sample, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(x: &[f64], y: &[f64]) -> Sample {
        Sample::from_columns(x, y).unwrap()
    }

    #[test]
    fn reorders_without_ties() {
        let rd = reorder_by_x(&sample(&[3.0, 1.0, 2.0], &[30.0, 10.0, 20.0]), 0);
        assert_eq!(rd.y_prime, vec![10.0, 20.0, 30.0]);
        assert_eq!(rd.r, vec![1, 2, 3]);
        assert_eq!(rd.l, vec![3, 2, 1]);
        assert_eq!(rd.perm, vec![1, 2, 0]);
    }

    #[test]
    fn ranks_with_y_ties() {
        let rd = reorder_by_x(&sample(&[1.0, 2.0, 3.0], &[4.0, 4.0, 9.0]), 0);
        assert_eq!(rd.r, vec![2, 2, 3]);
        assert_eq!(rd.l, vec![3, 3, 1]);
    }

    #[test]
    fn x_ties_are_broken_uniformly() {
        let s = sample(&[1.0, 1.0], &[5.0, 7.0]);
        let trials = 10_000;
        let first = (0..trials)
            .filter(|&seed| reorder_by_x(&s, seed).y_prime == vec![5.0, 7.0])
            .count();
        // Binomial(10⁴, ½): sd = 50, so ±2% is a 4-sigma band.
        let frac = first as f64 / trials as f64;
        assert!((frac - 0.5).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn monotone_small_cases() {
        let inc = reorder_by_x(&sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0);
        assert_eq!(xi_n(&inc).unwrap(), 0.25);
        let dec = reorder_by_x(&sample(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]), 0);
        assert!((xi_n(&dec).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn constant_y_is_undefined() {
        let rd = reorder_by_x(&sample(&[1.0, 2.0, 3.0], &[5.0; 3]), 0);
        assert!(matches!(xi_n(&rd), Err(XiError::AllYEqual)));
    }

    fn brute_sums(y: &[f64]) -> (u128, u128) {
        let n = y.len();
        let rank = |i: usize| (0..n).filter(|&j| y[j] <= y[i]).count() as i64;
        let num = (0..n - 1).map(|i| (rank(i + 1) - rank(i)).unsigned_abs() as u128).sum();
        let mut den = 0u128;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    den += (y[j] >= y[i] && y[k] < y[i]) as u128;
                }
            }
        }
        (num, den)
    }

    proptest! {
        #[test]
        fn sums_match_brute_force(y in prop::collection::vec(0u8..6, 2..40)) {
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let rd = RankData::from_ordered_y(y.clone());
            let sums = xi_sums(&rd);
            prop_assert_eq!((sums.numerator, sums.denominator), brute_sums(&y));
        }

        #[test]
        fn rank_invariants(y in prop::collection::vec(-3i32..3, 2..60)) {
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let rd = RankData::from_ordered_y(y.clone());
            let n = y.len() as u64;
            for i in 0..y.len() {
                let equal = y.iter().filter(|&&v| v == y[i]).count() as u64;
                prop_assert!(rd.r[i] >= 1 && rd.r[i] <= n);
                prop_assert!(rd.l[i] >= 1 && rd.l[i] <= n);
                prop_assert_eq!(rd.r[i] + rd.l[i], n + equal);
            }
            if let Ok(v) = xi_n(&rd) {
                prop_assert!(v <= 1.0);
            }
        }

        #[test]
        fn perm_sorts_x(x in prop::collection::vec(0u8..5, 2..50), seed: u64) {
            let xs: Vec<f64> = x.into_iter().map(f64::from).collect();
            let ys: Vec<f64> = (0..xs.len()).map(|i| i as f64).collect();
            let s = sample(&xs, &ys);
            let rd = reorder_by_x(&s, seed);
            prop_assert!(rd.perm.windows(2).all(|w| xs[w[0]] <= xs[w[1]]));
        }

        #[test]
        fn permutation_invariant_without_x_ties(
            y in prop::collection::vec(0u8..8, 3..40),
            seed_a: u64,
            seed_b: u64,
            rot in 0usize..40,
        ) {
            let n = y.len();
            let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let ys: Vec<f64> = y.into_iter().map(f64::from).collect();
            let mut pairs: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
            let a = xi(&Sample::new(pairs.clone()).unwrap(), seed_a);
            pairs.rotate_left(rot % n);
            pairs.reverse();
            let b = xi(&Sample::new(pairs).unwrap(), seed_b);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "one side failed"),
            }
        }
    }
}
