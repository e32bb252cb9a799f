//! V-statistics over the consecutive-pair sequence (Y′ᵢ, Y′ᵢ₊₁) and the two
//! kernels whose V-statistics rebuild the numerator and denominator of ξₙ.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, XiError};
use crate::estimator::{xi_sums, RankData};

pub type Pair = (f64, f64);

/// Largest number of summands the generic enumeration will attempt
/// (400³, i.e. n ≈ 400 for arity 3).
pub const DIRECT_TERM_LIMIT: u128 = 64_000_000;

/// Sample size up to which [`decompose_xi`] checks the identities by brute force.
pub const DECOMPOSE_DIRECT_LIMIT: usize = 400;

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// `sgn(s₂ − s₁)·{1(t₁ ≤ s₂) − 1(t₁ ≤ s₁)}`; ignores `t₂`.
pub fn kernel_h1(s: Pair, t: Pair) -> f64 {
    sgn(s.1 - s.0) * (ind(t.0 <= s.1) - ind(t.0 <= s.0))
}

/// `1(t ≥ s)·1(u < s)`.
pub fn kernel_h2(s: f64, t: f64, u: f64) -> f64 {
    ind(t >= s) * ind(u < s)
}

/// A bounded kernel on `arity` pairs.
pub trait PairKernel: Send + Sync {
    fn arity(&self) -> usize;

    /// Declared bound on `|eval|`.
    fn bound(&self) -> f64;

    fn eval(&self, args: &[Pair]) -> f64;

    /// Sum of `eval` over all `pairs.len()^arity` index tuples, for kernels
    /// that admit a faster route than enumeration.
    fn fast_sum(&self, _pairs: &[Pair]) -> Option<f64> {
        None
    }
}

/// Evaluates and, in debug builds, checks the declared bound.
pub fn eval_checked(kernel: &dyn PairKernel, args: &[Pair]) -> f64 {
    let v = kernel.eval(args);
    debug_assert!(
        v.abs() <= kernel.bound(),
        "kernel value {v} exceeds declared bound {}",
        kernel.bound()
    );
    v
}

fn sorted_firsts(pairs: &[Pair]) -> Vec<f64> {
    let mut t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    t.sort_by(f64::total_cmp);
    t
}

fn count_le(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&s| s <= v)
}

fn count_lt(sorted: &[f64], v: f64) -> usize {
    sorted.partition_point(|&s| s < v)
}

/// h₁ as a pair kernel of arity 2.
#[derive(Debug, Clone, Copy, Default)]
pub struct H1Kernel;

impl PairKernel for H1Kernel {
    fn arity(&self) -> usize {
        2
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn eval(&self, args: &[Pair]) -> f64 {
        kernel_h1(args[0], args[1])
    }

    fn fast_sum(&self, pairs: &[Pair]) -> Option<f64> {
        // h₁(s, t) = 1(min(s) < t₁ ≤ max(s)).
        let t = sorted_firsts(pairs);
        let total: usize = pairs
            .iter()
            .map(|&(a, b)| count_le(&t, a.max(b)) - count_le(&t, a.min(b)))
            .sum();
        Some(total as f64)
    }
}

/// h₂ lifted to pairs: reads the first coordinate of each of its three arguments.
#[derive(Debug, Clone, Copy, Default)]
pub struct H2Kernel;

impl PairKernel for H2Kernel {
    fn arity(&self) -> usize {
        3
    }

    fn bound(&self) -> f64 {
        1.0
    }

    fn eval(&self, args: &[Pair]) -> f64 {
        kernel_h2(args[0].0, args[1].0, args[2].0)
    }

    fn fast_sum(&self, pairs: &[Pair]) -> Option<f64> {
        let t = sorted_firsts(pairs);
        let m = t.len() as u128;
        let total: u128 = t
            .iter()
            .map(|&s| (m - count_lt(&t, s) as u128) * count_lt(&t, s) as u128)
            .sum();
        Some(total as f64)
    }
}

/// The constant kernel `h ≡ value`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantKernel {
    pub value: f64,
    pub arity: usize,
}

impl PairKernel for ConstantKernel {
    fn arity(&self) -> usize {
        self.arity
    }

    fn bound(&self) -> f64 {
        self.value.abs()
    }

    fn eval(&self, _args: &[Pair]) -> f64 {
        self.value
    }
}

/// A kernel backed by a closure.
pub struct FnKernel<F> {
    arity: usize,
    bound: f64,
    f: F,
}

impl<F> FnKernel<F>
where
    F: Fn(&[Pair]) -> f64 + Send + Sync,
{
    pub fn new(arity: usize, bound: f64, f: F) -> Self {
        FnKernel { arity, bound, f }
    }
}

impl<F> PairKernel for FnKernel<F>
where
    F: Fn(&[Pair]) -> f64 + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn eval(&self, args: &[Pair]) -> f64 {
        (self.f)(args)
    }
}

/// The `n − 1` consecutive pairs `(Y′ᵢ, Y′ᵢ₊₁)`.
pub fn consecutive_pairs(y_prime: &[f64]) -> Vec<Pair> {
    y_prime.windows(2).map(|w| (w[0], w[1])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VStatResult {
    pub value: f64,
    /// `(n − 1)^r`.
    pub normalization: f64,
    /// Number of kernel summands, `(n − 1)^r`.
    pub terms: u128,
    /// Raw sum of kernel evaluations.
    pub sum: f64,
}

/// Enumerates all index tuples; the first index is spread over threads and
/// partial sums are combined in index order.
pub fn direct_sum(kernel: &dyn PairKernel, pairs: &[Pair]) -> f64 {
    let r = kernel.arity();
    let m = pairs.len();
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; r];
            idx[0] = first;
            let mut args: Vec<Pair> = vec![pairs[first]; r];
            let mut acc = 0.0;
            loop {
                for (slot, &i) in args.iter_mut().zip(&idx).skip(1) {
                    *slot = pairs[i];
                }
                acc += eval_checked(kernel, &args);
                // Odometer over positions 1..r.
                let mut pos = r;
                loop {
                    pos -= 1;
                    if pos == 0 {
                        return acc;
                    }
                    idx[pos] += 1;
                    if idx[pos] < m {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        })
        .collect();
    partial.into_iter().sum()
}

/// V-statistic of `kernel` over the consecutive pairs of `rank_data`.
pub fn v_statistic(kernel: &dyn PairKernel, rank_data: &RankData) -> Result<VStatResult> {
    v_statistic_pairs(kernel, &consecutive_pairs(&rank_data.y_prime))
}

pub fn v_statistic_pairs(kernel: &dyn PairKernel, pairs: &[Pair]) -> Result<VStatResult> {
    let r = kernel.arity();
    let m = pairs.len();
    if r == 0 {
        return Err(XiError::InvalidArgument("kernel arity must be at least 1".into()));
    }
    if m == 0 {
        return Err(XiError::TooFewObservations(m + 1));
    }
    let terms = (m as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    let sum = match kernel.fast_sum(pairs) {
        Some(s) => s,
        None if r <= 2 || terms <= DIRECT_TERM_LIMIT => direct_sum(kernel, pairs),
        None => {
            let limit = (DIRECT_TERM_LIMIT as f64).powf(1.0 / r as f64).floor() as usize + 1;
            return Err(XiError::ArityTooLargeForN { arity: r, n: m + 1, limit });
        }
    };
    let normalization = (m as f64).powi(r as i32);
    Ok(VStatResult { value: sum / normalization, normalization, terms, sum })
}

/// Both sides of the kernel rewriting of ξₙ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub n: u64,
    /// Σᵢ₌₁ⁿ⁻¹ |rᵢ₊₁ − rᵢ|
    pub num_direct: u128,
    /// Σᵢ₌₁ⁿ⁻¹ Σⱼ₌₁ⁿ sgn(Y′ᵢ₊₁ − Y′ᵢ){1(Y′ⱼ ≤ Y′ᵢ₊₁) − 1(Y′ⱼ ≤ Y′ᵢ)}
    pub num_kernel: i128,
    /// The same sum with j restricted to 1..n−1 (the h₁ V-statistic sum).
    pub num_truncated: i128,
    /// Σᵢ lᵢ (n − lᵢ)
    pub den_direct: u128,
    /// Σᵢ,ⱼ,ₖ 1(Y′ⱼ ≥ Y′ᵢ) 1(Y′ₖ < Y′ᵢ)
    pub den_kernel: u128,
    pub xi_n: f64,
    pub v_h1: f64,
    pub v_h2: f64,
    /// |(1 − ξₙ) − V_h₁ / (2 V_h₂)|; `None` when V_h₂ = 0, which happens
    /// when Y′₁..Y′ₙ₋₁ are all equal but Y′ₙ differs.
    pub residual: Option<f64>,
    /// Whether the kernel sums were enumerated rather than counted.
    pub brute_force: bool,
}

impl Decomposition {
    pub fn identities_hold(&self) -> bool {
        self.num_kernel >= 0
            && self.num_kernel as u128 == self.num_direct
            && self.den_kernel == self.den_direct
    }
}

fn numerator_kernel_sum(y: &[f64], j_end: usize, brute: bool) -> i128 {
    let n = y.len();
    if brute {
        let mut acc = 0i128;
        for i in 0..n - 1 {
            for &t in &y[..j_end] {
                acc += kernel_h1((y[i], y[i + 1]), (t, 0.0)) as i128;
            }
        }
        acc
    } else {
        let mut t = y[..j_end].to_vec();
        t.sort_by(f64::total_cmp);
        (0..n - 1)
            .map(|i| {
                let (a, b) = (y[i], y[i + 1]);
                (count_le(&t, a.max(b)) - count_le(&t, a.min(b))) as i128
            })
            .sum()
    }
}

fn denominator_kernel_sum(y: &[f64], brute: bool) -> u128 {
    if brute {
        y.par_iter()
            .map(|&s| {
                let mut acc = 0u128;
                for &t in y {
                    if t < s {
                        continue;
                    }
                    for &u in y {
                        acc += kernel_h2(s, t, u) as u128;
                    }
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum()
    } else {
        let mut t = y.to_vec();
        t.sort_by(f64::total_cmp);
        let n = t.len() as u128;
        y.iter()
            .map(|&s| (n - count_lt(&t, s) as u128) * count_lt(&t, s) as u128)
            .sum()
    }
}

/// Recomputes ξₙ's numerator and denominator through the kernels h₁ and h₂
/// and reports how far 1 − ξₙ is from V_h₁ / (2 V_h₂).
///
/// For n ≤ [`DECOMPOSE_DIRECT_LIMIT`] the kernel sums are enumerated term by
/// term; above that they are counted from sorted values.
pub fn decompose_xi(rank_data: &RankData) -> Result<Decomposition> {
    let n = rank_data.n();
    let sums = xi_sums(rank_data);
    let xi_n = sums.xi()?;
    let y = &rank_data.y_prime;
    let brute = n <= DECOMPOSE_DIRECT_LIMIT;
    let pairs = consecutive_pairs(y);
    let v_h1 = v_statistic_pairs(&H1Kernel, &pairs)?.value;
    let v_h2 = v_statistic_pairs(&H2Kernel, &pairs)?.value;
    Ok(Decomposition {
        n: n as u64,
        num_direct: sums.numerator,
        num_kernel: numerator_kernel_sum(y, n, brute),
        num_truncated: numerator_kernel_sum(y, n - 1, brute),
        den_direct: sums.denominator,
        den_kernel: denominator_kernel_sum(y, brute),
        xi_n,
        v_h1,
        v_h2,
        residual: (v_h2 > 0.0).then(|| ((1.0 - xi_n) - v_h1 / (2.0 * v_h2)).abs()),
        brute_force: brute,
    })
}
