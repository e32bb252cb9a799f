//! Population quantities behind the limiting law √n(ξₙ − ξ) → N(0, σ²).
//!
//! Conditioning on "X₁ = … = Xₖ" always means the common-X mixture: draw one
//! x from the X marginal, then the Y's i.i.d. from the conditional law at x.
//!
//! With that convention, and with Y₀, …, Y₄ sharing one x,
//!
//! ```text
//! H₁(y, y′) = P(y∧y′ < Y ≤ y∨y′) + P(Y₁∧Y₂ < y ≤ Y₁∨Y₂ | X₁ = X₂)
//! H₂(y)     = P(y < Y₁ ≤ Y₂) + P(Y₁ < y ≤ Y₂) + P(Y₁ < Y₂ ≤ y)      (Y₁, Y₂ independent draws of Y)
//! μ₁        = P(Y₁∧Y₂ < Y₃ ≤ Y₁∨Y₂ | X₁ = X₂)
//! μ₂        = P(Y₁ < Y₂ ≤ Y₃)
//! σ_AB      = Σₖ₌₋₁¹ E[A(Y₁,Y₂){B(Y₁₊ₖ,Y₂₊ₖ) − B(Y₃,Y₄)}] + Cov(A(Y₁,Y₂), B(Y₃,Y₄))
//! σ²        = (2μ₂)⁻² {σ₁² − 2σ₁₂ μ₁/μ₂ + σ₂² μ₁²/μ₂²}
//! ξ         = 1 − μ₁/(2μ₂)
//! ```
//!
//! H₂ is applied to a pair through its first coordinate. Its three
//! probabilities are taken under the Y marginal: h₂ reads one coordinate from
//! each of three different pairs, and different pairs carry independent X's.
//!
//! For a [`JointPmf`] everything is computed exactly; for a general
//! [`GenerativeModel`] by Monte Carlo ([`mc_theory`], [`general_vstat_moments`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XiError};
use crate::model::{GenerativeModel, JointPmf};
use crate::rng::{derive_named, derive_seed, rng_from_seed, XiRng};
use crate::vstat::{eval_checked, Pair, PairKernel};

/// Default limit on `|support_y|` for exact σ² computations.
pub const DEFAULT_SUPPORT_GUARD: usize = 30;

pub const MIN_OUTER: usize = 1_000;
pub const MIN_INNER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Standard errors of a Monte Carlo [`TheoryReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryErrors {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma12: f64,
    pub sigma_sq: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub method: Method,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma12: f64,
    pub sigma_sq: f64,
    pub xi: f64,
    /// ξ through the ratio of integrated variances (exact route only).
    pub xi_dss: Option<f64>,
    pub se: Option<TheoryErrors>,
    pub monte_carlo: Option<McSettings>,
}

/// Exact H-function tables of a PMF, indexed by positions in `support_y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HTables {
    pub support_y: Vec<f64>,
    /// `h1[a][b] = H₁(y_a, y_b)`.
    pub h1: Vec<Vec<f64>>,
    /// `h2[a] = H₂(y_a)`.
    pub h2: Vec<f64>,
    /// `pair_law[a][b] = Σₓ p(x) p(y_a | x) p(y_b | x)`.
    pub pair_law: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMoments {
    pub mu1: f64,
    pub mu2: f64,
    pub xi: f64,
    pub xi_dss: f64,
}

/// Weights `p(x)` and conditional rows `p(· | x)` for every x with positive mass.
fn conditionals(pmf: &JointPmf) -> Vec<(f64, Vec<f64>)> {
    let px = pmf.marginal_x();
    (0..px.len())
        .filter_map(|i| pmf.conditional_y(i).map(|w| (px[i], w)))
        .collect()
}

/// Law of (Y₁, Y₂) given a common X: `q(a, b) = Σₓ p(x) p(a | x) p(b | x)`.
pub fn conditional_pair_law(pmf: &JointPmf) -> Vec<Vec<f64>> {
    let k = pmf.support_y().len();
    let mut q = vec![vec![0.0; k]; k];
    for (px, w) in conditionals(pmf) {
        for a in 0..k {
            for b in 0..k {
                q[a][b] += px * w[a] * w[b];
            }
        }
    }
    q
}

/// `cdf[j] = P(Y ≤ y_j)` for a distribution on the sorted support.
fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// `P(y_lo < Y ≤ y_hi)` by index, for `lo ≤ hi`.
fn interval_mass(cdf: &[f64], lo: usize, hi: usize) -> f64 {
    if lo == hi {
        0.0
    } else {
        cdf[hi] - cdf[lo]
    }
}

/// `H₂(y_a)` under the law `p` of two independent draws.
fn h2_value(p: &[f64], cdf: &[f64], a: usize) -> f64 {
    let k = p.len();
    // P(y < Y₁ ≤ Y₂) + P(Y₁ < y ≤ Y₂) + P(Y₁ < Y₂ ≤ y)
    let mut total = 0.0;
    for u in 0..k {
        let below_u = if u == 0 { 0.0 } else { cdf[u - 1] };
        let at_least_u = 1.0 - below_u;
        if u > a {
            total += p[u] * at_least_u;
        }
        if u <= a {
            // Y₂ = u, Y₁ < u, u ≤ y
            total += p[u] * below_u;
        }
    }
    // P(Y₁ < y ≤ Y₂)
    let below_a = if a == 0 { 0.0 } else { cdf[a - 1] };
    total + below_a * (1.0 - below_a)
}

pub fn exact_h_tables(pmf: &JointPmf) -> HTables {
    let py = pmf.marginal_y();
    let cdf = cumulative(&py);
    let q = conditional_pair_law(pmf);
    let k = py.len();
    // G(a) = P(Y₁∧Y₂ < y_a ≤ Y₁∨Y₂ | X₁ = X₂)
    let g: Vec<f64> = (0..k)
        .map(|a| {
            let mut s = 0.0;
            for u in 0..k {
                for v in 0..k {
                    if u.min(v) < a && a <= u.max(v) {
                        s += q[u][v];
                    }
                }
            }
            s
        })
        .collect();
    let h1 = (0..k)
        .map(|a| (0..k).map(|b| interval_mass(&cdf, a.min(b), a.max(b)) + g[a]).collect())
        .collect();
    let h2 = (0..k).map(|a| h2_value(&py, &cdf, a)).collect();
    HTables { support_y: pmf.support_y().to_vec(), h1, h2, pair_law: q }
}

pub fn exact_moments(pmf: &JointPmf) -> Result<ExactMoments> {
    let py = pmf.marginal_y();
    let cdf = cumulative(&py);
    let q = conditional_pair_law(pmf);
    let k = py.len();
    let mut mu1 = 0.0;
    for u in 0..k {
        for v in 0..k {
            mu1 += q[u][v] * interval_mass(&cdf, u.min(v), u.max(v));
        }
    }
    // μ₂ = Σ_b p(b) P(Y < y_b) P(Y ≥ y_b)
    let mu2: f64 = (0..k)
        .map(|b| {
            let below = if b == 0 { 0.0 } else { cdf[b - 1] };
            py[b] * below * (1.0 - below)
        })
        .sum();
    if mu2 <= 0.0 {
        return Err(XiError::DegenerateY);
    }
    Ok(ExactMoments { mu1, mu2, xi: 1.0 - mu1 / (2.0 * mu2), xi_dss: dss_ratio(pmf) })
}

/// ∫ Var(E[1{Y ≥ y} | X]) dP(y) / ∫ Var(1{Y ≥ y}) dP(y), evaluated directly.
fn dss_ratio(pmf: &JointPmf) -> f64 {
    let py = pmf.marginal_y();
    let k = py.len();
    let survival = |p: &[f64], j: usize| p[j..].iter().sum::<f64>();
    let conds = conditionals(pmf);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..k {
        let s = survival(&py, j);
        let second_moment: f64 = conds.iter().map(|(px, w)| px * survival(w, j).powi(2)).sum();
        num += py[j] * (second_moment - s * s);
        den += py[j] * s * (1.0 - s);
    }
    num / den
}

/// Per-x ingredients of one σ_AB component: `(E[A], E[B], Σₖ E[A·Bₖ])`.
fn component_terms(w: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64, f64) {
    let k = w.len();
    let mut ea = 0.0;
    let mut eb = 0.0;
    let mut lag0 = 0.0;
    // Row and column averages: A(y, ·) and A(·, y) integrated against w.
    let mut a_row = vec![0.0; k];
    let mut a_col = vec![0.0; k];
    let mut b_row = vec![0.0; k];
    let mut b_col = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let wij = w[i] * w[j];
            ea += wij * a[i][j];
            eb += wij * b[i][j];
            lag0 += wij * a[i][j] * b[i][j];
            a_row[i] += w[j] * a[i][j];
            a_col[j] += w[i] * a[i][j];
            b_row[i] += w[j] * b[i][j];
            b_col[j] += w[i] * b[i][j];
        }
    }
    // k = +1: A(Y₁,Y₂) B(Y₂,Y₃); k = −1: A(Y₁,Y₂) B(Y₀,Y₁).
    let lag_plus: f64 = (0..k).map(|y| w[y] * a_col[y] * b_row[y]).sum();
    let lag_minus: f64 = (0..k).map(|y| w[y] * a_row[y] * b_col[y]).sum();
    (ea, eb, lag0 + lag_plus + lag_minus)
}

fn sigma_component(conds: &[(f64, Vec<f64>)], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let per_x: Vec<(f64, f64, f64, f64)> = conds
        .par_iter()
        .map(|(px, w)| {
            let (ea, eb, lags) = component_terms(w, a, b);
            (*px, ea, eb, lags)
        })
        .collect();
    let (mut lag_part, mut e_ab, mut e_a, mut e_b) = (0.0, 0.0, 0.0, 0.0);
    for (px, ea, eb, lags) in per_x {
        lag_part += px * (lags - 3.0 * ea * eb);
        e_ab += px * ea * eb;
        e_a += px * ea;
        e_b += px * eb;
    }
    lag_part + (e_ab - e_a * e_b)
}

/// Delta-method combination of the five ingredients.
pub fn assemble_sigma_sq(mu1: f64, mu2: f64, s11: f64, s22: f64, s12: f64) -> f64 {
    let inv = 1.0 / (2.0 * mu2).powi(2);
    let ratio = mu1 / mu2;
    inv * (s11 - 2.0 * s12 * ratio + s22 * ratio * ratio)
}

pub fn exact_sigma(pmf: &JointPmf) -> Result<TheoryReport> {
    exact_sigma_with_guard(pmf, DEFAULT_SUPPORT_GUARD)
}

pub fn exact_sigma_with_guard(pmf: &JointPmf, guard: usize) -> Result<TheoryReport> {
    let k = pmf.support_y().len();
    if k > guard {
        return Err(XiError::SupportTooLarge { size: k, limit: guard });
    }
    let moments = exact_moments(pmf)?;
    let tables = exact_h_tables(pmf);
    // H₂ lifted to a pair: reads the first coordinate.
    let h2_pair: Vec<Vec<f64>> = tables.h2.iter().map(|&v| vec![v; k]).collect();
    let conds = conditionals(pmf);
    let sigma1_sq = sigma_component(&conds, &tables.h1, &tables.h1);
    let sigma2_sq = sigma_component(&conds, &h2_pair, &h2_pair);
    let sigma12 = sigma_component(&conds, &tables.h1, &h2_pair);
    Ok(TheoryReport {
        method: Method::Exact,
        mu1: moments.mu1,
        mu2: moments.mu2,
        sigma1_sq,
        sigma2_sq,
        sigma12,
        sigma_sq: assemble_sigma_sq(moments.mu1, moments.mu2, sigma1_sq, sigma2_sq, sigma12),
        xi: moments.xi,
        xi_dss: Some(moments.xi_dss),
        se: None,
        monte_carlo: None,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Replicates per parallel task for the plain-MC means.
const MEAN_CHUNK: usize = 10_000;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Mean and standard error, centred on the first value so that constant
/// inputs give their value back exactly and a zero standard error.
fn mean_se(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let shift = values[0];
    let (mut s, mut ss) = (0.0, 0.0);
    for &v in values {
        let d = v - shift;
        s += d;
        ss += d * d;
    }
    let mean_d = s / n;
    let var = if values.len() > 1 { ((ss - s * mean_d) / (n - 1.0)).max(0.0) } else { 0.0 };
    Estimate { value: shift + mean_d, se: (var / n).sqrt() }
}

/// Accumulates one σ_AB component from per-replicate values.
///
/// Each replicate contributes `a = Â(Y₁,Y₂)`, `d = Σₖ (B̂ₖ − B̂(Y₃,Y₄))` and
/// `c = B̂(Y₃,Y₄)`. Since every pair shares the same law, `E d = 0`, so
/// `E[a·d] = E[(a − ā)·d]` up to O(1/N); the centred form has far smaller
/// variance. The sample covariance of `(a, c)` estimates the Cov term.
#[derive(Debug, Clone, Default)]
struct ComponentSamples {
    a: Vec<f64>,
    d: Vec<f64>,
    c: Vec<f64>,
}

impl ComponentSamples {
    fn push(&mut self, a: f64, d: f64, c: f64) {
        self.a.push(a);
        self.d.push(d);
        self.c.push(c);
    }

    /// Per-replicate influence values; their mean is the estimate.
    fn influence(&self) -> Vec<f64> {
        let n = self.a.len() as f64;
        let (a0, c0) = (self.a[0], self.c[0]);
        let da: f64 = self.a.iter().map(|v| v - a0).sum::<f64>() / n;
        let dc: f64 = self.c.iter().map(|v| v - c0).sum::<f64>() / n;
        let scale = n / (n - 1.0);
        (0..self.a.len())
            .map(|i| {
                let ca = (self.a[i] - a0) - da;
                ca * self.d[i] + scale * ca * ((self.c[i] - c0) - dc)
            })
            .collect()
    }

    fn estimate(&self) -> Estimate {
        mean_se(&self.influence())
    }
}

fn check_budget(n_outer: usize, n_inner: usize) -> Result<()> {
    if n_outer < MIN_OUTER || n_inner < MIN_INNER {
        return Err(XiError::InvalidArgument(format!(
            "Monte Carlo needs n_outer >= {MIN_OUTER} and n_inner >= {MIN_INNER}, got {n_outer} and {n_inner}"
        )));
    }
    Ok(())
}

fn draw_y(model: &dyn GenerativeModel, rng: &mut XiRng) -> f64 {
    model.sample_joint(rng).1
}

fn draw_pair(model: &dyn GenerativeModel, rng: &mut XiRng) -> Pair {
    let x = model.sample_x(rng);
    (model.sample_y_given_x(x, rng), model.sample_y_given_x(x, rng))
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// One-batch estimate of H₁(y, y′).
fn h1_hat(model: &dyn GenerativeModel, y: f64, y2: f64, n: usize, rng: &mut XiRng) -> f64 {
    let (lo, hi) = (y.min(y2), y.max(y2));
    let mut acc = 0.0;
    for _ in 0..n {
        let m = draw_y(model, rng);
        let (s, t) = draw_pair(model, rng);
        acc += ind(lo < m && m <= hi) + ind(s.min(t) < y && y <= s.max(t));
    }
    acc / n as f64
}

/// One-batch estimate of H₂(y).
fn h2_hat(model: &dyn GenerativeModel, y: f64, n: usize, rng: &mut XiRng) -> f64 {
    let mut acc = 0.0;
    for _ in 0..n {
        let a = draw_y(model, rng);
        let b = draw_y(model, rng);
        acc += ind(y < a && a <= b) + ind(a < y && y <= b) + ind(a < b && b <= y);
    }
    acc / n as f64
}

/// Plain-MC means of `f` over `total` draws, split into seeded chunks.
fn chunked_means<const K: usize, F>(total: usize, seed: u64, f: F) -> [Estimate; K]
where
    F: Fn(&mut XiRng) -> [f64; K] + Sync,
{
    let chunks = total.div_ceil(MEAN_CHUNK);
    let sums: Vec<([f64; K], [f64; K], usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, c as u64));
            let len = MEAN_CHUNK.min(total - c * MEAN_CHUNK);
            let mut s = [0.0; K];
            let mut ss = [0.0; K];
            for _ in 0..len {
                let v = f(&mut rng);
                for i in 0..K {
                    s[i] += v[i];
                    ss[i] += v[i] * v[i];
                }
            }
            (s, ss, len)
        })
        .collect();
    let mut s = [0.0; K];
    let mut ss = [0.0; K];
    for (cs, css, _) in &sums {
        for i in 0..K {
            s[i] += cs[i];
            ss[i] += css[i];
        }
    }
    let n = total as f64;
    std::array::from_fn(|i| {
        let mean = s[i] / n;
        let var = ((ss[i] - s[i] * mean) / (n - 1.0)).max(0.0);
        Estimate { value: mean, se: (var / n).sqrt() }
    })
}

/// Share of the six orderings (p, q, r) of `a, b, c` with p < q ≤ r.
fn ordered_share(a: f64, b: f64, c: f64) -> f64 {
    let hits = ind(a < b && b <= c)
        + ind(a < c && c <= b)
        + ind(b < a && a <= c)
        + ind(b < c && c <= a)
        + ind(c < a && a <= b)
        + ind(c < b && b <= a);
    hits / 6.0
}

/// Monte Carlo estimates of μ₁ and μ₂ from `total` draws each. The μ₂
/// indicator is averaged over the orderings of its three i.i.d. arguments,
/// which keeps its mean and lowers its variance.
pub fn mc_mus(model: &dyn GenerativeModel, total: usize, seed: u64) -> (Estimate, Estimate) {
    let [mu1, mu2] = chunked_means(total, seed, |rng| {
        let (s, t) = draw_pair(model, rng);
        let m = draw_y(model, rng);
        let a = draw_y(model, rng);
        let b = draw_y(model, rng);
        let c = draw_y(model, rng);
        [ind(s.min(t) < m && m <= s.max(t)), ordered_share(a, b, c)]
    });
    (mu1, mu2)
}

/// Monte Carlo estimate of H₂(y) from `total` draws.
pub fn mc_h2(model: &dyn GenerativeModel, y: f64, total: usize, seed: u64) -> Estimate {
    let [h] = chunked_means(total, seed, |rng| [h2_hat(model, y, 1, rng)]);
    h
}

/// Monte Carlo version of [`exact_sigma`] for any [`GenerativeModel`].
///
/// μ₁ and μ₂ come from `n_outer · n_inner` plain draws each. Every σ term is
/// averaged over `n_outer` replicates of (x, Y₀..Y₄); each H-value inside a
/// product is estimated from its own batch of `n_inner` draws, so products of
/// estimates are unbiased.
pub fn mc_theory(
    model: &dyn GenerativeModel,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<TheoryReport> {
    check_budget(n_outer, n_inner)?;
    let (mu1, mu2) = mc_mus(model, n_outer * n_inner, derive_named(seed, "mu"));
    if mu2.value <= 3.0 * mu2.se {
        return Err(XiError::DegenerateY);
    }
    let sigma_seed = derive_named(seed, "sigma");
    let reps: Vec<[(f64, f64, f64); 3]> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(sigma_seed, i as u64));
            let x = model.sample_x(&mut rng);
            let y: [f64; 5] = std::array::from_fn(|_| model.sample_y_given_x(x, &mut rng));
            let n = n_inner;
            let rng = &mut rng;
            // H₁ at (Y₁,Y₂) twice, (Y₀,Y₁), (Y₂,Y₃), (Y₃,Y₄).
            let a1 = h1_hat(model, y[1], y[2], n, rng);
            let a1b = h1_hat(model, y[1], y[2], n, rng);
            let b1m = h1_hat(model, y[0], y[1], n, rng);
            let b1p = h1_hat(model, y[2], y[3], n, rng);
            let c1 = h1_hat(model, y[3], y[4], n, rng);
            // H₂ at Y₁ twice, Y₀, Y₂, Y₃.
            let e1 = h2_hat(model, y[1], n, rng);
            let e1b = h2_hat(model, y[1], n, rng);
            let e0 = h2_hat(model, y[0], n, rng);
            let e2 = h2_hat(model, y[2], n, rng);
            let e3 = h2_hat(model, y[3], n, rng);
            [
                (a1, (b1m - c1) + (a1b - c1) + (b1p - c1), c1),
                (e1, (e0 - e3) + (e1b - e3) + (e2 - e3), e3),
                (a1, (e0 - e3) + (e1 - e3) + (e2 - e3), e3),
            ]
        })
        .collect();
    let mut comps: [ComponentSamples; 3] = Default::default();
    for rep in &reps {
        for (comp, &(a, d, c)) in comps.iter_mut().zip(rep) {
            comp.push(a, d, c);
        }
    }
    let [s11, s22, s12] = [&comps[0], &comps[1], &comps[2]].map(|c| c.estimate());
    let (m1, m2) = (mu1.value, mu2.value);
    let inv = 1.0 / (2.0 * m2).powi(2);
    let ratio = m1 / m2;
    let psi: Vec<f64> = {
        let i11 = comps[0].influence();
        let i22 = comps[1].influence();
        let i12 = comps[2].influence();
        (0..n_outer)
            .map(|k| inv * (i11[k] - 2.0 * ratio * i12[k] + ratio * ratio * i22[k]))
            .collect()
    };
    let sigma_sq = mean_se(&psi);
    let xi_se = ((mu1.se / (2.0 * m2)).powi(2) + (m1 * mu2.se / (2.0 * m2 * m2)).powi(2)).sqrt();
    Ok(TheoryReport {
        method: Method::MonteCarlo,
        mu1: m1,
        mu2: m2,
        sigma1_sq: s11.value,
        sigma2_sq: s22.value,
        sigma12: s12.value,
        sigma_sq: assemble_sigma_sq(m1, m2, s11.value, s22.value, s12.value),
        xi: 1.0 - m1 / (2.0 * m2),
        xi_dss: None,
        se: Some(TheoryErrors {
            mu1: mu1.se,
            mu2: mu2.se,
            sigma1_sq: s11.se,
            sigma2_sq: s22.se,
            sigma12: s12.se,
            sigma_sq: sigma_sq.se,
            xi: xi_se,
        }),
        monte_carlo: Some(McSettings { n_outer, n_inner, seed }),
    })
}

/// Limiting mean and variance of a V-statistic over consecutive pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VStatMoments {
    pub arity: usize,
    pub mu_h: f64,
    pub mu_h_se: f64,
    pub sigma_h_sq: f64,
    pub sigma_h_sq_se: f64,
    pub monte_carlo: McSettings,
}

pub const MAX_MC_ARITY: usize = 4;

/// One-batch estimate of H(y, y′) = Σⱼ hⱼ(y, y′): the other r − 1 arguments
/// are fresh pairs, each drawn with its own common x.
fn kernel_projection_hat(
    kernel: &dyn PairKernel,
    model: &dyn GenerativeModel,
    point: Pair,
    n: usize,
    rng: &mut XiRng,
) -> f64 {
    let r = kernel.arity();
    let mut others: Vec<Pair> = vec![(0.0, 0.0); r - 1];
    let mut args: Vec<Pair> = vec![(0.0, 0.0); r];
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        for o in others.iter_mut() {
            *o = draw_pair(model, rng);
        }
        let mut total = 0.0;
        for j in 0..r {
            let mut rest = others.iter();
            for (slot, arg) in args.iter_mut().enumerate() {
                *arg = if slot == j { point } else { *rest.next().unwrap() };
            }
            total += eval_checked(kernel, &args);
        }
        values.push(total);
    }
    mean_se(&values).value
}

/// All orderings of `0..r`.
fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out
}

/// μ_h and σ_h² for an arbitrary bounded kernel, by Monte Carlo.
///
/// μ_h averages the kernel over `n_outer · n_inner` tuples of independent
/// pairs, each tuple evaluated in every slot order (the pairs are i.i.d., so
/// this keeps the mean and lowers the variance). σ_h² follows the replicate
/// scheme of [`mc_theory`].
pub fn general_vstat_moments(
    kernel: &dyn PairKernel,
    model: &dyn GenerativeModel,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<VStatMoments> {
    let r = kernel.arity();
    if r == 0 {
        return Err(XiError::InvalidArgument("kernel arity must be at least 1".into()));
    }
    if r > MAX_MC_ARITY {
        return Err(XiError::ArityGuard(r));
    }
    check_budget(n_outer, n_inner)?;

    let total = n_outer * n_inner;
    let perms = permutations(r);
    let mu_seed = derive_named(seed, "mu_h");
    let chunk_means: Vec<Vec<f64>> = (0..total.div_ceil(MEAN_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(mu_seed, c as u64));
            let len = MEAN_CHUNK.min(total - c * MEAN_CHUNK);
            let mut draws = vec![(0.0, 0.0); r];
            let mut args = vec![(0.0, 0.0); r];
            (0..len)
                .map(|_| {
                    for d in draws.iter_mut() {
                        *d = draw_pair(model, &mut rng);
                    }
                    // Average over slot assignments, shifted so constants stay exact.
                    let mut first = None;
                    let mut acc = 0.0;
                    for perm in &perms {
                        for (arg, &p) in args.iter_mut().zip(perm) {
                            *arg = draws[p];
                        }
                        let v = eval_checked(kernel, &args);
                        let f = *first.get_or_insert(v);
                        acc += v - f;
                    }
                    first.unwrap_or(0.0) + acc / perms.len() as f64
                })
                .collect()
        })
        .collect();
    let mu = mean_se(&chunk_means.concat());

    let sigma_seed = derive_named(seed, "sigma_h");
    let reps: Vec<(f64, f64, f64)> = (0..n_outer)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(sigma_seed, i as u64));
            let x = model.sample_x(&mut rng);
            let y: [f64; 5] = std::array::from_fn(|_| model.sample_y_given_x(x, &mut rng));
            let mut h = |p: Pair| kernel_projection_hat(kernel, model, p, n_inner, &mut rng);
            let a = h((y[1], y[2]));
            let ab = h((y[1], y[2]));
            let bm = h((y[0], y[1]));
            let bp = h((y[2], y[3]));
            let c = h((y[3], y[4]));
            (a, (bm - c) + (ab - c) + (bp - c), c)
        })
        .collect();
    let mut comp = ComponentSamples::default();
    for &(a, d, c) in &reps {
        comp.push(a, d, c);
    }
    let sigma = comp.estimate();
    Ok(VStatMoments {
        arity: r,
        mu_h: mu.value,
        mu_h_se: mu.se,
        sigma_h_sq: sigma.value,
        sigma_h_sq_se: sigma.se,
        monte_carlo: McSettings { n_outer, n_inner, seed },
    })
}

/// Chooses the theory route for a model: exact when a PMF is available,
/// Monte Carlo otherwise.
pub fn theory_for(
    model: &crate::model::Model,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<TheoryReport> {
    match model.pmf() {
        Some(pmf) => exact_sigma(pmf),
        None => mc_theory(model, n_outer, n_inner, seed),
    }
}
