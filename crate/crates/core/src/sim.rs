//! CLT experiments: repeated sampling, standardization by the theoretical
//! variance, and a Kolmogorov–Smirnov distance to the standard normal.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, XiError};
use crate::estimator::{reorder_by_x, xi_n};
use crate::model::{sample, GenerativeModel, Model, ModelDescriptor};
use crate::rng::derive_seed;
use crate::theory::{theory_for, Method, TheoryReport};
use crate::vstat::{v_statistic, PairKernel};

pub const MIN_N: usize = 100;
pub const MIN_REPS: usize = 100;

/// Monte Carlo budget used when a model has no finite PMF.
pub const DEFAULT_MC_OUTER: usize = 10_000;
pub const DEFAULT_MC_INNER: usize = 1_000;

/// Largest number of histogram bins emitted.
const MAX_BINS: usize = 10_000;

/// Variances at or below this are treated as zero when standardizing.
const ZERO_SIGMA_SQ: f64 = 1e-12;

pub(crate) fn standard_normal() -> Normal {
    Normal::standard()
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sup-distance between the empirical CDF of `values / sigma` and Φ.
pub fn ks_normal(values: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(XiError::ZeroSigma);
    }
    if values.is_empty() {
        return Err(XiError::InvalidArgument("no values".into()));
    }
    let mut z: Vec<f64> = values.iter().map(|v| v / sigma).collect();
    z.sort_by(f64::total_cmp);
    let k = z.len() as f64;
    let phi = standard_normal();
    let d = z.iter().enumerate().fold(0.0f64, |d, (i, &v)| {
        let f = phi.cdf(v);
        d.max((i + 1) as f64 / k - f).max(f - i as f64 / k)
    });
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub rule: String,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Freedman–Diaconis bins: width 2·IQR·k^(−1/3).
    pub fn freedman_diaconis(values: &[f64]) -> Histogram {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
        let bins = if hi > lo && width > 0.0 {
            (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS)
        } else {
            1
        };
        let step = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * step).collect();
        edges.push(if hi > lo { hi } else { lo + 1.0 });
        let mut counts = vec![0u64; bins];
        for &v in &sorted {
            let idx = (((v - lo) / step) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        Histogram { rule: "freedman_diaconis".into(), edges, counts }
    }

    /// CSV with columns `bin_left,bin_right,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "count"])
            .map_err(|e| XiError::Io(e.into()))?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([
                self.edges[i].to_string(),
                self.edges[i + 1].to_string(),
                c.to_string(),
            ])
            .map_err(|e| XiError::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelDescriptor,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub theory_method: Method,
    pub xi_theory: f64,
    pub sigma_sq_theory: f64,
    /// √n(ξₙ − ξ) per replicate, in replicate order.
    pub draws: Vec<f64>,
    /// `None` when the theoretical variance is zero.
    pub ks_distance: Option<f64>,
    pub zero_sigma: bool,
    pub histogram: Histogram,
}

fn check_sizes(n: usize, reps: usize) -> Result<()> {
    if n < MIN_N || reps < MIN_REPS {
        return Err(XiError::InvalidArgument(format!(
            "need n >= {MIN_N} and reps >= {MIN_REPS}, got n = {n}, reps = {reps}"
        )));
    }
    Ok(())
}

/// ξₙ for `reps` independent samples of size `n`. Replicate `i` uses seeds
/// derived from `(seed, i)` only, so any chunk of replicates can be rerun alone.
pub fn simulate_xi(model: &dyn GenerativeModel, n: usize, reps: usize, seed: u64) -> Result<Vec<f64>> {
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let rep_seed = derive_seed(seed, i as u64);
            let s = sample(model, n, derive_seed(rep_seed, 0))?;
            xi_n(&reorder_by_x(&s, derive_seed(rep_seed, 1)))
        })
        .collect()
}

/// Runs the experiment with the theory taken from an existing report.
pub fn run_clt_experiment_with_theory(
    model: &Model,
    theory: &TheoryReport,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<SimResult> {
    check_sizes(n, reps)?;
    let root_n = (n as f64).sqrt();
    let draws: Vec<f64> = simulate_xi(model, n, reps, seed)?
        .into_iter()
        .map(|x| root_n * (x - theory.xi))
        .collect();
    let zero_sigma = theory.sigma_sq <= ZERO_SIGMA_SQ;
    let ks_distance = if zero_sigma { None } else { Some(ks_normal(&draws, theory.sigma_sq.sqrt())?) };
    Ok(SimResult {
        config: SimConfig { model: model.descriptor().clone(), n, reps, seed },
        theory_method: theory.method,
        xi_theory: theory.xi,
        sigma_sq_theory: theory.sigma_sq,
        histogram: Histogram::freedman_diaconis(&draws),
        draws,
        ks_distance,
        zero_sigma,
    })
}

/// Simulates √n(ξₙ − ξ) and compares it with N(0, σ²).
///
/// ξ and σ² are exact when the model has a PMF, otherwise estimated by Monte
/// Carlo with [`DEFAULT_MC_OUTER`] × [`DEFAULT_MC_INNER`].
pub fn run_clt_experiment(model: &Model, n: usize, reps: usize, seed: u64) -> Result<SimResult> {
    check_sizes(n, reps)?;
    let theory = theory_for(model, DEFAULT_MC_OUTER, DEFAULT_MC_INNER, derive_seed(seed, u64::MAX))?;
    run_clt_experiment_with_theory(model, &theory, n, reps, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VStatSimResult {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub mu_h: f64,
    pub sigma_h_sq: f64,
    /// √n(V_h − μ_h) per replicate.
    pub draws: Vec<f64>,
    pub ks_distance: Option<f64>,
}

/// Simulates √n(V_h − μ_h) for a pair kernel and compares it with N(0, σ_h²).
pub fn run_vstat_experiment(
    kernel: &dyn PairKernel,
    model: &dyn GenerativeModel,
    mu_h: f64,
    sigma_h_sq: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<VStatSimResult> {
    check_sizes(n, reps)?;
    let root_n = (n as f64).sqrt();
    let draws = (0..reps)
        .into_par_iter()
        .map(|i| {
            let rep_seed = derive_seed(seed, i as u64);
            let s = sample(model, n, derive_seed(rep_seed, 0))?;
            let rd = reorder_by_x(&s, derive_seed(rep_seed, 1));
            Ok(root_n * (v_statistic(kernel, &rd)?.value - mu_h))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ks_distance = if sigma_h_sq > ZERO_SIGMA_SQ { Some(ks_normal(&draws, sigma_h_sq.sqrt())?) } else { None };
    Ok(VStatSimResult { n, reps, seed, mu_h, sigma_h_sq, draws, ks_distance })
}
