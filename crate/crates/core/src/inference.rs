//! Confidence intervals for ξ: normal intervals with a plug-in variance, and
//! m-out-of-n bootstrap intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::error::{Result, XiError};
use crate::estimator::{reorder_by_x, xi, xi_n};
use crate::model::{JointPmf, Sample};
use crate::rng::{derive_named, derive_seed, rng_from_seed};
use crate::sim::{quantile_sorted, standard_normal};
use crate::theory::{exact_sigma_with_guard, DEFAULT_SUPPORT_GUARD};

pub const MIN_BOOTSTRAP_B: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    PluginNormal,
    MoonBootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiDiagnostics {
    pub n: usize,
    pub seed: u64,
    pub sigma_hat_sq: Option<f64>,
    pub m: Option<usize>,
    pub b: Option<usize>,
    /// Resamples dropped because every resampled Y was equal.
    pub degenerate_resamples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub diagnostics: CiDiagnostics,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(XiError::InvalidArgument(format!("level {level} must lie in (0, 1)")));
    }
    Ok(())
}

fn all_y_equal(sample: &Sample) -> bool {
    let y0 = sample.pairs()[0].1;
    sample.ys().all(|y| y == y0)
}

/// σ² evaluated at the empirical law of the sample.
///
/// Needs at least one repeated x value (otherwise the empirical conditional
/// pair law sits on the diagonal) and at most `guard` distinct y values.
pub fn plugin_variance(sample: &Sample, guard: usize) -> Result<f64> {
    if all_y_equal(sample) {
        return Err(XiError::AllYEqual);
    }
    let mut xs: Vec<f64> = sample.xs().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() == sample.len() {
        return Err(XiError::NoXTies);
    }
    let mut ys: Vec<f64> = sample.ys().collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    if ys.len() > guard {
        return Err(XiError::SupportTooLarge { size: ys.len(), limit: guard });
    }
    let pmf = JointPmf::empirical(sample)?;
    Ok(exact_sigma_with_guard(&pmf, guard)?.sigma_sq)
}

/// ξₙ ± z·√(σ̂²/n) with the plug-in σ̂².
pub fn normal_ci(sample: &Sample, level: f64, seed: u64) -> Result<CiResult> {
    normal_ci_with_guard(sample, level, seed, DEFAULT_SUPPORT_GUARD)
}

pub fn normal_ci_with_guard(sample: &Sample, level: f64, seed: u64, guard: usize) -> Result<CiResult> {
    check_level(level)?;
    let sigma_hat_sq = plugin_variance(sample, guard)?;
    let point = xi(sample, derive_named(seed, "ties"))?;
    let n = sample.len();
    let z = standard_normal().inverse_cdf((1.0 + level) / 2.0);
    let half = z * (sigma_hat_sq.max(0.0) / n as f64).sqrt();
    Ok(CiResult {
        point,
        lower: point - half,
        upper: point + half,
        level,
        method: CiMethod::PluginNormal,
        diagnostics: CiDiagnostics {
            n,
            seed,
            sigma_hat_sq: Some(sigma_hat_sq),
            m: None,
            b: None,
            degenerate_resamples: None,
        },
    })
}

/// Smallest m with m³ ≥ n², i.e. ⌈n^(2/3)⌉ computed without rounding error.
pub fn default_m(n: usize) -> usize {
    let target = (n as u128).pow(2);
    let mut m = (n as f64).powf(2.0 / 3.0).floor().max(1.0) as u128;
    while m.pow(3) < target {
        m += 1;
    }
    while m > 1 && (m - 1).pow(3) >= target {
        m -= 1;
    }
    m as usize
}

/// m-out-of-n bootstrap interval
/// `[ξₙ − q₍₁₊ₗ₎/₂ / √n, ξₙ − q₍₁₋ₗ₎/₂ / √n]`, where `q` are type-7 quantiles of
/// √m(ξ*ₘ − ξₙ) over `b` resamples. `m` defaults to [`default_m`].
pub fn moon_bootstrap_ci(
    sample: &Sample,
    m: Option<usize>,
    b: usize,
    level: f64,
    seed: u64,
) -> Result<CiResult> {
    check_level(level)?;
    let n = sample.len();
    let m = m.unwrap_or_else(|| default_m(n));
    if m < 2 || m > n {
        return Err(XiError::BadM { m, n });
    }
    if b < MIN_BOOTSTRAP_B {
        return Err(XiError::InvalidArgument(format!(
            "B = {b} must be at least {MIN_BOOTSTRAP_B}"
        )));
    }
    if all_y_equal(sample) {
        return Err(XiError::AllYEqual);
    }
    let point = xi(sample, derive_named(seed, "ties"))?;
    let pairs = sample.pairs();
    let resample_seed = derive_named(seed, "resample");
    let stats: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let rep = derive_seed(resample_seed, i as u64);
            let mut rng = rng_from_seed(derive_seed(rep, 0));
            let drawn: Vec<(f64, f64)> = (0..m).map(|_| pairs[rng.random_range(0..n)]).collect();
            let s = Sample::new(drawn).expect("resampled pairs are finite and m >= 2");
            match xi_n(&reorder_by_x(&s, derive_seed(rep, 1))) {
                Ok(v) => Ok(Some((m as f64).sqrt() * (v - point))),
                Err(XiError::AllYEqual) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut roots: Vec<f64> = stats.iter().flatten().copied().collect();
    if roots.is_empty() {
        return Err(XiError::AllYEqual);
    }
    let degenerate = b - roots.len();
    roots.sort_by(f64::total_cmp);
    let root_n = (n as f64).sqrt();
    let q_hi = quantile_sorted(&roots, (1.0 + level) / 2.0);
    let q_lo = quantile_sorted(&roots, (1.0 - level) / 2.0);
    Ok(CiResult {
        point,
        lower: point - q_hi / root_n,
        upper: point - q_lo / root_n,
        level,
        method: CiMethod::MoonBootstrap,
        diagnostics: CiDiagnostics {
            n,
            seed,
            sigma_hat_sq: None,
            m: Some(m),
            b: Some(b),
            degenerate_resamples: Some(degenerate),
        },
    })
}
