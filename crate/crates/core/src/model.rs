//! Bivariate laws for (X, Y): finite joint PMFs, generative samplers and the
//! built-in models used by the simulation experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Result, XiError};
use crate::rng::{rng_from_seed, XiRng};

const RENORMALIZE_TOL: f64 = 1e-9;

/// Observed pairs `(x, y)`; always at least two, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pairs: Vec<(f64, f64)>,
}

impl Sample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(XiError::TooFewObservations(pairs.len()));
        }
        if let Some(i) = pairs.iter().position(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(XiError::NonFinite(format!("sample pair {i}")));
        }
        Ok(Sample { pairs })
    }

    pub fn from_columns(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(XiError::DimensionMismatch(format!(
                "x has {} values, y has {}",
                x.len(),
                y.len()
            )));
        }
        Sample::new(x.iter().copied().zip(y.iter().copied()).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(|p| p.1)
    }
}

/// A joint probability mass function on a finite grid `support_x × support_y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    support_x: Vec<f64>,
    support_y: Vec<f64>,
    prob: Vec<Vec<f64>>,
}

fn check_support(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(XiError::BadSupport(format!("{what} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(XiError::BadSupport(format!("{what} has a non-finite value")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(XiError::BadSupport(format!("{what} is not strictly increasing")));
    }
    Ok(())
}

impl JointPmf {
    /// Validates and builds a PMF. `prob[i][j]` is `P(X = support_x[i], Y = support_y[j])`.
    ///
    /// A total mass within `1e-9` of one is renormalized; anything further off
    /// is rejected. A point-mass Y marginal is rejected as well.
    pub fn new(support_x: Vec<f64>, support_y: Vec<f64>, prob: Vec<Vec<f64>>) -> Result<Self> {
        check_support(&support_x, "support_x")?;
        check_support(&support_y, "support_y")?;
        if prob.len() != support_x.len() {
            return Err(XiError::DimensionMismatch(format!(
                "prob has {} rows, support_x has {} points",
                prob.len(),
                support_x.len()
            )));
        }
        let mut sum = 0.0;
        for (i, row) in prob.iter().enumerate() {
            if row.len() != support_y.len() {
                return Err(XiError::DimensionMismatch(format!(
                    "prob row {i} has {} entries, support_y has {} points",
                    row.len(),
                    support_y.len()
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(XiError::NonFinite(format!("prob[{i}][{j}]")));
                }
                if p < 0.0 {
                    return Err(XiError::NegativeProbability { x_index: i, y_index: j, value: p });
                }
                sum += p;
            }
        }
        if (sum - 1.0).abs() > RENORMALIZE_TOL {
            return Err(XiError::MassNotOne { sum });
        }
        let prob: Vec<Vec<f64>> = prob
            .into_iter()
            .map(|row| row.into_iter().map(|p| p / sum).collect())
            .collect();
        let pmf = JointPmf { support_x, support_y, prob };
        if pmf.marginal_y().iter().filter(|&&p| p > 0.0).count() < 2 {
            return Err(XiError::DegenerateY);
        }
        Ok(pmf)
    }

    /// Independent coupling of two marginals.
    pub fn product(support_x: Vec<f64>, px: &[f64], support_y: Vec<f64>, py: &[f64]) -> Result<Self> {
        if px.len() != support_x.len() || py.len() != support_y.len() {
            return Err(XiError::DimensionMismatch(
                "marginal lengths must match their supports".into(),
            ));
        }
        let prob = px.iter().map(|&a| py.iter().map(|&b| a * b).collect()).collect();
        JointPmf::new(support_x, support_y, prob)
    }

    /// The empirical law of a sample.
    pub fn empirical(sample: &Sample) -> Result<Self> {
        let mut support_x: Vec<f64> = sample.xs().collect();
        let mut support_y: Vec<f64> = sample.ys().collect();
        for s in [&mut support_x, &mut support_y] {
            s.sort_by(f64::total_cmp);
            s.dedup();
        }
        let mut counts = vec![vec![0u64; support_y.len()]; support_x.len()];
        for &(x, y) in sample.pairs() {
            let i = support_x.partition_point(|&v| v < x);
            let j = support_y.partition_point(|&v| v < y);
            counts[i][j] += 1;
        }
        let n = sample.len() as f64;
        let prob = counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 / n).collect())
            .collect();
        JointPmf::new(support_x, support_y, prob)
    }

    pub fn support_x(&self) -> &[f64] {
        &self.support_x
    }

    pub fn support_y(&self) -> &[f64] {
        &self.support_y
    }

    pub fn prob(&self) -> &[Vec<f64>] {
        &self.prob
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.prob[i][j]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.prob.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let mut py = vec![0.0; self.support_y.len()];
        for row in &self.prob {
            for (acc, p) in py.iter_mut().zip(row) {
                *acc += p;
            }
        }
        py
    }

    /// `P(Y = support_y[j] | X = support_x[i])`, or `None` when `P(X = support_x[i]) = 0`.
    pub fn conditional_y(&self, i: usize) -> Option<Vec<f64>> {
        let px: f64 = self.prob[i].iter().sum();
        (px > 0.0).then(|| self.prob[i].iter().map(|p| p / px).collect())
    }
}

/// Inverse-CDF sampler for a finite distribution.
#[derive(Debug, Clone)]
struct Discrete {
    values: Vec<f64>,
    cdf: Vec<f64>,
}

impl Discrete {
    fn new(values: &[f64], weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Discrete { values: values.to_vec(), cdf }
    }

    fn draw(&self, rng: &mut XiRng) -> f64 {
        let u: f64 = rng.random();
        // The first atom with cdf > u always carries mass; when rounding leaves
        // cdf.last() <= u, fall back to the last atom with mass.
        let k = self.cdf.partition_point(|&c| c <= u);
        if k < self.cdf.len() {
            return self.values[k];
        }
        let last = (1..self.cdf.len())
            .rev()
            .find(|&k| self.cdf[k] > self.cdf[k - 1])
            .unwrap_or(0);
        self.values[last]
    }
}

/// Sampling access to a law of (X, Y), including the conditional law of Y
/// given X = x.
pub trait GenerativeModel: Send + Sync {
    fn sample_x(&self, rng: &mut XiRng) -> f64;

    /// Draws from `P(Y | X = x)`. `x` must be a point the model can produce
    /// from [`GenerativeModel::sample_x`]; discrete models panic otherwise.
    fn sample_y_given_x(&self, x: f64, rng: &mut XiRng) -> f64;

    fn sample_joint(&self, rng: &mut XiRng) -> (f64, f64) {
        let x = self.sample_x(rng);
        (x, self.sample_y_given_x(x, rng))
    }
}

struct PmfSampler {
    support_x: Vec<f64>,
    x: Discrete,
    y_given_x: Vec<Option<Discrete>>,
}

impl PmfSampler {
    fn new(pmf: &JointPmf) -> Self {
        let y_given_x = (0..pmf.support_x.len())
            .map(|i| pmf.conditional_y(i).map(|w| Discrete::new(&pmf.support_y, &w)))
            .collect();
        PmfSampler {
            support_x: pmf.support_x.clone(),
            x: Discrete::new(&pmf.support_x, &pmf.marginal_x()),
            y_given_x,
        }
    }
}

impl GenerativeModel for PmfSampler {
    fn sample_x(&self, rng: &mut XiRng) -> f64 {
        self.x.draw(rng)
    }

    fn sample_y_given_x(&self, x: f64, rng: &mut XiRng) -> f64 {
        let i = self
            .support_x
            .binary_search_by(|v| v.total_cmp(&x))
            .unwrap_or_else(|_| panic!("x = {x} is not in the support of X"));
        self.y_given_x[i]
            .as_ref()
            .unwrap_or_else(|| panic!("x = {x} has zero probability"))
            .draw(rng)
    }
}

/// X discrete, Y = X / scale + U with U ~ Uniform[0, 1].
struct ShiftedUniform {
    x: Discrete,
    scale: f64,
}

impl GenerativeModel for ShiftedUniform {
    fn sample_x(&self, rng: &mut XiRng) -> f64 {
        self.x.draw(rng)
    }

    fn sample_y_given_x(&self, x: f64, rng: &mut XiRng) -> f64 {
        x / self.scale + rng.random::<f64>()
    }
}

/// X and Y independent Uniform[0, 1].
struct IndependentUniform;

impl GenerativeModel for IndependentUniform {
    fn sample_x(&self, rng: &mut XiRng) -> f64 {
        rng.random()
    }

    fn sample_y_given_x(&self, _x: f64, rng: &mut XiRng) -> f64 {
        rng.random()
    }
}

/// Label and parameters of a model, echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub params: Value,
}

/// A model: a sampler, plus the exact PMF whenever the support is finite.
pub struct Model {
    descriptor: ModelDescriptor,
    sampler: Box<dyn GenerativeModel>,
    pmf: Option<JointPmf>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("descriptor", &self.descriptor)
            .field("pmf", &self.pmf)
            .finish_non_exhaustive()
    }
}

impl Model {
    pub fn from_pmf(name: &str, params: Value, pmf: JointPmf) -> Self {
        Model {
            descriptor: ModelDescriptor { name: name.to_string(), params },
            sampler: Box::new(PmfSampler::new(&pmf)),
            pmf: Some(pmf),
        }
    }

    /// Wraps an arbitrary sampler without finite support.
    pub fn from_sampler(name: &str, params: Value, sampler: Box<dyn GenerativeModel>) -> Self {
        Model {
            descriptor: ModelDescriptor { name: name.to_string(), params },
            sampler,
            pmf: None,
        }
    }

    pub fn descriptor(&self) -> &ModelDescriptor {
        &self.descriptor
    }

    pub fn pmf(&self) -> Option<&JointPmf> {
        self.pmf.as_ref()
    }
}

impl GenerativeModel for Model {
    fn sample_x(&self, rng: &mut XiRng) -> f64 {
        self.sampler.sample_x(rng)
    }

    fn sample_y_given_x(&self, x: f64, rng: &mut XiRng) -> f64 {
        self.sampler.sample_y_given_x(x, rng)
    }

    fn sample_joint(&self, rng: &mut XiRng) -> (f64, f64) {
        self.sampler.sample_joint(rng)
    }
}

/// `Bin(trials, p)` probabilities at `0..=trials`.
pub fn binomial_pmf(trials: u32, p: f64) -> Vec<f64> {
    let mut coef = 1.0f64;
    (0..=trials)
        .map(|k| {
            if k > 0 {
                coef = coef * (trials - k + 1) as f64 / k as f64;
            }
            coef * p.powi(k as i32) * (1.0 - p).powi((trials - k) as i32)
        })
        .collect()
}

fn param_f64(params: &Value, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| XiError::BadParams(format!("`{key}` must be a number"))),
    }
}

fn param_vec(params: &Value, key: &str) -> Result<Option<Vec<f64>>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|_| XiError::BadParams(format!("`{key}` must be an array of numbers"))),
    }
}

fn binomial_params(params: &Value) -> Result<(u32, f64)> {
    let trials = param_f64(params, "trials", 10.0)?;
    let p = param_f64(params, "p", 1.0 / 3.0)?;
    if trials < 1.0 || trials.fract() != 0.0 || trials > 1000.0 {
        return Err(XiError::BadParams(format!("trials = {trials} must be an integer in 1..=1000")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(XiError::BadParams(format!("p = {p} must lie in (0, 1)")));
    }
    Ok((trials as u32, p))
}

/// Builds one of the named models.
///
/// * `indep_binomial`: X, Y independent `Bin(trials, p)` (defaults 10, 1/3).
/// * `binomial_plus_uniform`: X ~ `Bin(trials, p)`, Y = X / scale + U (scale 10).
/// * `indep_uniform`: X, Y independent Uniform[0, 1].
/// * `product_pmf`: independent coupling of `px` and `py` (supports default to `0, 1, ...`).
/// * `custom_pmf`: `support_x`, `support_y`, `prob`.
pub fn builtin_model(name: &str, params: &Value) -> Result<Model> {
    let params = if params.is_null() { json!({}) } else { params.clone() };
    if !params.is_object() {
        return Err(XiError::BadParams("params must be a JSON object".into()));
    }
    match name {
        "indep_binomial" => {
            let (trials, p) = binomial_params(&params)?;
            let support: Vec<f64> = (0..=trials).map(f64::from).collect();
            let w = binomial_pmf(trials, p);
            let pmf = JointPmf::product(support.clone(), &w, support, &w)?;
            Ok(Model::from_pmf(name, json!({ "trials": trials, "p": p }), pmf))
        }
        "binomial_plus_uniform" => {
            let (trials, p) = binomial_params(&params)?;
            let scale = param_f64(&params, "scale", 10.0)?;
            if !(scale.is_finite() && scale > 0.0) {
                return Err(XiError::BadParams(format!("scale = {scale} must be positive")));
            }
            let support: Vec<f64> = (0..=trials).map(f64::from).collect();
            let sampler = ShiftedUniform { x: Discrete::new(&support, &binomial_pmf(trials, p)), scale };
            Ok(Model::from_sampler(
                name,
                json!({ "trials": trials, "p": p, "scale": scale }),
                Box::new(sampler),
            ))
        }
        "indep_uniform" => Ok(Model::from_sampler(name, json!({}), Box::new(IndependentUniform))),
        "product_pmf" => {
            let px = param_vec(&params, "px")?.ok_or_else(|| XiError::BadParams("missing `px`".into()))?;
            let py = param_vec(&params, "py")?.ok_or_else(|| XiError::BadParams("missing `py`".into()))?;
            let sx = param_vec(&params, "support_x")?
                .unwrap_or_else(|| (0..px.len()).map(|i| i as f64).collect());
            let sy = param_vec(&params, "support_y")?
                .unwrap_or_else(|| (0..py.len()).map(|i| i as f64).collect());
            let pmf = JointPmf::product(sx, &px, sy, &py)?;
            Ok(Model::from_pmf(name, params, pmf))
        }
        "custom_pmf" => {
            let spec: PmfSpec = serde_json::from_value(params.clone())
                .map_err(|e| XiError::BadParams(format!("custom_pmf: {e}")))?;
            let pmf = JointPmf::new(spec.support_x, spec.support_y, spec.prob)?;
            Ok(Model::from_pmf(name, params, pmf))
        }
        other => Err(XiError::UnknownModel(other.to_string())),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfSpec {
    pub support_x: Vec<f64>,
    pub support_y: Vec<f64>,
    pub prob: Vec<Vec<f64>>,
}

/// Contents of a model spec file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Named {
        name: String,
        #[serde(default)]
        params: Value,
    },
    Pmf {
        pmf: PmfSpec,
    },
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| XiError::BadParams(format!("model spec: {e}")))
    }

    pub fn build(&self) -> Result<Model> {
        match self {
            ModelSpec::Named { name, params } => builtin_model(name, params),
            ModelSpec::Pmf { pmf } => {
                let params = serde_json::to_value(pmf)?;
                builtin_model("custom_pmf", &params)
            }
        }
    }
}

/// `n` i.i.d. draws; the same `(model, n, seed)` always gives the same sample.
pub fn sample(model: &dyn GenerativeModel, n: usize, seed: u64) -> Result<Sample> {
    if n < 2 {
        return Err(XiError::TooFewObservations(n));
    }
    let mut rng = rng_from_seed(seed);
    Sample::new((0..n).map(|_| model.sample_joint(&mut rng)).collect())
}
