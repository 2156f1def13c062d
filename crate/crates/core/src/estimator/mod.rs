//! Variational estimation with softmax predictors trained by full-batch
//! gradient descent, and the controlled encoder experiment.
//!
//! Training always runs on an exact distribution. In sampled mode that
//! distribution is the empirical table of `n` seeded draws.

mod controlled;

pub use controlled::{
    concat_readout, controlled_experiment, ControlledResult, CurvePoint, ReadoutResult, Variant,
};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::info::{conditional_entropy, conditional_mutual_information};
use crate::{math, vars, Error, JointTable, Result};

/// Consecutive loss increases that count as divergence.
pub const DIVERGENCE_STREAK: usize = 10;

/// Where the training distribution comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case", deny_unknown_fields)
)]
pub enum Mode {
    /// The exact joint.
    Population,
    /// The empirical table of `n` draws.
    Sampled { n: usize },
}

/// Gradient-descent settings shared by every trainer here.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub step_size: f64,
    pub steps: usize,
    /// Weight of the class loss in the joint objective.
    pub lambda1: f64,
    /// Weight of the reversed class loss in the adversarial objective.
    pub lambda2: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Parameters start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Bottleneck width of the controlled-experiment encoder.
    pub bottleneck: usize,
    /// Record a curve point every this many steps.
    pub curve_every: usize,
    /// Input representation of the controlled-experiment encoder.
    pub input: InputEncoding,
}

/// What the controlled-experiment encoder sees of an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum InputEncoding {
    /// One indicator per observation symbol.
    #[default]
    OneHot,
    /// Pixel intensities scaled to `[0, 1]`, plus a one-hot of any `|action` suffix.
    Pixels,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            step_size: 2.0,
            steps: 20_000,
            lambda1: 0.5,
            lambda2: 9.0,
            seed: 0,
            mode: Mode::Population,
            init_scale: 0.0,
            bottleneck: 8,
            curve_every: 100,
            input: InputEncoding::default(),
        }
    }
}

impl TrainConfig {
    /// Defaults for [`controlled_experiment`]: the bottleneck needs a
    /// nonzero start and a smaller step.
    pub fn controlled() -> Self {
        TrainConfig { step_size: 0.5, steps: 2000, init_scale: 0.1, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Usage("step_size must be positive".into()));
        }
        if self.steps == 0 {
            return Err(Error::Usage("steps must be at least 1".into()));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0 && self.lambda1.is_finite() && self.lambda2.is_finite()) {
            return Err(Error::Usage("lambda1 and lambda2 must be nonnegative".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Usage("init_scale must be nonnegative".into()));
        }
        if self.bottleneck == 0 || self.curve_every == 0 {
            return Err(Error::Usage("bottleneck and curve_every must be positive".into()));
        }
        if let Mode::Sampled { n } = self.mode {
            if n == 0 {
                return Err(Error::Usage("sample size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Encoding of the side variables into sparse 0/1 features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum FeatureMap {
    /// One indicator per joint configuration of the side variables.
    JointOneHot,
    /// One indicator block per side variable, concatenated.
    ConcatOneHot,
}

impl FeatureMap {
    fn width(&self, sizes: &[usize]) -> usize {
        match self {
            FeatureMap::JointOneHot => sizes.iter().product(),
            FeatureMap::ConcatOneHot => sizes.iter().sum(),
        }
    }

    fn active(&self, sizes: &[usize], idx: &[usize]) -> Vec<usize> {
        match self {
            FeatureMap::JointOneHot => {
                let mut off = 0;
                for (s, i) in sizes.iter().zip(idx) {
                    off = off * s + i;
                }
                vec![off]
            }
            FeatureMap::ConcatOneHot => {
                let mut base = 0;
                sizes
                    .iter()
                    .zip(idx)
                    .map(|(s, i)| {
                        let f = base + i;
                        base += s;
                        f
                    })
                    .collect()
            }
        }
    }
}

/// Weighted training rows: active features, target index, probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    rows: Vec<(Vec<usize>, usize, f64)>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// `softmax(W φ(side) + b)` over the target alphabet.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SoftmaxPredictor {
    pub feature_map: FeatureMap,
    pub target: String,
    pub side: Vec<String>,
    side_sizes: Vec<usize>,
    n_out: usize,
    use_bias: bool,
    /// Row-major `features × outputs`, followed by the bias when present.
    params: Vec<f64>,
}

impl SoftmaxPredictor {
    /// Zero-initialised predictor for `target` given `side` in `joint`.
    pub fn new(
        joint: &JointTable,
        target: &str,
        side: &[&str],
        feature_map: FeatureMap,
        use_bias: bool,
    ) -> Result<Self> {
        crate::info::check_disjoint(&[&[target], side])?;
        let n_out = joint.alphabet(target)?.size();
        let side_sizes = side
            .iter()
            .map(|s| joint.alphabet(s).map(|a| a.size()))
            .collect::<Result<Vec<_>>>()?;
        let width = feature_map.width(&side_sizes);
        let n = width
            .checked_mul(n_out)
            .filter(|&n| n <= 1 << 26)
            .ok_or_else(|| Error::Resource("predictor too large".into()))?;
        Ok(SoftmaxPredictor {
            feature_map,
            target: target.to_string(),
            side: side.iter().map(|s| s.to_string()).collect(),
            side_sizes,
            n_out,
            use_bias,
            params: vec![0.0; n + if use_bias { n_out } else { 0 }],
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_map.width(&self.side_sizes)
    }

    pub fn n_outputs(&self) -> usize {
        self.n_out
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weights(&self) -> &[f64] {
        &self.params[..self.n_features() * self.n_out]
    }

    pub fn bias(&self) -> Option<&[f64]> {
        self.use_bias.then(|| &self.params[self.n_features() * self.n_out..])
    }

    /// Seeded uniform initialisation in `[-scale, scale]`.
    pub fn randomize(&mut self, scale: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut self.params {
            *p = if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 };
        }
    }

    /// Training rows from the marginal of `joint` over side and target.
    pub fn population(&self, joint: &JointTable) -> Result<Population> {
        let mut names: Vec<&str> = self.side.iter().map(String::as_str).collect();
        names.push(&self.target);
        let m = joint.marginalize(&names)?;
        for (a, &s) in m.variables().iter().zip(&self.side_sizes) {
            if a.size() != s {
                return Err(Error::Usage(format!("alphabet of `{}` changed size", a.name())));
            }
        }
        let k = self.side.len();
        let mut rows = Vec::new();
        m.for_each_cell(|idx, p| {
            if p > 0.0 {
                rows.push((self.feature_map.active(&self.side_sizes, &idx[..k]), idx[k], p));
            }
        });
        Ok(Population { rows })
    }

    fn logits_into(&self, active: &[usize], out: &mut [f64]) {
        match self.bias() {
            Some(b) => out.copy_from_slice(b),
            None => out.iter_mut().for_each(|o| *o = 0.0),
        }
        for &f in active {
            let row = &self.params[f * self.n_out..(f + 1) * self.n_out];
            for (o, r) in out.iter_mut().zip(row) {
                *o += r;
            }
        }
    }

    /// Predicted distribution for one side configuration.
    pub fn predict(&self, side_idx: &[usize]) -> Vec<f64> {
        let active = self.feature_map.active(&self.side_sizes, side_idx);
        let mut z = vec![0.0; self.n_out];
        self.logits_into(&active, &mut z);
        let mut q = vec![0.0; self.n_out];
        math::softmax_into(&z, &mut q);
        q
    }

    /// Expected cross-entropy on `data`; accumulates the gradient when asked.
    pub fn loss(&self, data: &Population, mut grad: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
        let nw = self.n_features() * self.n_out;
        let mut z = vec![0.0; self.n_out];
        let mut q = vec![0.0; self.n_out];
        let mut terms = Vec::with_capacity(data.rows.len());
        for (active, y, p) in &data.rows {
            self.logits_into(active, &mut z);
            let lse = math::log_sum_exp(&z);
            terms.push(p * (lse - z[*y]));
            if let Some(g) = grad.as_deref_mut() {
                math::softmax_into(&z, &mut q);
                q[*y] -= 1.0;
                for &f in active {
                    for (gi, qi) in g[f * self.n_out..(f + 1) * self.n_out].iter_mut().zip(&q) {
                        *gi += p * qi;
                    }
                }
                if self.use_bias {
                    for (gi, qi) in g[nw..].iter_mut().zip(&q) {
                        *gi += p * qi;
                    }
                }
            }
        }
        math::sum(terms)
    }

    /// Probability that the argmax prediction (ties to the lowest index) is right.
    pub fn accuracy(&self, data: &Population) -> f64 {
        let mut z = vec![0.0; self.n_out];
        math::sum(data.rows.iter().map(|(active, y, p)| {
            self.logits_into(active, &mut z);
            if math::argmax(&z) == *y {
                *p
            } else {
                0.0
            }
        }))
    }
}

/// Trained predictor and its final population loss.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub predictor: SoftmaxPredictor,
    pub final_ce: f64,
    pub steps_run: usize,
}

/// Tracks consecutive loss increases.
#[derive(Debug, Default)]
pub(crate) struct DivergenceGuard {
    last: Option<f64>,
    streak: usize,
}

impl DivergenceGuard {
    pub(crate) fn observe(&mut self, step: usize, loss: f64) -> Result<()> {
        if !loss.is_finite() {
            return Err(Error::Divergence { step, streak: self.streak + 1 });
        }
        if let Some(last) = self.last {
            if loss > last {
                self.streak += 1;
                if self.streak >= DIVERGENCE_STREAK {
                    return Err(Error::Divergence { step, streak: self.streak });
                }
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(loss);
        Ok(())
    }
}

/// Run plain gradient descent on `predictor` over `data`.
///
/// Stops early once the largest gradient entry drops below `grad_tol`.
pub fn train(
    predictor: &mut SoftmaxPredictor,
    data: &Population,
    step_size: f64,
    steps: usize,
    grad_tol: f64,
) -> Result<(f64, usize)> {
    let mut grad = vec![0.0; predictor.params.len()];
    let mut guard = DivergenceGuard::default();
    for step in 0..steps {
        let loss = predictor.loss(data, Some(&mut grad));
        guard.observe(step, loss)?;
        if grad.iter().all(|g| g.abs() < grad_tol) {
            return Ok((loss, step));
        }
        for (p, g) in predictor.params.iter_mut().zip(&grad) {
            *p -= step_size * g;
        }
    }
    Ok((predictor.loss(data, None), steps))
}

/// Training table for `config.mode`: the joint itself or a seeded sample.
pub fn training_joint(joint: &JointTable, config: &TrainConfig) -> Result<JointTable> {
    match config.mode {
        Mode::Population => Ok(joint.clone()),
        Mode::Sampled { n } => sample_joint(joint, n, &mut ChaCha8Rng::seed_from_u64(config.seed)),
    }
}

/// Fit `target` given `side` with a bias-carrying softmax predictor.
pub fn fit_predictor(
    joint: &JointTable,
    target: &str,
    side: &[&str],
    feature_map: FeatureMap,
    config: &TrainConfig,
) -> Result<FitResult> {
    config.validate()?;
    let data_joint = training_joint(joint, config)?;
    fit_on(&data_joint, target, side, feature_map, config)
}

fn fit_on(
    joint: &JointTable,
    target: &str,
    side: &[&str],
    feature_map: FeatureMap,
    config: &TrainConfig,
) -> Result<FitResult> {
    let mut predictor = SoftmaxPredictor::new(joint, target, side, feature_map, true)?;
    predictor.randomize(config.init_scale, config.seed);
    let data = predictor.population(joint)?;
    let (final_ce, steps_run) = train(&mut predictor, &data, config.step_size, config.steps, 1e-12)?;
    Ok(FitResult { predictor, final_ce, steps_run })
}

/// Empirical table of `n` independent draws from `joint`.
pub fn sample_joint<R: Rng + ?Sized>(joint: &JointTable, n: usize, rng: &mut R) -> Result<JointTable> {
    if n == 0 {
        return Err(Error::Usage("sample size must be positive".into()));
    }
    let probs = joint.probabilities();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u64; probs.len()];
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let i = cdf.partition_point(|&c| c <= u).min(last);
        // skip zero-mass cells that share a cumulative value
        let i = (i..=last).find(|&j| probs[j] > 0.0).unwrap_or(last);
        counts[i] += 1;
    }
    JointTable::from_weights(joint.variables().to_vec(), counts.into_iter().map(|c| c as f64).collect())
}

/// Cross-entropy estimate of `I(A;C|X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SynergyEstimate {
    pub i_hat: f64,
    /// Loss of the predictor of `A` from `X`.
    pub ce_without: f64,
    /// Loss of the predictor of `A` from `(X, C)`.
    pub ce_with: f64,
    /// Exact `I(A;C|X)` of the supplied joint.
    pub exact: f64,
}

/// Difference of the two fitted cross-entropies. Both fits share one sample.
pub fn estimate_synergy_variational(joint: &JointTable, config: &TrainConfig) -> Result<SynergyEstimate> {
    use vars::{ACTION, CLASS, OBSERVED};
    config.validate()?;
    let exact = conditional_mutual_information(joint, &[ACTION], &[CLASS], &[OBSERVED])?;
    let data = training_joint(joint, config)?;
    let without = fit_on(&data, ACTION, &[OBSERVED], FeatureMap::JointOneHot, config)?;
    let with = fit_on(&data, ACTION, &[OBSERVED, CLASS], FeatureMap::JointOneHot, config)?;
    Ok(SynergyEstimate {
        i_hat: without.final_ce - with.final_ce,
        ce_without: without.final_ce,
        ce_with: with.final_ce,
        exact,
    })
}

/// Gap between a fitted loss and the Shannon conditional entropy it bounds.
pub fn variational_gap(joint: &JointTable, fit: &FitResult) -> Result<f64> {
    let side: Vec<&str> = fit.predictor.side.iter().map(String::as_str).collect();
    let h = if side.is_empty() {
        crate::info::entropy(joint, &[&fit.predictor.target])?
    } else {
        conditional_entropy(joint, &[&fit.predictor.target], &side)?
    };
    Ok(fit.final_ce - h)
}

/// Central finite-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// Largest relative error between analytic and central-difference
/// gradients over up to 64 seeded coordinates.
pub fn gradient_check(predictor: &SoftmaxPredictor, joint: &JointTable, seed: u64) -> Result<f64> {
    let data = predictor.population(joint)?;
    let mut grad = vec![0.0; predictor.params.len()];
    predictor.loss(&data, Some(&mut grad));
    let n = predictor.params.len();
    let coords: Vec<usize> = if n <= 64 {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..64).map(|_| rng.random_range(0..n)).collect()
    };
    let mut probe = predictor.clone();
    let mut worst = 0.0f64;
    for i in coords {
        let orig = probe.params[i];
        probe.params[i] = orig + FD_STEP;
        let up = probe.loss(&data, None);
        probe.params[i] = orig - FD_STEP;
        let down = probe.loss(&data, None);
        probe.params[i] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// [`gradient_check`] that fails above `tol`.
pub fn assert_gradients(predictor: &SoftmaxPredictor, joint: &JointTable, seed: u64, tol: f64) -> Result<f64> {
    let err = gradient_check(predictor, joint, seed)?;
    if err > tol {
        return Err(Error::Numerical(format!("gradient relative error {err} exceeds {tol}")));
    }
    Ok(err)
}
