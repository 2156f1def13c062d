use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DivergenceGuard, InputEncoding, TrainConfig};
use crate::zoo::{apply_transform_family, ToyDataset, ToyImage, TransformFamily};
use crate::{math, vars, Error, JointTable, Result};

/// How the class head interacts with the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Variant {
    /// Encoder trained on the equivariance loss only; class head on a detached code.
    Baseline,
    /// Encoder trained on `L_rot + λ1 L_cls`.
    PlusCls,
    /// Alternating: class head on `L_cls`, then encoder on `L_rot - λ2 L_cls`.
    MinusCls,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Baseline, Variant::PlusCls, Variant::MinusCls];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::PlusCls => "plus_cls",
            Variant::MinusCls => "minus_cls",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownName(alloc::format!("variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CurvePoint {
    pub step: usize,
    pub loss_equiv: f64,
    pub loss_cls: f64,
    pub acc_equiv: f64,
    pub acc_cls: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ControlledResult {
    pub variant: Variant,
    pub equiv_accuracy: f64,
    pub class_accuracy: f64,
    pub curve: Vec<CurvePoint>,
}

/// Dense row-major matrix with a bias per row.
#[derive(Debug, Clone)]
struct Linear {
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Linear {
    fn new(rows: usize, cols: usize, bias: bool, scale: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = || if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 };
        let w = (0..rows * cols).map(|_| draw()).collect();
        let b = if bias { vec![0.0; rows] } else { Vec::new() };
        Linear { rows, cols, w, b }
    }

    fn zeros_like(&self) -> Linear {
        Linear { rows: self.rows, cols: self.cols, w: vec![0.0; self.w.len()], b: vec![0.0; self.b.len()] }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (r, (o, row)) in out.iter_mut().zip(self.w.chunks(self.cols)).enumerate().take(self.rows) {
            *o = self.b.get(r).copied().unwrap_or(0.0) + math::sum(row.iter().zip(x).map(|(a, b)| a * b));
        }
    }

    fn step(&mut self, g: &Linear, eta: f64) {
        for (p, d) in self.w.iter_mut().zip(&g.w) {
            *p -= eta * d;
        }
        for (p, d) in self.b.iter_mut().zip(&g.b) {
            *p -= eta * d;
        }
    }

    fn scale(&mut self, s: f64) {
        self.w.iter_mut().chain(self.b.iter_mut()).for_each(|x| *x *= s);
    }

    fn add(&mut self, other: &Linear) {
        for (p, d) in self.w.iter_mut().zip(&other.w) {
            *p += d;
        }
        for (p, d) in self.b.iter_mut().zip(&other.b) {
            *p += d;
        }
    }
}

/// Per-observation masses `p(x, y)` for one head's target.
struct Head {
    mass: Vec<Vec<f64>>,
}

struct Net {
    encoder: Linear,
    equiv: Linear,
    class: Linear,
}

/// Loss, accuracy and gradients of one head on the code `z(x)`.
struct HeadEval {
    loss: f64,
    acc: f64,
    grad: Linear,
    /// `dL/dz` per observation.
    dz: Vec<Vec<f64>>,
}

fn eval_head(head: &Linear, codes: &[Vec<f64>], target: &Head) -> HeadEval {
    let k = head.rows;
    let mut grad = head.zeros_like();
    let mut logits = vec![0.0; k];
    let mut q = vec![0.0; k];
    let (mut losses, mut accs) = (Vec::new(), Vec::new());
    let mut dz = Vec::with_capacity(codes.len());
    for (z, mass) in codes.iter().zip(&target.mass) {
        head.apply(z, &mut logits);
        let lse = math::log_sum_exp(&logits);
        let px = math::sum(mass.iter().copied());
        losses.push(math::sum(mass.iter().zip(&logits).map(|(m, l)| m * (lse - l))));
        accs.push(mass[math::argmax(&logits)]);
        math::softmax_into(&logits, &mut q);
        // dL/dlogits = p(x) q - p(x, .)
        let g: Vec<f64> = q.iter().zip(mass).map(|(qi, m)| px * qi - m).collect();
        let mut d = vec![0.0; head.cols];
        for (r, &gr) in g.iter().enumerate().take(k) {
            for (c, dc) in d.iter_mut().enumerate() {
                grad.w[r * head.cols + c] += gr * z[c];
                *dc += gr * head.w[r * head.cols + c];
            }
            if !grad.b.is_empty() {
                grad.b[r] += gr;
            }
        }
        dz.push(d);
    }
    HeadEval { loss: math::sum(losses), acc: math::sum(accs), grad, dz }
}

/// Encoder gradient from per-observation `dL/dz`.
fn encoder_grad(enc: &Linear, inputs: &[Vec<f64>], dz: &[Vec<f64>], weight: f64) -> Linear {
    let mut g = enc.zeros_like();
    for (f, d) in inputs.iter().zip(dz) {
        for (r, dr) in d.iter().enumerate().take(enc.rows) {
            for (c, v) in f.iter().enumerate() {
                g.w[r * enc.cols + c] += weight * dr * v;
            }
        }
    }
    g
}

impl Net {
    fn codes(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        inputs
            .iter()
            .map(|f| {
                let mut z = vec![0.0; self.encoder.rows];
                self.encoder.apply(f, &mut z);
                z
            })
            .collect()
    }
}

/// Input features for each observation symbol.
fn input_features(joint: &JointTable, input: InputEncoding, palette: usize) -> Result<Vec<Vec<f64>>> {
    let x = joint.alphabet(vars::OBSERVED)?;
    let n = x.size();
    match input {
        InputEncoding::OneHot => Ok((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()),
        InputEncoding::Pixels => {
            let scale = palette.saturating_sub(1).max(1) as f64;
            let mut suffixes: Vec<&str> = x.symbols().iter().filter_map(|s| s.split_once('|').map(|p| p.1)).collect();
            suffixes.sort_unstable();
            suffixes.dedup();
            x.symbols()
                .iter()
                .map(|s| {
                    let (digits, suffix) = match s.split_once('|') {
                        Some((d, a)) => (d, Some(a)),
                        None => (s.as_str(), None),
                    };
                    let img = ToyImage::from_digits(digits)?;
                    let mut f: Vec<f64> = img.pixels().iter().map(|&p| p as f64 / scale).collect();
                    f.extend(suffixes.iter().map(|t| if Some(*t) == suffix { 1.0 } else { 0.0 }));
                    Ok(f)
                })
                .collect()
        }
    }
}

fn head_masses(joint: &JointTable, target: &str) -> Result<Head> {
    let m = joint.marginalize(&[vars::OBSERVED, target])?;
    let k = m.variables()[1].size();
    let mass = m.probabilities().chunks(k).map(<[f64]>::to_vec).collect();
    Ok(Head { mass })
}

/// Train a linear bottleneck encoder on one-hot `X` with an equivariance
/// head over `A` and a class head over `C`, on the exact population.
///
/// Accuracies are argmax accuracies on the population, ties to the lowest index.
pub fn controlled_experiment(
    ds: &ToyDataset,
    family: TransformFamily,
    variant: Variant,
    config: &TrainConfig,
) -> Result<ControlledResult> {
    config.validate()?;
    if config.init_scale == 0.0 {
        return Err(Error::Usage("the bottleneck encoder needs init_scale > 0; zero is a stationary point".into()));
    }
    let joint = apply_transform_family(ds, family)?;
    let equiv_t = head_masses(&joint, vars::ACTION)?;
    let class_t = head_masses(&joint, vars::CLASS)?;
    let inputs = input_features(&joint, config.input, usize::from(ds.palette_size))?;
    let n_in = inputs[0].len();
    let n_a = equiv_t.mass[0].len();
    let n_c = class_t.mass[0].len();
    let d = config.bottleneck;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Net {
        encoder: Linear::new(d, n_in, false, config.init_scale, &mut rng),
        equiv: Linear::new(n_a, d, true, config.init_scale, &mut rng),
        class: Linear::new(n_c, d, true, config.init_scale, &mut rng),
    };
    let eta = config.step_size;
    let mut guard = DivergenceGuard::default();
    let mut curve = Vec::new();
    let record = |step: usize, e: &HeadEval, c: &HeadEval, curve: &mut Vec<CurvePoint>| {
        curve.push(CurvePoint { step, loss_equiv: e.loss, loss_cls: c.loss, acc_equiv: e.acc, acc_cls: c.acc });
    };

    for step in 0..config.steps {
        let codes = net.codes(&inputs);
        let e = eval_head(&net.equiv, &codes, &equiv_t);
        let c = eval_head(&net.class, &codes, &class_t);
        if step % config.curve_every == 0 {
            record(step, &e, &c, &mut curve);
        }
        match variant {
            Variant::Baseline => {
                guard.observe(step, e.loss + c.loss)?;
                let ge = encoder_grad(&net.encoder, &inputs, &e.dz, 1.0);
                net.encoder.step(&ge, eta);
                net.equiv.step(&e.grad, eta);
                net.class.step(&c.grad, eta);
            }
            Variant::PlusCls => {
                guard.observe(step, e.loss + config.lambda1 * c.loss)?;
                let mut ge = encoder_grad(&net.encoder, &inputs, &e.dz, 1.0);
                ge.add(&encoder_grad(&net.encoder, &inputs, &c.dz, config.lambda1));
                let mut gc = c.grad;
                gc.scale(config.lambda1);
                net.encoder.step(&ge, eta);
                net.equiv.step(&e.grad, eta);
                net.class.step(&gc, eta);
            }
            Variant::MinusCls => {
                net.class.step(&c.grad, eta);
                let c2 = eval_head(&net.class, &codes, &class_t);
                guard.observe(step, e.loss)?;
                let mut ge = encoder_grad(&net.encoder, &inputs, &e.dz, 1.0);
                ge.add(&encoder_grad(&net.encoder, &inputs, &c2.dz, -config.lambda2));
                net.encoder.step(&ge, eta);
                net.equiv.step(&e.grad, eta);
            }
        }
    }
    let codes = net.codes(&inputs);
    let e = eval_head(&net.equiv, &codes, &equiv_t);
    let c = eval_head(&net.class, &codes, &class_t);
    if !(e.loss.is_finite() && c.loss.is_finite()) {
        return Err(Error::Divergence { step: config.steps, streak: 0 });
    }
    record(config.steps, &e, &c, &mut curve);
    Ok(ControlledResult { variant, equiv_accuracy: e.acc, class_accuracy: c.acc, curve })
}

/// Accuracies of bias-free softmax heads reading the action block of the
/// concatenated one-hot `[Xbar, A]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReadoutResult {
    pub equiv_accuracy: f64,
    pub class_accuracy: f64,
    pub chance: f64,
}

/// Perfectly equivariant code `Z = A` taken from the direct concatenation,
/// probed by trained linear heads for `A` and for `C`.
pub fn concat_readout(ds: &ToyDataset, config: &TrainConfig) -> Result<ReadoutResult> {
    config.validate()?;
    let joint = apply_transform_family(ds, TransformFamily::DirectConcat)?;
    let code = joint.marginalize(&[vars::ACTION, vars::CLASS])?;
    let n_a = code.variables()[0].size();
    let n_c = code.variables()[1].size();
    let codes: Vec<Vec<f64>> = (0..n_a).map(|a| (0..n_a).map(|j| if j == a { 1.0 } else { 0.0 }).collect()).collect();
    let equiv_t = Head {
        mass: (0..n_a)
            .map(|a| (0..n_a).map(|j| if j == a { math::sum(code.probabilities()[a * n_c..(a + 1) * n_c].iter().copied()) } else { 0.0 }).collect())
            .collect(),
    };
    let class_t = Head { mass: code.probabilities().chunks(n_c).map(<[f64]>::to_vec).collect() };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut equiv = Linear::new(n_a, n_a, false, config.init_scale, &mut rng);
    let mut class = Linear::new(n_c, n_a, false, config.init_scale, &mut rng);
    let mut ge = DivergenceGuard::default();
    let mut gc = DivergenceGuard::default();
    for step in 0..config.steps {
        let e = eval_head(&equiv, &codes, &equiv_t);
        let c = eval_head(&class, &codes, &class_t);
        ge.observe(step, e.loss)?;
        gc.observe(step, c.loss)?;
        equiv.step(&e.grad, config.step_size);
        class.step(&c.grad, config.step_size);
    }
    let class_prior = code.marginalize(&[vars::CLASS])?;
    let chance = class_prior.probabilities().iter().copied().fold(0.0, f64::max);
    Ok(ReadoutResult {
        equiv_accuracy: eval_head(&equiv, &codes, &equiv_t).acc,
        class_accuracy: eval_head(&class, &codes, &class_t).acc,
        chance,
    })
}
