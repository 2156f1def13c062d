//! Predictive V-information over finite alphabets.
//!
//! `H_V(Y|X)` is the best expected log loss of a predictor of `Y` from `X`
//! drawn from a restricted family. Conditional V-information concatenates
//! the extra variable onto the side information.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::estimator::{train, FeatureMap, SoftmaxPredictor};
use crate::info::{conditional_entropy, entropy};
use crate::{Alphabet, Error, JointTable, Result};

/// A partition of one side variable's symbols into blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct VariablePartition {
    pub variable: String,
    pub blocks: Vec<Vec<String>>,
}

/// Optimisation budget for [`PredictiveFamily::LinearSoftmax`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct Budget {
    pub step_size: f64,
    pub max_steps: usize,
    /// Converged once the loss improves by less than this over `window` steps.
    pub tol: f64,
    pub window: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { step_size: 1.0, max_steps: 200_000, tol: 1e-6, window: 1000 }
    }
}

/// A predictive family; each kind can ignore its side information.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum PredictiveFamily {
    /// Every conditional distribution.
    Full,
    /// Constant predictors only.
    Const,
    /// Predictors that see each listed side variable only through its block.
    /// Unlisted side variables are seen in full.
    Partition { partitions: Vec<VariablePartition> },
    /// `softmax(W φ(x) + b)`.
    LinearSoftmax {
        feature_map: FeatureMap,
        #[cfg_attr(feature = "serde", serde(default))]
        budget: Budget,
    },
}

fn block_alphabet(joint: &JointTable, p: &VariablePartition) -> Result<(Alphabet, Vec<usize>, usize)> {
    let pos = joint.var_index(&p.variable)?;
    let alpha = &joint.variables()[pos];
    let mut block_of = alloc::vec![usize::MAX; alpha.size()];
    for (b, block) in p.blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::Usage(format!("empty block in the partition of `{}`", p.variable)));
        }
        for s in block {
            let i = alpha
                .index_of(s)
                .ok_or_else(|| Error::UnknownName(format!("symbol `{s}` of `{}`", p.variable)))?;
            if block_of[i] != usize::MAX {
                return Err(Error::Usage(format!("symbol `{s}` in two blocks")));
            }
            block_of[i] = b;
        }
    }
    if block_of.contains(&usize::MAX) {
        return Err(Error::Usage(format!("partition of `{}` does not cover every symbol", p.variable)));
    }
    let name = format!("{}/blocks", p.variable);
    Ok((Alphabet::indexed(name, p.blocks.len())?, block_of, pos))
}

/// Replace partitioned side variables by their block labels.
fn coarsen(joint: &JointTable, partitions: &[VariablePartition], side: &[&str]) -> Result<(JointTable, Vec<String>)> {
    let mut t = joint.clone();
    let mut names = Vec::with_capacity(side.len());
    for &s in side {
        match partitions.iter().find(|p| p.variable == s) {
            Some(p) => {
                let (alpha, block_of, pos) = block_alphabet(joint, p)?;
                names.push(alpha.name().to_string());
                t = t.extend_with(alpha, |i| block_of[i[pos]])?;
            }
            None => names.push(s.to_string()),
        }
    }
    for p in partitions {
        joint.var_index(&p.variable)?;
    }
    Ok((t, names))
}

fn fit_linear(joint: &JointTable, y: &str, x: &[&str], feature_map: FeatureMap, budget: &Budget) -> Result<f64> {
    let mut pred = SoftmaxPredictor::new(joint, y, x, feature_map, true)?;
    let data = pred.population(joint)?;
    let window = budget.window.max(1);
    let mut best = f64::INFINITY;
    let mut done = 0;
    while done < budget.max_steps {
        let chunk = window.min(budget.max_steps - done);
        let (loss, ran) = train(&mut pred, &data, budget.step_size, chunk, 1e-14)?;
        done += chunk;
        let improvement = best - loss;
        best = best.min(loss);
        if ran < chunk || improvement < budget.tol {
            return Ok(best);
        }
    }
    Err(Error::Unconverged { steps: budget.max_steps, best })
}

/// `H_V(y | x)`; an empty `x` gives `H(y)`.
pub fn v_conditional_entropy(family: &PredictiveFamily, joint: &JointTable, y: &str, x: &[&str]) -> Result<f64> {
    crate::info::check_disjoint(&[&[y], x])?;
    joint.resolve(x)?;
    if x.is_empty() {
        return entropy(joint, &[y]);
    }
    match family {
        PredictiveFamily::Full => conditional_entropy(joint, &[y], x),
        PredictiveFamily::Const => {
            joint.resolve(x)?;
            entropy(joint, &[y])
        }
        PredictiveFamily::Partition { partitions } => {
            let (t, names) = coarsen(joint, partitions, x)?;
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            conditional_entropy(&t, &[y], &names)
        }
        PredictiveFamily::LinearSoftmax { feature_map, budget } => fit_linear(joint, y, x, *feature_map, budget),
    }
}

fn tolerance(family: &PredictiveFamily) -> f64 {
    match family {
        PredictiveFamily::LinearSoftmax { budget, .. } => budget.tol.max(1e-10),
        _ => 1e-10,
    }
}

fn clamp_difference(family: &PredictiveFamily, v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -tolerance(family) {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("V-information came out negative: {v}")))
    }
}

/// `I_V(x -> y) = H_V(y | ∅) - H_V(y | x)`.
pub fn v_information(family: &PredictiveFamily, joint: &JointTable, x: &[&str], y: &str) -> Result<f64> {
    let h0 = v_conditional_entropy(family, joint, y, &[])?;
    let h1 = v_conditional_entropy(family, joint, y, x)?;
    clamp_difference(family, h0 - h1)
}

/// `H_V(y | x) - H_V(y | x ⊗ c)`.
pub fn v_conditional_information(
    family: &PredictiveFamily,
    joint: &JointTable,
    c: &str,
    y: &str,
    x: &[&str],
) -> Result<f64> {
    crate::info::check_disjoint(&[&[c], &[y], x])?;
    let mut with: Vec<&str> = x.to_vec();
    with.push(c);
    let h0 = v_conditional_entropy(family, joint, y, x)?;
    let h1 = v_conditional_entropy(family, joint, y, &with)?;
    clamp_difference(family, h0 - h1)
}
