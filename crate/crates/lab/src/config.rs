//! Strict JSON experiment configs.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use synergy_core::additive::{additive_joint, parse_rational, AdditiveModel, Rational};
use synergy_core::causal::{ColliderModel, ModelSizes};
use synergy_core::encoder::DEFAULT_ENCODER_CAP;
use synergy_core::estimator::TrainConfig;
use synergy_core::vinfo::PredictiveFamily;
use synergy_core::zoo::{ToyDatasetSpec, DEFAULT_RELEVANCE_FRACTION};
use synergy_core::{instances, vars, Alphabet, JointTable};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Additive,
    SweepLambda,
    SweepNa,
    Zoo,
    ExplainAway,
    Encoders,
    BoundCheck,
    Vinfo,
    Estimate,
    Controlled,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Additive,
        Experiment::SweepLambda,
        Experiment::SweepNa,
        Experiment::Zoo,
        Experiment::ExplainAway,
        Experiment::Encoders,
        Experiment::BoundCheck,
        Experiment::Vinfo,
        Experiment::Estimate,
        Experiment::Controlled,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Additive => "additive",
            Experiment::SweepLambda => "sweep-lambda",
            Experiment::SweepNa => "sweep-na",
            Experiment::Zoo => "zoo",
            Experiment::ExplainAway => "explain-away",
            Experiment::Encoders => "encoders",
            Experiment::BoundCheck => "bound-check",
            Experiment::Vinfo => "vinfo",
            Experiment::Estimate => "estimate",
            Experiment::Controlled => "controlled",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// The on-disk config document.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    #[serde(default)]
    pub parameters: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Decode the parameter map into the experiment's typed parameters.
    pub fn parameters<T: DeserializeOwned>(&self) -> Result<T, LabError> {
        serde_json::from_value(serde_json::Value::Object(self.parameters.clone()))
            .map_err(|e| LabError::Config(format!("parameters: {e}")))
    }
}

/// A rational given as a JSON integer, decimal or `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum RationalInput {
    Int(u64),
    Float(f64),
    Text(String),
}

impl RationalInput {
    pub fn value(&self) -> Result<Rational, LabError> {
        let text = match self {
            RationalInput::Int(i) => i.to_string(),
            RationalInput::Float(f) => f.to_string(),
            RationalInput::Text(s) => s.clone(),
        };
        Ok(parse_rational(&text)?)
    }
}

impl Default for RationalInput {
    fn default() -> Self {
        RationalInput::Int(1)
    }
}

/// A named toy joint.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    Xor {},
    Parity {},
    TwoChannel {},
    TwoAugmentation {},
    ACopy {},
    DirectConcat {
        n_a: usize,
        n_c: usize,
    },
    Additive {
        n_a: u32,
        n_c: u32,
        #[serde(default)]
        lambda: RationalInput,
    },
}

impl InstanceSpec {
    pub fn label(&self) -> String {
        match self {
            InstanceSpec::Xor {} => "xor".into(),
            InstanceSpec::Parity {} => "parity".into(),
            InstanceSpec::TwoChannel {} => "two_channel".into(),
            InstanceSpec::TwoAugmentation {} => "two_augmentation".into(),
            InstanceSpec::ACopy {} => "a_copy".into(),
            InstanceSpec::DirectConcat { n_a, n_c } => format!("direct_concat({n_a},{n_c})"),
            InstanceSpec::Additive { n_a, n_c, lambda } => {
                let l = lambda.value().map(|r| synergy_core::additive::format_rational(&r)).unwrap_or_default();
                format!("additive({n_a},{n_c},{l})")
            }
        }
    }

    /// The joint; instances with two actions also get `A = (A1, A2)`.
    pub fn build(&self) -> Result<JointTable, LabError> {
        let t = match self {
            InstanceSpec::Xor {} => instances::xor()?,
            InstanceSpec::Parity {} => instances::parity()?,
            InstanceSpec::TwoChannel {} => instances::two_channel()?,
            InstanceSpec::TwoAugmentation {} => instances::two_augmentation()?,
            InstanceSpec::ACopy {} => instances::a_copy()?,
            InstanceSpec::DirectConcat { n_a, n_c } => instances::direct_concat(*n_a, *n_c)?,
            InstanceSpec::Additive { n_a, n_c, lambda } => {
                additive_joint(&AdditiveModel::with_lambda(*n_a, *n_c, lambda.value()?)?)?
            }
        };
        if t.contains(vars::ACTION) || !(t.contains("A1") && t.contains("A2")) {
            return Ok(t);
        }
        let (i1, i2) = (t.var_index("A1")?, t.var_index("A2")?);
        let n2 = t.alphabet("A2")?.size();
        let n = t.alphabet("A1")?.size() * n2;
        Ok(t.extend_with(Alphabet::indexed(vars::ACTION, n)?, |i| i[i1] * n2 + i[i2])?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdditiveParams {
    pub n_a: u32,
    pub n_c: u32,
    pub lambda: RationalInput,
}

impl Default for AdditiveParams {
    fn default() -> Self {
        AdditiveParams { n_a: 3, n_c: 3, lambda: RationalInput::Int(1) }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepLambdaParams {
    pub n_a: u32,
    pub n_c: u32,
    pub grid: Vec<RationalInput>,
}

impl Default for SweepLambdaParams {
    fn default() -> Self {
        let grid = ["1/3", "1/2", "2/3", "1", "3/2", "2", "3"].map(|s| RationalInput::Text(s.into())).to_vec();
        SweepLambdaParams { n_a: 3, n_c: 3, grid }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepNaParams {
    pub n_c: u32,
    /// Explicit `n_a` values; otherwise `n_c..=n_a_max`.
    pub n_a: Option<Vec<u32>>,
    pub n_a_max: u32,
}

impl Default for SweepNaParams {
    fn default() -> Self {
        SweepNaParams { n_c: 3, n_a: None, n_a_max: 24 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZooParams {
    pub dataset: ToyDatasetSpec,
    /// Family names; all nine by default.
    pub families: Option<Vec<String>>,
    pub relevance_fraction: f64,
}

impl Default for ZooParams {
    fn default() -> Self {
        ZooParams { dataset: ToyDatasetSpec::default(), families: None, relevance_fraction: DEFAULT_RELEVANCE_FRACTION }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainAwayParams {
    pub sizes: ModelSizes,
    pub models: u64,
    pub concentration: f64,
    /// A fully specified model; replaces the random ones.
    pub model: Option<ColliderModel>,
}

impl Default for ExplainAwayParams {
    fn default() -> Self {
        ExplainAwayParams { sizes: ModelSizes::new(2, 2, 2, 4), models: 1000, concentration: 1.0, model: None }
    }
}

fn default_instance() -> InstanceSpec {
    InstanceSpec::Additive { n_a: 4, n_c: 3, lambda: RationalInput::Int(1) }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodersParams {
    pub instance: InstanceSpec,
    /// Size of the representation alphabet; `|X|` when absent.
    pub codomain: Option<usize>,
    pub cap: u64,
    /// Draw this many random encoders instead of enumerating.
    pub sample: Option<usize>,
}

impl Default for EncodersParams {
    fn default() -> Self {
        EncodersParams { instance: default_instance(), codomain: Some(3), cap: DEFAULT_ENCODER_CAP, sample: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VinfoParams {
    pub instance: InstanceSpec,
    pub family: PredictiveFamily,
    pub y: String,
    pub x: Vec<String>,
    /// Extra side variable for the conditional quantity.
    pub given: Option<String>,
}

impl Default for VinfoParams {
    fn default() -> Self {
        VinfoParams {
            instance: InstanceSpec::Xor {},
            family: PredictiveFamily::Full,
            y: vars::ACTION.into(),
            x: vec![vars::OBSERVED.into()],
            given: Some(vars::CLASS.into()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    pub instance: InstanceSpec,
    pub train: TrainConfig,
    /// Independent runs with seeds `seed, seed + 1, ...`.
    pub runs: u64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        EstimateParams { instance: InstanceSpec::Xor {}, train: TrainConfig::default(), runs: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlledParams {
    pub dataset: ToyDatasetSpec,
    pub family: String,
    pub variants: Option<Vec<String>>,
    pub train: TrainConfig,
}

impl Default for ControlledParams {
    fn default() -> Self {
        ControlledParams {
            dataset: ToyDatasetSpec::default(),
            family: "rotation4".into(),
            variants: None,
            train: TrainConfig::controlled(),
        }
    }
}
