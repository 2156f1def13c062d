//! One function per experiment, each producing ordered report rows.

use rayon::prelude::*;
use synergy_core::additive::{
    action_space_sweep, additive_lower_bound, format_rational, lambda_sweep, synergy_routes, AdditiveModel,
};
use synergy_core::causal::{build_collider_joint, check_explaining_away, sample_random_model};
use synergy_core::encoder::{apply_encoder, enumerate_encoders, generalization_bound_report, sample_encoders, sweep_encoder, Encoder};
use synergy_core::estimator::{controlled_experiment, estimate_synergy_variational, Mode, Variant};
use synergy_core::vinfo::{v_conditional_entropy, v_conditional_information, v_information, PredictiveFamily};
use synergy_core::zoo::{build_toy_dataset, zoo_rows, TransformFamily};
use synergy_core::{conditional_entropy, conditional_mutual_information, entropy, mutual_information, vars, Alphabet, JointTable};

use crate::config::*;
use crate::report::{PlotSpec, ReportRow};
use crate::LabError;

/// Rows plus, for sweeps, how to plot them.
#[derive(Debug, Clone)]
pub struct Output {
    pub rows: Vec<ReportRow>,
    pub plot: Option<PlotSpec>,
}

impl Output {
    fn table(rows: Vec<ReportRow>) -> Self {
        Output { rows, plot: None }
    }
}

pub fn run_experiment(experiment: Experiment, config: &ExperimentConfig) -> Result<Output, LabError> {
    if let Some(name) = &config.experiment {
        if name != experiment.name() {
            return Err(LabError::Usage(format!(
                "config is for `{name}` but the `{}` subcommand was given",
                experiment.name()
            )));
        }
    }
    match experiment {
        Experiment::Additive => additive(config.parameters()?),
        Experiment::SweepLambda => sweep_lambda(config.parameters()?),
        Experiment::SweepNa => sweep_na(config.parameters()?),
        Experiment::Zoo => zoo(config.parameters()?, config.seed),
        Experiment::ExplainAway => explain_away(config.parameters()?, config.seed),
        Experiment::Encoders => encoders(config.parameters()?, config.seed),
        Experiment::BoundCheck => bound_check(config.parameters()?, config.seed),
        Experiment::Vinfo => vinfo(config.parameters()?),
        Experiment::Estimate => estimate(config.parameters()?, config.seed),
        Experiment::Controlled => controlled(config.parameters()?, config.seed),
    }
}

const AGREE: f64 = 1e-10;

fn additive(p: AdditiveParams) -> Result<Output, LabError> {
    let model = AdditiveModel::with_lambda(p.n_a, p.n_c, p.lambda.value()?)?;
    let routes = synergy_routes(&model)?;
    let exact = synergy_core::additive::additive_synergy_exact(&model)?;
    let bound = if p.n_a >= p.n_c { Some(additive_lower_bound(p.n_a, p.n_c)?) } else { None };
    let mut row = ReportRow::new("additive")
        .int("n_a", p.n_a)
        .int("n_c", p.n_c)
        .text("lambda", format_rational(&model.lambda()))
        .nats("h_x", routes.h_x)
        .nats("synergy_exact", exact)
        .nats("synergy_enumerated", routes.enumerated)
        .nats("synergy_closed_form", routes.closed_form)
        .verdict("routes_agree", (routes.enumerated - routes.closed_form).abs() <= AGREE);
    row = match bound {
        Some(b) => row.nats("lower_bound", b).verdict("bound_holds", b <= exact + AGREE),
        None => row.with("lower_bound", crate::report::Value::Missing),
    };
    Ok(Output::table(vec![row]))
}

fn sweep_lambda(p: SweepLambdaParams) -> Result<Output, LabError> {
    let grid = p.grid.iter().map(RationalInput::value).collect::<Result<Vec<_>, _>>()?;
    let s = lambda_sweep(p.n_a, p.n_c, &grid)?;
    let argmax: Vec<String> = s.argmax.iter().map(format_rational).collect();
    let balanced = p.n_a == p.n_c;
    let rows = s
        .points
        .iter()
        .map(|pt| {
            let row = ReportRow::new("sweep-lambda")
                .int("n_a", p.n_a)
                .int("n_c", p.n_c)
                .text("lambda", format_rational(&pt.lambda))
                .num("lambda_value", *pt.lambda.numer() as f64 / *pt.lambda.denom() as f64)
                .nats("h_x", pt.h_x)
                .nats("synergy", pt.synergy)
                .flag("is_argmax", s.argmax.contains(&pt.lambda))
                .text("argmax_lambda", argmax.join(" "));
            if balanced {
                row.verdict("balanced_mixing_optimal", s.argmax_contains_one())
            } else {
                row
            }
        })
        .collect();
    Ok(Output { rows, plot: Some(PlotSpec { x: "lambda_value", ys: vec!["synergy", "h_x"], group: None }) })
}

fn sweep_na(p: SweepNaParams) -> Result<Output, LabError> {
    let values: Vec<u32> = p.n_a.clone().unwrap_or_else(|| (p.n_c..=p.n_a_max).collect());
    let rows = action_space_sweep(p.n_c, &values)?;
    let out = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let increasing = i == 0 || r.bound > rows[i - 1].bound || r.n_a <= rows[i - 1].n_a;
            ReportRow::new("sweep-na")
                .int("n_a", r.n_a)
                .int("n_c", p.n_c)
                .nats("exact", r.exact)
                .nats("bound", r.bound)
                .nats("slack", r.exact - r.bound)
                .verdict("bound_below_exact", r.bound <= r.exact + AGREE)
                .verdict("bound_increasing", increasing)
        })
        .collect();
    Ok(Output { rows: out, plot: Some(PlotSpec { x: "n_a", ys: vec!["exact", "bound"], group: None }) })
}

fn zoo(p: ZooParams, seed: u64) -> Result<Output, LabError> {
    let ds = build_toy_dataset(&p.dataset, seed)?;
    let families: Vec<TransformFamily> = match &p.families {
        Some(names) => names.iter().map(|n| TransformFamily::from_name(n)).collect::<Result<_, _>>()?,
        None => TransformFamily::ZOO.iter().copied().chain([TransformFamily::Instance]).collect(),
    };
    let rows = families
        .par_iter()
        .map(|f| zoo_rows(&ds, std::slice::from_ref(f), p.relevance_fraction))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = rows
        .into_iter()
        .flatten()
        .map(|r| {
            let rep = r.report;
            ReportRow::new("zoo")
                .text("family", r.family)
                .int("action_space", r.action_space)
                .nats("h_a", rep.h_a)
                .nats("h_a_given_x", rep.h_a_given_x)
                .nats("h_a_given_xc", rep.h_a_given_xc)
                .nats("synergy", rep.synergy)
                .flag("lossy", rep.lossy)
                .flag("class_relevant", rep.class_relevant)
                .verdict("synergy_is_entropy_drop", (rep.synergy - (rep.h_a_given_x - rep.h_a_given_xc)).abs() <= AGREE)
        })
        .collect();
    Ok(Output::table(rows))
}

fn explain_away_row(model_seed: Option<u64>, joint: &JointTable) -> Result<ReportRow, LabError> {
    let e = check_explaining_away(joint)?;
    let row = ReportRow::new("explain-away");
    let row = match model_seed {
        Some(s) => row.int("model_seed", s),
        None => row.with("model_seed", crate::report::Value::Missing),
    };
    let row = row.nats("i_ac", e.i_ac).nats("i_ac_given_x", e.i_ac_given_x);
    let row = match e.i_ac_given_z {
        Some(z) => row.nats("i_ac_given_z", z),
        None => row.with("i_ac_given_z", crate::report::Value::Missing),
    };
    Ok(row.flag("explains_away", e.verdict).verdict("marginal_independence", e.i_ac <= AGREE))
}

fn explain_away(p: ExplainAwayParams, seed: u64) -> Result<Output, LabError> {
    if let Some(model) = &p.model {
        return Ok(Output::table(vec![explain_away_row(None, &build_collider_joint(model)?)?]));
    }
    if p.models == 0 {
        return Err(LabError::Usage("models must be at least 1".into()));
    }
    let rows = (0..p.models)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let model = sample_random_model(p.sizes, s, p.concentration)?;
            explain_away_row(Some(s), &build_collider_joint(&model)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Output { rows, plot: Some(PlotSpec { x: "model_seed", ys: vec!["i_ac_given_x"], group: None }) })
}

/// Encoders with their index, enumerated in order or sampled.
fn encoder_list(joint: &JointTable, p: &EncodersParams, seed: u64) -> Result<Vec<(u64, Encoder)>, LabError> {
    let x = joint.alphabet(vars::OBSERVED)?.clone();
    let z = Alphabet::indexed(vars::REPR, p.codomain.unwrap_or(x.size()))?;
    Ok(match p.sample {
        Some(n) => (0..).zip(sample_encoders(&x, &z, n, seed)).collect(),
        None => enumerate_encoders(&x, &z, p.cap)?.collect(),
    })
}

fn map_text(enc: &Encoder) -> String {
    enc.map().iter().map(|&j| enc.codomain().symbols()[j].as_str()).collect::<Vec<_>>().join(" ")
}

fn encoders(p: EncodersParams, seed: u64) -> Result<Output, LabError> {
    let joint = p.instance.build()?;
    let list = encoder_list(&joint, &p, seed)?;
    let label = p.instance.label();
    let rows = list
        .par_iter()
        .map(|(i, enc)| {
            let r = sweep_encoder(&joint, *i, enc)?;
            let mut row = ReportRow::new("encoders")
                .text("instance", label.clone())
                .int("encoder_index", r.encoder_index)
                .text("map", map_text(enc))
                .nats("i_a_z", r.gain.i_a_z)
                .nats("i_a_ztilde", r.gain.i_a_ztilde)
                .nats("gain", r.gain.gain)
                .nats("i_ac_given_z", r.gain.i_ac_given_z)
                .nats("joint_cmi", r.joint_cmi)
                .verdict("gain_identity", r.gain.identity_holds())
                .verdict("strict_gain", r.gain.strict().unwrap_or(true))
                .verdict("class_monotone", r.gain.class_monotone())
                .verdict("proof_bound", r.bound.proof_holds)
                .verdict("data_processing", r.bound.data_processing_holds());
            if let Some(m) = &r.multivariate {
                row = row
                    .nats("cmi_a1", m.cmi_a1)
                    .nats("cmi_a2", m.cmi_a2)
                    .verdict("multivariate_monotone", m.monotone() && m.chain_rule_holds());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    Ok(Output { rows, plot: Some(PlotSpec { x: "encoder_index", ys: vec!["gain", "i_ac_given_z"], group: None }) })
}

fn bound_check(p: EncodersParams, seed: u64) -> Result<Output, LabError> {
    let joint = p.instance.build()?;
    let list = encoder_list(&joint, &p, seed)?;
    let label = p.instance.label();
    let rows = list
        .par_iter()
        .map(|(i, enc)| {
            let b = generalization_bound_report(&apply_encoder(&joint, enc)?)?;
            Ok(ReportRow::new("bound-check")
                .text("instance", label.clone())
                .int("encoder_index", *i)
                .text("map", map_text(enc))
                .nats("i_z_a", b.i_z_a)
                .nats("i_z_c", b.i_z_c)
                .nats("i_x_a_given_c", b.i_x_a_given_c)
                .nats("stated_rhs", b.stated_rhs)
                .nats("proof_rhs", b.proof_rhs)
                .flag("stated_holds", b.stated_holds)
                .verdict("proof_bound", b.proof_holds)
                .verdict("data_processing", b.data_processing_holds()))
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    Ok(Output { rows, plot: Some(PlotSpec { x: "encoder_index", ys: vec!["i_z_a", "proof_rhs", "stated_rhs"], group: None }) })
}

fn family_kind(f: &PredictiveFamily) -> &'static str {
    match f {
        PredictiveFamily::Full => "full",
        PredictiveFamily::Const => "const",
        PredictiveFamily::Partition { .. } => "partition",
        PredictiveFamily::LinearSoftmax { .. } => "linear_softmax",
    }
}

fn vinfo(p: VinfoParams) -> Result<Output, LabError> {
    let joint = p.instance.build()?;
    let x: Vec<&str> = p.x.iter().map(String::as_str).collect();
    let y = p.y.as_str();
    let tol = match &p.family {
        PredictiveFamily::LinearSoftmax { budget, .. } => budget.tol,
        _ => 1e-10,
    };
    let h_v = v_conditional_entropy(&p.family, &joint, y, &x)?;
    let h = if x.is_empty() { entropy(&joint, &[y])? } else { conditional_entropy(&joint, &[y], &x)? };
    let mut row = ReportRow::new("vinfo")
        .text("instance", p.instance.label())
        .text("family", family_kind(&p.family))
        .text("y", y)
        .text("x", p.x.join(" "))
        .nats("h_v", h_v)
        .nats("h_shannon", h)
        .verdict("dominates_shannon", h_v >= h - tol);
    if !x.is_empty() {
        row = row
            .nats("i_v", v_information(&p.family, &joint, &x, y)?)
            .nats("i_shannon", mutual_information(&joint, &x, &[y])?);
    }
    if let Some(c) = &p.given {
        row = row
            .text("given", c.clone())
            .nats("i_v_conditional", v_conditional_information(&p.family, &joint, c, y, &x)?)
            .nats("i_shannon_conditional", conditional_mutual_information(&joint, &[y], &[c.as_str()], &x)?);
    }
    Ok(Output::table(vec![row]))
}

fn estimate(p: EstimateParams, seed: u64) -> Result<Output, LabError> {
    if p.runs == 0 {
        return Err(LabError::Usage("runs must be at least 1".into()));
    }
    let joint = p.instance.build()?;
    let h_without = conditional_entropy(&joint, &[vars::ACTION], &[vars::OBSERVED])?;
    let h_with = conditional_entropy(&joint, &[vars::ACTION], &[vars::OBSERVED, vars::CLASS])?;
    let label = p.instance.label();
    let rows = (0..p.runs)
        .into_par_iter()
        .map(|i| {
            let cfg = synergy_core::estimator::TrainConfig { seed: seed.wrapping_add(i), ..p.train };
            let e = estimate_synergy_variational(&joint, &cfg)?;
            let row = ReportRow::new("estimate")
                .text("instance", label.clone())
                .int("seed", cfg.seed)
                .text("mode", match cfg.mode {
                    Mode::Population => "population".to_string(),
                    Mode::Sampled { n } => format!("sampled({n})"),
                })
                .nats("i_hat", e.i_hat)
                .nats("ce_without", e.ce_without)
                .nats("ce_with", e.ce_with)
                .nats("exact", e.exact)
                .nats("error", e.i_hat - e.exact);
            // Only population fits are bounded by the population entropies.
            Ok(if cfg.mode == Mode::Population {
                row.verdict("variational_dominance", e.ce_without >= h_without - 1e-9 && e.ce_with >= h_with - 1e-9)
            } else {
                row
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    Ok(Output::table(rows))
}

fn controlled(p: ControlledParams, seed: u64) -> Result<Output, LabError> {
    let ds = build_toy_dataset(&p.dataset, seed)?;
    let family = TransformFamily::from_name(&p.family)?;
    let variants: Vec<Variant> = match &p.variants {
        Some(names) => names.iter().map(|n| Variant::from_name(n)).collect::<Result<_, _>>()?,
        None => Variant::ALL.to_vec(),
    };
    let cfg = synergy_core::estimator::TrainConfig { seed, ..p.train };
    let results = variants
        .par_iter()
        .map(|&v| controlled_experiment(&ds, family, v, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = results
        .iter()
        .flat_map(|r| {
            r.curve.iter().map(|pt| {
                ReportRow::new("controlled")
                    .text("variant", r.variant.name())
                    .int("step", pt.step)
                    .nats("loss_equiv", pt.loss_equiv)
                    .nats("loss_cls", pt.loss_cls)
                    .num("acc_equiv", pt.acc_equiv)
                    .num("acc_cls", pt.acc_cls)
            })
        })
        .collect();
    Ok(Output {
        rows,
        plot: Some(PlotSpec { x: "step", ys: vec!["acc_equiv", "loss_equiv"], group: Some("variant") }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Value;

    fn run(e: Experiment, json: &str) -> Output {
        run_experiment(e, &ExperimentConfig::parse(json).unwrap()).unwrap()
    }

    fn nats(r: &ReportRow, f: &str) -> f64 {
        match r.get(f) {
            Some(Value::Nats(x)) => *x,
            other => panic!("{f}: {other:?}"),
        }
    }

    #[test]
    fn additive_row() {
        let o = run(Experiment::Additive, r#"{"parameters": {"n_a": 3, "n_c": 3, "lambda": 1}}"#);
        let closed = 4.0 / 9.0 * std::f64::consts::LN_2 + 3f64.ln() / 3.0;
        assert!((nats(&o.rows[0], "synergy_exact") - closed).abs() < 1e-12);
        assert!(o.rows[0].failures().is_empty());
    }

    #[test]
    fn sweep_lambda_argmax() {
        let o = run(Experiment::SweepLambda, r#"{"parameters": {"grid": [1, 2, 3]}}"#);
        assert_eq!(o.rows.len(), 3);
        assert_eq!(o.rows[0].get("argmax_lambda"), Some(&Value::Text("1".into())));
    }

    #[test]
    fn zoo_direct_concat() {
        let o = run(Experiment::Zoo, r#"{"parameters": {"families": ["direct_concat"]}}"#);
        assert_eq!(nats(&o.rows[0], "synergy"), 0.0);
        assert!(o.rows[0].failures().is_empty());
    }

    #[test]
    fn mismatched_experiment_is_usage_error() {
        let c = ExperimentConfig::parse(r#"{"experiment": "zoo"}"#).unwrap();
        assert!(matches!(run_experiment(Experiment::Additive, &c), Err(LabError::Usage(_))));
    }

    #[test]
    fn encoder_rows_are_in_index_order() {
        let o = run(Experiment::Encoders, r#"{"parameters": {"instance": {"name": "xor"}, "codomain": 2}}"#);
        let idx: Vec<&Value> = o.rows.iter().map(|r| r.get("encoder_index").unwrap()).collect();
        assert_eq!(idx, (0..4).map(Value::Int).collect::<Vec<_>>().iter().collect::<Vec<_>>());
    }

    #[test]
    fn xor_bound_check_reports_stated_violation() {
        let o = run(Experiment::BoundCheck, r#"{"parameters": {"instance": {"name": "xor"}}}"#);
        assert!(o.rows.iter().all(|r| r.failures().is_empty()));
        assert!(o.rows.iter().any(|r| r.get("stated_holds") == Some(&Value::Bool(false))));
    }
}
