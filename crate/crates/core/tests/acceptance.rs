//! End-to-end acceptance checks. One PASS/FAIL line per criterion.
//!
//! Failures are reported, not hidden. The process exits non-zero on any
//! failure only when `ACCEPTANCE_STRICT=1` is set.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synergy_core::additive::{
    action_space_sweep, additive_joint, additive_lower_bound, additive_synergy_exact, lambda_sweep, synergy_routes,
    AdditiveModel, Rational,
};
use synergy_core::causal::{build_collider_joint, check_explaining_away, random_joint, sample_random_model, ModelSizes};
use synergy_core::encoder::{
    apply_encoder, class_feature_gain, enumerate_encoders, generalization_bound_report, multivariate_decomposition,
    ClassFeatureMap, DEFAULT_ENCODER_CAP,
};
use synergy_core::estimator::{
    concat_readout, controlled_experiment, estimate_synergy_variational, gradient_check, FeatureMap, Mode,
    SoftmaxPredictor, TrainConfig, Variant,
};
use synergy_core::instances;
use synergy_core::vinfo::{v_conditional_entropy, PredictiveFamily, VariablePartition};
use synergy_core::zoo::{apply_transform_family, build_toy_dataset, zoo_rows, ToyDatasetSpec, TransformFamily};
use synergy_core::{conditional_entropy, conditional_mutual_information, vars, Alphabet, JointTable};

const LN2: f64 = std::f64::consts::LN_2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ln3() -> f64 {
    3f64.ln()
}

fn synergy(n_a: u32, n_c: u32, num: u64, den: u64) -> f64 {
    additive_synergy_exact(&AdditiveModel::new(n_a, n_c, num, den).unwrap()).unwrap()
}

/// `H(X)` of the sum of independent uniforms, by direct counting.
fn sum_entropy(n_a: u64, n_c: u64, num: u64, den: u64) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for a in 0..n_a {
        for c in 0..n_c {
            *counts.entry(a * den + num * c).or_insert(0u64) += 1;
        }
    }
    let n = (n_a * n_c) as f64;
    counts.values().map(|&k| -(k as f64 / n) * (k as f64 / n).ln()).sum()
}

fn additive_exactness() -> Outcome {
    // synergy = ln n_a + ln n_c - H(X) because X determines C given A and vice versa.
    let cases: [(u32, u32, u64, f64, f64, f64); 4] = [
        (2, 2, 1, 0.5 * LN2, 0.346573590, 1e-9),
        (3, 3, 1, 4.0 / 9.0 * LN2 + ln3() / 3.0, 0.674270021, 1e-7),
        (3, 3, 2, 4.0 / 9.0 * LN2, 0.308065527, 1e-7),
        (3, 3, 3, 0.0, 0.0, 1e-12),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (n_a, n_c, lam, closed, printed, tol) in cases {
        let value = synergy(n_a, n_c, lam, 1);
        let counted = (n_a as f64).ln() + (n_c as f64).ln() - sum_entropy(n_a.into(), n_c.into(), lam, 1);
        let routes = synergy_routes(&AdditiveModel::new(n_a, n_c, lam, 1).unwrap()).unwrap();
        ok &= (value - closed).abs() <= tol
            && (value - counted).abs() <= 1e-12
            && (routes.enumerated - routes.closed_form).abs() <= 1e-12;
        if (printed - closed).abs() > tol {
            notes.push(format!(
                "({n_a},{n_c},{lam}) got {value:.10}, closed form {closed:.10}, listed decimal {printed} is off by {:.1e}",
                (printed - closed).abs()
            ));
        }
    }
    let detail = if notes.is_empty() {
        "all four values match closed form and enumeration".to_string()
    } else {
        format!("values match closed form and enumeration; {}", notes.join("; "))
    };
    outcome(ok, detail)
}

fn lambda_grid() -> Vec<Rational> {
    let pairs = [
        (1, 7), (1, 5), (1, 4), (1, 3), (2, 5), (1, 2), (2, 3), (3, 4), (4, 5), (1, 1),
        (5, 4), (4, 3), (3, 2), (5, 3), (2, 1), (5, 2), (3, 1), (7, 2), (4, 1), (6, 1),
    ];
    pairs.iter().map(|&(p, q)| Rational::new(p, q)).collect()
}

fn lambda_argmax() -> Outcome {
    let grid = lambda_grid();
    let mut bad = Vec::new();
    for n in 2..=8 {
        let s = lambda_sweep(n, n, &grid).unwrap();
        if !s.argmax_contains_one() {
            bad.push(n);
        }
    }
    outcome(bad.is_empty(), format!("{} grid points, n = 2..8, failing n: {bad:?}", grid.len()))
}

fn bound_sweep() -> Outcome {
    let mut ok = true;
    let mut worst_tight = 0.0f64;
    let mut rows_checked = 0;
    for n_c in 2..=8u32 {
        let n_a: Vec<u32> = (n_c..=24).collect();
        match action_space_sweep(n_c, &n_a) {
            Ok(rows) => {
                for w in rows.windows(2) {
                    ok &= w[1].bound > w[0].bound;
                }
                for r in &rows {
                    ok &= r.bound <= r.exact + 1e-10;
                    if n_c == 2 {
                        worst_tight = worst_tight.max((r.bound - r.exact).abs());
                    }
                }
                rows_checked += rows.len();
            }
            Err(_) => ok = false,
        }
    }
    ok &= worst_tight <= 1e-10;
    ok &= (additive_lower_bound(2, 2).unwrap() - 0.5 * LN2).abs() <= 1e-12;
    outcome(ok, format!("{rows_checked} (n_c, n_a) pairs; n_c = 2 tightness gap {worst_tight:.2e}"))
}

fn explaining_away() -> Outcome {
    let mut max_mi = 0.0f64;
    let mut positive = 0;
    for seed in 0..1000 {
        let model = sample_random_model(ModelSizes::new(2, 2, 2, 4), seed, 1.0).unwrap();
        let joint = build_collider_joint(&model).unwrap();
        let e = check_explaining_away(&joint).unwrap();
        max_mi = max_mi.max(e.i_ac);
        if e.i_ac_given_x > 1e-9 {
            positive += 1;
        }
    }
    outcome(max_mi <= 1e-10 && positive >= 999, format!("max I(A;C) = {max_mi:.2e}, I(A;C|X) > 1e-9 in {positive}/1000"))
}

fn direct_concatenation() -> Outcome {
    let ds = build_toy_dataset(&ToyDatasetSpec::default(), 0).unwrap();
    let joint = apply_transform_family(&ds, TransformFamily::DirectConcat).unwrap();
    let syn = conditional_mutual_information(&joint, &[vars::ACTION], &[vars::CLASS], &[vars::OBSERVED]).unwrap();
    let plain = instances::direct_concat(4, 4).unwrap();
    let plain_syn = conditional_mutual_information(&plain, &[vars::ACTION], &[vars::CLASS], &[vars::OBSERVED]).unwrap();
    let r = concat_readout(&ds, &TrainConfig::default()).unwrap();
    let ok = syn.abs() <= 1e-12
        && plain_syn.abs() <= 1e-12
        && r.equiv_accuracy == 1.0
        && (r.class_accuracy - r.chance).abs() <= 0.02;
    outcome(
        ok,
        format!(
            "synergy {syn:.1e}, readout equivariance accuracy {:.4}, class accuracy {:.4} (chance {:.4})",
            r.equiv_accuracy, r.class_accuracy, r.chance
        ),
    )
}

fn class_feature_identity() -> Outcome {
    let joint = additive_joint(&AdditiveModel::new(4, 3, 1, 1).unwrap()).unwrap();
    let x = joint.alphabet(vars::OBSERVED).unwrap().clone();
    let z = Alphabet::indexed(vars::REPR, 3).unwrap();
    let classes = joint.alphabet(vars::CLASS).unwrap().clone();
    let phi = ClassFeatureMap::identity(&classes);
    let (mut n, mut worst, mut strict_cases, mut strict_ok) = (0, 0.0f64, 0, true);
    for (_, enc) in enumerate_encoders(&x, &z, DEFAULT_ENCODER_CAP).unwrap() {
        let t = apply_encoder(&joint, &enc).unwrap();
        let g = class_feature_gain(&t, &phi).unwrap();
        worst = worst.max((g.gain - g.i_ac_given_z).abs());
        if g.i_ac_given_z > 1e-9 {
            strict_cases += 1;
            strict_ok &= g.i_a_ztilde > g.i_a_z;
        }
        n += 1;
    }
    outcome(
        n == 729 && worst <= 1e-10 && strict_ok,
        format!("{n} encoders, max identity residual {worst:.2e}, strict gain in {strict_cases} positive-CMI cases"),
    )
}

fn multivariate() -> Outcome {
    let p = instances::parity().unwrap();
    let joint = conditional_mutual_information(&p, &["A1", "A2"], &[vars::CLASS], &[vars::OBSERVED]).unwrap();
    let m1 = conditional_mutual_information(&p, &["A1"], &[vars::CLASS], &[vars::OBSERVED]).unwrap();
    let m2 = conditional_mutual_information(&p, &["A2"], &[vars::CLASS], &[vars::OBSERVED]).unwrap();
    let parity_ok = (joint - LN2).abs() <= 1e-10 && m1.abs() <= 1e-10 && m2.abs() <= 1e-10;

    let two = instances::two_augmentation().unwrap();
    let x = two.alphabet(vars::OBSERVED).unwrap().clone();
    let z = Alphabet::indexed(vars::REPR, 3).unwrap();
    let (mut n, mut violations) = (0, 0);
    for (_, enc) in enumerate_encoders(&x, &z, DEFAULT_ENCODER_CAP).unwrap() {
        let t = apply_encoder(&two, &enc).unwrap();
        let m = multivariate_decomposition(&t, "A1", "A2").unwrap();
        if !(m.monotone() && m.chain_rule_holds()) {
            violations += 1;
        }
        n += 1;
    }
    outcome(
        parity_ok && n == 729 && violations == 0,
        format!("parity joint {joint:.10}, marginals {m1:.1e}/{m2:.1e}; {n} encoders, {violations} monotonicity violations"),
    )
}

/// Adds `A = (A1, A2)` for instances that only carry the two parts.
fn with_pair(t: JointTable) -> JointTable {
    let (i1, i2) = (t.var_index("A1").unwrap(), t.var_index("A2").unwrap());
    let n2 = t.alphabet("A2").unwrap().size();
    let n = t.alphabet("A1").unwrap().size() * n2;
    t.extend_with(Alphabet::indexed(vars::ACTION, n).unwrap(), |i| i[i1] * n2 + i[i2]).unwrap()
}

fn bound_check() -> Outcome {
    let mut tables: Vec<(&str, JointTable)> = vec![
        ("xor", instances::xor().unwrap()),
        ("parity", with_pair(instances::parity().unwrap())),
        ("two_channel", with_pair(instances::two_channel().unwrap())),
        ("two_augmentation", instances::two_augmentation().unwrap()),
        ("a_copy", instances::a_copy().unwrap()),
        ("direct_concat(2,3)", instances::direct_concat(2, 3).unwrap()),
    ];
    for (n_a, n_c) in [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3)] {
        tables.push(("additive", additive_joint(&AdditiveModel::new(n_a, n_c, 1, 1).unwrap()).unwrap()));
    }
    let (mut checked, mut proof_fail, mut stated_fail) = (0u64, 0u64, 0u64);
    for (_, joint) in &tables {
        let x = joint.alphabet(vars::OBSERVED).unwrap().clone();
        assert!(x.size() <= 6);
        let z = Alphabet::indexed(vars::REPR, x.size()).unwrap();
        for (_, enc) in enumerate_encoders(&x, &z, DEFAULT_ENCODER_CAP).unwrap() {
            let r = generalization_bound_report(&apply_encoder(joint, &enc).unwrap()).unwrap();
            checked += 1;
            if r.i_z_a > r.i_z_c + r.i_x_a_given_c + 1e-10 || !r.proof_holds {
                proof_fail += 1;
            }
            if !r.stated_holds {
                stated_fail += 1;
            }
        }
    }
    let xor = instances::xor().unwrap();
    let id = synergy_core::encoder::Encoder::identity(xor.alphabet(vars::OBSERVED).unwrap());
    let r = generalization_bound_report(&apply_encoder(&xor, &id).unwrap()).unwrap();
    outcome(
        proof_fail == 0 && !r.stated_holds,
        format!(
            "{checked} encoders over {} instances, proof form violated {proof_fail} times; \
             subtracted form violated {stated_fail} times, on XOR with Z = X: I(Z;A) = {:.4} > {:.4}",
            tables.len(),
            r.i_z_a,
            r.stated_rhs
        ),
    )
}

fn variational() -> Outcome {
    let tables = [
        ("xor", instances::xor().unwrap()),
        ("direct_concat", instances::direct_concat(4, 4).unwrap()),
        ("additive(3,3,1)", additive_joint(&AdditiveModel::new(3, 3, 1, 1).unwrap()).unwrap()),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, joint) in &tables {
        let pop = estimate_synergy_variational(joint, &TrainConfig::default()).unwrap();
        let pop_err = (pop.i_hat - pop.exact).abs();
        let mut sampled: Vec<f64> = (0..20)
            .map(|seed| {
                let cfg = TrainConfig { mode: Mode::Sampled { n: 100_000 }, seed, ..TrainConfig::default() };
                estimate_synergy_variational(joint, &cfg).unwrap().i_hat
            })
            .collect();
        sampled.sort_by(f64::total_cmp);
        let median = 0.5 * (sampled[9] + sampled[10]);
        let med_err = (median - pop.exact).abs();
        ok &= pop_err <= 2e-3 && med_err <= 0.02;
        parts.push(format!("{name}: population error {pop_err:.1e}, sampled median error {med_err:.1e}"));
    }
    let mut worst = 0.0f64;
    for (_, joint) in &tables {
        for fm in [FeatureMap::JointOneHot, FeatureMap::ConcatOneHot] {
            let mut p = SoftmaxPredictor::new(joint, vars::ACTION, &[vars::OBSERVED, vars::CLASS], fm, true).unwrap();
            p.randomize(0.5, 7);
            worst = worst.max(gradient_check(&p, joint, 11).unwrap());
        }
    }
    ok &= worst <= 1e-4;
    parts.push(format!("gradient check max relative error {worst:.1e}"));
    outcome(ok, parts.join("; "))
}

fn controlled() -> Outcome {
    let ds = build_toy_dataset(&ToyDatasetSpec::default(), 0).unwrap();
    let cfg = TrainConfig::controlled();
    let run = |v| controlled_experiment(&ds, TransformFamily::Rotation4, v, &cfg);
    let acc: Vec<f64> = Variant::ALL.iter().map(|&v| run(v).map_or(f64::NAN, |r| r.equiv_accuracy)).collect();
    let repeat = run(Variant::MinusCls).ok().map(|r| r.curve);
    let deterministic = repeat.is_some() && repeat == run(Variant::MinusCls).ok().map(|r| r.curve);
    let (base, plus, minus) = (acc[0], acc[1], acc[2]);
    let ordered = plus >= base && base >= minus && plus - minus >= 0.02;
    outcome(
        ordered && deterministic,
        format!(
            "equivariance accuracy plus_cls {plus:.4}, baseline {base:.4}, minus_cls {minus:.4}, \
             gap {:.4}; deterministic {deterministic}",
            plus - minus
        ),
    )
}

/// Random partition of `0..n` into at most `k` non-empty blocks.
fn random_blocks(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..n {
        blocks[rng.random_range(0..k)].push(i);
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

fn partition(joint: &JointTable, var: &str, blocks: &[Vec<usize>]) -> PredictiveFamily {
    let symbols = joint.alphabet(var).unwrap().symbols();
    PredictiveFamily::Partition {
        partitions: vec![VariablePartition {
            variable: var.to_string(),
            blocks: blocks.iter().map(|b| b.iter().map(|&i| symbols[i].clone()).collect()).collect(),
        }],
    }
}

fn v_information() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_full = 0.0f64;
    let mut below = 0;
    for _ in 0..100 {
        let ny = rng.random_range(2..=4);
        let nx = rng.random_range(2..=6);
        let vars = vec![Alphabet::indexed("Y", ny).unwrap(), Alphabet::indexed("X", nx).unwrap()];
        let t = random_joint(vars, 1.0, &mut rng).unwrap();
        let h = conditional_entropy(&t, &["Y"], &["X"]).unwrap();
        let full = v_conditional_entropy(&PredictiveFamily::Full, &t, "Y", &["X"]).unwrap();
        worst_full = worst_full.max((full - h).abs());
        let fam = partition(&t, "X", &random_blocks(&mut rng, nx, 3));
        for f in [PredictiveFamily::Const, fam] {
            if v_conditional_entropy(&f, &t, "Y", &["X"]).unwrap() < h - 1e-12 {
                below += 1;
            }
        }
    }
    let mut chain_violations = 0;
    for _ in 0..100 {
        let nx = rng.random_range(3..=8);
        let vars = vec![Alphabet::indexed("Y", 3).unwrap(), Alphabet::indexed("X", nx).unwrap()];
        let t = random_joint(vars, 0.5, &mut rng).unwrap();
        // coarse -> fine chain: each level splits every block of the previous one
        let mut chain = vec![vec![(0..nx).collect::<Vec<usize>>()]];
        while chain.last().unwrap().len() < nx {
            let next: Vec<Vec<usize>> = chain
                .last()
                .unwrap()
                .iter()
                .flat_map(|b| {
                    if b.len() == 1 {
                        return vec![b.clone()];
                    }
                    let cut = rng.random_range(1..b.len());
                    vec![b[..cut].to_vec(), b[cut..].to_vec()]
                })
                .collect();
            chain.push(next);
        }
        let values: Vec<f64> =
            chain.iter().map(|p| v_conditional_entropy(&partition(&t, "X", p), &t, "Y", &["X"]).unwrap()).collect();
        let h = conditional_entropy(&t, &["Y"], &["X"]).unwrap();
        let ok = values.windows(2).all(|w| w[1] <= w[0] + 1e-12) && (values[values.len() - 1] - h).abs() <= 1e-10;
        if !ok {
            chain_violations += 1;
        }
    }
    outcome(
        worst_full <= 1e-10 && below == 0 && chain_violations == 0,
        format!(
            "full vs Shannon max gap {worst_full:.1e}; H_V < H in {below} cases; \
             refinement chains violating monotonicity {chain_violations}/100"
        ),
    )
}

const ZOO_SYNERGY: [(&str, f64); 9] = [
    ("rotation4", 0.823959216501),
    ("hflip", 0.0),
    ("vflip", 0.346573590280),
    ("grayscale", 0.0),
    ("invert", 0.0),
    ("jigsaw4", 0.0),
    ("blur4", 0.0),
    ("direct_concat", 0.0),
    ("instance", 0.823959216501),
];

fn zoo_regression() -> Outcome {
    let ds = build_toy_dataset(&ToyDatasetSpec::default(), 0).unwrap();
    let mut families: Vec<TransformFamily> = TransformFamily::ZOO.to_vec();
    families.push(TransformFamily::Instance);
    let a = zoo_rows(&ds, &families, 0.5).unwrap();
    let b = zoo_rows(&build_toy_dataset(&ToyDatasetSpec::default(), 0).unwrap(), &families, 0.5).unwrap();
    let mut worst = 0.0f64;
    let mut missing = Vec::new();
    for (name, expected) in ZOO_SYNERGY {
        match a.iter().find(|r| r.family == name) {
            Some(r) => worst = worst.max((r.report.synergy - expected).abs()),
            None => missing.push(name),
        }
    }
    let stable = a.iter().zip(&b).all(|(x, y)| x.report.synergy.to_bits() == y.report.synergy.to_bits());
    let syn = |n: &str| a.iter().find(|r| r.family == n).map_or(f64::NAN, |r| r.report.synergy);
    let ranking = ["rotation4", "vflip"]
        .iter()
        .all(|hi| ["grayscale", "hflip"].iter().all(|lo| syn(hi) > syn(lo)));
    outcome(
        worst <= 1e-10 && missing.is_empty() && stable && ranking,
        format!(
            "max deviation from shipped constants {worst:.1e}, bitwise stable {stable}, \
             rotation4 {:.6} and vflip {:.6} above grayscale {:.6} and hflip {:.6}",
            syn("rotation4"),
            syn("vflip"),
            syn("grayscale"),
            syn("hflip")
        ),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check, Duration); 12] = [
        ("additive model exact values", additive_exactness, Duration::from_secs(1)),
        ("lambda = 1 maximizes synergy on every grid", lambda_argmax, Duration::from_secs(10)),
        ("action-space lower bound", bound_sweep, Duration::from_secs(10)),
        ("explaining away on random collider models", explaining_away, Duration::from_secs(30)),
        ("direct concatenation has no synergy", direct_concatenation, Duration::from_secs(60)),
        ("class feature gain identity", class_feature_identity, Duration::from_secs(30)),
        ("multiple augmentations", multivariate, Duration::from_secs(60)),
        ("generalization bound", bound_check, Duration::from_secs(60)),
        ("variational estimator", variational, Duration::from_secs(120)),
        ("controlled experiment ordering", controlled, Duration::from_secs(120)),
        ("V-information", v_information, Duration::from_secs(60)),
        ("zoo regression and ranking", zoo_regression, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let timing = if took <= *budget { "" } else { " [over time budget]" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} ({:.2}s of {}s){timing}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
