use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synergy_core::additive::{additive_lower_bound, lambda_sweep, AdditiveModel, Rational};
use synergy_core::causal::{check_explaining_away, random_joint};
use synergy_core::encoder::{enumerate_encoders, Encoder};
use synergy_core::estimator::{fit_predictor, FeatureMap, TrainConfig};
use synergy_core::instances;
use synergy_core::vinfo::{v_information, PredictiveFamily};
use synergy_core::{entropy, interaction_information, vars, Alphabet, Error, JointTable};

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn interaction_examples() {
    let xor = instances::xor().unwrap();
    let v = interaction_information(&xor, &["A"], &["C"], &["X"]).unwrap();
    assert!((v + LN2).abs() < 1e-12);
    // A copied into C, B independent: I(A;C) = I(A;C|B) = ln 2
    let t = instances::a_copy().unwrap();
    assert!(interaction_information(&t, &["A"], &["C"], &["B"]).unwrap().abs() < 1e-12);
    let bits = vec![
        Alphabet::indexed("P", 2).unwrap(),
        Alphabet::indexed("Q", 2).unwrap(),
        Alphabet::indexed("R", 2).unwrap(),
    ];
    let indep = JointTable::new(bits, vec![0.125; 8]).unwrap();
    assert!(interaction_information(&indep, &["P"], &["Q"], &["R"]).unwrap().abs() < 1e-12);
}

#[test]
fn independence_iff_zero_v_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..200 {
        let nx = rng.random_range(2..=6);
        let ny = rng.random_range(2..=6);
        let t = if trial % 2 == 0 {
            random_joint(vec![Alphabet::indexed("X", nx).unwrap(), Alphabet::indexed("Y", ny).unwrap()], 1.0, &mut rng)
                .unwrap()
        } else {
            let px = random_joint(vec![Alphabet::indexed("X", nx).unwrap()], 1.0, &mut rng).unwrap();
            let py = random_joint(vec![Alphabet::indexed("Y", ny).unwrap()], 1.0, &mut rng).unwrap();
            px.product(&py).unwrap()
        };
        let iv = v_information(&PredictiveFamily::Full, &t, &["X"], "Y").unwrap();
        let independent = t.is_conditionally_independent(&["X"], &["Y"], &[], 1e-12).unwrap();
        assert_eq!(iv <= 1e-10, independent, "trial {trial}: I_V = {iv}");
    }
}

#[test]
fn bias_only_fit_recovers_marginal_entropy() {
    let t = synergy_core::additive::additive_joint(&AdditiveModel::new(3, 2, 1, 1).unwrap()).unwrap();
    let f = fit_predictor(&t, vars::OBSERVED, &[], FeatureMap::JointOneHot, &TrainConfig::default()).unwrap();
    let h = entropy(&t, &[vars::OBSERVED]).unwrap();
    assert!((f.final_ce - h).abs() <= 1e-6);
}

#[test]
fn reciprocal_lambdas_tie() {
    let grid = [Rational::new(1, 2), Rational::new(1, 1), Rational::new(2, 1)];
    let s = lambda_sweep(2, 2, &grid).unwrap();
    assert!((s.points[0].synergy - s.points[2].synergy).abs() < 1e-12);
    assert!(s.argmax_contains_one());
    assert!(matches!(lambda_sweep(2, 2, &grid[..1]), Err(Error::Usage(_))));
}

#[test]
fn bound_approaches_class_entropy() {
    let far = additive_lower_bound(1_000_000, 3).unwrap();
    assert!((far - 3f64.ln()).abs() < 1e-5);
    assert!(matches!(additive_lower_bound(2, 3), Err(Error::Domain(_))));
}

#[test]
fn encoder_counts_and_cap() {
    let dom = |n| Alphabet::indexed(vars::OBSERVED, n).unwrap();
    let cod = |n| Alphabet::indexed(vars::REPR, n).unwrap();
    assert_eq!(enumerate_encoders(&dom(2), &cod(2), 100).unwrap().count(), 4);
    assert_eq!(enumerate_encoders(&dom(3), &cod(2), 100).unwrap().count(), 8);
    assert_eq!(enumerate_encoders(&dom(4), &cod(4), 1000).unwrap().count(), 256);
    assert!(matches!(enumerate_encoders(&dom(4), &cod(4), 255), Err(Error::Resource(_))));
}

#[test]
fn explaining_away_on_named_instances() {
    let xor = check_explaining_away(&instances::xor().unwrap()).unwrap();
    assert!(xor.verdict && (xor.i_ac_given_x - LN2).abs() < 1e-12 && xor.i_ac_given_z.is_none());
    let concat = check_explaining_away(&instances::direct_concat(2, 2).unwrap()).unwrap();
    assert!(!concat.verdict);
    let x = instances::xor().unwrap();
    let z = synergy_core::encoder::apply_encoder(&x, &Encoder::identity(x.alphabet(vars::OBSERVED).unwrap())).unwrap();
    assert!((check_explaining_away(&z).unwrap().i_ac_given_z.unwrap() - LN2).abs() < 1e-12);
}
