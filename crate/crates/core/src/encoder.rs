//! Deterministic encoders `Z = F(X)` and the representation-level reports:
//! class-feature gain, the two-augmentation decomposition and the
//! generalization bound.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::info::{conditional_mutual_information, mutual_information};
use crate::{vars, Alphabet, Error, JointTable, Result, POSITIVE_TOL};

const IDENTITY_TOL: f64 = 1e-10;

/// Default bound on `|codomain|^|domain|` for exhaustive enumeration.
pub const DEFAULT_ENCODER_CAP: u64 = 10_000_000;

/// A total map from the symbols of `X` to the symbols of `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "EncoderRepr", into = "EncoderRepr")
)]
pub struct Encoder {
    domain: Alphabet,
    codomain: Alphabet,
    map: Vec<usize>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct EncoderRepr {
    domain: Alphabet,
    codomain: Alphabet,
    /// Image symbol of each domain symbol, in domain order.
    map: Vec<String>,
}

#[cfg(feature = "serde")]
impl TryFrom<EncoderRepr> for Encoder {
    type Error = Error;
    fn try_from(r: EncoderRepr) -> Result<Self> {
        let map = r
            .map
            .iter()
            .map(|s| {
                r.codomain
                    .index_of(s)
                    .ok_or_else(|| Error::UnknownName(format!("codomain symbol `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Encoder::new(r.domain, r.codomain, map)
    }
}

#[cfg(feature = "serde")]
impl From<Encoder> for EncoderRepr {
    fn from(e: Encoder) -> Self {
        let map = e.map.iter().map(|&j| e.codomain.symbols()[j].clone()).collect();
        EncoderRepr { domain: e.domain, codomain: e.codomain, map }
    }
}

impl Encoder {
    /// `map[i]` is the codomain index of domain symbol `i`.
    pub fn new(domain: Alphabet, codomain: Alphabet, map: Vec<usize>) -> Result<Self> {
        if map.len() != domain.size() {
            return Err(Error::Usage(format!(
                "encoder map has {} entries for a domain of size {}",
                map.len(),
                domain.size()
            )));
        }
        if let Some(&j) = map.iter().find(|&&j| j >= codomain.size()) {
            return Err(Error::Usage(format!("encoder image {j} outside the codomain")));
        }
        Ok(Encoder { domain, codomain, map })
    }

    /// `Z` a relabelled copy of `X`.
    pub fn identity(domain: &Alphabet) -> Self {
        Encoder {
            domain: domain.clone(),
            codomain: domain.renamed(vars::REPR),
            map: (0..domain.size()).collect(),
        }
    }

    /// Everything to one symbol.
    pub fn constant(domain: &Alphabet) -> Self {
        Encoder {
            domain: domain.clone(),
            codomain: Alphabet::indexed(vars::REPR, 1).expect("nonempty"),
            map: vec![0; domain.size()],
        }
    }

    pub fn domain(&self) -> &Alphabet {
        &self.domain
    }

    pub fn codomain(&self) -> &Alphabet {
        &self.codomain
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }
}

/// Extend `joint` with `Z = enc(X)`.
pub fn apply_encoder(joint: &JointTable, enc: &Encoder) -> Result<JointTable> {
    let xi = joint.var_index(vars::OBSERVED)?;
    if joint.variables()[xi].symbols() != enc.domain.symbols() {
        return Err(Error::Usage("encoder domain does not match the alphabet of X".into()));
    }
    joint.extend_with(enc.codomain.renamed(vars::REPR), |i| enc.map[i[xi]])
}

/// An invertible relabelling `φ` of the class symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFeatureMap {
    features: Alphabet,
    phi: Vec<usize>,
}

impl ClassFeatureMap {
    /// `phi[c]` is the feature index of class `c`; must be a permutation.
    pub fn new(features: Alphabet, phi: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; features.size()];
        if phi.len() != features.size() {
            return Err(Error::Usage("class feature map must be a bijection".into()));
        }
        for &f in &phi {
            if f >= seen.len() || seen[f] {
                return Err(Error::Usage("class feature map must be a bijection".into()));
            }
            seen[f] = true;
        }
        Ok(ClassFeatureMap { features: features.renamed(vars::CLASS_FEATURE), phi })
    }

    /// `Zc = C`.
    pub fn identity(classes: &Alphabet) -> Self {
        ClassFeatureMap {
            features: classes.renamed(vars::CLASS_FEATURE),
            phi: (0..classes.size()).collect(),
        }
    }

    pub fn phi(&self) -> &[usize] {
        &self.phi
    }
}

/// Effect of appending `Zc = φ(C)` to `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClassFeatureGain {
    pub i_a_z: f64,
    pub i_a_ztilde: f64,
    pub gain: f64,
    pub i_c_z: f64,
    pub i_c_ztilde: f64,
    /// `I(A;C|Z)`, which the gain must equal.
    pub i_ac_given_z: f64,
}

impl ClassFeatureGain {
    pub fn identity_holds(&self) -> bool {
        (self.gain - self.i_ac_given_z).abs() <= IDENTITY_TOL
    }

    /// Strict improvement; `None` when `I(A;C|Z)` is not positive.
    pub fn strict(&self) -> Option<bool> {
        (self.i_ac_given_z > POSITIVE_TOL).then_some(self.gain > 0.0)
    }

    pub fn class_monotone(&self) -> bool {
        self.i_c_ztilde >= self.i_c_z - IDENTITY_TOL
    }
}

/// [`class_feature_gain_for`] with the augmentation variable `A`.
pub fn class_feature_gain(joint: &JointTable, phi: &ClassFeatureMap) -> Result<ClassFeatureGain> {
    class_feature_gain_for(joint, phi, vars::ACTION)
}

/// Class-feature gain for the augmentation variable `action`.
pub fn class_feature_gain_for(
    joint: &JointTable,
    phi: &ClassFeatureMap,
    action: &str,
) -> Result<ClassFeatureGain> {
    use vars::{CLASS, CLASS_FEATURE, REPR};
    joint.resolve(&[action, CLASS, REPR])?;
    let ci = joint.var_index(CLASS)?;
    if joint.variables()[ci].size() != phi.phi.len() {
        return Err(Error::Usage("class feature map size differs from the class alphabet".into()));
    }
    let t = joint.extend_with(phi.features.clone(), |i| phi.phi[i[ci]])?;
    let i_a_z = mutual_information(&t, &[action], &[REPR])?;
    let i_a_ztilde = mutual_information(&t, &[action], &[REPR, CLASS_FEATURE])?;
    let i_c_z = mutual_information(&t, &[CLASS], &[REPR])?;
    let i_c_ztilde = mutual_information(&t, &[CLASS], &[REPR, CLASS_FEATURE])?;
    let i_ac_given_z = conditional_mutual_information(&t, &[action], &[CLASS], &[REPR])?;
    Ok(ClassFeatureGain {
        i_a_z,
        i_a_ztilde,
        gain: i_a_ztilde - i_a_z,
        i_c_z,
        i_c_ztilde,
        i_ac_given_z,
    })
}

/// Chain-rule split of `I(A1,A2;C|Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MultivariateReport {
    pub joint_cmi: f64,
    pub cmi_a1: f64,
    pub cmi_a2: f64,
    /// `I(A2;C|Z,A1)`.
    pub inc_a2_after_a1: f64,
    /// `I(A1;C|Z,A2)`.
    pub inc_a1_after_a2: f64,
    pub gain: f64,
}

impl MultivariateReport {
    pub fn monotone(&self) -> bool {
        self.joint_cmi >= self.cmi_a1.max(self.cmi_a2) - IDENTITY_TOL
    }

    pub fn chain_rule_holds(&self) -> bool {
        (self.joint_cmi - self.cmi_a1 - self.inc_a2_after_a1).abs() <= IDENTITY_TOL
            && (self.joint_cmi - self.cmi_a2 - self.inc_a1_after_a2).abs() <= IDENTITY_TOL
    }
}

pub fn multivariate_decomposition(joint: &JointTable, a1: &str, a2: &str) -> Result<MultivariateReport> {
    use vars::{CLASS, REPR};
    joint.resolve(&[a1, a2, CLASS, REPR])?;
    let c = &[CLASS][..];
    let joint_cmi = conditional_mutual_information(joint, &[a1, a2], c, &[REPR])?;
    let cmi_a1 = conditional_mutual_information(joint, &[a1], c, &[REPR])?;
    let cmi_a2 = conditional_mutual_information(joint, &[a2], c, &[REPR])?;
    let inc_a2_after_a1 = conditional_mutual_information(joint, &[a2], c, &[REPR, a1])?;
    let inc_a1_after_a2 = conditional_mutual_information(joint, &[a1], c, &[REPR, a2])?;
    Ok(MultivariateReport {
        joint_cmi,
        cmi_a1,
        cmi_a2,
        inc_a2_after_a1,
        inc_a1_after_a2,
        gain: inc_a2_after_a1.max(inc_a1_after_a2),
    })
}

/// Both readings of the generalization bound on `I(Z;A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundReport {
    pub i_z_a: f64,
    pub i_z_c: f64,
    pub i_x_a_given_c: f64,
    pub i_z_a_given_c: f64,
    /// `I(Z;C) - I(X;A|C)`.
    pub stated_rhs: f64,
    /// `I(Z;C) + I(X;A|C)`.
    pub proof_rhs: f64,
    pub stated_holds: bool,
    pub proof_holds: bool,
}

impl BoundReport {
    /// `I(Z;A|C) <= I(X;A|C)`.
    pub fn data_processing_holds(&self) -> bool {
        self.i_z_a_given_c <= self.i_x_a_given_c + IDENTITY_TOL
    }
}

pub fn generalization_bound_report(joint: &JointTable) -> Result<BoundReport> {
    use vars::{ACTION, CLASS, OBSERVED, REPR};
    joint.resolve(&[OBSERVED, REPR, ACTION, CLASS])?;
    let i_z_a = mutual_information(joint, &[REPR], &[ACTION])?;
    let i_z_c = mutual_information(joint, &[REPR], &[CLASS])?;
    let i_x_a_given_c = conditional_mutual_information(joint, &[OBSERVED], &[ACTION], &[CLASS])?;
    let i_z_a_given_c = conditional_mutual_information(joint, &[REPR], &[ACTION], &[CLASS])?;
    let stated_rhs = i_z_c - i_x_a_given_c;
    let proof_rhs = i_z_c + i_x_a_given_c;
    Ok(BoundReport {
        i_z_a,
        i_z_c,
        i_x_a_given_c,
        i_z_a_given_c,
        stated_rhs,
        proof_rhs,
        stated_holds: i_z_a <= stated_rhs + IDENTITY_TOL,
        proof_holds: i_z_a <= proof_rhs + IDENTITY_TOL,
    })
}

fn encoder_count(domain: &Alphabet, codomain: &Alphabet) -> Option<u64> {
    (codomain.size() as u64).checked_pow(u32::try_from(domain.size()).ok()?)
}

/// All total maps `domain -> codomain` in lexicographic order of the map
/// table (first domain symbol most significant).
#[derive(Debug, Clone)]
pub struct EncoderIter {
    domain: Alphabet,
    codomain: Alphabet,
    next: u64,
    end: u64,
}

impl EncoderIter {
    /// Restrict to the index range `start..end` (clamped to the total).
    pub fn range(mut self, start: u64, end: u64) -> Self {
        let total = self.end;
        self.next = start.min(total);
        self.end = end.min(total);
        self
    }

    pub fn total(&self) -> u64 {
        encoder_count(&self.domain, &self.codomain).unwrap_or(u64::MAX)
    }

    /// The encoder with lexicographic index `index`.
    pub fn encoder_at(&self, index: u64) -> Encoder {
        let k = self.codomain.size() as u64;
        let mut map = vec![0usize; self.domain.size()];
        let mut rest = index;
        for slot in map.iter_mut().rev() {
            *slot = (rest % k) as usize;
            rest /= k;
        }
        Encoder { domain: self.domain.clone(), codomain: self.codomain.clone(), map }
    }
}

impl Iterator for EncoderIter {
    type Item = (u64, Encoder);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some((i, self.encoder_at(i)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for EncoderIter {}

/// Enumerate every encoder, or fail if there are more than `cap`.
pub fn enumerate_encoders(domain: &Alphabet, codomain: &Alphabet, cap: u64) -> Result<EncoderIter> {
    let total = encoder_count(domain, codomain)
        .filter(|&n| n <= cap)
        .ok_or_else(|| {
            Error::Resource(format!(
                "{}^{} encoders exceed the cap of {cap}",
                codomain.size(),
                domain.size()
            ))
        })?;
    Ok(EncoderIter {
        domain: domain.clone(),
        codomain: codomain.renamed(vars::REPR),
        next: 0,
        end: total,
    })
}

/// `count` maps drawn uniformly and independently, for spaces past the cap.
pub fn sample_encoders(domain: &Alphabet, codomain: &Alphabet, count: usize, seed: u64) -> Vec<Encoder> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codomain = codomain.renamed(vars::REPR);
    (0..count)
        .map(|_| Encoder {
            domain: domain.clone(),
            codomain: codomain.clone(),
            map: (0..domain.size()).map(|_| rng.random_range(0..codomain.size())).collect(),
        })
        .collect()
}

/// Per-encoder results of a sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EncoderSweepRow {
    pub encoder_index: u64,
    /// Image symbols in domain order.
    pub map: Vec<String>,
    pub gain: ClassFeatureGain,
    /// `I(A1,A2;C|Z)` when the joint has `A1` and `A2`, otherwise `I(A;C|Z)`.
    pub joint_cmi: f64,
    pub multivariate: Option<MultivariateReport>,
    pub bound: BoundReport,
}

impl EncoderSweepRow {
    /// Every assertable check for this encoder. The printed bound is
    /// reported separately and not part of this.
    pub fn all_checks_hold(&self) -> bool {
        self.gain.identity_holds()
            && self.gain.strict().unwrap_or(true)
            && self.gain.class_monotone()
            && self.multivariate.is_none_or(|m| m.monotone() && m.chain_rule_holds())
            && self.bound.proof_holds
            && self.bound.data_processing_holds()
    }

    pub fn verdicts(&self) -> String {
        let flag = |b: bool| if b { "ok" } else { "FAIL" };
        let mut s = format!(
            "gain_identity={};class_monotone={};proof_bound={};stated_bound={};dpi={}",
            flag(self.gain.identity_holds()),
            flag(self.gain.class_monotone()),
            flag(self.bound.proof_holds),
            if self.bound.stated_holds { "holds" } else { "violated" },
            flag(self.bound.data_processing_holds()),
        );
        if let Some(strict) = self.gain.strict() {
            s.push_str(&format!(";strict_gain={}", flag(strict)));
        }
        if let Some(m) = &self.multivariate {
            s.push_str(&format!(";multivariate={}", flag(m.monotone() && m.chain_rule_holds())));
        }
        s
    }
}

/// Evaluate one encoder on a joint that holds `A`, `C` and `X` (no `Z`).
pub fn sweep_encoder(joint: &JointTable, index: u64, enc: &Encoder) -> Result<EncoderSweepRow> {
    let t = apply_encoder(joint, enc)?;
    let classes = t.alphabet(vars::CLASS)?;
    let gain = class_feature_gain(&t, &ClassFeatureMap::identity(classes))?;
    let multivariate = if t.contains("A1") && t.contains("A2") {
        Some(multivariate_decomposition(&t, "A1", "A2")?)
    } else {
        None
    };
    Ok(EncoderSweepRow {
        encoder_index: index,
        map: enc.map.iter().map(|&j| enc.codomain.symbols()[j].to_string()).collect(),
        joint_cmi: multivariate.map_or(gain.i_ac_given_z, |m| m.joint_cmi),
        gain,
        multivariate,
        bound: generalization_bound_report(&t)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::additive::{additive_joint, AdditiveModel};
    use crate::info::entropy;
    use crate::instances;

    const LN2: f64 = core::f64::consts::LN_2;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
    }

    fn with_identity(t: &JointTable) -> JointTable {
        apply_encoder(t, &Encoder::identity(t.alphabet("X").unwrap())).unwrap()
    }

    #[test]
    fn apply() {
        let t = instances::xor().unwrap();
        let z = with_identity(&t);
        close(mutual_information(&z, &["Z"], &["X"]).unwrap(), entropy(&z, &["X"]).unwrap());
        close(conditional_mutual_information(&z, &["A"], &["C"], &["Z"]).unwrap(), LN2);
        let back = z.marginalize(&["A", "C", "X"]).unwrap();
        for (p, q) in back.probabilities().iter().zip(t.probabilities()) {
            assert!((p - q).abs() < 1e-12);
        }
        let c = apply_encoder(&t, &Encoder::constant(t.alphabet("X").unwrap())).unwrap();
        assert_eq!(mutual_information(&c, &["Z"], &["A", "C"]).unwrap(), 0.0);

        let wrong = Encoder::identity(&Alphabet::indexed("X", 3).unwrap());
        assert!(matches!(apply_encoder(&t, &wrong), Err(Error::Usage(_))));
    }

    #[test]
    fn gain_examples() {
        let t = with_identity(&instances::xor().unwrap());
        let g = class_feature_gain(&t, &ClassFeatureMap::identity(t.alphabet("C").unwrap())).unwrap();
        close(g.i_a_z, 0.0);
        close(g.i_a_ztilde, LN2);
        close(g.gain, LN2);
        close(g.i_c_z, 0.0);
        close(g.i_c_ztilde, LN2);
        assert!(g.identity_holds() && g.strict() == Some(true));

        let t = with_identity(&additive_joint(&AdditiveModel::new(2, 2, 1, 1).unwrap()).unwrap());
        let g = class_feature_gain(&t, &ClassFeatureMap::identity(t.alphabet("C").unwrap())).unwrap();
        close(g.i_a_z, 0.3465736);
        close(g.i_a_ztilde, LN2);
        close(g.gain, 0.3465736);

        let x = instances::xor().unwrap();
        let c = apply_encoder(&x, &Encoder::constant(x.alphabet("X").unwrap())).unwrap();
        let g = class_feature_gain(&c, &ClassFeatureMap::identity(c.alphabet("C").unwrap())).unwrap();
        assert_eq!(g.gain, 0.0);
        assert_eq!(g.strict(), None);
        assert!(matches!(class_feature_gain(&x, &ClassFeatureMap::identity(x.alphabet("C").unwrap())), Err(Error::UnknownName(_))));
    }

    #[test]
    fn swapped_feature_map_gives_same_gain() {
        let t = with_identity(&instances::xor().unwrap());
        let phi = ClassFeatureMap::new(Alphabet::indexed("f", 2).unwrap(), vec![1, 0]).unwrap();
        close(class_feature_gain(&t, &phi).unwrap().gain, LN2);
        assert!(ClassFeatureMap::new(Alphabet::indexed("f", 2).unwrap(), vec![0, 0]).is_err());
    }

    #[test]
    fn multivariate_examples() {
        let t = with_identity(&instances::parity().unwrap());
        let m = multivariate_decomposition(&t, "A1", "A2").unwrap();
        for (v, e) in [m.joint_cmi, m.cmi_a1, m.cmi_a2, m.inc_a2_after_a1, m.inc_a1_after_a2, m.gain]
            .into_iter()
            .zip([LN2, 0.0, 0.0, LN2, LN2, LN2])
        {
            close(v, e);
        }
        let t = with_identity(&instances::two_channel().unwrap());
        let m = multivariate_decomposition(&t, "A1", "A2").unwrap();
        close(m.joint_cmi, LN2);
        close(m.cmi_a1, LN2);
        close(m.cmi_a2, LN2);
        close(m.gain, 0.0);
        assert!(m.monotone() && m.chain_rule_holds());
    }

    #[test]
    fn bound_examples() {
        let t = with_identity(&instances::xor().unwrap());
        let b = generalization_bound_report(&t).unwrap();
        close(b.i_z_a, 0.0);
        close(b.stated_rhs, -LN2);
        close(b.proof_rhs, LN2);
        assert!(!b.stated_holds && b.proof_holds);

        let t = instances::a_copy().unwrap();
        let domain = t.alphabet("X").unwrap().clone();
        for (i, enc) in enumerate_encoders(&domain, &domain, DEFAULT_ENCODER_CAP).unwrap() {
            let row = sweep_encoder(&t, i, &enc).unwrap();
            assert!(row.bound.proof_holds && row.all_checks_hold(), "{}", row.verdicts());
        }
    }

    #[test]
    fn enumeration() {
        let d = |n| Alphabet::indexed("X", n).unwrap();
        let z = |n| Alphabet::indexed("Z", n).unwrap();
        assert_eq!(enumerate_encoders(&d(2), &z(2), 100).unwrap().count(), 4);
        assert_eq!(enumerate_encoders(&d(3), &z(2), 100).unwrap().count(), 8);
        let all: Vec<_> = enumerate_encoders(&d(4), &z(4), 1000).unwrap().collect();
        assert_eq!(all.len(), 256);
        assert_eq!(all[1].1.map(), &[0, 0, 0, 1]);
        assert_eq!(all[4].1.map(), &[0, 0, 1, 0]);
        assert_eq!(all[255].1.map(), &[3, 3, 3, 3]);
        let mut maps: Vec<_> = all.iter().map(|e| e.1.map().to_vec()).collect();
        maps.dedup();
        assert_eq!(maps.len(), 256);
        assert!(matches!(enumerate_encoders(&d(8), &z(8), 1000), Err(Error::Resource(_))));
        assert!(matches!(enumerate_encoders(&d(100), &z(8), u64::MAX), Err(Error::Resource(_))));
        let part: Vec<_> = enumerate_encoders(&d(4), &z(4), 1000).unwrap().range(10, 20).collect();
        assert_eq!(part[0].1, all[10].1);
        assert_eq!(part.len(), 10);

        let s = sample_encoders(&d(8), &z(8), 5, 3);
        assert_eq!(s, sample_encoders(&d(8), &z(8), 5, 3));
        assert_eq!(s.len(), 5);
    }
}
