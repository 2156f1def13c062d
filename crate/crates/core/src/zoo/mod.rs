//! Enumerable toy images, the transformation families acting on them and the
//! synergy diagnostics computed from the resulting joints.

mod dataset;
mod image;

pub use dataset::{build_toy_dataset, ClassSpec, Prior, ToyDataset, ToyDatasetSpec, ToyItem};
pub use image::{ToyImage, MAX_PALETTE};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::info::{conditional_entropy, conditional_mutual_information, entropy};
use crate::{vars, Alphabet, Error, JointTable, Result};

/// Default fraction of `H(A|X)` that class knowledge must remove for a
/// family to count as class-relevant.
pub const DEFAULT_RELEVANCE_FRACTION: f64 = 0.5;

const DEGREES: [&str; 4] = ["0", "90", "180", "270"];

/// A deterministic action `T(Xbar, a)` with `a` uniform on its action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum TransformFamily {
    Rotation4,
    Hflip,
    Vflip,
    Grayscale,
    Invert,
    Jigsaw4,
    Blur4,
    /// `X = (Xbar, a)` verbatim, with a four-symbol `a`.
    DirectConcat,
    /// `X = Xbar`.
    Identity,
    /// Predict the identity of `Xbar`; see [`instance_discrimination_synergy`].
    Instance,
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p[..i].iter().all(|&q| q != p[i])) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

impl TransformFamily {
    /// Families that produce an `(A, X)` joint, in report order.
    pub const ZOO: [TransformFamily; 8] = [
        TransformFamily::Rotation4,
        TransformFamily::Hflip,
        TransformFamily::Vflip,
        TransformFamily::Grayscale,
        TransformFamily::Invert,
        TransformFamily::Jigsaw4,
        TransformFamily::Blur4,
        TransformFamily::DirectConcat,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TransformFamily::Rotation4 => "rotation4",
            TransformFamily::Hflip => "hflip",
            TransformFamily::Vflip => "vflip",
            TransformFamily::Grayscale => "grayscale",
            TransformFamily::Invert => "invert",
            TransformFamily::Jigsaw4 => "jigsaw4",
            TransformFamily::Blur4 => "blur4",
            TransformFamily::DirectConcat => "direct_concat",
            TransformFamily::Identity => "identity",
            TransformFamily::Instance => "instance",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ZOO
            .iter()
            .chain(&[TransformFamily::Identity, TransformFamily::Instance])
            .copied()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnknownName(format!("transform family `{name}`")))
    }

    /// Action symbols in index order.
    pub fn action_symbols(&self) -> Vec<String> {
        let owned = |s: &[&str]| s.iter().map(|x| x.to_string()).collect();
        match self {
            TransformFamily::Rotation4 | TransformFamily::DirectConcat => owned(&DEGREES),
            TransformFamily::Hflip | TransformFamily::Vflip => owned(&["id", "flip"]),
            TransformFamily::Grayscale => owned(&["id", "gray"]),
            TransformFamily::Invert => owned(&["id", "invert"]),
            TransformFamily::Jigsaw4 => permutations4()
                .iter()
                .map(|p| p.iter().map(|d| char::from(b'0' + *d as u8)).collect())
                .collect(),
            TransformFamily::Blur4 => owned(&["id", "box2", "plus", "mean"]),
            TransformFamily::Identity | TransformFamily::Instance => owned(&["id"]),
        }
    }

    pub fn action_space_size(&self) -> usize {
        self.action_symbols().len()
    }

    /// Observation symbol of `T(img, a)`; `None` where the action is undefined.
    pub fn act(&self, img: &ToyImage, a: usize, palette: u8) -> Option<String> {
        let out = match self {
            TransformFamily::Rotation4 => img.rotate_quarters(a),
            TransformFamily::Hflip => if a == 1 { img.hflip() } else { img.clone() },
            TransformFamily::Vflip => if a == 1 { img.vflip() } else { img.clone() },
            TransformFamily::Grayscale => {
                if a == 1 {
                    img.map_values(|v| v.min(1))
                } else {
                    img.clone()
                }
            }
            TransformFamily::Invert => {
                if a == 1 {
                    if img.max_value() >= palette {
                        return None;
                    }
                    img.map_values(|v| if v > 0 { palette - v } else { 0 })
                } else {
                    img.clone()
                }
            }
            TransformFamily::Jigsaw4 => img.permute_quadrants(permutations4().get(a)?)?,
            TransformFamily::Blur4 => match a {
                0 => img.clone(),
                1 => img.box_blur(),
                2 => img.plus_blur(),
                _ => img.mean_blur(),
            },
            TransformFamily::DirectConcat => {
                return Some(format!("{}|{}", img.to_digits(), DEGREES.get(a)?));
            }
            TransformFamily::Identity => img.clone(),
            TransformFamily::Instance => return None,
        };
        Some(out.to_digits())
    }
}

fn pose_symbols(ds: &ToyDataset) -> Vec<String> {
    ds.poses.iter().map(|&p| DEGREES[p as usize].to_string()).collect()
}

/// Collect `(index tuple) -> mass` into a table; the last variable's
/// symbols are the sorted distinct observation strings.
fn assemble(
    mut vars: Vec<Alphabet>,
    cells: Vec<(Vec<usize>, String, f64)>,
    x_name: &str,
) -> Result<JointTable> {
    let mut symbols: Vec<String> = cells.iter().map(|c| c.1.clone()).collect();
    symbols.sort();
    symbols.dedup();
    let mut mass: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (mut idx, x, p) in cells {
        idx.push(symbols.binary_search(&x).expect("symbol collected"));
        *mass.entry(idx).or_insert(0.0) += p;
    }
    vars.push(Alphabet::new(x_name, symbols)?);
    JointTable::from_fn(vars, |i| mass.get(i).copied().unwrap_or(0.0))
}

/// Exact joint over `(C, S, Abar, A, X)` with `A` uniform and independent of
/// the raw input. Identical observations are merged into one `X` symbol.
pub fn apply_transform_family(ds: &ToyDataset, family: TransformFamily) -> Result<JointTable> {
    if family == TransformFamily::Instance {
        return Err(Error::Usage(
            "the instance family has no fixed action; use instance discrimination".into(),
        ));
    }
    let actions = family.action_symbols();
    let pa = 1.0 / actions.len() as f64;
    let mut cells = Vec::with_capacity(ds.items.len() * actions.len());
    for item in &ds.items {
        for (a, action) in actions.iter().enumerate() {
            let x = family.act(&item.image, a, ds.palette_size).ok_or_else(|| {
                Error::Model(format!(
                    "{} action `{}` undefined on image {}",
                    family.name(),
                    action,
                    item.image.to_digits()
                ))
            })?;
            cells.push((vec![item.class, item.style, item.pose, a], x, item.weight * pa));
        }
    }
    let styles = ds.styles.iter().map(|s| s.to_string()).collect();
    let vars = vec![
        Alphabet::new(vars::CLASS, ds.classes.clone())?,
        Alphabet::new(vars::STYLE, styles)?,
        Alphabet::new(vars::POSE, pose_symbols(ds))?,
        Alphabet::new(vars::ACTION, actions)?,
    ];
    assemble(vars, cells, vars::OBSERVED)
}

/// Lossiness and class relevance of a target given `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SynergyReport {
    pub h_a: f64,
    pub h_a_given_x: f64,
    pub h_a_given_xc: f64,
    /// `I(A;C|X)`.
    pub synergy: f64,
    pub lossy: bool,
    pub class_relevant: bool,
}

/// [`synergy_report_for`] with target `A`.
pub fn synergy_report(joint: &JointTable, fraction: f64) -> Result<SynergyReport> {
    synergy_report_for(joint, vars::ACTION, fraction)
}

/// `lossy` when `H(target|X) > 1e-9`; `class_relevant` when the synergy is
/// at least `fraction` of `H(target|X)`.
pub fn synergy_report_for(joint: &JointTable, target: &str, fraction: f64) -> Result<SynergyReport> {
    use vars::{CLASS, OBSERVED};
    joint.resolve(&[target, CLASS, OBSERVED])?;
    let h_a = entropy(joint, &[target])?;
    let h_a_given_x = conditional_entropy(joint, &[target], &[OBSERVED])?;
    let h_a_given_xc = conditional_entropy(joint, &[target], &[OBSERVED, CLASS])?;
    let synergy = conditional_mutual_information(joint, &[target], &[CLASS], &[OBSERVED])?;
    if (synergy - (h_a_given_x - h_a_given_xc)).abs() > 1e-10 {
        return Err(Error::Numerical("synergy disagrees with the entropy difference".into()));
    }
    let ratio = synergy / h_a_given_x.max(1e-12);
    Ok(SynergyReport {
        h_a,
        h_a_given_x,
        h_a_given_xc,
        synergy,
        lossy: h_a_given_x > crate::POSITIVE_TOL,
        class_relevant: ratio >= fraction - crate::POSITIVE_TOL,
    })
}

/// Does style explain the action as well as class does?
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StyleProbe {
    pub i_a_s_given_x: f64,
    pub i_a_c_given_x: f64,
    /// The same two numbers after recolouring every style to one.
    pub collapsed_i_a_s_given_x: f64,
    pub collapsed_i_a_c_given_x: f64,
}

pub fn style_shortcut_probe(ds: &ToyDataset, family: TransformFamily) -> Result<StyleProbe> {
    use vars::{ACTION, CLASS, OBSERVED, STYLE};
    if ds.styles.len() < 2 {
        return Err(Error::Usage("style probe needs at least two styles".into()));
    }
    let probe = |d: &ToyDataset| -> Result<(f64, f64)> {
        let j = apply_transform_family(d, family)?;
        Ok((
            conditional_mutual_information(&j, &[ACTION], &[STYLE], &[OBSERVED])?,
            conditional_mutual_information(&j, &[ACTION], &[CLASS], &[OBSERVED])?,
        ))
    };
    let (s, c) = probe(ds)?;
    let (cs, cc) = probe(&ds.collapse_styles())?;
    Ok(StyleProbe {
        i_a_s_given_x: s,
        i_a_c_given_x: c,
        collapsed_i_a_s_given_x: cs,
        collapsed_i_a_c_given_x: cc,
    })
}

/// Variable name of the instance label.
pub const INSTANCE: &str = "I";

/// Instance discrimination: the target is the identity of the raw image.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InstanceReport {
    /// Number of distinct raw images, the size of the effective action space.
    pub n_instances: usize,
    pub h_i: f64,
    pub h_i_given_x: f64,
    pub h_i_given_xc: f64,
    /// `I(I;C|X)`.
    pub synergy: f64,
    pub report: SynergyReport,
}

/// Joint over `(C, I, A, X)` where `I` indexes the distinct raw images.
pub fn instance_joint(ds: &ToyDataset, augmentation: TransformFamily) -> Result<JointTable> {
    let images = ds.distinct_images();
    let ij = apply_transform_family(ds, augmentation)?;
    let actions = ij.alphabet(vars::ACTION)?.clone();
    let pa = 1.0 / actions.size() as f64;
    let mut cells = Vec::new();
    for item in &ds.items {
        let inst = images.binary_search(&item.image).expect("image listed");
        for a in 0..actions.size() {
            let x = augmentation.act(&item.image, a, ds.palette_size).expect("checked above");
            cells.push((vec![item.class, inst, a], x, item.weight * pa));
        }
    }
    let vars = vec![
        Alphabet::new(vars::CLASS, ds.classes.clone())?,
        Alphabet::indexed(INSTANCE, images.len())?,
        actions,
    ];
    assemble(vars, cells, vars::OBSERVED)
}

pub fn instance_discrimination_synergy(
    ds: &ToyDataset,
    augmentation: TransformFamily,
    fraction: f64,
) -> Result<InstanceReport> {
    let j = instance_joint(ds, augmentation)?;
    let report = synergy_report_for(&j, INSTANCE, fraction)?;
    Ok(InstanceReport {
        n_instances: j.alphabet(INSTANCE)?.size(),
        h_i: report.h_a,
        h_i_given_x: report.h_a_given_x,
        h_i_given_xc: report.h_a_given_xc,
        synergy: report.synergy,
        report,
    })
}

/// One zoo row: a family with its action-space size and report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ZooRow {
    pub family: String,
    pub action_space: usize,
    pub report: SynergyReport,
}

/// Rows for `families`; [`TransformFamily::Instance`] is evaluated with
/// rotation as the augmentation.
pub fn zoo_rows(ds: &ToyDataset, families: &[TransformFamily], fraction: f64) -> Result<Vec<ZooRow>> {
    families
        .iter()
        .map(|&f| {
            if f == TransformFamily::Instance {
                let r = instance_discrimination_synergy(ds, TransformFamily::Rotation4, fraction)?;
                Ok(ZooRow { family: f.name().into(), action_space: r.n_instances, report: r.report })
            } else {
                let j = apply_transform_family(ds, f)?;
                Ok(ZooRow {
                    family: f.name().into(),
                    action_space: f.action_space_size(),
                    report: synergy_report(&j, fraction)?,
                })
            }
        })
        .collect()
}
