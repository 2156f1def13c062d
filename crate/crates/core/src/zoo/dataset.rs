use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::image::{ToyImage, MAX_PALETTE};
use crate::causal::sample_simplex;
use crate::{math, Error, Result};

/// One class and its defining binary masks.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct ClassSpec {
    pub name: String,
    /// Masks as `0`/`1` digit strings, row-major.
    pub shapes: Vec<String>,
}

/// How the prior over `(class, shape, style, pose)` is chosen.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case", deny_unknown_fields)
)]
pub enum Prior {
    /// Uniform class, then uniform shape, style and pose.
    Uniform,
    /// Explicit weights in item enumeration order; normalised.
    Weights(Vec<f64>),
    /// One seeded symmetric Dirichlet draw over all items.
    Dirichlet { concentration: f64 },
}

/// Parameters for [`build_toy_dataset`]. Missing fields take the defaults.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct ToyDatasetSpec {
    pub grid_size: usize,
    pub palette_size: u8,
    pub classes: Vec<ClassSpec>,
    /// Foreground colours, each in `1..palette_size`.
    pub styles: Vec<u8>,
    /// Intrinsic poses as counter-clockwise quarter turns.
    pub poses: Vec<u8>,
    pub prior: Prior,
}

const TEE: &str = "1111011001100000";
const SQUARE: &str = "0000011001100000";

impl Default for ToyDatasetSpec {
    /// Three orientations of a T as separate classes plus a centred square,
    /// three colours and upright pose.
    fn default() -> Self {
        let tee = ToyImage::from_digits(TEE).expect("valid mask");
        let class = |name: &str, quarters: usize| ClassSpec {
            name: name.to_string(),
            shapes: vec![tee.rotate_quarters(quarters).to_digits()],
        };
        ToyDatasetSpec {
            grid_size: 4,
            palette_size: 4,
            classes: vec![
                class("tee_0", 0),
                class("tee_90", 1),
                class("tee_180", 2),
                ClassSpec { name: "square".into(), shapes: vec![SQUARE.into()] },
            ],
            styles: vec![1, 2, 3],
            poses: vec![0],
            prior: Prior::Uniform,
        }
    }
}

/// One support point of the raw-input distribution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct ToyItem {
    pub class: usize,
    pub shape: usize,
    pub style: usize,
    pub pose: usize,
    pub weight: f64,
    pub image: ToyImage,
}

/// An enumerable raw-input distribution `P(C, S, Abar, Xbar)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct ToyDataset {
    pub grid_size: usize,
    pub palette_size: u8,
    pub classes: Vec<String>,
    pub styles: Vec<u8>,
    pub poses: Vec<u8>,
    pub items: Vec<ToyItem>,
}

fn parse_mask(s: &str, k: usize) -> Result<ToyImage> {
    let m = ToyImage::from_digits(s)?;
    if m.size() != k || m.max_value() > 1 {
        return Err(Error::Config(format!("`{s}` is not a {k}x{k} binary mask")));
    }
    if m.max_value() == 0 {
        return Err(Error::Config(format!("mask `{s}` is empty")));
    }
    Ok(m)
}

/// Expand a spec into its weighted items. The seed only matters for
/// [`Prior::Dirichlet`].
pub fn build_toy_dataset(spec: &ToyDatasetSpec, seed: u64) -> Result<ToyDataset> {
    let k = spec.grid_size;
    if spec.classes.len() < 2 {
        return Err(Error::Config("need at least two classes".into()));
    }
    if spec.palette_size < 2 || spec.palette_size > MAX_PALETTE {
        return Err(Error::Config(format!("palette size must be in 2..={MAX_PALETTE}")));
    }
    if spec.styles.is_empty() || spec.poses.is_empty() {
        return Err(Error::Config("styles and poses must be nonempty".into()));
    }
    for (i, &s) in spec.styles.iter().enumerate() {
        if s == 0 || s >= spec.palette_size || spec.styles[..i].contains(&s) {
            return Err(Error::Config(format!("style colour {s} invalid or repeated")));
        }
    }
    for (i, &p) in spec.poses.iter().enumerate() {
        if p > 3 || spec.poses[..i].contains(&p) {
            return Err(Error::Config(format!("pose {p} invalid or repeated")));
        }
    }
    let mut masks: Vec<Vec<ToyImage>> = Vec::new();
    for (ci, class) in spec.classes.iter().enumerate() {
        if spec.classes[..ci].iter().any(|c| c.name == class.name) {
            return Err(Error::Config(format!("class `{}` listed twice", class.name)));
        }
        if class.shapes.is_empty() {
            return Err(Error::Config(format!("class `{}` has no shapes", class.name)));
        }
        let ms = class.shapes.iter().map(|s| parse_mask(s, k)).collect::<Result<Vec<_>>>()?;
        for m in &ms {
            if masks.iter().flatten().any(|other| other == m) {
                return Err(Error::Config(format!(
                    "shape `{}` of class `{}` also belongs to another class",
                    m.to_digits(),
                    class.name
                )));
            }
        }
        masks.push(ms);
    }

    let mut items = Vec::new();
    for (ci, ms) in masks.iter().enumerate() {
        for (mi, mask) in ms.iter().enumerate() {
            for (si, &colour) in spec.styles.iter().enumerate() {
                for (pi, &pose) in spec.poses.iter().enumerate() {
                    let image = mask.rotate_quarters(pose as usize).map_values(|v| v * colour);
                    let weight = 1.0
                        / (masks.len() * ms.len() * spec.styles.len() * spec.poses.len()) as f64;
                    items.push(ToyItem { class: ci, shape: mi, style: si, pose: pi, weight, image });
                }
            }
        }
    }
    match &spec.prior {
        Prior::Uniform => {}
        Prior::Weights(w) => {
            if w.len() != items.len() || w.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::Config(format!("prior needs {} nonnegative weights", items.len())));
            }
            let total = math::sum(w.iter().copied());
            if total <= 0.0 {
                return Err(Error::Config("prior weights sum to zero".into()));
            }
            for (item, &x) in items.iter_mut().zip(w) {
                item.weight = x / total;
            }
        }
        Prior::Dirichlet { concentration } => {
            if !(concentration.is_finite() && *concentration > 0.0) {
                return Err(Error::Config("Dirichlet concentration must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = sample_simplex(&mut rng, items.len(), *concentration);
            for (item, x) in items.iter_mut().zip(p) {
                item.weight = x;
            }
        }
    }
    Ok(ToyDataset {
        grid_size: k,
        palette_size: spec.palette_size,
        classes: spec.classes.iter().map(|c| c.name.clone()).collect(),
        styles: spec.styles.clone(),
        poses: spec.poses.clone(),
        items,
    })
}

impl ToyDataset {
    /// Same dataset with every style recoloured to the first one.
    pub fn collapse_styles(&self) -> ToyDataset {
        let target = self.styles[0];
        let mut items: Vec<ToyItem> = Vec::new();
        for item in &self.items {
            let image = item.image.map_values(|v| if v > 0 { target } else { 0 });
            match items
                .iter_mut()
                .find(|o| o.class == item.class && o.shape == item.shape && o.pose == item.pose)
            {
                Some(o) => o.weight += item.weight,
                None => items.push(ToyItem { style: 0, image, ..item.clone() }),
            }
        }
        ToyDataset { styles: vec![target], items, ..self.clone() }
    }

    /// Distinct raw images in sorted order.
    pub fn distinct_images(&self) -> Vec<ToyImage> {
        let mut v: Vec<ToyImage> = self.items.iter().map(|i| i.image.clone()).collect();
        v.sort();
        v.dedup();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dataset() {
        let d = build_toy_dataset(&ToyDatasetSpec::default(), 0).unwrap();
        assert_eq!(d.items.len(), 12);
        assert_eq!(d.distinct_images().len(), 12);
        assert_eq!(d.items[0].image.to_digits(), "1111011001100000");
        let total: f64 = d.items.iter().map(|i| i.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn counts_and_errors() {
        let mut spec = ToyDatasetSpec::default();
        spec.classes.truncate(2);
        assert_eq!(build_toy_dataset(&spec, 0).unwrap().distinct_images().len(), 6);
        let mut dup = spec.clone();
        dup.classes[1].shapes = dup.classes[0].shapes.clone();
        assert!(matches!(build_toy_dataset(&dup, 0), Err(Error::Config(_))));
        let mut one = spec.clone();
        one.classes.truncate(1);
        assert!(matches!(build_toy_dataset(&one, 0), Err(Error::Config(_))));
        let mut bad = spec.clone();
        bad.styles = vec![4];
        assert!(matches!(build_toy_dataset(&bad, 0), Err(Error::Config(_))));
    }

    #[test]
    fn seeded_prior() {
        let spec = ToyDatasetSpec { prior: Prior::Dirichlet { concentration: 1.0 }, ..Default::default() };
        let a = build_toy_dataset(&spec, 7).unwrap();
        assert_eq!(a, build_toy_dataset(&spec, 7).unwrap());
        assert_ne!(a, build_toy_dataset(&spec, 8).unwrap());
    }

    #[test]
    fn collapse() {
        let d = build_toy_dataset(&ToyDatasetSpec::default(), 0).unwrap().collapse_styles();
        assert_eq!(d.items.len(), 4);
        assert!(d.items.iter().all(|i| i.image.max_value() == 1));
    }
}
