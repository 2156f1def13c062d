use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::CausalDiagram;
use crate::encoder::{apply_encoder, Encoder};
use crate::info::{conditional_mutual_information, mutual_information};
use crate::{math, vars, Alphabet, Error, JointTable, Result, NORMALIZATION_TOL, POSITIVE_TOL};

/// Conditional probability table `P(child | parents)`.
///
/// Rows are indexed row-major over the parents in the listed order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "CpdRepr", into = "CpdRepr")
)]
pub struct Cpd {
    child: Alphabet,
    parents: Vec<String>,
    kernel: Vec<Vec<f64>>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct CpdRepr {
    child: Alphabet,
    parents: Vec<String>,
    kernel: Vec<Vec<f64>>,
}

#[cfg(feature = "serde")]
impl TryFrom<CpdRepr> for Cpd {
    type Error = Error;
    fn try_from(r: CpdRepr) -> Result<Self> {
        Cpd::new(r.child, r.parents, r.kernel)
    }
}

#[cfg(feature = "serde")]
impl From<Cpd> for CpdRepr {
    fn from(c: Cpd) -> Self {
        CpdRepr { child: c.child, parents: c.parents, kernel: c.kernel }
    }
}

impl Cpd {
    pub fn new(child: Alphabet, parents: Vec<String>, kernel: Vec<Vec<f64>>) -> Result<Self> {
        if kernel.is_empty() {
            return Err(Error::Model(format!("kernel for `{}` has no rows", child.name())));
        }
        for (r, row) in kernel.iter().enumerate() {
            if row.len() != child.size() {
                return Err(Error::Model(format!(
                    "row {r} of `{}` has {} entries, expected {}",
                    child.name(),
                    row.len(),
                    child.size()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Model(format!("row {r} of `{}` has a negative entry", child.name())));
            }
            let s = math::sum(row.iter().copied());
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Model(format!("row {r} of `{}` sums to {s}", child.name())));
            }
        }
        Ok(Cpd { child, parents, kernel })
    }

    /// Parentless distribution.
    pub fn root(child: Alphabet, dist: Vec<f64>) -> Result<Self> {
        Cpd::new(child, Vec::new(), vec![dist])
    }

    pub fn uniform_root(child: Alphabet) -> Self {
        let n = child.size();
        Cpd { child, parents: Vec::new(), kernel: vec![vec![1.0 / n as f64; n]] }
    }

    /// Kernel putting all mass on `f(parent_indices)`.
    pub fn deterministic(
        child: Alphabet,
        parents: &[(&str, usize)],
        mut f: impl FnMut(&[usize]) -> usize,
    ) -> Result<Self> {
        let radix: Vec<usize> = parents.iter().map(|p| p.1).collect();
        let rows: usize = radix.iter().product();
        let mut idx = vec![0; radix.len()];
        let mut kernel = Vec::with_capacity(rows);
        for _ in 0..rows {
            let v = f(&idx);
            if v >= child.size() {
                return Err(Error::Model(format!("value {v} outside `{}`", child.name())));
            }
            let mut row = vec![0.0; child.size()];
            row[v] = 1.0;
            kernel.push(row);
            crate::table::odometer_next(&mut idx, &radix);
        }
        Cpd::new(child, parents.iter().map(|p| p.0.to_string()).collect(), kernel)
    }

    pub fn child(&self) -> &Alphabet {
        &self.child
    }

    pub fn parents(&self) -> &[String] {
        &self.parents
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }
}

/// The E-SSL collider process `C, S, Abar -> Xbar`, `Xbar, A -> X`, optional `X -> Z`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct ColliderModel {
    pub diagram: CausalDiagram,
    pub class: Cpd,
    pub style: Cpd,
    pub pose: Cpd,
    pub action: Cpd,
    /// `P(Xbar | C, S, Abar)`.
    pub generator: Cpd,
    /// `P(X | Xbar, A)`: the transformation `T`.
    pub transform: Cpd,
    #[cfg_attr(feature = "serde", serde(default))]
    pub encoder: Option<Encoder>,
}

/// Alphabet sizes for [`sample_random_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct ModelSizes {
    pub class: usize,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub style: usize,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub pose: usize,
    pub action: usize,
    pub raw: usize,
    pub observed: usize,
}

#[cfg(feature = "serde")]
fn one() -> usize {
    1
}

impl ModelSizes {
    /// Sizes with singleton style and pose.
    pub fn new(class: usize, action: usize, raw: usize, observed: usize) -> Self {
        ModelSizes { class, style: 1, pose: 1, action, raw, observed }
    }
}

impl ColliderModel {
    fn check_root(cpd: &Cpd, name: &str) -> Result<()> {
        if cpd.child.name() != name {
            return Err(Error::Model(format!("expected a kernel for `{name}`, got `{}`", cpd.child.name())));
        }
        if !cpd.parents.is_empty() || cpd.kernel.len() != 1 {
            return Err(Error::Model(format!("`{name}` must be a parentless root")));
        }
        Ok(())
    }

    fn check_kernel(&self, cpd: &Cpd, name: &str, sizes: &[(&str, usize)]) -> Result<()> {
        if cpd.child.name() != name {
            return Err(Error::Model(format!("expected a kernel for `{name}`, got `{}`", cpd.child.name())));
        }
        let mut expected_rows = 1usize;
        for p in &cpd.parents {
            let s = sizes
                .iter()
                .find(|(n, _)| n == p)
                .ok_or_else(|| Error::Model(format!("`{name}` has unexpected parent `{p}`")))?;
            expected_rows *= s.1;
        }
        let mut diag_parents = self.diagram.parents_of(name)?;
        let mut cpd_parents: Vec<&str> = cpd.parents.iter().map(String::as_str).collect();
        diag_parents.sort_unstable();
        cpd_parents.sort_unstable();
        if diag_parents != cpd_parents {
            return Err(Error::Model(format!("parents of `{name}` disagree with the diagram")));
        }
        if cpd.kernel.len() != expected_rows {
            return Err(Error::Model(format!(
                "kernel for `{name}` has {} rows, expected {expected_rows}",
                cpd.kernel.len()
            )));
        }
        Ok(())
    }

    /// Check names, parent sets and kernel completeness against the diagram.
    pub fn validate(&self) -> Result<()> {
        use vars::*;
        Self::check_root(&self.class, CLASS)?;
        Self::check_root(&self.style, STYLE)?;
        Self::check_root(&self.pose, POSE)?;
        Self::check_root(&self.action, ACTION)?;
        for root in [CLASS, STYLE, POSE, ACTION] {
            if !self.diagram.parents_of(root)?.is_empty() {
                return Err(Error::Model(format!("`{root}` must have no parents in the diagram")));
            }
        }
        let sizes = [
            (CLASS, self.class.child.size()),
            (STYLE, self.style.child.size()),
            (POSE, self.pose.child.size()),
            (ACTION, self.action.child.size()),
            (RAW, self.generator.child.size()),
        ];
        self.check_kernel(&self.generator, RAW, &sizes[..3])?;
        self.check_kernel(&self.transform, OBSERVED, &sizes[3..])?;
        if let Some(enc) = &self.encoder {
            if enc.domain().symbols() != self.transform.child.symbols() {
                return Err(Error::Model("encoder domain does not match the X alphabet".into()));
            }
        }
        Ok(())
    }
}

fn row_index(cpd: &Cpd, order: &[&str], idx: &[usize], sizes: &[usize]) -> usize {
    let mut off = 0;
    for p in &cpd.parents {
        let k = order.iter().position(|n| n == p).expect("validated parent");
        off = off * sizes[k] + idx[k];
    }
    off
}

/// Multiply the kernels along the diagram into an exact joint over
/// `(C, S, Abar, A, Xbar, X[, Z])`.
pub fn build_collider_joint(model: &ColliderModel) -> Result<JointTable> {
    use vars::*;
    model.validate()?;
    let order = [CLASS, STYLE, POSE, ACTION, RAW, OBSERVED];
    let alphabets = vec![
        model.class.child.clone(),
        model.style.child.clone(),
        model.pose.child.clone(),
        model.action.child.clone(),
        model.generator.child.clone(),
        model.transform.child.clone(),
    ];
    let sizes: Vec<usize> = alphabets.iter().map(Alphabet::size).collect();
    let joint = JointTable::from_fn(alphabets, |i| {
        let roots = model.class.kernel[0][i[0]]
            * model.style.kernel[0][i[1]]
            * model.pose.kernel[0][i[2]]
            * model.action.kernel[0][i[3]];
        if roots == 0.0 {
            return 0.0;
        }
        let g = &model.generator.kernel[row_index(&model.generator, &order, i, &sizes)];
        let t = &model.transform.kernel[row_index(&model.transform, &order, i, &sizes)];
        roots * g[i[4]] * t[i[5]]
    })?;
    match &model.encoder {
        Some(enc) => apply_encoder(&joint, enc),
        None => Ok(joint),
    }
}

/// Draw a point from the symmetric Dirichlet(`concentration`) on `n` symbols.
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            let mut p: Vec<f64> = draws.iter().map(|d| d / total).collect();
            // absorb the rounding residue so rows pass the 1e-12 check
            let s = math::sum(p.iter().copied());
            let k = math::argmax(&p);
            p[k] += 1.0 - s;
            return p;
        }
    }
}

/// Random joint over `vars` with a single Dirichlet draw over all cells.
pub fn random_joint<R: Rng + ?Sized>(
    vars: Vec<Alphabet>,
    concentration: f64,
    rng: &mut R,
) -> Result<JointTable> {
    let n = vars.iter().map(Alphabet::size).product();
    JointTable::from_weights(vars, sample_simplex(rng, n, concentration))
}

fn random_kernel<R: Rng + ?Sized>(
    rng: &mut R,
    child: Alphabet,
    parents: &[(&str, usize)],
    concentration: f64,
) -> Result<Cpd> {
    let rows: usize = parents.iter().map(|p| p.1).product();
    let kernel = (0..rows).map(|_| sample_simplex(rng, child.size(), concentration)).collect();
    Cpd::new(child, parents.iter().map(|p| p.0.to_string()).collect(), kernel)
}

/// Collider model with every kernel row drawn from a symmetric Dirichlet.
///
/// `C`, `A`, `Xbar` and `X` need at least two symbols; `S` and `Abar` may be
/// singletons. Deterministic given `seed`.
pub fn sample_random_model(sizes: ModelSizes, seed: u64, concentration: f64) -> Result<ColliderModel> {
    use vars::*;
    for (name, s) in [(CLASS, sizes.class), (ACTION, sizes.action), (RAW, sizes.raw), (OBSERVED, sizes.observed)] {
        if s < 2 {
            return Err(Error::Usage(format!("`{name}` needs at least 2 symbols, got {s}")));
        }
    }
    if sizes.style == 0 || sizes.pose == 0 {
        return Err(Error::Usage("style and pose need at least one symbol".into()));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::Usage(format!("concentration must be positive, got {concentration}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = concentration;
    let class = random_kernel(&mut rng, Alphabet::indexed(CLASS, sizes.class)?, &[], alpha)?;
    let style = random_kernel(&mut rng, Alphabet::indexed(STYLE, sizes.style)?, &[], alpha)?;
    let pose = random_kernel(&mut rng, Alphabet::indexed(POSE, sizes.pose)?, &[], alpha)?;
    let action = random_kernel(&mut rng, Alphabet::indexed(ACTION, sizes.action)?, &[], alpha)?;
    let generator = random_kernel(
        &mut rng,
        Alphabet::indexed(RAW, sizes.raw)?,
        &[(CLASS, sizes.class), (STYLE, sizes.style), (POSE, sizes.pose)],
        alpha,
    )?;
    let transform = random_kernel(
        &mut rng,
        Alphabet::indexed(OBSERVED, sizes.observed)?,
        &[(RAW, sizes.raw), (ACTION, sizes.action)],
        alpha,
    )?;
    Ok(ColliderModel {
        diagram: CausalDiagram::essl(),
        class,
        style,
        pose,
        action,
        generator,
        transform,
        encoder: None,
    })
}

/// Explaining-away diagnostics for a joint containing `A`, `C`, `X` (and maybe `Z`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExplainingAway {
    pub i_ac: f64,
    pub i_ac_given_x: f64,
    pub i_ac_given_z: Option<f64>,
    /// `A ⊥ C` marginally but dependent given `X`.
    pub verdict: bool,
}

pub fn check_explaining_away(joint: &JointTable) -> Result<ExplainingAway> {
    use vars::*;
    for v in [ACTION, CLASS, OBSERVED] {
        joint.var_index(v)?;
    }
    let i_ac = mutual_information(joint, &[ACTION], &[CLASS])?;
    let i_ac_given_x = conditional_mutual_information(joint, &[ACTION], &[CLASS], &[OBSERVED])?;
    let i_ac_given_z = if joint.contains(REPR) {
        Some(conditional_mutual_information(joint, &[ACTION], &[CLASS], &[REPR])?)
    } else {
        None
    };
    Ok(ExplainingAway {
        i_ac,
        i_ac_given_x,
        i_ac_given_z,
        verdict: i_ac <= POSITIVE_TOL && i_ac_given_x > POSITIVE_TOL,
    })
}
