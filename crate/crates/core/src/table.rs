//! Dense joint distributions over named finite variables.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::{math, Error, Result, NORMALIZATION_TOL};

/// A named, ordered set of distinct symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "AlphabetRepr", into = "AlphabetRepr")
)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetRepr {
    name: String,
    symbols: Vec<String>,
}

#[cfg(feature = "serde")]
impl TryFrom<AlphabetRepr> for Alphabet {
    type Error = Error;
    fn try_from(r: AlphabetRepr) -> Result<Self> {
        Alphabet::new(r.name, r.symbols)
    }
}

#[cfg(feature = "serde")]
impl From<Alphabet> for AlphabetRepr {
    fn from(a: Alphabet) -> Self {
        AlphabetRepr { name: a.name, symbols: a.symbols }
    }
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(Error::Model(format!("alphabet `{name}` has no symbols")));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::Model(format!("alphabet `{name}` repeats symbol `{s}`")));
            }
        }
        Ok(Alphabet { name, symbols })
    }

    /// Alphabet with symbols `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed(name: impl Into<String>, n: usize) -> Result<Self> {
        Alphabet::new(name, (0..n).map(|i| i.to_string()).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Same symbols under a different variable name.
    pub fn renamed(&self, name: impl Into<String>) -> Alphabet {
        Alphabet { name: name.into(), symbols: self.symbols.clone() }
    }
}

/// Exact joint distribution over an ordered list of variables.
///
/// Probabilities are stored densely in row-major order: the last variable
/// varies fastest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "TableRepr", into = "TableRepr")
)]
pub struct JointTable {
    variables: Vec<Alphabet>,
    probabilities: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TableRepr {
    variables: Vec<Alphabet>,
    probabilities: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<TableRepr> for JointTable {
    type Error = Error;
    fn try_from(r: TableRepr) -> Result<Self> {
        JointTable::new(r.variables, r.probabilities)
    }
}

#[cfg(feature = "serde")]
impl From<JointTable> for TableRepr {
    fn from(t: JointTable) -> Self {
        TableRepr { variables: t.variables, probabilities: t.probabilities }
    }
}

fn cell_count(vars: &[Alphabet]) -> Result<usize> {
    vars.iter().try_fold(1usize, |acc, a| {
        acc.checked_mul(a.size())
            .ok_or_else(|| Error::Resource("joint table cell count overflows usize".into()))
    })
}

fn check_unique_names(vars: &[Alphabet]) -> Result<()> {
    for (i, a) in vars.iter().enumerate() {
        if vars[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::Model(format!("variable `{}` appears twice", a.name)));
        }
    }
    Ok(())
}

/// Advance a mixed-radix counter; returns false once it wraps around.
pub(crate) fn odometer_next(idx: &mut [usize], radix: &[usize]) -> bool {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < radix[pos] {
            return true;
        }
        idx[pos] = 0;
    }
    false
}

impl JointTable {
    /// Validating constructor.
    pub fn new(variables: Vec<Alphabet>, probabilities: Vec<f64>) -> Result<Self> {
        check_unique_names(&variables)?;
        let n = cell_count(&variables)?;
        if probabilities.len() != n {
            return Err(Error::Model(format!(
                "expected {n} probabilities, got {}",
                probabilities.len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Model(format!("invalid probability {p}")));
        }
        let total = math::sum(probabilities.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Model(format!("probabilities sum to {total}, not 1")));
        }
        Ok(JointTable { variables, probabilities })
    }

    /// Build from nonnegative weights, normalising them.
    pub fn from_weights(variables: Vec<Alphabet>, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Model(format!("invalid weight {w}")));
        }
        let total = math::sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::Model("weights sum to zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        JointTable::new(variables, probs)
    }

    /// Build by evaluating `f` on every index tuple (row-major order).
    pub fn from_fn(variables: Vec<Alphabet>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_unique_names(&variables)?;
        let n = cell_count(&variables)?;
        let radix: Vec<usize> = variables.iter().map(Alphabet::size).collect();
        let mut idx = vec![0; radix.len()];
        let mut probs = Vec::with_capacity(n);
        for _ in 0..n {
            probs.push(f(&idx));
            odometer_next(&mut idx, &radix);
        }
        JointTable::new(variables, probs)
    }

    pub fn variables(&self) -> &[Alphabet] {
        &self.variables
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|a| a.name()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.variables.iter().any(|a| a.name == name)
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    pub fn alphabet(&self, name: &str) -> Result<&Alphabet> {
        Ok(&self.variables[self.var_index(name)?])
    }

    /// Resolve a set of names to positions, rejecting unknown and repeated names.
    pub fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.var_index(n)?;
            if out.contains(&i) {
                return Err(Error::Usage(format!("variable `{n}` listed twice")));
            }
            out.push(i);
        }
        Ok(out)
    }

    fn radix(&self) -> Vec<usize> {
        self.variables.iter().map(Alphabet::size).collect()
    }

    /// Call `f(index_tuple, p)` for every cell in row-major order.
    pub fn for_each_cell(&self, mut f: impl FnMut(&[usize], f64)) {
        let radix = self.radix();
        let mut idx = vec![0; radix.len()];
        for &p in &self.probabilities {
            f(&idx, p);
            odometer_next(&mut idx, &radix);
        }
    }

    /// Dense marginal over the given variable positions, row-major in that order.
    pub(crate) fn marginal_probs(&self, positions: &[usize]) -> Vec<f64> {
        let sizes: Vec<usize> = positions.iter().map(|&i| self.variables[i].size()).collect();
        let n: usize = sizes.iter().product();
        let mut out = vec![0.0; n];
        self.for_each_cell(|idx, p| {
            if p == 0.0 {
                return;
            }
            let mut off = 0;
            for (&pos, &s) in positions.iter().zip(&sizes) {
                off = off * s + idx[pos];
            }
            out[off] += p;
        });
        out
    }

    /// Marginal table over `keep`, with variables in the order given.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointTable> {
        if keep.is_empty() {
            return Err(Error::Usage("marginalize needs at least one variable".into()));
        }
        let pos = self.resolve(keep)?;
        let vars = pos.iter().map(|&i| self.variables[i].clone()).collect();
        Ok(JointTable { variables: vars, probabilities: self.marginal_probs(&pos) })
    }

    /// Append a variable that is a deterministic function of the existing ones.
    pub fn extend_with(
        &self,
        alphabet: Alphabet,
        mut f: impl FnMut(&[usize]) -> usize,
    ) -> Result<JointTable> {
        if self.contains(alphabet.name()) {
            return Err(Error::Usage(format!("variable `{}` already present", alphabet.name())));
        }
        let m = alphabet.size();
        let n = self
            .probabilities
            .len()
            .checked_mul(m)
            .ok_or_else(|| Error::Resource("extended table too large".into()))?;
        let mut probs = vec![0.0; n];
        let mut bad = None;
        let mut cell = 0;
        self.for_each_cell(|idx, p| {
            let v = f(idx);
            if v >= m {
                bad = Some(v);
            } else {
                probs[cell * m + v] = p;
            }
            cell += 1;
        });
        if let Some(v) = bad {
            return Err(Error::Usage(format!(
                "function value {v} outside alphabet `{}` of size {m}",
                alphabet.name()
            )));
        }
        let mut variables = self.variables.clone();
        variables.push(alphabet);
        Ok(JointTable { variables, probabilities: probs })
    }

    /// Independent product `self ⊗ other`.
    pub fn product(&self, other: &JointTable) -> Result<JointTable> {
        let mut variables = self.variables.clone();
        variables.extend(other.variables.iter().cloned());
        check_unique_names(&variables)?;
        let mut probs = Vec::with_capacity(self.probabilities.len() * other.probabilities.len());
        for &p in &self.probabilities {
            for &q in &other.probabilities {
                probs.push(p * q);
            }
        }
        JointTable::new(variables, probs)
    }

    /// Same distribution with one variable renamed.
    pub fn rename(&self, from: &str, to: &str) -> Result<JointTable> {
        let i = self.var_index(from)?;
        if from != to && self.contains(to) {
            return Err(Error::Usage(format!("variable `{to}` already present")));
        }
        let mut t = self.clone();
        t.variables[i] = t.variables[i].renamed(to);
        Ok(t)
    }

    /// Probability of a full index tuple.
    pub fn prob(&self, idx: &[usize]) -> f64 {
        let mut off = 0;
        for (a, &i) in self.variables.iter().zip(idx) {
            off = off * a.size() + i;
        }
        self.probabilities[off]
    }

    /// Factorisation test: does `p(a,b,g) p(g) = p(a,g) p(b,g)` hold within `tol`
    /// in every cell?
    pub fn is_conditionally_independent(
        &self,
        a: &[&str],
        b: &[&str],
        given: &[&str],
        tol: f64,
    ) -> Result<bool> {
        crate::info::check_disjoint(&[a, b, given])?;
        let pa = self.resolve(a)?;
        let pb = self.resolve(b)?;
        let pg = self.resolve(given)?;
        let size = |ps: &[usize]| ps.iter().map(|&i| self.variables[i].size()).product::<usize>();
        let (na, nb, ng) = (size(&pa), size(&pb), size(&pg));
        let all: Vec<usize> = pa.iter().chain(&pb).chain(&pg).copied().collect();
        let joint = self.marginal_probs(&all);
        let ag: Vec<usize> = pa.iter().chain(&pg).copied().collect();
        let bg: Vec<usize> = pb.iter().chain(&pg).copied().collect();
        let p_ag = self.marginal_probs(&ag);
        let p_bg = self.marginal_probs(&bg);
        let p_g = self.marginal_probs(&pg);
        for ia in 0..na {
            for ib in 0..nb {
                for ig in 0..ng {
                    let lhs = joint[(ia * nb + ib) * ng + ig] * p_g[ig];
                    let rhs = p_ag[ia * ng + ig] * p_bg[ib * ng + ig];
                    if (lhs - rhs).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}
