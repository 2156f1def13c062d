//! Shannon information quantities over a [`JointTable`], in nats.
//!
//! Variable sets are slices of names. Conditioning on zero-probability events
//! contributes nothing, and `0 ln 0 = 0`.

use alloc::format;
use alloc::vec::Vec;

use crate::{math, Error, JointTable, Result, CLAMP_TOL};

pub(crate) fn check_disjoint(sets: &[&[&str]]) -> Result<()> {
    for (i, s) in sets.iter().enumerate() {
        for other in &sets[..i] {
            if let Some(n) = s.iter().find(|n| other.contains(n)) {
                return Err(Error::Usage(format!("variable `{n}` appears in two argument sets")));
            }
        }
    }
    Ok(())
}

fn union<'a>(sets: &[&[&'a str]]) -> Vec<&'a str> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

/// Entropy of a variable set; the empty set has entropy zero.
fn joint_entropy(table: &JointTable, vars: &[&str]) -> Result<f64> {
    let pos = table.resolve(vars)?;
    if pos.is_empty() {
        return Ok(0.0);
    }
    let marginal = table.marginal_probs(&pos);
    Ok(math::sum(marginal.into_iter().map(math::neg_xlogx)))
}

fn clamp(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value > -CLAMP_TOL {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("{what} came out negative: {value}")))
    }
}

/// `H(vars)`.
pub fn entropy(table: &JointTable, vars: &[&str]) -> Result<f64> {
    if vars.is_empty() {
        return Err(Error::Usage("entropy needs a nonempty variable set".into()));
    }
    joint_entropy(table, vars).and_then(|h| clamp(h, "entropy"))
}

/// `H(target | given) = H(target ∪ given) - H(given)`.
pub fn conditional_entropy(table: &JointTable, target: &[&str], given: &[&str]) -> Result<f64> {
    check_disjoint(&[target, given])?;
    if target.is_empty() {
        return Err(Error::Usage("conditional entropy needs a nonempty target".into()));
    }
    let h = joint_entropy(table, &union(&[target, given]))? - joint_entropy(table, given)?;
    clamp(h, "conditional entropy")
}

/// `I(a; b)`.
pub fn mutual_information(table: &JointTable, a: &[&str], b: &[&str]) -> Result<f64> {
    conditional_mutual_information(table, a, b, &[])
}

/// `I(a; b | given) = H(a, given) + H(b, given) - H(a, b, given) - H(given)`.
pub fn conditional_mutual_information(
    table: &JointTable,
    a: &[&str],
    b: &[&str],
    given: &[&str],
) -> Result<f64> {
    check_disjoint(&[a, b, given])?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("mutual information needs nonempty sets".into()));
    }
    let h_ag = joint_entropy(table, &union(&[a, given]))?;
    let h_bg = joint_entropy(table, &union(&[b, given]))?;
    let h_abg = joint_entropy(table, &union(&[a, b, given]))?;
    let h_g = joint_entropy(table, given)?;
    clamp(math::sum([h_ag, h_bg, -h_abg, -h_g]), "mutual information")
}

/// Co-information `I(a; b; c) = I(a; b) - I(a; b | c)`; may be negative.
pub fn interaction_information(
    table: &JointTable,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    check_disjoint(&[a, b, c])?;
    if c.is_empty() {
        return Err(Error::Usage("interaction information needs three nonempty sets".into()));
    }
    Ok(mutual_information(table, a, b)? - conditional_mutual_information(table, a, b, c)?)
}
