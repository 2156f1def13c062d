//! The additive toy problem `X = A + λC` with uniform independent `A`, `C`.
//!
//! `λ` is an exact rational so that the collision structure of the sums is
//! exact.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_rational::Ratio;

use crate::info::{conditional_mutual_information, entropy};
use crate::{math, vars, Alphabet, Error, JointTable, Result};

/// Positive rational mixing coefficient.
pub type Rational = Ratio<u64>;

const AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdditiveModel {
    n_a: u32,
    n_c: u32,
    lambda: Rational,
}

impl AdditiveModel {
    /// `n_a`, `n_c` at least 2; `λ = num/den > 0`.
    pub fn new(n_a: u32, n_c: u32, num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Usage("lambda denominator is zero".into()));
        }
        Self::with_lambda(n_a, n_c, Rational::new(num, den))
    }

    pub fn with_lambda(n_a: u32, n_c: u32, lambda: Rational) -> Result<Self> {
        if n_a < 2 || n_c < 2 {
            return Err(Error::Usage(format!("need n_a >= 2 and n_c >= 2, got ({n_a}, {n_c})")));
        }
        if *lambda.numer() == 0 {
            return Err(Error::Usage("lambda must be positive".into()));
        }
        Ok(AdditiveModel { n_a, n_c, lambda })
    }

    pub fn n_a(&self) -> u32 {
        self.n_a
    }

    pub fn n_c(&self) -> u32 {
        self.n_c
    }

    pub fn lambda(&self) -> Rational {
        self.lambda
    }

    /// Distinct values of `a + λc`, sorted, and the index of each `(a, c)` pair.
    fn sums(&self) -> (Vec<Rational>, Vec<usize>) {
        let mut all = Vec::with_capacity((self.n_a * self.n_c) as usize);
        for a in 0..self.n_a as u64 {
            for c in 0..self.n_c as u64 {
                all.push(Rational::from_integer(a) + self.lambda * c);
            }
        }
        let mut distinct = all.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let index = all
            .iter()
            .map(|s| distinct.binary_search(s).expect("value present"))
            .collect();
        (distinct, index)
    }
}

/// Render a rational as `p` or `p/q`.
pub fn format_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `p`, `p/q` or a terminating decimal such as `0.5`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Usage(format!("cannot parse `{s}` as a positive rational"));
    let r = if let Some((p, q)) = s.split_once('/') {
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        Rational::new(p, q)
    } else if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 18 || frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = frac.parse().map_err(|_| bad())?;
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Rational::new(num, den)
    } else {
        Rational::from_integer(s.parse().map_err(|_| bad())?)
    };
    if *r.numer() == 0 {
        return Err(bad());
    }
    Ok(r)
}

/// Exact joint over `(A, C, X)`; `X` ranges over the distinct sums.
pub fn additive_joint(model: &AdditiveModel) -> Result<JointTable> {
    let (distinct, index) = model.sums();
    let a = Alphabet::indexed(vars::ACTION, model.n_a as usize)?;
    let c = Alphabet::indexed(vars::CLASS, model.n_c as usize)?;
    let x = Alphabet::new(vars::OBSERVED, distinct.iter().map(format_rational).collect())?;
    let n_x = distinct.len();
    let n_c = model.n_c as usize;
    let p = 1.0 / (model.n_a as f64 * model.n_c as f64);
    JointTable::from_fn(alloc::vec![a, c, x], |i| {
        if index[i[0] * n_c + i[1]] == i[2] && i[2] < n_x {
            p
        } else {
            0.0
        }
    })
}

/// Both routes to `I(A;C|X)` plus `H(X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynergyRoutes {
    pub enumerated: f64,
    pub closed_form: f64,
    pub h_x: f64,
}

/// `I(A;C|X)` by enumeration and by `ln N_A + ln N_C - H(A + λC)`.
pub fn synergy_routes(model: &AdditiveModel) -> Result<SynergyRoutes> {
    let joint = additive_joint(model)?;
    let enumerated =
        conditional_mutual_information(&joint, &[vars::ACTION], &[vars::CLASS], &[vars::OBSERVED])?;
    let h_x = entropy(&joint, &[vars::OBSERVED])?;
    let closed = math::ln(model.n_a as f64) + math::ln(model.n_c as f64) - h_x;
    let closed_form = if closed.abs() < crate::CLAMP_TOL { 0.0 } else { closed };
    Ok(SynergyRoutes { enumerated, closed_form, h_x })
}

/// Exact synergy `I(A;C|X)`; fails if the two routes disagree beyond 1e-10.
pub fn additive_synergy_exact(model: &AdditiveModel) -> Result<f64> {
    let r = synergy_routes(model)?;
    if (r.enumerated - r.closed_form).abs() > AGREEMENT_TOL {
        return Err(Error::Numerical(format!(
            "enumerated synergy {} disagrees with closed form {}",
            r.enumerated, r.closed_form
        )));
    }
    Ok(r.enumerated)
}

/// Closed-form lower bound on the `λ = 1` synergy, valid for `n_a >= n_c >= 2`.
pub fn additive_lower_bound(n_a: u32, n_c: u32) -> Result<f64> {
    if n_c < 2 {
        return Err(Error::Domain(format!("n_c must be at least 2, got {n_c}")));
    }
    if n_a < n_c {
        return Err(Error::Domain(format!("bound requires n_a >= n_c, got ({n_a}, {n_c})")));
    }
    let (na, nc) = (n_a as f64, n_c as f64);
    let tail = (nc - 1.0) * math::ln(nc) - (nc - 1.0) * (nc - 1.0) / nc * math::ln(nc - 1.0)
        + (nc - 2.0) / 2.0;
    Ok(math::ln(nc) - tail / na)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPoint {
    pub lambda: Rational,
    pub h_x: f64,
    pub synergy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    pub points: Vec<LambdaPoint>,
    /// Grid values whose synergy is within 1e-12 of the maximum.
    pub argmax: Vec<Rational>,
}

impl LambdaSweep {
    pub fn argmax_contains_one(&self) -> bool {
        self.argmax.contains(&Rational::from_integer(1))
    }
}

/// Exact synergy at every grid point. The grid must contain `λ = 1`.
pub fn lambda_sweep(n_a: u32, n_c: u32, grid: &[Rational]) -> Result<LambdaSweep> {
    if grid.is_empty() {
        return Err(Error::Usage("lambda grid is empty".into()));
    }
    if !grid.contains(&Rational::from_integer(1)) {
        return Err(Error::Usage("lambda grid must contain 1".into()));
    }
    let points = grid
        .iter()
        .map(|&lambda| {
            let m = AdditiveModel::with_lambda(n_a, n_c, lambda)?;
            let r = synergy_routes(&m)?;
            let synergy = additive_synergy_exact(&m)?;
            Ok(LambdaPoint { lambda, h_x: r.h_x, synergy })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = points.iter().map(|p| p.synergy).fold(f64::NEG_INFINITY, f64::max);
    let argmax = points
        .iter()
        .filter(|p| p.synergy >= best - 1e-12)
        .map(|p| p.lambda)
        .collect();
    Ok(LambdaSweep { points, argmax })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSpaceRow {
    pub n_a: u32,
    pub exact: f64,
    pub bound: f64,
}

/// Exact `λ = 1` synergy and the closed-form bound for each `n_a`.
///
/// Fails if the bound exceeds the exact value by more than 1e-10, or if the
/// bound is not strictly increasing in `n_a`.
pub fn action_space_sweep(n_c: u32, n_a_values: &[u32]) -> Result<Vec<ActionSpaceRow>> {
    if n_a_values.is_empty() {
        return Err(Error::Usage("no n_a values given".into()));
    }
    let rows = n_a_values
        .iter()
        .map(|&n_a| {
            let bound = additive_lower_bound(n_a, n_c)?;
            let exact = additive_synergy_exact(&AdditiveModel::new(n_a, n_c, 1, 1)?)?;
            if bound > exact + AGREEMENT_TOL {
                return Err(Error::Numerical(format!(
                    "bound {bound} exceeds exact synergy {exact} at n_a={n_a}, n_c={n_c}"
                )));
            }
            Ok(ActionSpaceRow { n_a, exact, bound })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = rows.clone();
    sorted.sort_by_key(|r| r.n_a);
    for w in sorted.windows(2) {
        if w[1].n_a > w[0].n_a && w[1].bound <= w[0].bound {
            return Err(Error::Numerical(format!(
                "bound not increasing between n_a={} and n_a={}",
                w[0].n_a, w[1].n_a
            )));
        }
    }
    Ok(rows)
}
