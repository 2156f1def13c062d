//! Small named joints used as examples and test beds.
//!
//! All inputs are uniform and independent; the observation `X` is a
//! deterministic function of them.

use alloc::vec;
use alloc::vec::Vec;

use crate::{vars, Alphabet, JointTable, Result};

fn uniform(names: &[(&str, usize)]) -> Result<JointTable> {
    let vars = names
        .iter()
        .map(|&(n, k)| Alphabet::indexed(n, k))
        .collect::<Result<Vec<_>>>()?;
    let cells: usize = names.iter().map(|p| p.1).product();
    JointTable::new(vars, vec![1.0 / cells as f64; cells])
}

/// `A, C` fair bits, `X = A ⊕ C`.
pub fn xor() -> Result<JointTable> {
    uniform(&[(vars::ACTION, 2), (vars::CLASS, 2)])?
        .extend_with(Alphabet::indexed(vars::OBSERVED, 2)?, |i| i[0] ^ i[1])
}

/// `X = (A, C)` with nothing lost.
pub fn direct_concat(n_a: usize, n_c: usize) -> Result<JointTable> {
    uniform(&[(vars::ACTION, n_a), (vars::CLASS, n_c)])?
        .extend_with(Alphabet::indexed(vars::OBSERVED, n_a * n_c)?, |i| i[0] * n_c + i[1])
}

/// `A1, A2, C` fair bits, `X = A1 ⊕ A2 ⊕ C`.
pub fn parity() -> Result<JointTable> {
    uniform(&[("A1", 2), ("A2", 2), (vars::CLASS, 2)])?
        .extend_with(Alphabet::indexed(vars::OBSERVED, 2)?, |i| i[0] ^ i[1] ^ i[2])
}

/// `A1, A2, C` fair bits, `X = (A1 ⊕ C, A2 ⊕ C)` encoded as `2 (A1 ⊕ C) + (A2 ⊕ C)`.
pub fn two_channel() -> Result<JointTable> {
    uniform(&[("A1", 2), ("A2", 2), (vars::CLASS, 2)])?
        .extend_with(Alphabet::indexed(vars::OBSERVED, 4)?, |i| 2 * (i[0] ^ i[2]) + (i[1] ^ i[2]))
}

/// `A1 ∈ {0,1}`, `A2, C ∈ {0,1,2}`, `X = A1 + A2 + C`.
///
/// Also carries the pair `A = (A1, A2)` as a single variable with six symbols.
pub fn two_augmentation() -> Result<JointTable> {
    uniform(&[("A1", 2), ("A2", 3), (vars::CLASS, 3)])?
        .extend_with(Alphabet::indexed(vars::ACTION, 6)?, |i| 3 * i[0] + i[1])?
        .extend_with(Alphabet::indexed(vars::OBSERVED, 6)?, |i| i[0] + i[1] + i[2])
}

/// `A` a fair bit, `C = A`, `B` an independent bit and `X = 2A + B`.
pub fn a_copy() -> Result<JointTable> {
    uniform(&[(vars::ACTION, 2), ("B", 2)])?
        .extend_with(Alphabet::indexed(vars::CLASS, 2)?, |i| i[0])?
        .extend_with(Alphabet::indexed(vars::OBSERVED, 4)?, |i| 2 * i[0] + i[1])
}
