use num_bigint::BigInt;
use num_traits::Zero;

use super::matrix::{IntegerMatrix, RationalMatrix};
use super::rational::{rat_from_int, Rat};
use super::snf::{snf, SmithDecomposition};
use crate::error::{Error, Result};

/// Why `A·x ≡ b (mod ℤⁿ)` has no solution: an integer row `u` with
/// `u·A = 0` and `u·b = value ∉ ℤ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obstruction {
    /// Zero row of the Smith form the witness was read from.
    pub row: usize,
    pub witness: Vec<BigInt>,
    pub value: Rat,
}

impl Obstruction {
    /// Re-checks the witness against `A` (integer) and `b` by pure arithmetic.
    pub fn verify(&self, a: &IntegerMatrix, b: &[Rat]) -> bool {
        if self.witness.len() != a.rows() || b.len() != a.rows() {
            return false;
        }
        let annihilates = (0..a.cols()).all(|j| {
            self.witness
                .iter()
                .enumerate()
                .fold(BigInt::zero(), |acc, (i, u)| acc + u * &a[(i, j)])
                .is_zero()
        });
        let value: Rat = self
            .witness
            .iter()
            .zip(b)
            .fold(Rat::zero(), |acc, (u, bi)| acc + bi * u);
        annihilates && value == self.value && !value.is_integer()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AffineSolution {
    /// `A·x = b + m` holds exactly.
    Solvable { x: Vec<Rat>, m: Vec<BigInt> },
    Obstructed(Obstruction),
}

impl AffineSolution {
    pub fn is_solvable(&self) -> bool {
        matches!(self, AffineSolution::Solvable { .. })
    }
}

/// Decides whether `A·x = b + m` has a solution with `x ∈ ℚᵏ`, `m ∈ ℤⁿ`.
///
/// Denominators of `A` are cleared first; with `U·A'·V = D` the system is
/// solvable iff `(U·b)ᵢ ∈ ℤ` on every zero row `i` of `D`.
pub fn solve_affine_mod_lattice(a: &RationalMatrix, b: &[Rat]) -> Result<AffineSolution> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    let (denom, scaled) = a.clear_denominators();
    let smith = snf(&scaled);
    let solution = solve_with_smith(&smith, b);
    Ok(match solution {
        AffineSolution::Solvable { x, m } => {
            // Solved A'·y = b + m; A·(d·y) = A'·y.
            let d = rat_from_int(&denom);
            AffineSolution::Solvable { x: x.into_iter().map(|xi| xi * &d).collect(), m }
        }
        obstructed => obstructed,
    })
}

/// Core of the decision procedure for an integer matrix whose SNF is known.
pub(crate) fn solve_with_smith(smith: &SmithDecomposition, b: &[Rat]) -> AffineSolution {
    let rank = smith.rank();
    let ub = smith.u.mul_rat_vec(b);
    for i in rank..ub.len() {
        if !ub[i].is_integer() {
            return AffineSolution::Obstructed(Obstruction {
                row: i,
                witness: smith.u.row(i).to_vec(),
                value: ub[i].clone(),
            });
        }
    }
    // D·z = U·b + m' with m' = 0 on pivot rows and m'ᵢ = -(U·b)ᵢ elsewhere.
    let cols = smith.v.rows();
    let mut z = vec![Rat::zero(); cols];
    for (i, zi) in z.iter_mut().enumerate().take(rank) {
        *zi = &ub[i] / rat_from_int(&smith.d[(i, i)]);
    }
    let m_prime: Vec<BigInt> = (0..ub.len())
        .map(|i| if i < rank { BigInt::zero() } else { -ub[i].to_integer() })
        .collect();
    let u_inv = smith.u.inverse_unimodular().expect("SNF transform is unimodular");
    let m = u_inv.mul_vec(&m_prime);
    let x = smith.v.mul_rat_vec(&z);
    AffineSolution::Solvable { x, m }
}
