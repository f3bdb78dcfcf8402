use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::hnf::column_hnf_basis;
use super::matrix::IntegerMatrix;
use super::rational::{rat_from_int, Rat};
use super::snf::snf;
use crate::error::{Error, Result};

/// A sublattice of `ℤⁿ` given by independent basis columns.
///
/// The stored basis is always the canonical column-HNF basis, so two
/// `Sublattice`s compare equal iff they are the same lattice. The
/// `saturated` flag records whether `span_ℚ(basis) ∩ ℤⁿ = span_ℤ(basis)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sublattice {
    ambient_rank: usize,
    basis: IntegerMatrix,
    saturated: bool,
}

impl Sublattice {
    pub fn new(basis: &IntegerMatrix) -> Result<Self> {
        let s = snf(basis);
        if s.rank() != basis.cols() {
            return Err(Error::DependentColumns);
        }
        let saturated = s.elementary_divisors().iter().all(One::is_one);
        Ok(Self {
            ambient_rank: basis.rows(),
            basis: column_hnf_basis(basis),
            saturated,
        })
    }

    /// The lattice spanned by arbitrary (possibly dependent) generators.
    pub fn spanned_by(generators: &IntegerMatrix) -> Self {
        let basis = column_hnf_basis(generators);
        Self::new(&basis).expect("column HNF basis is independent")
    }

    pub fn full(n: usize) -> Self {
        Self::new(&IntegerMatrix::identity(n)).expect("identity is independent")
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &IntegerMatrix {
        &self.basis
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        lattice_membership(v, self).is_some()
    }

    /// Image under an integer matrix; errors if the image basis degenerates.
    pub fn image(&self, a: &IntegerMatrix) -> Result<Self> {
        if a.cols() != self.ambient_rank {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, lattice lives in rank {}",
                a.cols(),
                self.ambient_rank
            )));
        }
        Self::new(&(a * &self.basis))
    }

    /// Internal direct sum: concatenated bases, which must stay independent.
    pub fn direct_sum(parts: &[&Sublattice]) -> Result<Self> {
        let bases: Vec<&IntegerMatrix> = parts.iter().map(|p| &p.basis).collect();
        Self::new(&IntegerMatrix::hstack(&bases))
    }

    /// Index `[self : sub]` for a full-rank pair; `None` if `sub` is not a
    /// full-rank sublattice of `self`.
    pub fn index_of(&self, sub: &Sublattice) -> Option<BigInt> {
        if sub.rank() != self.rank() || sub.ambient_rank != self.ambient_rank {
            return None;
        }
        let mut coords = Vec::with_capacity(sub.rank());
        for v in sub.basis.columns() {
            let v: Vec<Rat> = v.iter().map(rat_from_int).collect();
            coords.push(lattice_membership(&v, self)?);
        }
        let m = IntegerMatrix::from_columns(self.rank(), &coords);
        let det = m.determinant();
        (!det.is_zero()).then(|| num_traits::Signed::abs(&det))
    }
}

/// Saturation: the lattice `span_ℚ(basis) ∩ ℤⁿ`.
pub fn saturate(l: &Sublattice) -> Sublattice {
    if l.saturated {
        return l.clone();
    }
    // B = U⁻¹·D·V⁻¹, so the first r columns of U⁻¹ span the same ℚ-space and,
    // being part of a unimodular basis, span a saturated lattice.
    let s = snf(&l.basis);
    let u_inv = s.u.inverse_unimodular().expect("SNF transform is unimodular");
    let basis = u_inv.select_columns(0..s.rank());
    Sublattice::new(&basis).expect("columns of a unimodular matrix are independent")
}

/// Decides `v ∈ span_ℤ(basis)`; returns the unique integer coordinates.
pub fn lattice_membership(v: &[Rat], l: &Sublattice) -> Option<Vec<BigInt>> {
    if v.len() != l.ambient_rank {
        return None;
    }
    let s = snf(&l.basis);
    let w = s.u.mul_rat_vec(v);
    let rank = s.rank();
    let mut reduced = Vec::with_capacity(l.rank());
    for (i, wi) in w.iter().enumerate() {
        if i < rank {
            let c = wi / rat_from_int(&s.d[(i, i)]);
            if !c.is_integer() {
                return None;
            }
            reduced.push(c.to_integer());
        } else if !wi.is_zero() {
            return None;
        }
    }
    Some(s.v.mul_vec(&reduced))
}
