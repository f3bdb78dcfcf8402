//! Complex tori presented as `ℝ²ᵍ/ℤ²ᵍ` with a rational complex structure `J`.
//!
//! A torus always uses its own lattice basis as coordinates, so its lattice is
//! `ℤ²ᵍ`. `basis_change` records how that basis sits inside the reference
//! lattice it was derived from (the identity for elliptic curves and
//! products), which is how quotient tori keep track of the points and maps
//! they inherited.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact_linear::rational::{format_rational, gcd_all, mod_positive, parse_rational, rat_from_int, Rat};
use crate::exact_linear::{column_hnf_basis, snf, IntegerMatrix, RationalMatrix, Sublattice};

/// `τ = tau_re + i·tau_im` in the upper half-plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EllipticCurveParam {
    pub tau_re: Rat,
    pub tau_im: Rat,
}

impl EllipticCurveParam {
    pub fn new(tau_re: Rat, tau_im: Rat) -> Result<Self> {
        if !tau_im.is_positive() {
            return Err(Error::NotInUpperHalfPlane(format_rational(&tau_im)));
        }
        Ok(Self { tau_re, tau_im })
    }

    /// Shorthand for `τ = re_n/re_d + (im_n/im_d)·i`.
    pub fn from_fractions(re: (i64, i64), im: (i64, i64)) -> Result<Self> {
        Self::new(
            Rat::new(re.0.into(), re.1.into()),
            Rat::new(im.0.into(), im.1.into()),
        )
    }
}

impl fmt::Display for EllipticCurveParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}i", format_rational(&self.tau_re), format_rational(&self.tau_im))
    }
}

impl FromStr for EllipticCurveParam {
    type Err = Error;

    /// Parses `re+imi` (or `re-imi`), both parts rationals such as `1/2`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::MalformedParameter(text.to_string());
        let body = text.trim().strip_suffix('i').ok_or_else(bad)?;
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(_, c)| c == '+' || c == '-')
            .map(|(i, _)| i)
            .last()
            .ok_or_else(bad)?;
        let re = parse_rational(&body[..split]).ok_or_else(bad)?;
        let im_text = body[split..].strip_prefix('+').unwrap_or(&body[split..]);
        let im = parse_rational(im_text).ok_or_else(bad)?;
        Self::new(re, im)
    }
}

impl Serialize for EllipticCurveParam {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EllipticCurveParam {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct ComplexTorus {
    dim: usize,
    j: RationalMatrix,
    basis_change: RationalMatrix,
    basis_change_inv: RationalMatrix,
    blocks: Vec<Range<usize>>,
}

impl ComplexTorus {
    /// Validates `J² = -I` and the shapes. `blocks` are coordinate ranges of
    /// the product factors, in reference coordinates.
    pub fn new(j: RationalMatrix, basis_change: RationalMatrix, blocks: Vec<Range<usize>>) -> Result<Self> {
        let n = j.rows();
        if !j.is_square() || n % 2 != 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "complex structure must be a nonempty even square matrix, got {}x{}",
                j.rows(),
                j.cols()
            )));
        }
        if basis_change.rows() != n || basis_change.cols() != n {
            return Err(Error::DimensionMismatch("basis change must match J".into()));
        }
        if !(&(&j * &j) + &RationalMatrix::identity(n)).entries().iter().all(Zero::is_zero) {
            return Err(Error::BadComplexStructure);
        }
        let basis_change_inv = basis_change
            .inverse()
            .ok_or_else(|| Error::DimensionMismatch("basis change is singular".into()))?;
        Ok(Self { dim: n / 2, j, basis_change, basis_change_inv, blocks })
    }

    /// Complex dimension `g`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.dim
    }

    pub fn complex_structure(&self) -> &RationalMatrix {
        &self.j
    }

    /// Columns are the current lattice basis in reference coordinates.
    pub fn basis_change(&self) -> &RationalMatrix {
        &self.basis_change
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn to_reference(&self, v: &[Rat]) -> Vec<Rat> {
        self.basis_change.mul_vec(v)
    }

    pub fn from_reference(&self, v: &[Rat]) -> Vec<Rat> {
        self.basis_change_inv.mul_vec(v)
    }

    /// Rewrites a reference-coordinate linear map in this torus' basis.
    pub fn linear_from_reference(&self, a: &IntegerMatrix) -> RationalMatrix {
        &(&self.basis_change_inv * &a.to_rational()) * &self.basis_change
    }

    /// `A·J = J·A`, i.e. `A` is ℂ-linear for this complex structure.
    pub fn is_holomorphic(&self, a: &IntegerMatrix) -> bool {
        let a = a.to_rational();
        a.rows() == self.real_dim() && a.cols() == self.real_dim() && &a * &self.j == &self.j * &a
    }

    fn require_holomorphic(&self, a: &IntegerMatrix) -> Result<()> {
        if a.rows() != self.real_dim() || a.cols() != self.real_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected a {0}x{0} matrix, got {1}x{2}",
                self.real_dim(),
                a.rows(),
                a.cols()
            )));
        }
        if !self.is_holomorphic(a) {
            return Err(Error::NotHolomorphic);
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexTorus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexTorus")
            .field("dim", &self.dim)
            .field("j", &self.j)
            .field("basis_change", &self.basis_change)
            .field("blocks", &self.blocks)
            .finish()
    }
}

/// `E = ℂ/(ℤ + ℤτ)` in the basis `(1, τ)`.
pub fn elliptic_curve(p: &EllipticCurveParam) -> ComplexTorus {
    let (x, y) = (&p.tau_re, &p.tau_im);
    let j = RationalMatrix::new(
        2,
        2,
        vec![-(x / y), -((x * x + y * y) / y), y.recip(), x / y],
    );
    ComplexTorus::new(j, RationalMatrix::identity(2), vec![0..2]).expect("J^2 = -I holds for every tau with positive imaginary part")
}

/// Product torus with block-diagonal complex structure.
pub fn product(factors: &[ComplexTorus]) -> Result<ComplexTorus> {
    if factors.is_empty() {
        return Err(Error::EmptyProduct);
    }
    let n: usize = factors.iter().map(ComplexTorus::real_dim).sum();
    let mut j = vec![Rat::zero(); n * n];
    let mut basis = vec![Rat::zero(); n * n];
    let mut blocks = Vec::new();
    let mut offset = 0;
    for t in factors {
        let m = t.real_dim();
        for r in 0..m {
            for c in 0..m {
                j[(offset + r) * n + offset + c] = t.j[(r, c)].clone();
                basis[(offset + r) * n + offset + c] = t.basis_change[(r, c)].clone();
            }
        }
        blocks.extend(t.blocks.iter().map(|b| b.start + offset..b.end + offset));
        offset += m;
    }
    ComplexTorus::new(RationalMatrix::new(n, n, j), RationalMatrix::new(n, n, basis), blocks)
}

/// `T/H`: the lattice grows to `ℤ²ᵍ + ℤ·lifts(H)` and is re-presented in
/// its column-HNF basis.
pub fn quotient_by_finite_subgroup(t: &ComplexTorus, h: &FiniteSubgroup) -> Result<ComplexTorus> {
    if h.dim() != t.real_dim() {
        return Err(Error::DimensionMismatch("subgroup lives on a torus of another dimension".into()));
    }
    let n = t.real_dim();
    let den = h.generators.iter().fold(BigInt::one(), |acc, g| acc.lcm(&g.den));
    let mut columns: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut e = vec![BigInt::zero(); n];
            e[i] = den.clone();
            e
        })
        .collect();
    for g in &h.generators {
        let scale = &den / &g.den;
        columns.push(g.num.iter().map(|x| x * &scale).collect());
    }
    let basis = column_hnf_basis(&IntegerMatrix::from_columns(n, &columns));
    debug_assert_eq!(basis.cols(), n);
    let b = RationalMatrix::new(
        n,
        n,
        basis.entries().iter().map(|x| Rat::new(x.clone(), den.clone())).collect(),
    );
    let b_inv = b.inverse().expect("lattice basis is invertible");
    let j = &(&b_inv * &t.j) * &b;
    ComplexTorus::new(j, &t.basis_change * &b, t.blocks.clone())
}

/// Saturated lattice `ker_ℚ(A) ∩ ℤ²ᵍ`, presenting the subtorus `ker(A)⁰`.
pub fn connected_kernel(t: &ComplexTorus, a: &IntegerMatrix) -> Result<Sublattice> {
    t.require_holomorphic(a)?;
    let s = snf(a);
    let basis = s.v.select_columns(s.rank()..a.cols());
    Sublattice::new(&basis)
}

/// Saturation of the column span of `A`, presenting the subtorus `im(A)`.
pub fn image_subtorus(t: &ComplexTorus, a: &IntegerMatrix) -> Result<Sublattice> {
    t.require_holomorphic(a)?;
    Ok(crate::exact_linear::saturate(&Sublattice::spanned_by(a)))
}

/// `span_ℚ(W) ∩ ℤ²ᵍ` for a rational basis `W` given in the torus' coordinates.
pub fn lattice_intersection(w_basis: &RationalMatrix, t: &ComplexTorus) -> Result<Sublattice> {
    if w_basis.rows() != t.real_dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace basis has {} rows, torus has real dimension {}",
            w_basis.rows(),
            t.real_dim()
        )));
    }
    if w_basis.rank() != w_basis.cols() {
        return Err(Error::DependentColumns);
    }
    let (_, scaled) = w_basis.clear_denominators();
    Ok(crate::exact_linear::saturate(&Sublattice::new(&scaled)?))
}

/// Presents `Λ/L` for a full-rank internal direct sum `L = L₁ ⊕ … ⊕ L_k`.
///
/// The returned subgroup lives on the product torus `V/L`, whose coordinates
/// are taken with respect to the concatenated bases of the parts.
pub fn component_group(t: &ComplexTorus, parts: &[&Sublattice]) -> Result<FiniteSubgroup> {
    let n = t.real_dim();
    if parts.iter().any(|p| p.ambient_rank() != n) {
        return Err(Error::DimensionMismatch("sublattice ambient rank differs from the torus".into()));
    }
    let bases: Vec<&IntegerMatrix> = parts.iter().map(|p| p.basis()).collect();
    let l = IntegerMatrix::hstack(&bases);
    if l.cols() != n || l.determinant().is_zero() {
        return Err(Error::NotFullRank);
    }
    let l_rat = l.to_rational();
    let l_inv = l_rat.inverse().expect("full rank");
    let ambient = ComplexTorus::new(
        &(&l_inv * &t.j) * &l_rat,
        &t.basis_change * &l_rat,
        t.blocks.clone(),
    )?;

    // L = U⁻¹·D·V⁻¹, so Λ/L ≅ ⊕ ℤ/dᵢ with generators the columns of U⁻¹.
    let s = snf(&l);
    let u_inv = s.u.inverse_unimodular().expect("SNF transform is unimodular");
    let generators = (0..n)
        .filter(|&i| !s.d[(i, i)].is_one())
        .map(|i| {
            let g: Vec<Rat> = u_inv.column(i).iter().map(rat_from_int).collect();
            TorsionPoint::new(&l_inv.mul_vec(&g))
        })
        .collect();
    FiniteSubgroup::generate(Arc::new(ambient), generators)
}

/// A point of `ℚ²ᵍ/ℤ²ᵍ`, stored as integer numerators over a common
/// denominator with every numerator in `[0, den)` and `gcd(nums, den) = 1`.
/// The denominator is therefore the order of the point.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorsionPoint {
    den: BigInt,
    num: Vec<BigInt>,
}

impl TorsionPoint {
    pub fn new(coords: &[Rat]) -> Self {
        let den = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num = coords.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        Self::from_parts(num, den)
    }

    /// Builds from `(numerator, denominator)` pairs.
    pub fn from_fractions(coords: &[(i64, i64)]) -> Self {
        let coords: Vec<Rat> = coords.iter().map(|&(n, d)| Rat::new(n.into(), d.into())).collect();
        Self::new(&coords)
    }

    pub fn zero(n: usize) -> Self {
        Self { den: BigInt::one(), num: vec![BigInt::zero(); n] }
    }

    /// Canonicalizes `num / den` (den nonzero).
    pub fn from_parts(num: Vec<BigInt>, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let (num, den) = if den.is_negative() {
            (num.into_iter().map(|x| -x).collect::<Vec<_>>(), -den)
        } else {
            (num, den)
        };
        let mut num: Vec<BigInt> = num.iter().map(|x| mod_positive(x, &den)).collect();
        let g = gcd_all(num.iter()).gcd(&den);
        let den = if g.is_one() {
            den
        } else {
            for x in &mut num {
                *x /= &g;
            }
            den / &g
        };
        Self { den, num }
    }

    pub fn dim(&self) -> usize {
        self.num.len()
    }

    pub fn coords(&self) -> Vec<Rat> {
        self.num.iter().map(|x| Rat::new(x.clone(), self.den.clone())).collect()
    }

    pub fn coord(&self, i: usize) -> Rat {
        Rat::new(self.num[i].clone(), self.den.clone())
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.num
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    /// Order in `ℚ²ᵍ/ℤ²ᵍ`.
    pub fn order(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.den.is_one()
    }

    pub fn add(&self, other: &TorsionPoint) -> TorsionPoint {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        if self.den == other.den {
            let num = self.num.iter().zip(&other.num).map(|(a, b)| a + b).collect();
            return Self::from_parts(num, self.den.clone());
        }
        let den = self.den.lcm(&other.den);
        let (fa, fb) = (&den / &self.den, &den / &other.den);
        let num = self.num.iter().zip(&other.num).map(|(a, b)| a * &fa + b * &fb).collect();
        Self::from_parts(num, den)
    }

    pub fn neg(&self) -> TorsionPoint {
        Self::from_parts(self.num.iter().map(|x| -x).collect(), self.den.clone())
    }

    pub fn sub(&self, other: &TorsionPoint) -> TorsionPoint {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: i64) -> TorsionPoint {
        let k = BigInt::from(k);
        Self::from_parts(self.num.iter().map(|x| x * &k).collect(), self.den.clone())
    }

    /// Image under an integer linear map of the lattice.
    pub fn apply(&self, a: &IntegerMatrix) -> TorsionPoint {
        Self::from_parts(a.mul_vec(&self.num), self.den.clone())
    }

    /// Image under a rational map; only meaningful when the map sends the
    /// source lattice into the target lattice.
    pub fn apply_rational(&self, a: &RationalMatrix) -> TorsionPoint {
        TorsionPoint::new(&a.mul_vec(&self.coords()))
    }

    pub fn slice(&self, range: Range<usize>) -> TorsionPoint {
        Self::from_parts(self.num[range].to_vec(), self.den.clone())
    }

    pub fn concat(parts: &[&TorsionPoint]) -> TorsionPoint {
        let den = parts.iter().fold(BigInt::one(), |acc, p| acc.lcm(&p.den));
        let num = parts
            .iter()
            .flat_map(|p| {
                let f = &den / &p.den;
                p.num.iter().map(move |x| x * &f)
            })
            .collect();
        Self::from_parts(num, den)
    }

    /// Integer dot product `u·num`, the numerator of `u·point` over `den`.
    pub(crate) fn dot_numerators(&self, u: &[BigInt]) -> BigInt {
        u.iter()
            .zip(&self.num)
            .filter(|(a, _)| !a.is_zero())
            .fold(BigInt::zero(), |acc, (a, b)| acc + a * b)
    }
}

impl fmt::Display for TorsionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if c.is_integer() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{}/{}", c.numer(), c.denom())?;
            }
        }
        write!(f, ")")
    }
}

impl FromStr for TorsionPoint {
    type Err = Error;

    /// Comma-separated rationals, e.g. `1/2,0/1`.
    fn from_str(text: &str) -> Result<Self> {
        let coords = text
            .split(',')
            .map(|c| parse_rational(c.trim()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::MalformedParameter(text.to_string()))?;
        Ok(Self::new(&coords))
    }
}

impl Serialize for TorsionPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.coords().iter().map(format_rational))
    }
}

impl<'de> Deserialize<'de> for TorsionPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<String>::deserialize(deserializer)?;
        let coords = parts
            .iter()
            .map(|p| parse_rational(p).ok_or_else(|| serde::de::Error::custom(format!("bad rational '{p}'"))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(TorsionPoint::new(&coords))
    }
}

impl fmt::Debug for TorsionPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorsionPoint{self}")
    }
}

/// A finite subgroup of a torus given by torsion generators; the full element
/// set is enumerated at construction.
#[derive(Clone)]
pub struct FiniteSubgroup {
    ambient: Arc<ComplexTorus>,
    generators: Vec<TorsionPoint>,
    elements: BTreeSet<TorsionPoint>,
}

impl FiniteSubgroup {
    pub fn generate(ambient: Arc<ComplexTorus>, generators: Vec<TorsionPoint>) -> Result<Self> {
        let n = ambient.real_dim();
        if generators.iter().any(|g| g.dim() != n) {
            return Err(Error::DimensionMismatch("generator dimension differs from the torus".into()));
        }
        let elements = closure(n, &generators);
        Ok(Self { ambient, generators, elements })
    }

    pub fn trivial(ambient: Arc<ComplexTorus>) -> Self {
        Self::generate(ambient, Vec::new()).expect("no generators to mismatch")
    }

    pub fn ambient(&self) -> &Arc<ComplexTorus> {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ambient.real_dim()
    }

    pub fn generators(&self) -> &[TorsionPoint] {
        &self.generators
    }

    pub fn elements(&self) -> impl Iterator<Item = &TorsionPoint> {
        self.elements.iter()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, p: &TorsionPoint) -> bool {
        self.elements.contains(p)
    }

    pub fn exponent(&self) -> BigInt {
        self.elements.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.order()))
    }

    /// `A(H) ⊆ H` for an integer map of the ambient lattice.
    pub fn is_invariant_under(&self, a: &IntegerMatrix) -> bool {
        self.generators.iter().all(|g| self.contains(&g.apply(a)))
    }

    /// The elements written in the ambient torus' reference coordinates,
    /// reduced modulo the reference lattice.
    pub fn reference_elements(&self) -> BTreeSet<TorsionPoint> {
        self.elements
            .iter()
            .map(|e| TorsionPoint::new(&self.ambient.to_reference(&e.coords())))
            .collect()
    }
}

impl fmt::Debug for FiniteSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteSubgroup")
            .field("generators", &self.generators)
            .field("order", &self.elements.len())
            .finish()
    }
}

pub(crate) fn closure(n: usize, generators: &[TorsionPoint]) -> BTreeSet<TorsionPoint> {
    let mut elements = BTreeSet::from([TorsionPoint::zero(n)]);
    for g in generators {
        if elements.contains(g) {
            continue;
        }
        // Add the cyclic group of g to everything found so far.
        let current: Vec<TorsionPoint> = elements.iter().cloned().collect();
        let mut multiple = g.clone();
        while !multiple.is_zero() {
            for e in &current {
                elements.insert(e.add(&multiple));
            }
            multiple = multiple.add(g);
        }
    }
    elements
}
