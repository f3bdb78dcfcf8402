//! D4 actions on quotients `(E₁ × E₂ × E₃)/H` with `E₁ = E₂ = E(τ)` and
//! `E₃ = E(τ′)`.
//!
//! The generators are
//!
//! ```text
//! r(z₁, z₂, z₃) = (z₂, −z₁, z₃ + c₃)
//! s(z₁, z₂, z₃) = (z₁ + a₁, −z₂ + a₂, ±z₃ + a₃)
//! ```
//!
//! with the sign `−` in Case 1 and `+` in Case 2. All points are given in
//! lattice coordinates of the product: `x + y·τ ↦ (x, y)` on each factor.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::affine_actions::{generate_group, AffineAut, GeneratedGroup, NamedGenerator, DEFAULT_GROUP_CAP};
use crate::error::{Error, Result};
use crate::exact_linear::rational::Rat;
use crate::exact_linear::{IntegerMatrix, RationalMatrix, Sublattice};
use crate::torus::{
    component_group, connected_kernel, elliptic_curve, image_subtorus, lattice_intersection, product,
    quotient_by_finite_subgroup, ComplexTorus, EllipticCurveParam, FiniteSubgroup, TorsionPoint,
};

/// Which linear representation `ρ` the action has; the cases differ in the
/// multiplicity of the eigenvalue 1 of `S = ρ(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CaseTag {
    /// `S = diag(1, −1, −1)`.
    Case1,
    /// `S = diag(1, −1, 1)`.
    Case2,
}

impl CaseTag {
    pub fn number(self) -> u8 {
        match self {
            CaseTag::Case1 => 1,
            CaseTag::Case2 => 2,
        }
    }

    fn s_sign_on_e3(self) -> i64 {
        match self {
            CaseTag::Case1 => -1,
            CaseTag::Case2 => 1,
        }
    }
}

impl From<CaseTag> for u8 {
    fn from(c: CaseTag) -> u8 {
        c.number()
    }
}

impl TryFrom<u8> for CaseTag {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        match n {
            1 => Ok(CaseTag::Case1),
            2 => Ok(CaseTag::Case2),
            _ => Err(format!("unknown case {n}")),
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Case {}", self.number())
    }
}

/// Linear parts of `r` and `s`: complex 3×3 forms and their 6×6 lattice
/// realizations (each complex entry tensored with `I₂`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseMatrices {
    pub r_complex: IntegerMatrix,
    pub s_complex: IntegerMatrix,
    pub r: IntegerMatrix,
    pub s: IntegerMatrix,
}

pub fn case_matrices(case: CaseTag) -> CaseMatrices {
    let r_complex = IntegerMatrix::from_rows(&[[0, 1, 0], [-1, 0, 0], [0, 0, 1]]);
    let s_complex = IntegerMatrix::from_rows(&[[1, 0, 0], [0, -1, 0], [0, 0, case.s_sign_on_e3()]]);
    let i2 = IntegerMatrix::identity(2);
    CaseMatrices {
        r: r_complex.kronecker(&i2),
        s: s_complex.kronecker(&i2),
        r_complex,
        s_complex,
    }
}

/// `E(τ) × E(τ) × E(τ′)`.
pub fn base_torus(tau: &EllipticCurveParam, tau_prime: &EllipticCurveParam) -> ComplexTorus {
    let e = elliptic_curve(tau);
    product(&[e.clone(), e, elliptic_curve(tau_prime)]).expect("three factors")
}

/// A full parameter tuple. Points `a₁`, `a₂`, `a₃`, `c₃` live on single
/// factors (two coordinates each); `h_gens` live on the product.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct D4Parameters {
    pub case: CaseTag,
    pub tau: EllipticCurveParam,
    pub tau_prime: EllipticCurveParam,
    pub a1: TorsionPoint,
    pub a2: TorsionPoint,
    pub a3: TorsionPoint,
    pub c3: TorsionPoint,
    pub h_gens: Vec<TorsionPoint>,
}

impl D4Parameters {
    /// The Case-1 family `a₁ = h`, `a₂ = k`, `c₃ = h′`, `a₃ = 0` with
    /// `H = ⟨(h + k, h + k, 0)⟩`.
    pub fn theorem_shape(
        tau: EllipticCurveParam,
        tau_prime: EllipticCurveParam,
        h: TorsionPoint,
        k: TorsionPoint,
        h_prime: TorsionPoint,
    ) -> Self {
        let sum = h.add(&k);
        let omega = TorsionPoint::concat(&[&sum, &sum, &TorsionPoint::zero(2)]);
        Self {
            case: CaseTag::Case1,
            tau,
            tau_prime,
            a1: h,
            a2: k,
            a3: TorsionPoint::zero(2),
            c3: h_prime,
            h_gens: vec![omega],
        }
    }

    /// `h = 1/2`, `k = τ/2`, `h′ = 1/4`.
    pub fn normal_form(tau: EllipticCurveParam, tau_prime: EllipticCurveParam) -> Self {
        Self::theorem_shape(
            tau,
            tau_prime,
            TorsionPoint::from_fractions(&[(1, 2), (0, 1)]),
            TorsionPoint::from_fractions(&[(0, 1), (1, 2)]),
            TorsionPoint::from_fractions(&[(1, 4), (0, 1)]),
        )
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [("a1", &self.a1), ("a2", &self.a2), ("a3", &self.a3), ("c3", &self.c3)] {
            if p.dim() != 2 {
                return Err(Error::DimensionMismatch(format!("{name} must have two coordinates")));
            }
        }
        if self.h_gens.iter().any(|g| g.dim() != 6) {
            return Err(Error::DimensionMismatch("H generators must have six coordinates".into()));
        }
        if self.case == CaseTag::Case1 && !self.a3.is_zero() {
            return Err(Error::NotNormalized("Case 1 puts the origin of E3 so that a3 = 0".into()));
        }
        Ok(())
    }

    /// Translation part of `r` on the product, `(0, 0, c₃)`.
    pub fn r_translation(&self) -> TorsionPoint {
        let z = TorsionPoint::zero(2);
        TorsionPoint::concat(&[&z, &z, &self.c3])
    }

    /// Translation part of `s` on the product, `(a₁, a₂, a₃)`.
    pub fn s_translation(&self) -> TorsionPoint {
        TorsionPoint::concat(&[&self.a1, &self.a2, &self.a3])
    }
}

/// Why a parameter tuple does not define an action on the quotient.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rejection {
    /// The linear part of this generator does not map `H` into itself.
    LatticeNotPreserved { generator: char },
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::LatticeNotPreserved { generator } => {
                write!(f, "{generator} does not preserve the extended lattice")
            }
        }
    }
}

/// The action on `T = (E₁ × E₂ × E₃)/H`, written in `T`'s own lattice basis.
#[derive(Clone, Debug)]
pub struct D4Action {
    pub torus: Arc<ComplexTorus>,
    pub r: AffineAut,
    pub s: AffineAut,
}

impl D4Action {
    pub fn generators(&self) -> Vec<NamedGenerator> {
        vec![NamedGenerator::new('r', self.r.clone()), NamedGenerator::new('s', self.s.clone())]
    }

    pub fn group(&self) -> Result<GeneratedGroup> {
        generate_group(&self.generators(), DEFAULT_GROUP_CAP)
    }
}

#[derive(Clone, Debug)]
pub enum BuildOutcome {
    Built(D4Action),
    Rejected(Rejection),
}

impl BuildOutcome {
    pub fn action(self) -> Option<D4Action> {
        match self {
            BuildOutcome::Built(a) => Some(a),
            BuildOutcome::Rejected(_) => None,
        }
    }
}

/// Everything about the quotient that depends only on `(case, τ, τ′, H)`,
/// shared by all translation parameters.
#[derive(Clone, Debug)]
pub struct D4Frame {
    case: CaseTag,
    base: Arc<ComplexTorus>,
    subgroup: FiniteSubgroup,
    torus: Arc<ComplexTorus>,
    linear: std::result::Result<(IntegerMatrix, IntegerMatrix), Rejection>,
}

impl D4Frame {
    pub fn new(
        case: CaseTag,
        tau: &EllipticCurveParam,
        tau_prime: &EllipticCurveParam,
        h_gens: &[TorsionPoint],
    ) -> Result<Self> {
        if h_gens.iter().any(|g| g.dim() != 6) {
            return Err(Error::DimensionMismatch("H generators must have six coordinates".into()));
        }
        let base = Arc::new(base_torus(tau, tau_prime));
        let subgroup = FiniteSubgroup::generate(base.clone(), h_gens.to_vec())?;
        let torus = Arc::new(quotient_by_finite_subgroup(&base, &subgroup)?);
        let m = case_matrices(case);
        let to_quotient = |a: &IntegerMatrix, name: char| {
            torus
                .linear_from_reference(a)
                .to_integer()
                .ok_or(Rejection::LatticeNotPreserved { generator: name })
        };
        let linear = to_quotient(&m.r, 'r').and_then(|r| Ok((r, to_quotient(&m.s, 's')?)));
        Ok(Self { case, base, subgroup, torus, linear })
    }

    pub fn case(&self) -> CaseTag {
        self.case
    }

    pub fn base(&self) -> &Arc<ComplexTorus> {
        &self.base
    }

    /// `H` on the product torus.
    pub fn subgroup(&self) -> &FiniteSubgroup {
        &self.subgroup
    }

    pub fn torus(&self) -> &Arc<ComplexTorus> {
        &self.torus
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        self.linear.as_ref().err()
    }

    /// Linear parts of `r` and `s` in the quotient basis.
    pub fn linear_parts(&self) -> Option<(&IntegerMatrix, &IntegerMatrix)> {
        self.linear.as_ref().ok().map(|(r, s)| (r, s))
    }

    /// A point of the product, rewritten as a point of the quotient.
    pub fn push_down(&self, p: &TorsionPoint) -> TorsionPoint {
        TorsionPoint::new(&self.torus.from_reference(&p.coords()))
    }

    pub fn build(&self, r_translation: &TorsionPoint, s_translation: &TorsionPoint) -> BuildOutcome {
        match &self.linear {
            Err(rejection) => BuildOutcome::Rejected(rejection.clone()),
            Ok((r, s)) => {
                let make = |a: &IntegerMatrix, t: &TorsionPoint| {
                    AffineAut::new(self.torus.clone(), a.clone(), self.push_down(t))
                        .expect("conjugated linear parts stay unimodular and holomorphic")
                };
                BuildOutcome::Built(D4Action {
                    torus: self.torus.clone(),
                    r: make(r, r_translation),
                    s: make(s, s_translation),
                })
            }
        }
    }
}

/// Assembles the action of `p` on `(E₁ × E₂ × E₃)/H`, or reports why the
/// maps do not descend.
pub fn build_general(p: &D4Parameters) -> Result<BuildOutcome> {
    p.validate()?;
    let frame = D4Frame::new(p.case, &p.tau, &p.tau_prime, &p.h_gens)?;
    Ok(frame.build(&p.r_translation(), &p.s_translation()))
}

/// The normal form with `h = 1/2`, `k = τ/2`, `h′ = 1/4`, `H = ⟨ω⟩`.
pub fn build_normal_form(tau: &EllipticCurveParam, tau_prime: &EllipticCurveParam) -> Result<D4Action> {
    let p = D4Parameters::normal_form(tau.clone(), tau_prime.clone());
    match build_general(&p)? {
        BuildOutcome::Built(action) => Ok(action),
        BuildOutcome::Rejected(Rejection::LatticeNotPreserved { generator }) => {
            Err(Error::LatticeNotPreserved(generator))
        }
    }
}

/// Membership and exclusion conditions on `H`, each decided by running over
/// the elements of `H` on the product torus.
///
/// Case 1 uses the conditions exactly as stated for `a₃ = 0`. Case 2 uses the
/// same derivations with `s` acting by `+z₃ + a₃`; the fields then mean:
/// `s2_in_h`: `(2a₁, 0, 2a₃) ∈ H`; `rs2_in_h`: `(a₁+a₂, −a₁−a₂, 2(a₃+c₃)) ∈ H`;
/// `excludes_a1`: no element `(a₁, w₂, a₃)`; `excludes_rs`: no element with
/// `d₁ + a₂ = d₂ − a₁` and `d₃ = −(a₃ + c₃)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaConditionReport {
    pub case: CaseTag,
    /// (i) `(0, 0, 4c₃) ∈ H`.
    pub r4_in_h: bool,
    /// (ii) `(2a₁, 0, 0) ∈ H`.
    pub s2_in_h: bool,
    /// (iii) `(a₁ + a₂, −a₁ − a₂, 0) ∈ H`.
    pub rs2_in_h: bool,
    /// (1) no element `(w₁, w₂, c₃)`.
    pub excludes_c3: bool,
    /// (2) no element `(w₁, w₂, 2c₃)`.
    pub excludes_2c3: bool,
    /// (3) no element `(a₁, w₂, w₃)`.
    pub excludes_a1: bool,
    /// (4) no element with `d₁ + a₂ = d₂ − a₁`.
    pub excludes_rs: bool,
    /// `R(H) ⊆ H` and `S(H) ⊆ H`, so both maps descend to the quotient.
    pub h_invariant: bool,
    /// No nonzero element of `H` is supported on a single factor.
    pub factors_embed: bool,
    pub order_a1: u64,
    pub order_a2: u64,
    pub order_c3: u64,
    pub order_h: usize,
}

impl LemmaConditionReport {
    /// The conditions that together are equivalent to a free D4 action
    /// without translations.
    pub fn predicts_free_action(&self) -> bool {
        self.h_invariant
            && self.r4_in_h
            && self.s2_in_h
            && self.rs2_in_h
            && self.excludes_c3
            && self.excludes_2c3
            && self.excludes_a1
            && self.excludes_rs
    }

    /// Labels of the failing conditions, in the order (i)–(iii), (1)–(4).
    pub fn violations(&self) -> Vec<&'static str> {
        [
            (self.h_invariant, "H not invariant"),
            (self.r4_in_h, "(i)"),
            (self.s2_in_h, "(ii)"),
            (self.rs2_in_h, "(iii)"),
            (self.excludes_c3, "(1)"),
            (self.excludes_2c3, "(2)"),
            (self.excludes_a1, "(3)"),
            (self.excludes_rs, "(4)"),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, label)| label)
        .collect()
    }
}

/// Elements of `H` split into their three factor components, reusable across
/// translation parameters.
#[derive(Clone, Debug)]
pub struct LemmaChecker {
    case: CaseTag,
    elements: BTreeSet<TorsionPoint>,
    split: Vec<[TorsionPoint; 3]>,
    /// `split` as machine integers over `small_den`, when that fits.
    small: Option<(i64, Vec<[Pair; 3]>)>,
    h_invariant: bool,
    factors_embed: bool,
}

type Pair = [i64; 2];

impl LemmaChecker {
    pub fn new(case: CaseTag, h_gens: &[TorsionPoint]) -> Result<Self> {
        if h_gens.iter().any(|g| g.dim() != 6) {
            return Err(Error::DimensionMismatch("H generators must have six coordinates".into()));
        }
        let elements = crate::torus::closure(6, h_gens);
        let split: Vec<[TorsionPoint; 3]> = elements
            .iter()
            .map(|e| [e.slice(0..2), e.slice(2..4), e.slice(4..6)])
            .collect();
        let m = case_matrices(case);
        let h_invariant = h_gens
            .iter()
            .all(|g| elements.contains(&g.apply(&m.r)) && elements.contains(&g.apply(&m.s)));
        let factors_embed = split
            .iter()
            .all(|d| d.iter().filter(|x| !x.is_zero()).count() != 1);
        let small = small_split(&split);
        Ok(Self { case, elements, split, small, h_invariant, factors_embed })
    }

    fn contains(&self, d1: &TorsionPoint, d2: &TorsionPoint, d3: &TorsionPoint) -> bool {
        self.elements.contains(&TorsionPoint::concat(&[d1, d2, d3]))
    }

    pub fn report(&self, a1: &TorsionPoint, a2: &TorsionPoint, a3: &TorsionPoint, c3: &TorsionPoint) -> LemmaConditionReport {
        self.report_small(a1, a2, a3, c3)
            .unwrap_or_else(|| self.report_exact(a1, a2, a3, c3))
    }

    /// The same conditions in `i64` arithmetic over a common denominator;
    /// `None` when the numbers do not fit.
    fn report_small(&self, a1: &TorsionPoint, a2: &TorsionPoint, a3: &TorsionPoint, c3: &TorsionPoint) -> Option<LemmaConditionReport> {
        let (h_den, h) = self.small.as_ref()?;
        let mut n = *h_den;
        for p in [a1, a2, a3, c3] {
            n = n.lcm(&p.denominator().to_i64()?);
        }
        if n > 1 << 20 {
            return None;
        }
        let pack = |p: &TorsionPoint| -> Option<Pair> {
            let f = n / p.denominator().to_i64()?;
            Some([p.numerators()[0].to_i64()? * f, p.numerators()[1].to_i64()? * f])
        };
        let (a1, a2, a3, c3) = (pack(a1)?, pack(a2)?, pack(a3)?, pack(c3)?);
        let f = n / h_den;
        let eq = |x: Pair, y: Pair| (x[0] - y[0]).rem_euclid(n) == 0 && (x[1] - y[1]).rem_euclid(n) == 0;
        let add = |x: Pair, y: Pair| [x[0] + y[0], x[1] + y[1]];
        let mul = |k: i64, x: Pair| [k * x[0], k * x[1]];
        let d = |e: &[Pair; 3], j: usize| mul(f, e[j]);
        let contains = |x: [Pair; 3]| h.iter().any(|e| (0..3).all(|j| eq(d(e, j), x[j])));
        let zero = [0, 0];
        let case2 = self.case == CaseTag::Case2;
        let sum = add(a1, a2);
        let r4_in_h = contains([zero, zero, mul(4, c3)]);
        let s2_in_h = contains([mul(2, a1), zero, if case2 { mul(2, a3) } else { zero }]);
        let rs2_in_h = contains([sum, mul(-1, sum), if case2 { mul(2, add(a3, c3)) } else { zero }]);
        let excludes_c3 = h.iter().all(|e| !eq(d(e, 2), c3));
        let excludes_2c3 = h.iter().all(|e| !eq(d(e, 2), mul(2, c3)));
        let excludes_a1 = h.iter().all(|e| !eq(d(e, 0), a1) || (case2 && !eq(d(e, 2), a3)));
        let rs_last = mul(-1, add(a3, c3));
        let excludes_rs = h
            .iter()
            .all(|e| !eq(add(d(e, 0), a2), add(d(e, 1), mul(-1, a1))) || (case2 && !eq(d(e, 2), rs_last)));
        let order = |x: Pair| n / x[0].gcd(&x[1]).gcd(&n);
        Some(LemmaConditionReport {
            case: self.case,
            r4_in_h,
            s2_in_h,
            rs2_in_h,
            excludes_c3,
            excludes_2c3,
            excludes_a1,
            excludes_rs,
            h_invariant: self.h_invariant,
            factors_embed: self.factors_embed,
            order_a1: order(a1) as u64,
            order_a2: order(a2) as u64,
            order_c3: order(c3) as u64,
            order_h: self.elements.len(),
        })
    }

    /// Reference implementation on exact torsion points.
    pub fn report_exact(&self, a1: &TorsionPoint, a2: &TorsionPoint, a3: &TorsionPoint, c3: &TorsionPoint) -> LemmaConditionReport {
        let zero = TorsionPoint::zero(2);
        let sum = a1.add(a2);
        let case2 = self.case == CaseTag::Case2;
        let twice_c3 = c3.scale(2);
        let r4_in_h = self.contains(&zero, &zero, &c3.scale(4));
        let s2_in_h = if case2 {
            self.contains(&a1.scale(2), &zero, &a3.scale(2))
        } else {
            self.contains(&a1.scale(2), &zero, &zero)
        };
        let rs2_in_h = if case2 {
            self.contains(&sum, &sum.neg(), &a3.add(c3).scale(2))
        } else {
            self.contains(&sum, &sum.neg(), &zero)
        };
        let excludes_c3 = self.split.iter().all(|d| d[2] != *c3);
        let excludes_2c3 = self.split.iter().all(|d| d[2] != twice_c3);
        let excludes_a1 = self
            .split
            .iter()
            .all(|d| d[0] != *a1 || (case2 && d[2] != *a3));
        let rs_last = a3.add(c3).neg();
        let excludes_rs = self
            .split
            .iter()
            .all(|d| d[0].add(a2) != d[1].sub(a1) || (case2 && d[2] != rs_last));
        LemmaConditionReport {
            case: self.case,
            r4_in_h,
            s2_in_h,
            rs2_in_h,
            excludes_c3,
            excludes_2c3,
            excludes_a1,
            excludes_rs,
            h_invariant: self.h_invariant,
            factors_embed: self.factors_embed,
            order_a1: small(a1.order()),
            order_a2: small(a2.order()),
            order_c3: small(c3.order()),
            order_h: self.elements.len(),
        }
    }
}

fn small_split(split: &[[TorsionPoint; 3]]) -> Option<(i64, Vec<[Pair; 3]>)> {
    let mut den = 1i64;
    for p in split.iter().flatten() {
        den = den.lcm(&p.denominator().to_i64()?);
    }
    let rows = split
        .iter()
        .map(|e| {
            let mut out = [[0i64; 2]; 3];
            for (o, p) in out.iter_mut().zip(e) {
                let f = den / p.denominator().to_i64()?;
                *o = [p.numerators()[0].to_i64()? * f, p.numerators()[1].to_i64()? * f];
            }
            Some(out)
        })
        .collect::<Option<Vec<_>>>()?;
    Some((den, rows))
}

fn small(n: &num_bigint::BigInt) -> u64 {
    n.to_u64().expect("torsion orders in this family are small")
}

pub fn check_lemma_conditions(p: &D4Parameters) -> Result<LemmaConditionReport> {
    p.validate()?;
    Ok(LemmaChecker::new(p.case, &p.h_gens)?.report(&p.a1, &p.a2, &p.a3, &p.c3))
}

/// Structure of the lattice `Λ` of the quotient relative to the sublattices
/// `Λⱼ` of the subtori `Eⱼ ⊂ T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeInclusionReport {
    pub case: CaseTag,
    pub ranks: [usize; 3],
    /// `[Λ : Λ₁ ⊕ Λ₂ ⊕ Λ₃]`, the degree of the isogeny `E₁ × E₂ × E₃ → T`.
    pub isogeny_degree: u64,
    /// Case 1: `ker(S − I)⁰ = im(S + I)`; Case 2: `ker(S + I)⁰ = im(S − I)`.
    pub kernel_equals_image: bool,
    /// Case 1: `Λ₂ = W₂ ∩ Λ`; Case 2: `Λ₁ = W₁ ∩ Λ`.
    pub transported_lattice_saturated: bool,
    /// `2λ = (I+S)λ + (I−S)λ` and `2λ′ = (I+R²)λ′ + (I−R²)λ′` with the parts
    /// in `Λ₁`, `Λ`, `Λ₃`, `Λ₂`, checked on a basis of `Λ`. Case 1 only.
    pub splitting_identity: Option<bool>,
    /// Least common denominators of the `Λⱼ`-coordinates of `Λ`.
    pub block_denominators: [u64; 3],
    /// Denominators bounded by `(2, 2, 4)`.
    pub within_coarse_bound: bool,
    /// Denominators bounded by `(2, 2, 2)`.
    pub within_sharp_bound: bool,
    pub h_exponent: u64,
    pub h_order: usize,
    /// `Λ/(Λ₁ ⊕ Λ₂ ⊕ Λ₃)` written as points of the product torus.
    pub component_group: Vec<TorsionPoint>,
}

impl LatticeInclusionReport {
    pub fn all_hold(&self) -> bool {
        self.ranks == [2, 2, 2]
            && self.kernel_equals_image
            && self.transported_lattice_saturated
            && self.splitting_identity.unwrap_or(true)
            && self.within_coarse_bound
            && self.within_sharp_bound
            && self.h_exponent <= 2
    }
}

pub fn lattice_inclusion_check(torus: &ComplexTorus, case: CaseTag) -> Result<LatticeInclusionReport> {
    let m = case_matrices(case);
    let linear = |a: &IntegerMatrix, name: char| {
        torus
            .linear_from_reference(a)
            .to_integer()
            .ok_or(Error::LatticeNotPreserved(name))
    };
    let r = linear(&m.r, 'r')?;
    let s = linear(&m.s, 's')?;
    let id = IntegerMatrix::identity(6);
    let (s_minus, s_plus) = (&s - &id, &s + &id);

    // The reflection-fixed factor and its R-image.
    let (fixed, fixed_image, kernel_equals_image) = match case {
        CaseTag::Case1 => {
            let k = connected_kernel(torus, &s_minus)?;
            let eq = k == image_subtorus(torus, &s_plus)?;
            (k, 1, eq)
        }
        CaseTag::Case2 => {
            let k = connected_kernel(torus, &s_plus)?;
            let eq = k == image_subtorus(torus, &s_minus)?;
            (k, 0, eq)
        }
    };
    let moved = fixed.image(&r)?;
    let lambda3 = connected_kernel(torus, &(&r - &id))?;
    let (lambda1, lambda2) = if case == CaseTag::Case1 { (fixed, moved) } else { (moved, fixed) };
    let lambdas = [&lambda1, &lambda2, &lambda3];

    let block = fixed_image * 2..fixed_image * 2 + 2;
    let plane = RationalMatrix::from_columns(
        6,
        &block
            .map(|i| {
                let mut e = vec![Rat::from_integer(0.into()); 6];
                e[i] = Rat::one();
                torus.from_reference(&e)
            })
            .collect::<Vec<_>>(),
    );
    let transported_lattice_saturated = *lambdas[fixed_image] == lattice_intersection(&plane, torus)?;

    let splitting_identity = (case == CaseTag::Case1).then(|| {
        let r2 = &r * &r;
        let (r2_plus, r2_minus) = (&id + &r2, &id - &r2);
        (0..6).all(|i| {
            let mut lam = vec![num_bigint::BigInt::from(0); 6];
            lam[i] = 1.into();
            let l1 = s_plus.mul_vec(&lam);
            let lp = (&id - &s).mul_vec(&lam);
            let l3 = r2_plus.mul_vec(&lp);
            let l2 = r2_minus.mul_vec(&lp);
            let sums_ok = (0..6).all(|j| &lam[j] * 2 == &l1[j] + &lp[j] && &lp[j] * 2 == &l3[j] + &l2[j]);
            sums_ok && in_lattice(&l1, &lambda1) && in_lattice(&l3, &lambda3) && in_lattice(&l2, &lambda2)
        })
    });

    let l = IntegerMatrix::hstack(&[lambda1.basis(), lambda2.basis(), lambda3.basis()]);
    let ranks = [lambda1.rank(), lambda2.rank(), lambda3.rank()];
    if l.cols() != 6 {
        return Err(Error::NotFullRank);
    }
    let coords = l.to_rational().inverse().ok_or(Error::NotFullRank)?;
    let mut block_denominators = [1u64; 3];
    for (j, d) in block_denominators.iter_mut().enumerate() {
        for row in 2 * j..2 * j + 2 {
            for x in coords.row(row) {
                *d = d.lcm(&small(x.denom()));
            }
        }
    }
    let group = component_group(torus, &lambdas)?;
    let component_group: Vec<TorsionPoint> = group.reference_elements().into_iter().collect();
    let [d1, d2, d3] = block_denominators;
    Ok(LatticeInclusionReport {
        case,
        ranks,
        isogeny_degree: group.order() as u64,
        kernel_equals_image,
        transported_lattice_saturated,
        splitting_identity,
        block_denominators,
        within_coarse_bound: d1 <= 2 && d2 <= 2 && d3 <= 4,
        within_sharp_bound: d1 <= 2 && d2 <= 2 && d3 <= 2,
        h_exponent: small(&group.exponent()),
        h_order: group.order(),
        component_group,
    })
}

fn in_lattice(v: &[num_bigint::BigInt], l: &Sublattice) -> bool {
    let v: Vec<Rat> = v.iter().cloned().map(Rat::from_integer).collect();
    l.contains(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(re: (i64, i64), im: (i64, i64)) -> EllipticCurveParam {
        EllipticCurveParam::from_fractions(re, im).unwrap()
    }

    #[test]
    fn case_matrices_have_expected_shapes() {
        let c1 = case_matrices(CaseTag::Case1);
        let c2 = case_matrices(CaseTag::Case2);
        let d = |v: [i64; 6]| IntegerMatrix::from_rows(&(0..6).map(|i| {
            let mut row = [0i64; 6];
            row[i] = v[i];
            row
        }).collect::<Vec<_>>());
        assert_eq!(c1.s, d([1, 1, -1, -1, -1, -1]));
        assert_eq!(c2.s, d([1, 1, -1, -1, 1, 1]));
        for c in [&c1, &c2] {
            let r2 = &c.r * &c.r;
            assert!((&r2 * &r2).is_identity());
        }
    }

    #[test]
    fn normal_form_builds() {
        let action = build_normal_form(&tau((0, 1), (1, 1)), &tau((0, 1), (2, 1))).unwrap();
        assert_eq!(action.group().unwrap().order(), 8);
    }

    #[test]
    fn normal_form_lemma_report_passes() {
        let p = D4Parameters::normal_form(tau((0, 1), (1, 1)), tau((0, 1), (1, 1)));
        let report = check_lemma_conditions(&p).unwrap();
        assert!(report.predicts_free_action(), "{:?}", report.violations());
        assert!(report.factors_embed);
        assert_eq!((report.order_a1, report.order_a2, report.order_c3, report.order_h), (2, 2, 4, 2));
    }

    #[test]
    fn case1_rejects_nonzero_a3() {
        let mut p = D4Parameters::normal_form(tau((0, 1), (1, 1)), tau((0, 1), (1, 1)));
        p.a3 = TorsionPoint::from_fractions(&[(1, 2), (0, 1)]);
        assert!(matches!(build_general(&p), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn non_invariant_subgroup_is_rejected_softly() {
        let mut p = D4Parameters::normal_form(tau((0, 1), (1, 1)), tau((0, 1), (1, 1)));
        p.h_gens = vec![TorsionPoint::from_fractions(&[(1, 2), (0, 1), (0, 1), (0, 1), (1, 2), (0, 1)])];
        assert!(matches!(
            build_general(&p).unwrap(),
            BuildOutcome::Rejected(Rejection::LatticeNotPreserved { generator: 'r' })
        ));
        assert!(!check_lemma_conditions(&p).unwrap().h_invariant);
    }

    #[test]
    fn normal_form_lattice_inclusion() {
        let action = build_normal_form(&tau((0, 1), (1, 1)), &tau((0, 1), (2, 1))).unwrap();
        let report = lattice_inclusion_check(&action.torus, CaseTag::Case1).unwrap();
        assert!(report.all_hold(), "{report:?}");
        assert_eq!(report.block_denominators, [2, 2, 1]);
        assert_eq!(report.h_order, 2);
        assert_eq!(report.isogeny_degree, 2);
    }

    #[test]
    fn trivial_subgroup_has_unit_denominators() {
        let frame = D4Frame::new(CaseTag::Case1, &tau((0, 1), (1, 1)), &tau((0, 1), (1, 1)), &[]).unwrap();
        let report = lattice_inclusion_check(frame.torus(), CaseTag::Case1).unwrap();
        assert_eq!(report.block_denominators, [1, 1, 1]);
        assert_eq!(report.h_order, 1);
    }

    #[test]
    fn case_tag_serializes_as_number() {
        assert_eq!(serde_json::to_string(&CaseTag::Case2).unwrap(), "2");
        assert_eq!(serde_json::from_str::<CaseTag>("1").unwrap(), CaseTag::Case1);
        assert!(serde_json::from_str::<CaseTag>("3").is_err());
    }
}
