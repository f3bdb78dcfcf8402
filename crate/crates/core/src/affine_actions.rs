//! Holomorphic affine automorphisms `z ↦ A·z + t` of a complex torus, the
//! finite groups they generate, and exact fixed-point decisions.
//!
//! A map has a fixed point iff `(A − I)·x ≡ −t (mod ℤ²ᵍ)` is solvable. With
//! `U·(A − I)·V = D` in Smith form this happens iff `(U·(−t))ᵢ ∈ ℤ` on every
//! zero row `i` of `D`; a zero row where it fails is a checkable obstruction.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::exact_linear::rational::Rat;
use crate::exact_linear::{snf, solve_with_smith, AffineSolution, IntegerMatrix, Obstruction, SmithDecomposition};
use crate::torus::{ComplexTorus, TorsionPoint};

/// Default bound on generated group size.
pub const DEFAULT_GROUP_CAP: usize = 64;

#[derive(Clone)]
pub struct AffineAut {
    torus: Arc<ComplexTorus>,
    linear: IntegerMatrix,
    translation: TorsionPoint,
}

impl AffineAut {
    /// Rejects maps that are not unimodular or not ℂ-linear in their linear part.
    pub fn new(torus: Arc<ComplexTorus>, linear: IntegerMatrix, translation: TorsionPoint) -> Result<Self> {
        let n = torus.real_dim();
        if linear.rows() != n || linear.cols() != n || translation.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "affine map data does not match a torus of real dimension {n}"
            )));
        }
        if !linear.is_unimodular() {
            return Err(Error::NotUnimodular);
        }
        if !torus.is_holomorphic(&linear) {
            return Err(Error::NotHolomorphic);
        }
        Ok(Self { torus, linear, translation })
    }

    pub fn identity(torus: Arc<ComplexTorus>) -> Self {
        let n = torus.real_dim();
        Self { torus, linear: IntegerMatrix::identity(n), translation: TorsionPoint::zero(n) }
    }

    pub fn torus(&self) -> &Arc<ComplexTorus> {
        &self.torus
    }

    pub fn linear(&self) -> &IntegerMatrix {
        &self.linear
    }

    pub fn translation(&self) -> &TorsionPoint {
        &self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.linear.is_identity() && self.translation.is_zero()
    }

    fn same_torus(&self, other: &AffineAut) -> bool {
        Arc::ptr_eq(&self.torus, &other.torus) || *self.torus == *other.torus
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineAut) -> Result<AffineAut> {
        if !self.same_torus(other) {
            return Err(Error::TorusMismatch);
        }
        Ok(AffineAut {
            torus: self.torus.clone(),
            linear: &self.linear * &other.linear,
            translation: other.translation.apply(&self.linear).add(&self.translation),
        })
    }

    pub fn inverse(&self) -> AffineAut {
        let inv = self.linear.inverse_unimodular().expect("linear part is unimodular");
        let translation = self.translation.apply(&inv).neg();
        AffineAut { torus: self.torus.clone(), linear: inv, translation }
    }

    pub fn apply(&self, p: &TorsionPoint) -> TorsionPoint {
        p.apply(&self.linear).add(&self.translation)
    }

    fn key(&self) -> (IntegerMatrix, TorsionPoint) {
        (self.linear.clone(), self.translation.clone())
    }
}

impl PartialEq for AffineAut {
    fn eq(&self, other: &Self) -> bool {
        self.same_torus(other) && self.linear == other.linear && self.translation == other.translation
    }
}

impl Eq for AffineAut {}

impl fmt::Debug for AffineAut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineAut")
            .field("linear", &self.linear)
            .field("translation", &self.translation)
            .finish()
    }
}

pub fn compose(f: &AffineAut, g: &AffineAut) -> Result<AffineAut> {
    f.compose(g)
}

/// A nonzero translation (`A = I`, `t ≠ 0`).
pub fn is_translation(f: &AffineAut) -> bool {
    f.linear.is_identity() && !f.translation.is_zero()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixedPointVerdict {
    /// A fixed point, coordinates in `[0, 1)`.
    Fixed { point: Vec<Rat> },
    /// No fixed point; the obstruction refers to `A − I` and `−t`.
    Free(Obstruction),
}

impl FixedPointVerdict {
    pub fn is_free(&self) -> bool {
        matches!(self, FixedPointVerdict::Free(_))
    }
}

/// Smith data of `A − I` for one linear part, reusable across translations.
#[derive(Clone, Debug)]
pub struct FixedPointDecider {
    smith: SmithDecomposition,
    zero_rows: Vec<usize>,
}

impl FixedPointDecider {
    pub fn new(linear: &IntegerMatrix) -> Self {
        let n = linear.rows();
        let smith = snf(&(linear - &IntegerMatrix::identity(n)));
        let zero_rows = smith.zero_rows().collect();
        Self { smith, zero_rows }
    }

    /// Fast yes/no: some zero row gives a non-integral `(U·(−t))ᵢ`.
    pub fn is_free(&self, t: &TorsionPoint) -> bool {
        self.zero_rows
            .iter()
            .any(|&i| !t.dot_numerators(self.smith.u.row(i)).is_multiple_of(t.denominator()))
    }

    pub fn decide(&self, t: &TorsionPoint) -> FixedPointVerdict {
        let minus_t: Vec<Rat> = t.neg_coords();
        match solve_with_smith(&self.smith, &minus_t) {
            AffineSolution::Obstructed(obstruction) => FixedPointVerdict::Free(obstruction),
            AffineSolution::Solvable { x, .. } => FixedPointVerdict::Fixed { point: TorsionPoint::new(&x).coords() },
        }
    }
}

impl TorsionPoint {
    fn neg_coords(&self) -> Vec<Rat> {
        self.coords().into_iter().map(|c| -c).collect()
    }
}

pub fn has_fixed_point(f: &AffineAut) -> FixedPointVerdict {
    FixedPointDecider::new(&f.linear).decide(&f.translation)
}

/// Memoizes deciders by linear part; group elements of one action share few
/// distinct linear parts.
#[derive(Default, Debug)]
pub struct DeciderCache {
    deciders: HashMap<IntegerMatrix, FixedPointDecider>,
}

impl DeciderCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, linear: &IntegerMatrix) -> &FixedPointDecider {
        self.deciders
            .entry(linear.clone())
            .or_insert_with(|| FixedPointDecider::new(linear))
    }
}

#[derive(Clone, Debug)]
pub struct NamedGenerator {
    pub name: char,
    pub map: AffineAut,
}

impl NamedGenerator {
    pub fn new(name: char, map: AffineAut) -> Self {
        Self { name, map }
    }
}

#[derive(Clone, Debug)]
pub struct GroupElement {
    /// Shortlex-minimal word in the generator names; empty for the identity.
    pub word: String,
    pub map: AffineAut,
}

#[derive(Clone, Debug)]
pub struct GeneratedGroup {
    generators: Vec<NamedGenerator>,
    elements: Vec<GroupElement>,
    table: Vec<Vec<usize>>,
}

impl GeneratedGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn generators(&self) -> &[NamedGenerator] {
        &self.generators
    }

    /// `table[i][j]` is the index of `elements[i] ∘ elements[j]`.
    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn element_order(&self, i: usize) -> usize {
        let mut k = 1;
        let mut current = i;
        while current != 0 {
            current = self.table[current][i];
            k += 1;
        }
        k
    }

    pub fn find_word(&self, word: &str) -> Option<&GroupElement> {
        self.elements.iter().find(|e| e.word == word)
    }
}

/// Breadth-first closure of the generators under composition. Elements are
/// produced in shortlex order of their words; the identity comes first.
pub fn generate_group(gens: &[NamedGenerator], cap: usize) -> Result<GeneratedGroup> {
    let torus = match gens.first() {
        Some(g) => g.map.torus.clone(),
        None => return Err(Error::DimensionMismatch("no generators".into())),
    };
    if gens.iter().any(|g| !g.map.same_torus(&gens[0].map)) {
        return Err(Error::TorusMismatch);
    }
    let mut elements = vec![GroupElement { word: String::new(), map: AffineAut::identity(torus) }];
    let mut index: HashMap<(IntegerMatrix, TorsionPoint), usize> = HashMap::new();
    index.insert(elements[0].map.key(), 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in gens {
            let product = elements[i].map.compose(&g.map)?;
            let key = product.key();
            if index.contains_key(&key) {
                continue;
            }
            if elements.len() == cap {
                return Err(Error::CapExceeded(cap));
            }
            let mut word = elements[i].word.clone();
            word.push(g.name);
            index.insert(key, elements.len());
            queue.push_back(elements.len());
            elements.push(GroupElement { word, map: product });
        }
    }
    let table = elements
        .iter()
        .map(|a| {
            elements
                .iter()
                .map(|b| {
                    let c = a.map.compose(&b.map).expect("same torus");
                    index[&c.key()]
                })
                .collect()
        })
        .collect();
    Ok(GeneratedGroup { generators: gens.to_vec(), elements, table })
}

/// Expands a word such as `rrs`, `r^4` or `(rs)^2` into generator indices.
pub fn parse_word(text: &str, names: &[char]) -> Result<Vec<usize>> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let letters = parse_sequence(&chars, &mut pos, names, text)?;
    if pos != chars.len() {
        return Err(Error::MalformedWord(text.to_string()));
    }
    Ok(letters)
}

fn parse_sequence(chars: &[char], pos: &mut usize, names: &[char], text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    while *pos < chars.len() && chars[*pos] != ')' {
        let atom = match chars[*pos] {
            '(' => {
                *pos += 1;
                let inner = parse_sequence(chars, pos, names, text)?;
                if chars.get(*pos) != Some(&')') {
                    return Err(Error::MalformedWord(text.to_string()));
                }
                *pos += 1;
                inner
            }
            '1' | 'e' if !names.contains(&chars[*pos]) => {
                *pos += 1;
                Vec::new()
            }
            c => {
                let idx = names.iter().position(|&n| n == c).ok_or(Error::UnknownLetter(c))?;
                *pos += 1;
                vec![idx]
            }
        };
        let mut repeat = 1usize;
        if chars.get(*pos) == Some(&'^') {
            *pos += 1;
            let start = *pos;
            while *pos < chars.len() && chars[*pos].is_ascii_digit() {
                *pos += 1;
            }
            repeat = chars[start..*pos]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| Error::MalformedWord(text.to_string()))?;
        }
        for _ in 0..repeat {
            out.extend_from_slice(&atom);
        }
    }
    Ok(out)
}

pub fn evaluate_word(gens: &[NamedGenerator], word: &str) -> Result<AffineAut> {
    let names: Vec<char> = gens.iter().map(|g| g.name).collect();
    let letters = parse_word(word, &names)?;
    let torus = gens
        .first()
        .map(|g| g.map.torus.clone())
        .ok_or_else(|| Error::MalformedWord(word.to_string()))?;
    letters
        .iter()
        .try_fold(AffineAut::identity(torus), |acc, &i| acc.compose(&gens[i].map))
}

/// Evaluates each relation word and compares it to the identity map.
pub fn check_relations(gens: &[NamedGenerator], relations: &[&str]) -> Result<Vec<bool>> {
    relations
        .iter()
        .map(|w| evaluate_word(gens, w).map(|f| f.is_identity()))
        .collect()
}

/// A word evaluated symbolically in the translation parts: for fixed linear
/// parts `A_g`, the word's translation is `Σ_g M_g·t_g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearizedWord {
    pub linear: IntegerMatrix,
    pub coefficients: Vec<IntegerMatrix>,
}

impl LinearizedWord {
    pub fn translation(&self, translations: &[TorsionPoint]) -> TorsionPoint {
        let n = self.linear.rows();
        self.coefficients
            .iter()
            .zip(translations)
            .fold(TorsionPoint::zero(n), |acc, (m, t)| acc.add(&t.apply(m)))
    }
}

/// For `w = g₁g₂…g_k` (applied right to left), the translation is
/// `t_{g₁} + A_{g₁}·t_{g₂} + A_{g₁}A_{g₂}·t_{g₃} + …`.
pub fn linearize_word(linear_parts: &[IntegerMatrix], letters: &[usize]) -> LinearizedWord {
    let n = linear_parts.first().map_or(0, IntegerMatrix::rows);
    let mut coefficients = vec![IntegerMatrix::zeros(n, n); linear_parts.len()];
    let mut prefix = IntegerMatrix::identity(n);
    for &g in letters {
        coefficients[g] = &coefficients[g] + &prefix;
        prefix = &prefix * &linear_parts[g];
    }
    LinearizedWord { linear: prefix, coefficients }
}

#[derive(Clone, Debug)]
pub struct ElementWitness {
    pub word: String,
    pub linear: IntegerMatrix,
    pub translation: TorsionPoint,
    pub verdict: FixedPointVerdict,
}

/// Per-element fixed-point verdicts for every nonidentity element, in the
/// group's shortlex order.
#[derive(Clone, Debug)]
pub struct FreenessCertificate {
    pub witnesses: Vec<ElementWitness>,
}

impl FreenessCertificate {
    pub fn is_free(&self) -> bool {
        self.witnesses.iter().all(|w| w.verdict.is_free())
    }

    pub fn first_offender(&self) -> Option<&ElementWitness> {
        self.witnesses.iter().find(|w| !w.verdict.is_free())
    }
}

pub fn is_free_action(group: &GeneratedGroup) -> FreenessCertificate {
    is_free_action_cached(group, &mut DeciderCache::new())
}

pub fn is_free_action_cached(group: &GeneratedGroup, cache: &mut DeciderCache) -> FreenessCertificate {
    let witnesses = group
        .elements
        .iter()
        .skip(1)
        .map(|e| ElementWitness {
            word: e.word.clone(),
            linear: e.map.linear.clone(),
            translation: e.map.translation.clone(),
            verdict: cache.get(&e.map.linear).decide(&e.map.translation),
        })
        .collect();
    FreenessCertificate { witnesses }
}

/// Freeness decided from the elements of prime order only. A group acts
/// freely iff each of its cyclic subgroups of prime order does.
pub fn is_free_action_prime_order(group: &GeneratedGroup, cache: &mut DeciderCache) -> bool {
    (1..group.order())
        .filter(|&i| is_prime(group.element_order(i)))
        .all(|i| {
            let f = &group.elements[i].map;
            cache.get(&f.linear).is_free(&f.translation)
        })
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslationCheck {
    /// True iff no element is a nonzero translation.
    pub translation_free: bool,
    pub offender: Option<String>,
}

pub fn contains_no_translations(group: &GeneratedGroup) -> TranslationCheck {
    let offender = group.elements.iter().find(|e| is_translation(&e.map)).map(|e| e.word.clone());
    TranslationCheck { translation_free: offender.is_none(), offender }
}
