//! Exhaustive sweeps over torsion parameters `(a₁, a₂, a₃, c₃, H)`.
//!
//! `a₁, a₂` range over `E[a_den]`, `a₃, c₃` over `E′[c_den]` (Case 1 fixes
//! `a₃ = 0`), and `H` over the subgroups of the 2-torsion of `E × E × E′`
//! with at most `h_generators_max` generators and no nonzero element
//! supported on a single factor. Restricting `H` to 2-torsion is a structural
//! reduction; the lattice propositions are re-checked on every survivor.
//!
//! Every tuple is judged twice: by the generic engine (relations, group
//! order, translations, SNF freeness on the quotient torus) and by the
//! lemma conditions on `H`. The two verdicts must agree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine_actions::{
    check_relations, contains_no_translations, generate_group, is_free_action, is_free_action_cached,
    linearize_word, parse_word, DeciderCache, LinearizedWord, DEFAULT_GROUP_CAP,
};
use crate::d4_family::{
    build_general, lattice_inclusion_check, BuildOutcome, CaseTag, D4Action, D4Frame, D4Parameters,
    LemmaChecker,
};
use crate::error::{Error, Result};
use crate::torus::{EllipticCurveParam, TorsionPoint};

/// The defining relations of D4 in the generators `r`, `s`.
pub const D4_RELATIONS: [&str; 3] = ["r^4", "s^2", "(rs)^2"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Relations,
    Translations,
    LemmaFlags,
    Freeness,
}

pub const DEFAULT_STAGE_ORDER: [Stage; 4] = [Stage::Relations, Stage::Translations, Stage::LemmaFlags, Stage::Freeness];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub case: CaseTag,
    /// Denominator bound for `a₁`, `a₂`.
    pub a_denominator: u32,
    /// Denominator bound for `a₃`, `c₃`.
    pub c_denominator: u32,
    pub h_generators_max: usize,
    pub tau: EllipticCurveParam,
    pub tau_prime: EllipticCurveParam,
    pub stage_order: [Stage; 4],
    /// Also count survivors up to identical action on the quotient torus.
    pub count_orbits: bool,
}

impl SearchSpace {
    /// Denominators 4 and 4, at most two generators for `H`, `τ = i`, `τ′ = 2i`.
    pub fn new(case: CaseTag) -> Self {
        Self {
            case,
            a_denominator: 4,
            c_denominator: 4,
            h_generators_max: 2,
            tau: EllipticCurveParam::from_fractions((0, 1), (1, 1)).expect("i is in the upper half-plane"),
            tau_prime: EllipticCurveParam::from_fractions((0, 1), (2, 1)).expect("2i is in the upper half-plane"),
            stage_order: DEFAULT_STAGE_ORDER,
            count_orbits: false,
        }
    }

    pub fn with_denominators(mut self, a: u32, c: u32) -> Self {
        self.a_denominator = a;
        self.c_denominator = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_denominator == 0 || self.c_denominator == 0 {
            return Err(Error::InvalidSearchSpace("denominator bounds must be at least 1".into()));
        }
        if self.h_generators_max > 6 {
            return Err(Error::InvalidSearchSpace("the 2-torsion of a 3-dimensional torus has rank 6".into()));
        }
        let distinct: BTreeSet<Stage> = self.stage_order.iter().copied().collect();
        if distinct.len() != 4 {
            return Err(Error::InvalidSearchSpace("stage order must list each stage once".into()));
        }
        Ok(())
    }

    fn grid_size(&self) -> u64 {
        let a = u64::from(self.a_denominator).pow(2);
        let c = u64::from(self.c_denominator).pow(2);
        match self.case {
            CaseTag::Case1 => a * a * c,
            CaseTag::Case2 => a * a * c * c,
        }
    }
}

/// All points of `(1/n)ℤ² / ℤ²` in lexicographic order of numerators.
pub fn torsion_grid(n: u32) -> Vec<TorsionPoint> {
    let n = i64::from(n);
    (0..n)
        .flat_map(|x| (0..n).map(move |y| TorsionPoint::from_fractions(&[(x, n), (y, n)])))
        .collect()
}

/// Subgroups of `(½ℤ/ℤ)⁶` with at most `max_generators` generators and no
/// nonzero element supported on one of the three coordinate pairs. Each
/// subgroup is returned by a reduced echelon basis; the list is sorted by
/// rank and then by element set.
pub fn two_torsion_subgroups(max_generators: usize) -> Vec<Vec<TorsionPoint>> {
    // Elements of F₂⁶ as bit masks; a subgroup as the 64-bit set of its elements.
    let span_of = |basis: &[u8]| -> u64 {
        let mut set = 1u64;
        for &v in basis {
            let mut next = set;
            for e in 0..64u8 {
                if set >> e & 1 == 1 {
                    next |= 1 << (e ^ v);
                }
            }
            set = next;
        }
        set
    };
    let mut by_set: BTreeMap<(u32, u64), Vec<u8>> = BTreeMap::new();
    by_set.insert((0, 1), Vec::new());
    let mut frontier = vec![Vec::<u8>::new()];
    for rank in 1..=max_generators as u32 {
        let mut next = Vec::new();
        for basis in &frontier {
            let set = span_of(basis);
            for v in 1..64u8 {
                if set >> v & 1 == 1 {
                    continue;
                }
                let mut grown = basis.clone();
                grown.push(v);
                let key = (rank, span_of(&grown));
                if let std::collections::btree_map::Entry::Vacant(slot) = by_set.entry(key) {
                    slot.insert(grown.clone());
                    next.push(grown);
                }
            }
        }
        frontier = next;
    }
    let single_factor = |e: u8| e != 0 && [0b11u8, 0b1100, 0b11_0000].iter().any(|&b| e & !b == 0);
    by_set
        .into_iter()
        .filter(|((_, set), _)| (0..64u8).all(|e| set >> e & 1 == 0 || !single_factor(e)))
        .map(|(_, basis)| echelon(basis).into_iter().map(bits_to_point).collect())
        .collect()
}

fn echelon(mut basis: Vec<u8>) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::new();
    for bit in (0..6).rev() {
        if let Some(pos) = basis.iter().position(|v| v >> bit & 1 == 1) {
            let pivot = basis.swap_remove(pos);
            for v in basis.iter_mut().chain(out.iter_mut()) {
                if *v >> bit & 1 == 1 {
                    *v ^= pivot;
                }
            }
            out.push(pivot);
        }
    }
    out
}

fn bits_to_point(v: u8) -> TorsionPoint {
    let coords: Vec<(i64, i64)> = (0..6).map(|i| (i64::from(v >> i & 1), 2)).collect();
    TorsionPoint::from_fractions(&coords)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    LatticeNotPreserved,
    Relations,
    GroupOrder,
    Translations,
    LemmaConditions,
    NotFree,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            FailureReason::LatticeNotPreserved => "lattice not preserved",
            FailureReason::Relations => "relations fail",
            FailureReason::GroupOrder => "group order is not 8",
            FailureReason::Translations => "contains a translation",
            FailureReason::LemmaConditions => "lemma conditions fail",
            FailureReason::NotFree => "not free",
        };
        f.write_str(text)
    }
}

/// A surviving parameter tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Survivor {
    pub a1: TorsionPoint,
    pub a2: TorsionPoint,
    pub a3: TorsionPoint,
    pub c3: TorsionPoint,
    pub h_generators: Vec<TorsionPoint>,
}

impl Survivor {
    pub fn parameters(&self, space: &SearchSpace) -> D4Parameters {
        D4Parameters {
            case: space.case,
            tau: space.tau.clone(),
            tau_prime: space.tau_prime.clone(),
            a1: self.a1.clone(),
            a2: self.a2.clone(),
            a3: self.a3.clone(),
            c3: self.c3.clone(),
            h_gens: self.h_generators.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub tuple: Survivor,
    pub lemma_prediction: bool,
    pub engine_verdict: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleAgreement {
    pub compared: u64,
    pub agreements: u64,
    /// At most the first 20 disagreements, in sweep order.
    pub disagreements: Vec<Disagreement>,
}

impl OracleAgreement {
    pub fn all_agree(&self) -> bool {
        self.compared == self.agreements
    }

    fn merge(&mut self, other: OracleAgreement) {
        self.compared += other.compared;
        self.agreements += other.agreements;
        let room = 20usize.saturating_sub(self.disagreements.len());
        self.disagreements.extend(other.disagreements.into_iter().take(room));
    }
}

/// Case 2 bookkeeping: once `s² = (rs)² = 1` hold, `H` contains
/// `(a₂ − a₁, −(a₁ + a₂), 2c₃)`, so `r²` has a fixed point.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictSummary {
    /// Tuples whose action satisfies all three relations.
    pub relations_hold: u64,
    /// Of those, tuples where `H` contains the derived element.
    pub derived_element_in_h: u64,
    /// Of those, tuples where the engine finds a fixed point of `r²`.
    pub r_squared_has_fixed_point: u64,
}

impl ConflictSummary {
    /// Every relation-satisfying tuple is killed by the conflict.
    pub fn explains_all(&self) -> bool {
        self.derived_element_in_h == self.relations_hold && self.r_squared_has_fixed_point == self.relations_hold
    }

    fn merge(&mut self, other: &ConflictSummary) {
        self.relations_hold += other.relations_hold;
        self.derived_element_in_h += other.derived_element_in_h;
        self.r_squared_has_fixed_point += other.r_squared_has_fixed_point;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub space: SearchSpace,
    pub subgroups: usize,
    pub invariant_subgroups: usize,
    pub total: u64,
    pub survivor_count: u64,
    pub failures: BTreeMap<FailureReason, u64>,
    /// First failing relation, for tuples rejected at the relation stage.
    pub relation_failures: BTreeMap<String, u64>,
    /// First element with a fixed point, for tuples rejected as not free.
    pub fixed_point_offenders: BTreeMap<String, u64>,
    pub oracle: OracleAgreement,
    pub survivors: Vec<Survivor>,
    pub survivors_reverified: bool,
    /// Case 1: survivors coincide with the tuples of the expected family.
    pub matches_expected_family: Option<bool>,
    pub conflict: Option<ConflictSummary>,
    pub orbit_count: Option<u64>,
}

impl CensusReport {
    pub fn failure_total(&self) -> u64 {
        self.failures.values().sum()
    }

    /// Case 1: a nonempty survivor set of the expected shape. Case 2: no
    /// survivors, with every relation-satisfying tuple explained by the
    /// `r²` conflict. Both require full oracle agreement and re-verification.
    pub fn expected_outcome(&self) -> bool {
        let common = self.oracle.all_agree()
            && self.survivors_reverified
            && self.survivor_count + self.failure_total() == self.total;
        common
            && match self.space.case {
                CaseTag::Case1 => self.survivor_count > 0 && self.matches_expected_family == Some(true),
                CaseTag::Case2 => {
                    self.survivor_count == 0 && self.conflict.as_ref().is_some_and(ConflictSummary::explains_all)
                }
            }
    }
}

/// Per-subgroup partial result, merged in subgroup order.
#[derive(Default)]
struct FrameResult {
    invariant: bool,
    total: u64,
    failures: BTreeMap<FailureReason, u64>,
    relation_failures: BTreeMap<String, u64>,
    fixed_point_offenders: BTreeMap<String, u64>,
    oracle: OracleAgreement,
    survivors: Vec<(Survivor, Option<OrbitKey>)>,
    conflict: ConflictSummary,
}

type OrbitKey = (Vec<TorsionPoint>, TorsionPoint, TorsionPoint);

/// Numerators over a common denominator, for fast sums modulo `ℤ⁶`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Packed([i64; 6]);

struct Packer {
    den: i64,
}

impl Packer {
    fn pack(&self, p: &TorsionPoint) -> Packed {
        let scale = self.den / p.denominator().to_i64().expect("small denominator");
        let mut out = [0i64; 6];
        for (o, x) in out.iter_mut().zip(p.numerators()) {
            *o = x.to_i64().expect("small numerator") * scale;
        }
        Packed(out)
    }

    fn is_zero_sum(&self, parts: &[&Packed]) -> bool {
        (0..6).all(|i| parts.iter().map(|p| p.0[i]).sum::<i64>() % self.den == 0)
    }
}

/// Relation `w = 1` rewritten as `Σ contributions ≡ 0`, one table per slot.
struct PackedRelation {
    word: &'static str,
    identity_linear: bool,
    c3: Vec<Packed>,
    a1: Vec<Packed>,
    a2: Vec<Packed>,
    a3: Vec<Packed>,
}

struct Sweep<'a> {
    space: &'a SearchSpace,
    grid_a: Vec<TorsionPoint>,
    grid_c: Vec<TorsionPoint>,
}

impl<'a> Sweep<'a> {
    fn new(space: &'a SearchSpace) -> Self {
        let grid_c = torsion_grid(space.c_denominator);
        Self { space, grid_a: torsion_grid(space.a_denominator), grid_c }
    }

    fn a3_grid(&self) -> Vec<TorsionPoint> {
        match self.space.case {
            CaseTag::Case1 => vec![TorsionPoint::zero(2)],
            CaseTag::Case2 => self.grid_c.clone(),
        }
    }

    fn run_frame(&self, h_gens: &[TorsionPoint]) -> Result<FrameResult> {
        let space = self.space;
        let frame = D4Frame::new(space.case, &space.tau, &space.tau_prime, h_gens)?;
        let mut out = FrameResult { total: space.grid_size(), ..FrameResult::default() };
        let Some((r_lin, s_lin)) = frame.linear_parts() else {
            // Neither map descends; the lemma side agrees through its invariance flag.
            out.failures.insert(FailureReason::LatticeNotPreserved, out.total);
            out.oracle.compared = out.total;
            out.oracle.agreements = out.total;
            return Ok(out);
        };
        out.invariant = true;
        let checker = LemmaChecker::new(space.case, h_gens)?;
        let zero = TorsionPoint::zero(2);
        let a3_grid = self.a3_grid();
        let embed = |slot: usize, p: &TorsionPoint| {
            let mut parts = [&zero, &zero, &zero];
            parts[slot] = p;
            frame.push_down(&TorsionPoint::concat(&parts))
        };
        let down_c3: Vec<TorsionPoint> = self.grid_c.iter().map(|p| embed(2, p)).collect();
        let down_a1: Vec<TorsionPoint> = self.grid_a.iter().map(|p| embed(0, p)).collect();
        let down_a2: Vec<TorsionPoint> = self.grid_a.iter().map(|p| embed(1, p)).collect();
        let down_a3: Vec<TorsionPoint> = a3_grid.iter().map(|p| embed(2, p)).collect();

        let linear = [r_lin.clone(), s_lin.clone()];
        let words: Vec<(&'static str, LinearizedWord)> = D4_RELATIONS
            .iter()
            .map(|w| (*w, linearize_word(&linear, &parse_word(w, &['r', 's']).expect("fixed words"))))
            .collect();
        let image = |m: &crate::exact_linear::IntegerMatrix, pts: &[TorsionPoint]| -> Vec<TorsionPoint> {
            pts.iter().map(|p| p.apply(m)).collect()
        };
        let mut tables = Vec::new();
        let mut den = num_bigint::BigInt::one();
        for (word, lw) in &words {
            let t = [
                image(&lw.coefficients[0], &down_c3),
                image(&lw.coefficients[1], &down_a1),
                image(&lw.coefficients[1], &down_a2),
                image(&lw.coefficients[1], &down_a3),
            ];
            for p in t.iter().flatten() {
                den = den.lcm(p.denominator());
            }
            tables.push((*word, lw.linear.is_identity(), t));
        }
        let packer = Packer { den: den.to_i64().expect("small denominator") };
        let relations: Vec<PackedRelation> = tables
            .into_iter()
            .map(|(word, identity_linear, [c3, a1, a2, a3])| PackedRelation {
                word,
                identity_linear,
                c3: c3.iter().map(|p| packer.pack(p)).collect(),
                a1: a1.iter().map(|p| packer.pack(p)).collect(),
                a2: a2.iter().map(|p| packer.pack(p)).collect(),
                a3: a3.iter().map(|p| packer.pack(p)).collect(),
            })
            .collect();

        let mut cache = DeciderCache::new();
        for (ic, c3) in self.grid_c.iter().enumerate() {
            for (i1, a1) in self.grid_a.iter().enumerate() {
                for (i2, a2) in self.grid_a.iter().enumerate() {
                    for (i3, a3) in a3_grid.iter().enumerate() {
                        let failed_relation = relations.iter().find(|rel| {
                            !rel.identity_linear
                                || !packer.is_zero_sum(&[&rel.c3[ic], &rel.a1[i1], &rel.a2[i2], &rel.a3[i3]])
                        });
                        let mut tuple = TupleEval {
                            failed_relation: failed_relation.map(|r| r.word),
                            frame: &frame,
                            c3: &down_c3[ic],
                            s_parts: [&down_a1[i1], &down_a2[i2], &down_a3[i3]],
                            checker: &checker,
                            params: [a1, a2, a3, c3],
                            cache: &mut cache,
                            group: None,
                            lemma: None,
                            offender: None,
                        };
                        self.judge(&mut tuple, &mut out)?;
                    }
                }
            }
        }
        Ok(out)
    }

    fn judge(&self, t: &mut TupleEval<'_>, out: &mut FrameResult) -> Result<()> {
        let mut first_failure: Option<FailureReason> = None;
        for stage in self.space.stage_order {
            if let Some(reason) = t.stage_failure(stage)? {
                first_failure = Some(reason);
                break;
            }
        }
        let engine = match first_failure {
            None => true,
            Some(FailureReason::LemmaConditions) => t.engine_verdict()?,
            Some(_) => false,
        };
        let lemma = t.lemma().predicts_free_action();
        out.oracle.compared += 1;
        if engine == lemma {
            out.oracle.agreements += 1;
        } else if out.oracle.disagreements.len() < 20 {
            out.oracle.disagreements.push(Disagreement {
                tuple: t.survivor(),
                lemma_prediction: lemma,
                engine_verdict: engine,
            });
        }
        if self.space.case == CaseTag::Case2 && t.failed_relation.is_none() {
            out.conflict.relations_hold += 1;
            let [a1, a2, _, c3] = t.params;
            let derived = TorsionPoint::concat(&[&a2.sub(a1), &a1.add(a2).neg(), &c3.scale(2)]);
            if t.frame.subgroup().contains(&derived) {
                out.conflict.derived_element_in_h += 1;
            }
            if t.r_squared_has_fixed_point() {
                out.conflict.r_squared_has_fixed_point += 1;
            }
        }
        match first_failure {
            None => {
                let key = self.space.count_orbits.then(|| t.orbit_key());
                out.survivors.push((t.survivor(), key));
            }
            Some(reason) => {
                *out.failures.entry(reason).or_default() += 1;
                match reason {
                    FailureReason::Relations => {
                        let word = t.failed_relation.expect("relation stage failed");
                        *out.relation_failures.entry(word.to_string()).or_default() += 1;
                    }
                    FailureReason::NotFree => {
                        let word = t.first_offender()?.unwrap_or_default();
                        *out.fixed_point_offenders.entry(word).or_default() += 1;
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Lazily evaluated facts about one tuple inside a frame.
struct TupleEval<'a> {
    failed_relation: Option<&'static str>,
    frame: &'a D4Frame,
    /// Quotient translation of `r`.
    c3: &'a TorsionPoint,
    /// Quotient images of `(a₁,0,0)`, `(0,a₂,0)`, `(0,0,a₃)`.
    s_parts: [&'a TorsionPoint; 3],
    checker: &'a LemmaChecker,
    /// `a₁, a₂, a₃, c₃` on their factors.
    params: [&'a TorsionPoint; 4],
    cache: &'a mut DeciderCache,
    group: Option<Option<crate::affine_actions::GeneratedGroup>>,
    lemma: Option<crate::d4_family::LemmaConditionReport>,
    offender: Option<Option<String>>,
}

impl TupleEval<'_> {
    fn action(&self) -> D4Action {
        let (r, s) = self.frame.linear_parts().expect("invariant frame");
        let torus = self.frame.torus().clone();
        let s_translation = self.s_parts[0].add(self.s_parts[1]).add(self.s_parts[2]);
        D4Action {
            r: crate::affine_actions::AffineAut::new(torus.clone(), r.clone(), self.c3.clone())
                .expect("descended maps are valid"),
            s: crate::affine_actions::AffineAut::new(torus.clone(), s.clone(), s_translation)
                .expect("descended maps are valid"),
            torus,
        }
    }

    /// The generated group, or `None` when it exceeds the cap.
    fn group(&mut self) -> Result<Option<&crate::affine_actions::GeneratedGroup>> {
        if self.group.is_none() {
            let generated = match generate_group(&self.action().generators(), DEFAULT_GROUP_CAP) {
                Ok(g) => Some(g),
                Err(Error::CapExceeded(_)) => None,
                Err(e) => return Err(e),
            };
            self.group = Some(generated);
        }
        Ok(self.group.as_ref().and_then(Option::as_ref))
    }

    fn lemma(&mut self) -> &crate::d4_family::LemmaConditionReport {
        let [a1, a2, a3, c3] = self.params;
        self.lemma.get_or_insert_with(|| self.checker.report(a1, a2, a3, c3))
    }

    fn first_offender(&mut self) -> Result<Option<String>> {
        if let Some(known) = &self.offender {
            return Ok(known.clone());
        }
        self.group()?;
        let Some(Some(group)) = &self.group else { return Ok(None) };
        let cert = is_free_action_cached(group, self.cache);
        let offender = cert.first_offender().map(|w| w.word.clone());
        self.offender = Some(offender.clone());
        Ok(offender)
    }

    fn stage_failure(&mut self, stage: Stage) -> Result<Option<FailureReason>> {
        Ok(match stage {
            Stage::Relations => self.failed_relation.map(|_| FailureReason::Relations),
            Stage::Translations => match self.group()? {
                None => Some(FailureReason::GroupOrder),
                Some(g) if g.order() != 8 => Some(FailureReason::GroupOrder),
                Some(g) if !contains_no_translations(g).translation_free => Some(FailureReason::Translations),
                Some(_) => None,
            },
            Stage::LemmaFlags => (!self.lemma().predicts_free_action()).then_some(FailureReason::LemmaConditions),
            Stage::Freeness => match self.group()? {
                None => Some(FailureReason::GroupOrder),
                Some(_) => self.first_offender()?.map(|_| FailureReason::NotFree),
            },
        })
    }

    /// Relations, group order 8, no translations, free.
    fn engine_verdict(&mut self) -> Result<bool> {
        for stage in [Stage::Relations, Stage::Translations, Stage::Freeness] {
            if self.stage_failure(stage)?.is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn r_squared_has_fixed_point(&mut self) -> bool {
        let r = self.action().r;
        let r2 = r.compose(&r).expect("same torus");
        !self.cache.get(r2.linear()).is_free(r2.translation())
    }

    fn survivor(&self) -> Survivor {
        let [a1, a2, a3, c3] = self.params;
        Survivor {
            a1: a1.clone(),
            a2: a2.clone(),
            a3: a3.clone(),
            c3: c3.clone(),
            h_generators: self.frame.subgroup().generators().to_vec(),
        }
    }

    fn orbit_key(&self) -> OrbitKey {
        let action = self.action();
        (
            self.frame.subgroup().elements().cloned().collect(),
            action.r.translation().clone(),
            action.s.translation().clone(),
        )
    }
}

/// Runs the sweep on a pool of `workers` threads. The report does not depend
/// on the worker count.
pub fn enumerate(space: &SearchSpace, workers: usize) -> Result<CensusReport> {
    space.validate()?;
    let subgroups = two_torsion_subgroups(space.h_generators_max);
    let sweep = Sweep::new(space);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidSearchSpace(format!("cannot start workers: {e}")))?;
    let results: Vec<Result<FrameResult>> =
        pool.install(|| subgroups.par_iter().map(|h| sweep.run_frame(h)).collect());

    let mut report = CensusReport {
        space: space.clone(),
        subgroups: subgroups.len(),
        invariant_subgroups: 0,
        total: 0,
        survivor_count: 0,
        failures: BTreeMap::new(),
        relation_failures: BTreeMap::new(),
        fixed_point_offenders: BTreeMap::new(),
        oracle: OracleAgreement::default(),
        survivors: Vec::new(),
        survivors_reverified: true,
        matches_expected_family: None,
        conflict: (space.case == CaseTag::Case2).then(ConflictSummary::default),
        orbit_count: None,
    };
    let mut orbit_keys = BTreeSet::new();
    for result in results {
        let r = result?;
        report.invariant_subgroups += usize::from(r.invariant);
        report.total += r.total;
        for (k, v) in r.failures {
            *report.failures.entry(k).or_default() += v;
        }
        for (k, v) in r.relation_failures {
            *report.relation_failures.entry(k).or_default() += v;
        }
        for (k, v) in r.fixed_point_offenders {
            *report.fixed_point_offenders.entry(k).or_default() += v;
        }
        report.oracle.merge(r.oracle);
        if let Some(c) = report.conflict.as_mut() {
            c.merge(&r.conflict);
        }
        for (survivor, key) in r.survivors {
            orbit_keys.extend(key);
            report.survivors.push(survivor);
        }
    }
    report.survivors.sort();
    report.survivor_count = report.survivors.len() as u64;
    report.orbit_count = space.count_orbits.then_some(orbit_keys.len() as u64);
    report.survivors_reverified = report.survivors.iter().all(|s| reverify_survivor(space, s).unwrap_or(false));
    if space.case == CaseTag::Case1 {
        let expected: BTreeSet<Survivor> = expected_case1_family(space, &subgroups).into_iter().collect();
        let found: BTreeSet<Survivor> = report.survivors.iter().cloned().collect();
        report.matches_expected_family = Some(expected == found);
    }
    Ok(report)
}

pub fn enumerate_case1(space: &SearchSpace, workers: usize) -> Result<CensusReport> {
    if space.case != CaseTag::Case1 {
        return Err(Error::InvalidSearchSpace("enumerate_case1 needs a Case 1 space".into()));
    }
    enumerate(space, workers)
}

pub fn enumerate_case2(space: &SearchSpace, workers: usize) -> Result<CensusReport> {
    if space.case != CaseTag::Case2 {
        return Err(Error::InvalidSearchSpace("enumerate_case2 needs a Case 2 space".into()));
    }
    enumerate(space, workers)
}

/// Lemma conditions versus the generic engine on every tuple of the space.
pub fn cross_validate(space: &SearchSpace, workers: usize) -> Result<OracleAgreement> {
    Ok(enumerate(space, workers)?.oracle)
}

/// Tuples of the shape `a₁, a₂` nonzero 2-torsion, `a₁ ≠ a₂` after moving
/// `a₂` to `E₁` by `R`, `a₁ + a₂ ≠ 0`, `c₃` of order 4,
/// `H = ⟨(a₁ + a₂, a₁ + a₂, 0)⟩`, restricted to the grid and subgroup list.
pub fn expected_case1_family(space: &SearchSpace, subgroups: &[Vec<TorsionPoint>]) -> Vec<Survivor> {
    let grid_a = torsion_grid(space.a_denominator);
    let grid_c = torsion_grid(space.c_denominator);
    let zero = TorsionPoint::zero(2);
    let two = num_bigint::BigInt::from(2);
    let four = num_bigint::BigInt::from(4);
    let mut out = Vec::new();
    for a1 in grid_a.iter().filter(|p| *p.order() == two) {
        for a2 in grid_a.iter().filter(|p| *p.order() == two) {
            // R sends (z, 0, 0) to (0, −z, 0), so a₂ ∈ E₂ corresponds to −a₂ ∈ E₁.
            if a1 == &a2.neg() || a1.add(a2).is_zero() {
                continue;
            }
            let sum = a1.add(a2);
            let omega = TorsionPoint::concat(&[&sum, &sum, &zero]);
            let target = crate::torus::closure(6, &[omega]);
            for h in subgroups.iter().filter(|h| crate::torus::closure(6, h) == target) {
                for c3 in grid_c.iter().filter(|p| *p.order() == four) {
                    out.push(Survivor {
                        a1: a1.clone(),
                        a2: a2.clone(),
                        a3: zero.clone(),
                        c3: c3.clone(),
                        h_generators: h.clone(),
                    });
                }
            }
        }
    }
    out.sort();
    out
}

/// Rebuilds a survivor from its JSON form and certifies it from scratch:
/// relations, group order, translations, freeness, and the lattice
/// propositions with `Λ/(Λ₁ ⊕ Λ₂ ⊕ Λ₃) = H`.
pub fn reverify_survivor(space: &SearchSpace, survivor: &Survivor) -> Result<bool> {
    let json = serde_json::to_string(&survivor.parameters(space)).expect("parameters serialize");
    let params: D4Parameters =
        serde_json::from_str(&json).map_err(|e| Error::MalformedParameter(e.to_string()))?;
    let BuildOutcome::Built(action) = build_general(&params)? else { return Ok(false) };
    let gens = action.generators();
    let group = action.group()?;
    let relations_hold = check_relations(&gens, &D4_RELATIONS)?.into_iter().all(|b| b);
    let free = is_free_action(&group).is_free();
    let no_translations = contains_no_translations(&group).translation_free;
    let lattice = lattice_inclusion_check(&action.torus, params.case)?;
    let h_upstairs: Vec<TorsionPoint> = crate::torus::closure(6, &params.h_gens).into_iter().collect();
    Ok(group.order() == 8
        && relations_hold
        && free
        && no_translations
        && lattice.all_hold()
        && lattice.component_group == h_upstairs)
}

impl fmt::Display for CensusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.space;
        writeln!(f, "{} census over tau = {}, tau' = {}", s.case, s.tau, s.tau_prime)?;
        writeln!(
            f,
            "denominators: a1, a2 <= {}; a3, c3 <= {}; H generators <= {}",
            s.a_denominator, s.c_denominator, s.h_generators_max
        )?;
        writeln!(f, "subgroups H: {} ({} invariant under r and s)", self.subgroups, self.invariant_subgroups)?;
        writeln!(f, "tuples scanned: {}", self.total)?;
        writeln!(f, "survivors: {}", self.survivor_count)?;
        if let Some(n) = self.orbit_count {
            writeln!(f, "distinct actions on T: {n}")?;
        }
        for (reason, n) in &self.failures {
            writeln!(f, "  {reason}: {n}")?;
        }
        for (word, n) in &self.relation_failures {
            writeln!(f, "    first failing relation {word}: {n}")?;
        }
        for (word, n) in &self.fixed_point_offenders {
            writeln!(f, "    first element with a fixed point {word}: {n}")?;
        }
        writeln!(f, "lemma/engine agreement: {}/{}", self.oracle.agreements, self.oracle.compared)?;
        writeln!(f, "survivors re-verified: {}", self.survivors_reverified)?;
        if let Some(m) = self.matches_expected_family {
            writeln!(f, "matches expected family: {m}")?;
        }
        if let Some(c) = &self.conflict {
            writeln!(
                f,
                "relations hold: {}; derived element in H: {}; r^2 has a fixed point: {}",
                c.relations_hold, c.derived_element_in_h, c.r_squared_has_fixed_point
            )?;
        }
        write!(f, "expected outcome: {}", self.expected_outcome())
    }
}
