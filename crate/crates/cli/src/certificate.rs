//! The JSON certificate emitted by `construct` and consumed by `verify` and
//! `invariants`.

use hyptor_core::affine_actions::{
    check_relations, contains_no_translations, is_free_action, FixedPointVerdict, GeneratedGroup,
};
use hyptor_core::classify::D4_RELATIONS;
use hyptor_core::d4_family::{
    build_general, check_lemma_conditions, lattice_inclusion_check, BuildOutcome, CaseTag, D4Frame, D4Parameters,
    LatticeInclusionReport, LemmaConditionReport,
};
use hyptor_core::exact_linear::rational::{format_rational, parse_rational};
use hyptor_core::exact_linear::{IntegerMatrix, Rat, RationalMatrix};
use hyptor_core::torus::{ComplexTorus, EllipticCurveParam, TorsionPoint};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1.0";

/// A matrix in row-major order with explicit dimensions. Entries are
/// integers or `p/q` rationals, always as strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<String>,
}

impl MatrixJson {
    pub fn from_integer(m: &IntegerMatrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), entries: m.entries().iter().map(BigInt::to_string).collect() }
    }

    pub fn from_rational(m: &RationalMatrix) -> Self {
        Self { rows: m.rows(), cols: m.cols(), entries: m.entries().iter().map(format_rational).collect() }
    }

    fn check_shape(&self, what: &str) -> Result<(), CliError> {
        if self.rows.checked_mul(self.cols) != Some(self.entries.len()) {
            return Err(CliError::Invalid(format!(
                "{what}: {}x{} matrix has {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        Ok(())
    }

    pub fn to_integer(&self, what: &str) -> Result<IntegerMatrix, CliError> {
        self.check_shape(what)?;
        let data = self
            .entries
            .iter()
            .map(|e| parse_integer(e).ok_or_else(|| CliError::Invalid(format!("{what}: bad integer '{e}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntegerMatrix::new(self.rows, self.cols, data))
    }

    pub fn to_rational(&self, what: &str) -> Result<RationalMatrix, CliError> {
        self.check_shape(what)?;
        let data = self
            .entries
            .iter()
            .map(|e| parse_rational(e).ok_or_else(|| CliError::Invalid(format!("{what}: bad rational '{e}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RationalMatrix::new(self.rows, self.cols, data))
    }
}

pub(crate) fn parse_integer(text: &str) -> Option<BigInt> {
    let digits = text.strip_prefix('-').unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub case: CaseTag,
    pub tau: EllipticCurveParam,
    pub tau_prime: EllipticCurveParam,
    pub h: TorsionPoint,
    pub k: TorsionPoint,
    pub h_prime: TorsionPoint,
    pub h_generators: Vec<TorsionPoint>,
}

impl Parameters {
    /// The Case-1 shape `s = (+h, −·+k, −·)`, `r = (·, ·, +h′)` with
    /// `H = ⟨(h + k, h + k, 0)⟩`.
    pub fn new(
        tau: EllipticCurveParam,
        tau_prime: EllipticCurveParam,
        h: TorsionPoint,
        k: TorsionPoint,
        h_prime: TorsionPoint,
    ) -> Self {
        let p = D4Parameters::theorem_shape(tau, tau_prime, h, k, h_prime);
        Self::from_core(&p)
    }

    fn from_core(p: &D4Parameters) -> Self {
        Self {
            case: p.case,
            tau: p.tau.clone(),
            tau_prime: p.tau_prime.clone(),
            h: p.a1.clone(),
            k: p.a2.clone(),
            h_prime: p.c3.clone(),
            h_generators: p.h_gens.clone(),
        }
    }

    pub fn to_core(&self) -> D4Parameters {
        D4Parameters {
            case: self.case,
            tau: self.tau.clone(),
            tau_prime: self.tau_prime.clone(),
            a1: self.h.clone(),
            a2: self.k.clone(),
            a3: TorsionPoint::zero(2),
            c3: self.h_prime.clone(),
            h_gens: self.h_generators.clone(),
        }
    }

    /// Ways in which the parameters miss the normal-form hypotheses.
    pub fn shape_violations(&self) -> Vec<String> {
        let two = BigInt::from(2);
        let mut out = Vec::new();
        if self.case != CaseTag::Case1 {
            out.push("the construction uses the Case 1 representation".to_string());
        }
        if self.h.order() != &two {
            out.push("h must be a nonzero 2-torsion point".to_string());
        }
        if self.k.order() != &two {
            out.push("k must be a nonzero 2-torsion point".to_string());
        }
        if self.h.add(&self.k).is_zero() {
            out.push("h + k must be nonzero".to_string());
        }
        if self.h_prime.order() != &BigInt::from(4) {
            out.push("h' must have order exactly 4".to_string());
        }
        let sum = self.h.add(&self.k);
        let omega = TorsionPoint::concat(&[&sum, &sum, &TorsionPoint::zero(2)]);
        if self.h_generators != [omega] {
            out.push("H must be generated by (h + k, h + k, 0)".to_string());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusJson {
    /// Complex dimension.
    pub g: usize,
    /// `J` in the lattice basis of the quotient.
    pub complex_structure: MatrixJson,
    /// Columns are the quotient lattice basis in product coordinates.
    pub basis_change: MatrixJson,
}

impl TorusJson {
    fn from_torus(t: &ComplexTorus) -> Self {
        Self {
            g: t.dim(),
            complex_structure: MatrixJson::from_rational(t.complex_structure()),
            basis_change: MatrixJson::from_rational(t.basis_change()),
        }
    }
}

/// An affine map `x ↦ A·x + t` labelled by a word in `r`, `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementJson {
    pub word: String,
    pub linear: MatrixJson,
    pub translation: TorsionPoint,
}

/// Fixed-point verdict for one nonidentity element. A free element carries
/// an integer row `witness` with `witness·(A − I) = 0` and
/// `witness·(−t) = value ∉ ℤ`; otherwise `fixed_point` is given.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessJson {
    pub word: String,
    pub fixed_point_free: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<TorsionPoint>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationCheckJson {
    pub translation_free: bool,
    pub offender: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationJson {
    pub word: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub order: usize,
    pub free: bool,
    pub translation_free: bool,
    pub relations_hold: bool,
    /// All three of the above with order 8.
    pub valid: bool,
    pub failure_reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub schema_version: String,
    pub parameters: Parameters,
    pub torus: TorusJson,
    /// Set when no action could be formed (the maps do not descend, or the
    /// generated group is too large).
    pub rejection: Option<String>,
    pub generators: Vec<ElementJson>,
    pub elements: Vec<ElementJson>,
    pub freeness: Vec<WitnessJson>,
    pub translation_check: TranslationCheckJson,
    pub relations: Vec<RelationJson>,
    pub lemma_report: LemmaConditionReport,
    pub lattice_inclusion: Option<LatticeInclusionReport>,
    pub shape_violations: Vec<String>,
    pub summary: Summary,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cert: Certificate =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("certificate does not parse: {e}")))?;
        let major = cert.schema_version.split('.').next().unwrap_or_default();
        let supported = SCHEMA_VERSION.split('.').next().unwrap_or_default();
        if major != supported {
            return Err(CliError::Invalid(format!("unsupported schema version '{}'", cert.schema_version)));
        }
        Ok(cert)
    }

    /// Short human-readable account.
    pub fn to_text(&self) -> String {
        let p = &self.parameters;
        let mut out = format!(
            "D4 action on (E(tau) x E(tau) x E(tau'))/H, tau = {}, tau' = {}\nh = {}, k = {}, h' = {}\n",
            p.tau, p.tau_prime, p.h, p.k, p.h_prime
        );
        let s = &self.summary;
        out += &format!(
            "group order {}; free: {}; translation-free: {}; relations hold: {}\n",
            s.order, s.free, s.translation_free, s.relations_hold
        );
        for w in &self.freeness {
            let detail = match (&w.witness, &w.value, &w.fixed_point) {
                (Some(u), Some(v), _) => format!("no fixed point, witness [{}] gives {}", u.join(", "), v),
                (_, _, Some(x)) => format!("fixed point {x}"),
                _ => "incomplete".to_string(),
            };
            out += &format!("  {:<6} {}\n", w.word, detail);
        }
        out += if s.valid { "valid\n" } else { "NOT valid\n" };
        for reason in &s.failure_reasons {
            out += &format!("  - {reason}\n");
        }
        out
    }
}

fn element_json(word: &str, linear: &IntegerMatrix, translation: &TorsionPoint) -> ElementJson {
    ElementJson { word: word.to_string(), linear: MatrixJson::from_integer(linear), translation: translation.clone() }
}

fn witness_json(word: &str, verdict: &FixedPointVerdict) -> WitnessJson {
    match verdict {
        FixedPointVerdict::Free(o) => WitnessJson {
            word: word.to_string(),
            fixed_point_free: true,
            row: Some(o.row),
            witness: Some(o.witness.iter().map(BigInt::to_string).collect()),
            value: Some(format_rational(&o.value)),
            fixed_point: None,
        },
        FixedPointVerdict::Fixed { point } => WitnessJson {
            word: word.to_string(),
            fixed_point_free: false,
            row: None,
            witness: None,
            value: None,
            fixed_point: Some(TorsionPoint::new(point)),
        },
    }
}

/// Display name of an element word; the identity is `e`.
pub fn display_word(word: &str) -> &str {
    if word.is_empty() {
        "e"
    } else {
        word
    }
}

/// Builds the full certificate for a parameter set. Errors only on
/// parameters that do not describe a torus or points of the right sizes.
pub fn build_certificate(parameters: &Parameters) -> Result<Certificate, CliError> {
    let core = parameters.to_core();
    let invalid = |e: hyptor_core::Error| CliError::Invalid(e.to_string());
    let lemma_report = check_lemma_conditions(&core).map_err(invalid)?;
    let frame = D4Frame::new(core.case, &core.tau, &core.tau_prime, &core.h_gens).map_err(invalid)?;
    let shape_violations = parameters.shape_violations();
    let mut cert = Certificate {
        schema_version: SCHEMA_VERSION.to_string(),
        parameters: parameters.clone(),
        torus: TorusJson::from_torus(frame.torus()),
        rejection: None,
        generators: Vec::new(),
        elements: Vec::new(),
        freeness: Vec::new(),
        translation_check: TranslationCheckJson { translation_free: false, offender: None },
        relations: D4_RELATIONS.iter().map(|w| RelationJson { word: w.to_string(), holds: false }).collect(),
        lemma_report,
        lattice_inclusion: None,
        shape_violations,
        summary: Summary {
            order: 0,
            free: false,
            translation_free: false,
            relations_hold: false,
            valid: false,
            failure_reasons: Vec::new(),
        },
    };
    let group = match build_general(&core).map_err(invalid)? {
        BuildOutcome::Rejected(r) => Err(r.to_string()),
        BuildOutcome::Built(action) => {
            cert.generators = vec![
                element_json("r", action.r.linear(), action.r.translation()),
                element_json("s", action.s.linear(), action.s.translation()),
            ];
            cert.lattice_inclusion = lattice_inclusion_check(&action.torus, core.case).ok();
            action.group().map_err(|e| e.to_string())
        }
    };
    match group {
        Ok(group) => fill_from_group(&mut cert, &group),
        Err(reason) => cert.rejection = Some(reason),
    }
    cert.summary.failure_reasons = failure_reasons(&cert);
    Ok(cert)
}

fn fill_from_group(cert: &mut Certificate, group: &GeneratedGroup) {
    cert.elements = group
        .elements()
        .iter()
        .map(|e| element_json(display_word(&e.word), e.map.linear(), e.map.translation()))
        .collect();
    let freeness = is_free_action(group);
    cert.freeness = freeness.witnesses.iter().map(|w| witness_json(&w.word, &w.verdict)).collect();
    let translations = contains_no_translations(group);
    cert.translation_check =
        TranslationCheckJson { translation_free: translations.translation_free, offender: translations.offender };
    let holds = check_relations(group.generators(), &D4_RELATIONS).expect("relation words are well formed");
    cert.relations = D4_RELATIONS
        .iter()
        .zip(holds)
        .map(|(w, holds)| RelationJson { word: w.to_string(), holds })
        .collect();
    let relations_hold = cert.relations.iter().all(|r| r.holds);
    cert.summary = Summary {
        order: group.order(),
        free: freeness.is_free(),
        translation_free: translations.translation_free,
        relations_hold,
        valid: freeness.is_free() && translations.translation_free && relations_hold && group.order() == 8,
        failure_reasons: Vec::new(),
    };
}

fn failure_reasons(cert: &Certificate) -> Vec<String> {
    if cert.summary.valid {
        return Vec::new();
    }
    let mut out = cert.shape_violations.clone();
    if let Some(r) = &cert.rejection {
        out.push(r.clone());
    }
    for w in cert.freeness.iter().filter(|w| !w.fixed_point_free) {
        out.push(format!("element {} has a fixed point", w.word));
    }
    if let Some(offender) = &cert.translation_check.offender {
        out.push(format!("element {offender} is a translation"));
    }
    for r in cert.relations.iter().filter(|r| !r.holds) {
        out.push(format!("relation {} = 1 fails", r.word));
    }
    if cert.rejection.is_none() && cert.summary.order != 8 {
        out.push(format!("group has order {}, not 8", cert.summary.order));
    }
    let violations = cert.lemma_report.violations();
    if !violations.is_empty() {
        out.push(format!("lemma conditions violated: {}", violations.join(", ")));
    }
    out
}

/// Rebuilds the torus from the certificate's own matrices. The outer error
/// is a parse failure; the inner one a torus that fails its own checks.
pub(crate) fn torus_from_json(t: &TorusJson) -> Result<hyptor_core::Result<ComplexTorus>, CliError> {
    let j = t.complex_structure.to_rational("complex_structure")?;
    let b = t.basis_change.to_rational("basis_change")?;
    if j.rows() != 2 * t.g {
        return Err(CliError::Invalid(format!("complex structure is not {0}x{0}", 2 * t.g)));
    }
    Ok(ComplexTorus::new(j, b, vec![0..2 * t.g]))
}

pub(crate) fn parse_rational_field(text: &str, what: &str) -> Result<Rat, CliError> {
    parse_rational(text).ok_or_else(|| CliError::Invalid(format!("{what}: bad rational '{text}'")))
}
