//! Re-checks a certificate. Every claim is tested twice: directly against
//! the certificate's own numbers by plain arithmetic, and against a fresh
//! recomputation from the recorded parameters.

use std::collections::HashSet;

use hyptor_core::affine_actions::parse_word;
use hyptor_core::exact_linear::{IntegerMatrix, Obstruction, Rat};
use hyptor_core::torus::{ComplexTorus, TorsionPoint};

use crate::certificate::{
    build_certificate, parse_integer, parse_rational_field, torus_from_json, Certificate, ElementJson, WitnessJson,
};
use crate::error::CliError;

/// Largest complex dimension a certificate may declare.
const MAX_DIMENSION: usize = 16;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn fail(&mut self, message: impl Into<String>) {
        self.failures.push(message.into());
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Affine {
    linear: IntegerMatrix,
    translation: TorsionPoint,
}

impl Affine {
    fn identity(n: usize) -> Self {
        Self { linear: IntegerMatrix::identity(n), translation: TorsionPoint::zero(n) }
    }

    /// `self ∘ other`.
    fn then_apply(&self, other: &Affine) -> Affine {
        Affine {
            linear: &self.linear * &other.linear,
            translation: other.translation.apply(&self.linear).add(&self.translation),
        }
    }
}

fn parse_element(e: &ElementJson, n: usize) -> Result<Affine, CliError> {
    let what = format!("element {}", e.word);
    let linear = e.linear.to_integer(&what)?;
    if linear.rows() != n || linear.cols() != n || e.translation.dim() != n {
        return Err(CliError::Invalid(format!("{what}: expected dimension {n}")));
    }
    Ok(Affine { linear, translation: e.translation.clone() })
}

struct ParsedWitness {
    obstruction: Option<Obstruction>,
}

fn parse_witness(w: &WitnessJson, n: usize) -> Result<ParsedWitness, CliError> {
    let what = format!("witness for {}", w.word);
    let obstruction = match (&w.row, &w.witness, &w.value) {
        (Some(row), Some(u), Some(value)) => {
            let witness = u
                .iter()
                .map(|x| parse_integer(x).ok_or_else(|| CliError::Invalid(format!("{what}: bad integer '{x}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            if witness.len() != n {
                return Err(CliError::Invalid(format!("{what}: witness row must have {n} entries")));
            }
            Some(Obstruction { row: *row, witness, value: parse_rational_field(value, &what)? })
        }
        (None, None, None) => None,
        _ => return Err(CliError::Invalid(format!("{what}: row, witness and value must appear together"))),
    };
    if let Some(p) = &w.fixed_point {
        if p.dim() != n {
            return Err(CliError::Invalid(format!("{what}: fixed point must have {n} coordinates")));
        }
    }
    Ok(ParsedWitness { obstruction })
}

fn evaluate(word: &str, generators: &[Affine], n: usize) -> Result<Affine, CliError> {
    let letters = parse_word(if word == "e" { "" } else { word }, &['r', 's'])
        .map_err(|e| CliError::Invalid(format!("word '{word}': {e}")))?;
    let mut acc = Affine::identity(n);
    for i in letters {
        let g = generators
            .get(i)
            .ok_or_else(|| CliError::Invalid(format!("word '{word}' uses a missing generator")))?;
        acc = acc.then_apply(g);
    }
    Ok(acc)
}

fn is_translation(a: &Affine) -> bool {
    a.linear.is_identity() && !a.translation.is_zero()
}

/// Checks a parsed certificate. Structural problems (wrong sizes,
/// unparsable numbers, unknown words) are errors; wrong claims are
/// collected as failures.
pub fn verify_certificate(cert: &Certificate) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport::default();
    if !(1..=MAX_DIMENSION).contains(&cert.torus.g) {
        return Err(CliError::Invalid(format!("torus dimension {} is out of range", cert.torus.g)));
    }
    let n = 2 * cert.torus.g;
    let generators = cert.generators.iter().map(|e| parse_element(e, n)).collect::<Result<Vec<_>, _>>()?;
    let elements = cert.elements.iter().map(|e| parse_element(e, n)).collect::<Result<Vec<_>, _>>()?;
    let witnesses = cert.freeness.iter().map(|w| parse_witness(w, n)).collect::<Result<Vec<_>, _>>()?;
    if cert.generators.iter().map(|g| g.word.as_str()).ne(["r", "s"].into_iter().take(cert.generators.len())) {
        return Err(CliError::Invalid("generators must be named r and s, in that order".into()));
    }

    let torus = match torus_from_json(&cert.torus)? {
        Ok(t) => Some(t),
        Err(e) => {
            report.fail(format!("torus: {e}"));
            None
        }
    };
    if let Some(torus) = &torus {
        check_maps(&mut report, torus, cert);
    }
    check_group(&mut report, cert, &generators, &elements)?;
    check_witnesses(&mut report, cert, &elements, &witnesses);
    check_translations(&mut report, cert, &elements);
    check_relations_claims(&mut report, cert, &generators, n)?;
    check_summary(&mut report, cert);
    check_recomputation(&mut report, cert)?;
    Ok(report)
}

fn check_maps(report: &mut VerifyReport, torus: &ComplexTorus, cert: &Certificate) {
    let all = cert.generators.iter().map(|g| ("generator", g)).chain(cert.elements.iter().map(|e| ("element", e)));
    for (kind, e) in all {
        let Ok(a) = e.linear.to_integer(&e.word) else { continue };
        if !a.is_unimodular() {
            report.fail(format!("{kind} {}: linear part is not unimodular", e.word));
        }
        if !torus.is_holomorphic(&a) {
            report.fail(format!("{kind} {}: linear part does not commute with J", e.word));
        }
    }
}

fn check_group(
    report: &mut VerifyReport,
    cert: &Certificate,
    generators: &[Affine],
    elements: &[Affine],
) -> Result<(), CliError> {
    let n = 2 * cert.torus.g;
    if elements.is_empty() {
        if cert.rejection.is_none() {
            report.fail("no group elements listed and no rejection recorded");
        }
        return Ok(());
    }
    if elements[0] != Affine::identity(n) || cert.elements[0].word != "e" {
        report.fail("first element must be the identity e");
    }
    for (e, a) in cert.elements.iter().zip(elements) {
        if &evaluate(&e.word, generators, n)? != a {
            report.fail(format!("element {}: map differs from the product of its word", e.word));
        }
    }
    let set: HashSet<(&IntegerMatrix, &TorsionPoint)> = elements.iter().map(|a| (&a.linear, &a.translation)).collect();
    if set.len() != elements.len() {
        report.fail("group elements are not distinct");
    }
    for (e, a) in cert.elements.iter().zip(elements) {
        for (g, b) in cert.generators.iter().zip(generators) {
            let c = a.then_apply(b);
            if !set.contains(&(&c.linear, &c.translation)) {
                report.fail(format!("element {}: product with {} is not in the element list", e.word, g.word));
            }
        }
    }
    Ok(())
}

fn check_witnesses(report: &mut VerifyReport, cert: &Certificate, elements: &[Affine], witnesses: &[ParsedWitness]) {
    let nonidentity = cert.elements.iter().zip(elements).skip(1);
    if cert.freeness.len() != elements.len().saturating_sub(1) {
        report.fail(format!(
            "expected {} freeness witnesses, found {}",
            elements.len().saturating_sub(1),
            cert.freeness.len()
        ));
    }
    for ((e, a), (w, parsed)) in nonidentity.zip(cert.freeness.iter().zip(witnesses)) {
        if w.word != e.word {
            report.fail(format!("witness for {} is listed against element {}", w.word, e.word));
            continue;
        }
        let n = a.linear.rows();
        let a_minus_i = &a.linear - &IntegerMatrix::identity(n);
        let minus_t: Vec<Rat> = a.translation.coords().into_iter().map(|c| -c).collect();
        match (w.fixed_point_free, &parsed.obstruction, &w.fixed_point) {
            (true, Some(o), None) => {
                if !o.verify(&a_minus_i, &minus_t) {
                    report.fail(format!("element {}: obstruction witness does not verify", e.word));
                }
            }
            (false, None, Some(x)) => {
                let moved = x.apply(&a.linear).add(&a.translation);
                if &moved != x {
                    report.fail(format!("element {}: claimed fixed point is not fixed", e.word));
                }
            }
            _ => report.fail(format!("element {}: verdict and witness fields disagree", e.word)),
        }
    }
}

fn check_translations(report: &mut VerifyReport, cert: &Certificate, elements: &[Affine]) {
    if elements.is_empty() {
        return;
    }
    let offender = cert.elements.iter().zip(elements).find(|(_, a)| is_translation(a)).map(|(e, _)| e.word.clone());
    let claim = &cert.translation_check;
    if claim.translation_free != offender.is_none() || claim.offender != offender {
        report.fail(format!(
            "translation check claims offender {:?}, arithmetic finds {:?}",
            claim.offender, offender
        ));
    }
}

fn check_relations_claims(
    report: &mut VerifyReport,
    cert: &Certificate,
    generators: &[Affine],
    n: usize,
) -> Result<(), CliError> {
    if generators.len() != 2 {
        return Ok(());
    }
    for r in &cert.relations {
        let holds = evaluate(&r.word, generators, n)? == Affine::identity(n);
        if holds != r.holds {
            report.fail(format!("relation {}: claimed {}, evaluates to {}", r.word, r.holds, holds));
        }
    }
    Ok(())
}

fn check_summary(report: &mut VerifyReport, cert: &Certificate) {
    let s = &cert.summary;
    if s.order != cert.elements.len() {
        report.fail(format!("summary order {} but {} elements listed", s.order, cert.elements.len()));
    }
    let free = !cert.elements.is_empty() && cert.freeness.iter().all(|w| w.fixed_point_free);
    if s.free != free {
        report.fail("summary freeness disagrees with the witnesses");
    }
    if s.translation_free != cert.translation_check.translation_free {
        report.fail("summary translation flag disagrees with the translation check");
    }
    let relations_hold = !cert.relations.is_empty() && cert.relations.iter().all(|r| r.holds);
    if s.relations_hold != relations_hold {
        report.fail("summary relation flag disagrees with the relation checks");
    }
    let valid = s.free && s.translation_free && s.relations_hold && s.order == 8;
    if s.valid != valid {
        report.fail("summary validity disagrees with its own flags");
    }
    if s.valid {
        match &cert.lattice_inclusion {
            Some(l) if l.all_hold() => {}
            Some(_) => report.fail("lattice inclusion checks do not all hold"),
            None => report.fail("lattice inclusion report missing"),
        }
    } else {
        let reasons = if s.failure_reasons.is_empty() { "no reason given".to_string() } else { s.failure_reasons.join("; ") };
        report.fail(format!("certificate does not certify a free action: {reasons}"));
    }
}

fn check_recomputation(report: &mut VerifyReport, cert: &Certificate) -> Result<(), CliError> {
    let fresh = build_certificate(&cert.parameters)?;
    if fresh.torus != cert.torus {
        report.fail("torus does not match the one built from the parameters");
    }
    if fresh.rejection != cert.rejection {
        report.fail("rejection does not match recomputation");
    }
    if fresh.generators != cert.generators {
        report.fail("generators do not match the parameters");
    }
    compare_lists(report, "element", &fresh.elements, &cert.elements, |e| &e.word);
    compare_lists(report, "freeness witness for", &fresh.freeness, &cert.freeness, |w| &w.word);
    if fresh.translation_check != cert.translation_check {
        report.fail("translation check does not match recomputation");
    }
    if fresh.relations != cert.relations {
        report.fail("relation checks do not match recomputation");
    }
    if fresh.lemma_report != cert.lemma_report {
        report.fail("lemma report does not match recomputation");
    }
    if fresh.lattice_inclusion != cert.lattice_inclusion {
        report.fail("lattice inclusion report does not match recomputation");
    }
    if fresh.shape_violations != cert.shape_violations {
        report.fail("shape violations do not match recomputation");
    }
    if fresh.summary != cert.summary {
        report.fail("summary does not match recomputation");
    }
    Ok(())
}

fn compare_lists<T: PartialEq>(
    report: &mut VerifyReport,
    what: &str,
    fresh: &[T],
    claimed: &[T],
    word: impl Fn(&T) -> &String,
) {
    if fresh.len() != claimed.len() {
        report.fail(format!("{} {what} entries recomputed, {} listed", fresh.len(), claimed.len()));
    }
    for (f, c) in fresh.iter().zip(claimed) {
        if f != c {
            report.fail(format!("{what} {} does not match recomputation", word(c)));
        }
    }
}
