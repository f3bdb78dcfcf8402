use hyptor_cli::certificate::MatrixJson;
use hyptor_cli::{build_certificate, hodge_numbers, verify_certificate, Certificate, Parameters};
use hyptor_core::exact_linear::{IntegerMatrix, Rat};
use hyptor_core::torus::{elliptic_curve, product, EllipticCurveParam, TorsionPoint};
use proptest::prelude::*;

fn period() -> impl Strategy<Value = EllipticCurveParam> {
    (-6i64..=6, 1i64..=6, 1i64..=9, 1i64..=6)
        .prop_map(|(a, b, c, d)| EllipticCurveParam::new(Rat::new(a.into(), b.into()), Rat::new(c.into(), d.into())).unwrap())
}

const TWO_TORSION: [(i64, i64); 3] = [(1, 0), (0, 1), (1, 1)];

/// `h`, `k` distinct nonzero 2-torsion points and `h′` of order 4.
fn theorem_points() -> impl Strategy<Value = (TorsionPoint, TorsionPoint, TorsionPoint)> {
    (0usize..3, 1usize..3, 0i64..4, 0i64..4)
        .prop_filter("h' needs order 4", |&(_, _, x, y)| x % 2 == 1 || y % 2 == 1)
        .prop_map(|(i, shift, x, y)| {
            let (a, b) = (TWO_TORSION[i], TWO_TORSION[(i + shift) % 3]);
            (
                TorsionPoint::from_fractions(&[(a.0, 2), (a.1, 2)]),
                TorsionPoint::from_fractions(&[(b.0, 2), (b.1, 2)]),
                TorsionPoint::from_fractions(&[(x, 4), (y, 4)]),
            )
        })
}

fn normal_form(tau: EllipticCurveParam, tau_prime: EllipticCurveParam) -> Certificate {
    let p = Parameters::new(
        tau,
        tau_prime,
        TorsionPoint::from_fractions(&[(1, 2), (0, 1)]),
        TorsionPoint::from_fractions(&[(0, 1), (1, 2)]),
        TorsionPoint::from_fractions(&[(1, 4), (0, 1)]),
    );
    build_certificate(&p).unwrap()
}

fn verify_text(text: &str) -> u8 {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, text).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    hyptor_cli::run(["hyptor", "verify", path.to_str().unwrap()], &mut out, &mut err)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_theorem_shape_certificate_verifies(tau in period(), tau_prime in period(), (h, k, hp) in theorem_points()) {
        let cert = build_certificate(&Parameters::new(tau, tau_prime, h, k, hp)).unwrap();
        prop_assert!(cert.summary.valid, "{:?}", cert.summary.failure_reasons);
        prop_assert_eq!(cert.elements.len(), 8);
        let report = verify_certificate(&cert).unwrap();
        prop_assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn json_round_trip_is_lossless(tau in period(), tau_prime in period()) {
        let cert = normal_form(tau, tau_prime);
        let text = cert.to_json();
        let back = Certificate::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cert);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn truncated_certificates_exit_two(cut in 0.0f64..1.0) {
        let text = normal_form(EllipticCurveParam::from_fractions((0, 1), (1, 1)).unwrap(),
            EllipticCurveParam::from_fractions((0, 1), (2, 1)).unwrap()).to_json();
        let end = ((text.len() as f64) * cut) as usize;
        prop_assert_eq!(verify_text(&text[..end]), 2);
    }

    #[test]
    fn corrupted_certificates_never_panic(pos in 0.0f64..1.0, byte in proptest::sample::select(b"0123456789-/,{}[]\"x ".to_vec())) {
        let text = normal_form(EllipticCurveParam::from_fractions((1, 2), (1, 1)).unwrap(),
            EllipticCurveParam::from_fractions((0, 1), (1, 1)).unwrap()).to_json();
        let mut bytes = text.into_bytes();
        let i = ((bytes.len() as f64) * pos) as usize;
        bytes[i] = byte;
        let code = verify_text(&String::from_utf8_lossy(&bytes));
        prop_assert!(code <= 2);
    }

    #[test]
    fn integer_matrices_round_trip(entries in proptest::collection::vec(-50i64..50, 6)) {
        let m = IntegerMatrix::from_i64(2, 3, &entries);
        prop_assert_eq!(MatrixJson::from_integer(&m).to_integer("m").unwrap(), m);
    }

    #[test]
    fn trivial_group_has_full_torus_cohomology(a in period(), b in period(), c in period()) {
        let t = product(&[elliptic_curve(&a), elliptic_curve(&b), elliptic_curve(&c)]).unwrap();
        let inv = hodge_numbers(t.complex_structure(), &[IntegerMatrix::identity(6)]).unwrap();
        let binom = [1u64, 3, 3, 1];
        for p in 0..4 {
            for q in 0..4 {
                prop_assert_eq!(inv.hodge[p][q], binom[p] * binom[q]);
            }
        }
        prop_assert_eq!(inv.betti, vec![1, 6, 15, 20, 15, 6, 1]);
    }

    #[test]
    fn hodge_numbers_of_valid_actions_are_symmetric(tau in period(), tau_prime in period()) {
        let cert = normal_form(tau, tau_prime);
        let inv = hyptor_cli::invariants::invariants_from_certificate(&cert).unwrap();
        prop_assert!(inv.symmetry_violations().is_empty());
        prop_assert_eq!(inv.hodge.clone(), vec![vec![1, 0, 0, 1], vec![0, 2, 2, 0], vec![0, 2, 2, 0], vec![1, 0, 0, 1]]);
    }
}

#[test]
fn elliptic_involution_on_one_factor() {
    // z ↦ (−z₁, z₂, z₃) together with the identity: h^{1,0} = 2.
    let e = elliptic_curve(&EllipticCurveParam::from_fractions((0, 1), (1, 1)).unwrap());
    let t = product(&[e.clone(), e.clone(), e]).unwrap();
    let mut a = vec![0i64; 36];
    for i in 0..6 {
        a[i * 6 + i] = if i < 2 { -1 } else { 1 };
    }
    let inv = hodge_numbers(t.complex_structure(), &[IntegerMatrix::identity(6), IntegerMatrix::from_i64(6, 6, &a)]).unwrap();
    assert_eq!(inv.hodge[1][0], 2);
    assert_eq!(inv.hodge[0][0], 1);
    assert!(inv.symmetry_violations().is_empty());
}

#[test]
fn non_unimodular_group_average_is_a_hard_error() {
    let e = elliptic_curve(&EllipticCurveParam::from_fractions((0, 1), (1, 1)).unwrap());
    let mut a = vec![0i64; 4];
    a[0] = 2;
    a[3] = 2;
    // Not a group: the averaged character is not an integer.
    let err = hodge_numbers(e.complex_structure(), &[IntegerMatrix::identity(2), IntegerMatrix::from_i64(2, 2, &a)]);
    assert!(err.is_err());
}
