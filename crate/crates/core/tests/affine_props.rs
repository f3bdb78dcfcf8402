use std::sync::Arc;

use hyptor_core::affine_actions::{
    contains_no_translations, generate_group, has_fixed_point, is_free_action, is_free_action_prime_order,
    AffineAut, DeciderCache, FixedPointVerdict, NamedGenerator,
};
use hyptor_core::classify::torsion_grid;
use hyptor_core::d4_family::{CaseTag, D4Frame};
use hyptor_core::exact_linear::{IntegerMatrix, Rat};
use hyptor_core::torus::{elliptic_curve, product, ComplexTorus, EllipticCurveParam, TorsionPoint};
use hyptor_core::Error;
use proptest::prelude::*;

/// `E(i)³`, where multiplication by `i` acts on lattice coordinates by `[[0,-1],[1,0]]`.
fn gaussian_torus() -> Arc<ComplexTorus> {
    let e = elliptic_curve(&EllipticCurveParam::from_fractions((0, 1), (1, 1)).unwrap());
    Arc::new(product(&[e.clone(), e.clone(), e]).unwrap())
}

type Gauss = (i64, i64);

/// A 3×3 matrix over ℤ[i] built from elementary operations, so its determinant is a unit.
fn gaussian_unimodular() -> impl Strategy<Value = Vec<Vec<Gauss>>> {
    proptest::collection::vec((0usize..3, 0usize..3, -2i64..=2, -2i64..=2, 0u8..3), 0..7).prop_map(|ops| {
        let mut m: Vec<Vec<Gauss>> = (0..3).map(|i| (0..3).map(|j| (i64::from(i == j), 0)).collect()).collect();
        for (i, j, a, b, kind) in ops {
            match kind {
                0 if i != j => {
                    for k in 0..3 {
                        let (x, y) = m[j][k];
                        m[i][k].0 += a * x - b * y;
                        m[i][k].1 += a * y + b * x;
                    }
                }
                1 => m.swap(i, j),
                _ => {
                    // Multiply row i by the unit i.
                    for k in 0..3 {
                        let (x, y) = m[i][k];
                        m[i][k] = (-y, x);
                    }
                }
            }
        }
        m
    })
}

fn realize(m: &[Vec<Gauss>]) -> IntegerMatrix {
    let mut rows = vec![vec![0i64; 6]; 6];
    for (r, row) in m.iter().enumerate() {
        for (c, &(a, b)) in row.iter().enumerate() {
            rows[2 * r][2 * c] = a;
            rows[2 * r][2 * c + 1] = -b;
            rows[2 * r + 1][2 * c] = b;
            rows[2 * r + 1][2 * c + 1] = a;
        }
    }
    IntegerMatrix::from_rows(&rows)
}

fn point(den: i64) -> impl Strategy<Value = TorsionPoint> {
    proptest::collection::vec(0..den, 6).prop_map(move |n| {
        TorsionPoint::from_fractions(&n.iter().map(|&x| (x, den)).collect::<Vec<_>>())
    })
}

fn map() -> impl Strategy<Value = AffineAut> {
    (gaussian_unimodular(), 1i64..=4).prop_flat_map(|(m, d)| {
        point(d).prop_map(move |t| AffineAut::new(gaussian_torus(), realize(&m), t).unwrap())
    })
}

fn is_fixed(f: &AffineAut, x: &[Rat]) -> bool {
    let p = TorsionPoint::new(x);
    f.apply(&p) == p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn freeness_is_a_conjugation_invariant(f in map(), g in map()) {
        let conj = g.compose(&f).unwrap().compose(&g.inverse()).unwrap();
        prop_assert_eq!(has_fixed_point(&f).is_free(), has_fixed_point(&conj).is_free());
    }

    #[test]
    fn composition_is_associative_with_inverses(f in map(), g in map(), h in map()) {
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert!(f.compose(&f.inverse()).unwrap().is_identity());
        prop_assert!(f.inverse().compose(&f).unwrap().is_identity());
        prop_assert_eq!(f.compose(&AffineAut::identity(gaussian_torus())).unwrap(), f.clone());
    }

    #[test]
    fn composition_matches_pointwise_application(f in map(), g in map(), p in point(6)) {
        // compose(f, g) applies g first.
        prop_assert_eq!(f.compose(&g).unwrap().apply(&p), f.apply(&g.apply(&p)));
    }

    #[test]
    fn verdicts_carry_checkable_evidence(f in map()) {
        match has_fixed_point(&f) {
            FixedPointVerdict::Fixed { point } => prop_assert!(is_fixed(&f, &point)),
            FixedPointVerdict::Free(o) => {
                let a_minus_i = f.linear() - &IntegerMatrix::identity(6);
                let minus_t: Vec<Rat> = f.translation().coords().into_iter().map(|c| -c).collect();
                prop_assert!(o.verify(&a_minus_i, &minus_t));
            }
        }
    }

    #[test]
    fn prime_order_shortcut_agrees_on_d4_tuples(a1 in 0usize..16, a2 in 0usize..16, c3 in 0usize..16) {
        let grid = torsion_grid(4);
        let half = TorsionPoint::from_fractions(&[(1, 2), (1, 2)]);
        let omega = TorsionPoint::concat(&[&half, &half, &TorsionPoint::zero(2)]);
        let frame = D4Frame::new(CaseTag::Case1, &i_tau(), &two_i_tau(), &[omega]).unwrap();
        let z = TorsionPoint::zero(2);
        let action = frame
            .build(&TorsionPoint::concat(&[&z, &z, &grid[c3]]), &TorsionPoint::concat(&[&grid[a1], &grid[a2], &z]))
            .action()
            .unwrap();
        if let Ok(group) = action.group() {
            let full = is_free_action(&group).is_free();
            prop_assert_eq!(is_free_action_prime_order(&group, &mut DeciderCache::new()), full);
        }
    }
}

fn i_tau() -> EllipticCurveParam {
    EllipticCurveParam::from_fractions((0, 1), (1, 1)).unwrap()
}

fn two_i_tau() -> EllipticCurveParam {
    EllipticCurveParam::from_fractions((0, 1), (2, 1)).unwrap()
}

#[test]
fn non_holomorphic_and_non_unimodular_maps_are_rejected() {
    let t = gaussian_torus();
    let conj = IntegerMatrix::from_rows(&[
        [1, 0, 0, 0, 0, 0],
        [0, -1, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 1],
    ]);
    assert!(matches!(AffineAut::new(t.clone(), conj, TorsionPoint::zero(6)), Err(Error::NotHolomorphic)));
    let double = realize(&[vec![(2, 0), (0, 0), (0, 0)], vec![(0, 0), (1, 0), (0, 0)], vec![(0, 0), (0, 0), (1, 0)]]);
    assert!(matches!(AffineAut::new(t, double, TorsionPoint::zero(6)), Err(Error::NotUnimodular)));
}

#[test]
fn translation_subgroup_is_detected() {
    let t = gaussian_torus();
    let shift = TorsionPoint::from_fractions(&[(1, 2), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1)]);
    let tr = AffineAut::new(t.clone(), IntegerMatrix::identity(6), shift).unwrap();
    let group = generate_group(&[NamedGenerator::new('t', tr)], 8).unwrap();
    assert_eq!(group.order(), 2);
    let check = contains_no_translations(&group);
    assert!(!check.translation_free);
    assert_eq!(check.offender.as_deref(), Some("t"));
    assert!(is_free_action(&group).is_free());
}

#[test]
fn group_cap_is_enforced() {
    let t = gaussian_torus();
    let shift = TorsionPoint::from_fractions(&[(1, 9), (0, 1), (0, 1), (0, 1), (0, 1), (0, 1)]);
    let tr = AffineAut::new(t, IntegerMatrix::identity(6), shift).unwrap();
    assert!(generate_group(&[NamedGenerator::new('t', tr)], 8).is_err());
}
