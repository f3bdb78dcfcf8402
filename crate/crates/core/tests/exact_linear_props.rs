use hyptor_core::exact_linear::{
    hnf, is_row_hnf, is_smith_form, lattice_membership, saturate, snf, solve_affine_mod_lattice, AffineSolution,
    IntegerMatrix, Rat, RationalMatrix, Sublattice,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, range: i64) -> impl Strategy<Value = IntegerMatrix> {
    proptest::collection::vec(-range..=range, rows * cols).prop_map(move |d| IntegerMatrix::from_i64(rows, cols, &d))
}

fn any_matrix() -> impl Strategy<Value = IntegerMatrix> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| matrix(r, c, 6))
}

/// Product of random elementary row operations.
fn unimodular(n: usize) -> impl Strategy<Value = IntegerMatrix> {
    proptest::collection::vec((0..n, 0..n, -2i64..=2, any::<bool>()), 0..8).prop_map(move |ops| {
        let mut rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        for (i, j, c, swap) in ops {
            if i == j {
                continue;
            }
            if swap {
                rows.swap(i, j);
            } else {
                for k in 0..n {
                    rows[i][k] += c * rows[j][k];
                }
            }
        }
        IntegerMatrix::from_rows(&rows)
    })
}

fn minors_gcd(m: &IntegerMatrix, k: usize) -> BigInt {
    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        (k - 1..n).flat_map(|l| subsets(l, k - 1).into_iter().map(move |mut s| { s.push(l); s })).collect()
    }
    let mut g = BigInt::zero();
    for rows in subsets(m.rows(), k) {
        for cols in subsets(m.cols(), k) {
            let minor = m.select_rows(rows.clone()).select_columns(cols);
            g = g.gcd(&minor.determinant());
        }
    }
    g
}

proptest! {
    #[test]
    fn hnf_reconstructs(m in any_matrix()) {
        let (h, u) = hnf(&m);
        prop_assert!(u.is_unimodular());
        prop_assert_eq!(&(&u * &m), &h);
        prop_assert!(is_row_hnf(&h));
    }

    #[test]
    fn hnf_is_unique_up_to_row_operations((m, w) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| (matrix(r, c, 5), unimodular(r)))) {
        prop_assert_eq!(hnf(&m).0, hnf(&(&w * &m)).0);
    }

    #[test]
    fn snf_reconstructs(m in any_matrix()) {
        let s = snf(&m);
        prop_assert!(s.u.is_unimodular() && s.v.is_unimodular());
        prop_assert_eq!(&(&(&s.u * &m) * &s.v), &s.d);
        prop_assert!(is_smith_form(&s.d));
    }

    #[test]
    fn snf_diagonal_is_invariant((m, p, q) in (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| (matrix(r, c, 5), unimodular(r), unimodular(c)))) {
        prop_assert_eq!(snf(&m).diagonal(), snf(&(&(&p * &m) * &q)).diagonal());
    }

    #[test]
    fn snf_matches_determinantal_divisors(m in (1usize..=3, 1usize..=3).prop_flat_map(|(r, c)| matrix(r, c, 6))) {
        // d₁⋯d_k = gcd of the k×k minors.
        let d = snf(&m).diagonal();
        let mut product = BigInt::one();
        for (k, dk) in d.iter().enumerate() {
            product *= dk;
            prop_assert_eq!(&product, &minors_gcd(&m, k + 1));
        }
    }

    #[test]
    fn affine_solver_matches_brute_force(
        m in matrix(2, 2, 3),
        b in proptest::collection::vec(0i64..6, 2),
        den in 1i64..=6,
    ) {
        let rhs: Vec<Rat> = b.iter().map(|&x| Rat::new(x.into(), den.into())).collect();
        let sol = solve_affine_mod_lattice(&m.to_rational(), &rhs).unwrap();
        // A solution exists iff one exists with denominator dividing den·D₂ (or den·D₁ at rank 1).
        let dr = if m.determinant().is_zero() { minors_gcd(&m, 1) } else { minors_gcd(&m, 2) };
        let big = den * i64::try_from(dr.abs().max(BigInt::one())).unwrap();
        let mut found = false;
        for x in 0..big {
            for y in 0..big {
                let v = m.mul_rat_vec(&[Rat::new(x.into(), big.into()), Rat::new(y.into(), big.into())]);
                if v.iter().zip(&rhs).all(|(a, c)| (a - c).is_integer()) {
                    found = true;
                }
            }
        }
        prop_assert_eq!(sol.is_solvable(), found);
        match sol {
            AffineSolution::Solvable { x, m: lattice } => {
                let ax = m.mul_rat_vec(&x);
                for i in 0..2 {
                    prop_assert_eq!(&ax[i], &(&rhs[i] + Rat::from_integer(lattice[i].clone())));
                }
            }
            AffineSolution::Obstructed(o) => prop_assert!(o.verify(&m, &rhs)),
        }
    }

    #[test]
    fn rational_systems_scale_back(m in matrix(2, 3, 4), d in 1i64..=5, b in proptest::collection::vec(-4i64..=4, 2)) {
        let scaled = RationalMatrix::new(2, 3, m.entries().iter().map(|x| Rat::new(x.clone(), d.into())).collect());
        let rhs: Vec<Rat> = b.iter().map(|&x| Rat::new(x.into(), 3.into())).collect();
        if let AffineSolution::Solvable { x, m: lattice } = solve_affine_mod_lattice(&scaled, &rhs).unwrap() {
            let ax = scaled.mul_vec(&x);
            for i in 0..2 {
                prop_assert_eq!(&ax[i], &(&rhs[i] + Rat::from_integer(lattice[i].clone())));
            }
        }
    }

    #[test]
    fn saturation_is_idempotent_and_contains_the_lattice(m in matrix(4, 2, 6)) {
        prop_assume!(snf(&m).rank() == 2);
        let l = Sublattice::new(&m).unwrap();
        let s = saturate(&l);
        prop_assert!(s.is_saturated());
        prop_assert_eq!(&saturate(&s), &s);
        prop_assert_eq!(s.rank(), l.rank());
        for c in m.columns() {
            let v: Vec<Rat> = c.iter().map(|x| Rat::from_integer(x.clone())).collect();
            prop_assert!(s.contains(&v));
        }
        // The index equals the product of the elementary divisors.
        let product: BigInt = snf(&m).elementary_divisors().iter().product();
        prop_assert_eq!(s.index_of(&l), Some(product.abs()));
    }

    #[test]
    fn membership_recovers_coordinates(m in matrix(3, 2, 5), c in proptest::collection::vec(-5i64..=5, 2)) {
        prop_assume!(snf(&m).rank() == 2);
        let l = Sublattice::new(&m).unwrap();
        let v = m.mul_vec(&c.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>());
        let v: Vec<Rat> = v.iter().map(|x| Rat::from_integer(x.clone())).collect();
        let coords = lattice_membership(&v, &l).expect("member");
        let back = l.basis().mul_vec(&coords);
        prop_assert_eq!(back.iter().map(|x| Rat::from_integer(x.clone())).collect::<Vec<_>>(), v);
    }
}

#[test]
fn zero_and_empty_shapes() {
    let z = IntegerMatrix::zeros(3, 2);
    let s = snf(&z);
    assert_eq!(s.rank(), 0);
    assert_eq!(s.zero_rows().count(), 3);
    let (h, _) = hnf(&z);
    assert!(h.is_zero());
}

#[test]
fn known_smith_form() {
    let m = IntegerMatrix::from_rows(&[[2, 4, 4], [-6, 6, 12], [10, -4, -16]]);
    let d: Vec<BigInt> = snf(&m).diagonal();
    assert_eq!(d, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
}

#[test]
fn half_integer_system_is_obstructed() {
    // 2x ≡ 1/2 (mod 1) is solvable; 0·x ≡ 1/2 is not.
    let two = IntegerMatrix::from_rows(&[[2]]).to_rational();
    assert!(solve_affine_mod_lattice(&two, &[Rat::new(1.into(), 2.into())]).unwrap().is_solvable());
    let zero = IntegerMatrix::from_rows(&[[0]]).to_rational();
    match solve_affine_mod_lattice(&zero, &[Rat::new(1.into(), 2.into())]).unwrap() {
        AffineSolution::Obstructed(o) => assert_eq!(o.value.abs(), Rat::new(1.into(), 2.into())),
        other => panic!("expected an obstruction, got {other:?}"),
    }
}
