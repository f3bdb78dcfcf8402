use std::collections::BTreeSet;

use hyptor_core::classify::{
    enumerate, enumerate_case1, two_torsion_subgroups, CensusReport, SearchSpace, Stage, Survivor,
    DEFAULT_STAGE_ORDER,
};
use hyptor_core::d4_family::CaseTag;
use hyptor_core::torus::TorsionPoint;

fn small() -> SearchSpace {
    SearchSpace::new(CaseTag::Case1).with_denominators(2, 4)
}

fn survivors(r: &CensusReport) -> BTreeSet<Survivor> {
    r.survivors.iter().cloned().collect()
}

/// Every rotation of the default order plus its reverse, so each stage runs first once.
fn stage_orders() -> Vec<[Stage; 4]> {
    let mut out: Vec<[Stage; 4]> = (0..4)
        .map(|k| {
            let mut o = DEFAULT_STAGE_ORDER;
            o.rotate_left(k);
            o
        })
        .collect();
    let mut reversed = DEFAULT_STAGE_ORDER;
    reversed.reverse();
    out.push(reversed);
    out
}

#[test]
fn stage_order_does_not_change_survivors() {
    let baseline = enumerate(&small(), 4).unwrap();
    assert_eq!(baseline.survivor_count, 72);
    for order in stage_orders() {
        let mut space = small();
        space.stage_order = order;
        let r = enumerate(&space, 4).unwrap();
        assert_eq!(survivors(&r), survivors(&baseline), "{order:?}");
        assert_eq!(r.failure_total() + r.survivor_count, r.total);
    }
}

#[test]
fn worker_count_does_not_change_the_report() {
    let one = enumerate(&small(), 1).unwrap();
    let three = enumerate(&small(), 3).unwrap();
    assert_eq!(one, three);
    assert!(one.expected_outcome());
}

#[test]
fn survivors_grow_with_the_bounds() {
    let coarse = enumerate_case1(&SearchSpace::new(CaseTag::Case1).with_denominators(2, 2), 4).unwrap();
    let fine = enumerate_case1(&SearchSpace::new(CaseTag::Case1).with_denominators(4, 4), 4).unwrap();
    // c₃ must have order 4, so a bound of 2 on c₃ leaves nothing.
    assert_eq!(coarse.survivor_count, 0);
    assert!(survivors(&coarse).is_subset(&survivors(&fine)));
    assert!(survivors(&enumerate(&small(), 4).unwrap()).is_subset(&survivors(&fine)));
    assert_eq!(fine.survivor_count, 72);
}

#[test]
fn larger_subgroups_add_no_survivors() {
    let mut space = small();
    space.h_generators_max = 3;
    let r = enumerate(&space, 4).unwrap();
    assert!(r.subgroups > 460);
    assert_eq!(survivors(&r), survivors(&enumerate(&small(), 4).unwrap()));
}

#[test]
fn orbit_count_matches_unordered_pairs() {
    let mut space = SearchSpace::new(CaseTag::Case1);
    space.count_orbits = true;
    let r = enumerate(&space, 4).unwrap();
    // Swapping a₁ and a₂ changes s by ω, which is trivial on the quotient.
    let unordered: BTreeSet<(BTreeSet<TorsionPoint>, TorsionPoint)> = r
        .survivors
        .iter()
        .map(|s| ([s.a1.clone(), s.a2.clone()].into_iter().collect(), s.c3.clone()))
        .collect();
    assert_eq!(unordered.len(), 36);
    assert_eq!(r.orbit_count, Some(36));
}

#[test]
fn two_torsion_subgroup_census() {
    let subgroups = two_torsion_subgroups(2);
    assert_eq!(subgroups.len(), 460);
    // Rank 0, then rank 1 (nonzero vectors off the three coordinate pairs: 63 - 9 = 54).
    assert!(subgroups[0].is_empty());
    assert_eq!(subgroups.iter().filter(|g| g.len() == 1).count(), 54);
    for g in &subgroups {
        for p in g {
            assert_eq!(p.dim(), 6);
            assert!(p.order() <= &2u32.into());
        }
    }
}

#[test]
fn invalid_spaces_are_refused() {
    let zero = SearchSpace::new(CaseTag::Case1).with_denominators(0, 4);
    assert!(enumerate(&zero, 1).is_err());
    let mut repeated = small();
    repeated.stage_order = [Stage::Relations; 4];
    assert!(enumerate(&repeated, 1).is_err());
    assert!(enumerate_case1(&SearchSpace::new(CaseTag::Case2), 1).is_err());
}

#[test]
#[ignore = "Case 2 with three generators takes several minutes"]
fn case_two_with_three_generators_has_no_survivors() {
    let mut space = SearchSpace::new(CaseTag::Case2);
    space.h_generators_max = 3;
    let r = enumerate(&space, 8).unwrap();
    assert_eq!(r.survivor_count, 0);
    assert!(r.expected_outcome());
}
