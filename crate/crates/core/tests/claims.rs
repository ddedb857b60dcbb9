//! Exhaustive checks of the parity claims on small populations.

use std::time::Instant;

use fairod_core::claimcheck::{
    check, enumerate_populations, is_witness, verify_claim1, verify_claim2, ClaimId, ClaimVerdict,
};

fn assert_sound(v: &ClaimVerdict, claim: ClaimId) {
    assert!(v.holds(), "{claim:?} counterexamples: {:?}", v.counterexamples);
    assert!(v.premises.all_premises > 0, "{claim:?} premises never met");
    assert!(v.witness_count > 0, "{claim:?} has no premise-necessity witness");
    for w in &v.witnesses {
        assert!(is_witness(claim, w), "{w:?} does not replay as a witness");
        assert_ne!(check(claim, w), Some(false));
    }
}

#[test]
fn both_claims_hold_up_to_ten_rows() {
    let start = Instant::now();
    let c1 = verify_claim1(10).unwrap();
    let c2 = verify_claim2(10).unwrap();
    assert!(start.elapsed().as_secs_f64() < 60.0);
    assert_sound(&c1, ClaimId::Claim1);
    assert_sound(&c2, ClaimId::Claim2);
    assert_eq!(c1.populations_checked, c2.populations_checked);
    assert!(c1.premises.skipped_not_effective > 0);
    assert!(c2.premises.skipped_degenerate > 0);
}

#[test]
fn verdict_does_not_depend_on_enumeration_order() {
    let forward = verify_claim2(7).unwrap();
    let mut pops = enumerate_populations(5).unwrap();
    pops.reverse();
    let a: Vec<Option<bool>> = pops.iter().map(|p| check(ClaimId::Claim1, p)).collect();
    pops.reverse();
    let mut b: Vec<Option<bool>> = pops.iter().map(|p| check(ClaimId::Claim1, p)).collect();
    b.reverse();
    assert_eq!(a, b);
    assert_eq!(forward, verify_claim2(7).unwrap());
}

#[test]
fn counts_grow_with_population_size() {
    let small = verify_claim1(6).unwrap();
    let large = verify_claim1(8).unwrap();
    assert!(large.populations_checked > small.populations_checked);
    assert!(large.premises.all_premises >= small.premises.all_premises);
    assert!(large.witness_count >= small.witness_count);
}
