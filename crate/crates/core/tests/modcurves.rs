use gwcrc_core::exactfield::{rat, rat_int};
use gwcrc_core::modcurves::*;
use gwcrc_core::Error;
use proptest::prelude::*;

#[test]
fn base_values() {
    assert_eq!(psi(0, &[0, 0, 0]).unwrap(), rat_int(1));
    assert_eq!(psi(1, &[1]).unwrap(), rat(1, 24));
    assert_eq!(psi(2, &[4]).unwrap(), rat(1, 1152));
    assert_eq!(psi(0, &[1, 0, 0, 0]).unwrap(), rat_int(1));
    assert_eq!(psi(0, &[0, 0, 0, 0, 2]).unwrap(), rat_int(1));
    assert_eq!(psi(0, &[1, 1, 0, 0, 0]).unwrap(), rat_int(2));
    assert_eq!(psi(1, &[1, 1]).unwrap(), rat(1, 24));
    assert_eq!(psi(2, &[2, 3]).unwrap(), rat(29, 5760));
    assert_eq!(psi(3, &[7]).unwrap(), rat(1, 82944));
}

#[test]
fn dimension_and_stability() {
    assert_eq!(psi(1, &[0]).unwrap(), rat_int(0));
    assert_eq!(psi(2, &[3]).unwrap(), rat_int(0));
    assert!(matches!(psi(0, &[0, 0]), Err(Error::UnstableInput { .. })));
    assert!(matches!(psi(1, &[]), Err(Error::UnstableInput { .. })));
    assert_eq!(psi(0, &[1, 0, 0, 0]).unwrap(), psi(0, &[0, 0, 1, 0]).unwrap());
}

#[test]
fn string_and_dilaton_examples() {
    assert!(string_dilaton_check(0, &[0, 1]));
    assert!(string_dilaton_check(1, &[1]));
    assert_eq!(psi(1, &[1, 1]).unwrap(), rat_int(1) * psi(1, &[1]).unwrap());
}

proptest! {
    #[test]
    fn string_dilaton_fuzz(g in 0u32..=3, exps in proptest::collection::vec(0u32..6, 0..5)) {
        prop_assert!(string_dilaton_check(g, &exps));
    }

    #[test]
    fn permutation_symmetry(g in 0u32..=2, mut exps in proptest::collection::vec(0u32..5, 1..5)) {
        prop_assume!(2 * g as usize + exps.len() > 2);
        let a = psi(g, &exps).unwrap();
        exps.reverse();
        prop_assert_eq!(a, psi(g, &exps).unwrap());
    }
}
