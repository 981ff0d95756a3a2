use gwcrc_core::exactfield::{product_one_minus_zeta, rat, rat_int, CycNum, Field, Rational};
use gwcrc_core::formal::{fit_lpoly, kp_derivation, LPoly, LogSeries, QSeries, Var, TRUNC_INF};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn c(m: u32, coeffs: &[i64]) -> CycNum {
    let r: Vec<Rational> = coeffs.iter().map(|&v| rat_int(v)).collect();
    CycNum::from_coeffs(m, &r).unwrap()
}

fn kp_l(n: i64, order: i64) -> QSeries<Rational> {
    // (1 − (−n)^n q)^{−1/n}
    let a = -(-n).pow(n as u32);
    QSeries::from_coeffs(Var::Q, vec![Rational::one(), rat_int(a)], TRUNC_INF)
        .truncate(order)
        .pow_rational(&rat(-1, n))
        .unwrap()
}

#[test]
fn roots_of_unity() {
    assert_eq!(CycNum::root_of_unity(1, 0), CycNum::one());
    let s = CycNum::root_of_unity(3, 1).add_ref(&CycNum::root_of_unity(3, 2));
    assert_eq!(s, CycNum::from_i64(-1));
    let i = CycNum::root_of_unity(12, 3);
    assert_eq!(i.mul_ref(&i), CycNum::from_i64(-1));
    for m in [2u32, 5, 8, 12, 20] {
        let z = CycNum::root_of_unity(m, 1);
        assert_eq!(z.powi(m as i64), CycNum::one());
        let sum = (0..m).fold(CycNum::zero(), |a, j| a.add_ref(&CycNum::root_of_unity(m, j as i64)));
        assert!(sum.is_zero());
    }
}

#[test]
fn embedding() {
    assert_eq!(CycNum::one().embed(12).unwrap(), CycNum::from_rational_in(12, &Rational::one()));
    assert_eq!(CycNum::root_of_unity(3, 1).embed(12).unwrap(), CycNum::root_of_unity(12, 4));
    assert!(CycNum::root_of_unity(3, 1).embed(5).is_err());
}

#[test]
fn cyclotomic_products() {
    for n in [2u32, 3, 5, 6, 8] {
        assert_eq!(product_one_minus_zeta(n).unwrap(), CycNum::from_i64(n as i64));
    }
}

#[test]
fn json_round_trip() {
    let x = c(12, &[1, -2, 0, 3]).mul_rational(&rat(2, 7));
    assert_eq!(CycNum::from_json(&x.to_json()).unwrap(), x);
}

fn arb_cyc(m: u32) -> impl Strategy<Value = CycNum> {
    proptest::collection::vec((-20i64..20, 1i64..6), 8).prop_map(move |v| {
        let r: Vec<Rational> = v.iter().map(|&(p, q)| rat(p, q)).collect();
        CycNum::from_coeffs(m, &r).unwrap()
    })
}

proptest! {
    #[test]
    fn field_axioms(x in arb_cyc(20), y in arb_cyc(20)) {
        prop_assert_eq!(x.add_ref(&y).sub_ref(&y), x.clone());
        if !y.is_zero() {
            prop_assert_eq!(x.mul_ref(&y).div_ref(&y).unwrap(), x);
        }
    }

    #[test]
    fn embed_is_multiplicative(x in arb_cyc(6), y in arb_cyc(6)) {
        let lhs = x.mul_ref(&y).embed(12).unwrap();
        let rhs = x.embed(12).unwrap().mul_ref(&y.embed(12).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn leibniz(a in proptest::collection::vec(-9i64..9, 1..8), b in proptest::collection::vec(-9i64..9, 1..8)) {
        let f = QSeries::from_coeffs(Var::Q, a.iter().map(|&v| rat_int(v)).collect(), 12);
        let g = QSeries::from_coeffs(Var::Q, b.iter().map(|&v| rat_int(v)).collect(), 12);
        let lhs = f.mul_series(&g).d();
        let rhs = f.d().mul_series(&g).add_series(&f.mul_series(&g.d()));
        prop_assert!(lhs.sub_series(&rhs).zero_through(12));
    }

    #[test]
    fn d_inverse_round_trip(a in proptest::collection::vec(-9i64..9, 1..10)) {
        let f = QSeries::from_coeffs(Var::Q, a.iter().map(|&v| rat_int(v)).collect(), 10);
        let (f0, rest) = f.split_constant();
        let _ = f0;
        prop_assert_eq!(f.d().d_inv().unwrap(), rest);
    }

    #[test]
    fn exp_log_round_trip(a in proptest::collection::vec(-5i64..5, 1..6)) {
        let mut v: Vec<Rational> = vec![Rational::zero()];
        v.extend(a.iter().map(|&x| rat(x, 3)));
        let f = QSeries::from_coeffs(Var::Z, v, 9);
        prop_assert_eq!(f.exp().unwrap().log().unwrap(), f.clone());
        let g = f.scale_rational(&rat(2, 1));
        let lhs = f.add_series(&g).exp().unwrap();
        let rhs = f.exp().unwrap().mul_series(&g.exp().unwrap());
        prop_assert!(lhs.sub_series(&rhs).zero_through(9));
    }

    #[test]
    fn fit_is_identity_on_image(a in proptest::collection::vec(-5i64..5, 1..5)) {
        let lval = kp_l(3, 14);
        let p = LPoly::from_terms(a.iter().enumerate().map(|(e, &v)| (e as i64, rat_int(v))));
        let s = p.eval_series(&lval).unwrap();
        prop_assert_eq!(fit_lpoly(&s, &lval, 6, 5).unwrap(), p);
    }
}

#[test]
fn series_examples() {
    let q3 = QSeries::monomial(Var::Q, rat_int(1), 3);
    assert_eq!(q3.d(), q3.scale_rational(&rat_int(3)));
    assert!(QSeries::<Rational>::one(Var::Q).d().is_zero());
    let q = QSeries::monomial(Var::Q, rat_int(1), 1);
    assert_eq!(q.d_inv().unwrap(), q);
    assert_eq!(q.pow_u(2).scale_rational(&rat_int(2)).d_inv().unwrap(), q.pow_u(2));
    assert!(QSeries::<Rational>::one(Var::Q).d_inv().is_err());

    let l = kp_l(3, 4);
    assert_eq!(l, QSeries::from_coeffs(Var::Q, vec![rat_int(1), rat_int(-9), rat_int(162), rat_int(-3402)], 4));
    let lhs = l.d().div_series(&l).unwrap();
    let rhs = l.pow_u(3).sub_series(&QSeries::one(Var::Q)).scale_rational(&rat(1, 3));
    assert!(lhs.sub_series(&rhs).zero_through(4));
    assert_eq!(l.d().coeff(1), rat_int(-9));
    assert_eq!(l.d().coeff(2), rat_int(324));
    assert_eq!(lhs.coeff(2), rat_int(243));

    let z = QSeries::monomial(Var::Z, rat(-1, 18), 1).truncate(4);
    let e = z.exp().unwrap();
    assert_eq!(e.coeff(2), rat(1, 648));
    let z3 = QSeries::monomial(Var::Z, rat(1, 120), 3).truncate(10);
    assert_eq!(z3.exp().unwrap().log().unwrap(), z3);
    assert!(QSeries::<Rational>::one(Var::Z).truncate(5).exp().is_err());
}

#[test]
fn lpoly_eval_and_fit() {
    let l = kp_l(3, 12);
    assert_eq!(LPoly::<Rational>::one().eval_series(&l).unwrap(), QSeries::one(Var::Q).truncate(12));
    let lp = LPoly::monomial(rat_int(1), 1);
    assert_eq!(lp.eval_series(&l).unwrap().truncate(3), l.truncate(3));
    let unit = lp.mul(&LPoly::monomial(rat_int(1), -1));
    assert_eq!(unit, LPoly::one());
    let cube = LPoly::monomial(rat_int(1), 3).eval_series(&l).unwrap();
    let geom = QSeries::from_coeffs(Var::Q, vec![rat_int(1), rat_int(27)], TRUNC_INF).truncate(12).inv().unwrap();
    assert_eq!(cube, geom);
    assert_eq!(fit_lpoly(&cube, &l, 6, 5).unwrap(), LPoly::monomial(rat_int(1), 3));
    assert_eq!(fit_lpoly(&l, &l, 3, 5).unwrap(), lp);
}

#[test]
fn lpoly_derivation_integrates() {
    let d = kp_derivation::<Rational>(3);
    let l = kp_l(3, 10);
    let p = LPoly::from_terms([(2, rat(1, 18)), (-1, rat_int(4)), (5, rat_int(-2))]);
    let dp_series = p.eval_series(&l).unwrap().d();
    assert!(p.derive(&d).eval_series(&l).unwrap().sub_series(&dp_series).zero_through(9));
    assert_eq!(p.derive(&d).integrate(&d).unwrap(), p);
    assert!(LPoly::<Rational>::one().integrate(&d).is_err());
}

#[test]
fn log_graded_inverse() {
    let one = LogSeries::from_series(QSeries::<Rational>::one(Var::Q).truncate(8));
    let ell = one.d_inv().unwrap();
    assert_eq!(ell.log_degree(), 1);
    assert_eq!(ell.d(), one);
    let mixed = LogSeries::new(vec![
        QSeries::from_coeffs(Var::Q, vec![rat_int(2), rat_int(3), rat_int(-1)], 8),
        QSeries::from_coeffs(Var::Q, vec![rat_int(0), rat_int(5)], 8),
    ]);
    let g = mixed.d_inv().unwrap();
    assert_eq!(g.d(), mixed);
    assert!(g.part(0).trunc() > 0 && g.part(0).coeff(0).is_zero());
}

#[test]
fn reversion_round_trip() {
    let f = QSeries::from_coeffs(Var::Q, vec![rat_int(0), rat_int(1), rat_int(-6), rat_int(45), rat(2, 3)], 9);
    let g = f.reversion().unwrap();
    let t = QSeries::monomial(Var::Q, rat_int(1), 1);
    assert!(f.compose(&g).unwrap().sub_series(&t).zero_through(9));
}
