use gwcrc_core::exactfield::{rat, Cyc, CycNum, Field, Rational};
use gwcrc_core::formal::{fit_lpoly, LPoly, QSeries, Var};
use gwcrc_core::frobenius::FrobeniusData;
use gwcrc_core::hypergeom::{i_function_kp, l_series, ladder_residual, Target};
use gwcrc_core::rmatrix::*;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn solved(t: Target, n: usize, kmax: usize) -> (FrobeniusData<CycNum>, PTable) {
    let qorder = (kmax * n + 5) as i64;
    let frob = FrobeniusData::<CycNum>::new(t, n, qorder + kmax as i64 + 2).unwrap();
    let pt = solve_flatness_with(&frob, kmax, qorder, Normalization::True, None).unwrap();
    (frob, pt)
}

#[test]
fn bernoulli_values() {
    assert_eq!(bernoulli_number(2), rat(1, 6));
    assert_eq!(bernoulli_number(1), rat(-1, 2));
    assert_eq!(bernoulli_poly(4, &Rational::zero()), rat(-1, 30));
    assert!(bernoulli_number(5).is_zero());
}

proptest! {
    #[test]
    fn bernoulli_reflection(m in 0usize..=8, x in prop::sample::select(vec![(0i64, 1i64), (1, 3), (1, 2), (2, 5)])) {
        let x = rat(x.0, x.1);
        let sign = if m % 2 == 0 { Rational::one() } else { -Rational::one() };
        prop_assert_eq!(bernoulli_poly(m, &(Rational::one() - &x)), sign * bernoulli_poly(m, &x));
    }
}

#[test]
fn qrr_examples() {
    assert_eq!(n_odd_kp(3, 1), CycNum::from_rational(&rat(2, 3)));
    assert_eq!(n_odd_kp(3, 2), CycNum::from_rational(&rat(-1, 27)));
    let q = qrr_kp(3, 6);
    assert_eq!(q.coeff(0, 1), CycNum::from_rational(&rat(-1, 18)));
    for j in 0..3 {
        assert_eq!(q.coeff(j, 0), CycNum::one());
        for k in 0..=6 {
            let twist = Cyc::for_n(3).root(3, -((j * k) as i64));
            assert_eq!(q.coeff(j, k), q.coeff(0, k).mul_ref(&twist));
        }
    }
    let c = qrr_cnzn(3, 9);
    assert_eq!(c.coeff(0, 3), CycNum::from_rational(&rat(1, 120)));
    for n in [3usize, 4, 5] {
        let c = qrr_cnzn(n, 12);
        for i in 0..n {
            for k in (1..=12).filter(|k| k % n != 0) {
                assert!(c.coeff(i, k).is_zero());
            }
        }
    }
    assert!(qrr_cnzn(4, 7).coeff(0, 4).is_zero());
}

#[test]
fn flatness_examples() {
    let (frob, pt) = solved(Target::KP, 3, 4);
    let c = Cyc::for_n(3);
    for i in 0..3 {
        for j in 0..3 {
            let s = pt.get(0, i, j).unwrap();
            assert!(s.sub_series(&QSeries::constant(Var::Q, -c.i())).zero_through(pt.qorder));
        }
    }
    for j in 0..3 {
        assert_eq!(pt.polys[1][j], LPoly::monomial(c.i().mul_rational(&rat(1, 18)), 2));
        let p = pt.untilde(&frob, 1, 0, j).unwrap();
        let expect = l_series::<CycNum>(Target::KP, 3, pt.qorder).pow_u(2).scale(&c.i().mul_rational(&rat(1, 18)).mul_ref(&c.root(3, -(j as i64))));
        assert!(p.sub_series(&expect).zero_through(pt.qorder));
    }
    let (_, cz) = solved(Target::CnZn, 3, 2);
    assert_eq!(cz.polys[0][0], LPoly::one());
    assert!(pt.get(5, 0, 0).is_err());
}

#[test]
fn flatness_residuals_and_cycles() {
    for t in [Target::KP, Target::CnZn] {
        for n in [3usize, 4] {
            let (frob, pt) = solved(t, n, 4);
            for (k, i, j, r) in flatness_residuals(&pt, &frob).unwrap() {
                assert!(r.zero_through(pt.qorder - 2), "{t:?} n={n} k={k} i={i} j={j}");
            }
            for k in 1..=pt.kmax {
                assert!(cycle_sum(&pt, &frob, k, 1).unwrap().zero_through(pt.qorder - 2));
            }
            assert!(pt.j_independent());
            for k in 0..=pt.kmax {
                for j in 0..n {
                    let p00 = pt.untilde(&frob, k, 0, 0).unwrap();
                    let p0j = pt.untilde(&frob, k, 0, j).unwrap().scale(&frob.zeta((j * k) as i64));
                    assert!(p00.sub_series(&p0j).zero_through(pt.qorder));
                }
            }
        }
    }
}

#[test]
fn tilde_table_is_j_independent() {
    let frob = FrobeniusData::<CycNum>::new(Target::KP, 3, 20).unwrap();
    let pt = solve_flatness_with(&frob, 3, 14, Normalization::Tilde, None).unwrap();
    assert!(pt.j_independent());
}

#[test]
fn row0_reconstruction() {
    for t in [Target::KP, Target::CnZn] {
        let (_, pt) = solved(t, 3, 6);
        let polys = reconstruct_row0(&pt, 0, 5).unwrap();
        assert_eq!(polys, pt.polys.iter().map(|r| r[0].clone()).collect::<Vec<_>>());
        assert!(ladder_residual(t, 3, &polys).unwrap().iter().all(|r| r.is_zero()));
    }
    let phi0 = i_function_kp::<Rational>(3, 20, 1).phi0();
    let l = l_series::<Rational>(Target::KP, 3, 20);
    for deg in [2usize, 6, 12] {
        assert!(fit_lpoly(&phi0, &l, deg, 5).is_err());
    }
}

#[test]
fn symplectic_condition() {
    for t in [Target::KP, Target::CnZn] {
        let (frob, pt) = solved(t, 3, 6);
        assert_eq!(symplectic_residual(&pt, &frob, 6).unwrap(), None);

        let base = match t {
            Target::KP => qrr_kp(3, 6),
            Target::CnZn => qrr_cnzn(3, 6),
        };
        // squaring keeps Q(z)Q(−z) = 1, so the squared table stays symplectic
        let sq = solve_flatness_with(&frob, 6, pt.qorder, Normalization::True, Some(&base.squared())).unwrap();
        assert_eq!(symplectic_residual(&sq, &frob, 6).unwrap(), None);

        let mut bad = base.clone();
        let one_z = QSeries::from_coeffs(Var::Z, vec![CycNum::one(), CycNum::one()], 7);
        bad.entries[0] = bad.entries[0].mul_series(&one_z);
        let pb = solve_flatness_with(&frob, 6, pt.qorder, Normalization::True, Some(&bad)).unwrap();
        assert_eq!(symplectic_residual(&pb, &frob, 6).unwrap(), Some(2));
    }
}

#[test]
fn p_matching() {
    let c3 = Cyc::for_n(3);
    let r = match_p0j(3, 6, &c3.int(-1)).unwrap();
    assert!(r.matched());
    assert_eq!(match_p0j(3, 6, &c3.int(1)).unwrap_err().to_string(), gwcrc_core::Error::InvalidRho.to_string());
    // every n-th root of −1 works: row-0 exponents satisfy e ≡ −k mod n
    for n in [3usize, 4] {
        assert!(matching_rhos(n, 6).unwrap().iter().all(|(_, ok)| *ok));
    }
    // the wrong sign in the identification L = −(ρ/n)L' is detected
    let kp = ladder_table(Target::KP, 3, 4, Normalization::True).unwrap();
    let cz = ladder_table(Target::CnZn, 3, 4, Normalization::True).unwrap();
    let lhs = cz.polys[2][0].scale(&-c3.i());
    let right = kp.polys[2][0].subst_scale(&CycNum::from_rational(&rat(1, 3)));
    let wrong = kp.polys[2][0].subst_scale(&CycNum::from_rational(&rat(-1, 3)));
    assert_eq!(lhs, right);
    assert_ne!(lhs, wrong);
}

#[test]
fn r_matrix_identity() {
    for n in [3usize, 4, 5] {
        assert!(r_identity_residual(n, 8).unwrap().is_zero(), "n={n}");
        assert!(r_identity_residual_true(n, 8).unwrap().is_zero(), "n={n}");
    }
    let lhs = r_identity_lhs(3, 6);
    assert_eq!(lhs.coeff(0), -Cyc::for_n(3).i());
}

#[test]
fn json_dump_is_stable() {
    let pt = ladder_table(Target::KP, 3, 2, Normalization::True).unwrap();
    let a = serde_json::to_string(&pt.to_json()).unwrap();
    let b = serde_json::to_string(&ladder_table(Target::KP, 3, 2, Normalization::True).unwrap().to_json()).unwrap();
    assert_eq!(a, b);
}
