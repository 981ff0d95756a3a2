use gwcrc_core::exactfield::{binomial, rat, rat_int, Cyc, CycNum, Field, Rational};
use gwcrc_core::formal::{LPoly, LogSeries, QSeries, Var};
use gwcrc_core::hypergeom::*;
use gwcrc_core::rmatrix::{ladder_table, Normalization};
use num_traits::{One, Zero};

fn ints(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| rat_int(x)).collect()
}

#[test]
fn stirling_examples() {
    assert_eq!(stirling_first(3, 3).unwrap(), rat_int(1));
    assert_eq!(stirling_first(3, 2).unwrap(), rat_int(-3));
    assert_eq!(stirling_first(3, 1).unwrap(), rat_int(2));
    for n in 0..=8 {
        assert_eq!(stirling_first(n, n).unwrap(), rat_int(1));
    }
    assert!(stirling_first(3, 4).is_err());
    // ∏_{i<3}(3D+i) = 27D³ + 27D² + 6D
    let lhs: Vec<Rational> = (0..=3).map(|k| {
        let sign = if (3 - k) % 2 == 0 { rat_int(1) } else { rat_int(-1) };
        sign * stirling_first(3, k).unwrap() * rat_int(3i64.pow(k as u32))
    }).collect();
    assert_eq!(lhs, ints(&[0, 6, 27, 27]));
}

#[test]
fn i_function_examples() {
    let i = i_function_kp::<Rational>(3, 4, 2);
    assert_eq!(i.phi0(), QSeries::from_coeffs(Var::Q, vec![rat_int(0), rat_int(-2), rat_int(15), rat(-560, 3)], 4));
    assert_eq!(i.plain[0], QSeries::one(Var::Q).truncate(4));
    assert_eq!(i.plain[1].coeff(1), rat_int(-6));
    assert_eq!(i.components[1].log_degree(), 1);

    let c = i_function_cnzn::<Rational>(3, 8, 4);
    assert_eq!(c.components[0].coeff(0), rat_int(1));
    assert_eq!(c.components[1].coeff(1), rat_int(1));
    // x⁴/4!·(1 − z³/27): the z^{-1} and z^{-4} components at x⁴
    assert_eq!(c.components[4].coeff(4), rat(1, 24));
    assert_eq!(c.components[1].coeff(4), rat(-1, 27 * 24));
}

#[test]
fn l_series_examples() {
    let l = l_series::<Rational>(Target::KP, 3, 3);
    assert_eq!(l, QSeries::from_coeffs(Var::Q, ints(&[1, -9, 162]), 3));
    let lc = l_series::<Rational>(Target::CnZn, 3, 7);
    assert_eq!(lc, QSeries::from_coeffs(Var::X, vec![rat_int(0), rat_int(1), rat_int(0), rat_int(0), rat(-1, 81)], 7));
    for n in 3..=6 {
        assert_eq!(l_series::<Rational>(Target::KP, n, 5).coeff(0), rat_int(1));
    }
}

#[test]
fn picard_fuchs_residuals_vanish() {
    for n in [3usize, 4, 5] {
        for (k, r) in pf_residual_kp::<Rational>(n, 12, 2 * n + 1).iter().enumerate() {
            for (a, p) in r.parts().iter().enumerate() {
                assert!(p.zero_through(12), "KP n={n} k={k} log^{a}");
            }
        }
        for (k, r) in pf_residual_cnzn::<Rational>(n, 12, 2 * n + 1).iter().enumerate() {
            assert!(r.part(0).zero_through(12), "CnZn n={n} k={k}");
        }
    }
}

#[test]
fn constant_fails_picard_fuchs() {
    let n = 3;
    let l = l_series::<Rational>(Target::KP, n, 8);
    let mut comps = vec![LogSeries::from_series(QSeries::one(Var::Q).truncate(8))];
    comps.extend((1..=n).map(|_| LogSeries::from_series(QSeries::zero(Var::Q, 8))));
    let r = pf_residual(Target::KP, n, &comps, &l);
    assert_eq!(r[n].part(0), l.pow_u(n as u32).neg_series());
}

#[test]
fn mirror_map_and_inverse() {
    let m = mirror_map::<Rational>(3, 3);
    assert_eq!(m, QSeries::from_coeffs(Var::Q, ints(&[0, -6, 45]), 3));
    let q = mirror_q::<Rational>(3, 9);
    let back = mirror_inverse::<Rational>(3, 9).unwrap();
    let t = QSeries::monomial(Var::Q, rat_int(1), 1);
    assert!(q.compose(&back).unwrap().sub_series(&t).zero_through(8));
    assert!(back.compose(&q).unwrap().sub_series(&t).zero_through(8));
}

#[test]
fn h_polys_match_closed_forms() {
    let xm1 = LPoly::from_terms([(1, rat_int(1)), (0, rat_int(-1))]);
    for n in [3usize, 4, 5] {
        let nr = rat_int(n as i64);
        for m in 0..=7 {
            assert_eq!(h_poly(Target::KP, n, m, 0), LPoly::one());
            let h1 = xm1.scale(&(binomial(m as i64, 2) / &nr));
            assert_eq!(h_poly(Target::KP, n, m, 1), h1);
            let a = LPoly::from_terms([(1, nr.clone() + rat_int(1)), (0, rat_int(-1))]).mul(&xm1);
            let h2 = a
                .scale(&(binomial(m as i64, 3) / (&nr * &nr)))
                .add(&xm1.mul(&xm1).scale(&(rat_int(3) * binomial(m as i64, 4) / (&nr * &nr))));
            assert_eq!(h_poly(Target::KP, n, m, 2), h2, "n={n} m={m}");
            for j in 0..=m + 1 {
                let h = h_poly(Target::KP, n, m, j);
                assert!(h.max_exp().unwrap_or(0) <= j as i64);
                if j > m {
                    assert!(h.is_zero());
                }
            }
        }
    }
}

#[test]
fn first_ladder_operators() {
    for n in [3usize, 4, 5] {
        let l1 = l_jk_operator_x(Target::KP, n, 1).unwrap();
        assert_eq!(l1.order(), Some(1));
        assert!(l1.coeff(0).is_zero());
        assert_eq!(l1.coeff(1), LPoly::constant(rat_int(n as i64)));
    }
    let l2 = l_jk_operator_x(Target::KP, 3, 2).unwrap();
    let x = LPoly::<Rational>::monomial(rat_int(1), 1);
    let xm1 = x.sub(&LPoly::one());
    assert_eq!(l2.coeff(2), LPoly::constant(rat_int(3)));
    assert_eq!(l2.coeff(1), xm1.neg());
    assert_eq!(l2.coeff(0), xm1.mul(&x).scale(&rat(1, 9)));
}

#[test]
fn decomposition_of_full_operator() {
    for n in [3usize, 4, 5] {
        let c = Cyc::for_n(n);
        let l: QSeries<CycNum> = l_series(Target::KP, n, 10);
        let inputs = [
            QSeries::one(Var::Q),
            l.clone(),
            l.pow_u(2),
            QSeries::monomial(Var::Q, CycNum::one(), 1),
            QSeries::monomial(Var::Q, CycNum::one(), 2),
        ];
        for j in 0..n {
            let lj = l.scale(&c.root(n as u32, j as i64));
            for f in &inputs {
                let r = decomposition_residual(n, &l, &lj, f).unwrap();
                assert!(r.iter().all(|s| s.zero_through(10)), "n={n} j={j}");
            }
        }
    }
}

#[test]
fn congruence_mod_ideal() {
    for n in [3usize, 4] {
        for k in 2..=n {
            assert!(verify_mod_ideal(n, k).unwrap(), "n={n} k={k}");
        }
    }
    assert!(!verify_mod_ideal_with_shift(3, 2, &Rational::one()).unwrap());
}

#[test]
fn operator_comparison() {
    for n in [3usize, 4] {
        for k in 1..=n {
            assert!(operator_comparison_under_change(n, k, 1).unwrap(), "n={n} k={k}");
        }
        assert!(!operator_comparison_under_change(n, 1, -1).unwrap());
    }
}

#[test]
fn phi_ladder() {
    for n in [3usize, 4, 5] {
        let phi = phi_asymptotic(n, 6).unwrap();
        assert_eq!(phi[0], LPoly::one());
        assert!(ladder_residual(Target::KP, n, &phi).unwrap().iter().all(|r| r.is_zero()));
        // Φ(z) = P̃_{0,0}(z)/(−√−1) for the R̃-normalized table
        let tilde = ladder_table(Target::KP, n, 6, Normalization::Tilde).unwrap();
        let c = Cyc::for_n(n);
        for (k, p) in phi.iter().enumerate() {
            let via_r = tilde.polys[k][0].scale(&(-c.i()).inv().unwrap());
            assert_eq!(p.map_scalars(CycNum::from_rational), via_r, "n={n} k={k}");
        }
    }
    let phi = phi_asymptotic(3, 1).unwrap();
    assert_eq!(phi[1], LPoly::from_terms([(2, rat(-1, 18)), (0, rat(1, 18))]));
    assert!(phi[1].coeff(1).is_zero());
}
