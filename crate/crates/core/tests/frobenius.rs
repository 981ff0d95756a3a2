use gwcrc_core::exactfield::{rat, rat_int, Cyc, CycNum, Field, Rational};
use gwcrc_core::formal::{QSeries, Var};
use gwcrc_core::frobenius::*;
use gwcrc_core::hypergeom::Target;
use num_traits::Zero;

fn series(v: &[i64], trunc: i64) -> QSeries<Rational> {
    QSeries::from_coeffs(Var::Q, v.iter().map(|&x| rat_int(x)).collect(), trunc)
}

#[test]
fn birkhoff_and_a_examples() {
    let f = FrobeniusData::<Rational>::new(Target::KP, 3, 8).unwrap();
    assert_eq!(f.c[1].truncate(4), series(&[1, -6, 90, -1680], 4));
    assert!(f.c[0].sub_series(&QSeries::one(Var::Q)).zero_through(8));
    assert_eq!(f.c[3], f.c[1]);
    let c2 = f.l.pow_u(3).div_series(&f.c[1].pow_u(2)).unwrap();
    assert!(f.c[2].sub_series(&c2).zero_through(8));
    assert_eq!(f.a[1].truncate(4), series(&[0, -3, 72, -1791], 4));
    assert!(f.a[0].is_zero());
    let f4 = FrobeniusData::<Rational>::new(Target::KP, 4, 8).unwrap();
    assert!(f4.a[2].zero_through(8));
}

#[test]
fn identity_suites_both_targets() {
    for t in [Target::KP, Target::CnZn] {
        for n in [3usize, 4, 5] {
            let f = FrobeniusData::<Rational>::new(t, n, 12).unwrap();
            for (label, r) in identity_residuals(&f) {
                assert!(r.zero_through(12), "{t:?} n={n}: {label}");
            }
            for k in 1..=n {
                for l in 1..=4 {
                    let d = f.x_kl_direct(k, l).unwrap();
                    assert!(d.sub_series(&f.x_kl_recursive(k, l)).zero_through(12));
                }
            }
        }
    }
}

#[test]
fn perturbed_series_break_identities() {
    for t in [Target::KP, Target::CnZn] {
        let mut f = FrobeniusData::<Rational>::new(t, 3, 10).unwrap();
        f.c[1] = f.c[1].add_series(&QSeries::monomial(t.var(), rat_int(1), 2));
        assert!(identity_residuals(&f).iter().any(|(_, r)| !r.zero_through(10)));
    }
}

#[test]
fn da_relation() {
    for t in [Target::KP, Target::CnZn] {
        for n in [3usize, 4, 5] {
            let f = FrobeniusData::<Rational>::new(t, n, 10).unwrap();
            assert!(f.da_relation_residual().zero_through(10), "{t:?} n={n}");
            let (lin, quad) = f.double_sum_residuals();
            assert!(lin.zero_through(10) && quad.zero_through(10));
        }
        let f = FrobeniusData::<Rational>::new(t, 3, 10).unwrap();
        let mut a = f.a.clone();
        a[1] = a[1].add_series(&QSeries::monomial(t.var(), rat_int(1), 1));
        assert!(!da_relation_residual_with(&f, &a).zero_through(10));
    }
}

#[test]
fn bz_and_graded_pf() {
    for n in [3usize, 4] {
        let f = FrobeniusData::<Rational>::new(Target::KP, n, 10).unwrap();
        for (label, r) in bz_residuals(&f).unwrap() {
            assert!(r.is_zero(), "n={n}: {label}");
        }
        assert!(graded_pf_residuals(&f).iter().all(|r| r.zero_through(10)));
    }
}

#[test]
fn metric_values() {
    assert_eq!(metric(Target::KP, 3, 0, 0).unwrap(), CycNum::from_rational(&rat(-1, 3)));
    assert!(metric(Target::KP, 3, 1, 1).unwrap().is_zero());
    assert_eq!(metric(Target::CnZn, 3, 1, 2).unwrap(), CycNum::from_rational(&rat(1, 3)));
}

#[test]
fn transition_matrices_and_idempotents() {
    for t in [Target::KP, Target::CnZn] {
        for n in [3usize, 4, 5] {
            let f = FrobeniusData::<CycNum>::new(t, n, 8).unwrap();
            let (psi, psi_inv) = f.psi_matrices().unwrap();
            assert!(is_identity(&mat_mul(&psi, &psi_inv), 8));
            for a in 0..n {
                assert_eq!(f.idempotent_scale(a).unwrap(), f.branch());
            }
            let du = f.du_in_flat_frame().unwrap();
            for i in 0..n {
                for j in 0..n {
                    let expect = if ion(n, i) - 1 == j { f.c[ion(n, i)].clone() } else { QSeries::exact_zero(f.var()) };
                    assert!(du[i][j].sub_series(&expect).zero_through(8), "{t:?} n={n} ({i},{j})");
                }
            }
        }
    }
    let f = FrobeniusData::<CycNum>::new(Target::KP, 3, 6).unwrap();
    let (_, psi_inv) = f.psi_matrices().unwrap();
    let c = Cyc::for_n(3);
    for j in 0..3 {
        for b in 0..3 {
            let expect = (-c.i()).mul_ref(&c.root(3, -((b * j) as i64)));
            assert_eq!(psi_inv[j][b].coeff(0), expect);
        }
    }
    assert_eq!(f.branch(), c.i().mul_rational(&rat_int(-3)));
}

#[test]
fn canonical_coordinates() {
    let f = FrobeniusData::<CycNum>::new(Target::KP, 4, 6).unwrap();
    let du = f.canonical_du();
    assert_eq!(du[0], f.l);
    let sum = du.iter().fold(QSeries::exact_zero(Var::Q), |a, s| a.add_series(s));
    assert!(sum.zero_through(6));
    assert_eq!(du[1].coeff(0), f.zeta(1));
}

#[test]
fn three_point_and_associativity() {
    let f = FrobeniusData::<CycNum>::new(Target::KP, 3, 8).unwrap();
    let c0 = QSeries::constant(Var::Q, CycNum::from_rational(&rat(-1, 3)));
    assert!(f.three_point(0, 0, 0).unwrap().sub_series(&c0).zero_through(8));
    let expect = f.l.pow_u(3).div_series(&f.c[1].pow_u(3)).unwrap().scale_rational(&rat(-1, 3));
    assert!(f.three_point(1, 1, 1).unwrap().sub_series(&expect).zero_through(8));
    assert!(f.three_point(1, 1, 0).unwrap().is_zero());
    let g = FrobeniusData::<CycNum>::new(Target::CnZn, 3, 8).unwrap();
    let ratio = g.k[2].div_series(&g.k[1].pow_u(2)).unwrap().scale_rational(&rat(1, 3));
    assert!(g.three_point(1, 1, 1).unwrap().sub_series(&ratio).zero_through(8));
    for t in [Target::KP, Target::CnZn] {
        for n in [3usize, 4] {
            let f = FrobeniusData::<CycNum>::new(t, n, 8).unwrap();
            assert!(f.associativity_residuals().unwrap().iter().all(|r| r.zero_through(8)));
        }
    }
}

#[test]
fn two_point_functions() {
    for n in [3usize, 4, 5] {
        let f = FrobeniusData::<Rational>::new(Target::KP, n, 8).unwrap();
        for i in 1..n {
            let tp = f.two_point(i).unwrap();
            assert!(tp.coeff(0).is_zero(), "n={n} i={i}");
        }
        assert!(f.two_point(0).is_err());
        assert!(f.two_point(n).is_err());
    }
}
