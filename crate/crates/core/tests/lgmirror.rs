use gwcrc_core::exactfield::{rat, CycNum, Field};
use gwcrc_core::lgmirror::*;
use gwcrc_core::{Error, Series};
use num_traits::{One, Zero};

#[test]
fn critical_point_examples() {
    let cp = critical_point(3, 8).unwrap();
    let w3 = &cp.w[3];
    assert_eq!(w3.coeff(0), CycNum::from_i64(-3));
    assert_eq!(w3.coeff(1), CycNum::from_i64(27));
    // w_0 = L − 1 = −9q + 162q² + …
    assert!(cp.w[0].coeff(0).is_zero());
    assert_eq!(cp.w[0].coeff(1), CycNum::from_i64(-9));
    assert_eq!(cp.w[0].coeff(2), CycNum::from_i64(162));
    for i in 0..3 {
        assert_eq!(cp.w[i].coeff(0), CycNum::one() - cp.chi[i].clone());
    }
    assert!(matches!(critical_point(2, 8), Err(Error::InvalidArgument(_))));
}

#[test]
fn all_checks_n345() {
    for n in [3, 4, 5] {
        let cp = critical_point(n, 8).unwrap();
        assert!(cp.residuals().iter().all(|r| r.zero_through(7)));
        let dv = critical_value_derivative(n, 8).unwrap();
        assert_eq!(dv.coeff(0), CycNum::one());
        assert!(dv.sub_series(&cp.l).zero_through(7));
        let det = hessian_det(n, 8).unwrap();
        assert_eq!(det.coeff(0), -CycNum::one());
        assert!((1..8).all(|e| det.coeff(e).is_zero()));
        assert!(mu_relation_residual(n, 8).unwrap().zero_through(7));
        assert!(verify_all(n, 8).unwrap());
    }
}

#[test]
fn perturbed_w_n_breaks_hessian_and_constraint() {
    let mut cp = critical_point(3, 8).unwrap();
    let q = Series::monomial(cp.l.var(), CycNum::one(), 1);
    cp.w[3] = cp.w[3].add_series(&q);
    let det = hessian_det_at(&cp);
    assert!(!det.sub_series(&Series::constant(det.var(), -CycNum::one())).zero_through(7));
    assert!(cp.residuals().iter().any(|r| !r.zero_through(7)));
}

#[test]
fn determinant_matches_closed_form_for_diag_plus_rank_one() {
    // det(D + cJ) = ∏d + cΣ∏_{k≠j}d_k, on constants
    let var = critical_point(3, 4).unwrap().l.var();
    let d = [2i64, 3, 5, 7];
    let c = rat(1, 3);
    let m: Vec<Vec<Series>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| {
                    let mut v = CycNum::from_rational(&c);
                    if i == j {
                        v = v + CycNum::from_i64(d[i]);
                    }
                    Series::constant(var, v)
                })
                .collect()
        })
        .collect();
    let prod: i64 = d.iter().product();
    let sum: i64 = (0..4).map(|j| prod / d[j]).sum();
    let want = CycNum::from_rational(&(rat(prod, 1) + c * rat(sum, 1)));
    assert_eq!(determinant(&m).coeff(0), want);
}
