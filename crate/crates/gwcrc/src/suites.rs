//! Verification suites behind `gwcrc verify`.

use gwcrc_core::exactfield::{binomial, rat_int, Cyc, CycNum, Field};
use gwcrc_core::formal::{LPoly, QSeries, Var};
use gwcrc_core::frobenius::{identity_residuals, FrobeniusData};
use gwcrc_core::graphsum::{verify_crc, verify_crc_with_sign};
use gwcrc_core::hypergeom::{
    decomposition_residual, h_poly, l_series, operator_comparison_under_change, pf_residual_cnzn, pf_residual_kp,
    verify_mod_ideal,
};
use gwcrc_core::lgmirror;
use gwcrc_core::rmatrix::{
    flatness_residuals, match_p0j, r_identity_residual, reconstruct_row0, solve_flatness_with, symplectic_residual,
    Normalization,
};
use gwcrc_core::{Rational, Result, Target};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{insertions_for, parse_rho, CliResult, Failure, Suite, VerifyArgs};

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: impl Into<String>, r: Result<bool>) -> Check {
    let name = name.into();
    match r {
        Ok(passed) => Check { name, passed, detail: if passed { "holds".into() } else { "does not hold".into() } },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

const TARGETS: [Target; 2] = [Target::KP, Target::CnZn];

fn lemmas(n: usize, order: i64) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(check(format!("kp: Picard-Fuchs to q^{order}"), Ok(pf_residual_kp::<Rational>(n, order, 2 * n + 1)
        .iter()
        .all(|r| r.parts().iter().all(|p| p.zero_through(order))))));
    out.push(check(format!("cnzn: Picard-Fuchs to x^{order}"), Ok(pf_residual_cnzn::<Rational>(n, order, 2 * n + 1)
        .iter()
        .all(|r| r.part(0).zero_through(order)))));
    for t in TARGETS {
        let name = t.name();
        let f = FrobeniusData::<Rational>::new(t, n, order);
        out.push(check(format!("{name}: C, K, X, A identities"), f.as_ref().map_err(Clone::clone).map(|f| {
            identity_residuals(f).iter().all(|(_, r)| r.zero_through(order))
        })));
        out.push(check(format!("{name}: X_(k,l) direct vs recursive"), f.as_ref().map_err(Clone::clone).and_then(|f| {
            for k in 1..=n {
                for l in 1..=4 {
                    if !f.x_kl_direct(k, l)?.sub_series(&f.x_kl_recursive(k, l)).zero_through(order) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        })));
        out.push(check(format!("{name}: perturbed C_1 is rejected"), f.as_ref().map_err(Clone::clone).map(|f| {
            let mut g = f.clone();
            g.c[1] = g.c[1].add_series(&QSeries::monomial(t.var(), rat_int(1), 2));
            identity_residuals(&g).iter().any(|(_, r)| !r.zero_through(order))
        })));
        let o = order.min(10);
        out.push(check(format!("{name}: even/odd A relation to order {o}"), FrobeniusData::<Rational>::new(t, n, o).map(|f| {
            f.da_relation_residual().zero_through(o)
        })));
    }
    out
}

fn flatness(n: usize, kmax: usize, zorder: usize, rho: &CycNum) -> Vec<Check> {
    let mut out = Vec::new();
    let qorder = (kmax * n + 5) as i64;
    for t in TARGETS {
        let name = t.name();
        let solved = FrobeniusData::<CycNum>::new(t, n, qorder + kmax as i64 + 2)
            .and_then(|f| solve_flatness_with(&f, kmax, qorder, Normalization::True, None).map(|p| (f, p)));
        let (frob, pt) = match solved {
            Ok(v) => v,
            Err(e) => {
                out.push(Check { name: format!("{name}: flatness solve k<={kmax}"), passed: false, detail: e.to_string() });
                continue;
            }
        };
        out.push(check(format!("{name}: flatness solve with closure, k<={kmax}"), Ok(true)));
        out.push(check(format!("{name}: flatness residuals"), flatness_residuals(&pt, &frob)
            .map(|rs| rs.iter().all(|(_, _, _, r)| r.zero_through(qorder - 2)))));
        let c = Cyc::for_n(n);
        let p0 = match t {
            Target::KP => -c.i(),
            Target::CnZn => CycNum::from_i64(1),
        };
        out.push(check(format!("{name}: P~^0 constant"), pt.get(0, 0, 0).map(|s| {
            s.sub_series(&QSeries::constant(t.var(), p0.clone())).zero_through(qorder)
        })));
        out.push(check(format!("{name}: row 0 polynomial reconstruction"), reconstruct_row0(&pt, 0, 5)
            .map(|ps| ps.iter().zip(&pt.polys).all(|(p, row)| *p == row[0]))));
        let z = zorder.min(kmax);
        out.push(check(format!("{name}: symplectic to z^{z}"), symplectic_residual(&pt, &frob, z).map(|r| r.is_none())));
    }
    out.push(check("R-matrix identity to z^8", r_identity_residual(n, 8).map(|r| r.is_zero())));
    out.push(check(format!("P-matching k<={kmax} at rho={rho}"), match_p0j(n, kmax, rho).map(|r| r.matched())));
    out
}

fn appendix(n: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let nr = rat_int(n as i64);
    let xm1 = LPoly::from_terms([(1, rat_int(1)), (0, rat_int(-1))]);
    let h_ok = (0..=7).all(|m| {
        let h1 = xm1.scale(&(binomial(m as i64, 2) / &nr));
        let a = LPoly::from_terms([(1, nr.clone() + rat_int(1)), (0, rat_int(-1))]).mul(&xm1);
        let h2 = a
            .scale(&(binomial(m as i64, 3) / (&nr * &nr)))
            .add(&xm1.mul(&xm1).scale(&(rat_int(3) * binomial(m as i64, 4) / (&nr * &nr))));
        h_poly(Target::KP, n, m, 1) == h1 && h_poly(Target::KP, n, m, 2) == h2
    });
    out.push(check("H_(m,1), H_(m,2) closed forms", Ok(h_ok)));
    let l: QSeries<CycNum> = l_series(Target::KP, n, 10);
    let c = Cyc::for_n(n);
    let decomp = (|| -> Result<bool> {
        for j in 0..n {
            let lj = l.scale(&c.root(n as u32, j as i64));
            for f in [QSeries::one(Var::Q), l.clone(), QSeries::monomial(Var::Q, c.int(1), 2)] {
                if !decomposition_residual(n, &l, &lj, &f)?.iter().all(|s| s.zero_through(10)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })();
    out.push(check("operator decomposition", decomp));
    out.push(check("congruence modulo the ideal", (2..=n).try_fold(true, |acc, k| Ok(acc && verify_mod_ideal(n, k)?))));
    out.push(check(
        "operator comparison under the change of variables",
        (1..=n).try_fold(true, |acc, k| Ok(acc && operator_comparison_under_change(n, k, 1)?)),
    ));
    out.push(check("operator comparison rejects the wrong sign", operator_comparison_under_change(n, 1, -1).map(|b| !b)));
    out
}

fn lg(n: usize, order: i64) -> Vec<Check> {
    let negative = lgmirror::critical_point(n, order).map(|mut cp| {
        let q = QSeries::monomial(cp.l.var(), CycNum::from_i64(1), 1);
        cp.w[n] = cp.w[n].add_series(&q);
        let det = lgmirror::hessian_det_at(&cp);
        !det.sub_series(&QSeries::constant(det.var(), -CycNum::from_i64(1))).zero_through(order - 1)
    });
    vec![
        check(format!("critical point to q^{order}"), lgmirror::critical_point(n, order).map(|_| true)),
        check("q d/dq F(cr) = L", lgmirror::critical_value_derivative(n, order).map(|_| true)),
        check("det Hessian = -1", lgmirror::hessian_det(n, order).map(|_| true)),
        check("D mu_0 = L", lgmirror::mu_relation_residual(n, order).map(|r| r.zero_through(order - 1))),
        check("perturbed w_n changes the Hessian", negative),
    ]
}

fn crc(n: usize, cases: &[(usize, Vec<usize>)], rho: &CycNum, order: i64) -> Vec<Check> {
    let mut out = Vec::new();
    for (g, ins) in cases {
        let name = format!("CRC g={g} insertions={ins:?} to x^{order}");
        match verify_crc(n, *g, ins, rho, order) {
            Ok(rep) => out.push(Check {
                name,
                passed: rep.passed(),
                detail: format!("match_order {}, {} decorated graphs, {} mismatches", rep.match_order(), rep.lhs.per_graph.len(), rep.mismatches.len()),
            }),
            Err(e) => out.push(Check { name, passed: false, detail: e.to_string() }),
        }
        let flipped = if g % 2 == 1 { -1 } else { 1 };
        out.push(check(
            format!("CRC g={g} rejects the flipped prefactor"),
            verify_crc_with_sign(n, *g, ins, rho, order, flipped).map(|r| !r.passed()),
        ));
    }
    out
}

pub fn run(a: &VerifyArgs, _target: Target) -> CliResult<Value> {
    let n = a.common.n;
    let rho = parse_rho(n, a.rho.as_deref())?;
    let cases: Vec<(usize, Vec<usize>)> = match a.g {
        Some(g) => {
            let ins = insertions_for(a.m, a.insertions.clone(), n)?;
            if 2 * g as i64 - 2 + ins.len() as i64 <= 0 {
                return Err(Failure::Usage(format!("(g, m) = ({g}, {}) is unstable", ins.len())));
            }
            vec![(g, ins)]
        }
        None => vec![(1, vec![1 % n]), (2, vec![])],
    };
    let kmax = a.kmax.unwrap_or(6);
    let zorder = a.zorder.unwrap_or(6);
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![Suite::Lemmas, Suite::Flatness, Suite::Appendix, Suite::Lgmirror, Suite::Crc],
        s => vec![s],
    };
    let results: Vec<(Suite, Vec<Check>)> = suites
        .par_iter()
        .map(|&s| {
            let checks = match s {
                Suite::Lemmas => lemmas(n, a.order.unwrap_or(12)),
                Suite::Flatness => flatness(n, kmax, zorder, &rho),
                Suite::Appendix => appendix(n),
                Suite::Lgmirror => lg(n, a.order.unwrap_or(8)),
                Suite::Crc => crc(n, &cases, &rho, a.order.unwrap_or(10)),
                Suite::All => unreachable!(),
            };
            (s, checks)
        })
        .collect();
    let passed = results.iter().all(|(_, cs)| cs.iter().all(|c| c.passed));
    let suites_json: Vec<Value> = results
        .iter()
        .map(|(s, cs)| {
            json!({
                "suite": format!("{s:?}").to_lowercase(),
                "passed": cs.iter().all(|c| c.passed),
                "checks": cs.iter().map(|c| json!({"name": c.name, "status": if c.passed { "pass" } else { "fail" }, "detail": c.detail})).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "command": "verify",
        "n": n,
        "rho": rho.to_json(),
        "passed": passed,
        "suites": suites_json,
    }))
}
