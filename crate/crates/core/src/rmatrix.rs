//! Quantum Riemann-Roch diagonals, the flatness solve for the R-matrix
//! entries P̃^k_{i,j}, and the identities that tie the two targets together.

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactfield::{binomial, rat, rat_int, rat_to_string, Cyc, CycNum, Field, Rational};
use crate::formal::{fit_lpoly, LPoly, QSeries, Var};
use crate::frobenius::{inv_index, ion, FrobeniusData};
use crate::hypergeom::{l_jk_operator, solve_ladder, DiffOp, Target};

pub type Series = QSeries<CycNum>;
pub type Poly = LPoly<CycNum>;

pub fn bernoulli_number(m: usize) -> Rational {
    let mut b: Vec<Rational> = vec![Rational::one()];
    for k in 1..=m {
        let mut acc = Rational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += binomial(k as i64 + 1, j as i64) * bj;
        }
        b.push(-acc / rat_int(k as i64 + 1));
    }
    b[m].clone()
}

pub fn bernoulli_poly(m: usize, x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    let mut xp = Rational::one();
    for k in (0..=m).rev() {
        acc += binomial(m as i64, k as i64) * bernoulli_number(k) * &xp;
        xp *= x;
    }
    acc
}

/// Diagonal entries Q_j(z) of the quantum Riemann-Roch operator.
#[derive(Clone, Debug)]
pub struct QrrDiag {
    pub target: Target,
    pub n: usize,
    pub zorder: usize,
    pub entries: Vec<Series>,
}

impl QrrDiag {
    pub fn coeff(&self, j: usize, k: usize) -> CycNum {
        self.entries[j].coeff(k as i64)
    }

    pub fn squared(&self) -> QrrDiag {
        QrrDiag { entries: self.entries.iter().map(|q| q.mul_series(q)).collect(), ..self.clone() }
    }
}

/// N_{2m−1,0} = (−n)^{−(2m−1)} + Σ_{l=1}^{n−1}(1 − ζ^l)^{−(2m−1)}.
pub fn n_odd_kp(n: usize, m: usize) -> CycNum {
    let cyc = Cyc::for_n(n);
    let e = (2 * m - 1) as i64;
    let mut acc = cyc.rational(&(Rational::one() / num_traits::pow::pow(rat_int(-(n as i64)), e as usize)));
    for l in 1..n {
        let w = cyc.int(1).sub_ref(&cyc.root(n as u32, l as i64));
        acc = acc.add_ref(&w.pow(-e).expect("1 − ζ^l is a unit"));
    }
    acc
}

pub fn qrr_kp(n: usize, zorder: usize) -> QrrDiag {
    let cyc = Cyc::for_n(n);
    let trunc = zorder as i64 + 1;
    let base: Vec<(usize, CycNum)> = (1..)
        .map(|m| 2 * m - 1)
        .take_while(|&e| e <= zorder)
        .map(|e| {
            let m = (e + 1) / 2;
            let w = -bernoulli_number(2 * m) / rat_int((2 * m * (2 * m - 1)) as i64);
            (e, n_odd_kp(n, m).mul_rational(&w))
        })
        .collect();
    let entries = (0..n)
        .map(|j| {
            let mut expo = Series::zero(Var::Z, trunc);
            for (e, c) in &base {
                let twist = cyc.root(n as u32, -((j * e) as i64));
                expo = expo.add_series(&Series::monomial(Var::Z, c.mul_ref(&twist), *e as i64));
            }
            expo.truncate(trunc).exp().expect("no constant term")
        })
        .collect();
    QrrDiag { target: Target::KP, n, zorder, entries }
}

pub fn qrr_cnzn(n: usize, zorder: usize) -> QrrDiag {
    let trunc = zorder as i64 + 1;
    let entries = (0..n)
        .map(|i| {
            let x = rat(i as i64, n as i64);
            let mut expo = Series::zero(Var::Z, trunc);
            let mut l = 1;
            while n * l <= zorder {
                let b = bernoulli_poly(n * l + 1, &x);
                let sign = if l % 2 == 0 { rat_int(1) } else { rat_int(-1) };
                let c = rat_int(n as i64) * sign * b / rat_int(((n * l + 1) * n * l) as i64);
                expo = expo.add_series(&Series::monomial(Var::Z, CycNum::from_rational(&c), (n * l) as i64));
                l += 1;
            }
            expo.truncate(trunc).exp().expect("no constant term")
        })
        .collect();
    QrrDiag { target: Target::CnZn, n, zorder, entries }
}

/// Which R-matrix the table describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// The R-matrix of the CohFT.
    True,
    /// R̃ with P̃^k_{0,j} = −√−1δ_{k,0} (KP) or δ_{k,0} (CnZn) at the origin.
    Tilde,
}

#[derive(Clone, Debug)]
pub struct PTable {
    pub target: Target,
    pub n: usize,
    pub kmax: usize,
    pub qorder: i64,
    pub normalization: Normalization,
    /// series[k][i][j] = P̃^k_{i,j}.
    pub series: Vec<Vec<Vec<Series>>>,
    /// polys[k][j] = P̃^k_{0,j} from the exact ladder.
    pub polys: Vec<Vec<Poly>>,
    /// Origin constants P̃^k_{0,j}|_{origin}.
    pub origin: Vec<Vec<CycNum>>,
}

/// Origin constants for row 0.
pub fn origin_constants(
    target: Target,
    n: usize,
    kmax: usize,
    norm: Normalization,
    qrr: Option<&QrrDiag>,
) -> Vec<Vec<CycNum>> {
    let cyc = Cyc::for_n(n);
    let owned;
    let qrr = match qrr {
        Some(q) => q,
        None => {
            owned = match target {
                Target::KP => qrr_kp(n, kmax),
                Target::CnZn => qrr_cnzn(n, kmax),
            };
            &owned
        }
    };
    (0..=kmax)
        .map(|k| {
            (0..n)
                .map(|j| {
                    let zeta = cyc.root(n as u32, (k * j) as i64);
                    match (target, norm) {
                        (Target::KP, Normalization::True) => (-cyc.i()).mul_ref(&zeta).mul_ref(&qrr.coeff(j, k)),
                        (Target::CnZn, Normalization::True) => zeta.mul_ref(&qrr.coeff(0, k)),
                        (Target::KP, Normalization::Tilde) if k == 0 => -cyc.i(),
                        (Target::CnZn, Normalization::Tilde) if k == 0 => cyc.int(1),
                        _ => CycNum::zero(),
                    }
                })
                .collect()
        })
        .collect()
}

fn ladder_ops(target: Target, n: usize) -> Result<Vec<DiffOp<CycNum>>> {
    (1..=n)
        .map(|r| l_jk_operator(target, n, r).map(|o| o.to_rational_map(CycNum::from_rational)))
        .collect()
}

/// Row 0 as series: n𝖣P̃^k = −Σ_{r≥2}L^{1−r}𝕃_r(P̃^{k+1−r}), constants from `origin`.
pub fn row0_series(
    target: Target,
    n: usize,
    l: &Series,
    origin: &[CycNum],
) -> Result<Vec<Series>> {
    let ops = ladder_ops(target, n)?;
    let linv = l.inv()?;
    let mut lpow = vec![Series::one(l.var())];
    for r in 1..n {
        let next = lpow[r - 1].mul_series(&linv);
        lpow.push(next);
    }
    let inv_n = rat(1, n as i64);
    let mut out: Vec<Series> = Vec::with_capacity(origin.len());
    for (k, c) in origin.iter().enumerate() {
        let mut rhs = Series::exact_zero(l.var());
        for r in 2..=n.min(k + 1) {
            let v = ops[r - 1].apply_series(&out[k + 1 - r], l)?.mul_series(&lpow[r - 1]);
            rhs = rhs.sub_series(&v);
        }
        let rhs = if rhs.is_exact() { rhs.truncate(l.trunc()) } else { rhs };
        if !rhs.coeff(0).is_zero() || rhs.valuation().is_some_and(|v| v < 0) {
            return Err(Error::ConstantMismatch { k });
        }
        let p = rhs.scale_rational(&inv_n).d_inv()?;
        out.push(p.add_series(&Series::constant(l.var(), c.clone())));
    }
    Ok(out)
}

/// The descending chain P̃^k_{Ion(i)−1} = P̃^k_i + (1/L)𝖣P̃^{k−1}_i + A_{n−i}P̃^{k−1}_i
/// for i = 0, n−1, …, 2, followed by the closure residual at i = 1.
/// Returns rows[k][i] and the closure residuals per k.
pub fn chain_rows(
    n: usize,
    row0: &[Series],
    l: &Series,
    a: &[Series],
    d: &dyn Fn(&Series) -> Series,
) -> Result<(Vec<Vec<Series>>, Vec<Series>)> {
    let linv = l.inv()?;
    let step = |prev: &Series, i: usize| -> Series {
        let s = d(prev).mul_series(&linv);
        if i == 0 {
            s
        } else {
            s.add_series(&a[n - i].mul_series(prev))
        }
    };
    let mut rows: Vec<Vec<Series>> = Vec::with_capacity(row0.len());
    let mut closure = Vec::new();
    for (k, r0) in row0.iter().enumerate() {
        let mut row = vec![Series::exact_zero(l.var()); n];
        row[0] = r0.clone();
        if k == 0 {
            for i in 1..n {
                row[i] = r0.clone();
            }
        } else {
            let prev = &rows[k - 1];
            row[n - 1] = row[0].add_series(&step(&prev[0], 0));
            for i in (2..n).rev() {
                row[i - 1] = row[i].add_series(&step(&prev[i], i));
            }
            closure.push(row[1].add_series(&step(&prev[1], 1)).sub_series(&row[0]));
        }
        rows.push(row);
    }
    Ok((rows, closure))
}

pub fn solve_flatness(target: Target, n: usize, kmax: usize, qorder: i64) -> Result<PTable> {
    let frob = FrobeniusData::<CycNum>::new(target, n, qorder + kmax as i64 + 2)?;
    solve_flatness_with(&frob, kmax, qorder, Normalization::True, None)
}

/// Flatness solve against given Frobenius data; `qrr` overrides the QRR diagonal.
pub fn solve_flatness_with(
    frob: &FrobeniusData<CycNum>,
    kmax: usize,
    qorder: i64,
    norm: Normalization,
    qrr: Option<&QrrDiag>,
) -> Result<PTable> {
    let (target, n) = (frob.target, frob.n);
    let origin = origin_constants(target, n, kmax, norm, qrr);
    let mut polys_by_j: Vec<Vec<Poly>> = Vec::with_capacity(n);
    let mut rows_by_j: Vec<Vec<Vec<Series>>> = Vec::with_capacity(n);
    for j in 0..n {
        let oj: Vec<CycNum> = origin.iter().map(|v| v[j].clone()).collect();
        let polys = solve_ladder(target, n, &oj)?;
        let series = row0_series(target, n, &frob.l, &oj)?;
        for (k, (p, s)) in polys.iter().zip(&series).enumerate() {
            let pe = p.eval_series(&frob.l)?;
            if !pe.sub_series(s).is_zero() {
                return Err(Error::ConstantMismatch { k });
            }
        }
        let (rows, closure) = chain_rows(n, &series, &frob.l, &frob.a, &|s: &Series| s.d())?;
        for (k, c) in closure.iter().enumerate() {
            if !c.is_zero() {
                return Err(Error::ClosureViolation { k: k + 1 });
            }
        }
        polys_by_j.push(polys);
        rows_by_j.push(rows);
    }
    let mut series = vec![vec![Vec::with_capacity(n); n]; kmax + 1];
    for rows in rows_by_j.into_iter() {
        for (k, row) in rows.into_iter().enumerate() {
            for (i, s) in row.into_iter().enumerate() {
                if s.trunc() < qorder {
                    return Err(Error::DivisibilityViolation(format!(
                        "P̃^{k}_{i} known only to order {}",
                        s.trunc()
                    )));
                }
                series[k][i].push(s.truncate(qorder));
            }
        }
    }
    let polys = (0..=kmax).map(|k| (0..n).map(|j| polys_by_j[j][k].clone()).collect()).collect();
    Ok(PTable { target, n, kmax, qorder, normalization: norm, series, polys, origin })
}

impl PTable {
    pub fn get(&self, k: usize, i: usize, j: usize) -> Result<&Series> {
        if k > self.kmax {
            return Err(Error::AskLargerKmax { need: k, have: self.kmax });
        }
        Ok(&self.series[k][i][j])
    }

    /// P^k_{i,j} = (K_i/L^i)ζ^{−(k+i)j}P̃^k_{i,j}.
    pub fn untilde(&self, frob: &FrobeniusData<CycNum>, k: usize, i: usize, j: usize) -> Result<Series> {
        let kl = frob.k_over_l(i)?;
        let z = frob.zeta(-(((k + i) * j) as i64));
        Ok(kl.mul_series(self.get(k, i, j)?).scale(&z).truncate(self.qorder))
    }

    /// Whether P̃^k_{i,j} is independent of j for every k and i.
    pub fn j_independent(&self) -> bool {
        self.series.iter().all(|lvl| lvl.iter().all(|row| row.iter().all(|s| s.sub_series(&row[0]).is_zero())))
    }

    pub fn to_json(&self) -> Value {
        let mut rows = Vec::new();
        for (k, lvl) in self.polys.iter().enumerate() {
            for (j, p) in lvl.iter().enumerate() {
                rows.push(json!({"i": 0, "j": j, "k": k, "poly": p.to_json(), "text": p.to_string()}));
            }
        }
        json!({
            "target": self.target.name(),
            "n": self.n,
            "kmax": self.kmax,
            "qorder": self.qorder,
            "normalization": format!("{:?}", self.normalization),
            "row0": rows,
        })
    }
}

/// Basic flatness 𝖣P^{k−1}_{i,j} − C_{Ion(i)}P^k_{Ion(i)−1,j} + Lζ^jP^k_{i,j} for 1 ≤ k ≤ kmax.
pub fn flatness_residuals(pt: &PTable, frob: &FrobeniusData<CycNum>) -> Result<Vec<(usize, usize, usize, Series)>> {
    let n = pt.n;
    let mut out = Vec::new();
    for k in 1..=pt.kmax {
        for i in 0..n {
            for j in 0..n {
                let lhs = pt.untilde(frob, k - 1, i, j)?.d();
                let io = ion(n, i);
                let a = frob.c[io].mul_series(&pt.untilde(frob, k, io - 1, j)?);
                let b = frob.l.scale(&frob.zeta(j as i64)).mul_series(&pt.untilde(frob, k, i, j)?);
                out.push((k, i, j, lhs.sub_series(&a).add_series(&b)));
            }
        }
    }
    Ok(out)
}

/// Σ_i[(1/L)𝖣P̃^k_i + A_{n−i}P̃^k_i], the telescoped cycle condition at level k.
pub fn cycle_sum(pt: &PTable, frob: &FrobeniusData<CycNum>, k: usize, j: usize) -> Result<Series> {
    let linv = frob.l.inv()?;
    let mut acc = Series::exact_zero(frob.var());
    for i in 0..pt.n {
        let p = pt.get(k, i, j)?;
        acc = acc.add_series(&p.d().mul_series(&linv));
        if i > 0 {
            acc = acc.add_series(&frob.a[pt.n - i].mul_series(p));
        }
    }
    Ok(acc)
}

/// Row-0 polynomials recovered from series by fitting, checked against the exact ladder.
pub fn reconstruct_row0(pt: &PTable, j: usize, guard: usize) -> Result<Vec<Poly>> {
    let n = pt.n;
    let frob_l = row0_l(pt)?;
    let mut out = Vec::with_capacity(pt.kmax + 1);
    let mut prev_deg = 0usize;
    for k in 0..=pt.kmax {
        let s = pt.get(k, 0, j)?;
        let mut found = None;
        for deg in prev_deg..=prev_deg + n {
            if s.trunc() < (deg + 1 + guard) as i64 {
                break;
            }
            if let Ok(p) = fit_lpoly(s, &frob_l, deg, guard) {
                found = Some(p);
                break;
            }
        }
        let p = found.ok_or_else(|| Error::NoPolynomialFit(format!("P̃^{k}_(0,{j})")))?;
        if p != pt.polys[k][j] {
            return Err(Error::NoPolynomialFit(format!("P̃^{k}_(0,{j}) disagrees with the ladder")));
        }
        prev_deg = (p.max_exp().unwrap_or(0).max(0) as usize).max(prev_deg);
        out.push(p);
    }
    Ok(out)
}

fn row0_l(pt: &PTable) -> Result<Series> {
    Ok(crate::hypergeom::l_series::<CycNum>(pt.target, pt.n, pt.qorder))
}

/// Symplectic check R(z)R(−z)^T = Id with R = ΨP; returns the first offending z-power.
pub fn symplectic_residual(pt: &PTable, frob: &FrobeniusData<CycNum>, zorder: usize) -> Result<Option<usize>> {
    let n = pt.n;
    if zorder > pt.kmax {
        return Err(Error::AskLargerKmax { need: zorder, have: pt.kmax });
    }
    let (psi, _) = frob.psi_matrices()?;
    let mut r: Vec<Vec<Vec<Series>>> = Vec::with_capacity(zorder + 1);
    for k in 0..=zorder {
        let p: Vec<Vec<Series>> =
            (0..n).map(|i| (0..n).map(|j| pt.untilde(frob, k, i, j)).collect::<Result<_>>()).collect::<Result<_>>()?;
        r.push(crate::frobenius::mat_mul(&psi, &p));
    }
    for m in 0..=zorder {
        for a in 0..n {
            for b in 0..n {
                let mut acc = Series::exact_zero(frob.var());
                for s in 0..=m {
                    let sign = if (m - s) % 2 == 0 { rat_int(1) } else { rat_int(-1) };
                    for c in 0..n {
                        acc = acc.add_series(&r[s][a][c].mul_series(&r[m - s][b][c]).scale_rational(&sign));
                    }
                }
                if m == 0 && a == b {
                    acc = acc.sub_series(&Series::one(frob.var()));
                }
                if !acc.truncate(pt.qorder).is_zero() {
                    return Ok(Some(m));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug)]
pub struct MatchReport {
    pub n: usize,
    pub rho: CycNum,
    pub kmax: usize,
    pub first_mismatch: Option<(usize, usize)>,
}

impl MatchReport {
    pub fn matched(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Compare −√−1·P̃^{k,CnZn}_{0,j}(L') with ρ^k·P̃^{k,KP}_{0,j}(L = −(ρ/n)L').
pub fn match_p0j_tables(kp: &PTable, cz: &PTable, rho: &CycNum) -> Result<MatchReport> {
    let n = kp.n;
    check_rho(n, rho)?;
    let cyc = Cyc::for_n(n);
    let scale = rho.mul_rational(&rat(-1, n as i64));
    let kmax = kp.kmax.min(cz.kmax);
    let mut first = None;
    'outer: for k in 0..=kmax {
        for j in 0..n {
            let lhs = cz.polys[k][j].scale(&-cyc.i());
            let rhs = kp.polys[k][j].subst_scale(&scale).scale(&rho.powi(k as i64));
            if lhs != rhs {
                first = Some((k, j));
                break 'outer;
            }
        }
    }
    Ok(MatchReport { n, rho: rho.clone(), kmax, first_mismatch: first })
}

pub fn match_p0j(n: usize, kmax: usize, rho: &CycNum) -> Result<MatchReport> {
    let kp = ladder_table(Target::KP, n, kmax, Normalization::True)?;
    let cz = ladder_table(Target::CnZn, n, kmax, Normalization::True)?;
    match_p0j_tables(&kp, &cz, rho)
}

/// The n-th roots of −1, as powers of ζ_{2n}, for which row 0 matches.
pub fn matching_rhos(n: usize, kmax: usize) -> Result<Vec<(i64, bool)>> {
    let kp = ladder_table(Target::KP, n, kmax, Normalization::True)?;
    let cz = ladder_table(Target::CnZn, n, kmax, Normalization::True)?;
    let cyc = Cyc::for_n(n);
    (0..n as i64)
        .map(|t| {
            let p = 2 * t + 1;
            let rho = cyc.root(2 * n as u32, p);
            Ok((p, match_p0j_tables(&kp, &cz, &rho)?.matched()))
        })
        .collect()
}

pub fn check_rho(n: usize, rho: &CycNum) -> Result<()> {
    if rho.powi(n as i64) != -CycNum::one() {
        return Err(Error::InvalidRho);
    }
    Ok(())
}

/// A row-0-only table from the exact ladder (no series).
pub fn ladder_table(target: Target, n: usize, kmax: usize, norm: Normalization) -> Result<PTable> {
    let origin = origin_constants(target, n, kmax, norm, None);
    let by_j: Vec<Vec<Poly>> = (0..n)
        .map(|j| solve_ladder(target, n, &origin.iter().map(|v| v[j].clone()).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let polys = (0..=kmax).map(|k| (0..n).map(|j| by_j[j][k].clone()).collect()).collect();
    Ok(PTable { target, n, kmax, qorder: 0, normalization: norm, series: vec![], polys, origin })
}

/// −√−1·exp(nΣ_l B_{nl+1}(0)z^{nl}/((nl+1)nl)).
pub fn r_identity_lhs(n: usize, zorder: usize) -> Series {
    let trunc = zorder as i64 + 1;
    let mut expo = Series::zero(Var::Z, trunc);
    let mut l = 1;
    while n * l <= zorder {
        let c = rat_int(n as i64) * bernoulli_number(n * l + 1) / rat_int(((n * l + 1) * n * l) as i64);
        expo = expo.add_series(&Series::monomial(Var::Z, CycNum::from_rational(&c), (n * l) as i64));
        l += 1;
    }
    expo.truncate(trunc).exp().expect("no constant term").scale(&-Cyc::for_n(n).i())
}

fn constant_terms(pt: &PTable, zorder: usize) -> Series {
    let coeffs: Vec<CycNum> = (0..=zorder).map(|k| pt.polys[k][0].coeff(0)).collect();
    Series::from_coeffs(Var::Z, coeffs, zorder as i64 + 1)
}

/// LHS − (Σ_k a^k z^k)·Q_0(z) with a^k the L^0 coefficient of the R̃-normalized P̃^k_{0,0}.
pub fn r_identity_residual(n: usize, zorder: usize) -> Result<Series> {
    let tilde = ladder_table(Target::KP, n, zorder, Normalization::Tilde)?;
    let q0 = qrr_kp(n, zorder).entries[0].clone();
    Ok(r_identity_lhs(n, zorder).sub_series(&constant_terms(&tilde, zorder).mul_series(&q0)))
}

/// The same identity through the true R-matrix: LHS − Σ_k (L^0 coefficient of P̃^k_{0,0}) z^k.
pub fn r_identity_residual_true(n: usize, zorder: usize) -> Result<Series> {
    let t = ladder_table(Target::KP, n, zorder, Normalization::True)?;
    Ok(r_identity_lhs(n, zorder).sub_series(&constant_terms(&t, zorder)))
}

pub fn qrr_to_json(q: &QrrDiag) -> Value {
    json!({
        "target": q.target.name(),
        "n": q.n,
        "zorder": q.zorder,
        "entries": q.entries.iter().map(|e| e.to_json()).collect::<Vec<_>>(),
    })
}

/// Rows i ≠ 0 use Inv on the edge formula; re-exported for graph sums.
pub fn inv(n: usize, i: usize) -> usize {
    inv_index(n, i)
}

pub fn rational_json(r: &Rational) -> Value {
    Value::String(rat_to_string(r))
}
