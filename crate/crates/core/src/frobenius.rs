//! Birkhoff factorization series C_i, K_r, X_i, A_i and the semisimple
//! Frobenius data (Ψ, idempotents, 𝖣U, metric, three-point functions).

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactfield::{binomial, rat, rat_int, Cyc, CycNum, Field, Rational};
use crate::formal::{LogSeries, QSeries};
use crate::hypergeom::{
    i_function_cnzn, i_function_kp, l_series, pf_sigma, y_series, Target,
};

/// Ion(i) = n for i = 0, otherwise i.
pub fn ion(n: usize, i: usize) -> usize {
    if i == 0 {
        n
    } else {
        i
    }
}

/// Inv(i) = (n − i) mod n.
pub fn inv_index(n: usize, i: usize) -> usize {
    (n - i % n) % n
}

#[derive(Clone, Debug)]
pub struct FrobeniusData<S: Field> {
    pub target: Target,
    pub n: usize,
    pub order: i64,
    pub l: QSeries<S>,
    /// 𝖣L/L.
    pub y: QSeries<S>,
    /// C_0..C_{2n}.
    pub c: Vec<QSeries<S>>,
    /// K_0..K_{2n}.
    pub k: Vec<QSeries<S>>,
    /// X_0..X_n.
    pub x: Vec<QSeries<S>>,
    /// A_0..A_n.
    pub a: Vec<QSeries<S>>,
}

fn internal_order(target: Target, n: usize, order: i64) -> i64 {
    match target {
        Target::KP => order,
        Target::CnZn => order + 4 * n as i64 + 4,
    }
}

fn graded_components<S: Field>(target: Target, n: usize, order: i64, kmax: usize) -> Vec<LogSeries<S>> {
    match target {
        Target::KP => i_function_kp::<S>(n, order, kmax).components,
        Target::CnZn => i_function_cnzn::<S>(n, order, kmax)
            .components
            .into_iter()
            .map(LogSeries::from_series)
            .collect(),
    }
}

/// C_i = 𝖣(1/C_{i−1})𝖣⋯(1/C_1)𝖣 𝖨_i for i = 0..=imax.
pub fn birkhoff_c<S: Field>(target: Target, n: usize, order: i64, imax: usize) -> Result<Vec<QSeries<S>>> {
    let comps = graded_components::<S>(target, n, order, imax);
    let mut c: Vec<QSeries<S>> = vec![QSeries::one(target.var()).truncate(order)];
    let mut invs: Vec<QSeries<S>> = vec![QSeries::one(target.var())];
    for (i, comp) in comps.iter().enumerate().take(imax + 1).skip(1) {
        let mut f = comp.d();
        for inv in invs.iter().skip(1) {
            f = f.mul_series(inv).d();
        }
        let ci = f.log_free(&format!("C_{i}"))?;
        if ci.is_zero() {
            return Err(Error::DivisionByZeroSeries(format!("C_{i} vanishes to order {}", ci.trunc())));
        }
        invs.push(ci.inv()?);
        c.push(ci);
    }
    Ok(c)
}

impl<S: Field> FrobeniusData<S> {
    pub fn new(target: Target, n: usize, order: i64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument("n must be at least 3".into()));
        }
        let io = internal_order(target, n, order);
        let c = birkhoff_c::<S>(target, n, io, 2 * n)?;
        let l: QSeries<S> = l_series(target, n, io);
        let y = y_series(target, n, &l);
        let mut k = vec![QSeries::one(target.var())];
        for i in 1..=2 * n {
            let next = k[i - 1].mul_series(&c[i]);
            k.push(next);
        }
        let mut x = vec![QSeries::zero(target.var(), io)];
        for ci in c.iter().take(n + 1).skip(1) {
            x.push(ci.d().div_series(ci)?);
        }
        let linv = l.inv()?;
        let mut a = Vec::with_capacity(n + 1);
        let mut xsum = QSeries::zero(target.var(), io);
        for i in 0..=n {
            xsum = xsum.add_series(&x[i]);
            let num = y.scale_rational(&rat_int(i as i64)).sub_series(&xsum);
            if target == Target::CnZn {
                num.require_valuation(1, &format!("numerator of A_{i}"))?;
            }
            a.push(num.mul_series(&linv));
        }
        let cut = |v: Vec<QSeries<S>>| -> Result<Vec<QSeries<S>>> {
            v.into_iter()
                .map(|s| {
                    if s.trunc() < order {
                        Err(Error::DivisibilityViolation(format!(
                            "series known only to order {} < {order}",
                            s.trunc()
                        )))
                    } else {
                        Ok(s)
                    }
                })
                .collect()
        };
        Ok(FrobeniusData {
            target,
            n,
            order,
            l,
            y,
            c: cut(c)?,
            k: cut(k)?,
            x: cut(x)?,
            a: cut(a)?,
        })
    }

    pub fn var(&self) -> crate::formal::Var {
        self.target.var()
    }

    /// K_r for any r ≥ 0 through K_{n+r} = L^n K_r.
    pub fn k_ext(&self, r: usize) -> QSeries<S> {
        if r < self.k.len() {
            self.k[r].clone()
        } else {
            self.l.pow_u(self.n as u32).mul_series(&self.k_ext(r - self.n))
        }
    }

    /// K_i/L^i.
    pub fn k_over_l(&self, i: usize) -> Result<QSeries<S>> {
        self.k[i].div_series(&self.l.pow_u(i as u32))
    }

    /// X_{k,l} = 𝖣^l C_k / C_k.
    pub fn x_kl_direct(&self, k: usize, l: usize) -> Result<QSeries<S>> {
        self.c[k].d_pow(l).div_series(&self.c[k])
    }

    /// (𝖣 + X_k)^{l−1} X_k.
    pub fn x_kl_recursive(&self, k: usize, l: usize) -> QSeries<S> {
        let xk = self.c[k].d().div_series(&self.c[k]).expect("invertible C");
        let mut g = xk.clone();
        for _ in 1..l {
            g = g.d().add_series(&xk.mul_series(&g));
        }
        g
    }

    pub fn f_n(&self) -> QSeries<S> {
        let n = self.n;
        let base = binomial(n as i64 + 1, 4) / rat_int((n * n) as i64);
        let one = QSeries::one(self.var());
        let ln = self.l.pow_u(n as u32);
        match self.target {
            Target::KP => one.sub_series(&ln).mul_series(&self.l.pow_u(n as u32 - 1)).scale_rational(&base),
            Target::CnZn => {
                // image of KP f_n under the identification, rescaled
                let nn = num_traits::pow::pow(rat_int(n as i64), n);
                let sign = if n % 2 == 0 { -Rational::one() } else { Rational::one() };
                let inner = one.add_series(&ln.scale_rational(&(-sign.clone() / &nn)));
                inner
                    .mul_series(&self.l.pow_u(n as u32 - 1))
                    .scale_rational(&(binomial(n as i64 + 1, 4) * sign / nn))
            }
        }
    }

    /// f_n + Σ_{r ≤ (n−1)/2}(n−2r)𝖣A_r − LΣ_{r ≤ (n−1)/2}A_r².
    pub fn da_relation_residual(&self) -> QSeries<S> {
        da_relation_residual_with(self, &self.a)
    }

    /// Σ_i Σ_{r<n−i} 𝖣A_r compared to Σ(n−2r)𝖣A_r, and the quadratic analogue.
    pub fn double_sum_residuals(&self) -> (QSeries<S>, QSeries<S>) {
        let n = self.n;
        let var = self.var();
        let mut lin = QSeries::exact_zero(var);
        let mut quad = QSeries::exact_zero(var);
        for i in 0..n {
            for r in 0..(n - i) {
                lin = lin.add_series(&self.a[r].d());
                quad = quad.add_series(&self.a[n - i].mul_series(&self.a[r]));
            }
        }
        for r in 1..=(n - 1) / 2 {
            lin = lin.sub_series(&self.a[r].d().scale_rational(&rat_int((n - 2 * r) as i64)));
            quad = quad.add_series(&self.a[r].pow_u(2));
        }
        (lin, quad)
    }

    /// 𝖢_{i,1} − log Q for 1 ≤ i ≤ n−1 (KP), asserting 𝖣𝖢_{i−1,1} = C_i on the way.
    pub fn two_point(&self, i: usize) -> Result<QSeries<S>> {
        if self.target != Target::KP || i == 0 || i >= self.n {
            return Err(Error::IndexOutOfRange(format!("two-point index {i}")));
        }
        let comps = i_function_kp::<S>(self.n, self.order, i + 1).components;
        // row[k] = 𝖢_{level,k}
        let mut row: Vec<LogSeries<S>> = comps.clone();
        for level in 1..=i {
            let denom = row[1].d().log_free("D C_(i-1,1)")?;
            let expect = &self.c[level];
            if !denom.sub_series(expect).zero_through(self.order) {
                return Err(Error::ResidualNonzero(format!("D C_({},1) != C_{level}", level - 1)));
            }
            let dinv = denom.inv()?;
            row = (1..row.len()).map(|k| row[k].d().mul_series(&dinv)).collect();
        }
        let log_q = LogSeries::new(vec![self.c_mirror(), QSeries::one(self.var())]);
        row[1].sub(&log_q).log_free("two-point")
    }

    fn c_mirror(&self) -> QSeries<S> {
        crate::hypergeom::mirror_map::<S>(self.n, self.order)
    }
}

pub fn da_relation_residual_with<S: Field>(f: &FrobeniusData<S>, a: &[QSeries<S>]) -> QSeries<S> {
    let n = f.n;
    let mut r = f.f_n();
    let mut sq = QSeries::exact_zero(f.var());
    for (k, ak) in a.iter().enumerate().take((n - 1) / 2 + 1).skip(1) {
        r = r.add_series(&ak.d().scale_rational(&rat_int((n - 2 * k) as i64)));
        sq = sq.add_series(&ak.pow_u(2));
    }
    r.sub_series(&f.l.mul_series(&sq))
}

/// Every identity of the C/K/X/A suites as (label, residual) pairs.
pub fn identity_residuals<S: Field>(f: &FrobeniusData<S>) -> Vec<(String, QSeries<S>)> {
    let n = f.n;
    let mut out = Vec::new();
    let ln = f.l.pow_u(n as u32);
    let one = QSeries::one(f.var());
    out.push(("C_0 = 1".to_string(), f.c[0].sub_series(&one)));
    for i in 1..=n {
        out.push((format!("C_{} = C_{i}", i + n), f.c[i + n].sub_series(&f.c[i])));
        out.push((format!("C_{i} = C_{}", n + 1 - i), f.c[i].sub_series(&f.c[n + 1 - i])));
    }
    out.push(("prod C_i = L^n".to_string(), f.k[n].sub_series(&ln)));
    for r in 0..=n {
        out.push((
            format!("K_{r} K_{} = L^n", n - r),
            f.k[r].mul_series(&f.k[n - r]).sub_series(&ln),
        ));
        let ir = inv_index(n, r);
        out.push((
            format!("K_{r} K_Inv({r}) = L^(r+Inv(r))"),
            f.k[r].mul_series(&f.k[ir]).sub_series(&f.l.pow_u((r + ir) as u32)),
        ));
    }
    out.push(("X_0 = 0".to_string(), f.x[0].clone()));
    let mut xsum = QSeries::exact_zero(f.var());
    for i in 0..=n {
        xsum = xsum.add_series(&f.x[i]);
        let dk = f.k[i].d().div_series(&f.k[i]).expect("invertible K");
        out.push((format!("DK_{i}/K_{i} = sum X_r"), dk.sub_series(&xsum)));
    }
    out.push((
        "n DL/L = sum X_r".to_string(),
        f.y.scale_rational(&rat_int(n as i64)).sub_series(&xsum),
    ));
    out.push(("A_0 = 0".to_string(), f.a[0].clone()));
    out.push(("A_n = 0".to_string(), f.a[n].clone()));
    let mut asum = QSeries::exact_zero(f.var());
    for i in 0..=n {
        out.push((format!("A_{i} = -A_{}", n - i), f.a[i].add_series(&f.a[n - i])));
        asum = asum.add_series(&f.a[i]);
    }
    out.push(("sum A_i = 0".to_string(), asum));
    if n % 2 == 0 {
        out.push(("A_(n/2) = 0".to_string(), f.a[n / 2].clone()));
    }
    for k in 1..=n {
        for l in 1..=4 {
            let d = f.x_kl_direct(k, l).expect("invertible C");
            out.push((format!("X_({k},{l}) recursion"), d.sub_series(&f.x_kl_recursive(k, l))));
        }
    }
    out
}

/// Z_{m,k} = 𝖣⁻¹C_{k+1}𝖣⁻¹C_{k+2}⋯𝖣⁻¹C_m.
pub fn z_series<S: Field>(f: &FrobeniusData<S>, m: usize, k: usize) -> Result<LogSeries<S>> {
    if k > m {
        return Ok(LogSeries::from_series(QSeries::exact_zero(f.var())));
    }
    let mut g = LogSeries::from_series(QSeries::one(f.var()).truncate(f.order));
    for i in ((k + 1)..=m).rev() {
        g = g.mul_series(&f.c[i]).d_inv()?;
    }
    Ok(g)
}

/// B_{k,p} of the commutator expansion 𝖣^k 𝖨_m = Σ_p B_{k,p} Z_{m,p}.
pub fn b_series<S: Field>(f: &FrobeniusData<S>, k: usize, p: usize) -> QSeries<S> {
    if p == 0 || p > k {
        return QSeries::exact_zero(f.var());
    }
    fn rec<S: Field>(f: &FrobeniusData<S>, idx: usize, ki: usize, p: usize) -> QSeries<S> {
        // idx is the current i (1-based), ki = k_i
        if idx == p {
            return f.c[p].d_pow(ki - 1);
        }
        let mut acc = QSeries::exact_zero(f.var());
        let lo = p - idx;
        if ki < 1 {
            return acc;
        }
        for kn in lo..ki {
            let w = binomial((ki - 1) as i64, kn as i64);
            let factor = f.c[idx].d_pow(ki - 1 - kn).scale_rational(&w);
            acc = acc.add_series(&factor.mul_series(&rec(f, idx + 1, kn, p)));
        }
        acc
    }
    rec(f, 1, k, p)
}

/// 𝖣^k 𝖨_m − Σ_p B_{k,p}Z_{m,p} for 1 ≤ k, m ≤ n (KP).
pub fn bz_residuals<S: Field>(f: &FrobeniusData<S>) -> Result<Vec<(String, LogSeries<S>)>> {
    let n = f.n;
    let comps = i_function_kp::<S>(n, f.order, n).components;
    let mut out = Vec::new();
    for m in 0..=n {
        out.push((format!("Z_({m},0) = I_{m}"), z_series(f, m, 0)?.sub(&comps[m])));
    }
    for m in 1..=n {
        let zs: Vec<LogSeries<S>> = (0..=n).map(|p| z_series(f, m, p)).collect::<Result<_>>()?;
        let mut dk = comps[m].clone();
        for k in 1..=n {
            dk = dk.d();
            let mut rhs = LogSeries::from_series(QSeries::exact_zero(f.var()));
            for (p, z) in zs.iter().enumerate().take(k + 1).skip(1) {
                rhs = rhs.add(&z.mul_series(&b_series(f, k, p)));
            }
            out.push((format!("D^{k} I_{m} = sum B Z"), dk.sub(&rhs)));
        }
    }
    Ok(out)
}

/// B_{n,m} − (Y/n^{n−1})Σ_{k=m}^{n−1} c(n,k)n^k B_{k,m} for 1 ≤ m ≤ n−1.
pub fn graded_pf_residuals<S: Field>(f: &FrobeniusData<S>) -> Vec<QSeries<S>> {
    let n = f.n;
    let sigma = pf_sigma(Target::KP, n);
    (1..n)
        .map(|m| {
            let mut rhs = QSeries::exact_zero(f.var());
            for (k, s) in sigma.iter().enumerate().take(n).skip(m) {
                rhs = rhs.add_series(&b_series(f, k, m).scale_rational(&-s.clone()));
            }
            b_series(f, n, m).sub_series(&rhs.mul_series(&f.y))
        })
        .collect()
}

/// Metric g(i, j): −(1/n)δ for KP, +(1/n)δ for CnZn, on Inv(i) = j.
pub fn metric(target: Target, n: usize, i: usize, j: usize) -> Result<CycNum> {
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange(format!("metric ({i},{j})")));
    }
    if inv_index(n, i) != j {
        return Ok(CycNum::zero());
    }
    Ok(CycNum::from_rational(&match target {
        Target::KP => rat(-1, n as i64),
        Target::CnZn => rat(1, n as i64),
    }))
}

pub type Matrix = Vec<Vec<QSeries<CycNum>>>;

impl FrobeniusData<CycNum> {
    pub fn cyc(&self) -> Cyc {
        Cyc::for_n(self.n)
    }

    pub fn zeta(&self, p: i64) -> CycNum {
        self.cyc().root(self.n as u32, p)
    }

    /// (Ψ, Ψ⁻¹) with Ψ_{αi} indexed by idempotent α and flat index i.
    pub fn psi_matrices(&self) -> Result<(Matrix, Matrix)> {
        let n = self.n;
        let cyc = self.cyc();
        let (pref, pref_inv) = match self.target {
            Target::KP => (cyc.i().mul_rational(&rat(1, n as i64)), -cyc.i()),
            Target::CnZn => (cyc.rational(&rat(1, n as i64)), cyc.int(1)),
        };
        let mut psi = vec![vec![QSeries::exact_zero(self.var()); n]; n];
        let mut psi_inv = psi.clone();
        for i in 0..n {
            let kl = self.k_over_l(i)?;
            let lk = kl.inv()?;
            for a in 0..n {
                psi[a][i] = lk.scale(&pref.mul_ref(&self.zeta((a * i) as i64)));
                psi_inv[i][a] = kl.scale(&pref_inv.mul_ref(&self.zeta(-((a * i) as i64))));
            }
        }
        Ok((psi, psi_inv))
    }

    /// 𝖣U = diag(ζ^j L).
    pub fn canonical_du(&self) -> Vec<QSeries<CycNum>> {
        (0..self.n).map(|j| self.l.scale(&self.zeta(j as i64))).collect()
    }

    /// Genus-0 three-point function ⟨H^i, H^j, H^k⟩.
    pub fn three_point(&self, i: usize, j: usize, k: usize) -> Result<QSeries<CycNum>> {
        let n = self.n;
        if i >= n || j >= n || k >= n {
            return Err(Error::IndexOutOfRange(format!("three-point ({i},{j},{k})")));
        }
        if inv_index(n, (i + j) % n) != k {
            return Ok(QSeries::exact_zero(self.var()));
        }
        let ratio = self.k_ext(i + j).div_series(&self.k[i].mul_series(&self.k[j]))?;
        Ok(ratio.scale(&metric(self.target, n, 0, 0)?))
    }

    /// Quantum product structure: H^i∙H^j = coefficient·H^{(i+j) mod n}.
    pub fn product_coefficient(&self, i: usize, j: usize) -> Result<QSeries<CycNum>> {
        self.k_ext(i + j).div_series(&self.k[i].mul_series(&self.k[j]))
    }

    /// (H^i∙H^j)∙H^k − H^i∙(H^j∙H^k) over all index triples.
    pub fn associativity_residuals(&self) -> Result<Vec<QSeries<CycNum>>> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let lhs = self.product_coefficient(i, j)?.mul_series(&self.product_coefficient((i + j) % n, k)?);
                    let rhs = self.product_coefficient(j, k)?.mul_series(&self.product_coefficient(i, (j + k) % n)?);
                    out.push(lhs.sub_series(&rhs));
                }
            }
        }
        Ok(out)
    }

    /// λ_α with ẽ_α∙ẽ_α = λ_α ẽ_α, i.e. g(e_α, e_α)^{−1/2} on the branch fixed by ẽ_α.
    pub fn idempotent_scale(&self, alpha: usize) -> Result<CycNum> {
        let n = self.n;
        let (_, psi_inv) = self.psi_matrices()?;
        let col: Vec<QSeries<CycNum>> = (0..n).map(|i| psi_inv[i][alpha].clone()).collect();
        let mut sq = vec![QSeries::exact_zero(self.var()); n];
        for i in 0..n {
            for j in 0..n {
                let t = col[i].mul_series(&col[j]).mul_series(&self.product_coefficient(i, j)?);
                sq[(i + j) % n] = sq[(i + j) % n].add_series(&t);
            }
        }
        let lambda = sq[0].div_series(&col[0])?;
        let c = lambda.coeff(0);
        let constant = QSeries::constant(self.var(), c.clone());
        if !lambda.sub_series(&constant).zero_through(self.order) {
            return Err(Error::ResidualNonzero("idempotent scale is not constant".into()));
        }
        for s in 0..n {
            if !sq[s].sub_series(&col[s].scale(&c)).zero_through(self.order) {
                return Err(Error::ResidualNonzero(format!("e_{alpha} is not idempotent")));
            }
        }
        Ok(c)
    }

    /// The fixed branch of g(e_α, e_α)^{−1/2}: −n√−1 for KP, n for CnZn.
    pub fn branch(&self) -> CycNum {
        match self.target {
            Target::KP => self.cyc().i().mul_rational(&rat_int(-(self.n as i64))),
            Target::CnZn => self.cyc().int(self.n as i64),
        }
    }

    /// Ψ⁻¹·𝖣U·Ψ, expected to be C_{Ion(i)} on the entries (i, Ion(i)−1).
    pub fn du_in_flat_frame(&self) -> Result<Matrix> {
        let n = self.n;
        let (psi, psi_inv) = self.psi_matrices()?;
        let du = self.canonical_du();
        let mut out = vec![vec![QSeries::exact_zero(self.var()); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = QSeries::exact_zero(self.var());
                for a in 0..n {
                    acc = acc.add_series(&psi_inv[i][a].mul_series(&du[a]).mul_series(&psi[a][j]));
                }
                out[i][j] = acc;
            }
        }
        Ok(out)
    }
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b[0].len();
    let var = a[0][0].var();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..b.len()).fold(QSeries::exact_zero(var), |acc, k| acc.add_series(&a[i][k].mul_series(&b[k][j])))
                })
                .collect()
        })
        .collect()
}

pub fn is_identity(m: &Matrix, order: i64) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, e)| {
            let target = if i == j { QSeries::one(e.var()) } else { QSeries::exact_zero(e.var()) };
            e.sub_series(&target).zero_through(order)
        })
    })
}
