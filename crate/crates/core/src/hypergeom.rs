//! I-functions, L-series, Picard-Fuchs operators and the ℋ/𝕃 operator calculus.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::exactfield::{binomial, factorial, rat, rat_int, Field, Rational};
use crate::formal::{LDerivation, LPoly, LogSeries, QSeries, Var, TRUNC_INF};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    KP,
    CnZn,
}

impl Target {
    pub fn var(&self) -> Var {
        match self {
            Target::KP => Var::Q,
            Target::CnZn => Var::X,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Target::KP => "kp",
            Target::CnZn => "cnzn",
        }
    }
}

fn pow_i(base: i64, e: u32) -> Rational {
    Rational::from_integer(BigInt::from(base).pow(e))
}

/// Signed Stirling number of the first kind: [x^k] x(x−1)⋯(x−n+1).
pub fn stirling_first(n: usize, k: usize) -> Result<Rational> {
    if k > n {
        return Err(Error::IndexOutOfRange(format!("s({n},{k})")));
    }
    let mut poly = vec![BigInt::one()];
    for i in 0..n {
        let mut next = vec![BigInt::zero(); poly.len() + 1];
        for (d, c) in poly.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= c * BigInt::from(i);
        }
        poly = next;
    }
    Ok(Rational::from_integer(poly[k].clone()))
}

/// Unsigned Stirling number (−1)^{n−k}s_{n,k}.
pub fn stirling_unsigned(n: usize, k: usize) -> Rational {
    stirling_first(n, k).map(|s| s.abs()).unwrap_or_else(|_| Rational::zero())
}

/// L = (1 − (−n)^n q)^{−1/n} for KP, L = x(1 − (−1)^n(x/n)^n)^{−1/n} for CnZn.
pub fn l_series<S: Field>(target: Target, n: usize, order: i64) -> QSeries<S> {
    let nn = n as u32;
    match target {
        Target::KP => {
            let a = -pow_i(-(n as i64), nn);
            let base = QSeries::new(Var::Q, 0, vec![S::one(), S::from_rational(&a)], TRUNC_INF);
            base.truncate(order).pow_rational(&rat(-1, n as i64)).expect("unit constant term")
        }
        Target::CnZn => {
            let sign = if n % 2 == 0 { -1 } else { 1 };
            let mut coeffs = vec![S::zero(); n + 1];
            coeffs[0] = S::one();
            coeffs[n] = S::from_rational(&(rat_int(sign) / pow_i(n as i64, nn)));
            let base = QSeries::new(Var::X, 0, coeffs, TRUNC_INF);
            base.truncate(order - 1)
                .pow_rational(&rat(-1, n as i64))
                .expect("unit constant term")
                .shift(1)
        }
    }
}

/// 𝖣L/L as a polynomial in X = L^n.
pub fn y_in_x(target: Target, n: usize) -> LPoly<Rational> {
    match target {
        Target::KP => LPoly::from_terms([(1, rat(1, n as i64)), (0, rat(-1, n as i64))]),
        Target::CnZn => {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            LPoly::from_terms([(0, Rational::one()), (1, rat_int(sign) / pow_i(n as i64, n as u32))])
        }
    }
}

/// D acting on polynomials in X = L^n.
pub fn x_derivation<S: Field>(target: Target, n: usize) -> LDerivation<S> {
    let y = y_in_x(target, n);
    let nr = rat_int(n as i64);
    LDerivation {
        n: 1,
        alpha: S::from_rational(&(y.coeff(0) * &nr)),
        beta: S::from_rational(&(y.coeff(1) * &nr)),
    }
}

/// D acting on polynomials in L.
pub fn l_derivation<S: Field>(target: Target, n: usize) -> LDerivation<S> {
    let y = y_in_x(target, n);
    LDerivation { n, alpha: S::from_rational(&y.coeff(0)), beta: S::from_rational(&y.coeff(1)) }
}

/// X-polynomial → L-polynomial via X = L^n.
pub fn x_to_l<S: Field>(p: &LPoly<S>, n: usize) -> LPoly<S> {
    LPoly::from_terms(p.terms().map(|(e, c)| (e * n as i64, c.clone())))
}

/// Coefficient series of Y = 𝖣L/L.
pub fn y_series<S: Field>(target: Target, n: usize, lval: &QSeries<S>) -> QSeries<S> {
    x_to_l(&y_in_x(target, n).map_scalars(S::from_rational), n)
        .eval_series(lval)
        .expect("nonnegative exponents")
}

pub struct IFunctionKP<S: Field> {
    pub n: usize,
    pub qorder: i64,
    /// I_k = [h^k] of the hypergeometric sum, log-free.
    pub plain: Vec<QSeries<S>>,
    /// 𝖨_k = Σ_a ℓ^a/a!·I_{k−a}.
    pub components: Vec<LogSeries<S>>,
}

impl<S: Field> IFunctionKP<S> {
    /// Φ_0 = I_1/n.
    pub fn phi0(&self) -> QSeries<S> {
        self.plain[1].scale_rational(&rat(1, self.n as i64))
    }
}

fn poly_mul_trunc(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_inv_trunc(a: &[Rational], len: usize) -> Vec<Rational> {
    let a0inv = a[0].recip();
    let mut w = vec![Rational::zero(); len];
    w[0] = a0inv.clone();
    for k in 1..len {
        let mut acc = Rational::zero();
        for j in 1..=k.min(a.len() - 1) {
            acc += &a[j] * &w[k - j];
        }
        w[k] = -acc * &a0inv;
    }
    w
}

pub fn i_function_kp<S: Field>(n: usize, qorder: i64, kmax: usize) -> IFunctionKP<S> {
    let len = kmax + 1;
    let mut coeff: Vec<Vec<Rational>> = vec![vec![Rational::zero(); qorder.max(0) as usize]; len];
    if qorder > 0 {
        coeff[0][0] = Rational::one();
    }
    let nr = rat_int(n as i64);
    for d in 1..qorder.max(0) as usize {
        let mut num = vec![Rational::one()];
        for k in 0..n * d {
            num = poly_mul_trunc(&num, &[rat_int(k as i64), nr.clone()], len);
        }
        let mut den = vec![Rational::one()];
        for k in 1..=d {
            let f: Vec<Rational> = (0..n)
                .map(|i| binomial(n as i64, i as i64) * pow_i(k as i64, (n - i) as u32))
                .collect();
            den = poly_mul_trunc(&den, &f, len);
        }
        let mut term = poly_mul_trunc(&num, &poly_inv_trunc(&den, len), len);
        if (n * d) % 2 == 1 {
            term.iter_mut().for_each(|c| *c = -c.clone());
        }
        for (k, c) in term.into_iter().enumerate() {
            coeff[k][d] = c;
        }
    }
    let plain: Vec<QSeries<S>> = coeff
        .into_iter()
        .map(|v| QSeries::from_coeffs(Var::Q, v.iter().map(S::from_rational).collect(), qorder))
        .collect();
    let components = (0..len)
        .map(|k| {
            LogSeries::new(
                (0..=k)
                    .map(|a| plain[k - a].scale_rational(&Rational::new(BigInt::one(), factorial(a as u64))))
                    .collect(),
            )
        })
        .collect();
    IFunctionKP { n, qorder, plain, components }
}

pub struct IFunctionCnZn<S: Field> {
    pub n: usize,
    pub xorder: i64,
    /// I_m = coefficient of z^{−m}, landing on φ_{m mod n}.
    pub components: Vec<QSeries<S>>,
}

/// The values (−1)^n b^n for 0 ≤ b < k/n with ⟨b⟩ = ⟨k/n⟩.
fn cnzn_factor_values(n: usize, k: usize) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut b = rat(k as i64, n as i64) - Rational::one();
    while !b.is_negative() {
        let mut v = num_traits::pow::pow(b.clone(), n);
        if n % 2 == 1 {
            v = -v;
        }
        out.push(v);
        b -= Rational::one();
    }
    out
}

/// Elementary symmetric polynomials e_0..e_len of `vals`.
fn elementary(vals: &[Rational]) -> Vec<Rational> {
    let mut e = vec![Rational::one()];
    for v in vals {
        let mut next = e.clone();
        next.push(Rational::zero());
        for i in 0..e.len() {
            next[i + 1] += &e[i] * v;
        }
        e = next;
    }
    e
}

pub fn i_function_cnzn<S: Field>(n: usize, xorder: i64, kmax: usize) -> IFunctionCnZn<S> {
    let mut comps: Vec<Vec<Rational>> = vec![vec![Rational::zero(); xorder.max(0) as usize]; kmax + 1];
    for k in 0..xorder.max(0) as usize {
        let e = elementary(&cnzn_factor_values(n, k));
        let inv_fact = Rational::new(BigInt::one(), factorial(k as u64));
        for (m, comp) in comps.iter_mut().enumerate() {
            if m > k || (k - m) % n != 0 {
                continue;
            }
            let idx = (k - m) / n;
            if let Some(c) = e.get(idx) {
                comp[k] = c * &inv_fact;
            }
        }
    }
    IFunctionCnZn {
        n,
        xorder,
        components: comps
            .into_iter()
            .map(|v| QSeries::from_coeffs(Var::X, v.iter().map(S::from_rational).collect(), xorder))
            .collect(),
    }
}

/// Coefficients σ_k (k < n) of the Picard-Fuchs operator D^n + Y·Σ σ_k D^k.
pub fn pf_sigma(target: Target, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|k| match target {
            Target::KP => {
                -stirling_unsigned(n, k) * pow_i(n as i64, k as u32) / pow_i(n as i64, (n - 1) as u32)
            }
            Target::CnZn => stirling_first(n, k).unwrap(),
        })
        .collect()
}

/// The order-n Picard-Fuchs operator, coefficients in X.
pub fn pf_operator(target: Target, n: usize) -> DiffOp<Rational> {
    let y = y_in_x(target, n);
    let mut coeffs: Vec<LPoly<Rational>> = pf_sigma(target, n).iter().map(|s| y.scale(s)).collect();
    coeffs.push(LPoly::one());
    DiffOp { coeffs }
}

/// Residual D^n F_k + Y Σσ_j D^j F_k − L^n F_{k−n} for each graded component.
pub fn pf_residual<S: Field>(
    target: Target,
    n: usize,
    components: &[LogSeries<S>],
    lval: &QSeries<S>,
) -> Vec<LogSeries<S>> {
    let y = y_series(target, n, lval);
    let ln = lval.pow_u(n as u32);
    let sigma = pf_sigma(target, n);
    components
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut ds = vec![f.clone()];
            for _ in 0..n {
                let next = ds.last().unwrap().d();
                ds.push(next);
            }
            let mut lower = LogSeries::from_series(QSeries::exact_zero(f.var()));
            for (j, s) in sigma.iter().enumerate() {
                if !s.is_zero() {
                    lower = lower.add(&ds[j].scale(&S::from_rational(s)));
                }
            }
            let mut r = ds[n].add(&lower.mul_series(&y));
            if k >= n {
                r = r.sub(&components[k - n].mul_series(&ln));
            }
            r
        })
        .collect()
}

pub fn pf_residual_kp<S: Field>(n: usize, qorder: i64, kmax: usize) -> Vec<LogSeries<S>> {
    let i = i_function_kp::<S>(n, qorder, kmax);
    pf_residual(Target::KP, n, &i.components, &l_series(Target::KP, n, qorder))
}

pub fn pf_residual_cnzn<S: Field>(n: usize, xorder: i64, kmax: usize) -> Vec<LogSeries<S>> {
    let i = i_function_cnzn::<S>(n, xorder, kmax);
    let comps: Vec<LogSeries<S>> = i.components.into_iter().map(LogSeries::from_series).collect();
    pf_residual(Target::CnZn, n, &comps, &l_series(Target::CnZn, n, xorder))
}

/// nΦ_0, the non-log part of log Q − log q.
pub fn mirror_map<S: Field>(n: usize, order: i64) -> QSeries<S> {
    i_function_kp::<S>(n, order, 1).plain[1].clone()
}

/// Q(q) = q·exp(nΦ_0(q)).
pub fn mirror_q<S: Field>(n: usize, order: i64) -> QSeries<S> {
    mirror_map::<S>(n, order - 1).exp().expect("no constant term").shift(1)
}

/// q(Q), the compositional inverse of Q(q).
pub fn mirror_inverse<S: Field>(n: usize, order: i64) -> Result<QSeries<S>> {
    mirror_q::<S>(n, order).reversion()
}

type HKey = (Target, usize, usize, usize);

static H_CACHE: Lazy<RwLock<HashMap<HKey, LPoly<Rational>>>> = Lazy::new(|| RwLock::new(HashMap::new()));

/// ℋ_{m,j}(X) for KP, or H_{m,j}(X') for CnZn, by their recurrences.
pub fn h_poly(target: Target, n: usize, m: usize, j: usize) -> LPoly<Rational> {
    if j > m {
        return LPoly::zero();
    }
    if m == 0 {
        return LPoly::one();
    }
    let key = (target, n, m, j);
    if let Some(p) = H_CACHE.read().get(&key) {
        return p.clone();
    }
    let mut out = h_poly(target, n, m - 1, j);
    if j >= 1 {
        let prev = h_poly(target, n, m - 1, j - 1);
        // (X d/dX + (m−j)/n) prev
        let shift = rat((m - j) as i64, n as i64);
        let inner = LPoly::from_terms(prev.terms().map(|(e, c)| (e, c * (rat_int(e) + &shift))));
        let factor = match target {
            Target::KP => LPoly::from_terms([(1, Rational::one()), (0, -Rational::one())]),
            Target::CnZn => y_in_x(Target::CnZn, n).scale(&rat_int(n as i64)),
        };
        out = out.add(&factor.mul(&inner));
    }
    H_CACHE.write().insert(key, out.clone());
    out
}

/// Σ_i c_i D^i with coefficients in a polynomial ring carrying a derivation.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp<S: Field> {
    pub coeffs: Vec<LPoly<S>>,
}

impl<S: Field> DiffOp<S> {
    pub fn zero() -> Self {
        DiffOp { coeffs: vec![] }
    }

    /// The operator D^k.
    pub fn d_pow(k: usize) -> Self {
        let mut coeffs = vec![LPoly::zero(); k + 1];
        coeffs[k] = LPoly::one();
        DiffOp { coeffs }
    }

    pub fn mult(p: LPoly<S>) -> Self {
        DiffOp { coeffs: vec![p] }
    }

    fn trim(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }

    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> LPoly<S> {
        self.coeffs.get(i).cloned().unwrap_or_else(LPoly::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        DiffOp { coeffs: (0..n).map(|i| self.coeff(i).add(&o.coeff(i))).collect() }.trim()
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-S::one()))
    }

    pub fn scale(&self, c: &S) -> Self {
        DiffOp { coeffs: self.coeffs.iter().map(|p| p.scale(c)).collect() }.trim()
    }

    pub fn map_coeffs(&self, f: impl Fn(&LPoly<S>) -> LPoly<S>) -> Self {
        DiffOp { coeffs: self.coeffs.iter().map(f).collect() }.trim()
    }

    /// self ∘ o, using D∘f = f·D + D(f).
    pub fn compose(&self, o: &Self, d: &LDerivation<S>) -> Self {
        let mut out = DiffOp::zero();
        for (j, b) in o.coeffs.iter().enumerate() {
            // derivatives D^t(b)
            let mut dbs = vec![b.clone()];
            for _ in 0..self.coeffs.len() {
                let next = dbs.last().unwrap().derive(d);
                dbs.push(next);
            }
            for (i, a) in self.coeffs.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for t in 0..=i {
                    let c = a.mul(&dbs[t]).scale_rational(&binomial(i as i64, t as i64));
                    let deg = i - t + j;
                    let mut coeffs = vec![LPoly::zero(); deg + 1];
                    coeffs[deg] = c;
                    out = out.add(&DiffOp { coeffs });
                }
            }
        }
        out
    }

    pub fn apply_lpoly(&self, f: &LPoly<S>, d: &LDerivation<S>) -> LPoly<S> {
        let mut acc = LPoly::zero();
        let mut df = f.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                df = df.derive(d);
            }
            acc = acc.add(&c.mul(&df));
        }
        acc
    }

    /// Σ c_i(lval)·D^i f for L-coefficients.
    pub fn apply_series(&self, f: &QSeries<S>, lval: &QSeries<S>) -> Result<QSeries<S>> {
        let mut acc = QSeries::exact_zero(f.var());
        let mut df = f.clone();
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                df = df.d();
            }
            if !c.is_zero() {
                acc = acc.add_series(&c.eval_series(lval)?.mul_series(&df));
            }
        }
        Ok(acc)
    }

    pub fn to_rational_map<T: Field>(&self, f: impl Fn(&S) -> T + Copy) -> DiffOp<T> {
        DiffOp { coeffs: self.coeffs.iter().map(|p| p.map_scalars(f)).collect() }
    }
}

/// 𝕃_{j,k} (j-independent) with coefficients in X = L^n (KP) or X' (CnZn).
pub fn l_jk_operator_x(target: Target, n: usize, k: usize) -> Result<DiffOp<Rational>> {
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange(format!("L_(j,{k}) for n = {n}")));
    }
    let y = y_in_x(target, n);
    let h = |m: i64, j: i64| -> LPoly<Rational> {
        if m < 0 || j < 0 {
            LPoly::zero()
        } else {
            h_poly(target, n, m as usize, j as usize)
        }
    };
    let (n_i, k_i) = (n as i64, k as i64);
    let mut coeffs = Vec::with_capacity(k + 1);
    for i in 0..=k_i {
        let mut c = h(n_i - i, k_i - i).scale(&binomial(n_i, i));
        let mut inner = LPoly::zero();
        for r in 1..=(k_i - i) {
            let w = match target {
                Target::KP => {
                    stirling_unsigned(n, (n_i - r) as usize) * pow_i(n_i, (n_i - r) as u32)
                        / pow_i(n_i, (n_i - 1) as u32)
                        * binomial(n_i - r, i)
                        * rat_int(-1)
                }
                Target::CnZn => stirling_first(n, (n_i - r) as usize)? * binomial(n_i - r, i),
            };
            inner = inner.add(&h(n_i - i - r, k_i - i - r).scale(&w));
        }
        c = c.add(&y.mul(&inner));
        coeffs.push(c);
    }
    Ok(DiffOp { coeffs }.trim())
}

/// 𝕃_{j,k} with coefficients in L.
pub fn l_jk_operator(target: Target, n: usize, k: usize) -> Result<DiffOp<Rational>> {
    Ok(l_jk_operator_x(target, n, k)?.map_coeffs(|p| x_to_l(p, n)))
}

/// Reduce an X-polynomial modulo X(X − 1).
fn reduce_mod_ideal(p: &LPoly<Rational>) -> LPoly<Rational> {
    // X^e ≡ X for e ≥ 1
    let mut out = LPoly::constant(p.coeff(0));
    let mut lin = Rational::zero();
    for (e, c) in p.terms() {
        assert!(e >= 0, "X-polynomial expected");
        if e >= 1 {
            lin += c;
        }
    }
    out = out.add(&LPoly::monomial(lin, 1));
    out
}

/// C(n,k)·D(D − Y')⋯(D − (k−1)Y') in X-coefficients, with Y' = Y + y_shift.
pub fn mod_ideal_model(n: usize, k: usize, y_shift: &Rational) -> DiffOp<Rational> {
    let d = x_derivation::<Rational>(Target::KP, n);
    let y = y_in_x(Target::KP, n).add(&LPoly::constant(y_shift.clone()));
    let mut op = DiffOp::d_pow(1);
    for t in 1..k {
        let factor = DiffOp::d_pow(1).sub(&DiffOp::mult(y.scale(&rat_int(t as i64))));
        op = op.compose(&factor, &d);
    }
    op.scale(&binomial(n as i64, k as i64))
}

fn congruent_mod_ideal(a: &DiffOp<Rational>, b: &DiffOp<Rational>) -> bool {
    let m = a.coeffs.len().max(b.coeffs.len());
    (0..m).all(|i| reduce_mod_ideal(&a.coeff(i).sub(&b.coeff(i))).is_zero())
}

/// 𝕃_k ≡ C(n,k)D(D−Y)⋯(D−(k−1)Y) modulo the ideal (XY).
pub fn verify_mod_ideal(n: usize, k: usize) -> Result<bool> {
    verify_mod_ideal_with_shift(n, k, &Rational::zero())
}

pub fn verify_mod_ideal_with_shift(n: usize, k: usize, y_shift: &Rational) -> Result<bool> {
    if k < 2 || k > n {
        return Err(Error::IndexOutOfRange(format!("k = {k}")));
    }
    let lk = l_jk_operator_x(Target::KP, n, k)?;
    Ok(congruent_mod_ideal(&lk, &mod_ideal_model(n, k, y_shift)))
}

/// KP 𝕃_k rewritten through D = −D'/n and X = (−1)^{n+1}X'/n^n.
pub fn kp_operator_in_cnzn_variables(n: usize, k: usize) -> Result<DiffOp<Rational>> {
    let lk = l_jk_operator_x(Target::KP, n, k)?;
    let nn = n as i64;
    let xs = rat_int(if n % 2 == 1 { 1 } else { -1 }) / pow_i(nn, n as u32);
    Ok(DiffOp {
        coeffs: lk
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let di = num_traits::pow::pow(rat(-1, nn), i);
                p.subst_scale(&xs).scale(&di)
            })
            .collect(),
    })
}

/// 𝕃_{j,k} = ((−1)^k/n^k)·𝕃^{CnZn}_{j,k} after the change of variables; `sign` = −1 is a negative control.
pub fn operator_comparison_under_change(n: usize, k: usize, sign: i64) -> Result<bool> {
    let lhs = kp_operator_in_cnzn_variables(n, k)?;
    let factor = rat_int(sign) * num_traits::pow::pow(rat(-1, n as i64), k);
    let rhs = l_jk_operator_x(Target::CnZn, n, k)?.scale(&factor);
    Ok(lhs == rhs)
}

/// Polynomial in w = 1/z with series coefficients.
type WPoly<S> = Vec<QSeries<S>>;

fn wpoly_add<S: Field>(a: &WPoly<S>, b: &WPoly<S>) -> WPoly<S> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => x.add_series(y),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            _ => unreachable!(),
        })
        .collect()
}

/// D + L_j·w applied to a w-polynomial.
fn d_twisted<S: Field>(f: &WPoly<S>, lj: &QSeries<S>) -> WPoly<S> {
    let mut out: WPoly<S> = f.iter().map(|s| s.d()).collect();
    out.push(QSeries::exact_zero(lj.var()));
    for (a, s) in f.iter().enumerate() {
        out[a + 1] = out[a + 1].add_series(&s.mul_series(lj));
    }
    out
}

/// Both sides of 𝕃_j(f) = Σ_k (L_j w)^{n−k} 𝕃_{j,k}(f), returned as the w-coefficients of the difference.
pub fn decomposition_residual<S: Field>(
    n: usize,
    lval: &QSeries<S>,
    lj: &QSeries<S>,
    f: &QSeries<S>,
) -> Result<Vec<QSeries<S>>> {
    let y = y_series(Target::KP, n, lval);
    let sigma = pf_sigma(Target::KP, n);
    let mut powers: Vec<WPoly<S>> = vec![vec![f.clone()]];
    for _ in 0..n {
        let next = d_twisted(powers.last().unwrap(), lj);
        powers.push(next);
    }
    let mut lhs = powers[n].clone();
    let ljn = lj.pow_u(n as u32);
    while lhs.len() <= n {
        lhs.push(QSeries::exact_zero(f.var()));
    }
    lhs[n] = lhs[n].sub_series(&ljn.mul_series(f));
    for (k, s) in sigma.iter().enumerate() {
        if s.is_zero() {
            continue;
        }
        let c = y.scale(&S::from_rational(s));
        let term: WPoly<S> = powers[k].iter().map(|p| p.mul_series(&c)).collect();
        lhs = wpoly_add(&lhs, &term);
    }
    let mut rhs: WPoly<S> = vec![QSeries::exact_zero(f.var()); n + 1];
    for k in 1..=n {
        let op = l_jk_operator(Target::KP, n, k)?.to_rational_map(S::from_rational);
        let v = op.apply_series(f, lval)?;
        rhs[n - k] = rhs[n - k].add_series(&lj.pow_u((n - k) as u32).mul_series(&v));
    }
    let m = lhs.len().max(rhs.len());
    Ok((0..m)
        .map(|i| {
            let a = lhs.get(i).cloned().unwrap_or_else(|| QSeries::exact_zero(f.var()));
            let b = rhs.get(i).cloned().unwrap_or_else(|| QSeries::exact_zero(f.var()));
            a.sub_series(&b)
        })
        .collect())
}

/// Value of an L-polynomial at the origin: L = 1 for KP, L = 0 for CnZn.
pub fn origin_value<S: Field>(target: Target, p: &LPoly<S>) -> Result<S> {
    match target {
        Target::KP => p.eval_at(&S::one()).ok_or(Error::NonInvertibleL),
        Target::CnZn => {
            if p.min_exp().is_some_and(|e| e < 0) {
                return Err(Error::NonInvertibleL);
            }
            Ok(p.coeff(0))
        }
    }
}

/// Solve Σ_{r=1}^n L^{1−r}𝕃_r(P_{k+1−r}) = 0 in C[L^{±1}] with prescribed origin values.
pub fn solve_ladder<S: Field>(target: Target, n: usize, origin: &[S]) -> Result<Vec<LPoly<S>>> {
    let d = l_derivation::<S>(target, n);
    let ops: Vec<DiffOp<S>> = (1..=n)
        .map(|r| l_jk_operator(target, n, r).map(|o| o.to_rational_map(S::from_rational)))
        .collect::<Result<_>>()?;
    let inv_n = rat(1, n as i64);
    let mut out: Vec<LPoly<S>> = Vec::with_capacity(origin.len());
    for (k, c) in origin.iter().enumerate() {
        let mut rhs = LPoly::zero();
        for r in 2..=n {
            if r > k + 1 {
                break;
            }
            let v = ops[r - 1].apply_lpoly(&out[k + 1 - r], &d).shift(1 - r as i64);
            rhs = rhs.sub(&v);
        }
        let p = rhs.scale_rational(&inv_n).integrate(&d)?;
        let fix = c.sub_ref(&origin_value(target, &p)?);
        out.push(p.add(&LPoly::constant(fix)));
    }
    Ok(out)
}

/// Φ_k ∈ Q[L] from the ladder with Φ|_{q=0} = 1.
pub fn phi_asymptotic(n: usize, kmax: usize) -> Result<Vec<LPoly<Rational>>> {
    let origin: Vec<Rational> =
        (0..=kmax).map(|k| if k == 0 { Rational::one() } else { Rational::zero() }).collect();
    solve_ladder(Target::KP, n, &origin)
}

/// Ladder residual Σ_r L^{1−r}𝕃_r(P_{k+1−r}) for every k.
pub fn ladder_residual<S: Field>(target: Target, n: usize, polys: &[LPoly<S>]) -> Result<Vec<LPoly<S>>> {
    let d = l_derivation::<S>(target, n);
    let ops: Vec<DiffOp<S>> = (1..=n)
        .map(|r| l_jk_operator(target, n, r).map(|o| o.to_rational_map(S::from_rational)))
        .collect::<Result<_>>()?;
    Ok((0..polys.len())
        .map(|k| {
            let mut acc = LPoly::zero();
            for r in 1..=n.min(k + 1) {
                acc = acc.add(&ops[r - 1].apply_lpoly(&polys[k + 1 - r], &d).shift(1 - r as i64));
            }
            acc
        })
        .collect())
}
