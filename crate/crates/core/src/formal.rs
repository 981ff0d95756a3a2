//! Truncated Laurent series in one variable, a log-graded extension, and
//! Laurent polynomials in the symbol L.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactfield::{binomial, rat, Field, Rational};

/// Truncation marker for exact (finitely supported) series.
pub const TRUNC_INF: i64 = i64::MAX / 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Q,
    X,
    Z,
}

impl Var {
    pub fn name(&self) -> &'static str {
        match self {
            Var::Q => "q",
            Var::X => "x",
            Var::Z => "z",
        }
    }
}

fn tadd(a: i64, b: i64) -> i64 {
    if a >= TRUNC_INF || b >= TRUNC_INF {
        TRUNC_INF
    } else {
        a + b
    }
}

/// Σ c_e t^e for lo ≤ e < trunc. Coefficients past the stored vector are zero.
#[derive(Clone, PartialEq)]
pub struct QSeries<S> {
    var: Var,
    lo: i64,
    coeffs: Vec<S>,
    trunc: i64,
}

impl<S: Field> QSeries<S> {
    pub fn new(var: Var, lo: i64, coeffs: Vec<S>, trunc: i64) -> Self {
        let mut s = QSeries { var, lo, coeffs, trunc: trunc.min(TRUNC_INF) };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        if self.trunc < TRUNC_INF {
            let keep = (self.trunc - self.lo).max(0) as usize;
            self.coeffs.truncate(keep);
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.lo = 0;
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
    }

    /// Power series Σ c_k t^k, known for k < trunc.
    pub fn from_coeffs(var: Var, coeffs: Vec<S>, trunc: i64) -> Self {
        Self::new(var, 0, coeffs, trunc)
    }

    pub fn zero(var: Var, trunc: i64) -> Self {
        Self::new(var, 0, vec![], trunc)
    }

    pub fn exact_zero(var: Var) -> Self {
        Self::zero(var, TRUNC_INF)
    }

    pub fn constant(var: Var, c: S) -> Self {
        Self::new(var, 0, vec![c], TRUNC_INF)
    }

    pub fn one(var: Var) -> Self {
        Self::constant(var, S::one())
    }

    pub fn monomial(var: Var, c: S, e: i64) -> Self {
        Self::new(var, e, vec![c], TRUNC_INF)
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc >= TRUNC_INF
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.lo)
        }
    }

    /// Valuation, or the truncation order for a series known to be zero so far.
    fn order_bound(&self) -> i64 {
        self.valuation().unwrap_or(self.trunc)
    }

    /// Largest stored exponent.
    pub fn degree(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.lo + self.coeffs.len() as i64 - 1)
        }
    }

    pub fn try_coeff(&self, e: i64) -> Result<S> {
        if e >= self.trunc {
            return Err(Error::BeyondTruncation { exp: e, trunc: self.trunc });
        }
        Ok(self.coeff(e))
    }

    /// Coefficient of t^e; callers stay below `trunc`.
    pub fn coeff(&self, e: i64) -> S {
        debug_assert!(e < self.trunc, "coefficient {e} beyond truncation {}", self.trunc);
        if e < self.lo {
            return S::zero();
        }
        self.coeffs.get((e - self.lo) as usize).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &S)> {
        let lo = self.lo;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (lo + i as i64, c))
    }

    pub fn truncate(&self, t: i64) -> Self {
        Self::new(self.var, self.lo, self.coeffs.clone(), self.trunc.min(t))
    }

    pub fn with_var(&self, var: Var) -> Self {
        let mut s = self.clone();
        s.var = var;
        s
    }

    /// True when all known coefficients vanish.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Known to order `n` and zero below it.
    pub fn zero_through(&self, n: i64) -> bool {
        self.trunc >= n && self.order_bound() >= n
    }

    fn check_var(&self, o: &Self) {
        assert_eq!(self.var, o.var, "series variables differ");
    }

    pub fn add_series(&self, o: &Self) -> Self {
        self.combine(o, false)
    }

    pub fn sub_series(&self, o: &Self) -> Self {
        self.combine(o, true)
    }

    fn combine(&self, o: &Self, negate: bool) -> Self {
        self.check_var(o);
        let trunc = self.trunc.min(o.trunc);
        if o.coeffs.is_empty() {
            return self.truncate(trunc);
        }
        if self.coeffs.is_empty() {
            let r = o.truncate(trunc);
            return if negate { r.neg_series() } else { r };
        }
        let lo = self.lo.min(o.lo);
        let hi = (self.lo + self.coeffs.len() as i64).max(o.lo + o.coeffs.len() as i64).min(trunc);
        let len = (hi - lo).max(0) as usize;
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let e = lo + i as i64;
            let a = self.get(e);
            let b = o.get(e);
            out.push(match (a, b) {
                (Some(a), Some(b)) => {
                    if negate {
                        a.sub_ref(b)
                    } else {
                        a.add_ref(b)
                    }
                }
                (Some(a), None) => a.clone(),
                (None, Some(b)) => {
                    if negate {
                        -b.clone()
                    } else {
                        b.clone()
                    }
                }
                (None, None) => S::zero(),
            });
        }
        Self::new(self.var, lo, out, trunc)
    }

    fn get(&self, e: i64) -> Option<&S> {
        if e < self.lo {
            None
        } else {
            self.coeffs.get((e - self.lo) as usize)
        }
    }

    pub fn neg_series(&self) -> Self {
        QSeries {
            var: self.var,
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::new(self.var, self.lo, self.coeffs.iter().map(|x| x.mul_ref(c)).collect(), self.trunc)
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        Self::new(
            self.var,
            self.lo,
            self.coeffs.iter().map(|x| x.mul_rational(r)).collect(),
            self.trunc,
        )
    }

    /// Multiply by t^k.
    pub fn shift(&self, k: i64) -> Self {
        QSeries {
            var: self.var,
            lo: if self.coeffs.is_empty() { 0 } else { self.lo + k },
            coeffs: self.coeffs.clone(),
            trunc: tadd(self.trunc, k),
        }
    }

    pub fn mul_series(&self, o: &Self) -> Self {
        self.check_var(o);
        let trunc = tadd(o.trunc, self.order_bound()).min(tadd(self.trunc, o.order_bound()));
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Self::zero(self.var, trunc);
        }
        let lo = self.lo + o.lo;
        let full = self.coeffs.len() + o.coeffs.len() - 1;
        let len = if trunc >= TRUNC_INF { full } else { ((trunc - lo).max(0) as usize).min(full) };
        let mut out = vec![S::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= len {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if !b.is_zero() {
                    out[i + j] = out[i + j].add_ref(&a.mul_ref(b));
                }
            }
        }
        Self::new(self.var, lo, out, trunc)
    }

    pub fn pow_u(&self, k: u32) -> Self {
        let mut acc = Self::one(self.var);
        for _ in 0..k {
            acc = acc.mul_series(self);
        }
        acc
    }

    /// D = t·d/dt.
    pub fn d(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.mul_rational(&Rational::from_integer((self.lo + i as i64).into())))
            .collect();
        Self::new(self.var, self.lo, coeffs, self.trunc)
    }

    pub fn d_pow(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |s, _| s.d())
    }

    /// Inverse of D on series without constant term; the result has no constant term.
    pub fn d_inv(&self) -> Result<Self> {
        if self.trunc > 0 && !self.coeff(0).is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let e = self.lo + i as i64;
                if e == 0 {
                    S::zero()
                } else {
                    c.mul_rational(&rat(1, e))
                }
            })
            .collect();
        Ok(Self::new(self.var, self.lo, coeffs, self.trunc))
    }

    /// Constant term split off: (f(0), f − f(0)).
    pub fn split_constant(&self) -> (S, Self) {
        let c = if self.trunc > 0 { self.coeff(0) } else { S::zero() };
        let rest = self.sub_series(&Self::constant(self.var, c.clone()));
        (c, rest)
    }

    pub fn inv(&self) -> Result<Self> {
        let v = self
            .valuation()
            .ok_or_else(|| Error::DivisionByZeroSeries("series vanishes to its truncation".into()))?;
        let u0 = self.coeffs[0].clone();
        let u0inv = u0.inv().expect("nonzero leading coefficient");
        if self.trunc >= TRUNC_INF {
            if self.coeffs.len() == 1 {
                return Ok(Self::monomial(self.var, u0inv, -v));
            }
            return Err(Error::InvalidArgument(
                "inverse of an exact polynomial needs a truncation".into(),
            ));
        }
        let n = (self.trunc - v) as usize;
        let mut w: Vec<S> = Vec::with_capacity(n);
        w.push(u0inv.clone());
        for k in 1..n {
            let mut acc = S::zero();
            for j in 1..=k.min(self.coeffs.len() - 1) {
                let uj = &self.coeffs[j];
                if !uj.is_zero() {
                    acc = acc.add_ref(&uj.mul_ref(&w[k - j]));
                }
            }
            w.push(-acc.mul_ref(&u0inv));
        }
        Ok(Self::new(self.var, -v, w, self.trunc - 2 * v))
    }

    pub fn div_series(&self, o: &Self) -> Result<Self> {
        if o.is_exact() && o.coeffs.len() == 1 {
            let c = o.coeffs[0].inv().expect("nonzero");
            return Ok(self.scale(&c).shift(-o.lo));
        }
        Ok(self.mul_series(&o.inv()?))
    }

    /// Assert that the valuation is at least `min` (an expected cancellation).
    pub fn require_valuation(&self, min: i64, what: &str) -> Result<()> {
        if self.order_bound() < min {
            return Err(Error::DivisibilityViolation(format!(
                "{what}: valuation {} below {min}",
                self.order_bound()
            )));
        }
        Ok(())
    }

    fn require_finite(&self, what: &str) -> Result<()> {
        if self.is_exact() {
            return Err(Error::InvalidArgument(format!("{what} needs a finite truncation")));
        }
        Ok(())
    }

    pub fn exp(&self) -> Result<Self> {
        if self.order_bound() < 1 {
            return Err(Error::BadConstantTerm("exp"));
        }
        self.require_finite("exp")?;
        let n = self.trunc.max(0) as usize;
        let mut g: Vec<S> = Vec::with_capacity(n);
        if n > 0 {
            g.push(S::one());
        }
        for k in 1..n {
            let mut acc = S::zero();
            for j in 1..=k {
                let fj = self.coeff(j as i64);
                if !fj.is_zero() {
                    acc = acc.add_ref(&fj.mul_rational(&Rational::from_integer(j.into())).mul_ref(&g[k - j]));
                }
            }
            g.push(acc.mul_rational(&rat(1, k as i64)));
        }
        Ok(Self::from_coeffs(self.var, g, self.trunc))
    }

    pub fn log(&self) -> Result<Self> {
        if self.trunc < 1 || self.order_bound() < 0 || !self.coeff(0).is_one() {
            return Err(Error::BadConstantTerm("log"));
        }
        let q = self.d().div_series(self)?;
        q.d_inv()
    }

    /// f^α for f with constant term 1.
    pub fn pow_rational(&self, alpha: &Rational) -> Result<Self> {
        if self.trunc < 1 || self.order_bound() < 0 || !self.coeff(0).is_one() {
            return Err(Error::BadConstantTerm("rational power"));
        }
        self.require_finite("rational power")?;
        let n = self.trunc as usize;
        let mut g: Vec<S> = Vec::with_capacity(n);
        g.push(S::one());
        for k in 1..n {
            let mut acc = S::zero();
            for j in 1..=k {
                let fj = self.coeff(j as i64);
                if fj.is_zero() {
                    continue;
                }
                let w = alpha * Rational::from_integer((j as i64).into())
                    - Rational::from_integer(((k - j) as i64).into());
                acc = acc.add_ref(&fj.mul_ref(&g[k - j]).mul_rational(&w));
            }
            g.push(acc.mul_rational(&rat(1, k as i64)));
        }
        Ok(Self::from_coeffs(self.var, g, self.trunc))
    }

    /// t → c·t.
    pub fn subst_scale(&self, c: &S) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, x)| x.mul_ref(&c.pow(self.lo + i as i64).expect("invertible scale")))
            .collect();
        Self::new(self.var, self.lo, coeffs, self.trunc)
    }

    /// self(inner) for a power series self and inner of valuation ≥ 1.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.order_bound() < 0 {
            return Err(Error::InvalidArgument("compose needs a power series".into()));
        }
        let v = inner.order_bound();
        if v < 1 {
            return Err(Error::InvalidArgument("inner series must vanish at 0".into()));
        }
        let trunc = if self.is_exact() { inner.trunc } else { inner.trunc.min(self.trunc.saturating_mul(v)) };
        let top = self.degree().unwrap_or(0).min(trunc);
        let mut acc = Self::zero(inner.var, trunc);
        for e in (0..=top).rev() {
            acc = acc.mul_series(inner).add_series(&Self::constant(inner.var, self.coeff(e)));
        }
        Ok(acc.truncate(trunc))
    }

    /// Compositional inverse of t + O(t²).
    pub fn reversion(&self) -> Result<Self> {
        if self.order_bound() != 1 || !self.coeff(1).is_one() {
            return Err(Error::InvalidArgument("reversion needs t + O(t^2)".into()));
        }
        self.require_finite("reversion")?;
        let t = Self::monomial(self.var, S::one(), 1).truncate(self.trunc);
        let mut g = t.clone();
        for _ in 0..self.trunc {
            let err = self.compose(&g)?.sub_series(&t);
            if err.zero_through(self.trunc) {
                break;
            }
            g = g.sub_series(&err);
        }
        Ok(g)
    }

    pub fn map_scalars<T: Field>(&self, f: impl Fn(&S) -> T) -> QSeries<T> {
        QSeries::new(self.var, self.lo, self.coeffs.iter().map(f).collect(), self.trunc)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "var": self.var.name(),
            "lowest": self.valuation().unwrap_or(0),
            "trunc": if self.is_exact() { Value::Null } else { json!(self.trunc) },
            "coeffs": self.terms().map(|(e, c)| json!([e, c.to_json()])).collect::<Vec<_>>(),
        })
    }
}

impl<S: Field> fmt::Debug for QSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<S: Field> fmt::Display for QSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.var.name();
        let parts: Vec<String> = self.terms().map(|(e, c)| format!("{c}*{v}^{e}")).collect();
        let body = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        if self.is_exact() {
            write!(f, "{body}")
        } else {
            write!(f, "{body} + O({v}^{})", self.trunc)
        }
    }
}

impl<S: Field> Add for &QSeries<S> {
    type Output = QSeries<S>;
    fn add(self, o: &QSeries<S>) -> QSeries<S> {
        self.add_series(o)
    }
}

impl<S: Field> Sub for &QSeries<S> {
    type Output = QSeries<S>;
    fn sub(self, o: &QSeries<S>) -> QSeries<S> {
        self.sub_series(o)
    }
}

impl<S: Field> Mul for &QSeries<S> {
    type Output = QSeries<S>;
    fn mul(self, o: &QSeries<S>) -> QSeries<S> {
        self.mul_series(o)
    }
}

impl<S: Field> Neg for &QSeries<S> {
    type Output = QSeries<S>;
    fn neg(self) -> QSeries<S> {
        self.neg_series()
    }
}

/// Σ_a ℓ^a f_a with ℓ = log t, D ℓ = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LogSeries<S: Field> {
    parts: Vec<QSeries<S>>,
}

impl<S: Field> LogSeries<S> {
    pub fn new(parts: Vec<QSeries<S>>) -> Self {
        assert!(!parts.is_empty());
        let mut s = LogSeries { parts };
        s.trim();
        s
    }

    pub fn from_series(s: QSeries<S>) -> Self {
        LogSeries { parts: vec![s] }
    }

    fn trim(&mut self) {
        while self.parts.len() > 1 && self.parts.last().is_some_and(|p| p.is_zero()) {
            self.parts.pop();
        }
    }

    pub fn var(&self) -> Var {
        self.parts[0].var()
    }

    pub fn trunc(&self) -> i64 {
        self.parts.iter().map(|p| p.trunc()).min().unwrap()
    }

    pub fn log_degree(&self) -> usize {
        self.parts.len() - 1
    }

    /// Coefficient of ℓ^a.
    pub fn part(&self, a: usize) -> QSeries<S> {
        self.parts.get(a).cloned().unwrap_or_else(|| QSeries::zero(self.var(), self.trunc()))
    }

    pub fn parts(&self) -> &[QSeries<S>] {
        &self.parts
    }

    /// The ℓ^0 part, after checking every higher log part vanishes.
    pub fn log_free(&self, what: &str) -> Result<QSeries<S>> {
        for (a, p) in self.parts.iter().enumerate().skip(1) {
            if !p.is_zero() {
                return Err(Error::DivisibilityViolation(format!("{what}: log^{a} part survives")));
            }
        }
        Ok(self.parts[0].truncate(self.trunc()))
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.parts.len().max(o.parts.len());
        Self::new((0..n).map(|a| self.part(a).add_series(&o.part(a))).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.parts.len().max(o.parts.len());
        Self::new((0..n).map(|a| self.part(a).sub_series(&o.part(a))).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.parts.len() + o.parts.len() - 1;
        let mut out: Vec<QSeries<S>> = (0..n).map(|_| QSeries::exact_zero(self.var())).collect();
        for (a, p) in self.parts.iter().enumerate() {
            for (b, r) in o.parts.iter().enumerate() {
                out[a + b] = out[a + b].add_series(&p.mul_series(r));
            }
        }
        let t = self.trunc().min(o.trunc());
        Self::new(out.into_iter().map(|s| s.truncate(t)).collect())
    }

    pub fn mul_series(&self, s: &QSeries<S>) -> Self {
        Self::new(self.parts.iter().map(|p| p.mul_series(s)).collect())
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::new(self.parts.iter().map(|p| p.scale(c)).collect())
    }

    pub fn d(&self) -> Self {
        let n = self.parts.len();
        Self::new(
            (0..n)
                .map(|a| {
                    let mut s = self.parts[a].d();
                    if a + 1 < n {
                        s = s.add_series(&self.parts[a + 1].scale_rational(&rat((a + 1) as i64, 1)));
                    }
                    s
                })
                .collect(),
        )
    }

    /// Inverse of D normalized by a vanishing ℓ^0 constant term.
    pub fn d_inv(&self) -> Result<Self> {
        let top = self.parts.len();
        let var = self.var();
        let t = self.trunc();
        // g_b(0) = h_{b−1}(0)/b; D g_b = (h_b − (b+1) g_{b+1}) minus its constant.
        let mut g: Vec<QSeries<S>> = vec![QSeries::zero(var, t); top + 1];
        for b in (0..=top).rev() {
            let mut rhs = self.part(b);
            if b < top {
                rhs = rhs.sub_series(&g[b + 1].scale_rational(&rat((b + 1) as i64, 1)));
            }
            let (c, nc) = rhs.split_constant();
            if b == top {
                debug_assert!(nc.is_zero() && c.is_zero());
            }
            let _ = c;
            let mut gb = nc.d_inv()?;
            if b >= 1 {
                let h0 = self.part(b - 1);
                let c0 = if h0.trunc() > 0 { h0.coeff(0) } else { S::zero() };
                gb = gb.add_series(&QSeries::constant(var, c0.mul_rational(&rat(1, b as i64))));
            }
            g[b] = gb.truncate(t);
        }
        Ok(Self::new(g))
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(|p| p.is_zero())
    }
}

/// Derivation on C[L^{±1}] with D(L) = αL + βL^{n+1}.
#[derive(Clone, Debug, PartialEq)]
pub struct LDerivation<S> {
    pub n: usize,
    pub alpha: S,
    pub beta: S,
}

/// Laurent polynomial in L.
#[derive(Clone, PartialEq, Default)]
pub struct LPoly<S> {
    terms: BTreeMap<i64, S>,
}

impl<S: Field> LPoly<S> {
    pub fn zero() -> Self {
        LPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(S::one())
    }

    pub fn constant(c: S) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: S, e: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        LPoly { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (i64, S)>) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, &c);
        }
        p
    }

    fn add_term(&mut self, e: i64, c: &S) {
        if c.is_zero() {
            return;
        }
        let v = match self.terms.get(&e) {
            Some(old) => old.add_ref(c),
            None => c.clone(),
        };
        if v.is_zero() {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, v);
        }
    }

    pub fn coeff(&self, e: i64) -> S {
        self.terms.get(&e).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &S)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(*e, c);
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        LPoly { terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect() }
    }

    pub fn scale(&self, c: &S) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, x)| (*e, x.mul_ref(c))))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, x)| (*e, x.mul_rational(r))))
    }

    pub fn shift(&self, k: i64) -> Self {
        LPoly { terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                r.add_term(a + b, &x.mul_ref(y));
            }
        }
        r
    }

    pub fn pow_u(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// L → c·L.
    pub fn subst_scale(&self, c: &S) -> Self {
        Self::from_terms(
            self.terms.iter().map(|(e, x)| (*e, x.mul_ref(&c.pow(*e).expect("invertible scale")))),
        )
    }

    pub fn eval_at(&self, l: &S) -> Option<S> {
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            acc = acc.add_ref(&c.mul_ref(&l.pow(*e)?));
        }
        Some(acc)
    }

    pub fn eval_series(&self, lval: &QSeries<S>) -> Result<QSeries<S>> {
        let var = lval.var();
        let mut acc = QSeries::exact_zero(var);
        if self.is_zero() {
            return Ok(acc.truncate(lval.trunc()));
        }
        let lo = self.min_exp().unwrap();
        let hi = self.max_exp().unwrap();
        let linv = if lo < 0 {
            Some(lval.inv().map_err(|_| Error::NonInvertibleL)?)
        } else {
            None
        };
        if lo < 0 {
            let li = linv.as_ref().unwrap();
            let mut p = QSeries::one(var);
            for e in (lo..0).rev() {
                p = p.mul_series(li);
                let c = self.coeff(e);
                if !c.is_zero() {
                    acc = acc.add_series(&p.scale(&c));
                }
            }
        }
        let mut p = QSeries::one(var);
        for e in 0..=hi {
            if e > 0 {
                p = p.mul_series(lval);
            }
            let c = self.coeff(e);
            if e >= lo && !c.is_zero() {
                acc = acc.add_series(&p.scale(&c));
            }
        }
        Ok(acc.truncate(lval.trunc()))
    }

    pub fn derive(&self, d: &LDerivation<S>) -> Self {
        let mut r = Self::zero();
        for (e, c) in &self.terms {
            if *e == 0 {
                continue;
            }
            let ce = c.mul_rational(&rat(*e, 1));
            r.add_term(*e, &ce.mul_ref(&d.alpha));
            r.add_term(e + d.n as i64, &ce.mul_ref(&d.beta));
        }
        r
    }

    /// The solution of D p = self with vanishing constant term.
    pub fn integrate(&self, d: &LDerivation<S>) -> Result<Self> {
        let mut rem = self.clone();
        let mut out = Self::zero();
        let Some(top) = self.max_exp() else { return Ok(out) };
        let n = d.n as i64;
        let alpha_inv = d.alpha.inv();
        while let Some(m) = rem.min_exp() {
            if m == 0 || m > top || alpha_inv.is_none() {
                return Err(Error::ResidualNonzero(format!(
                    "L^{m} term not in the image of D"
                )));
            }
            let c = rem.coeff(m).mul_rational(&rat(1, m)).mul_ref(alpha_inv.as_ref().unwrap());
            let term = Self::monomial(c.clone(), m);
            rem = rem.sub(&term.derive(d));
            out.add_term(m, &c);
            debug_assert!(rem.coeff(m).is_zero());
            let _ = n;
        }
        Ok(out)
    }

    pub fn map_scalars<T: Field>(&self, f: impl Fn(&S) -> T) -> LPoly<T> {
        LPoly::from_terms(self.terms.iter().map(|(e, c)| (*e, f(c))))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "var": "L",
            "coeffs": self.terms.iter().map(|(e, c)| json!([e, c.to_json()])).collect::<Vec<_>>(),
        })
    }
}

impl<S: Field> fmt::Debug for LPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<S: Field> fmt::Display for LPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| match e {
                0 => format!("{c}"),
                1 => format!("{c}*L"),
                _ => format!("{c}*L^{e}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Σ_k P_k z^k with LPoly coefficients, known for k < trunc.
#[derive(Clone, Debug, PartialEq)]
pub struct ZSeriesOfLPoly<S: Field> {
    pub coeffs: Vec<LPoly<S>>,
}

impl<S: Field> ZSeriesOfLPoly<S> {
    pub fn trunc(&self) -> usize {
        self.coeffs.len()
    }

    /// Constant term in L of every z-coefficient, as a z-series.
    pub fn at_l_zero(&self) -> QSeries<S> {
        QSeries::from_coeffs(
            Var::Z,
            self.coeffs.iter().map(|p| p.coeff(0)).collect(),
            self.coeffs.len() as i64,
        )
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.coeffs.iter().map(|p| p.to_json()).collect())
    }
}

/// Find p ∈ C[L] of degree ≤ max_deg with p(lval) = s through trunc(s).
pub fn fit_lpoly<S: Field>(
    s: &QSeries<S>,
    lval: &QSeries<S>,
    max_deg: usize,
    guard: usize,
) -> Result<LPoly<S>> {
    let need = (max_deg + 1 + guard) as i64;
    let t = s.trunc().min(lval.trunc());
    if t < need {
        return Err(Error::NoPolynomialFit(format!(
            "known to order {t}, fit needs {need}"
        )));
    }
    if s.valuation().is_some_and(|v| v < 0) {
        return Err(Error::NoPolynomialFit("negative powers in target".into()));
    }
    let l0 = lval.coeff(0);
    let u = lval.sub_series(&QSeries::constant(lval.var(), l0.clone()));
    if u.valuation() != Some(1) {
        return Err(Error::NoPolynomialFit("L − L(0) must have valuation 1".into()));
    }
    let u1inv = u.coeff(1).inv().expect("nonzero");
    let mut rem = s.truncate(t);
    let mut upow = QSeries::one(lval.var());
    let mut cs: Vec<S> = Vec::with_capacity(max_deg + 1);
    for m in 0..=max_deg {
        if m > 0 {
            upow = upow.mul_series(&u).truncate(t);
        }
        let c = rem.coeff(m as i64).mul_ref(&u1inv.pow(m as i64).unwrap());
        if !c.is_zero() {
            rem = rem.sub_series(&upow.scale(&c));
        }
        cs.push(c);
    }
    if !rem.zero_through(t) {
        return Err(Error::NoPolynomialFit(format!(
            "residual nonzero at order {}",
            rem.valuation().unwrap_or(t)
        )));
    }
    // Σ c_m (L − L0)^m in powers of L.
    let mut out = LPoly::zero();
    for (m, c) in cs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for i in 0..=m {
            let b = binomial(m as i64, i as i64);
            let sign_pow = l0.pow((m - i) as i64).unwrap();
            let mut coef = c.mul_ref(&sign_pow).mul_rational(&b);
            if (m - i) % 2 == 1 {
                coef = -coef;
            }
            out.add_term(i as i64, &coef);
        }
    }
    Ok(out)
}

/// Derivation helpers shared by both targets.
pub fn kp_derivation<S: Field>(n: usize) -> LDerivation<S> {
    LDerivation {
        n,
        alpha: S::from_rational(&rat(-1, n as i64)),
        beta: S::from_rational(&rat(1, n as i64)),
    }
}

pub fn cnzn_derivation<S: Field>(n: usize) -> LDerivation<S> {
    let nn = Rational::from_integer(num_bigint::BigInt::from(n).pow(n as u32));
    let sign = if n % 2 == 0 { Rational::one() } else { -Rational::one() };
    LDerivation { n, alpha: S::one(), beta: S::from_rational(&(sign / nn)) }
}

impl<S: Field> Zero for LPoly<S> {
    fn zero() -> Self {
        LPoly::zero()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<S: Field> Add for LPoly<S> {
    type Output = LPoly<S>;
    fn add(self, o: Self) -> Self {
        LPoly::add(&self, &o)
    }
}
