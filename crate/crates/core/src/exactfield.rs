//! Exact scalars: rationals and elements of cyclotomic fields Q(ζ_M).
//!
//! Every scalar in the engine implements [`Field`]. Series and Laurent
//! polynomials are generic over it; `Rational` carries the purely rational
//! data (I-functions, Birkhoff series for KP) and `CycNum` everything that
//! needs ζ_n, √−1 or ρ.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::OnceCell;
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Largest supported conductor.
pub const MAX_CONDUCTOR: u32 = 128;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn rat_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

pub fn binomial(n: i64, k: i64) -> Rational {
    if k < 0 || n < 0 || k > n {
        return Rational::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= BigInt::from(n - i);
        acc /= BigInt::from(i + 1);
    }
    Rational::from_integer(acc)
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Scalar field interface shared by [`Rational`] and [`CycNum`].
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_rational(r: &Rational) -> Self;
    fn add_ref(&self, o: &Self) -> Self;
    fn sub_ref(&self, o: &Self) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn mul_rational(&self, r: &Rational) -> Self;
    fn inv(&self) -> Option<Self>;
    fn to_json(&self) -> Value;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&rat_int(v))
    }

    fn div_ref(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul_ref(&i))
    }

    fn pow(&self, e: i64) -> Option<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&b);
            }
            b = b.mul_ref(&b);
            e >>= 1;
        }
        Some(acc)
    }
}

impl Field for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn mul_rational(&self, r: &Rational) -> Self {
        self * r
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
    fn to_json(&self) -> Value {
        Value::String(rat_to_string(self))
    }
}

fn euler_phi(m: u32) -> usize {
    (1..=m).filter(|k| k.gcd(&m) == 1).count()
}

/// Integer polynomial Φ_M, low degree first.
fn cyclotomic_poly(m: u32) -> Vec<i64> {
    // x^M − 1 divided by Φ_d for every proper divisor d.
    let mut num = vec![0i64; m as usize + 1];
    num[0] = -1;
    num[m as usize] = 1;
    for d in 1..m {
        if m % d == 0 {
            num = div_monic(&num, &cyclotomic_poly(d));
        }
    }
    num
}

fn div_monic(a: &[i64], b: &[i64]) -> Vec<i64> {
    let db = b.len() - 1;
    let mut r = a.to_vec();
    let dq = a.len() - 1 - db;
    let mut q = vec![0i64; dq + 1];
    for i in (0..=dq).rev() {
        let c = r[i + db];
        q[i] = c;
        for j in 0..=db {
            r[i + j] -= c * b[j];
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

struct CycloData {
    phi: usize,
    /// `powers[e]` is x^e reduced modulo Φ_M, for 0 ≤ e < M.
    powers: Vec<Vec<i64>>,
}

impl CycloData {
    fn build(m: u32) -> Self {
        let phi = euler_phi(m);
        let poly = cyclotomic_poly(m);
        let mut powers = Vec::with_capacity(m as usize);
        let mut cur = vec![0i64; phi];
        cur[0] = 1;
        for _ in 0..m {
            powers.push(cur.clone());
            // multiply by x and reduce
            let top = cur[phi - 1];
            let mut next = vec![0i64; phi];
            next[1..phi].copy_from_slice(&cur[..(phi - 1)]);
            if top != 0 {
                for j in 0..phi {
                    next[j] -= top * poly[j];
                }
            }
            cur = next;
        }
        CycloData { phi, powers }
    }
}

static TABLES: [OnceCell<CycloData>; MAX_CONDUCTOR as usize + 1] =
    [const { OnceCell::new() }; MAX_CONDUCTOR as usize + 1];

fn table(m: u32) -> &'static CycloData {
    assert!(
        (1..=MAX_CONDUCTOR).contains(&m),
        "conductor {m} outside 1..={MAX_CONDUCTOR}"
    );
    TABLES[m as usize].get_or_init(|| CycloData::build(m))
}

pub fn check_conductor(m: u32) -> Result<()> {
    if (1..=MAX_CONDUCTOR).contains(&m) {
        Ok(())
    } else {
        Err(Error::ConductorOutOfRange(m))
    }
}

/// Default working conductor for a run at a given n: holds ζ_n, √−1 and ζ_{2n}.
pub fn working_conductor(n: usize) -> u32 {
    let n = n as u32;
    (2 * n).lcm(&4)
}

/// Element of Q(ζ_M) in the power basis modulo Φ_M, with a common denominator.
#[derive(Clone)]
pub struct CycNum {
    m: u32,
    num: Vec<BigInt>,
    den: BigInt,
}

impl CycNum {
    fn normalized(m: u32, mut num: Vec<BigInt>, mut den: BigInt) -> Self {
        if den.is_negative() {
            den = -den;
            for c in num.iter_mut() {
                *c = -std::mem::take(c);
            }
        }
        let mut g = den.clone();
        for c in &num {
            if g.is_one() {
                break;
            }
            if !c.is_zero() {
                g = g.gcd(c);
            }
        }
        if num.iter().all(|c| c.is_zero()) {
            return CycNum { m, num, den: BigInt::one() };
        }
        if !g.is_one() {
            for c in num.iter_mut() {
                *c = &*c / &g;
            }
            den /= g;
        }
        CycNum { m, num, den }
    }

    pub fn from_rational_in(m: u32, r: &Rational) -> Self {
        let phi = table(m).phi;
        let mut num = vec![BigInt::zero(); phi];
        num[0] = r.numer().clone();
        CycNum { m, num, den: r.denom().clone() }
    }

    /// Build from power-basis rational coefficients (any length; reduced mod Φ_M).
    pub fn from_coeffs(m: u32, coeffs: &[Rational]) -> Result<Self> {
        check_conductor(m)?;
        let t = table(m);
        let mut acc = CycNum::from_rational_in(m, &Rational::zero());
        for (e, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let basis = Self::basis_power(m, e as i64);
            acc = acc.add_ref(&basis.mul_rational(c));
        }
        debug_assert_eq!(acc.num.len(), t.phi);
        Ok(acc)
    }

    fn basis_power(m: u32, e: i64) -> Self {
        let t = table(m);
        let idx = e.rem_euclid(m as i64) as usize;
        let num = t.powers[idx].iter().map(|&v| BigInt::from(v)).collect();
        CycNum { m, num, den: BigInt::one() }
    }

    /// ζ_M^power in Q(ζ_M).
    pub fn root_of_unity(m: u32, power: i64) -> Self {
        Self::basis_power(m, power)
    }

    /// ζ_order^power expressed at conductor m; `order` must divide m.
    pub fn root_in(m: u32, order: u32, power: i64) -> Result<Self> {
        if order == 0 || m % order != 0 {
            return Err(Error::NonDivisibleConductor { from: order, to: m });
        }
        Ok(Self::basis_power(m, power * (m / order) as i64))
    }

    /// √−1 = ζ_4 at conductor m.
    pub fn imag_unit(m: u32) -> Result<Self> {
        Self::root_in(m, 4, 1)
    }

    pub fn conductor(&self) -> u32 {
        self.m
    }

    pub fn coeffs(&self) -> Vec<Rational> {
        self.num
            .iter()
            .map(|c| Rational::new(c.clone(), self.den.clone()))
            .collect()
    }

    pub fn is_rational(&self) -> bool {
        self.num.iter().skip(1).all(|c| c.is_zero())
    }

    pub fn as_rational(&self) -> Option<Rational> {
        if self.is_rational() {
            Some(Rational::new(self.num[0].clone(), self.den.clone()))
        } else {
            None
        }
    }

    pub fn embed(&self, m2: u32) -> Result<Self> {
        check_conductor(m2)?;
        if m2 % self.m != 0 {
            return Err(Error::NonDivisibleConductor { from: self.m, to: m2 });
        }
        if m2 == self.m {
            return Ok(self.clone());
        }
        let s = (m2 / self.m) as i64;
        let t = table(m2);
        let mut num = vec![BigInt::zero(); t.phi];
        for (j, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let idx = (j as i64 * s).rem_euclid(m2 as i64) as usize;
            for (k, &v) in t.powers[idx].iter().enumerate() {
                if v != 0 {
                    num[k] += c * v;
                }
            }
        }
        Ok(CycNum::normalized(m2, num, self.den.clone()))
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.m == b.m {
            return (a.clone(), b.clone());
        }
        let m = a.m.lcm(&b.m);
        (a.embed(m).expect("conductor"), b.embed(m).expect("conductor"))
    }

    fn add_same(&self, o: &Self, sign: i8) -> Self {
        let l = self.den.lcm(&o.den);
        let fa = &l / &self.den;
        let fb = &l / &o.den;
        let num = self
            .num
            .iter()
            .zip(&o.num)
            .map(|(a, b)| {
                if sign > 0 {
                    a * &fa + b * &fb
                } else {
                    a * &fa - b * &fb
                }
            })
            .collect();
        CycNum::normalized(self.m, num, l)
    }

    fn mul_same(&self, o: &Self) -> Self {
        if self.is_rational() {
            return o.scale_int(&self.num[0], &self.den);
        }
        if o.is_rational() {
            return self.scale_int(&o.num[0], &o.den);
        }
        let t = table(self.m);
        let phi = t.phi;
        let mut prod = vec![BigInt::zero(); 2 * phi - 1];
        for (i, a) in self.num.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.num.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let mut num: Vec<BigInt> = prod[..phi].to_vec();
        for (e, c) in prod.iter().enumerate().skip(phi) {
            if c.is_zero() {
                continue;
            }
            let row = &t.powers[e % self.m as usize];
            for (k, &v) in row.iter().enumerate() {
                if v != 0 {
                    num[k] += c * v;
                }
            }
        }
        CycNum::normalized(self.m, num, &self.den * &o.den)
    }

    fn scale_int(&self, p: &BigInt, q: &BigInt) -> Self {
        let num = self.num.iter().map(|c| c * p).collect();
        CycNum::normalized(self.m, num, &self.den * q)
    }

    fn inv_general(&self) -> Option<Self> {
        // Solve (multiplication-by-self) · u = 1 over Q.
        let phi = table(self.m).phi;
        let mut cols: Vec<Vec<Rational>> = Vec::with_capacity(phi);
        for j in 0..phi {
            let basis = Self::basis_power(self.m, j as i64);
            cols.push(self.mul_same(&basis).coeffs());
        }
        let mut a: Vec<Vec<Rational>> = (0..phi)
            .map(|r| {
                let mut row: Vec<Rational> = (0..phi).map(|c| cols[c][r].clone()).collect();
                row.push(if r == 0 { Rational::one() } else { Rational::zero() });
                row
            })
            .collect();
        for col in 0..phi {
            let piv = (col..phi).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, piv);
            let inv = a[col][col].recip();
            for c in col..=phi {
                a[col][c] = &a[col][c] * &inv;
            }
            for r in 0..phi {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for c in col..=phi {
                        let v = &a[col][c] * &f;
                        a[r][c] = &a[r][c] - v;
                    }
                }
            }
        }
        let sol: Vec<Rational> = a.iter().map(|row| row[phi].clone()).collect();
        Self::from_coeffs(self.m, &sol).ok()
    }

    /// Multiplicative order test helper: self^k.
    pub fn powi(&self, k: i64) -> Self {
        Field::pow(self, k).expect("nonzero base for negative power")
    }

    pub fn from_json(v: &Value) -> Option<Self> {
        let m = v.get("conductor")?.as_u64()? as u32;
        let coeffs: Option<Vec<Rational>> = v
            .get("coeffs")?
            .as_array()?
            .iter()
            .map(|c| c.as_str().and_then(parse_rational))
            .collect();
        Self::from_coeffs(m, &coeffs?).ok()
    }
}

/// ∏_{l=1}^{n−1}(1 − ζ_n^l), computed in Q(ζ_n).
pub fn product_one_minus_zeta(n: u32) -> Result<CycNum> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    check_conductor(n)?;
    let one = CycNum::from_rational_in(n, &Rational::one());
    let mut acc = one.clone();
    for l in 1..n {
        let z = CycNum::root_of_unity(n, l as i64);
        acc = acc.mul_ref(&one.sub_ref(&z));
    }
    Ok(acc)
}

impl PartialEq for CycNum {
    fn eq(&self, other: &Self) -> bool {
        if self.m == other.m {
            self.den == other.den && self.num == other.num
        } else {
            let (a, b) = CycNum::common(self, other);
            a.den == b.den && a.num == b.num
        }
    }
}

impl Eq for CycNum {}

impl fmt::Debug for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (j, c) in self.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cs = rat_to_string(c);
            parts.push(match j {
                0 => cs,
                1 => format!("{}*z{}", cs, self.m),
                _ => format!("{}*z{}^{}", cs, self.m, j),
            });
        }
        if parts.is_empty() {
            write!(f, "0")
        } else if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "({})", parts.join(" + "))
        }
    }
}

impl Zero for CycNum {
    fn zero() -> Self {
        CycNum { m: 1, num: vec![BigInt::zero()], den: BigInt::one() }
    }
    fn is_zero(&self) -> bool {
        self.num.iter().all(|c| c.is_zero())
    }
}

impl One for CycNum {
    fn one() -> Self {
        CycNum { m: 1, num: vec![BigInt::one()], den: BigInt::one() }
    }
}

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum { m: self.m, num: self.num.into_iter().map(|c| -c).collect(), den: self.den }
    }
}

impl Add for CycNum {
    type Output = CycNum;
    fn add(self, o: CycNum) -> CycNum {
        self.add_ref(&o)
    }
}

impl Sub for CycNum {
    type Output = CycNum;
    fn sub(self, o: CycNum) -> CycNum {
        self.sub_ref(&o)
    }
}

impl Mul for CycNum {
    type Output = CycNum;
    fn mul(self, o: CycNum) -> CycNum {
        self.mul_ref(&o)
    }
}

impl Div for CycNum {
    type Output = CycNum;
    fn div(self, o: CycNum) -> CycNum {
        self.div_ref(&o).expect("division by zero")
    }
}

impl Field for CycNum {
    fn from_rational(r: &Rational) -> Self {
        CycNum { m: 1, num: vec![r.numer().clone()], den: r.denom().clone() }
    }
    fn add_ref(&self, o: &Self) -> Self {
        if o.is_zero() && self.m >= o.m {
            return self.clone();
        }
        if self.is_zero() && o.m >= self.m {
            return o.clone();
        }
        if self.m == o.m {
            self.add_same(o, 1)
        } else {
            let (a, b) = CycNum::common(self, o);
            a.add_same(&b, 1)
        }
    }
    fn sub_ref(&self, o: &Self) -> Self {
        if self.m == o.m {
            self.add_same(o, -1)
        } else {
            let (a, b) = CycNum::common(self, o);
            a.add_same(&b, -1)
        }
    }
    fn mul_ref(&self, o: &Self) -> Self {
        if self.m == o.m {
            return self.mul_same(o);
        }
        if self.is_rational() {
            let r = o.clone();
            let m = self.m.lcm(&o.m);
            return r.embed(m).expect("conductor").scale_int(&self.num[0], &self.den);
        }
        if o.is_rational() {
            let m = self.m.lcm(&o.m);
            return self.embed(m).expect("conductor").scale_int(&o.num[0], &o.den);
        }
        let (a, b) = CycNum::common(self, o);
        a.mul_same(&b)
    }
    fn mul_rational(&self, r: &Rational) -> Self {
        self.scale_int(r.numer(), r.denom())
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.is_rational() {
            let phi = self.num.len();
            let mut num = vec![BigInt::zero(); phi];
            num[0] = self.den.clone();
            return Some(CycNum::normalized(self.m, num, self.num[0].clone()));
        }
        let nz: Vec<usize> = (0..self.num.len()).filter(|&j| !self.num[j].is_zero()).collect();
        if nz.len() == 1 {
            // c·ζ^e with e < φ: inverse is c⁻¹·ζ^{−e}
            let e = nz[0] as i64;
            let c = Rational::new(self.num[nz[0]].clone(), self.den.clone());
            return Some(CycNum::basis_power(self.m, -e).mul_rational(&c.recip()));
        }
        self.inv_general()
    }
    fn to_json(&self) -> Value {
        json!({
            "conductor": self.m,
            "coeffs": self.coeffs().iter().map(rat_to_string).collect::<Vec<_>>(),
        })
    }
}

/// Convenience constructor bundle for a fixed working conductor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cyc {
    pub m: u32,
}

impl Cyc {
    pub fn for_n(n: usize) -> Self {
        Cyc { m: working_conductor(n) }
    }
    pub fn rational(&self, r: &Rational) -> CycNum {
        CycNum::from_rational_in(self.m, r)
    }
    pub fn int(&self, v: i64) -> CycNum {
        self.rational(&rat_int(v))
    }
    /// ζ_order^power.
    pub fn root(&self, order: u32, power: i64) -> CycNum {
        CycNum::root_in(self.m, order, power).expect("order divides conductor")
    }
    pub fn i(&self) -> CycNum {
        self.root(4, 1)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
