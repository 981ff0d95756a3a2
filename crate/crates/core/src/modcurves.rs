//! ψ-class intersection numbers on M̄_{g,N} via the DVV (Virasoro) recursion.

use std::collections::HashMap;

use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::exactfield::{rat, rat_int, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PsiKey {
    pub g: u32,
    pub exponents: Vec<u32>,
}

impl PsiKey {
    pub fn new(g: u32, mut exponents: Vec<u32>) -> Self {
        exponents.sort_unstable();
        PsiKey { g, exponents }
    }

    pub fn is_stable(&self) -> bool {
        2 * self.g as i64 - 2 + self.exponents.len() as i64 > 0
    }

    pub fn dimension(&self) -> i64 {
        3 * self.g as i64 - 3 + self.exponents.len() as i64
    }
}

static MEMO: Lazy<RwLock<HashMap<PsiKey, Rational>>> = Lazy::new(|| RwLock::new(HashMap::new()));

fn double_factorial(m: i64) -> Rational {
    let mut acc = Rational::one();
    let mut k = m;
    while k > 1 {
        acc *= rat_int(k);
        k -= 2;
    }
    acc
}

/// ⟨τ_{a_1}⋯τ_{a_N}⟩_g.
pub fn psi_integral(key: &PsiKey) -> Result<Rational> {
    if !key.is_stable() {
        return Err(Error::UnstableInput { g: key.g as usize, points: key.exponents.len() });
    }
    Ok(psi_stable(&PsiKey::new(key.g, key.exponents.clone())))
}

pub fn psi(g: u32, exponents: &[u32]) -> Result<Rational> {
    psi_integral(&PsiKey::new(g, exponents.to_vec()))
}

fn psi_or_zero(g: u32, exponents: Vec<u32>) -> Rational {
    let key = PsiKey::new(g, exponents);
    if key.is_stable() {
        psi_stable(&key)
    } else {
        Rational::zero()
    }
}

fn psi_stable(key: &PsiKey) -> Rational {
    let total: i64 = key.exponents.iter().map(|&a| a as i64).sum();
    if total != key.dimension() {
        return Rational::zero();
    }
    if let Some(v) = MEMO.read().get(key) {
        return v.clone();
    }
    let v = dvv(key);
    MEMO.write().insert(key.clone(), v.clone());
    v
}

fn dvv(key: &PsiKey) -> Rational {
    let g = key.g;
    let mut rest = key.exponents.clone();
    let top = rest.pop().expect("stable keys are nonempty");
    if top == 0 {
        // all insertions τ_0: only ⟨τ_0³⟩_0 has the right dimension
        return Rational::one();
    }
    if g == 1 && rest.is_empty() {
        // constant term of L_0
        return rat(1, 24);
    }
    let k = top as i64 - 1;
    let mut acc = Rational::zero();
    for j in 0..rest.len() {
        let dj = rest[j] as i64;
        let mut others = rest.clone();
        others[j] = (k + dj) as u32;
        acc += double_factorial(2 * k + 2 * dj + 1) / double_factorial(2 * dj - 1) * psi_or_zero(g, others);
    }
    let half = rat(1, 2);
    for r in 0..k {
        let s = k - 1 - r;
        let w = double_factorial(2 * r + 1) * double_factorial(2 * s + 1) * &half;
        if g >= 1 {
            let mut e = rest.clone();
            e.push(r as u32);
            e.push(s as u32);
            acc += &w * psi_or_zero(g - 1, e);
        }
        let m = rest.len();
        for mask in 0u32..(1 << m) {
            let (mut left, mut right) = (vec![r as u32], vec![s as u32]);
            for (i, &d) in rest.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left.push(d);
                } else {
                    right.push(d);
                }
            }
            for g1 in 0..=g {
                let a = psi_or_zero(g1, left.clone());
                if a.is_zero() {
                    continue;
                }
                acc += &w * a * psi_or_zero(g - g1, right.clone());
            }
        }
    }
    acc / double_factorial(2 * k + 3)
}

/// String and dilaton equations for the insertion list `exponents` at genus g.
pub fn string_dilaton_check(g: u32, exponents: &[u32]) -> bool {
    let n = exponents.len() as i64;
    if 2 * g as i64 - 2 + n <= 0 {
        return true;
    }
    let mut with0 = exponents.to_vec();
    with0.push(0);
    let lhs = psi_or_zero(g, with0);
    let mut rhs = Rational::zero();
    for i in 0..exponents.len() {
        if exponents[i] > 0 {
            let mut e = exponents.to_vec();
            e[i] -= 1;
            rhs += psi_or_zero(g, e);
        }
    }
    let mut with1 = exponents.to_vec();
    with1.push(1);
    let dil = psi_or_zero(g, with1);
    let expect = rat_int(2 * g as i64 - 2 + n) * psi_or_zero(g, exponents.to_vec());
    lhs == rhs && dil == expect
}
