//! Critical-point data of the Landau-Ginzburg mirror of KP^{n−1}.
//!
//! Fractional powers never appear: on the chosen branch q^{−1/n}(w_0⋯w_{n−1})^{1/n} = w_n,
//! so each check is an identity in Q(ζ)[[q]].

use num_traits::One;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactfield::{rat, rat_int, Cyc, CycNum};
use crate::formal::QSeries;
use crate::hypergeom::{l_series, Target};

type Series = QSeries<CycNum>;

#[derive(Clone, Debug)]
pub struct CriticalData {
    pub n: usize,
    pub order: i64,
    /// w_0..w_n.
    pub w: Vec<Series>,
    pub chi: Vec<CycNum>,
    pub l: Series,
}

impl CriticalData {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "order": self.order,
            "w": self.w.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
        })
    }

    /// Residuals of w_i = −(1/n)w_n − χ_i for i < n, then of w_0⋯w_{n−1} − q·w_n^n.
    pub fn residuals(&self) -> Vec<Series> {
        let n = self.n;
        let var = self.l.var();
        let mean = self.w[n].scale_rational(&rat(-1, n as i64));
        let mut out: Vec<Series> = (0..n)
            .map(|i| self.w[i].sub_series(&mean).add_series(&Series::constant(var, self.chi[i].clone())))
            .collect();
        let prod = self.w[..n].iter().fold(Series::one(var), |acc, w| acc.mul_series(w));
        let rhs = self.w[n].pow_u(n as u32).shift(1);
        out.push(prod.sub_series(&rhs).truncate(self.order));
        out
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument("n must be at least 3".into()));
    }
    Ok(())
}

/// w_n = −nL, w_i = L − χ_i with χ_i = ζ^i; errors unless the critical equations hold.
pub fn critical_point(n: usize, order: i64) -> Result<CriticalData> {
    check_n(n)?;
    let cyc = Cyc::for_n(n);
    let l: Series = l_series(Target::KP, n, order);
    let chi: Vec<CycNum> = (0..n).map(|i| cyc.root(n as u32, i as i64)).collect();
    let mut w: Vec<Series> = chi.iter().map(|c| l.sub_series(&Series::constant(l.var(), c.clone()))).collect();
    w.push(l.scale_rational(&rat_int(-(n as i64))));
    let data = CriticalData { n, order, w, chi, l };
    if let Some(i) = data.residuals().iter().position(|r| !r.zero_through(order - 1)) {
        return Err(Error::ResidualNonzero(format!("critical equation {i}")));
    }
    Ok(data)
}

/// q d/dq F(cr) = Σ χ_i 𝖣L/(L − χ_i), which must equal L.
pub fn critical_value_derivative(n: usize, order: i64) -> Result<Series> {
    let data = critical_point(n, order)?;
    let dl = data.l.d();
    let mut acc = Series::exact_zero(data.l.var());
    for i in 0..n {
        acc = acc.add_series(&dl.div_series(&data.w[i])?.scale(&data.chi[i]));
    }
    let acc = acc.truncate(order);
    if !acc.sub_series(&data.l).zero_through(order - 1) {
        return Err(Error::ResidualNonzero("q d/dq F(cr) differs from L".into()));
    }
    Ok(acc)
}

/// μ̃_0 = 𝖣⁻¹(L − 1) + log q; returns 𝖣μ̃_0 − L, which should vanish.
pub fn mu_relation_residual(n: usize, order: i64) -> Result<Series> {
    let l: Series = l_series(Target::KP, n, order);
    let mu = l.sub_series(&Series::one(l.var())).d_inv()?;
    Ok(mu.d().add_series(&Series::one(l.var())).sub_series(&l))
}

/// Hessian of F in log w_0, …, log w_{n−1}: δ_{ij}w_j + w_n/n².
pub fn hessian_matrix(data: &CriticalData) -> Vec<Vec<Series>> {
    let n = data.n;
    let off = data.w[n].scale_rational(&rat(1, (n * n) as i64));
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { data.w[j].add_series(&off) } else { off.clone() }).collect())
        .collect()
}

/// Leibniz expansion; n ≤ 5 keeps this at ≤ 120 products.
pub fn determinant(m: &[Vec<Series>]) -> Series {
    let n = m.len();
    let var = m[0][0].var();
    let mut acc = Series::exact_zero(var);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1i64;
    let add = |perm: &[usize], sign: i64, acc: &mut Series| {
        let term = (0..n).fold(Series::one(var), |t, i| t.mul_series(&m[i][perm[i]]));
        *acc = if sign > 0 { acc.add_series(&term) } else { acc.sub_series(&term) };
    };
    add(&perm, sign, &mut acc);
    // Heap's algorithm
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            add(&perm, sign, &mut acc);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    acc
}

pub fn hessian_det_at(data: &CriticalData) -> Series {
    determinant(&hessian_matrix(data)).truncate(data.order)
}

/// det of the log-coordinate Hessian at cr; errors unless it is exactly −1.
pub fn hessian_det(n: usize, order: i64) -> Result<Series> {
    let data = critical_point(n, order)?;
    let det = hessian_det_at(&data);
    let minus_one = Series::constant(data.l.var(), -CycNum::one());
    let diff = det.sub_series(&minus_one);
    if !diff.zero_through(order - 1) {
        return Err(Error::ResidualNonzero(format!("Hessian determinant differs from −1 at q^{}", diff.valuation().unwrap_or(0))));
    }
    Ok(det)
}

/// The three checks for one n; true iff all hold.
pub fn verify_all(n: usize, order: i64) -> Result<bool> {
    critical_point(n, order)?;
    critical_value_derivative(n, order)?;
    hessian_det(n, order)?;
    Ok(mu_relation_residual(n, order)?.zero_through(order - 1))
}
