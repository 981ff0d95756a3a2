//! Stable graphs, their decorated contributions for both targets, and the
//! Υ-evaluation used to compare the two potentials graph by graph.

use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactfield::{factorial, rat, rat_int, Cyc, CycNum, Field, Rational};
use crate::formal::{fit_lpoly, LPoly, QSeries, Var};
use crate::frobenius::{inv_index, FrobeniusData};
use crate::hypergeom::{l_series, Target};
use crate::modcurves::psi;
use crate::rmatrix::{
    chain_rows, check_rho, ladder_table, solve_flatness_with, Normalization, PTable,
};

pub type Series = QSeries<CycNum>;
pub type Poly = LPoly<CycNum>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StableGraph {
    pub genera: Vec<u32>,
    /// Edges as vertex pairs (u ≤ v); u = v is a self-loop.
    pub edges: Vec<(usize, usize)>,
    /// legs[l] = vertex carrying leg l.
    pub legs: Vec<usize>,
    pub aut: u64,
}

impl StableGraph {
    pub fn vertex_count(&self) -> usize {
        self.genera.len()
    }

    pub fn valence(&self, v: usize) -> usize {
        let e: usize = self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum();
        e + self.legs.iter().filter(|&&w| w == v).count()
    }

    pub fn h1(&self) -> usize {
        self.edges.len() + 1 - self.vertex_count()
    }

    pub fn genus(&self) -> usize {
        self.h1() + self.genera.iter().map(|&g| g as usize).sum::<usize>()
    }

    pub fn dim(&self, v: usize) -> i64 {
        3 * self.genera[v] as i64 - 3 + self.valence(v) as i64
    }

    pub fn to_json(&self) -> Value {
        json!({
            "genera": self.genera,
            "edges": self.edges.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>(),
            "legs": self.legs,
            "aut": self.aut,
        })
    }
}

type Shape = (Vec<u32>, Vec<(usize, usize)>, Vec<usize>);

fn permuted(shape: &Shape, perm: &[usize]) -> Shape {
    let v = shape.0.len();
    let mut genera = vec![0; v];
    for (old, &new) in perm.iter().enumerate() {
        genera[new] = shape.0[old];
    }
    let mut edges: Vec<(usize, usize)> = shape
        .1
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (perm[a], perm[b]);
            (x.min(y), x.max(y))
        })
        .collect();
    edges.sort_unstable();
    let legs = shape.2.iter().map(|&w| perm[w]).collect();
    (genera, edges, legs)
}

fn permutations(v: usize) -> Vec<Vec<usize>> {
    if v == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(v - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, v - 1);
            out.push(q);
        }
    }
    out
}

fn connected(v: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; v];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(x) = stack.pop() {
        for &(a, b) in edges {
            for (s, t) in [(a, b), (b, a)] {
                if s == x && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn multisets<T: Clone>(items: &[T], k: usize, start: usize, acc: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
    if acc.len() == k {
        out.push(acc.clone());
        return;
    }
    for i in start..items.len() {
        acc.push(items[i].clone());
        multisets(items, k, i, acc, out);
        acc.pop();
    }
}

/// All stable graphs of genus g with m labeled legs, up to isomorphism.
pub fn enumerate_stable_graphs(g: usize, m: usize) -> Result<Vec<StableGraph>> {
    if 2 * g as i64 - 2 + m as i64 <= 0 {
        return Err(Error::UnstableRange { g, m });
    }
    let mut found: BTreeMap<Shape, u64> = BTreeMap::new();
    let vmax = (2 * g + m - 2).max(1);
    for v in 1..=vmax {
        let perms = permutations(v);
        let pairs: Vec<(usize, usize)> = (0..v).flat_map(|a| (a..v).map(move |b| (a, b))).collect();
        for h1 in 0..=g {
            let e = v - 1 + h1;
            let mut edge_sets = Vec::new();
            multisets(&pairs, e, 0, &mut Vec::new(), &mut edge_sets);
            for genera in compositions((g - h1) as u32, v) {
                for edges in &edge_sets {
                    if !connected(v, edges) {
                        continue;
                    }
                    for code in 0..v.pow(m as u32) {
                        let legs: Vec<usize> = (0..m).map(|l| code / v.pow(l as u32) % v).collect();
                        let shape: Shape = (genera.clone(), edges.clone(), legs);
                        let stable = (0..v).all(|x| {
                            let val = edges.iter().map(|&(a, b)| (a == x) as i64 + (b == x) as i64).sum::<i64>()
                                + shape.2.iter().filter(|&&w| w == x).count() as i64;
                            2 * genera[x] as i64 - 2 + val > 0
                        });
                        if !stable {
                            continue;
                        }
                        let canon = perms.iter().map(|p| permuted(&shape, p)).min().expect("nonempty");
                        if found.contains_key(&canon) {
                            continue;
                        }
                        let sym = perms.iter().filter(|p| permuted(&canon, p) == canon).count() as u64;
                        let mut mult: BTreeMap<(usize, usize), u64> = BTreeMap::new();
                        for &ed in &canon.1 {
                            *mult.entry(ed).or_default() += 1;
                        }
                        let mut aut = sym;
                        for (&(a, b), &k) in &mult {
                            let f = (1..=k).product::<u64>();
                            aut *= if a == b { f * 2u64.pow(k as u32) } else { f };
                        }
                        found.insert(canon, aut);
                    }
                }
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|((genera, edges, legs), aut)| StableGraph { genera, edges, legs, aut })
        .collect())
}

/// The n^{|V|} vertex decorations p: V → {0..n−1}, lexicographically.
pub fn decorations(graph: &StableGraph, n: usize) -> Vec<Vec<usize>> {
    let v = graph.vertex_count();
    (0..n.pow(v as u32)).map(|code| (0..v).map(|i| code / n.pow((v - 1 - i) as u32) % n).collect()).collect()
}

/// Everything a contribution needs: P̃^k_{i,j}, K_i/L^i, the branch g(e,e)^{−1/2}, and
/// which target's sign conventions apply.
#[derive(Clone, Debug)]
pub struct Generators {
    pub formula: Target,
    pub n: usize,
    pub var: Var,
    pub order: i64,
    /// p[k][i][j] = P̃^k_{i,j}.
    pub p: Vec<Vec<Vec<Series>>>,
    pub l: Series,
    /// K_0..K_n.
    pub k: Vec<Series>,
    /// kl[i] = K_i/L^i.
    pub kl: Vec<Series>,
    pub branch: CycNum,
    pub label: String,
}

impl Generators {
    pub fn kmax(&self) -> usize {
        self.p.len() - 1
    }

    pub fn p(&self, k: usize, i: usize, j: usize) -> Result<&Series> {
        self.p.get(k).map(|lvl| &lvl[i][j]).ok_or(Error::AskLargerKmax { need: k, have: self.kmax() })
    }

    fn zeta(&self, e: i64) -> CycNum {
        Cyc::for_n(self.n).root(self.n as u32, e)
    }

    fn sign(&self, e: i64) -> Rational {
        let odd = match self.formula {
            Target::KP => (e + 1) % 2 != 0,
            Target::CnZn => e % 2 != 0,
        };
        let s = if odd { -1 } else { 1 };
        rat(s, self.n as i64)
    }

    /// Table built from a solved PTable and its Frobenius data.
    pub fn from_table(frob: &FrobeniusData<CycNum>, pt: &PTable, order: i64) -> Result<Self> {
        let n = frob.n;
        let kl = (0..n).map(|i| frob.k_over_l(i).map(|s| s.truncate(order))).collect::<Result<_>>()?;
        let p = pt
            .series
            .iter()
            .map(|lvl| lvl.iter().map(|row| row.iter().map(|s| s.truncate(order)).collect()).collect())
            .collect();
        Ok(Generators {
            formula: frob.target,
            n,
            var: frob.var(),
            order,
            p,
            l: frob.l.truncate(order),
            k: frob.k.iter().take(n + 1).map(|s| s.truncate(order)).collect(),
            kl,
            branch: frob.branch(),
            label: frob.target.name().to_string(),
        })
    }

    pub fn new(target: Target, n: usize, kmax: usize, order: i64) -> Result<Self> {
        let frob = FrobeniusData::<CycNum>::new(target, n, order + kmax as i64 + 2)?;
        let pt = solve_flatness_with(&frob, kmax, order, Normalization::True, None)?;
        Self::from_table(&frob, &pt, order)
    }

    /// Υ∘KP: the KP formulas evaluated on L = −(ρ/n)L', C_i = −(ρ/n)C'_i, 𝖣 = −(1/n)𝖣',
    /// with P̃ rebuilt from the KP row-0 polynomials and the KP chain.
    pub fn upsilon(cz: &FrobeniusData<CycNum>, kmax: usize, order: i64, rho: &CycNum) -> Result<Self> {
        let n = cz.n;
        check_rho(n, rho)?;
        if cz.target != Target::CnZn {
            return Err(Error::InvalidArgument("Υ needs CnZn Frobenius data".into()));
        }
        let s = rho.mul_rational(&rat(-1, n as i64));
        let l = cz.l.scale(&s);
        let c: Vec<Series> = cz.c.iter().take(n + 1).enumerate().map(|(i, ci)| if i == 0 { ci.clone() } else { ci.scale(&s) }).collect();
        let d = |f: &Series| f.d().scale_rational(&rat(-1, n as i64));
        let y = d(&l).div_series(&l)?;
        let linv = l.inv()?;
        let mut k = vec![Series::one(cz.var())];
        for i in 1..=n {
            let next = k[i - 1].mul_series(&c[i]);
            k.push(next);
        }
        let mut a = vec![Series::exact_zero(cz.var())];
        let mut xsum = Series::exact_zero(cz.var());
        for i in 1..=n {
            xsum = xsum.add_series(&d(&c[i]).div_series(&c[i])?);
            let num = y.scale_rational(&rat_int(i as i64)).sub_series(&xsum);
            a.push(num.mul_series(&linv));
        }
        let kp = ladder_table(Target::KP, n, kmax, Normalization::True)?;
        let mut rows_by_j = Vec::with_capacity(n);
        for j in 0..n {
            let row0: Vec<Series> = (0..=kmax).map(|lvl| kp.polys[lvl][j].eval_series(&l)).collect::<Result<_>>()?;
            let (rows, closure) = chain_rows(n, &row0, &l, &a, &d)?;
            if let Some(pos) = closure.iter().position(|r| !r.truncate(order).is_zero()) {
                return Err(Error::ClosureViolation { k: pos + 1 });
            }
            rows_by_j.push(rows);
        }
        let mut p = vec![vec![Vec::with_capacity(n); n]; kmax + 1];
        for rows in rows_by_j {
            for (lvl, row) in rows.into_iter().enumerate() {
                for (i, ser) in row.into_iter().enumerate() {
                    if ser.trunc() < order {
                        return Err(Error::DivisibilityViolation(format!("Υ(P̃^{lvl}_{i}) known only to order {}", ser.trunc())));
                    }
                    p[lvl][i].push(ser.truncate(order));
                }
            }
        }
        let kl = (0..n).map(|i| k[i].mul_series(&linv.pow_u(i as u32)).truncate(order)).collect();
        let branch = Cyc::for_n(n).i().mul_rational(&rat(-(n as i64), 1));
        let l = l.truncate(order);
        let k = k.iter().map(|s| s.truncate(order)).collect();
        Ok(Generators { formula: Target::KP, n, var: cz.var(), order, p, l, k, kl, branch, label: "Upsilon(KP)".into() })
    }

    /// T-insertion coefficient T_{p,i} without its P̃ factor.
    fn t_coeff(&self, p: usize, i: usize) -> CycNum {
        let e = i as i64;
        self.zeta(-((i as i64 - 1) * p as i64)).mul_rational(&self.sign(e))
    }
}

/// Vertex contribution as Σ coefficient·∏P̃^{level}_{0,p}; each entry lists the P̃ levels.
pub fn vertex_monomials(gen: &Generators, gv: u32, flags: &[u32], p: usize) -> Result<Vec<(CycNum, Vec<usize>)>> {
    let nv = flags.len() as i64;
    let dim = 3 * gv as i64 - 3 + nv;
    let fsum: i64 = flags.iter().map(|&f| f as i64).sum();
    let mut out = Vec::new();
    if 2 * gv as i64 - 2 + nv <= 0 || fsum > dim {
        return Ok(out);
    }
    for k in 0..=(dim - fsum) as usize {
        let total = (dim + k as i64 - fsum) as u32;
        if total < 2 * k as u32 {
            continue;
        }
        let weight = gen.branch.powi(2 * gv as i64 - 2 + nv + k as i64).mul_rational(&Rational::new(1.into(), factorial(k as u64)));
        for extra in compositions(total - 2 * k as u32, k) {
            let is: Vec<u32> = extra.iter().map(|e| e + 2).collect();
            let mut exps = flags.to_vec();
            exps.extend(&is);
            let integral = psi(gv, &exps)?;
            if integral.is_zero() {
                continue;
            }
            let mut c = weight.mul_rational(&integral);
            for &i in &is {
                c = c * gen.t_coeff(p, i as usize);
            }
            out.push((c, is.iter().map(|&i| i as usize - 1).collect()));
        }
    }
    Ok(out)
}

pub fn vertex_contribution(gen: &Generators, gv: u32, flags: &[u32], p: usize) -> Result<Series> {
    let mut acc = Series::exact_zero(gen.var);
    for (c, levels) in vertex_monomials(gen, gv, flags, p)? {
        let mut term = Series::constant(gen.var, c);
        for lvl in levels {
            term = term.mul_series(gen.p(lvl, 0, p)?);
        }
        acc = acc.add_series(&term);
    }
    Ok(acc.truncate(gen.order))
}

/// The same vertex contribution in C[L^{±1}], from row-0 polynomials polys[k][j].
pub fn vertex_contribution_lpoly(gen: &Generators, polys: &[Vec<Poly>], gv: u32, flags: &[u32], p: usize) -> Result<Poly> {
    let mut acc = Poly::zero();
    for (c, levels) in vertex_monomials(gen, gv, flags, p)? {
        let mut term = Poly::constant(c);
        for lvl in levels {
            let row = polys.get(lvl).ok_or(Error::AskLargerKmax { need: lvl, have: polys.len().saturating_sub(1) })?;
            term = term.mul(&row[p]);
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}

/// N(k,l) = Σ_r P̃^k_{Inv(r),p1}P̃^l_{r,p2}/ζ^{(k+Inv(r))p1+(l+r)p2}.
fn edge_pairing(gen: &Generators, k: usize, l: usize, p1: usize, p2: usize) -> Result<Series> {
    let n = gen.n;
    let mut acc = Series::exact_zero(gen.var);
    for r in 0..n {
        let ir = inv_index(n, r);
        let z = gen.zeta(-(((k + ir) * p1 + (l + r) * p2) as i64));
        acc = acc.add_series(&gen.p(k, ir, p1)?.mul_series(gen.p(l, r, p2)?).scale(&z));
    }
    Ok(acc.truncate(gen.order))
}

fn edge_prefactor(gen: &Generators, b1: u32, b2: u32) -> Rational {
    gen.sign((b1 + b2) as i64)
}

pub fn edge_contribution(gen: &Generators, b1: u32, p1: usize, b2: u32, p2: usize) -> Result<Series> {
    let mut acc = Series::exact_zero(gen.var);
    for j in 0..=b2 as usize {
        let t = edge_pairing(gen, b1 as usize + j + 1, b2 as usize - j, p1, p2)?;
        acc = if j % 2 == 0 { acc.add_series(&t) } else { acc.sub_series(&t) };
    }
    Ok(acc.scale_rational(&edge_prefactor(gen, b1, b2)).truncate(gen.order))
}

/// The edge quotient computed by dividing by (z+w) from the other side:
/// Σ_{j=0}^{b1}(−1)^j N(b1−j, b2+1+j).
pub fn edge_contribution_left(gen: &Generators, b1: u32, p1: usize, b2: u32, p2: usize) -> Result<Series> {
    let mut acc = Series::exact_zero(gen.var);
    for j in 0..=b1 as usize {
        let t = edge_pairing(gen, b1 as usize - j, b2 as usize + 1 + j, p1, p2)?;
        acc = if j % 2 == 0 { acc.add_series(&t) } else { acc.sub_series(&t) };
    }
    Ok(acc.scale_rational(&edge_prefactor(gen, b1, b2)).truncate(gen.order))
}

/// Σ_l (−1)^l N(b−l, l) for b = 1..=bmax; (z+w) divides the edge numerator iff all vanish.
pub fn edge_divisibility_residuals(gen: &Generators, p1: usize, p2: usize, bmax: usize) -> Result<Vec<Series>> {
    (1..=bmax)
        .map(|b| {
            let mut acc = Series::exact_zero(gen.var);
            for l in 0..=b {
                let t = edge_pairing(gen, b - l, l, p1, p2)?;
                acc = if l % 2 == 0 { acc.add_series(&t) } else { acc.sub_series(&t) };
            }
            Ok(acc)
        })
        .collect()
}

pub fn leg_contribution(gen: &Generators, c: usize, a: u32, p: usize) -> Result<Series> {
    let n = gen.n;
    if c >= n {
        return Err(Error::IndexOutOfRange(format!("insertion {c}")));
    }
    let ic = inv_index(n, c);
    let z = gen.zeta(-(((a as usize + ic) * p) as i64));
    let s = gen.sign(a as i64);
    Ok(gen.kl[ic].mul_series(gen.p(a as usize, ic, p)?).scale(&z.mul_rational(&s)).truncate(gen.order))
}

/// Half-edges at each vertex: legs first (by label), then edge ends.
#[derive(Clone, Copy, Debug)]
enum Flag {
    Leg(usize),
    Edge(usize, usize),
}

fn flags_at(graph: &StableGraph) -> Vec<Vec<Flag>> {
    let mut out = vec![Vec::new(); graph.vertex_count()];
    for (l, &v) in graph.legs.iter().enumerate() {
        out[v].push(Flag::Leg(l));
    }
    for (e, &(a, b)) in graph.edges.iter().enumerate() {
        out[a].push(Flag::Edge(e, 0));
        out[b].push(Flag::Edge(e, 1));
    }
    out
}

fn bounded_vectors(len: usize, max_sum: i64) -> Vec<Vec<u32>> {
    if max_sum < 0 {
        return vec![];
    }
    (0..=max_sum as u32).flat_map(|t| compositions(t, len)).collect()
}

/// Cont_Γ for one decorated graph (including 1/|Aut|).
pub fn decorated_contribution(gen: &Generators, graph: &StableGraph, deco: &[usize], insertions: &[usize]) -> Result<Series> {
    let fl = flags_at(graph);
    let per_vertex: Vec<Vec<Vec<u32>>> =
        (0..graph.vertex_count()).map(|v| bounded_vectors(fl[v].len(), graph.dim(v))).collect();
    let mut vcache: HashMap<(usize, Vec<u32>), Series> = HashMap::new();
    let mut ecache: HashMap<(usize, u32, u32), Series> = HashMap::new();
    let mut lcache: HashMap<(usize, u32), Series> = HashMap::new();
    let mut total = Series::exact_zero(gen.var);
    let mut idx = vec![0usize; graph.vertex_count()];
    if per_vertex.iter().any(|c| c.is_empty()) {
        return Ok(total.truncate(gen.order));
    }
    loop {
        let mut leg_val = vec![0u32; graph.legs.len()];
        let mut edge_val = vec![[0u32; 2]; graph.edges.len()];
        let mut term = Series::one(gen.var);
        for v in 0..graph.vertex_count() {
            let vals = &per_vertex[v][idx[v]];
            for (f, &b) in fl[v].iter().zip(vals) {
                match *f {
                    Flag::Leg(l) => leg_val[l] = b,
                    Flag::Edge(e, side) => edge_val[e][side] = b,
                }
            }
            let key = (v, vals.clone());
            if !vcache.contains_key(&key) {
                let s = vertex_contribution(gen, graph.genera[v], vals, deco[v])?;
                vcache.insert(key.clone(), s);
            }
            term = term.mul_series(&vcache[&key]);
        }
        if !term.truncate(gen.order).is_zero() {
            for (e, &(a, b)) in graph.edges.iter().enumerate() {
                let key = (e, edge_val[e][0], edge_val[e][1]);
                if !ecache.contains_key(&key) {
                    let s = edge_contribution(gen, key.1, deco[a], key.2, deco[b])?;
                    ecache.insert(key, s);
                }
                term = term.mul_series(&ecache[&key]);
            }
            for (l, &v) in graph.legs.iter().enumerate() {
                let key = (l, leg_val[l]);
                if !lcache.contains_key(&key) {
                    let s = leg_contribution(gen, insertions[l], key.1, deco[v])?;
                    lcache.insert(key, s);
                }
                term = term.mul_series(&lcache[&key]);
            }
            total = total.add_series(&term.truncate(gen.order));
        }
        let mut v = 0;
        loop {
            if v == idx.len() {
                let aut = rat(1, graph.aut as i64);
                return Ok(total.scale_rational(&aut).truncate(gen.order));
            }
            idx[v] += 1;
            if idx[v] < per_vertex[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// z-order needed for (g, m): the largest P̃ level any edge or leg can reach.
pub fn required_kmax(g: usize, m: usize) -> usize {
    (3 * g + m).saturating_sub(3) + 1
}

#[derive(Clone, Debug)]
pub struct GraphTerm {
    pub graph: usize,
    pub decoration: Vec<usize>,
    pub value: Series,
}

#[derive(Clone, Debug)]
pub struct PotentialResult {
    pub label: String,
    pub n: usize,
    pub g: usize,
    pub insertions: Vec<usize>,
    pub order: i64,
    pub graphs: Vec<StableGraph>,
    pub per_graph: Vec<GraphTerm>,
    pub total: Series,
}

impl PotentialResult {
    pub fn to_json(&self) -> Value {
        json!({
            "generators": self.label,
            "n": self.n,
            "g": self.g,
            "insertions": self.insertions,
            "order": self.order,
            "graphs": self.graphs.iter().map(|g| g.to_json()).collect::<Vec<_>>(),
            "per_graph": self.per_graph.iter().map(|t| json!({
                "graph": t.graph,
                "decoration": t.decoration,
                "value": t.value.to_json(),
            })).collect::<Vec<_>>(),
            "total": self.total.to_json(),
        })
    }
}

/// F_{g,m} as the automorphism-weighted sum over decorated stable graphs.
pub fn assemble_potential(gen: &Generators, g: usize, insertions: &[usize]) -> Result<PotentialResult> {
    assemble_potential_with(gen, g, insertions, true)
}

pub fn assemble_potential_with(gen: &Generators, g: usize, insertions: &[usize], parallel: bool) -> Result<PotentialResult> {
    let m = insertions.len();
    let graphs = enumerate_stable_graphs(g, m)?;
    if let Some(&c) = insertions.iter().find(|&&c| c >= gen.n) {
        return Err(Error::IndexOutOfRange(format!("insertion {c}")));
    }
    let need = required_kmax(g, m);
    if gen.kmax() < need {
        return Err(Error::AskLargerKmax { need, have: gen.kmax() });
    }
    let jobs: Vec<(usize, Vec<usize>)> =
        graphs.iter().enumerate().flat_map(|(i, gr)| decorations(gr, gen.n).into_iter().map(move |d| (i, d))).collect();
    let eval = |(i, d): &(usize, Vec<usize>)| decorated_contribution(gen, &graphs[*i], d, insertions);
    let values: Vec<Result<Series>> =
        if parallel { jobs.par_iter().map(eval).collect() } else { jobs.iter().map(eval).collect() };
    let mut per_graph = Vec::with_capacity(jobs.len());
    let mut total = Series::exact_zero(gen.var);
    for ((graph, decoration), v) in jobs.into_iter().zip(values) {
        let value = v?;
        total = total.add_series(&value);
        per_graph.push(GraphTerm { graph, decoration, value });
    }
    Ok(PotentialResult {
        label: gen.label.clone(),
        n: gen.n,
        g,
        insertions: insertions.to_vec(),
        order: gen.order,
        graphs,
        per_graph,
        total: total.truncate(gen.order),
    })
}

/// Υ applied to a KP potential: the same assembly over Υ∘KP generators.
pub fn apply_upsilon(cz: &FrobeniusData<CycNum>, g: usize, insertions: &[usize], rho: &CycNum, order: i64) -> Result<PotentialResult> {
    let gen = Generators::upsilon(cz, required_kmax(g, insertions.len()), order, rho)?;
    assemble_potential(&gen, g, insertions)
}

#[derive(Clone, Debug)]
pub struct CrcReport {
    pub n: usize,
    pub g: usize,
    pub insertions: Vec<usize>,
    pub rho: CycNum,
    pub order: i64,
    pub prefactor: CycNum,
    pub lhs: PotentialResult,
    pub rhs: PotentialResult,
    /// (graph, decoration, first differing x-power) for every mismatching decorated graph.
    pub mismatches: Vec<(usize, Vec<usize>, i64)>,
    /// First x-power where the totals differ, if any.
    pub total_mismatch: Option<i64>,
}

impl CrcReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.total_mismatch.is_none()
    }

    pub fn match_order(&self) -> i64 {
        self.total_mismatch.unwrap_or(self.order)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "g": self.g,
            "insertions": self.insertions,
            "rho": self.rho.to_json(),
            "prefactor": self.prefactor.to_json(),
            "order": self.order,
            "passed": self.passed(),
            "crc": {"rho": self.rho.to_json(), "match_order": self.match_order()},
            "mismatches": self.mismatches.iter().map(|(g, d, e)| json!({"graph": g, "decoration": d, "order": e})).collect::<Vec<_>>(),
            "lhs": self.lhs.to_json(),
            "rhs": self.rhs.to_json(),
        })
    }
}

fn first_difference(a: &Series, b: &Series, order: i64) -> Option<i64> {
    let d = a.sub_series(b).truncate(order);
    if d.is_zero() {
        None
    } else {
        d.valuation()
    }
}

pub fn verify_crc(n: usize, g: usize, insertions: &[usize], rho: &CycNum, order: i64) -> Result<CrcReport> {
    let sign = if g % 2 == 1 { 1 } else { -1 };
    verify_crc_with_sign(n, g, insertions, rho, order, sign)
}

/// F^{CnZn}_{g,m} = sign·ρ^{3g−3+m}Υ(F^{KP}_{g,m}), contribution by contribution.
pub fn verify_crc_with_sign(n: usize, g: usize, insertions: &[usize], rho: &CycNum, order: i64, sign: i64) -> Result<CrcReport> {
    check_rho(n, rho)?;
    let m = insertions.len();
    let kmax = required_kmax(g, m);
    let cz = FrobeniusData::<CycNum>::new(Target::CnZn, n, order + kmax as i64 + 2)?;
    let pt = solve_flatness_with(&cz, kmax, order, Normalization::True, None)?;
    let lhs_gen = Generators::from_table(&cz, &pt, order)?;
    let rhs_gen = Generators::upsilon(&cz, kmax, order, rho)?;
    let lhs = assemble_potential(&lhs_gen, g, insertions)?;
    let rhs = assemble_potential(&rhs_gen, g, insertions)?;
    let e = 3 * g as i64 - 3 + m as i64;
    let prefactor = rho.powi(e).mul_rational(&rat_int(sign));
    let mut mismatches = Vec::new();
    for (a, b) in lhs.per_graph.iter().zip(&rhs.per_graph) {
        if let Some(o) = first_difference(&a.value, &b.value.scale(&prefactor), order) {
            mismatches.push((a.graph, a.decoration.clone(), o));
        }
    }
    let total_mismatch = first_difference(&lhs.total, &rhs.total.scale(&prefactor), order);
    Ok(CrcReport { n, g, insertions: insertions.to_vec(), rho: rho.clone(), order, prefactor, lhs, rhs, mismatches, total_mismatch })
}

/// Finite generation at vertex level: every KP vertex contribution reachable at (g, m) is
/// recovered from its series by fit_lpoly and agrees with the exact C[L] evaluation.
pub fn vertex_finite_generation(n: usize, g: usize, m: usize, order: i64) -> Result<usize> {
    let kmax = required_kmax(g, m);
    let gen = Generators::new(Target::KP, n, kmax, order)?;
    let polys = ladder_table(Target::KP, n, kmax, Normalization::True)?.polys;
    let lval = l_series::<CycNum>(Target::KP, n, order);
    let mut checked = 0;
    for graph in enumerate_stable_graphs(g, m)? {
        for v in 0..graph.vertex_count() {
            let dim = graph.dim(v);
            for flags in bounded_vectors(graph.valence(v), dim) {
                for p in 0..n {
                    let exact = vertex_contribution_lpoly(&gen, &polys, graph.genera[v], &flags, p)?;
                    let series = vertex_contribution(&gen, graph.genera[v], &flags, p)?;
                    let deg = exact.max_exp().unwrap_or(0).max(0) as usize;
                    let fit = fit_lpoly(&series, &lval, deg + n, 5)?;
                    if fit != exact {
                        return Err(Error::NoPolynomialFit(format!("vertex g={} flags={flags:?} p={p}", graph.genera[v])));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

impl std::fmt::Display for StableGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "V{:?} E{:?} L{:?} |Aut|={}", self.genera, self.edges, self.legs, self.aut)
    }
}
