//! Sparse multivariate polynomials over arbitrary-precision rationals.
//!
//! Monomials are dense exponent vectors indexed by `VarId` with trailing
//! zeros trimmed; terms are kept sorted in graded-lex order, leading term
//! last. All arithmetic is exact.

use crate::vars::{var_name, VarId};
use num::{BigInt, BigRational, One, Signed, Zero};
use smallvec::SmallVec;
use std::cmp::Ordering;

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_ratio(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

/// Exponent vector; index = `VarId.0`, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mono(pub SmallVec<[u16; 8]>);

impl Mono {
    pub fn one() -> Self {
        Mono(SmallVec::new())
    }

    pub fn of_var(v: VarId, e: u16) -> Self {
        if e == 0 {
            return Mono::one();
        }
        let mut m = SmallVec::new();
        m.resize(v.0 as usize + 1, 0);
        m[v.0 as usize] = e;
        Mono(m)
    }

    pub fn exp(&self, v: VarId) -> u16 {
        self.0.get(v.0 as usize).copied().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn trim(&mut self) {
        while let Some(&0) = self.0.last() {
            self.0.pop();
        }
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let n = self.0.len().max(other.0.len());
        let mut m = SmallVec::with_capacity(n);
        for i in 0..n {
            let a = self.0.get(i).copied().unwrap_or(0);
            let b = other.0.get(i).copied().unwrap_or(0);
            m.push(a + b);
        }
        let mut m = Mono(m);
        m.trim();
        m
    }

    /// Divide exactly; `None` if any exponent would go negative.
    pub fn div(&self, other: &Mono) -> Option<Mono> {
        let mut m = self.0.clone();
        for (i, &b) in other.0.iter().enumerate() {
            let a = m.get(i).copied().unwrap_or(0);
            if a < b {
                return None;
            }
            if b > 0 {
                m[i] = a - b;
            }
        }
        let mut m = Mono(m);
        m.trim();
        Some(m)
    }

    pub fn divides(&self, other: &Mono) -> bool {
        other.div(self).is_some()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| VarId(i as u32))
    }
}

/// Graded lexicographic order by variable id.
pub fn mono_cmp(a: &Mono, b: &Mono) -> Ordering {
    let da = a.total_degree();
    let db = b.total_degree();
    if da != db {
        return da.cmp(&db);
    }
    let n = a.0.len().max(b.0.len());
    for i in 0..n {
        let ea = a.0.get(i).copied().unwrap_or(0);
        let eb = b.0.get(i).copied().unwrap_or(0);
        match ea.cmp(&eb) {
            Ordering::Equal => {}
            // Higher exponent in an earlier variable sorts later (lex).
            other => return other,
        }
    }
    Ordering::Equal
}

/// Sparse multivariate polynomial with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MPoly {
    /// Sorted ascending by `mono_cmp`; no zero coefficients.
    pub terms: Vec<(Mono, Q)>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly { terms: Vec::new() }
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: vec![(Mono::one(), c)],
        }
    }

    pub fn one() -> Self {
        MPoly::constant(Q::one())
    }

    pub fn int(n: i64) -> Self {
        MPoly::constant(q_int(n))
    }

    pub fn var(v: VarId) -> Self {
        MPoly {
            terms: vec![(Mono::of_var(v, 1), Q::one())],
        }
    }

    pub fn var_pow(v: VarId, e: u16) -> Self {
        MPoly {
            terms: vec![(Mono::of_var(v, e), Q::one())],
        }
    }

    pub fn monomial(m: Mono, c: Q) -> Self {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly { terms: vec![(m, c)] }
    }

    pub fn from_terms(mut terms: Vec<(Mono, Q)>) -> Self {
        terms.sort_by(|a, b| mono_cmp(&a.0, &b.0));
        let mut out: Vec<(Mono, Q)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            if let Some(last) = out.last_mut() {
                if last.0 == m {
                    last.1 += c;
                    if last.1.is_zero() {
                        out.pop();
                    }
                    continue;
                }
            }
            if !c.is_zero() {
                out.push((m, c));
            }
        }
        MPoly { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.is_zero() {
            return Some(Q::zero());
        }
        if self.is_constant() {
            return Some(self.terms[0].1.clone());
        }
        None
    }

    /// Is this `c * v1^e1 ... vk^ek` (a single term)?
    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn leading(&self) -> Option<&(Mono, Q)> {
        self.terms.last()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.total_degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: VarId) -> u16 {
        self.terms.iter().map(|(m, _)| m.exp(v)).max().unwrap_or(0)
    }

    /// Lowest exponent of `v` over all terms (valuation at `v = 0`).
    pub fn valuation_in(&self, v: VarId) -> u16 {
        self.terms.iter().map(|(m, _)| m.exp(v)).min().unwrap_or(0)
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.terms.iter().any(|(m, _)| m.exp(v) > 0)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut n = 0usize;
        for (m, _) in &self.terms {
            n = n.max(m.0.len());
        }
        (0..n)
            .filter(|&i| self.terms.iter().any(|(m, _)| m.0.get(i).copied().unwrap_or(0) > 0))
            .map(|i| VarId(i as u32))
            .collect()
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        let mut out: Vec<(Mono, Q)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match mono_cmp(&self.terms[i].0, &other.terms[j].0) {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        MPoly { terms: out }
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        self.add(&other.neg())
    }

    pub fn mul_q(&self, c: &Q) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_mono(&self, m: &Mono, c: &Q) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(mm, k)| (mm.mul(m), k * c)).collect(),
        }
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        if self.is_zero() || other.is_zero() {
            return MPoly::zero();
        }
        if other.terms.len() == 1 {
            let (m, c) = &other.terms[0];
            return self.mul_mono(m, c);
        }
        if self.terms.len() == 1 {
            let (m, c) = &self.terms[0];
            return other.mul_mono(m, c);
        }
        let mut acc: std::collections::BTreeMap<MonoKey, Q> = std::collections::BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let c = ca * cb;
                let e = acc.entry(MonoKey(m)).or_insert_with(Q::zero);
                *e += c;
            }
        }
        MPoly {
            terms: acc
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(MonoKey(m), c)| (m, c))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MPoly {
        let mut result = MPoly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn try_div(&self, d: &MPoly) -> Option<MPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(MPoly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.mul_q(&(Q::one() / c)));
        }
        if d.terms.len() == 1 {
            // Monomial divisor: termwise exponent subtraction keeps the
            // graded-lex order intact.
            let (dm, dc) = &d.terms[0];
            let mut terms = Vec::with_capacity(self.terms.len());
            for (m, c) in &self.terms {
                terms.push((m.div(dm)?, c / dc));
            }
            return Some(MPoly { terms });
        }
        let (dm, dc) = d.leading().unwrap();
        let mut rem = self.clone();
        let mut q_terms: Vec<(Mono, Q)> = Vec::new();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let m = rm.div(dm)?;
            let c = rc / dc;
            rem = rem.sub(&d.mul_mono(&m, &c));
            q_terms.push((m, c));
        }
        Some(MPoly::from_terms(q_terms))
    }

    /// Partial derivative with respect to `v`.
    pub fn derivative(&self, v: VarId) -> MPoly {
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            let mut mm = m.clone();
            mm.0[v.0 as usize] = e - 1;
            mm.trim();
            terms.push((mm, c * q_int(e as i64)));
        }
        MPoly::from_terms(terms)
    }

    /// Substitute `v -> p`.
    pub fn subst_var(&self, v: VarId, p: &MPoly) -> MPoly {
        let deg = self.degree_in(v) as usize;
        if deg == 0 {
            return self.clone();
        }
        // Collect coefficients of v^k, then Horner.
        let mut coeffs: Vec<MPoly> = vec![MPoly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exp(v) as usize;
            let mut mm = m.clone();
            if e > 0 {
                mm.0[v.0 as usize] = 0;
                mm.trim();
            }
            coeffs[e] = coeffs[e].add(&MPoly::monomial(mm, c.clone()));
        }
        let mut acc = coeffs[deg].clone();
        for k in (0..deg).rev() {
            acc = acc.mul(p).add(&coeffs[k]);
        }
        acc
    }

    /// Substitute `v -> -v` (sign flip on odd exponents).
    pub fn subst_neg(&self, v: VarId) -> MPoly {
        let mut terms: Vec<(Mono, Q)> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.exp(v) % 2 == 1 {
                    (m.clone(), -c.clone())
                } else {
                    (m.clone(), c.clone())
                }
            })
            .collect();
        terms.sort_by(|a, b| mono_cmp(&a.0, &b.0));
        MPoly { terms }
    }

    /// Rename variables according to `map: (from, to)` pairs, applied simultaneously.
    pub fn rename_vars(&self, map: &[(VarId, VarId)]) -> MPoly {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut mm: SmallVec<[u16; 8]> = SmallVec::new();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let from = VarId(i as u32);
                let to = map.iter().find(|(f, _)| *f == from).map(|(_, t)| *t).unwrap_or(from);
                let idx = to.0 as usize;
                if mm.len() <= idx {
                    mm.resize(idx + 1, 0);
                }
                mm[idx] += e;
            }
            let mut mono = Mono(mm);
            mono.trim();
            terms.push((mono, c.clone()));
        }
        MPoly::from_terms(terms)
    }

    /// View as univariate in `v`: coefficient polynomials of `v^0..v^deg`.
    pub fn as_univar(&self, v: VarId) -> Vec<MPoly> {
        let deg = self.degree_in(v) as usize;
        let mut coeffs: Vec<MPoly> = vec![MPoly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exp(v) as usize;
            let mut mm = m.clone();
            if e > 0 {
                mm.0[v.0 as usize] = 0;
                mm.trim();
            }
            coeffs[e] = coeffs[e].add(&MPoly::monomial(mm, c.clone()));
        }
        coeffs
    }

    pub fn from_univar(coeffs: &[MPoly], v: VarId) -> MPoly {
        let mut acc = MPoly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            acc = acc.add(&c.mul(&MPoly::var_pow(v, e as u16)));
        }
        acc
    }

    /// gcd of all rational coefficients (positive), as gcd(numerators)/lcm(denominators).
    pub fn content(&self) -> Q {
        if self.is_zero() {
            return Q::zero();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            num_gcd = num::integer::gcd(num_gcd, c.numer().abs());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
        Q::new(num_gcd, den_lcm)
    }

    /// Divide out content and make the leading coefficient positive.
    /// Returns (unit, primitive) with `self = unit * primitive`.
    pub fn normalize(&self) -> (Q, MPoly) {
        if self.is_zero() {
            return (Q::one(), MPoly::zero());
        }
        let mut c = self.content();
        if self.leading().unwrap().1.is_negative() {
            c = -c;
        }
        (c.clone(), self.mul_q(&(Q::one() / c)))
    }

    /// Multivariate gcd via primitive PRS, recursing on the coefficient ring.
    pub fn gcd(a: &MPoly, b: &MPoly) -> MPoly {
        if a.is_zero() {
            return b.normalize().1;
        }
        if b.is_zero() {
            return a.normalize().1;
        }
        if a.is_constant() || b.is_constant() {
            return MPoly::one();
        }
        // Pick a main variable present in both.
        let va = a.vars();
        let vb = b.vars();
        let common: Vec<VarId> = va.iter().copied().filter(|v| vb.contains(v)).collect();
        if common.is_empty() {
            return MPoly::one();
        }
        let v = *common
            .iter()
            .min_by_key(|&&v| a.degree_in(v).max(b.degree_in(v)))
            .unwrap();
        gcd_univar(a, b, v)
    }

    /// Evaluate with every variable bound to a rational.
    pub fn eval_q(&self, bind: &dyn Fn(VarId) -> Q) -> Q {
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    let x = bind(VarId(i as u32));
                    for _ in 0..e {
                        t *= &x;
                    }
                }
            }
            acc += t;
        }
        acc
    }

    /// Render in the shared expression grammar; terms sorted descending by
    /// (degree, name-lex) so output is reproducible across runs.
    pub fn to_grammar(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut terms: Vec<(String, Mono, Q)> = self
            .terms
            .iter()
            .map(|(m, c)| (mono_sort_key(m), m.clone(), c.clone()))
            .collect();
        terms.sort_by(|a, b| {
            b.1.total_degree()
                .cmp(&a.1.total_degree())
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut out = String::new();
        for (i, (_, m, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let ac = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&term_to_string(m, &ac));
        }
        out
    }
}

fn mono_sort_key(m: &Mono) -> String {
    let mut parts: Vec<(String, u16)> = m
        .0
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| (var_name(VarId(i as u32)), e))
        .collect();
    parts.sort();
    parts
        .iter()
        .map(|(n, e)| format!("{n}^{e:04}"))
        .collect::<Vec<_>>()
        .join(":")
}

fn term_to_string(m: &Mono, c: &Q) -> String {
    let mut factors: Vec<String> = Vec::new();
    if !c.is_one() || m.is_one() {
        if c.denom().is_one() {
            factors.push(c.numer().to_string());
        } else {
            factors.push(format!("{}/{}", c.numer(), c.denom()));
        }
    }
    let mut vars: Vec<(String, u16)> = m
        .0
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| (var_name(VarId(i as u32)), e))
        .collect();
    vars.sort();
    for (n, e) in vars {
        if e == 1 {
            factors.push(n);
        } else {
            factors.push(format!("{n}^{e}"));
        }
    }
    factors.join("*")
}

/// Wrapper giving monomials the graded-lex `Ord` for map keys.
#[derive(PartialEq, Eq)]
struct MonoKey(Mono);

impl PartialOrd for MonoKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonoKey {
    fn cmp(&self, other: &Self) -> Ordering {
        mono_cmp(&self.0, &other.0)
    }
}

/// Primitive PRS gcd with main variable `v`.
fn gcd_univar(a: &MPoly, b: &MPoly, v: VarId) -> MPoly {
    let ac = a.as_univar(v);
    let bc = b.as_univar(v);
    let cont_a = vec_content(&ac);
    let cont_b = vec_content(&bc);
    let cont = MPoly::gcd(&cont_a, &cont_b);
    let pa = vec_div(&ac, &cont_a);
    let pb = vec_div(&bc, &cont_b);
    let mut r0 = pa;
    let mut r1 = pb;
    if r0.len() < r1.len() {
        std::mem::swap(&mut r0, &mut r1);
    }
    loop {
        if r1.iter().all(|c| c.is_zero()) {
            let prim = vec_primitive(&r0);
            let g = MPoly::from_univar(&prim, v);
            return cont.mul(&g).normalize().1;
        }
        let r2 = pseudo_rem(&r0, &r1);
        r0 = r1;
        r1 = vec_primitive(&r2);
    }
}

/// gcd of a list of polynomials (content of a coefficient vector).
pub fn coeff_content(c: &[MPoly]) -> MPoly {
    vec_content(c)
}

fn vec_content(c: &[MPoly]) -> MPoly {
    let mut g = MPoly::zero();
    for p in c {
        g = MPoly::gcd(&g, p);
        if g.is_one() {
            break;
        }
    }
    if g.is_zero() {
        MPoly::one()
    } else {
        g
    }
}

fn vec_div(c: &[MPoly], d: &MPoly) -> Vec<MPoly> {
    c.iter()
        .map(|p| p.try_div(d).expect("content division is exact"))
        .collect()
}

fn vec_primitive(c: &[MPoly]) -> Vec<MPoly> {
    let mut c: Vec<MPoly> = c.to_vec();
    while let Some(last) = c.last() {
        if last.is_zero() && c.len() > 1 {
            c.pop();
        } else {
            break;
        }
    }
    if c.iter().all(|p| p.is_zero()) {
        return vec![MPoly::zero()];
    }
    let cont = vec_content(&c);
    let mut out = vec_div(&c, &cont);
    // Normalize sign via the leading coefficient.
    if let Some(lead) = out.last() {
        if let Some((_, q)) = lead.leading() {
            if q.is_negative() {
                out = out.iter().map(|p| p.neg()).collect();
            }
        }
    }
    out
}

/// Pseudo-remainder of univariate polynomials with MPoly coefficients.
fn pseudo_rem(a: &[MPoly], b: &[MPoly]) -> Vec<MPoly> {
    let deg_b = b.len() - 1;
    let lb = b[deg_b].clone();
    let mut r: Vec<MPoly> = a.to_vec();
    loop {
        while r.len() > 1 && r.last().unwrap().is_zero() {
            r.pop();
        }
        let deg_r = r.len() - 1;
        if r.iter().all(|c| c.is_zero()) || deg_r < deg_b {
            return r;
        }
        let lr = r[deg_r].clone();
        let shift = deg_r - deg_b;
        // r := lb * r - lr * x^shift * b
        for c in r.iter_mut() {
            *c = c.mul(&lb);
        }
        for (i, bc) in b.iter().enumerate() {
            r[i + shift] = r[i + shift].sub(&bc.mul(&lr));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::var;

    #[test]
    fn mul_and_div_round_trip() {
        let x = var("ptest_x");
        let y = var("ptest_y");
        let a = MPoly::var(x).add(&MPoly::var(y)); // x + y
        let b = MPoly::var(x).sub(&MPoly::var(y)); // x - y
        let prod = a.mul(&b);
        let x2y2 = MPoly::var_pow(x, 2).sub(&MPoly::var_pow(y, 2));
        assert_eq!(prod, x2y2);
        assert_eq!(prod.try_div(&a).unwrap(), b);
        assert!(prod.try_div(&MPoly::var(x)).is_none());
    }

    #[test]
    fn gcd_common_factor() {
        let x = var("ptest_x");
        let y = var("ptest_y");
        let f = MPoly::var(x).add(&MPoly::var(y));
        let a = f.mul(&MPoly::var(x)).mul(&f);
        let b = f.mul(&MPoly::var(y));
        let g = MPoly::gcd(&a, &b);
        assert_eq!(g, f);
    }

    #[test]
    fn derivative_product_rule() {
        let x = var("ptest_x");
        let y = var("ptest_y");
        let a = MPoly::var_pow(x, 3).add(&MPoly::var(y));
        let b = MPoly::var(x).add(&MPoly::int(2));
        let lhs = a.mul(&b).derivative(x);
        let rhs = a.derivative(x).mul(&b).add(&a.mul(&b.derivative(x)));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn subst_neg_matches_subst_var() {
        let x = var("ptest_x");
        let y = var("ptest_y");
        let p = MPoly::var_pow(x, 3)
            .add(&MPoly::var(x).mul(&MPoly::var(y)))
            .add(&MPoly::var_pow(y, 2));
        let neg_x = MPoly::var(x).neg();
        assert_eq!(p.subst_neg(x), p.subst_var(x, &neg_x));
    }
}
