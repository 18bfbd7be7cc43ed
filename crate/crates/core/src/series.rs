//! Laurent expansion, residues and antiderivatives of rational functions,
//! univariate in a distinguished variable over the field of rational
//! expressions in the remaining variables.
//!
//! Every series carries its guaranteed-valid window; nothing is silently
//! truncated to zero.

use crate::error::{EngineError, Result};
use crate::logexpr::LogExpr;
use crate::poly::{q_int, MPoly, Q};
use crate::ratexpr::RatExpr;
use crate::vars::{var, VarId};
use num::One;

/// Expansion point for a univariate view.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Zero,
    Finite(RatExpr),
    Infinity,
}

/// Laurent series in `var` around a point, valid on exponents `[lo, hi]`.
/// Coefficients below `lo` are exactly zero. For `Point::Infinity` the
/// series variable is `1/var`.
#[derive(Debug, Clone)]
pub struct Laurent {
    pub var: VarId,
    pub point: Point,
    pub lo: i32,
    pub hi: i32,
    /// `coeffs[i]` is the coefficient of the local coordinate to `lo + i`.
    pub coeffs: Vec<RatExpr>,
}

impl Laurent {
    pub fn coeff(&self, k: i32) -> Result<RatExpr> {
        if k < self.lo {
            return Ok(RatExpr::zero());
        }
        if k > self.hi {
            return Err(EngineError::SeriesWindow(format!(
                "coefficient {k} requested, window is [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(self.coeffs[(k - self.lo) as usize].clone())
    }

    /// Actual valuation within the window, if any nonzero coefficient exists.
    pub fn valuation(&self) -> Option<i32> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| self.lo + i as i32)
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        assert_eq!(self.var, other.var);
        assert_eq!(self.point, other.point);
        let lo = self.lo + other.lo;
        let hi = (self.hi + other.lo).min(other.hi + self.lo);
        let n = (hi - lo + 1).max(0) as usize;
        let mut coeffs = vec![RatExpr::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b));
            }
        }
        Laurent { var: self.var, point: self.point.clone(), lo, hi, coeffs }
    }
}

/// Expand `f` in `var` around `point`, valid up to and including `order`.
pub fn laurent_expand(f: &RatExpr, v: VarId, point: &Point, order: i32) -> Result<Laurent> {
    match point {
        Point::Zero => expand_at_zero(f, v, order),
        Point::Finite(p) => {
            let shifted = f.subst(v, &RatExpr::var(v).add(p));
            let mut s = expand_at_zero(&shifted, v, order)?;
            s.point = point.clone();
            Ok(s)
        }
        Point::Infinity => {
            let w = var("__w");
            assert!(!f.contains_var(w), "scratch variable collision");
            let g = f.subst(v, &RatExpr::one().div(&RatExpr::var(w)));
            let mut s = expand_at_zero(&g, w, order)?;
            s.var = v;
            s.point = Point::Infinity;
            Ok(s)
        }
    }
}

fn expand_at_zero(f: &RatExpr, v: VarId, order: i32) -> Result<Laurent> {
    if f.is_zero() {
        return Ok(Laurent { var: v, point: Point::Zero, lo: order, hi: order, coeffs: vec![RatExpr::zero()] });
    }
    // Numerator as a polynomial in v with RatExpr coefficients.
    let num_c = f.num.as_univar(v);
    let num_lo = f.num.valuation_in(v) as i32;
    // Denominator: pure v-powers plus factors with nonzero constant term.
    let mut vpow: i32 = 0;
    let mut regs: Vec<(Vec<RatExpr>, u32)> = Vec::new();
    let mut const_den = RatExpr::one();
    for (g, k) in &f.den {
        let val = g.valuation_in(v) as i32;
        if !g.contains_var(v) {
            const_den = const_den.mul(&RatExpr::from_poly(g.clone()).pow(*k as i32));
            continue;
        }
        if g.is_monomial() {
            vpow += val * *k as i32;
            let rest = g
                .try_div(&MPoly::var_pow(v, val as u16))
                .expect("monomial factor splits");
            const_den = const_den.mul(&RatExpr::from_poly(rest).pow(*k as i32));
            continue;
        }
        debug_assert_eq!(val, 0, "non-monomial factor with positive valuation");
        let cs: Vec<RatExpr> = g.as_univar(v).into_iter().map(RatExpr::from_poly).collect();
        regs.push((cs, *k));
    }
    let lo = num_lo - vpow;
    if order < lo {
        return Ok(Laurent { var: v, point: Point::Zero, lo: order, hi: order, coeffs: vec![RatExpr::zero()] });
    }
    let len = (order - lo + 1) as usize;
    // Series of the numerator, shifted down by its own valuation.
    let mut acc: Vec<RatExpr> = (0..len)
        .map(|i| {
            let idx = i + num_lo as usize;
            if idx < num_c.len() {
                RatExpr::from_poly(num_c[idx].clone())
            } else {
                RatExpr::zero()
            }
        })
        .collect();
    if !const_den.is_one() {
        let inv = const_den.recip();
        for c in acc.iter_mut() {
            *c = c.mul(&inv);
        }
    }
    for (cs, k) in &regs {
        let inv = invert_series(cs, len);
        for _ in 0..*k {
            acc = mul_trunc(&acc, &inv, len);
        }
    }
    Ok(Laurent { var: v, point: Point::Zero, lo, hi: order, coeffs: acc })
}

fn mul_trunc(a: &[RatExpr], b: &[RatExpr], len: usize) -> Vec<RatExpr> {
    let mut out = vec![RatExpr::zero(); len];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() || i >= len {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j >= len {
                break;
            }
            if y.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

/// Invert `c0 + c1 v + ...` as a power series (`c0` must be nonzero).
fn invert_series(cs: &[RatExpr], len: usize) -> Vec<RatExpr> {
    let c0 = &cs[0];
    assert!(!c0.is_zero(), "series inversion needs a unit constant term");
    let inv0 = c0.recip();
    let mut out = vec![RatExpr::zero(); len];
    out[0] = inv0.clone();
    for n in 1..len {
        let mut s = RatExpr::zero();
        for k in 1..=n {
            if k < cs.len() && !cs[k].is_zero() && !out[n - k].is_zero() {
                s = s.add(&cs[k].mul(&out[n - k]));
            }
        }
        out[n] = s.neg().mul(&inv0);
    }
    out
}

/// Residue of the differential `f d(var)` at a point.
///
/// At infinity the substitution `var = 1/w`, `d(var) = -dw/w^2` is applied,
/// so the result is the residue of the transformed differential at `w = 0`.
pub fn residue(f: &RatExpr, v: VarId, point: &Point) -> Result<RatExpr> {
    match point {
        Point::Zero | Point::Finite(_) => {
            let s = laurent_expand(f, v, point, -1)?;
            s.coeff(-1)
        }
        Point::Infinity => {
            let w = var("__w");
            assert!(!f.contains_var(w), "scratch variable collision");
            let wr = RatExpr::var(w);
            let g = f
                .subst(v, &RatExpr::one().div(&wr))
                .mul(&RatExpr::one().div(&wr.mul(&wr)).neg());
            let s = expand_at_zero(&g, w, -1)?;
            s.coeff(-1)
        }
    }
}

/// All poles of `f` in `var` over the parameter field: `(root, multiplicity)`
/// pairs plus the order of the pure `var`-power part at zero. Errors if a
/// denominator factor involving `var` is not linear in it.
pub fn var_poles(f: &RatExpr, v: VarId) -> Result<Vec<(RatExpr, u32)>> {
    let mut out: Vec<(RatExpr, u32)> = Vec::new();
    for (g, k) in &f.den {
        if !g.contains_var(v) {
            continue;
        }
        if g.is_monomial() {
            push_pole(&mut out, RatExpr::zero(), *k * g.valuation_in(v) as u32);
            continue;
        }
        if g.degree_in(v) == 1 {
            let cs = g.as_univar(v);
            if cs[1].contains_var(v) {
                unreachable!();
            }
            let root = RatExpr::from_poly(cs[0].clone())
                .neg()
                .div(&RatExpr::from_poly(cs[1].clone()));
            push_pole(&mut out, root, *k);
            continue;
        }
        return Err(EngineError::FieldExtension(format!(
            "denominator factor {} is not linear in the expansion variable",
            g.to_grammar()
        )));
    }
    Ok(out)
}

fn push_pole(out: &mut Vec<(RatExpr, u32)>, root: RatExpr, k: u32) {
    if k == 0 {
        return;
    }
    for (r, m) in out.iter_mut() {
        if *r == root {
            *m += k;
            return;
        }
    }
    out.push((root, k));
}

/// Antiderivative of `f d(var)`: rational part plus one log atom per
/// simple-pole residue. The integration constant is zero at the level of
/// the canonical form (no constant term is added).
pub fn primitive(f: &RatExpr, v: VarId) -> Result<LogExpr> {
    if f.is_zero() {
        return Ok(LogExpr::zero());
    }
    let poles = var_poles(f, v)?;
    let mut out = LogExpr::zero();
    // Proper part: subtract principal parts at every pole.
    let mut remainder = f.clone();
    for (root, k) in &poles {
        let point = if root.is_zero() { Point::Zero } else { Point::Finite(root.clone()) };
        let s = laurent_expand(f, v, &point, -1)?;
        let local = RatExpr::var(v).sub(root);
        for j in (s.lo.min(-(*k as i32)))..=-1 {
            let c = s.coeff(j)?;
            if c.is_zero() {
                continue;
            }
            let pp = c.mul(&local.pow(j));
            remainder = remainder.sub(&pp);
            if j == -1 {
                out.atoms.push((c, local.clone()));
            } else {
                // integral of c (v-r)^j is c (v-r)^(j+1)/(j+1)
                out.rat = out
                    .rat
                    .add(&c.mul(&local.pow(j + 1)).mul_q(&(Q::one() / q_int((j + 1) as i64))));
            }
        }
    }
    // What is left must be polynomial in v over the parameter field.
    if remainder.den.iter().any(|(g, _)| g.contains_var(v)) {
        remainder.reduce();
    }
    if remainder.den.iter().any(|(g, _)| g.contains_var(v)) {
        return Err(EngineError::Internal(
            "principal-part subtraction left a pole".into(),
        ));
    }
    let cs = remainder.num.as_univar(v);
    let mut poly_int = RatExpr::zero();
    for (e, c) in cs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let t = RatExpr::from_poly(c.clone())
            .mul(&RatExpr::var(v).pow(e as i32 + 1))
            .mul_q(&(Q::one() / q_int(e as i64 + 1)));
        poly_int = poly_int.add(&t);
    }
    let den_rest = remainder.den_poly();
    if !den_rest.is_one() {
        poly_int = poly_int.div(&RatExpr::from_poly(den_rest));
    }
    out.rat = out.rat.add(&poly_int);
    Ok(out)
}

/// Antiderivative that must be purely rational (all residues vanish).
pub fn primitive_rat(f: &RatExpr, v: VarId) -> Result<RatExpr> {
    let p = primitive(f, v)?;
    if !p.is_rational() {
        return Err(EngineError::Internal(format!(
            "nonzero residue where a rational primitive was required ({} log atoms)",
            p.atoms.len()
        )));
    }
    Ok(p.rat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse;

    fn v(name: &str) -> VarId {
        var(name)
    }

    #[test]
    fn residue_defining_case() {
        // residue(dz/z, 0) = 1
        let z = v("z");
        let f = parse("1/z").unwrap();
        assert_eq!(residue(&f, z, &Point::Zero).unwrap(), RatExpr::one());
        // residue(z^3 dz, 0) = 0
        let g = parse("z^3").unwrap();
        assert!(residue(&g, z, &Point::Zero).unwrap().is_zero());
    }

    #[test]
    fn residue_at_infinity() {
        // residue(2 z^2 * z^-3 dz, inf) = -2
        let z = v("z");
        let f = parse("2*z^2/z^3").unwrap();
        assert_eq!(residue(&f, z, &Point::Infinity).unwrap(), RatExpr::int(-2));
    }

    #[test]
    fn expand_geometric() {
        // 1/(z(z-1)) at 0 to order 1 -> -z^-1 - 1 - z
        let z = v("z");
        let f = parse("1/(z*(z-1))").unwrap();
        let s = laurent_expand(&f, z, &Point::Zero, 1).unwrap();
        assert_eq!(s.coeff(-1).unwrap(), RatExpr::int(-1));
        assert_eq!(s.coeff(0).unwrap(), RatExpr::int(-1));
        assert_eq!(s.coeff(1).unwrap(), RatExpr::int(-1));
        // z^2 at 0 -> z^2
        let g = parse("z^2").unwrap();
        let s2 = laurent_expand(&g, z, &Point::Zero, 3).unwrap();
        assert_eq!(s2.coeff(2).unwrap(), RatExpr::one());
        assert_eq!(s2.valuation(), Some(2));
    }

    #[test]
    fn expand_at_infinity_geometric() {
        // 1/(z-u) at infinity -> w + u w^2 + ... in w = 1/z
        let z = v("z");
        let f = parse("1/(z-u)").unwrap();
        let s = laurent_expand(&f, z, &Point::Infinity, 3).unwrap();
        assert_eq!(s.coeff(1).unwrap(), RatExpr::one());
        assert_eq!(s.coeff(2).unwrap(), parse("u").unwrap());
        assert_eq!(s.coeff(3).unwrap(), parse("u^2").unwrap());
    }

    #[test]
    fn window_is_loud() {
        let z = v("z");
        let f = parse("1/(1-z)").unwrap();
        let s = laurent_expand(&f, z, &Point::Zero, 2).unwrap();
        assert!(s.coeff(3).is_err());
        assert!(s.coeff(-5).unwrap().is_zero());
    }

    #[test]
    fn primitive_examples() {
        let z = v("z");
        // primitive(2 z^2 dz) = (2/3) z^3
        let f = parse("2*z^2").unwrap();
        let p = primitive(&f, z).unwrap();
        assert!(p.is_rational());
        assert_eq!(p.rat, parse("2/3*z^3").unwrap());
        // primitive(dz/z) = log z
        let g = parse("1/z").unwrap();
        let p2 = primitive(&g, z).unwrap();
        assert!(p2.rat.is_zero());
        assert_eq!(p2.atoms.len(), 1);
        // primitive(dz/(2 z^4)) = -1/(6 z^3)
        let h = parse("1/(2*z^4)").unwrap();
        let p3 = primitive(&h, z).unwrap();
        assert!(p3.is_rational());
        assert_eq!(p3.rat, parse("-1/(6*z^3)").unwrap());
    }

    #[test]
    fn primitive_differentiates_back() {
        let z = v("z");
        for src in ["(z^2+u)/(z-1)^2", "1/((z-u)*(z+u))", "z^5 - u*z"] {
            let f = parse(src).unwrap();
            let p = primitive(&f, z).unwrap();
            let d = p.derivative(z);
            assert!(d.is_rational(), "{src}");
            assert_eq!(d.rat, f, "d(primitive) != f for {src}");
        }
    }

    #[test]
    fn global_residue_theorem() {
        // Sum of residues over all poles including infinity vanishes.
        let z = v("z");
        let f = parse("(z^2 + u)/( z^2 * (z - 1) * (z + u) )").unwrap();
        let mut total = residue(&f, z, &Point::Infinity).unwrap();
        for (root, _) in var_poles(&f, z).unwrap() {
            let pt = if root.is_zero() { Point::Zero } else { Point::Finite(root.clone()) };
            total = total.add(&residue(&f, z, &pt).unwrap());
        }
        assert!(total.is_zero(), "total residue {}", total.to_grammar());
    }

    #[test]
    fn residue_of_exact_differential_vanishes() {
        let z = v("z");
        for src in ["(z^3+1)/(z-2)", "1/(z*(z-u))", "u/(z+1)^3"] {
            let f = parse(src).unwrap();
            let df = f.derivative(z);
            for (root, _) in var_poles(&df, z).unwrap() {
                let pt = if root.is_zero() { Point::Zero } else { Point::Finite(root.clone()) };
                assert!(residue(&df, z, &pt).unwrap().is_zero(), "{src}");
            }
            assert!(residue(&df, z, &Point::Infinity).unwrap().is_zero(), "{src}");
        }
    }
}
