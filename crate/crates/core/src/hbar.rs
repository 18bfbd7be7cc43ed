//! Truncated formal series in hbar with rational-expression coefficients.
//!
//! A series knows its lowest possible order `lo` (coefficients below are
//! exactly zero) and the highest order `hi` through which its coefficients
//! are guaranteed valid. Asking beyond `hi` is an error, never a silent
//! zero.

use crate::error::{EngineError, Result};
use crate::poly::{q_int, Q};
use crate::ratexpr::RatExpr;
use crate::vars::VarId;
use num::One;

#[derive(Debug, Clone, PartialEq)]
pub struct HSeries {
    pub lo: i32,
    pub hi: i32,
    /// `coeffs[i]` is the coefficient of `hbar^(lo + i)`.
    pub coeffs: Vec<RatExpr>,
}

impl HSeries {
    pub fn zero(hi: i32) -> Self {
        HSeries { lo: hi, hi, coeffs: vec![RatExpr::zero()] }
    }

    pub fn constant(c: RatExpr, hi: i32) -> Self {
        let mut s = HSeries { lo: 0, hi, coeffs: vec![RatExpr::zero(); (hi + 1).max(1) as usize] };
        if hi >= 0 {
            s.coeffs[0] = c;
        }
        s
    }

    pub fn monomial(order: i32, c: RatExpr, hi: i32) -> Self {
        assert!(order <= hi);
        let mut s = HSeries {
            lo: order,
            hi,
            coeffs: vec![RatExpr::zero(); (hi - order + 1) as usize],
        };
        s.coeffs[0] = c;
        s
    }

    pub fn from_coeffs(lo: i32, coeffs: Vec<RatExpr>) -> Self {
        let hi = lo + coeffs.len() as i32 - 1;
        HSeries { lo, hi, coeffs }
    }

    pub fn coeff(&self, k: i32) -> Result<RatExpr> {
        if k < self.lo {
            return Ok(RatExpr::zero());
        }
        if k > self.hi {
            return Err(EngineError::SeriesWindow(format!(
                "hbar^{k} requested, window is [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(self.coeffs[(k - self.lo) as usize].clone())
    }

    pub fn is_zero_through_window(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &HSeries) -> HSeries {
        let lo = self.lo.min(other.lo);
        let hi = self.hi.min(other.hi);
        let coeffs = (lo..=hi)
            .map(|k| {
                let a = self.coeff(k).expect("within window");
                let b = other.coeff(k).expect("within window");
                a.add(&b)
            })
            .collect();
        HSeries { lo, hi, coeffs }
    }

    pub fn neg(&self) -> HSeries {
        HSeries {
            lo: self.lo,
            hi: self.hi,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &HSeries) -> HSeries {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &HSeries) -> HSeries {
        let lo = self.lo + other.lo;
        let hi = (self.hi + other.lo).min(other.hi + self.lo);
        let n = (hi - lo + 1).max(1) as usize;
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
        HSeries { lo, hi, coeffs }
    }

    pub fn scale(&self, c: &RatExpr) -> HSeries {
        HSeries {
            lo: self.lo,
            hi: self.hi,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
        }
    }

    pub fn shift(&self, by: i32) -> HSeries {
        HSeries { lo: self.lo + by, hi: self.hi + by, coeffs: self.coeffs.clone() }
    }

    /// Coefficient-wise derivative in a geometric variable.
    pub fn derivative(&self, v: VarId) -> HSeries {
        HSeries {
            lo: self.lo,
            hi: self.hi,
            coeffs: self.coeffs.iter().map(|c| c.derivative(v)).collect(),
        }
    }

    pub fn map(&self, f: &dyn Fn(&RatExpr) -> RatExpr) -> HSeries {
        HSeries {
            lo: self.lo,
            hi: self.hi,
            coeffs: self.coeffs.iter().map(|c| f(c)).collect(),
        }
    }

    /// exp of a series with no terms below hbar^1.
    pub fn exp(&self) -> Result<HSeries> {
        for k in self.lo..=0.min(self.hi) {
            if !self.coeff(k)?.is_zero() {
                return Err(EngineError::Precondition(
                    "exp needs the series to start at hbar^1 or higher".into(),
                ));
            }
        }
        let hi = self.hi;
        let n = (hi + 1).max(1) as usize;
        let mut out = vec![RatExpr::zero(); n];
        out[0] = RatExpr::one();
        // E' = S' E  =>  n E_n = sum_{k=1}^{n} k S_k E_{n-k}
        for m in 1..n {
            let mut acc = RatExpr::zero();
            for k in 1..=m {
                let s = self.coeff(k as i32)?;
                if s.is_zero() {
                    continue;
                }
                acc = acc.add(&s.mul_q(&q_int(k as i64)).mul(&out[m - k]));
            }
            out[m] = acc.mul_q(&(Q::one() / q_int(m as i64)));
        }
        Ok(HSeries { lo: 0, hi, coeffs: out })
    }

    /// log of a series of the form `1 + O(hbar)`.
    pub fn log(&self) -> Result<HSeries> {
        if !self.coeff(0)?.is_one() {
            return Err(EngineError::Precondition(
                "log needs a series of the form 1 + O(hbar)".into(),
            ));
        }
        for k in self.lo..0 {
            if !self.coeff(k)?.is_zero() {
                return Err(EngineError::Precondition(
                    "log needs a series of the form 1 + O(hbar)".into(),
                ));
            }
        }
        let hi = self.hi;
        let n = (hi + 1).max(1) as usize;
        let mut out = vec![RatExpr::zero(); n];
        // m S_m = m E_m - sum_{k=1}^{m-1} k S_k E_{m-k}
        for m in 1..n {
            let mut acc = self.coeff(m as i32)?.mul_q(&q_int(m as i64));
            for k in 1..m {
                if out[k].is_zero() {
                    continue;
                }
                let e = self.coeff((m - k) as i32)?;
                if e.is_zero() {
                    continue;
                }
                acc = acc.sub(&out[k].mul_q(&q_int(k as i64)).mul(&e));
            }
            out[m] = acc.mul_q(&(Q::one() / q_int(m as i64)));
        }
        Ok(HSeries { lo: 1.min(hi), hi, coeffs: out[1.min(n - 1).max(0)..].to_vec() })
    }

    /// Multiplicative inverse of a series with invertible hbar-leading term.
    pub fn recip(&self) -> Result<HSeries> {
        let lead = self.coeff(self.lo)?;
        if lead.is_zero() {
            return Err(EngineError::Precondition(
                "recip needs a nonzero leading coefficient".into(),
            ));
        }
        let inv0 = lead.recip();
        let n = self.coeffs.len();
        let mut out = vec![RatExpr::zero(); n];
        out[0] = inv0.clone();
        for m in 1..n {
            let mut acc = RatExpr::zero();
            for k in 1..=m {
                if k < self.coeffs.len() && !self.coeffs[k].is_zero() && !out[m - k].is_zero() {
                    acc = acc.add(&self.coeffs[k].mul(&out[m - k]));
                }
            }
            out[m] = acc.neg().mul(&inv0);
        }
        Ok(HSeries { lo: -self.lo, hi: -self.lo + n as i32 - 1, coeffs: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse;

    #[test]
    fn exp_log_round_trip() {
        let a = parse("z + 1").unwrap();
        let b = parse("u/(z-1)").unwrap();
        let s = HSeries::from_coeffs(1, vec![a, b, parse("3").unwrap(), RatExpr::zero()]);
        let e = s.exp().unwrap();
        let back = e.log().unwrap();
        for k in 1..=4 {
            assert_eq!(back.coeff(k).unwrap(), s.coeff(k).unwrap(), "order {k}");
        }
    }

    #[test]
    fn window_errors() {
        let s = HSeries::from_coeffs(0, vec![RatExpr::one(), RatExpr::int(2)]);
        assert!(s.coeff(2).is_err());
        assert!(s.coeff(-3).unwrap().is_zero());
        let t = s.mul(&s);
        assert_eq!(t.hi, 1);
    }

    #[test]
    fn recip_mul_is_one() {
        let s = HSeries::from_coeffs(-1, vec![parse("2").unwrap(), parse("z").unwrap(), parse("1").unwrap()]);
        let r = s.recip().unwrap();
        let p = s.mul(&r);
        assert!(p.coeff(0).unwrap().is_one());
        for k in 1..=p.hi {
            assert!(p.coeff(k).unwrap().is_zero());
        }
    }
}
