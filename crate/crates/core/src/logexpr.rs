//! Rational-plus-logarithmic expressions.
//!
//! `LogExpr` holds a rational part and a list of `coeff * log(arg)` atoms.
//! Atoms with syntactically equal arguments are merged. Differentiation of
//! an atom with rational argument stays in the log-free field whenever the
//! coefficient does not involve the differentiation variable.

use crate::ratexpr::RatExpr;
use crate::vars::VarId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogExpr {
    pub rat: RatExpr,
    /// (coefficient, argument) pairs.
    pub atoms: Vec<(RatExpr, RatExpr)>,
}

impl LogExpr {
    pub fn zero() -> Self {
        LogExpr { rat: RatExpr::zero(), atoms: Vec::new() }
    }

    pub fn from_rat(rat: RatExpr) -> Self {
        LogExpr { rat, atoms: Vec::new() }
    }

    pub fn log(coeff: RatExpr, arg: RatExpr) -> Self {
        let mut e = LogExpr::zero();
        e.push_atom(coeff, arg);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.atoms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.atoms.is_empty()
    }

    fn push_atom(&mut self, coeff: RatExpr, arg: RatExpr) {
        if coeff.is_zero() || arg.is_one() {
            return;
        }
        for (c, a) in self.atoms.iter_mut() {
            if *a == arg {
                *c = c.add(&coeff);
                return;
            }
        }
        self.atoms.push((coeff, arg));
    }

    fn prune(&mut self) {
        self.atoms.retain(|(c, _)| !c.is_zero());
        self.atoms.sort_by(|a, b| a.1.num.terms.cmp(&b.1.num.terms).then(a.1.den.cmp(&b.1.den)));
    }

    pub fn add(&self, other: &LogExpr) -> LogExpr {
        let mut out = LogExpr { rat: self.rat.add(&other.rat), atoms: self.atoms.clone() };
        for (c, a) in &other.atoms {
            out.push_atom(c.clone(), a.clone());
        }
        out.prune();
        out
    }

    pub fn neg(&self) -> LogExpr {
        LogExpr {
            rat: self.rat.neg(),
            atoms: self.atoms.iter().map(|(c, a)| (c.neg(), a.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &LogExpr) -> LogExpr {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &RatExpr) -> LogExpr {
        let mut out = LogExpr {
            rat: self.rat.mul(k),
            atoms: self.atoms.iter().map(|(c, a)| (c.mul(k), a.clone())).collect(),
        };
        out.prune();
        out
    }

    /// d/dv, staying logarithmic only where a coefficient depends on `v`.
    pub fn derivative(&self, v: VarId) -> LogExpr {
        let mut out = LogExpr::from_rat(self.rat.derivative(v));
        for (c, a) in &self.atoms {
            // d(c log a) = c a'/a + c' log a
            let da = a.derivative(v);
            if !da.is_zero() {
                out.rat = out.rat.add(&c.mul(&da).div(a));
            }
            let dc = c.derivative(v);
            if !dc.is_zero() {
                out.push_atom(dc, a.clone());
            }
        }
        out.prune();
        out
    }

    /// d/dv when the result is known to be log-free; panics otherwise.
    pub fn derivative_rat(&self, v: VarId) -> RatExpr {
        let d = self.derivative(v);
        assert!(
            d.is_rational(),
            "derivative kept a log atom; coefficient depends on the variable"
        );
        d.rat
    }

    /// Substitute `v -> val` in the rational part and in every atom.
    pub fn subst(&self, v: VarId, val: &RatExpr) -> LogExpr {
        let mut out = LogExpr::from_rat(self.rat.subst(v, val));
        for (c, a) in &self.atoms {
            out.push_atom(c.subst(v, val), a.subst(v, val));
        }
        out.prune();
        out
    }

    pub fn rename_vars(&self, map: &[(VarId, VarId)]) -> LogExpr {
        let mut out = LogExpr::from_rat(self.rat.rename_vars(map));
        for (c, a) in &self.atoms {
            out.push_atom(c.rename_vars(map), a.rename_vars(map));
        }
        out.prune();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vars::var;

    #[test]
    fn log_derivative_is_rational() {
        let z = var("ltest_z");
        let zr = RatExpr::var(z);
        // log(z) + log(z - 1)
        let e = LogExpr::log(RatExpr::one(), zr.clone())
            .add(&LogExpr::log(RatExpr::one(), zr.sub(&RatExpr::int(1))));
        let d = e.derivative_rat(z);
        // 1/z + 1/(z-1) = (2z-1)/(z(z-1))
        let expect = RatExpr::one()
            .div(&zr)
            .add(&RatExpr::one().div(&zr.sub(&RatExpr::int(1))));
        assert_eq!(d, expect);
    }

    #[test]
    fn atoms_merge() {
        let z = var("ltest_z");
        let zr = RatExpr::var(z);
        let a = LogExpr::log(RatExpr::int(2), zr.clone());
        let b = LogExpr::log(RatExpr::int(-2), zr.clone());
        assert!(a.add(&b).is_zero());
    }
}
