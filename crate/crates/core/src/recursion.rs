//! Topological recursion proper: the memoized computation of the
//! correlators `omega_{g,n}` by residues at ramification points, and the
//! linear/quadratic loop-equation checkers.
//!
//! Densities: `omega_{g,n} = w(z_1..z_n) dz_1...dz_n` is stored as the
//! scalar `w` in the canonical slot variables. Evaluation at `sigma(z) = -z`
//! is the pullback, so each sigma-slot contributes the substitution
//! `z -> -z` together with one factor `-1` from `d(-z) = -dz`. The kernel
//! is `K(z0,z) = (1/(z0-z) - 1/(z0+z)) dz0 / (4 y(z) x'(z) dz)`; its
//! normalization is pinned by the quadratic loop equations, which fail for
//! any other relative sign.

use crate::curve::SpectralCurve;
use crate::error::{EngineError, Result};
use crate::poly::q_int;
use crate::ratexpr::RatExpr;
use crate::series::{residue, Point};
use crate::vars::{var, VarId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub const MAX_SLOTS: usize = 8;

pub struct Engine {
    pub curve: SpectralCurve,
    /// Canonical slot variables z1..z8.
    pub slots: Vec<VarId>,
    /// Residue scratch variable.
    zr: VarId,
    /// Second scratch for the diagonal sigma-slot.
    zr2: VarId,
    table: Mutex<HashMap<(u32, u32), Arc<RatExpr>>>,
}

impl Engine {
    pub fn new(curve: SpectralCurve) -> Engine {
        let slots = (1..=MAX_SLOTS).map(|i| var(&format!("z{i}"))).collect();
        Engine {
            curve,
            slots,
            zr: var("zr"),
            zr2: var("zs"),
            table: Mutex::new(HashMap::new()),
        }
    }

    /// Density of `omega_{g,n}` in slot variables `z1..zn`.
    pub fn omega(&self, g: u32, n: u32) -> Result<Arc<RatExpr>> {
        assert!(n >= 1, "omega_{{g,0}} has no density; use the loop-system module");
        assert!(n as usize <= MAX_SLOTS, "slot budget exceeded");
        if let Some(w) = self.table.lock().unwrap().get(&(g, n)) {
            return Ok(w.clone());
        }
        let w = self.compute_omega(g, n)?;
        let mut tab = self.table.lock().unwrap();
        let arc = tab.entry((g, n)).or_insert_with(|| Arc::new(w));
        Ok(arc.clone())
    }

    /// Known table entries (for cache export).
    pub fn table_entries(&self) -> Vec<((u32, u32), Arc<RatExpr>)> {
        let tab = self.table.lock().unwrap();
        let mut v: Vec<_> = tab.iter().map(|(k, w)| (*k, w.clone())).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    pub fn insert_cached(&self, g: u32, n: u32, w: RatExpr) {
        self.table.lock().unwrap().insert((g, n), Arc::new(w));
    }

    fn compute_omega(&self, g: u32, n: u32) -> Result<RatExpr> {
        let z = self.curve.z;
        if (g, n) == (0, 1) {
            return Ok(self.curve.w01().rename_vars(&[(z, self.slots[0])]));
        }
        if (g, n) == (0, 2) {
            let d = RatExpr::var(self.slots[0]).sub(&RatExpr::var(self.slots[1]));
            return Ok(RatExpr::one().div(&d.mul(&d)));
        }
        if 2 * g + n <= 2 {
            return Err(EngineError::Precondition(format!(
                "omega_({g},{n}) is not produced by the recursion"
            )));
        }
        // Recursion in the first slot; spectators are slots[1..n].
        let zr = self.zr;
        let kernel = self.kernel_density();
        let mut total = RatExpr::zero();
        for term in self.bracket_terms(g, n)? {
            let integrand = kernel.mul(&term);
            for a in self.ram_points() {
                let point = if a.is_zero() { Point::Zero } else { Point::Finite(a.clone()) };
                total = total.add(&residue(&integrand, zr, &point)?);
            }
        }
        Ok(total)
    }

    /// Kernel density in (slots[0], zr).
    fn kernel_density(&self) -> RatExpr {
        let z0 = RatExpr::var(self.slots[0]);
        let zrr = RatExpr::var(self.zr);
        let z = self.curve.z;
        let y = self.curve.y.rename_vars(&[(z, self.zr)]);
        let xp = self.curve.x.derivative(z).rename_vars(&[(z, self.zr)]);
        let half_b = RatExpr::one()
            .div(&z0.sub(&zrr))
            .sub(&RatExpr::one().div(&z0.add(&zrr)));
        half_b.div(&y.mul(&xp).mul_q(&q_int(4)))
    }

    fn ram_points(&self) -> &[RatExpr] {
        &self.curve.ram
    }

    /// The recursion bracket as a list of terms in (zr, slots[1..n]),
    /// with all sigma-pullback signs included.
    fn bracket_terms(&self, g: u32, n: u32) -> Result<Vec<RatExpr>> {
        let spectators: Vec<VarId> = self.slots[1..n as usize].to_vec();
        let m = spectators.len();
        let mut terms = Vec::new();
        // omega_{g-1, n+1}(zr, -zr, spectators)
        if g >= 1 {
            let w = self.omega(g - 1, n + 1)?;
            let mut map = vec![(self.slots[0], self.zr), (self.slots[1], self.zr2)];
            for (i, s) in spectators.iter().enumerate() {
                map.push((self.slots[2 + i], *s));
            }
            let renamed = w.rename_vars(&map).subst_neg(self.zr2);
            let diag = renamed.rename_vars(&[(self.zr2, self.zr)]);
            terms.push(diag.neg());
        }
        // Stable products over genus splits and spectator subsets.
        for g1 in 0..=g {
            let g2 = g - g1;
            for mask in 0u32..(1 << m) {
                let i1: Vec<VarId> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| spectators[i]).collect();
                let i2: Vec<VarId> = (0..m).filter(|i| mask & (1 << i) == 0).map(|i| spectators[i]).collect();
                // Exclude omega_{0,1} factors.
                if (g1 == 0 && i1.is_empty()) || (g2 == 0 && i2.is_empty()) {
                    continue;
                }
                let wa = self.omega(g1, 1 + i1.len() as u32)?;
                let mut map_a = vec![(self.slots[0], self.zr)];
                for (i, s) in i1.iter().enumerate() {
                    map_a.push((self.slots[1 + i], *s));
                }
                let fa = wa.rename_vars(&map_a);
                let wb = self.omega(g2, 1 + i2.len() as u32)?;
                let mut map_b = vec![(self.slots[0], self.zr)];
                for (i, s) in i2.iter().enumerate() {
                    map_b.push((self.slots[1 + i], *s));
                }
                let fb = wb.rename_vars(&map_b).subst_neg(self.zr);
                terms.push(fa.mul(&fb).neg());
            }
        }
        Ok(terms)
    }

    /// Full quadratic-loop bracket (all partitions, `omega_{0,1}` included),
    /// as a single density in (zr, slots[1..=n]). Only used at low levels;
    /// the loop checker works term-by-term instead.
    pub fn quadratic_bracket(&self, g: u32, n: u32) -> Result<RatExpr> {
        let mut total = RatExpr::zero();
        for (_, t) in self.quadratic_bracket_terms(g, n)? {
            total = total.add(&t);
        }
        Ok(total)
    }

    /// Terms of the full quadratic bracket, keyed so that the sigma-image
    /// of the term with key `(g1, mask)` is the term with key
    /// `(g - g1, !mask)`; the diagonal term carries key `(u32::MAX, 0)`.
    pub fn quadratic_bracket_terms(&self, g: u32, n: u32) -> Result<Vec<((u32, u32), RatExpr)>> {
        let spectators: Vec<VarId> = self.slots[1..=n as usize].to_vec();
        let m = spectators.len();
        let mut terms = Vec::new();
        if g >= 1 {
            let w = self.omega(g - 1, n + 2)?;
            let mut map = vec![(self.slots[0], self.zr), (self.slots[1], self.zr2)];
            for (i, s) in spectators.iter().enumerate() {
                map.push((self.slots[2 + i], *s));
            }
            let renamed = w.rename_vars(&map).subst_neg(self.zr2);
            terms.push(((u32::MAX, 0), renamed.rename_vars(&[(self.zr2, self.zr)]).neg()));
        }
        for g1 in 0..=g {
            let g2 = g - g1;
            for mask in 0u32..(1 << m) {
                let i1: Vec<VarId> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| spectators[i]).collect();
                let i2: Vec<VarId> = (0..m).filter(|i| mask & (1 << i) == 0).map(|i| spectators[i]).collect();
                let wa = self.omega(g1, 1 + i1.len() as u32)?;
                let mut map_a = vec![(self.slots[0], self.zr)];
                for (i, s) in i1.iter().enumerate() {
                    map_a.push((self.slots[1 + i], *s));
                }
                let fa = wa.rename_vars(&map_a);
                let wb = self.omega(g2, 1 + i2.len() as u32)?;
                let mut map_b = vec![(self.slots[0], self.zr)];
                for (i, s) in i2.iter().enumerate() {
                    map_b.push((self.slots[1 + i], *s));
                }
                let fb = wb.rename_vars(&map_b).subst_neg(self.zr);
                terms.push(((g1, mask), fa.mul(&fb).neg()));
            }
        }
        Ok(terms)
    }

    /// Linear loop equation for `(g,n)`:
    /// `omega_{g,n+1}(z,.) + omega_{g,n+1}(-z,.)` must equal
    /// `delta_{g,0} delta_{n,1} dx(z) dx(z1) / (x(z)-x(z1))^2`.
    /// Returns the witness difference (zero on pass) with `z = zr`.
    pub fn linear_loop_witness(&self, g: u32, n: u32) -> Result<RatExpr> {
        let w = self.omega(g, n + 1)?;
        let mut map = vec![(self.slots[0], self.zr)];
        for i in 0..n as usize {
            map.push((self.slots[1 + i], self.slots[1 + i]));
        }
        let wz = w.rename_vars(&map);
        // pullback at -z: substitute and negate once.
        let wneg = wz.subst_neg(self.zr).neg();
        let mut lhs = wz.add(&wneg);
        if g == 0 && n == 1 {
            let z = self.curve.z;
            let xz = self.curve.x.rename_vars(&[(z, self.zr)]);
            let x1 = self.curve.x.rename_vars(&[(z, self.slots[1])]);
            let xpz = self.curve.x.derivative(z).rename_vars(&[(z, self.zr)]);
            let xp1 = self.curve.x.derivative(z).rename_vars(&[(z, self.slots[1])]);
            let d = xz.sub(&x1);
            let rhs = xpz.mul(&xp1).div(&d.mul(&d));
            lhs = lhs.sub(&rhs);
        }
        Ok(lhs)
    }

    /// Quadratic loop equation for `(g,n)`: the bracket divided by `dx^2`
    /// must be even in `z` and regular at every finite ramification point.
    ///
    /// Evenness is certified by pairing each partition term with its
    /// sigma-image; regularity by summing per-term Laurent coefficients at
    /// each ramification point below the `dx^2` valuation, which avoids
    /// assembling the full bracket as one fraction.
    pub fn quadratic_loop_check(&self, g: u32, n: u32) -> Result<QuadLoopReport> {
        let terms = self.quadratic_bracket_terms(g, n)?;
        let m = n;
        let full_mask = if m == 0 { 0 } else { (1u32 << m) - 1 };
        let mut even = true;
        let mut odd_witness = RatExpr::zero();
        for ((g1, mask), t) in &terms {
            if *g1 == u32::MAX {
                let image = t.subst_neg(self.zr);
                if image != *t {
                    even = false;
                    odd_witness = odd_witness.add(&t.sub(&image));
                }
                continue;
            }
            // Compare against the partner term once per unordered pair.
            let pg = g - g1;
            let pmask = full_mask & !mask;
            if (*g1, *mask) > (pg, pmask) {
                continue;
            }
            let partner = terms
                .iter()
                .find(|((h, m2), _)| (*h, *m2) == (pg, pmask))
                .map(|(_, t2)| t2)
                .expect("partner term exists");
            let image = partner.subst_neg(self.zr);
            if image != *t {
                even = false;
                odd_witness = odd_witness.add(&t.sub(&image));
            }
        }
        // Regularity: coefficients of (z - a)^e for e < 2 val_a(dx) must
        // cancel in the sum.
        let z = self.curve.z;
        let xp = self.curve.x.derivative(z).rename_vars(&[(z, self.zr)]);
        let mut regular = true;
        for a in self.ram_points() {
            let need = 2 * valuation_at(&xp, self.zr, a);
            let point = if a.is_zero() { Point::Zero } else { Point::Finite(a.clone()) };
            let lo = terms
                .iter()
                .map(|(_, t)| valuation_at(t, self.zr, a))
                .min()
                .unwrap_or(0);
            if lo >= need {
                continue;
            }
            let mut sums = vec![RatExpr::zero(); (need - lo) as usize];
            for (_, t) in &terms {
                let s = crate::series::laurent_expand(t, self.zr, &point, need as i32 - 1)?;
                for e in lo..need {
                    sums[(e - lo) as usize] =
                        sums[(e - lo) as usize].add(&s.coeff(e as i32)?);
                }
            }
            if sums.iter().any(|c| !c.is_zero()) {
                regular = false;
            }
        }
        Ok(QuadLoopReport { even, regular, odd_witness })
    }

    /// Structural invariants of a computed density.
    pub fn check_density_invariants(&self, g: u32, n: u32) -> Result<()> {
        let w = self.omega(g, n)?;
        if 2 * g + n <= 2 {
            return Ok(());
        }
        // Permutation symmetry: adjacent transpositions generate.
        for i in 0..(n as usize - 1) {
            let swapped = w.rename_vars(&[
                (self.slots[i], self.slots[i + 1]),
                (self.slots[i + 1], self.slots[i]),
            ]);
            if swapped != *w.as_ref() {
                return Err(EngineError::Internal(format!(
                    "omega_({g},{n}) not symmetric under slots {i},{}",
                    i + 1
                )));
            }
        }
        // Poles only at ramification points, with vanishing residue there.
        for a in self.ram_points() {
            let point = if a.is_zero() { Point::Zero } else { Point::Finite(a.clone()) };
            let r = residue(&w, self.slots[0], &point)?;
            if !r.is_zero() {
                return Err(EngineError::Internal(format!(
                    "omega_({g},{n}) has a residue at a ramification point"
                )));
            }
        }
        // Decay at infinity in each slot: O(z^-2).
        let deg_num = w.num.degree_in(self.slots[0]) as i64;
        let deg_den: i64 = w
            .den
            .iter()
            .map(|(f, k)| f.degree_in(self.slots[0]) as i64 * *k as i64)
            .sum();
        if deg_num - deg_den > -2 {
            return Err(EngineError::Internal(format!(
                "omega_({g},{n}) does not decay like z^-2 at infinity"
            )));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct QuadLoopReport {
    pub even: bool,
    pub regular: bool,
    pub odd_witness: RatExpr,
}

impl QuadLoopReport {
    pub fn pass(&self) -> bool {
        self.even && self.regular
    }
}

/// Valuation of `f` in `v` at the point `a` (negative for a pole).
pub fn valuation_at(f: &RatExpr, v: VarId, a: &RatExpr) -> i64 {
    if f.is_zero() {
        return i64::MAX;
    }
    if a.is_zero() {
        return f.valuation_in(v);
    }
    let shifted = f.subst(v, &RatExpr::var(v).add(a));
    shifted.valuation_in(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::parse_curve_file;
    use crate::grammar::parse;

    fn airy_engine() -> Engine {
        Engine::new(
            parse_curve_file("[curve]\nname = airy\nparameters =\nx = z^2\ny = z\n").unwrap(),
        )
    }

    fn painleve_engine() -> Engine {
        Engine::new(
            parse_curve_file(
                "[curve]\nname = painleve1\nparameters = u\nx = z^2 - 2*u\ny = z^3 - 3*u*z\n",
            )
            .unwrap(),
        )
    }

    fn finite_engine() -> Engine {
        Engine::new(
            parse_curve_file(
                "[curve]\nname = finite-pole\nparameters = b\nx = z^2\ny = z/(z^2 - b^2)\n",
            )
            .unwrap(),
        )
    }

    #[test]
    fn bergman_density_and_swap() {
        let e = airy_engine();
        let b = e.omega(0, 2).unwrap();
        assert_eq!(*b, parse("1/(z1-z2)^2").unwrap());
        let swapped = b.rename_vars(&[(var("z1"), var("z2")), (var("z2"), var("z1"))]);
        assert_eq!(swapped, *b);
        // B(z, sigma(z)) density after orientation bookkeeping: -1/(4 z^2).
        let diag = b
            .rename_vars(&[(var("z2"), var("zs"))])
            .subst_neg(var("zs"))
            .rename_vars(&[(var("zs"), var("z1"))])
            .neg();
        assert_eq!(diag, parse("-1/(4*z1^2)").unwrap());
    }

    #[test]
    fn airy_w03_against_independent_residue_oracle() {
        // Oracle: single residue at zr = 0 of K(z1,zr) * bracket, assembled
        // from first principles with no engine code path.
        let integrand = parse(
            "(1/(z1-zr) - 1/(z1+zr)) / (8*zr^2) * (-1) * ( 1/((zr-z2)^2*(zr+z3)^2) + 1/((zr-z3)^2*(zr+z2)^2) )",
        )
        .unwrap();
        let oracle = residue(&integrand, var("zr"), &Point::Zero).unwrap();
        assert_eq!(oracle, parse("-1/(2*z1^2*z2^2*z3^2)").unwrap());
        let e = airy_engine();
        let w = e.omega(0, 3).unwrap();
        assert_eq!(*w, oracle);
    }

    #[test]
    fn airy_w11_against_independent_residue_oracle() {
        // Bracket is the sigma-pullback (one factor -1) of the plain
        // diagonal value w_{0,2}(zr,-zr) = 1/(4 zr^2).
        let integrand =
            parse("(1/(z1-zr) - 1/(z1+zr)) / (8*zr^2) * (-1) * (1/(4*zr^2))").unwrap();
        let oracle = residue(&integrand, var("zr"), &Point::Zero).unwrap();
        assert_eq!(oracle, parse("-1/(16*z1^4)").unwrap());
        let e = airy_engine();
        assert_eq!(*e.omega(1, 1).unwrap(), oracle);
    }

    #[test]
    fn painleve_low_omegas() {
        let e = painleve_engine();
        assert_eq!(*e.omega(0, 3).unwrap(), parse("1/(6*u*z1^2*z2^2*z3^2)").unwrap());
        assert_eq!(
            *e.omega(1, 1).unwrap(),
            parse("(z1^2 + 3*u)/(144*u^2*z1^4)").unwrap()
        );
    }

    #[test]
    fn finite_pole_w03() {
        let e = finite_engine();
        assert_eq!(*e.omega(0, 3).unwrap(), parse("b^2/(2*z1^2*z2^2*z3^2)").unwrap());
    }

    #[test]
    fn linear_loop_equations_low_levels() {
        for e in [airy_engine(), painleve_engine(), finite_engine()] {
            // (0,1) carries the Bergman right-hand side.
            let w = e.linear_loop_witness(0, 1).unwrap();
            assert!(w.is_zero(), "curve {} (0,1): {}", e.curve.name, w.to_grammar());
            for (g, n) in [(0, 2), (1, 0), (1, 1), (0, 3)] {
                let w = e.linear_loop_witness(g, n).unwrap();
                assert!(w.is_zero(), "curve {} ({g},{n})", e.curve.name);
            }
        }
    }

    #[test]
    fn quadratic_loop_equations_low_levels() {
        for e in [airy_engine(), painleve_engine(), finite_engine()] {
            for (g, n) in [(0, 1), (0, 2), (1, 0), (1, 1)] {
                let rep = e.quadratic_loop_check(g, n).unwrap();
                assert!(rep.pass(), "curve {} ({g},{n})", e.curve.name);
            }
        }
    }

    #[test]
    fn quadratic_bracket_00_gives_y_squared() {
        // -(1/dx^2) bracket at (0,0) equals y^2 = R(x).
        let e = painleve_engine();
        let bracket = e.quadratic_bracket(0, 0).unwrap();
        let z = e.curve.z;
        let xp = e.curve.x.derivative(z).rename_vars(&[(z, var("zr"))]);
        let q = bracket.div(&xp.mul(&xp)).neg();
        let y2 = e.curve.y.mul(&e.curve.y).rename_vars(&[(z, var("zr"))]);
        assert_eq!(q, y2);
    }

    #[test]
    fn density_invariants_hold() {
        for e in [airy_engine(), painleve_engine()] {
            for (g, n) in [(0, 3), (0, 4), (1, 1), (1, 2), (2, 1)] {
                e.check_density_invariants(g, n).unwrap();
            }
        }
    }

    #[test]
    fn omega_matches_single_residue_oracle_through_level_three() {
        // Independent evaluation route: assemble the kernel times the full
        // bracket as ONE rational function and take a single residue,
        // instead of the per-term residues of the production path.
        for e in [airy_engine(), painleve_engine()] {
            for (g, n) in [(0u32, 3u32), (0, 4), (0, 5), (1, 1), (1, 2), (1, 3), (2, 1)] {
                let kernel = e.kernel_density();
                let mut total_integrand = RatExpr::zero();
                for t in e.bracket_terms(g, n).unwrap() {
                    total_integrand = total_integrand.add(&t);
                }
                let integrand = kernel.mul(&total_integrand);
                let mut oracle = RatExpr::zero();
                for a in e.ram_points() {
                    let pt = if a.is_zero() { Point::Zero } else { Point::Finite(a.clone()) };
                    oracle = oracle.add(&residue(&integrand, var("zr"), &pt).unwrap());
                }
                assert_eq!(
                    oracle,
                    *e.omega(g, n).unwrap(),
                    "curve {} ({g},{n})",
                    e.curve.name
                );
            }
        }
    }

    #[test]
    fn kernel_sign_flip_breaks_quadratic_loop() {
        // The quadratic loop equation pins the kernel normalization: with
        // the opposite sign for omega_{0,3}, regularity at z = 0 fails.
        let e = airy_engine();
        let w03 = e.omega(0, 3).unwrap().neg();
        let flipped = Engine::new(e.curve.clone());
        flipped.insert_cached(0, 3, w03);
        let rep = flipped.quadratic_loop_check(0, 2).unwrap();
        assert!(!rep.pass());
    }
}
