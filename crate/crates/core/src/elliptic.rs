//! Numeric reproduction of the non-degenerate elliptic parameter
//! dictionary via Eisenstein series.
//!
//! Production evaluation uses q-expansions (geometric convergence);
//! direct lattice sums serve as the independent test oracle with their own
//! tail bound. Sums are accumulated with compensated (Kahan) summation.

use crate::error::{EngineError, Result};
use num::complex::Complex64;

const PI: f64 = std::f64::consts::PI;

/// Kahan-compensated complex accumulator.
#[derive(Default, Clone, Copy)]
pub struct KahanC {
    sum: Complex64,
    carry: Complex64,
}

impl KahanC {
    pub fn add(&mut self, v: Complex64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> Complex64 {
        self.sum
    }
}

fn check_tau(tau: Complex64) -> Result<()> {
    if tau.im <= 0.0 {
        return Err(EngineError::Precondition("Im tau must be positive".into()));
    }
    Ok(())
}

/// Divisor power sum `sigma_p(n)`.
fn sigma(p: u32, n: u64) -> f64 {
    let mut s = 0f64;
    for d in 1..=n {
        if n % d == 0 {
            s += (d as f64).powi(p as i32);
        }
    }
    s
}

/// Eisenstein series `G_k(tau) = sum'_{(m,n)} (m + n tau)^{-k}` for
/// `k = 2, 4, 6` (Eisenstein summation at `k = 2`), via the q-expansion.
/// Returns `(value, tail_bound)`.
pub fn eisenstein_q(k: u32, tau: Complex64, n_terms: u32) -> Result<(Complex64, f64)> {
    check_tau(tau)?;
    if !(k == 2 || k == 4 || k == 6) {
        return Err(EngineError::Precondition(format!("G_{k} not supported")));
    }
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let (zeta2, coeff, p) = match k {
        2 => (PI * PI / 3.0, -8.0 * PI * PI, 1),
        4 => (PI.powi(4) / 45.0, 16.0 * PI.powi(4) / 3.0, 3),
        6 => (2.0 * PI.powi(6) / 945.0, -16.0 * PI.powi(6) / 15.0, 5),
        _ => unreachable!(),
    };
    let mut acc = KahanC::default();
    acc.add(Complex64::new(zeta2, 0.0));
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..=n_terms {
        qn *= q;
        acc.add(qn * (coeff * sigma(p, n as u64)));
    }
    // Geometric tail bound: |sigma_p(n)| <= n^{p+1}, |q| < 1.
    let aq = q.norm();
    let nt = n_terms as f64 + 1.0;
    let tail = coeff.abs() * nt.powi(p as i32 + 1) * aq.powf(nt) / (1.0 - aq).max(1e-300);
    Ok((acc.value(), tail))
}

/// `d G_4 / d tau` via termwise q-differentiation.
pub fn eisenstein_g4_dtau(tau: Complex64, n_terms: u32) -> Result<Complex64> {
    check_tau(tau)?;
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let coeff = 16.0 * PI.powi(4) / 3.0;
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut acc = KahanC::default();
    let mut qn = Complex64::new(1.0, 0.0);
    for n in 1..=n_terms {
        qn *= q;
        acc.add(qn * (coeff * sigma(3, n as u64) * n as f64) * two_pi_i);
    }
    Ok(acc.value())
}

/// Direct lattice sum `sum'_{|m|,|n| <= cutoff} (m + n tau)^{-k}` with its
/// tail bound; the independent oracle for `k = 4, 6`.
pub fn eisenstein_lattice(k: u32, tau: Complex64, cutoff: i64) -> Result<(Complex64, f64)> {
    check_tau(tau)?;
    if !(k == 4 || k == 6) {
        return Err(EngineError::Precondition("lattice oracle needs k >= 4".into()));
    }
    if cutoff < 1 {
        return Err(EngineError::Precondition("cutoff must be >= 1".into()));
    }
    let mut acc = KahanC::default();
    // Sum shells outward so small terms accumulate first.
    for shell in (1..=cutoff).rev() {
        let mut ring = KahanC::default();
        for m in -shell..=shell {
            for n in -shell..=shell {
                if m.abs().max(n.abs()) != shell {
                    continue;
                }
                let w = Complex64::new(m as f64, 0.0) + tau * n as f64;
                ring.add(w.powi(-(k as i32)));
            }
        }
        acc.add(ring.value());
    }
    // |m + n tau| >= c * max(|m|,|n|) with c from the fundamental cell.
    let c = lattice_gap(tau);
    let kk = k as f64;
    let tail = 8.0 / (c.powi(k as i32) * (kk - 2.0) * (cutoff as f64).powf(kk - 2.0));
    Ok((acc.value(), tail))
}

fn lattice_gap(tau: Complex64) -> f64 {
    // min over the unit shell of |m + n tau| / max(|m|,|n|).
    let mut best = f64::INFINITY;
    for m in -1i64..=1 {
        for n in -1i64..=1 {
            if m == 0 && n == 0 {
                continue;
            }
            let w = (Complex64::new(m as f64, 0.0) + tau * n as f64).norm();
            best = best.min(w / (m.abs().max(n.abs()) as f64));
        }
    }
    best
}

/// Which derivative normalization `G_4'` uses, fixed by the numeric
/// `dF_0 = V dt + I d eps` test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivConvention {
    /// `G_4' = d G_4 / d tau`.
    DTau,
    /// `G_4' = -d G_4 / d tau` (opposite A-cycle orientation).
    NegDTau,
    /// `G_4' = (2 pi i)^{-1} d G_4 / d tau = q d/dq G_4`.
    QdQ,
    /// `G_4' = -(2 pi i)^{-1} d G_4 / d tau`.
    NegQdQ,
}

/// Normalization of the second term of `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IForm {
    /// `I = 2 pi i tau eps + (4/5) nu t` as displayed.
    Displayed,
    /// `I = 2 pi i tau eps + (8 pi i/5) nu t`, the value of the B-period
    /// of `y dx` via the Legendre relation.
    Legendre,
}

#[derive(Debug, Clone, Copy)]
pub struct EllipticParams {
    pub nu: Complex64,
    pub tau: Complex64,
    pub t: Complex64,
    pub v: Complex64,
    pub eps: Complex64,
    pub i_period: Complex64,
    pub f0: Complex64,
    pub f1: Option<Complex64>,
    pub convention: DerivConvention,
    pub i_form: IForm,
}

const N_TERMS: u32 = 64;

fn dictionary_with(
    nu: Complex64,
    tau: Complex64,
    conv: DerivConvention,
    i_form: IForm,
) -> Result<EllipticParams> {
    let (g4, _) = eisenstein_q(4, tau, N_TERMS)?;
    let (g6, _) = eisenstein_q(6, tau, N_TERMS)?;
    let g4p = {
        let d = eisenstein_g4_dtau(tau, N_TERMS)?;
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        match conv {
            DerivConvention::DTau => d,
            DerivConvention::NegDTau => -d,
            DerivConvention::QdQ => d / two_pi_i,
            DerivConvention::NegQdQ => -d / two_pi_i,
        }
    };
    let t = -15.0 * nu.powi(4) * g4;
    let v = -35.0 * nu.powi(6) * g6;
    let eps = 3.0 * nu.powi(5) * g4p;
    let i_second = match i_form {
        IForm::Displayed => Complex64::new(0.8, 0.0),
        IForm::Legendre => Complex64::new(0.0, 8.0 * PI / 5.0),
    };
    let i_period = Complex64::new(0.0, 2.0 * PI) * tau * eps + i_second * nu * t;
    let f0 = 0.4 * t * v + 0.5 * i_period * eps;
    let disc = 4.0 * t.powi(3) + 27.0 * v.powi(2);
    let f1 = if disc.norm() < 1e-300 {
        None
    } else {
        Some(disc.ln() / 48.0 + (2.0 / nu).ln() / 4.0)
    };
    Ok(EllipticParams { nu, tau, t, v, eps, i_period, f0, f1, convention: conv, i_form })
}

/// Relative error of `dF_0 = V dt + I d eps` along the tau direction with
/// Richardson-extrapolated central differences.
pub fn df0_relation_error(
    nu: Complex64,
    tau: Complex64,
    conv: DerivConvention,
    i_form: IForm,
) -> Result<f64> {
    let d = |h: f64| -> Result<(Complex64, Complex64, Complex64)> {
        let hp = Complex64::new(h, 0.0);
        let a = dictionary_with(nu, tau + hp, conv, i_form)?;
        let b = dictionary_with(nu, tau - hp, conv, i_form)?;
        Ok((
            (a.f0 - b.f0) / (2.0 * h),
            (a.t - b.t) / (2.0 * h),
            (a.eps - b.eps) / (2.0 * h),
        ))
    };
    let base = dictionary_with(nu, tau, conv, i_form)?;
    let mut worst = 0f64;
    for h0 in [1e-3] {
        let (f1a, t1a, e1a) = d(h0)?;
        let (f1b, t1b, e1b) = d(h0 / 2.0)?;
        let df0 = (4.0 * f1b - f1a) / 3.0;
        let dt = (4.0 * t1b - t1a) / 3.0;
        let de = (4.0 * e1b - e1a) / 3.0;
        let rhs = base.v * dt + base.i_period * de;
        let err = (df0 - rhs).norm() / df0.norm().max(1e-300);
        worst = worst.max(err);
    }
    // Also the nu direction (holds for any convention; a sanity anchor).
    let dnu = |h: f64| -> Result<(Complex64, Complex64, Complex64)> {
        let hp = Complex64::new(h, 0.0);
        let a = dictionary_with(nu + hp, tau, conv, i_form)?;
        let b = dictionary_with(nu - hp, tau, conv, i_form)?;
        Ok((
            (a.f0 - b.f0) / (2.0 * h),
            (a.t - b.t) / (2.0 * h),
            (a.eps - b.eps) / (2.0 * h),
        ))
    };
    let (f1a, t1a, e1a) = dnu(1e-3)?;
    let (f1b, t1b, e1b) = dnu(5e-4)?;
    let df0 = (4.0 * f1b - f1a) / 3.0;
    let dt = (4.0 * t1b - t1a) / 3.0;
    let de = (4.0 * e1b - e1a) / 3.0;
    let rhs = base.v * dt + base.i_period * de;
    worst = worst.max((df0 - rhs).norm() / df0.norm().max(1e-300));
    Ok(worst)
}

/// Assemble the dictionary, selecting the `G_4'` convention that satisfies
/// `dF_0 = V dt + I d eps`.
pub fn dictionary(nu: Complex64, tau: Complex64) -> Result<EllipticParams> {
    check_tau(tau)?;
    if nu.norm() < 1e-12 {
        return Err(EngineError::Precondition("nu must be nonzero".into()));
    }
    let mut best = None;
    for conv in [
        DerivConvention::DTau,
        DerivConvention::NegDTau,
        DerivConvention::QdQ,
        DerivConvention::NegQdQ,
    ] {
        for i_form in [IForm::Displayed, IForm::Legendre] {
            let err = df0_relation_error(nu, tau, conv, i_form)?;
            match best {
                None => best = Some((conv, i_form, err)),
                Some((_, _, e)) if err < e => best = Some((conv, i_form, err)),
                _ => {}
            }
        }
    }
    let (conv, i_form, _) = best.unwrap();
    dictionary_with(nu, tau, conv, i_form)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn symmetry_zeros() {
        // Square lattice kills G_6; hexagonal kills G_4.
        let (g6_i, _) = eisenstein_q(6, c(0.0, 1.0), 80).unwrap();
        assert!(g6_i.norm() < 1e-10, "G_6(i) = {g6_i}");
        let rho = c(-0.5, 3f64.sqrt() / 2.0);
        let (g4_rho, _) = eisenstein_q(4, rho, 80).unwrap();
        assert!(g4_rho.norm() < 1e-10, "G_4(rho) = {g4_rho}");
    }

    #[test]
    fn lattice_oracle_agrees_with_q_series() {
        for tau in [c(0.0, 1.0), c(0.3, 1.1), c(-0.2, 0.8)] {
            for k in [4u32, 6] {
                let (qv, qtail) = eisenstein_q(k, tau, 80).unwrap();
                let (lv, ltail) = eisenstein_lattice(k, tau, 120).unwrap();
                assert!(
                    (qv - lv).norm() <= ltail + qtail + 1e-12,
                    "k={k} tau={tau}: q={qv} lattice={lv} tail={ltail}"
                );
            }
        }
    }

    #[test]
    fn lattice_tail_bound_shrinks_on_doubling() {
        let tau = c(0.2, 1.3);
        let (v1, t1) = eisenstein_lattice(4, tau, 60).unwrap();
        let (v2, t2) = eisenstein_lattice(4, tau, 120).unwrap();
        assert!(t2 < t1);
        assert!((v1 - v2).norm() <= t1 + 1e-12);
    }

    #[test]
    fn df0_relation_selects_the_legendre_form() {
        let p = dictionary(c(1.1, 0.05), c(0.15, 1.05)).unwrap();
        let err = df0_relation_error(p.nu, p.tau, p.convention, p.i_form).unwrap();
        assert!(err < 1e-6, "relative error {err}");
        // The A-period of y dx evaluates to -3 nu^5 dG_4/dtau and the
        // Legendre relation fixes the second term of I; the displayed
        // (4/5) nu t form fails by a wide margin for every convention.
        assert_eq!(p.convention, DerivConvention::NegDTau);
        assert_eq!(p.i_form, IForm::Legendre);
        for conv in [
            DerivConvention::DTau,
            DerivConvention::NegDTau,
            DerivConvention::QdQ,
            DerivConvention::NegQdQ,
        ] {
            let bad = df0_relation_error(p.nu, p.tau, conv, IForm::Displayed).unwrap();
            assert!(bad > 1e-3, "displayed I unexpectedly close: {bad}");
        }
    }

    #[test]
    fn degenerate_limit_recovers_cubic_values() {
        // tau -> i oo: eps -> 0, F_0 -> (2/5) t V, and with V = 2u^3 the
        // prepotential approaches -(12/5) u^5.
        let nu = c(0.9, 0.0);
        let p = dictionary(nu, c(0.0, 6.0)).unwrap();
        assert!(p.eps.norm() < 1e-10);
        let f0_expect = 0.4 * p.t * p.v;
        assert!((p.f0 - f0_expect).norm() / p.f0.norm() < 1e-4);
        let u = (p.v / 2.0).powf(1.0 / 3.0);
        // Branch choice: t = -3u^2 must hold for the right cube root.
        let mut best = f64::INFINITY;
        for k in 0..3 {
            let rot = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
            let uu = u * rot;
            let terr = (p.t + 3.0 * uu * uu).norm();
            if terr < best {
                best = terr;
            }
        }
        assert!(best / p.t.norm() < 1e-4, "t vs -3u^2 mismatch {best}");
        let mut f0err = f64::INFINITY;
        for k in 0..3 {
            let rot = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
            let uu = u * rot;
            let err = (p.f0 + 2.4 * uu.powi(5)).norm() / p.f0.norm();
            if err < f0err {
                f0err = err;
            }
        }
        assert!(f0err < 1e-4, "F0 vs -(12/5)u^5 mismatch {f0err}");
    }
}
