//! Cross-module checks: the topological-recursion wave function against
//! the WKB solutions of the matching isomonodromic systems.

use hyperq_core::curve::parse_curve_file;
use hyperq_core::gd::painleve_u_series;
use hyperq_core::grammar::parse;
use hyperq_core::lax::{gd_lax, quantum_curve_op, quantum_op_residual, wkb_solve, USeriesCtx};
use hyperq_core::loopsys::LoopSystem;
use hyperq_core::poly::Q;
use hyperq_core::ratexpr::RatExpr;
use hyperq_core::recursion::Engine;
use hyperq_core::vars::var;
use hyperq_core::wave::WaveSystem;
use num::{One, Zero};

fn airy_engine() -> Engine {
    Engine::new(parse_curve_file("[curve]\nname = airy\nparameters =\nx = z^2\ny = z\n").unwrap())
}

fn painleve_engine() -> Engine {
    Engine::new(
        parse_curve_file(
            "[curve]\nname = painleve1\nparameters = u\nx = z^2 - 2*u\ny = z^3 - 3*u*z\n\n[times]\nt = -3*u^2\ndt/du = -6*u\n",
        )
        .unwrap(),
    )
}

#[test]
fn airy_wkb_matches_quantum_limit() {
    // TR side: regularized one-point data on x = z^2, y = z.
    let eng = airy_engine();
    let wave = WaveSystem::new(&eng);
    let phi_tr = wave.one_point_phi(3).unwrap();
    // ODE side: the m = 0 system on the shifted chart x = z^2 - 2u; the
    // corrections are u-free, so they compare directly.
    let pair = gd_lax(&[Q::one()]);
    let ctx = USeriesCtx::airy(5);
    let x = parse("z^2 - 2*u").unwrap();
    let y = parse("z").unwrap();
    let sol = wkb_solve(&pair, &ctx, &x, &y, 3).unwrap();
    for m in 2..=3usize {
        let wkb_phi = &sol.phi[m - 2];
        assert!(
            !wkb_phi.contains_var(var("u")),
            "Airy wkb correction depends on u: {}",
            wkb_phi.to_grammar()
        );
        assert_eq!(*wkb_phi, phi_tr[m], "Phi_{m} mismatch");
    }
    // And the exponentiated series agree with quantum_limit through hbar^2.
    let ql = wave.quantum_limit(2).unwrap();
    for k in 0..=2 {
        assert_eq!(ql.coeff(k).unwrap(), sol.a.coeff(k).unwrap(), "order {k}");
    }
}

#[test]
fn painleve_quantum_curve_annihilates_tr_wave() {
    // The quantum-curve operator of the cubic-family Lax pair kills the
    // TR one-point wave function through hbar^3.
    let eng = painleve_engine();
    let wave = WaveSystem::new(&eng);
    let phi_tr = wave.one_point_phi(4).unwrap();
    let z = var("z");
    let x = parse("z^2 - 2*u").unwrap();
    let xprime = x.derivative(z);
    let mut aders: Vec<RatExpr> = vec![RatExpr::zero(); 5];
    aders[0] = parse("z^3 - 3*u*z").unwrap();
    aders[1] = xprime
        .derivative(z)
        .div(&xprime.mul(&xprime))
        .mul_q(&Q::new((-1).into(), 2.into()));
    for m in 2..=4usize {
        aders[m] = phi_tr[m].derivative(z).div(&xprime);
    }
    let pair = gd_lax(&[Q::zero(), Q::one()]);
    let op = quantum_curve_op(&pair).unwrap();
    let ctx = USeriesCtx::painleve(6);
    let res = quantum_op_residual(&op, &ctx, &x, &aders).unwrap();
    for ell in 0..=3 {
        let c = res.coeff(ell).unwrap();
        assert!(c.is_zero(), "order {ell}: {}", c.to_grammar());
    }
}

#[test]
fn painleve_wkb_matches_quantum_limit() {
    // Same statement order by order on the exponent corrections.
    let eng = painleve_engine();
    let wave = WaveSystem::new(&eng);
    let phi_tr = wave.one_point_phi(3).unwrap();
    let pair = gd_lax(&[Q::zero(), Q::one()]);
    let ctx = USeriesCtx::painleve(5);
    let x = parse("z^2 - 2*u").unwrap();
    let y = parse("z^3 - 3*u*z").unwrap();
    let sol = wkb_solve(&pair, &ctx, &x, &y, 3).unwrap();
    for m in 2..=3usize {
        assert_eq!(sol.phi[m - 2], phi_tr[m], "Phi_{m} mismatch");
    }
}

#[test]
fn det_identity_hbar2_matches_recursion_side() {
    // -det L - R at hbar^2 equals dF_1/dt computed from omega_{1,1}.
    let eng = painleve_engine();
    let ls = LoopSystem::new(&eng);
    let op = ls.build_l();
    let lf1 = ls.apply_l(&op, 1, 0).unwrap();
    assert_eq!(lf1, parse("1/(144*u^2)").unwrap());
    let pair = gd_lax(&[Q::zero(), Q::one()]);
    let ctx = USeriesCtx::painleve(2);
    let det = pair.det_l();
    let s = ctx.xpoly_series(&det, &RatExpr::var(var("x"))).neg();
    let r = parse("x^3 - 3*u^2*x + 2*u^3").unwrap();
    let lhs2 = s.coeff(2).unwrap().sub(&RatExpr::zero());
    let lhs0 = s.coeff(0).unwrap().sub(&r);
    assert!(lhs0.is_zero());
    assert_eq!(lhs2, lf1);
    // c-series consistency underneath it all.
    assert_eq!(painleve_u_series(1)[1], Q::new((-1).into(), 432.into()));
}
