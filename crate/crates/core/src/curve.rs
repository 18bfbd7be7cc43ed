//! Spectral curves `y^2 = R(x)` with the global involution `z -> -z`:
//! validation, pole data, local coordinates, KP times and second-kind
//! periods.
//!
//! A curve is a rational parametrization `x(z), y(z)` over the parameter
//! field with `x` even of degree 2 and `y` odd. Local coordinates at a pole
//! of `y dx` follow `xi = (x - x(pole))^(1/d)`:
//!   - finite unramified pole of `y dx` (`d = 1`): `xi = x - x(pole)`,
//!   - unramified pole of `x` (`d = -1`): `xi = 1/x`,
//!   - ramified pole over `x = infinity` (`d = -2`): `xi = x^(-1/2)` as an
//!     exact Laurent series in `w = 1/z` with leading term `+w`.

use crate::error::{EngineError, Result};
use crate::grammar::parse;
use crate::poly::{q_int, MPoly, Q};
use crate::ratexpr::{split_factor, RatExpr};
use crate::series::{laurent_expand, residue, Laurent, Point};
use crate::vars::{var, VarId};
use num::{One, Signed};

/// One declared deformation direction of the curve family.
#[derive(Debug, Clone)]
pub struct TimeEntry {
    pub name: String,
    /// Value of the time as a parameter-field element.
    pub value: RatExpr,
    /// Jacobian entries d(value)/d(param).
    pub jac: Vec<(VarId, RatExpr)>,
}

/// Pole of `y dx` with its local data.
#[derive(Debug, Clone)]
pub struct Pole {
    pub loc: Point,
    /// `ord` of `x` at the pole: 1, -1 or -2.
    pub d: i32,
    /// Pole order of `y dx`.
    pub m: i32,
    /// `x(pole)` when finite.
    pub x_image: Option<RatExpr>,
    /// Index of the sigma-partner when distinct from this pole.
    pub partner: Option<usize>,
    /// KP times `t_{pole,j}` for `j = 0..=m`.
    pub times: Vec<RatExpr>,
}

#[derive(Debug, Clone)]
pub struct SpectralCurve {
    pub name: String,
    pub params: Vec<VarId>,
    pub z: VarId,
    pub xvar: VarId,
    pub x: RatExpr,
    pub y: RatExpr,
    /// `R` with `y(z)^2 = R(x(z))`, expressed in `xvar`.
    pub r: RatExpr,
    /// `z^2` as a rational function of `xvar`.
    pub z2_of_x: RatExpr,
    /// Finite zeros of `dx` (all simple), in the z-chart.
    pub ram: Vec<RatExpr>,
    /// Whether `x` has a double pole at `z = infinity` (ramified there).
    pub infty_ramified: bool,
    pub poles: Vec<Pole>,
    pub time_map: Vec<TimeEntry>,
}

/// Roots of a polynomial in `v` over the parameter field, with multiplicity.
pub fn rational_roots(p: &MPoly, v: VarId) -> Result<Vec<(RatExpr, u32)>> {
    let mut out: Vec<(RatExpr, u32)> = Vec::new();
    for (f, k) in split_factor(p) {
        if !f.contains_var(v) {
            continue;
        }
        if f.is_monomial() {
            push_root(&mut out, RatExpr::zero(), k * f.valuation_in(v) as u32);
            continue;
        }
        if f.degree_in(v) == 1 {
            let cs = f.as_univar(v);
            let root = RatExpr::from_poly(cs[0].clone())
                .neg()
                .div(&RatExpr::from_poly(cs[1].clone()));
            push_root(&mut out, root, k);
            continue;
        }
        return Err(EngineError::FieldExtension(format!(
            "root of {} is not rational over the parameter field",
            f.to_grammar()
        )));
    }
    Ok(out)
}

fn push_root(out: &mut Vec<(RatExpr, u32)>, r: RatExpr, k: u32) {
    if k == 0 {
        return;
    }
    for (s, m) in out.iter_mut() {
        if *s == r {
            *m += k;
            return;
        }
    }
    out.push((r, k));
}

/// Square root of a rational expression, if it is a perfect square.
pub fn ratexpr_sqrt(f: &RatExpr) -> Option<RatExpr> {
    let num = poly_sqrt_pub(&f.num)?;
    let mut den = RatExpr::one();
    for (g, k) in &f.den {
        if k % 2 == 0 {
            den = den.mul(&RatExpr::from_poly(g.clone()).pow((k / 2) as i32));
        } else {
            let s = poly_sqrt_pub(g)?;
            den = den.mul(&RatExpr::from_poly(s)).mul(&RatExpr::from_poly(g.clone()).pow(((k - 1) / 2) as i32));
        }
    }
    Some(RatExpr::from_poly(num).div(&den))
}

fn poly_sqrt_pub(p: &MPoly) -> Option<MPoly> {
    if p.is_zero() {
        return Some(MPoly::zero());
    }
    if let Some(c) = p.as_constant() {
        if c.is_negative() {
            return None;
        }
        let sn = c.numer().sqrt();
        let sd = c.denom().sqrt();
        if &(&sn * &sn) == c.numer() && &(&sd * &sd) == c.denom() {
            return Some(MPoly::constant(Q::new(sn, sd)));
        }
        return None;
    }
    crate::ratexpr::poly_square_root(p)
}

impl SpectralCurve {
    /// Validate the parametrization and assemble all derived data.
    pub fn validate(
        name: &str,
        params: &[VarId],
        x: RatExpr,
        y: RatExpr,
        time_map: Vec<TimeEntry>,
    ) -> Result<SpectralCurve> {
        let z = var("z");
        let xvar = var("x");
        if x.subst_neg(z) != x {
            return Err(EngineError::InvalidCurve("x(z) != x(-z): involution violated".into()));
        }
        if y.subst_neg(z) != y.neg() {
            return Err(EngineError::InvalidCurve("y(z) != -y(-z): involution violated".into()));
        }
        if y.is_zero() {
            return Err(EngineError::InvalidCurve("y vanishes identically".into()));
        }
        let deg_x = x.num.degree_in(z).max(x.den_poly().degree_in(z));
        if deg_x != 2 {
            return Err(EngineError::InvalidCurve(format!(
                "x must define a degree-2 cover, found degree {deg_x}"
            )));
        }

        // z^2 = rho(x): write x = N(z^2)/D(z^2) and solve the linear relation.
        let n_even = even_to_halved(&x.num, z).ok_or_else(|| {
            EngineError::InvalidCurve("numerator of x is not even in z".into())
        })?;
        let d_even = even_to_halved(&x.den_poly(), z).ok_or_else(|| {
            EngineError::InvalidCurve("denominator of x is not even in z".into())
        })?;
        // N = N0 + N1 s, D = D0 + D1 s with s = z^2.
        let (n0, n1) = (coeff_of(&n_even, z, 0), coeff_of(&n_even, z, 1));
        let (d0, d1) = (coeff_of(&d_even, z, 0), coeff_of(&d_even, z, 1));
        let xr = RatExpr::var(xvar);
        let denom = xr.mul(&RatExpr::from_poly(d1)).sub(&RatExpr::from_poly(n1));
        if denom.is_zero() {
            return Err(EngineError::InvalidCurve("x does not generate the even subfield".into()));
        }
        let z2_of_x = RatExpr::from_poly(n0)
            .sub(&xr.mul(&RatExpr::from_poly(d0)))
            .div(&denom);

        // R(x) from y^2.
        let y2 = y.mul(&y);
        let y2n = even_to_halved(&y2.num, z)
            .ok_or_else(|| EngineError::InvalidCurve("y^2 is not even in z".into()))?;
        let y2d = even_to_halved(&y2.den_poly(), z)
            .ok_or_else(|| EngineError::InvalidCurve("y^2 is not even in z".into()))?;
        let rn = subst_z2(&y2n, z, &z2_of_x);
        let rd = subst_z2(&y2d, z, &z2_of_x);
        let r = rn.div(&rd);
        // Certify y^2 - R(x) = 0.
        let check = r.subst(xvar, &x);
        if check != y2 {
            return Err(EngineError::Internal("R(x(z)) != y(z)^2".into()));
        }

        // Ramification: finite zeros of dx, all simple, plus infinity if x
        // has a double pole there.
        let dx = x.derivative(z);
        let mut ram = Vec::new();
        for (root, k) in rational_roots(&dx.num, z)? {
            if k > 1 {
                return Err(EngineError::InvalidCurve(
                    "non-simple ramification is not supported".into(),
                ));
            }
            // Skip zeros that are actually poles of x.
            let den_at = eval_at(&RatExpr::from_poly(x.den_poly()), z, &root);
            if den_at.is_zero() {
                continue;
            }
            ram.push(root);
        }
        let infty_ramified = x.num.degree_in(z) > x.den_poly().degree_in(z);
        // dy does not vanish at the ramification points.
        let dy = y.derivative(z);
        for a in &ram {
            let dy_num = eval_at(&RatExpr::from_poly(dy.num.clone()), z, a);
            if dy_num.is_zero() {
                return Err(EngineError::InvalidCurve(
                    "zeros of dx and dy coincide".into(),
                ));
            }
        }

        let mut curve = SpectralCurve {
            name: name.to_string(),
            params: params.to_vec(),
            z,
            xvar,
            x,
            y,
            r,
            z2_of_x,
            ram,
            infty_ramified,
            poles: Vec::new(),
            time_map,
        };
        curve.classify_poles()?;
        Ok(curve)
    }

    /// Density of `omega_{0,1} = y dx` against `dz`.
    pub fn w01(&self) -> RatExpr {
        self.y.mul(&self.x.derivative(self.z))
    }

    fn classify_poles(&mut self) -> Result<()> {
        let z = self.z;
        let w01 = self.w01();
        let xden = self.x.den_poly();
        let mut poles: Vec<Pole> = Vec::new();
        // Finite poles of y dx.
        for (g, k) in &w01.den {
            if !g.contains_var(z) {
                continue;
            }
            let roots = rational_roots(g, z)?;
            for (root, mult) in roots {
                // The paper counts xi^{-1-m} d xi as a pole of degree m.
                let m = (mult * k) as i32 - 1;
                let x_pole = eval_at(&RatExpr::from_poly(xden.clone()), z, &root).is_zero();
                let d = if x_pole {
                    // Unramified pole of x: must be simple at a finite point.
                    -1
                } else {
                    let dx_at = eval_at(&self.x.derivative(z).num.clone().into(), z, &root);
                    if dx_at.is_zero() {
                        return Err(EngineError::Unsupported(
                            "pole of y dx at a finite ramification point".into(),
                        ));
                    }
                    1
                };
                let x_image = if x_pole { None } else { Some(eval_at(&self.x, z, &root)) };
                poles.push(Pole {
                    loc: if root.is_zero() { Point::Zero } else { Point::Finite(root) },
                    d,
                    m,
                    x_image,
                    partner: None,
                    times: Vec::new(),
                });
            }
        }
        // Pole at infinity.
        let g_inf = differential_at_infinity(&w01, z);
        if let Some(val) = valuation_at_zero(&g_inf, var("__w")) {
            if val < 0 {
                if !self.infty_ramified {
                    return Err(EngineError::Unsupported(
                        "pole of y dx at an unramified z = infinity".into(),
                    ));
                }
                poles.push(Pole {
                    loc: Point::Infinity,
                    d: -2,
                    m: -val as i32 - 1,
                    x_image: None,
                    partner: None,
                    times: Vec::new(),
                });
            }
        }
        // Sigma pairing: finite poles pair with their negatives.
        let locs: Vec<Point> = poles.iter().map(|p| p.loc.clone()).collect();
        for (i, p) in poles.iter_mut().enumerate() {
            match &p.loc {
                Point::Infinity | Point::Zero => {
                    if p.d != -2 {
                        return Err(EngineError::Unsupported(
                            "sigma-fixed pole must be a double pole of x".into(),
                        ));
                    }
                }
                Point::Finite(r) => {
                    let neg = r.neg();
                    let j = locs.iter().position(|l| match l {
                        Point::Finite(s) => *s == neg,
                        _ => false,
                    });
                    match j {
                        Some(j) if j != i => p.partner = Some(j),
                        _ => {
                            return Err(EngineError::InvalidCurve(
                                "poles of y dx are not closed under z -> -z".into(),
                            ))
                        }
                    }
                }
            }
        }
        // KP times.
        for p in poles.iter_mut() {
            let mut times = Vec::new();
            for j in 0..=(p.m as u32) {
                times.push(kp_time_at(self, p, j)?);
            }
            p.times = times;
        }
        self.poles = poles;
        // t_{sigma(pole),j} = -t_{pole,j} for unramified pairs.
        for (i, p) in self.poles.iter().enumerate() {
            if let Some(j) = p.partner {
                let q = &self.poles[j];
                for (a, b) in p.times.iter().zip(q.times.iter()) {
                    if *a != b.neg() {
                        return Err(EngineError::Internal(format!(
                            "time antisymmetry failed between poles {i} and {j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Index of the pole at `z = infinity`, if present.
    pub fn infinity_pole(&self) -> Option<usize> {
        self.poles.iter().position(|p| p.loc == Point::Infinity)
    }

    /// `t_{pole,j}`; zero beyond the pole order.
    pub fn kp_time(&self, pole: usize, j: u32) -> RatExpr {
        let p = &self.poles[pole];
        if j as i32 > p.m {
            return RatExpr::zero();
        }
        p.times[j as usize].clone()
    }

    /// Local coordinate series `xi(w)` at the ramified infinity pole, with
    /// `w = 1/z`, normalized to `xi = w + O(w^2)`-like leading behavior.
    pub fn xi_infinity(&self, hi: i32) -> Result<Laurent> {
        let z = self.z;
        let w = var("__w");
        let wr = RatExpr::var(w);
        let x_of_w = self.x.subst(z, &RatExpr::one().div(&wr));
        // x = c w^-2 (1 + ...): xi = x^(-1/2) = c^(-1/2) w (1 + ...)^(-1/2).
        let t = RatExpr::one().div(&x_of_w); // lo = 2
        let s = laurent_expand(&t, w, &Point::Zero, hi + 2)?;
        if s.valuation() != Some(2) {
            return Err(EngineError::Internal("x is not a double pole at infinity".into()));
        }
        // u-series := t / w^2, then take its square root.
        let n = (hi + 1).max(1) as usize;
        let mut u: Vec<RatExpr> = Vec::with_capacity(n);
        for k in 0..n {
            u.push(s.coeff(k as i32 + 2)?);
        }
        let c0 = ratexpr_sqrt(&u[0]).ok_or_else(|| {
            EngineError::FieldExtension(
                "leading coefficient of x at infinity is not a perfect square".into(),
            )
        })?;
        let mut root = vec![RatExpr::zero(); n];
        root[0] = c0.clone();
        let inv2c0 = c0.mul_q(&q_int(2)).recip();
        for m in 1..n {
            let mut acc = u[m].clone();
            for k in 1..m {
                acc = acc.sub(&root[k].mul(&root[m - k]));
            }
            root[m] = acc.mul(&inv2c0);
        }
        Ok(Laurent { var: w, point: Point::Zero, lo: 1, hi: hi + 1, coeffs: root })
    }

    /// Second-kind period insertion at one pole:
    /// `Res_pole (xi^{-k}/k) f dz` for a density `f` in the curve variable
    /// `z`; spectator variables pass through untouched.
    pub fn period_insert(&self, f: &RatExpr, pole: usize, k: u32) -> Result<RatExpr> {
        assert!(k >= 1, "second-kind cycles need k >= 1");
        let z = self.z;
        let p = &self.poles[pole];
        let kq = Q::one() / q_int(k as i64);
        match (&p.loc, p.d) {
            (Point::Infinity, -2) => {
                // xi^{-k} as a w-series of valuation -k, times f
                // transformed to the w chart.
                let w = var("__w");
                let g = differential_at_infinity(f, z);
                let val = valuation_at_zero(&g, w).unwrap_or(0);
                let order_needed = -1 - (-(k as i32)); // expansion order for xi^{-k}
                let xi = self.xi_infinity((order_needed - val.min(0) as i32).max(1) + k as i32 + 2)?;
                let xi_pow = series_pow_neg(&xi, k as i32)?;
                let gs = laurent_expand(&g, w, &Point::Zero, -1 - xi_pow.lo)?;
                let prod = gs.mul(&xi_pow);
                Ok(prod.coeff(-1)?.mul_q(&kq))
            }
            (loc, 1) => {
                let xi = self.x.sub(p.x_image.as_ref().unwrap());
                let integrand = RatExpr::one().div(&xi.pow(k as i32)).mul(f);
                residue(&integrand, z, loc).map(|r| r.mul_q(&kq))
            }
            (loc, -1) => {
                let integrand = self.x.pow(k as i32).mul(f);
                residue(&integrand, z, loc).map(|r| r.mul_q(&kq))
            }
            _ => Err(EngineError::Unsupported("pole chart not supported".into())),
        }
    }

    /// `t_{pole,j}`-dual insertion used by time derivatives: for a ramified
    /// pole this is the single-point `period_insert`; for an unramified
    /// pair it is the difference between the pole and its sigma-partner.
    pub fn time_insert(&self, f: &RatExpr, pole: usize, k: u32) -> Result<RatExpr> {
        let p = &self.poles[pole];
        match p.partner {
            None => self.period_insert(f, pole, k),
            Some(j) => Ok(self.period_insert(f, pole, k)?.sub(&self.period_insert(f, j, k)?)),
        }
    }

    /// Hash-friendly canonical description.
    pub fn canonical_description(&self) -> String {
        format!(
            "name={};params={};x={};y={}",
            self.name,
            self.params.iter().map(|p| crate::vars::var_name(*p)).collect::<Vec<_>>().join(","),
            self.x.to_grammar(),
            self.y.to_grammar()
        )
    }
}

/// `t_{pole,j} = Res_pole xi^j y dx`.
fn kp_time_at(curve: &SpectralCurve, p: &Pole, j: u32) -> Result<RatExpr> {
    let z = curve.z;
    let w01 = curve.w01();
    match (&p.loc, p.d) {
        (Point::Infinity, -2) => {
            let w = var("__w");
            let g = differential_at_infinity(&w01, z);
            let xi = curve.xi_infinity(p.m + 2)?;
            let xi_pow = series_pow(&xi, j as i32)?;
            let gs = laurent_expand(&g, w, &Point::Zero, -1 - xi_pow.lo)?;
            Ok(gs.mul(&xi_pow).coeff(-1)?)
        }
        (loc, 1) => {
            let xi = curve.x.sub(p.x_image.as_ref().unwrap());
            let integrand = xi.pow(j as i32).mul(&w01);
            residue(&integrand, z, loc)
        }
        (loc, -1) => {
            let integrand = RatExpr::one().div(&curve.x.pow(j as i32)).mul(&w01);
            residue(&integrand, z, loc)
        }
        _ => Err(EngineError::Unsupported("pole chart not supported".into())),
    }
}

/// Transform a density `f dz` to the `w = 1/z` chart: `-f(1/w)/w^2 dw`.
pub fn differential_at_infinity(f: &RatExpr, z: VarId) -> RatExpr {
    let w = var("__w");
    assert!(!f.contains_var(w), "scratch variable collision");
    let wr = RatExpr::var(w);
    f.subst(z, &RatExpr::one().div(&wr))
        .mul(&RatExpr::one().div(&wr.mul(&wr)))
        .neg()
}

fn valuation_at_zero(f: &RatExpr, v: VarId) -> Option<i64> {
    if f.is_zero() {
        None
    } else {
        Some(f.valuation_in(v))
    }
}

/// Positive power of a series with positive valuation.
fn series_pow(s: &Laurent, e: i32) -> Result<Laurent> {
    assert!(e >= 0);
    let mut out = Laurent {
        var: s.var,
        point: s.point.clone(),
        lo: 0,
        hi: s.hi - s.lo,
        coeffs: {
            let mut v = vec![RatExpr::zero(); (s.hi - s.lo + 1) as usize];
            v[0] = RatExpr::one();
            v
        },
    };
    for _ in 0..e {
        out = out.mul(s);
    }
    Ok(out)
}

/// `s^(-e)` for a series with valuation `lo > 0` and invertible leading
/// coefficient.
fn series_pow_neg(s: &Laurent, e: i32) -> Result<Laurent> {
    assert!(e >= 1);
    let lead = s.coeffs[0].clone();
    if lead.is_zero() {
        return Err(EngineError::Internal("series inversion with zero leading".into()));
    }
    // Write s = c w^lo (1 + T): s^-1 = c^-1 w^-lo (1 - T + T^2 - ...).
    let n = s.coeffs.len();
    let inv0 = lead.recip();
    let mut inv = vec![RatExpr::zero(); n];
    inv[0] = inv0.clone();
    for m in 1..n {
        let mut acc = RatExpr::zero();
        for k in 1..=m {
            if !s.coeffs[k].is_zero() && !inv[m - k].is_zero() {
                acc = acc.add(&s.coeffs[k].mul(&inv[m - k]));
            }
        }
        inv[m] = acc.neg().mul(&inv0);
    }
    let base = Laurent {
        var: s.var,
        point: s.point.clone(),
        lo: -s.lo,
        hi: -s.lo + n as i32 - 1,
        coeffs: inv,
    };
    series_pow_base(&base, e)
}

fn series_pow_base(s: &Laurent, e: i32) -> Result<Laurent> {
    let mut out = s.clone();
    for _ in 1..e {
        out = out.mul(s);
    }
    Ok(out)
}

fn eval_at(f: &RatExpr, v: VarId, point: &RatExpr) -> RatExpr {
    f.subst(v, point)
}

impl From<MPoly> for RatExpr {
    fn from(p: MPoly) -> Self {
        RatExpr::from_poly(p)
    }
}

/// For an even polynomial in `z`, return the polynomial with exponents
/// halved (`z^2 -> z`); `None` if any odd exponent appears.
fn even_to_halved(p: &MPoly, z: VarId) -> Option<MPoly> {
    let mut terms = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let e = m.exp(z);
        if e % 2 == 1 {
            return None;
        }
        let mut mm = m.clone();
        if e > 0 {
            mm.0[z.0 as usize] = e / 2;
        }
        terms.push((mm, c.clone()));
    }
    Some(MPoly::from_terms(terms))
}

fn coeff_of(p: &MPoly, v: VarId, e: u16) -> MPoly {
    let cs = p.as_univar(v);
    cs.get(e as usize).cloned().unwrap_or_else(MPoly::zero)
}

/// Substitute `z -> value` treating `p` as a polynomial in `z` (used with
/// the halved even part, where `z` stands for `z^2`).
fn subst_z2(p: &MPoly, z: VarId, value: &RatExpr) -> RatExpr {
    crate::ratexpr::poly_subst(p, z, value)
}

/// Parse a curve-spec file.
///
/// ```text
/// [curve]
/// name = airy
/// parameters =
/// x = z^2
/// y = z
///
/// [times]
/// t = -3*u^2
/// dt/du = -6*u
/// ```
pub fn parse_curve_file(text: &str) -> Result<SpectralCurve> {
    let mut section = String::new();
    let mut name = String::new();
    let mut params: Vec<VarId> = Vec::new();
    let mut x: Option<RatExpr> = None;
    let mut y: Option<RatExpr> = None;
    let mut raw_times: Vec<(String, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            EngineError::Parse(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        match section.as_str() {
            "curve" => match key {
                "name" => name = value.to_string(),
                "parameters" => {
                    for p in value.split(',') {
                        let p = p.trim();
                        if !p.is_empty() {
                            params.push(var(p));
                        }
                    }
                }
                "x" => x = Some(parse(value)?),
                "y" => y = Some(parse(value)?),
                other => {
                    return Err(EngineError::Parse(format!("unknown [curve] key {other:?}")))
                }
            },
            "times" => raw_times.push((key.to_string(), value.to_string())),
            other => return Err(EngineError::Parse(format!("unknown section {other:?}"))),
        }
    }
    let x = x.ok_or_else(|| EngineError::Parse("missing x".into()))?;
    let y = y.ok_or_else(|| EngineError::Parse("missing y".into()))?;
    // Assemble the time map: value entries first, then jacobians.
    let mut entries: Vec<TimeEntry> = Vec::new();
    for (k, v) in &raw_times {
        if !k.starts_with('d') || !k.contains('/') {
            entries.push(TimeEntry { name: k.clone(), value: parse(v)?, jac: Vec::new() });
        }
    }
    for (k, v) in &raw_times {
        if let Some((num_part, den_part)) = k.split_once('/') {
            let tname = num_part.strip_prefix('d').ok_or_else(|| {
                EngineError::Parse(format!("bad jacobian key {k:?}"))
            })?;
            let pname = den_part.strip_prefix('d').ok_or_else(|| {
                EngineError::Parse(format!("bad jacobian key {k:?}"))
            })?;
            let entry = entries.iter_mut().find(|e| e.name == tname).ok_or_else(|| {
                EngineError::Parse(format!("jacobian {k:?} without a value for {tname:?}"))
            })?;
            entry.jac.push((var(pname), parse(v)?));
        }
    }
    SpectralCurve::validate(&name, &params, x, y, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn airy() -> SpectralCurve {
        parse_curve_file("[curve]\nname = airy\nparameters =\nx = z^2\ny = z\n").unwrap()
    }

    pub fn painleve1() -> SpectralCurve {
        parse_curve_file(
            "[curve]\nname = painleve1\nparameters = u\nx = z^2 - 2*u\ny = z^3 - 3*u*z\n\n[times]\nt = -3*u^2\ndt/du = -6*u\n",
        )
        .unwrap()
    }

    pub fn finite_pole() -> SpectralCurve {
        parse_curve_file(
            "[curve]\nname = finite-pole\nparameters = b\nx = z^2\ny = z/(z^2 - b^2)\n\n[times]\nlambda = b^2\ndlambda/db = 2*b\nt0 = b\ndt0/db = 1\n",
        )
        .unwrap()
    }

    #[test]
    fn airy_validates() {
        let c = airy();
        assert_eq!(c.r, parse("x").unwrap());
        assert_eq!(c.ram, vec![RatExpr::zero()]);
        assert!(c.infty_ramified);
        let inf = c.infinity_pole().unwrap();
        assert_eq!(c.poles[inf].m, 3);
        // t_{inf,3} = -2 (residue oracle on 2 z^2 dz with xi = 1/z).
        assert_eq!(c.kp_time(inf, 3), RatExpr::int(-2));
        assert!(c.kp_time(inf, 1).is_zero());
        assert!(c.kp_time(inf, 5).is_zero());
    }

    #[test]
    fn painleve1_validates_with_paper_times() {
        let c = painleve1();
        // R = x^3 + t x + V with t = -3u^2, V = 2u^3.
        let expect = parse("x^3 - 3*u^2*x + 2*u^3").unwrap();
        assert_eq!(c.r, expect);
        assert_eq!(c.ram, vec![RatExpr::zero()]);
        let inf = c.infinity_pole().unwrap();
        assert_eq!(c.poles[inf].m, 5);
        assert_eq!(c.kp_time(inf, 1), parse("3*u^2").unwrap()); // -t
        assert_eq!(c.kp_time(inf, 5), RatExpr::int(-2));
        assert!(c.kp_time(inf, 0).is_zero());
        assert!(c.kp_time(inf, 2).is_zero());
        assert!(c.kp_time(inf, 3).is_zero());
        assert!(c.kp_time(inf, 4).is_zero());
        assert!(c.kp_time(inf, 7).is_zero());
    }

    #[test]
    fn y_not_odd_is_rejected() {
        let r = parse_curve_file("[curve]\nname = bad\nparameters =\nx = z^2\ny = z^2\n");
        assert!(r.is_err());
    }

    #[test]
    fn painleve1_second_kind_periods() {
        let c = painleve1();
        let inf = c.infinity_pole().unwrap();
        let w01 = c.w01();
        // B_{inf,1} period of y dx = -V = -2u^3.
        let p1 = c.period_insert(&w01, inf, 1).unwrap();
        assert_eq!(p1, parse("-2*u^3").unwrap());
        // B_{inf,5} period of y dx = tV/10 = -(3/5) u^5.
        let p5 = c.period_insert(&w01, inf, 5).unwrap();
        assert_eq!(p5, parse("-3/5*u^5").unwrap());
    }

    #[test]
    fn airy_second_kind_period_vanishes() {
        let c = airy();
        let inf = c.infinity_pole().unwrap();
        assert!(c.period_insert(&c.w01(), inf, 1).unwrap().is_zero());
    }

    #[test]
    fn finite_pole_times_antisymmetric() {
        let c = finite_pole();
        // Poles at z = b, z = -b and infinity.
        assert_eq!(c.poles.len(), 3);
        let finite: Vec<usize> = (0..3).filter(|&i| c.poles[i].partner.is_some()).collect();
        assert_eq!(finite.len(), 2);
        let (i, j) = (finite[0], finite[1]);
        assert_eq!(c.poles[i].m, 0);
        assert_eq!(c.kp_time(i, 0), c.kp_time(j, 0).neg());
        // Residue of y dx at z = b is b.
        let t0: Vec<RatExpr> = vec![c.kp_time(i, 0), c.kp_time(j, 0)];
        assert!(t0.contains(&parse("b").unwrap()));
        // t_{zeta,1} = 0 at the finite poles.
        assert!(c.kp_time(i, 1).is_zero());
        // At infinity m = 2 and t_{inf,1} = -2.
        let inf = c.infinity_pole().unwrap();
        assert_eq!(c.poles[inf].m, 1);
        assert_eq!(c.kp_time(inf, 1), RatExpr::int(-2));
    }

    #[test]
    fn singular_part_reconstruction() {
        // Eq-style check: y dx ~ sum_j t_j xi^{-1-j} d xi at the infinity
        // pole, compared through the full singular window in w = 1/z.
        for c in [airy(), painleve1(), finite_pole()] {
            let z = c.z;
            let w = var("__w");
            let inf = c.infinity_pole().unwrap();
            let m = c.poles[inf].m;
            let g = differential_at_infinity(&c.w01(), z);
            let gs = laurent_expand(&g, w, &Point::Zero, 0).unwrap();
            let xi = c.xi_infinity(m + 3).unwrap();
            // d xi series: derivative coefficient-wise in w.
            let dxi = Laurent {
                var: w,
                point: Point::Zero,
                lo: 0,
                hi: xi.hi - 1,
                coeffs: (0..xi.coeffs.len() - 1)
                    .map(|i| xi.coeffs[i].mul_q(&q_int(xi.lo as i64 + i as i64)))
                    .collect(),
            };
            let mut acc: Option<Laurent> = None;
            for j in 0..=m as u32 {
                let t = c.kp_time(inf, j);
                if t.is_zero() {
                    continue;
                }
                let xi_pow = series_pow_neg(&xi, 1 + j as i32).unwrap();
                let term = xi_pow.mul(&dxi);
                let scaled = Laurent {
                    var: w,
                    point: Point::Zero,
                    lo: term.lo,
                    hi: term.hi,
                    coeffs: term.coeffs.iter().map(|c0| c0.mul(&t)).collect(),
                };
                acc = Some(match acc {
                    None => scaled,
                    Some(a) => {
                        let lo = a.lo.min(scaled.lo);
                        let hi = a.hi.min(scaled.hi);
                        Laurent {
                            var: w,
                            point: Point::Zero,
                            lo,
                            hi,
                            coeffs: (lo..=hi)
                                .map(|k| {
                                    a.coeff(k).unwrap().add(&scaled.coeff(k).unwrap())
                                })
                                .collect(),
                        }
                    }
                });
            }
            let acc = acc.unwrap();
            for k in gs.lo..=-1 {
                assert_eq!(
                    gs.coeff(k).unwrap(),
                    acc.coeff(k).unwrap(),
                    "curve {} coefficient {k}",
                    c.name
                );
            }
        }
    }

    #[test]
    fn period_integration_by_parts() {
        // For df exact, Res xi^{-k}/k df = Res f d(xi^{-k})/k.
        let c = painleve1();
        let inf = c.infinity_pole().unwrap();
        let z = c.z;
        let f = parse("z^3 + u*z^2").unwrap();
        let df = f.derivative(z);
        let lhs = c.period_insert(&df, inf, 3).unwrap();
        // Right side computed from the xi-series directly:
        // d(xi^{-3}) = -3 xi^{-4} dxi; divided by 3 gives -xi^{-4} dxi.
        let w = var("__w");
        let xi = c.xi_infinity(12).unwrap();
        let xi_pow = series_pow_neg(&xi, 4).unwrap();
        let dxi = Laurent {
            var: w,
            point: Point::Zero,
            lo: 0,
            hi: xi.hi - 1,
            coeffs: (0..xi.coeffs.len() - 1)
                .map(|i| xi.coeffs[i].mul_q(&q_int(xi.lo as i64 + i as i64)))
                .collect(),
        };
        let f_w = f.subst(z, &RatExpr::one().div(&RatExpr::var(w)));
        let fs = laurent_expand(&f_w, w, &Point::Zero, 6).unwrap();
        // By parts: Res xi^{-k}/k df = + Res f xi^{-k-1} d xi.
        let rhs_series = fs.mul(&xi_pow).mul(&dxi);
        let rhs = rhs_series.coeff(-1).unwrap();
        assert_eq!(lhs, rhs);
    }
}
