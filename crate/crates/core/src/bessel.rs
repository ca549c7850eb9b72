//! Generalized Bessel family
//!
//! ```text
//! τ = x^{-δ} [ −(d/dx) x^ν (d/dx) + ((2+δ−ν)²γ² − (1−ν)²)/4 · x^{ν−2} ],   x ∈ (0, b)
//! ```
//!
//! with `δ > −1`, `ν < 1`, `γ ≥ 0`. Solutions are `x^{e±} F_{±γ}(z x^s / s²)` with
//! `s = 2+δ−ν`, `e± = (1−ν ± sγ)/2` and `F_μ(ζ) = Σ (−ζ)^k / (k! (1+μ)_k)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::RealMat2;
use crate::ode::ReferencePair;
use crate::problem::{Bound, Coeffs};
use crate::special::{gamma, ln_cut, on_cut, pow_cut, EULER_GAMMA};
use twofloat::TwoFloat;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselParams {
    pub delta: f64,
    pub nu: f64,
    pub gamma: f64,
    pub b: Bound,
}

impl BesselParams {
    pub fn new(delta: f64, nu: f64, gamma: f64, b: Bound) -> Self {
        BesselParams { delta, nu, gamma, b }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.delta > -1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must exceed -1", self.delta)));
        }
        if !(self.nu < 1.0) {
            return Err(Error::InvalidParameter(format!("nu = {} must be below 1", self.nu)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma = {} must be nonnegative", self.gamma)));
        }
        if let Bound::Finite(b) = self.b {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("b = {b} must be positive")));
            }
        }
        Ok(())
    }

    /// Paths that rely on a limit-circle endpoint at 0 need `γ < 1`.
    pub fn check_limit_circle(&self) -> Result<()> {
        self.check()?;
        if self.gamma >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} gives a limit-point endpoint at 0",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn s(&self) -> f64 {
        2.0 + self.delta - self.nu
    }

    pub fn e_plus(&self) -> f64 {
        0.5 * (1.0 - self.nu + self.s() * self.gamma)
    }

    pub fn e_minus(&self) -> f64 {
        0.5 * (1.0 - self.nu - self.s() * self.gamma)
    }

    pub fn coeffs(&self, x: f64) -> Coeffs {
        let s = self.s();
        let k = ((s * self.gamma).powi(2) - (1.0 - self.nu).powi(2)) / 4.0;
        Coeffs {
            p: x.powf(self.nu),
            q: if k == 0.0 { 0.0 } else { k * x.powf(self.nu - 2.0) },
            r: x.powf(self.delta),
        }
    }
}

/// `J_μ, Y_μ, H^{(1)}_μ` and their derivatives at one argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselKernelValue {
    pub order: f64,
    pub arg: C,
    pub j: C,
    pub y: C,
    pub h1: C,
    pub jp: C,
    pub yp: C,
    pub h1p: C,
    /// Rough absolute error from the largest series term.
    pub abs_err: f64,
}

const W_MAX: f64 = 30.0;

/// Complex double-double; the ascending series cancel heavily once `|w|` exceeds a few units.
#[derive(Clone, Copy)]
struct Cdd {
    re: TwoFloat,
    im: TwoFloat,
}

impl Cdd {
    fn from_c(z: C) -> Self {
        Cdd { re: TwoFloat::from(z.re), im: TwoFloat::from(z.im) }
    }

    fn zero() -> Self {
        Cdd::from_c(C::new(0.0, 0.0))
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }

    fn scale(self, k: TwoFloat) -> Cdd {
        Cdd { re: self.re * k, im: self.im * k }
    }

    fn div(self, k: TwoFloat) -> Cdd {
        Cdd { re: self.re / k, im: self.im / k }
    }

    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }

    fn to_c(self) -> C {
        C::new(self.re.hi() + self.re.lo(), self.im.hi() + self.im.lo())
    }

    fn norm(self) -> f64 {
        self.to_c().norm()
    }
}

fn quarter_square(w: C) -> Cdd {
    let w = Cdd::from_c(w);
    w.mul(w).scale(TwoFloat::from(-0.25))
}

/// `(Σ a_k, Σ (2k+μ) a_k, max |a_k|)` with `a_k = (−w²/4)^k / (k! Γ(k+μ+1))`.
/// `μ` must not be a negative integer.
fn j_sums(mu: f64, w: C) -> (C, C, f64) {
    let q = quarter_square(w);
    let qn = q.norm();
    let g0 = 1.0 / gamma(mu + 1.0);
    let mut a = Cdd::from_c(C::new(1.0, 0.0));
    let mut s0 = a;
    let mut s1 = a.scale(TwoFloat::from(mu));
    let mut big: f64 = 1.0;
    for k in 1..600 {
        let kf = TwoFloat::from(k as f64);
        a = a.mul(q).div(kf * (kf + mu));
        s0 = s0.add(a);
        s1 = s1.add(a.scale(kf * 2.0 + mu));
        big = big.max(a.norm());
        let kk = (k * k) as f64;
        if kk > qn && a.norm() <= 1e-32 * s0.norm().max(1e-300) {
            break;
        }
    }
    (s0.to_c() * g0, s1.to_c() * g0, big * g0.abs())
}

/// `J_μ(w)` and `J_μ′(w)` from the ascending series.
fn bessel_j(mu: f64, w: C) -> (C, C, f64) {
    let half = w / 2.0;
    let pw = pow_cut(half, mu);
    let (s0, s1, big) = j_sums(mu, w);
    let err = 1e-31 * big * pw.norm() + 4e-16 * (pw * s0).norm();
    (pw * s0, pw * s1 / w, err)
}

/// Integer-order `Y_n`, `Y_n′` from the logarithmic series.
fn bessel_y_int(n: usize, w: C) -> (C, C, f64) {
    let (j, jp, err) = bessel_j(n as f64, w);
    let half = w / 2.0;
    let lh = ln_cut(w) - 2f64.ln();
    let mut y = 2.0 / PI * lh * j;
    let mut yp = 2.0 / PI * (j / w + lh * jp);
    let fact = |m: usize| (1..=m).fold(1.0, |a, i| a * i as f64);
    for k in 0..n {
        let m = 2 * k as i32 - n as i32;
        let c = fact(n - k - 1) / fact(k) / PI;
        let t = half.powi(m);
        y -= c * t;
        yp -= c * t * m as f64 / w;
    }
    // Σ [ψ(k+1) + ψ(n+k+1)] (−w²/4)^k / (k! (n+k)!), with ψ(m+1) = H_m − γ_E
    let q = quarter_square(w);
    let qn = q.norm();
    let mut term = Cdd::from_c(C::new(1.0 / fact(n), 0.0));
    let mut hk = TwoFloat::from(0.0);
    let mut hnk = TwoFloat::from(0.0);
    for i in 1..=n {
        hnk += TwoFloat::from(1.0) / TwoFloat::from(i as f64);
    }
    let eg = TwoFloat::from(2.0 * EULER_GAMMA);
    let mut s0 = Cdd::zero();
    let mut s1 = Cdd::zero();
    let mut big: f64 = 0.0;
    for k in 0..600usize {
        if k > 0 {
            let kf = TwoFloat::from(k as f64);
            let nk = TwoFloat::from((n + k) as f64);
            term = term.mul(q).div(kf * nk);
            hk += TwoFloat::from(1.0) / kf;
            hnk += TwoFloat::from(1.0) / nk;
        }
        let t = term.scale(hk + hnk - eg);
        s0 = s0.add(t);
        s1 = s1.add(t.scale(TwoFloat::from((2 * k + n) as f64)));
        big = big.max(t.norm());
        if (k * k) as f64 > qn && t.norm() <= 1e-32 * s0.norm().max(1e-300) {
            break;
        }
    }
    let hn = half.powi(n as i32);
    y -= s0.to_c() * hn / PI;
    yp -= s1.to_c() * hn / (PI * w);
    (y, yp, err + 1e-31 * big * hn.norm() + 4e-16 * y.norm())
}

/// Bessel kernel for order in `[0, 2)` and `|w| ≤ 30`, `arg w ∈ (0, 2π)`.
pub fn bessel_kernel(order: f64, w: C) -> Result<BesselKernelValue> {
    if !(0.0..2.0).contains(&order) {
        return Err(Error::InvalidParameter(format!("order {order} outside [0, 2)")));
    }
    if w.norm() > W_MAX {
        return Err(Error::DomainTooLarge { abs: w.norm() });
    }
    if w.norm() == 0.0 {
        return Err(Error::InvalidParameter("Y and H1 are singular at w = 0".into()));
    }
    let nearest = order.round();
    let dist = (order - nearest).abs();
    let (j, jp, ej) = bessel_j(order, w);
    let (y, yp, ey) = if dist == 0.0 {
        bessel_y_int(nearest as usize, w)
    } else if dist < 1e-6 {
        return Err(Error::PoleOrder { order });
    } else {
        let (jm, jmp, em) = bessel_j(-order, w);
        let (sn, cs) = (PI * order).sin_cos();
        ((j * cs - jm) / sn, (jp * cs - jmp) / sn, (ej + em) / sn.abs())
    };
    let i = C::new(0.0, 1.0);
    Ok(BesselKernelValue {
        order,
        arg: w,
        j,
        y,
        h1: j + i * y,
        jp,
        yp,
        h1p: jp + i * yp,
        abs_err: ej + ey,
    })
}

/// `(Σ c_k, Σ k c_k, Σ H_k c_k, Σ k H_k c_k)` with `c_k = (−ζ)^k / (k! (1+μ)_k)`.
fn f_sums(mu: f64, zeta: C) -> [C; 4] {
    let mut c = C::new(1.0, 0.0);
    let mut out = [c, C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)];
    let mut h = 0.0;
    for k in 1..2000 {
        let kf = k as f64;
        c = c * (-zeta) / (kf * (kf + mu));
        h += 1.0 / kf;
        out[0] += c;
        out[1] += c * kf;
        out[2] += c * h;
        out[3] += c * (kf * h);
        if kf * kf > zeta.norm() && (c * kf * h).norm() <= 1e-17 * out[0].norm().max(1e-300) {
            break;
        }
    }
    out
}

/// Fundamental system `(φ, φ^[1], θ, θ^[1])` normalized by `φ̃ = 0, φ̃′ = 1, θ̃ = 1, θ̃′ = 0` at 0.
pub fn bessel_fundamental(params: &BesselParams, z: C, x: f64) -> Result<[C; 4]> {
    params.check_limit_circle()?;
    if !(x > 0.0) {
        return Err(Error::OutOfRange { x, lo: 0.0, hi: f64::INFINITY });
    }
    let s = params.s();
    let nu = params.nu;
    let g = params.gamma;
    let zeta = z * x.powf(s) / (s * s);
    let ep = params.e_plus();
    let em = params.e_minus();
    let sp = f_sums(g, zeta);
    let cp = 1.0 / (1.0 - nu);
    let phi = cp * x.powf(ep) * sp[0];
    let phi1 = cp * x.powf(ep + nu - 1.0) * (ep * sp[0] + s * sp[1]);
    let (theta, theta1) = if g > 0.0 {
        let sm = f_sums(-g, zeta);
        let cm = (1.0 - nu) / (s * g);
        (
            cm * x.powf(em) * sm[0],
            cm * x.powf(em + nu - 1.0) * (em * sm[0] + s * sm[1]),
        )
    } else {
        let l = (1.0 / x).ln();
        let e = ep;
        let c0 = 1.0 - nu;
        (
            c0 * x.powf(e) * (l * sp[0] + 2.0 / s * sp[2]),
            c0 * x.powf(e + nu - 1.0)
                * (l * (e * sp[0] + s * sp[1]) - sp[0] + 2.0 / s * (e * sp[2] + s * sp[3])),
        )
    };
    Ok([phi, phi1, theta, theta1])
}

fn check_weyl(params: &BesselParams, z: C) -> Result<()> {
    params.check_limit_circle()?;
    if params.b != Bound::Infinite {
        return Err(Error::InvalidParameter("closed form needs b = ∞".into()));
    }
    if on_cut(z) {
        return Err(Error::OnCutZ);
    }
    Ok(())
}

/// Weyl function `m₀(z) = ψ̃′(z, 0)` for `b = ∞`.
pub fn bessel_weyl_m(params: &BesselParams, z: C) -> Result<C> {
    check_weyl(params, z)?;
    let s = params.s();
    let g = params.gamma;
    let nu2 = (1.0 - params.nu).powi(2);
    let i = C::new(0.0, 1.0);
    if g == 0.0 {
        Ok(nu2 / s * (i * PI - ln_cut(z) + 2.0 * s.ln() - 2.0 * EULER_GAMMA))
    } else {
        let k = nu2 * s.powf(-2.0 * g - 1.0) / g * gamma(1.0 - g) / gamma(1.0 + g);
        Ok(-C::from_polar(k, -PI * g) * pow_cut(z, g))
    }
}

/// Donoghue function of the Friedrichs extension (`α = 0`) for `b = ∞`.
pub fn bessel_donoghue_friedrichs(params: &BesselParams, z: C) -> Result<C> {
    friedrichs(params, z, 1.5 * PI * params.gamma)
}

/// Same expression with the exponent `3π/2` in place of `3πγ/2`; fails `M(i) = i` unless `γ = 1`.
pub fn bessel_donoghue_friedrichs_literal(params: &BesselParams, z: C) -> Result<C> {
    friedrichs(params, z, 1.5 * PI)
}

fn friedrichs(params: &BesselParams, z: C, phase: f64) -> Result<C> {
    check_weyl(params, z)?;
    let g = params.gamma;
    let i = C::new(0.0, 1.0);
    if g == 0.0 {
        return Ok(-i + 2.0 / PI * (1.5 * i * PI - ln_cut(z)));
    }
    let c = C::from_polar(1.0 / (0.5 * PI * g).sin(), -PI * g);
    Ok(-i - c * (pow_cut(z, g) - C::from_polar(1.0, phase)))
}

/// Closed-form principal (`u`) and nonprincipal (`û`) solutions at 0 for `λ0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub params: BesselParams,
}

impl BesselPair {
    /// `(u, u^[1], û, û^[1])` at `x`.
    pub fn at(&self, x: f64) -> [f64; 4] {
        let p = &self.params;
        let nu = p.nu;
        let s = p.s();
        let ep = p.e_plus();
        let em = p.e_minus();
        let u = x.powf(ep) / (1.0 - nu);
        let u1 = ep * x.powf(nu + ep - 1.0) / (1.0 - nu);
        if p.gamma > 0.0 {
            let c = (1.0 - nu) / (s * p.gamma);
            [u, u1, c * x.powf(em), c * em * x.powf(nu + em - 1.0)]
        } else {
            let l = (1.0 / x).ln();
            let c = 1.0 - nu;
            [u, u1, c * x.powf(ep) * l, c * x.powf(nu + ep - 1.0) * (ep * l - 1.0)]
        }
    }
}

impl ReferencePair for BesselPair {
    fn lambda0(&self) -> f64 {
        0.0
    }

    fn eval(&self, rho: f64) -> Result<[f64; 4]> {
        Ok(self.at(rho))
    }

    fn depth(&self) -> f64 {
        0.0
    }

    fn reach(&self) -> f64 {
        self.params.b.finite().unwrap_or(f64::INFINITY)
    }
}

pub fn bessel_principal_pair(params: &BesselParams) -> Result<BesselPair> {
    params.check_limit_circle()?;
    Ok(BesselPair { params: *params })
}

/// Boundary matrix of the Krein–von Neumann extension on `(0, b)`:
/// columns are `(û(b), û^[1](b))` and `(u(b), u^[1](b))`.
pub fn bessel_krein_vn_matrix(params: &BesselParams) -> Result<RealMat2> {
    params.check_limit_circle()?;
    let b = params
        .b
        .finite()
        .ok_or_else(|| Error::InvalidParameter("Krein–von Neumann matrix needs finite b".into()))?;
    let [u, u1, uh, uh1] = BesselPair { params: *params }.at(b);
    Ok([[uh, u], [uh1, u1]])
}
