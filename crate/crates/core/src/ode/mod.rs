//! Solutions of `τ y = z y` as first-order systems in `(y, y^[1])`, Wronskians and inner products.

pub mod dopri;
pub mod frame;

use num_complex::Complex64;
use std::sync::Arc;

pub use dopri::{DenseTrace, State, StepperOptions};
pub use frame::{Frame, LimitTracker, ReferencePair};

use crate::error::{Error, Result};
use crate::problem::{EndpointKind, Side, SlProblem};
use crate::quadrature;

type C = Complex64;

/// Boundary data of a solution at an endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndValue {
    /// Generalized boundary values `(ỹ, ỹ′)`; plain `(y, y^[1])` at a regular end.
    Known(State),
    /// Solution is square integrable at a limit-point end, so Wronskians with it vanish there.
    LimitPoint,
    Unknown,
}

/// Anything that evaluates as a quasi-derivative pair `(y, y^[1])`.
pub trait QuasiFn: Send + Sync {
    fn z(&self) -> C;
    fn eval(&self, x: f64) -> Result<State>;
    fn end_value(&self, side: Side) -> EndValue;
    /// Closed interval on which `eval` may be called.
    fn span(&self) -> (f64, f64);
}

/// `y' = y^[1] / p`, `(y^[1])' = (q − z r) y`.
pub fn system<'a>(problem: &'a SlProblem, z: C) -> impl FnMut(f64, &State) -> State + 'a {
    move |x, s| {
        let c = problem.coeffs(x);
        [s[1] / c.p, s[0] * (c.q - z * c.r)]
    }
}

/// Solution assembled from direct segments in `x` and endpoint frames.
#[derive(Clone)]
pub struct SolutionTrace {
    z: C,
    direct: Vec<DenseTrace>,
    frames: Vec<Frame>,
    ends: [EndValue; 2],
}

fn side_index(side: Side) -> usize {
    match side {
        Side::A => 0,
        Side::B => 1,
    }
}

impl SolutionTrace {
    pub fn new(z: C) -> Self {
        SolutionTrace {
            z,
            direct: Vec::new(),
            frames: Vec::new(),
            ends: [EndValue::Unknown; 2],
        }
    }

    pub fn push_direct(&mut self, seg: DenseTrace) {
        self.direct.push(seg);
    }

    pub fn push_frame(&mut self, frame: Frame) {
        self.ends[side_index(frame.side)] = EndValue::Known(frame.limit);
        self.frames.push(frame);
    }

    pub fn set_end(&mut self, side: Side, v: EndValue) {
        self.ends[side_index(side)] = v;
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, side: Side) -> Option<&Frame> {
        self.frames.iter().find(|f| f.side == side)
    }

    pub fn direct(&self) -> &[DenseTrace] {
        &self.direct
    }

    /// Number of accepted steps over all segments.
    pub fn steps(&self) -> usize {
        self.direct.iter().map(|d| d.steps()).sum()
    }

    pub fn scaled(&self, c: C) -> SolutionTrace {
        let ends = self.ends.map(|e| match e {
            EndValue::Known(v) => EndValue::Known([v[0] * c, v[1] * c]),
            other => other,
        });
        SolutionTrace {
            z: self.z,
            direct: self.direct.iter().map(|d| d.scaled(c)).collect(),
            frames: self.frames.iter().map(|f| f.scaled(c)).collect(),
            ends,
        }
    }
}

impl QuasiFn for SolutionTrace {
    fn z(&self) -> C {
        self.z
    }

    fn eval(&self, x: f64) -> Result<State> {
        if let Some(d) = self.direct.iter().find(|d| d.contains(x)) {
            return d.eval(x);
        }
        if let Some(f) = self.frames.iter().find(|f| f.covers(x)) {
            return f.eval(x);
        }
        let (lo, hi) = self.span();
        Err(Error::OutOfRange { x, lo, hi })
    }

    fn end_value(&self, side: Side) -> EndValue {
        self.ends[side_index(side)]
    }

    fn span(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for d in &self.direct {
            lo = lo.min(d.lo());
            hi = hi.max(d.hi());
        }
        for f in &self.frames {
            match f.side {
                Side::A => lo = lo.min(f.d),
                Side::B => hi = hi.max(f.d),
            }
        }
        (lo, hi)
    }
}

/// Closed-form solution.
pub struct ClosedForm {
    pub z: C,
    pub span: (f64, f64),
    pub ends: [EndValue; 2],
    pub f: Box<dyn Fn(f64) -> Result<State> + Send + Sync>,
}

impl QuasiFn for ClosedForm {
    fn z(&self) -> C {
        self.z
    }

    fn eval(&self, x: f64) -> Result<State> {
        (self.f)(x)
    }

    fn end_value(&self, side: Side) -> EndValue {
        self.ends[side_index(side)]
    }

    fn span(&self) -> (f64, f64) {
        self.span
    }
}

/// `Σ c_i y_i` over solutions sharing one spectral parameter.
#[derive(Clone)]
pub struct LinComb {
    pub terms: Vec<(C, Arc<dyn QuasiFn>)>,
}

impl LinComb {
    pub fn new(terms: Vec<(C, Arc<dyn QuasiFn>)>) -> Self {
        LinComb { terms }
    }
}

impl QuasiFn for LinComb {
    fn z(&self) -> C {
        self.terms.first().map(|t| t.1.z()).unwrap_or_default()
    }

    fn eval(&self, x: f64) -> Result<State> {
        let mut out = [C::new(0.0, 0.0); 2];
        for (c, y) in &self.terms {
            let v = y.eval(x)?;
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        Ok(out)
    }

    fn end_value(&self, side: Side) -> EndValue {
        let mut out = [C::new(0.0, 0.0); 2];
        let mut lp = false;
        for (c, y) in &self.terms {
            match y.end_value(side) {
                EndValue::Known(v) => {
                    out[0] += c * v[0];
                    out[1] += c * v[1];
                }
                EndValue::LimitPoint => lp = true,
                EndValue::Unknown => return EndValue::Unknown,
            }
        }
        if lp {
            EndValue::LimitPoint
        } else {
            EndValue::Known(out)
        }
    }

    fn span(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), (_, y)| {
            let (l, h) = y.span();
            (lo.max(l), hi.min(h))
        })
    }
}

/// Integrates from `x0` with data `init` to `x1`. Reaching a regular endpoint records its values.
pub fn integrate(
    problem: &SlProblem,
    z: C,
    x0: f64,
    u0: C,
    u0_quasi: C,
    x1: f64,
    rtol: f64,
) -> Result<SolutionTrace> {
    integrate_with(problem, z, x0, [u0, u0_quasi], x1, &StepperOptions::with_rtol(rtol))
}

pub fn integrate_with(
    problem: &SlProblem,
    z: C,
    x0: f64,
    init: State,
    x1: f64,
    opts: &StepperOptions,
) -> Result<SolutionTrace> {
    if init[0].norm() == 0.0 && init[1].norm() == 0.0 {
        return Err(Error::InvalidParameter("zero initial data".into()));
    }
    let seg = dopri::integrate_system(system(problem, z), x0, init, x1, opts)?;
    let mut trace = SolutionTrace::new(z);
    for side in [Side::A, Side::B] {
        if problem.kind(side) == EndpointKind::Regular && problem.end(side) == Some(x1) {
            trace.set_end(side, EndValue::Known(seg.last_value()));
        }
    }
    trace.push_direct(seg);
    Ok(trace)
}

/// `W(f, g)(x) = f g^[1] − f^[1] g`.
pub fn wronskian_at(f: &dyn QuasiFn, g: &dyn QuasiFn, x: f64) -> Result<C> {
    let a = f.eval(x)?;
    let b = g.eval(x)?;
    Ok(a[0] * b[1] - a[1] * b[0])
}

/// Endpoint Wronskian from boundary data, `g̃ h̃′ − g̃′ h̃`.
pub fn wronskian_end(f: &dyn QuasiFn, g: &dyn QuasiFn, side: Side) -> Result<C> {
    match (f.end_value(side), g.end_value(side)) {
        (EndValue::LimitPoint, _) | (_, EndValue::LimitPoint) => Ok(C::new(0.0, 0.0)),
        (EndValue::Known(a), EndValue::Known(b)) => Ok(a[0] * b[1] - a[1] * b[0]),
        _ => Err(Error::Unsupported(format!("no boundary data at endpoint {side:?}"))),
    }
}

/// Integration limit for inner products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    X(f64),
    A,
    B,
}

fn wronskian_point(f: &dyn QuasiFn, g: &dyn QuasiFn, at: Point) -> Result<C> {
    match at {
        Point::X(x) => wronskian_at(f, g, x),
        Point::A => wronskian_end(f, g, Side::A),
        Point::B => wronskian_end(f, g, Side::B),
    }
}

/// Bilinear `∫_α^β r y1 y2` from Green's formula, `(z1 − z2) ∫ r y1 y2 = [W(y1, y2)]_α^β`.
/// For real coefficients `y(z̄) = conj(y(z))`, which turns this into an inner product.
pub fn green_inner_product(y1: &dyn QuasiFn, y2: &dyn QuasiFn, alpha: Point, beta: Point) -> Result<C> {
    let denom = y1.z() - y2.z();
    if denom.norm() <= 1e-14 * (1.0 + y2.z().norm()) {
        return Err(Error::EqualSpectralParams);
    }
    let hi = wronskian_point(y1, y2, beta)?;
    let lo = wronskian_point(y1, y2, alpha)?;
    Ok((hi - lo) / denom)
}

/// `∫_α^β r conj(f) g` by adaptive quadrature; singular and infinite ends are approached dyadically.
pub fn quadrature_inner_product(
    problem: &SlProblem,
    f: &dyn Fn(f64) -> Result<C>,
    g: &dyn Fn(f64) -> Result<C>,
    alpha: Point,
    beta: Point,
    rtol: f64,
) -> Result<C> {
    quadrature_inner_product_tol(problem, f, g, alpha, beta, rtol, 0.0)
}

/// [`quadrature_inner_product`] with an absolute tolerance, for integrands that may vanish.
pub fn quadrature_inner_product_tol(
    problem: &SlProblem,
    f: &dyn Fn(f64) -> Result<C>,
    g: &dyn Fn(f64) -> Result<C>,
    alpha: Point,
    beta: Point,
    rtol: f64,
    atol: f64,
) -> Result<C> {
    let integrand = |x: f64| -> Result<C> { Ok(f(x)?.conj() * g(x)? * problem.coeffs(x).r) };
    let c = problem.anchor();
    // oriented ∫_c^{pt}
    let from_anchor = |pt: Point| -> Result<C> {
        match pt {
            Point::X(x) => quadrature::integrate(integrand, c, x, rtol, atol),
            Point::A => {
                if problem.kind(Side::A) == EndpointKind::Regular {
                    quadrature::integrate(integrand, c, problem.a, rtol, atol)
                } else {
                    quadrature::integrate_toward_tol(integrand, c, problem.a, rtol, atol)
                }
            }
            Point::B => match problem.end(Side::B) {
                Some(b) if problem.kind(Side::B) == EndpointKind::Regular => {
                    quadrature::integrate(integrand, c, b, rtol, atol)
                }
                Some(b) => quadrature::integrate_toward_tol(integrand, c, b, rtol, atol),
                None => quadrature::integrate_outward_tol(integrand, c, 1.0, None, rtol, atol),
            },
        }
    };
    Ok(from_anchor(beta)? - from_anchor(alpha)?)
}

/// [`quadrature_inner_product`] for two quasi-functions, with the outer limit capped by their spans.
pub fn quadrature_inner_product_fn(
    problem: &SlProblem,
    y1: &dyn QuasiFn,
    y2: &dyn QuasiFn,
    alpha: Point,
    beta: Point,
    rtol: f64,
) -> Result<C> {
    let f = |x: f64| Ok(y1.eval(x)?[0]);
    let g = |x: f64| Ok(y2.eval(x)?[0]);
    quadrature_inner_product(problem, &f, &g, alpha, beta, rtol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn flat() -> SlProblem {
        SlProblem::constant(1.0, 0.0, 1.0, 0.0, PI).unwrap()
    }

    #[test]
    fn sine_solution() {
        let tr = integrate(&flat(), c(1.0, 0.0), 0.0, c(0.0, 0.0), c(1.0, 0.0), PI, 1e-10).unwrap();
        let v = tr.eval(PI).unwrap();
        assert!(v[0].norm() < 1e-8 && (v[1] + 1.0).norm() < 1e-8);
        match tr.end_value(Side::B) {
            EndValue::Known(e) => assert!((e[1] + 1.0).norm() < 1e-8),
            _ => panic!("missing end data"),
        }
        let one = integrate(&flat(), c(0.0, 0.0), 0.0, c(1.0, 0.0), c(0.0, 0.0), PI, 1e-10).unwrap();
        for x in [0.5, 2.0, 3.0] {
            assert!((one.eval(x).unwrap()[0] - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn wronskian_examples() {
        let s = integrate(&flat(), c(1.0, 0.0), 0.0, c(0.0, 0.0), c(1.0, 0.0), PI, 1e-12).unwrap();
        let co = integrate(&flat(), c(1.0, 0.0), 0.0, c(1.0, 0.0), c(0.0, 0.0), PI, 1e-12).unwrap();
        for x in [0.3, 1.1, 2.9] {
            assert!((wronskian_at(&s, &co, x).unwrap() + 1.0).norm() < 1e-10);
            assert!((wronskian_at(&s, &co, x).unwrap() + wronskian_at(&co, &s, x).unwrap()).norm() < 1e-15);
            assert_eq!(wronskian_at(&s, &s, x).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn orthogonal_sines() {
        let p = flat();
        let s1 = integrate(&p, c(1.0, 0.0), 0.0, c(0.0, 0.0), c(1.0, 0.0), PI, 1e-12).unwrap();
        let s2 = integrate(&p, c(4.0, 0.0), 0.0, c(0.0, 0.0), c(2.0, 0.0), PI, 1e-12).unwrap();
        let mut s1 = s1;
        let mut s2 = s2;
        s1.set_end(Side::A, EndValue::Known([c(0.0, 0.0), c(1.0, 0.0)]));
        s2.set_end(Side::A, EndValue::Known([c(0.0, 0.0), c(2.0, 0.0)]));
        let g = green_inner_product(&s1, &s2, Point::A, Point::B).unwrap();
        assert!(g.norm() < 1e-9, "{g}");
        let f = |x: f64| Ok(c(x.sin(), 0.0));
        let h = |x: f64| Ok(c((2.0 * x).sin(), 0.0));
        let q = quadrature_inner_product(&p, &f, &f, Point::A, Point::B, 1e-12).unwrap();
        assert!((q.re - PI / 2.0).abs() < 1e-12);
        assert!(quadrature_inner_product(&p, &f, &h, Point::A, Point::B, 1e-12).unwrap().norm() < 1e-12);
    }

    #[test]
    fn green_matches_quadrature_for_sine_and_sinh() {
        let p = flat();
        let mut s = integrate(&p, c(1.0, 0.0), 0.0, c(0.0, 0.0), c(1.0, 0.0), PI, 1e-12).unwrap();
        let mut sh = integrate(&p, c(-1.0, 0.0), 0.0, c(0.0, 0.0), c(1.0, 0.0), PI, 1e-12).unwrap();
        s.set_end(Side::A, EndValue::Known([c(0.0, 0.0), c(1.0, 0.0)]));
        sh.set_end(Side::A, EndValue::Known([c(0.0, 0.0), c(1.0, 0.0)]));
        let g = green_inner_product(&s, &sh, Point::A, Point::B).unwrap();
        // ∫_0^π sin x sinh x dx = sinh π / 2
        assert!((g.re - PI.sinh() / 2.0).abs() < 1e-9, "{g}");
    }

    #[test]
    fn conjugate_parameter_gives_conjugate_trace() {
        let p = SlProblem::constant(2.0, 0.5, 1.5, 0.0, 2.0).unwrap();
        let z = c(1.3, 0.7);
        let init = (c(1.0, 0.0), c(0.2, 0.0));
        let y = integrate(&p, z, 0.0, init.0, init.1, 2.0, 1e-12).unwrap();
        let yb = integrate(&p, z.conj(), 0.0, init.0, init.1, 2.0, 1e-12).unwrap();
        for x in [0.4, 1.0, 1.9] {
            let (u, v) = (y.eval(x).unwrap(), yb.eval(x).unwrap());
            assert!((u[0].conj() - v[0]).norm() < 1e-10 && (u[1].conj() - v[1]).norm() < 1e-10);
        }
    }

    #[test]
    fn equal_parameters_rejected() {
        let y = integrate(&flat(), c(1.0, 0.0), 0.0, c(1.0, 0.0), c(0.0, 0.0), 1.0, 1e-10).unwrap();
        assert_eq!(
            green_inner_product(&y, &y, Point::X(0.1), Point::X(0.9)),
            Err(Error::EqualSpectralParams)
        );
    }
}
