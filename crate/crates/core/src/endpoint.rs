//! Endpoint classification, principal/nonprincipal pairs and generalized boundary values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::bessel::BesselPair;
use crate::error::{Error, Result};
use crate::ode::{
    dopri::integrate_system, system, DenseTrace, LimitTracker, QuasiFn, ReferencePair, State,
    StepperOptions,
};
use crate::problem::{
    Bound, EndpointClass, EndpointClassification, EndpointKind, Side, SlProblem, TailEvidence,
};
use crate::quadrature;

type C = Complex64;

fn sigma(side: Side) -> f64 {
    match side {
        Side::A => 1.0,
        Side::B => -1.0,
    }
}

fn finite_end(problem: &SlProblem, side: Side) -> Result<f64> {
    problem
        .end(side)
        .ok_or_else(|| Error::Unsupported("no boundary data at an infinite endpoint".into()))
}

// ---------------------------------------------------------------------------
// Classification

fn shell_tails(
    problem: &SlProblem,
    side: Side,
    z: C,
    depth: u32,
) -> Result<(Vec<f64>, [Vec<f64>; 2])> {
    let c = problem.anchor();
    let opts = StepperOptions::with_rtol(1e-10);
    let mut offsets = Vec::new();
    let mut tails: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let shells: Vec<(f64, f64)> = match problem.end(side) {
        Some(d) => {
            let h = (c - d).abs();
            (0..depth)
                .map(|k| {
                    let o = d + sigma(side) * h * 0.5f64.powi(k as i32);
                    let i = d + sigma(side) * h * 0.5f64.powi(k as i32 + 1);
                    (o, i)
                })
                .collect()
        }
        None => (0..depth)
            .map(|k| (c + 2f64.powi(k as i32) - 1.0, c + 2f64.powi(k as i32 + 1) - 1.0))
            .collect(),
    };
    for &(_, inner) in &shells {
        offsets.push(match problem.end(side) {
            Some(d) => (inner - d).abs(),
            None => inner,
        });
    }
    let target = shells.last().map(|s| s.1).unwrap_or(c);
    for (j, init) in [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]]
        .into_iter()
        .enumerate()
    {
        let tr = match integrate_system(system(problem, z), c, init, target, &opts) {
            Ok(t) => t,
            Err(Error::NonFiniteValue { .. }) | Err(Error::StepUnderflow { .. }) => {
                tails[j] = vec![f64::INFINITY; shells.len()];
                continue;
            }
            Err(e) => return Err(e),
        };
        for &(o, i) in &shells {
            let f = |x: f64| -> Result<C> {
                let y = tr.eval(x)?[0];
                Ok(C::new(problem.coeffs(x).r * y.norm_sqr(), 0.0))
            };
            let (lo, hi) = if o < i { (o, i) } else { (i, o) };
            let v = quadrature::integrate(f, lo, hi, 1e-8, 0.0)?.re;
            tails[j].push(if v.is_finite() { v } else { f64::INFINITY });
        }
    }
    Ok((offsets, tails))
}

fn verdict(pieces: &[f64]) -> Option<bool> {
    let n = pieces.len();
    if n < 4 {
        return None;
    }
    if pieces[n - 1].is_infinite() {
        return Some(false);
    }
    let ratios: Vec<f64> = (n - 3..n).map(|k| pieces[k] / pieces[k - 1]).collect();
    let total: f64 = pieces.iter().sum();
    if pieces[n - 1] <= 1e-14 * total || ratios.iter().all(|&r| r <= 0.8) {
        Some(true)
    } else if ratios.iter().all(|&r| r >= 0.95) {
        Some(false)
    } else {
        None
    }
}

/// Weyl's alternative at one endpoint: limit circle iff every solution is square integrable there.
///
/// `tail_depths` lists the shell counts tried in order; the first conclusive one wins.
pub fn classify_endpoint(
    problem: &SlProblem,
    side: Side,
    z_probe: C,
    tail_depths: &[u32],
) -> Result<(EndpointClass, Option<TailEvidence>)> {
    if z_probe.im == 0.0 {
        return Err(Error::InvalidParameter("classification needs a nonreal probe".into()));
    }
    if let Some(bp) = problem.bessel_params() {
        let class = match side {
            Side::A if bp.gamma < 1.0 => EndpointClass::LimitCircle,
            Side::A => EndpointClass::LimitPoint,
            Side::B if bp.b == Bound::Infinite => EndpointClass::LimitPoint,
            Side::B => EndpointClass::LimitCircle,
        };
        return Ok((class, None));
    }
    if problem.kind(side) == EndpointKind::Regular && problem.end(side).is_some() {
        return Ok((EndpointClass::LimitCircle, None));
    }
    for &depth in tail_depths {
        let (offsets, tails) = shell_tails(problem, side, z_probe, depth)?;
        let v = [verdict(&tails[0]), verdict(&tails[1])];
        let class = match v {
            [Some(true), Some(true)] => Some(EndpointClass::LimitCircle),
            [Some(false), _] | [_, Some(false)] => Some(EndpointClass::LimitPoint),
            _ => None,
        };
        if let Some(class) = class {
            return Ok((class, Some(TailEvidence { offsets, tails, analytic: false })));
        }
    }
    Err(Error::Inconclusive)
}

pub const DEFAULT_TAIL_DEPTHS: [u32; 3] = [12, 20, 28];

pub fn classify(problem: &SlProblem) -> Result<EndpointClassification> {
    let z = C::new(0.0, 1.0);
    let (at_a, ea) = classify_endpoint(problem, Side::A, z, &DEFAULT_TAIL_DEPTHS)?;
    let (at_b, eb) = classify_endpoint(problem, Side::B, z, &DEFAULT_TAIL_DEPTHS)?;
    let mark = |e: Option<TailEvidence>, analytic: bool| {
        e.or(if analytic {
            Some(TailEvidence { offsets: vec![], tails: [vec![], vec![]], analytic: true })
        } else {
            None
        })
    };
    let bessel = problem.bessel_params().is_some();
    Ok(EndpointClassification { at_a, at_b, evidence: [mark(ea, bessel), mark(eb, bessel)] })
}

// ---------------------------------------------------------------------------
// Principal pairs

/// Solutions with `u(d) = 0, u^[1](d) = 1` and `û(d) = 1, û^[1](d) = 0` at a regular end.
struct RegularPair {
    lambda0: f64,
    d: f64,
    sigma: f64,
    u: DenseTrace,
    uh: DenseTrace,
    reach: f64,
}

impl ReferencePair for RegularPair {
    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn eval(&self, rho: f64) -> Result<[f64; 4]> {
        let x = self.d + self.sigma * rho;
        let u = self.u.eval(x)?;
        let uh = self.uh.eval(x)?;
        Ok([u[0].re, u[1].re, uh[0].re, uh[1].re])
    }

    fn depth(&self) -> f64 {
        0.0
    }

    fn reach(&self) -> f64 {
        self.reach
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// `∫ 1/(p y²)` converges at the endpoint: `y` is nonprincipal.
    Nonprincipal,
    /// It diverges: `y` itself is principal.
    Principal,
}

/// Reduction-of-order pair built from one nonvanishing real solution `y` near a singular end.
struct NumericPair {
    problem: SlProblem,
    lambda0: f64,
    d: f64,
    sigma: f64,
    y: DenseTrace,
    /// Shell radii `h 2^{-k}`, decreasing.
    radii: Vec<f64>,
    /// `∫_0^{ρ_k}` (nonprincipal mode) or `∫_{ρ_k}^{h}` (principal mode) of `1/(p y²) dρ`.
    cumulative: Vec<f64>,
    mode: Mode,
    kappa: f64,
    depth: f64,
}

impl NumericPair {
    fn density(&self, rho: f64) -> Result<f64> {
        let x = self.d + self.sigma * rho;
        let y = self.y.eval(x)?[0].re;
        Ok(1.0 / (self.problem.coeffs(x).p * y * y))
    }

    fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        quadrature::integrate(|t| Ok(C::new(self.density(t)?, 0.0)), lo, hi, 1e-13, 0.0).map(|v| v.re)
    }

    /// `F(ρ)`: integral of the density from the endpoint (nonprincipal) or to `h` (principal).
    fn f_at(&self, rho: f64) -> Result<f64> {
        let k = self.radii.partition_point(|&r| r > rho);
        let k = k.min(self.radii.len() - 1);
        let rk = self.radii[k];
        match self.mode {
            Mode::Nonprincipal => Ok(self.cumulative[k] + self.integral(rk, rho)?),
            Mode::Principal => Ok(self.cumulative[k] - self.integral(rk, rho)?),
        }
    }
}

impl ReferencePair for NumericPair {
    fn lambda0(&self) -> f64 {
        self.lambda0
    }

    fn eval(&self, rho: f64) -> Result<[f64; 4]> {
        let x = self.d + self.sigma * rho;
        let v = self.y.eval(x)?;
        let (y, y1) = (v[0].re, v[1].re);
        let f = self.f_at(rho)?;
        let s = self.sigma;
        let (u, u1, uh, uh1) = match self.mode {
            Mode::Nonprincipal => (y * s * f, y1 * s * f + 1.0 / y, y, y1),
            Mode::Principal => (y, y1, y * (1.0 + s * f), y1 * (1.0 + s * f) - 1.0 / y),
        };
        let k = self.kappa;
        Ok([u * k, u1 * k, uh / k, uh1 / k])
    }

    fn depth(&self) -> f64 {
        self.depth
    }

    fn reach(&self) -> f64 {
        self.radii[0]
    }
}

/// Reference pair at one endpoint with `W(û, u) = 1`.
#[derive(Clone)]
pub struct PrincipalPair {
    pub lambda0: f64,
    pub side: Side,
    pub d: f64,
    pub pair: Arc<dyn ReferencePair>,
}

/// Diagnostics for the defining properties of a principal pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub wronskian_residual: f64,
    /// `|u/û|` at the deepest probe.
    pub tail_ratio: f64,
    pub ratio_decreasing: bool,
}

impl PrincipalPair {
    /// `(u, u^[1], û, û^[1])` at `x`.
    pub fn at(&self, x: f64) -> Result<[f64; 4]> {
        self.pair.eval(sigma(self.side) * (x - self.d))
    }

    pub fn diagnostics(&self, probes: usize) -> Result<PairDiagnostics> {
        let h = self.pair.reach().min(1.0);
        let mut resid: f64 = 0.0;
        let mut last = f64::INFINITY;
        let mut decreasing = true;
        let mut ratio = 0.0;
        for k in 0..probes {
            let rho = h * 0.5f64.powi(k as i32 + 1);
            if rho < self.pair.depth() {
                break;
            }
            let [u, u1, uh, uh1] = self.pair.eval(rho)?;
            resid = resid.max((uh * u1 - uh1 * u - 1.0).abs());
            ratio = (u / uh).abs();
            if ratio > last * (1.0 + 1e-12) {
                decreasing = false;
            }
            last = ratio;
        }
        Ok(PairDiagnostics { wronskian_residual: resid, tail_ratio: ratio, ratio_decreasing: decreasing })
    }
}

fn regular_pair(problem: &SlProblem, side: Side, lambda0: f64) -> Result<PrincipalPair> {
    let d = finite_end(problem, side)?;
    let c = problem.anchor();
    let opts = StepperOptions::with_rtol(1e-13);
    let z = C::new(lambda0, 0.0);
    let u = integrate_system(system(problem, z), d, [C::new(0.0, 0.0), C::new(1.0, 0.0)], c, &opts)?;
    let uh = integrate_system(system(problem, z), d, [C::new(1.0, 0.0), C::new(0.0, 0.0)], c, &opts)?;
    Ok(PrincipalPair {
        lambda0,
        side,
        d,
        pair: Arc::new(RegularPair { lambda0, d, sigma: sigma(side), u, uh, reach: (c - d).abs() }),
    })
}

fn numeric_pair(problem: &SlProblem, side: Side, lambda0: f64) -> Result<PrincipalPair> {
    let d = finite_end(problem, side)?;
    let s = sigma(side);
    let c = problem.anchor();
    let h = (c - d).abs();
    let levels = 34;
    let depth = h * 0.5f64.powi(levels);
    let opts = StepperOptions::with_rtol(1e-13);
    let z = C::new(lambda0, 0.0);
    let mut first_zero = None;
    for init in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, -1.0)] {
        let init = [C::new(init.0, 0.0), C::new(init.1, 0.0)];
        let y = integrate_system(system(problem, z), c, init, d + s * depth, &opts)?;
        let vals = y.values();
        let sign = vals[0][0].re.signum();
        if let Some(i) = vals.iter().position(|v| v[0].re.signum() != sign || v[0].re == 0.0) {
            first_zero.get_or_insert(y.grid()[i]);
            continue;
        }
        let mut pair = NumericPair {
            problem: problem.clone(),
            lambda0,
            d,
            sigma: s,
            y,
            radii: (0..=levels).map(|k| h * 0.5f64.powi(k)).collect(),
            cumulative: vec![0.0; levels as usize + 1],
            mode: Mode::Principal,
            kappa: 1.0,
            depth,
        };
        let pieces: Vec<f64> = (0..levels as usize)
            .map(|k| pair.integral(pair.radii[k + 1], pair.radii[k]))
            .collect::<Result<_>>()?;
        let n = pieces.len();
        let ratios: Vec<f64> = (n - 4..n).map(|k| pieces[k] / pieces[k - 1]).collect();
        if ratios.iter().all(|&r| r < 0.9) {
            pair.mode = Mode::Nonprincipal;
            let r = ratios[3];
            let mut acc = pieces[n - 1] * r / (1.0 - r);
            pair.cumulative[n] = acc;
            for k in (0..n).rev() {
                acc += pieces[k];
                pair.cumulative[k] = acc;
            }
        } else {
            let mut acc = 0.0;
            for k in 0..n {
                pair.cumulative[k] = acc;
                acc += pieces[k];
            }
            pair.cumulative[n] = acc;
        }
        let [u, ..] = pair.eval(h)?;
        pair.kappa = 1.0 / u;
        return Ok(PrincipalPair { lambda0, side, d, pair: Arc::new(pair) });
    }
    Err(Error::ZeroEncountered { x: first_zero.unwrap_or(c) })
}

/// Lower estimate used as the first `λ0` for a singular end without closed forms.
pub fn default_lambda0(problem: &SlProblem, side: Side) -> Result<f64> {
    let d = finite_end(problem, side)?;
    let c = problem.anchor();
    // sampled away from the endpoint, where a singular q⁻ would dominate any bound
    let mut worst: f64 = 0.0;
    for k in 0..=8 {
        let x = d + (c - d) * 0.5f64.powf(k as f64 * 0.5);
        let co = problem.coeffs(x);
        worst = worst.max(-co.q / co.r);
    }
    Ok(-(1.0 + worst))
}

/// Principal/nonprincipal pair at a finite endpoint.
///
/// Bessel problems use the closed forms at 0 when `λ0` is 0 or unspecified. Other singular ends
/// search `λ0` downward from [`default_lambda0`] while the trial solution has zeros.
pub fn principal_pair(problem: &SlProblem, side: Side, lambda0: Option<f64>) -> Result<PrincipalPair> {
    let d = finite_end(problem, side)?;
    if let (Some(bp), Side::A) = (problem.bessel_params(), side) {
        if lambda0.unwrap_or(0.0) == 0.0 {
            bp.check_limit_circle()?;
            return Ok(PrincipalPair { lambda0: 0.0, side, d, pair: Arc::new(BesselPair { params: *bp }) });
        }
    }
    if problem.kind(side) == EndpointKind::Regular {
        return regular_pair(problem, side, lambda0.unwrap_or(0.0));
    }
    if let Some(l) = lambda0 {
        return numeric_pair(problem, side, l);
    }
    let mut l = default_lambda0(problem, side)?;
    let mut last = Error::ZeroEncountered { x: d };
    for _ in 0..8 {
        match numeric_pair(problem, side, l) {
            Err(e @ Error::ZeroEncountered { .. }) => last = e,
            other => return other,
        }
        l = 2.0 * l - 1.0;
    }
    Err(last)
}

// ---------------------------------------------------------------------------
// Generalized boundary values

/// Boundary values `(g̃(d), g̃′(d))` with an error estimate and the quotient cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub value: [C; 2],
    /// Relative spread of the accepted extrapolants.
    pub spread: f64,
    /// `g/û` at the deepest usable probe; approximates `g̃(d)`.
    pub quotient: C,
}

/// Boundary values at both ends; absent at limit-point ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedBoundaryData {
    pub a: Option<[C; 2]>,
    pub b: Option<[C; 2]>,
}

/// Picks the most stable Aitken extrapolant along the probe sequence.
pub fn extrapolate(seq: &[State]) -> Result<(State, f64, usize)> {
    if seq.is_empty() {
        return Err(Error::NonConvergentLimit { spread: f64::INFINITY });
    }
    let scale = seq.iter().map(|s| s[0].norm().max(s[1].norm())).fold(0.0, f64::max).max(1e-300);
    if seq.len() < 4 {
        let n = seq.len() - 1;
        return Ok((seq[n], f64::INFINITY, n));
    }
    let mut est = Vec::with_capacity(seq.len());
    for k in 2..seq.len() {
        let mut t = LimitTracker::default();
        t.push(seq[k - 2]);
        t.push(seq[k - 1]);
        t.push(seq[k]);
        est.push((k, t.estimate().map(|e| e.0).unwrap_or(seq[k])));
    }
    let mut best = (f64::INFINITY, est[0].1, est[0].0);
    for w in est.windows(2) {
        let d = (w[1].1[0] - w[0].1[0]).norm().max((w[1].1[1] - w[0].1[1]).norm());
        if d <= best.0 {
            best = (d, w[1].1, w[1].0);
        }
    }
    Ok((best.1, best.0 / scale, best.2))
}

/// Default number of probes `x_k = d ± s 2^{-k}`.
pub const PROBES: usize = 40;

/// `g̃(d) = −W(u, g)(d)`, `g̃′(d) = W(û, g)(d)` as limits along a geometric probe sequence.
pub fn boundary_values(
    problem: &SlProblem,
    g: &dyn QuasiFn,
    side: Side,
    pair: &PrincipalPair,
) -> Result<BoundaryValue> {
    let d = finite_end(problem, side)?;
    let s = sigma(side);
    if problem.kind(side) == EndpointKind::Regular {
        if let Ok(v) = g.eval(d) {
            return Ok(BoundaryValue { value: v, spread: 0.0, quotient: v[0] });
        }
    }
    let (lo, hi) = g.span();
    let room = match side {
        Side::A => hi - d,
        Side::B => d - lo,
    };
    let h = (0.5 * room).min(0.5 * pair.pair.reach()).min(1.0);
    let mut seq = Vec::with_capacity(PROBES + 1);
    let mut quot = Vec::with_capacity(PROBES + 1);
    for k in 0..=PROBES {
        let rho = h * 0.5f64.powi(k as i32);
        if rho < pair.pair.depth() {
            break;
        }
        let x = d + s * rho;
        let v = match g.eval(x) {
            Ok(v) => v,
            Err(Error::OutOfRange { .. }) => break,
            Err(e) => return Err(e),
        };
        let [u, u1, uh, uh1] = pair.pair.eval(rho)?;
        seq.push([-(v[1] * u - v[0] * u1), v[1] * uh - v[0] * uh1]);
        quot.push(v[0] / uh);
    }
    let (value, spread, k) = extrapolate(&seq)?;
    if !(spread <= 1e-6) {
        return Err(Error::NonConvergentLimit { spread });
    }
    Ok(BoundaryValue { value, spread, quotient: quot[k] })
}

/// Boundary data at every limit-circle end of `g`.
pub fn boundary_data(problem: &SlProblem, g: &dyn QuasiFn) -> Result<GeneralizedBoundaryData> {
    let cls = classify(problem)?;
    let mut out = GeneralizedBoundaryData { a: None, b: None };
    for side in [Side::A, Side::B] {
        let lc = match side {
            Side::A => cls.at_a,
            Side::B => cls.at_b,
        } == EndpointClass::LimitCircle;
        if !lc {
            continue;
        }
        let pair = principal_pair(problem, side, None)?;
        let v = boundary_values(problem, g, side, &pair)?.value;
        match side {
            Side::A => out.a = Some(v),
            Side::B => out.b = Some(v),
        }
    }
    Ok(out)
}
