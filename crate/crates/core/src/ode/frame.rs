//! Variation-of-constants representation near a limit-circle endpoint.
//!
//! Writing `y = A û + B u` with a reference pair `(u, û)` at `λ0`, `W(û, u) = 1`,
//! gives `A = −W(u, y)`, `B = W(û, y)` and
//!
//! ```text
//! A' =  (z − λ0) r u (A û + B u)
//! B' = −(z − λ0) r û (A û + B u)
//! ```
//!
//! which is integrated in `t = ln|x − d|`. `A, B` tend to the generalized
//! boundary values `ỹ(d), ỹ′(d)`.

use num_complex::Complex64;
use std::sync::Arc;

use super::dopri::{integrate_system, DenseTrace, State, StepperOptions};
use crate::error::{Error, Result};
use crate::problem::{Side, SlProblem};

type C = Complex64;

/// Principal/nonprincipal pair at a real `λ0`, evaluated by offset `ρ = |x − d|`.
pub trait ReferencePair: Send + Sync {
    fn lambda0(&self) -> f64;
    /// `(u, u^[1], û, û^[1])` at offset `rho`.
    fn eval(&self, rho: f64) -> Result<[f64; 4]>;
    /// Smallest offset at which `eval` is valid.
    fn depth(&self) -> f64;
    /// Largest offset at which `eval` is valid.
    fn reach(&self) -> f64;
}

#[derive(Clone)]
pub struct Frame {
    pub side: Side,
    pub d: f64,
    sigma: f64,
    pub pair: Arc<dyn ReferencePair>,
    /// Segments in `t = ln ρ`, contiguous, starting at `t_outer`.
    segs: Vec<DenseTrace>,
    pub t_outer: f64,
    pub t_inner: f64,
    /// `(A, B)` at the endpoint.
    pub limit: State,
    /// Estimated error of `limit`.
    pub spread: f64,
}

fn frame_rhs<'a>(
    problem: &'a SlProblem,
    pair: &'a dyn ReferencePair,
    z: C,
    d: f64,
    sigma: f64,
) -> impl FnMut(f64, &State) -> State + 'a {
    let shift = z - pair.lambda0();
    move |t, s| {
        let rho = t.exp();
        let x = d + sigma * rho;
        let r = problem.coeffs(x).r;
        let [u, _, uh, _] = pair.eval(rho).unwrap_or([f64::NAN; 4]);
        let y = s[0] * uh + s[1] * u;
        let k = shift * (sigma * rho * r) * y;
        [k * u, -k * uh]
    }
}

/// Tracks `(A, B)` probes at `ρ_k = ρ_0 2^{-k}` and estimates the limit by Aitken's process.
#[derive(Default)]
pub struct LimitTracker {
    probes: Vec<State>,
}

impl LimitTracker {
    pub fn push(&mut self, s: State) {
        self.probes.push(s);
    }

    /// Returns `(extrapolated limit, tail estimate)` from the last three probes.
    pub fn estimate(&self) -> Option<(State, f64)> {
        let n = self.probes.len();
        if n < 3 {
            return None;
        }
        let (p0, p1, p2) = (&self.probes[n - 3], &self.probes[n - 2], &self.probes[n - 1]);
        let mut out = *p2;
        let mut tail: f64 = 0.0;
        for i in 0..2 {
            let d1 = p1[i] - p0[i];
            let d2 = p2[i] - p1[i];
            if d2.norm() == 0.0 {
                continue;
            }
            let q = d2.norm() / d1.norm();
            if d1.norm() == 0.0 || !(q < 0.97) {
                tail = tail.max(d2.norm() * 1e3);
                continue;
            }
            let ratio = d2 / d1;
            out[i] = p2[i] + d2 * ratio / (C::new(1.0, 0.0) - ratio);
            tail = tail.max(d2.norm() * q / (1.0 - q));
        }
        Some((out, tail))
    }

    pub fn scale(&self) -> f64 {
        self.probes
            .last()
            .map(|s| s[0].norm().max(s[1].norm()))
            .unwrap_or(0.0)
    }
}

const CHUNK: usize = 8;

fn sigma_of(side: Side) -> f64 {
    match side {
        Side::A => 1.0,
        Side::B => -1.0,
    }
}

fn frame_floor(d: f64, pair: &dyn ReferencePair) -> f64 {
    pair.depth().max(4e-16 * d.abs()).max(1e-280)
}

impl Frame {
    /// Starts from the solution values `y` at `x_m` and integrates toward the endpoint
    /// until the `(A, B)` limit settles.
    pub fn inward(
        problem: &SlProblem,
        z: C,
        side: Side,
        pair: Arc<dyn ReferencePair>,
        x_m: f64,
        y: State,
        opts: &StepperOptions,
    ) -> Result<Frame> {
        let d = problem
            .end(side)
            .ok_or_else(|| Error::Unsupported("frame at an infinite endpoint".into()))?;
        let sigma = sigma_of(side);
        let rho_m = (x_m - d).abs();
        let [u, u1, uh, uh1] = pair.eval(rho_m)?;
        let a0 = -(y[1] * u - y[0] * u1);
        let b0 = y[1] * uh - y[0] * uh1;
        let t_outer = rho_m.ln();
        let t_floor = frame_floor(d, pair.as_ref()).ln();
        let step = std::f64::consts::LN_2;
        let mut tracker = LimitTracker::default();
        tracker.push([a0, b0]);
        let mut segs: Vec<DenseTrace> = Vec::new();
        let mut t = t_outer;
        let mut state = [a0, b0];
        let mut best: Option<(State, f64)> = None;
        let chunk_opts = StepperOptions { floor: 1.0, ..*opts };
        loop {
            let t_next = (t - CHUNK as f64 * step).max(t_floor);
            let seg = {
                let rhs = frame_rhs(problem, pair.as_ref(), z, d, sigma);
                integrate_system(rhs, t, state, t_next, &chunk_opts)?
            };
            let mut k = 1;
            while t - k as f64 * step >= t_next - 1e-12 {
                tracker.push(seg.eval((t - k as f64 * step).max(t_next))?);
                k += 1;
            }
            state = seg.last_value();
            segs.push(seg);
            t = t_next;
            let scale = tracker.scale();
            if let Some((lim, tail)) = tracker.estimate() {
                best = Some((lim, tail));
                if tail <= 1e-15 * scale {
                    break;
                }
            }
            if t <= t_floor {
                break;
            }
        }
        let (limit, tail) = best.ok_or(Error::NonConvergentLimit { spread: f64::INFINITY })?;
        let scale = tracker.scale().max(1e-300);
        if !(tail <= 1e-6 * scale) {
            return Err(Error::NonConvergentLimit { spread: tail / scale });
        }
        Ok(Frame {
            side,
            d,
            sigma,
            pair,
            segs,
            t_outer,
            t_inner: t,
            limit,
            spread: tail / scale,
        })
    }

    /// Starts at the endpoint with prescribed boundary values and integrates out to `x_m`.
    pub fn outward(
        problem: &SlProblem,
        z: C,
        side: Side,
        pair: Arc<dyn ReferencePair>,
        bv: State,
        x_m: f64,
        opts: &StepperOptions,
    ) -> Result<Frame> {
        let d = problem
            .end(side)
            .ok_or_else(|| Error::Unsupported("frame at an infinite endpoint".into()))?;
        let sigma = sigma_of(side);
        let t_outer = (x_m - d).abs().ln();
        let t_inner = frame_floor(d, pair.as_ref()).max(1e-250).ln();
        let chunk_opts = StepperOptions { floor: 1.0, ..*opts };
        let seg = {
            let rhs = frame_rhs(problem, pair.as_ref(), z, d, sigma);
            integrate_system(rhs, t_inner, bv, t_outer, &chunk_opts)?
        };
        Ok(Frame {
            side,
            d,
            sigma,
            pair,
            segs: vec![seg],
            t_outer,
            t_inner,
            limit: bv,
            spread: 0.0,
        })
    }

    /// `(A, B)` at the outer end of the frame.
    pub fn outer_state(&self) -> Result<State> {
        self.ab_at(self.t_outer)
    }

    pub fn x_outer(&self) -> f64 {
        self.d + self.sigma * self.t_outer.exp()
    }

    pub fn covers(&self, x: f64) -> bool {
        let off = self.sigma * (x - self.d);
        off > 0.0 && off <= self.t_outer.exp() * (1.0 + 1e-14)
    }

    fn ab_at(&self, t: f64) -> Result<State> {
        if t <= self.t_inner {
            return Ok(self.limit);
        }
        let t = t.min(self.t_outer);
        for seg in &self.segs {
            if seg.contains(t) {
                return seg.eval(t);
            }
        }
        Err(Error::OutOfRange {
            x: self.d + self.sigma * t.exp(),
            lo: self.t_inner,
            hi: self.t_outer,
        })
    }

    /// `(y, y^[1])` at `x`.
    pub fn eval(&self, x: f64) -> Result<State> {
        let rho = self.sigma * (x - self.d);
        if !(rho > 0.0) {
            return Err(Error::OutOfRange {
                x,
                lo: self.d,
                hi: self.x_outer(),
            });
        }
        let ab = self.ab_at(rho.ln())?;
        let [u, u1, uh, uh1] = self.pair.eval(rho)?;
        Ok([ab[0] * uh + ab[1] * u, ab[0] * uh1 + ab[1] * u1])
    }

    /// `(A, B)` probe values at `ρ_k = ρ_outer 2^{-k}`, for diagnostics.
    pub fn probes(&self, count: usize) -> Result<Vec<(f64, State)>> {
        (0..count)
            .map(|k| {
                let t = self.t_outer - k as f64 * std::f64::consts::LN_2;
                Ok((t.exp(), self.ab_at(t)?))
            })
            .collect()
    }

    pub fn scaled(&self, c: C) -> Frame {
        let mut f = self.clone();
        f.limit = [self.limit[0] * c, self.limit[1] * c];
        f.segs = Vec::new();
        for s in &self.segs {
            f.segs.push(s.scaled(c));
        }
        f
    }
}
