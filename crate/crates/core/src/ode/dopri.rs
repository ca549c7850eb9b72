//! Dormand–Prince 5(4) for two-component complex linear systems, with the
//! Hairer continuous extension for dense output.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;
pub type State = [C; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct StepperOptions {
    pub rtol: f64,
    /// Per-component error floor relative to the running maximum magnitude.
    pub floor: f64,
    /// Absolute error floor per component.
    pub atol: f64,
    pub h0: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            rtol: 1e-12,
            floor: 1e-3,
            atol: 0.0,
            h0: None,
            h_max: None,
            max_steps: 2_000_000,
        }
    }
}

impl StepperOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        StepperOptions {
            rtol,
            ..Self::default()
        }
    }
}

/// Accepted steps with their continuous-extension coefficients.
#[derive(Debug, Clone)]
pub struct DenseTrace<const N: usize = 2> {
    t: Vec<f64>,
    y: Vec<[C; N]>,
    cont: Vec<[[C; N]; 4]>,
}

#[inline]
fn axpy<const N: usize>(y: &[C; N], h: f64, terms: &[(f64, &[C; N])]) -> [C; N] {
    let mut out = *y;
    for (c, k) in terms {
        let s = h * c;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

#[inline]
fn finite<const N: usize>(s: &[C; N]) -> bool {
    s.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
pub fn integrate_system<F, const N: usize>(
    mut f: F,
    t0: f64,
    y0: [C; N],
    t1: f64,
    opts: &StepperOptions,
) -> Result<DenseTrace<N>>
where
    F: FnMut(f64, &[C; N]) -> [C; N],
{
    let mut trace = DenseTrace {
        t: vec![t0],
        y: vec![y0],
        cont: Vec::new(),
    };
    if t1 == t0 {
        return Ok(trace);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let h_max = opts.h_max.unwrap_or(f64::INFINITY);
    let mut h = opts.h0.map(|v| v.abs()).unwrap_or(span * 1e-3).min(span).min(h_max) * dir;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut ymax = y0.map(|v| v.norm());
    for _ in 0..opts.max_steps {
        let remaining = t1 - t;
        if remaining * dir <= 0.0 {
            return Ok(trace);
        }
        let last = (h.abs() >= remaining.abs()) || (remaining.abs() - h.abs()) < 1e-14 * t.abs().max(1.0);
        if last {
            h = remaining;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let ynew = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let tnew = if last { t1 } else { t + h };
        let k7 = f(tnew, &ynew);
        if !finite(&ynew) || !finite(&k7) {
            return Err(Error::NonFiniteValue { x: t + h });
        }
        let mut err2 = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = (opts.rtol * y[i].norm().max(ynew[i].norm()).max(opts.floor * ymax[i]))
                .max(opts.atol)
                .max(1e-300);
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / N as f64).sqrt();
        if err <= 1.0 {
            let rc2: [C; N] = std::array::from_fn(|i| ynew[i] - y[i]);
            let rc3: [C; N] = std::array::from_fn(|i| k1[i] * h - rc2[i]);
            let rc4: [C; N] = std::array::from_fn(|i| rc2[i] - k7[i] * h - rc3[i]);
            let mut rc5 = [C::new(0.0, 0.0); N];
            for i in 0..N {
                rc5[i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
            }
            trace.cont.push([rc2, rc3, rc4, rc5]);
            t = tnew;
            y = ynew;
            k1 = k7;
            trace.t.push(t);
            trace.y.push(y);
            for i in 0..N {
                ymax[i] = ymax[i].max(y[i].norm());
            }
            if last {
                return Ok(trace);
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).clamp(-h_max, h_max);
        if h.abs() < 1e-14 * t.abs().max(1e-300) || h.abs() < 1e-300 {
            return Err(Error::StepUnderflow { x: t });
        }
    }
    Err(Error::StepLimit { x: t, steps: opts.max_steps })
}

impl<const N: usize> DenseTrace<N> {
    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn lo(&self) -> f64 {
        self.start().min(self.end())
    }

    pub fn hi(&self) -> f64 {
        self.start().max(self.end())
    }

    pub fn grid(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[[C; N]] {
        &self.y
    }

    pub fn last_value(&self) -> [C; N] {
        *self.y.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.cont.len()
    }

    /// Multiplies the trace by `c`; valid for linear systems.
    pub fn scaled(&self, c: C) -> DenseTrace<N> {
        let mul = |s: &[C; N]| s.map(|v| v * c);
        DenseTrace {
            t: self.t.clone(),
            y: self.y.iter().map(mul).collect(),
            cont: self
                .cont
                .iter()
                .map(|k| [mul(&k[0]), mul(&k[1]), mul(&k[2]), mul(&k[3])])
                .collect(),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo() && t <= self.hi()
    }

    pub fn eval(&self, t: f64) -> Result<[C; N]> {
        if !self.contains(t) {
            return Err(Error::OutOfRange {
                x: t,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        if self.cont.is_empty() {
            return Ok(self.y[0]);
        }
        let increasing = self.end() > self.start();
        let pos = if increasing {
            self.t.partition_point(|&v| v <= t)
        } else {
            self.t.partition_point(|&v| v >= t)
        };
        let i = pos.saturating_sub(1).min(self.cont.len() - 1);
        let h = self.t[i + 1] - self.t[i];
        let th = (t - self.t[i]) / h;
        let th1 = 1.0 - th;
        let [rc2, rc3, rc4, rc5] = &self.cont[i];
        let y0 = &self.y[i];
        let mut out = [C::new(0.0, 0.0); N];
        for k in 0..N {
            out[k] = y0[k] + (rc2[k] + (rc3[k] + (rc4[k] + rc5[k] * th1) * th) * th1) * th;
        }
        Ok(out)
    }
}
