//! Adaptive Gauss–Kronrod quadrature with geometric tails toward singular or infinite ends.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Nodes and weights of the 15-point Kronrod rule mapped to `[a, b]`.
pub fn gk15_nodes(a: f64, b: f64) -> [(f64, f64); 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 15];
    for j in 0..7 {
        out[2 * j] = (c - h * XGK[j], h * WGK[j]);
        out[2 * j + 1] = (c + h * XGK[j], h * WGK[j]);
    }
    out[14] = (c, h * WGK[7]);
    out
}

fn gk15<F: FnMut(f64) -> Result<C>>(f: &mut F, a: f64, b: f64) -> Result<(C, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    if !(kron.re.is_finite() && kron.im.is_finite()) {
        return Err(Error::NonFiniteValue { x: c });
    }
    Ok((kron, (kron - gauss).norm()))
}

/// Globally adaptive quadrature of a complex integrand on a finite interval.
pub fn integrate<F: FnMut(f64) -> Result<C>>(mut f: F, a: f64, b: f64, rtol: f64, atol: f64) -> Result<C> {
    if a == b {
        return Ok(C::new(0.0, 0.0));
    }
    let mut parts: Vec<(f64, f64, C, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b)?;
    parts.push((a, b, v, e));
    for _ in 0..4000 {
        let total: C = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= atol.max(rtol * total.norm()) {
            return Ok(total);
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    Err(Error::NoConvergence { lo: a, hi: b })
}

pub fn integrate_real(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rtol: f64) -> Result<f64> {
    integrate(|x| Ok(C::new(f(x), 0.0)), a, b, rtol, 0.0).map(|v| v.re)
}

/// Oriented improper integral `∫_{x0}^{d}` toward an endpoint on either side, via dyadic pieces
/// `|x − d| ∈ [h 2^{-k-1}, h 2^{-k}]` and a geometric tail estimate.
pub fn integrate_toward<F: FnMut(f64) -> Result<C>>(f: F, x0: f64, d: f64, rtol: f64) -> Result<C> {
    integrate_toward_tol(f, x0, d, rtol, 0.0)
}

/// [`integrate_toward`] with an absolute tolerance as well.
pub fn integrate_toward_tol<F: FnMut(f64) -> Result<C>>(mut f: F, x0: f64, d: f64, rtol: f64, atol: f64) -> Result<C> {
    let h = x0 - d;
    let mut sum = C::new(0.0, 0.0);
    let mut last: Option<C> = None;
    let mut quiet = 0;
    for k in 0..1000 {
        let outer = d + h * 0.5f64.powi(k);
        let inner = d + h * 0.5f64.powi(k + 1);
        if inner == d || inner == outer {
            return Ok(sum);
        }
        let piece = integrate(&mut f, outer, inner, 0.1 * rtol, 0.1 * (rtol * sum.norm()).max(atol))?;
        sum += piece;
        let small = piece.norm() <= (rtol * sum.norm()).max(atol);
        quiet = if small { quiet + 1 } else { 0 };
        if quiet >= 3 {
            if let Some(prev) = last {
                let ratio = piece.norm() / prev.norm();
                if ratio < 0.99 && prev.norm() > 0.0 {
                    sum += piece * (ratio / (1.0 - ratio));
                }
            }
            return Ok(sum);
        }
        if sum.norm() == 0.0 && piece.norm() == 0.0 && k > 8 {
            return Ok(sum);
        }
        last = Some(piece);
    }
    Err(Error::NoConvergence { lo: d.min(x0), hi: d.max(x0) })
}

/// Improper integral over `[x0, ∞)` (or up to `stop`) by doubling pieces.
pub fn integrate_outward<F: FnMut(f64) -> Result<C>>(f: F, x0: f64, len: f64, stop: Option<f64>, rtol: f64) -> Result<C> {
    integrate_outward_tol(f, x0, len, stop, rtol, 0.0)
}

/// [`integrate_outward`] with an absolute tolerance as well.
pub fn integrate_outward_tol<F: FnMut(f64) -> Result<C>>(
    mut f: F,
    x0: f64,
    len: f64,
    stop: Option<f64>,
    rtol: f64,
    atol: f64,
) -> Result<C> {
    let mut sum = C::new(0.0, 0.0);
    let mut lo = x0;
    let mut width = len;
    let mut quiet = 0;
    for _ in 0..200 {
        let mut hi = lo + width;
        let mut last_piece = false;
        if let Some(s) = stop {
            if hi >= s {
                hi = s;
                last_piece = true;
            }
        }
        let piece = integrate(&mut f, lo, hi, 0.1 * rtol, 0.1 * (rtol * sum.norm()).max(atol))?;
        sum += piece;
        if last_piece {
            return Ok(sum);
        }
        quiet = if piece.norm() <= (rtol * sum.norm()).max(atol) { quiet + 1 } else { 0 };
        if quiet >= 3 {
            return Ok(sum);
        }
        lo = hi;
        width *= 2.0;
    }
    Err(Error::NoConvergence { lo: x0, hi: f64::INFINITY })
}
