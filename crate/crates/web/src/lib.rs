//! Browser bindings: endpoint classification, Weyl function against the closed form,
//! and a Donoghue scan with Herglotz margins, all for the generalized Bessel family.

use wasm_bindgen::prelude::*;

use sldonoghue::bessel::{bessel_weyl_m, BesselParams};
use sldonoghue::deficiency::weyl_solution;
use sldonoghue::donoghue::{herglotz_row, OneLcDonoghue, TwoLcDonoghue};
use sldonoghue::endpoint::classify;
use sldonoghue::{Bound, EndpointClass, ExtensionSpec, SlProblem, C64};

fn problem(delta: f64, nu: f64, gamma: f64, b: f64) -> Result<(BesselParams, SlProblem), JsError> {
    let bound = if b.is_finite() { Bound::Finite(b) } else { Bound::Infinite };
    let bp = BesselParams::new(delta, nu, gamma, bound);
    let p = SlProblem::bessel(bp).map_err(js)?;
    Ok((bp, p))
}

fn js(e: sldonoghue::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn class_name(c: EndpointClass) -> &'static str {
    match c {
        EndpointClass::LimitCircle => "limit-circle",
        EndpointClass::LimitPoint => "limit-point",
    }
}

/// Endpoint report for the Bessel-family problem `(δ, ν, γ)` on `(0, b)`; pass `b = Infinity` for the half-line.
#[wasm_bindgen]
pub fn classify_bessel(delta: f64, nu: f64, gamma: f64, b: f64) -> Result<String, JsError> {
    let (_, p) = problem(delta, nu, gamma, b)?;
    let c = classify(&p).map_err(js)?;
    let n = c.deficiency_index();
    let mut s = format!("a: {}, b: {}, n± = {n}", class_name(c.at_a), class_name(c.at_b));
    if n == 0 {
        s.push_str(", T_min self-adjoint");
    }
    Ok(s)
}

/// `[m_re, m_im, ref_re, ref_im]`: the numerical Weyl function on `(0, ∞)` and its closed form.
#[wasm_bindgen]
pub fn weyl_m(delta: f64, nu: f64, gamma: f64, re: f64, im: f64) -> Result<Vec<f64>, JsError> {
    let (bp, p) = problem(delta, nu, gamma, f64::INFINITY)?;
    let z = C64::new(re, im);
    let m = weyl_solution(&p, z).map_err(js)?.m0;
    let r = bessel_weyl_m(&bp, z).map_err(js)?;
    Ok(vec![m.re, m.im, r.re, r.im])
}

/// Donoghue function along `Re z ∈ [re_lo, re_hi]` at fixed `Im z`, `n ≥ 2` samples.
///
/// Half-line (`b = Infinity`): the extension `cos α ũ(0) + sin α ũ′(0) = 0`.
/// Finite `b`: the separated extension with angles `(α, α)`.
/// Each sample contributes `[re, Re M11, Im M11, herglotz_margin]`; failed samples carry NaN.
#[wasm_bindgen]
pub fn donoghue_scan(
    delta: f64,
    nu: f64,
    gamma: f64,
    b: f64,
    alpha: f64,
    re_lo: f64,
    re_hi: f64,
    im: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    if n < 2 {
        return Err(JsError::new("need at least two samples"));
    }
    let (_, p) = problem(delta, nu, gamma, b)?;
    let eval: Box<dyn Fn(C64) -> sldonoghue::Result<sldonoghue::donoghue::DonoghueMatrix>> = if b.is_finite() {
        let d = TwoLcDonoghue::new(&p).map_err(js)?;
        let spec = ExtensionSpec::Separated { alpha, beta: alpha };
        Box::new(move |z| d.eval(&spec, z))
    } else {
        let d = OneLcDonoghue::new(&p).map_err(js)?;
        Box::new(move |z| d.eval(alpha, z))
    };
    let mut out = Vec::with_capacity(4 * n);
    for k in 0..n {
        let re = re_lo + (re_hi - re_lo) * k as f64 / (n - 1) as f64;
        match eval(C64::new(re, im)) {
            Ok(m) => {
                let h = herglotz_row(&m, None);
                out.extend([re, m.entry(0, 0).re, m.entry(0, 0).im, h.margin]);
            }
            Err(_) => out.extend([re, f64::NAN, f64::NAN, f64::NAN]),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_strings() {
        let s = classify_bessel(0.0, 0.0, 0.5, f64::INFINITY).unwrap();
        assert_eq!(s, "a: limit-circle, b: limit-point, n± = 1");
        let s = classify_bessel(0.0, 0.0, 1.5, f64::INFINITY).unwrap();
        assert_eq!(s, "a: limit-point, b: limit-point, n± = 0, T_min self-adjoint");
    }

    #[test]
    fn weyl_matches_closed_form() {
        let v = weyl_m(0.0, 0.0, 0.5, 0.0, 2.0).unwrap();
        // ψ = e^{i√z x} on the free half-line with γ = ½: m(2i) = −1 + i
        assert!((v[0] + 1.0).abs() < 1e-8 && (v[1] - 1.0).abs() < 1e-8, "{v:?}");
        assert!((v[2] + 1.0).abs() < 1e-12 && (v[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_is_herglotz() {
        let v = donoghue_scan(0.0, 0.0, 0.5, f64::INFINITY, 0.3, -2.0, 2.0, 0.5, 5).unwrap();
        assert_eq!(v.len(), 20);
        for s in v.chunks(4) {
            assert!(s[2] > 0.0 && s[3] > -1e-8, "{s:?}");
        }
        let v = donoghue_scan(0.5, -0.5, 0.25, 1.0, 0.4, -1.0, 1.0, 1.0, 3).unwrap();
        assert!(v.chunks(4).all(|s| s[3] > -1e-8), "{v:?}");
    }
}
