//! Branch-aware elementary functions and the Gamma function.
//!
//! Every multivalued function here uses `arg z` in `(0, 2π)`, so the cut
//! runs along `[0, ∞)` and `ln(-i) = 3iπ/2`.

use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Argument in `(0, 2π)`; points on the positive real axis map to 0.
pub fn arg_cut(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

pub fn ln_cut(z: Complex64) -> Complex64 {
    Complex64::new(z.norm().ln(), arg_cut(z))
}

pub fn pow_cut(z: Complex64, e: f64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(z.norm().powf(e), e * arg_cut(z))
}

/// Square root with positive imaginary part off `[0, ∞)`.
pub fn sqrt_cut(z: Complex64) -> Complex64 {
    pow_cut(z, 0.5)
}

pub fn on_cut(z: Complex64) -> bool {
    z.im == 0.0 && z.re >= 0.0
}
