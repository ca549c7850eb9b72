use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

type C = Complex64;

/// Row-major complex 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexMat2 {
    pub m: [[C; 2]; 2],
}

impl ComplexMat2 {
    pub fn new(a11: C, a12: C, a21: C, a22: C) -> Self {
        ComplexMat2 {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn zero() -> Self {
        let z = C::new(0.0, 0.0);
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        Self::scalar(C::new(1.0, 0.0))
    }

    pub fn scalar(s: C) -> Self {
        let z = C::new(0.0, 0.0);
        Self::new(s, z, z, s)
    }

    pub fn det(&self) -> C {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn adjoint(&self) -> Self {
        let t = self.transpose();
        Self::new(t.m[0][0].conj(), t.m[0][1].conj(), t.m[1][0].conj(), t.m[1][1].conj())
    }

    pub fn scale(&self, s: C) -> Self {
        Self::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Condition number in the Frobenius norm.
    pub fn cond(&self) -> f64 {
        let d = self.det().norm();
        if d == 0.0 {
            return f64::INFINITY;
        }
        self.norm() * self.norm() / d
    }

    /// Cofactor inverse, refused when the condition number exceeds `max_cond`.
    pub fn inverse_guarded(&self, max_cond: f64) -> Result<Self> {
        if !(self.cond() <= max_cond) {
            return Err(Error::SingularK);
        }
        let d = self.det();
        Ok(Self::new(self.m[1][1] / d, -self.m[0][1] / d, -self.m[1][0] / d, self.m[0][0] / d))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.inverse_guarded(1e12)
    }

    pub fn mul_vec(&self, v: [C; 2]) -> [C; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Imaginary part `(M - M*) / 2i`, a Hermitian matrix.
    pub fn imag_part(&self) -> Self {
        (*self - self.adjoint()).scale(C::new(0.0, -0.5))
    }

    /// Eigenvalues of a Hermitian 2×2 matrix given by its real diagonal and complex off-diagonal.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - rad, mean + rad]
    }
}

impl Add for ComplexMat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for ComplexMat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(C::new(-1.0, 0.0))
    }
}

impl Mul for ComplexMat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Real 2×2 matrix, row-major.
pub type RealMat2 = [[f64; 2]; 2];

pub fn real_det(r: &RealMat2) -> f64 {
    r[0][0] * r[1][1] - r[0][1] * r[1][0]
}

pub fn real_to_complex(r: &RealMat2) -> ComplexMat2 {
    ComplexMat2::new(
        C::new(r[0][0], 0.0),
        C::new(r[0][1], 0.0),
        C::new(r[1][0], 0.0),
        C::new(r[1][1], 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn hermitian_eigs_of_diag() {
        let m = ComplexMat2::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
        let e = m.hermitian_eigenvalues();
        assert_eq!(e, [-1.0, 2.0]);
    }

    #[test]
    fn singular_rejected() {
        let m = ComplexMat2::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0));
        assert_eq!(m.inverse(), Err(Error::SingularK));
    }

    proptest! {
        #[test]
        fn inverse_round_trip(v in proptest::collection::vec(-10.0f64..10.0, 8)) {
            let m = ComplexMat2::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]));
            prop_assume!(m.cond() < 1e8);
            let p = m * m.inverse().unwrap();
            let scale = m.cond().max(1.0);
            prop_assert!((p - ComplexMat2::identity()).norm() <= 1e-12 * scale);
        }
    }
}
