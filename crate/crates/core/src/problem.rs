//! Problem definition, boundary-condition parametrizations and endpoint records.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::bessel::BesselParams;
use crate::error::{Error, Result};
use crate::linalg::{real_det, RealMat2};
use crate::quadrature;

/// Right endpoint: finite or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Finite(f64),
    Infinite,
}

impl Bound {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Bound::Finite(b) => Some(*b),
            Bound::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointKind {
    Regular,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointClass {
    LimitCircle,
    LimitPoint,
}

/// Coefficient values `p(x), q(x), r(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

/// User-supplied closed-form coefficients.
pub trait CoefficientFn: Send + Sync {
    fn eval(&self, x: f64) -> Coeffs;
}

impl<F: Fn(f64) -> Coeffs + Send + Sync> CoefficientFn for F {
    fn eval(&self, x: f64) -> Coeffs {
        self(x)
    }
}

/// Coefficients sampled on a grid and interpolated by natural cubic splines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn natural(x: &[f64], y: &[f64]) -> Spline {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Spline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[derive(Clone)]
pub enum Coefficients {
    Constant { p: f64, q: f64, r: f64 },
    Bessel(BesselParams),
    Tabulated(Arc<TabulatedCoeffs>),
    Custom(Arc<dyn CoefficientFn>),
}

pub struct TabulatedCoeffs {
    pub table: Table,
    p: Spline,
    q: Spline,
    r: Spline,
}

impl TabulatedCoeffs {
    pub fn new(table: Table) -> Result<Self> {
        let n = table.x.len();
        if n < 4 || table.p.len() != n || table.q.len() != n || table.r.len() != n {
            return Err(Error::InvalidParameter(
                "coefficient table needs at least 4 rows of equal length".into(),
            ));
        }
        if table.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("table abscissae must increase".into()));
        }
        Ok(TabulatedCoeffs {
            p: Spline::natural(&table.x, &table.p),
            q: Spline::natural(&table.x, &table.q),
            r: Spline::natural(&table.x, &table.r),
            table,
        })
    }
}

/// Family tag of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoefficientFamily {
    Regular,
    BesselFamily { delta: f64, nu: f64, gamma: f64 },
    Tabulated,
}

/// `τ = r⁻¹[−(p u′)′ + q u]` on `(a, b)`.
#[derive(Clone)]
pub struct SlProblem {
    pub a: f64,
    pub b: Bound,
    pub coefficients: Coefficients,
    pub kind_a: EndpointKind,
    pub kind_b: EndpointKind,
}

impl fmt::Debug for SlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SlProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("family", &self.family())
            .field("kind_a", &self.kind_a)
            .field("kind_b", &self.kind_b)
            .finish()
    }
}

impl SlProblem {
    /// Constant coefficients on a finite interval; both endpoints regular.
    pub fn constant(p: f64, q: f64, r: f64, a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidParameter("need a < b".into()));
        }
        Ok(SlProblem {
            a,
            b: Bound::Finite(b),
            coefficients: Coefficients::Constant { p, q, r },
            kind_a: EndpointKind::Regular,
            kind_b: EndpointKind::Regular,
        })
    }

    pub fn bessel(params: BesselParams) -> Result<Self> {
        params.check()?;
        Ok(SlProblem {
            a: 0.0,
            b: params.b,
            coefficients: Coefficients::Bessel(params),
            kind_a: EndpointKind::Singular,
            kind_b: match params.b {
                Bound::Finite(_) => EndpointKind::Regular,
                Bound::Infinite => EndpointKind::Singular,
            },
        })
    }

    /// Tabulated coefficients; the table must cover `[a, b]` and both ends are regular.
    pub fn tabulated(table: Table) -> Result<Self> {
        let t = TabulatedCoeffs::new(table)?;
        let a = t.table.x[0];
        let b = *t.table.x.last().unwrap();
        Ok(SlProblem {
            a,
            b: Bound::Finite(b),
            coefficients: Coefficients::Tabulated(Arc::new(t)),
            kind_a: EndpointKind::Regular,
            kind_b: EndpointKind::Regular,
        })
    }

    pub fn custom(
        f: Arc<dyn CoefficientFn>,
        a: f64,
        b: Bound,
        kind_a: EndpointKind,
        kind_b: EndpointKind,
    ) -> Result<Self> {
        if let Bound::Finite(bb) = b {
            if !(bb > a) {
                return Err(Error::InvalidParameter("need a < b".into()));
            }
        }
        if b == Bound::Infinite && kind_b == EndpointKind::Regular {
            return Err(Error::InvalidParameter("an infinite endpoint is singular".into()));
        }
        Ok(SlProblem {
            a,
            b,
            coefficients: Coefficients::Custom(f),
            kind_a,
            kind_b,
        })
    }

    pub fn family(&self) -> CoefficientFamily {
        match &self.coefficients {
            Coefficients::Constant { .. } | Coefficients::Custom(_) => CoefficientFamily::Regular,
            Coefficients::Bessel(b) => CoefficientFamily::BesselFamily {
                delta: b.delta,
                nu: b.nu,
                gamma: b.gamma,
            },
            Coefficients::Tabulated(_) => CoefficientFamily::Tabulated,
        }
    }

    pub fn bessel_params(&self) -> Option<&BesselParams> {
        match &self.coefficients {
            Coefficients::Bessel(b) => Some(b),
            _ => None,
        }
    }

    #[inline]
    pub fn coeffs(&self, x: f64) -> Coeffs {
        match &self.coefficients {
            Coefficients::Constant { p, q, r } => Coeffs { p: *p, q: *q, r: *r },
            Coefficients::Bessel(b) => b.coeffs(x),
            Coefficients::Tabulated(t) => Coeffs {
                p: t.p.eval(x),
                q: t.q.eval(x),
                r: t.r.eval(x),
            },
            Coefficients::Custom(f) => f.eval(x),
        }
    }

    pub fn kind(&self, side: Side) -> EndpointKind {
        match side {
            Side::A => self.kind_a,
            Side::B => self.kind_b,
        }
    }

    /// Finite coordinate of an endpoint, if any.
    pub fn end(&self, side: Side) -> Option<f64> {
        match side {
            Side::A => Some(self.a),
            Side::B => self.b.finite(),
        }
    }

    /// Length scale used for anchors and probe offsets.
    pub fn scale(&self) -> f64 {
        match self.b {
            Bound::Finite(b) => b - self.a,
            Bound::Infinite => 1.0,
        }
    }

    /// Interior anchor: midpoint for finite intervals, `a + 1` otherwise.
    pub fn anchor(&self) -> f64 {
        match self.b {
            Bound::Finite(b) => 0.5 * (self.a + b),
            Bound::Infinite => self.a + 1.0,
        }
    }
}

/// Boundary-condition parametrization of a self-adjoint extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExtensionSpec {
    Separated { alpha: f64, beta: f64 },
    Coupled { phi: f64, r: RealMat2 },
    OneEndpoint { alpha: f64 },
}

pub fn make_coupled(phi: f64, r: RealMat2) -> Result<ExtensionSpec> {
    let det = real_det(&r);
    if (det - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnimodular { det });
    }
    Ok(ExtensionSpec::Coupled { phi, r })
}

impl ExtensionSpec {
    /// Checks angle ranges and unimodularity.
    pub fn check(&self) -> Result<()> {
        use std::f64::consts::PI;
        let angle = |v: f64, hi: f64, name: &str| {
            if (0.0..hi).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} outside [0, {hi})")))
            }
        };
        match *self {
            ExtensionSpec::Separated { alpha, beta } => {
                angle(alpha, PI, "alpha")?;
                angle(beta, PI, "beta")
            }
            ExtensionSpec::OneEndpoint { alpha } => angle(alpha, PI, "alpha"),
            ExtensionSpec::Coupled { phi, r } => {
                angle(phi, 2.0 * PI, "phi")?;
                make_coupled(phi, r).map(|_| ())
            }
        }
    }

    pub fn is_two_endpoint(&self) -> bool {
        !matches!(self, ExtensionSpec::OneEndpoint { .. })
    }
}

/// Square-integrability diagnostics near one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEvidence {
    /// Inner offsets of the dyadic shells.
    pub offsets: Vec<f64>,
    /// `∫ r|y|²` over each shell, for the two trial solutions.
    pub tails: [Vec<f64>; 2],
    pub analytic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointClassification {
    pub at_a: EndpointClass,
    pub at_b: EndpointClass,
    pub evidence: [Option<TailEvidence>; 2],
}

impl EndpointClassification {
    /// Deficiency index: the number of limit-circle endpoints.
    pub fn deficiency_index(&self) -> usize {
        [self.at_a, self.at_b]
            .iter()
            .filter(|c| **c == EndpointClass::LimitCircle)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeIntegral {
    pub lo: f64,
    pub hi: f64,
    pub inv_p: f64,
    pub abs_q: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub probes: Vec<ProbeIntegral>,
    pub valid: bool,
}

/// Checks positivity of `p, r` and local integrability of `1/p, |q|, r` on nested compact probes.
pub fn validate_problem(problem: &SlProblem) -> Result<ValidationReport> {
    let a = problem.a;
    let len = problem.scale();
    let hi_of = |frac: f64| match problem.b {
        Bound::Finite(b) => b - frac * len,
        Bound::Infinite => a + 8.0 * len,
    };
    let mut probes = Vec::new();
    for k in [2, 4, 8, 16] {
        let frac = 1.0 / k as f64;
        let lo = a + frac * len;
        let hi = hi_of(frac);
        for i in 0..=64 {
            let x = lo + (hi - lo) * i as f64 / 64.0;
            let c = problem.coeffs(x);
            if !(c.p > 0.0) {
                return Err(Error::NonPositiveCoefficient { name: "p", x });
            }
            if !(c.r > 0.0) {
                return Err(Error::NonPositiveCoefficient { name: "r", x });
            }
        }
        let integral = |name: &'static str, f: &dyn Fn(f64) -> f64| -> Result<f64> {
            let v = quadrature::integrate_real(f, lo, hi, 1e-8)
                .map_err(|_| Error::NonIntegrable { name, lo, hi })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonIntegrable { name, lo, hi })
            }
        };
        let inv_p = integral("1/p", &|x| 1.0 / problem.coeffs(x).p)?;
        let abs_q = integral("|q|", &|x| problem.coeffs(x).q.abs())?;
        let r = integral("r", &|x| problem.coeffs(x).r)?;
        probes.push(ProbeIntegral {
            lo,
            hi,
            inv_p,
            abs_q,
            r,
        });
    }
    Ok(ValidationReport {
        probes,
        valid: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_problem_is_valid() {
        let p = SlProblem::constant(1.0, 0.0, 1.0, 0.0, PI).unwrap();
        assert!(validate_problem(&p).unwrap().valid);
    }

    #[test]
    fn bessel_half_is_valid_with_zero_potential() {
        let p = SlProblem::bessel(BesselParams::new(0.0, 0.0, 0.5, Bound::Infinite)).unwrap();
        assert!(validate_problem(&p).unwrap().valid);
        assert_eq!(p.coeffs(0.3).q, 0.0);
    }

    #[test]
    fn negative_p_rejected() {
        let f: Arc<dyn CoefficientFn> = Arc::new(|_x: f64| Coeffs { p: -1.0, q: 0.0, r: 1.0 });
        let p = SlProblem::custom(f, 0.0, Bound::Finite(1.0), EndpointKind::Regular, EndpointKind::Regular)
            .unwrap();
        assert!(matches!(
            validate_problem(&p),
            Err(Error::NonPositiveCoefficient { name: "p", .. })
        ));
    }

    #[test]
    fn coupled_construction() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(make_coupled(0.0, id).unwrap(), ExtensionSpec::Coupled { phi: 0.0, r: id });
        assert!(make_coupled(0.0, [[1.0, 1.0], [0.0, 1.0]]).is_ok());
        assert_eq!(
            make_coupled(0.0, [[2.0, 0.0], [0.0, 2.0]]),
            Err(Error::NotUnimodular { det: 4.0 })
        );
    }

    #[test]
    fn spline_reproduces_cubic_free_data() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 0.5 * v).collect();
        let s = Spline::natural(&x, &y);
        assert!((s.eval(1.234) - (2.0 + 0.617)).abs() < 1e-13);
        let y2: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s2 = Spline::natural(&x, &y2);
        assert!((s2.eval(1.234) - 1.234f64.sin()).abs() < 1e-5);
    }

    fn spec_strategy() -> impl Strategy<Value = ExtensionSpec> {
        prop_oneof![
            (0.0..PI, 0.0..PI).prop_map(|(alpha, beta)| ExtensionSpec::Separated { alpha, beta }),
            (0.0..PI).prop_map(|alpha| ExtensionSpec::OneEndpoint { alpha }),
            (0.0..2.0 * PI, -3.0f64..3.0, 0.2f64..3.0, -3.0f64..3.0).prop_map(|(phi, a, d, c)| {
                // det = d (1 + b c) / d - b c = 1
                let b = a;
                let r = [[d, b], [c, (1.0 + b * c) / d]];
                ExtensionSpec::Coupled { phi, r }
            }),
        ]
    }

    proptest! {
        #[test]
        fn spec_round_trips_bit_exactly(spec in spec_strategy()) {
            let text = serde_json::to_string(&spec).unwrap();
            let back: ExtensionSpec = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, spec);
            if let ExtensionSpec::Coupled { r, .. } = back {
                prop_assert!((real_det(&r) - 1.0).abs() <= 1e-12);
            }
        }
    }
}
