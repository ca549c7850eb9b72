//! Krein resolvent coupling data, relative primeness predicates and a direct resolvent.

use num_complex::Complex64;
use std::sync::Arc;

use crate::deficiency::{
    basis_any_z, deficiency_basis_with, weyl_solution_with, DeficiencyBasis, EndPairs, WeylSolution,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMat2, RealMat2};
use crate::ode::{
    dopri::integrate_system, system, EndValue, Frame, LinComb, QuasiFn, SolutionTrace, State,
    StepperOptions,
};
use crate::problem::{EndpointKind, ExtensionSpec, Side, SlProblem};
use crate::quadrature;

type C = Complex64;

fn cot(x: f64) -> f64 {
    x.cos() / x.sin()
}

/// Coupling of an extension's resolvent to the reference (Friedrichs-type) one:
/// `(T − z)⁻¹ f = (T_ref − z)⁻¹ f + Σ_{jk} [K⁻¹]_{jk} (∫ r left_j f) right_k`.
///
/// `left_j = conj(u_j(z̄))`, so the bilinear integral equals `(u_j(z̄), f)`.
#[derive(Clone)]
pub enum KreinCoupling {
    Scalar { k: C, left: LinComb, right: LinComb },
    Matrix { k: ComplexMat2, left: [LinComb; 2], right: [LinComb; 2] },
}

impl KreinCoupling {
    pub fn is_scalar(&self) -> bool {
        matches!(self, KreinCoupling::Scalar { .. })
    }

    /// `|k|` or `|det K|`.
    pub fn size(&self) -> f64 {
        match self {
            KreinCoupling::Scalar { k, .. } => k.norm(),
            KreinCoupling::Matrix { k, .. } => k.det().norm(),
        }
    }

    /// `[K⁻¹]` as a 2×2 matrix; the scalar case occupies the (1,1) slot.
    pub fn inverse(&self) -> Result<ComplexMat2> {
        match self {
            KreinCoupling::Scalar { k, .. } => {
                if k.norm() < 1e-300 {
                    return Err(Error::SingularK);
                }
                Ok(ComplexMat2::new(C::new(1.0, 0.0) / k, C::default(), C::default(), C::default()))
            }
            KreinCoupling::Matrix { k, .. } => k.inverse(),
        }
    }

    pub fn left(&self) -> Vec<&LinComb> {
        match self {
            KreinCoupling::Scalar { left, .. } => vec![left],
            KreinCoupling::Matrix { left, .. } => left.iter().collect(),
        }
    }

    pub fn right(&self) -> Vec<&LinComb> {
        match self {
            KreinCoupling::Scalar { right, .. } => vec![right],
            KreinCoupling::Matrix { right, .. } => right.iter().collect(),
        }
    }
}

fn lin(terms: Vec<(C, &LinComb)>) -> LinComb {
    LinComb::new(
        terms
            .into_iter()
            .map(|(c, u)| (c, Arc::new(u.clone()) as Arc<dyn QuasiFn>))
            .collect(),
    )
}

/// `k_α(z) = −cot α − m₀(z)` for one limit-circle end.
pub fn k_alpha(problem: &SlProblem, alpha: f64, z: C) -> Result<C> {
    let pairs = EndPairs::for_problem(problem)?;
    let w = weyl_solution_with(problem, &pairs, z)?;
    k_alpha_from(alpha, &w)
}

pub fn k_alpha_from(alpha: f64, w: &WeylSolution) -> Result<C> {
    if !(alpha > 0.0 && alpha < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, π)")));
    }
    Ok(-cot(alpha) - w.m0)
}

/// One-endpoint coupling with the Weyl solution.
pub fn one_lc_coupling(alpha: f64, w: &WeylSolution) -> Result<KreinCoupling> {
    let k = k_alpha_from(alpha, w)?;
    let psi = LinComb::new(vec![(C::new(1.0, 0.0), Arc::new(w.trace.clone()) as Arc<dyn QuasiFn>)]);
    Ok(KreinCoupling::Scalar { k, left: psi.clone(), right: psi })
}

/// Coupling in the coordinates of `(u₁, u₂)`: the correction is
/// `Σ_{jk} [K⁻¹]_{jk} (Σ_q left[j][q] (u_q(z̄),·)) Σ_p right[k][p] u_p(z)`.
/// With `dim = 1` only `k.m[0][0]`, `left[0]` and `right[0]` are used.
#[derive(Debug, Clone, Copy)]
pub struct ReducedCoupling {
    pub dim: usize,
    pub k: ComplexMat2,
    pub left: [[C; 2]; 2],
    pub right: [[C; 2]; 2],
}

impl ReducedCoupling {
    fn matrix(k: ComplexMat2) -> Self {
        let id = [[C::new(1.0, 0.0), C::default()], [C::default(), C::new(1.0, 0.0)]];
        ReducedCoupling { dim: 2, k, left: id, right: id }
    }

    fn scalar(k: C, left: [C; 2], right: [C; 2]) -> Self {
        ReducedCoupling {
            dim: 1,
            k: ComplexMat2::new(k, C::default(), C::default(), C::default()),
            left: [left, [C::default(); 2]],
            right: [right, [C::default(); 2]],
        }
    }

    /// `[K⁻¹]`; the scalar case occupies the (1,1) slot.
    pub fn inverse(&self) -> Result<ComplexMat2> {
        if self.dim == 1 {
            let k = self.k.m[0][0];
            if k.norm() < 1e-300 {
                return Err(Error::SingularK);
            }
            Ok(ComplexMat2::new(C::new(1.0, 0.0) / k, C::default(), C::default(), C::default()))
        } else {
            self.k.inverse()
        }
    }

    fn realize(&self, basis: &DeficiencyBasis) -> KreinCoupling {
        let comb = |c: [C; 2]| {
            let mut terms = Vec::new();
            for (q, u) in [&basis.u1, &basis.u2].into_iter().enumerate() {
                if c[q] != C::default() {
                    terms.push((c[q], u));
                }
            }
            lin(terms)
        };
        if self.dim == 1 {
            KreinCoupling::Scalar { k: self.k.m[0][0], left: comb(self.left[0]), right: comb(self.right[0]) }
        } else {
            KreinCoupling::Matrix {
                k: self.k,
                left: [comb(self.left[0]), comb(self.left[1])],
                right: [comb(self.right[0]), comb(self.right[1])],
            }
        }
    }
}

/// Coupling data for a two-endpoint extension.
pub fn krein_matrix(problem: &SlProblem, spec: &ExtensionSpec, z: C) -> Result<KreinCoupling> {
    let pairs = EndPairs::for_problem(problem)?;
    let basis = deficiency_basis_with(problem, &pairs, z)?;
    krein_matrix_from(spec, &basis)
}

pub fn krein_matrix_from(spec: &ExtensionSpec, basis: &DeficiencyBasis) -> Result<KreinCoupling> {
    Ok(reduced_coupling(spec, basis.data)?.realize(basis))
}

/// Dispatch on the extension from boundary data `[ũ₁′(a), ũ₁′(b), ũ₂′(a), ũ₂′(b)]` at `z`.
pub fn reduced_coupling(spec: &ExtensionSpec, data: [C; 4]) -> Result<ReducedCoupling> {
    spec.check()?;
    let [u1a, u1b, u2a, u2b] = data;
    let one = C::new(1.0, 0.0);
    let zero = C::default();
    match *spec {
        ExtensionSpec::OneEndpoint { .. } => Err(Error::Unsupported(
            "one-endpoint spec needs the Weyl solution coupling".into(),
        )),
        ExtensionSpec::Separated { alpha, beta } => match (alpha == 0.0, beta == 0.0) {
            (true, true) => Err(Error::FriedrichsReference),
            (true, false) => Ok(ReducedCoupling::scalar(cot(beta) + u1b, [one, zero], [one, zero])),
            (false, true) => Ok(ReducedCoupling::scalar(-cot(alpha) - u2a, [zero, one], [zero, one])),
            (false, false) => Ok(ReducedCoupling::matrix(ComplexMat2::new(
                cot(beta) + u1b,
                -u1a,
                u2b,
                -cot(alpha) - u2a,
            ))),
        },
        ExtensionSpec::Coupled { phi, r } => {
            let e = C::from_polar(1.0, phi);
            if r[0][1] != 0.0 {
                let r12 = r[0][1];
                Ok(ReducedCoupling::matrix(ComplexMat2::new(
                    -r[1][1] / r12 + u1b,
                    e.conj() / r12 - u1a,
                    e / r12 + u2b,
                    -r[0][0] / r12 - u2a,
                )))
            } else {
                let r22 = r[1][1];
                // u_{φ,R}(ζ) = u1(ζ) + e^{−iφ} R22 u2(ζ); the left slot carries conjugated coefficients
                let upa = e.conj() * r22 * u2a + u1a;
                let upb = e.conj() * r22 * u2b + u1b;
                let k = -r[1][0] * r22 - e * r22 * upa + upb;
                Ok(ReducedCoupling::scalar(k, [one, e * r22], [one, e.conj() * r22]))
            }
        }
    }
}

/// Krein–von Neumann coupling from boundary data at `z` and at `0`; needs `|z| ≥ 1e-3`.
pub fn krein_vn_reduced(z: C, data: [C; 4], at_zero: [C; 4]) -> Result<ReducedCoupling> {
    if z.norm() < 1e-3 {
        return Err(Error::InvalidParameter("Krein–von Neumann coupling needs |z| ≥ 1e-3".into()));
    }
    let [u1a, u1b, u2a, u2b] = data;
    let [o1a, o1b, o2a, o2b] = at_zero;
    Ok(ReducedCoupling::matrix(ComplexMat2::new(u1b - o1b, o1a - u1a, u2b - o2b, o2a - u2a)))
}

pub fn krein_vn_coupling(basis: &DeficiencyBasis, at_zero: &DeficiencyBasis) -> Result<KreinCoupling> {
    Ok(krein_vn_reduced(basis.z, basis.data, at_zero.data)?.realize(basis))
}

/// Boundary data of the `z = 0` solutions `u₁(0), u₂(0)`.
pub fn zero_basis(problem: &SlProblem, pairs: &EndPairs) -> Result<DeficiencyBasis> {
    basis_any_z(problem, pairs, C::new(0.0, 0.0))
}

/// `R_K` recovered from `z = 0` boundary data: `R12 = 1/ũ₁′(0,a)`, `R22 = R12 ũ₁′(0,b)`,
/// `R11 = −R12 ũ₂′(0,a)`, `R21 = (R11 R22 − 1)/R12`.
pub fn krein_vn_matrix_numeric(at_zero: &DeficiencyBasis) -> Result<RealMat2> {
    let [o1a, o1b, o2a, _] = at_zero.data;
    if o1a.norm() == 0.0 {
        return Err(Error::SingularBoundaryMap);
    }
    let r12 = 1.0 / o1a.re;
    let r22 = r12 * o1b.re;
    let r11 = -r12 * o2a.re;
    Ok([[r11, r12], [(r11 * r22 - 1.0) / r12, r22]])
}

/// `d(α, β, R)`; nonzero means `T_{α,β}` and `T_{0,R}` are relatively prime.
pub fn separated_primeness(alpha: f64, beta: f64, r: &RealMat2) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    ca * cb * r[0][1] + ca * sb * r[1][1] - sa * cb * r[0][0] - sa * sb * r[1][0]
}

/// `det(e^{i(η−φ)} S R⁻¹ − I)` and, when it vanishes, an eigenvector of `e^{i(η−φ)} S R⁻¹` for 1.
pub fn coupled_primeness(phi: f64, r: &RealMat2, eta: f64, s: &RealMat2) -> (C, Option<[C; 2]>) {
    let rinv = [[r[1][1], -r[0][1]], [-r[1][0], r[0][0]]];
    let e = C::from_polar(1.0, eta - phi);
    let mut m = [[C::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = e * (s[i][0] * rinv[0][j] + s[i][1] * rinv[1][j]);
        }
    }
    m[0][0] -= 1.0;
    m[1][1] -= 1.0;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = 1.0 + m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if det.norm() > 1e-12 * scale * scale {
        return (det, None);
    }
    // kernel of m
    let v = if m[0][0].norm() + m[0][1].norm() > 1e-14 * scale {
        [m[0][1], -m[0][0]]
    } else if m[1][0].norm() + m[1][1].norm() > 1e-14 * scale {
        [m[1][1], -m[1][0]]
    } else {
        [C::new(1.0, 0.0), C::default()]
    };
    (det, Some(v))
}

// ---------------------------------------------------------------------------
// Direct resolvent

/// `∫_a^x g` on a node grid, improper at singular ends.
struct Cumulative {
    nodes: Vec<f64>,
    values: Vec<C>,
    g: Arc<dyn Fn(f64) -> Result<C> + Send + Sync>,
    a: f64,
    singular_a: bool,
    total: C,
    atol: f64,
}

const RTOL: f64 = 1e-11;

impl Cumulative {
    fn new(
        problem: &SlProblem,
        hi: f64,
        g: Arc<dyn Fn(f64) -> Result<C> + Send + Sync>,
    ) -> Result<Cumulative> {
        let a = problem.a;
        let c = problem.anchor().min(0.5 * (a + hi));
        let singular_a = problem.kind(Side::A) == EndpointKind::Singular;
        let singular_b = problem.kind(Side::B) == EndpointKind::Singular && problem.end(Side::B) == Some(hi);
        let mut nodes = Vec::new();
        if singular_a {
            for k in (1..=40).rev() {
                nodes.push(a + (c - a) * 0.5f64.powi(k));
            }
        } else {
            nodes.push(a);
        }
        let far = if singular_b { hi - (hi - c) * 0.5f64.powi(40) } else { hi };
        let n = 48;
        for k in 0..=n {
            nodes.push(c + (far - c) * k as f64 / n as f64);
        }
        if singular_b {
            for k in (1..40).rev() {
                nodes.push(hi - (hi - c) * 0.5f64.powi(k));
            }
            nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());
        }
        nodes.dedup();
        // bulk pieces first, outward from c; their running size sets the absolute floor for
        // later pieces, which may decay into the subnormal range
        let bulk = |w: &[f64]| w[0] >= c && (!singular_b || w[1] <= far);
        let mut pieces = vec![C::default(); nodes.len() - 1];
        let mut scale: f64 = 0.0;
        for (i, w) in nodes.windows(2).enumerate() {
            if bulk(w) {
                pieces[i] = quadrature::integrate(|x| g(x), w[0], w[1], RTOL, 1e-2 * RTOL * scale)?;
                scale += pieces[i].norm();
            }
        }
        let atol = 1e-2 * RTOL * scale;
        for (i, w) in nodes.windows(2).enumerate() {
            if !bulk(w) {
                pieces[i] = quadrature::integrate(|x| g(x), w[0], w[1], RTOL, atol)?;
            }
        }
        let first = if singular_a {
            -quadrature::integrate_toward_tol(|x| g(x), nodes[0], a, RTOL, atol)?
        } else {
            C::default()
        };
        let mut values = vec![first];
        for v in pieces {
            values.push(values.last().unwrap() + v);
        }
        let mut total = *values.last().unwrap();
        if singular_b {
            total += quadrature::integrate_toward_tol(|x| g(x), *nodes.last().unwrap(), hi, RTOL, atol)?;
        }
        Ok(Cumulative { nodes, values, g, a, singular_a, total, atol })
    }

    fn at(&self, x: f64) -> Result<C> {
        let k = self.nodes.partition_point(|&n| n <= x);
        if k == 0 {
            return if self.singular_a {
                Ok(-quadrature::integrate_toward_tol(|t| (self.g)(t), x, self.a, RTOL, self.atol)?)
            } else {
                Ok(C::default())
            };
        }
        let k = k - 1;
        Ok(self.values[k] + quadrature::integrate(|t| (self.g)(t), self.nodes[k], x, RTOL, self.atol)?)
    }
}

/// Solution of `(τ − z) u = f` under the boundary conditions of an extension.
pub struct ResolventSolution {
    y1: Arc<dyn QuasiFn>,
    y2: Arc<dyn QuasiFn>,
    w: C,
    /// `∫_a^x r f y2`, `∫_a^x r f y1`.
    i2: Cumulative,
    i1: Cumulative,
    coef: [C; 2],
    /// With one limit-circle end, `u = −[y1 ∫_x^∞ r f y2 + y2 ∫_a^x r f y1] / W`.
    green: bool,
    pub window: (f64, f64),
}

impl ResolventSolution {
    /// `(u, u^[1])` at `x`.
    pub fn eval_pair(&self, x: f64) -> Result<State> {
        let a1 = self.y1.eval(x)?;
        let a2 = self.y2.eval(x)?;
        let j2 = self.i2.at(x)?;
        let j1 = self.i1.at(x)?;
        let (ca, cb) = if self.green {
            (-(self.i2.total - j2) / self.w, -j1 / self.w)
        } else {
            (self.coef[0] + j2 / self.w, self.coef[1] - j1 / self.w)
        };
        Ok([ca * a1[0] + cb * a2[0], ca * a1[1] + cb * a2[1]])
    }

    pub fn eval(&self, x: f64) -> Result<C> {
        Ok(self.eval_pair(x)?[0])
    }
}

fn end_data(y: &dyn QuasiFn, side: Side) -> Result<State> {
    match y.end_value(side) {
        EndValue::Known(v) => Ok(v),
        _ => Err(Error::Unsupported("missing boundary data".into())),
    }
}

/// Solution satisfying `cos α ỹ(a) + sin α ỹ′(a) = 0`, carried from `a` out to `x_far`.
pub fn solution_from_a(problem: &SlProblem, pairs: &EndPairs, z: C, bv: State, x_far: f64) -> Result<SolutionTrace> {
    let opts = StepperOptions::with_rtol(1e-12);
    let mut tr = SolutionTrace::new(z);
    tr.set_end(Side::A, EndValue::Known(bv));
    let a = problem.a;
    match &pairs.a {
        None => {
            let seg = integrate_system(system(problem, z), a, bv, x_far, &opts)?;
            tr.push_direct(seg);
        }
        Some(pair) => {
            let c = problem.anchor();
            let x_m = a + 0.5 * (c - a);
            let frame = Frame::outward(problem, z, Side::A, pair.pair.clone(), bv, x_m, &opts)?;
            let ym = frame.eval(x_m)?;
            tr.push_frame(frame);
            let seg = integrate_system(system(problem, z), x_m, ym, x_far, &opts)?;
            tr.push_direct(seg);
        }
    }
    Ok(tr)
}

/// Direct resolvent by variation of parameters; used as an oracle for the Krein identities.
pub fn apply_resolvent_direct(
    problem: &SlProblem,
    spec: &ExtensionSpec,
    z: C,
    f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync>,
) -> Result<ResolventSolution> {
    let pairs = EndPairs::for_problem(problem)?;
    match spec {
        ExtensionSpec::OneEndpoint { alpha } => {
            let w = weyl_solution_with(problem, &pairs, z)?;
            resolvent_one_lc(problem, &pairs, *alpha, &w, f)
        }
        _ => {
            let basis = deficiency_basis_with(problem, &pairs, z)?;
            resolvent_two_lc(problem, spec, &basis, f)
        }
    }
}

pub fn resolvent_one_lc(
    problem: &SlProblem,
    pairs: &EndPairs,
    alpha: f64,
    w: &WeylSolution,
    f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync>,
) -> Result<ResolventSolution> {
    spec_alpha_check(alpha)?;
    let (_, hi) = w.trace.span();
    let bv = [C::new(alpha.sin(), 0.0), C::new(-alpha.cos(), 0.0)];
    let ya = solution_from_a(problem, pairs, w.z, bv, hi)?;
    let psi = w.trace.clone();
    let wr = bv[0] * w.m0 - bv[1];
    let y1: Arc<dyn QuasiFn> = Arc::new(ya);
    let y2: Arc<dyn QuasiFn> = Arc::new(psi);
    let cum = |y: Arc<dyn QuasiFn>| -> Result<Cumulative> {
        let f = f.clone();
        let pr = problem.clone();
        Cumulative::new(problem, hi, Arc::new(move |x| Ok(pr.coeffs(x).r * f(x)? * y.eval(x)?[0])))
    };
    Ok(ResolventSolution {
        i2: cum(y2.clone())?,
        i1: cum(y1.clone())?,
        y1,
        y2,
        w: wr,
        coef: [C::default(); 2],
        green: true,
        window: (problem.a, hi),
    })
}

fn spec_alpha_check(alpha: f64) -> Result<()> {
    ExtensionSpec::OneEndpoint { alpha }.check()
}

pub fn resolvent_two_lc(
    problem: &SlProblem,
    spec: &ExtensionSpec,
    basis: &DeficiencyBasis,
    f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync>,
) -> Result<ResolventSolution> {
    spec.check()?;
    let b = problem
        .end(Side::B)
        .ok_or_else(|| Error::Unsupported("two-endpoint resolvent needs finite b".into()))?;
    let y1: Arc<dyn QuasiFn> = Arc::new(basis.u1.clone());
    let y2: Arc<dyn QuasiFn> = Arc::new(basis.u2.clone());
    let (e1a, e1b) = (end_data(y1.as_ref(), Side::A)?, end_data(y1.as_ref(), Side::B)?);
    let (e2a, e2b) = (end_data(y2.as_ref(), Side::A)?, end_data(y2.as_ref(), Side::B)?);
    let w = e1a[0] * e2a[1] - e1a[1] * e2a[0];
    let cum = |y: Arc<dyn QuasiFn>| -> Result<Cumulative> {
        let f = f.clone();
        let pr = problem.clone();
        Cumulative::new(problem, b, Arc::new(move |x| Ok(pr.coeffs(x).r * f(x)? * y.eval(x)?[0])))
    };
    let i2 = cum(y2.clone())?;
    let i1 = cum(y1.clone())?;
    let (j2, j1) = (i2.total / w, i1.total / w);
    // boundary data: BV(a) = c1 e1a + c2 e2a, BV(b) = (c1 + j2) e1b + (c2 − j1) e2b
    let (rows, rhs): ([[C; 2]; 2], [C; 2]) = match *spec {
        ExtensionSpec::Separated { alpha, beta } => {
            let la = [C::new(alpha.cos(), 0.0), C::new(alpha.sin(), 0.0)];
            let lb = [C::new(beta.cos(), 0.0), C::new(beta.sin(), 0.0)];
            let dot = |l: [C; 2], v: State| l[0] * v[0] + l[1] * v[1];
            (
                [[dot(la, e1a), dot(la, e2a)], [dot(lb, e1b), dot(lb, e2b)]],
                [C::default(), -(j2 * dot(lb, e1b) - j1 * dot(lb, e2b))],
            )
        }
        ExtensionSpec::Coupled { phi, r } => {
            let e = C::from_polar(1.0, phi);
            let rv = |v: State| [e * (r[0][0] * v[0] + r[0][1] * v[1]), e * (r[1][0] * v[0] + r[1][1] * v[1])];
            let (r1, r2) = (rv(e1a), rv(e2a));
            // (c1 + j2) e1b + (c2 − j1) e2b − c1 R e1a − c2 R e2a = 0
            let mut rows = [[C::default(); 2]; 2];
            let mut rhs = [C::default(); 2];
            for i in 0..2 {
                rows[i] = [e1b[i] - r1[i], e2b[i] - r2[i]];
                rhs[i] = -(j2 * e1b[i] - j1 * e2b[i]);
            }
            (rows, rhs)
        }
        ExtensionSpec::OneEndpoint { .. } => {
            return Err(Error::Unsupported("one-endpoint spec on a two-endpoint problem".into()))
        }
    };
    let m = ComplexMat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
    let coef = m.inverse().map_err(|_| Error::SingularBoundaryMap)?.mul_vec(rhs);
    Ok(ResolventSolution { y1, y2, w, i2, i1, coef, green: false, window: (problem.a, b) })
}

/// Right-hand side of a Krein identity at `x`: reference resolvent plus the coupling correction,
/// with the inner products `(u_j(z̄), f)` precomputed in `overlaps`.
pub fn krein_correction(coupling: &KreinCoupling, overlaps: &[C], x: f64) -> Result<C> {
    let kinv = coupling.inverse()?;
    let right = coupling.right();
    let mut out = C::default();
    for j in 0..overlaps.len() {
        for (k, rk) in right.iter().enumerate() {
            out += kinv.m[j][k] * overlaps[j] * rk.eval(x)?[0];
        }
    }
    Ok(out)
}

/// `(u_j(z̄), f) = ∫ r left_j f` by quadrature over `window`.
pub fn coupling_overlaps(
    problem: &SlProblem,
    coupling: &KreinCoupling,
    f: &(dyn Fn(f64) -> Result<C> + Send + Sync),
    window: (f64, f64),
) -> Result<Vec<C>> {
    coupling
        .left()
        .into_iter()
        .map(|l| {
            let conj_l = |x: f64| Ok(l.eval(x)?[0].conj());
            crate::ode::quadrature_inner_product(
                problem,
                &conj_l,
                f,
                crate::ode::Point::A,
                point_for(problem, window.1),
                RTOL,
            )
        })
        .collect()
}

/// Relative L² residual `‖(T − z)⁻¹f − (T_ref − z)⁻¹f − correction‖ / ‖f‖` of the Krein identity,
/// with `T_ref` the `α = 0` or `Separated(0, 0)` extension.
pub fn krein_identity_residual(
    problem: &SlProblem,
    pairs: &EndPairs,
    spec: &ExtensionSpec,
    z: C,
    f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync>,
) -> Result<f64> {
    let (lhs, rhs, coupling) = match *spec {
        ExtensionSpec::OneEndpoint { alpha } => {
            let w = weyl_solution_with(problem, pairs, z)?;
            let coupling = one_lc_coupling(alpha, &w)?;
            let lhs = resolvent_one_lc(problem, pairs, alpha, &w, f.clone())?;
            let rhs = resolvent_one_lc(problem, pairs, 0.0, &w, f.clone())?;
            (lhs, rhs, coupling)
        }
        _ => {
            let basis = deficiency_basis_with(problem, pairs, z)?;
            let coupling = krein_matrix_from(spec, &basis)?;
            let reference = ExtensionSpec::Separated { alpha: 0.0, beta: 0.0 };
            let lhs = resolvent_two_lc(problem, spec, &basis, f.clone())?;
            let rhs = resolvent_two_lc(problem, &reference, &basis, f.clone())?;
            (lhs, rhs, coupling)
        }
    };
    let ov = coupling_overlaps(problem, &coupling, f.as_ref(), lhs.window)?;
    let hi = point_for(problem, lhs.window.1);
    let norm = |g: &dyn Fn(f64) -> Result<C>, floor: f64| -> Result<f64> {
        let v = crate::ode::quadrature_inner_product_tol(problem, g, g, crate::ode::Point::A, hi, 1e-9, floor * floor)?;
        Ok(v.re.max(0.0).sqrt())
    };
    let nf = norm(f.as_ref(), 0.0)?;
    if !(nf > 0.0) {
        return Err(Error::InvalidParameter("test function vanishes".into()));
    }
    let diff = |x: f64| Ok(lhs.eval(x)? - rhs.eval(x)? - krein_correction(&coupling, &ov, x)?);
    Ok(norm(&diff, 1e-12 * nf)? / nf)
}

fn point_for(problem: &SlProblem, x: f64) -> crate::ode::Point {
    if problem.end(Side::B) == Some(x) {
        crate::ode::Point::B
    } else {
        crate::ode::Point::X(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{bessel_krein_vn_matrix, BesselParams};
    use crate::problem::{make_coupled, Bound};
    use crate::special::sqrt_cut;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn flat() -> SlProblem {
        SlProblem::constant(1.0, 0.0, 1.0, 0.0, PI).unwrap()
    }

    #[test]
    fn k_alpha_examples() {
        let p = SlProblem::bessel(BesselParams::new(0.0, 0.0, 0.5, Bound::Infinite)).unwrap();
        let z = c(-0.4, 1.3);
        let k = k_alpha(&p, PI / 2.0, z).unwrap();
        assert!((k + c(0.0, 1.0) * sqrt_cut(z)).norm() < 1e-8);
        let k = k_alpha(&p, PI / 4.0, c(0.0, 1.0)).unwrap();
        assert!((k - (-1.0 - C::from_polar(1.0, 0.75 * PI))).norm() < 1e-8);
        assert!(k.im != 0.0);
    }

    #[test]
    fn scalar_dispatch_free_interval() {
        let p = flat();
        let z = c(1.0, 2.0);
        let k = sqrt_cut(z);
        let beta = 0.7;
        match krein_matrix(&p, &ExtensionSpec::Separated { alpha: 0.0, beta }, z).unwrap() {
            KreinCoupling::Scalar { k: kk, .. } => {
                let want = cot(beta) + k * (k * PI).cos() / (k * PI).sin();
                assert!((kk - want).norm() < 1e-9);
            }
            _ => panic!("expected scalar"),
        }
        assert!(matches!(
            krein_matrix(&p, &ExtensionSpec::Separated { alpha: 0.0, beta: 0.0 }, z),
            Err(Error::FriedrichsReference)
        ));
        let id = make_coupled(0.0, [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let basis = deficiency_basis_with(&p, &EndPairs::for_problem(&p).unwrap(), z).unwrap();
        match krein_matrix_from(&id, &basis).unwrap() {
            KreinCoupling::Scalar { k: kk, .. } => {
                let [u1a, u1b, u2a, u2b] = basis.data;
                let want = -(u2a + u1a) + (u2b + u1b);
                assert!((kk - want).norm() < 1e-12);
            }
            _ => panic!("expected scalar"),
        }
    }

    #[test]
    fn primeness_examples() {
        let id = [[1.0, 0.0], [0.0, 1.0]];
        let shear = [[1.0, 1.0], [0.0, 1.0]];
        assert_eq!(separated_primeness(0.0, 0.0, &id), 0.0);
        assert_eq!(separated_primeness(0.0, 0.0, &shear), 1.0);
        assert!((separated_primeness(PI / 2.0, 0.0, &id) + 1.0).abs() < 1e-15);
        let (d, v) = coupled_primeness(0.3, &shear, 0.3, &shear);
        assert!(d.norm() < 1e-14 && v.is_some());
        let (d, _) = coupled_primeness(0.0, &shear, PI, &shear);
        assert!((d - 4.0).norm() < 1e-14);
        let rot = [[0.0, -1.0], [1.0, 0.0]];
        // S = rot·R; S R⁻¹ = rot; det(rot − I) = 2
        let s = [[0.0, -1.0], [1.0, 1.0]];
        let (d, _) = coupled_primeness(0.0, &shear, 0.0, &s);
        let want = (rot[0][0] - 1.0) * (rot[1][1] - 1.0) - rot[0][1] * rot[1][0];
        assert!((d - want).norm() < 1e-14);
    }

    #[test]
    fn krein_vn_from_zero_data() {
        let bp = BesselParams::new(0.0, 0.0, 0.5, Bound::Finite(1.0));
        let p = SlProblem::bessel(bp).unwrap();
        let pairs = EndPairs::for_problem(&p).unwrap();
        let zb = zero_basis(&p, &pairs).unwrap();
        let r = krein_vn_matrix_numeric(&zb).unwrap();
        let want = bessel_krein_vn_matrix(&bp).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[i][j] - want[i][j]).abs() < 1e-10, "{r:?}");
            }
        }
        let z = c(0.5, 1.0);
        let basis = deficiency_basis_with(&p, &pairs, z).unwrap();
        let a = krein_vn_coupling(&basis, &zb).unwrap();
        let b = krein_matrix_from(&ExtensionSpec::Coupled { phi: 0.0, r: want }, &basis).unwrap();
        match (a, b) {
            (KreinCoupling::Matrix { k: ka, .. }, KreinCoupling::Matrix { k: kb, .. }) => {
                assert!((ka - kb).norm() < 1e-9);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn friedrichs_resolvent_has_zero_boundary_values() {
        let p = flat();
        let z = c(0.3, 1.1);
        let f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync> = Arc::new(|x: f64| Ok(c(x * x, 0.5 * x)));
        let sol = apply_resolvent_direct(&p, &ExtensionSpec::Separated { alpha: 0.0, beta: 0.0 }, z, f.clone()).unwrap();
        assert!(sol.eval(0.0).unwrap().norm() < 1e-10);
        assert!(sol.eval(PI).unwrap().norm() < 1e-9);
        // −u″ − z u = f at an interior point
        let x = 1.3;
        let h = 1e-3;
        let u2 = (sol.eval(x + h).unwrap() - 2.0 * sol.eval(x).unwrap() + sol.eval(x - h).unwrap()) / (h * h);
        let res = -u2 - z * sol.eval(x).unwrap() - f(x).unwrap();
        assert!(res.norm() < 1e-5, "{res}");
    }

    #[test]
    fn coupled_resolvent_satisfies_condition() {
        let p = flat();
        let z = c(-1.0, 0.7);
        let r = [[1.0, 1.0], [0.0, 1.0]];
        let phi = PI / 3.0;
        let f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync> = Arc::new(|x: f64| Ok(c(x.cos(), 1.0)));
        let sol = apply_resolvent_direct(&p, &ExtensionSpec::Coupled { phi, r }, z, f).unwrap();
        let ua = sol.eval_pair(0.0).unwrap();
        let ub = sol.eval_pair(PI).unwrap();
        let e = C::from_polar(1.0, phi);
        let want = [e * (ua[0] + ua[1]), e * ua[1]];
        assert!((ub[0] - want[0]).norm() < 1e-9 && (ub[1] - want[1]).norm() < 1e-9);
    }

    fn identity_residual(p: &SlProblem, spec: ExtensionSpec, reference: ExtensionSpec, z: C) -> f64 {
        let f: Arc<dyn Fn(f64) -> Result<C> + Send + Sync> =
            Arc::new(|x: f64| Ok(c((-x).exp() * (1.0 + x), 0.3 * (-x).exp())));
        let lhs = apply_resolvent_direct(p, &spec, z, f.clone()).unwrap();
        let rhs = apply_resolvent_direct(p, &reference, z, f.clone()).unwrap();
        let coupling = match spec {
            ExtensionSpec::OneEndpoint { alpha } => {
                let pairs = EndPairs::for_problem(p).unwrap();
                one_lc_coupling(alpha, &weyl_solution_with(p, &pairs, z).unwrap()).unwrap()
            }
            _ => krein_matrix(p, &spec, z).unwrap(),
        };
        let ov = coupling_overlaps(p, &coupling, f.as_ref(), lhs.window).unwrap();
        let (lo, hi) = lhs.window;
        let hi = hi.min(lo + 12.0);
        let mut worst: f64 = 0.0;
        for k in 1..40 {
            let x = lo + (hi - lo) * k as f64 / 40.0;
            let d = lhs.eval(x).unwrap() - rhs.eval(x).unwrap() - krein_correction(&coupling, &ov, x).unwrap();
            worst = worst.max(d.norm());
        }
        worst
    }

    #[test]
    fn krein_identity_free_interval() {
        let p = flat();
        let fr = ExtensionSpec::Separated { alpha: 0.0, beta: 0.0 };
        let z = c(0.4, 0.9);
        for spec in [
            ExtensionSpec::Separated { alpha: 0.4, beta: 1.1 },
            ExtensionSpec::Separated { alpha: 0.0, beta: 2.0 },
            ExtensionSpec::Separated { alpha: 1.0, beta: 0.0 },
            ExtensionSpec::Coupled { phi: 0.7, r: [[1.0, 1.0], [0.0, 1.0]] },
            ExtensionSpec::Coupled { phi: 0.7, r: [[2.0, 0.0], [0.3, 0.5]] },
        ] {
            let e = identity_residual(&p, spec, fr, z);
            assert!(e < 1e-8, "{spec:?}: {e}");
        }
    }

    #[test]
    fn krein_identity_one_lc() {
        let p = SlProblem::bessel(BesselParams::new(0.0, 0.0, 0.5, Bound::Infinite)).unwrap();
        let e = identity_residual(
            &p,
            ExtensionSpec::OneEndpoint { alpha: 1.2 },
            ExtensionSpec::OneEndpoint { alpha: 0.0 },
            c(-0.3, 1.4),
        );
        assert!(e < 1e-8, "{e}");
    }
}
