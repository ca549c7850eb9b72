//! Deficiency-subspace solutions: the Weyl solution `ψ(z, ·)` for one limit-circle end,
//! the boundary-normalized pair `u₁, u₂` for two, and the orthonormal basis of `N_i`.

use num_complex::Complex64;
use std::sync::Arc;

use crate::endpoint::{principal_pair, PrincipalPair};
use crate::error::{Error, Result};
use crate::linalg::ComplexMat2;
use crate::ode::{
    dopri::integrate_system, system, EndValue, Frame, LinComb, QuasiFn, SolutionTrace, State,
    StepperOptions,
};
use crate::problem::{EndpointKind, Side, SlProblem};
use crate::quadrature;
use crate::special::sqrt_cut;

type C = Complex64;

fn c0() -> C {
    C::new(0.0, 0.0)
}

fn check_nonreal(z: C) -> Result<()> {
    if z.im == 0.0 {
        return Err(Error::InvalidParameter(format!("z = {z} must be nonreal")));
    }
    Ok(())
}

/// Reference pairs at the singular limit-circle ends, shared across spectral parameters.
#[derive(Clone)]
pub struct EndPairs {
    pub a: Option<PrincipalPair>,
    pub b: Option<PrincipalPair>,
}

impl EndPairs {
    /// Pairs at every finite singular end.
    pub fn for_problem(problem: &SlProblem) -> Result<EndPairs> {
        let get = |side| -> Result<Option<PrincipalPair>> {
            if problem.end(side).is_some() && problem.kind(side) == EndpointKind::Singular {
                principal_pair(problem, side, None).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(EndPairs { a: get(Side::A)?, b: get(Side::B)? })
    }

    fn get(&self, side: Side) -> Option<&PrincipalPair> {
        match side {
            Side::A => self.a.as_ref(),
            Side::B => self.b.as_ref(),
        }
    }
}

fn opts() -> StepperOptions {
    StepperOptions::with_rtol(1e-12)
}

/// Continues the solution with data `y` at `x0` to the finite end on `side`, recording
/// its boundary values.
fn extend_to_end(
    problem: &SlProblem,
    pairs: &EndPairs,
    z: C,
    side: Side,
    x0: f64,
    y: State,
    trace: &mut SolutionTrace,
) -> Result<()> {
    let d = problem
        .end(side)
        .ok_or_else(|| Error::Unsupported("no boundary data at an infinite endpoint".into()))?;
    match pairs.get(side) {
        None => {
            let seg = integrate_system(system(problem, z), x0, y, d, &opts())?;
            trace.set_end(side, EndValue::Known(seg.last_value()));
            trace.push_direct(seg);
        }
        Some(pair) => {
            let x_m = d + 0.5 * (x0 - d);
            let seg = integrate_system(system(problem, z), x0, y, x_m, &opts())?;
            let ym = seg.last_value();
            trace.push_direct(seg);
            let frame = Frame::inward(problem, z, side, pair.pair.clone(), x_m, ym, &opts())?;
            trace.push_frame(frame);
        }
    }
    Ok(())
}

/// Solution with data `init` at the anchor, carried to both finite ends.
pub fn solve_two_sided(problem: &SlProblem, pairs: &EndPairs, z: C, init: State) -> Result<SolutionTrace> {
    let c = problem.anchor();
    let mut tr = SolutionTrace::new(z);
    extend_to_end(problem, pairs, z, Side::A, c, init, &mut tr)?;
    extend_to_end(problem, pairs, z, Side::B, c, init, &mut tr)?;
    Ok(tr)
}

// ---------------------------------------------------------------------------
// One limit-circle endpoint

/// Square-integrable solution at `b = ∞`, normalized by `ψ̃(z, a) = 1`.
#[derive(Clone)]
pub struct WeylSolution {
    pub z: C,
    pub trace: SolutionTrace,
    /// `ψ̃′(z, a)`.
    pub m0: C,
    /// Backward-integration anchor that was accepted.
    pub anchor: f64,
    /// `|m₀(X) − m₀(X/2)| / |m₀|` at acceptance.
    pub drift: f64,
}

impl WeylSolution {
    /// `‖ψ(z)‖² = Im m₀(z) / Im z`.
    pub fn norm_sq(&self) -> f64 {
        self.m0.im / self.z.im
    }
}

fn wkb_k(problem: &SlProblem, z: C, x: f64) -> C {
    let co = problem.coeffs(x);
    sqrt_cut((z * co.r - co.q) / co.p)
}

/// `(k, (pk)′/(pk))` at `x`; `L` is only needed to modest relative accuracy, since it enters
/// through the small reflected share.
fn lg_rate(problem: &SlProblem, z: C, x: f64) -> (C, C) {
    let h = 1e-4 * (x - problem.a).abs().max(1e-3);
    let pk = |t: f64| wkb_k(problem, z, t) * problem.coeffs(t).p;
    let p = problem.coeffs(x).p;
    let mid = wkb_k(problem, z, x) * p;
    (mid / p, (pk(x + h) - pk(x - h)) / (2.0 * h * mid))
}

/// Reflected share `ρ` of the decaying solution at `x` in the Liouville–Green basis
/// `e^{±iS}/√(pk)`, `S′ = k`. Two integrations by parts of
/// `ρ(x) = −½ ∫_x^∞ L e^{2i(S(t)−S(x))} dt`, `L = (pk)′/(pk)`.
fn lg_rho_start(problem: &SlProblem, z: C, x: f64) -> C {
    let i = C::new(0.0, 1.0);
    let g = |t: f64| {
        let (k, l) = lg_rate(problem, z, t);
        l / (i * 2.0 * k)
    };
    let h = 1e-3 * (x - problem.a).abs().max(1e-3);
    let dg = (g(x + h) - g(x - h)) / (2.0 * h);
    (g(x) - dg / (i * 2.0 * wkb_k(problem, z, x))) * 0.5
}

/// `(y, y^[1])` of the decaying solution from its reflected share `ρ`, up to a factor.
fn lg_state(problem: &SlProblem, z: C, x: f64, rho: C) -> State {
    let pk = wkb_k(problem, z, x) * problem.coeffs(x).p;
    let one = C::new(1.0, 0.0);
    [one + rho, C::new(0.0, 1.0) * pk * (one - rho)]
}

/// Carries `ρ` from `x_far` back to `x_near` through the Riccati equation
/// `ρ′ = ½L(1 − ρ²) − 2ikρ`, whose perturbations decay in that direction.
fn lg_leg(problem: &SlProblem, z: C, x_far: f64, x_near: f64) -> Result<State> {
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    let rhs = |x: f64, y: &[C; 1]| {
        let (k, l) = lg_rate(problem, z, x);
        [(one - y[0] * y[0]) * l * 0.5 - i * 2.0 * k * y[0]]
    };
    // explicit stability on the `−2ik` mode
    let k_max = wkb_k(problem, z, x_near).norm().max(wkb_k(problem, z, x_far).norm());
    let opts = StepperOptions { h_max: Some(1.5 / k_max), atol: 1e-16, ..opts() };
    let seg = integrate_system(rhs, x_far, [lg_rho_start(problem, z, x_far)], x_near, &opts)?;
    Ok(lg_state(problem, z, x_near, seg.last_value()[0]))
}

/// Anchor where `∫ Im k` from `x0` exceeds `target`, by doubling.
fn separation_anchor(problem: &SlProblem, z: C, x0: f64, target: f64) -> Result<f64> {
    let mut x = x0 + 4.0;
    loop {
        let s = quadrature::integrate_real(&|t| wkb_k(problem, z, t).im, x0, x, 1e-8)?;
        if s >= target {
            return Ok(x);
        }
        x = x0 + 2.0 * (x - x0);
        if x > SEPARATION_CAP {
            return Err(Error::NoDecaySeparation { re: z.re, im: z.im });
        }
    }
}

/// Last doubling point before `∫ |k|` from `x0` exceeds `budget`; the direct leg ends there.
fn phase_budget_end(problem: &SlProblem, z: C, x0: f64, budget: f64) -> Result<f64> {
    let mut x = x0 + 4.0;
    let mut phase = quadrature::integrate_real(&|t| wkb_k(problem, z, t).norm(), x0, x, 1e-8)?;
    while phase < budget && x < SEPARATION_CAP {
        let next = x0 + 2.0 * (x - x0);
        phase += quadrature::integrate_real(&|t| wkb_k(problem, z, t).norm(), x, next, 1e-8)?;
        if phase > budget {
            break;
        }
        x = next;
    }
    Ok(x)
}

const SEPARATION: f64 = 6.0;
const SEPARATION_CAP: f64 = 1e12;
const PHASE_BUDGET: f64 = 2000.0;
const DRIFT_TOL: f64 = 1e-9;

/// Weyl solution for the far anchor `x_far`, integrated directly from `x_direct` down.
fn weyl_at_anchor(problem: &SlProblem, pairs: &EndPairs, z: C, x_far: f64, x_direct: f64) -> Result<SolutionTrace> {
    let a = problem.a;
    let mut tr = SolutionTrace::new(z);
    let (start, init) = if x_far > x_direct {
        (x_direct, lg_leg(problem, z, x_far, x_direct)?)
    } else {
        (x_far, lg_state(problem, z, x_far, lg_rho_start(problem, z, x_far)))
    };
    let c = problem.anchor();
    let seg = integrate_system(system(problem, z), start, init, c, &opts())?;
    let yc = seg.last_value();
    tr.push_direct(seg);
    extend_to_end(problem, pairs, z, Side::A, c, yc, &mut tr)?;
    let bv = match tr.end_value(Side::A) {
        EndValue::Known(v) => v,
        _ => unreachable!("extend_to_end records end data"),
    };
    if bv[0].norm() == 0.0 || !bv[0].is_finite() {
        return Err(Error::NonFiniteValue { x: a });
    }
    let mut out = tr.scaled(C::new(1.0, 0.0) / bv[0]);
    out.set_end(Side::B, EndValue::LimitPoint);
    Ok(out)
}

fn end_value(tr: &SolutionTrace, side: Side) -> State {
    match tr.end_value(side) {
        EndValue::Known(v) => v,
        _ => [C::new(f64::NAN, 0.0); 2],
    }
}

/// Weyl solution with the endpoint pair chosen automatically.
pub fn weyl_solution(problem: &SlProblem, z: C) -> Result<WeylSolution> {
    let pairs = EndPairs::for_problem(problem)?;
    weyl_solution_with(problem, &pairs, z)
}

/// Weyl solution: a Liouville–Green start at a far anchor, the Riccati leg down to the
/// phase-budget point, direct integration from there, anchor doubling until `m₀` settles,
/// and normalization by the boundary value at `a`.
pub fn weyl_solution_with(problem: &SlProblem, pairs: &EndPairs, z: C) -> Result<WeylSolution> {
    weyl_solution_reaching(problem, pairs, z, problem.anchor())
}

/// [`weyl_solution_with`] whose trace covers at least `[a, reach]`, for resolvents of data
/// that extend further out than `ψ(z)` needs.
pub fn weyl_solution_reaching(problem: &SlProblem, pairs: &EndPairs, z: C, reach: f64) -> Result<WeylSolution> {
    check_nonreal(z)?;
    if problem.end(Side::B).is_some() {
        return Err(Error::Unsupported(
            "Weyl solution needs a limit-point end at b = ∞".into(),
        ));
    }
    let c = problem.anchor();
    let mut x = separation_anchor(problem, z, c, SEPARATION)?.max(reach);
    let x_direct = phase_budget_end(problem, z, c, PHASE_BUDGET)?.max(reach);
    let mut prev = weyl_at_anchor(problem, pairs, z, x, x_direct)?;
    let mut drift = f64::INFINITY;
    for _ in 0..6 {
        x = c + 2.0 * (x - c);
        let next = weyl_at_anchor(problem, pairs, z, x, x_direct)?;
        let (m_prev, m_next) = (end_value(&prev, Side::A)[1], end_value(&next, Side::A)[1]);
        drift = (m_next - m_prev).norm() / m_next.norm();
        prev = next;
        if drift <= DRIFT_TOL {
            let m0 = end_value(&prev, Side::A)[1];
            return Ok(WeylSolution { z, trace: prev, m0, anchor: x, drift });
        }
    }
    Err(Error::AnchorNotConverged { drift })
}

// ---------------------------------------------------------------------------
// Two limit-circle endpoints

/// `u₁, u₂` with `ũ₁(a) = 0, ũ₁(b) = 1, ũ₂(a) = 1, ũ₂(b) = 0`.
#[derive(Clone)]
pub struct DeficiencyBasis {
    pub z: C,
    pub u1: LinComb,
    pub u2: LinComb,
    /// `ũ₁′(z,a), ũ₁′(z,b), ũ₂′(z,a), ũ₂′(z,b)`.
    pub data: [C; 4],
}

impl DeficiencyBasis {
    pub fn u1p_a(&self) -> C {
        self.data[0]
    }
    pub fn u1p_b(&self) -> C {
        self.data[1]
    }
    pub fn u2p_a(&self) -> C {
        self.data[2]
    }
    pub fn u2p_b(&self) -> C {
        self.data[3]
    }

    pub fn u(&self, j: usize) -> &LinComb {
        if j == 0 {
            &self.u1
        } else {
            &self.u2
        }
    }

    /// Residual of `ũ₂′(z,b) = −ũ₁′(z,a)`.
    pub fn wronskian_residual(&self) -> f64 {
        (self.u2p_b() + self.u1p_a()).norm()
    }
}

fn two_lc_check(problem: &SlProblem) -> Result<()> {
    if problem.end(Side::B).is_none() {
        return Err(Error::Unsupported("two limit-circle ends need finite b".into()));
    }
    Ok(())
}

pub fn deficiency_basis(problem: &SlProblem, z: C) -> Result<DeficiencyBasis> {
    let pairs = EndPairs::for_problem(problem)?;
    deficiency_basis_with(problem, &pairs, z)
}

/// Fundamental system from the anchor, its boundary data at both ends, and the 2×2 solves.
pub fn deficiency_basis_with(problem: &SlProblem, pairs: &EndPairs, z: C) -> Result<DeficiencyBasis> {
    check_nonreal(z)?;
    basis_any_z(problem, pairs, z)
}

/// As [`deficiency_basis_with`] without the nonreal check; real `z` must avoid the spectrum of
/// the Friedrichs-type extension.
pub fn basis_any_z(problem: &SlProblem, pairs: &EndPairs, z: C) -> Result<DeficiencyBasis> {
    two_lc_check(problem)?;
    let one = C::new(1.0, 0.0);
    let y1 = Arc::new(solve_two_sided(problem, pairs, z, [one, c0()])?);
    let y2 = Arc::new(solve_two_sided(problem, pairs, z, [c0(), one])?);
    let (ya1, yb1) = (end_value(&y1, Side::A), end_value(&y1, Side::B));
    let (ya2, yb2) = (end_value(&y2, Side::A), end_value(&y2, Side::B));
    let m = ComplexMat2::new(ya1[0], ya2[0], yb1[0], yb2[0]);
    let inv = m.inverse().map_err(|_| Error::SingularBoundaryMap)?;
    let co1 = inv.mul_vec([c0(), one]);
    let co2 = inv.mul_vec([one, c0()]);
    let y1d: Arc<dyn QuasiFn> = y1;
    let y2d: Arc<dyn QuasiFn> = y2;
    let u1 = LinComb::new(vec![(co1[0], y1d.clone()), (co1[1], y2d.clone())]);
    let u2 = LinComb::new(vec![(co2[0], y1d), (co2[1], y2d)]);
    let d = |co: [C; 2], e1: State, e2: State| co[0] * e1[1] + co[1] * e2[1];
    let data = [d(co1, ya1, ya2), d(co1, yb1, yb2), d(co2, ya1, ya2), d(co2, yb1, yb2)];
    Ok(DeficiencyBasis { z, u1, u2, data })
}

/// Orthonormal basis `v₁ = c₁u₁(i)`, `v₂ = c₂[u₂(i) − μ u₁(i)]` of `N_i`.
#[derive(Clone)]
pub struct OrthonormalDeficiencyBasis {
    pub at_i: DeficiencyBasis,
    pub at_minus_i: DeficiencyBasis,
    pub c1: f64,
    pub c2: f64,
    pub mu: f64,
    pub pairs: EndPairs,
}

impl OrthonormalDeficiencyBasis {
    /// `v₁(z), v₂(z)` from `u_j(z)` with the constants frozen at `z = i`.
    pub fn continuation(&self, basis: &DeficiencyBasis) -> [LinComb; 2] {
        let u1: Arc<dyn QuasiFn> = Arc::new(basis.u1.clone());
        let u2: Arc<dyn QuasiFn> = Arc::new(basis.u2.clone());
        [
            LinComb::new(vec![(C::new(self.c1, 0.0), u1.clone())]),
            LinComb::new(vec![(C::new(self.c2, 0.0), u2), (C::new(-self.c2 * self.mu, 0.0), u1)]),
        ]
    }

    pub fn v_i(&self) -> [LinComb; 2] {
        self.continuation(&self.at_i)
    }

    /// Coefficients of `v_n` in terms of `(u₁, u₂)`: `v_n = Σ_j T[n][j] u_j`.
    pub fn transform(&self) -> [[f64; 2]; 2] {
        [[self.c1, 0.0], [-self.c2 * self.mu, self.c2]]
    }
}

pub fn orthonormal_basis(problem: &SlProblem) -> Result<OrthonormalDeficiencyBasis> {
    let pairs = EndPairs::for_problem(problem)?;
    orthonormal_basis_with(problem, pairs)
}

pub fn orthonormal_basis_with(problem: &SlProblem, pairs: EndPairs) -> Result<OrthonormalDeficiencyBasis> {
    let i = C::new(0.0, 1.0);
    let at_i = deficiency_basis_with(problem, &pairs, i)?;
    let at_minus_i = deficiency_basis_with(problem, &pairs, -i)?;
    let n1 = -at_i.u1p_b().im;
    if !(n1 > 0.0) {
        return Err(Error::NonPositiveNorm { value: n1 });
    }
    let mu = at_i.u2p_b().im / at_i.u1p_b().im;
    let n2 = at_i.u2p_a().im + at_i.u2p_b().im.powi(2) / at_i.u1p_b().im;
    if !(n2 > 0.0) {
        return Err(Error::NonPositiveNorm { value: n2 });
    }
    Ok(OrthonormalDeficiencyBasis {
        at_i,
        at_minus_i,
        c1: n1.powf(-0.5),
        c2: n2.powf(-0.5),
        mu,
        pairs,
    })
}
