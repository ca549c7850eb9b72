//! One limit-circle end: the Donoghue entry against a quadrature assembly of
//! `z + (z² + 1)(φ, (T_α − z)⁻¹ φ)` with `φ = ψ(i)/‖ψ(i)‖`, and the Weyl solution near the axis.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sldonoghue::bessel::{bessel_weyl_m, BesselParams};
use sldonoghue::deficiency::{weyl_solution_reaching, weyl_solution_with, EndPairs};
use sldonoghue::donoghue::OneLcDonoghue;
use sldonoghue::krein::resolvent_one_lc;
use sldonoghue::ode::{quadrature_inner_product, Point, QuasiFn};
use sldonoghue::*;

type C = C64;

fn half_line(delta: f64, nu: f64, gamma: f64) -> (BesselParams, SlProblem) {
    let bp = BesselParams::new(delta, nu, gamma, Bound::Infinite);
    (bp, SlProblem::bessel(bp).unwrap())
}

#[test]
fn entry_matches_resolvent_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (delta, nu, gamma) in [(0.0, 0.0, 0.5), (0.5, -0.5, 0.25)] {
        let (_, p) = half_line(delta, nu, gamma);
        let pairs = EndPairs::for_problem(&p).unwrap();
        let d = OneLcDonoghue::new(&p).unwrap();
        let wi = weyl_solution_with(&p, &pairs, C::new(0.0, 1.0)).unwrap();
        let scale = 1.0 / wi.norm_sq().sqrt();
        let psi = Arc::new(wi.trace.clone());
        let (_, hi) = psi.span();
        // ψ(i) has decayed below 1e-9 at the end of its trace; extend by zero
        let phi = {
            let psi = psi.clone();
            Arc::new(move |x: f64| if x > hi { Ok(C::default()) } else { Ok(psi.eval(x)?[0] * scale) })
        };
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let alpha = rng.gen_range(0.0..PI);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let z = C::new(rng.gen_range(-3.0..3.0), sign * rng.gen_range(0.4..2.0));
            let wz = weyl_solution_reaching(&p, &pairs, z, hi).unwrap();
            let res = resolvent_one_lc(&p, &pairs, alpha, &wz, phi.clone()).unwrap();
            assert!(res.window.1 >= hi);
            let rphi = |x: f64| res.eval(x);
            let ip = quadrature_inner_product(&p, phi.as_ref(), &rphi, Point::A, Point::X(hi), 1e-11).unwrap();
            let want = z + (z * z + 1.0) * ip;
            let got = d.eval(alpha, z).unwrap().entry(0, 0);
            worst = worst.max((got - want).norm() / want.norm().max(1.0));
        }
        assert!(worst < 1e-7, "({delta}, {nu}, {gamma}): {worst:e}");
    }
}

#[test]
fn weyl_near_real_axis() {
    let zs = [
        C::new(2.26, -0.0019),
        C::new(4.9, 1e-3),
        C::new(0.3, 1e-3),
        C::new(-3.0, 1e-3),
        C::new(0.01, -1e-3),
    ];
    for (delta, nu, gamma) in [(0.0, 0.0, 0.5), (0.5, -0.5, 0.25), (1.0, 0.5, 0.0), (0.0, 0.0, 0.9)] {
        let (bp, p) = half_line(delta, nu, gamma);
        let pairs = EndPairs::for_problem(&p).unwrap();
        for z in zs {
            let m = weyl_solution_with(&p, &pairs, z).unwrap().m0;
            let want = bessel_weyl_m(&bp, z).unwrap();
            let err = (m - want).norm() / want.norm();
            assert!(err < 1e-9, "({delta}, {nu}, {gamma}) z = {z}: {err:e}");
        }
    }
}
