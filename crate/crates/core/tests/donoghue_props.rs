//! Donoghue matrices: conjugate symmetry `M(z̄) = M(z)*` and the Herglotz lower bound.

use std::f64::consts::PI;
use std::sync::OnceLock;

use proptest::prelude::*;

use sldonoghue::bessel::BesselParams;
use sldonoghue::donoghue::{herglotz_row, OneLcDonoghue, TwoLcDonoghue};
use sldonoghue::*;

type C = C64;

fn two_lc() -> &'static TwoLcDonoghue {
    static D: OnceLock<TwoLcDonoghue> = OnceLock::new();
    D.get_or_init(|| {
        let p = SlProblem::bessel(BesselParams::new(0.5, -0.5, 0.25, Bound::Finite(1.0))).unwrap();
        TwoLcDonoghue::new(&p).unwrap()
    })
}

fn one_lc() -> &'static OneLcDonoghue {
    static D: OnceLock<OneLcDonoghue> = OnceLock::new();
    D.get_or_init(|| {
        let p = SlProblem::bessel(BesselParams::new(0.0, 0.0, 0.3, Bound::Infinite)).unwrap();
        OneLcDonoghue::new(&p).unwrap()
    })
}

fn spec_strategy() -> impl Strategy<Value = ExtensionSpec> {
    prop_oneof![
        (0.0..PI, 0.0..PI).prop_map(|(alpha, beta)| ExtensionSpec::Separated { alpha, beta }),
        (0.0..2.0 * PI, 0.5..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(phi, r11, r12, r21)| {
            ExtensionSpec::Coupled { phi, r: [[r11, r12], [r21, (1.0 + r12 * r21) / r11]] }
        }),
    ]
}

fn z_strategy() -> impl Strategy<Value = C> {
    (-4.0..4.0f64, -1.5..1.0f64, any::<bool>()).prop_map(|(re, lg, up)| {
        let im = 10f64.powf(lg);
        C::new(re, if up { im } else { -im })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_lc_symmetry_and_herglotz(spec in spec_strategy(), z in z_strategy()) {
        let d = two_lc();
        let m = d.eval(&spec, z).unwrap();
        let mc = d.eval(&spec, z.conj()).unwrap();
        let row = herglotz_row(&m, Some(&mc));
        prop_assert!(row.pass, "margin {:e}", row.margin);
        prop_assert!(row.sym_residual.unwrap() < 1e-9, "symmetry {:e}", row.sym_residual.unwrap());
    }

    #[test]
    fn one_lc_symmetry_and_herglotz(alpha in 0.0..PI, z in z_strategy()) {
        let d = one_lc();
        let m = d.eval(alpha, z).unwrap();
        let mc = d.eval(alpha, z.conj()).unwrap();
        let row = herglotz_row(&m, Some(&mc));
        prop_assert!(row.pass, "margin {:e}", row.margin);
        prop_assert!(row.sym_residual.unwrap() < 1e-9, "symmetry {:e}", row.sym_residual.unwrap());
    }
}
