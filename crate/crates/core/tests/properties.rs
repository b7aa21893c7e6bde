use std::f64::consts::TAU;

use orbit_bosonizer::correlators::{erf, one_point_closed};
use orbit_bosonizer::qpfunc::QuasiPeriodicFn;
use orbit_bosonizer::verify::cocycle_defect;
use orbit_bosonizer::OrbitParams;
use proptest::prelude::*;

/// `x + shift + Σ a_k sin kx + b_k cos kx`, rescaled so that `f' ≥ 1 − budget`.
fn diffeo(shift: f64, coeffs: &[(f64, f64)], budget: f64) -> QuasiPeriodicFn {
    let norm: f64 = coeffs.iter().enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a.abs() + b.abs())).sum::<f64>().max(1e-12);
    let s = budget / norm;
    QuasiPeriodicFn::from_fn(256, 1.0, |x| {
        x + shift
            + coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let (sn, cs) = ((i + 1) as f64 * x).sin_cos();
                    s * (a * sn + b * cs)
                })
                .sum::<f64>()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schwarzian_cocycle(s1 in 0.0..TAU, c1 in coeffs(), d1 in 0.0..0.6f64,
                          s2 in 0.0..TAU, c2 in coeffs(), d2 in 0.0..0.6f64) {
        let f = diffeo(s1, &c1, d1);
        let h = diffeo(s2, &c2, d2);
        let defect = cocycle_defect(&f, &h).unwrap();
        prop_assert!(defect <= 1e-6, "defect {defect:e}");
    }

    #[test]
    fn one_point_is_rotation_invariant(x1 in 0.0..3.0f64, w in 0.01..3.0f64, shift in 0.0..0.2f64,
                                       c in 6.0..48.0f64, alpha in 0.0..2.0f64, t in 0.3..3.0f64) {
        let p = OrbitParams::from_alpha(c, alpha).unwrap();
        let a = one_point_closed(x1, x1 + w, &p, t).unwrap();
        let b = one_point_closed(x1 + shift, x1 + w + shift, &p, t).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(((a - b) / a).abs() <= 1e-9);
    }

    #[test]
    fn erf_is_odd(x in -8.0..8.0f64) {
        prop_assert!((erf(-x) + erf(x)).abs() <= 1e-15);
    }
}
