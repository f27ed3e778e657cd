use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use kicked_top::floquet::{build_floquet, chiral_symmetry_residual, KickParams, Timeframe};
use kicked_top::meanfield::{frame_sin_eps, kick_projections, mf_quasienergy, winding_vector};
use kicked_top::spectral::{chiral_pairing_mismatch, wrap_branch, FloquetSpectrum};
use kicked_top::spin_ops::SpinSpace;
use proptest::prelude::*;

fn chiral_frame() -> impl Strategy<Value = Timeframe> {
    prop_oneof![Just(Timeframe::Chiral1), Just(Timeframe::Chiral2)]
}

proptest! {
    #[test]
    fn winding_vector_is_unit(k1 in -10.0f64..10.0, k2 in -10.0f64..10.0, frame in chiral_frame()) {
        if let Ok(v) = winding_vector(k1, k2, frame, 1e-9) {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn frame_sin_eps_matches_quasienergy(k1 in -10.0f64..10.0, k2 in -10.0f64..10.0, frame in chiral_frame()) {
        let s = frame_sin_eps(k1, k2, frame).unwrap();
        let eps = mf_quasienergy(k1, k2);
        assert_abs_diff_eq!(s * s, eps.sin().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn projections_lie_on_ellipse(
        j in 1u32..400,
        frac in -1.0f64..=1.0,
        phi in -PI..PI,
        kappa1 in 0.1f64..30.0,
        kappa2 in 0.1f64..30.0,
    ) {
        let s = SpinSpace::new(j).unwrap();
        let m = frac * s.jf();
        let (a, b) = kick_projections(s, KickParams::new(kappa1, kappa2).unwrap(), m, phi).unwrap();
        let lhs = (a / kappa1).powi(2) + (b / kappa2).powi(2);
        assert_abs_diff_eq!(lhs, 1.0 - frac * frac, epsilon = 1e-12);
    }

    #[test]
    fn wrap_branch_range(x in -100.0f64..100.0) {
        let y = wrap_branch(x);
        prop_assert!(y > -PI && y <= PI);
        let turns = (x - y) / (2.0 * PI);
        assert_abs_diff_eq!(turns, turns.round(), epsilon = 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chiral_frames_are_symmetric_and_paired(
        j in 1u32..8,
        kappa1 in 0.0f64..20.0,
        kappa2 in 0.0f64..10.0,
        frame in chiral_frame(),
    ) {
        let s = SpinSpace::new(j).unwrap();
        let k = KickParams::new(kappa1, kappa2).unwrap();
        let u = build_floquet(s, k, frame).unwrap();
        prop_assert!(u.unitarity_residual() < 1e-10);
        prop_assert!(chiral_symmetry_residual(&u, frame).unwrap() < 1e-10);
        let spec = FloquetSpectrum::compute(s, k, frame).unwrap();
        prop_assert!(chiral_pairing_mismatch(&spec).multiset_distance < 1e-8);
        let orig = FloquetSpectrum::compute(s, k, Timeframe::Original).unwrap();
        let d = orig.quasienergies().iter().zip(spec.quasienergies())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        prop_assert!(d < 1e-8);
    }
}
