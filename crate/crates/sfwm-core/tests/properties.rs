//! Property tests for crate-wide invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use sfwm_core::charsim::{reconstruction_error, IntensityGrid};
use sfwm_core::constants::lambda_to_omega;
use sfwm_core::fiber::ModeId;
use sfwm_core::io::{export_jsa, import_jsa};
use sfwm_core::jsa::{normalize_jsi, pump_envelope, GridSpec, JsaGrid, PumpSpec, Regime};
use sfwm_core::phasematch::{delta_k, synthetic_two_zdw_fiber, ProcessSpec};

fn grid_strategy() -> impl Strategy<Value = JsaGrid> {
    (
        proptest::collection::vec(-5.0f64..5.0, 9 * 9),
        proptest::collection::vec(-5.0f64..5.0, 9 * 9),
    )
        .prop_filter_map("nonzero grid", |(re, im)| {
            if re.iter().zip(im.iter()).all(|(a, b)| a.abs() + b.abs() < 1e-9) {
                return None;
            }
            let spec = GridSpec::symmetric(2.4, 2.2, 0.05, 0.04, 9);
            let amp = re
                .into_iter()
                .zip(im)
                .map(|(a, b)| Complex64::new(a, b))
                .collect();
            Some(JsaGrid::new(spec, amp, Regime::Full).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent_and_scale_invariant(grid in grid_strategy(), scale in 0.01f64..100.0) {
        let n1 = normalize_jsi(&grid).unwrap();
        prop_assert!((n1.l2_norm() - 1.0).abs() < 1e-12);
        let n2 = normalize_jsi(&n1).unwrap();
        for (a, b) in n1.amp.iter().zip(n2.amp.iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let mut scaled = grid.clone();
        for a in &mut scaled.amp {
            *a *= scale;
        }
        let n3 = normalize_jsi(&scaled).unwrap();
        for (a, b) in n1.amp.iter().zip(n3.amp.iter()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn pump_envelope_even_magnitude_chirp_pure_phase(
        sigma in 1e-4f64..0.1,
        chirp in -5e3f64..5e3,
        nu_frac in -3.0f64..3.0,
    ) {
        let nu = nu_frac * sigma;
        let plain = PumpSpec::new(2.35, sigma);
        let chirped = PumpSpec::new(2.35, sigma).with_chirp(chirp);
        let a = pump_envelope(&plain, nu);
        prop_assert!((a.norm() - pump_envelope(&plain, -nu).norm()).abs() < 1e-14 * a.norm().max(1e-30));
        let c = pump_envelope(&chirped, nu);
        prop_assert!((a.norm() - c.norm()).abs() < 1e-14 * a.norm().max(1e-30));
    }

    #[test]
    fn delta_k_power_linearity_exact(
        p1 in 0.0f64..5e3,
        p2 in 0.0f64..5e3,
        lam_s in 0.9f64..0.999,
    ) {
        let fiber = synthetic_two_zdw_fiber(0.85, 1.15, 0.3)
            .with_gamma("p", 55.0, 80.0)
            .unwrap();
        let mode = ModeId::Custom("synth".into());
        let base = ProcessSpec::single_mode("p", mode);
        let powered = base.clone().with_powers(p1, p2);
        let wp = lambda_to_omega(1.0);
        let ws = lambda_to_omega(lam_s);
        let dk0 = delta_k(&fiber, &base, wp, wp, ws).unwrap();
        let dk1 = delta_k(&fiber, &powered, wp, wp, ws).unwrap();
        let expect = (55.0 * p1 + 80.0 * p2) * 1e-9;
        prop_assert!((dk0 - dk1 - expect).abs() < 1e-15 + 1e-12 * expect.abs());
    }

    #[test]
    fn overlap_symmetric_and_bounded(
        a in proptest::collection::vec(0.0f64..10.0, 25),
        b in proptest::collection::vec(0.0f64..10.0, 25),
    ) {
        prop_assume!(a.iter().sum::<f64>() > 1e-9 && b.iter().sum::<f64>() > 1e-9);
        let mk = |v: Vec<f64>| IntensityGrid {
            nu_s: (0..5).map(|i| i as f64 * 0.1).collect(),
            nu_i: (0..5).map(|i| i as f64 * 0.1).collect(),
            values: v,
        };
        let p = mk(a);
        let q = mk(b);
        let pq = reconstruction_error(&p, &q);
        let qp = reconstruction_error(&q, &p);
        prop_assert!((pq.overlap - qp.overlap).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq.overlap));
        prop_assert!((0.0..=2.0 + 1e-12).contains(&pq.l1));
        let self_err = reconstruction_error(&p, &p);
        prop_assert!((self_err.overlap - 1.0).abs() < 1e-12 && self_err.l1 < 1e-12);
    }

    #[test]
    fn jsa_file_roundtrip_exact(grid in grid_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("g");
        export_jsa(&grid, &base).unwrap();
        let back = import_jsa(&base).unwrap();
        prop_assert_eq!(&grid.spec.nu_s, &back.spec.nu_s);
        for (x, y) in grid.amp.iter().zip(back.amp.iter()) {
            prop_assert_eq!(x, y);
        }
    }
}
