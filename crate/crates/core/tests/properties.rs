use muskat::config::RunConfig;
use muskat::dn::{dn_fixed_point, DnConfig, Geometry};
use muskat::elastic::{elastic_e, ElasticForm};
use muskat::evolution::{nonlinear_remainder, rhs};
use muskat::paracalc::{bony_remainder, paraproduct};
use muskat::params::PhysicalParams;
use muskat::spectral::{dealiased_product, semigroup_apply, Field, PeriodicGrid};
use muskat::two_phase::{pressure_fixed_point, pressure_residuals, PressureConfig};
use proptest::prelude::*;

/// Trigonometric polynomial with modes 1..=4.
fn profile(g: &PeriodicGrid, coeffs: &[(f64, f64)]) -> Field {
    g.sample(|x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = (i + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    })
}

fn coeffs(scale: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-scale..scale, -scale..scale), 4)
}

fn cheap() -> ProptestConfig {
    ProptestConfig::with_cases(12)
}

proptest! {
    #[test]
    fn bony_decomposition_is_exact(a in prop::collection::vec(-1.0f64..1.0, 64), u in prop::collection::vec(-1.0f64..1.0, 64)) {
        let g = PeriodicGrid::standard(64).unwrap();
        let (a, u) = (Field::new(g, a).unwrap(), Field::new(g, u).unwrap());
        let lhs = &(&paraproduct(&a, &u) + &paraproduct(&u, &a)) + &bony_remainder(&a, &u);
        prop_assert!((&lhs - &dealiased_product(&a, &u)).max_abs() < 1e-12);
    }

    #[test]
    fn semigroup_composes(t in 0.0f64..0.1, s in 0.0f64..0.1, c in coeffs(1.0)) {
        let g = PeriodicGrid::standard(32).unwrap();
        let f = profile(&g, &c);
        let two = semigroup_apply(&semigroup_apply(&f, t, 1.0, 5.0, 0.5, 1.0).unwrap(), s, 1.0, 5.0, 0.5, 1.0).unwrap();
        let one = semigroup_apply(&f, t + s, 1.0, 5.0, 0.5, 1.0).unwrap();
        prop_assert!((&two - &one).max_abs() < 1e-13);
    }

    #[test]
    fn bending_is_odd_and_translation_equivariant(c in coeffs(0.1), shift in 0usize..64) {
        let g = PeriodicGrid::standard(64).unwrap();
        let eta = profile(&g, &c);
        let e = elastic_e(&eta, ElasticForm::A);
        let neg = elastic_e(&eta.scaled(-1.0), ElasticForm::A);
        prop_assert!((&e + &neg).max_abs() < 1e-12);
        let moved = elastic_e(&eta.shifted(shift), ElasticForm::A);
        let err = (&moved - &e.shifted(shift)).max_abs();
        // roundoff is amplified by (n/2)^4 through the fourth derivative
        prop_assert!(err < 1e-9, "err {err} scale {}", e.max_abs());
    }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn dn_is_flux_free_and_kills_constants(c in coeffs(0.05), f in coeffs(1.0), level in -1.0f64..1.0) {
        let g = PeriodicGrid::standard(32).unwrap();
        let eta = profile(&g, &c);
        let cfg = DnConfig { levels: Some(32), ..DnConfig::default() };
        let r = dn_fixed_point(&eta, &profile(&g, &f), Geometry::Bottomless, &cfg).unwrap();
        prop_assert!(r.gf.mean().abs() < 1e-14);
        let k = dn_fixed_point(&eta, &g.constant(level), Geometry::Bottomless, &cfg).unwrap();
        prop_assert!(k.gf.max_abs() < 1e-12);
    }

    #[test]
    fn rhs_is_translation_equivariant(c in coeffs(0.02), shift in 0usize..32) {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = PhysicalParams::one_phase(1.0, 1.0, 1.0, 1.0);
        let eta = profile(&g, &c);
        let a = rhs(&eta.shifted(shift), &p).unwrap();
        let b = rhs(&eta, &p).unwrap().shifted(shift);
        prop_assert!((&a - &b).max_abs() <= 1e-9 * b.max_abs().max(1e-300));
        let n = nonlinear_remainder(&eta.shifted(shift), &p).unwrap();
        let m = nonlinear_remainder(&eta, &p).unwrap().shifted(shift);
        prop_assert!((&n - &m).max_abs() <= 1e-9 * b.max_abs().max(1e-300));
    }

    #[test]
    fn pressure_gauge_shift_leaves_residuals(c in coeffs(1e-3), shift in -5.0f64..5.0) {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = PhysicalParams::two_phase(1.0, 1.0, 2.0, 1.0, 1.0, 0.0);
        let cfg = PressureConfig::default();
        let eta = profile(&g, &c);
        let pair = pressure_fixed_point(&eta, &p, &cfg).unwrap();
        prop_assert!(pair.jump_residual < 1e-9);
        prop_assert!(pair.flux_residual < 1e-6);
        let moved = pressure_residuals(&eta, &pair.f_minus.map(|v| v + shift), &pair.f_plus.map(|v| v + shift), &p, &cfg.dn).unwrap();
        prop_assert!((moved.jump - pair.jump_residual).abs() < 1e-9);
        prop_assert!((moved.flux - pair.flux_residual).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn padding_then_truncating_is_identity(v in prop::collection::vec(-1.0f64..1.0, 32), factor in 2usize..5) {
        let g = PeriodicGrid::standard(32).unwrap();
        let f = Field::new(g, v).unwrap();
        let back = f.resampled(32 * factor).unwrap().resampled(32).unwrap();
        prop_assert!((&back - &f).max_abs() < 1e-13);
    }

    #[test]
    fn config_sampling_is_deterministic(seed in any::<u64>(), amplitude in 0.0f64..1e-2) {
        let text = format!(r#"{{"grid": {{"n": 32}}, "initial": {{"tail": {{"amplitude": {amplitude}}}}}, "output": {{"seed": {seed}}}}}"#);
        let a = RunConfig::parse(&text).unwrap().initial_eta().unwrap();
        let b = RunConfig::parse(&text).unwrap().initial_eta().unwrap();
        prop_assert_eq!(a, b);
    }
}
