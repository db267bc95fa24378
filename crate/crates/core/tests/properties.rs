use proptest::prelude::*;
use tcm_core::diagnostics::cancellation_residual;
use tcm_core::lp::DyadicFilterBank;
use tcm_core::ops::{dealiased_product, divergence, leray_project};
use tcm_core::testing::{convolve, max_abs_diff, random_field, random_state, random_vector};
use tcm_core::{DissipationSpec, GFunction, Grid, Model, SchemeConfig, SpectralField, Stepper};

fn sizes() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![8usize, 16, 32])
}

fn specs() -> impl Strategy<Value = DissipationSpec> {
    prop_oneof![
        (0.0..2.5f64, 0.0..2.0f64).prop_map(|(alpha, beta)| DissipationSpec::Fractional { alpha, beta }),
        prop::sample::select(vec![
            GFunction::One,
            GFunction::SqrtLog,
            GFunction::SqrtLogLogLog,
            GFunction::SqrtLogLogLogLogLog
        ])
        .prop_map(|g| DissipationSpec::LogSupercritical { g }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn physical_round_trip(n in sizes(), length in 0.5..20.0f64, seed in any::<u64>()) {
        let g = Grid::new(n, length).unwrap();
        let f = random_field(&g, seed);
        let back = SpectralField::from_physical(&g, &f.to_physical()).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-14);
        prop_assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn leray_is_idempotent_and_solenoidal(n in sizes(), seed in any::<u64>()) {
        let g = Grid::with_size(n).unwrap();
        let w = random_vector(&g, seed);
        let p = leray_project(&w).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(pp.max_abs_diff(&p) < 1e-15);
        prop_assert!(divergence(&p).unwrap().max_abs_coeff() < 1e-14);
        // orthogonal projection: w - Pw is orthogonal to Pw
        prop_assert!(w.sub(&p).inner(&p).abs() < 1e-13 * w.norm_sq().max(1.0));
    }

    #[test]
    fn product_matches_convolution(seed in any::<u64>()) {
        let g = Grid::with_size(8).unwrap();
        let a = random_field(&g, seed);
        let b = random_field(&g, seed.wrapping_add(1));
        let p = dealiased_product(&a, &b).unwrap();
        let oracle = convolve(&g, a.coeffs(0), b.coeffs(0));
        prop_assert!(max_abs_diff(p.coeffs(0), &oracle) < 1e-12);
    }

    #[test]
    fn energy_law_and_reality(spec in specs(), seed in any::<u64>()) {
        let g = Grid::with_size(16).unwrap();
        let model = Model::new(&g, spec).unwrap();
        let s = random_state(&g, seed);
        let rhs = model.rhs(&s).unwrap();
        let d = model.dissipation_rate(&s);
        let scale = d.abs().max(s.norm_sq());
        prop_assert!((s.pair(&rhs) + d).abs() <= 1e-10 * scale);
        for f in [&rhs.u, &rhs.v, &rhs.theta] {
            prop_assert!(f.hermitian_defect() <= 1e-14 * f.max_abs_coeff().max(1.0));
        }
        let (r1, r2) = cancellation_residual(&s).unwrap();
        prop_assert!(r1 < 1e-10 && r2 < 1e-10);
    }

    #[test]
    fn step_keeps_u_solenoidal(spec in specs(), seed in any::<u64>(), dt in 1e-4..5e-2f64) {
        let g = Grid::with_size(16).unwrap();
        let model = Model::new(&g, spec).unwrap();
        let mut st = Stepper::new(model, SchemeConfig { dt, adaptive: false, ..SchemeConfig::default() }).unwrap();
        let s = random_state(&g, seed);
        let next = st.step(&s, dt).unwrap();
        prop_assert!(divergence(&next.u).unwrap().max_abs_coeff() < 1e-14);
        prop_assert!((next.time - dt).abs() < 1e-16);
    }

    #[test]
    fn partition_of_unity(n in prop::sample::select(vec![4usize, 8, 16, 64, 128]), length in 0.5..50.0f64) {
        let g = Grid::new(n, length).unwrap();
        let bank = DyadicFilterBank::new(&g).unwrap();
        prop_assert!(bank.partition_defect() <= 1e-13);
    }
}
