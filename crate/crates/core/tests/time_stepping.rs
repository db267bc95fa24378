use tcm_core::diagnostics::{HaltFlag, Monitor, MonitorConfig};
use tcm_core::initial::{taylor_green, RandomSpectrum};
use tcm_core::lp::least_squares;
use tcm_core::sink::{CsvSink, DirectorySink};
use tcm_core::snapshot::Snapshot;
use tcm_core::stepper::{run, MemorySink, OutputSchedule};
use tcm_core::{
    Checkpoint, DissipationSpec, GFunction, Grid, InitialData, Model, SchemeConfig, Stepper, TcmState,
};

fn fixed(dt: f64, t_end: f64) -> SchemeConfig {
    SchemeConfig {
        dt,
        adaptive: false,
        t_end,
        ..SchemeConfig::default()
    }
}

fn integrate(model: &Model, s0: &TcmState, steps: usize, t_end: f64) -> TcmState {
    let dt = t_end / steps as f64;
    let mut st = Stepper::new(model.clone(), fixed(dt, t_end)).unwrap();
    let mut s = s0.clone();
    for _ in 0..steps {
        s = st.step(&s, dt).unwrap();
    }
    s
}

fn perturbed_taylor_green(n: usize) -> TcmState {
    let g = Grid::with_size(n).unwrap();
    InitialData::TaylorGreen {
        perturbation: Some(RandomSpectrum {
            seed: 11,
            spectrum_slope: -2.0,
            cutoff: 6.0,
            amplitude: 0.1,
        }),
    }
    .build(&g)
    .unwrap()
}

#[test]
fn self_convergence_is_second_order() {
    let s0 = perturbed_taylor_green(32);
    let model = Model::new(s0.grid(), DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 }).unwrap();
    let t = 0.5;
    let reference = integrate(&model, &s0, 3200, t);
    let (mut x, mut y) = (vec![], vec![]);
    for steps in [50, 100, 200, 400] {
        let err = integrate(&model, &s0, steps, t).max_abs_diff(&reference);
        x.push((t / steps as f64).ln());
        y.push(err.ln());
    }
    let (slope, _) = least_squares(&x, &y).unwrap();
    assert!((slope - 2.0).abs() <= 0.2, "observed order {slope}");
}

#[test]
fn linear_run_matches_closed_form_energy() {
    let g = Grid::with_size(32).unwrap();
    let alpha = 1.2;
    let model = Model::new(&g, DissipationSpec::Fractional { alpha, beta: 0.0 })
        .unwrap()
        .with_nonlinear(false);
    let mut s0 = InitialData::RandomSmooth(RandomSpectrum {
        seed: 5,
        ..RandomSpectrum::default()
    })
    .build(&g)
    .unwrap();
    s0.v.scale(0.0);
    s0.theta.scale(0.0);
    let t = 0.7;
    let s = integrate(&model, &s0, 7, t);
    let mut expected = 0.0;
    for c in 0..2 {
        for (idx, z) in s0.u.coeffs(c).iter().enumerate() {
            let m = g.k_squared(idx).powf(alpha);
            expected += (-2.0 * t * m).exp() * z.norm_sqr();
        }
    }
    assert!((s.u.norm_sq() - expected).abs() <= 1e-12 * expected);
}

#[test]
fn integrated_energy_balance_converges_at_second_order() {
    let s0 = perturbed_taylor_green(32);
    let model = Model::new(s0.grid(), DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 }).unwrap();
    let worst = |steps: u64| {
        let cfg = fixed(0.5 / steps as f64, 0.5);
        let mut mon = Monitor::new(&model, MonitorConfig::default()).unwrap();
        let mut st = Stepper::new(model.clone(), cfg).unwrap();
        let mut sink = MemorySink::default();
        run(s0.clone(), &mut st, &mut mon, OutputSchedule::default(), Checkpoint::default(), &mut sink).unwrap();
        // cumulative |E(t) - E(0) + int D| / E(0)
        let mut acc: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for w in sink.records.windows(2) {
            acc += w[1].energy_balance_residual * (w[1].t - w[0].t);
            worst = worst.max(acc.abs());
        }
        worst
    };
    let coarse = worst(25);
    let fine = worst(50);
    let ratio = coarse / fine;
    assert!(ratio > 3.2 && ratio < 4.8, "ratio {ratio}: {coarse:e} vs {fine:e}");
}

#[test]
fn unit_weight_log_operator_matches_laplacian_trajectory() {
    let g = Grid::with_size(64).unwrap();
    let s0 = InitialData::RandomSmooth(RandomSpectrum {
        seed: 21,
        ..RandomSpectrum::default()
    })
    .build(&g)
    .unwrap();
    let a = Model::new(&g, DissipationSpec::LogSupercritical { g: GFunction::One }).unwrap();
    let b = Model::new(&g, DissipationSpec::Fractional { alpha: 2.0, beta: 0.0 }).unwrap();
    let (mut sa, mut sb) = (s0.clone(), s0);
    let mut pa = Stepper::new(a, fixed(1e-3, 1.0)).unwrap();
    let mut pb = Stepper::new(b, fixed(1e-3, 1.0)).unwrap();
    for _ in 0..100 {
        sa = pa.step(&sa, 1e-3).unwrap();
        sb = pb.step(&sb, 1e-3).unwrap();
        assert!(sa.max_abs_diff(&sb) <= 1e-12);
    }
}

fn small_run() -> (Vec<u8>, TcmState) {
    let g = Grid::with_size(16).unwrap();
    let s0 = InitialData::RandomSmooth(RandomSpectrum {
        seed: 2,
        cutoff: 5.0,
        ..RandomSpectrum::default()
    })
    .build(&g)
    .unwrap();
    let model = Model::new(&g, DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 }).unwrap();
    let mut mon = Monitor::new(&model, MonitorConfig::default()).unwrap();
    let cfg = SchemeConfig {
        dt: 0.05,
        cfl: 0.2,
        t_end: 0.4,
        ..SchemeConfig::default()
    };
    let mut st = Stepper::new(model, cfg).unwrap();
    let mut csv = CsvSink::new(Vec::new(), &[1.0, 2.0]).unwrap();
    let s = run(s0, &mut st, &mut mon, OutputSchedule::default(), Checkpoint::default(), &mut csv).unwrap();
    assert_eq!(s.halt, HaltFlag::Completed);
    (csv.into_inner(), s.final_state)
}

#[test]
fn reruns_are_byte_identical() {
    let (a, sa) = small_run();
    let (b, sb) = small_run();
    assert_eq!(a, b);
    assert_eq!(sa.max_abs_diff(&sb), 0.0);
    let text = String::from_utf8(a).unwrap();
    assert!(text.lines().count() > 2);
    assert!(text.lines().last().unwrap().ends_with(",completed"));
}

#[test]
fn split_run_matches_straight_run() {
    let g = Grid::with_size(32).unwrap();
    let s0 = perturbed_taylor_green(32);
    let spec = DissipationSpec::Fractional { alpha: 1.5, beta: 0.5 };
    let model = Model::new(&g, spec.clone()).unwrap();
    let cfg = SchemeConfig {
        dt: 0.02,
        cfl: 0.2,
        t_end: 0.6,
        ..SchemeConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let sched = OutputSchedule {
        snapshot_interval: Some(5),
    };

    let mut mon = Monitor::new(&model, MonitorConfig::default()).unwrap();
    let mut st = Stepper::new(model.clone(), cfg.clone()).unwrap();
    let mut sink = DirectorySink::create(dir.path(), &[1.0, 2.0], spec.to_string(), Default::default()).unwrap();
    let straight = run(s0, &mut st, &mut mon, sched, Checkpoint::default(), &mut sink).unwrap();
    assert!(sink.written.len() >= 3);

    let snap = Snapshot::load(&sink.written[1]).unwrap();
    assert_eq!(snap.header.dissipation, spec.to_string());
    let mut mon = Monitor::new(&model, MonitorConfig::default()).unwrap();
    let mut st = Stepper::new(model, cfg).unwrap();
    let mut mem = MemorySink::default();
    let resumed = run(
        snap.state_on(&g).unwrap(),
        &mut st,
        &mut mon,
        sched,
        snap.header.checkpoint.clone(),
        &mut mem,
    )
    .unwrap();
    assert_eq!(resumed.final_step, straight.final_step);
    assert!(resumed.final_state.max_abs_diff(&straight.final_state) <= 1e-12);
    let (a, b) = (resumed.last_record.unwrap(), straight.last_record.unwrap());
    assert!((a.bkm_integral - b.bkm_integral).abs() <= 1e-12 * b.bkm_integral);
    assert_eq!(mem.records.first().unwrap().step, snap.header.step + 1);
}

#[test]
fn taylor_green_from_file_round_trips() {
    let g = Grid::with_size(16).unwrap();
    let mut s = TcmState::zeros(&g);
    s.u = taylor_green(&g);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tg.bin");
    Snapshot::new(&s, &Checkpoint::default(), "none", Default::default())
        .save(&path)
        .unwrap();
    let back = InitialData::FromFile { path }.build(&g).unwrap();
    assert!(back.max_abs_diff(&s) < 1e-15);
}
