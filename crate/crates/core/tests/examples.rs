use std::f64::consts::FRAC_PI_2;

use momentous::analysis::{
    hemisphere_ratio, phase_shift, predicted_phase_shift, time_to_theta, TerminatedPolicy, EQUATOR_TOL,
};
use momentous::dynamics::{energy, rhs};
use momentous::ensemble::{run_sweep, InitialCondition, RunSetup, SweepParameter, SweepValues};
use momentous::initial::circle_initial_moments;
use momentous::integrator::{convergence_check, integrate};
use momentous::reproduction::{makarov_params, reference_setup, reference_state};
use momentous::state::slot;
use momentous::{
    CorrelationPolicy, GaussianSpec, IntegratorConfig, Mode, MomentPolicy, MomentState, SweepSpec, SystemKind,
    SystemParams, SystemTag, TerminationTag,
};

fn kind(tag: SystemTag, policy: MomentPolicy) -> SystemKind {
    SystemKind::new(tag, policy)
}

fn cfg(t_end: f64) -> IntegratorConfig<f64> {
    IntegratorConfig { t_end, ..IntegratorConfig::default() }
}

fn sweep(tag: SystemTag, params: SystemParams<f64>, values: SweepValues<f64>, paired: bool) -> SweepSpec<f64> {
    SweepSpec {
        base: reference_setup(tag, params, 0.0, IntegratorConfig::default()),
        parameter: SweepParameter::A,
        values,
        paired_classical: paired,
        classical_policy: MomentPolicy::Zeroed,
        threads: None,
    }
}

#[test]
fn equatorial_geodesic_derivatives() {
    let mut s = MomentState::zeros(Mode::Sphere);
    s.classical = vec![FRAC_PI_2, 1.0, 0.0, 10.0];
    let d = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Zeroed), &s, &SystemParams::default()).unwrap();
    // sin(2 theta) at the rounded pi/2 is 1.2e-16, times P_phi^2
    for (x, want) in d[..4].iter().zip([1.0, 0.0, 10.0, 0.0]) {
        assert!((x - want).abs() < 1e-13, "{:?}", &d[..4]);
    }
}

#[test]
fn reference_state_keeps_cyclic_quantities() {
    let d = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Evolve), &reference_state(1.0), &SystemParams::default())
        .unwrap();
    assert_eq!(d[3], 0.0, "P_phi");
    assert_eq!(d[4 + slot::G0002], 0.0);
    assert_eq!(d[4 + slot::G2000], 0.0, "G1100 starts at zero");
}

#[test]
fn makarov_equatorial_force_is_gamma() {
    let mut s = MomentState::zeros(Mode::Sphere);
    s.classical = vec![FRAC_PI_2, 0.0, 0.0, 0.0];
    let p = makarov_params(-1.9);
    let d = rhs(&kind(SystemTag::SphereMakarov, MomentPolicy::Zeroed), &s, &p).unwrap();
    assert!((d[1] - (-1.9)).abs() < 1e-12, "{}", d[1]);

    s.classical = vec![FRAC_PI_2, 1.0, 0.0, 10.0];
    let e = energy(&kind(SystemTag::SphereMakarov, MomentPolicy::Zeroed), &s, &p).unwrap();
    assert!((e - (0.5 * (1.0 + 100.0) + 2.0)).abs() < 1e-12);
}

#[test]
fn circle_energy_closed_form() {
    let mut s = MomentState::zeros(Mode::Circle);
    s.classical = vec![0.0, 1.0];
    s.moments = vec![0.05, 0.0, 5.0];
    let e = energy(&kind(SystemTag::CircleFree, MomentPolicy::Evolve), &s, &SystemParams::default()).unwrap();
    assert_eq!(e, 3.0);
}

#[test]
fn circle_correlation_drives_spreading() {
    let mut s = MomentState::zeros(Mode::Circle);
    s.classical = vec![0.0, 1.0];
    s.moments = vec![0.05, 0.3, 5.0];
    let p = SystemParams::<f64> { mass: 2.0, ..SystemParams::default() };
    let d = rhs(&kind(SystemTag::CircleFree, MomentPolicy::Evolve), &s, &p).unwrap();
    // {G20, G02} = 4 G11 and H carries G02 / (2 m R^2)
    assert!((d[2] - 2.0 * 0.3 / 2.0).abs() < 1e-15);
}

#[test]
fn circle_spreading_is_linear() {
    let params = SystemParams::<f64>::default();
    let spec = GaussianSpec { lambda: 10.0, l: 1, ..GaussianSpec::default() };
    let s0 = circle_initial_moments(&spec, &params, CorrelationPolicy::Chirp(0.5)).unwrap();
    let tr = integrate(kind(SystemTag::CircleFree, MomentPolicy::Evolve), &s0, &params, &cfg(10.0)).unwrap();
    let (g20, g11) = (s0.moments[0], s0.moments[1]);
    for s in &tr.samples {
        let line = g20 + 2.0 * params.inv_inertia() * g11 * s.t;
        assert!((s.state.moments[0] - line).abs() <= 1e-10, "t = {}: {} vs {line}", s.t, s.state.moments[0]);
    }
}

#[test]
fn free_sphere_reference_run_respects_floors() {
    let tr = reference_setup(SystemTag::SphereFree, SystemParams::default(), 1.0, IntegratorConfig::default())
        .run()
        .unwrap();
    assert_eq!(tr.status.tag, TerminationTag::Completed);
    let (th, ph) = tr.min_uncertainty();
    assert!(th >= 0.25 - 1e-10 && ph.unwrap() >= 0.25 - 1e-10);
    assert_eq!(tr.samples.len(), 1001);
}

#[test]
fn strong_makarov_run_terminates_early() {
    let tr = reference_setup(SystemTag::SphereMakarov, makarov_params(-1.9), 1.0, IntegratorConfig::default())
        .run()
        .unwrap();
    assert!(
        matches!(tr.status.tag, TerminationTag::UncertaintyViolation | TerminationTag::PoleSingularity),
        "status {} at t = {}",
        tr.status.tag,
        tr.end_time()
    );
    assert!(tr.end_time() < 10.0);
}

#[test]
fn self_convergence_of_reference_run() {
    let r = convergence_check(
        kind(SystemTag::SphereFree, MomentPolicy::Evolve),
        &reference_state(1.0),
        &SystemParams::default(),
        &IntegratorConfig::default(),
        &[1e-6, 1e-8, 1e-10],
    )
    .unwrap();
    assert!(r.all_completed && r.monotone);
    assert!(r.deltas[1] * 10.0 <= r.deltas[0], "{:?}", r.deltas);
}

#[test]
fn phase_shift_of_identical_runs_is_zero() {
    let setup = reference_setup(SystemTag::SphereFree, SystemParams::default(), 1.0, cfg(2.0));
    let a = setup.run().unwrap();
    let b = setup.run().unwrap();
    let ps = phase_shift(&a, &b).unwrap();
    assert!(ps.dtheta.iter().chain(&ps.dphi).all(|x| *x == 0.0));
}

#[test]
fn predicted_shift_values() {
    let p = SystemParams::default();
    assert_eq!(predicted_phase_shift(&p, 10.0, 0.0475, 0.0, 10.0), 9.5);
    assert_eq!(predicted_phase_shift(&p, 10.0, 0.0475, 0.0, 0.0), 0.0);
    assert_eq!(predicted_phase_shift(&p, 10.0, 0.095, 0.0, 10.0), 19.0);
}

#[test]
fn equatorial_orbit_never_reaches_theta_star() {
    let tr = reference_setup(SystemTag::SphereFree, SystemParams::default(), 0.0, cfg(3.0)).run().unwrap();
    assert_eq!(time_to_theta(&tr, 2.0).unwrap(), None);
}

#[test]
fn table_two_grid_pairs() {
    let res = run_sweep(&sweep(
        SystemTag::SphereFree,
        SystemParams::default(),
        SweepValues::Range { min: 0.0, max: 10.0, step: 2.0 },
        true,
    ))
    .unwrap();
    assert_eq!(res.values(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    assert_eq!(res.semiclassical().len() + res.classical().len(), 12);
    assert_eq!(res.pairs().len(), 6);
    assert_eq!(res.summary.unwrap().abs_dphi.n, 6);
}

#[test]
fn empty_range_is_rejected() {
    let spec = sweep(
        SystemTag::SphereFree,
        SystemParams::default(),
        SweepValues::Range { min: 2.0, max: 1.0, step: 1.0 },
        false,
    );
    assert!(run_sweep(&spec).is_err());
}

#[test]
fn free_mirror_ensemble_is_balanced() {
    let res = run_sweep(&sweep(
        SystemTag::SphereFree,
        SystemParams::default(),
        SweepValues::Range { min: -8.0, max: 8.0, step: 1.0 },
        false,
    ))
    .unwrap();
    let trajs = res.semiclassical();
    for t in [2.5, 5.0, 10.0] {
        let c = hemisphere_ratio(&trajs, t, TerminatedPolicy::LastValidState, EQUATOR_TOL).unwrap();
        assert_eq!(c.south, c.north, "t = {t}");
        assert_eq!(c.ratio, 1.0);
    }
}

#[test]
fn strong_makarov_grid_has_early_terminations() {
    let res = run_sweep(&sweep(
        SystemTag::SphereMakarov,
        makarov_params(-1.9),
        SweepValues::Range { min: -8.0, max: 8.0, step: 1.0 },
        false,
    ))
    .unwrap();
    let trajs = res.semiclassical();
    assert_eq!(trajs.len(), 17);
    let early = trajs.iter().filter(|t| !t.completed()).count();
    assert!(early > 0, "all 17 runs completed");
}

#[test]
fn gaussian_and_explicit_initial_conditions_agree() {
    let params = SystemParams::<f64>::default();
    let spec = GaussianSpec::default();
    let g = InitialCondition::Gaussian { spec, correlation: CorrelationPolicy::Zero, kappa_target: Some(0.0475), p_theta: Some(1.0) };
    let s = g.build(Mode::Sphere, &params).unwrap();
    let r = reference_state(1.0);
    assert_eq!(s.classical, r.classical);
    assert!((s.moments[slot::G2000] - 0.0475).abs() < 1e-12);
    assert!((s.moments[slot::G0200] - r.moments[slot::G0200]).abs() < 1e-5);
    let setup = RunSetup {
        kind: kind(SystemTag::SphereFree, MomentPolicy::Evolve),
        params,
        initial: g,
        config: cfg(1.0),
    };
    assert!(setup.run().unwrap().completed());
}
