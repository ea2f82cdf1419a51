use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use pilotwave::pilot::{
    amplitude_transport_check, circulation, flow_endpoint, integrate_trajectory,
    newton_consistency, psi_reconstruction_check, velocity_at, GridSeries, GuidingField,
    IntegratorConfig,
};
use pilotwave::qdyn::states::{harmonic_ground_state, plane_wave, vortex, GaussianPacket};
use pilotwave::qdyn::{Potential, WaveFunction, DEFAULT_NODE_EPSILON};
use pilotwave::{Error, GridSpec};
use proptest::prelude::*;

fn plane_series() -> GridSeries {
    let g = GridSpec::line(64, TAU).unwrap();
    let psi = plane_wave(&g, [3.0, 0.0]);
    GridSeries::from_propagation(
        &psi,
        Potential::free(vec![1.5]),
        0.01,
        100,
        10,
        DEFAULT_NODE_EPSILON,
    )
    .unwrap()
}

fn ground_series() -> GridSeries {
    let g = GridSpec::line(128, 16.0).unwrap();
    let psi = harmonic_ground_state(&g, &[1.0], &[1.0]);
    let pot = Potential::harmonic(vec![1.0], vec![1.0]);
    // small steps keep the splitting-induced breathing of the state below 1e-8
    GridSeries::from_propagation(&psi, pot, 2e-4, 5000, 100, DEFAULT_NODE_EPSILON).unwrap()
}

fn gaussian_series() -> (GaussianPacket, GridSeries) {
    let g = GridSpec::line(512, 40.0).unwrap();
    let packet = GaussianPacket::at_rest(1.0, 1.0);
    let series = GridSeries::from_propagation(
        &packet.wavefunction(&g, 0.0),
        Potential::free(vec![1.0]),
        0.01,
        200,
        1,
        DEFAULT_NODE_EPSILON,
    )
    .unwrap();
    (packet, series)
}

#[test]
fn velocity_at_known_states() {
    let plane = plane_series();
    let (v, near) = velocity_at(&plane, &[0.3, 0.0], 0.45);
    assert!(!near && (v[0] - 2.0).abs() < 1e-10);
    let ground = ground_series();
    assert!(velocity_at(&ground, &[1.1, 0.0], 0.5).0[0].abs() < 1e-8);
    let (packet, series) = gaussian_series();
    for &(x, t) in &[(0.4, 0.3), (-2.0, 1.0), (1.5, 1.7)] {
        let exact = packet.velocity(x, t);
        assert!((velocity_at(&series, &[x, 0.0], t).0[0] - exact).abs() < 5e-3 * exact.abs());
    }
}

#[test]
fn plane_wave_trajectory_is_uniform_motion() {
    let s = plane_series();
    let g = s.grid().clone();
    let traj =
        integrate_trajectory(&s, &[0.5, 0.0], 0.0, 1.0, IntegratorConfig::new(0.01)).unwrap();
    let x = traj.end().position[0];
    assert!(g.min_image(x - (0.5 + 2.0)).abs() < 1e-8);
    let check = amplitude_transport_check(&traj, &s);
    assert!(check.residual < 1e-8 && (check.volume_factor - 1.0).abs() < 1e-8);
    let rec = psi_reconstruction_check(&traj, &s);
    assert!(
        rec.modulus_residual < 1e-6 && rec.phase_residual.abs() < 1e-6,
        "{rec:?}"
    );
    assert!((traj.action_integral() - 9.0 / 3.0).abs() < 1e-9);
    assert!(newton_consistency(&traj, &s) < 1e-6);
}

#[test]
fn ground_state_particles_stand_still() {
    let s = ground_series();
    let traj =
        integrate_trajectory(&s, &[0.8, 0.0], 0.0, 1.0, IntegratorConfig::new(0.01)).unwrap();
    assert!((traj.end().position[0] - 0.8).abs() < 1e-8);
    let check = amplitude_transport_check(&traj, &s);
    assert!(check.residual < 1e-8 && (check.volume_factor - 1.0).abs() < 1e-8);
    let rec = psi_reconstruction_check(&traj, &s);
    assert!(rec.phase_residual.abs() < 1e-4, "{rec:?}");
    assert!((traj.action_integral() + 0.5).abs() < 1e-4);
    assert!(newton_consistency(&traj, &s) < 1e-6);
}

#[test]
fn gaussian_trajectory_follows_width() {
    let (packet, s) = gaussian_series();
    for &x0 in &[0.5, -1.2, 2.0] {
        let traj =
            integrate_trajectory(&s, &[x0, 0.0], 0.0, 2.0, IntegratorConfig::new(0.01)).unwrap();
        let exact = packet.trajectory(x0, 2.0);
        assert!((traj.end().position[0] - exact).abs() < 5e-3 * exact.abs());
        let check = amplitude_transport_check(&traj, &s);
        let ratio = packet.sigma(2.0) / packet.sigma0;
        assert!((check.volume_factor / ratio - 1.0).abs() < 5e-3);
        assert!(check.measure_drift < 1e-2);
        let rec = psi_reconstruction_check(&traj, &s);
        assert!(
            rec.modulus_residual < 1e-3 && rec.phase_residual.abs() < 1e-3,
            "{rec:?}"
        );
    }
}

#[test]
fn gaussian_newton_form_mid_spread() {
    let (_, s) = gaussian_series();
    let traj =
        integrate_trajectory(&s, &[1.0, 0.0], 0.5, 1.5, IntegratorConfig::new(0.01)).unwrap();
    let r = newton_consistency(&traj, &s);
    assert!(r < 0.02, "residual {r}");
}

#[test]
fn trajectories_never_cross() {
    let (_, s) = gaussian_series();
    let starts: Vec<f64> = (0..40).map(|i| -4.0 + 0.2 * i as f64).collect();
    let trajs: Vec<_> = starts
        .iter()
        .map(|&x| {
            integrate_trajectory(&s, &[x, 0.0], 0.0, 2.0, IntegratorConfig::new(0.02)).unwrap()
        })
        .collect();
    for k in 0..trajs[0].samples.len() {
        for w in trajs.windows(2) {
            assert!(w[0].samples[k].position[0] < w[1].samples[k].position[0]);
        }
    }
}

#[test]
fn circulation_counts_windings() {
    let g = GridSpec::square(128, 12.0).unwrap();
    let circle: Vec<[f64; 2]> = (0..720)
        .map(|i| {
            let a = TAU * i as f64 / 720.0;
            [1.2 * a.cos(), 1.2 * a.sin()]
        })
        .collect();
    let single = circulation(&vortex(&g, 1), &[1.0, 1.0], &circle, 4).unwrap();
    assert!((single.mass_weighted - TAU).abs() < 1e-4, "{single:?}");
    let double = circulation(&vortex(&g, 2), &[1.0, 1.0], &circle, 4).unwrap();
    assert!((double.mass_weighted - 2.0 * TAU).abs() < 1e-4);
    // only the mass-weighted form stays an integer multiple of 2π
    let heavy = circulation(&vortex(&g, 1), &[2.0, 2.0], &circle, 4).unwrap();
    assert!((heavy.mass_weighted_windings() - 1.0).abs() < 1e-5);
    assert!((heavy.as_written - PI).abs() < 1e-4);
}

#[test]
fn circulation_vanishes_without_vortex() {
    let g = GridSpec::square(128, 12.0).unwrap();
    let psi = WaveFunction::from_fn(&g, 0.0, |p| {
        let r2 = (p[0] - 0.5).powi(2) + p[1] * p[1];
        Complex64::from_polar(
            (-r2 / 2.0).exp(),
            0.8 * p[0] - 0.3 * p[1] + 0.1 * p[0] * p[1],
        )
    })
    .normalized();
    let square = [[-1.0, -1.0], [1.5, -1.0], [1.5, 1.0], [-1.0, 1.0]];
    let c = circulation(&psi, &[1.0, 1.0], &square, 200).unwrap();
    assert!(c.mass_weighted.abs() < 1e-6, "{c:?}");
}

#[test]
fn circulation_refuses_loops_through_nodes() {
    let g = GridSpec::square(64, 12.0).unwrap();
    let tiny = [[-0.05, -0.05], [0.05, -0.05], [0.05, 0.05], [-0.05, 0.05]];
    let psi = vortex(&g, 3);
    assert!(matches!(
        circulation(&psi, &[1.0, 1.0], &tiny, 2),
        Err(Error::LoopNearNode { .. })
    ));
}

#[test]
fn endpoint_outside_series_is_rejected() {
    let s = plane_series();
    let (_, hi) = s.time_range();
    assert!(flow_endpoint(&s, &[0.0, 0.0], 0.0, hi + 1.0, IntegratorConfig::new(0.01)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_then_backward_returns_home(x0 in -5.0f64..5.0, t1 in 0.2f64..2.0) {
        let (_, s) = gaussian_series_cached();
        let cfg = IntegratorConfig::new(0.01);
        let fwd = flow_endpoint(s, &[x0, 0.0], 0.0, t1, cfg).unwrap();
        let back = flow_endpoint(s, &fwd.position, t1, 0.0, cfg).unwrap();
        prop_assert!((back.position[0] - x0).abs() < 1e-6 * 40.0);
        prop_assert!((fwd.divergence_integral + back.divergence_integral).abs() < 1e-6);
    }
}

fn gaussian_series_cached() -> &'static (GaussianPacket, GridSeries) {
    static CELL: std::sync::OnceLock<(GaussianPacket, GridSeries)> = std::sync::OnceLock::new();
    CELL.get_or_init(gaussian_series)
}
