use std::f64::consts::{LN_2, PI, TAU};
use std::sync::OnceLock;

use num_complex::Complex64;
use pilotwave::ensemble::{
    coarse_report, equilibrium_stability, evolve_ensemble, f_exact, h_functions, sample_density,
    sample_tabulated, CoarseGrid, Density, DensityFn, Ensemble,
};
use pilotwave::pilot::{BoxModes, GridSeries, GuidingField, IntegratorConfig};
use pilotwave::qdyn::states::{harmonic_ground_state, GaussianPacket};
use pilotwave::qdyn::{Potential, WaveFunction, DEFAULT_NODE_EPSILON};
use pilotwave::GridSpec;
use proptest::prelude::*;

fn gaussian() -> &'static (GaussianPacket, GridSeries) {
    static CELL: OnceLock<(GaussianPacket, GridSeries)> = OnceLock::new();
    CELL.get_or_init(|| {
        let g = GridSpec::line(512, 40.0).unwrap();
        let packet = GaussianPacket::at_rest(1.0, 1.0);
        let s = GridSeries::from_propagation(
            &packet.wavefunction(&g, 0.0),
            Potential::free(vec![1.0]),
            0.01,
            200,
            5,
            DEFAULT_NODE_EPSILON,
        )
        .unwrap();
        (packet, s)
    })
}

fn born_of(packet: GaussianPacket, half_width: f64) -> DensityFn {
    let peak = packet.born(0.0, 0.0);
    DensityFn::new([-half_width, 0.0], [half_width, 0.0], peak, move |x| {
        packet.born(x[0], 0.0)
    })
}

fn two_mode_box() -> BoxModes {
    BoxModes::equal_weights(1.0, 1.0, &[0.0, 0.0]).unwrap()
}

fn box_born(b: &BoxModes) -> DensityFn {
    let field = b.clone();
    DensityFn::new([0.0, 0.0], [1.0, 0.0], b.density_bound(), move |x| {
        field.density(x, 0.0)
    })
}

#[test]
fn equilibrium_sampling_has_unit_ratio() {
    let b = two_mode_box();
    let e = sample_density(&box_born(&b), &b, 0.0, 10_000, 7).unwrap();
    assert_eq!(e.len(), 10_000);
    assert!(e.f0.iter().all(|f| (f - 1.0).abs() < 1e-12));
    let (_, s) = gaussian();
    let e = sample_density(&born_of(gaussian().0, 8.0), s, 0.0, 2_000, 8).unwrap();
    assert!(e.f0.iter().all(|f| (f - 1.0).abs() < 1e-9));
}

#[test]
fn sampling_is_reproducible() {
    let b = two_mode_box();
    let a = sample_density(&box_born(&b), &b, 0.0, 500, 42).unwrap();
    let c = sample_density(&box_born(&b), &b, 0.0, 500, 42).unwrap();
    assert_eq!(a, c);
    let d = sample_density(&box_born(&b), &b, 0.0, 500, 43).unwrap();
    assert_ne!(a.positions, d.positions);
}

#[test]
fn hopeless_envelope_is_refused() {
    let b = two_mode_box();
    let spike = DensityFn::new([0.0, 0.0], [1.0, 0.0], 1e6, |x| {
        if (x[0] - 0.5).abs() < 1e-7 {
            1e6
        } else {
            0.0
        }
    });
    assert!(sample_density(&spike, &b, 0.0, 10, 1).is_err());
}

#[test]
fn uniform_birth_density_is_normalized() {
    let (_, s) = gaussian();
    let n = 20_000;
    let rho0 = DensityFn::uniform(1, [-3.0, 0.0], [3.0, 0.0]);
    let e = sample_density(&rho0, s, 0.0, n, 3).unwrap();
    let cg = CoarseGrid::new(1, [-3.0, 0.0], [3.0, 0.0], 32).unwrap();
    let (gammas, raw) = cg.gammas(s, 0.0);
    let mut sum_f = vec![0.0; 32];
    let mut count = vec![0usize; 32];
    for (x, f) in e.positions.iter().zip(&e.f0) {
        let a = cg.cell_of(x).unwrap();
        sum_f[a] += f;
        count[a] += 1;
    }
    let integral: f64 = (0..32)
        .map(|a| sum_f[a] / count[a] as f64 * gammas[a] * raw)
        .sum();
    assert!(
        (integral - 1.0).abs() < 3.0 / (n as f64).sqrt(),
        "{integral}"
    );
    let report = coarse_report(&e, s, &cg, 0.0).unwrap();
    assert_eq!(report.counts.iter().sum::<usize>() + report.outside, n);
}

#[test]
fn tabulated_sampler_matches_density() {
    let (packet, s) = gaussian();
    let e = sample_tabulated(&born_of(*packet, 8.0), s, 0.0, 20_000, 2000, 11).unwrap();
    let mean: f64 = e.positions.iter().map(|x| x[0]).sum::<f64>() / e.len() as f64;
    let var: f64 = e.positions.iter().map(|x| x[0] * x[0]).sum::<f64>() / e.len() as f64;
    assert!(
        mean.abs() < 0.03 && (var - 1.0).abs() < 0.04,
        "{mean} {var}"
    );
    assert!(e.f0.iter().all(|f| (f - 1.0).abs() < 1e-3));
}

#[test]
fn equilibrium_survives_spreading() {
    let (packet, s) = gaussian();
    let e = sample_density(&born_of(*packet, 8.0), s, 0.0, 20_000, 5).unwrap();
    let cg = CoarseGrid::new(1, [-6.0, 0.0], [6.0, 0.0], 32).unwrap();
    for &t in &[0.5, 1.0, 2.0] {
        let ev = evolve_ensemble(&e, s, t, IntegratorConfig::new(0.02)).unwrap();
        assert!(ev.truncated.is_empty());
        let r = coarse_report(&ev.ensemble, s, &cg, t).unwrap();
        assert!(r.noise_ratio() < 1.0, "t={t} ratio {}", r.noise_ratio());
    }
}

#[test]
fn stationary_state_leaves_points_in_place() {
    let g = GridSpec::line(128, 16.0).unwrap();
    let psi = harmonic_ground_state(&g, &[1.0], &[1.0]);
    let pot = Potential::harmonic(vec![1.0], vec![1.0]);
    let s = GridSeries::from_propagation(&psi, pot, 2e-4, 1000, 100, DEFAULT_NODE_EPSILON).unwrap();
    let rho0 = DensityFn::uniform(1, [-2.0, 0.0], [2.0, 0.0]);
    let e = sample_density(&rho0, &s, 0.0, 200, 1).unwrap();
    let ev = evolve_ensemble(&e, &s, 0.2, IntegratorConfig::new(0.01)).unwrap();
    for (a, b) in e.positions.iter().zip(&ev.ensemble.positions) {
        assert!((a[0] - b[0]).abs() < 1e-8);
    }
    assert_eq!(e.f0, ev.ensemble.f0);
}

#[test]
fn f_exact_is_one_in_equilibrium() {
    let (packet, s) = gaussian();
    let rho0 = born_of(*packet, 20.0);
    for &(x, t) in &[(0.3, 0.5), (-2.5, 1.5), (4.0, 2.0)] {
        let f = f_exact(&[x, 0.0], t, s, &rho0, 0.0, IntegratorConfig::new(0.01)).unwrap();
        assert!((f - 1.0).abs() < 1e-6, "{f}");
    }
}

#[test]
fn f_exact_advects_with_plane_wave() {
    let g = GridSpec::line(64, TAU).unwrap();
    let (k, m, eps, q) = (2.0, 1.0, 0.3, 3.0);
    let psi = WaveFunction::from_fn(&g, 0.0, |p| Complex64::from_polar(1.0, k * p[0])).normalized();
    let s = GridSeries::from_propagation(
        &psi,
        Potential::free(vec![m]),
        0.01,
        100,
        10,
        DEFAULT_NODE_EPSILON,
    )
    .unwrap();
    let rho0 = DensityFn::new([-PI, 0.0], [PI, 0.0], (1.0 + eps) / TAU, move |x| {
        (1.0 + eps * (q * x[0]).cos()) / TAU
    });
    for &(x, t) in &[(0.1, 0.3), (1.7, 1.0), (-2.9, 0.75)] {
        let f = f_exact(&[x, 0.0], t, &s, &rho0, 0.0, IntegratorConfig::new(0.01)).unwrap();
        let exact = 1.0 + eps * (q * (x - k * t / m)).cos();
        assert!((f - exact).abs() < 1e-4, "{f} vs {exact}");
    }
}

#[test]
fn f_exact_follows_gaussian_flow_inverse() {
    let (packet, s) = gaussian();
    let packet = *packet;
    let rho0 = DensityFn::uniform(1, [-1.0, 0.0], [1.0, 0.0]);
    let f0 = |x: f64| rho0.eval(&[x, 0.0]) / packet.born(x, 0.0);
    for &(x, t) in &[(0.4, 1.0), (-1.1, 2.0)] {
        let f = f_exact(&[x, 0.0], t, s, &rho0, 0.0, IntegratorConfig::new(0.01)).unwrap();
        let exact = f0(x * packet.sigma0 / packet.sigma(t));
        assert!((f / exact - 1.0).abs() < 1e-4, "{f} vs {exact}");
    }
}

#[test]
fn h_vanishes_in_equilibrium() {
    let b = two_mode_box();
    let e = sample_density(&box_born(&b), &b, 0.0, 20_000, 9).unwrap();
    let cg = CoarseGrid::with_default_cells(1, [0.0, 0.0], [1.0, 0.0]).unwrap();
    let h = h_functions(&e, &b, &cg).unwrap();
    assert!(h.h_fine.abs() < 1e-12);
    // KL of a multinomial histogram is about (cells − 1)/(2n)
    assert!(h.h_coarse >= 0.0 && h.h_coarse < 5.0 * 31.0 / (2.0 * 20_000.0));
}

#[test]
fn half_box_density_has_h_ln2() {
    let b = BoxModes::new(1.0, 1.0, &[(1, Complex64::new(1.0, 0.0))]).unwrap();
    let field = b.clone();
    let rho0 = DensityFn::new([0.0, 0.0], [1.0, 0.0], 2.0 * b.density_bound(), move |x| {
        if x[0] < 0.5 {
            2.0 * field.density(x, 0.0)
        } else {
            0.0
        }
    });
    let e = sample_density(&rho0, &b, 0.0, 20_000, 4).unwrap();
    let cg = CoarseGrid::new(1, [0.0, 0.0], [1.0, 0.0], 32).unwrap();
    let h = h_functions(&e, &b, &cg).unwrap();
    assert!((h.h_coarse / LN_2 - 1.0).abs() < 0.02, "{}", h.h_coarse);
    assert!((h.h_fine / LN_2 - 1.0).abs() < 1e-12);
    assert_eq!(h.coarse.empty_cells, (16..32).collect::<Vec<_>>());
}

#[test]
fn relaxing_box_lowers_coarse_h() {
    let b = two_mode_box();
    let rho0 = DensityFn::uniform(1, [0.0, 0.0], [1.0, 0.0]);
    let e = sample_density(&rho0, &b, 0.0, 20_000, 2).unwrap();
    let cg = CoarseGrid::new(1, [0.0, 0.0], [1.0, 0.0], 32).unwrap();
    let h0 = h_functions(&e, &b, &cg).unwrap();
    let cfg = IntegratorConfig::new(2e-3).with_max_displacement(0.01);
    let mut later = Vec::new();
    let mut cur = e.clone();
    let mut lost = 0;
    for k in 1..=8 {
        let ev = evolve_ensemble(&cur, &b, 0.1 * k as f64, cfg).unwrap();
        // points passing through the space-time node of Ψ are dropped
        lost += ev.truncated.len();
        cur = ev.ensemble;
        let h = h_functions(&cur, &b, &cg).unwrap();
        assert!((h.h_fine / h0.h_fine - 1.0).abs() < 1e-2);
        later.push(h.h_coarse);
    }
    assert!(lost < 20);
    let mean = later.iter().sum::<f64>() / later.len() as f64;
    assert!(mean < h0.h_coarse, "{mean} vs {}", h0.h_coarse);
}

#[test]
fn equilibrium_is_stable_under_a_kick() {
    let g = GridSpec::line(128, 16.0).unwrap();
    let psi = harmonic_ground_state(&g, &[1.0], &[1.0]);
    let pot = Potential::harmonic(vec![1.0], vec![1.0]);
    let kick = Potential::tabulated(g.coordinates().iter().map(|x| 0.3 * x).collect(), vec![1.0]);
    let cg = CoarseGrid::new(1, [-4.0, 0.0], [4.0, 0.0], 32).unwrap();
    let born = DensityFn::new([-6.0, 0.0], [6.0, 0.0], 0.6, |x| {
        (-x[0] * x[0]).exp() / PI.sqrt()
    });
    let series = GridSeries::new(
        &[
            psi.clone(),
            WaveFunction::new(g.clone(), psi.amplitudes().to_vec(), 1.0).unwrap(),
        ],
        pot.clone(),
        DEFAULT_NODE_EPSILON,
    )
    .unwrap();
    let e = sample_density(&born, &series, 0.0, 20_000, 6).unwrap();
    let cfg = IntegratorConfig::new(0.01);
    let none = Potential::free(vec![1.0]);
    let quiet = equilibrium_stability(&psi, &pot, &none, &e, &cg, 2e-3, 1000, 100, cfg).unwrap();
    assert!(quiet.worst_noise_ratio() < 1.0);
    let kicked = equilibrium_stability(&psi, &pot, &kick, &e, &cg, 2e-3, 1000, 100, cfg).unwrap();
    assert!(kicked.worst_noise_ratio() < 1.0, "{:?}", kicked.noise_ratio);
    let narrow = DensityFn::new([-6.0, 0.0], [6.0, 0.0], 0.8, |x| {
        (-1.8 * x[0] * x[0]).exp() * (1.8 / PI).sqrt()
    });
    let off = sample_density(&narrow, &series, 0.0, 20_000, 6).unwrap();
    let control =
        equilibrium_stability(&psi, &pot, &kick, &off, &cg, 2e-3, 1000, 100, cfg).unwrap();
    assert!(control.worst_noise_ratio() > 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coarse_h_is_nonnegative(xs in prop::collection::vec(0.0f64..1.0, 1..400)) {
        let b = two_mode_box();
        let n = xs.len();
        let e = Ensemble {
            axes: 1,
            positions: xs.iter().map(|&x| [x, 0.0]).collect(),
            f0: vec![1.0; n],
            birth_time: 0.0,
            time: 0.0,
            seed: 0,
        };
        let cg = CoarseGrid::new(1, [0.0, 0.0], [1.0, 0.0], 16).unwrap();
        let r = coarse_report(&e, &b, &cg, 0.3).unwrap();
        prop_assert!(r.h_coarse >= -1e-12);
        prop_assert_eq!(r.counts.iter().sum::<usize>(), n);
    }
}
