use std::f64::consts::{LN_2, TAU};

use pilotwave::chaosmap::*;
use pilotwave::Error;
use proptest::prelude::*;

// non-periodic on [0, 1), so every Bernoulli mode is present
fn smooth(cells: usize) -> UnitDensity {
    UnitDensity::from_fn(cells, DEFAULT_MODES, f64::exp).unwrap()
}

#[test]
fn periodic_densities_carry_no_bernoulli_modes() {
    let rho = UnitDensity::from_fn(DEFAULT_CELLS, 6, |y| 1.0 + 0.6 * (TAU * y).sin()).unwrap();
    let after = pf_step(&pf_step(&rho));
    let fit = bernoulli_decompose(&after, 6).unwrap();
    assert!(fit.coefficients[1..].iter().all(|c| c.abs() < 1e-9));
    assert!(after.distance_from_uniform() < 1e-6);
}

#[test]
fn uniform_is_fixed() {
    let one = UnitDensity::uniform(DEFAULT_CELLS).unwrap();
    let next = pf_step(&one);
    assert!(next.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
}

#[test]
fn left_step_becomes_uniform_in_one_iterate() {
    let v: Vec<f64> = (0..DEFAULT_CELLS)
        .map(|j| if j < DEFAULT_CELLS / 2 { 2.0 } else { 0.0 })
        .collect();
    let rho = UnitDensity::new(v, 4).unwrap();
    let next = pf_step(&rho);
    assert!(next.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn first_mode_halves() {
    let rho = UnitDensity::from_modes(DEFAULT_CELLS, &[1.0]).unwrap();
    let next = pf_step(&rho);
    let expect = UnitDensity::from_modes(DEFAULT_CELLS, &[0.5]).unwrap();
    for (a, b) in next.values().iter().zip(expect.values()) {
        assert!((a - b).abs() < 1e-13);
    }
    assert!((next.coefficients()[1] - 0.5).abs() < 1e-12);
}

#[test]
fn decomposition_examples() {
    let one = bernoulli_decompose(&UnitDensity::uniform(256).unwrap(), 6).unwrap();
    assert!((one.coefficients[0] - 1.0).abs() < 1e-10);
    assert!(one.coefficients[1..].iter().all(|c| c.abs() < 1e-10));

    let b2 = UnitDensity::from_modes(256, &[0.0, 0.3]).unwrap();
    let fit = bernoulli_decompose(&b2, 6).unwrap();
    assert!((fit.coefficients[2] - 0.3).abs() < 1e-8);

    let saw = UnitDensity::from_fn(256, 6, |y| 2.0 * y).unwrap();
    let fit = bernoulli_decompose(&saw, 6).unwrap();
    assert!((fit.coefficients[0] - 1.0).abs() < 1e-10 && (fit.coefficients[1] - 2.0).abs() < 1e-10);
    assert!(fit.coefficients[2..].iter().all(|c| c.abs() < 1e-9));
    assert!(fit.residual < 1e-12);
}

#[test]
fn decomposition_refuses_unresolved_modes() {
    let rho = UnitDensity::uniform(16).unwrap();
    assert_eq!(rho.coefficients().len(), 8);
    assert!(matches!(
        bernoulli_decompose(&rho, 12),
        Err(Error::IllConditioned(_))
    ));
    assert!(matches!(
        bernoulli_decompose(&UnitDensity::uniform(256).unwrap(), 13),
        Err(Error::IllConditioned(_))
    ));
    assert!(bernoulli_decompose(&UnitDensity::uniform(256).unwrap(), 12).is_ok());
}

#[test]
fn decay_rates_are_multiples_of_ln2() {
    let fit = decay_rate_fit(&smooth(DEFAULT_CELLS), 12, DEFAULT_MODES).unwrap();
    for m in 1..=4 {
        let r = fit.mode(m).expect("mode fitted");
        assert!(r.relative_error() < 0.01, "m = {m}: {r:?}");
    }
    assert!((fit.mode(1).unwrap().rate - LN_2).abs() < 0.01 * LN_2);
    assert_eq!(coefficient_table(&fit).rows().len(), 13);
}

#[test]
fn uniform_has_no_decaying_modes() {
    let fit = decay_rate_fit(&UnitDensity::uniform(256).unwrap(), 6, 6).unwrap();
    assert!(fit.rates.is_empty());
    assert_eq!(fit.skipped.len(), 6);
    assert!(fit.final_floor < 1e-12);
}

#[test]
fn coefficients_follow_the_spectrum() {
    let mut rho = smooth(DEFAULT_CELLS);
    for _ in 0..3 {
        let before = bernoulli_decompose(&rho, MAX_MODES).unwrap().coefficients;
        rho = pf_step(&rho);
        let after = bernoulli_decompose(&rho, MAX_MODES).unwrap().coefficients;
        for m in 0..=4 {
            assert!(
                (after[m] - before[m] / 2f64.powi(m as i32)).abs() < 1e-8,
                "m = {m}"
            );
        }
    }
}

#[test]
fn contraction_towards_uniform() {
    for rho0 in [
        smooth(DEFAULT_CELLS),
        UnitDensity::from_fn(DEFAULT_CELLS, 6, |y| {
            (-(y - 0.3f64).powi(2) / 0.02).exp() + 0.2
        })
        .unwrap(),
    ] {
        let d0 = rho0.distance_from_uniform();
        let mut rho = rho0;
        for n in 1..=10 {
            rho = pf_step(&rho);
            assert!(
                rho.distance_from_uniform() <= d0 * 0.5f64.powi(n) * 1.05,
                "n = {n}"
            );
        }
    }
}

#[test]
fn collision_relation() {
    assert_eq!(collision_limit(1.0).unwrap(), 2.0);
    assert_eq!(collision_limit(0.5).unwrap(), 1.0);
    assert!(collision_limit(0.0).is_err());

    let rho = UnitDensity::from_modes(DEFAULT_CELLS, &[0.1]).unwrap();
    assert!(collision_check(1.0, &rho).unwrap().residual < 1e-13);

    let raw = smooth(DEFAULT_CELLS);
    assert!(matches!(
        collision_check(1.0, &raw),
        Err(Error::NotAsymptotic(_))
    ));
    let mut rho = raw;
    for _ in 0..10 {
        rho = pf_step(&rho);
    }
    assert!(collision_check(1.0, &rho).unwrap().residual < 1e-6);
}

#[test]
fn iterate_dump_has_every_cell() {
    let t = iterate_table(&UnitDensity::uniform(64).unwrap(), 3);
    assert_eq!(t.rows().len(), 4 * 64);
}

proptest! {
    #[test]
    fn transfer_preserves_mass_and_sign(raw in prop::collection::vec(0.0f64..4.0, 64)) {
        let s: f64 = raw.iter().sum();
        prop_assume!(s > 1e-3);
        let v: Vec<f64> = raw.iter().map(|x| x * 64.0 / s).collect();
        let Ok(rho) = UnitDensity::new(v, 4) else { return Ok(()) };
        let next = pf_step(&rho);
        let mass: f64 = next.values().iter().sum::<f64>() / 64.0;
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert!(next.values().iter().all(|v| *v >= -1e-12));
    }
}
