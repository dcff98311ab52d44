use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rlmix_core::dynamics::{decompose, evolve, AmplitudeState};
use rlmix_core::initstate::{basis_excitation, dark_state, middle_node};
use rlmix_core::lattice::{CouplingParams, LatticeSpec};
use rlmix_core::mixing::{
    mixing_report, mixing_time, scaling_study, stationary_distribution, MixClass, RunOptions, Segment, StateRule,
};
use rlmix_core::spectral::eigensolve;

mod common;
use common::linspace;

fn params(v: f64, phi: f64) -> CouplingParams {
    CouplingParams::new(v, phi, 1.0).unwrap()
}

fn state(values: &[f64]) -> AmplitudeState {
    AmplitudeState::from_real(values).unwrap()
}

fn report(spec: &LatticeSpec, s0: &AmplitudeState) -> rlmix_core::mixing::MixReport {
    mixing_report(spec, s0, 1e-3, &RunOptions::default()).unwrap()
}

fn t_mix(spec: &LatticeSpec, s0: &AmplitudeState) -> f64 {
    report(spec, s0).t_mix.unwrap()
}

fn first(spec: &LatticeSpec) -> AmplitudeState {
    basis_excitation(spec, 1).unwrap().state
}

#[test]
fn symmetric_dbs_first_node_is_conventional() {
    for &x in &[0.2, 0.4, 0.7, 1.5] {
        let h = LatticeSpec::dbs(params(x, FRAC_PI_4)).build().unwrap();
        let s = eigensolve(&h).unwrap();
        let st = stationary_distribution(&s, &decompose(&state(&[1.0, 0.0, 0.0]), &s).unwrap()).unwrap();
        assert_eq!(st.class, MixClass::Conventional);
        let p = st.p_stationary.unwrap();
        for (a, b) in p.iter().zip([0.5, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn two_node_excitation_regimes() {
    let r = 0.5f64.sqrt();
    let s0 = state(&[r, 0.0, r]);
    let h = LatticeSpec::dbs(params(0.4, FRAC_PI_4)).build().unwrap();
    let s = eigensolve(&h).unwrap();
    let st = stationary_distribution(&s, &decompose(&s0, &s).unwrap()).unwrap();
    assert_eq!(st.class, MixClass::Unconventional);
    let slow = s.right(st.slow_modes[0]);
    assert!((s.eigenvalues()[st.slow_modes[0]].im + 0.5 * (1.0 - (1.0f64 - 0.64).sqrt())).abs() < 1e-12);
    let total = slow.norm_squared();
    for (j, p) in st.p_stationary.unwrap().iter().enumerate() {
        assert!((p - slow[j].norm_sqr() / total).abs() < 1e-10);
    }

    let h = LatticeSpec::dbs(params(0.6, FRAC_PI_4)).build().unwrap();
    let s = eigensolve(&h).unwrap();
    let st = stationary_distribution(&s, &decompose(&s0, &s).unwrap()).unwrap();
    assert_eq!(st.class, MixClass::NonMixing);
    assert!(st.p_stationary.is_none());
    assert_eq!(st.slow_modes.len(), 2);
}

#[test]
fn report_regimes_agree_with_detector() {
    let r = 0.5f64.sqrt();
    for (x, s0, class) in [
        (0.4, state(&[r, 0.0, r]), MixClass::Unconventional),
        (0.6, state(&[r, 0.0, r]), MixClass::NonMixing),
        (0.4, state(&[1.0, 0.0, 0.0]), MixClass::Conventional),
        (0.6, state(&[1.0, 0.0, 0.0]), MixClass::Conventional),
    ] {
        let rep = mixing_report(&LatticeSpec::dbs(params(x, FRAC_PI_4)), &s0, 1e-3, &RunOptions { t_max: Some(200.0), ..Default::default() }).unwrap();
        assert_eq!(rep.class, class, "x={x}");
        assert_eq!(rep.diagnostics.converging, class != MixClass::NonMixing, "x={x}");
        if class == MixClass::Unconventional {
            assert!(rep.diagnostics.late_average_discrepancy.unwrap() < 1e-6, "{:?}", rep.diagnostics);
        }
    }
}

#[test]
fn dbs_mixing_time_is_smallest_near_the_ep() {
    let ratios = linspace(0.1, 1.0, 19);
    let times: Vec<f64> = ratios.iter().map(|&x| t_mix(&LatticeSpec::dbs(params(x, FRAC_PI_4)), &state(&[1.0, 0.0, 0.0]))).collect();
    let best = times.iter().copied().fold(f64::INFINITY, f64::min);
    for (w, x) in times.windows(2).zip(&ratios) {
        if *x < 0.5 {
            assert!(w[1] < w[0], "{times:?}");
        }
    }
    for (t, x) in times.iter().zip(&ratios) {
        if *x > 0.55 {
            assert!(*t <= 1.15 * best, "x={x}: {t} vs {best}");
        }
    }
    let near_ep = times.iter().zip(&ratios).filter(|(_, x)| (*x - 0.5).abs() <= 0.1 + 1e-12).map(|(t, _)| *t);
    assert!(near_ep.fold(f64::INFINITY, f64::min) <= 1.15 * best);
    let at = |x: f64| t_mix(&LatticeSpec::dbs(params(x, FRAC_PI_4)), &state(&[1.0, 0.0, 0.0]));
    assert!(at(0.2) > at(0.4));
}

#[test]
fn dark_state_mixes_instantly() {
    let spec = LatticeSpec::linear(params(2.0, 0.2 * PI), 6).unwrap();
    assert_eq!(t_mix(&spec, &dark_state(&spec).unwrap()), 0.0);
}

#[test]
fn far_excitation_mixes_slower_in_a_localised_chain() {
    let spec = LatticeSpec::linear(params(1.0, 0.1 * PI), 9).unwrap();
    let near = basis_excitation(&spec, spec.dim()).unwrap().state;
    let (t_far, t_near) = (t_mix(&spec, &first(&spec)), t_mix(&spec, &near));
    assert!(t_far > t_near, "{t_far} vs {t_near}");
}

#[test]
fn asymmetric_chain_mixes_faster_below_the_symmetric_lrep() {
    for &(x, faster) in &[(1.0, true), (2.0, true), (3.0, false), (5.0, false)] {
        let sym = LatticeSpec::linear(params(x, FRAC_PI_4), 9).unwrap();
        let asym = LatticeSpec::linear(params(x, 0.21 * PI), 9).unwrap();
        let (ts, ta) = (t_mix(&sym, &first(&sym)), t_mix(&asym, &first(&asym)));
        assert_eq!(ta < ts, faster, "x={x}: {ta} vs {ts}");
    }
}

#[test]
fn ring_three_mixes_faster_than_the_dbs() {
    for &x in &[0.3, 0.6, 1.0] {
        let ring = LatticeSpec::balanced_ring(params(x, FRAC_PI_4), 3).unwrap();
        let dbs = LatticeSpec::dbs(params(x, FRAC_PI_4));
        let (tr, td) = (t_mix(&ring, &first(&ring)), t_mix(&dbs, &first(&dbs)));
        assert!(tr < td, "x={x}: ring {tr} dbs {td}");
    }
}

#[test]
fn tolerance_monotone_and_scale_invariant() {
    let spec = LatticeSpec::linear(params(1.5, 0.23 * PI), 5).unwrap();
    let s0 = state(&[0.3, 0.0, -0.7, 0.2, 0.1, 0.0, 0.4, 0.0, 0.0, 0.0, 0.5]);
    let eps = [1e-4, 1e-3, 1e-2, 1e-1];
    let times: Vec<f64> = eps.iter().map(|&e| mixing_report(&spec, &s0, e, &RunOptions::default()).unwrap().t_mix.unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] >= w[1]), "{times:?}");
    let scaled = AmplitudeState::new(&s0.psi * Complex64::new(-2.5, 1.5)).unwrap();
    let a = t_mix(&spec, &s0);
    let b = t_mix(&spec, &scaled);
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}

#[test]
fn stored_trajectory_gives_the_same_mixing_time() {
    let spec = LatticeSpec::dbs(params(0.35, 0.3 * PI));
    let s0 = state(&[1.0, 0.0, 0.0]);
    let rep = report(&spec, &s0);
    let traj = evolve(&s0, &spec.build().unwrap(), &rep.times).unwrap();
    let mt = mixing_time(&traj, rep.p_stationary.as_ref().unwrap(), 1e-3).unwrap();
    assert!((mt.t_mix.unwrap() - rep.t_mix.unwrap()).abs() < 1e-9);
    assert!(mt.first_crossing.unwrap() <= mt.t_mix.unwrap());
}

#[test]
fn conventional_limit_is_independent_of_the_initial_state() {
    let spec = LatticeSpec::balanced_ring(params(1.2, 0.22 * PI), 5).unwrap();
    let h = spec.build().unwrap();
    let s = eigensolve(&h).unwrap();
    let mut reference: Option<Vec<f64>> = None;
    for seed in 0..10 {
        let psi: Vec<Complex64> =
            (0..h.dim()).map(|k| Complex64::new(((k * 7 + seed * 3) as f64).sin(), ((k + seed) as f64).cos())).collect();
        let s0 = AmplitudeState::new(DVector::from_vec(psi)).unwrap();
        let c = decompose(&s0, &s).unwrap();
        if c.c[0].norm() <= 1e-3 * c.norm() {
            continue;
        }
        let p = stationary_distribution(&s, &c).unwrap().p_stationary.unwrap();
        match &reference {
            None => reference = Some(p),
            Some(r) => assert!(r.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-8)),
        }
    }
    assert!(reference.is_some());
}

#[test]
fn central_excitation_halves_the_mixing_time_for_even_size() {
    let spec = LatticeSpec::linear(params(3.0, FRAC_PI_4), 20).unwrap();
    let centre = basis_excitation(&spec, middle_node(&spec)).unwrap().state;
    let (te, tc) = (t_mix(&spec, &first(&spec)), t_mix(&spec, &centre));
    assert!(tc <= 0.5 * te, "centre {tc} edge {te}");
}

#[test]
fn scaling_study_segments_and_fits() {
    let start = Instant::now();
    let family = LatticeSpec::linear(params(3.0, FRAC_PI_4), 2).unwrap();
    let sizes: Vec<usize> = (2..=16).collect();
    let study = scaling_study(&family, &sizes, &StateRule::FirstNode, 1e-3, &RunOptions::default()).unwrap();
    for p in &study.points {
        let expected = if 3.0 < p.lrep.unwrap() { Segment::PostLrep } else { Segment::PreLrep };
        assert_eq!(p.segment, expected);
        assert_eq!(p.class, MixClass::Conventional);
    }
    let lrep = |n: usize| 0.5 / (1.0 - (PI / (n as f64 + 1.0)).cos()).sqrt();
    let onset = sizes.iter().copied().find(|&n| lrep(n) > 3.0);
    assert_eq!(onset, Some(13));
    assert_eq!(study.quadratic_onset(), onset);
    assert!(study.log_fit.is_some());
    assert!(study.power_fit.is_some());
    eprintln!("scaling study took {:?}", start.elapsed());
    let bad = scaling_study(&LatticeSpec::dbs(params(1.0, FRAC_PI_4)), &sizes, &StateRule::FirstNode, 1e-3, &RunOptions::default());
    assert!(bad.is_err());
}
