use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlmix_core::dynamics::{dbs_analytic, decompose, evolve, evolve_integrate, time_grid, AmplitudeState};
use rlmix_core::initstate::{basis_excitation, middle_node, slowest_modes};
use rlmix_core::lattice::{balanced_delta, build_ring, CouplingParams, LatticeSpec};
use rlmix_core::mixing::{
    distance, mixing_report, mixing_time_series, scaling_study, stationary_distribution, MixClass, RunOptions, Segment,
    StateRule,
};
use rlmix_core::spectral::{
    analytic_spectrum_linear, classify_degeneracy, eigensolve, eigenvalues, ep_scan, gap_vs_size, lrep_linear_analytic,
};

mod common;
use common::{linspace, match_spectra};

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    known_failure: bool,
    run: fn() -> Outcome,
}

fn params(v: f64, phi: f64, gamma: f64) -> CouplingParams {
    CouplingParams::new(v, phi, gamma).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> AmplitudeState {
    let psi: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    AmplitudeState::new(DVector::from_vec(psi)).unwrap()
}

fn e1(spec: &LatticeSpec) -> AmplitudeState {
    basis_excitation(spec, 1).unwrap().state
}

fn t_mix(spec: &LatticeSpec, s0: &AmplitudeState) -> Result<f64, String> {
    let rep = mixing_report(spec, s0, 1e-3, &RunOptions::default()).map_err(|e| e.to_string())?;
    rep.t_mix.ok_or_else(|| format!("no mixing time ({})", rep.class))
}

fn dbs_exceptional_point() -> Outcome {
    let scan = ep_scan(&LatticeSpec::dbs(params(1.0, FRAC_PI_4, 1.0)), &linspace(0.1, 1.0, 91)).map_err(|e| e.to_string())?;
    let lrep = scan.lrep.ok_or("no coalescence detected")?;
    check(scan.events.len() == 1 && (lrep - 0.5).abs() < 1e-4, format!("EP at {lrep:.10}"))
}

fn linear_spectrum_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=12 {
        for phi in [FRAC_PI_4, 0.21 * PI, 0.1 * PI] {
            for x in [0.2, 1.0, 3.0] {
                let p = params(x, phi, 1.0);
                let h = LatticeSpec::linear(p, n).unwrap().build().unwrap();
                let numeric = eigenvalues(&h).map_err(|e| e.to_string())?;
                // closed form: -i G/2 +- sqrt(v^2 mu_k - G^2/4), mu_k = 1 + sin 2phi cos(k pi / (N+1))
                let mut expected = vec![Complex64::new(0.0, 0.0)];
                for k in 1..=n {
                    let mu = 1.0 + (2.0 * phi).sin() * (k as f64 * PI / (n as f64 + 1.0)).cos();
                    let root = Complex64::new(x * x * mu - 0.25, 0.0).sqrt();
                    expected.push(Complex64::new(0.0, -0.5) + root);
                    expected.push(Complex64::new(0.0, -0.5) - root);
                }
                let library = analytic_spectrum_linear(&p, n).map_err(|e| e.to_string())?;
                worst = worst.max(match_spectra(&numeric, &expected)).max(match_spectra(&library, &expected));
            }
        }
    }
    check(worst < 1e-10, format!("max eigenvalue error {worst:.2e}"))
}

fn lrep_asymptote() -> Outcome {
    let p = params(1.0, FRAC_PI_4, 1.0);
    let ratio = |n: usize| lrep_linear_analytic(&p, n) / (n as f64 / (2f64.sqrt() * PI));
    let errors: Vec<f64> = [10, 25, 50, 100].iter().map(|&n| (ratio(n) - 1.0).abs()).collect();
    let shrinking = errors.windows(2).all(|w| w[1] < w[0]);
    check(shrinking && errors[3] < 0.02, format!("|ratio - 1| at N_L=10,25,50,100: {errors:.4?}"))
}

fn dbs_stationary_distribution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let (mut below, mut above) = (0, 0);
    for k in 0..20 {
        let x = if k % 2 == 0 { rng.gen_range(0.1..0.48) } else { rng.gen_range(0.52..2.0) };
        if x < 0.5 {
            below += 1;
        } else {
            above += 1;
        }
        let phi = rng.gen_range(0.05..0.45) * PI;
        let p = params(x, phi, 1.0);
        let spec = LatticeSpec::dbs(p);
        let rep = mixing_report(&spec, &e1(&spec), 1e-3, &RunOptions::default()).map_err(|e| e.to_string())?;
        if rep.class != MixClass::Conventional {
            return Err(format!("x={x:.3} phi={phi:.3}: class {}", rep.class));
        }
        let pst = rep.p_stationary.ok_or("missing limit")?;
        let expected = [p.v2().powi(2) / (x * x), 0.0, p.v1().powi(2) / (x * x)];
        worst = pst.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    check(worst < 1e-8, format!("{below} below and {above} above the EP, max error {worst:.2e}"))
}

fn regime_trichotomy() -> Outcome {
    let r = 0.5f64.sqrt();
    let cases = [
        (0.4, [r, 0.0, r], MixClass::Unconventional),
        (0.6, [r, 0.0, r], MixClass::NonMixing),
        (0.4, [1.0, 0.0, 0.0], MixClass::Conventional),
        (0.6, [1.0, 0.0, 0.0], MixClass::Conventional),
    ];
    let mut seen = Vec::new();
    for (x, values, class) in cases {
        let spec = LatticeSpec::dbs(params(x, FRAC_PI_4, 1.0));
        let s0 = AmplitudeState::from_real(&values).unwrap();
        let coeffs = decompose(&s0, &eigensolve(&spec.build().unwrap()).unwrap()).unwrap();
        let predicted = stationary_distribution(&eigensolve(&spec.build().unwrap()).unwrap(), &coeffs).unwrap().class;
        let rep = mixing_report(&spec, &s0, 1e-3, &RunOptions { t_max: Some(200.0), ..Default::default() })
            .map_err(|e| e.to_string())?;
        let detector_agrees = rep.diagnostics.converging == (class != MixClass::NonMixing);
        if predicted != class || rep.class != class || !detector_agrees {
            return Err(format!("x={x}: classifier {predicted}, report {}, detector converging {}", rep.class, rep.diagnostics.converging));
        }
        seen.push(format!("{x}:{class}"));
    }
    Ok(seen.join(", "))
}

fn analytic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let gamma = rng.gen_range(0.5..2.0);
        let mut x = rng.gen_range(0.05..2.0);
        if (x - 0.5f64).abs() < 0.02 {
            x += 0.05;
        }
        let p = params(x * gamma, rng.gen_range(0.05..0.45) * PI, gamma);
        let h = LatticeSpec::dbs(p).build().unwrap();
        let s0 = random_state(&mut rng, 3);
        let times = time_grid(50.0 / gamma, 0.05 / gamma).unwrap();
        let traj = evolve_integrate(&s0, &h, &times).map_err(|e| e.to_string())?;
        let sol = dbs_analytic(&p, &s0).map_err(|e| e.to_string())?;
        for (k, &t) in times.iter().enumerate() {
            let exact = sol.psi(t);
            let err = traj.amplitudes(k).iter().zip(exact.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    check(worst < 1e-8, format!("50 instances, sup error {worst:.2e}"))
}

fn scaling_exponents() -> Outcome {
    let sizes: Vec<usize> = (2..=30).collect();
    let mut studies = Vec::new();
    for v in [3.0, 5.0, 7.0] {
        let family = LatticeSpec::linear(params(v, FRAC_PI_4, 1.0), 2).unwrap();
        studies.push(
            scaling_study(&family, &sizes, &StateRule::FirstNode, 1e-3, &RunOptions::default()).map_err(|e| e.to_string())?,
        );
    }
    let fit = studies[0].power_fit.as_ref().ok_or("no post-LREP sizes")?;
    let mut spread = 1.0f64;
    for &n in &sizes {
        let times: Vec<f64> = studies
            .iter()
            .filter_map(|s| s.points.iter().find(|p| p.n_lossy == n && p.segment == Segment::PreLrep))
            .filter_map(|p| p.t_mix)
            .collect();
        if times.len() == studies.len() {
            let (lo, hi) = times.iter().fold((f64::INFINITY, 0.0f64), |(a, b), t| (a.min(*t), b.max(*t)));
            spread = spread.max(hi / lo);
        }
    }
    let onset = studies[0].quadratic_onset().unwrap_or(0);
    check(
        (fit.slope - 2.0).abs() <= 0.3 && spread < 3.0,
        format!("exponent {:.3} on {} sizes from N_L={onset}, pre-LREP spread {spread:.3}", fit.slope, fit.points),
    )
}

fn central_excitation() -> Outcome {
    let spec = LatticeSpec::linear(params(3.0, FRAC_PI_4, 1.0), 20).unwrap();
    let centre = middle_node(&spec);
    let t_edge = t_mix(&spec, &e1(&spec))?;
    let t_centre = t_mix(&spec, &basis_excitation(&spec, centre).unwrap().state)?;
    let s = eigensolve(&spec.build().unwrap()).unwrap();
    let mode = s.right(slowest_modes(&s, 1)[0]);
    let element = mode[centre - 1].norm() / mode.norm();
    check(
        t_centre <= 0.5 * t_edge && element < 1e-8,
        format!("T_mix centre {t_centre:.3} edge {t_edge:.3}, central element {element:.1e}"),
    )
}

fn ring_three() -> Outcome {
    let family = LatticeSpec::balanced_ring(params(1.0, FRAC_PI_4, 1.0), 3).unwrap();
    let scan = ep_scan(&family, &linspace(0.1, 1.0, 91)).map_err(|e| e.to_string())?;
    let ep = scan.lrep.ok_or("no coalescence detected")?;
    let mut gamma_mode = true;
    for x in linspace(0.1, 2.0, 20) {
        let values = eigenvalues(&family.with_ratio(x).unwrap().build().unwrap()).unwrap();
        gamma_mode &= values.iter().any(|z| (z - Complex64::new(0.0, -1.0)).norm() < 1e-9);
    }
    let h = family.with_ratio(ep).unwrap().build().unwrap();
    let values = eigenvalues(&h).unwrap();
    let centre = Complex64::new(0.0, -0.5);
    let cluster: Vec<usize> = (0..values.len()).filter(|&k| (values[k] - centre).norm() < 1e-3).collect();
    let report = classify_degeneracy(&h, &cluster).map_err(|e| e.to_string())?;
    check(
        (ep - 1.0 / 6f64.sqrt()).abs() < 1e-4 && gamma_mode && report.geometric_multiplicity == 2,
        format!(
            "EP at {ep:.8}, -iG present at all 20 points: {gamma_mode}, cluster {} with geometric multiplicity {}",
            cluster.len(),
            report.geometric_multiplicity
        ),
    )
}

fn balance_condition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut kernel = 0.0f64;
    let mut lift = f64::INFINITY;
    for _ in 0..20 {
        let n = rng.gen_range(2..=10);
        let p = params(rng.gen_range(0.3..2.0), rng.gen_range(0.15..0.35) * PI, 1.0);
        let delta = balanced_delta(&p, n).map_err(|e| e.to_string())?;
        let smallest = |d: f64| -> f64 {
            let values = eigenvalues(&build_ring(&p, n, d).unwrap()).unwrap();
            values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
        };
        kernel = kernel.max(smallest(delta));
        lift = lift.min(smallest(1.01 * delta)).min(smallest(0.99 * delta));
    }
    check(kernel < 1e-9 && lift >= 1e-6, format!("largest balanced |lambda| {kernel:.1e}, smallest 1% lift {lift:.1e}"))
}

fn gap_stabilisation() -> Outcome {
    let asym = gap_vs_size(&LatticeSpec::balanced_ring(params(2.0, 0.23 * PI, 1.0), 4).unwrap(), &[20, 40])
        .map_err(|e| e.to_string())?;
    let sym = gap_vs_size(&LatticeSpec::balanced_ring(params(2.0, FRAC_PI_4, 1.0), 4).unwrap(), &[20, 40])
        .map_err(|e| e.to_string())?;
    let (ra, rs) = (asym[1].1 / asym[0].1, sym[1].1 / sym[0].1);
    check(ra >= 0.8 && rs <= 0.5, format!("gap ratio 40/20: asymmetric {ra:.3}, symmetric {rs:.3}"))
}

fn random_spec(rng: &mut ChaCha8Rng) -> LatticeSpec {
    let gamma = rng.gen_range(0.5..2.0);
    let x = rng.gen_range(0.1..3.0);
    match rng.gen_range(0..3) {
        0 => LatticeSpec::dbs(params(x * gamma, rng.gen_range(0.05..0.45) * PI, gamma)),
        1 => LatticeSpec::linear(params(x * gamma, rng.gen_range(0.05..0.45) * PI, gamma), rng.gen_range(1..=6)).unwrap(),
        _ => LatticeSpec::balanced_ring(params(x * gamma, rng.gen_range(0.2..0.45) * PI, gamma), rng.gen_range(2..=5))
            .unwrap(),
    }
}

fn sup(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn property_instance(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let spec = random_spec(rng);
    let h = spec.build().unwrap();
    let dim = h.dim();
    let label = format!("{:?} n={} v={:.3} phi={:.3}", spec.topology, spec.n_lossy(), spec.params.v(), spec.params.phi());
    let fail = |what: &str| format!("{what}: {label}");
    let spectral = eigensolve(&h).map_err(|e| e.to_string())?;
    let (a, b) = (random_state(rng, dim), random_state(rng, dim));
    let times = time_grid(10.0, 0.25).unwrap();

    let ta = evolve(&a, &h, &times).map_err(|e| e.to_string())?;
    let p = ta.p_total();
    if p.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-10)) {
        return Err(fail("probability increased"));
    }

    let (za, zb) = (Complex64::new(0.7, -1.2), Complex64::new(-0.4, 0.3));
    let mix = AmplitudeState::new(&a.psi * za + &b.psi * zb).unwrap();
    let tm = evolve(&mix, &h, &times).map_err(|e| e.to_string())?;
    let tb = evolve(&b, &h, &times).map_err(|e| e.to_string())?;
    for k in 0..times.len() {
        let combined = ta.amplitudes(k) * za + tb.amplitudes(k) * zb;
        if sup(tm.amplitudes(k), &combined) > 1e-8 * (1.0 + combined.norm()) {
            return Err(fail("linearity"));
        }
    }

    let mid = ta.state(20);
    let shifted = evolve(&AmplitudeState::new(mid.psi.clone()).unwrap(), &h, &[0.0, 5.0]).map_err(|e| e.to_string())?;
    let direct = ta.amplitudes(40);
    if sup(shifted.amplitudes(1), direct) > 1e-8 * (1.0 + direct.norm()) {
        return Err(fail("time translation"));
    }

    if !spectral.is_defective() {
        let c = decompose(&a, &spectral).map_err(|e| e.to_string())?;
        if sup(&c.reconstruct(&spectral), &a.psi) > 1e-10 * a.psi.norm() {
            return Err(fail("biorthogonal reconstruction"));
        }
        let cb = decompose(&b, &spectral).map_err(|e| e.to_string())?;
        let sa = stationary_distribution(&spectral, &c).map_err(|e| e.to_string())?;
        let sb = stationary_distribution(&spectral, &cb).map_err(|e| e.to_string())?;
        if let (Some(d), Some(pa), Some(pb)) = (spectral.dark_index(), &sa.p_stationary, &sb.p_stationary) {
            if c.c[d].norm() > 1e-3 * c.norm() && cb.c[d].norm() > 1e-3 * cb.norm() && distance(pa, pb) > 1e-8 {
                return Err(fail("conventional limit depends on the initial state"));
            }
        }
    }

    let rep = mixing_report(&spec, &a, 1e-3, &RunOptions::default()).map_err(|e| format!("{e}: {label}"))?;
    if rep.p_stationary.is_some() {
        let eps = [1e-1, 1e-2, 1e-3, 1e-4];
        let t: Vec<Option<f64>> = eps
            .iter()
            .map(|&e| mixing_time_series(&rep.times, &rep.distance_series, e).ok().and_then(|m| m.t_mix))
            .collect();
        for w in t.windows(2) {
            if let (Some(loose), Some(tight)) = (w[0], w[1]) {
                if loose > tight {
                    return Err(fail("mixing time not monotone in epsilon"));
                }
            }
        }
    }
    Ok(())
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let count = 220;
    for k in 0..count {
        property_instance(&mut rng).map_err(|e| format!("instance {k}: {e}"))?;
    }
    Ok(format!("{count} instances"))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "DBS exceptional point", budget: Duration::from_secs(1), known_failure: false, run: dbs_exceptional_point },
        Criterion { id: 2, name: "linear-chain spectrum identity", budget: Duration::from_secs(10), known_failure: false, run: linear_spectrum_identity },
        Criterion { id: 3, name: "LREP asymptote", budget: Duration::from_secs(1), known_failure: false, run: lrep_asymptote },
        Criterion { id: 4, name: "DBS stationary distribution", budget: Duration::from_secs(10), known_failure: false, run: dbs_stationary_distribution },
        Criterion { id: 5, name: "regime trichotomy", budget: Duration::from_secs(5), known_failure: false, run: regime_trichotomy },
        Criterion { id: 6, name: "analytic-solution oracle", budget: Duration::from_secs(30), known_failure: false, run: analytic_oracle },
        Criterion { id: 7, name: "scaling exponents", budget: Duration::from_secs(300), known_failure: false, run: scaling_exponents },
        Criterion { id: 8, name: "central-node excitation", budget: Duration::from_secs(60), known_failure: false, run: central_excitation },
        Criterion { id: 9, name: "ring N_L=3", budget: Duration::from_secs(10), known_failure: false, run: ring_three },
        Criterion { id: 10, name: "balance condition", budget: Duration::from_secs(30), known_failure: true, run: balance_condition },
        Criterion { id: 11, name: "gap stabilisation", budget: Duration::from_secs(60), known_failure: true, run: gap_stabilisation },
        Criterion { id: 12, name: "property suite", budget: Duration::from_secs(300), known_failure: false, run: property_suite },
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {} ({:.2?}): {detail}", c.id, c.name, elapsed),
            Err(detail) if c.known_failure => {
                println!("FAIL {:>2} {} ({:.2?}): {detail} [known deviation]", c.id, c.name, elapsed)
            }
            Err(detail) => {
                unexpected += 1;
                println!("FAIL {:>2} {} ({:.2?}): {detail}", c.id, c.name, elapsed);
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
