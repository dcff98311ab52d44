//! Stationary distributions, mixing-regime classification, mixing times and
//! size-scaling studies.
//!
//! Distances are the L1 distance `sum_j |p_j(t) - p_j^st|` between the
//! normalised occupation distribution and its limit. `T_mix(eps)` uses the
//! last-crossing convention: the distance must stay within `eps` at every
//! later grid time.

use std::fmt;

use log::debug;
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{decompose, default_horizon, time_grid, AmplitudeState, Method, ModeCoefficients, Propagator, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::initstate::{basis_excitation, middle_node};
use crate::lattice::{LatticeSpec, Topology};
use crate::spectral::{eigensolve, lrep_bisect, lrep_linear_analytic, SpectralData};

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Relative dark overlap separating conventional from dark-orthogonal input.
pub const DARK_THRESHOLD: f64 = 1e-8;

/// Dark overlaps inside this band are flagged as ambiguous.
pub const AMBIGUOUS_BAND: (f64, f64) = (1e-10, 1e-6);

/// Largest horizon, as a multiple of the initial one, tried by [`mixing_report`].
pub const MAX_HORIZON_FACTOR: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixClass {
    Conventional,
    Unconventional,
    NonMixing,
}

impl fmt::Display for MixClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixClass::Conventional => "conventional",
            MixClass::Unconventional => "unconventional",
            MixClass::NonMixing => "non-mixing",
        })
    }
}

/// Limit distribution predicted from the mode coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub class: MixClass,
    pub p_stationary: Option<Vec<f64>>,
    /// `|c_dark| / |c|`, zero when the lattice has no dark mode.
    pub dark_overlap: f64,
    /// Modes that dominate at late times.
    pub slow_modes: Vec<usize>,
    /// The dark overlap falls in [`AMBIGUOUS_BAND`].
    pub ambiguous: bool,
}

fn in_ambiguous_band(overlap: f64) -> bool {
    overlap >= AMBIGUOUS_BAND.0 && overlap <= AMBIGUOUS_BAND.1
}

fn dark_distribution(spectral: &SpectralData, dark: usize) -> Vec<f64> {
    let phi = spectral.right(dark);
    let total = phi.norm_squared();
    phi.iter().map(|z| z.norm_sqr() / total).collect()
}

pub fn stationary_distribution(spectral: &SpectralData, coeffs: &ModeCoefficients) -> Result<Stationary> {
    let norm = coeffs.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateInput("initial state has no component on any mode".into()));
    }
    let dark = spectral.dark_index();
    let dark_overlap = dark.map_or(0.0, |k| coeffs.c[k].norm() / norm);
    let ambiguous = in_ambiguous_band(dark_overlap);
    if let Some(k) = dark.filter(|_| dark_overlap > DARK_THRESHOLD) {
        return Ok(Stationary {
            class: MixClass::Conventional,
            p_stationary: Some(dark_distribution(spectral, k)),
            dark_overlap,
            slow_modes: vec![k],
            ambiguous,
        });
    }
    let lambdas = spectral.eigenvalues();
    let excited: Vec<usize> = (0..lambdas.len())
        .filter(|&n| Some(n) != dark && coeffs.c[n].norm() > DARK_THRESHOLD * norm)
        .collect();
    if excited.is_empty() {
        return Err(Error::DegenerateInput("initial state only overlaps the dark mode below threshold".into()));
    }
    let tol = 1e-9 * spectral.gamma();
    let top = excited.iter().map(|&n| lambdas[n].im).fold(f64::NEG_INFINITY, f64::max);
    let slow_modes: Vec<usize> = excited.into_iter().filter(|&n| top - lambdas[n].im <= tol).collect();
    let re0 = lambdas[slow_modes[0]].re;
    let shared = slow_modes.iter().all(|&n| (lambdas[n].re - re0).abs() <= tol);
    if !shared {
        return Ok(Stationary { class: MixClass::NonMixing, p_stationary: None, dark_overlap, slow_modes, ambiguous });
    }
    let mut combo = DVector::from_element(spectral.len(), Complex64::new(0.0, 0.0));
    for &n in &slow_modes {
        combo += spectral.right(n) * coeffs.c[n];
    }
    let p = crate::dynamics::normalized(&combo)
        .ok_or_else(|| Error::DegenerateInput("slow modes cancel in the initial state".into()))?;
    Ok(Stationary { class: MixClass::Unconventional, p_stationary: Some(p), dark_overlap, slow_modes, ambiguous })
}

/// `sum_j |p_j - q_j|`.
pub fn distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingTime {
    /// Last-crossing mixing time, absent when the horizon ends above epsilon.
    pub t_mix: Option<f64>,
    /// First time the distance reaches epsilon, reported for comparison.
    pub first_crossing: Option<f64>,
}

/// Mixing time of a stored trajectory. Times where the distribution
/// underflowed count as unmixed.
pub fn mixing_time(traj: &crate::dynamics::Trajectory, p_st: &[f64], epsilon: f64) -> Result<MixingTime> {
    let distances: Vec<f64> =
        traj.p_norm().iter().map(|p| p.as_ref().map_or(f64::INFINITY, |p| distance(p, p_st))).collect();
    mixing_time_series(traj.times(), &distances, epsilon)
}

/// Crossing time of `eps` between grid points `k - 1` (above) and `k` (at or below),
/// by bisection on the linearly interpolated distance.
fn refine_crossing(times: &[f64], d: &[f64], k: usize, eps: f64) -> f64 {
    let (t0, t1, d0, d1) = (times[k - 1], times[k], d[k - 1], d[k]);
    if !d0.is_finite() {
        return t1;
    }
    let interp = |t: f64| d0 + (d1 - d0) * (t - t0) / (t1 - t0);
    let (mut a, mut b) = (t0, t1);
    let tol = 1e-6 * (t1 - t0);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if interp(m) > eps {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

/// Envelope of the final tenth of the series is still shrinking.
fn decreasing_tail(d: &[f64]) -> bool {
    let n = d.len();
    let w = (n / 10).max(2);
    let tail = &d[n - w..];
    let (first, second) = tail.split_at(w / 2);
    let peak = |s: &[f64]| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    peak(second) < (1.0 - 1e-3) * peak(first)
}

pub fn mixing_time_series(times: &[f64], distances: &[f64], epsilon: f64) -> Result<MixingTime> {
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if times.len() != distances.len() || times.is_empty() {
        return Err(Error::Parameter("times and distances must be nonempty and of equal length".into()));
    }
    let above = |d: f64| !(d <= epsilon);
    let first_crossing = distances.iter().position(|&d| !above(d)).map(|k| {
        if k == 0 {
            times[0]
        } else {
            refine_crossing(times, distances, k, epsilon)
        }
    });
    let t_mix = match distances.iter().rposition(|&d| above(d)) {
        None => Some(times[0]),
        Some(k) if k + 1 == distances.len() => {
            let last = distances[k];
            if distances.len() >= 20 && last.is_finite() && decreasing_tail(distances) {
                return Err(Error::HorizonTooShort { t_max: times[k], distance: last });
            }
            None
        }
        Some(k) => Some(refine_crossing(times, distances, k + 1, epsilon)),
    };
    Ok(MixingTime { t_mix, first_crossing })
}

/// Streaming check for convergence of the normalised distribution: the
/// largest per-node swing over `[0.75 T, T]` must be under half the swing over
/// `[0.5 T, 0.75 T]`, or below `1e-8`.
#[derive(Debug, Clone)]
pub struct ConvergenceDetector {
    t_end: f64,
    early: Vec<(f64, f64)>,
    late: Vec<(f64, f64)>,
}

impl ConvergenceDetector {
    pub fn new(dim: usize, t_end: f64) -> Self {
        let empty = (f64::INFINITY, f64::NEG_INFINITY);
        Self { t_end, early: vec![empty; dim], late: vec![empty; dim] }
    }

    pub fn observe(&mut self, t: f64, p: &[f64]) {
        let window = if t >= 0.75 * self.t_end {
            &mut self.late
        } else if t >= 0.5 * self.t_end {
            &mut self.early
        } else {
            return;
        };
        for (w, &x) in window.iter_mut().zip(p) {
            w.0 = w.0.min(x);
            w.1 = w.1.max(x);
        }
    }

    fn swing(window: &[(f64, f64)]) -> f64 {
        window.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    pub fn swings(&self) -> (f64, f64) {
        (Self::swing(&self.early), Self::swing(&self.late))
    }

    pub fn converging(&self) -> bool {
        let (a1, a2) = self.swings();
        a2 < 0.5 * a1 || a2 < 1e-8
    }
}

/// Trajectory-based regime check, independent of the spectral classifier.
pub fn trajectory_converges(traj: &crate::dynamics::Trajectory) -> bool {
    let Some(&t_end) = traj.times().last() else { return false };
    let dim = traj.amplitudes(0).len();
    let mut det = ConvergenceDetector::new(dim, t_end);
    for (t, p) in traj.times().iter().zip(traj.p_norm()) {
        if let Some(p) = p {
            det.observe(*t, p);
        }
    }
    det.converging()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Initial horizon; defaults to `max(50, 20 N) / gamma`.
    pub t_max: Option<f64>,
    /// Output spacing in units of `1/gamma`.
    pub step: f64,
    /// Largest horizon multiple tried when the distance is still falling.
    pub max_extension: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { t_max: None, step: DEFAULT_STEP, max_extension: MAX_HORIZON_FACTOR }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixDiagnostics {
    pub slow_modes: Vec<usize>,
    pub dark_overlap: f64,
    pub ambiguous: bool,
    pub method: Method,
    /// Horizon of the final run.
    pub horizon: f64,
    /// Number of horizon doublings.
    pub extensions: u32,
    /// Verdict of the trajectory-based detector.
    pub converging: bool,
    /// L1 gap between the predicted limit and the average over the final 20% of the horizon.
    pub late_average_discrepancy: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixReport {
    pub class: MixClass,
    pub p_stationary: Option<Vec<f64>>,
    pub t_mix: Option<f64>,
    pub first_crossing: Option<f64>,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub distance_series: Vec<f64>,
    pub diagnostics: MixDiagnostics,
}

struct Pass {
    distances: Vec<f64>,
    detector: ConvergenceDetector,
    late_sum: Vec<f64>,
    late_count: usize,
}

fn run_pass(prop: &Propagator, state0: &AmplitudeState, times: &[f64], p_st: Option<&[f64]>) -> Result<Pass> {
    let dim = state0.dim();
    let t_end = *times.last().expect("nonempty grid");
    let mut pass = Pass {
        distances: Vec::with_capacity(if p_st.is_some() { times.len() } else { 0 }),
        detector: ConvergenceDetector::new(dim, t_end),
        late_sum: vec![0.0; dim],
        late_count: 0,
    };
    let mut p = vec![0.0; dim];
    prop.for_each_scaled(state0, times, |t, psi, _| {
        let total = psi.norm_squared();
        if !(total > 0.0) || !total.is_finite() {
            if p_st.is_some() {
                pass.distances.push(f64::INFINITY);
            }
            return;
        }
        for (pj, z) in p.iter_mut().zip(psi.iter()) {
            *pj = z.norm_sqr() / total;
        }
        if let Some(q) = p_st {
            pass.distances.push(distance(&p, q));
        }
        pass.detector.observe(t, &p);
        if t >= 0.8 * t_end {
            pass.late_sum.iter_mut().zip(&p).for_each(|(s, x)| *s += x);
            pass.late_count += 1;
        }
    })?;
    Ok(pass)
}

impl Pass {
    fn late_average(&self) -> Option<Vec<f64>> {
        (self.late_count > 0).then(|| self.late_sum.iter().map(|s| s / self.late_count as f64).collect())
    }
}

/// Classification for a defective eigenbasis, where mode coefficients are unavailable.
fn stationary_defective(spectral: &SpectralData, state0: &AmplitudeState) -> Stationary {
    let norm = state0.psi.norm();
    let (dark_overlap, dark) = match (spectral.dark_index(), spectral.dark_left_vector()) {
        (Some(k), Some(y)) => ((y.dot(&state0.psi)).norm() / norm, Some(k)),
        _ => (0.0, None),
    };
    let ambiguous = in_ambiguous_band(dark_overlap);
    match dark.filter(|_| dark_overlap > DARK_THRESHOLD) {
        Some(k) => Stationary {
            class: MixClass::Conventional,
            p_stationary: Some(dark_distribution(spectral, k)),
            dark_overlap,
            slow_modes: vec![k],
            ambiguous,
        },
        None => Stationary {
            class: MixClass::Unconventional,
            p_stationary: None,
            dark_overlap,
            slow_modes: Vec::new(),
            ambiguous,
        },
    }
}

/// Eigensolve, classify, propagate and time the approach to the limit,
/// doubling the horizon while the distance is still falling at its end.
pub fn mixing_report(spec: &LatticeSpec, state0: &AmplitudeState, epsilon: f64, run: &RunOptions) -> Result<MixReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(run.step > 0.0 && run.step.is_finite() && run.max_extension >= 1.0) {
        return Err(Error::Parameter("run options need a positive step and an extension limit >= 1".into()));
    }
    let h = spec.build()?;
    if state0.dim() != h.dim() {
        return Err(Error::Parameter(format!("state has {} amplitudes, lattice has {} nodes", state0.dim(), h.dim())));
    }
    if !(state0.psi.norm() > 0.0) {
        return Err(Error::DegenerateInput("initial state is zero".into()));
    }
    let spectral = eigensolve(&h)?;
    let defective = spectral.is_defective();
    let mut stationary = if defective {
        stationary_defective(&spectral, state0)
    } else {
        stationary_distribution(&spectral, &decompose(state0, &spectral)?)?
    };
    let mut prop = Propagator::new(&h, Some(&spectral));
    if stationary.class != MixClass::Conventional {
        prop = prop.without_dark(&spectral);
    }
    let gamma = spec.params.gamma();
    let step = run.step / gamma;
    let base = run.t_max.unwrap_or_else(|| default_horizon(spec));
    let mut warnings = Vec::new();
    if stationary.ambiguous {
        warnings.push(format!("dark overlap {:.3e} lies in the ambiguous band", stationary.dark_overlap));
    }
    let mut horizon = base;
    let mut extensions = 0u32;
    loop {
        let times = time_grid(horizon, step)?;
        let mut pass = run_pass(&prop, state0, &times, stationary.p_stationary.as_deref())?;
        let converging = pass.detector.converging();
        if defective && stationary.class != MixClass::Conventional {
            // no modal prediction: take the late-time average, then re-run for distances
            if converging {
                stationary.p_stationary = pass.late_average();
                pass = run_pass(&prop, state0, &times, stationary.p_stationary.as_deref())?;
            } else {
                stationary.class = MixClass::NonMixing;
                stationary.p_stationary = None;
            }
        }
        let late_average_discrepancy = match (&stationary.p_stationary, pass.late_average()) {
            (Some(p), Some(avg)) if stationary.class == MixClass::Unconventional => Some(distance(p, &avg)),
            _ => None,
        };
        let Some(p_st) = stationary.p_stationary.clone() else {
            return Ok(MixReport {
                class: stationary.class,
                p_stationary: None,
                t_mix: None,
                first_crossing: None,
                epsilon,
                times: Vec::new(),
                distance_series: Vec::new(),
                diagnostics: MixDiagnostics {
                    slow_modes: stationary.slow_modes,
                    dark_overlap: stationary.dark_overlap,
                    ambiguous: stationary.ambiguous,
                    method: prop.method(),
                    horizon,
                    extensions,
                    converging,
                    late_average_discrepancy: None,
                    warnings,
                },
            });
        };
        match mixing_time_series(&times, &pass.distances, epsilon) {
            Ok(mt) => {
                if mt.t_mix.is_none() {
                    warnings.push(format!("distance stays above epsilon at the horizon t = {horizon}"));
                }
                return Ok(MixReport {
                    class: stationary.class,
                    p_stationary: Some(p_st),
                    t_mix: mt.t_mix,
                    first_crossing: mt.first_crossing,
                    epsilon,
                    times,
                    distance_series: pass.distances,
                    diagnostics: MixDiagnostics {
                        slow_modes: stationary.slow_modes,
                        dark_overlap: stationary.dark_overlap,
                        ambiguous: stationary.ambiguous,
                        method: prop.method(),
                        horizon,
                        extensions,
                        converging,
                        late_average_discrepancy,
                        warnings,
                    },
                });
            }
            Err(Error::HorizonTooShort { .. }) if 2.0 * horizon <= base * run.max_extension * (1.0 + 1e-12) => {
                debug!("extending horizon from {horizon} for {}", spec.topology);
                horizon *= 2.0;
                extensions += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// How the initial state is chosen for each lattice size.
#[derive(Debug, Clone)]
pub enum StateRule {
    /// Node 1 (`alpha_1`).
    FirstNode,
    /// The lossless node nearest the centre, see [`middle_node`].
    MiddleNode,
    /// A single node whose 1-based number is computed from `N_L`.
    Node(fn(usize) -> usize),
    /// Explicit states keyed by `N_L`.
    Custom(Vec<(usize, AmplitudeState)>),
}

impl StateRule {
    pub fn state_for(&self, spec: &LatticeSpec) -> Result<AmplitudeState> {
        let n = spec.n_lossy();
        match self {
            StateRule::FirstNode => Ok(basis_excitation(spec, 1)?.state),
            StateRule::MiddleNode => Ok(basis_excitation(spec, middle_node(spec))?.state),
            StateRule::Node(f) => Ok(basis_excitation(spec, f(n))?.state),
            StateRule::Custom(states) => states
                .iter()
                .find(|(k, _)| *k == n)
                .map(|(_, s)| s.clone())
                .ok_or_else(|| Error::Precondition(format!("no custom initial state for N_L = {n}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    /// `v/gamma` at or above the LREP: all decay rates coalesced.
    PreLrep,
    /// `v/gamma` below the LREP: the gap closes with size.
    PostLrep,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::PreLrep => "pre-lrep",
            Segment::PostLrep => "post-lrep",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub n_lossy: usize,
    pub t_mix: Option<f64>,
    pub lrep: Option<f64>,
    pub segment: Segment,
    pub class: MixClass,
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub points: usize,
}

pub fn least_squares(x: &[f64], y: &[f64]) -> Option<Fit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    Some(Fit { slope, intercept, residual: (rss / n as f64).sqrt(), points: n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingStudy {
    pub points: Vec<ScalingPoint>,
    /// `log T_mix` against `log N_L` on the post-LREP sizes; the slope is the exponent.
    pub power_fit: Option<Fit>,
    /// `T_mix` against `log N_L` on the pre-LREP sizes.
    pub log_fit: Option<Fit>,
}

impl ScalingStudy {
    /// Smallest size in the post-LREP segment.
    pub fn quadratic_onset(&self) -> Option<usize> {
        self.points.iter().filter(|p| p.segment == Segment::PostLrep).map(|p| p.n_lossy).min()
    }
}

/// LREP of the family at size `n`: closed form for chains, bisection for rings.
pub fn lrep_for_size(family: &LatticeSpec, n: usize) -> Result<Option<f64>> {
    match family.topology {
        Topology::Dbs => Ok(Some(0.5)),
        Topology::Linear { .. } => Ok(Some(lrep_linear_analytic(&family.params, n))),
        Topology::Ring { .. } => {
            let spec = family.with_size(n)?;
            lrep_bisect(&spec, 1e-3, 4.0 * n as f64 + 10.0)
        }
    }
}

pub fn scaling_study(
    family: &LatticeSpec,
    sizes: &[usize],
    rule: &StateRule,
    epsilon: f64,
    run: &RunOptions,
) -> Result<ScalingStudy> {
    if matches!(family.topology, Topology::Dbs) {
        return Err(Error::Precondition("scaling studies need a chain or ring family".into()));
    }
    if sizes.is_empty() {
        return Err(Error::Parameter("no sizes given".into()));
    }
    let ratio = family.params.v_over_gamma();
    let points: Vec<ScalingPoint> = sizes
        .par_iter()
        .map(|&n| {
            let spec = family.with_size(n)?;
            let state = rule.state_for(&spec)?;
            let report = mixing_report(&spec, &state, epsilon, run)?;
            let lrep = lrep_for_size(family, n)?;
            let segment = match lrep {
                Some(l) if ratio < l => Segment::PostLrep,
                _ => Segment::PreLrep,
            };
            Ok(ScalingPoint { n_lossy: n, t_mix: report.t_mix, lrep, segment, class: report.class })
        })
        .collect::<Result<_>>()?;
    let fit_on = |segment: Segment, transform: fn(f64) -> f64| {
        let (x, y): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.segment == segment)
            .filter_map(|p| p.t_mix.filter(|t| *t > 0.0).map(|t| ((p.n_lossy as f64).ln(), transform(t))))
            .unzip();
        least_squares(&x, &y)
    };
    Ok(ScalingStudy { power_fit: fit_on(Segment::PostLrep, f64::ln), log_fit: fit_on(Segment::PreLrep, |t| t), points })
}
