//! Time evolution of amplitude vectors under `d psi/dt = -i H psi`.
//!
//! Two propagators are provided: an exact sum over eigenmodes, usable when the
//! eigenbasis is well conditioned, and an adaptive Dormand-Prince 5(4)
//! integrator that works everywhere, including at exceptional points.
//! [`Propagator`] picks between them from the eigenbasis condition number.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{CouplingParams, Hamiltonian, LatticeSpec, Topology};
use crate::spectral::{eigensolve, SpectralData, DEFECTIVE_CONDITION};

/// Local relative tolerance of the integrator.
pub const INTEGRATOR_RTOL: f64 = 1e-10;

/// Below this total probability the normalised distribution is not reported.
pub const UNDERFLOW_PROBABILITY: f64 = 1e-300;

/// Default output spacing in units of `1/gamma`.
pub const DEFAULT_STEP: f64 = 0.01;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes `psi_j` at time `t`, in the lattice's interleaved node order.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState {
    pub t: f64,
    pub psi: DVector<Complex64>,
}

impl AmplitudeState {
    pub fn new(psi: DVector<Complex64>) -> Result<Self> {
        Self::at(0.0, psi)
    }

    pub fn at(t: f64, psi: DVector<Complex64>) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::Parameter(format!("state time must be finite, got {t}")));
        }
        if psi.is_empty() {
            return Err(Error::Parameter("amplitude vector is empty".into()));
        }
        if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Parameter("amplitude vector has non-finite entries".into()));
        }
        Ok(Self { t, psi })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_iterator(values.len(), values.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn p_total(&self) -> f64 {
        self.psi.norm_squared()
    }

    /// `p_j = |psi_j|^2 / P_total`, or `None` once `P_total` underflows.
    pub fn distribution(&self) -> Option<Vec<f64>> {
        normalized(&self.psi)
    }

    /// Same state scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.psi.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateInput("zero state cannot be normalised".into()));
        }
        Ok(Self { t: self.t, psi: &self.psi / Complex64::new(norm, 0.0) })
    }
}

pub(crate) fn normalized(psi: &DVector<Complex64>) -> Option<Vec<f64>> {
    let total = psi.norm_squared();
    if !(total > UNDERFLOW_PROBABILITY) {
        return None;
    }
    Some(psi.iter().map(|z| z.norm_sqr() / total).collect())
}

/// States sampled on a strictly increasing time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<Complex64>>,
    p_total: Vec<f64>,
    p_norm: Vec<Option<Vec<f64>>>,
    method: Method,
}

impl Trajectory {
    fn with_capacity(n: usize, method: Method) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            p_total: Vec::with_capacity(n),
            p_norm: Vec::with_capacity(n),
            method,
        }
    }

    fn push(&mut self, t: f64, psi: &DVector<Complex64>) {
        self.times.push(t);
        self.p_total.push(psi.norm_squared());
        self.p_norm.push(normalized(psi));
        self.states.push(psi.clone());
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn amplitudes(&self, k: usize) -> &DVector<Complex64> {
        &self.states[k]
    }

    pub fn state(&self, k: usize) -> AmplitudeState {
        AmplitudeState { t: self.times[k], psi: self.states[k].clone() }
    }

    pub fn p_total(&self) -> &[f64] {
        &self.p_total
    }

    pub fn p_norm(&self) -> &[Option<Vec<f64>>] {
        &self.p_norm
    }

    pub fn last(&self) -> Option<AmplitudeState> {
        self.len().checked_sub(1).map(|k| self.state(k))
    }

    /// Which propagator produced the trajectory.
    pub fn method(&self) -> Method {
        self.method
    }
}

/// Per-mode coefficients `c_n = y_n^T psi(0)` in the biorthogonal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    pub c: DVector<Complex64>,
    pub max_abs: f64,
}

impl ModeCoefficients {
    pub fn norm(&self) -> f64 {
        self.c.norm()
    }

    /// `sum_n c_n phi_n`.
    pub fn reconstruct(&self, spectral: &SpectralData) -> DVector<Complex64> {
        spectral.right_vectors() * &self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Integrator,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Spectral => "spectral",
            Method::Integrator => "integrator",
        })
    }
}

fn check_dim(state0: &AmplitudeState, dim: usize) -> Result<()> {
    if state0.dim() != dim {
        return Err(Error::Parameter(format!("state has {} amplitudes but the lattice has {dim} nodes", state0.dim())));
    }
    Ok(())
}

fn check_times(t0: f64, times: &[f64]) -> Result<()> {
    if let Some(bad) = times.iter().find(|t| !t.is_finite()) {
        return Err(Error::Parameter(format!("non-finite output time {bad}")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("output times must be strictly increasing".into()));
    }
    if let Some(&first) = times.first() {
        if first < t0 {
            return Err(Error::Parameter(format!("output time {first} precedes the initial time {t0}")));
        }
    }
    Ok(())
}

fn conditioning_error(spectral: &SpectralData) -> Error {
    Error::Conditioning { condition: spectral.eigbasis_condition(), threshold: DEFECTIVE_CONDITION }
}

pub fn decompose(state0: &AmplitudeState, spectral: &SpectralData) -> Result<ModeCoefficients> {
    if spectral.is_defective() {
        return Err(conditioning_error(spectral));
    }
    if state0.dim() != spectral.len() {
        return Err(Error::Parameter(format!(
            "state has {} amplitudes but the spectrum has {} modes",
            state0.dim(),
            spectral.len()
        )));
    }
    let c = spectral.left_vectors() * &state0.psi;
    let max_abs = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(ModeCoefficients { c, max_abs })
}

/// `psi(t) = sum_n c_n exp(-i lambda_n (t - t0)) phi_n` on the grid.
pub fn evolve_spectral(state0: &AmplitudeState, spectral: &SpectralData, times: &[f64]) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(times.len(), Method::Spectral);
    spectral_each(state0, spectral, times, |t, psi| traj.push(t, psi))?;
    Ok(traj)
}

fn spectral_each<F: FnMut(f64, &DVector<Complex64>)>(
    state0: &AmplitudeState,
    spectral: &SpectralData,
    times: &[f64],
    mut f: F,
) -> Result<()> {
    spectral_scaled(state0, spectral, None, times, |t, psi, log_scale| f(t, &rescale(psi, log_scale)))
}

fn rescale(psi: &DVector<Complex64>, log_scale: f64) -> DVector<Complex64> {
    if log_scale == 0.0 {
        psi.clone()
    } else {
        psi * Complex64::new(log_scale.exp(), 0.0)
    }
}

/// Relative weight below which a decayed mode is dropped from the sum.
const NEGLIGIBLE_MODE: f64 = 1e-18;

fn spectral_scaled<F: FnMut(f64, &DVector<Complex64>, f64)>(
    state0: &AmplitudeState,
    spectral: &SpectralData,
    drop: Option<usize>,
    times: &[f64],
    mut f: F,
) -> Result<()> {
    check_times(state0.t, times)?;
    let mut coeffs = decompose(state0, spectral)?;
    if let Some(k) = drop {
        coeffs.c[k] = ZERO;
    }
    let lambdas = spectral.eigenvalues();
    let v = spectral.right_vectors();
    let kappa = lambdas
        .iter()
        .zip(coeffs.c.iter())
        .filter(|(_, c)| **c != ZERO)
        .map(|(l, _)| l.im)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut weights = vec![ZERO; lambdas.len()];
    let mut psi = DVector::from_element(v.nrows(), ZERO);
    for &t in times {
        let dt = t - state0.t;
        if kappa == f64::NEG_INFINITY {
            psi.fill(ZERO);
            f(t, &psi, 0.0);
            continue;
        }
        if dt == 0.0 && drop.is_none() {
            f(t, &state0.psi, 0.0);
            continue;
        }
        let mut largest = 0.0f64;
        for (k, l) in lambdas.iter().enumerate() {
            let c = coeffs.c[k];
            weights[k] = if c == ZERO { ZERO } else { c * (Complex64::new(0.0, -l.re * dt) + (l.im - kappa) * dt).exp() };
            largest = largest.max(weights[k].norm());
        }
        psi.fill(ZERO);
        let cutoff = NEGLIGIBLE_MODE * largest;
        for (k, w) in weights.iter().enumerate() {
            if w.norm() > cutoff {
                psi.axpy(*w, &v.column(k), Complex64::new(1.0, 0.0));
            }
        }
        f(t, &psi, kappa * dt);
    }
    Ok(())
}

/// Adaptive Dormand-Prince 5(4) integration, landing exactly on each output time.
pub fn evolve_integrate(state0: &AmplitudeState, h: &Hamiltonian, times: &[f64]) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(times.len(), Method::Integrator);
    integrate_each(state0, h, times, |t, psi| traj.push(t, psi))?;
    Ok(traj)
}

struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    /// Stores the nonzeros of `-i H`.
    fn new(h: &Hamiltonian) -> Self {
        let m = h.matrix();
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                if z != ZERO {
                    entries.push((r, c, -I * z));
                }
            }
        }
        Self { dim: m.nrows(), entries }
    }

    fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for &(r, c, z) in &self.entries {
            out[r] += z * y[c];
        }
    }

    fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0; self.dim];
        for &(r, _, z) in &self.entries {
            rows[r] += z.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Stepper {
    op: SparseOperator,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl Stepper {
    fn new(h: &Hamiltonian) -> Self {
        let n = h.dim();
        let z = || vec![ZERO; n];
        Self { op: SparseOperator::new(h), k: [z(), z(), z(), z(), z(), z(), z()], stage: z(), y_new: z() }
    }

    fn combine(&mut self, y: &[Complex64], h: f64, coeffs: &[(usize, f64)]) {
        for i in 0..y.len() {
            let mut acc = ZERO;
            for &(j, a) in coeffs {
                acc += self.k[j][i] * a;
            }
            self.stage[i] = y[i] + acc * h;
        }
    }

    /// One trial step from `y` (with `k[0] = f(y)`); returns the scaled error norm.
    fn attempt(&mut self, y: &[Complex64], h: f64) -> f64 {
        let rows: [&[(usize, f64)]; 5] = [
            &[(0, A21)],
            &[(0, A31), (1, A32)],
            &[(0, A41), (1, A42), (2, A43)],
            &[(0, A51), (1, A52), (2, A53), (3, A54)],
            &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
        ];
        for (s, row) in rows.iter().enumerate() {
            self.combine(y, h, row);
            self.op.apply(&self.stage, &mut self.k[s + 1]);
        }
        self.combine(y, h, &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)]);
        self.y_new.copy_from_slice(&self.stage);
        self.op.apply(&self.y_new, &mut self.k[6]);
        let scale_y = y.iter().chain(self.y_new.iter()).map(|z| z.norm()).fold(0.0, f64::max);
        let sc = INTEGRATOR_RTOL * scale_y + f64::MIN_POSITIVE;
        let mut worst = 0.0f64;
        for i in 0..y.len() {
            let e = self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7;
            worst = worst.max((e * h).norm() / sc);
        }
        worst
    }
}

fn integrate_each<F: FnMut(f64, &DVector<Complex64>)>(
    state0: &AmplitudeState,
    h: &Hamiltonian,
    times: &[f64],
    mut f: F,
) -> Result<()> {
    integrate_scaled(state0, h, None, times, |t, psi, log_scale| f(t, &rescale(psi, log_scale)))
}

/// Renormalisation threshold keeping long decays away from underflow.
const RENORMALIZE_BELOW: f64 = 1e-100;

fn integrate_scaled<F: FnMut(f64, &DVector<Complex64>, f64)>(
    state0: &AmplitudeState,
    h: &Hamiltonian,
    projector: Option<&Projector>,
    times: &[f64],
    mut f: F,
) -> Result<()> {
    check_dim(state0, h.dim())?;
    check_times(state0.t, times)?;
    let mut stepper = Stepper::new(h);
    let mut y: Vec<Complex64> = state0.psi.iter().copied().collect();
    if let Some(p) = projector {
        p.remove(&mut y);
    }
    let mut t = state0.t;
    let mut log_scale = 0.0;
    let rate = stepper.op.inf_norm().max(f64::MIN_POSITIVE);
    let mut step = (INTEGRATOR_RTOL.powf(0.2) / rate).min(1.0);
    stepper.op.apply(&y, &mut stepper.k[0]);
    let mut out = DVector::from_element(y.len(), ZERO);
    for &target in times {
        while t < target {
            let remaining = target - t;
            let last = step >= remaining;
            let h_try = if last { remaining } else { step };
            if h_try <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::Stiffness { t, h: h_try });
            }
            let err = stepper.attempt(&y, h_try);
            if !err.is_finite() {
                return Err(Error::Stiffness { t, h: h_try });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { target } else { t + h_try };
                std::mem::swap(&mut y, &mut stepper.y_new);
                stepper.k.swap(0, 6);
                if !last {
                    step = h_try * factor;
                } else if factor < 1.0 {
                    step = step.min(h_try * factor);
                }
                let size = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if size > 0.0 && size < RENORMALIZE_BELOW {
                    y.iter_mut().for_each(|z| *z /= size);
                    stepper.k[0].iter_mut().for_each(|z| *z /= size);
                    log_scale += size.ln();
                }
            } else {
                step = h_try * factor;
                if step <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Stiffness { t, h: step });
                }
            }
        }
        if let Some(p) = projector {
            p.remove(&mut y);
            stepper.op.apply(&y, &mut stepper.k[0]);
        }
        out.iter_mut().zip(&y).for_each(|(o, v)| *o = *v);
        f(target, &out, log_scale);
    }
    Ok(())
}

/// Oblique projector `1 - phi y^T` removing one conserved mode.
#[derive(Debug, Clone)]
struct Projector {
    right: DVector<Complex64>,
    left: DVector<Complex64>,
}

impl Projector {
    fn remove(&self, y: &mut [Complex64]) {
        let c: Complex64 = self.left.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(self.right.iter()).for_each(|(z, r)| *z -= c * r);
    }
}

/// Propagator chosen from the eigenbasis condition number.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    h: &'a Hamiltonian,
    spectral: Option<&'a SpectralData>,
    dark: Option<(usize, Projector)>,
}

impl<'a> Propagator<'a> {
    /// Uses the spectral sum when `spectral` is given and well conditioned,
    /// the integrator otherwise.
    pub fn new(h: &'a Hamiltonian, spectral: Option<&'a SpectralData>) -> Self {
        Self { h, spectral: spectral.filter(|s| !s.is_defective()), dark: None }
    }

    /// Drops the dark-mode component of every initial state, so rounding
    /// noise in a dark-orthogonal state cannot grow into a stationary part.
    pub fn without_dark(mut self, spectral: &SpectralData) -> Self {
        if let (Some(k), Some(left)) = (spectral.dark_index(), spectral.dark_left_vector()) {
            self.dark = Some((k, Projector { right: spectral.right(k), left }));
        }
        self
    }

    pub fn method(&self) -> Method {
        if self.spectral.is_some() {
            Method::Spectral
        } else {
            Method::Integrator
        }
    }

    /// Calls `f(t, psi(t))` for each output time without storing the states.
    pub fn for_each<F: FnMut(f64, &DVector<Complex64>)>(&self, state0: &AmplitudeState, times: &[f64], mut f: F) -> Result<()> {
        check_dim(state0, self.h.dim())?;
        self.for_each_scaled(state0, times, |t, psi, log_scale| f(t, &rescale(psi, log_scale)))
    }

    /// Like [`Propagator::for_each`] but hands out `psi(t) exp(-s)` together
    /// with the log-scale `s`, so normalised quantities survive long decays.
    pub fn for_each_scaled<F: FnMut(f64, &DVector<Complex64>, f64)>(
        &self,
        state0: &AmplitudeState,
        times: &[f64],
        f: F,
    ) -> Result<()> {
        check_dim(state0, self.h.dim())?;
        match self.spectral {
            Some(s) => spectral_scaled(state0, s, self.dark.as_ref().map(|d| d.0), times, f),
            None => integrate_scaled(state0, self.h, self.dark.as_ref().map(|d| &d.1), times, f),
        }
    }

    pub fn trajectory(&self, state0: &AmplitudeState, times: &[f64]) -> Result<Trajectory> {
        let mut traj = Trajectory::with_capacity(times.len(), self.method());
        self.for_each(state0, times, |t, psi| traj.push(t, psi))?;
        Ok(traj)
    }
}

/// Eigensolves `h` and evolves with whichever propagator suits it.
pub fn evolve(state0: &AmplitudeState, h: &Hamiltonian, times: &[f64]) -> Result<Trajectory> {
    let spectral = eigensolve(h).ok();
    Propagator::new(h, spectral.as_ref()).trajectory(state0, times)
}

/// `t_max = max(50, 20 N) / gamma` with `N` the number of nodes.
pub fn default_horizon(spec: &LatticeSpec) -> f64 {
    (50.0f64).max(20.0 * spec.dim() as f64) / spec.params.gamma()
}

/// `0, step, 2 step, ...` up to and including `t_max` (to rounding).
pub fn time_grid(t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max > 0.0 && step.is_finite() && step > 0.0) {
        return Err(Error::Parameter(format!("need positive horizon and step, got t_max={t_max}, step={step}")));
    }
    let n = (t_max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

/// Bright and dark amplitudes `(A, alpha)` of a DBS state.
pub fn collective_coords(state: &AmplitudeState, params: &CouplingParams) -> Result<(Complex64, Complex64)> {
    if state.dim() != 3 {
        return Err(Error::Precondition(format!(
            "collective coordinates need a 3-node beam splitter state, got {} nodes",
            state.dim()
        )));
    }
    let (s, c) = params.phi().sin_cos();
    let (a1, a2) = (state.psi[0], state.psi[2]);
    Ok((a1 * c + a2 * s, a2 * c - a1 * s))
}

/// Closed-form DBS evolution built from the bright/dark reduction.
#[derive(Debug, Clone)]
pub struct DbsSolution {
    params: CouplingParams,
    t0: f64,
    dark: Complex64,
    c_plus: Complex64,
    c_minus: Complex64,
    lambda_plus: Complex64,
    lambda_minus: Complex64,
}

impl DbsSolution {
    /// Dark amplitude `alpha`, constant in time.
    pub fn dark_amplitude(&self) -> Complex64 {
        self.dark
    }

    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        (self.lambda_plus, self.lambda_minus)
    }

    /// `(A(t), beta_1(t))`.
    pub fn bright(&self, t: f64) -> (Complex64, Complex64) {
        let dt = t - self.t0;
        let ep = (-I * self.lambda_plus * dt).exp();
        let em = (-I * self.lambda_minus * dt).exp();
        let beta = self.c_plus * ep - self.c_minus * em;
        let dbeta = -I * self.lambda_plus * self.c_plus * ep + I * self.lambda_minus * self.c_minus * em;
        let a = I / self.params.v() * (dbeta + beta * self.params.gamma());
        (a, beta)
    }

    /// Full amplitude vector `(alpha_1, beta_1, alpha_2)` at time `t`.
    pub fn psi(&self, t: f64) -> DVector<Complex64> {
        let (a, beta) = self.bright(t);
        let (s, c) = self.params.phi().sin_cos();
        DVector::from_vec(vec![a * c - self.dark * s, beta, a * s + self.dark * c])
    }

    pub fn state(&self, t: f64) -> AmplitudeState {
        AmplitudeState { t, psi: self.psi(t) }
    }
}

pub fn dbs_analytic(params: &CouplingParams, state0: &AmplitudeState) -> Result<DbsSolution> {
    if state0.dim() != 3 {
        return Err(Error::Precondition(format!("the analytic solution needs a 3-node state, got {}", state0.dim())));
    }
    let (v, gamma) = (params.v(), params.gamma());
    let root = Complex64::new(gamma * gamma - 4.0 * v * v, 0.0).sqrt();
    if root.norm() <= 1e-7 * gamma {
        return Err(Error::AtExceptionalPoint { v_over_gamma: params.v_over_gamma() });
    }
    let lambda_plus = -0.5 * I * (gamma + root);
    let lambda_minus = -0.5 * I * (gamma - root);
    let (a0, dark) = collective_coords(state0, params)?;
    let b0 = state0.psi[1];
    let denom = lambda_minus - lambda_plus;
    let c_plus = (-v * a0 + (I * gamma + lambda_minus) * b0) / denom;
    let c_minus = (-v * a0 + (I * gamma + lambda_plus) * b0) / denom;
    Ok(DbsSolution { params: *params, t0: state0.t, dark, c_plus, c_minus, lambda_plus, lambda_minus })
}

/// Convenience check that a spec is the three-node beam splitter.
pub fn is_dbs(spec: &LatticeSpec) -> bool {
    matches!(spec.topology, Topology::Dbs)
}
