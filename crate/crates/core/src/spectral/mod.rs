//! Numerical and closed-form spectra, exceptional-point scans and
//! degeneracy classification.

mod eigen;
mod ep;
mod schur;

pub use eigen::{eigensolve, eigenvalues, SpectralData, DEFECTIVE_CONDITION};
pub use ep::{
    classify_degeneracy, classify_in, ep_scan, gap_vs_size, im_group_count, lrep_bisect, Coalescence,
    DegeneracyKind, DegeneracyReport, EpScan,
};

use num_complex::Complex64;

use crate::error::Result;
use crate::lattice::{CouplingParams, LatticeSpec};

/// `mu_k(phi) = 1 + sin(2 phi) cos(k pi / (N_L + 1))`, evaluated in a form
/// that stays accurate when it approaches zero.
pub fn mu(phi: f64, n_lossy: usize, k: usize) -> f64 {
    let half = k as f64 * std::f64::consts::PI / (2.0 * (n_lossy as f64 + 1.0));
    let s = (2.0 * phi).sin();
    let d = phi.cos() - phi.sin();
    // 1 + s cos(2x) = (1 - s) + 2 s cos^2(x), with 1 - s = (cos phi - sin phi)^2
    d * d + 2.0 * s * half.cos().powi(2)
}

/// Closed-form spectrum of the linear chain: `0` and
/// `lambda_k^(+-) = -(i/2)(gamma +- sqrt(gamma^2 - 4 v^2 mu_k))`, sorted like
/// [`eigensolve`] output.
pub fn analytic_spectrum_linear(params: &CouplingParams, n_lossy: usize) -> Result<Vec<Complex64>> {
    let spec = LatticeSpec::linear(*params, n_lossy)?;
    let g = params.gamma();
    let v = params.v();
    let mut values = Vec::with_capacity(spec.dim());
    values.push(Complex64::new(0.0, 0.0));
    for k in 1..=n_lossy {
        let disc = Complex64::new(g * g - 4.0 * v * v * mu(params.phi(), n_lossy, k), 0.0).sqrt();
        let minus_half_i = Complex64::new(0.0, -0.5);
        values.push(minus_half_i * (g + disc));
        values.push(minus_half_i * (g - disc));
    }
    let order = eigen::sort_order(&values, 1e-9 * g);
    Ok(order.into_iter().map(|k| values[k]).collect())
}

/// Largest exceptional point of the linear chain, `v/gamma = 1 / (2 sqrt(mu_min))`.
pub fn lrep_linear_analytic(params: &CouplingParams, n_lossy: usize) -> f64 {
    let n = n_lossy.max(1);
    0.5 / mu(params.phi(), n, n).sqrt()
}
