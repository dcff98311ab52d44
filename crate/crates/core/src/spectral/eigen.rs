//! Dense complex eigendecomposition with right and left eigenvectors.
//!
//! The Schur factorisation `H = Q T Q^H` comes from a shifted Hessenberg QR; eigenvectors of
//! the triangular factor are obtained by back substitution and rotated back.
//! Left eigenvectors are the rows of the inverse right-eigenvector matrix,
//! so `left[k] . right[k] = 1` (bilinear product, no conjugation) and they
//! satisfy `y^T H = lambda y^T`, which is checked and reported.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Hamiltonian;

use super::schur::complex_schur;

/// Eigenbasis condition number above which the basis is treated as defective.
pub const DEFECTIVE_CONDITION: f64 = 1e8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<Complex64>,
    right: DMatrix<Complex64>,
    left: DMatrix<Complex64>,
    residual: f64,
    left_residual: f64,
    biorthogonality: f64,
    eigbasis_condition: f64,
    norm: f64,
    gamma: f64,
}

impl SpectralData {
    /// Eigenvalues sorted by ascending `|Im|`, ties by ascending `Re`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Unit-norm right eigenvectors as columns, in eigenvalue order.
    pub fn right_vectors(&self) -> &DMatrix<Complex64> {
        &self.right
    }

    /// Left eigenvectors as rows, normalised so `left_k . right_k = 1`.
    pub fn left_vectors(&self) -> &DMatrix<Complex64> {
        &self.left
    }

    pub fn right(&self, k: usize) -> DVector<Complex64> {
        self.right.column(k).into_owned()
    }

    pub fn left(&self, k: usize) -> DVector<Complex64> {
        self.left.row(k).transpose()
    }

    /// `max_k |H phi_k - lambda_k phi_k|` for unit `phi_k`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max_k |y_k^T H - lambda_k y_k^T| / |y_k|`.
    pub fn left_residual(&self) -> f64 {
        self.left_residual
    }

    /// Largest entry of `W V - I` with `W` the left-vector matrix.
    pub fn biorthogonality_error(&self) -> f64 {
        self.biorthogonality
    }

    /// 2-norm condition number of the (column-normalised) right-eigenvector matrix.
    pub fn eigbasis_condition(&self) -> f64 {
        self.eigbasis_condition
    }

    pub fn is_defective(&self) -> bool {
        !(self.eigbasis_condition < DEFECTIVE_CONDITION)
    }

    /// Frobenius norm of the Hamiltonian that was decomposed.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Tolerance for calling an eigenvalue zero.
    pub fn zero_tolerance(&self) -> f64 {
        1e-9 * self.gamma + 1e3 * f64::EPSILON * self.norm
    }

    /// Index of the dark (zero-eigenvalue) mode, which the sort puts first.
    pub fn dark_index(&self) -> Option<usize> {
        match self.eigenvalues.first() {
            Some(l) if l.norm() <= self.zero_tolerance() => Some(0),
            _ => None,
        }
    }

    /// Left vector of the dark mode from the complex-symmetric identity
    /// `y_0 = phi_0 / (phi_0^T phi_0)`. Stays accurate when other modes are
    /// defective and the full inverse is not.
    pub fn dark_left_vector(&self) -> Option<DVector<Complex64>> {
        let k = self.dark_index()?;
        if !self.is_defective() {
            return Some(self.left(k));
        }
        let phi = self.right(k);
        let denom = phi.dot(&phi);
        if denom.norm() < 1e-12 {
            return None;
        }
        Some(phi / denom)
    }
}

/// Eigenvalues only, in the same order as [`eigensolve`] would give.
pub fn eigenvalues(h: &Hamiltonian) -> Result<Vec<Complex64>> {
    let (_, t) = schur(h)?;
    let mut values: Vec<Complex64> = (0..t.nrows()).map(|k| t[(k, k)]).collect();
    let order = sort_order(&values, tie_tolerance(h));
    values = order.iter().map(|&k| values[k]).collect();
    Ok(values)
}

pub fn eigensolve(h: &Hamiltonian) -> Result<SpectralData> {
    let n = h.dim();
    let (q, t) = schur(h)?;
    let raw: Vec<Complex64> = (0..n).map(|k| t[(k, k)]).collect();
    let order = sort_order(&raw, tie_tolerance(h));

    let t_norm = t.norm();
    let smin = (f64::EPSILON * t_norm).max(f64::MIN_POSITIVE);
    let mut right = DMatrix::from_element(n, n, ZERO);
    for (col, &k) in order.iter().enumerate() {
        let x = triangular_eigenvector(&t, k, smin);
        let mut v = &q * x;
        normalize_phase(&mut v);
        right.set_column(col, &v);
    }
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| raw[k]).collect();

    let m = h.matrix();
    let residual = (0..n)
        .map(|k| (m * right.column(k) - right.column(k) * eigenvalues[k]).norm())
        .fold(0.0, f64::max);

    let sv = right.clone().singular_values();
    let (smax, smin_v) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let eigbasis_condition = if smin_v > 0.0 { smax / smin_v } else { f64::INFINITY };

    let left = match right.clone().try_inverse() {
        Some(inv) if inv.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => inv,
        _ => {
            log::debug!("right eigenvector matrix is singular; falling back to transposed right vectors");
            let mut w = right.transpose();
            for k in 0..n {
                let d = right.column(k).dot(&right.column(k));
                let d = if d.norm() < f64::MIN_POSITIVE { Complex64::new(f64::MIN_POSITIVE, 0.0) } else { d };
                let row = w.row(k) / d;
                w.set_row(k, &row);
            }
            w
        }
    };

    let left_residual = (0..n)
        .map(|k| {
            let y = left.row(k);
            let r = (&y * m - y * eigenvalues[k]).norm();
            r / y.norm().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    let mut biorthogonality = 0.0f64;
    let wv = &left * &right;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            biorthogonality = biorthogonality.max((wv[(i, j)] - target).norm());
        }
    }

    Ok(SpectralData {
        eigenvalues,
        right,
        left,
        residual,
        left_residual,
        biorthogonality,
        eigbasis_condition,
        norm: h.norm(),
        gamma: h.gamma(),
    })
}

fn schur(h: &Hamiltonian) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let m = h.matrix();
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Parameter("Hamiltonian has non-finite entries".into()));
    }
    let n = h.dim();
    let max_iter = 30 * n.max(1);
    complex_schur(m.clone(), 30).ok_or(Error::Solver { dim: n, max_iter })
}

fn tie_tolerance(h: &Hamiltonian) -> f64 {
    1e-9 * h.gamma()
}

/// Permutation sorting by `|Im|` ascending; runs of `|Im|` values within
/// `tol` of their neighbour are ordered by `Re` ascending.
pub(crate) fn sort_order(values: &[Complex64], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a].im.abs().total_cmp(&values[b].im.abs()).then(values[a].re.total_cmp(&values[b].re))
    });
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]].im.abs() - values[idx[end - 1]].im.abs() <= tol {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
        start = end;
    }
    idx
}

/// Eigenvector of upper-triangular `t` for the diagonal entry `k`.
fn triangular_eigenvector(t: &DMatrix<Complex64>, k: usize, smin: f64) -> DVector<Complex64> {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let mut x = DVector::from_element(n, ZERO);
    x[k] = Complex64::new(1.0, 0.0);
    for j in (0..k).rev() {
        let mut s = ZERO;
        for m in (j + 1)..=k {
            s += t[(j, m)] * x[m];
        }
        let mut d = t[(j, j)] - lambda;
        if d.norm() < smin {
            d = Complex64::new(smin, 0.0);
        }
        x[j] = -s / d;
        let big = x.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if big > 1e100 {
            x.unscale_mut(big);
        }
    }
    x
}

/// Unit norm, largest-magnitude component real and positive.
fn normalize_phase(v: &mut DVector<Complex64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ZERO);
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}
