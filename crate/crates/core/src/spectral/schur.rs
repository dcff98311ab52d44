//! Complex Schur factorisation by single-shift Hessenberg QR.

use nalgebra::linalg::Hessenberg;
use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Returns `(Q, T)` with `A = Q T Q^H`, `T` upper triangular, or `None` if
/// some eigenvalue fails to converge within `max_iter_per_value` sweeps.
pub(crate) fn complex_schur(a: DMatrix<Complex64>, max_iter_per_value: usize) -> Option<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if n == 0 {
        return Some((DMatrix::identity(0, 0), a));
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 1 || scale == 0.0 {
        return Some((DMatrix::identity(n, n), a));
    }
    let (mut q, mut t) = Hessenberg::new(a).unpack();
    for i in 2..n {
        for j in 0..i - 1 {
            t[(i, j)] = ZERO;
        }
    }
    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE * (n as f64) / eps;
    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let mut diag = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            if diag == 0.0 {
                diag = scale;
            }
            if sub <= eps * diag || sub <= tiny {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > max_iter_per_value {
            return None;
        }
        let shift = if iter % 11 == 0 {
            let mut s = t[(hi, hi - 1)].re.abs();
            if hi >= 2 {
                s += t[(hi - 1, hi - 2)].re.abs();
            }
            t[(hi, hi)] + Complex64::new(0.75 * s, 0.0)
        } else {
            wilkinson(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        qr_sweep(&mut t, &mut q, lo, hi, shift);
    }
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Some((q, t))
}

fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let (r1, r2) = (d + half + disc, d + half - disc);
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let r = ax.hypot(y.norm());
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    (ax / r, (x / ax) * y.conj() / r)
}

fn qr_sweep(t: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>, lo: usize, hi: usize, shift: Complex64) {
    let n = t.nrows();
    let mut x = t[(lo, lo)] - shift;
    let mut y = t[(lo + 1, lo)];
    for k in lo..hi {
        if k > lo {
            x = t[(k, k - 1)];
            y = t[(k + 1, k - 1)];
        }
        let (c, s) = givens(x, y);
        let first = if k > lo { k - 1 } else { k };
        for j in first..n {
            let (t1, t2) = (t[(k, j)], t[(k + 1, j)]);
            t[(k, j)] = t1 * c + s * t2;
            t[(k + 1, j)] = -s.conj() * t1 + t2 * c;
        }
        let last = (k + 2).min(hi);
        for i in 0..=last {
            let (u1, u2) = (t[(i, k)], t[(i, k + 1)]);
            t[(i, k)] = u1 * c + u2 * s.conj();
            t[(i, k + 1)] = -u1 * s + u2 * c;
        }
        for i in 0..n {
            let (u1, u2) = (q[(i, k)], q[(i, k + 1)]);
            q[(i, k)] = u1 * c + u2 * s.conj();
            q[(i, k + 1)] = -u1 * s + u2 * c;
        }
        if k > lo {
            t[(k + 1, k - 1)] = ZERO;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: DMatrix<Complex64>) {
        let (q, t) = complex_schur(a.clone(), 30).expect("converges");
        let n = a.nrows();
        let back = &q * &t * q.adjoint();
        assert!((back - &a).norm() < 1e-13 * a.norm().max(1.0));
        assert!((q.adjoint() * &q - DMatrix::<Complex64>::identity(n, n)).norm() < 1e-13);
        for i in 1..n {
            for j in 0..i {
                assert_eq!(t[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn random_like_matrices() {
        for n in [3usize, 5, 8, 17] {
            let a = DMatrix::from_fn(n, n, |i, j| {
                let k = (i * 31 + j * 17 + n) as f64;
                Complex64::new((k * 0.37).sin(), (k * 0.91).cos())
            });
            check(a);
        }
    }

    #[test]
    fn jordan_block_and_permutation() {
        let mut j = DMatrix::from_element(4, 4, Complex64::new(0.0, -0.5));
        for i in 0..4 {
            for k in 0..4 {
                if k != i && k != i + 1 {
                    j[(i, k)] = ZERO;
                }
            }
        }
        for i in 0..3 {
            j[(i, i + 1)] = Complex64::new(1.0, 0.0);
        }
        check(j);
        let p = DMatrix::from_fn(5, 5, |i, k| if (i + 1) % 5 == k { Complex64::new(1.0, 0.0) } else { ZERO });
        check(p);
    }
}
