//! Scaling-and-squaring matrix exponential with a degree-13 Pade approximant.
//! Test oracle only; shares no code with the propagators it checks.

use nalgebra::DMatrix;
use num_complex::Complex64;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = a * Complex64::new(0.5f64.powi(s), 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |x: f64| Complex64::new(x, 0.0);
    let u_inner = &a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]);
    let u = &a * (&a6 * u_inner + &a6 * c(B[7]) + &a4 * c(B[5]) + &a2 * c(B[3]) + &id * c(B[1]));
    let v_inner = &a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]);
    let v = &a6 * v_inner + &a6 * c(B[6]) + &a4 * c(B[4]) + &a2 * c(B[2]) + &id * c(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// `exp(-i H t) psi0`.
pub fn propagate(h: &DMatrix<Complex64>, psi0: &nalgebra::DVector<Complex64>, t: f64) -> nalgebra::DVector<Complex64> {
    expm(&(h * Complex64::new(0.0, -t))) * psi0
}

#[test]
fn exp_of_diagonal_and_nilpotent() {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex64::new(0.3, 1.0), Complex64::new(-2.0, 0.5)]));
    let e = expm(&d);
    assert!((e[(0, 0)] - Complex64::new(0.3, 1.0).exp()).norm() < 1e-14);
    assert!((e[(1, 1)] - Complex64::new(-2.0, 0.5).exp()).norm() < 1e-14);
    let mut j = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
    j[(0, 1)] = Complex64::new(7.0, 0.0);
    let e = expm(&j);
    assert!((e[(0, 1)] - Complex64::new(7.0, 0.0)).norm() < 1e-13);
    assert!((e[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
}
