#![allow(dead_code)]

pub mod expm;

use num_complex::Complex64;

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Largest distance after pairing every expected eigenvalue with its nearest
/// unused numerical one.
pub fn match_spectra(numeric: &[Complex64], expected: &[Complex64]) -> f64 {
    assert_eq!(numeric.len(), expected.len());
    let mut used = vec![false; numeric.len()];
    let mut worst = 0.0f64;
    for e in expected {
        let (k, d) = numeric
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, z)| (k, (z - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn sup_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
