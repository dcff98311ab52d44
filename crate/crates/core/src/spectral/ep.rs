//! Exceptional-point scans along `v/gamma` and degeneracy classification.
//!
//! A scan counts the distinct imaginary parts of the spectrum at each grid
//! point. Two branches coalescing lowers that count, so every change between
//! neighbouring grid points is bracketed and bisected down to the resolution
//! of the predicate itself.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::eigen::{eigensolve, eigenvalues, SpectralData};
use crate::error::{Error, Result};
use crate::lattice::{Hamiltonian, LatticeSpec};

/// Degenerate eigenvalues must lie within this many `gamma` of their mean.
pub const CLUSTER_TOLERANCE: f64 = 1e-6;
/// Singular values of `H - lambda I` below `RANK_TOLERANCE * |H|_2` count
/// towards the geometric multiplicity.
pub const RANK_TOLERANCE: f64 = 1e-7;
/// Imaginary parts closer than `IM_TOLERANCE * scale` belong to one branch.
const IM_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegeneracyKind {
    Exceptional,
    Diabolic,
}

impl fmt::Display for DegeneracyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegeneracyKind::Exceptional => write!(f, "exceptional"),
            DegeneracyKind::Diabolic => write!(f, "diabolic"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DegeneracyReport {
    pub v_over_gamma: f64,
    pub cluster: Vec<usize>,
    pub eigenvalue: Complex64,
    pub kind: DegeneracyKind,
    pub geometric_multiplicity: usize,
    /// Smallest principal angle (radians) between eigenvectors of the cluster.
    pub eigenvector_angle: f64,
    /// Singular values of `H - lambda I`, ascending, relative to `|H|_2`.
    pub relative_singular_values: Vec<f64>,
}

impl DegeneracyReport {
    pub fn cluster_size(&self) -> usize {
        self.cluster.len()
    }

    /// Human-readable label; a cluster with several Jordan blocks is a set of
    /// exceptional points with different eigenvectors.
    pub fn describe(&self) -> String {
        match self.kind {
            DegeneracyKind::Diabolic => format!("diabolic point of order {}", self.cluster_size()),
            DegeneracyKind::Exceptional if self.geometric_multiplicity > 1 => format!(
                "{} exceptional points with different eigenvectors",
                self.geometric_multiplicity
            ),
            DegeneracyKind::Exceptional => format!("exceptional point of order {}", self.cluster_size()),
        }
    }
}

/// One detected change in the number of distinct decay-rate branches.
#[derive(Debug, Clone)]
pub struct Coalescence {
    pub abscissa: f64,
    /// Branch count just below and just above the abscissa.
    pub branches_below: usize,
    pub branches_above: usize,
    pub report: Option<DegeneracyReport>,
}

impl Coalescence {
    pub fn cluster_size(&self) -> usize {
        self.report.as_ref().map_or(2, |r| r.cluster_size())
    }

    pub fn kind(&self) -> DegeneracyKind {
        self.report.as_ref().map_or(DegeneracyKind::Exceptional, |r| r.kind)
    }
}

#[derive(Debug, Clone)]
pub struct EpScan {
    pub grid: Vec<f64>,
    /// Imaginary parts per grid point, descending (slowest first).
    pub im_parts: Vec<Vec<f64>>,
    pub events: Vec<Coalescence>,
    /// Largest coalescence abscissa, absent when nothing was detected.
    pub lrep: Option<f64>,
    pub warnings: Vec<String>,
}

impl EpScan {
    pub fn abscissas(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.abscissa).collect()
    }
}

fn scale_of(h: &Hamiltonian) -> f64 {
    h.gamma().max(h.norm())
}

/// Number of distinct imaginary parts, grouping values within `tol`.
pub fn im_group_count(values: &[Complex64], tol: f64) -> usize {
    let mut ims: Vec<f64> = values.iter().map(|z| z.im).collect();
    ims.sort_by(f64::total_cmp);
    if ims.is_empty() {
        return 0;
    }
    1 + ims.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

fn branch_count(family: &LatticeSpec, x: f64) -> Result<usize> {
    let h = family.with_ratio(x)?.build()?;
    let values = eigenvalues(&h)?;
    Ok(im_group_count(&values, IM_TOLERANCE * scale_of(&h)))
}

/// Scan `v/gamma` over `grid` for coalescences of decay-rate branches.
pub fn ep_scan(family: &LatticeSpec, grid: &[f64]) -> Result<EpScan> {
    if grid.len() < 3 {
        return Err(Error::Precondition("ep_scan needs at least three grid points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
        return Err(Error::Precondition("ep_scan grid must be positive and strictly increasing".into()));
    }

    let samples: Vec<(Vec<f64>, usize)> = grid
        .par_iter()
        .map(|&x| -> Result<(Vec<f64>, usize)> {
            let h = family.with_ratio(x)?.build()?;
            let values = eigenvalues(&h)?;
            let count = im_group_count(&values, IM_TOLERANCE * scale_of(&h));
            let mut ims: Vec<f64> = values.iter().map(|z| z.im).collect();
            ims.sort_by(|a, b| b.total_cmp(a));
            Ok((ims, count))
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let brackets: Vec<(f64, f64, usize, usize)> = grid
        .windows(2)
        .zip(samples.windows(2))
        .filter(|(_, s)| s[0].1 != s[1].1)
        .map(|(x, s)| (x[0], x[1], s[0].1, s[1].1))
        .collect();

    let mut raw: Vec<(f64, f64, usize, usize)> = brackets
        .par_iter()
        .map(|&(lo, hi, clo, chi)| {
            let mut out = Vec::new();
            refine(family, lo, hi, clo, chi, &mut out).map(|_| out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));

    for &(lo, hi, clo, chi) in &brackets {
        let found: usize = raw
            .iter()
            .filter(|e| e.0 >= lo && e.1 <= hi)
            .map(|e| e.2.abs_diff(e.3))
            .sum();
        if found < clo.abs_diff(chi) {
            warnings.push(format!(
                "bracket [{lo}, {hi}] changes the branch count by {} but only {found} transitions were resolved",
                clo.abs_diff(chi)
            ));
        }
    }

    let events: Vec<Coalescence> = raw
        .par_iter()
        .map(|&(lo, hi, clo, chi)| {
            let report = match locate_cluster(family, lo, hi, clo, chi) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("could not classify coalescence near v/gamma = {lo}: {e}");
                    None
                }
            };
            let abscissa = if chi < clo { hi } else { lo };
            Coalescence { abscissa, branches_below: clo, branches_above: chi, report }
        })
        .collect();

    for e in &events {
        if e.report.is_none() {
            warnings.push(format!("coalescence at v/gamma = {} could not be classified", e.abscissa));
        }
    }
    if events.is_empty() {
        warnings.push(format!(
            "no coalescence detected on [{}, {}] ({} points); the grid may be too coarse or the range may miss every exceptional point",
            grid[0],
            grid[grid.len() - 1],
            grid.len()
        ));
    }
    let lrep = events.iter().map(|e| e.abscissa).reduce(f64::max);
    Ok(EpScan { grid: grid.to_vec(), im_parts: samples.into_iter().map(|s| s.0).collect(), events, lrep, warnings })
}

fn refine(
    family: &LatticeSpec,
    lo: f64,
    hi: f64,
    clo: usize,
    chi: usize,
    out: &mut Vec<(f64, f64, usize, usize)>,
) -> Result<()> {
    if clo == chi {
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= 1e-13 * hi.abs().max(1.0) || mid <= lo || mid >= hi {
        out.push((lo, hi, clo, chi));
        return Ok(());
    }
    let cmid = branch_count(family, mid)?;
    refine(family, lo, mid, clo, cmid, out)?;
    refine(family, mid, hi, cmid, chi, out)
}

/// Finds the eigenvalue cluster responsible for a resolved transition and
/// classifies it on the coalesced side.
fn locate_cluster(
    family: &LatticeSpec,
    lo: f64,
    hi: f64,
    clo: usize,
    chi: usize,
) -> Result<Option<DegeneracyReport>> {
    let (x_c, x_s) = if chi < clo { (hi, lo) } else { (lo, hi) };
    let h = family.with_ratio(x_c)?.build()?;
    let spectral = eigensolve(&h)?;
    let split = eigenvalues(&family.with_ratio(x_s)?.build()?)?;
    let scale = scale_of(&h);
    let tol = IM_TOLERANCE * scale;
    let values = spectral.eigenvalues();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for group in link_clusters(values, 1e-4 * scale) {
        if group.len() < 2 {
            continue;
        }
        let center: Complex64 = group.iter().map(|&k| values[k]).sum::<Complex64>() / group.len() as f64;
        let mut near: Vec<&Complex64> = split.iter().collect();
        near.sort_by(|a, b| (*a - center).norm().total_cmp(&(*b - center).norm()));
        let spread = |zs: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = zs.collect();
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        let spread_s = spread(&mut near.iter().take(group.len()).map(|z| z.im));
        let spread_c = spread(&mut group.iter().map(|&k| values[k].im));
        let score = spread_s - spread_c;
        if spread_s > 0.5 * tol && best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, group));
        }
    }
    match best {
        Some((_, cluster)) => classify_in(&h, &spectral, &cluster, None).map(Some),
        None => Ok(None),
    }
}

/// Single-linkage clusters of eigenvalues closer than `link`.
fn link_clusters(values: &[Complex64], link: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= link {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = root(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(p) => groups[p].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Classifies the eigenvalues `cluster` (indices into the sorted spectrum of
/// `h`) as an exceptional or diabolic degeneracy.
pub fn classify_degeneracy(h: &Hamiltonian, cluster: &[usize]) -> Result<DegeneracyReport> {
    let spectral = eigensolve(h)?;
    classify_in(h, &spectral, cluster, Some(CLUSTER_TOLERANCE * h.gamma()))
}

/// Same as [`classify_degeneracy`] with a precomputed decomposition. With
/// `max_spread = None` the closeness precondition is not checked.
pub fn classify_in(
    h: &Hamiltonian,
    spectral: &SpectralData,
    cluster: &[usize],
    max_spread: Option<f64>,
) -> Result<DegeneracyReport> {
    let values = spectral.eigenvalues();
    if cluster.len() < 2 {
        return Err(Error::Precondition("a degeneracy needs at least two eigenvalues".into()));
    }
    if let Some(&bad) = cluster.iter().find(|&&k| k >= values.len()) {
        return Err(Error::Precondition(format!("eigenvalue index {bad} out of range")));
    }
    let mean: Complex64 = cluster.iter().map(|&k| values[k]).sum::<Complex64>() / cluster.len() as f64;
    if let Some(limit) = max_spread {
        let worst = cluster.iter().map(|&k| (values[k] - mean).norm()).fold(0.0, f64::max);
        if worst > limit {
            return Err(Error::Precondition(format!(
                "cluster is not degenerate: eigenvalues spread {worst:.3e} from their mean (limit {limit:.1e})"
            )));
        }
    }

    let n = h.dim();
    let h_norm = h.matrix().clone().singular_values().max();
    let shifted: DMatrix<Complex64> = h.matrix() - DMatrix::<Complex64>::identity(n, n) * mean;
    let mut sv: Vec<f64> = shifted.singular_values().iter().map(|s| s / h_norm).collect();
    sv.sort_by(f64::total_cmp);
    let geometric_multiplicity = sv.iter().filter(|&&s| s < RANK_TOLERANCE).count();

    let mut angle = f64::INFINITY;
    for (i, &a) in cluster.iter().enumerate() {
        for &b in &cluster[i + 1..] {
            let (u, w) = (spectral.right(a), spectral.right(b));
            let c = (u.dotc(&w).norm() / (u.norm() * w.norm())).min(1.0);
            angle = angle.min(c.acos());
        }
    }

    let kind = if geometric_multiplicity >= cluster.len() { DegeneracyKind::Diabolic } else { DegeneracyKind::Exceptional };
    Ok(DegeneracyReport {
        v_over_gamma: h.spec().params.v_over_gamma(),
        cluster: cluster.to_vec(),
        eigenvalue: mean,
        kind,
        geometric_multiplicity,
        eigenvector_angle: angle,
        relative_singular_values: sv.into_iter().take(cluster.len() + 1).collect(),
    })
}

/// Second-smallest `|Im lambda|` (the gap above the dark state) for each size.
/// Rings use whatever delta rule `family` carries.
pub fn gap_vs_size(family: &LatticeSpec, sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    if sizes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("sizes must be ascending".into()));
    }
    sizes
        .par_iter()
        .map(|&n| {
            let h = family.with_size(n)?.build()?;
            let values = eigenvalues(&h)?;
            let gap = values.get(1).map(|z| z.im.abs()).ok_or_else(|| {
                Error::Precondition("lattice has fewer than two eigenvalues".into())
            })?;
            Ok((n, gap))
        })
        .collect()
}

/// Largest exceptional point in `[lo, hi]` by bisection on "the branch count
/// equals its value at `hi`". Assumes no further transitions above it.
pub fn lrep_bisect(family: &LatticeSpec, lo: f64, hi: f64) -> Result<Option<f64>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition("lrep_bisect needs 0 < lo < hi".into()));
    }
    let target = branch_count(family, hi)?;
    if branch_count(family, lo)? == target {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-10 * b {
        let m = 0.5 * (a + b);
        if branch_count(family, m)? == target {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(Some(b))
}
