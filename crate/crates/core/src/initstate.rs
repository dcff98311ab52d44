//! Initial states: the dark state, single-node excitations and sparse
//! superpositions orthogonal to chosen slow modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::AmplitudeState;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Topology};
use crate::spectral::{eigensolve, SpectralData, DEFECTIVE_CONDITION};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Killed-mode overlaps must end up below this.
pub const KILL_TOLERANCE: f64 = 1e-8;

/// Null-space threshold per unit row norm.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Unit-norm kernel vector of `H`: zero on the lossy nodes and
/// `alpha_{n+1} = -(v1/v2) alpha_n` on the lossless ones.
pub fn dark_state(spec: &LatticeSpec) -> Result<AmplitudeState> {
    if let Topology::Ring { .. } = spec.topology {
        if !spec.is_balanced()? {
            return Err(Error::NoDarkState(format!(
                "ring with delta = {} is not balanced for N_L = {}",
                spec.delta_value()?,
                spec.n_lossy()
            )));
        }
    }
    let lossless = match spec.topology {
        Topology::Dbs => 2,
        Topology::Linear { n_lossy } => n_lossy + 1,
        Topology::Ring { n_lossy } => n_lossy,
    };
    let (v1, v2) = (spec.params.v1(), spec.params.v2());
    let log_ratio = if v2 == 0.0 {
        f64::INFINITY
    } else if v1 == 0.0 {
        f64::NEG_INFINITY
    } else {
        (v1 / v2).ln()
    };
    let logs: Vec<f64> = (0..lossless)
        .map(|n| match log_ratio {
            r if r.is_finite() => n as f64 * r,
            r if r > 0.0 => if n + 1 == lossless { 0.0 } else { f64::NEG_INFINITY },
            _ => if n == 0 { 0.0 } else { f64::NEG_INFINITY },
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut psi = DVector::from_element(spec.dim(), ZERO);
    for (n, l) in logs.iter().enumerate() {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        psi[2 * n] = Complex64::new(sign * (l - top).exp(), 0.0);
    }
    let norm = psi.norm();
    psi /= Complex64::new(norm, 0.0);
    let h = spec.build()?;
    let residual = (h.matrix() * &psi).norm();
    if residual > 1e-10 * h.norm() {
        return Err(Error::NoDarkState(format!("kernel residual {residual:.3e} exceeds 1e-10 |H|")));
    }
    AmplitudeState::new(psi)
}

/// Unit excitation plus any warnings about the choice of node.
#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    pub state: AmplitudeState,
    pub warnings: Vec<String>,
}

/// Unit vector on node `node` (1-based, interleaved order).
pub fn basis_excitation(spec: &LatticeSpec, node: usize) -> Result<Excitation> {
    let dim = spec.dim();
    if node == 0 || node > dim {
        return Err(Error::Parameter(format!("node {node} is outside 1..={dim}")));
    }
    let mut psi = DVector::from_element(dim, ZERO);
    psi[node - 1] = Complex64::new(1.0, 0.0);
    let mut warnings = Vec::new();
    if spec.is_lossy_node(node) {
        warnings.push(format!("node {node} is a lossy node"));
    }
    Ok(Excitation { state: AmplitudeState::new(psi)?, warnings })
}

/// Lossless node nearest the centre: `N_L` for odd `N_L`, `N_L + 1` for even.
pub fn middle_node(spec: &LatticeSpec) -> usize {
    let n = spec.n_lossy();
    if n % 2 == 1 {
        n
    } else {
        n + 1
    }
}

/// Number of the `k`-th lossless node (`alpha_k`, 1-based).
pub fn lossless_node(k: usize) -> usize {
    2 * k - 1
}

/// `count` contiguous lossless nodes centred on [`middle_node`].
pub fn centered_support(spec: &LatticeSpec, count: usize) -> Result<Vec<usize>> {
    let lossless = (spec.dim() + 1) / 2;
    if count == 0 || count > lossless {
        return Err(Error::Parameter(format!("support of {count} lossless nodes does not fit in {lossless}")));
    }
    let centre = (middle_node(spec) + 1) / 2;
    let start = centre.saturating_sub((count - 1) / 2).max(1).min(lossless + 1 - count);
    Ok((start..start + count).map(lossless_node).collect())
}

/// Indices of the `count` slowest decaying modes, skipping the dark mode.
pub fn slowest_modes(spectral: &SpectralData, count: usize) -> Vec<usize> {
    let tol = spectral.zero_tolerance();
    (0..spectral.len()).filter(|&k| spectral.eigenvalues()[k].im.abs() > tol).take(count).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateRecipe {
    /// 1-based node numbers allowed to carry amplitude.
    pub support: Vec<usize>,
    pub kill_modes: Vec<usize>,
    /// Unit-norm amplitudes on `support`, in the same order.
    pub amplitudes: Vec<Complex64>,
    pub state: AmplitudeState,
    /// `|y_n . psi| / |y_n|` for each killed mode.
    pub killed_overlaps: Vec<f64>,
    /// `|c_dark| / |c|`, zero without a dark mode.
    pub dark_overlap: f64,
    pub warnings: Vec<String>,
}

/// Sparse state on `support` with vanishing overlap on every mode in `kill_modes`.
pub fn orthogonal_recipe(spec: &LatticeSpec, support: &[usize], kill_modes: &[usize]) -> Result<StateRecipe> {
    let h = spec.build()?;
    let spectral = eigensolve(&h)?;
    recipe_from_spectrum(spec, &spectral, support, kill_modes)
}

pub fn recipe_from_spectrum(
    spec: &LatticeSpec,
    spectral: &SpectralData,
    support: &[usize],
    kill_modes: &[usize],
) -> Result<StateRecipe> {
    let dim = spec.dim();
    if support.is_empty() {
        return Err(Error::Parameter("recipe support is empty".into()));
    }
    let mut seen = vec![false; dim + 1];
    for &node in support {
        if node == 0 || node > dim {
            return Err(Error::Parameter(format!("support node {node} is outside 1..={dim}")));
        }
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::Parameter(format!("support node {node} is repeated")));
        }
    }
    if let Some(&bad) = kill_modes.iter().find(|&&k| k >= spectral.len()) {
        return Err(Error::Parameter(format!("mode {bad} is outside 0..{}", spectral.len())));
    }
    if spectral.is_defective() {
        return Err(Error::Conditioning { condition: spectral.eigbasis_condition(), threshold: DEFECTIVE_CONDITION });
    }
    let mut warnings = Vec::new();
    if support.iter().any(|&n| spec.is_lossy_node(n)) {
        warnings.push("support includes lossy nodes".to_string());
    }
    if spectral.dark_index().is_some_and(|d| kill_modes.contains(&d)) {
        warnings.push("the dark mode is among the killed modes".to_string());
    }
    let s = support.len();
    let k = kill_modes.len();
    let rows = s.max(k);
    let mut m = DMatrix::from_element(rows, s, ZERO);
    for (r, &mode) in kill_modes.iter().enumerate() {
        let y = spectral.left(mode);
        let scale = y.norm();
        for (c, &node) in support.iter().enumerate() {
            m[(r, c)] = y[node - 1] / scale;
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let tol = RANK_TOLERANCE * (k.max(1) as f64).sqrt();
    let null: Vec<usize> = (0..s).filter(|&i| svd.singular_values[i] <= tol).collect();
    if null.is_empty() {
        return Err(Error::InfeasibleRecipe(format!(
            "no combination of {s} support nodes is orthogonal to all {k} killed modes"
        )));
    }
    let basis: Vec<DVector<Complex64>> = null.iter().map(|&i| v_t.row(i).adjoint()).collect();
    let dark = spectral.dark_index().map(|d| spectral.left(d));
    let weights: Option<Vec<Complex64>> = dark.as_ref().map(|y| {
        basis.iter().map(|b| support.iter().enumerate().map(|(c, &node)| y[node - 1] * b[c]).sum()).collect()
    });
    let mut x = DVector::from_element(s, ZERO);
    match weights.filter(|w| w.iter().map(|z| z.norm_sqr()).sum::<f64>() > 0.0) {
        // keep as much dark overlap as the null space allows
        Some(w) => {
            for (b, wi) in basis.iter().zip(&w) {
                x += b * wi.conj();
            }
        }
        None => x = basis.last().expect("nonempty null space").clone(),
    }
    let norm = x.norm();
    x /= Complex64::new(norm, 0.0);
    let pivot = x.iter().cloned().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ZERO);
    if pivot.norm() > 0.0 {
        x *= pivot.conj() / pivot.norm();
    }
    let mut psi = DVector::from_element(dim, ZERO);
    for (c, &node) in support.iter().enumerate() {
        psi[node - 1] = x[c];
    }
    let killed_overlaps: Vec<f64> = kill_modes
        .iter()
        .map(|&mode| {
            let y = spectral.left(mode);
            y.dot(&psi).norm() / y.norm()
        })
        .collect();
    if let Some(worst) = killed_overlaps.iter().cloned().reduce(f64::max).filter(|w| *w >= KILL_TOLERANCE) {
        return Err(Error::InfeasibleRecipe(format!("residual killed-mode overlap {worst:.3e}")));
    }
    let c = spectral.left_vectors() * &psi;
    let dark_overlap = spectral.dark_index().map_or(0.0, |d| c[d].norm() / c.norm());
    if dark_overlap < 1e-8 {
        warnings.push(format!("recipe is dark-orthogonal (overlap {dark_overlap:.3e})"));
    }
    Ok(StateRecipe {
        support: support.to_vec(),
        kill_modes: kill_modes.to_vec(),
        amplitudes: x.iter().copied().collect(),
        state: AmplitudeState::new(psi)?,
        killed_overlaps,
        dark_overlap,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::CouplingParams;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn chain(x: f64, phi: f64, n: usize) -> LatticeSpec {
        LatticeSpec::linear(CouplingParams::new(x, phi, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn symmetric_chain_dark_state_alternates() {
        let d = dark_state(&chain(1.0, FRAC_PI_4, 9)).unwrap();
        for n in 0..10 {
            let a = d.psi[2 * n];
            assert!((a.norm() - 0.1f64.sqrt()).abs() < 1e-14);
            assert_eq!(a.re > 0.0, n % 2 == 0);
        }
        assert!((0..9).all(|n| d.psi[2 * n + 1] == ZERO));
    }

    #[test]
    fn extreme_angles_localise_on_one_end() {
        let first = dark_state(&chain(1.0, PI / 2.0, 3)).unwrap();
        assert_eq!(first.psi[0], Complex64::new(1.0, 0.0));
        let last = dark_state(&chain(1.0, 0.0, 3)).unwrap();
        assert!((last.psi[6].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_ring_has_no_dark_state() {
        let p = CouplingParams::new(1.0, 0.2 * PI, 1.0).unwrap();
        let ring = LatticeSpec::ring(p, 4, crate::lattice::DeltaRule::Value(1.0)).unwrap();
        assert!(matches!(dark_state(&ring), Err(Error::NoDarkState(_))));
        assert!(dark_state(&LatticeSpec::balanced_ring(p, 4).unwrap()).is_ok());
    }

    #[test]
    fn middle_nodes_and_supports() {
        assert_eq!(middle_node(&chain(1.0, FRAC_PI_4, 19)), 19);
        assert_eq!(middle_node(&chain(1.0, FRAC_PI_4, 20)), 21);
        assert_eq!(centered_support(&chain(1.0, FRAC_PI_4, 9), 3).unwrap(), vec![7, 9, 11]);
        assert_eq!(centered_support(&chain(1.0, FRAC_PI_4, 2), 3).unwrap(), vec![1, 3, 5]);
        assert!(centered_support(&chain(1.0, FRAC_PI_4, 2), 4).is_err());
    }

    #[test]
    fn basis_excitation_flags_lossy_nodes() {
        let spec = chain(1.0, FRAC_PI_4, 3);
        assert!(basis_excitation(&spec, 1).unwrap().warnings.is_empty());
        assert_eq!(basis_excitation(&spec, 2).unwrap().warnings.len(), 1);
        assert!(basis_excitation(&spec, 0).is_err());
        assert!(basis_excitation(&spec, 8).is_err());
    }
}
