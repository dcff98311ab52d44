//! Effective non-Hermitian Hamiltonians of the three lattice families.
//!
//! Node order is interleaved, `(alpha_1, beta_1, alpha_2, beta_2, ...)`. Public
//! functions that take a *node number* count from 1 in that order, so odd node
//! numbers are lossless `alpha` nodes and even node numbers are lossy `beta`
//! nodes. Matrix and vector indices are the usual 0-based ones.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coupling amplitude `v`, asymmetry angle `phi` and loss rate `gamma`.
///
/// The two bond strengths are `v1 = v cos(phi)` (alpha_n to beta_n) and
/// `v2 = v sin(phi)` (beta_n to alpha_{n+1}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    v: f64,
    phi: f64,
    gamma: f64,
}

impl CouplingParams {
    pub fn new(v: f64, phi: f64, gamma: f64) -> Result<Self> {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Parameter(format!("coupling v must be positive, got {v}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Parameter(format!("loss rate gamma must be positive, got {gamma}")));
        }
        if !(phi.is_finite() && (0.0..=FRAC_PI_2).contains(&phi)) {
            return Err(Error::Parameter(format!("asymmetry angle phi must lie in [0, pi/2], got {phi}")));
        }
        Ok(Self { v, phi, gamma })
    }

    /// Parameters with `v = ratio * gamma`.
    pub fn from_ratio(v_over_gamma: f64, phi: f64, gamma: f64) -> Result<Self> {
        Self::new(v_over_gamma * gamma, phi, gamma)
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn v1(&self) -> f64 {
        self.v * self.phi.cos()
    }

    pub fn v2(&self) -> f64 {
        self.v * self.phi.sin()
    }

    pub fn v_over_gamma(&self) -> f64 {
        self.v / self.gamma
    }

    pub fn with_ratio(&self, v_over_gamma: f64) -> Result<Self> {
        Self::from_ratio(v_over_gamma, self.phi, self.gamma)
    }

    /// Same couplings and loss multiplied by `factor` (time rescaling).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.v * factor, self.phi, self.gamma * factor)
    }
}

/// Weight on the ring-closing bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    Value(f64),
    /// Solve the balance condition so that the ring keeps a dark state.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Three-node dissipative beam splitter `(alpha_1, beta_1, alpha_2)`.
    Dbs,
    Linear { n_lossy: usize },
    Ring { n_lossy: usize },
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Dbs => write!(f, "dbs"),
            Topology::Linear { n_lossy } => write!(f, "linear(N_L={n_lossy})"),
            Topology::Ring { n_lossy } => write!(f, "ring(N_L={n_lossy})"),
        }
    }
}

/// A lattice: topology, couplings and (for rings) the closing-bond weight.
///
/// Also used as a parameter family: [`LatticeSpec::with_ratio`] and
/// [`LatticeSpec::with_size`] move along `v/gamma` or `N_L` while keeping the
/// rest fixed, re-solving the balance condition when the rule is
/// [`DeltaRule::Balanced`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub topology: Topology,
    pub params: CouplingParams,
    pub delta: DeltaRule,
}

impl LatticeSpec {
    pub fn dbs(params: CouplingParams) -> Self {
        Self { topology: Topology::Dbs, params, delta: DeltaRule::Value(0.0) }
    }

    pub fn linear(params: CouplingParams, n_lossy: usize) -> Result<Self> {
        if n_lossy < 1 {
            return Err(Error::Parameter("linear lattice needs at least one lossy node".into()));
        }
        Ok(Self { topology: Topology::Linear { n_lossy }, params, delta: DeltaRule::Value(0.0) })
    }

    pub fn ring(params: CouplingParams, n_lossy: usize, delta: DeltaRule) -> Result<Self> {
        if n_lossy < 2 {
            return Err(Error::Parameter("ring lattice needs at least two lossy nodes".into()));
        }
        if let DeltaRule::Value(d) = delta {
            if !d.is_finite() {
                return Err(Error::Parameter(format!("delta must be finite, got {d}")));
            }
        }
        Ok(Self { topology: Topology::Ring { n_lossy }, params, delta })
    }

    pub fn balanced_ring(params: CouplingParams, n_lossy: usize) -> Result<Self> {
        Self::ring(params, n_lossy, DeltaRule::Balanced)
    }

    pub fn n_lossy(&self) -> usize {
        match self.topology {
            Topology::Dbs => 1,
            Topology::Linear { n_lossy } | Topology::Ring { n_lossy } => n_lossy,
        }
    }

    pub fn dim(&self) -> usize {
        match self.topology {
            Topology::Dbs => 3,
            Topology::Linear { n_lossy } => 2 * n_lossy + 1,
            Topology::Ring { n_lossy } => 2 * n_lossy,
        }
    }

    pub fn is_ring(&self) -> bool {
        matches!(self.topology, Topology::Ring { .. })
    }

    /// Resolved closing-bond weight; zero for open lattices.
    pub fn delta_value(&self) -> Result<f64> {
        match (self.topology, self.delta) {
            (Topology::Ring { n_lossy }, DeltaRule::Balanced) => balanced_delta(&self.params, n_lossy),
            (Topology::Ring { .. }, DeltaRule::Value(d)) => Ok(d),
            _ => Ok(0.0),
        }
    }

    /// True when the ring closing weight satisfies the balance condition
    /// (always true for open lattices).
    pub fn is_balanced(&self) -> Result<bool> {
        match self.topology {
            Topology::Ring { n_lossy } => {
                let target = balanced_delta(&self.params, n_lossy)?;
                let d = self.delta_value()?;
                Ok((d - target).abs() <= 1e-9 * target.abs().max(f64::MIN_POSITIVE))
            }
            _ => Ok(true),
        }
    }

    pub fn with_ratio(&self, v_over_gamma: f64) -> Result<Self> {
        Ok(Self { params: self.params.with_ratio(v_over_gamma)?, ..*self })
    }

    pub fn with_size(&self, n_lossy: usize) -> Result<Self> {
        match self.topology {
            Topology::Dbs => Err(Error::Parameter("the DBS has a fixed size".into())),
            Topology::Linear { .. } => Self::linear(self.params, n_lossy),
            Topology::Ring { .. } => Self::ring(self.params, n_lossy, self.delta),
        }
    }

    /// Node number (1-based, interleaved order) refers to a lossy beta node.
    pub fn is_lossy_node(&self, node: usize) -> bool {
        node >= 1 && node <= self.dim() && node % 2 == 0
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        match self.topology {
            Topology::Dbs => build_dbs(&self.params),
            Topology::Linear { n_lossy } => build_linear(&self.params, n_lossy),
            Topology::Ring { n_lossy } => build_ring(&self.params, n_lossy, self.delta_value()?),
        }
    }
}

/// Dense complex-symmetric Hamiltonian together with the lattice it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<Complex64>,
    spec: LatticeSpec,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn gamma(&self) -> f64 {
        self.spec.params.gamma()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// The same couplings with every loss term removed (Hermitian part).
    pub fn lossless(&self) -> Hamiltonian {
        let mut matrix = self.matrix.clone();
        for j in 0..matrix.nrows() {
            matrix[(j, j)] = Complex64::new(0.0, 0.0);
        }
        Hamiltonian { matrix, spec: self.spec }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }
}

fn chain_matrix(params: &CouplingParams, dim: usize, n_lossy: usize, v2_bonds: usize) -> DMatrix<Complex64> {
    let (v1, v2) = (Complex64::new(params.v1(), 0.0), Complex64::new(params.v2(), 0.0));
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for n in 0..n_lossy {
        let b = 2 * n + 1;
        m[(b, b)] = Complex64::new(0.0, -params.gamma());
        m[(b - 1, b)] = v1;
        m[(b, b - 1)] = v1;
        if n < v2_bonds {
            m[(b, b + 1)] = v2;
            m[(b + 1, b)] = v2;
        }
    }
    m
}

pub fn build_dbs(params: &CouplingParams) -> Result<Hamiltonian> {
    let spec = LatticeSpec::dbs(*params);
    Ok(Hamiltonian { matrix: chain_matrix(params, 3, 1, 1), spec })
}

pub fn build_linear(params: &CouplingParams, n_lossy: usize) -> Result<Hamiltonian> {
    let spec = LatticeSpec::linear(*params, n_lossy)?;
    let dim = spec.dim();
    Ok(Hamiltonian { matrix: chain_matrix(params, dim, n_lossy, n_lossy), spec })
}

pub fn build_ring(params: &CouplingParams, n_lossy: usize, delta: f64) -> Result<Hamiltonian> {
    let spec = LatticeSpec::ring(*params, n_lossy, DeltaRule::Value(delta))?;
    let dim = spec.dim();
    let mut matrix = chain_matrix(params, dim, n_lossy, n_lossy - 1);
    let corner = Complex64::new(delta * params.v2(), 0.0);
    matrix[(0, dim - 1)] = corner;
    matrix[(dim - 1, 0)] = corner;
    Ok(Hamiltonian { matrix, spec })
}

/// Closing-bond weight `delta = (-1)^N_L (v1/v2)^N_L` that gives the ring a
/// zero eigenvalue.
pub fn balanced_delta(params: &CouplingParams, n_lossy: usize) -> Result<f64> {
    if n_lossy < 2 {
        return Err(Error::Parameter("ring lattice needs at least two lossy nodes".into()));
    }
    let (v1, v2) = (params.v1(), params.v2());
    if v2 <= 0.0 {
        return Err(Error::SingularParameter("v2 = v sin(phi) vanishes, no balancing delta exists".into()));
    }
    let magnitude = (v1 / v2).powi(n_lossy as i32);
    if !magnitude.is_finite() {
        return Err(Error::SingularParameter(format!("balancing delta overflows for phi = {}", params.phi())));
    }
    Ok(if n_lossy % 2 == 0 { magnitude } else { -magnitude })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn p(v: f64, phi: f64, gamma: f64) -> CouplingParams {
        CouplingParams::new(v, phi, gamma).unwrap()
    }

    #[test]
    fn dbs_entries() {
        let h = build_dbs(&p(0.4, FRAC_PI_4, 1.0)).unwrap();
        assert_eq!(h.entry(1, 1), Complex64::new(0.0, -1.0));
        assert!((h.entry(0, 1).re - 0.282_842_712_474_619).abs() < 1e-12);
        assert_eq!(h.entry(0, 1), h.entry(1, 0));
        assert_eq!(h.entry(0, 2), Complex64::new(0.0, 0.0));

        let h = build_dbs(&p(1.0, 0.1 * PI, 2.0)).unwrap();
        assert!((h.entry(1, 2).re - 0.309_016_994_374_947_4).abs() < 1e-12);
        assert_eq!(h.entry(1, 1), Complex64::new(0.0, -2.0));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(CouplingParams::new(0.0, 0.3, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(CouplingParams::new(1.0, 0.3, -1.0), Err(Error::Parameter(_))));
        assert!(matches!(CouplingParams::new(1.0, 2.0, 1.0), Err(Error::Parameter(_))));
        assert!(build_linear(&p(1.0, 0.3, 1.0), 0).is_err());
        assert!(build_ring(&p(1.0, 0.3, 1.0), 1, 1.0).is_err());
    }

    #[test]
    fn v_components_square_sum() {
        let c = p(2.7, 0.37, 1.0);
        let lhs = c.v1().powi(2) + c.v2().powi(2);
        assert!((lhs - c.v().powi(2)).abs() <= 1e-12 * c.v().powi(2));
    }

    #[test]
    fn linear_pattern() {
        let h = build_linear(&p(1.0, 0.1 * PI, 1.0), 2).unwrap();
        assert_eq!(h.dim(), 5);
        // (3,4) in 1-based numbering
        assert!((h.entry(2, 3).re - 0.951_056_516_295_153_5).abs() < 1e-12);
        for r in 0..5usize {
            for c in 0..5 {
                if r.abs_diff(c) > 1 {
                    assert_eq!(h.entry(r, c), Complex64::new(0.0, 0.0));
                }
            }
        }
        let h9 = build_linear(&p(1.0, FRAC_PI_4, 1.0), 9).unwrap();
        assert_eq!(h9.dim(), 19);
        let lossy = (0..19).filter(|&j| h9.entry(j, j) == Complex64::new(0.0, -1.0)).count();
        assert_eq!(lossy, 9);
    }

    #[test]
    fn linear_one_is_dbs() {
        let params = p(1.0, FRAC_PI_4, 1.0);
        assert_eq!(build_linear(&params, 1).unwrap().matrix(), build_dbs(&params).unwrap().matrix());
    }

    #[test]
    fn ring_corners() {
        let h = build_ring(&p(1.0, FRAC_PI_4, 1.0), 3, -1.0).unwrap();
        assert_eq!(h.dim(), 6);
        assert!((h.entry(0, 5).re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(h.entry(0, 5), h.entry(5, 0));

        let open = build_ring(&p(1.0, FRAC_PI_4, 1.0), 3, 0.0).unwrap();
        assert_eq!(open.entry(0, 5), Complex64::new(0.0, 0.0));
        // delta = 0 ring is the 7-node chain with its last alpha node removed
        let chain = build_linear(&p(1.0, FRAC_PI_4, 1.0), 3).unwrap();
        assert_eq!(open.matrix(), &chain.matrix().view((0, 0), (6, 6)).into_owned());
    }

    #[test]
    fn ring_with_balanced_delta() {
        let params = p(1.0, 0.23 * PI, 0.5);
        let delta = balanced_delta(&params, 4).unwrap();
        let expected = (1.0 / (0.23 * PI).tan()).powi(4);
        assert!((delta - expected).abs() < 1e-12 * expected);
        assert!((delta - 1.655_301_232_495).abs() < 1e-9);
        let h = LatticeSpec::balanced_ring(params, 4).unwrap().build().unwrap();
        assert!((h.entry(0, 7).re - delta * params.v2()).abs() < 1e-12);
    }

    #[test]
    fn balanced_delta_values() {
        let sym = p(1.0, FRAC_PI_4, 1.0);
        assert!((balanced_delta(&sym, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!((balanced_delta(&sym, 3).unwrap() + 1.0).abs() < 1e-12);
        let asym = p(1.0, 0.1 * PI, 1.0);
        assert!((balanced_delta(&asym, 3).unwrap() + 29.152_236_890_588).abs() < 1e-9);
        let flat = p(1.0, 0.0, 1.0);
        assert!(matches!(balanced_delta(&flat, 3), Err(Error::SingularParameter(_))));
    }

    #[test]
    fn structural_invariants() {
        let specs = [
            LatticeSpec::dbs(p(0.7, 0.4, 1.3)),
            LatticeSpec::linear(p(2.0, 0.9, 0.5), 6).unwrap(),
            LatticeSpec::balanced_ring(p(1.1, 0.6, 1.0), 5).unwrap(),
        ];
        for spec in specs {
            let h = spec.build().unwrap();
            assert_eq!(h.matrix(), &h.matrix().transpose());
            for j in 0..h.dim() {
                let expected = if spec.is_lossy_node(j + 1) { -spec.params.gamma() } else { 0.0 };
                assert_eq!(h.entry(j, j).im, expected);
                assert_eq!(h.entry(j, j).re, 0.0);
                for k in 0..h.dim() {
                    if j != k {
                        assert_eq!(h.entry(j, k).im, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn family_moves() {
        let spec = LatticeSpec::balanced_ring(p(1.0, 0.2 * PI, 1.0), 4).unwrap();
        let bigger = spec.with_size(7).unwrap();
        assert_eq!(bigger.dim(), 14);
        assert!(bigger.is_balanced().unwrap());
        let stronger = spec.with_ratio(3.0).unwrap();
        assert!((stronger.params.v() - 3.0).abs() < 1e-15);
        assert!(LatticeSpec::dbs(p(1.0, 0.3, 1.0)).with_size(3).is_err());
        let off = LatticeSpec::ring(p(1.0, 0.3, 1.0), 4, DeltaRule::Value(0.5)).unwrap();
        assert!(!off.is_balanced().unwrap());
    }
}
