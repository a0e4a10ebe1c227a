//! Spin-model Hamiltonians and the transmon–resonator device model.
//!
//! Spin Hamiltonians are weighted sums of Pauli strings. Coefficients are
//! angular frequencies (rad/s), or dimensionless when the Hamiltonian is used
//! as a phase generator with `θ = Jt`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    elementary, embed, kron_all, pauli_x, pauli_y, pauli_z, ComplexMatrix, Elementary,
    HilbertSpace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Axis::X => pauli_x(),
            Axis::Y => pauli_y(),
            Axis::Z => pauli_z(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::param("boundary", format!("unknown boundary `{other}`"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Nearest-neighbour bonds of a chain. A periodic chain adds the
/// `(n-1, 0)` bond when `n >= 3`; for two sites the ring is the single bond.
pub fn bonds(n: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n >= 3 {
        out.push((n - 1, 0));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    pub coefficient: f64,
    factors: BTreeMap<usize, Axis>,
}

impl PauliString {
    pub fn new(coefficient: f64, factors: impl IntoIterator<Item = (usize, Axis)>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::param("coefficient", "must be finite"));
        }
        let mut map = BTreeMap::new();
        for (site, axis) in factors {
            if map.insert(site, axis).is_some() {
                return Err(Error::InvalidSites(format!("site {site} repeated")));
            }
        }
        Ok(Self {
            coefficient,
            factors: map,
        })
    }

    pub fn identity(coefficient: f64) -> Result<Self> {
        Self::new(coefficient, [])
    }

    fn pair(coefficient: f64, i: usize, j: usize, axis: Axis) -> Result<Self> {
        Self::new(coefficient, [(i, axis), (j, axis)])
    }

    pub fn factors(&self) -> impl Iterator<Item = (usize, Axis)> + '_ {
        self.factors.iter().map(|(&s, &a)| (s, a))
    }

    pub fn max_site(&self) -> Option<usize> {
        self.factors.keys().next_back().copied()
    }

    /// Dense matrix on `n_sites` qubits.
    pub fn to_matrix(&self, n_sites: usize) -> Result<ComplexMatrix> {
        if let Some(s) = self.max_site().filter(|&s| s >= n_sites) {
            return Err(Error::IndexOutOfRange {
                index: s,
                len: n_sites,
            });
        }
        let id = ComplexMatrix::identity(2, 2);
        let per_site: Vec<ComplexMatrix> = (0..n_sites)
            .map(|s| self.factors.get(&s).map_or_else(|| id.clone(), |a| a.matrix()))
            .collect();
        Ok(kron_all(&per_site)? * C64::new(self.coefficient, 0.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    n_sites: usize,
    terms: Vec<PauliString>,
}

impl SpinHamiltonian {
    pub fn new(n_sites: usize, terms: Vec<PauliString>) -> Result<Self> {
        for t in &terms {
            if let Some(s) = t.max_site().filter(|&s| s >= n_sites) {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    len: n_sites,
                });
            }
        }
        Ok(Self { n_sites, terms })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    /// Same terms on a register of at least `n_sites` qubits.
    pub fn widen(mut self, n_sites: usize) -> Self {
        self.n_sites = self.n_sites.max(n_sites);
        self
    }

    /// Sum of two Hamiltonians on the larger of the two registers.
    pub fn plus(mut self, other: &SpinHamiltonian) -> Self {
        self.n_sites = self.n_sites.max(other.n_sites);
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.coefficient *= factor;
        }
        self
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n_sites;
        let mut out = ComplexMatrix::zeros(dim, dim);
        for t in &self.terms {
            out += t.to_matrix(self.n_sites)?;
        }
        Ok(out)
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::qubits(self.n_sites)
    }

    pub fn describe(&self) -> ModelDescription {
        ModelDescription {
            n_sites: self.n_sites,
            terms: self
                .terms
                .iter()
                .map(|t| TermDescription {
                    coefficient_hz: t.coefficient / (2.0 * PI),
                    factors: t
                        .factors()
                        .map(|(site, axis)| FactorDescription { site, axis })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_description(desc: &ModelDescription) -> Result<Self> {
        let terms = desc
            .terms
            .iter()
            .map(|t| {
                PauliString::new(
                    t.coefficient_hz * 2.0 * PI,
                    t.factors.iter().map(|f| (f.site, f.axis)),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(desc.n_sites, terms)
    }
}

/// Plain JSON form of a spin model. Coefficients are in Hz (`rad/s / 2π`).
///
/// ```json
/// {"n_sites": 2, "terms": [{"coefficient_hz": 1.0, "factors": [{"site": 0, "axis": "x"}, {"site": 1, "axis": "x"}]}]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDescription {
    pub n_sites: usize,
    pub terms: Vec<TermDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDescription {
    pub coefficient_hz: f64,
    pub factors: Vec<FactorDescription>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDescription {
    pub site: usize,
    pub axis: Axis,
}

/// `Σ J (σxσx + σyσy + σzσz)` over nearest neighbours.
pub fn heisenberg(n: usize, j: f64, boundary: Boundary) -> Result<SpinHamiltonian> {
    check_sites(n)?;
    let mut terms = Vec::new();
    for (a, b) in bonds(n, boundary) {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            terms.push(PauliString::pair(j, a, b, axis)?);
        }
    }
    SpinHamiltonian::new(n, terms)
}

/// `J/2 (σxσx + σyσy)` on sites `i`, `j`.
pub fn xy_pair(i: usize, j: usize, coupling: f64) -> Result<SpinHamiltonian> {
    check_pair(i, j)?;
    SpinHamiltonian::new(
        i.max(j) + 1,
        vec![
            PauliString::pair(coupling / 2.0, i, j, Axis::X)?,
            PauliString::pair(coupling / 2.0, i, j, Axis::Y)?,
        ],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotatedVariant {
    /// Conjugation by `R^x(π/4)` on both sites: `J/2 (σxσx + σzσz)`.
    Xz,
    /// Conjugation by `R^y(π/4)` on both sites: `J/2 (σyσy + σzσz)`.
    Yz,
    /// Conjugation by `R^x(π/2)` on the first site: `J/2 (σxσx − σyσy)`.
    XMinusY,
}

pub fn rotated_xy_pair(
    i: usize,
    j: usize,
    coupling: f64,
    variant: RotatedVariant,
) -> Result<SpinHamiltonian> {
    check_pair(i, j)?;
    let h = coupling / 2.0;
    let terms = match variant {
        RotatedVariant::Xz => vec![
            PauliString::pair(h, i, j, Axis::X)?,
            PauliString::pair(h, i, j, Axis::Z)?,
        ],
        RotatedVariant::Yz => vec![
            PauliString::pair(h, i, j, Axis::Y)?,
            PauliString::pair(h, i, j, Axis::Z)?,
        ],
        RotatedVariant::XMinusY => vec![
            PauliString::pair(h, i, j, Axis::X)?,
            PauliString::pair(-h, i, j, Axis::Y)?,
        ],
    };
    SpinHamiltonian::new(i.max(j) + 1, terms)
}

/// `J Σ σxσx` over nearest neighbours; on a three-site ring this is the
/// all-pairs frustrated model.
pub fn ising(n: usize, j: f64, boundary: Boundary) -> Result<SpinHamiltonian> {
    check_sites(n)?;
    let terms = bonds(n, boundary)
        .into_iter()
        .map(|(a, b)| PauliString::pair(j, a, b, Axis::X))
        .collect::<Result<Vec<_>>>()?;
    SpinHamiltonian::new(n, terms)
}

/// Ising chain plus a transverse field `B Σ σy`.
pub fn tfim(n: usize, j: f64, b: f64, boundary: Boundary) -> Result<SpinHamiltonian> {
    let mut h = ising(n, j, boundary)?;
    if b != 0.0 {
        for s in 0..n {
            h.terms.push(PauliString::new(b, [(s, Axis::Y)])?);
        }
    }
    Ok(h)
}

fn check_sites(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n_sites", format!("need at least 2 sites, got {n}")));
    }
    Ok(())
}

fn check_pair(i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(Error::InvalidSites(format!("pair sites must differ, got ({i}, {j})")));
    }
    Ok(())
}

/// Transmon–resonator device parameters. Frequencies are angular (rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    pub n_transmons: usize,
    pub levels_per_transmon: usize,
    /// First transition frequency of every transmon.
    pub omega1: f64,
    /// Relative anharmonicity `(ω2 − 2ω1)/ω1`.
    pub alpha_r: f64,
    pub omega_r: f64,
    pub g0: f64,
    pub fock_cutoff: usize,
    /// Optional per-transmon first transition frequencies, overriding `omega1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega1_per_transmon: Option<Vec<f64>>,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            n_transmons: 2,
            levels_per_transmon: 3,
            omega1: 2.0 * PI * 5e9,
            alpha_r: -0.1,
            omega_r: 2.0 * PI * 7.5e9,
            g0: 2.0 * PI * 200e6,
            fock_cutoff: 5,
            omega1_per_transmon: None,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_transmons < 1 {
            return Err(Error::param("n_transmons", "need at least one transmon"));
        }
        if self.levels_per_transmon < 2 {
            return Err(Error::param("levels_per_transmon", "must be >= 2"));
        }
        if self.fock_cutoff < 2 {
            return Err(Error::param("fock_cutoff", "must be >= 2"));
        }
        for (name, v) in [
            ("omega1", self.omega1),
            ("omega_r", self.omega_r),
            ("g0", self.g0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !self.alpha_r.is_finite() {
            return Err(Error::param("alpha_r", "must be finite"));
        }
        if let Some(list) = &self.omega1_per_transmon {
            if list.len() != self.n_transmons {
                return Err(Error::param(
                    "omega1_per_transmon",
                    format!("expected {} entries, got {}", self.n_transmons, list.len()),
                ));
            }
            if list.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::param("omega1_per_transmon", "entries must be positive"));
            }
        }
        Ok(())
    }

    pub fn omega1_of(&self, transmon: usize) -> f64 {
        self.omega1_per_transmon
            .as_ref()
            .map_or(self.omega1, |v| v[transmon])
    }

    /// Energy of level `k` above the ground state for a Duffing ladder
    /// `ω_k = k ω1 + k(k−1)/2 · α_r ω1`, so that `ω2 = (2 + α_r) ω1`.
    pub fn level_energy(&self, transmon: usize, k: usize) -> f64 {
        let w1 = self.omega1_of(transmon);
        let k = k as f64;
        k * w1 + 0.5 * k * (k - 1.0) * self.alpha_r * w1
    }

    /// Coupling of levels `i` and `i+1` to the resonator, `√(i+1) g0`.
    pub fn level_coupling(&self, i: usize) -> f64 {
        ((i + 1) as f64).sqrt() * self.g0
    }

    /// Transmons first, resonator last.
    pub fn space(&self) -> Result<HilbertSpace> {
        let mut dims = vec![self.levels_per_transmon; self.n_transmons];
        dims.push(self.fock_cutoff);
        HilbertSpace::new(dims)
    }

    pub fn resonator_index(&self) -> usize {
        self.n_transmons
    }
}

/// Lab-frame Hamiltonian
/// `Σ_ij ω_i^j |i,j><i,j| + ω_r a†a + Σ_ij g_{i,i+1} (|i,j><i+1,j| + h.c.)(a + a†)`.
pub fn device_hamiltonian(p: &DeviceParams) -> Result<(HilbertSpace, ComplexMatrix)> {
    p.validate()?;
    let space = p.space()?;
    let dim = space.total_dim();
    let d = p.levels_per_transmon;
    let res = p.resonator_index();

    let a = elementary(Elementary::Annihilation(p.fock_cutoff))?;
    let number = a.adjoint() * &a;
    let quadrature = &a + a.adjoint();
    // Σ_i √(i+1) g0 (|i><i+1| + h.c.) = g0 (b + b†) with b the truncated
    // annihilation operator of the transmon ladder.
    let b = elementary(Elementary::Annihilation(d))?;
    let transmon_coupling = (&b + b.adjoint()) * C64::new(p.g0, 0.0);

    let mut h = ComplexMatrix::zeros(dim, dim);
    h += embed(&(number * C64::new(p.omega_r, 0.0)), &[res], &space)?;
    for j in 0..p.n_transmons {
        let levels = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            (0..d).map(|k| C64::new(p.level_energy(j, k), 0.0)),
        ));
        h += embed(&levels, &[j], &space)?;
        let pair = crate::operator::kron(&transmon_coupling, &quadrature)?;
        let mut sites = vec![j, res];
        sites.sort_unstable();
        h += embed(&pair, &sites, &space)?;
    }
    Ok((space, h))
}

/// Second-order exchange rate `g0² ω1 / (ω1² − ω_r²)`; negative when the
/// qubits sit below the resonator.
pub fn dispersive_xy_rate(p: &DeviceParams) -> Result<f64> {
    let (w1, wr) = (p.omega1, p.omega_r);
    if (w1 - wr).abs() <= 1e-12 * wr.abs().max(w1.abs()) {
        return Err(Error::Resonance);
    }
    Ok(p.g0 * p.g0 * w1 / (w1 * w1 - wr * wr))
}

/// Qubit-subspace Pauli operator on a multilevel transmon: levels `|1>`
/// and `|0>` play `|↑>` and `|↓>`, higher levels are untouched (zero).
pub fn transmon_qubit_operator(levels: usize, qubit_op: &ComplexMatrix) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(levels, levels);
    // qubit index 0 = ↑ = level 1, qubit index 1 = ↓ = level 0
    let level_of = [1usize, 0usize];
    for r in 0..2 {
        for c in 0..2 {
            m[(level_of[r], level_of[c])] = qubit_op[(r, c)];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{commutator, expm_hermitian, hermitian_deviation, max_abs, HermitianSpectrum};
    use approx::assert_abs_diff_eq;

    fn sorted_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
        let mut ev = HermitianSpectrum::new(h).unwrap().eigenvalues;
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    #[test]
    fn heisenberg_counts_and_spectrum() {
        let h = heisenberg(2, 1.0, Boundary::Open).unwrap();
        assert_eq!(h.terms().len(), 3);
        assert!(h.terms().iter().all(|t| t.coefficient == 1.0));
        let ev = sorted_eigenvalues(&h.to_matrix().unwrap());
        for (got, want) in ev.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_eq!(heisenberg(3, 1.0, Boundary::Periodic).unwrap().terms().len(), 9);
        assert!(heisenberg(1, 1.0, Boundary::Open).is_err());
    }

    #[test]
    fn heisenberg_is_su2_symmetric() {
        for n in 2..=4 {
            for boundary in [Boundary::Open, Boundary::Periodic] {
                let h = heisenberg(n, 0.7, boundary).unwrap().to_matrix().unwrap();
                for axis in [Axis::X, Axis::Y, Axis::Z] {
                    let total = SpinHamiltonian::new(
                        n,
                        (0..n).map(|s| PauliString::new(1.0, [(s, axis)]).unwrap()).collect(),
                    )
                    .unwrap()
                    .to_matrix()
                    .unwrap();
                    assert!(max_abs(&commutator(&h, &total)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn xy_pair_structure() {
        let j = 2.0 * PI * 6e6;
        let h = xy_pair(0, 1, j).unwrap();
        assert_eq!(h.terms().len(), 2);
        for t in h.terms() {
            assert_abs_diff_eq!(t.coefficient, PI * 6e6);
        }
        let m = h.to_matrix().unwrap();
        assert!((0..4).all(|k| m[(k, k)] == C64::new(0.0, 0.0)));
        let ev = sorted_eigenvalues(&xy_pair(0, 1, 1.0).unwrap().to_matrix().unwrap());
        for (got, want) in ev.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(xy_pair(1, 1, 1.0).is_err());
    }

    #[test]
    fn xz_variant_is_conjugated_xy() {
        // Oracle: conjugate dense H^xy by exp[-iπ/4(σx_i + σx_j)].
        let j = 1.3;
        let xy = xy_pair(0, 1, j).unwrap().to_matrix().unwrap();
        let gen = SpinHamiltonian::new(
            2,
            vec![
                PauliString::new(1.0, [(0, Axis::X)]).unwrap(),
                PauliString::new(1.0, [(1, Axis::X)]).unwrap(),
            ],
        )
        .unwrap()
        .to_matrix()
        .unwrap();
        let r = expm_hermitian(&gen, PI / 4.0).unwrap();
        let conj = &r * xy * r.adjoint();
        let xz = rotated_xy_pair(0, 1, j, RotatedVariant::Xz)
            .unwrap()
            .to_matrix()
            .unwrap();
        assert!(max_abs(&(conj - xz)) < 1e-12);
    }

    #[test]
    fn x_minus_y_plus_xy_is_pure_xx() {
        let j = 0.9;
        let sum = xy_pair(0, 1, j)
            .unwrap()
            .plus(&rotated_xy_pair(0, 1, j, RotatedVariant::XMinusY).unwrap())
            .to_matrix()
            .unwrap();
        let xx = PauliString::new(j, [(0, Axis::X), (1, Axis::X)])
            .unwrap()
            .to_matrix(2)
            .unwrap();
        assert!(max_abs(&(sum - xx)) < 1e-15);
        for v in [RotatedVariant::Xz, RotatedVariant::Yz, RotatedVariant::XMinusY] {
            let m = rotated_xy_pair(0, 1, j, v).unwrap().to_matrix().unwrap();
            assert_abs_diff_eq!(m.trace().norm(), 0.0);
        }
    }

    #[test]
    fn pair_blocks_commute() {
        let mats: Vec<_> = [
            xy_pair(0, 1, 1.0).unwrap(),
            rotated_xy_pair(0, 1, 1.0, RotatedVariant::Xz).unwrap(),
            rotated_xy_pair(0, 1, 1.0, RotatedVariant::Yz).unwrap(),
        ]
        .iter()
        .map(|h| h.to_matrix().unwrap())
        .collect();
        for a in &mats {
            for b in &mats {
                assert!(max_abs(&commutator(a, b)) < 1e-12);
            }
        }
    }

    #[test]
    fn ising_and_tfim() {
        let h = ising(3, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(h.terms().len(), 3);
        assert_eq!(tfim(3, 1.0, 0.0, Boundary::Periodic).unwrap(), h);
        assert_eq!(tfim(3, 1.0, 0.5, Boundary::Open).unwrap().terms().len(), 5);
        let ev = sorted_eigenvalues(&h.to_matrix().unwrap());
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        let degeneracy = ev.iter().filter(|&&e| (e + 1.0).abs() < 1e-9).count();
        assert_eq!(degeneracy, 6);
        assert!(ising(1, 1.0, Boundary::Open).is_err());
    }

    #[test]
    fn spin_hamiltonians_are_hermitian() {
        for h in [
            heisenberg(4, 0.3, Boundary::Periodic).unwrap(),
            tfim(4, 1.0, 0.4, Boundary::Open).unwrap(),
            rotated_xy_pair(0, 2, 1.0, RotatedVariant::XMinusY).unwrap(),
        ] {
            assert!(hermitian_deviation(&h.to_matrix().unwrap()) < 1e-14);
        }
    }

    #[test]
    fn description_round_trip() {
        let h = tfim(3, 2.0 * PI * 1e6, 2.0 * PI * 0.5e6, Boundary::Periodic).unwrap();
        let json = serde_json::to_string(&h.describe()).unwrap();
        let back: ModelDescription = serde_json::from_str(&json).unwrap();
        assert_abs_diff_eq!(back.terms[0].coefficient_hz, 1e6, epsilon = 1e-6);
        let h2 = SpinHamiltonian::from_description(&back).unwrap();
        assert!(max_abs(&(h.to_matrix().unwrap() - h2.to_matrix().unwrap())) < 1e-6);
    }

    #[test]
    fn device_levels_and_couplings() {
        let p = DeviceParams::default();
        assert_abs_diff_eq!(p.level_energy(0, 2), 2.0 * PI * 9.5e9, epsilon = 1e-3);
        assert_abs_diff_eq!(p.level_coupling(1), 2f64.sqrt() * p.g0);
        let (space, h) = device_hamiltonian(&p).unwrap();
        assert_eq!(space.dims(), &[3, 3, 5]);
        assert!(hermitian_deviation(&h) < 1e-14 * max_abs(&h));
        // <1,0,0| H |0,0,1> = g0, <2,0,1| H |1,0,0> = √2 g0
        let idx = |d: &[usize]| space.index_of(d);
        assert_abs_diff_eq!(h[(idx(&[1, 0, 0]), idx(&[0, 0, 1]))].re, p.g0);
        assert_abs_diff_eq!(
            h[(idx(&[2, 0, 1]), idx(&[1, 0, 0]))].re,
            2f64.sqrt() * p.g0,
            epsilon = 1e-3
        );
    }

    #[test]
    fn uncoupled_device_is_diagonal_with_additive_spectrum() {
        let p = DeviceParams {
            g0: 1e-300,
            ..DeviceParams::default()
        };
        let (space, h) = device_hamiltonian(&p).unwrap();
        for r in 0..space.total_dim() {
            for c in 0..space.total_dim() {
                if r != c {
                    assert!(h[(r, c)].norm() < 1e-290);
                }
            }
            let d = space.digits(r);
            let expected = p.level_energy(0, d[0]) + p.level_energy(1, d[1]) + d[2] as f64 * p.omega_r;
            assert_abs_diff_eq!(h[(r, r)].re, expected, epsilon = 1e-3);
        }
        assert!(DeviceParams { g0: 0.0, ..DeviceParams::default() }.validate().is_err());
    }

    #[test]
    fn dispersive_rate_values() {
        let p = DeviceParams::default();
        let j = dispersive_xy_rate(&p).unwrap();
        assert!(j < 0.0);
        assert_abs_diff_eq!(j.abs() / (2.0 * PI), 6.4e6, epsilon = 1e-3);
        let doubled = DeviceParams { g0: 2.0 * p.g0, ..p.clone() };
        assert_abs_diff_eq!(dispersive_xy_rate(&doubled).unwrap() / j, 4.0, epsilon = 1e-12);
        let tiny = DeviceParams { g0: 1e-30, ..p.clone() };
        assert!(dispersive_xy_rate(&tiny).unwrap().abs() < 1e-40);
        let res = DeviceParams { omega_r: p.omega1, ..p };
        assert!(matches!(dispersive_xy_rate(&res), Err(Error::Resonance)));
    }
}
