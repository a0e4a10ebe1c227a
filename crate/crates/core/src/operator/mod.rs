//! Dense complex operators on tensor-product Hilbert spaces.
//!
//! Tensor order is fixed throughout the crate: subsystem 0 is the leftmost
//! Kronecker factor, so for dims `[d0, d1, ..., dk]` the flat basis index of
//! `|i0, i1, ..., ik>` is `i0 * (d1 * ... * dk) + ... + ik`.

pub(crate) mod state;

pub use state::{expectation, partial_trace, state_fidelity, QuantumState, StateKind};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Largest total dimension accepted by default.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Entrywise tolerance used when checking that an operator is Hermitian,
/// relative to the largest entry magnitude.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(dims: Vec<usize>, cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSites("no subsystems".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::param("dims", format!("subsystem dimension {d} < 2")));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total.checked_mul(d).filter(|&t| t <= cap).ok_or(
                Error::DimensionCap {
                    dim: total.saturating_mul(d),
                    cap,
                },
            )?;
        }
        Ok(Self { dims })
    }

    /// `n` two-level sites.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: stride of the last subsystem is 1.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Splits a flat basis index into per-subsystem digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_with_cap(a, b, DEFAULT_DIM_CAP)
}

pub fn kron_with_cap(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let rows = ra.saturating_mul(rb);
    let cols = ca.saturating_mul(cb);
    if rows > cap || cols > cap {
        return Err(Error::DimensionCap {
            dim: rows.max(cols),
            cap,
        });
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    }))
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::from_element(1, 1, ONE);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Lifts `op` acting on the listed subsystems to the full space, acting as
/// the identity on every other factor. `sites` must be strictly increasing and
/// `op` must act on the product of their dimensions in that order.
pub fn embed(op: &ComplexMatrix, sites: &[usize], space: &HilbertSpace) -> Result<ComplexMatrix> {
    let n = space.n_subsystems();
    if sites.is_empty() {
        return Err(Error::InvalidSites("empty site list".into()));
    }
    for (k, &s) in sites.iter().enumerate() {
        if s >= n {
            return Err(Error::IndexOutOfRange { index: s, len: n });
        }
        if k > 0 && sites[k - 1] >= s {
            return Err(Error::InvalidSites(format!(
                "sites must be strictly increasing, got {sites:?}"
            )));
        }
    }
    let local_dim: usize = sites.iter().map(|&s| space.dims()[s]).product();
    if op.nrows() != local_dim || op.ncols() != local_dim {
        return Err(Error::DimensionMismatch {
            expected: local_dim,
            found: op.nrows().max(op.ncols()),
        });
    }

    let dim = space.total_dim();
    let strides = space.strides();
    let rest: Vec<usize> = (0..n).filter(|k| !sites.contains(k)).collect();
    let rest_dim: usize = rest.iter().map(|&k| space.dims()[k]).product();

    // Offset in the full index contributed by a local (site-ordered) index.
    let local_offsets: Vec<usize> = (0..local_dim)
        .map(|mut li| {
            let mut off = 0;
            for &s in sites.iter().rev() {
                let d = space.dims()[s];
                off += (li % d) * strides[s];
                li /= d;
            }
            off
        })
        .collect();

    let mut out = ComplexMatrix::zeros(dim, dim);
    for mut ri in 0..rest_dim {
        let mut base = 0;
        for &k in rest.iter().rev() {
            let d = space.dims()[k];
            base += (ri % d) * strides[k];
            ri /= d;
        }
        for (lr, &or) in local_offsets.iter().enumerate() {
            for (lc, &oc) in local_offsets.iter().enumerate() {
                let v = op[(lr, lc)];
                if v != ZERO {
                    out[(base + or, base + oc)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Single-site building blocks.
///
/// Qubit matrices use the basis `(|↑>, |↓>)` with `σz|↑> = |↑>`, so
/// `σ⁻ = |↓><↑|`. Bosonic and multilevel operators use the number basis
/// `|0>, |1>, ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    PauliX,
    PauliY,
    PauliZ,
    PauliPlus,
    PauliMinus,
    Identity(usize),
    /// Truncated annihilation operator on `d` levels.
    Annihilation(usize),
    /// `|i><i+1|` on `d` levels.
    Ladder { dim: usize, level: usize },
    /// `|i><i|` on `d` levels.
    Projector { dim: usize, level: usize },
}

pub fn elementary(kind: Elementary) -> Result<ComplexMatrix> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let m = match kind {
        Elementary::PauliX => ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Elementary::PauliY => {
            ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
        }
        Elementary::PauliZ => ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        Elementary::PauliPlus => ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]),
        Elementary::PauliMinus => ComplexMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]),
        Elementary::Identity(d) => {
            check_dim(d)?;
            ComplexMatrix::identity(d, d)
        }
        Elementary::Annihilation(d) => {
            check_dim(d)?;
            let mut m = ComplexMatrix::zeros(d, d);
            for i in 0..d - 1 {
                m[(i, i + 1)] = c(((i + 1) as f64).sqrt(), 0.0);
            }
            m
        }
        Elementary::Ladder { dim, level } => {
            check_dim(dim)?;
            if level + 1 >= dim {
                return Err(Error::param(
                    "level",
                    format!("ladder level {level} needs level+1 < {dim}"),
                ));
            }
            let mut m = ComplexMatrix::zeros(dim, dim);
            m[(level, level + 1)] = ONE;
            m
        }
        Elementary::Projector { dim, level } => {
            check_dim(dim)?;
            if level >= dim {
                return Err(Error::param("level", format!("{level} >= {dim}")));
            }
            let mut m = ComplexMatrix::zeros(dim, dim);
            m[(level, level)] = ONE;
            m
        }
    };
    Ok(m)
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::param("dim", format!("dimension {d} < 2")));
    }
    Ok(())
}

pub fn pauli_x() -> ComplexMatrix {
    elementary(Elementary::PauliX).expect("fixed size")
}

pub fn pauli_y() -> ComplexMatrix {
    elementary(Elementary::PauliY).expect("fixed size")
}

pub fn pauli_z() -> ComplexMatrix {
    elementary(Elementary::PauliZ).expect("fixed size")
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

/// Rejects `m` unless it is Hermitian to `tol` relative to its largest entry.
pub fn ensure_hermitian(m: &ComplexMatrix, tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let deviation = hermitian_deviation(m);
    if deviation > tol * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Spectral decomposition `h = V diag(λ) V†` of a Hermitian matrix, reusable
/// for propagators at many times.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        ensure_hermitian(h, 1e-10)?;
        // Exact symmetrization keeps the solver on the Hermitian path.
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        Ok(Self {
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `exp(-i h t)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda * t);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        scaled * v.adjoint()
    }
}

/// `U = exp(-i h t)` through the Hermitian eigendecomposition of `h`.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(HermitianSpectrum::new(h)?.propagator(t))
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0, |acc: f64, &s| acc.max(s))
}
