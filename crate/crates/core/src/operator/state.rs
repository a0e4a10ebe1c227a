use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;

use super::{ensure_hermitian, ComplexMatrix, ComplexVector, HilbertSpace, ZERO};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;
/// Eigenvalues down to this are accepted as round-off; below it is an error.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Density,
}

#[derive(Clone, Debug)]
enum StateData {
    Pure(ComplexVector),
    Density(ComplexMatrix),
}

/// A pure state vector or a density matrix over an explicit tensor structure.
#[derive(Clone, Debug)]
pub struct QuantumState {
    space: HilbertSpace,
    data: StateData,
}

impl QuantumState {
    pub fn pure(space: HilbertSpace, amplitudes: ComplexVector) -> Result<Self> {
        check_len(&space, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} != 1")));
        }
        Ok(Self {
            space,
            data: StateData::Pure(amplitudes),
        })
    }

    /// Normalizes `amplitudes` before building the state.
    pub fn pure_normalized(space: HilbertSpace, amplitudes: ComplexVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::pure(space, amplitudes / C64::new(norm, 0.0))
    }

    pub fn density(space: HilbertSpace, rho: ComplexMatrix) -> Result<Self> {
        let state = Self::density_unchecked_trace(space, rho)?;
        let tr = state.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        Ok(state)
    }

    /// Density operator whose trace may fall below one, as produced by
    /// projecting onto a subspace. Hermiticity and positivity still hold.
    pub fn subnormalized_density(space: HilbertSpace, rho: ComplexMatrix) -> Result<Self> {
        let state = Self::density_unchecked_trace(space, rho)?;
        let tr = state.trace();
        if tr > 1.0 + NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} > 1")));
        }
        Ok(state)
    }

    fn density_unchecked_trace(space: HilbertSpace, rho: ComplexMatrix) -> Result<Self> {
        check_len(&space, rho.nrows())?;
        check_len(&space, rho.ncols())?;
        ensure_hermitian(&rho, 1e-10)?;
        let min = min_eigenvalue(&rho);
        if min < -NEGATIVE_EIGEN_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self {
            space,
            data: StateData::Density(rho),
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        let dim = space.total_dim();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut v = ComplexVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self::pure(space, v)
    }

    /// Tensor product of pure single-subsystem states, subsystem 0 first.
    pub fn product(factors: &[ComplexVector]) -> Result<Self> {
        let dims: Vec<usize> = factors.iter().map(|f| f.len()).collect();
        let space = HilbertSpace::new(dims)?;
        let mut v = ComplexVector::from_element(1, C64::new(1.0, 0.0));
        for f in factors {
            v = v.kronecker(f);
        }
        Self::pure_normalized(space, v)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn kind(&self) -> StateKind {
        match self.data {
            StateData::Pure(_) => StateKind::Pure,
            StateData::Density(_) => StateKind::Density,
        }
    }

    pub fn as_vector(&self) -> Option<&ComplexVector> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&ComplexMatrix> {
        match &self.data {
            StateData::Pure(_) => None,
            StateData::Density(m) => Some(m),
        }
    }

    /// Density matrix form (outer product for pure states).
    pub fn to_density_matrix(&self) -> ComplexMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self {
            space: self.space.clone(),
            data: StateData::Density(self.to_density_matrix()),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Density(m) => m.trace().re,
        }
    }

    pub(crate) fn from_parts_unchecked_pure(space: HilbertSpace, v: ComplexVector) -> Self {
        Self {
            space,
            data: StateData::Pure(v),
        }
    }

    pub(crate) fn from_parts_unchecked_density(space: HilbertSpace, m: ComplexMatrix) -> Self {
        Self {
            space,
            data: StateData::Density(m),
        }
    }
}

fn check_len(space: &HilbertSpace, len: usize) -> Result<()> {
    if space.total_dim() != len {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            found: len,
        });
    }
    Ok(())
}

pub(crate) fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x))
}

/// `F = <ψ|ρ|ψ>`, clamped at zero. `rho` may also be pure, in which case the
/// result is `|<φ|ψ>|²`.
pub fn state_fidelity(rho: &QuantumState, psi: &QuantumState) -> Result<f64> {
    if rho.space != psi.space {
        return Err(Error::DimensionMismatch {
            expected: rho.space.total_dim(),
            found: psi.space.total_dim(),
        });
    }
    let psi = psi
        .as_vector()
        .ok_or_else(|| Error::InvalidState("reference state must be pure".into()))?;
    let f = match &rho.data {
        StateData::Pure(phi) => phi.dotc(psi).norm_sqr(),
        StateData::Density(m) => psi.dotc(&(m * psi)).re,
    };
    Ok(f.max(0.0))
}

/// Reduced density matrix on the `keep` subsystems (in increasing order).
pub fn partial_trace(rho: &QuantumState, keep: &[usize]) -> Result<QuantumState> {
    let space = &rho.space;
    let n = space.n_subsystems();
    if keep.is_empty() {
        return Err(Error::InvalidSites("nothing to keep".into()));
    }
    for (k, &s) in keep.iter().enumerate() {
        if s >= n {
            return Err(Error::IndexOutOfRange { index: s, len: n });
        }
        if k > 0 && keep[k - 1] >= s {
            return Err(Error::InvalidSites(format!(
                "keep list must be strictly increasing, got {keep:?}"
            )));
        }
    }
    let full = rho.to_density_matrix();
    let kept_space = HilbertSpace::new(keep.iter().map(|&k| space.dims()[k]).collect())?;
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    if traced.is_empty() {
        return Ok(QuantumState::from_parts_unchecked_density(kept_space, full));
    }

    let strides = space.strides();
    let offsets = |subs: &[usize], sub_dims: Vec<usize>| -> Vec<usize> {
        let total: usize = sub_dims.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut off = 0;
                for (&s, &d) in subs.iter().zip(&sub_dims).rev() {
                    off += (idx % d) * strides[s];
                    idx /= d;
                }
                off
            })
            .collect()
    };
    let keep_off = offsets(keep, keep.iter().map(|&k| space.dims()[k]).collect());
    let trace_off = offsets(&traced, traced.iter().map(|&k| space.dims()[k]).collect());

    let kd = keep_off.len();
    let mut out = ComplexMatrix::zeros(kd, kd);
    for (r, &or) in keep_off.iter().enumerate() {
        for (c, &oc) in keep_off.iter().enumerate() {
            let mut acc = ZERO;
            for &ot in &trace_off {
                acc += full[(or + ot, oc + ot)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(QuantumState::from_parts_unchecked_density(kept_space, out))
}

/// `Tr(ρ op)` or `<ψ|op|ψ>`, real part.
pub fn expectation(state: &QuantumState, op: &ComplexMatrix) -> Result<f64> {
    let dim = state.space.total_dim();
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: op.nrows(),
        });
    }
    ensure_hermitian(op, 1e-10)?;
    let value = match &state.data {
        StateData::Pure(v) => v.dotc(&(op * v)),
        StateData::Density(m) => (m * op).trace(),
    };
    Ok(value.re)
}
