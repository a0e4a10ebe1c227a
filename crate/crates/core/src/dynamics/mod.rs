//! Ideal and noisy execution of gate sequences.

pub mod device;
pub mod lindblad;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpinHamiltonian;
use crate::operator::{embed, expm_hermitian, kron, ComplexMatrix, HermitianSpectrum, HilbertSpace, QuantumState};
use crate::protocol::{GateKind, GateSequence};

pub use device::{
    run_protocol_on_device, CalibrationMode, DeviceCalibration, DeviceRun, DeviceSettings, DeviceSimulator,
    NoiseParams, Trajectory, TrajectoryMetadata, TrajectorySample,
};
pub use lindblad::{lindblad_evolve, Channel, IntegratorSettings, LindbladPropagator};

/// `exp(-i H t) |ψ>` for pure states, `U ρ U†` for density matrices.
pub fn evolve_unitary(h: &ComplexMatrix, t: f64, state: &QuantumState) -> Result<QuantumState> {
    let u = expm_hermitian(h, t)?;
    apply_unitary(&u, state)
}

pub fn apply_unitary(u: &ComplexMatrix, state: &QuantumState) -> Result<QuantumState> {
    let dim = state.space().total_dim();
    if u.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.nrows(),
        });
    }
    let space = state.space().clone();
    Ok(match state.as_vector() {
        Some(v) => QuantumState::from_parts_unchecked_pure(space, u * v),
        None => {
            let rho = state.to_density_matrix();
            QuantumState::from_parts_unchecked_density(space, u * rho * u.adjoint())
        }
    })
}

/// `exp[-i θ (σxσx + σyσy)/2]` on two qubits.
pub fn xy_unitary(phase: f64) -> ComplexMatrix {
    let x = crate::operator::pauli_x();
    let y = crate::operator::pauli_y();
    let h = (kron(&x, &x).expect("4x4") + kron(&y, &y).expect("4x4")) * C64::new(0.5, 0.0);
    expm_hermitian(&h, phase).expect("hermitian")
}

/// Unitary of one gate on the `n`-qubit register described by `space`.
pub fn gate_unitary(kind: &GateKind, space: &HilbertSpace) -> Result<ComplexMatrix> {
    match kind {
        GateKind::XyEvolution { targets, phase } => {
            let mut sites = targets.to_vec();
            sites.sort_unstable();
            embed(&xy_unitary(*phase), &sites, space)
        }
        GateKind::Rotation { axis, angle: phi, targets }
        | GateKind::IdealField {
            axis,
            phase: phi,
            targets,
        } => {
            let single = expm_hermitian(&axis.matrix(), *phi)?;
            let dim = space.total_dim();
            let mut u = ComplexMatrix::identity(dim, dim);
            for &t in targets {
                u = embed(&single, &[t], space)? * u;
            }
            Ok(u)
        }
    }
}

/// Runs `seq` exactly, returning the final state and the composed unitary.
pub fn run_sequence_ideal(seq: &GateSequence, state: &QuantumState) -> Result<(QuantumState, ComplexMatrix)> {
    seq.validate()?;
    let space = HilbertSpace::qubits(seq.n_sites)?;
    if state.space() != &space {
        return Err(Error::DimensionMismatch {
            expected: space.total_dim(),
            found: state.space().total_dim(),
        });
    }
    let dim = space.total_dim();
    let mut u = ComplexMatrix::identity(dim, dim);
    for gate in &seq.gates {
        u = gate_unitary(&gate.kind, &space)? * u;
    }
    let out = apply_unitary(&u, state)?;
    Ok((out, u))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitalErrorPoint {
    pub trotter_steps: usize,
    pub theta: f64,
    /// `|<ψ_ideal(θ)|ψ_digital(θ)>|²`
    pub fidelity: f64,
    pub loss: f64,
}

/// Fidelity loss of the compiled sequence against `exp(-i θ H)`, for every
/// `(l, θ)` combination. Results are sorted by `(l, θ)`.
pub fn digital_error_curve<F>(
    reference: &SpinHamiltonian,
    compile: F,
    thetas: &[f64],
    trotter_steps: &[usize],
    initial: &QuantumState,
) -> Result<Vec<DigitalErrorPoint>>
where
    F: Fn(f64, usize) -> Result<GateSequence> + Sync,
{
    let spectrum = HermitianSpectrum::new(&reference.to_matrix()?)?;
    let psi0 = initial
        .as_vector()
        .ok_or_else(|| Error::InvalidState("initial state must be pure".into()))?;
    let cells: Vec<(usize, f64)> = trotter_steps
        .iter()
        .flat_map(|&l| thetas.iter().map(move |&t| (l, t)))
        .collect();
    let mut points = cells
        .par_iter()
        .map(|&(l, theta)| {
            let seq = compile(theta, l)?;
            let (out, _) = run_sequence_ideal(&seq, initial)?;
            let ideal = spectrum.propagator(theta) * psi0;
            let digital = out.as_vector().expect("pure");
            let overlap = ideal.dotc(digital);
            // ‖ψ_d − ψ_e<ψ_e|ψ_d>‖² equals 1 − |<ψ_e|ψ_d>|² without cancellation.
            let loss = (digital - &ideal * overlap).norm_squared();
            Ok(DigitalErrorPoint {
                trotter_steps: l,
                theta,
                fidelity: overlap.norm_sqr(),
                loss,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.trotter_steps.cmp(&b.trotter_steps).then(a.theta.total_cmp(&b.theta)));
    Ok(points)
}

/// Linear accumulation `l · ε` of a per-step gate error.
pub fn accumulated_gate_error(epsilon: f64, trotter_steps: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("must lie in [0, 1), got {epsilon}")));
    }
    Ok(epsilon * trotter_steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{heisenberg, tfim, Boundary};
    use crate::protocol::{compile_heisenberg_chain, compile_heisenberg_pair, compile_tfim};
    use std::f64::consts::FRAC_PI_4;

    fn up_down_up() -> QuantumState {
        QuantumState::basis(HilbertSpace::qubits(3).unwrap(), 0b010).unwrap()
    }

    #[test]
    fn heisenberg_pair_is_exact() {
        let h = heisenberg(2, 1.0, Boundary::Open).unwrap().to_matrix().unwrap();
        for theta in [0.0, 0.3, FRAC_PI_4, 1.2, -0.7] {
            let seq = compile_heisenberg_pair(theta).unwrap();
            let (_, u) = run_sequence_ideal(&seq, &QuantumState::basis(HilbertSpace::qubits(2).unwrap(), 1).unwrap())
                .unwrap();
            let exact = expm_hermitian(&h, theta).unwrap();
            // Equal up to a global phase.
            let overlap = (exact.adjoint() * &u).trace() / C64::new(4.0, 0.0);
            assert!((overlap.norm() - 1.0).abs() < 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn chain_error_shrinks_with_steps() {
        let reference = heisenberg(3, 1.0, Boundary::Open).unwrap();
        let pts = digital_error_curve(
            &reference,
            |t, l| compile_heisenberg_chain(3, t, l, Boundary::Open),
            &[FRAC_PI_4],
            &[8, 2, 20, 4],
            &up_down_up(),
        )
        .unwrap();
        // Independent dense-matrix oracle at θ = π/4.
        let oracle = [
            (2, 0.039541612050131514),
            (4, 0.009650168611407772),
            (8, 0.002435869576292271),
            (20, 0.0003938445817863734),
        ];
        assert_eq!(pts.len(), 4);
        for (p, (l, loss)) in pts.iter().zip(oracle) {
            assert_eq!(p.trotter_steps, l);
            assert!((p.loss - loss).abs() < 1e-12, "l={l}: {}", p.loss);
        }
    }

    #[test]
    fn tfim_zero_angle_is_identity() {
        let reference = tfim(3, 1.0, 1.0, Boundary::Open).unwrap();
        let pts = digital_error_curve(
            &reference,
            |t, l| compile_tfim(3, t, t, l, Boundary::Open),
            &[0.0],
            &[3],
            &up_down_up(),
        )
        .unwrap();
        assert!(pts[0].loss < 1e-14);
    }

    #[test]
    fn accumulated_error_is_linear() {
        assert_eq!(accumulated_gate_error(0.01, 3).unwrap(), 0.03);
        assert_eq!(accumulated_gate_error(0.05, 0).unwrap(), 0.0);
        assert!(accumulated_gate_error(1.0, 2).is_err());
        assert!(accumulated_gate_error(-0.1, 2).is_err());
    }

    #[test]
    fn evolve_unitary_on_mixed_state_keeps_trace() {
        let space = HilbertSpace::qubits(2).unwrap();
        let rho = QuantumState::basis(space, 1).unwrap().to_density();
        let h = heisenberg(2, 1.0, Boundary::Open).unwrap().to_matrix().unwrap();
        let out = evolve_unitary(&h, 0.4, &rho).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-13);
    }
}
