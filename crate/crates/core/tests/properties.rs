use dqsim_core::dynamics::{run_sequence_ideal, Channel, IntegratorSettings, LindbladPropagator};
use dqsim_core::model::Boundary;
use dqsim_core::operator::{
    expm_hermitian, kron, max_abs, partial_trace, pauli_x, pauli_y, pauli_z, state_fidelity, ComplexMatrix,
    ComplexVector, HilbertSpace, QuantumState,
};
use dqsim_core::protocol::{compile_heisenberg_chain, compile_tfim};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| ComplexMatrix::from_vec(n, n, v))
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|m| (&m + m.adjoint()) * C64::new(0.5, 0.0))
}

fn state(n: usize) -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec(complex(), n)
        .prop_filter("nonzero", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let v = ComplexVector::from_vec(v);
            let n = v.norm();
            v / C64::new(n, 0.0)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expm_is_unitary(h in hermitian(6), t in -3.0..3.0f64) {
        let u = expm_hermitian(&h, t).unwrap();
        prop_assert!(max_abs(&(u.adjoint() * &u - ComplexMatrix::identity(6, 6))) < 1e-12);
    }

    #[test]
    fn expm_group_property(h in hermitian(4), s in -2.0..2.0f64, t in -2.0..2.0f64) {
        let lhs = expm_hermitian(&h, s).unwrap() * expm_hermitian(&h, t).unwrap();
        let rhs = expm_hermitian(&h, s + t).unwrap();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-11);
    }

    #[test]
    fn kron_is_associative(a in matrix(2), b in matrix(3), c in matrix(2)) {
        let l = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let r = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        prop_assert!(max_abs(&(l - r)) < 1e-14);
    }

    #[test]
    fn kron_mixed_product(a in matrix(2), b in matrix(2), c in matrix(2), d in matrix(2)) {
        let l = kron(&a, &b).unwrap() * kron(&c, &d).unwrap();
        let r = kron(&(&a * &c), &(&b * &d)).unwrap();
        prop_assert!(max_abs(&(l - r)) < 1e-13);
    }

    #[test]
    fn fidelity_ignores_global_phase(v in state(4), w in state(4), phi in 0.0..6.3f64) {
        let space = HilbertSpace::qubits(2).unwrap();
        let a = QuantumState::pure(space.clone(), v.clone()).unwrap();
        let b = QuantumState::pure(space.clone(), w.clone()).unwrap();
        let b_phased = QuantumState::pure(space, w * C64::from_polar(1.0, phi)).unwrap();
        let f1 = state_fidelity(&a, &b).unwrap();
        let f2 = state_fidelity(&a, &b_phased).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f1));
    }

    #[test]
    fn fidelity_is_linear_in_rho(v in state(4), w in state(4), psi in state(4), p in 0.0..1.0f64) {
        let space = HilbertSpace::qubits(2).unwrap();
        let rv = QuantumState::pure(space.clone(), v).unwrap().to_density_matrix();
        let rw = QuantumState::pure(space.clone(), w).unwrap().to_density_matrix();
        let mix = &rv * C64::new(p, 0.0) + &rw * C64::new(1.0 - p, 0.0);
        let psi = QuantumState::pure(space.clone(), psi).unwrap();
        let f = |m: ComplexMatrix| state_fidelity(&QuantumState::density(space.clone(), m).unwrap(), &psi).unwrap();
        let lhs = f(mix);
        let rhs = p * f(rv) + (1.0 - p) * f(rw);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_keeps_trace(v in state(12)) {
        let space = HilbertSpace::new(vec![2, 3, 2]).unwrap();
        let rho = QuantumState::pure(space, v).unwrap().to_density();
        for keep in [vec![0], vec![1], vec![0, 2], vec![1, 2]] {
            let r = partial_trace(&rho, &keep).unwrap();
            prop_assert!((r.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn compiled_sequences_are_unitary(theta in 0.0..1.5f64, l in 1usize..5, periodic in any::<bool>(), v in state(8)) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let psi = QuantumState::pure(HilbertSpace::qubits(3).unwrap(), v).unwrap();
        for seq in [
            compile_heisenberg_chain(3, theta, l, boundary).unwrap(),
            compile_tfim(3, theta, 0.5 * theta, l, boundary).unwrap(),
        ] {
            let (out, u) = run_sequence_ideal(&seq, &psi).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-10);
            prop_assert!(max_abs(&(u.adjoint() * &u - ComplexMatrix::identity(8, 8))) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lindblad_preserves_trace_and_hermiticity(
        hx in -1.0..1.0f64, hz in -1.0..1.0f64, g1 in 0.0..0.5f64, g2 in 0.0..0.5f64, v in state(2),
    ) {
        let h = pauli_x() * C64::new(hx, 0.0) + pauli_z() * C64::new(hz, 0.0);
        let sm = ComplexMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0),
        ]);
        let channels = [Channel::new(sm, g1), Channel::new(pauli_y(), g2)];
        let prop = LindbladPropagator::new(&h, &channels, IntegratorSettings { dt: 1e-2, max_steps: 10_000 }).unwrap();
        let rho0 = &v * v.adjoint();
        let rho = prop.evolve(&rho0, 3.0).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(max_abs(&(&rho - rho.adjoint())) == 0.0);
    }
}
