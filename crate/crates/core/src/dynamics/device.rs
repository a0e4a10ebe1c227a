//! Execution of gate sequences on the transmon–resonator device with
//! Lindblad noise.
//!
//! XY segments run the full lab-frame device Hamiltonian for the calibrated
//! gate time. Afterwards the free precession of the dressed qubits is
//! removed by a diagonal frame correction. Rotations are instantaneous and
//! act on levels `{|0>, |1>}` of each transmon only.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lindblad::{Channel, IntegratorSettings, LindbladPropagator};
use crate::error::{Error, Result};
use crate::model::{device_hamiltonian, dispersive_xy_rate, transmon_qubit_operator, DeviceParams, SpinHamiltonian};
use crate::operator::{
    elementary, embed, expm_hermitian, partial_trace, pauli_x, pauli_z, ComplexMatrix, Elementary, HermitianSpectrum,
    HilbertSpace, QuantumState,
};
use crate::protocol::{GateKind, GateSequence};

/// Dissipation rates in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Resonator photon loss, `κ L(a)`.
    pub kappa: f64,
    /// Qubit dephasing, `Γφ L(σz)`.
    pub gamma_phi: f64,
    /// Qubit relaxation, `Γ− L(σ−)`.
    pub gamma_minus: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            kappa: two_pi * 10e3,
            gamma_phi: two_pi * 20e3,
            gamma_minus: two_pi * 20e3,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self {
            kappa: 0.0,
            gamma_phi: 0.0,
            gamma_minus: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma_phi", self.gamma_phi),
            ("gamma_minus", self.gamma_minus),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Collapse channels on the device space.
    pub fn channels(&self, device: &DeviceParams, space: &HilbertSpace) -> Result<Vec<Channel>> {
        let d = device.levels_per_transmon;
        let a = elementary(Elementary::Annihilation(device.fock_cutoff))?;
        let sz = transmon_qubit_operator(d, &pauli_z());
        let sm = transmon_qubit_operator(d, &elementary(Elementary::PauliMinus)?);
        let mut out = vec![Channel::new(embed(&a, &[device.resonator_index()], space)?, self.kappa)];
        for j in 0..device.n_transmons {
            out.push(Channel::new(embed(&sz, &[j], space)?, self.gamma_phi));
            out.push(Channel::new(embed(&sm, &[j], space)?, self.gamma_minus));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// Exchange rate and qubit frequency read off the exact single-excitation
    /// spectrum of the device Hamiltonian.
    #[default]
    DressedSpectrum,
    /// Second-order closed forms `J = g0² ω1/(ω1² − ω_r²)` and
    /// `ω̃1 = ω1 + g0²/(ω1 − ω_r)`.
    ClosedForm,
}

/// Gate-time and frame calibration of the XY interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceCalibration {
    pub mode: CalibrationMode,
    /// Signed coefficient `c` of the realized `c (σxσx + σyσy)/2`, rad/s.
    pub exchange_rate: f64,
    /// Dressed `|0> ↔ |1>` frequency used for the frame correction, rad/s.
    pub qubit_frequency: f64,
}

impl DeviceCalibration {
    pub fn compute(params: &DeviceParams, mode: CalibrationMode) -> Result<Self> {
        params.validate()?;
        match mode {
            CalibrationMode::ClosedForm => {
                let exchange_rate = dispersive_xy_rate(params)?;
                let w1 = params.omega1;
                let shift = params.g0 * params.g0 / (w1 - params.omega_r);
                Ok(Self {
                    mode,
                    exchange_rate,
                    qubit_frequency: w1 + shift,
                })
            }
            CalibrationMode::DressedSpectrum => Self::dressed(params),
        }
    }

    fn dressed(params: &DeviceParams) -> Result<Self> {
        // Calibrate on a two-transmon copy of the device.
        let pair = DeviceParams {
            n_transmons: 2,
            omega1: params.omega1_of(0),
            omega1_per_transmon: None,
            ..params.clone()
        };
        let (space, h) = device_hamiltonian(&pair)?;
        let spec = HermitianSpectrum::new(&h)?;
        let dim = space.total_dim();
        let basis = |digits: &[usize]| {
            let mut v = nalgebra::DVector::from_element(dim, C64::new(0.0, 0.0));
            v[space.index_of(digits)] = C64::new(1.0, 0.0);
            v
        };
        let ground = basis(&[0, 0, 0]);
        let e10 = basis(&[1, 0, 0]);
        let e01 = basis(&[0, 1, 0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sym = (&e10 + &e01) * C64::new(s, 0.0);
        let anti = (&e10 - &e01) * C64::new(s, 0.0);
        let energy_of = |target: &nalgebra::DVector<C64>| {
            let (mut best, mut idx) = (-1.0, 0);
            for k in 0..dim {
                let w = spec.eigenvectors.column(k).dotc(target).norm_sqr();
                if w > best {
                    best = w;
                    idx = k;
                }
            }
            (spec.eigenvalues[idx], best)
        };
        let (e0, w0) = energy_of(&ground);
        let (ep, wp) = energy_of(&sym);
        let (em, wm) = energy_of(&anti);
        if w0.min(wp).min(wm) < 0.5 {
            return Err(Error::param(
                "device",
                "dressed single-excitation states are strongly hybridized with the resonator",
            ));
        }
        Ok(Self {
            mode: CalibrationMode::DressedSpectrum,
            exchange_rate: 0.5 * (ep - em),
            qubit_frequency: 0.5 * (ep + em) - e0,
        })
    }

    /// Duration that realizes an XY phase of magnitude `|phase|`.
    pub fn gate_time(&self, phase: f64) -> f64 {
        (phase / self.exchange_rate).abs()
    }

    /// Sign of the realized XY phase relative to a positive request.
    pub fn sign(&self) -> f64 {
        self.exchange_rate.signum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSettings {
    pub integrator: IntegratorSettings,
    pub calibration: CalibrationMode,
    /// Added to the calibrated qubit frequency in the frame correction, rad/s.
    pub frame_offset: f64,
    /// Leakage above this value is flagged in trajectory metadata.
    pub leakage_warning: f64,
}

impl Default for DeviceSettings {
    fn default() -> Self {
        Self {
            integrator: IntegratorSettings::default(),
            calibration: CalibrationMode::default(),
            frame_offset: 0.0,
            leakage_warning: 0.1,
        }
    }
}

/// Final state of one device run.
#[derive(Clone, Debug)]
pub struct DeviceRun {
    pub rho: ComplexMatrix,
    /// Total time spent in XY segments.
    pub wall_time_s: f64,
}

pub struct DeviceSimulator {
    params: DeviceParams,
    noise: NoiseParams,
    settings: DeviceSettings,
    space: HilbertSpace,
    calibration: DeviceCalibration,
    propagator: LindbladPropagator,
    frame_energies: Vec<f64>,
}

impl DeviceSimulator {
    pub fn new(params: DeviceParams, noise: NoiseParams, settings: DeviceSettings) -> Result<Self> {
        params.validate()?;
        noise.validate()?;
        settings.integrator.validate()?;
        if !settings.frame_offset.is_finite() {
            return Err(Error::param("frame_offset", "must be finite"));
        }
        let mut calibration = DeviceCalibration::compute(&params, settings.calibration)?;
        calibration.qubit_frequency += settings.frame_offset;
        let (space, h) = device_hamiltonian(&params)?;
        let channels = noise.channels(&params, &space)?;
        let propagator = LindbladPropagator::new(&h, &channels, settings.integrator.clone())?;
        let frame_energies = (0..space.total_dim())
            .map(|idx| {
                let digits = space.digits(idx);
                let mut e = params.omega_r * digits[params.resonator_index()] as f64;
                for (j, &level) in digits.iter().enumerate().take(params.n_transmons) {
                    e += match level {
                        0 => 0.0,
                        1 => calibration.qubit_frequency + params.omega1_of(j) - params.omega1_of(0),
                        k => params.level_energy(j, k),
                    };
                }
                e
            })
            .collect();
        Ok(Self {
            params,
            noise,
            settings,
            space,
            calibration,
            propagator,
            frame_energies,
        })
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn settings(&self) -> &DeviceSettings {
        &self.settings
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn calibration(&self) -> &DeviceCalibration {
        &self.calibration
    }

    /// Embeds a qubit-register state into the device with the resonator in
    /// vacuum. Device-space states pass through unchanged.
    pub fn lift_state(&self, state: &QuantumState) -> Result<ComplexMatrix> {
        if state.space() == &self.space {
            return Ok(state.to_density_matrix());
        }
        let n = self.params.n_transmons;
        if state.space() != &HilbertSpace::qubits(n)? {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: state.space().total_dim(),
            });
        }
        let map = self.qubit_indices();
        let rho_q = state.to_density_matrix();
        let dim = self.space.total_dim();
        let mut rho = ComplexMatrix::zeros(dim, dim);
        for (r, &dr) in map.iter().enumerate() {
            for (c, &dc) in map.iter().enumerate() {
                rho[(dr, dc)] = rho_q[(r, c)];
            }
        }
        Ok(rho)
    }

    /// Device index of every qubit-register basis state, resonator in vacuum.
    fn qubit_indices(&self) -> Vec<usize> {
        let n = self.params.n_transmons;
        (0..1usize << n)
            .map(|q| {
                let mut digits: Vec<usize> = (0..n).map(|j| 1 - ((q >> (n - 1 - j)) & 1)).collect();
                digits.push(0);
                self.space.index_of(&digits)
            })
            .collect()
    }

    /// Transmon rotation lifted to the device: ideal on `{|0>, |1>}`,
    /// identity on higher levels and on the resonator.
    fn rotation_unitary(&self, axis_matrix: &ComplexMatrix, phi: f64, targets: &[usize]) -> Result<ComplexMatrix> {
        let d = self.params.levels_per_transmon;
        let mut single = transmon_qubit_operator(d, &expm_hermitian(axis_matrix, phi)?);
        for k in 2..d {
            single[(k, k)] = C64::new(1.0, 0.0);
        }
        let dim = self.space.total_dim();
        let mut u = ComplexMatrix::identity(dim, dim);
        for &t in targets {
            if t >= self.params.n_transmons {
                return Err(Error::SiteMismatch {
                    site: t,
                    n_sites: self.params.n_transmons,
                });
            }
            u = embed(&single, &[t], &self.space)? * u;
        }
        Ok(u)
    }

    fn frame_correct(&self, rho: &mut ComplexMatrix, t: f64) {
        let phases: Vec<C64> = self
            .frame_energies
            .iter()
            .map(|e| C64::from_polar(1.0, e * t))
            .collect();
        let n = rho.nrows();
        for c in 0..n {
            for r in 0..n {
                rho[(r, c)] *= phases[r] * phases[c].conj();
            }
        }
    }

    /// Runs the sequence from `rho0` (device space).
    pub fn run(&self, seq: &GateSequence, rho0: &ComplexMatrix) -> Result<DeviceRun> {
        seq.validate()?;
        if seq.n_sites != self.params.n_transmons {
            return Err(Error::param(
                "n_sites",
                format!(
                    "sequence acts on {} sites but the device has {} transmons",
                    seq.n_sites, self.params.n_transmons
                ),
            ));
        }
        let mut rho = rho0.clone();
        let mut wall = 0.0;
        for gate in &seq.gates {
            match &gate.kind {
                GateKind::XyEvolution { phase, .. } => {
                    if self.params.n_transmons != 2 {
                        return Err(Error::param(
                            "n_transmons",
                            "the shared resonator couples every transmon, so XY gates need exactly two",
                        ));
                    }
                    let t = self.calibration.gate_time(*phase);
                    rho = self.propagator.evolve(&rho, t)?;
                    self.frame_correct(&mut rho, t);
                    wall += t;
                }
                GateKind::Rotation { axis, angle, targets } => {
                    let u = self.rotation_unitary(&axis.matrix(), *angle, targets)?;
                    rho = &u * rho * u.adjoint();
                }
                GateKind::IdealField { axis, phase, targets } => {
                    let u = self.rotation_unitary(&axis.matrix(), *phase, targets)?;
                    rho = &u * rho * u.adjoint();
                }
            }
        }
        Ok(DeviceRun { rho, wall_time_s: wall })
    }

    /// Transmon register restricted to `{|0>, |1>}` per transmon, in qubit
    /// ordering. The trace is one minus the leakage.
    pub fn qubit_block(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.params.n_transmons;
        let state = QuantumState::from_parts_unchecked_density(self.space.clone(), rho.clone());
        let keep: Vec<usize> = (0..n).collect();
        let reduced = partial_trace(&state, &keep)?;
        let reduced = reduced.as_matrix().expect("density");
        let tspace = HilbertSpace::new(vec![self.params.levels_per_transmon; n])?;
        let map: Vec<usize> = (0..1usize << n)
            .map(|q| {
                let digits: Vec<usize> = (0..n).map(|j| 1 - ((q >> (n - 1 - j)) & 1)).collect();
                tspace.index_of(&digits)
            })
            .collect();
        let m = map.len();
        Ok(ComplexMatrix::from_fn(m, m, |r, c| reduced[(map[r], map[c])]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub theta: f64,
    pub wall_time_s: f64,
    pub fidelity: f64,
    /// Named observables in column order.
    pub observables: Vec<(String, f64)>,
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetadata {
    pub model: String,
    pub device: DeviceParams,
    pub noise: NoiseParams,
    pub settings: DeviceSettings,
    pub calibration: DeviceCalibration,
    /// Sign applied to θ in the ideal reference evolution.
    pub reference_sign: f64,
    pub max_leakage: f64,
    pub warnings: Vec<String>,
    pub extra: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub metadata: TrajectoryMetadata,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["theta".to_string(), "wall_time_s".into(), "fidelity".into()];
        if let Some(s) = self.samples.first() {
            cols.extend(s.observables.iter().map(|(k, _)| k.clone()));
        }
        cols.push("leakage".into());
        cols
    }

    /// Header line plus one row per sample, `{:.8e}` numbers, LF endings.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns().join(","))?;
        for s in &self.samples {
            let mut row = vec![s.theta, s.wall_time_s, s.fidelity];
            row.extend(s.observables.iter().map(|(_, v)| *v));
            row.push(s.leakage);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sweeps θ, compiling and running a sequence at each point in parallel.
/// The reference is `exp(-i s θ H_ref)|ψ0>` with `s` the sign of the
/// calibrated exchange rate.
pub fn run_protocol_on_device<F>(
    sim: &DeviceSimulator,
    compile: F,
    reference: &SpinHamiltonian,
    initial: &QuantumState,
    thetas: &[f64],
) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<GateSequence> + Sync,
{
    let n = sim.params.n_transmons;
    if reference.n_sites() != n {
        return Err(Error::param("reference", "site count differs from the device"));
    }
    let psi0 = initial
        .as_vector()
        .ok_or_else(|| Error::InvalidState("initial state must be pure".into()))?
        .clone();
    let rho0 = sim.lift_state(initial)?;
    let spectrum = HermitianSpectrum::new(&reference.to_matrix()?)?;
    let qspace = HilbertSpace::qubits(n)?;
    let sx: Vec<ComplexMatrix> = (0..n)
        .map(|j| embed(&pauli_x(), &[j], &qspace))
        .collect::<Result<_>>()?;
    let sign = sim.calibration.sign();

    let samples = thetas
        .par_iter()
        .map(|&theta| {
            let seq = compile(theta)?;
            let run = sim.run(&seq, &rho0)?;
            let block = sim.qubit_block(&run.rho)?;
            let ideal = spectrum.propagator(sign * theta) * &psi0;
            let fidelity = ideal.dotc(&(&block * &ideal)).re.max(0.0);
            let leakage = (1.0 - block.trace().re).max(0.0);
            let mut observables = Vec::with_capacity(2 * n);
            for (j, op) in sx.iter().enumerate() {
                observables.push((format!("sx_{}_ideal", j + 1), ideal.dotc(&(op * &ideal)).re));
                observables.push((format!("sx_{}_device", j + 1), (op * &block).trace().re));
            }
            Ok(TrajectorySample {
                theta,
                wall_time_s: run.wall_time_s,
                fidelity,
                observables,
                leakage,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let max_leakage = samples.iter().fold(0.0f64, |m, s| m.max(s.leakage));
    let mut warnings = Vec::new();
    if max_leakage > sim.settings.leakage_warning {
        warnings.push(format!(
            "leakage {max_leakage:.3e} exceeds {:.3e}",
            sim.settings.leakage_warning
        ));
    }
    let model = thetas
        .first()
        .map(|&t| compile(t).map(|s| s.metadata.model))
        .transpose()?
        .unwrap_or_default();
    Ok(Trajectory {
        metadata: TrajectoryMetadata {
            model,
            device: sim.params.clone(),
            noise: sim.noise.clone(),
            settings: sim.settings.clone(),
            calibration: sim.calibration.clone(),
            reference_sign: sign,
            max_leakage,
            warnings,
            extra: BTreeMap::new(),
        },
        samples,
    })
}
