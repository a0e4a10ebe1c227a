//! Gate-sequence compilation for the Heisenberg and Ising protocols, plus
//! execution-time, Trotter-bound and gate-error budgets.
//!
//! Gate conventions:
//! - `XyEvolution { phase: θ }` is `exp[-i θ (σxσx + σyσy)/2]` on its pair.
//! - `Rotation { angle: φ }` is `exp[-i φ σ^axis]` on every target, so the
//!   `R(π/4)` layers rotate the Bloch vector by π/2.
//! - `IdealField { phase: φ }` is `exp[-i φ Σ σ^axis]` over its targets.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bonds, Axis, Boundary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateKind {
    XyEvolution {
        targets: [usize; 2],
        phase: f64,
    },
    Rotation {
        axis: Axis,
        angle: f64,
        targets: Vec<usize>,
    },
    IdealField {
        axis: Axis,
        phase: f64,
        targets: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    #[serde(flatten)]
    pub kind: GateKind,
    pub duration_s: f64,
}

impl Gate {
    pub fn targets(&self) -> &[usize] {
        match &self.kind {
            GateKind::XyEvolution { targets, .. } => targets,
            GateKind::Rotation { targets, .. } | GateKind::IdealField { targets, .. } => targets,
        }
    }

    fn xy(a: usize, b: usize, phase: f64) -> Self {
        Self {
            kind: GateKind::XyEvolution {
                targets: [a, b],
                phase,
            },
            duration_s: 0.0,
        }
    }

    fn rotation(axis: Axis, angle: f64, targets: Vec<usize>) -> Self {
        Self {
            kind: GateKind::Rotation {
                axis,
                angle: wrap_angle(angle),
                targets,
            },
            duration_s: 0.0,
        }
    }
}

/// Maps an angle into `(-π, π]`.
fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceMetadata {
    pub model: String,
    pub boundary: Boundary,
    /// Simulated phase `θ = Jt`.
    pub theta: f64,
    /// Simulated field phase `Bt`, for transverse-field models.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_b: Option<f64>,
}

/// Ordered gate list. The JSON form is
///
/// ```json
/// {"n_sites": 2, "trotter_steps": 1,
///  "metadata": {"model": "heisenberg_pair", "boundary": "open", "theta": 0.785},
///  "gates": [{"kind": "xy_evolution", "targets": [0, 1], "phase": 0.785, "duration_s": 6.1e-8},
///            {"kind": "rotation", "axis": "x", "angle": 0.785, "targets": [0, 1], "duration_s": 1e-8}]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSequence {
    pub n_sites: usize,
    pub trotter_steps: usize,
    pub metadata: SequenceMetadata,
    pub gates: Vec<Gate>,
}

impl GateSequence {
    fn new(n_sites: usize, trotter_steps: usize, metadata: SequenceMetadata) -> Self {
        Self {
            n_sites,
            trotter_steps,
            metadata,
            gates: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trotter_steps < 1 {
            return Err(Error::param("trotter_steps", "must be >= 1"));
        }
        for g in &self.gates {
            if let Some(&site) = g.targets().iter().find(|&&s| s >= self.n_sites) {
                return Err(Error::SiteMismatch {
                    site,
                    n_sites: self.n_sites,
                });
            }
            match &g.kind {
                GateKind::XyEvolution { targets, phase } => {
                    if targets[0] == targets[1] {
                        return Err(Error::InvalidSites(format!("xy gate on {targets:?}")));
                    }
                    if !phase.is_finite() {
                        return Err(Error::param("phase", "must be finite"));
                    }
                }
                GateKind::Rotation { angle, .. } => {
                    if !(angle.is_finite() && *angle > -PI && *angle <= PI) {
                        return Err(Error::param("angle", format!("{angle} outside (-π, π]")));
                    }
                }
                GateKind::IdealField { phase, .. } => {
                    if !phase.is_finite() {
                        return Err(Error::param("phase", "must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Recomputes every gate duration from `times`.
    pub fn retime(mut self, times: &GateTimes) -> Self {
        for g in &mut self.gates {
            g.duration_s = times.duration(&g.kind);
        }
        self
    }

    /// Same sequence with every rotation replaced by its adjoint.
    pub fn with_adjoint_rotations(mut self) -> Self {
        for g in &mut self.gates {
            if let GateKind::Rotation { angle, .. } = &mut g.kind {
                *angle = wrap_angle(-*angle);
            }
        }
        self
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.kind, GateKind::XyEvolution { .. }))
            .count()
    }

    /// Single-qubit operations, counted once per target.
    pub fn single_qubit_op_count(&self) -> usize {
        self.gates
            .iter()
            .map(|g| match &g.kind {
                GateKind::XyEvolution { .. } => 0,
                GateKind::Rotation { targets, .. } | GateKind::IdealField { targets, .. } => {
                    targets.len()
                }
            })
            .sum()
    }

    pub fn rotation_layer_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.kind, GateKind::Rotation { .. }))
            .count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let seq: Self = serde_json::from_str(s)?;
        seq.validate()?;
        Ok(seq)
    }
}

/// Gate rates. `xy_coupling` is the strength `J/2` of the native exchange
/// `J/2 (σxσx + σyσy)`, so the closed-form times use `J = 2 xy_coupling`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateTimes {
    /// Single-qubit pulse time (s).
    pub tau_s: f64,
    /// XY gate coupling `J/2` (rad/s).
    pub xy_coupling: f64,
    /// Single-qubit field gate rate (rad/s).
    pub g_phi: f64,
}

impl Default for GateTimes {
    fn default() -> Self {
        Self {
            tau_s: 10e-9,
            xy_coupling: 2.0 * PI * 6.4e6,
            g_phi: 2.0 * PI * 10e6,
        }
    }
}

impl GateTimes {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_s", self.tau_s),
            ("xy_coupling", self.xy_coupling),
            ("g_phi", self.g_phi),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Exchange rate `J` in the closed-form expressions.
    pub fn j(&self) -> f64 {
        2.0 * self.xy_coupling
    }

    pub fn duration(&self, kind: &GateKind) -> f64 {
        match kind {
            GateKind::XyEvolution { phase, .. } => phase.abs() / self.xy_coupling,
            GateKind::Rotation { .. } => self.tau_s,
            GateKind::IdealField { phase, .. } => phase.abs() / self.g_phi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateErrorModel {
    pub two_qubit_error: f64,
    pub single_qubit_error: f64,
}

impl Default for GateErrorModel {
    fn default() -> Self {
        Self {
            two_qubit_error: 0.05,
            single_qubit_error: 0.01,
        }
    }
}

impl GateErrorModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("two_qubit_error", self.two_qubit_error),
            ("single_qubit_error", self.single_qubit_error),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

fn pair_layer(seq: &mut GateSequence, pairs: &[(usize, usize)], phase: f64) {
    seq.gates
        .extend(pairs.iter().map(|&(a, b)| Gate::xy(a, b, phase)));
}

fn conjugated_layer(
    seq: &mut GateSequence,
    axis: Axis,
    sites: &[usize],
    pairs: &[(usize, usize)],
    phase: f64,
) {
    seq.gates.push(Gate::rotation(axis, FRAC_PI_4, sites.to_vec()));
    pair_layer(seq, pairs, phase);
    seq.gates.push(Gate::rotation(axis, -FRAC_PI_4, sites.to_vec()));
}

/// One Heisenberg step: XY, then XY conjugated by `R^x(π/4)`, then by
/// `R^y(π/4)`, each over all `pairs`.
fn heisenberg_step(seq: &mut GateSequence, sites: &[usize], pairs: &[(usize, usize)], phase: f64) {
    pair_layer(seq, pairs, phase);
    conjugated_layer(seq, Axis::X, sites, pairs, phase);
    conjugated_layer(seq, Axis::Y, sites, pairs, phase);
}

/// Seven-step two-qubit protocol realizing `exp(-i θ (σxσx + σyσy + σzσz))`
/// exactly with one step.
pub fn compile_heisenberg_pair(theta: f64) -> Result<GateSequence> {
    check_finite("theta", theta)?;
    let mut seq = GateSequence::new(
        2,
        1,
        SequenceMetadata {
            model: "heisenberg_pair".into(),
            boundary: Boundary::Open,
            theta,
            theta_b: None,
        },
    );
    heisenberg_step(&mut seq, &[0, 1], &[(0, 1)], theta);
    Ok(seq.retime(&GateTimes::default()))
}

/// `l` Trotter steps of the Heisenberg chain with phase `θ/l` per gate.
pub fn compile_heisenberg_chain(
    n: usize,
    theta: f64,
    l: usize,
    boundary: Boundary,
) -> Result<GateSequence> {
    if l < 1 {
        return Err(Error::param("trotter_steps", "must be >= 1"));
    }
    check_finite("theta", theta)?;
    let phases = vec![theta / l as f64; l];
    let mut seq = compile_heisenberg_chain_with_phases(n, &phases, boundary)?;
    seq.metadata.theta = theta;
    Ok(seq)
}

/// Heisenberg chain with an explicit simulated phase per Trotter step, for
/// time-dependent or inhomogeneous schedules.
pub fn compile_heisenberg_chain_with_phases(
    n: usize,
    step_phases: &[f64],
    boundary: Boundary,
) -> Result<GateSequence> {
    if n < 3 {
        return Err(Error::param("n_sites", format!("chain needs n >= 3, got {n}")));
    }
    if step_phases.is_empty() {
        return Err(Error::param("trotter_steps", "must be >= 1"));
    }
    for &p in step_phases {
        check_finite("phase", p)?;
    }
    let pairs = bonds(n, boundary);
    let sites: Vec<usize> = (0..n).collect();
    let mut seq = GateSequence::new(
        n,
        step_phases.len(),
        SequenceMetadata {
            model: "heisenberg_chain".into(),
            boundary,
            theta: step_phases.iter().sum(),
            theta_b: None,
        },
    );
    for &phase in step_phases {
        heisenberg_step(&mut seq, &sites, &pairs, phase);
    }
    Ok(seq.retime(&GateTimes::default()))
}

/// Frustrated three-site Ising ring `J Σ_{i<j} σxσx`; one step is exact.
pub fn compile_ising_frustrated(theta: f64) -> Result<GateSequence> {
    let mut seq = compile_tfim(3, theta, 0.0, 1, Boundary::Periodic)?;
    seq.metadata.model = "ising_frustrated".into();
    seq.metadata.theta_b = None;
    Ok(seq)
}

/// Transverse-field Ising chain. Each bond gets an XY block followed by an
/// X−Y block (`R^x(π/2)` on the bond's first site around an XY gate), which
/// together give `exp(-i θ σxσx)`; each step ends with the field gate.
pub fn compile_tfim(
    n: usize,
    theta_j: f64,
    theta_b: f64,
    l: usize,
    boundary: Boundary,
) -> Result<GateSequence> {
    if n < 2 {
        return Err(Error::param("n_sites", format!("need n >= 2, got {n}")));
    }
    if l < 1 {
        return Err(Error::param("trotter_steps", "must be >= 1"));
    }
    check_finite("theta_j", theta_j)?;
    check_finite("theta_b", theta_b)?;
    let pairs = bonds(n, boundary);
    let mut seq = GateSequence::new(
        n,
        l,
        SequenceMetadata {
            model: "tfim".into(),
            boundary,
            theta: theta_j,
            theta_b: Some(theta_b),
        },
    );
    let pj = theta_j / l as f64;
    let pb = theta_b / l as f64;
    for _ in 0..l {
        for &(a, b) in &pairs {
            seq.gates.push(Gate::xy(a, b, pj));
            seq.gates.push(Gate::rotation(Axis::X, FRAC_PI_2, vec![a]));
            seq.gates.push(Gate::xy(a, b, pj));
            seq.gates.push(Gate::rotation(Axis::X, -FRAC_PI_2, vec![a]));
        }
        if theta_b != 0.0 {
            seq.gates.push(Gate {
                kind: GateKind::IdealField {
                    axis: Axis::Y,
                    phase: pb,
                    targets: (0..n).collect(),
                },
                duration_s: 0.0,
            });
        }
    }
    Ok(seq.retime(&GateTimes::default()))
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::param(name, "must be finite"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heisenberg,
    Ising,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" => Ok(ModelKind::Heisenberg),
            "ising" | "tfim" => Ok(ModelKind::Ising),
            other => Err(Error::UnknownModel(other.into())),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Ising => "ising",
        })
    }
}

/// Second-order Trotter error bound for `N` sites, `θ = Jt` and `l` steps.
pub fn trotter_error_bound(
    model: ModelKind,
    n: usize,
    boundary: Boundary,
    jt: f64,
    l: usize,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("n_sites", "must be >= 2"));
    }
    if l < 1 {
        return Err(Error::param("trotter_steps", "must be >= 1"));
    }
    let n = n as f64;
    let prefactor = match (model, boundary) {
        (ModelKind::Heisenberg, Boundary::Open) => 24.0 * (n - 2.0),
        (ModelKind::Heisenberg, Boundary::Periodic) => 24.0 * n,
        (ModelKind::Ising, Boundary::Open) => 2.0 * (n - 1.0),
        (ModelKind::Ising, Boundary::Periodic) => 2.0 * n,
    };
    Ok(prefactor * jt * jt / l as f64)
}

/// Closed-form execution time of `l` steps at simulated phase `θ`.
pub fn execution_time(
    model: ModelKind,
    n: usize,
    boundary: Boundary,
    theta: f64,
    l: usize,
    times: &GateTimes,
) -> Result<f64> {
    times.validate()?;
    if n < 2 {
        return Err(Error::param("n_sites", "must be >= 2"));
    }
    let (n, l) = (n as f64, l as f64);
    let j = times.j();
    let t = match (model, boundary) {
        (ModelKind::Heisenberg, Boundary::Open) => 4.0 * l * times.tau_s + 6.0 * (n - 1.0) * theta / j,
        (ModelKind::Heisenberg, Boundary::Periodic) => 4.0 * l * times.tau_s + 6.0 * n * theta / j,
        (ModelKind::Ising, Boundary::Open) => {
            2.0 * (n - 1.0) * l * times.tau_s + theta / times.g_phi + 4.0 * (n - 1.0) * theta / j
        }
        (ModelKind::Ising, Boundary::Periodic) => {
            2.0 * n * l * times.tau_s + theta / times.g_phi + 4.0 * n * theta / j
        }
    };
    Ok(t)
}

/// Execution time as the sum of every gate's duration under `times`.
/// A rotation layer on several qubits takes one pulse time.
pub fn gate_sum_time(seq: &GateSequence, times: &GateTimes) -> f64 {
    seq.gates.iter().map(|g| times.duration(&g.kind)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub fidelity: f64,
    pub two_qubit_gates: usize,
    pub single_qubit_ops: usize,
}

/// Product model `Π (1 − ε)`: one two-qubit error per XY gate, one
/// single-qubit error per rotation or field target.
pub fn sequence_fidelity_estimate(
    seq: &GateSequence,
    err: &GateErrorModel,
) -> Result<FidelityEstimate> {
    err.validate()?;
    let two = seq.two_qubit_gate_count();
    let single = seq.single_qubit_op_count();
    let fidelity = (1.0 - err.two_qubit_error).powi(two as i32)
        * (1.0 - err.single_qubit_error).powi(single as i32);
    Ok(FidelityEstimate {
        fidelity,
        two_qubit_gates: two,
        single_qubit_ops: single,
    })
}
