//! Config-driven reproduction runs: digital-error curves, device dynamics,
//! execution-time tables and Trotter bounds, rendered as CSV or JSON.

mod config;
mod report;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use nalgebra::DVector;
use num_complex::Complex64 as C64;

pub use config::{
    apply_override, load_config_value, parse_config_text, resolve_config, validate_config, CalibrationConfig,
    ConfigError, ConfigIssue, ExperimentConfig, ExperimentKind, ModelConfig, OutputConfig, OutputFormat, Panel,
    ProtocolConfig,
};
pub use report::{Cell, Report, Table};

use crate::dynamics::{
    accumulated_gate_error, digital_error_curve, run_protocol_on_device, DeviceSimulator, DigitalErrorPoint,
};
use crate::error::{Error, Result};
use crate::model::{heisenberg, tfim, Boundary};
use crate::operator::{HilbertSpace, QuantumState};
use crate::protocol::{
    compile_heisenberg_chain, compile_heisenberg_pair, compile_ising_frustrated, compile_tfim, execution_time,
    gate_sum_time, sequence_fidelity_estimate, trotter_error_bound, GateSequence, ModelKind,
};

/// Runs whichever experiment the config names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    match config.experiment {
        ExperimentKind::Fig2Heisenberg | ExperimentKind::Fig2Tfim => run_fig2(config),
        ExperimentKind::Fig3 => run_fig3(config),
        ExperimentKind::Table1 => run_table1(config),
        ExperimentKind::Bounds => run_bounds(config),
    }
}

fn initial_state(config: &ExperimentConfig, n: usize) -> Result<QuantumState> {
    let amps = config
        .initial_state
        .as_ref()
        .ok_or_else(|| Error::InvalidState("no initial state".into()))?;
    let v = DVector::from_iterator(amps.len(), amps.iter().map(|[re, im]| C64::new(*re, *im)));
    QuantumState::pure_normalized(HilbertSpace::qubits(n)?, v)
}

fn describe_state(config: &ExperimentConfig) -> String {
    let amps = config.initial_state.as_deref().unwrap_or(&[]);
    let parts: Vec<String> = amps
        .iter()
        .enumerate()
        .filter(|(_, [re, im])| *re != 0.0 || *im != 0.0)
        .map(|(i, [re, im])| format!("{i}:({re},{im})"))
        .collect();
    format!("initial_state (basis index: amplitude, |↑>=0) {}", parts.join(" "))
}

/// Heisenberg sequence for any `n >= 2`; the pair protocol is repeated `l`
/// times on two sites.
pub fn heisenberg_sequence(n: usize, theta: f64, l: usize, boundary: Boundary) -> Result<GateSequence> {
    if n == 2 {
        if l < 1 {
            return Err(Error::param("trotter_steps", "must be >= 1"));
        }
        let step = compile_heisenberg_pair(theta / l as f64)?;
        let mut seq = step.clone();
        seq.trotter_steps = l;
        seq.metadata.theta = theta;
        for _ in 1..l {
            seq.gates.extend(step.gates.iter().cloned());
        }
        return Ok(seq);
    }
    compile_heisenberg_chain(n, theta, l, boundary)
}

fn digital_errors(config: &ExperimentConfig, model: ModelKind, steps: &[usize]) -> Result<Vec<DigitalErrorPoint>> {
    let m = &config.model;
    let n = m.n_sites;
    let psi0 = initial_state(config, n)?;
    let grid = config.theta_grid();
    match model {
        ModelKind::Heisenberg => {
            let reference = heisenberg(n, 1.0, m.boundary)?;
            digital_error_curve(
                &reference,
                |t, l| heisenberg_sequence(n, t, l, m.boundary),
                grid,
                steps,
                &psi0,
            )
        }
        ModelKind::Ising => {
            let ratio = m.b_hz / m.j_hz;
            let reference = tfim(n, 1.0, ratio, m.boundary)?;
            digital_error_curve(
                &reference,
                |t, l| compile_tfim(n, t, t * ratio, l, m.boundary),
                grid,
                steps,
                &psi0,
            )
        }
    }
}

/// First grid angle at which the digital error exceeds `l ε`.
pub fn crossover(points: &[(f64, f64)], gate_error: f64) -> Option<f64> {
    points.iter().find(|(_, loss)| *loss > gate_error).map(|(t, _)| *t)
}

pub fn run_fig2(config: &ExperimentConfig) -> Result<Report> {
    let model = match config.experiment {
        ExperimentKind::Fig2Heisenberg => ModelKind::Heisenberg,
        ExperimentKind::Fig2Tfim => ModelKind::Ising,
        other => return Err(Error::param("experiment", format!("{other} is not a fig2 experiment"))),
    };
    let mut steps: Vec<usize> = config
        .protocol
        .panels
        .iter()
        .flat_map(|p| p.trotter_steps.iter().copied())
        .collect();
    steps.sort_unstable();
    steps.dedup();
    let points = digital_errors(config, model, &steps)?;
    let grid = config.theta_grid();
    let curve = |l: usize| -> Vec<(f64, f64)> {
        points
            .iter()
            .filter(|p| p.trotter_steps == l)
            .map(|p| (p.theta, p.loss))
            .collect()
    };

    let mut report = Report::new(config);
    report.note(describe_state(config));
    report.note("digital error: 1 - |<psi_exact|psi_digital>|^2".to_string());
    if model == ModelKind::Ising {
        report.note(format!("theta_b = theta * {}", config.model.b_hz / config.model.j_hz));
    }
    let mut summary = Table::new(
        format!("{}_summary", config.experiment),
        &["panel", "epsilon", "trotter_steps", "gate_error", "crossover_theta", "max_loss"],
    );
    for (k, panel) in config.protocol.panels.iter().enumerate() {
        let label = panel_label(k);
        let mut cols = vec!["theta".to_string()];
        cols.extend(panel.trotter_steps.iter().map(|l| format!("loss_l{l}")));
        cols.extend(panel.trotter_steps.iter().map(|l| format!("gate_error_l{l}")));
        let mut table = Table::with_columns(format!("{}_{label}", config.experiment), cols);
        let curves: Vec<Vec<(f64, f64)>> = panel.trotter_steps.iter().map(|&l| curve(l)).collect();
        let lines: Vec<f64> = panel
            .trotter_steps
            .iter()
            .map(|&l| accumulated_gate_error(panel.epsilon, l))
            .collect::<Result<_>>()?;
        for (i, &theta) in grid.iter().enumerate() {
            let mut row = vec![Cell::Num(theta)];
            row.extend(curves.iter().map(|c| Cell::Num(c[i].1)));
            row.extend(lines.iter().map(|&g| Cell::Num(g)));
            table.push(row);
        }
        for ((&l, c), &g) in panel.trotter_steps.iter().zip(&curves).zip(&lines) {
            let max_loss = c.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
            summary.push(vec![
                Cell::Text(label.to_string()),
                Cell::Num(panel.epsilon),
                Cell::Int(l as i64),
                Cell::Num(g),
                crossover(c, g).map_or(Cell::Text("none".into()), Cell::Num),
                Cell::Num(max_loss),
            ]);
        }
        report.tables.push(table);
    }
    report.tables.push(summary);
    Ok(report)
}

fn panel_label(k: usize) -> String {
    let letters = "abcdefghijklmnopqrstuvwxyz";
    letters
        .get(k..k + 1)
        .map_or_else(|| format!("p{k}"), |s| s.to_string())
}

/// Number of strict local extrema of a sampled curve.
pub fn count_local_extrema(values: &[f64]) -> usize {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
    diffs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

pub fn run_fig3(config: &ExperimentConfig) -> Result<Report> {
    let sim = DeviceSimulator::new(config.device.clone(), config.noise.clone(), config.device_settings())?;
    let psi0 = initial_state(config, 2)?;
    let reference = heisenberg(2, 1.0, Boundary::Open)?;
    let traj = run_protocol_on_device(&sim, compile_heisenberg_pair, &reference, &psi0, config.theta_grid())?;

    let mut report = Report::new(config);
    report.note(describe_state(config));
    let cal = &traj.metadata.calibration;
    let two_pi = 2.0 * std::f64::consts::PI;
    report.note(format!(
        "calibration {:?}: exchange_rate_hz={:.8e} qubit_frequency_hz={:.8e} reference_sign={}",
        cal.mode,
        cal.exchange_rate / two_pi,
        cal.qubit_frequency / two_pi,
        traj.metadata.reference_sign
    ));
    for w in &traj.metadata.warnings {
        report.note(format!("warning: {w}"));
    }
    let mut table = Table::with_columns(config.experiment.to_string(), traj.columns());
    for s in &traj.samples {
        let mut row = vec![Cell::Num(s.theta), Cell::Num(s.wall_time_s), Cell::Num(s.fidelity)];
        row.extend(s.observables.iter().map(|(_, v)| Cell::Num(*v)));
        row.push(Cell::Num(s.leakage));
        table.push(row);
    }
    report.tables.push(table);

    let within = |max: f64| -> Vec<f64> {
        traj.samples
            .iter()
            .filter(|s| s.theta <= max + 1e-12)
            .map(|s| s.fidelity)
            .collect()
    };
    let quarter = within(FRAC_PI_4);
    let all: Vec<f64> = traj.samples.iter().map(|s| s.fidelity).collect();
    let mut summary = Table::new(format!("{}_summary", config.experiment), &["quantity", "value"]);
    let mut stat = |name: &str, v: f64| summary.push(vec![Cell::Text(name.into()), Cell::Num(v)]);
    if let Some(first) = traj.samples.first() {
        stat("fidelity_first", first.fidelity);
    }
    stat("min_fidelity_to_pi_4", quarter.iter().copied().fold(f64::NAN, f64::min));
    stat("mean_fidelity", all.iter().sum::<f64>() / all.len().max(1) as f64);
    stat("extrema_to_pi_8", count_local_extrema(&within(FRAC_PI_8)) as f64);
    stat("max_leakage", traj.metadata.max_leakage);
    report.tables.push(summary);
    Ok(report)
}

struct Variant {
    label: &'static str,
    model: ModelKind,
    boundary: Boundary,
}

const VARIANTS: [Variant; 4] = [
    Variant {
        label: "H_o",
        model: ModelKind::Heisenberg,
        boundary: Boundary::Open,
    },
    Variant {
        label: "H_p",
        model: ModelKind::Heisenberg,
        boundary: Boundary::Periodic,
    },
    Variant {
        label: "I_o",
        model: ModelKind::Ising,
        boundary: Boundary::Open,
    },
    Variant {
        label: "I_p",
        model: ModelKind::Ising,
        boundary: Boundary::Periodic,
    },
];

fn variant_sequence(v: &Variant, n: usize, theta: f64, l: usize) -> Result<GateSequence> {
    match v.model {
        ModelKind::Heisenberg => heisenberg_sequence(n, theta, l, v.boundary),
        ModelKind::Ising => compile_tfim(n, theta, theta, l, v.boundary),
    }
}

/// One cross-check of a computed time against a quoted value.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingCheck {
    pub name: &'static str,
    pub value_s: f64,
    pub target_s: f64,
}

impl TimingCheck {
    pub fn relative_deviation(&self) -> f64 {
        (self.value_s - self.target_s).abs() / self.target_s
    }

    pub fn within(&self, tol: f64) -> bool {
        self.relative_deviation() <= tol
    }
}

pub fn timing_checks(config: &ExperimentConfig) -> Result<Vec<TimingCheck>> {
    let t = &config.gate_times;
    Ok(vec![
        TimingCheck {
            name: "H_o N=3 theta=pi/4 l=1 (formula)",
            value_s: execution_time(ModelKind::Heisenberg, 3, Boundary::Open, FRAC_PI_4, 1, t)?,
            target_s: 0.16e-6,
        },
        TimingCheck {
            name: "I_p N=3 theta=pi/4 l=1 (formula)",
            value_s: execution_time(ModelKind::Ising, 3, Boundary::Periodic, FRAC_PI_4, 1, t)?,
            target_s: 190e-9,
        },
        TimingCheck {
            name: "Heisenberg pair theta=pi/4 (gate sum)",
            value_s: gate_sum_time(&compile_heisenberg_pair(FRAC_PI_4)?, t),
            target_s: 0.10e-6,
        },
    ])
}

pub fn run_table1(config: &ExperimentConfig) -> Result<Report> {
    let p = &config.protocol;
    let theta = p.table_theta;
    let mut table = Table::new(
        config.experiment.to_string(),
        &[
            "variant",
            "n_sites",
            "theta",
            "trotter_steps",
            "time_formula_s",
            "time_gate_sum_s",
            "error_bound",
        ],
    );
    for &n in &p.table_n_sites {
        for v in &VARIANTS {
            for &l in &p.trotter_steps {
                let formula = execution_time(v.model, n, v.boundary, theta, l, &config.gate_times)?;
                let summed = gate_sum_time(&variant_sequence(v, n, theta, l)?, &config.gate_times);
                let bound = trotter_error_bound(v.model, n, v.boundary, theta, l)?;
                table.push(vec![
                    Cell::Text(v.label.into()),
                    Cell::Int(n as i64),
                    Cell::Num(theta),
                    Cell::Int(l as i64),
                    Cell::Num(formula),
                    Cell::Num(summed),
                    Cell::Num(bound),
                ]);
            }
        }
    }
    let mut report = Report::new(config);
    report.tables.push(table);

    let mut checks = Table::new(
        format!("{}_checks", config.experiment),
        &["check", "value_s", "target_s", "relative_deviation", "within_20_percent"],
    );
    for c in timing_checks(config)? {
        checks.push(vec![
            Cell::Text(c.name.into()),
            Cell::Num(c.value_s),
            Cell::Num(c.target_s),
            Cell::Num(c.relative_deviation()),
            Cell::Text(if c.within(0.2) { "yes" } else { "no" }.into()),
        ]);
    }
    report.tables.push(checks);

    let mut budgets = Table::new(
        format!("{}_budgets", config.experiment),
        &["protocol", "two_qubit_gates", "single_qubit_ops", "fidelity_estimate"],
    );
    for (name, seq) in [
        ("heisenberg_pair", compile_heisenberg_pair(FRAC_PI_4)?),
        ("ising_frustrated", compile_ising_frustrated(FRAC_PI_4)?),
    ] {
        let est = sequence_fidelity_estimate(&seq, &config.gate_errors)?;
        budgets.push(vec![
            Cell::Text(name.into()),
            Cell::Int(est.two_qubit_gates as i64),
            Cell::Int(est.single_qubit_ops as i64),
            Cell::Num(est.fidelity),
        ]);
    }
    report.tables.push(budgets);
    Ok(report)
}

pub fn run_bounds(config: &ExperimentConfig) -> Result<Report> {
    let n = config.model.n_sites;
    let steps = &config.protocol.trotter_steps;
    let heis = digital_errors(config, ModelKind::Heisenberg, steps)?;
    let ising = digital_errors(config, ModelKind::Ising, steps)?;
    let boundary = config.model.boundary;
    let mut table = Table::new(
        config.experiment.to_string(),
        &[
            "theta",
            "trotter_steps",
            "bound_heisenberg_open",
            "bound_heisenberg_periodic",
            "bound_ising_open",
            "bound_ising_periodic",
            "loss_heisenberg",
            "loss_tfim",
        ],
    );
    let mut violations = 0usize;
    for (h, i) in heis.iter().zip(&ising) {
        let (theta, l) = (h.theta, h.trotter_steps);
        let mut row = vec![Cell::Num(theta), Cell::Int(l as i64)];
        for v in &VARIANTS {
            row.push(Cell::Num(trotter_error_bound(v.model, n, v.boundary, theta, l)?));
        }
        row.push(Cell::Num(h.loss));
        row.push(Cell::Num(i.loss));
        if h.loss > trotter_error_bound(ModelKind::Heisenberg, n, boundary, theta, l)? + 1e-15
            || i.loss > trotter_error_bound(ModelKind::Ising, n, boundary, theta, l)? + 1e-15
        {
            violations += 1;
        }
        table.push(row);
    }
    let mut report = Report::new(config);
    report.note(describe_state(config));
    report.note(format!("losses exceeding the {boundary} bound: {violations}"));
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrema_counting() {
        assert_eq!(count_local_extrema(&[0.0, 1.0, 0.0, 1.0]), 2);
        assert_eq!(count_local_extrema(&[0.0, 1.0, 1.0, 2.0]), 0);
        assert_eq!(count_local_extrema(&[1.0]), 0);
    }

    #[test]
    fn crossover_picks_first_exceeding_point() {
        let pts = [(0.0, 0.0), (0.1, 0.02), (0.2, 0.04), (0.3, 0.02)];
        assert_eq!(crossover(&pts, 0.03), Some(0.2));
        assert_eq!(crossover(&pts, 0.05), None);
    }

    #[test]
    fn repeated_pair_is_exact() {
        let seq = heisenberg_sequence(2, 0.6, 3, Boundary::Open).unwrap();
        assert_eq!(seq.two_qubit_gate_count(), 9);
        let h = heisenberg(2, 1.0, Boundary::Open).unwrap();
        let psi = QuantumState::basis(HilbertSpace::qubits(2).unwrap(), 1).unwrap();
        let pts = digital_error_curve(
            &h,
            |t, l| heisenberg_sequence(2, t, l, Boundary::Open),
            &[0.6],
            &[3],
            &psi,
        )
        .unwrap();
        assert!(pts[0].loss < 1e-12);
    }

    #[test]
    fn fig2_zero_grid_has_zero_loss() {
        let mut c = ExperimentConfig::for_experiment(ExperimentKind::Fig2Tfim);
        c.protocol.theta_grid = Some(vec![0.0]);
        let r = run_fig2(&c).unwrap();
        assert_eq!(r.tables.len(), 3);
        for t in &r.tables[..2] {
            assert_eq!(t.rows.len(), 1);
        }
        let lines: Vec<f64> = r.tables[1].rows[0][3..]
            .iter()
            .map(|c| match c {
                Cell::Num(v) => *v,
                _ => panic!(),
            })
            .collect();
        assert_eq!(lines, vec![0.1, 0.15000000000000002]);
    }
}
