use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{CalibrationMode, DeviceSettings, IntegratorSettings, NoiseParams};
use crate::error::Error;
use crate::model::{Boundary, DeviceParams};
use crate::protocol::{GateErrorModel, GateTimes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Fig2Heisenberg,
    Fig2Tfim,
    Fig3,
    Table1,
    Bounds,
}

impl ExperimentKind {
    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::Fig2Heisenberg => "fig2-heisenberg",
            ExperimentKind::Fig2Tfim => "fig2-tfim",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Table1 => "table1",
            ExperimentKind::Bounds => "bounds",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_sites: usize,
    /// Coupling `J` in Hz. Only the ratio `B/J` enters the digital-error runs.
    pub j_hz: f64,
    /// Transverse field `B` in Hz.
    pub b_hz: f64,
    pub boundary: Boundary,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_sites: 3,
            j_hz: 12.8e6,
            b_hz: 12.8e6,
            boundary: Boundary::Open,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub epsilon: f64,
    pub trotter_steps: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Explicit θ grid. When absent, `theta_points` evenly spaced values on
    /// `[0, theta_max]` are used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<f64>>,
    pub theta_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    pub panels: Vec<Panel>,
    /// Step counts for the bounds sweep and the execution-time table.
    pub trotter_steps: Vec<usize>,
    pub table_n_sites: Vec<usize>,
    pub table_theta: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            theta_grid: None,
            theta_points: 64,
            theta_max: None,
            panels: vec![
                Panel {
                    epsilon: 1e-2,
                    trotter_steps: vec![3, 5],
                },
                Panel {
                    epsilon: 5e-2,
                    trotter_steps: vec![2, 3],
                },
            ],
            trotter_steps: vec![1, 2, 3, 5],
            table_n_sites: vec![2, 3, 4],
            table_theta: FRAC_PI_4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    /// Extra frame-frequency offset, rad/s.
    pub frame_offset: f64,
    pub leakage_warning: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        let s = DeviceSettings::default();
        Self {
            mode: s.calibration,
            frame_offset: s.frame_offset,
            leakage_warning: s.leakage_warning,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub format: OutputFormat,
    /// Also emit a gnuplot script next to every table.
    pub gnuplot: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub device: DeviceParams,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub gate_times: GateTimes,
    #[serde(default)]
    pub gate_errors: GateErrorModel,
    /// Qubit-register amplitudes as `[re, im]` pairs, normalized on use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Default configuration of an experiment, with every default resolved.
    pub fn for_experiment(experiment: ExperimentKind) -> Self {
        resolve_config(serde_json::json!({ "experiment": experiment.tag() })).expect("defaults are valid")
    }

    pub fn device_settings(&self) -> DeviceSettings {
        DeviceSettings {
            integrator: self.integrator.clone(),
            calibration: self.calibration.mode,
            frame_offset: self.calibration.frame_offset,
            leakage_warning: self.calibration.leakage_warning,
        }
    }

    pub fn theta_grid(&self) -> &[f64] {
        self.protocol.theta_grid.as_deref().unwrap_or(&[])
    }

    fn default_theta_max(&self) -> f64 {
        match self.experiment {
            ExperimentKind::Fig3 => FRAC_PI_2,
            _ => FRAC_PI_4,
        }
    }

    /// Fills derived defaults so that the echoed config is complete.
    fn resolve(&mut self) {
        if self.protocol.theta_grid.is_none() {
            let max = *self.protocol.theta_max.get_or_insert(self.default_theta_max());
            let n = self.protocol.theta_points;
            let grid = match n {
                0 => Vec::new(),
                1 => vec![0.0],
                _ => (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect(),
            };
            self.protocol.theta_grid = Some(grid);
        }
        if self.initial_state.is_none() {
            self.initial_state = Some(self.default_initial_state());
        }
        if self.experiment == ExperimentKind::Fig3 {
            // The device run always acts on the transmon register.
            self.model.n_sites = self.device.n_transmons;
        }
    }

    fn default_initial_state(&self) -> Vec<[f64; 2]> {
        match self.experiment {
            ExperimentKind::Fig3 => {
                // (|↑> + 2|↓>)/√5 ⊗ |↓>
                let s = 5f64.sqrt();
                vec![[0.0, 0.0], [1.0 / s, 0.0], [0.0, 0.0], [2.0 / s, 0.0]]
            }
            _ => {
                // |↑↓↑...>
                let n = self.model.n_sites.min(20);
                let index = (0..n).fold(0usize, |acc, k| (acc << 1) | (k % 2));
                let mut v = vec![[0.0, 0.0]; 1usize << n];
                if let Some(slot) = v.get_mut(index) {
                    *slot = [1.0, 0.0];
                }
                v
            }
        }
    }

    fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut push = |path: &str, message: String| {
            issues.push(ConfigIssue {
                path: path.to_string(),
                message,
            })
        };
        let m = &self.model;
        if !(2..=6).contains(&m.n_sites) && self.experiment != ExperimentKind::Fig3 {
            push("model.n_sites", format!("must lie in 2..=6, got {}", m.n_sites));
        }
        if !(m.j_hz.is_finite() && m.j_hz > 0.0) {
            push("model.j_hz", format!("must be positive, got {}", m.j_hz));
        }
        if !(m.b_hz.is_finite() && m.b_hz >= 0.0) {
            push("model.b_hz", format!("must be >= 0, got {}", m.b_hz));
        }
        let p = &self.protocol;
        if let Some(grid) = &p.theta_grid {
            if let Some(bad) = grid.iter().find(|t| !(0.0..=PI).contains(*t)) {
                push("protocol.theta_grid", format!("value {bad} outside [0, π]"));
            }
            if grid.windows(2).any(|w| w[0] > w[1]) {
                push("protocol.theta_grid", "must be sorted ascending".into());
            }
        }
        if let Some(max) = p.theta_max {
            if !(0.0..=PI).contains(&max) {
                push("protocol.theta_max", format!("{max} outside [0, π]"));
            }
        }
        for (i, panel) in p.panels.iter().enumerate() {
            if !(0.0..1.0).contains(&panel.epsilon) {
                push(
                    &format!("protocol.panels[{i}].epsilon"),
                    format!("{} outside [0, 1)", panel.epsilon),
                );
            }
            if panel.trotter_steps.is_empty() || panel.trotter_steps.contains(&0) {
                push(
                    &format!("protocol.panels[{i}].trotter_steps"),
                    "needs positive step counts".into(),
                );
            }
        }
        if p.trotter_steps.contains(&0) {
            push("protocol.trotter_steps", "step counts must be positive".into());
        }
        if p.table_n_sites.iter().any(|n| !(2..=6).contains(n)) {
            push("protocol.table_n_sites", "entries must lie in 2..=6".into());
        }
        if !(p.table_theta.is_finite() && p.table_theta >= 0.0) {
            push("protocol.table_theta", "must be >= 0".into());
        }
        let mut section = |name: &str, r: crate::Result<()>| {
            if let Err(e) = r {
                match e {
                    Error::InvalidParameter { name: field, reason } => push(&format!("{name}.{field}"), reason),
                    other => push(name, other.to_string()),
                }
            }
        };
        section("device", self.device.validate());
        section("noise", self.noise.validate());
        section("integrator", self.integrator.validate());
        section("gate_times", self.gate_times.validate());
        section("gate_errors", self.gate_errors.validate());
        if self.experiment == ExperimentKind::Fig3 && self.device.n_transmons != 2 {
            push("device.n_transmons", "fig3 needs a two-transmon device".into());
        }
        if !self.calibration.frame_offset.is_finite() {
            push("calibration.frame_offset", "must be finite".into());
        }
        if self.calibration.leakage_warning.is_nan() || self.calibration.leakage_warning < 0.0 {
            push("calibration.leakage_warning", "must be >= 0".into());
        }
        if let Some(amps) = &self.initial_state {
            let n = self.model.n_sites.min(20);
            if amps.len() != 1usize << n {
                push(
                    "initial_state",
                    format!("expected {} amplitudes, got {}", 1usize << n, amps.len()),
                );
            } else if amps.iter().map(|[a, b]| a * a + b * b).sum::<f64>() <= 0.0 {
                push("initial_state", "state has zero norm".into());
            }
        }
        issues
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("{}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Parses config text. Blank input is an empty object.
pub fn parse_config_text(text: &str) -> Result<Value, ConfigError> {
    if text.trim().is_empty() {
        return Ok(Value::Object(Default::default()));
    }
    serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load_config_value(path: &Path) -> Result<Value, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_text(&text)
}

/// Applies `a.b.c=value`. The value is read as JSON when it parses, and as a
/// plain string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.into()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(assignment.into()));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            return Err(ConfigError::Invalid(vec![ConfigIssue {
                path: parts[..i].join("."),
                message: "is not an object".into(),
            }]));
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Deserializes, validates and fills defaults.
pub fn resolve_config(value: Value) -> Result<ExperimentConfig, ConfigError> {
    let mut config: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Invalid(vec![ConfigIssue {
            path: if path == "." { "<root>".into() } else { path },
            message: e.into_inner().to_string(),
        }])
    })?;
    config.resolve();
    let issues = config.validate();
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(issues))
    }
}

/// Reads, overrides and resolves a config file.
pub fn validate_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut value = load_config_value(path)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    resolve_config(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_fails_only_on_experiment() {
        let err = resolve_config(parse_config_text("  \n").unwrap()).unwrap_err();
        let issues = err.issues();
        assert_eq!(issues.len(), 1);
        assert!(issues[0].message.contains("experiment"), "{}", issues[0]);
    }

    #[test]
    fn negative_kappa_is_named() {
        let mut v = parse_config_text(r#"{"experiment": "fig3"}"#).unwrap();
        apply_override(&mut v, "noise.kappa=-1").unwrap();
        let err = resolve_config(v).unwrap_err();
        assert_eq!(err.issues()[0].path, "noise.kappa");
    }

    #[test]
    fn unknown_key_reports_path() {
        let v = parse_config_text(r#"{"experiment": "fig3", "device": {"fock_cutof": 4}}"#).unwrap();
        let err = resolve_config(v).unwrap_err();
        assert!(err.issues()[0].path.starts_with("device"), "{}", err);
        assert!(err.to_string().contains("fock_cutof"));
    }

    #[test]
    fn override_is_echoed() {
        let mut v = parse_config_text(r#"{"experiment": "fig3"}"#).unwrap();
        apply_override(&mut v, "device.fock_cutoff=7").unwrap();
        let c = resolve_config(v).unwrap();
        assert_eq!(c.device.fock_cutoff, 7);
        let echo = serde_json::to_string(&c).unwrap();
        assert!(echo.contains("\"fock_cutoff\":7"));
    }

    #[test]
    fn syntax_error_has_line() {
        match parse_config_text("{\n  \"experiment\": fig3\n}") {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_per_experiment() {
        let f2 = ExperimentConfig::for_experiment(ExperimentKind::Fig2Heisenberg);
        let grid = f2.theta_grid();
        assert_eq!(grid.len(), 64);
        assert_eq!(grid[63], FRAC_PI_4);
        // |↑↓↑> is index 0b010
        assert_eq!(f2.initial_state.as_ref().unwrap()[2], [1.0, 0.0]);
        let f3 = ExperimentConfig::for_experiment(ExperimentKind::Fig3);
        assert_eq!(f3.theta_grid()[63], FRAC_PI_2);
        assert_eq!(f3.model.n_sites, 2);
    }

    #[test]
    fn bad_grid_and_string_overrides() {
        let mut v = parse_config_text(r#"{"experiment": "bounds"}"#).unwrap();
        apply_override(&mut v, "protocol.theta_grid=[0.5, 0.1]").unwrap();
        apply_override(&mut v, "model.boundary=periodic").unwrap();
        let err = resolve_config(v).unwrap_err();
        assert_eq!(err.issues()[0].path, "protocol.theta_grid");
        assert!(apply_override(&mut Value::Null, "novalue").is_err());
        let mut v = parse_config_text(r#"{"experiment": "bounds"}"#).unwrap();
        apply_override(&mut v, "model.boundary=periodic").unwrap();
        assert_eq!(resolve_config(v).unwrap().model.boundary, Boundary::Periodic);
    }

    #[test]
    fn unknown_experiment_rejected() {
        let v = parse_config_text(r#"{"experiment": "fig9"}"#).unwrap();
        assert_eq!(resolve_config(v).unwrap_err().issues()[0].path, "experiment");
    }
}
