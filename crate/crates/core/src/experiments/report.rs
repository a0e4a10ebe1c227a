use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, OutputFormat};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.8e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::json!(v),
            Cell::Int(v) => serde_json::json!(v),
            Cell::Text(s) => serde_json::json!(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self::with_columns(name, columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|c| match c {
                Cell::Num(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// Tables produced by one experiment together with the resolved config.
#[derive(Clone, Debug)]
pub struct Report {
    pub experiment: String,
    pub config_json: String,
    pub config_sha256: String,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Self {
        let mut echo = config.clone();
        echo.output.dir = None;
        let config_json = serde_json::to_string(&echo).expect("config serializes");
        let config_sha256 = hex::encode(Sha256::digest(config_json.as_bytes()));
        Self {
            experiment: config.experiment.to_string(),
            config_json,
            config_sha256,
            notes: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn note(&mut self, line: String) {
        self.notes.push(line);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn header(&self) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# dqsim {} experiment={}", env!("CARGO_PKG_VERSION"), self.experiment);
        let _ = writeln!(h, "# config_sha256={}", self.config_sha256);
        let _ = writeln!(h, "# config={}", self.config_json);
        for n in &self.notes {
            let _ = writeln!(h, "# {}", n.replace('\n', " "));
        }
        h
    }

    pub fn render_csv(&self, table: &Table) -> String {
        let mut out = self.header();
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self, table: &Table) -> String {
        let config: serde_json::Value = serde_json::from_str(&self.config_json).expect("valid json");
        let rows: Vec<Vec<serde_json::Value>> = table
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect())
            .collect();
        let doc = serde_json::json!({
            "experiment": self.experiment,
            "config_sha256": self.config_sha256,
            "config": config,
            "notes": self.notes,
            "columns": table.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializes");
        s.push('\n');
        s
    }

    /// Gnuplot script plotting every numeric column against the first.
    pub fn render_gnuplot(&self, table: &Table, data_file: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} ({})", table.name, self.config_sha256);
        let _ = writeln!(s, "set datafile separator ','");
        let _ = writeln!(s, "set datafile commentschars '#'");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set xlabel '{}'", table.columns[0]);
        let plots: Vec<String> = (2..=table.columns.len())
            .filter(|&k| matches!(table.rows.first().map(|r| &r[k - 1]), Some(Cell::Num(_))))
            .map(|k| format!("'{data_file}' using 1:{k} with lines"))
            .collect();
        if !plots.is_empty() {
            let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
        }
        s
    }

    /// File name and contents of every artifact.
    pub fn render(&self, format: OutputFormat, gnuplot: bool) -> Vec<(String, String)> {
        let mut files = Vec::new();
        for t in &self.tables {
            let (name, body) = match format {
                OutputFormat::Csv => (format!("{}.csv", t.name), self.render_csv(t)),
                OutputFormat::Json => (format!("{}.json", t.name), self.render_json(t)),
            };
            if gnuplot && format == OutputFormat::Csv {
                files.push((format!("{}.gp", t.name), self.render_gnuplot(t, &name)));
            }
            files.push((name, body));
        }
        files
    }

    /// Writes every artifact into `dir`, creating it when missing.
    pub fn write(&self, dir: &Path, format: OutputFormat, gnuplot: bool) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, body) in self.render(format, gnuplot) {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}
