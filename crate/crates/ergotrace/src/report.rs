//! Deterministic output emission: CSV tables, JSON summaries, and hashed run
//! manifests.
//!
//! Every artifact is built as an in-memory string first, with a fixed cell
//! format (lower-case scientific, 17 significant digits, `'.'` decimal,
//! `'\n'` row terminators), so two runs with identical manifests produce
//! byte-identical files. Output lands under `<out>/<manifest-hash>/`, where
//! the hash covers the *inputs* of the run (domain, boundary conditions,
//! spectral range, grid policy, seed, tool version) but not its outcomes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::billiard::{Orbit, OrbitTermination};
use crate::eigensolve::{ScanPolicy, SpectrumResult};
use crate::geometry::Domain;
use crate::qe::{
    EgorovPoint, HeatRow, NormWindow, QeReport, RellichReport, VarianceWindow, WeylAverage,
};

/// Errors raised while building or writing artifacts.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("row has {got} cells but the table has {expect} columns")]
    RowWidth { got: usize, expect: usize },
    #[error("could not serialize {what}: {source}")]
    Serialize {
        what: &'static str,
        #[source]
        source: serde_json::Error,
    },
    #[error("could not write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("billiard orbit start point is outside the boundary chart: {0}")]
    BadOrbit(String),
}

/// One float cell: lower-case scientific with 16 fractional digits
/// (17 significant), `'.'` decimal separator regardless of locale.
pub fn float_cell(x: f64) -> String {
    format!("{x:.16e}")
}

/// One integer cell.
pub fn int_cell(n: i64) -> String {
    format!("{n}")
}

/// One boolean cell (`true`/`false`).
pub fn bool_cell(b: bool) -> String {
    format!("{b}")
}

/// A rectangular table with a header row, rendered as CSV.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Append one row; the cell count must match the header.
    pub fn push_row(&mut self, cells: Vec<String>) -> Result<(), ReportError> {
        if cells.len() != self.columns.len() {
            return Err(ReportError::RowWidth {
                got: cells.len(),
                expect: self.columns.len(),
            });
        }
        self.rows.push(cells);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Render: header + rows, comma-separated, `'\n'`-terminated lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Spectrum rows: one line per eigenstate, λ-ordered as solved.
pub fn spectrum_table(result: &SpectrumResult) -> Result<Table, ReportError> {
    let mut t = Table::new(&[
        "index",
        "lambda",
        "bc",
        "multiplicity",
        "cluster_index",
        "sigma_min",
        "operator_residual",
        "bc_residual",
        "pde_residual",
        "norm_quality",
        "near_degenerate",
    ]);
    for (k, p) in result.pairs.iter().enumerate() {
        t.push_row(vec![
            int_cell(k as i64 + 1),
            float_cell(p.lambda),
            p.bc.label(),
            int_cell(p.multiplicity as i64),
            int_cell(p.cluster_index as i64),
            float_cell(p.sigma_min),
            float_cell(p.operator_residual),
            float_cell(p.bc_residual),
            float_cell(p.pde_residual),
            float_cell(p.norm_quality),
            bool_cell(p.near_degenerate),
        ])?;
    }
    Ok(t)
}

/// The raw σ_min scan behind a spectrum run (plot-ready).
pub fn scan_table(result: &SpectrumResult) -> Result<Table, ReportError> {
    let mut t = Table::new(&["lambda", "sigma_min"]);
    for (l, s) in result.scan.lambdas.iter().zip(&result.scan.sigmas) {
        t.push_row(vec![float_cell(*l), float_cell(*s)])?;
    }
    Ok(t)
}

/// Matrix-element rows of a statistics report.
pub fn qe_table(report: &QeReport) -> Result<Table, ReportError> {
    let mut t = Table::new(&[
        "j", "lambda", "rho", "rho_im", "norm_sq", "cesaro", "variance",
    ]);
    for r in &report.rows {
        t.push_row(vec![
            int_cell(r.j as i64),
            float_cell(r.lambda),
            float_cell(r.rho),
            float_cell(r.rho_im),
            float_cell(r.norm_sq),
            float_cell(r.cesaro),
            float_cell(r.variance),
        ])?;
    }
    Ok(t)
}

/// Windowed variance rows.
pub fn variance_table(windows: &[VarianceWindow]) -> Result<Table, ReportError> {
    let mut t = Table::new(&[
        "label",
        "start",
        "end",
        "count",
        "normalized",
        "unnormalized",
    ]);
    for w in windows {
        t.push_row(vec![
            w.label.clone(),
            int_cell(w.start as i64),
            int_cell(w.end as i64),
            int_cell(w.count as i64),
            float_cell(w.normalized),
            float_cell(w.unnormalized),
        ])?;
    }
    Ok(t)
}

/// Windowed norm rows.
pub fn norm_table(windows: &[NormWindow]) -> Result<Table, ReportError> {
    let mut t = Table::new(&["label", "start", "end", "count", "mean", "std_error"]);
    for w in windows {
        t.push_row(vec![
            w.label.clone(),
            int_cell(w.start as i64),
            int_cell(w.end as i64),
            int_cell(w.count as i64),
            float_cell(w.mean),
            float_cell(w.std_error),
        ])?;
    }
    Ok(t)
}

/// Symbol-transport residual rows.
pub fn egorov_table(points: &[EgorovPoint]) -> Result<Table, ReportError> {
    let mut t = Table::new(&["lambda", "residual", "corner_fraction", "grid_n"]);
    for p in points {
        t.push_row(vec![
            float_cell(p.lambda),
            float_cell(p.residual),
            float_cell(p.corner_fraction),
            int_cell(p.grid_n as i64),
        ])?;
    }
    Ok(t)
}

/// Boundary-identity rows (one per Dirichlet state).
pub fn rellich_table(report: &RellichReport) -> Result<Table, ReportError> {
    let mut t = Table::new(&[
        "j",
        "lambda",
        "boundary_integral",
        "rel_error",
        "norm_ratio",
        "norm_bound_ok",
    ]);
    for r in &report.rows {
        t.push_row(vec![
            int_cell(r.j as i64),
            float_cell(r.lambda),
            float_cell(r.boundary_integral),
            float_cell(r.rel_error),
            float_cell(r.norm_ratio),
            bool_cell(r.norm_bound_ok),
        ])?;
    }
    Ok(t)
}

/// Truncated heat-trace rows (one per requested time).
pub fn heat_table(rows: &[HeatRow]) -> Result<Table, ReportError> {
    let mut t = Table::new(&["t", "trace", "target", "ratio", "count"]);
    for r in rows {
        t.push_row(vec![
            float_cell(r.t),
            float_cell(r.trace),
            float_cell(r.target),
            float_cell(r.ratio),
            int_cell(r.count as i64),
        ])?;
    }
    Ok(t)
}

/// Billiard orbit rows: step index, boundary coordinates, plane position.
pub fn orbit_table(domain: &Domain, orbit: &Orbit) -> Result<Table, ReportError> {
    let mut t = Table::new(&["step", "s", "eta", "x", "y"]);
    for (k, q) in orbit.points.iter().enumerate() {
        let node = domain
            .boundary_point(q.s)
            .map_err(|e| ReportError::BadOrbit(e.to_string()))?;
        t.push_row(vec![
            int_cell(k as i64),
            float_cell(q.s),
            float_cell(q.eta),
            float_cell(node.position[0]),
            float_cell(node.position[1]),
        ])?;
    }
    Ok(t)
}

/// One named check inside a JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    /// `"relative"` or `"absolute"`.
    pub tolerance_kind: String,
    pub passed: bool,
}

impl Check {
    /// Relative check: `|value − target| ≤ tolerance·|target|`.
    pub fn relative(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        let passed = value.is_finite() && (value - target).abs() <= tolerance * target.abs();
        Check {
            name: name.to_string(),
            value,
            target,
            tolerance,
            tolerance_kind: "relative".to_string(),
            passed,
        }
    }

    /// Absolute check: `|value − target| ≤ tolerance`.
    pub fn absolute(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        let passed = value.is_finite() && (value - target).abs() <= tolerance;
        Check {
            name: name.to_string(),
            value,
            target,
            tolerance,
            tolerance_kind: "absolute".to_string(),
            passed,
        }
    }

    /// Upper-bound check: `value ≤ target` (tolerance recorded as 0).
    pub fn upper_bound(name: &str, value: f64, target: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            target,
            tolerance: 0.0,
            tolerance_kind: "absolute".to_string(),
            passed: value.is_finite() && value <= target,
        }
    }

    /// Plain boolean check (value/target encode 1.0 = true).
    pub fn flag(name: &str, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            value: if passed { 1.0 } else { 0.0 },
            target: 1.0,
            tolerance: 0.0,
            tolerance_kind: "absolute".to_string(),
            passed,
        }
    }
}

/// JSON summary: free-form metadata plus a list of named checks.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub meta: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Summary {
    pub fn new() -> Self {
        Summary {
            meta: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn meta_str(&mut self, key: &str, value: &str) -> &mut Self {
        self.meta
            .insert(key.to_string(), serde_json::Value::String(value.to_string()));
        self
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta.insert(key.to_string(), serde_json::json!(value));
        self
    }

    pub fn meta_u64(&mut self, key: &str, value: u64) -> &mut Self {
        self.meta.insert(key.to_string(), serde_json::json!(value));
        self
    }

    pub fn push(&mut self, check: Check) -> &mut Self {
        self.passed &= check.passed;
        self.checks.push(check);
        self
    }

    /// Names of the checks that failed, in order.
    pub fn failing(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|source| {
            ReportError::Serialize {
                what: "summary",
                source,
            }
        })?;
        text.push('\n');
        Ok(text)
    }
}

impl Default for Summary {
    fn default() -> Self {
        Self::new()
    }
}

/// Convenience: a relative check built from a Cesàro average result.
pub fn weyl_check(name: &str, avg: &WeylAverage, tolerance: f64) -> Check {
    Check::relative(name, avg.average, avg.target, tolerance)
}

/// SHA-256 of raw bytes, lower-case hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Grid policy subset that affects outputs (and therefore the manifest hash).
#[derive(Debug, Clone, Serialize)]
pub struct GridPolicyManifest {
    pub points_per_wavelength: f64,
    pub n_fixed: Option<usize>,
    pub n_max: usize,
}

impl From<&ScanPolicy> for GridPolicyManifest {
    fn from(p: &ScanPolicy) -> Self {
        GridPolicyManifest {
            points_per_wavelength: p.ppw,
            n_fixed: p.n_fixed,
            n_max: p.n_max,
        }
    }
}

/// Everything that determines a run's outputs, plus the per-check outcomes
/// recorded after the run. The output directory name hashes only the input
/// portion, so re-running the same configuration lands in the same place
/// with byte-identical CSV files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    /// SHA-256 of the domain configuration file bytes.
    pub domain_file_hash: String,
    pub domain: String,
    pub bc: Vec<String>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub grid_policy: GridPolicyManifest,
    pub seed: u64,
    /// Subcommand-specific options (observable name, time list, …), sorted.
    pub options: BTreeMap<String, String>,
    /// Per-check pass/fail, filled after the run; excluded from the hash.
    pub checks: BTreeMap<String, bool>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        domain_name: &str,
        domain_file_hash: &str,
        bcs: &[String],
        lambda_min: f64,
        lambda_max: f64,
        grid_policy: GridPolicyManifest,
        seed: u64,
    ) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            domain_file_hash: domain_file_hash.to_string(),
            domain: domain_name.to_string(),
            bc: bcs.to_vec(),
            lambda_min,
            lambda_max,
            grid_policy,
            seed,
            options: BTreeMap::new(),
            checks: BTreeMap::new(),
        }
    }

    pub fn option(&mut self, key: &str, value: &str) -> &mut Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn record_check(&mut self, name: &str, passed: bool) -> &mut Self {
        self.checks.insert(name.to_string(), passed);
        self
    }

    /// Hash of the input portion (checks cleared), canonical JSON, SHA-256.
    pub fn input_hash(&self) -> Result<String, ReportError> {
        let mut input = self.clone();
        input.checks.clear();
        let canonical =
            serde_json::to_string(&input).map_err(|source| ReportError::Serialize {
                what: "manifest",
                source,
            })?;
        Ok(sha256_hex(canonical.as_bytes()))
    }

    /// First 12 hex characters of [`input_hash`](Self::input_hash) — the
    /// output directory name.
    pub fn short_hash(&self) -> Result<String, ReportError> {
        Ok(self.input_hash()?[..12].to_string())
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut text =
            serde_json::to_string_pretty(self).map_err(|source| ReportError::Serialize {
                what: "manifest",
                source,
            })?;
        text.push('\n');
        Ok(text)
    }
}

/// A finished run: the manifest plus named artifacts to be written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: RunManifest,
    /// `(file name, contents)` pairs; written verbatim.
    pub files: Vec<(String, String)>,
}

impl RunOutput {
    pub fn new(manifest: RunManifest) -> Self {
        RunOutput {
            manifest,
            files: Vec::new(),
        }
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> &mut Self {
        self.files.push((format!("{name}.csv"), table.to_csv()));
        self
    }

    pub fn json(&mut self, name: &str, contents: String) -> &mut Self {
        self.files.push((format!("{name}.json"), contents));
        self
    }

    /// Write everything under `<out_root>/<short-hash>/`, including the
    /// manifest itself, and return that directory.
    pub fn write(&self, out_root: &Path) -> Result<PathBuf, ReportError> {
        let dir = out_root.join(self.manifest.short_hash()?);
        fs::create_dir_all(&dir).map_err(|source| ReportError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|source| ReportError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        let manifest_path = dir.join("manifest.json");
        fs::write(&manifest_path, self.manifest.to_json()?).map_err(|source| {
            ReportError::Io {
                path: manifest_path.display().to_string(),
                source,
            }
        })?;
        Ok(dir)
    }
}

/// Human-readable one-line description of why an orbit ended.
pub fn termination_label(t: &OrbitTermination) -> String {
    match t {
        OrbitTermination::Completed => "completed".to_string(),
        OrbitTermination::Corner { step, s } => {
            format!("corner at step {step} (s = {s:.6})")
        }
        OrbitTermination::Tangential { step } => format!("tangential at step {step}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_cells_round_trip() {
        for &x in &[
            0.0,
            1.0,
            -1.5,
            std::f64::consts::PI,
            2.404825557695773,
            1.0e-17,
            6.6e300,
        ] {
            let cell = float_cell(x);
            assert!(!cell.contains(','));
            let back: f64 = cell.parse().unwrap();
            assert_eq!(back, x, "cell {cell} lost precision");
        }
    }

    #[test]
    fn table_rejects_ragged_rows() {
        let mut t = Table::new(&["a", "b"]);
        assert!(t.push_row(vec!["1".into()]).is_err());
        t.push_row(vec!["1".into(), "2".into()]).unwrap();
        assert_eq!(t.to_csv(), "a,b\n1,2\n");
    }

    #[test]
    fn manifest_hash_ignores_check_outcomes() {
        let policy = ScanPolicy::default();
        let mut m = RunManifest::new(
            "qe",
            "disk",
            "deadbeef",
            &["neumann".to_string()],
            0.0,
            20.0,
            GridPolicyManifest::from(&policy),
            7,
        );
        let before = m.input_hash().unwrap();
        m.record_check("cesaro", false);
        assert_eq!(m.input_hash().unwrap(), before);
        m.option("observable", "const");
        assert_ne!(m.input_hash().unwrap(), before);
        assert_eq!(m.short_hash().unwrap().len(), 12);
    }

    #[test]
    fn summary_tracks_failures() {
        let mut s = Summary::new();
        s.push(Check::relative("close", 1.001, 1.0, 0.01));
        assert!(s.passed);
        s.push(Check::relative("far", 2.0, 1.0, 0.01));
        assert!(!s.passed);
        assert_eq!(s.failing(), vec!["far".to_string()]);
        let text = s.to_json().unwrap();
        assert!(text.contains("\"tolerance_kind\": \"relative\""));
    }
}
