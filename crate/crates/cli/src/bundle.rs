//! Result bundle: recovered measure, iteration log, metrics, certificates
//! and plot tables, all tagged with the run id and seed.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use bbspike_core::verify::{certify_atom, CertificateReport};
use bbspike_core::{assignment_rmse, AtomicMeasurePair, DomainBox, IterationRecord, MeasureJson, Observation, SolveReport};

/// Number of uniform times sampled in `curves.csv`.
pub const CURVE_SAMPLES: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub run_id: String,
    pub seed: u64,
    pub measure: MeasureJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub run_id: String,
    pub seed: u64,
    pub objective: f64,
    pub j_value: f64,
    pub fidelity: f64,
    pub gap: f64,
    pub gap_tolerance: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    /// Number of recovered atoms.
    pub p: usize,
    pub observation_dim: usize,
    pub within_sparsity_bound: bool,
    /// Per-time assignment RMSE against the truth, when known.
    pub rmse: Option<f64>,
    pub truth_atoms: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub run_id: String,
    pub seed: u64,
    /// One report per recovered atom, in measure order.
    pub atoms: Vec<CertificateReport>,
    /// Every atom passes.
    pub verdict: bool,
}

impl Certificates {
    pub fn for_measure(run_id: &str, seed: u64, measure: &AtomicMeasurePair) -> Self {
        let atoms: Vec<CertificateReport> = measure.atoms().iter().map(certify_atom).collect();
        let verdict = atoms.iter().all(|r| r.verdict);
        Self { run_id: run_id.to_string(), seed, atoms, verdict }
    }
}

pub struct Bundle {
    pub measure: MeasureFile,
    pub metrics: Metrics,
    pub certificates: Certificates,
    pub records: Vec<IterationRecord>,
    pub recovered: AtomicMeasurePair,
}

impl Bundle {
    pub fn assemble(
        run_id: &str,
        seed: u64,
        report: &SolveReport,
        truth: Option<&AtomicMeasurePair>,
        obs: &Observation,
        domain: &DomainBox,
        gap_tolerance: f64,
    ) -> Self {
        let state = &report.state;
        let recovered = state.measure.clone();
        let rmse = truth.map(|t| assignment_rmse(&recovered, t, obs.times(), domain.diameter()));
        let metrics = Metrics {
            run_id: run_id.to_string(),
            seed,
            objective: state.objective,
            j_value: state.j_value(),
            fidelity: state.fidelity(),
            gap: state.gap,
            gap_tolerance,
            converged: report.converged,
            outer_iterations: report.records.len().saturating_sub(1),
            p: recovered.len(),
            observation_dim: obs.total_dim(),
            within_sparsity_bound: report.within_sparsity_bound,
            rmse,
            truth_atoms: truth.map(AtomicMeasurePair::len),
        };
        Self {
            measure: MeasureFile { run_id: run_id.to_string(), seed, measure: recovered.to_json() },
            metrics,
            certificates: Certificates::for_measure(run_id, seed, &recovered),
            records: report.records.clone(),
            recovered,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join("measure.json"), &self.measure)?;
        write_json(&dir.join("metrics.json"), &self.metrics)?;
        write_json(&dir.join("certificates.json"), &self.certificates)?;
        let log = iteration_csv(&self.records);
        fs::write(dir.join("iterations.csv"), &log).context("writing iterations.csv")?;
        emit_plot_data(&self.recovered, &self.records, dir)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn iteration_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(IterationRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Writes `curves.csv` (positions at [`CURVE_SAMPLES`] uniform times) and
/// `convergence.csv` (the iteration log).
pub fn emit_plot_data(measure: &AtomicMeasurePair, records: &[IterationRecord], dir: &Path) -> Result<()> {
    let dim = measure.dim().unwrap_or(0);
    let mut w = csv::Writer::from_path(dir.join("curves.csv")).context("writing curves.csv")?;
    let mut header = vec!["atom_id".to_string(), "t".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    header.push("mass".to_string());
    w.write_record(&header)?;
    for (id, (weight, atom)) in measure.iter().enumerate() {
        let mass = weight * atom.mass();
        for s in 0..CURVE_SAMPLES {
            let t = s as f64 / (CURVE_SAMPLES - 1) as f64;
            let mut row = vec![id.to_string(), t.to_string()];
            row.extend(atom.curve().position_at(t).iter().map(f64::to_string));
            row.push(mass.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    fs::write(dir.join("convergence.csv"), iteration_csv(records)).context("writing convergence.csv")
}
