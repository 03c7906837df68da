//! Runs every `(n, trial)` of an experiment and writes the CSV and its
//! metadata sidecar.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use dpsco::algorithm::DerivedParams;
use dpsco::{
    run_trial, trial_stream, ConvexDomain, RegisteredLoss, RngStream, RunOptions, SyntheticDistribution,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::ExperimentConfig;

pub const CSV_HEADER: [&str; 13] = [
    "algo",
    "n",
    "d",
    "epsilon",
    "delta",
    "trial",
    "seed",
    "excess_emp",
    "excess_pop",
    "grad_evals",
    "runtime_ms",
    "theory_bound",
    "non_private",
];

/// One trial. Failed trials carry NaN losses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub algo: String,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub trial: usize,
    pub seed: u64,
    pub excess_emp: f64,
    pub excess_pop: f64,
    pub grad_evals: u64,
    pub runtime_ms: f64,
    pub theory_bound: f64,
    pub non_private: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialNote {
    pub n: usize,
    pub trial: usize,
    pub message: String,
}

/// Everything needed to run the trials, checked up front.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dist: SyntheticDistribution,
    pub loss: RegisteredLoss,
    pub domain: ConvexDomain,
    pub derived: Vec<DerivedParams>,
}

#[derive(Debug)]
pub struct Outcome {
    /// Sorted by `(n, trial)`.
    pub rows: Vec<CsvRow>,
    pub failures: Vec<TrialNote>,
    pub warnings: Vec<TrialNote>,
    pub uncertified: Vec<TrialNote>,
}

// trial streams are keyed by n >= 1, so child 0 is free for the audit
const AUDIT_STREAM: u64 = 0;

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> anyhow::Result<Self> {
        let d = config.d;
        let dist = SyntheticDistribution::from_name(config.distribution, d, config.location_norm, config.data_radius)
            .context("invalid distribution parameters")?;
        let domain = ConvexDomain::centered_ball(d, config.radius)?;
        dist.check_domain(&domain)?;
        let loss = RegisteredLoss::for_distribution(&dist, &domain, &RngStream::new(config.seed).child(AUDIT_STREAM))?;
        let lipschitz = loss.loss.lipschitz();
        let derived = config
            .ns
            .iter()
            .map(|&n| config.algorithm.derive(n, d, config.budget, lipschitz, config.radius))
            .collect::<dpsco::Result<Vec<_>>>()
            .with_context(|| format!("cannot derive parameters for {}", config.algorithm))?;
        Ok(Experiment { config, dist, loss, domain, derived })
    }

    fn options(&self) -> RunOptions {
        RunOptions {
            noise_off: self.config.noise_off,
            prox_mode: self.config.prox_mode,
            objpert_tol: self.config.objpert_tol,
            sensitivity_audit: self.config.sensitivity_audit,
        }
    }

    pub fn run(&self) -> Outcome {
        let cfg = &self.config;
        let opts = self.options();
        let jobs: Vec<(usize, usize, f64)> = cfg
            .ns
            .iter()
            .zip(&self.derived)
            .flat_map(|(&n, p)| (0..cfg.trials).map(move |t| (n, t, p.theory_bound)))
            .collect();
        let mut results: Vec<_> = jobs
            .into_par_iter()
            .map(|(n, trial, theory_bound)| {
                let stream = trial_stream(cfg.seed, n, trial);
                let start = Instant::now();
                let result = run_trial(
                    &cfg.algorithm,
                    &self.dist,
                    self.loss.loss.as_ref(),
                    &self.domain,
                    n,
                    cfg.budget,
                    &opts,
                    &stream,
                );
                let runtime_ms = if cfg.record_runtime { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                let mut row = CsvRow {
                    algo: cfg.algorithm.to_string(),
                    n,
                    d: cfg.d,
                    epsilon: cfg.budget.epsilon(),
                    delta: cfg.budget.delta(),
                    trial,
                    seed: stream.seed(),
                    excess_emp: f64::NAN,
                    excess_pop: f64::NAN,
                    grad_evals: 0,
                    runtime_ms,
                    theory_bound,
                    non_private: cfg.noise_off,
                };
                let notes = match result {
                    Ok(r) => {
                        row.excess_emp = r.excess_emp;
                        row.excess_pop = r.excess_pop;
                        row.grad_evals = r.grad_evals;
                        row.non_private |= r.non_private;
                        Ok((r.certified, r.warnings))
                    }
                    Err(e) => Err(e.to_string()),
                };
                (row, notes)
            })
            .collect();
        results.sort_by_key(|(row, _)| (row.n, row.trial));

        let mut outcome = Outcome { rows: Vec::new(), failures: Vec::new(), warnings: Vec::new(), uncertified: Vec::new() };
        for (row, notes) in results {
            let note = |message: String| TrialNote { n: row.n, trial: row.trial, message };
            match notes {
                Ok((certified, warnings)) => {
                    if !certified {
                        outcome.uncertified.push(note("precondition not certified".into()));
                    }
                    outcome.warnings.extend(warnings.into_iter().map(note));
                }
                Err(message) => outcome.failures.push(note(message)),
            }
            outcome.rows.push(row);
        }
        outcome
    }

    fn metadata(&self, outcome: &Outcome) -> serde_json::Value {
        let cfg = &self.config;
        json!({
            "algorithm": cfg.algorithm.to_string(),
            "distribution": {
                "name": self.dist.name(),
                "location_norm": cfg.location_norm,
                "data_radius": cfg.data_radius,
                "population_min_loss": self.dist.population_min_loss(),
            },
            "loss": {
                "name": self.loss.name,
                "lipschitz": self.loss.loss.lipschitz(),
                "smoothness": self.loss.loss.smoothness().to_string(),
                "derivation": self.loss.derivation,
            },
            "domain_radius": cfg.radius,
            "d": cfg.d,
            "budget": cfg.budget,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "non_private": cfg.noise_off,
            "prox_mode": cfg.prox_mode.to_string(),
            "objpert_tol": cfg.objpert_tol,
            "sensitivity_audit": cfg.sensitivity_audit,
            "record_runtime": cfg.record_runtime,
            "derived": self.derived,
            "completed_trials": outcome.rows.len() - outcome.failures.len(),
            "failures": outcome.failures,
            "uncertified": outcome.uncertified,
            "warnings": outcome.warnings,
        })
    }
}

/// `<out>.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    if rows.is_empty() {
        writer.write_record(CSV_HEADER)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Result of [`run_experiment`].
#[derive(Debug)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

impl RunSummary {
    pub fn all_completed(&self) -> bool {
        self.outcome.failures.is_empty()
    }
}

/// Validates, runs all trials and writes the CSV and sidecar.
pub fn run_experiment(config: ExperimentConfig) -> anyhow::Result<RunSummary> {
    let experiment = Experiment::prepare(config)?;
    let outcome = experiment.run();
    let csv_path = experiment.config.out.clone();
    write_csv(&csv_path, &outcome.rows)?;
    let meta_path = sidecar_path(&csv_path);
    let meta = serde_json::to_string_pretty(&experiment.metadata(&outcome))?;
    std::fs::write(&meta_path, meta + "\n").with_context(|| format!("cannot write {}", meta_path.display()))?;
    Ok(RunSummary { outcome, csv_path, meta_path })
}

/// Reads rows written by [`write_csv`], checking the header.
pub fn read_csv(path: &Path) -> anyhow::Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    for column in CSV_HEADER {
        if !headers.iter().any(|h| h == column) {
            bail!("{}: missing column `{column}`", path.display());
        }
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: bad record {}", path.display(), i + 1)))
        .collect()
}
