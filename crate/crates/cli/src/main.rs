use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dpsco_cli::{emit_rate_table, run_experiment, RawConfig};

/// Run seeded private-optimization experiments and tabulate their results.
#[derive(Parser, Debug)]
#[command(name = "dpsco", version)]
struct Args {
    /// Experiment config (`key = value` lines or a JSON object).
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path; the metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// nsgd, proxgd, objpert, objpert-app or erm-reduction:<inner>.
    #[arg(long)]
    algo: Option<String>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Drop all privacy noise. Every output row is tagged non_private.
    #[arg(long)]
    noise_off: bool,
    /// certified-gd, capped-gd:<k> or exact-oracle.
    #[arg(long)]
    prox_mode: Option<String>,
    /// Solver accuracy for exact objective perturbation.
    #[arg(long)]
    objpert_tol: Option<f64>,
    /// Also solve each approximate objective-perturbation problem to high accuracy.
    #[arg(long)]
    sensitivity_audit: bool,
    /// Write 0 in the runtime_ms column so whole files are reproducible.
    #[arg(long)]
    no_runtime: bool,
    /// Print the rate table of a CSV. Without a path, tabulate this run's output.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    emit_table: Option<String>,
}

impl Args {
    fn apply(self, raw: &mut RawConfig) {
        set(&mut raw.out, self.out);
        set(&mut raw.algo, self.algo);
        set(&mut raw.n, self.n);
        set(&mut raw.d, self.d);
        set(&mut raw.epsilon, self.eps);
        set(&mut raw.delta, self.delta);
        set(&mut raw.trials, self.trials);
        set(&mut raw.seed, self.seed);
        set(&mut raw.prox_mode, self.prox_mode);
        set(&mut raw.objpert_tol, self.objpert_tol);
        if self.noise_off {
            raw.noise_off = Some(true);
        }
        if self.sensitivity_audit {
            raw.sensitivity_audit = Some(true);
        }
        if self.no_runtime {
            raw.record_runtime = Some(false);
        }
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn print_table(csv: &std::path::Path) -> anyhow::Result<()> {
    let table = emit_rate_table(csv)?;
    print!("{}", table.text);
    eprintln!("plot data written to {}", table.plot_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();

    if let Some(csv) = args.emit_table.as_ref().filter(|p| !p.is_empty()) {
        if args.config.is_none() && args.algo.is_none() {
            return match print_table(csv.as_ref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            };
        }
    }

    let mut raw = match &args.config {
        Some(path) => match RawConfig::from_file(path) {
            Ok(raw) => raw,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => RawConfig::default(),
    };
    let config_label = args.config.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default();
    let table_after = args.emit_table.clone();
    args.apply(&mut raw);
    let config = match raw.resolve() {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {config_label}{e}");
            return ExitCode::from(2);
        }
    };
    if config.noise_off {
        eprintln!("warning: noise is off; results are NON-PRIVATE");
    }

    let summary = match run_experiment(config) {
        Ok(summary) => summary,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    for w in &summary.outcome.warnings {
        eprintln!("warning: n={} trial={}: {}", w.n, w.trial, w.message);
    }
    for f in &summary.outcome.failures {
        eprintln!("error: n={} trial={} failed: {}", f.n, f.trial, f.message);
    }
    eprintln!(
        "wrote {} rows to {} (metadata: {})",
        summary.outcome.rows.len(),
        summary.csv_path.display(),
        summary.meta_path.display()
    );

    if let Some(csv) = table_after {
        let csv = if csv.is_empty() { summary.csv_path.clone() } else { PathBuf::from(csv) };
        if let Err(e) = print_table(&csv) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    if summary.all_completed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
