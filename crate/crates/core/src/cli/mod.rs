//! Command-line front end: `form`, `benchmark`, `simulate` and `predict`.

mod commands;
mod config;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{ErpxError, Result};

pub use commands::{align_features, cmd_benchmark, cmd_form, cmd_predict, cmd_simulate, form_run, load_dataset, read_model, ModelFile};
pub use config::{parse_config_text, read_config_file, RunConfig, KNOWN_KEYS};
pub use report::{benchmark_summary, metadata_lines, sidecar_path, TOOL_VERSION};

#[derive(Debug, Parser)]
#[command(name = "erpx", version, about = "Ensembles of regression phalanxes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Form one ensemble and write the model, trace row and report.
    Form(CommonArgs),
    /// Compare the ensemble with the bare base model over repeated runs.
    Benchmark(CommonArgs),
    /// Generate replicate datasets that mimic a reference dataset.
    Simulate(CommonArgs),
    /// Predict with a saved model.
    Predict(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Form(_) => "form",
            Command::Benchmark(_) => "benchmark",
            Command::Simulate(_) => "simulate",
            Command::Predict(_) => "predict",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Form(a) | Command::Benchmark(a) | Command::Simulate(a) | Command::Predict(a) => a,
        }
    }
}

/// Flags override values from `--config`.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Key=value config file merged under the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV (training data, reference data or rows to predict).
    #[arg(long)]
    pub data: Option<String>,
    /// Response column: header name or zero-based position.
    #[arg(long)]
    pub response: Option<String>,
    /// Base regressor: lasso or forest.
    #[arg(long)]
    pub base: Option<String>,
    /// Screening significance level.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Initial groups: none, name, name:prefix:<delim> or cluster:<d>.
    #[arg(long)]
    pub groups: Option<String>,
    /// Benchmark runs or simulated replicates.
    #[arg(long)]
    pub reps: Option<String>,
    /// Cross-validation repetitions per assessment.
    #[arg(long)]
    pub cv_reps: Option<String>,
    #[arg(long)]
    pub out_dir: Option<String>,
    /// Worker threads; 0 uses every logical core.
    #[arg(long)]
    pub threads: Option<String>,
    /// Dataset name in trace rows (defaults to the data file stem).
    #[arg(long)]
    pub dataset_id: Option<String>,
    /// Permuted responses pooled into the screening null.
    #[arg(long)]
    pub n_permutations: Option<String>,
    /// Combining-improvement test quantifier: exists or forall.
    #[arg(long)]
    pub test5: Option<String>,
    /// One-based case numbers to drop, e.g. "25,26,36-39".
    #[arg(long)]
    pub drop_rows: Option<String>,
    /// Replace the response by log(y + offset).
    #[arg(long)]
    pub log_offset: Option<String>,
    /// Logarithm base for --log-offset: e, 10 or 2.
    #[arg(long)]
    pub log_base: Option<String>,
    /// Keep only the k highest-variance features.
    #[arg(long)]
    pub top_variance: Option<String>,
    /// Trees per forest during formation.
    #[arg(long)]
    pub trees_formation: Option<String>,
    /// Trees per final forest.
    #[arg(long)]
    pub trees_final: Option<String>,
    /// Covariance noise level for simulate: none, medium or high.
    #[arg(long)]
    pub noise: Option<String>,
    /// Simulated response kind: linear or mixture.
    #[arg(long)]
    pub kind: Option<String>,
    /// Signal columns per simulated response.
    #[arg(long)]
    pub n_signals: Option<String>,
    /// Saved model for predict.
    #[arg(long)]
    pub model: Option<String>,
    /// Output file for predict.
    #[arg(long)]
    pub out: Option<String>,
}

impl CommonArgs {
    fn flag_entries(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("data", &self.data),
            ("response", &self.response),
            ("base", &self.base),
            ("alpha", &self.alpha),
            ("seed", &self.seed),
            ("groups", &self.groups),
            ("reps", &self.reps),
            ("cv_reps", &self.cv_reps),
            ("out_dir", &self.out_dir),
            ("threads", &self.threads),
            ("dataset_id", &self.dataset_id),
            ("n_permutations", &self.n_permutations),
            ("test5", &self.test5),
            ("drop_rows", &self.drop_rows),
            ("log_offset", &self.log_offset),
            ("log_base", &self.log_base),
            ("top_variance", &self.top_variance),
            ("trees_formation", &self.trees_formation),
            ("trees_final", &self.trees_final),
            ("noise", &self.noise),
            ("kind", &self.kind),
            ("n_signals", &self.n_signals),
            ("model", &self.model),
            ("out", &self.out),
        ]
    }

    /// Config-file entries overridden by any flags given.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut entries: BTreeMap<String, String> = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (k, v) in self.flag_entries() {
            if let Some(v) = v {
                entries.insert(k.to_string(), v.clone());
            }
        }
        RunConfig::from_entries(entries)
    }
}

/// Resolves the configuration, sizes the worker pool and runs the command.
pub fn run(cli: &Cli) -> Result<()> {
    let config = cli.command.args().resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| ErpxError::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Form(_) => cmd_form(&config),
        Command::Benchmark(_) => cmd_benchmark(&config),
        Command::Simulate(_) => cmd_simulate(&config),
        Command::Predict(_) => cmd_predict(&config),
    })
}
