use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::report::{benchmark_summary, form_report, write_artifact, TOOL_VERSION};
use crate::data::{Dataset, Matrix};
use crate::error::{ErpxError, Result};
use crate::formation::{
    base_assessment, ensemble_assessment, form_erpx, predict_erpx, write_trace, ErpxModel, FormationConfig,
    ScreeningOptions, TraceRow,
};
use crate::ingest::{load_csv, read_table, write_csv, IngestOptions, ResponseColumn};
use crate::metrics::mse;
use crate::seed::RngSeed;
use crate::simulate::{simulate_replicate, SimulationConfig};

/// Serialized model file: the fitted ensemble plus provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub tool_version: String,
    pub root_seed: u64,
    pub config_hash: String,
    pub model: ErpxModel<f64>,
}

pub fn load_dataset(config: &RunConfig) -> Result<Dataset<f64>> {
    let mut options = IngestOptions::new(config.response.clone());
    options.transforms = config.transforms.clone();
    load_csv(config.require_data()?, &options)
}

pub fn formation_config(config: &RunConfig, seed: RngSeed) -> FormationConfig<f64> {
    FormationConfig {
        spec: config.spec(),
        screening: ScreeningOptions {
            alpha: config.alpha,
            test5: config.test5,
            ..ScreeningOptions::default()
        },
        n_permutations: config.n_permutations,
        grouping: config.groups.clone(),
        seed,
    }
}

fn ensure_out_dir(config: &RunConfig) -> Result<&Path> {
    let dir = config.out_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| ErpxError::io(dir, e))?;
    Ok(dir)
}

/// Forms one ensemble and assesses it against the bare base model.
pub fn form_run(config: &RunConfig, data: &Dataset<f64>, run: usize, seed: RngSeed) -> Result<(ErpxModel<f64>, TraceRow)> {
    let model = form_erpx(data, &formation_config(config, seed))?;
    let erpx = ensemble_assessment(&model, data, config.cv_reps, seed.derive("erpx-assessment"))?;
    let base = base_assessment(data, &config.spec(), config.cv_reps, seed.derive("base-assessment"))?;
    let row = TraceRow::from_model(&config.dataset_id, run, &model, erpx, base);
    Ok((model, row))
}

fn trace_bytes(rows: &[TraceRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace(&mut buf, rows)?;
    Ok(buf)
}

pub fn cmd_form(config: &RunConfig) -> Result<()> {
    let data = load_dataset(config)?;
    let dir = ensure_out_dir(config)?;
    let (model, row) = form_run(config, &data, 1, config.root_seed())?;
    let file = ModelFile {
        tool_version: TOOL_VERSION.to_string(),
        root_seed: config.seed,
        config_hash: config.config_hash(),
        model,
    };
    let report = form_report(config, &file.model, &row);
    write_artifact(&dir.join("model.json"), &serde_json::to_vec_pretty(&file)?, config, "form")?;
    write_artifact(&dir.join("trace.csv"), &trace_bytes(std::slice::from_ref(&row))?, config, "form")?;
    write_artifact(&dir.join("report.txt"), report.as_bytes(), config, "form")?;
    print!("{report}");
    Ok(())
}

pub fn cmd_benchmark(config: &RunConfig) -> Result<()> {
    let data = load_dataset(config)?;
    let dir = ensure_out_dir(config)?;
    let mut rows = Vec::with_capacity(config.reps);
    for run in 1..=config.reps {
        let seed = config.root_seed().derive_index("run", run as u64);
        let (_, row) = form_run(config, &data, run, seed)?;
        info!("run {run}: erpx={} base={}", row.erpx_mse, row.base_mse);
        rows.push(row);
    }
    let summary = benchmark_summary(&rows)?;
    write_artifact(&dir.join("benchmark.csv"), &trace_bytes(&rows)?, config, "benchmark")?;
    write_artifact(&dir.join("summary.txt"), summary.as_bytes(), config, "benchmark")?;
    print!("{summary}");
    Ok(())
}

fn recipe_text(r: &crate::simulate::Replicate<f64>) -> String {
    let join = |v: &[f64]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    let rc = &r.recipe;
    let mut s = String::new();
    let _ = writeln!(s, "replicate={}", r.index + 1);
    let _ = writeln!(s, "replicate_seed={}", r.seed.0);
    let _ = writeln!(s, "kind={}", rc.kind);
    let idx: Vec<String> = rc.signal_indices.iter().map(|k| (k + 1).to_string()).collect();
    let _ = writeln!(s, "signal_columns={}", idx.join(" "));
    let names: Vec<&str> = rc.signal_indices.iter().map(|&k| r.data.feature_names()[k].as_str()).collect();
    let _ = writeln!(s, "signal_names={}", names.join(" "));
    let _ = writeln!(s, "beta1={}", join(&rc.beta1));
    if let Some(b2) = &rc.beta2 {
        let _ = writeln!(s, "beta2={}", join(b2));
    }
    let _ = writeln!(s, "scale={}", rc.scale);
    let _ = writeln!(s, "init_min={}", rc.init_min);
    let _ = writeln!(s, "reference_min={}", rc.reference_range.0);
    let _ = writeln!(s, "reference_max={}", rc.reference_range.1);
    let _ = writeln!(s, "noise={}", join(&rc.noise));
    s
}

pub fn cmd_simulate(config: &RunConfig) -> Result<()> {
    let reference = load_dataset(config)?;
    let dir = ensure_out_dir(config)?;
    let mut sim = SimulationConfig::new(config.noise, config.kind, config.reps, config.root_seed());
    sim.n_signals = config.n_signals;
    sim.validate(reference.n_features())?;
    for r in 0..sim.n_replicates {
        let rep = simulate_replicate(&reference, &sim, r)?;
        let stem = format!("replicate_{:03}", r + 1);
        let mut csv = Vec::new();
        write_csv(&rep.data, "y", &mut csv)?;
        write_artifact(&dir.join(format!("{stem}.csv")), &csv, config, "simulate")?;
        write_artifact(&dir.join(format!("{stem}.recipe")), recipe_text(&rep).as_bytes(), config, "simulate")?;
    }
    println!("wrote {} replicate(s) to {}", sim.n_replicates, dir.display());
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let f = std::fs::File::open(path).map_err(|e| ErpxError::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

/// Columns of `table` reordered to the model's feature order.
pub fn align_features(model: &ErpxModel<f64>, names: &[String], cols: &[Vec<f64>]) -> Result<Matrix<f64>> {
    let pos: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let missing: Vec<&str> = model
        .feature_names
        .iter()
        .filter(|n| !pos.contains_key(n.as_str()))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(ErpxError::Data(format!("input lacks model features: {}", missing.join(", "))));
    }
    let n_rows = cols.first().map_or(0, Vec::len);
    let ordered = model
        .feature_names
        .iter()
        .map(|n| cols.get(pos[n.as_str()]).cloned().unwrap_or_else(|| vec![0.0; n_rows]))
        .collect();
    Matrix::from_columns(ordered)
}

pub fn cmd_predict(config: &RunConfig) -> Result<()> {
    let model_path = config
        .model
        .as_deref()
        .ok_or_else(|| ErpxError::Config("--model is required".into()))?;
    let file = read_model(model_path)?;
    let data_path = config.require_data()?;
    let f = std::fs::File::open(data_path).map_err(|e| ErpxError::io(data_path, e))?;
    let (names, cols) = read_table(f)?;
    let x = align_features(&file.model, &names, &cols)?;
    let pred = predict_erpx(&file.model, &x)?;
    let out = config.out.clone().unwrap_or_else(|| config.out_dir.join("predictions.csv"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| ErpxError::io(parent, e))?;
    }
    let mut text = String::from("prediction\n");
    for p in &pred {
        let _ = writeln!(text, "{p}");
    }
    write_artifact(&out, text.as_bytes(), config, "predict")?;
    if config.entries.contains_key("response") {
        let idx = match &config.response {
            ResponseColumn::Name(n) => names.iter().position(|h| h == n),
            ResponseColumn::Index(i) => (*i < names.len()).then_some(*i),
        };
        if let Some(i) = idx {
            if !pred.is_empty() {
                println!("test MSE: {}", mse(&cols[i], &pred)?);
            }
        }
    }
    println!("wrote {} prediction(s) to {}", pred.len(), out.display());
    Ok(())
}
