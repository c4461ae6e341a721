use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::error::{ErpxError, Result};
use crate::formation::{ErpxModel, TraceRow};
use crate::metrics::{five_number_summary, mean};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `key=value` provenance lines written beside every artifact.
pub fn metadata_lines(config: &RunConfig, command: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tool=erpx");
    let _ = writeln!(s, "tool_version={TOOL_VERSION}");
    let _ = writeln!(s, "command={command}");
    let _ = writeln!(s, "root_seed={}", config.seed);
    let _ = writeln!(s, "config_hash={}", config.config_hash());
    let chain: Vec<String> = config.transforms.iter().map(ToString::to_string).collect();
    let _ = writeln!(s, "transforms={}", chain.join(" | "));
    for (k, v) in &config.entries {
        let _ = writeln!(s, "config.{k}={v}");
    }
    s
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta");
    artifact.with_file_name(name)
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| ErpxError::io(path, e))
}

/// Writes `contents` to `path` and its metadata sidecar.
pub fn write_artifact(path: &Path, contents: &[u8], config: &RunConfig, command: &str) -> Result<()> {
    write_file(path, contents)?;
    write_file(&sidecar_path(path), metadata_lines(config, command).as_bytes())
}

fn align(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..rows.first().map_or(0, Vec::len))
        .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

pub fn form_report(config: &RunConfig, model: &ErpxModel<f64>, row: &TraceRow) -> String {
    let t = &model.trace;
    let mut s = String::new();
    let _ = writeln!(s, "dataset: {}", row.dataset);
    let _ = writeln!(s, "base: {}", row.base);
    let _ = writeln!(s, "alpha: {}", config.alpha);
    let _ = writeln!(s);
    s.push_str(&align(&[
        ["D", "d", "s", "e", "h"].map(String::from).to_vec(),
        [t.n_features, t.d, t.s, t.e, t.h].map(|v| v.to_string()).to_vec(),
    ]));
    let _ = writeln!(s);
    if let (Some(p), Some(q)) = (t.p_alpha, t.q_upper) {
        let _ = writeln!(s, "screening thresholds: p_alpha={p:.6} q_upper={q:.6}");
    }
    if t.screening_fallback {
        let _ = writeln!(s, "warning: no initial group passed screening; kept the strongest one");
    }
    let _ = writeln!(s, "merges: {}", t.merges.len());
    let _ = writeln!(s, "model fits during formation: {}", t.fits);
    if t.oob_fallback_rows > 0 {
        let _ = writeln!(s, "rows without out-of-bag trees (mean fallback): {}", t.oob_fallback_rows);
    }
    let _ = writeln!(s);
    let mut rows = vec![vec!["phalanx".to_string(), "size".to_string(), "features".to_string()]];
    for g in &model.final_phalanxes.groups {
        let names: Vec<&str> = g.members.iter().map(|&m| model.feature_names[m].as_str()).collect();
        let shown = if names.len() > 8 {
            format!("{} ... {}", names[..4].join(" "), names[names.len() - 2..].join(" "))
        } else {
            names.join(" ")
        };
        rows.push(vec![g.label.clone(), g.members.len().to_string(), shown]);
    }
    s.push_str(&align(&rows));
    let _ = writeln!(s);
    let metric = match row.base {
        crate::regress::RegressorKind::Lasso => "CV-MSE",
        crate::regress::RegressorKind::Forest => "OOB-MSE",
    };
    let _ = writeln!(s, "ERPX {metric}: {:.6}", row.erpx_mse);
    let _ = writeln!(s, "base {metric}: {:.6}", row.base_mse);
    s
}

/// Means, win fraction and five-number tables for a set of runs.
pub fn benchmark_summary(rows: &[TraceRow]) -> Result<String> {
    let erpx: Vec<f64> = rows.iter().map(|r| r.erpx_mse).collect();
    let base: Vec<f64> = rows.iter().map(|r| r.base_mse).collect();
    let wins = rows.iter().filter(|r| r.erpx_mse < r.base_mse).count();
    let mut s = String::new();
    let _ = writeln!(s, "runs: {}", rows.len());
    let _ = writeln!(s, "mean ERPX MSE: {:.6}", mean(&erpx));
    let _ = writeln!(s, "mean base MSE: {:.6}", mean(&base));
    let _ = writeln!(s, "ERPX wins: {wins}/{} ({:.3})", rows.len(), wins as f64 / rows.len() as f64);
    let _ = writeln!(s);
    let mut table = vec![["method", "min", "q1", "median", "q3", "max"].map(String::from).to_vec()];
    for (name, v) in [("ERPX", &erpx), ("base", &base)] {
        let q = five_number_summary(v)?;
        let mut r = vec![name.to_string()];
        r.extend(q.iter().map(|x| format!("{x:.6}")));
        table.push(r);
    }
    s.push_str(&align(&table));
    let _ = writeln!(s);
    let mut counts = vec![["run", "D", "d", "s", "e", "h"].map(String::from).to_vec()];
    for r in rows {
        counts.push([r.run, r.n_features, r.d, r.s, r.e, r.h].map(|v| v.to_string()).to_vec());
    }
    s.push_str(&align(&counts));
    Ok(s)
}
