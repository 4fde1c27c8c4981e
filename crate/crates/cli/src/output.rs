//! Result files. Everything here is a pure function of its inputs so reruns
//! produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hptowec_core::optimizers::{OptimizationTrace, TraceRecord};
use hptowec_core::{Assessment, DesignVector, Metrics};

use crate::config::RunConfig;
use crate::CliError;

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|source| CliError::Io { context: format!("creating {}", dir.display()), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|source| CliError::Io { context: format!("writing {}", path.display()), source })?;
    Ok(path)
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
}

/// Metadata file: command, crate version, seed, configuration hash and any
/// command-specific inputs.
pub fn meta_toml(cfg: &RunConfig, command: &str, inputs: &[(&str, String)]) -> String {
    let meta = Meta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config_sha256: config_hash(cfg),
        inputs: inputs.iter().map(|(k, v)| ((*k).to_owned(), v.clone())).collect(),
    };
    toml::to_string(&meta).expect("metadata is serializable")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsFile {
    pub physical: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
    pub design: DesignVector,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<Metrics>,
}

pub fn metrics_toml(design: &DesignVector, assessment: &Assessment) -> String {
    let file = MetricsFile {
        physical: assessment.is_physical(),
        reason: assessment.non_physical.as_ref().map(ToString::to_string),
        design: *design,
        metrics: assessment.metrics,
    };
    toml::to_string(&file).expect("metrics are serializable")
}

pub const SUMMARY_HEADER: &str =
    "algorithm,evaluations,infeasible_evaluations,ap,vh0,vl0,pl0,mean_absorbed,mean_mech,mean_elec,rpf";

/// One row under `SUMMARY_HEADER`.
pub fn summary_row(name: &str, trace_len: usize, infeasible: usize, design: &DesignVector, m: &Metrics) -> String {
    format!(
        "{name},{trace_len},{infeasible},{},{},{},{},{},{},{},{}",
        design.piston_area,
        design.hpa_volume,
        design.lpa_volume,
        design.lpa_precharge,
        m.mean_absorbed,
        m.mean_mech,
        m.mean_elec,
        m.rpf
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BestDesignFile {
    pub algorithm: String,
    pub eval_index: usize,
    pub objective: f64,
    pub design: DesignVector,
    pub metrics: Metrics,
}

/// Best-so-far objective every `step` evaluations, plus the final one.
pub fn convergence_csv(trace: &OptimizationTrace, step: usize) -> String {
    let best = trace.best_so_far();
    let mut out = String::from("eval_index,best_objective,best_mean_elec\n");
    for (i, b) in best.iter().enumerate() {
        if i % step == 0 || i + 1 == best.len() {
            let _ = writeln!(out, "{i},{b},{}", -b);
        }
    }
    out
}

/// Parses a trace file written by `optimize`.
pub fn parse_trace(path: &Path) -> Result<OptimizationTrace, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let expected: Vec<&str> = hptowec_core::optimizers::TRACE_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(format!("unexpected header `{}`", headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut records = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| format!("row {}: {e}", row + 2))?;
        let num = |i: usize| -> Result<f64, String> {
            rec[i].parse::<f64>().map_err(|_| format!("row {}: `{}` is not a number", row + 2, &rec[i]))
        };
        let index: usize = rec[0].parse().map_err(|_| format!("row {}: bad eval_index `{}`", row + 2, &rec[0]))?;
        if index != row {
            return Err(format!("row {}: eval_index {index} out of sequence", row + 2));
        }
        let feasible: bool = rec[6].parse().map_err(|_| format!("row {}: bad feasible flag `{}`", row + 2, &rec[6]))?;
        records.push(TraceRecord {
            index,
            x: vec![num(1)?, num(2)?, num(3)?, num(4)?],
            value: num(5)?,
            feasible,
            wall_time: 0.0,
        });
    }
    if records.is_empty() {
        return Err("trace has no evaluations".into());
    }
    Ok(OptimizationTrace { records })
}

/// Rows of best-so-far objective, truncated or padded (final value carried
/// forward) to `horizon` evaluations.
pub fn aligned_matrix(traces: &[(String, OptimizationTrace)], horizon: usize) -> String {
    let mut out = String::from("trace");
    for i in 0..horizon {
        let _ = write!(out, ",{i}");
    }
    out.push('\n');
    for (name, trace) in traces {
        let best = trace.best_so_far();
        out.push_str(name);
        let last = *best.last().unwrap_or(&f64::INFINITY);
        for i in 0..horizon {
            let _ = write!(out, ",{}", best.get(i).copied().unwrap_or(last));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(values: &[f64]) -> OptimizationTrace {
        OptimizationTrace {
            records: values
                .iter()
                .enumerate()
                .map(|(i, &v)| TraceRecord { index: i, x: vec![0.1, 1.0, 1.0, 4e6], value: v, feasible: true, wall_time: 0.0 })
                .collect(),
        }
    }

    #[test]
    fn aligned_matrix_truncates_and_pads() {
        let long = trace(&(0..2000).map(|i| -(i as f64)).collect::<Vec<_>>());
        let short = trace(&[-3.0, -1.0, -5.0]);
        let m = aligned_matrix(&[("a".into(), long), ("b".into(), short)], 410);
        let rows: Vec<Vec<&str>> = m.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(rows[0].len(), 411);
        assert_eq!(rows[1].len(), 411);
        assert_eq!(rows[1][410], "-409");
        assert_eq!(&rows[2][1..5], &["-3", "-3", "-5", "-5"]);
        assert_eq!(rows[2][410], "-5");
    }

    #[test]
    fn convergence_rows_follow_step() {
        let t = trace(&(0..25).map(|i| -(i as f64)).collect::<Vec<_>>());
        let csv = convergence_csv(&t, 10);
        let idx: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(idx, vec!["0", "10", "20", "24"]);
    }

    #[test]
    fn trace_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = trace(&[1.5, -2.25e5, 1e9]);
        let path = write_file(dir.path(), "trace_x.csv", &t.to_csv()).unwrap();
        assert_eq!(parse_trace(&path).unwrap(), t);
        let bad = write_file(dir.path(), "bad.csv", "eval_index,ap\n0,1\n").unwrap();
        assert!(parse_trace(&bad).is_err());
    }
}
