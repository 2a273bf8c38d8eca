//! Writing experiment outputs: a JSON report, CSV tables and a run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiments::{run_experiment, ExperimentOutput, MatchReport};
use crate::embedding::checksum;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Provenance record written next to every set of outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub crate_version: String,
    /// Checksum of the config bytes as read from disk.
    pub config_sha256: String,
    pub started_at: String,
    pub finished_at: String,
    pub seeds: Vec<u64>,
    /// Output files, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_csv(path: &Path, header: &[&str], records: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record(&r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn join(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn match_tables(dir: &Path, rep: &MatchReport, files: &mut Vec<String>) -> Result<()> {
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.size.to_string(),
                r.subset_rank.to_string(),
                join(&r.classes),
                r.seed.to_string(),
                r.solver.name().to_string(),
                r.accuracy.to_string(),
                r.outcome.cost.to_string(),
                opt(r.outcome.dual_bound),
                opt(r.gap()),
                r.outcome.converged.to_string(),
                opt(r.global),
                r.outcome.iterations.to_string(),
                r.outcome.wall_time.to_string(),
                join(&r.outcome.perm),
            ]
        })
        .collect();
    write_csv(
        &dir.join("rows.csv"),
        &[
            "size", "subset_rank", "classes", "seed", "solver", "accuracy", "cost", "dual_bound", "gap",
            "converged", "global", "iterations", "wall_time", "perm",
        ],
        rows,
    )?;
    files.push("rows.csv".into());

    let aggs = rep
        .aggregates
        .iter()
        .map(|a| {
            vec![
                a.size.to_string(),
                a.solver.name().to_string(),
                a.count.to_string(),
                a.accuracy_mean.to_string(),
                a.accuracy_std.to_string(),
                a.cost_mean.to_string(),
                a.cost_std.to_string(),
                a.converged_fraction.to_string(),
                opt(a.global_fraction),
                a.wall_time_mean.to_string(),
            ]
        })
        .collect();
    write_csv(
        &dir.join("aggregates.csv"),
        &[
            "size", "solver", "count", "accuracy_mean", "accuracy_std", "cost_mean", "cost_std",
            "converged_fraction", "global_fraction", "wall_time_mean",
        ],
        aggs,
    )?;
    files.push("aggregates.csv".into());

    let curves: Vec<Vec<String>> = rep
        .rows
        .iter()
        .flat_map(|r| {
            r.outcome.history.iter().map(move |h| {
                vec![
                    r.size.to_string(),
                    r.subset_rank.to_string(),
                    r.seed.to_string(),
                    r.solver.name().to_string(),
                    h.iteration.to_string(),
                    h.qap_dual.to_string(),
                    h.qap_primal.to_string(),
                ]
            })
        })
        .collect();
    if !curves.is_empty() {
        write_csv(
            &dir.join("history.csv"),
            &["size", "subset_rank", "seed", "solver", "iteration", "qap_dual", "qap_primal"],
            curves,
        )?;
        files.push("history.csv".into());
    }
    Ok(())
}

/// Writes `report.json` plus the experiment's CSV tables into `dir`,
/// returning the file names.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("report.json"), output)?;
    let mut files = vec!["report.json".to_string()];
    match output {
        ExperimentOutput::Match(rep) => match_tables(dir, rep, &mut files)?,
        ExperimentOutput::Classify(rep) => {
            let rows = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.seed.to_string(),
                        r.accuracy.to_string(),
                        r.oracle_accuracy.to_string(),
                        r.agreement.to_string(),
                        r.outcome.cost.to_string(),
                        opt(r.outcome.dual_bound),
                        r.outcome.converged.to_string(),
                        r.inertia.to_string(),
                        r.points.to_string(),
                        join(&r.cluster_to_class),
                        join(&r.oracle_cluster_to_class),
                    ]
                })
                .collect();
            write_csv(
                &dir.join("rows.csv"),
                &[
                    "seed", "accuracy", "oracle_accuracy", "agreement", "cost", "dual_bound", "converged",
                    "inertia", "points", "cluster_to_class", "oracle_cluster_to_class",
                ],
                rows,
            )?;
            files.push("rows.csv".into());
        }
        ExperimentOutput::Shuffle(rep) => {
            let rows = rep
                .series
                .iter()
                .flat_map(|s| {
                    s.points.iter().map(move |p| {
                        vec![
                            s.kernel.name().to_string(),
                            s.spec.name().to_string(),
                            p.alpha.to_string(),
                            p.mean.to_string(),
                            p.std.to_string(),
                        ]
                    })
                })
                .collect();
            write_csv(&dir.join("shuffle.csv"), &["kernel", "spec", "alpha", "mean", "std"], rows)?;
            files.push("shuffle.csv".into());
        }
    }
    Ok(files)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs the experiment, writes its outputs and the run manifest into `dir`.
/// `config_bytes` is hashed into the manifest.
pub fn run_to_dir(cfg: &ExperimentConfig, config_bytes: &[u8], dir: &Path) -> Result<(ExperimentOutput, RunManifest)> {
    let started_at = now();
    let output = run_experiment(cfg)?;
    let outputs = write_outputs(&output, dir)?;
    let manifest = RunManifest {
        experiment: cfg.experiment.name().to_string(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: checksum(config_bytes),
        started_at,
        finished_at: now(),
        seeds: cfg.seeds.clone(),
        outputs,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok((output, manifest))
}

/// Output directory: explicit override, then the config's, then `./runs/<experiment>`.
pub fn output_dir(cfg: &ExperimentConfig, overridden: Option<&Path>) -> PathBuf {
    overridden
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()))
}
