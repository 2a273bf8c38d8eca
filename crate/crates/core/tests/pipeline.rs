use std::path::Path;

use blindmatch::embedding::checksum;
use blindmatch::pipeline::config::{ExperimentConfig, SolverName};
use blindmatch::pipeline::experiments::{
    run_larger_scale, run_shuffle_experiment, run_small_scale, run_solver_benchmark, run_unsupervised_classifier,
    MatchReport,
};
use blindmatch::pipeline::report::{run_to_dir, RunManifest, MANIFEST_FILE};
use blindmatch::Error;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json, Path::new(".")).unwrap()
}

fn strip_times(mut rep: MatchReport) -> MatchReport {
    for r in &mut rep.rows {
        r.outcome.wall_time = 0.0;
    }
    for a in &mut rep.aggregates {
        a.wall_time_mean = 0.0;
    }
    rep
}

#[test]
fn small_scale_recovers_correlated_classes() {
    let cfg = config(
        r#"{"experiment": "small_scale", "data": {"synthetic": {"classes": 8, "seed": 4}}, "seeds": [0, 1, 2, 3]}"#,
    );
    let rep = run_small_scale(&cfg).unwrap();
    assert_eq!(rep.rows.len(), 4);
    assert_eq!(rep.aggregates.len(), 1);
    assert_eq!(rep.aggregates[0].count, 4);
    assert!(rep.aggregates[0].accuracy_mean > 0.8, "{}", rep.aggregates[0].accuracy_mean);
    for r in &rep.rows {
        assert_eq!(r.solver, SolverName::Enumeration);
        assert!((r.outcome.dual_bound.unwrap() - r.outcome.cost).abs() < 1e-9);
    }
}

#[test]
fn small_scale_is_deterministic() {
    let cfg = config(r#"{"experiment": "small_scale", "data": {"synthetic": {"classes": 7}}, "seeds": [5, 6]}"#);
    let a = strip_times(run_small_scale(&cfg).unwrap());
    let b = strip_times(run_small_scale(&cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn small_scale_rejects_too_many_classes() {
    let cfg = config(r#"{"experiment": "small_scale", "data": {"synthetic": {"classes": 13}}, "seeds": [0]}"#);
    assert!(matches!(run_small_scale(&cfg), Err(Error::TooLarge(_))));
}

#[test]
fn wrong_runner_is_a_config_error() {
    let cfg = config(r#"{"experiment": "small_scale", "data": {"synthetic": {}}, "seeds": [0]}"#);
    assert!(matches!(run_shuffle_experiment(&cfg), Err(Error::Config(_))));
}

#[test]
fn identical_modalities_match_perfectly_with_zero_gap() {
    let cfg = config(
        r#"{"experiment": "larger_scale",
            "data": {"synthetic": {"classes": 16, "noise": 0.0, "spread": 0.0}},
            "fraction_x": 1.0,
            "seeds": [0],
            "subset": {"sizes": [12], "top_m": 2},
            "solver": {"primal_heuristic_seeds": 10, "time_limit": 60}}"#,
    );
    let rep = run_larger_scale(&cfg).unwrap();
    assert_eq!(rep.rows.len(), 2);
    for r in &rep.rows {
        assert_eq!(r.accuracy, 1.0);
        assert!(r.gap().unwrap().abs() < 1e-6, "gap {:?}", r.gap());
        assert!(r.outcome.converged);
    }
}

#[test]
fn larger_scale_beats_chance_by_ten_times() {
    let cfg = config(
        r#"{"experiment": "larger_scale",
            "data": {"synthetic": {"classes": 30, "seed": 1}},
            "seeds": [0, 1],
            "subset": {"sizes": [20], "top_m": 1},
            "solver": {"primal_heuristic_seeds": 10, "time_limit": 60}}"#,
    );
    let rep = run_larger_scale(&cfg).unwrap();
    assert_eq!(rep.subsets.len(), 1);
    assert_eq!(rep.subsets[0].top.subsets[0].members.len(), 20);
    assert!(rep.aggregates[0].accuracy_mean >= 10.0 / 20.0, "{}", rep.aggregates[0].accuracy_mean);
    for r in &rep.rows {
        let b = r.outcome.dual_bound.unwrap();
        assert!(b <= r.outcome.cost + 1e-9);
    }
}

#[test]
fn benchmark_reports_every_solver_and_global_flags() {
    let cfg = config(
        r#"{"experiment": "solver_bench",
            "data": {"synthetic": {"classes": 14}},
            "seeds": [0, 1, 2],
            "bench": {"sizes": [8]},
            "solver": {"primal_heuristic_seeds": 10}}"#,
    );
    let rep = run_solver_benchmark(&cfg).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.rows.len(), 3 * 6);
    assert!(rep.rows.iter().all(|r| r.global.is_some()));
    let global = |s: SolverName| rep.aggregates.iter().find(|a| a.solver == s).unwrap().global_fraction.unwrap();
    assert_eq!(global(SolverName::Enumeration), 1.0);
    for other in SolverName::ALL {
        assert!(global(SolverName::HahnGrant) >= global(other));
    }
    let curves: usize = rep.rows.iter().filter(|r| r.solver == SolverName::HahnGrant).map(|r| r.outcome.history.len()).sum();
    assert!(curves > 0);
}

#[test]
fn benchmark_skips_enumeration_above_ten() {
    let cfg = config(
        r#"{"experiment": "solver_bench",
            "data": {"synthetic": {"classes": 12}},
            "seeds": [0],
            "bench": {"sizes": [11], "solvers": ["enumeration", "random"]}}"#,
    );
    let rep = run_solver_benchmark(&cfg).unwrap();
    assert_eq!(rep.failures.len(), 1);
    assert_eq!(rep.failures[0].solver, SolverName::Enumeration);
    assert_eq!(rep.rows.len(), 1);
}

#[test]
fn shuffle_curves_increase() {
    let cfg = config(
        r#"{"experiment": "shuffle", "data": {"synthetic": {"classes": 20}}, "seeds": [3],
            "shuffle": {"levels": 11, "seeds_per_level": 50}}"#,
    );
    let rep = run_shuffle_experiment(&cfg).unwrap();
    assert_eq!(rep.series.len(), 3);
    for s in &rep.series {
        assert_eq!(s.points.len(), 11);
        assert!(s.points[0].std < 1e-12);
        assert!(s.points[10].mean > s.points[0].mean);
        assert!(s.spearman > 0.9, "{:?} {}", s.kernel, s.spearman);
    }
}

#[test]
fn classifier_oracle_dominates_blind() {
    let cfg = config(
        r#"{"experiment": "unsup_classify",
            "data": {"synthetic": {"classes": 6, "samples_per_class": 20, "spread": 0.6, "noise": 0.3}},
            "seeds": [0, 1, 2],
            "classify": {"n_init": 3}}"#,
    );
    let rep = run_unsupervised_classifier(&cfg).unwrap();
    assert_eq!(rep.rows.len(), 3);
    for r in &rep.rows {
        assert!(r.oracle_accuracy >= r.accuracy - 1e-12);
        assert!((0.0..=1.0).contains(&r.agreement));
        assert_eq!(r.points, 6 * 10);
    }
}

#[test]
fn run_to_dir_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"experiment": "small_scale", "data": {"synthetic": {"classes": 5}}, "seeds": [0, 9]}"#;
    let cfg = config(text);
    let (_, manifest) = run_to_dir(&cfg, text.as_bytes(), dir.path()).unwrap();
    assert_eq!(manifest.config_sha256, checksum(text.as_bytes()));
    assert_eq!(manifest.seeds, vec![0, 9]);
    for f in &manifest.outputs {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let back = RunManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(back, manifest);
    let rows = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert!(rows.starts_with("size,subset_rank,classes,seed,solver,accuracy"));
    assert_eq!(rows.lines().count(), 3);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn file_data_source_round_trips() {
    use blindmatch::pipeline::synthetic::{generate_pair, SyntheticConfig};
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = generate_pair(&SyntheticConfig { classes: 5, ..Default::default() }).unwrap();
    x.save(&dir.path().join("x.json")).unwrap();
    y.save(&dir.path().join("y.json")).unwrap();
    let text = r#"{"experiment": "small_scale", "data": {"files": {"x": "x.json", "y": "y.json"}}, "seeds": [0]}"#;
    std::fs::write(dir.path().join("cfg.json"), text).unwrap();
    let from_files = ExperimentConfig::load(&dir.path().join("cfg.json")).unwrap();
    let in_memory = config(r#"{"experiment": "small_scale", "data": {"synthetic": {"classes": 5}}, "seeds": [0]}"#);
    let a = strip_times(run_small_scale(&from_files).unwrap());
    let b = strip_times(run_small_scale(&in_memory).unwrap());
    assert_eq!(a.rows.len(), b.rows.len());
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        assert_eq!(ra.outcome.perm, rb.outcome.perm);
        assert!((ra.outcome.cost - rb.outcome.cost).abs() < 1e-5);
    }
}
