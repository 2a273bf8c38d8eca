//! Experiment pipelines: configuration, data generation, clustering,
//! experiment drivers and report writing.

pub mod config;
pub mod experiments;
pub mod kmeans;
pub mod report;
pub mod synthetic;

pub use config::{ExperimentConfig, ExperimentKind, KernelConfig, SolverName};
pub use experiments::{
    matching_accuracy, run_experiment, run_larger_scale, run_shuffle_experiment, run_small_scale,
    run_solver_benchmark, run_unsupervised_classifier, ExperimentOutput,
};
pub use kmeans::{kmeans_pp, ClusterModel};
