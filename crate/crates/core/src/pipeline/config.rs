//! Experiment configuration files (JSON).
//!
//! ```json
//! {
//!   "experiment": "larger_scale",
//!   "data": { "files": { "x": "vision.json", "y": "language.json" } },
//!   "kernel": { "kind": "mutual_knn", "k": 5 },
//!   "seeds": [0, 1, 2],
//!   "subset": { "sizes": [20], "top_m": 10 },
//!   "solver": { "lap": "jv", "time_limit": 3600 }
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config.
//! `data` may instead be `{ "synthetic": { ... } }` to generate a correlated
//! pair in memory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::{generate_pair, SyntheticConfig};
use crate::embedding::{load_embeddings, ClassPrototypes, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::kernels::{cka_kernel, gw_kernel, mutual_knn_kernel, DistortionSpec, KernelKind, SimilarityMatrix};
use crate::qap::{EntropicGwConfig, FaqConfig, HahnGrantConfig};
use crate::subset::{HeuristicConfig, SubsetMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Shuffle,
    SmallScale,
    LargerScale,
    SolverBench,
    UnsupClassify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        Self::Shuffle,
        Self::SmallScale,
        Self::LargerScale,
        Self::SolverBench,
        Self::UnsupClassify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shuffle => "shuffle",
            Self::SmallScale => "small_scale",
            Self::LargerScale => "larger_scale",
            Self::SolverBench => "solver_bench",
            Self::UnsupClassify => "unsup_classify",
        }
    }

    /// Accepts `small_scale` as well as `small-scale`.
    pub fn parse(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverName {
    Enumeration,
    HahnGrant,
    Faq,
    TwoOpt,
    EntropicGw,
    Random,
}

impl SolverName {
    pub const ALL: [SolverName; 6] =
        [Self::Enumeration, Self::HahnGrant, Self::Faq, Self::TwoOpt, Self::EntropicGw, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::Enumeration => "enumeration",
            Self::HahnGrant => "hahn_grant",
            Self::Faq => "faq",
            Self::TwoOpt => "two_opt",
            Self::EntropicGw => "entropic_gw",
            Self::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Files { x: PathBuf, y: PathBuf },
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    /// Neighbourhood size, required for `mutual_knn`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Distortion; defaults to the kernel's natural spec.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<DistortionSpec>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { kind: KernelKind::GwDistance, k: None, spec: None }
    }
}

impl KernelConfig {
    pub fn spec(&self) -> DistortionSpec {
        self.spec.unwrap_or_else(|| self.kind.default_spec())
    }

    pub fn build(&self, p: &ClassPrototypes) -> Result<SimilarityMatrix> {
        match self.kind {
            KernelKind::GwDistance => gw_kernel(p),
            KernelKind::Cka => cka_kernel(p),
            KernelKind::MutualKnn => mutual_knn_kernel(p, self.k.unwrap_or(0)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind == KernelKind::MutualKnn && self.k.unwrap_or(0) == 0 {
            return Err(Error::Config("mutual_knn kernel needs a positive k".into()));
        }
        if !self.spec().accepts(self.kind) {
            return Err(Error::KindMismatch { kernel: self.kind.name(), spec: self.spec().name() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsetConfig {
    pub sizes: Vec<usize>,
    pub top_m: usize,
    /// `None` enumerates when feasible and falls back to the heuristic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<SubsetMode>,
    pub heuristic: HeuristicConfig,
}

impl Default for SubsetConfig {
    fn default() -> Self {
        Self { sizes: Vec::new(), top_m: 10, mode: None, heuristic: HeuristicConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShuffleConfig {
    pub levels: usize,
    pub seeds_per_level: usize,
    pub kernels: Vec<KernelConfig>,
}

impl Default for ShuffleConfig {
    fn default() -> Self {
        Self {
            levels: 21,
            seeds_per_level: 100,
            kernels: vec![
                KernelConfig::default(),
                KernelConfig { kind: KernelKind::Cka, k: None, spec: None },
                KernelConfig { kind: KernelKind::MutualKnn, k: Some(3), spec: None },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub solvers: Vec<SolverName>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { sizes: vec![10], solvers: SolverName::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    pub n_init: usize,
    /// Fraction of each class's image rows clustered per seed.
    pub fraction: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { n_init: 10, fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub data: DataSource,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub seeds: Vec<u64>,
    /// Row fraction averaged into each first-modality prototype.
    #[serde(default = "half")]
    pub fraction_x: f64,
    /// Row fraction averaged into each second-modality prototype.
    #[serde(default = "one")]
    pub fraction_y: f64,
    /// Restrict to these classes (ids shared by both modalities).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<usize>>,
    /// Solver used by the matching experiments; each kind has its own default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher: Option<SolverName>,
    #[serde(default)]
    pub solver: HahnGrantConfig,
    #[serde(default)]
    pub faq: FaqConfig,
    #[serde(default)]
    pub entropic: EntropicGwConfig,
    #[serde(default)]
    pub subset: SubsetConfig,
    #[serde(default)]
    pub shuffle: ShuffleConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        if let DataSource::Files { x, y } = &mut cfg.data {
            for p in [x, y] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn matcher(&self) -> SolverName {
        self.matcher.unwrap_or(match self.experiment {
            ExperimentKind::SmallScale => SolverName::Enumeration,
            _ => SolverName::HahnGrant,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        match &self.data {
            DataSource::Files { x, y } => {
                for p in [x, y] {
                    if !p.exists() {
                        return Err(Error::MissingFile(p.clone()));
                    }
                }
            }
            DataSource::Synthetic(s) => s.validate()?,
        }
        for (name, f) in [("fraction_x", self.fraction_x), ("fraction_y", self.fraction_y)] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {f}")));
            }
        }
        self.kernel.validate()?;
        self.solver.validate()?;
        match self.experiment {
            ExperimentKind::Shuffle => {
                if self.shuffle.kernels.is_empty() || self.shuffle.levels < 2 || self.shuffle.seeds_per_level == 0 {
                    return Err(Error::Config("shuffle needs kernels, at least 2 levels and 1 seed per level".into()));
                }
                for k in &self.shuffle.kernels {
                    k.validate()?;
                }
            }
            ExperimentKind::SmallScale => {}
            ExperimentKind::LargerScale => {
                if self.subset.sizes.is_empty() || self.subset.top_m == 0 {
                    return Err(Error::Config("larger_scale needs subset.sizes and a positive subset.top_m".into()));
                }
            }
            ExperimentKind::SolverBench => {
                if self.bench.sizes.is_empty() || self.bench.solvers.is_empty() {
                    return Err(Error::Config("solver_bench needs bench.sizes and bench.solvers".into()));
                }
            }
            ExperimentKind::UnsupClassify => {
                if !(self.classify.fraction > 0.0 && self.classify.fraction <= 1.0) || self.classify.n_init == 0 {
                    return Err(Error::Config("classify.fraction must lie in (0, 1] and n_init be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Loads or generates the two modalities. Both must be labelled.
    pub fn load_data(&self) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
        let (x, y) = match &self.data {
            DataSource::Files { x, y } => (load_embeddings(x)?, load_embeddings(y)?),
            DataSource::Synthetic(s) => generate_pair(s)?,
        };
        if x.labels().is_none() || y.labels().is_none() {
            return Err(Error::Unlabeled);
        }
        Ok((x, y))
    }

    /// Classes used by the experiment, validated against both modalities.
    pub fn class_list(&self, x: &EmbeddingMatrix, y: &EmbeddingMatrix) -> Result<Vec<usize>> {
        let shared = x.num_classes().min(y.num_classes());
        if x.num_classes() != y.num_classes() && self.experiment != ExperimentKind::UnsupClassify {
            return Err(Error::ShapeMismatch(format!(
                "modalities have {} and {} classes",
                x.num_classes(),
                y.num_classes()
            )));
        }
        match &self.classes {
            None => Ok((0..shared).collect()),
            Some(list) => {
                if let Some(&bad) = list.iter().find(|&&c| c >= shared) {
                    return Err(Error::OutOfRange(format!("class {bad} not present in both modalities")));
                }
                Ok(list.clone())
            }
        }
    }
}
