//! Experiment drivers. Each returns a serializable report; writing files is
//! left to [`super::report`].

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, KernelConfig, SolverName};
use super::kmeans::kmeans_pp_rows;
use crate::embedding::{class_prototypes_for, normalize_rows, subsample_size, ClassPrototypes, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::kernels::{distortion, equidistant_levels, shuffle_curve, to_qap, DistortionSpec, KernelKind, ShufflePoint, SimilarityMatrix};
use crate::lap::solve_lap_jv;
use crate::perm;
use crate::qap::{
    solve_2opt, solve_enumeration, solve_entropic_gw, solve_factorized_hahn_grant, solve_faq, HahnGrantConfig,
    HistoryEntry, MAX_ENUMERATION_SIZE,
};
use crate::rng;
use crate::subset::{top_m_subsets, AlignmentProblem, SubsetMode, TopSubsets};

/// Fraction of positions where `perm` agrees with `ground_truth`.
pub fn matching_accuracy(perm: &[usize], ground_truth: &[usize]) -> Result<f64> {
    let n = ground_truth.len();
    if n == 0 {
        return Err(Error::OutOfRange("empty permutation".into()));
    }
    perm::validate(ground_truth, n)?;
    perm::validate(perm, n)?;
    Ok(perm::agreement(perm, ground_truth) as f64 / n as f64)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman inputs differ in length");
    let (ra, rb) = (ranks(a), ranks(b));
    let (ma, _) = mean_std(&ra);
    let (mb, _) = mean_std(&rb);
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

/// Result of one matching solve, in distortion units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub perm: Vec<usize>,
    pub cost: f64,
    /// Certified lower bound, for solvers that produce one.
    pub dual_bound: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<HistoryEntry>,
}

/// Matches kernel `x` onto kernel `y` with the named solver.
pub fn solve_matching(
    solver: SolverName,
    x: &SimilarityMatrix,
    y: &SimilarityMatrix,
    spec: DistortionSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let qap = to_qap(x, y, spec)?;
    let n = qap.n();
    let (perm, dual_bound, converged, iterations, history) = match solver {
        SolverName::Enumeration => {
            let rep = solve_enumeration(&qap)?;
            (rep.primal_perm, Some(rep.dual_bound), true, rep.iterations, Vec::new())
        }
        SolverName::HahnGrant => {
            let hg = HahnGrantConfig { seed, ..cfg.solver.clone() };
            let rep = solve_factorized_hahn_grant(&qap, &hg)?;
            (rep.primal_perm, Some(rep.dual_bound), rep.converged, rep.iterations, rep.history)
        }
        SolverName::Faq => {
            let rep = solve_faq(&qap, &cfg.faq)?;
            (rep.primal_perm, None, false, rep.iterations, Vec::new())
        }
        SolverName::TwoOpt => {
            let startp = perm::random(n, &mut rng::substream(seed, 2));
            (solve_2opt(&qap, startp), None, false, 1, Vec::new())
        }
        SolverName::EntropicGw => {
            let res = solve_entropic_gw(x, y, spec, &cfg.entropic)?;
            (res.perm, None, false, res.outer_iters, Vec::new())
        }
        SolverName::Random => (perm::random(n, &mut rng::substream(seed, 1)), None, false, 0, Vec::new()),
    };
    let cost = distortion(x, y, spec, &perm)?;
    Ok(SolveOutcome { perm, cost, dual_bound, converged, iterations, wall_time: start.elapsed().as_secs_f64(), history })
}

/// One matching solve on one class subset and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub size: usize,
    /// Rank of the class subset among the selected ones (0 when not selected).
    pub subset_rank: usize,
    pub classes: Vec<usize>,
    pub seed: u64,
    pub solver: SolverName,
    pub accuracy: f64,
    /// True when the cost equals the best known optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global: Option<bool>,
    #[serde(flatten)]
    pub outcome: SolveOutcome,
}

impl MatchRow {
    pub fn gap(&self) -> Option<f64> {
        self.outcome.dual_bound.map(|b| self.outcome.cost - b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub size: usize,
    pub solver: SolverName,
    pub count: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub converged_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_fraction: Option<f64>,
    pub wall_time_mean: f64,
}

/// Aggregates per `(size, solver)` in order of first appearance.
pub fn aggregate(rows: &[MatchRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(usize, SolverName)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.size, r.solver)) {
            keys.push((r.size, r.solver));
        }
    }
    keys.into_iter()
        .map(|(size, solver)| {
            let group: Vec<&MatchRow> = rows.iter().filter(|r| r.size == size && r.solver == solver).collect();
            let acc: Vec<f64> = group.iter().map(|r| r.accuracy).collect();
            let cost: Vec<f64> = group.iter().map(|r| r.outcome.cost).collect();
            let (accuracy_mean, accuracy_std) = mean_std(&acc);
            let (cost_mean, cost_std) = mean_std(&cost);
            let count = group.len();
            let flags: Vec<bool> = group.iter().filter_map(|r| r.global).collect();
            Aggregate {
                size,
                solver,
                count,
                accuracy_mean,
                accuracy_std,
                cost_mean,
                cost_std,
                converged_fraction: group.iter().filter(|r| r.outcome.converged).count() as f64 / count as f64,
                global_fraction: (!flags.is_empty())
                    .then(|| flags.iter().filter(|&&g| g).count() as f64 / flags.len() as f64),
                wall_time_mean: group.iter().map(|r| r.outcome.wall_time).sum::<f64>() / count as f64,
            }
        })
        .collect()
}

/// A solver that errored on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverFailure {
    pub size: usize,
    pub seed: u64,
    pub solver: SolverName,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSubsets {
    pub size: usize,
    pub mode: SubsetMode,
    pub top: TopSubsets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub experiment: ExperimentKind,
    pub kernel: KernelConfig,
    pub rows: Vec<MatchRow>,
    pub aggregates: Vec<Aggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subsets: Vec<SelectedSubsets>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<SolverFailure>,
}

struct Modalities {
    x: EmbeddingMatrix,
    y: EmbeddingMatrix,
}

impl Modalities {
    fn prototypes(&self, cfg: &ExperimentConfig, classes: &[usize], seed: u64) -> Result<(ClassPrototypes, ClassPrototypes)> {
        Ok((
            class_prototypes_for(&self.x, classes, cfg.fraction_x, seed)?,
            class_prototypes_for(&self.y, classes, cfg.fraction_y, seed)?,
        ))
    }

    fn kernels(
        &self,
        cfg: &ExperimentConfig,
        kernel: &KernelConfig,
        classes: &[usize],
        seed: u64,
    ) -> Result<(SimilarityMatrix, SimilarityMatrix)> {
        let (px, py) = self.prototypes(cfg, classes, seed)?;
        Ok((kernel.build(&px)?, kernel.build(&py)?))
    }
}

fn load(cfg: &ExperimentConfig) -> Result<(Modalities, Vec<usize>)> {
    let (x, y) = cfg.load_data()?;
    let classes = cfg.class_list(&x, &y)?;
    Ok((Modalities { x, y }, classes))
}

fn match_row(
    cfg: &ExperimentConfig,
    data: &Modalities,
    solver: SolverName,
    classes: &[usize],
    subset_rank: usize,
    seed: u64,
) -> Result<MatchRow> {
    let (kx, ky) = data.kernels(cfg, &cfg.kernel, classes, seed)?;
    let outcome = solve_matching(solver, &kx, &ky, cfg.kernel.spec(), cfg, seed)?;
    let accuracy = matching_accuracy(&outcome.perm, &perm::identity(classes.len()))?;
    Ok(MatchRow {
        size: classes.len(),
        subset_rank,
        classes: classes.to_vec(),
        seed,
        solver,
        accuracy,
        global: (solver == SolverName::Enumeration).then_some(true),
        outcome,
    })
}

fn kind_check(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::Config(format!("config is for {}, not {}", cfg.experiment.name(), kind.name())));
    }
    Ok(())
}

/// Matches all configured classes once per seed.
pub fn run_small_scale(cfg: &ExperimentConfig) -> Result<MatchReport> {
    kind_check(cfg, ExperimentKind::SmallScale)?;
    let (data, classes) = load(cfg)?;
    let solver = cfg.matcher();
    if solver == SolverName::Enumeration && classes.len() > MAX_ENUMERATION_SIZE {
        return Err(Error::TooLarge(format!(
            "small_scale enumerates permutations and allows at most {MAX_ENUMERATION_SIZE} classes, got {}",
            classes.len()
        )));
    }
    let rows = cfg
        .seeds
        .par_iter()
        .map(|&seed| match_row(cfg, &data, solver, &classes, 0, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatchReport {
        experiment: cfg.experiment,
        kernel: cfg.kernel.clone(),
        aggregates: aggregate(&rows),
        rows,
        subsets: Vec::new(),
        failures: Vec::new(),
    })
}

/// Selects the best-aligned class subsets of each size, then matches each
/// subset once per seed.
pub fn run_larger_scale(cfg: &ExperimentConfig) -> Result<MatchReport> {
    kind_check(cfg, ExperimentKind::LargerScale)?;
    let (data, classes) = load(cfg)?;
    let (kx, ky) = data.kernels(cfg, &cfg.kernel, &classes, cfg.seeds[0])?;
    let mut subsets = Vec::new();
    for &size in &cfg.subset.sizes {
        let prob = AlignmentProblem::from_kernels(&kx, &ky, cfg.kernel.spec(), size)?;
        let (mode, top) = match cfg.subset.mode {
            Some(mode) => (mode, top_m_subsets(&prob, cfg.subset.top_m, mode, &cfg.subset.heuristic)?),
            None => match top_m_subsets(&prob, cfg.subset.top_m, SubsetMode::Exact, &cfg.subset.heuristic) {
                Err(Error::TooLarge(_)) => (
                    SubsetMode::Heuristic,
                    top_m_subsets(&prob, cfg.subset.top_m, SubsetMode::Heuristic, &cfg.subset.heuristic)?,
                ),
                other => (SubsetMode::Exact, other?),
            },
        };
        subsets.push(SelectedSubsets { size, mode, top });
    }

    let mut jobs = Vec::new();
    for sel in &subsets {
        for (rank, choice) in sel.top.subsets.iter().enumerate() {
            let members: Vec<usize> = choice.members.iter().map(|&m| classes[m]).collect();
            for &seed in &cfg.seeds {
                jobs.push((members.clone(), rank, seed));
            }
        }
    }
    let solver = cfg.matcher();
    let rows = jobs
        .par_iter()
        .map(|(members, rank, seed)| match_row(cfg, &data, solver, members, *rank, *seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(MatchReport {
        experiment: cfg.experiment,
        kernel: cfg.kernel.clone(),
        aggregates: aggregate(&rows),
        rows,
        subsets,
        failures: Vec::new(),
    })
}

/// Largest size at which the benchmark runs enumeration.
pub const BENCH_ENUMERATION_LIMIT: usize = 10;

fn is_global(cost: f64, optimum: f64) -> bool {
    cost <= optimum + 1e-9 * optimum.abs().max(1.0)
}

/// Runs every configured solver on the same instances. For each size and
/// seed a random class subset is drawn; the optimum is known from
/// enumeration when `N <= 10` and from a zero-gap dual-ascent run otherwise.
/// Enumeration is skipped above `N = 10` and listed among the failures.
pub fn run_solver_benchmark(cfg: &ExperimentConfig) -> Result<MatchReport> {
    kind_check(cfg, ExperimentKind::SolverBench)?;
    let (data, classes) = load(cfg)?;
    if let Some(&too_big) = cfg.bench.sizes.iter().find(|&&s| s > classes.len() || s == 0) {
        return Err(Error::OutOfRange(format!("bench size {too_big} with {} classes", classes.len())));
    }
    let jobs: Vec<(usize, u64)> =
        cfg.bench.sizes.iter().flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed))).collect();
    let results = jobs
        .par_iter()
        .map(|&(size, seed)| bench_instance(cfg, &data, &classes, size, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        failures.extend(f);
    }
    Ok(MatchReport {
        experiment: cfg.experiment,
        kernel: cfg.kernel.clone(),
        aggregates: aggregate(&rows),
        rows,
        subsets: Vec::new(),
        failures,
    })
}

fn bench_instance(
    cfg: &ExperimentConfig,
    data: &Modalities,
    classes: &[usize],
    size: usize,
    seed: u64,
) -> Result<(Vec<MatchRow>, Vec<SolverFailure>)> {
    let mut r = rng::substream(seed, size as u64);
    let mut members: Vec<usize> = rand::seq::index::sample(&mut r, classes.len(), size)
        .into_iter()
        .map(|i| classes[i])
        .collect();
    members.sort_unstable();
    let (kx, ky) = data.kernels(cfg, &cfg.kernel, &members, seed)?;
    let spec = cfg.kernel.spec();
    let truth = perm::identity(size);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &solver in &cfg.bench.solvers {
        if solver == SolverName::Enumeration && size > BENCH_ENUMERATION_LIMIT {
            failures.push(SolverFailure {
                size,
                seed,
                solver,
                error: format!("skipped above N = {BENCH_ENUMERATION_LIMIT}"),
            });
            continue;
        }
        match solve_matching(solver, &kx, &ky, spec, cfg, seed) {
            Ok(outcome) => rows.push(MatchRow {
                size,
                subset_rank: 0,
                classes: members.clone(),
                seed,
                solver,
                accuracy: matching_accuracy(&outcome.perm, &truth)?,
                global: None,
                outcome,
            }),
            Err(e) => failures.push(SolverFailure { size, seed, solver, error: e.to_string() }),
        }
    }

    let known = |s: SolverName| rows.iter().find(|r: &&MatchRow| r.solver == s).map(|r| r.outcome.clone());
    let optimum = if size <= BENCH_ENUMERATION_LIMIT {
        match known(SolverName::Enumeration) {
            Some(o) => Some(o.cost),
            None => Some(solve_matching(SolverName::Enumeration, &kx, &ky, spec, cfg, seed)?.cost),
        }
    } else {
        known(SolverName::HahnGrant).filter(|o| o.converged).map(|o| o.cost)
    };
    if let Some(opt) = optimum {
        for row in &mut rows {
            row.global = Some(is_global(row.outcome.cost, opt));
        }
    }
    Ok((rows, failures))
}

/// One seed of the unsupervised classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRow {
    pub seed: u64,
    /// Accuracy when each cluster is labelled through the blind matching.
    pub accuracy: f64,
    /// Accuracy under the best cluster-to-class assignment given the labels.
    pub oracle_accuracy: f64,
    /// Fraction of clusters where blind and oracle assignments agree.
    pub agreement: f64,
    /// Class id for each cluster.
    pub cluster_to_class: Vec<usize>,
    pub oracle_cluster_to_class: Vec<usize>,
    pub inertia: f64,
    pub points: usize,
    #[serde(flatten)]
    pub outcome: SolveOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub kernel: KernelConfig,
    pub classes: Vec<usize>,
    pub rows: Vec<ClassifyRow>,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub oracle_accuracy_mean: f64,
    pub oracle_accuracy_std: f64,
    pub agreement_mean: f64,
}

/// Clusters the first modality into `K` groups without labels, matches the
/// cluster centroids to the second modality's class prototypes and labels
/// every point through that matching.
pub fn run_unsupervised_classifier(cfg: &ExperimentConfig) -> Result<ClassifyReport> {
    kind_check(cfg, ExperimentKind::UnsupClassify)?;
    let (data, classes) = load(cfg)?;
    let x = normalize_rows(&data.x)?;
    let rows = cfg
        .seeds
        .par_iter()
        .map(|&seed| classify_seed(cfg, &x, &data.y, &classes, seed))
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&ClassifyRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (accuracy_mean, accuracy_std) = mean_std(&pick(|r| r.accuracy));
    let (oracle_accuracy_mean, oracle_accuracy_std) = mean_std(&pick(|r| r.oracle_accuracy));
    let (agreement_mean, _) = mean_std(&pick(|r| r.agreement));
    Ok(ClassifyReport {
        kernel: cfg.kernel.clone(),
        classes,
        rows,
        accuracy_mean,
        accuracy_std,
        oracle_accuracy_mean,
        oracle_accuracy_std,
        agreement_mean,
    })
}

fn classify_seed(
    cfg: &ExperimentConfig,
    x: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    classes: &[usize],
    seed: u64,
) -> Result<ClassifyRow> {
    let k = classes.len();
    let class_rows = x.class_rows()?;
    let mut picked = Vec::new();
    for &c in classes {
        let members = class_rows
            .get(c)
            .filter(|m| !m.is_empty())
            .ok_or_else(|| Error::OutOfRange(format!("class {c} has no rows in the first modality")))?;
        let keep = subsample_size(members.len(), cfg.classify.fraction);
        let mut r = rng::substream(seed, c as u64);
        let mut chosen: Vec<usize> =
            rand::seq::index::sample(&mut r, members.len(), keep).into_iter().map(|i| members[i]).collect();
        chosen.sort_unstable();
        picked.extend(chosen);
    }
    let points = x.data().select(ndarray::Axis(0), &picked).mapv(f64::from);
    let labels = x.labels().ok_or(Error::Unlabeled)?;
    let truth: Vec<usize> = picked.iter().map(|&r| labels[r]).collect();

    let model = kmeans_pp_rows(points.view(), k, cfg.classify.n_init, seed)?;
    let px = ClassPrototypes::from_rows(model.centroids.clone())?;
    let py = class_prototypes_for(y, classes, cfg.fraction_y, seed)?;
    let (kx, ky) = (cfg.kernel.build(&px)?, cfg.kernel.build(&py)?);
    let outcome = solve_matching(cfg.matcher(), &kx, &ky, cfg.kernel.spec(), cfg, seed)?;

    let slot_of: BTreeMap<usize, usize> = classes.iter().enumerate().map(|(s, &c)| (c, s)).collect();
    let mut counts = Array2::<f64>::zeros((k, k));
    for (&cluster, t) in model.assignments.iter().zip(&truth) {
        counts[[cluster, slot_of[t]]] += 1.0;
    }
    let oracle = solve_lap_jv(counts.mapv(|v| -v).view())?.assignment;
    let hits = |assign: &[usize]| (0..k).map(|c| counts[[c, assign[c]]]).sum::<f64>() / truth.len() as f64;

    Ok(ClassifyRow {
        seed,
        accuracy: hits(&outcome.perm),
        oracle_accuracy: hits(&oracle),
        agreement: perm::agreement(&outcome.perm, &oracle) as f64 / k as f64,
        cluster_to_class: outcome.perm.iter().map(|&s| classes[s]).collect(),
        oracle_cluster_to_class: oracle.iter().map(|&s| classes[s]).collect(),
        inertia: model.inertia,
        points: truth.len(),
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleSeries {
    pub kernel: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub spec: DistortionSpec,
    pub points: Vec<ShufflePoint>,
    /// Rank correlation between shuffle level and mean distortion.
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleReport {
    pub classes: Vec<usize>,
    pub seed: u64,
    pub series: Vec<ShuffleSeries>,
}

/// Distortion of the ground-truth matching under growing partial shuffles,
/// for every configured kernel. Prototypes use the first configured seed.
pub fn run_shuffle_experiment(cfg: &ExperimentConfig) -> Result<ShuffleReport> {
    kind_check(cfg, ExperimentKind::Shuffle)?;
    let (data, classes) = load(cfg)?;
    let seed = cfg.seeds[0];
    let levels = equidistant_levels(cfg.shuffle.levels);
    let series = cfg
        .shuffle
        .kernels
        .iter()
        .map(|kernel| {
            let (kx, ky) = data.kernels(cfg, kernel, &classes, seed)?;
            let spec = kernel.spec();
            let points = shuffle_curve(&kx, &ky, spec, &levels, cfg.shuffle.seeds_per_level, seed)?;
            let means: Vec<f64> = points.iter().map(|p| p.mean).collect();
            Ok(ShuffleSeries { kernel: kernel.kind, k: kernel.k, spec, spearman: spearman(&levels, &means), points })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShuffleReport { classes, seed, series })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExperimentOutput {
    Match(MatchReport),
    Classify(ClassifyReport),
    Shuffle(ShuffleReport),
}

/// Dispatches on `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    Ok(match cfg.experiment {
        ExperimentKind::Shuffle => ExperimentOutput::Shuffle(run_shuffle_experiment(cfg)?),
        ExperimentKind::SmallScale => ExperimentOutput::Match(run_small_scale(cfg)?),
        ExperimentKind::LargerScale => ExperimentOutput::Match(run_larger_scale(cfg)?),
        ExperimentKind::SolverBench => ExperimentOutput::Match(run_solver_benchmark(cfg)?),
        ExperimentKind::UnsupClassify => ExperimentOutput::Classify(run_unsupervised_classifier(cfg)?),
    })
}
