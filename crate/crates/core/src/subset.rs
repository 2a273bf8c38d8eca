//! Class-subset selection: choose `N` of `L` classes whose within-subset
//! alignment is largest (a p-dispersion-sum problem).
//!
//! Internally the problem always maximizes a goodness matrix `G`, the negated
//! per-entry loss: similarity products for inner-product specs, negative
//! squared differences for squared-difference specs.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use ndarray::Array2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{DistortionSpec, SimilarityMatrix};
use crate::rng;

/// Largest number of subsets the exact solver will enumerate.
pub const MAX_EXACT_SUBSETS: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentProblem {
    goodness: Array2<f64>,
    n: usize,
}

impl AlignmentProblem {
    pub fn new(goodness: Array2<f64>, n: usize) -> Result<Self> {
        let l = goodness.nrows();
        if goodness.ncols() != l {
            return Err(Error::ShapeMismatch(format!("goodness must be square, got {:?}", goodness.dim())));
        }
        if let Some(index) = goodness.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if n == 0 || n > l {
            return Err(Error::OutOfRange(format!("subset size {n} must lie in 1..={l}")));
        }
        Ok(Self { goodness, n })
    }

    /// `G_ij = -l(X_ij, Y_ij)` for two kernels over the same `L` classes.
    pub fn from_kernels(x: &SimilarityMatrix, y: &SimilarityMatrix, spec: DistortionSpec, n: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!("kernels of size {} and {}", x.len(), y.len())));
        }
        let (xv, yv) = (x.values(), y.values());
        let goodness = Array2::from_shape_fn(xv.dim(), |(i, j)| -spec.loss(xv[[i, j]], yv[[i, j]]));
        Self::new(goodness, n)
    }

    pub fn goodness(&self) -> &Array2<f64> {
        &self.goodness
    }

    /// Total number of classes `L`.
    pub fn classes(&self) -> usize {
        self.goodness.nrows()
    }

    /// Target subset size `N`.
    pub fn size(&self) -> usize {
        self.n
    }

    fn naive_score(&self, members: &[usize]) -> f64 {
        let g = &self.goodness;
        members.iter().map(|&a| members.iter().map(|&b| g[[a, b]]).sum::<f64>()).sum()
    }
}

/// A subset (sorted class ids) with its alignment score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetChoice {
    pub members: Vec<usize>,
    pub score: f64,
}

impl SubsetChoice {
    /// Higher score first, then lexicographically smaller members.
    fn rank(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then_with(|| other.members.cmp(&self.members))
    }
}

struct Ranked(SubsetChoice);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.rank(&other.0)
    }
}

/// `sum_{i,j in S} G_ij`, both orders and the diagonal included.
pub fn alignment_score(prob: &AlignmentProblem, subset: &[usize]) -> Result<f64> {
    if subset.len() != prob.n {
        return Err(Error::OutOfRange(format!("subset has {} members, expected {}", subset.len(), prob.n)));
    }
    let l = prob.classes();
    let mut seen = vec![false; l];
    for &c in subset {
        if c >= l {
            return Err(Error::OutOfRange(format!("class {c} out of range for {l} classes")));
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::OutOfRange(format!("class {c} appears twice")));
        }
    }
    Ok(prob.naive_score(subset))
}

fn binomial(l: usize, n: usize) -> u128 {
    let n = n.min(l - n) as u128;
    (0..n).fold(1u128, |acc, k| acc.saturating_mul(l as u128 - k) / (k + 1))
}

fn check_exact_size(prob: &AlignmentProblem) -> Result<()> {
    let count = binomial(prob.classes(), prob.n);
    if count > MAX_EXACT_SUBSETS {
        return Err(Error::TooLarge(format!(
            "C({}, {}) = {count} subsets exceeds the exact limit of {MAX_EXACT_SUBSETS}",
            prob.classes(),
            prob.n
        )));
    }
    Ok(())
}

/// Visits all `N`-subsets in lexicographic order.
fn for_each_combination(l: usize, n: usize, mut visit: impl FnMut(&[usize])) {
    let mut c: Vec<usize> = (0..n).collect();
    loop {
        visit(&c);
        let Some(i) = (0..n).rev().find(|&i| c[i] < l - n + i) else {
            return;
        };
        c[i] += 1;
        for k in i + 1..n {
            c[k] = c[k - 1] + 1;
        }
    }
}

/// Exact maximizer by enumeration; ties go to the lexicographically smallest
/// subset.
pub fn select_subset_exact(prob: &AlignmentProblem) -> Result<SubsetChoice> {
    check_exact_size(prob)?;
    let mut best = SubsetChoice { members: Vec::new(), score: f64::NEG_INFINITY };
    for_each_combination(prob.classes(), prob.n, |c| {
        let score = prob.naive_score(c);
        if score > best.score {
            best.score = score;
            best.members.clear();
            best.members.extend_from_slice(c);
        }
    });
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    pub restarts: usize,
    /// Upper limit on accepted swaps per restart.
    pub max_swaps: usize,
    pub seed: u64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { restarts: 20, max_swaps: 10_000, seed: 0 }
    }
}

/// Result of one restart: the greedy subset's score and the polished subset.
#[derive(Debug, Clone)]
pub(crate) struct LocalSearch {
    pub greedy_score: f64,
    pub choice: SubsetChoice,
}

struct Tracker<'a> {
    g: &'a Array2<f64>,
    inside: Vec<bool>,
    /// `w_x = sum_{v in S} (G_xv + G_vx)`
    weight: Vec<f64>,
    score: f64,
}

impl<'a> Tracker<'a> {
    fn new(g: &'a Array2<f64>) -> Self {
        let l = g.nrows();
        Self { g, inside: vec![false; l], weight: vec![0.0; l], score: 0.0 }
    }

    fn gain(&self, x: usize) -> f64 {
        self.g[[x, x]] + self.weight[x]
    }

    fn add(&mut self, x: usize) {
        self.score += self.gain(x);
        self.inside[x] = true;
        for (v, w) in self.weight.iter_mut().enumerate() {
            *w += self.g[[v, x]] + self.g[[x, v]];
        }
    }

    fn remove(&mut self, x: usize) {
        self.inside[x] = false;
        for (v, w) in self.weight.iter_mut().enumerate() {
            *w -= self.g[[v, x]] + self.g[[x, v]];
        }
        self.score -= self.gain(x);
    }

    /// Score change when `out` leaves and `inn` joins.
    fn swap_delta(&self, out: usize, inn: usize) -> f64 {
        let g = self.g;
        -(self.weight[out] - g[[out, out]]) + g[[inn, inn]] + self.weight[inn] - g[[inn, out]] - g[[out, inn]]
    }

    fn members(&self) -> Vec<usize> {
        (0..self.inside.len()).filter(|&x| self.inside[x]).collect()
    }
}

fn best_pair(g: &Array2<f64>) -> (usize, usize) {
    let l = g.nrows();
    let mut best = (f64::NEG_INFINITY, 0, 1);
    for a in 0..l {
        for b in a + 1..l {
            let s = g[[a, a]] + g[[b, b]] + g[[a, b]] + g[[b, a]];
            if s > best.0 {
                best = (s, a, b);
            }
        }
    }
    (best.1, best.2)
}

pub(crate) fn local_search(prob: &AlignmentProblem, cfg: &HeuristicConfig, restart: u64) -> LocalSearch {
    let g = &prob.goodness;
    let (l, n) = (prob.classes(), prob.n);
    let mut t = Tracker::new(g);
    if n >= 2 {
        let (a, b) = if restart == 0 {
            best_pair(g)
        } else {
            let mut r = rng::substream(cfg.seed, restart);
            let pick = index::sample(&mut r, l, 2);
            (pick.index(0), pick.index(1))
        };
        t.add(a);
        t.add(b);
    } else if restart != 0 {
        let mut r = rng::substream(cfg.seed, restart);
        t.add(index::sample(&mut r, l, 1).index(0));
    }
    while t.members().len() < n {
        let x = (0..l)
            .filter(|&x| !t.inside[x])
            .fold((f64::NEG_INFINITY, 0), |best, x| if t.gain(x) > best.0 { (t.gain(x), x) } else { best })
            .1;
        t.add(x);
    }
    let greedy_score = t.score;

    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let threshold = 1e-12 * scale * (n * n) as f64;
    for _ in 0..cfg.max_swaps {
        let mut best = (threshold, usize::MAX, usize::MAX);
        for out in (0..l).filter(|&x| t.inside[x]) {
            for inn in (0..l).filter(|&x| !t.inside[x]) {
                let d = t.swap_delta(out, inn);
                if d > best.0 {
                    best = (d, out, inn);
                }
            }
        }
        if best.1 == usize::MAX {
            break;
        }
        t.remove(best.1);
        t.add(best.2);
    }

    let members = t.members();
    let score = prob.naive_score(&members);
    LocalSearch { greedy_score, choice: SubsetChoice { members, score } }
}

fn all_local_optima(prob: &AlignmentProblem, cfg: &HeuristicConfig) -> Vec<SubsetChoice> {
    (0..cfg.restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let ls = local_search(prob, cfg, r);
            log::trace!("restart {r}: greedy {} swapped {}", ls.greedy_score, ls.choice.score);
            ls.choice
        })
        .collect()
}

/// Greedy construction plus best-improvement 1-swap search, best over
/// restarts. Restart 0 grows from the best pair, the others from random pairs.
pub fn select_subset_heuristic(prob: &AlignmentProblem, cfg: &HeuristicConfig) -> SubsetChoice {
    all_local_optima(prob, cfg)
        .into_iter()
        .max_by(|a, b| a.rank(b))
        .expect("at least one restart")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMode {
    Exact,
    Heuristic,
}

/// Up to `m` distinct subsets ordered by descending score (ties
/// lexicographic). `complete` is false when fewer than `m` were available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopSubsets {
    pub subsets: Vec<SubsetChoice>,
    pub complete: bool,
}

/// Exact mode returns the true top `m`; heuristic mode returns the best `m`
/// distinct local optima over all restarts.
pub fn top_m_subsets(
    prob: &AlignmentProblem,
    m: usize,
    mode: SubsetMode,
    cfg: &HeuristicConfig,
) -> Result<TopSubsets> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be at least 1".into()));
    }
    let mut subsets = match mode {
        SubsetMode::Exact => {
            check_exact_size(prob)?;
            let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(m + 1);
            for_each_combination(prob.classes(), prob.n, |c| {
                let candidate = SubsetChoice { members: c.to_vec(), score: prob.naive_score(c) };
                if heap.len() < m {
                    heap.push(Reverse(Ranked(candidate)));
                } else if let Some(Reverse(worst)) = heap.peek() {
                    if candidate.rank(&worst.0) == Ordering::Greater {
                        heap.pop();
                        heap.push(Reverse(Ranked(candidate)));
                    }
                }
            });
            heap.into_iter().map(|Reverse(Ranked(c))| c).collect::<Vec<_>>()
        }
        SubsetMode::Heuristic => {
            let mut seen = BTreeSet::new();
            all_local_optima(prob, cfg)
                .into_iter()
                .filter(|c| seen.insert(c.members.clone()))
                .collect()
        }
    };
    subsets.sort_by(|a, b| b.rank(a));
    subsets.truncate(m);
    let complete = subsets.len() == m;
    Ok(TopSubsets { subsets, complete })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_problem(l: usize, n: usize, seed: u64) -> AlignmentProblem {
        let mut r = rng::seeded(seed);
        let mut g = Array2::from_shape_fn((l, l), |_| r.random_range(-1.0..1.0));
        for i in 0..l {
            for j in 0..i {
                g[[i, j]] = g[[j, i]];
            }
        }
        AlignmentProblem::new(g, n).unwrap()
    }

    #[test]
    fn singleton_and_zero_scores() {
        let p = random_problem(5, 1, 1);
        assert_eq!(alignment_score(&p, &[3]).unwrap(), p.goodness()[[3, 3]]);
        let z = AlignmentProblem::new(Array2::zeros((4, 4)), 2).unwrap();
        assert_eq!(alignment_score(&z, &[1, 3]).unwrap(), 0.0);
    }

    #[test]
    fn hand_expanded_double_sum() {
        let g = array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]];
        let p = AlignmentProblem::new(g, 2).unwrap();
        assert_eq!(alignment_score(&p, &[0, 2]).unwrap(), 1.0 + 3.0 + 7.0 + 9.0);
    }

    #[test]
    fn score_validates_subset() {
        let p = random_problem(4, 2, 0);
        assert!(alignment_score(&p, &[0]).is_err());
        assert!(alignment_score(&p, &[0, 4]).is_err());
        assert!(alignment_score(&p, &[1, 1]).is_err());
    }

    #[test]
    fn exact_picks_best_of_six_pairs() {
        let g = array![
            [0.0, 1.0, 0.2, 0.1],
            [1.0, 0.0, 0.3, 0.9],
            [0.2, 0.3, 0.0, 2.0],
            [0.1, 0.9, 2.0, 0.0]
        ];
        let p = AlignmentProblem::new(g, 2).unwrap();
        let best = select_subset_exact(&p).unwrap();
        assert_eq!(best.members, vec![2, 3]);
        assert_eq!(best.score, 4.0);
    }

    #[test]
    fn exact_full_set_and_ties() {
        let p = random_problem(5, 5, 2);
        assert_eq!(select_subset_exact(&p).unwrap().members, vec![0, 1, 2, 3, 4]);
        let u = AlignmentProblem::new(Array2::from_elem((6, 6), 0.5), 3).unwrap();
        assert_eq!(select_subset_exact(&u).unwrap().members, vec![0, 1, 2]);
    }

    #[test]
    fn exact_guard() {
        let p = AlignmentProblem::new(Array2::zeros((40, 40)), 20).unwrap();
        assert!(matches!(select_subset_exact(&p), Err(Error::TooLarge(_))));
    }

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let mut all = Vec::new();
        for_each_combination(5, 3, |c| all.push(c.to_vec()));
        assert_eq!(all.len(), 10);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(binomial(12, 5), 792);
    }

    #[test]
    fn top_three_pairs_by_hand() {
        let p = random_problem(5, 2, 7);
        let g = p.goodness();
        let mut pairs: Vec<(f64, Vec<usize>)> = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                pairs.push((g[[a, a]] + g[[b, b]] + g[[a, b]] + g[[b, a]], vec![a, b]));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
        let top = top_m_subsets(&p, 3, SubsetMode::Exact, &HeuristicConfig::default()).unwrap();
        assert!(top.complete);
        for (got, want) in top.subsets.iter().zip(&pairs) {
            assert_eq!(got.members, want.1);
            assert!((got.score - want.0).abs() < 1e-12);
        }
    }

    #[test]
    fn top_m_flags_shortage() {
        let p = random_problem(4, 3, 1);
        let top = top_m_subsets(&p, 10, SubsetMode::Exact, &HeuristicConfig::default()).unwrap();
        assert_eq!(top.subsets.len(), 4);
        assert!(!top.complete);
    }

    #[test]
    fn heuristic_top_is_distinct_and_sorted() {
        let p = random_problem(12, 4, 3);
        let top = top_m_subsets(&p, 5, SubsetMode::Heuristic, &HeuristicConfig::default()).unwrap();
        let mut seen = BTreeSet::new();
        for w in top.subsets.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        for s in &top.subsets {
            assert!(seen.insert(s.members.clone()));
        }
    }

    #[test]
    fn from_kernels_uses_negated_loss() {
        use crate::kernels::KernelKind;
        let x = SimilarityMatrix::new(array![[1.0, 0.5], [0.5, 1.0]], KernelKind::Cka, None).unwrap();
        let y = SimilarityMatrix::new(array![[1.0, 0.2], [0.2, 1.0]], KernelKind::Cka, None).unwrap();
        let p = AlignmentProblem::from_kernels(&x, &y, DistortionSpec::NegInner, 1).unwrap();
        assert!((p.goodness()[[0, 1]] - 0.1).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn heuristic_bounded_by_exact_and_by_its_greedy(seed in 0u64..10_000, l in 3usize..10, n in 1usize..5) {
            let n = n.min(l);
            let p = random_problem(l, n, seed);
            let exact = select_subset_exact(&p).unwrap();
            let cfg = HeuristicConfig { restarts: 4, seed, ..Default::default() };
            for r in 0..4 {
                let ls = local_search(&p, &cfg, r);
                prop_assert!(ls.choice.score >= ls.greedy_score - 1e-9);
                prop_assert!(ls.choice.score <= exact.score + 1e-9);
                prop_assert!((alignment_score(&p, &ls.choice.members).unwrap() - ls.choice.score).abs() < 1e-9);
            }
        }

        #[test]
        fn tracker_matches_naive_score(seed in 0u64..10_000) {
            let p = random_problem(8, 3, seed);
            let mut t = Tracker::new(p.goodness());
            for x in [1, 4, 6] {
                t.add(x);
            }
            let d = t.swap_delta(4, 2);
            t.remove(4);
            t.add(2);
            prop_assert!((t.score - p.naive_score(&[1, 2, 6])).abs() < 1e-9);
            prop_assert!((p.naive_score(&[1, 2, 6]) - p.naive_score(&[1, 4, 6]) - d).abs() < 1e-9);
        }
    }
}
