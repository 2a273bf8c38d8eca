//! Factorized Hahn-Grant dual ascent.
//!
//! The unfactorized algorithm keeps an `N^4` cost tensor and moves cost from
//! the quadratic terms into a `leader` matrix of linear terms and from there
//! into a constant lower bound, by repeatedly solving linear assignment
//! problems and subtracting their duals. For Koopmans-Beckmann costs
//! `C_ijkl = C1_ik C2_jl + A_ik + B_jl` the tensor never has to be stored:
//! the current sum of complementary entries is always
//!
//! ```text
//! C_ijkl + C_klij - U_ijk - V_ijl - U_kli - V_klj
//! ```
//!
//! where the first two terms are read off the factors and `U` and `V`
//! (each `N x N x N`) accumulate the dual vectors of the
//! per-pair subproblems. Every LAP assignment found along the way is also a
//! feasible QAP permutation and is offered to the incumbent.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{heuristic, FactorizedQap, HistoryEntry, Incumbent, QapSolveReport};
use crate::error::{Error, Result};
use crate::lap::{AuctionSolver, JvSolver, LapSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LapBackend {
    Jv,
    Auction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HahnGrantConfig {
    pub lap: LapBackend,
    /// Stop when the bound improves by less than this (raw QAP units).
    pub tol_abs: f64,
    /// Stop when the bound improves by less than this fraction of `|bound|`.
    pub tol_rel: f64,
    /// Stop, certified optimal, when `primal - bound` drops below this.
    pub tol_gap: f64,
    /// Initial auction slack, relative to the cost range of each LAP.
    pub auction_eps0: f64,
    /// Per-iteration multiplicative decay of the auction slack.
    pub auction_decay: f64,
    pub auction_eps_floor: f64,
    pub max_iters: usize,
    /// Seconds; checked once per outer iteration.
    pub time_limit: Option<f64>,
    /// FAQ + 2-opt restarts used to seed the incumbent; 0 starts from the identity.
    pub primal_heuristic_seeds: usize,
    /// Offer every LAP assignment to the incumbent.
    pub use_lap_primals: bool,
    pub seed: u64,
}

impl Default for HahnGrantConfig {
    fn default() -> Self {
        Self {
            lap: LapBackend::Jv,
            tol_abs: 1e-6,
            tol_rel: 1e-6,
            tol_gap: 1e-6,
            auction_eps0: 0.1,
            auction_decay: 0.9,
            auction_eps_floor: 1e-9,
            max_iters: 100_000,
            time_limit: None,
            primal_heuristic_seeds: 100,
            use_lap_primals: true,
            seed: 0,
        }
    }
}

impl HahnGrantConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_abs", self.tol_abs),
            ("tol_rel", self.tol_rel),
            ("tol_gap", self.tol_gap),
            ("auction_eps0", self.auction_eps0),
            ("auction_eps_floor", self.auction_eps_floor),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.auction_decay > 0.0 && self.auction_decay <= 1.0) {
            return Err(Error::Config(format!(
                "auction_decay must lie in (0, 1], got {}",
                self.auction_decay
            )));
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return Err(Error::Config(format!("time_limit must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn auction_eps(&self, iteration: usize) -> f64 {
        (self.auction_eps0 * self.auction_decay.powi(iteration.min(i32::MAX as usize) as i32))
            .max(self.auction_eps_floor)
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ZeroGap,
    Stalled,
    IterationLimit,
    TimeLimit,
}

pub(crate) struct LapEngine {
    backend: LapBackend,
    jv: JvSolver,
    auction: AuctionSolver,
    reduction_u: Vec<f64>,
    reduction_v: Vec<f64>,
}

impl LapEngine {
    pub(crate) fn new(backend: LapBackend) -> Self {
        Self {
            backend,
            jv: JvSolver::new(),
            auction: AuctionSolver::new(),
            reduction_u: Vec::new(),
            reduction_v: Vec::new(),
        }
    }

    pub(crate) fn solve(&mut self, cost: &[f64], n: usize, eps_rel: f64, out: &mut LapSolution) {
        match self.backend {
            LapBackend::Jv => self.jv.solve(cost, n, out),
            LapBackend::Auction => {
                let (lo, hi) = cost
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| (lo.min(c), hi.max(c)));
                let range = hi - lo;
                let eps = if range > 0.0 { eps_rel * range } else { eps_rel };
                self.auction.solve(cost, n, eps, out);
                self.keep_reduction_if_better(cost, n, out);
            }
        }
    }

    /// With a loose ε the auction duals can fall below the plain row/column
    /// reduction, which is itself a feasible dual. Taking the better of the
    /// two keeps every bound increment nonnegative on nonnegative costs.
    fn keep_reduction_if_better(&mut self, cost: &[f64], n: usize, out: &mut LapSolution) {
        self.reduction_u.clear();
        self.reduction_u
            .extend((0..n).map(|i| cost[i * n..(i + 1) * n].iter().copied().fold(f64::INFINITY, f64::min)));
        self.reduction_v.clear();
        self.reduction_v.extend(
            (0..n).map(|j| (0..n).map(|i| cost[i * n + j] - self.reduction_u[i]).fold(f64::INFINITY, f64::min)),
        );
        let reduced: f64 = self.reduction_u.iter().sum::<f64>() + self.reduction_v.iter().sum::<f64>();
        if reduced > out.dual_objective() {
            out.u.clone_from(&self.reduction_u);
            out.v.clone_from(&self.reduction_v);
        }
    }
}

/// Mutable dual-ascent state: `O(N^3)` memory.
pub struct HahnGrantState<'a> {
    qap: &'a FactorizedQap,
    n: usize,
    c1: Vec<f64>,
    c2: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    leader: Vec<f64>,
    /// `U[(i*n + j)*n + k]`, the `k == i` slot is unused.
    u: Vec<f64>,
    /// `V[(i*n + j)*n + l]`, the `l == j` slot is unused.
    v: Vec<f64>,
    bound: f64,
    engine: LapEngine,
    scratch: Vec<f64>,
    sol: LapSolution,
    full: Vec<usize>,
}

impl<'a> HahnGrantState<'a> {
    /// Fresh state: zero bound, zero `U`/`V`, `leader_ij = C_ijij`.
    pub fn new(qap: &'a FactorizedQap, backend: LapBackend) -> Self {
        let n = qap.n();
        let c1: Vec<f64> = qap.c1().iter().copied().collect();
        let c2: Vec<f64> = qap.c2().iter().copied().collect();
        let mut leader = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                leader[i * n + j] = qap.entry(i, j, i, j);
            }
        }
        Self {
            qap,
            n,
            c1,
            c2,
            a: qap.a().iter().copied().collect(),
            b: qap.b().iter().copied().collect(),
            leader,
            u: vec![0.0; n * n * n],
            v: vec![0.0; n * n * n],
            bound: 0.0,
            engine: LapEngine::new(backend),
            scratch: Vec::with_capacity(n * n),
            sol: LapSolution::default(),
            full: vec![0; n],
        }
    }

    /// Current lower bound in raw QAP units.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn leader(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.n, self.n), self.leader.clone()).expect("square")
    }

    /// Solves the leader LAP, moves its value into the bound and spreads the
    /// reduced leader back over the quadratic terms. Returns the increase of
    /// the bound.
    pub fn leader_step(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) -> f64 {
        let n = self.n;
        self.engine.solve(&self.leader, n, eps_rel, &mut self.sol);
        if let Some(inc) = incumbent {
            inc.offer(self.qap, &self.sol.assignment);
        }
        let gain = self.sol.dual_objective();
        self.bound += gain;
        let share = 1.0 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let reduced = self.leader[i * n + j] - self.sol.u[i] - self.sol.v[j];
                self.leader[i * n + j] = 0.0;
                let spread = reduced * share;
                let base = (i * n + j) * n;
                for k in 0..n {
                    if k != i {
                        self.u[base + k] -= spread;
                    }
                }
            }
        }
        gain
    }

    fn fill_subproblem(&mut self, i: usize, j: usize) {
        let n = self.n;
        let m = n - 1;
        self.scratch.clear();
        self.scratch.resize(m * m, 0.0);
        let base_ij = (i * n + j) * n;
        for k in (0..n).filter(|&k| k != i) {
            let kk = if k < i { k } else { k - 1 };
            let (f, g) = (self.c1[i * n + k], self.c1[k * n + i]);
            let u_ijk = self.u[base_ij + k] - self.a[i * n + k] - self.a[k * n + i];
            let row = &mut self.scratch[kk * m..(kk + 1) * m];
            for l in (0..n).filter(|&l| l != j) {
                let ll = if l < j { l } else { l - 1 };
                let base_kl = (k * n + l) * n;
                // C_ijkl + C_klij
                row[ll] = f * self.c2[j * n + l] + g * self.c2[l * n + j] + self.b[j * n + l] + self.b[l * n + j]
                    - u_ijk
                    - self.v[base_ij + l]
                    - self.u[base_kl + i]
                    - self.v[base_kl + j];
            }
        }
    }

    /// One row-major pass over all `(i, j)` subproblems. Later subproblems
    /// see the duals written by earlier ones in the same pass.
    pub fn sweep(&mut self, eps_rel: f64, mut incumbent: Option<&mut Incumbent>) {
        let n = self.n;
        let m = n - 1;
        for i in 0..n {
            for j in 0..n {
                self.fill_subproblem(i, j);
                let scratch = std::mem::take(&mut self.scratch);
                self.engine.solve(&scratch, m, eps_rel, &mut self.sol);
                self.scratch = scratch;

                if let Some(inc) = incumbent.as_deref_mut() {
                    self.full[i] = j;
                    for (kk, &ll) in self.sol.assignment.iter().enumerate() {
                        let k = if kk < i { kk } else { kk + 1 };
                        let l = if ll < j { ll } else { ll + 1 };
                        self.full[k] = l;
                    }
                    inc.offer(self.qap, &self.full);
                }

                self.leader[i * n + j] = self.sol.dual_objective();
                let base = (i * n + j) * n;
                for (kk, &du) in self.sol.u.iter().enumerate() {
                    let k = if kk < i { kk } else { kk + 1 };
                    self.u[base + k] += du;
                }
                for (ll, &dv) in self.sol.v.iter().enumerate() {
                    let l = if ll < j { ll } else { ll + 1 };
                    self.v[base + l] += dv;
                }
            }
        }
    }

    /// Smallest implicit pair cost `C_ijkl + C_klij` over `i != k, j != l`.
    /// Stays nonnegative (up to round-off) while the duals are feasible.
    pub fn min_implicit_cost(&self) -> f64 {
        let n = self.n;
        let mut worst = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let base_ij = (i * n + j) * n;
                for k in (0..n).filter(|&k| k != i) {
                    for l in (0..n).filter(|&l| l != j) {
                        let base_kl = (k * n + l) * n;
                        let c = self.qap.entry(i, j, k, l) + self.qap.entry(k, l, i, j)
                            - self.u[base_ij + k]
                            - self.v[base_ij + l]
                            - self.u[base_kl + i]
                            - self.v[base_kl + j];
                        worst = worst.min(c);
                    }
                }
            }
        }
        worst
    }
}

/// Runs the factorized Hahn-Grant solver to convergence, iteration limit or
/// time limit, whichever comes first.
pub fn solve_factorized_hahn_grant(qap: &FactorizedQap, cfg: &HahnGrantConfig) -> Result<QapSolveReport> {
    solve_factorized_hahn_grant_with(qap, cfg, &mut |_| {})
}

/// Same as [`solve_factorized_hahn_grant`], calling `observer` after every
/// outer iteration.
pub fn solve_factorized_hahn_grant_with(
    qap: &FactorizedQap,
    cfg: &HahnGrantConfig,
    observer: &mut dyn FnMut(&HistoryEntry),
) -> Result<QapSolveReport> {
    cfg.validate()?;
    if qap.n() == 1 {
        return Ok(trivial(qap, "factorized_hahn_grant", cfg, observer));
    }
    let mut state = HahnGrantState::new(qap, cfg.lap);
    Ok(drive(qap, cfg, "factorized_hahn_grant", &mut state, observer))
}

/// One dual-ascent iteration is a leader step followed by a sweep.
pub(crate) trait DualAscent {
    fn leader_step(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) -> f64;
    fn sweep(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>);
    fn bound(&self) -> f64;
}

impl DualAscent for HahnGrantState<'_> {
    fn leader_step(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) -> f64 {
        HahnGrantState::leader_step(self, eps_rel, incumbent)
    }
    fn sweep(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) {
        HahnGrantState::sweep(self, eps_rel, incumbent)
    }
    fn bound(&self) -> f64 {
        self.bound
    }
}

pub(crate) fn trivial(
    qap: &FactorizedQap,
    solver: &str,
    cfg: &HahnGrantConfig,
    observer: &mut dyn FnMut(&HistoryEntry),
) -> QapSolveReport {
    let start = Instant::now();
    let cost = qap.cost(&[0]);
    let entry = HistoryEntry { iteration: 0, qap_dual: cost, qap_primal: cost };
    observer(&entry);
    let config = serde_json::to_value(cfg).ok();
    report(qap, solver, vec![0], cost, cost, 1, true, Termination::ZeroGap, start, vec![entry], config)
}

pub(crate) fn drive(
    qap: &FactorizedQap,
    cfg: &HahnGrantConfig,
    solver: &str,
    state: &mut dyn DualAscent,
    observer: &mut dyn FnMut(&HistoryEntry),
) -> QapSolveReport {
    let start = Instant::now();
    let n = qap.n();
    let config = serde_json::to_value(cfg).ok();
    let initial = if cfg.primal_heuristic_seeds > 0 {
        heuristic::primal_heuristic(qap, cfg.primal_heuristic_seeds, cfg.seed)
    } else {
        (0..n).collect()
    };
    let mut incumbent = Incumbent::new(qap, initial);
    let mut history = Vec::new();
    let mut termination = Termination::IterationLimit;
    let mut iterations = 0;
    let mut previous = f64::NEG_INFINITY;

    for it in 0..cfg.max_iters {
        let eps = cfg.auction_eps(it);
        state.leader_step(eps, cfg.use_lap_primals.then_some(&mut incumbent));
        iterations = it + 1;
        let bound = state.bound();
        let entry = HistoryEntry { iteration: it, qap_dual: bound, qap_primal: incumbent.cost };
        observer(&entry);
        history.push(entry);
        log::debug!("{solver} it={it} bound={bound:.9} primal={:.9}", incumbent.cost);

        if incumbent.cost - bound < cfg.tol_gap {
            termination = Termination::ZeroGap;
            break;
        }
        if it > 0 {
            let gain = bound - previous;
            if gain < cfg.tol_abs || (bound != 0.0 && gain < cfg.tol_rel * bound.abs()) {
                termination = Termination::Stalled;
                break;
            }
        }
        previous = bound;
        if let Some(limit) = cfg.time_limit {
            if start.elapsed().as_secs_f64() >= limit {
                termination = Termination::TimeLimit;
                break;
            }
        }
        if it + 1 == cfg.max_iters {
            break;
        }
        state.sweep(eps, cfg.use_lap_primals.then_some(&mut incumbent));
    }

    let bound = state.bound();
    let converged = incumbent.cost - bound < cfg.tol_gap;
    report(
        qap,
        solver,
        incumbent.perm,
        incumbent.cost,
        bound,
        iterations,
        converged,
        termination,
        start,
        history,
        config,
    )
}

#[allow(clippy::too_many_arguments)]
fn report(
    qap: &FactorizedQap,
    solver: &str,
    perm: Vec<usize>,
    primal: f64,
    dual: f64,
    iterations: usize,
    converged: bool,
    termination: Termination,
    start: Instant,
    history: Vec<HistoryEntry>,
    config: Option<serde_json::Value>,
) -> QapSolveReport {
    let config = config.map(|mut c| {
        if let Some(obj) = c.as_object_mut() {
            obj.insert("termination".into(), serde_json::to_value(termination).unwrap_or_default());
        }
        c
    });
    QapSolveReport {
        solver: solver.into(),
        primal_cost: qap.to_distortion(primal),
        dual_bound: qap.to_distortion(dual),
        qap_primal: primal,
        qap_dual: dual,
        primal_perm: perm,
        iterations,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
        history,
        config,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qap::solve_enumeration;
    use crate::rng;
    use rand::Rng;

    fn random_qap(n: usize, seed: u64) -> FactorizedQap {
        let mut r = rng::seeded(seed);
        let mut sym = || {
            let mut m = Array2::from_shape_fn((n, n), |_| r.random::<f64>());
            for i in 0..n {
                for j in 0..i {
                    m[[i, j]] = m[[j, i]];
                }
            }
            m
        };
        let a = sym();
        let b = sym();
        if seed % 4 == 3 {
            let skew = Array2::from_shape_fn((n, n), |(i, k)| (i as f64 - k as f64) * 0.1);
            FactorizedQap::balanced(a - 0.5 + &skew, b - 0.5 - &skew, 1.0, 0.0).unwrap()
        } else if seed % 2 == 1 {
            FactorizedQap::balanced(a - 0.5, b - 0.5, 1.0, 0.0).unwrap()
        } else {
            FactorizedQap::from_factors(a, b, 1.0, 0.0).unwrap()
        }
    }

    fn quick_cfg(lap: LapBackend) -> HahnGrantConfig {
        HahnGrantConfig { lap, primal_heuristic_seeds: 5, max_iters: 2_000, ..Default::default() }
    }

    #[test]
    fn bound_below_optimum_below_primal() {
        for seed in 0..8 {
            let qap = random_qap(6, seed);
            let opt = solve_enumeration(&qap).unwrap().qap_primal;
            for lap in [LapBackend::Jv, LapBackend::Auction] {
                let rep = solve_factorized_hahn_grant(&qap, &quick_cfg(lap)).unwrap();
                assert!(rep.qap_dual <= opt + 1e-9, "{lap:?}: {} > {opt}", rep.qap_dual);
                assert!(rep.qap_primal >= opt - 1e-9);
                if rep.converged {
                    assert!((rep.qap_primal - opt).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn dual_history_is_monotone() {
        let qap = random_qap(7, 42);
        for lap in [LapBackend::Jv, LapBackend::Auction] {
            let rep = solve_factorized_hahn_grant(&qap, &quick_cfg(lap)).unwrap();
            for w in rep.history.windows(2) {
                assert!(w[1].qap_dual >= w[0].qap_dual - 1e-12);
            }
        }
    }

    #[test]
    fn implicit_costs_stay_nonnegative() {
        for (qap, lap) in [6, 7]
            .into_iter()
            .map(|seed| random_qap(6, seed))
            .flat_map(|q| [(q.clone(), LapBackend::Jv), (q, LapBackend::Auction)])
        {
            let mut state = HahnGrantState::new(&qap, lap);
            for it in 0..15 {
                let eps = HahnGrantConfig::default().auction_eps(it);
                state.leader_step(eps, None);
                assert!(state.min_implicit_cost() >= -1e-6);
                state.sweep(eps, None);
                assert!(state.min_implicit_cost() >= -1e-6);
            }
        }
    }

    #[test]
    fn first_leader_is_diagonal_product() {
        let qap = random_qap(2, 3);
        let state = HahnGrantState::new(&qap, LapBackend::Jv);
        let leader = state.leader();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(leader[[i, j]], qap.c1()[[i, i]] * qap.c2()[[j, j]] + qap.a()[[i, i]] + qap.b()[[j, j]]);
            }
        }
    }

    #[test]
    fn zero_instance_converges_immediately() {
        let qap = FactorizedQap::from_factors(Array2::zeros((5, 5)), Array2::zeros((5, 5)), 1.0, 0.0).unwrap();
        let rep = solve_factorized_hahn_grant(&qap, &quick_cfg(LapBackend::Jv)).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.qap_dual, 0.0);
    }

    #[test]
    fn trivial_size_one() {
        let qap = FactorizedQap::from_factors(
            Array2::from_elem((1, 1), 2.0),
            Array2::from_elem((1, 1), 5.0),
            1.0,
            0.0,
        )
        .unwrap();
        let rep = solve_factorized_hahn_grant(&qap, &HahnGrantConfig::default()).unwrap();
        assert_eq!(rep.primal_perm, vec![0]);
        assert!(rep.converged);
        assert!((rep.primal_cost - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let qap = random_qap(3, 1);
        let cfg = HahnGrantConfig { tol_abs: 0.0, ..Default::default() };
        assert!(matches!(solve_factorized_hahn_grant(&qap, &cfg), Err(Error::Config(_))));
        let cfg = HahnGrantConfig { auction_decay: 1.5, ..Default::default() };
        assert!(matches!(solve_factorized_hahn_grant(&qap, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn time_limit_returns_best_so_far() {
        let qap = random_qap(12, 5);
        let cfg = HahnGrantConfig {
            time_limit: Some(1e-9),
            primal_heuristic_seeds: 1,
            tol_abs: 1e-300,
            tol_rel: 1e-300,
            ..Default::default()
        };
        let rep = solve_factorized_hahn_grant(&qap, &cfg).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(crate::perm::is_permutation(&rep.primal_perm));
        assert!(rep.qap_dual <= rep.qap_primal + 1e-6);
    }

    #[test]
    fn deterministic() {
        let qap = random_qap(8, 11);
        let a = solve_factorized_hahn_grant(&qap, &quick_cfg(LapBackend::Jv)).unwrap();
        let b = solve_factorized_hahn_grant(&qap, &quick_cfg(LapBackend::Jv)).unwrap();
        assert_eq!(a.primal_perm, b.primal_perm);
        assert_eq!(a.history, b.history);
    }
}
