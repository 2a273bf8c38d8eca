//! Unfactorized Hahn-Grant dual ascent on the dense `N^4` cost tensor.
//!
//! Only meant for small instances and for checking the factorized solver,
//! which must produce the same bounds and leaders.

use ndarray::Array2;

use super::hahn_grant::{drive, trivial, DualAscent, LapEngine};
use super::{FactorizedQap, HahnGrantConfig, HistoryEntry, Incumbent, LapBackend, QapSolveReport};
use crate::error::{Error, Result};
use crate::lap::LapSolution;

pub const MAX_REFERENCE_SIZE: usize = 8;

/// Dense dual-ascent state. The leader is the diagonal block `C_ijij`.
pub struct ReferenceState<'a> {
    qap: &'a FactorizedQap,
    n: usize,
    tensor: Vec<f64>,
    bound: f64,
    engine: LapEngine,
    scratch: Vec<f64>,
    sol: LapSolution,
    full: Vec<usize>,
}

impl<'a> ReferenceState<'a> {
    pub fn new(qap: &'a FactorizedQap, backend: LapBackend) -> Result<Self> {
        let n = qap.n();
        if n > MAX_REFERENCE_SIZE {
            return Err(Error::TooLarge(format!(
                "the dense reference solver is limited to N <= {MAX_REFERENCE_SIZE}, got {n}"
            )));
        }
        Ok(Self {
            qap,
            n,
            tensor: qap.dense_tensor(),
            bound: 0.0,
            engine: LapEngine::new(backend),
            scratch: Vec::new(),
            sol: LapSolution::default(),
            full: vec![0; n],
        })
    }

    fn at(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn leader(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(i, j)| self.tensor[self.at(i, j, i, j)])
    }

    /// Smallest `C_ijkl + C_klij` over `i != k, j != l`.
    pub fn min_pair_cost(&self) -> f64 {
        let n = self.n;
        let mut worst = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                for k in (0..n).filter(|&k| k != i) {
                    for l in (0..n).filter(|&l| l != j) {
                        worst = worst.min(self.tensor[self.at(i, j, k, l)] + self.tensor[self.at(k, l, i, j)]);
                    }
                }
            }
        }
        worst
    }

    fn lap(&mut self, m: usize, eps_rel: f64) {
        self.engine.solve(&self.scratch, m, eps_rel, &mut self.sol);
    }

    pub fn leader_step(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) -> f64 {
        let n = self.n;
        self.scratch = self.leader().iter().copied().collect();
        self.lap(n, eps_rel);
        if let Some(inc) = incumbent {
            inc.offer(self.qap, &self.sol.assignment);
        }
        let gain = self.sol.dual_objective();
        self.bound += gain;
        let share = 1.0 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let d = self.at(i, j, i, j);
                let reduced = self.tensor[d] - self.sol.u[i] - self.sol.v[j];
                self.tensor[d] = 0.0;
                for k in (0..n).filter(|&k| k != i) {
                    for l in (0..n).filter(|&l| l != j) {
                        let idx = self.at(i, j, k, l);
                        self.tensor[idx] += reduced * share;
                    }
                }
            }
        }
        gain
    }

    pub fn sweep(&mut self, eps_rel: f64, mut incumbent: Option<&mut Incumbent>) {
        let n = self.n;
        let m = n - 1;
        for i in 0..n {
            for j in 0..n {
                self.scratch.clear();
                for k in (0..n).filter(|&k| k != i) {
                    for l in (0..n).filter(|&l| l != j) {
                        let a = self.at(i, j, k, l);
                        let b = self.at(k, l, i, j);
                        self.tensor[a] += self.tensor[b];
                        self.tensor[b] = 0.0;
                        self.scratch.push(self.tensor[a]);
                    }
                }
                self.lap(m, eps_rel);

                if let Some(inc) = incumbent.as_deref_mut() {
                    self.full[i] = j;
                    for (kk, &ll) in self.sol.assignment.iter().enumerate() {
                        let k = if kk < i { kk } else { kk + 1 };
                        self.full[k] = if ll < j { ll } else { ll + 1 };
                    }
                    inc.offer(self.qap, &self.full);
                }

                let d = self.at(i, j, i, j);
                self.tensor[d] = self.sol.dual_objective();
                for (kk, k) in (0..n).filter(|&k| k != i).enumerate() {
                    for (ll, l) in (0..n).filter(|&l| l != j).enumerate() {
                        let idx = self.at(i, j, k, l);
                        self.tensor[idx] -= self.sol.u[kk] + self.sol.v[ll];
                    }
                }
            }
        }
    }
}

impl DualAscent for ReferenceState<'_> {
    fn leader_step(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) -> f64 {
        ReferenceState::leader_step(self, eps_rel, incumbent)
    }
    fn sweep(&mut self, eps_rel: f64, incumbent: Option<&mut Incumbent>) {
        ReferenceState::sweep(self, eps_rel, incumbent)
    }
    fn bound(&self) -> f64 {
        self.bound
    }
}

/// Dual ascent on the dense tensor with the same stopping rules as the
/// factorized solver.
pub fn solve_reference_hahn_grant(qap: &FactorizedQap, cfg: &HahnGrantConfig) -> Result<QapSolveReport> {
    solve_reference_hahn_grant_with(qap, cfg, &mut |_| {})
}

pub fn solve_reference_hahn_grant_with(
    qap: &FactorizedQap,
    cfg: &HahnGrantConfig,
    observer: &mut dyn FnMut(&HistoryEntry),
) -> Result<QapSolveReport> {
    cfg.validate()?;
    let mut state = ReferenceState::new(qap, cfg.lap)?;
    if qap.n() == 1 {
        return Ok(trivial(qap, "reference_hahn_grant", cfg, observer));
    }
    Ok(drive(qap, cfg, "reference_hahn_grant", &mut state, observer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qap::{solve_enumeration, HahnGrantState};
    use crate::qap::tests::random_sym;
    use crate::rng;

    fn instance(n: usize, seed: u64) -> FactorizedQap {
        let mut r = rng::seeded(seed);
        FactorizedQap::from_factors(random_sym(n, &mut r), random_sym(n, &mut r), 1.0, 0.0).unwrap()
    }

    fn asymmetric_instance(n: usize, seed: u64) -> FactorizedQap {
        use rand::Rng;
        let mut r = rng::seeded(seed);
        let mut m = || Array2::from_shape_fn((n, n), |_| r.random_range(-1.0..1.0));
        FactorizedQap::balanced(m(), m(), 1.0, 0.0).unwrap()
    }

    fn balanced_instance(n: usize, seed: u64) -> FactorizedQap {
        let mut r = rng::seeded(seed);
        FactorizedQap::balanced(random_sym(n, &mut r), random_sym(n, &mut r), 1.0, 0.0).unwrap()
    }

    #[test]
    fn matches_factorized_step_by_step() {
        for seed in 0..9 {
            let qap = match seed % 3 {
                0 => instance(5, seed),
                1 => balanced_instance(5, seed),
                _ => asymmetric_instance(5, seed),
            };
            let mut dense = ReferenceState::new(&qap, LapBackend::Jv).unwrap();
            let mut fact = HahnGrantState::new(&qap, LapBackend::Jv);
            for _ in 0..10 {
                let ld = dense.leader();
                let lf = fact.leader();
                for (a, b) in ld.iter().zip(lf.iter()) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
                dense.leader_step(0.0, None);
                fact.leader_step(0.0, None);
                assert!((dense.bound() - fact.bound()).abs() < 1e-9);
                dense.sweep(0.0, None);
                fact.sweep(0.0, None);
                assert!((dense.min_pair_cost() - fact.min_implicit_cost()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn bound_is_valid() {
        for seed in 10..16 {
            let qap = match seed % 3 {
                0 => instance(6, seed),
                1 => balanced_instance(6, seed),
                _ => asymmetric_instance(6, seed),
            };
            let opt = solve_enumeration(&qap).unwrap().qap_primal;
            let cfg = HahnGrantConfig { primal_heuristic_seeds: 2, max_iters: 200, ..Default::default() };
            let rep = solve_reference_hahn_grant(&qap, &cfg).unwrap();
            assert!(rep.qap_dual <= opt + 1e-9);
            assert!(rep.qap_primal >= opt - 1e-9);
        }
    }

    #[test]
    fn size_guard() {
        let qap = instance(MAX_REFERENCE_SIZE + 1, 0);
        let cfg = HahnGrantConfig::default();
        assert!(matches!(solve_reference_hahn_grant(&qap, &cfg), Err(Error::TooLarge(_))));
    }
}
