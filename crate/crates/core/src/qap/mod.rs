//! Koopmans-Beckmann quadratic assignment: the problem type, the factorized
//! Hahn-Grant dual-ascent solver, an O(N^4) reference implementation of the
//! unfactorized algorithm, exhaustive enumeration, and primal heuristics.
//!
//! The objective of a permutation `π` is
//! `sum_{i,k} C1[i][k] * C2[π(i)][π(k)]`, equivalently
//! `sum_{ijkl} C1_ik C2_jl P_ij P_kl` with `P_ij = 1` iff `π(i) = j`.

mod entropic;
mod enumeration;
mod faq;
mod hahn_grant;
mod heuristic;
pub mod reference;
mod two_opt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::max_asymmetry;

pub use entropic::{solve_entropic_gw, transport_objective, EntropicGwConfig, EntropicGwResult};
pub use enumeration::{solve_enumeration, MAX_ENUMERATION_SIZE};
pub use faq::{faq_from_start, solve_faq, FaqConfig};
pub use hahn_grant::{
    solve_factorized_hahn_grant, solve_factorized_hahn_grant_with, HahnGrantConfig, HahnGrantState,
    LapBackend, Termination,
};
pub use heuristic::primal_heuristic;
pub use two_opt::solve_2opt;

const FACTOR_SYMMETRY_TOL: f64 = 1e-6;

/// Koopmans-Beckmann cost pair plus two separable terms, with the affine map
/// back to the original distortion:
/// `distortion = affine_scale * qap_cost + affine_offset`.
///
/// The cost tensor is `C_ijkl = C1_ik C2_jl + A_ik + B_jl`. Every permutation
/// picks each `A_ik` and each `B_jl` exactly once, so the separable terms add
/// the same constant to every objective. They only change how cost is split
/// between the quadratic and constant parts, which matters for dual bounds.
/// The tensor is entrywise nonnegative. Factors that are symmetric up to
/// `1e-6` relative are stored exactly symmetric; other factors are kept as
/// given.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedQap {
    c1: Array2<f64>,
    c2: Array2<f64>,
    a: Array2<f64>,
    b: Array2<f64>,
    separable: f64,
    symmetric: bool,
    affine_scale: f64,
    affine_offset: f64,
}

fn check_pair(c1: Array2<f64>, c2: Array2<f64>) -> Result<(Array2<f64>, Array2<f64>, bool)> {
    let n = c1.nrows();
    if n == 0 || c1.dim() != (n, n) || c2.dim() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "factors must be square and equally sized, got {:?} and {:?}",
            c1.dim(),
            c2.dim()
        )));
    }
    let mut symmetric = true;
    for m in [&c1, &c2] {
        if let Some(index) = m.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let magnitude = m.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        symmetric &= max_asymmetry(m) <= FACTOR_SYMMETRY_TOL * magnitude;
    }
    if !symmetric {
        return Ok((c1, c2, false));
    }
    let sym = |m: &Array2<f64>| Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (m[[i, j]] + m[[j, i]]));
    Ok((sym(&c1), sym(&c2), true))
}

fn check_affine(scale: f64, offset: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) || !offset.is_finite() {
        return Err(Error::OutOfRange(format!("affine map ({scale}, {offset}) is invalid")));
    }
    Ok(())
}

impl FactorizedQap {
    /// Builds a QAP from arbitrary square factors, where the original
    /// objective is `scale * sum C1 C2 P P + offset`.
    ///
    /// Each factor is shifted by its minimal entry; the shift is folded into
    /// the offset exactly, using that every row and column of a permutation
    /// (or doubly stochastic) matrix sums to one.
    pub fn from_factors(c1: Array2<f64>, c2: Array2<f64>, scale: f64, offset: f64) -> Result<Self> {
        let (c1, c2, symmetric) = check_pair(c1, c2)?;
        check_affine(scale, offset)?;
        let n = c1.nrows();
        let m1 = c1.iter().cloned().fold(f64::INFINITY, f64::min);
        let m2 = c2.iter().cloned().fold(f64::INFINITY, f64::min);
        let c1 = c1.mapv(|v| v - m1);
        let c2 = c2.mapv(|v| v - m2);
        let s1: f64 = c1.sum();
        let s2: f64 = c2.sum();
        let nn = (n * n) as f64;
        let shift = m1 * s2 + m2 * s1 + nn * m1 * m2;
        Ok(Self {
            c1,
            c2,
            a: Array2::zeros((n, n)),
            b: Array2::zeros((n, n)),
            separable: 0.0,
            symmetric,
            affine_scale: scale,
            affine_offset: offset + scale * shift,
        })
    }

    /// Same objective as [`FactorizedQap::from_factors`], written as the
    /// square `C_ijkl = (s C1_ik + C2_jl / s)^2 / 2` with
    /// `s^2 = |C2|_F / |C1|_F`.
    ///
    /// The square vanishes wherever the two sides agree, so instances with a
    /// near-perfect matching have a near-zero optimum and dual ascent can
    /// certify it. Falls back to `from_factors` when a factor is zero.
    pub fn balanced(c1: Array2<f64>, c2: Array2<f64>, scale: f64, offset: f64) -> Result<Self> {
        let (c1, c2, symmetric) = check_pair(c1, c2)?;
        check_affine(scale, offset)?;
        let norm = |m: &Array2<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (n1, n2) = (norm(&c1), norm(&c2));
        if n1 == 0.0 || n2 == 0.0 {
            return Self::from_factors(c1, c2, scale, offset);
        }
        let s2 = n2 / n1;
        let a = c1.mapv(|v| 0.5 * s2 * v * v);
        let b = c2.mapv(|v| 0.5 * v * v / s2);
        let separable = a.sum() + b.sum();
        Ok(Self {
            c1,
            c2,
            a,
            b,
            separable,
            symmetric,
            affine_scale: scale,
            affine_offset: offset - scale * separable,
        })
    }

    pub fn n(&self) -> usize {
        self.c1.nrows()
    }

    /// Both factors (and hence the separable terms) are symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn c1(&self) -> ArrayView2<'_, f64> {
        self.c1.view()
    }

    pub fn c2(&self) -> ArrayView2<'_, f64> {
        self.c2.view()
    }

    /// Separable term on the first side (`A_ik`).
    pub fn a(&self) -> ArrayView2<'_, f64> {
        self.a.view()
    }

    /// Separable term on the second side (`B_jl`).
    pub fn b(&self) -> ArrayView2<'_, f64> {
        self.b.view()
    }

    /// `sum A + sum B`, the constant the separable terms add to every
    /// permutation.
    pub fn separable_constant(&self) -> f64 {
        self.separable
    }

    /// `C_ijkl`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c1[[i, k]] * self.c2[[j, l]] + self.a[[i, k]] + self.b[[j, l]]
    }

    pub fn affine_scale(&self) -> f64 {
        self.affine_scale
    }

    pub fn affine_offset(&self) -> f64 {
        self.affine_offset
    }

    /// Raw QAP objective of a permutation, in shifted units.
    pub fn cost(&self, perm: &[usize]) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            let pi = perm[i];
            let r1 = self.c1.row(i);
            let r2 = self.c2.row(pi);
            let mut acc = 0.0;
            for k in 0..n {
                acc += r1[k] * r2[perm[k]];
            }
            total += acc;
        }
        total + self.separable
    }

    /// Maps a raw QAP value back to distortion units.
    pub fn to_distortion(&self, qap_value: f64) -> f64 {
        self.affine_scale * qap_value + self.affine_offset
    }

    pub fn distortion_of(&self, perm: &[usize]) -> f64 {
        self.to_distortion(self.cost(perm))
    }

    /// `sum_ijkl C_ijkl S_ij S_kl` for a (doubly stochastic) matrix `S`.
    pub fn relaxed_cost(&self, s: ArrayView2<'_, f64>) -> f64 {
        let sc2st = s.dot(&self.c2).dot(&s.t());
        let rows = s.sum_axis(ndarray::Axis(1));
        let cols = s.sum_axis(ndarray::Axis(0));
        (&self.c1 * &sc2st).sum() + rows.dot(&self.a.dot(&rows)) + cols.dot(&self.b.dot(&cols))
    }

    /// Distortion of a doubly stochastic relaxation `S`.
    pub fn relaxed_distortion(&self, s: ArrayView2<'_, f64>) -> f64 {
        self.to_distortion(self.relaxed_cost(s))
    }

    /// Change in raw cost when the images of `r` and `s` are exchanged.
    pub fn swap_delta(&self, perm: &[usize], r: usize, s: usize) -> f64 {
        if r == s {
            return 0.0;
        }
        let (pr, ps) = (perm[r], perm[s]);
        let c1 = &self.c1;
        let c2 = &self.c2;
        let mut delta = (c1[[r, r]] - c1[[s, s]]) * (c2[[ps, ps]] - c2[[pr, pr]]);
        let mut cross = 0.0;
        for k in 0..self.n() {
            if k == r || k == s {
                continue;
            }
            let pk = perm[k];
            cross += (c1[[r, k]] - c1[[s, k]]) * (c2[[ps, pk]] - c2[[pr, pk]]);
            if !self.symmetric {
                cross += (c1[[k, r]] - c1[[k, s]]) * (c2[[pk, ps]] - c2[[pk, pr]]);
            }
        }
        if self.symmetric {
            cross *= 2.0;
        } else {
            delta += (c1[[r, s]] - c1[[s, r]]) * (c2[[ps, pr]] - c2[[pr, ps]]);
        }
        delta + cross
    }

    /// The full `N^4` tensor `C_ijkl`, flattened as
    /// `((i*N + j)*N + k)*N + l`. Only sensible for small `N`.
    pub fn dense_tensor(&self) -> Vec<f64> {
        let n = self.n();
        let mut t = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        t[((i * n + j) * n + k) * n + l] = self.entry(i, j, k, l);
                    }
                }
            }
        }
        t
    }
}

/// One dual-ascent iteration in a solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub qap_dual: f64,
    pub qap_primal: f64,
}

/// Result of a QAP solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapSolveReport {
    pub solver: String,
    pub primal_perm: Vec<usize>,
    /// Primal objective in distortion units.
    pub primal_cost: f64,
    /// Certified lower bound in distortion units.
    pub dual_bound: f64,
    /// Primal objective in raw (shifted) QAP units.
    pub qap_primal: f64,
    /// Lower bound in raw (shifted) QAP units.
    pub qap_dual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl QapSolveReport {
    pub fn gap(&self) -> f64 {
        self.qap_primal - self.qap_dual
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Best permutation seen so far, in raw QAP units.
#[derive(Debug, Clone)]
pub struct Incumbent {
    pub perm: Vec<usize>,
    pub cost: f64,
}

impl Incumbent {
    pub fn new(qap: &FactorizedQap, perm: Vec<usize>) -> Self {
        let cost = qap.cost(&perm);
        Self { perm, cost }
    }

    /// Replaces the incumbent if `perm` is strictly cheaper.
    pub fn offer(&mut self, qap: &FactorizedQap, perm: &[usize]) -> bool {
        let cost = qap.cost(perm);
        if cost < self.cost {
            self.cost = cost;
            self.perm.clear();
            self.perm.extend_from_slice(perm);
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::perm;
    use rand::Rng;

    pub(crate) fn random_sym(n: usize, r: &mut crate::rng::Rng) -> Array2<f64> {
        let mut m = Array2::from_shape_fn((n, n), |_| r.random_range(-1.0..1.0));
        for i in 0..n {
            for j in 0..i {
                m[[i, j]] = m[[j, i]];
            }
        }
        m
    }

    #[test]
    fn shift_bookkeeping_is_exact() {
        let mut r = rng::seeded(4);
        let a = random_sym(6, &mut r);
        let b = random_sym(6, &mut r);
        let qap = FactorizedQap::from_factors(a.clone(), b.clone(), 1.0, 0.0).unwrap();
        assert!(qap.c1().iter().all(|&v| v >= 0.0));
        assert!(qap.c2().iter().all(|&v| v >= 0.0));
        for _ in 0..10 {
            let p = perm::random(6, &mut r);
            let direct: f64 = (0..6)
                .flat_map(|i| (0..6).map(move |k| (i, k)))
                .map(|(i, k)| a[[i, k]] * b[[p[i], p[k]]])
                .sum();
            assert!((qap.distortion_of(&p) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_added_to_c1_shifts_by_sum_c2() {
        let mut r = rng::seeded(8);
        let a = random_sym(5, &mut r).mapv(f64::abs);
        let b = random_sym(5, &mut r).mapv(f64::abs);
        let c = 0.37;
        let raw = |c1: Array2<f64>, c2: Array2<f64>| FactorizedQap {
            c1,
            c2,
            a: Array2::zeros((5, 5)),
            b: Array2::zeros((5, 5)),
            separable: 0.0,
            symmetric: true,
            affine_scale: 1.0,
            affine_offset: 0.0,
        };
        let base = raw(a.clone(), b.clone());
        let lifted = raw(a.mapv(|v| v + c), b.clone());
        let s2 = b.sum();
        for _ in 0..10 {
            let p = perm::random(5, &mut r);
            assert!((lifted.cost(&p) - base.cost(&p) - c * s2).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_form_keeps_objective_and_is_nonnegative() {
        let mut r = rng::seeded(21);
        let (c1, c2) = (random_sym(6, &mut r), random_sym(6, &mut r));
        let plain = FactorizedQap::from_factors(c1.clone(), c2.clone(), 2.0, 0.5).unwrap();
        let sq = FactorizedQap::balanced(c1, c2, 2.0, 0.5).unwrap();
        assert!(sq.dense_tensor().iter().all(|&v| v >= -1e-12));
        for _ in 0..20 {
            let p = perm::random(6, &mut r);
            assert!((plain.distortion_of(&p) - sq.distortion_of(&p)).abs() < 1e-9);
        }
        let s = Array2::from_shape_fn((6, 6), |_| r.random::<f64>());
        let t = sq.dense_tensor();
        let mut direct = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..6 {
                    for l in 0..6 {
                        direct += t[((i * 6 + j) * 6 + k) * 6 + l] * s[[i, j]] * s[[k, l]];
                    }
                }
            }
        }
        assert!((sq.relaxed_cost(s.view()) - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn balanced_falls_back_on_zero_factor() {
        let q = FactorizedQap::balanced(Array2::zeros((3, 3)), Array2::eye(3), 1.0, 0.0).unwrap();
        assert_eq!(q.separable_constant(), 0.0);
    }

    #[test]
    fn swap_delta_matches_recomputation() {
        let mut r = rng::seeded(2);
        let qap = FactorizedQap::from_factors(random_sym(7, &mut r), random_sym(7, &mut r), 1.0, 0.0).unwrap();
        let p = perm::random(7, &mut r);
        for a in 0..7 {
            for b in 0..7 {
                let mut q = p.clone();
                q.swap(a, b);
                let expect = qap.cost(&q) - qap.cost(&p);
                assert!((qap.swap_delta(&p, a, b) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn relaxed_cost_agrees_on_permutation_matrices() {
        let mut r = rng::seeded(3);
        let qap = FactorizedQap::from_factors(random_sym(5, &mut r), random_sym(5, &mut r), 2.0, 1.0).unwrap();
        let p = perm::random(5, &mut r);
        let pm = Array2::from_shape_fn((5, 5), |(i, j)| if p[i] == j { 1.0 } else { 0.0 });
        assert!((qap.relaxed_cost(pm.view()) - qap.cost(&p)).abs() < 1e-12);
    }

    /// `sum_ik A_ik B_{p(i) p(k)}` summed directly.
    fn direct(a: &Array2<f64>, b: &Array2<f64>, p: &[usize]) -> f64 {
        let n = p.len();
        (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| a[[i, k]] * b[[p[i], p[k]]]).sum()
    }

    #[test]
    fn asymmetric_factors_keep_their_objective() {
        let mut r = rng::seeded(8);
        let a = Array2::from_shape_fn((6, 6), |_| r.random_range(-1.0..1.0));
        let b = Array2::from_shape_fn((6, 6), |_| r.random_range(-1.0..1.0));
        for qap in [
            FactorizedQap::from_factors(a.clone(), b.clone(), 1.0, 0.0).unwrap(),
            FactorizedQap::balanced(a.clone(), b.clone(), 1.0, 0.0).unwrap(),
        ] {
            assert!(!qap.is_symmetric());
            for _ in 0..10 {
                let p = perm::random(6, &mut r);
                assert!((qap.distortion_of(&p) - direct(&a, &b, &p)).abs() < 1e-10);
                for x in 0..6 {
                    for y in 0..6 {
                        let mut q = p.clone();
                        q.swap(x, y);
                        let expect = qap.cost(&q) - qap.cost(&p);
                        assert!((qap.swap_delta(&p, x, y) - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn nearly_symmetric_factors_are_symmetrized() {
        let mut a = Array2::<f64>::eye(3);
        a[[0, 1]] = 1e-9;
        let qap = FactorizedQap::from_factors(a, Array2::eye(3), 1.0, 0.0).unwrap();
        assert!(qap.is_symmetric());
        assert_eq!(qap.c1()[[0, 1]], qap.c1()[[1, 0]]);
    }
}
