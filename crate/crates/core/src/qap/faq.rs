//! Fast approximate QAP: Frank-Wolfe on the doubly stochastic relaxation,
//! followed by projection onto the nearest permutation.

use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FactorizedQap, HistoryEntry, QapSolveReport};
use crate::error::Result;
use crate::lap::solve_lap_jv;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaqConfig {
    pub max_iters: usize,
    /// Stop when the relaxed objective changes by less than this fraction.
    pub tol: f64,
    pub sinkhorn_rounds: usize,
}

impl Default for FaqConfig {
    fn default() -> Self {
        Self { max_iters: 30, tol: 1e-6, sinkhorn_rounds: 10 }
    }
}

/// Frank-Wolfe from a given doubly stochastic start; returns the projected
/// permutation.
pub fn faq_from_start(qap: &FactorizedQap, start: Array2<f64>, cfg: &FaqConfig) -> Vec<usize> {
    let c1 = qap.c1();
    let c2 = qap.c2();
    let mut p = start;
    let mut value = qap.relaxed_cost(p.view());
    for _ in 0..cfg.max_iters {
        let grad = if qap.is_symmetric() {
            2.0 * c1.dot(&p).dot(&c2)
        } else {
            c1.dot(&p).dot(&c2.t()) + c1.t().dot(&p).dot(&c2)
        };
        let q = lap_perm(&grad);
        let d = Array2::from_shape_fn(p.dim(), |(i, j)| if q[i] == j { 1.0 } else { 0.0 }) - &p;
        let a = (&c1 * &d.dot(&c2).dot(&d.t())).sum();
        let b = (&grad * &d).sum();
        // f(P + tD) = f + b t + a t^2 on [0, 1]
        let t = if a > 0.0 {
            (-b / (2.0 * a)).clamp(0.0, 1.0)
        } else if a + b < 0.0 {
            1.0
        } else {
            0.0
        };
        if t == 0.0 {
            break;
        }
        p.scaled_add(t, &d);
        let next = value + b * t + a * t * t;
        let change = (value - next).abs();
        value = next;
        if change <= cfg.tol * value.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    lap_perm(&p.mapv(|v| -v))
}

fn lap_perm(cost: &Array2<f64>) -> Vec<usize> {
    solve_lap_jv(cost.view()).expect("finite square matrix").assignment
}

/// Start for restart `seed_index`: the barycenter for 0, a Sinkhorn-balanced
/// random positive matrix otherwise.
pub(crate) fn start_matrix(n: usize, seed: u64, seed_index: u64, rounds: usize) -> Array2<f64> {
    if seed_index == 0 {
        return Array2::from_elem((n, n), 1.0 / n as f64);
    }
    let mut r = rng::substream(seed, seed_index);
    let mut m = Array2::from_shape_fn((n, n), |_| r.random::<f64>() + 1e-3);
    for _ in 0..rounds {
        for mut row in m.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        for mut col in m.columns_mut() {
            let s = col.sum();
            col /= s;
        }
    }
    m
}

/// FAQ from the barycenter.
pub fn solve_faq(qap: &FactorizedQap, cfg: &FaqConfig) -> Result<QapSolveReport> {
    let start = Instant::now();
    let n = qap.n();
    let perm = faq_from_start(qap, start_matrix(n, 0, 0, cfg.sinkhorn_rounds), cfg);
    let cost = qap.cost(&perm);
    Ok(QapSolveReport {
        solver: "faq".into(),
        primal_cost: qap.to_distortion(cost),
        dual_bound: f64::NEG_INFINITY,
        qap_primal: cost,
        qap_dual: f64::NEG_INFINITY,
        primal_perm: perm,
        iterations: 1,
        converged: false,
        wall_time: start.elapsed().as_secs_f64(),
        history: vec![HistoryEntry { iteration: 0, qap_dual: f64::NEG_INFINITY, qap_primal: cost }],
        config: serde_json::to_value(cfg).ok(),
    })
}
