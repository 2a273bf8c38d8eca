//! Entropic Gromov-Wasserstein: mirror descent where each step is a
//! log-domain Sinkhorn projection of the linearized loss.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{HistoryEntry, QapSolveReport};
use crate::error::{Error, Result};
use crate::kernels::{distortion_unchecked, DistortionSpec, SimilarityMatrix};
use crate::lap::solve_lap_jv;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntropicGwConfig {
    /// Regularization; `None` picks `0.05 * median |G|` at the uniform coupling.
    pub epsilon: Option<f64>,
    pub outer_iters: usize,
    pub sinkhorn_iters: usize,
    pub sinkhorn_tol: f64,
    /// Stop the outer loop when no coupling entry moves by more than this.
    pub outer_tol: f64,
}

impl Default for EntropicGwConfig {
    fn default() -> Self {
        Self { epsilon: None, outer_iters: 50, sinkhorn_iters: 500, sinkhorn_tol: 1e-9, outer_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropicGwResult {
    /// Coupling with uniform marginals `1/N`.
    pub coupling: Array2<f64>,
    pub perm: Vec<usize>,
    /// `sum l(X_ik, Y_jl) T_ij T_kl` of the final coupling.
    pub transport_objective: f64,
    /// Distortion of the rounded permutation.
    pub distortion: f64,
    pub epsilon: f64,
    pub outer_iters: usize,
    /// False if any Sinkhorn projection hit its iteration cap.
    pub sinkhorn_converged: bool,
    pub wall_time: f64,
}

impl EntropicGwResult {
    pub fn to_report(&self) -> QapSolveReport {
        QapSolveReport {
            solver: "entropic_gw".into(),
            primal_perm: self.perm.clone(),
            primal_cost: self.distortion,
            dual_bound: f64::NEG_INFINITY,
            qap_primal: self.distortion,
            qap_dual: f64::NEG_INFINITY,
            iterations: self.outer_iters,
            converged: false,
            wall_time: self.wall_time,
            history: vec![HistoryEntry { iteration: 0, qap_dual: f64::NEG_INFINITY, qap_primal: self.distortion }],
            config: None,
        }
    }
}

/// `sum_{ijkl} l(X_ik, Y_jl) T_ij T_kl`, evaluated directly in `O(N^4)`.
pub fn transport_objective(
    x: &SimilarityMatrix,
    y: &SimilarityMatrix,
    spec: DistortionSpec,
    t: &Array2<f64>,
) -> Result<f64> {
    let n = x.len();
    if y.len() != n || t.dim() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "kernels {} and {} with coupling {:?}",
            n,
            y.len(),
            t.dim()
        )));
    }
    let (xv, yv) = (x.values(), y.values());
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let tij = t[[i, j]];
            if tij == 0.0 {
                continue;
            }
            for k in 0..n {
                let xik = xv[[i, k]];
                let mut acc = 0.0;
                for l in 0..n {
                    acc += spec.loss(xik, yv[[j, l]]) * t[[k, l]];
                }
                total += tij * acc;
            }
        }
    }
    Ok(total)
}

struct Linearization {
    hx: Array2<f64>,
    hy: Array2<f64>,
    constant: Array2<f64>,
}

impl Linearization {
    fn new(x: &Array2<f64>, y: &Array2<f64>, spec: DistortionSpec) -> Self {
        let n = x.nrows();
        let fx = x.mapv(|a| spec.f1(a));
        let fy = y.mapv(|b| spec.f2(b));
        let w = 1.0 / n as f64;
        let rx = fx.sum_axis(ndarray::Axis(1)) * w;
        let ry = fy.sum_axis(ndarray::Axis(1)) * w;
        let constant = Array2::from_shape_fn((n, n), |(i, j)| rx[i] + ry[j]);
        Self { hx: x.mapv(|a| spec.h1(a)), hy: y.mapv(|b| spec.h2(b)), constant }
    }

    /// `G(T)_ij = sum_kl l(X_ik, Y_jl) T_kl` for `T` with uniform marginals.
    fn at(&self, t: &Array2<f64>) -> Array2<f64> {
        &self.constant - &self.hx.dot(t).dot(&self.hy.t())
    }
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn warm-started from the potentials `f`, `h`. Returns
/// the coupling and whether the row marginal error dropped below `tol`.
fn sinkhorn(
    g: &Array2<f64>,
    eps: f64,
    iters: usize,
    tol: f64,
    f: &mut [f64],
    h: &mut [f64],
) -> (Array2<f64>, bool) {
    let n = g.nrows();
    let log_marginal = -(n as f64).ln();
    let k = g.mapv(|v| -v / eps);
    let mut converged = false;
    for _ in 0..iters {
        for i in 0..n {
            f[i] = log_marginal - logsumexp((0..n).map(|j| k[[i, j]] + h[j]));
        }
        for j in 0..n {
            h[j] = log_marginal - logsumexp((0..n).map(|i| k[[i, j]] + f[i]));
        }
        // columns are exact after the update, check rows
        let err = (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| (k[[i, j]] + f[i] + h[j]).exp()).sum();
                (row - 1.0 / n as f64).abs()
            })
            .fold(0.0, f64::max);
        if err < tol {
            converged = true;
            break;
        }
    }
    let t = Array2::from_shape_fn((n, n), |(i, j)| (k[[i, j]] + f[i] + h[j]).exp());
    (round_to_marginals(t), converged)
}

/// Projects a positive matrix onto couplings with marginals `1/N` (Altschuler,
/// Weed and Rigollet): shrink overfull rows and columns, then spread the
/// missing mass as a rank-one correction.
fn round_to_marginals(mut t: Array2<f64>) -> Array2<f64> {
    let n = t.nrows();
    let target = 1.0 / n as f64;
    for mut row in t.rows_mut() {
        let s = row.sum();
        if s > target {
            row *= target / s;
        }
    }
    for mut col in t.columns_mut() {
        let s = col.sum();
        if s > target {
            col *= target / s;
        }
    }
    let er: Vec<f64> = t.rows().into_iter().map(|r| target - r.sum()).collect();
    let ec: Vec<f64> = t.columns().into_iter().map(|c| target - c.sum()).collect();
    let mass: f64 = er.iter().sum();
    if mass > 0.0 {
        for i in 0..n {
            for j in 0..n {
                t[[i, j]] += er[i] * ec[j] / mass;
            }
        }
    }
    t
}

/// Entropic GW between two kernels, rounded to a permutation by a LAP on the
/// negated coupling.
pub fn solve_entropic_gw(
    x: &SimilarityMatrix,
    y: &SimilarityMatrix,
    spec: DistortionSpec,
    cfg: &EntropicGwConfig,
) -> Result<EntropicGwResult> {
    let start = Instant::now();
    let n = x.len();
    if y.len() != n || n == 0 {
        return Err(Error::ShapeMismatch(format!("kernels of size {n} and {}", y.len())));
    }
    let lin = Linearization::new(x.values(), y.values(), spec);
    let mut t = Array2::from_elem((n, n), 1.0 / (n * n) as f64);
    let eps = match cfg.epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::Config(format!("epsilon must be positive, got {e}"))),
        None => default_epsilon(&lin.at(&t)),
    };

    let mut f = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut all_converged = true;
    let mut outer = 0;
    for _ in 0..cfg.outer_iters {
        outer += 1;
        let (next, ok) = sinkhorn(&lin.at(&t), eps, cfg.sinkhorn_iters, cfg.sinkhorn_tol, &mut f, &mut h);
        all_converged &= ok;
        let moved = (&next - &t).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        t = next;
        if moved < cfg.outer_tol {
            break;
        }
    }

    let perm = solve_lap_jv(t.mapv(|v| -v).view())?.assignment;
    let distortion = distortion_unchecked(x.values(), y.values(), spec, &perm);
    let objective = transport_objective(x, y, spec, &t)?;
    Ok(EntropicGwResult {
        coupling: t,
        perm,
        transport_objective: objective,
        distortion,
        epsilon: eps,
        outer_iters: outer,
        sinkhorn_converged: all_converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

fn default_epsilon(g: &Array2<f64>) -> f64 {
    let mut values: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    values.sort_by(f64::total_cmp);
    let median = values[values.len() / 2];
    if median > 0.0 {
        0.05 * median
    } else {
        1e-3
    }
}
