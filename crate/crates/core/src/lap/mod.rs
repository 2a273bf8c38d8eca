//! Dense linear assignment: an exact Jonker-Volgenant shortest augmenting
//! path solver and an approximate forward-reverse auction with ε-scaling.
//!
//! Both return the primal assignment together with dual vectors `(u, v)`
//! such that the reduced costs `C_ij - u_i - v_j` are nonnegative (up to
//! rounding). The exact solver is tight on the assignment; the auction is
//! within `epsilon` of tight.

mod auction;
mod jv;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use auction::AuctionSolver;
pub use jv::JvSolver;

/// Primal assignment plus the dual certificate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LapSolution {
    /// `assignment[i]` is the column assigned to row `i`.
    pub assignment: Vec<usize>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub objective: f64,
    /// Slack of the certificate; zero for the exact solver.
    pub epsilon: f64,
}

impl LapSolution {
    pub fn dual_objective(&self) -> f64 {
        self.u.iter().sum::<f64>() + self.v.iter().sum::<f64>()
    }

    /// Smallest reduced cost `C_ij - u_i - v_j` over all entries.
    pub fn min_reduced_cost(&self, cost: &[f64]) -> f64 {
        let n = self.u.len();
        let mut worst = f64::INFINITY;
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            for j in 0..n {
                worst = worst.min(row[j] - self.u[i] - self.v[j]);
            }
        }
        worst
    }

    /// Largest reduced cost on the assigned entries.
    pub fn max_assigned_slack(&self, cost: &[f64]) -> f64 {
        let n = self.u.len();
        (0..n)
            .map(|i| {
                let j = self.assignment[i];
                cost[i * n + j] - self.u[i] - self.v[j]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_costs(cost: &ArrayView2<'_, f64>) -> Result<usize> {
    let (rows, cols) = cost.dim();
    if rows != cols || rows == 0 {
        return Err(Error::ShapeMismatch(format!(
            "assignment costs must be square and non-empty, got {rows}x{cols}"
        )));
    }
    if let Some(index) = cost.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(rows)
}

fn flat(cost: &ArrayView2<'_, f64>) -> Vec<f64> {
    cost.iter().copied().collect()
}

/// Exact minimum-cost assignment.
pub fn solve_lap_jv(cost: ArrayView2<'_, f64>) -> Result<LapSolution> {
    let n = check_costs(&cost)?;
    let c = flat(&cost);
    let mut out = LapSolution::default();
    JvSolver::new().solve(&c, n, &mut out);
    Ok(out)
}

/// ε-optimal assignment by forward-reverse auction; the objective is within
/// `n * epsilon` of the optimum.
pub fn solve_lap_auction(cost: ArrayView2<'_, f64>, epsilon: f64) -> Result<LapSolution> {
    let n = check_costs(&cost)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::OutOfRange(format!("auction epsilon must be positive, got {epsilon}")));
    }
    let c = flat(&cost);
    let mut out = LapSolution::default();
    AuctionSolver::new().solve(&c, n, epsilon, &mut out);
    Ok(out)
}
