use std::time::Instant;

use super::{FactorizedQap, HistoryEntry, QapSolveReport};
use crate::error::{Error, Result};

/// Largest size accepted by [`solve_enumeration`] (12! ≈ 4.8e8 leaves).
pub const MAX_ENUMERATION_SIZE: usize = 12;

/// Exact optimum by depth-first enumeration of all permutations in
/// lexicographic order.
///
/// Because both factors are nonnegative the partial cost of a prefix never
/// decreases, so prefixes already at or above the incumbent are cut. Among
/// equal-cost optima the lexicographically smallest is returned.
pub fn solve_enumeration(qap: &FactorizedQap) -> Result<QapSolveReport> {
    let n = qap.n();
    if n > MAX_ENUMERATION_SIZE {
        return Err(Error::TooLarge(format!(
            "enumeration is limited to N <= {MAX_ENUMERATION_SIZE}, got {n}"
        )));
    }
    let start = Instant::now();
    let mut search = Search {
        n,
        c1: qap.c1().iter().copied().collect(),
        c2: qap.c2().iter().copied().collect(),
        a: qap.a().iter().copied().collect(),
        b: qap.b().iter().copied().collect(),
        perm: vec![0; n],
        used: vec![false; n],
        best: f64::INFINITY,
        best_perm: (0..n).collect(),
    };
    search.descend(0, 0.0);

    let best_perm = search.best_perm;
    let qap_cost = qap.cost(&best_perm);
    Ok(QapSolveReport {
        solver: "enumeration".into(),
        primal_cost: qap.to_distortion(qap_cost),
        dual_bound: qap.to_distortion(qap_cost),
        qap_primal: qap_cost,
        qap_dual: qap_cost,
        primal_perm: best_perm,
        iterations: 1,
        converged: true,
        wall_time: start.elapsed().as_secs_f64(),
        history: vec![HistoryEntry { iteration: 0, qap_dual: qap_cost, qap_primal: qap_cost }],
        config: None,
    })
}

struct Search {
    n: usize,
    c1: Vec<f64>,
    c2: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    perm: Vec<usize>,
    used: Vec<bool>,
    best: f64,
    best_perm: Vec<usize>,
}

impl Search {
    fn descend(&mut self, depth: usize, partial: f64) {
        let n = self.n;
        if depth == n {
            if partial < self.best {
                self.best = partial;
                self.best_perm.copy_from_slice(&self.perm);
            }
            return;
        }
        let row1 = depth * n;
        for j in 0..n {
            if self.used[j] {
                continue;
            }
            let row2 = j * n;
            // tensor entries are nonnegative, so partial sums only grow
            let mut inc = self.c1[row1 + depth] * self.c2[row2 + j] + self.a[row1 + depth] + self.b[row2 + j];
            for k in 0..depth {
                let l = self.perm[k];
                let (col1, col2) = (k * n + depth, l * n + j);
                inc += self.c1[row1 + k] * self.c2[row2 + l]
                    + self.c1[col1] * self.c2[col2]
                    + self.a[row1 + k]
                    + self.a[col1]
                    + self.b[row2 + l]
                    + self.b[col2];
            }
            let next = partial + inc;
            if next >= self.best {
                continue;
            }
            self.used[j] = true;
            self.perm[depth] = j;
            self.descend(depth + 1, next);
            self.used[j] = false;
        }
    }
}
