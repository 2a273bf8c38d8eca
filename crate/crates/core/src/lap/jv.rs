use super::LapSolution;

const NONE: usize = usize::MAX;

/// Reusable buffers for the shortest augmenting path solver.
///
/// Initialization is the Jonker-Volgenant column reduction; each free row is
/// then augmented along a Dijkstra shortest path in reduced costs. Ties in the
/// path search go to the lowest column index, where values closer than a
/// tolerance of `1e-13 * max|C|` count as tied so that round-off does not change
/// which dual solution is produced.
#[derive(Debug, Default)]
pub struct JvSolver {
    shortest: Vec<f64>,
    path: Vec<usize>,
    row4col: Vec<usize>,
    scanned_rows: Vec<bool>,
    scanned_cols: Vec<bool>,
    remaining: Vec<usize>,
    visited_rows: Vec<usize>,
}

impl JvSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves the `n x n` row-major problem `cost` into `out`. The costs must
    /// be finite.
    pub fn solve(&mut self, cost: &[f64], n: usize, out: &mut LapSolution) {
        debug_assert_eq!(cost.len(), n * n);
        out.assignment.clear();
        out.assignment.resize(n, NONE);
        out.u.clear();
        out.u.resize(n, 0.0);
        out.v.clear();
        out.v.resize(n, 0.0);
        out.epsilon = 0.0;
        if n == 0 {
            out.objective = 0.0;
            return;
        }

        let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let tie = 1e-13 * scale.max(1e-300);

        let col4row = &mut out.assignment;
        let u = &mut out.u;
        let v = &mut out.v;

        self.row4col.clear();
        self.row4col.resize(n, NONE);
        self.shortest.resize(n, 0.0);
        self.path.resize(n, NONE);
        self.scanned_rows.resize(n, false);
        self.scanned_cols.resize(n, false);

        // column reduction: v_j = min_i C_ij, keeps every reduced cost >= 0
        for j in 0..n {
            let mut best = cost[j];
            for i in 1..n {
                best = best.min(cost[i * n + j]);
            }
            v[j] = best;
        }

        for cur_row in 0..n {
            self.remaining.clear();
            self.remaining.extend(0..n);
            self.visited_rows.clear();
            for j in 0..n {
                self.shortest[j] = f64::INFINITY;
                self.path[j] = NONE;
                self.scanned_cols[j] = false;
            }
            for i in 0..n {
                self.scanned_rows[i] = false;
            }

            let mut min_val = 0.0;
            let mut i = cur_row;
            let sink;
            loop {
                self.scanned_rows[i] = true;
                self.visited_rows.push(i);
                let row = &cost[i * n..(i + 1) * n];
                let ui = u[i];
                let mut lowest = f64::INFINITY;
                let mut pick = NONE;
                for (pos, &j) in self.remaining.iter().enumerate() {
                    let r = min_val + row[j] - ui - v[j];
                    if r < self.shortest[j] - tie {
                        self.path[j] = i;
                        self.shortest[j] = r;
                    }
                    if self.shortest[j] < lowest - tie {
                        lowest = self.shortest[j];
                        pick = pos;
                    }
                }
                debug_assert!(pick != NONE, "dense problem always has a path");
                min_val = lowest;
                // keep `remaining` sorted so ties resolve to the lowest column
                let j = self.remaining.remove(pick);
                self.scanned_cols[j] = true;
                if self.row4col[j] == NONE {
                    sink = j;
                    break;
                }
                i = self.row4col[j];
            }

            u[cur_row] += min_val;
            for &r in &self.visited_rows {
                if r != cur_row {
                    u[r] += min_val - self.shortest[col4row[r]];
                }
            }
            for j in 0..n {
                if self.scanned_cols[j] {
                    v[j] -= min_val - self.shortest[j];
                }
            }

            let mut j = sink;
            loop {
                let r = self.path[j];
                self.row4col[j] = r;
                let prev = col4row[r];
                col4row[r] = j;
                if r == cur_row {
                    break;
                }
                j = prev;
            }
        }

        out.objective = (0..n).map(|i| cost[i * n + out.assignment[i]]).sum();
    }
}
