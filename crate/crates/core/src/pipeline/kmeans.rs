//! K-Means with K-Means++ seeding, best of several initializations.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng;

const MAX_LLOYD_ITERS: usize = 300;
const SHIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    /// `sum ||x - centroid(x)||^2`
    pub inertia: f64,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    /// Recomputes the inertia from the points, centroids and assignments.
    pub fn recompute_inertia(&self, points: ArrayView2<'_, f64>) -> f64 {
        points
            .rows()
            .into_iter()
            .zip(&self.assignments)
            .map(|(p, &c)| sq_dist(p, self.centroids.row(c)))
            .sum()
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Clusters the rows of an embedding matrix.
pub fn kmeans_pp(e: &EmbeddingMatrix, k: usize, n_init: usize, seed: u64) -> Result<ClusterModel> {
    kmeans_pp_rows(e.data().mapv(f64::from).view(), k, n_init, seed)
}

/// Best (lowest inertia, then lowest run index) of `n_init` runs of
/// K-Means++ seeding followed by Lloyd iterations. An empty cluster takes over
/// the point farthest from its centroid.
pub fn kmeans_pp_rows(points: ArrayView2<'_, f64>, k: usize, n_init: usize, seed: u64) -> Result<ClusterModel> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("k = {k} must lie in 1..={n}")));
    }
    if let Some(index) = points.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let best = (0..n_init.max(1) as u64)
        .into_par_iter()
        .map(|run| (run, single_run(points, k, &mut rng::substream(seed, run))))
        .min_by(|a, b| a.1.inertia.total_cmp(&b.1.inertia).then(a.0.cmp(&b.0)))
        .map(|(_, m)| m)
        .expect("at least one run");
    Ok(best)
}

fn seed_centroids(points: ArrayView2<'_, f64>, k: usize, r: &mut rng::Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = r.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut nearest: Vec<f64> = points.rows().into_iter().map(|p| sq_dist(p, points.row(first))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            r.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            nearest[i] = nearest[i].min(sq_dist(p, points.row(pick)));
        }
    }
    centroids
}

fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, out: &mut [usize]) {
    for (i, p) in points.rows().into_iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (c, centroid) in centroids.rows().into_iter().enumerate() {
            let d = sq_dist(p, centroid);
            if d < best.0 {
                best = (d, c);
            }
        }
        out[i] = best.1;
    }
}

fn repair_empty(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, assignments: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.nrows())
            .filter(|&i| counts[assignments[i]] > 1)
            .map(|i| (sq_dist(points.row(i), centroids.row(assignments[i])), i))
            .fold((f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 { b } else { a })
            .1;
        assignments[far] = empty;
    }
}

fn means(points: ArrayView2<'_, f64>, assignments: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (p, &a) in points.rows().into_iter().zip(assignments) {
        let mut row = sums.row_mut(a);
        row += &p;
        counts[a] += 1;
    }
    for (mut row, &c) in sums.rows_mut().into_iter().zip(&counts) {
        row /= c as f64;
    }
    sums
}

fn single_run(points: ArrayView2<'_, f64>, k: usize, r: &mut rng::Rng) -> ClusterModel {
    let mut centroids = seed_centroids(points, k, r);
    let mut assignments = vec![0; points.nrows()];
    for _ in 0..MAX_LLOYD_ITERS {
        assign(points, &centroids, &mut assignments);
        repair_empty(points, &centroids, &mut assignments, k);
        let next = means(points, &assignments, k);
        let shift = centroids
            .rows()
            .into_iter()
            .zip(next.rows())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < SHIFT_TOL {
            break;
        }
    }
    let mut model = ClusterModel { centroids, assignments, inertia: 0.0 };
    model.inertia = model.recompute_inertia(points);
    model
}
