use rayon::prelude::*;

use super::faq::{faq_from_start, start_matrix};
use super::{solve_2opt, FaqConfig, FactorizedQap};

/// Best of `n_seeds` FAQ restarts, each polished by 2-opt. Restarts run in
/// parallel; ties go to the lowest restart index, so the result does not
/// depend on scheduling.
pub fn primal_heuristic(qap: &FactorizedQap, n_seeds: usize, seed: u64) -> Vec<usize> {
    let n = qap.n();
    let cfg = FaqConfig::default();
    (0..n_seeds.max(1) as u64)
        .into_par_iter()
        .map(|s| {
            let p = faq_from_start(qap, start_matrix(n, seed, s, cfg.sinkhorn_rounds), &cfg);
            let p = solve_2opt(qap, p);
            (qap.cost(&p), s, p)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, p)| p)
        .unwrap_or_else(|| (0..n).collect())
}
