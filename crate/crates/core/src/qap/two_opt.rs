use super::FactorizedQap;

/// Best-improvement pairwise swaps until no swap lowers the cost by more
/// than round-off.
pub fn solve_2opt(qap: &FactorizedQap, mut perm: Vec<usize>) -> Vec<usize> {
    let n = qap.n();
    let scale = qap.cost(&perm).abs().max(1.0);
    let threshold = -1e-12 * scale;
    loop {
        let mut best = (threshold, 0, 0);
        for r in 0..n {
            for s in r + 1..n {
                let delta = qap.swap_delta(&perm, r, s);
                if delta < best.0 {
                    best = (delta, r, s);
                }
            }
        }
        if best.0 >= threshold {
            return perm;
        }
        perm.swap(best.1, best.2);
    }
}
