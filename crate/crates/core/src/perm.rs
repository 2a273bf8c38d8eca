//! Permutation helpers. A permutation is a `Vec<usize>` mapping `i -> perm[i]`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

pub fn validate(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} but problem size is {n}",
            perm.len()
        )));
    }
    if !is_permutation(perm) {
        return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
    }
    Ok(())
}

pub fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p = identity(n);
    p.shuffle(rng);
    p
}

/// Permutation that fixes everything except `moved` uniformly chosen
/// positions, which are shuffled uniformly among themselves.
///
/// The chosen positions are a prefix of one uniform ordering, so generators
/// in the same state yield nested sets for growing `moved`.
pub fn partial_shuffle<R: Rng + ?Sized>(n: usize, moved: usize, rng: &mut R) -> Vec<usize> {
    let mut perm = identity(n);
    let moved = moved.min(n);
    if moved < 2 {
        return perm;
    }
    let order = random(n, rng);
    let chosen = &order[..moved];
    let mut targets = chosen.to_vec();
    targets.shuffle(rng);
    for (&src, &dst) in chosen.iter().zip(&targets) {
        perm[src] = dst;
    }
    perm
}

/// Number of fixed points shared with `other`, i.e. `#{i : a[i] == b[i]}`.
pub fn agreement(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x == y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn partial_shuffle_moves_only_chosen() {
        let mut r = rng::seeded(3);
        for moved in 0..=10 {
            let p = partial_shuffle(10, moved, &mut r);
            assert!(is_permutation(&p));
            let displaced = p.iter().enumerate().filter(|(i, &x)| *i != x).count();
            assert!(displaced <= moved);
        }
        assert_eq!(partial_shuffle(10, 1, &mut r), identity(10));
    }

    #[test]
    fn inverse_roundtrip() {
        let mut r = rng::seeded(1);
        let p = random(17, &mut r);
        let q = inverse(&p);
        for i in 0..17 {
            assert_eq!(q[p[i]], i);
        }
    }

    #[test]
    fn validate_rejects_duplicates() {
        assert!(validate(&[0, 0, 1], 3).is_err());
        assert!(validate(&[0, 1], 3).is_err());
        assert!(validate(&[2, 0, 1], 3).is_ok());
    }
}
