//! Exact linear assignment between collections of measures with ground cost
//! W2, solved by the Hungarian algorithm with shortest augmenting paths.

use rayon::prelude::*;

use crate::measures::DiscreteMeasure;
use crate::transport::{w2_1d, w2_exact};
use crate::{Error, Result};

/// Minimum-cost perfect matching of a square cost matrix (row-major).
/// Returns the assignment row -> column and the total cost.
pub fn hungarian(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n);
    // potentials over rows and columns; job[w] = row assigned to column w,
    // with a virtual column n used as the starting slot
    let mut job = vec![usize::MAX; n + 1];
    let mut ys = vec![0.0; n];
    let mut yt = vec![0.0; n + 1];
    for row in 0..n {
        let mut w_cur = n;
        job[w_cur] = row;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prv = vec![usize::MAX; n + 1];
        let mut in_z = vec![false; n + 1];
        while job[w_cur] != usize::MAX {
            in_z[w_cur] = true;
            let r = job[w_cur];
            let mut delta = f64::INFINITY;
            let mut w_next = 0;
            for w in 0..n {
                if !in_z[w] {
                    let diff = cost[r * n + w] - ys[r] - yt[w];
                    if diff < min_to[w] {
                        min_to[w] = diff;
                        prv[w] = w_cur;
                    }
                    if min_to[w] < delta {
                        delta = min_to[w];
                        w_next = w;
                    }
                }
            }
            for w in 0..=n {
                if in_z[w] {
                    ys[job[w]] += delta;
                    yt[w] -= delta;
                } else {
                    min_to[w] -= delta;
                }
            }
            w_cur = w_next;
        }
        // augment along the alternating path
        while w_cur != n {
            let w_prev = prv[w_cur];
            job[w_cur] = job[w_prev];
            w_cur = w_prev;
        }
    }
    let mut assignment = vec![0; n];
    let mut total = 0.0;
    for w in 0..n {
        let r = job[w];
        assignment[r] = w;
        total += cost[r * n + w];
    }
    (assignment, total)
}

/// Optimal matching distance between two equal-length collections:
/// `(1/n) min_sigma sum_i W2(nu_i, eta_sigma(i))` (W2, not squared), with an
/// optimal permutation. The pairwise W2 matrix is filled in parallel.
pub fn assignment_distance(
    nus: &[DiscreteMeasure],
    etas: &[DiscreteMeasure],
) -> Result<(f64, Vec<usize>)> {
    if nus.len() != etas.len() {
        return Err(Error::LengthMismatch(nus.len(), etas.len()));
    }
    let n = nus.len();
    if n == 0 {
        return Err(Error::InvalidMeasure("empty collections".into()));
    }
    let cost: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let (mu, nu) = (&nus[i], &etas[j]);
            let w2_sq = if mu.dim() == 1 && nu.dim() == 1 {
                w2_1d(mu, nu)
            } else {
                w2_exact(mu, nu).map(|c| c.cost)
            }?;
            Ok(w2_sq.max(0.0).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (assignment, total) = hungarian(&cost, n);
    Ok((total / n as f64, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hungarian_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (assign, total) = hungarian(&cost, 3);
        assert_eq!(total, 5.0);
        assert_eq!(assign, vec![1, 0, 2]);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let cost: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            let (_, total) = hungarian(&cost, n);
            let best = (0..n)
                .permutations(n)
                .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert!((total - best).abs() < 1e-12, "{total} vs {best}");
        }
    }

    fn random_measure(rng: &mut ChaCha8Rng) -> DiscreteMeasure {
        let m = rng.gen_range(1..=5);
        let points: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.gen::<f64>()]).collect();
        DiscreteMeasure::uniform_on(points).unwrap()
    }

    #[test]
    fn single_pair_is_w2() {
        let a = DiscreteMeasure::dirac(vec![0.0]);
        let b = DiscreteMeasure::dirac(vec![0.5]);
        let (val, perm) = assignment_distance(&[a.clone()], &[b.clone()]).unwrap();
        assert_eq!(perm, vec![0]);
        assert!((val - 0.5).abs() < 1e-12);
    }

    #[test]
    fn permuted_collection_has_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let nus: Vec<_> = (0..5).map(|_| random_measure(&mut rng)).collect();
        let etas = vec![nus[3].clone(), nus[0].clone(), nus[4].clone(), nus[1].clone(), nus[2].clone()];
        let (val, _) = assignment_distance(&nus, &etas).unwrap();
        assert!(val < 1e-12);
    }

    #[test]
    fn matches_exhaustive_enumeration_n5() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let nus: Vec<_> = (0..5).map(|_| random_measure(&mut rng)).collect();
            let etas: Vec<_> = (0..5).map(|_| random_measure(&mut rng)).collect();
            let (val, _) = assignment_distance(&nus, &etas).unwrap();
            let best = (0..5)
                .permutations(5)
                .map(|p| {
                    p.iter()
                        .enumerate()
                        .map(|(i, &j)| w2_1d(&nus[i], &etas[j]).unwrap().sqrt())
                        .sum::<f64>()
                        / 5.0
                })
                .fold(f64::INFINITY, f64::min);
            assert!((val - best).abs() < 1e-10);
        }
    }

    #[test]
    fn invariant_under_input_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let nus: Vec<_> = (0..4).map(|_| random_measure(&mut rng)).collect();
        let etas: Vec<_> = (0..4).map(|_| random_measure(&mut rng)).collect();
        let (v1, _) = assignment_distance(&nus, &etas).unwrap();
        let shuffled = vec![nus[2].clone(), nus[0].clone(), nus[3].clone(), nus[1].clone()];
        let (v2, _) = assignment_distance(&shuffled, &etas).unwrap();
        assert!((v1 - v2).abs() < 1e-12);
    }
}
