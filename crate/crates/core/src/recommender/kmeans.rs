//! Seeded k-means with k-means++ initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::num::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans<F> {
    pub centroids: Vec<Vec<F>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

pub fn squared_distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

fn nearest<F: Scalar>(p: &[F], centroids: &[Vec<F>]) -> usize {
    let mut best = 0;
    let mut best_d = F::infinity();
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding: the first center uniformly, the rest proportional to
/// squared distance from the nearest chosen center.
fn plus_plus_init<F: Scalar>(points: &[Vec<F>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<F> = points
        .iter()
        .map(|p| squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total = d2.iter().fold(F::zero(), |a, &b| a + b);
        let next = if total > F::zero() {
            let target = F::from_f64_lossy(rng.gen::<f64>()) * total;
            let mut acc = F::zero();
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                if d <= F::zero() {
                    continue;
                }
                acc = acc + d;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| {
                d2.iter()
                    .rposition(|&d| d > F::zero())
                    .expect("positive mass")
            })
        } else {
            // Only duplicates of chosen centers remain.
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, &points[next]);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
}

/// Clusters `points` into `k` groups (`1 <= k <= points.len()`).
/// Iterates until assignments stop changing or `max_iters` is reached.
pub fn kmeans<F: Scalar>(points: &[Vec<F>], k: usize, seed: u64, max_iters: usize) -> KMeans<F> {
    assert!(k >= 1 && k <= points.len(), "k must be in 1..=n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<F>> = plus_plus_init(points, k, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let dim = points[0].len();
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![F::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, &x) in sums[a].iter_mut().zip(p) {
                *s = *s + x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let c = F::from_count(counts[j]);
                centroids[j] = sums[j].iter().map(|&s| s / c).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    KMeans {
        centroids,
        assignments,
        iterations,
    }
}
