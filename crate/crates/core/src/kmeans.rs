//! Seeded one-dimensional K-means used to discretize continuous columns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITER: usize = 100;

/// Cluster labels in `0..k`, ordered by centroid; NaN stays NaN. Columns with
/// at most `k` distinct values are labelled by rank directly.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Vec<f64> {
    let mut distinct: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= k {
        return values
            .iter()
            .map(|v| {
                if v.is_nan() {
                    f64::NAN
                } else {
                    distinct.partition_point(|d| d < v) as f64
                }
            })
            .collect();
    }
    let centroids = fit(values, k, seed);
    values
        .iter()
        .map(|&v| if v.is_nan() { f64::NAN } else { nearest(&centroids, v) as f64 })
        .collect()
}

/// Sorted centroids.
fn fit(values: &[f64], k: usize, seed: u64) -> Vec<f64> {
    let points: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            points[rng.random_range(0..points.len())]
        } else {
            let mut r = rng.random::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if r < *w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            points[pick]
        };
        centroids.push(next);
        for (d, p) in d2.iter_mut().zip(&points) {
            *d = d.min((p - next).powi(2));
        }
    }

    for _ in 0..MAX_ITER {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &p in &points {
            let c = nearest(&centroids, p);
            sums[c] += p;
            counts[c] += 1;
        }
        let mut next: Vec<f64> = (0..k)
            .map(|c| if counts[c] > 0 { sums[c] / counts[c] as f64 } else { f64::NAN })
            .collect();
        for c in 0..k {
            if next[c].is_nan() {
                // empty cluster moves to the unclaimed point nearest its old centroid
                let old = centroids[c];
                next[c] = points
                    .iter()
                    .copied()
                    .filter(|p| !next.contains(p))
                    .min_by(|a, b| (a - old).abs().total_cmp(&(b - old).abs()))
                    .unwrap_or(old);
            }
        }
        let moved = next.iter().zip(&centroids).any(|(a, b)| a != b);
        centroids = next;
        if !moved {
            break;
        }
    }
    centroids.sort_by(f64::total_cmp);
    centroids
}

fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, c) in centroids.iter().enumerate() {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = i;
        }
    }
    best
}
