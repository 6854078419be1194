use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

/// Fitted reference clusters. Immutable once returned by [`kmeans_cluster`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    pub k: usize,
    pub dim: usize,
    pub seed: u64,
    /// `k` rows of length `dim`, means of the unit-normalized members.
    pub centroids: Vec<Vec<f64>>,
    /// Reference ids, aligned with `assignments`.
    pub ids: Vec<String>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every centroid update, in order.
    pub inertia_history: Vec<f64>,
}

impl CentroidSet {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lowest index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave acc just below target; fall back to the last positive weight
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // all remaining points coincide with chosen centers
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken only from clusters with more than one member.
fn repair_empty(points: &[Vec<f64>], centroids: &[Vec<f64>], assign: &mut [usize], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assign.iter() {
        sizes[a] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let a = assign[i];
            if sizes[a] <= 1 {
                continue;
            }
            let d = sq_dist(p, &centroids[a]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            sizes[assign[i]] -= 1;
            assign[i] = empty;
            sizes[empty] = 1;
        }
    }
}

fn means(points: &[Vec<f64>], assign: &[usize], k: usize, dim: usize, previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assign) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (s, c))| {
            if c == 0 {
                previous[j].clone()
            } else {
                s.into_iter().map(|x| x / c as f64).collect()
            }
        })
        .collect()
}

fn inertia(points: &[Vec<f64>], assign: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assign)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum()
}

/// Lloyd's algorithm with k-means++ seeding on unit-normalized rows.
///
/// Stops when the assignment is unchanged or after [`MAX_ITERATIONS`]
/// updates. Empty clusters are repaired after every assignment step.
pub fn kmeans_cluster(reference: &EmbeddingMatrix, k: usize, seed: u64) -> Result<CentroidSet> {
    if k == 0 {
        return Err(Error::Param("k must be at least 1".into()));
    }
    let n = reference.len();
    if k > n {
        return Err(Error::Param(format!("k = {k} exceeds the {n} reference rows")));
    }
    let points = reference.normalized_rows()?;
    let dim = reference.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_plus_plus(&points, k, &mut rng);

    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    repair_empty(&points, &centroids, &mut assign, k);

    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        centroids = means(&points, &assign, k, dim, &centroids);
        history.push(inertia(&points, &assign, &centroids));
        iterations += 1;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(&points, &centroids, &mut next, k);
        if next == assign {
            break;
        }
        assign = next;
    }
    let final_inertia = *history.last().unwrap_or(&0.0);
    Ok(CentroidSet {
        k,
        dim,
        seed,
        centroids,
        ids: reference.ids().to_vec(),
        assignments: assign,
        inertia: final_inertia,
        iterations,
        inertia_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn matrix(rows: Vec<Vec<f32>>) -> EmbeddingMatrix {
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        EmbeddingMatrix::from_rows(ids, rows).unwrap()
    }

    #[test]
    fn exact_cover_has_zero_inertia() {
        let rows: Vec<Vec<f32>> = (0..5)
            .map(|i| (0..5).map(|d| if d == i { 1.0 } else { 0.0 }).collect())
            .collect();
        let set = kmeans_cluster(&matrix(rows.clone()), 5, 11).unwrap();
        assert_eq!(set.inertia, 0.0);
        let mut got: Vec<Vec<f64>> = set.centroids.clone();
        got.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut want: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn single_cluster_is_mean() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        let set = kmeans_cluster(&matrix(rows), 1, 3).unwrap();
        let c = &set.centroids[0];
        assert!((c[0] - 0.0).abs() < 1e-15 && (c[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn k_larger_than_n_is_param_error() {
        let err = kmeans_cluster(&matrix(vec![vec![1.0, 0.0]]), 2, 0).unwrap_err();
        assert!(matches!(err, Error::Param(_)));
    }

    #[test]
    fn identical_rows_still_yield_k_nonempty_clusters() {
        let rows = vec![vec![0.5f32, 0.5]; 6];
        let set = kmeans_cluster(&matrix(rows), 3, 9).unwrap();
        assert_eq!(set.centroids.len(), 3);
        assert!(set.cluster_sizes().iter().all(|&s| s >= 1));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f32>> = (0..40)
            .map(|_| (0..6).map(|_| normal.sample(&mut rng) as f32).collect())
            .collect();
        let m = matrix(rows);
        let a = kmeans_cluster(&m, 4, 77).unwrap();
        let b = kmeans_cluster(&m, 4, 77).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for w in a.inertia_history.windows(2) {
            assert!(w[1] <= w[0], "{:?}", a.inertia_history);
        }
    }
}
