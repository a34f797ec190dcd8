use rand::Rng;

use super::{check_points, label_means, sq_dist, Algorithm, ClusterResult};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, sample_categorical};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no centroid moves further than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

fn plus_plus_init<R: Rng>(x: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut centroids = vec![x[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let idx = sample_categorical(rng, &d2).unwrap_or_else(|| rng.random_range(0..n));
        let c = x[idx].clone();
        for (d, p) in d2.iter_mut().zip(x) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(x: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, l) in x.iter().zip(labels.iter_mut()) {
        let (best, dist) = centroids
            .iter()
            .enumerate()
            .map(|(j, c)| (j, sq_dist(p, c)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        *l = best;
        inertia += dist;
    }
    inertia
}

/// k-means with k-means++ seeding and Lloyd iterations.
///
/// An empty cluster is reseeded with the point farthest from its current
/// centroid (taken from a cluster with more than one member). The inertia
/// after every assignment step is kept in `trace`.
pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, opts: &KMeansOptions) -> Result<ClusterResult> {
    check_points(x)?;
    if k < 1 || x.len() < k {
        return Err(Error::InvalidInput(format!(
            "k-means needs 1 <= k <= n (k={k}, n={})",
            x.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let mut labels = vec![0usize; x.len()];
    let mut trace = Vec::new();
    for _ in 0..opts.max_iter.max(1) {
        let mut inertia = assign(x, &centroids, &mut labels);
        // reseed empty clusters
        loop {
            let mut sizes = vec![0usize; k];
            labels.iter().for_each(|&l| sizes[l] += 1);
            let Some(empty) = sizes.iter().position(|&s| s == 0) else {
                break;
            };
            let far = (0..x.len())
                .filter(|&i| sizes[labels[i]] > 1)
                .map(|i| (i, sq_dist(&x[i], &centroids[labels[i]])))
                .fold(None::<(usize, f64)>, |acc, cur| match acc {
                    Some(a) if a.1 >= cur.1 => Some(a),
                    _ => Some(cur),
                });
            let Some((idx, d)) = far else { break };
            inertia -= d;
            labels[idx] = empty;
            centroids[empty] = x[idx].clone();
        }
        trace.push(inertia);
        let means = label_means(x, &labels, k);
        let mut shift = 0.0f64;
        for (c, m) in centroids.iter_mut().zip(means) {
            if !m.is_empty() {
                shift = shift.max(sq_dist(c, &m).sqrt());
                *c = m;
            }
        }
        if shift < opts.tol {
            break;
        }
    }
    Ok(ClusterResult {
        algorithm: Algorithm::Kmeans,
        k,
        labels,
        centroids,
        silhouette: None,
        seed,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pairs() {
        let x = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![10.0, 0.0], vec![10.1, 0.0]];
        let r = kmeans(&x, 2, 3, &KMeansOptions::default()).unwrap();
        let mut c = r.centroids.clone();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((c[0][0] - 0.05).abs() < 1e-12 && c[0][1].abs() < 1e-12);
        assert!((c[1][0] - 10.05).abs() < 1e-12);
        assert_eq!(r.labels[0], r.labels[1]);
        assert_ne!(r.labels[0], r.labels[2]);
    }

    #[test]
    fn k_equals_n() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 1.5, (i * i) as f64]).collect();
        let r = kmeans(&x, 6, 1, &KMeansOptions::default()).unwrap();
        assert_eq!(*r.trace.last().unwrap(), 0.0);
        let mut l = r.labels.clone();
        l.sort_unstable();
        l.dedup();
        assert_eq!(l.len(), 6);
    }

    #[test]
    fn too_few_points() {
        assert!(kmeans(&[vec![1.0]], 2, 0, &KMeansOptions::default()).is_err());
    }

    #[test]
    fn identical_points_still_partition() {
        let x = vec![vec![1.0, 1.0]; 5];
        let r = kmeans(&x, 2, 0, &KMeansOptions::default()).unwrap();
        assert_eq!(r.labels.len(), 5);
        assert!(r.labels.iter().all(|&l| l < 2));
    }
}
