use serde::{Deserialize, Serialize};

use super::{check_points, label_means, sq_dist, Algorithm, ClusterResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
}

/// Condensed upper-triangular distance matrix.
struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

/// Bottom-up merging with Euclidean distances until `k` clusters remain.
///
/// The closest pair is merged each round; equal distances go to the pair with
/// the smallest indices. Labels are numbered by first appearance in `x`.
pub fn agglomerative(x: &[Vec<f64>], k: usize, linkage: Linkage) -> Result<ClusterResult> {
    check_points(x)?;
    let n = x.len();
    if k < 1 || n < k {
        return Err(Error::InvalidInput(format!(
            "agglomerative needs 1 <= k <= n (k={k}, n={n})"
        )));
    }
    let mut dm = Condensed {
        n,
        d: Vec::with_capacity(n * (n - 1) / 2),
    };
    for i in 0..n {
        for j in i + 1..n {
            dm.d.push(sq_dist(&x[i], &x[j]).sqrt());
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut parent: Vec<usize> = (0..n).collect();
    // nearest active neighbour with a larger index
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];
    let recompute = |i: usize, active: &[bool], dm: &Condensed, nn: &mut [usize], nn_d: &mut [f64]| {
        nn[i] = usize::MAX;
        nn_d[i] = f64::INFINITY;
        for j in i + 1..n {
            if active[j] {
                let v = dm.get(i, j);
                if v < nn_d[i] {
                    nn_d[i] = v;
                    nn[i] = j;
                }
            }
        }
    };
    for i in 0..n {
        recompute(i, &active, &dm, &mut nn, &mut nn_d);
    }

    let mut clusters = n;
    while clusters > k {
        let mut a = usize::MAX;
        let mut best = f64::INFINITY;
        for i in 0..n {
            if active[i] && nn[i] != usize::MAX && nn_d[i] < best {
                best = nn_d[i];
                a = i;
            }
        }
        let b = nn[a];
        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for j in 0..n {
            if active[j] && j != a && j != b {
                let (da, db) = (dm.get(a, j), dm.get(b, j));
                let v = match linkage {
                    Linkage::Average => (sa * da + sb * db) / (sa + sb),
                    Linkage::Complete => da.max(db),
                };
                dm.set(a, j, v);
            }
        }
        active[b] = false;
        size[a] += size[b];
        parent[b] = a;
        clusters -= 1;

        for i in 0..n {
            if !active[i] {
                continue;
            }
            if i == a || nn[i] == a || nn[i] == b {
                recompute(i, &active, &dm, &mut nn, &mut nn_d);
            } else if i < a {
                let v = dm.get(i, a);
                if v < nn_d[i] || (v == nn_d[i] && a < nn[i]) {
                    nn_d[i] = v;
                    nn[i] = a;
                }
            }
        }
    }

    let root = |mut i: usize| {
        while parent[i] != i {
            i = parent[i];
        }
        i
    };
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let r = root(i);
            if ids[r] == usize::MAX {
                ids[r] = next;
                next += 1;
            }
            ids[r]
        })
        .collect();
    let centroids = label_means(x, &labels, k);
    Ok(ClusterResult {
        algorithm: Algorithm::Agglomerative,
        k,
        labels,
        centroids,
        silhouette: None,
        seed: 0,
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singletons_and_single() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * i as f64]).collect();
        let r = agglomerative(&x, 5, Linkage::Average).unwrap();
        assert_eq!(r.labels, vec![0, 1, 2, 3, 4]);
        let r = agglomerative(&x[..2], 1, Linkage::Complete).unwrap();
        assert_eq!(r.labels, vec![0, 0]);
    }

    #[test]
    fn ties_merge_lowest_pair_first() {
        // equally spaced: first merge is (0,1), then the average-linkage
        // distance to 2 grows, so (2,3) merges next
        let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let r = agglomerative(&x, 2, Linkage::Average).unwrap();
        assert_eq!(r.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn chain_merges() {
        let x: Vec<Vec<f64>> = [0.0, 1.0, 2.1, 3.3, 10.0].iter().map(|&v| vec![v]).collect();
        let avg = agglomerative(&x, 2, Linkage::Average).unwrap();
        assert_eq!(avg.labels, vec![0, 0, 0, 0, 1]);
        let comp = agglomerative(&x, 2, Linkage::Complete).unwrap();
        assert_eq!(comp.labels, vec![0, 0, 0, 0, 1]);
        let comp3 = agglomerative(&x, 3, Linkage::Complete).unwrap();
        assert_eq!(comp3.labels, vec![0, 0, 1, 1, 2]);
    }
}
