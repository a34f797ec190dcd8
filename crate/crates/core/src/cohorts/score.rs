use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{check_points, sq_dist};
use crate::error::{Error, Result};

/// Mean silhouette coefficient with Euclidean distances.
///
/// Points in singleton clusters score 0. A point with `a = b = 0` also scores 0.
pub fn silhouette(x: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_points(x)?;
    if labels.len() != x.len() {
        return Err(Error::InvalidInput("labels and points differ in length".into()));
    }
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::Degenerate("silhouette needs at least two clusters".into()));
    }
    let slot: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(s, &l)| (l, s)).collect();
    let lab: Vec<usize> = labels.iter().map(|l| slot[l]).collect();
    let mut sizes = vec![0usize; ids.len()];
    lab.iter().for_each(|&l| sizes[l] += 1);

    let total: f64 = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let own = lab[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; ids.len()];
            for (j, p) in x.iter().enumerate() {
                if j != i {
                    sums[lab[j]] += sq_dist(&x[i], p).sqrt();
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = sums
                .iter()
                .zip(&sizes)
                .enumerate()
                .filter(|(c, _)| *c != own)
                .map(|(_, (s, &n))| s / n as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / x.len() as f64)
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
/// Identical trivial partitions (one cluster each, or all singletons) score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("labelings differ in length".into()));
    }
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ra: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rb: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let total = choose2(a.len());
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_pairs() {
        let x: Vec<Vec<f64>> = [0.0, 0.1, 10.0, 10.1].iter().map(|&v| vec![v]).collect();
        let s = silhouette(&x, &[0, 0, 1, 1]).unwrap();
        // hand computation: a = 0.1, b = 10.05 or 9.95 depending on the point
        let oracle = [
            (10.05 - 0.1) / 10.05,
            (9.95 - 0.1) / 9.95,
            (9.95 - 0.1) / 9.95,
            (10.05 - 0.1) / 10.05,
        ]
        .iter()
        .sum::<f64>()
            / 4.0;
        assert!((s - oracle).abs() < 1e-12);
        assert!((s - 0.990).abs() < 0.001);
    }

    #[test]
    fn duplicated_points() {
        let x = vec![vec![0.0], vec![0.0], vec![10.0], vec![10.0]];
        assert_eq!(silhouette(&x, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn singletons_and_single_cluster() {
        let x = vec![vec![0.0], vec![1.0], vec![5.0]];
        assert!(silhouette(&x, &[0, 0, 0]).is_err());
        assert_eq!(silhouette(&x, &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn ari_basics() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!((v - -0.5).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
    }
}
