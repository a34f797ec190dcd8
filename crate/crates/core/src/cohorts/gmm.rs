use std::f64::consts::PI;

use super::kmeans::{kmeans, KMeansOptions};
use super::{check_points, Algorithm, ClusterResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// Added to every variance in the M step.
    pub reg: f64,
    /// Relative change in log-likelihood below which EM stops.
    pub tol: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            max_iter: 200,
            reg: 1e-6,
            tol: 1e-10,
        }
    }
}

struct Params {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

/// Log of each component's (weighted) density at `p`, including the
/// `exp(-reg / 2v)` factor whose M step yields `v = s^2 + reg` exactly.
fn log_components(p: &[f64], params: &Params, reg: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let mut lp = params.weights[j].ln();
        for ((x, m), v) in p.iter().zip(&params.means[j]).zip(&params.vars[j]) {
            lp -= 0.5 * ((2.0 * PI * v).ln() + ((x - m) * (x - m) + reg) / v);
        }
        *o = lp;
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Gaussian mixture with diagonal covariances fitted by EM, initialised from
/// a k-means run with the same seed.
///
/// `trace` holds the regularised log-likelihood before every M step, which EM
/// never decreases.
pub fn gmm_em(x: &[Vec<f64>], k: usize, seed: u64, opts: &GmmOptions) -> Result<ClusterResult> {
    let d = check_points(x)?;
    if k < 1 || x.len() < k * (d + 1) {
        return Err(Error::InvalidInput(format!(
            "GMM needs n >= k(d+1) points (n={}, k={k}, d={d})",
            x.len()
        )));
    }
    let n = x.len();
    let init = kmeans(x, k, seed, &KMeansOptions::default())?;

    let global_var: Vec<f64> = (0..d)
        .map(|c| {
            let m = x.iter().map(|p| p[c]).sum::<f64>() / n as f64;
            x.iter().map(|p| (p[c] - m).powi(2)).sum::<f64>() / n as f64
        })
        .collect();
    let mut params = Params {
        weights: vec![0.0; k],
        means: init.centroids.clone(),
        vars: vec![vec![0.0; d]; k],
    };
    let mut counts = vec![0usize; k];
    for (p, &l) in x.iter().zip(&init.labels) {
        counts[l] += 1;
        for c in 0..d {
            params.vars[l][c] += (p[c] - params.means[l][c]).powi(2);
        }
    }
    for j in 0..k {
        params.weights[j] = counts[j].max(1) as f64 / n as f64;
        for c in 0..d {
            params.vars[j][c] = if counts[j] > 1 {
                params.vars[j][c] / counts[j] as f64
            } else {
                global_var[c]
            } + opts.reg;
        }
    }
    let wsum: f64 = params.weights.iter().sum();
    params.weights.iter_mut().for_each(|w| *w /= wsum);

    let mut resp = vec![vec![0.0; k]; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut buf = vec![0.0; k];
    for _ in 0..opts.max_iter.max(1) {
        // E step
        let mut ll = 0.0;
        for (p, r) in x.iter().zip(resp.iter_mut()) {
            log_components(p, &params, opts.reg, &mut buf);
            let lse = log_sum_exp(&buf);
            ll += lse;
            for (rj, b) in r.iter_mut().zip(&buf) {
                *rj = (b - lse).exp();
            }
        }
        if !ll.is_finite() {
            return Err(Error::Numerical("GMM log-likelihood is not finite".into()));
        }
        let converged = trace
            .last()
            .is_some_and(|&prev| (ll - prev).abs() <= opts.tol * ll.abs().max(1.0));
        trace.push(ll);
        if converged {
            break;
        }
        // M step
        for j in 0..k {
            let nk: f64 = resp.iter().map(|r| r[j]).sum();
            if nk < 1e-10 {
                return Err(Error::Degenerate(format!("GMM component {j} collapsed")));
            }
            params.weights[j] = nk / n as f64;
            for c in 0..d {
                let m = x.iter().zip(&resp).map(|(p, r)| r[j] * p[c]).sum::<f64>() / nk;
                let v = x.iter().zip(&resp).map(|(p, r)| r[j] * (p[c] - m).powi(2)).sum::<f64>() / nk;
                params.means[j][c] = m;
                params.vars[j][c] = v + opts.reg;
                if !(params.vars[j][c] > 0.0) || !params.vars[j][c].is_finite() {
                    return Err(Error::Degenerate(format!("GMM component {j} is singular")));
                }
            }
        }
    }

    let labels = x
        .iter()
        .map(|p| {
            log_components(p, &params, opts.reg, &mut buf);
            buf.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc },
                )
                .0
        })
        .collect();
    Ok(ClusterResult {
        algorithm: Algorithm::Gmm,
        k,
        labels,
        centroids: params.means,
        silhouette: None,
        seed,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_is_data_mean() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let r = gmm_em(&x, 1, 7, &GmmOptions::default()).unwrap();
        assert!(r.labels.iter().all(|&l| l == 0));
        assert!((r.centroids[0][0] - 9.5).abs() < 1e-12);
        assert!((r.centroids[0][1] - 19.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn log_likelihood_monotone() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![
                    (t * 0.37).sin() * 3.0 + if i % 2 == 0 { 5.0 } else { 0.0 },
                    (t * 0.11).cos(),
                ]
            })
            .collect();
        let r = gmm_em(&x, 3, 2, &GmmOptions::default()).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn too_few_points() {
        let x = vec![vec![0.0, 1.0]; 5];
        assert!(gmm_em(&x, 2, 0, &GmmOptions::default()).is_err());
    }
}
