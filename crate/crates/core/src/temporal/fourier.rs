use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fit::{Family, FitMethod, FitResult};
use crate::error::{Error, Result};
use crate::stats::f_test_pvalue;

/// Truncated Fourier series `a0 + Σ (a_n sin 2πnt/T + b_n cos 2πnt/T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierModel {
    /// Fundamental period, hours.
    pub period: f64,
    pub a0: f64,
    /// `(sin, cos)` coefficient pairs for harmonics `1..=k`.
    pub coefficients: Vec<(f64, f64)>,
}

impl FourierModel {
    pub fn harmonics(&self) -> usize {
        self.coefficients.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval_fourier(self, t)
    }
}

/// Reference 24 h, three-harmonic fit of hourly session shares (percent units).
pub const REFERENCE_DAILY_RHYTHM: FourierCoefficients = FourierCoefficients {
    a0: 4.1667,
    sin: [-1.6089, -1.1159, -0.4184],
    cos: [-1.7887, -0.5976, -0.0467],
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierCoefficients {
    pub a0: f64,
    pub sin: [f64; 3],
    pub cos: [f64; 3],
}

impl FourierCoefficients {
    pub fn model(&self) -> FourierModel {
        FourierModel {
            period: 24.0,
            a0: self.a0,
            coefficients: self.sin.iter().zip(&self.cos).map(|(&s, &c)| (s, c)).collect(),
        }
    }
}

pub fn eval_fourier(model: &FourierModel, t: f64) -> f64 {
    let phase = t.rem_euclid(model.period) / model.period;
    let mut y = model.a0;
    for (i, (a, b)) in model.coefficients.iter().enumerate() {
        let w = 2.0 * PI * (i + 1) as f64 * phase;
        y += a * w.sin() + b * w.cos();
    }
    y
}

fn basis_row(t: f64, period: f64, k: usize) -> Vec<f64> {
    let phase = t.rem_euclid(period) / period;
    let mut row = Vec::with_capacity(2 * k + 1);
    row.push(1.0);
    for n in 1..=k {
        let w = 2.0 * PI * n as f64 * phase;
        row.push(w.sin());
        row.push(w.cos());
    }
    row
}

/// Least squares via Householder QR. Returns `None` if the design is rank deficient.
fn qr_least_squares(mut a: Vec<Vec<f64>>, mut y: Vec<f64>) -> Option<Vec<f64>> {
    let m = a.len();
    let p = a[0].len();
    let mut diag = vec![0.0; p];
    for j in 0..p {
        let norm = (j..m).map(|i| a[i][j] * a[i][j]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..m).map(|i| a[i][j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in j..p {
                let dot: f64 = (j..m).map(|i| v[i - j] * a[i][c]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..m {
                    a[i][c] -= f * v[i - j];
                }
            }
            let dot: f64 = (j..m).map(|i| v[i - j] * y[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                y[i] -= f * v[i - j];
            }
        }
        diag[j] = a[j][j];
    }
    let scale = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= 1e-10 * scale) {
        return None;
    }
    let mut beta = vec![0.0; p];
    for j in (0..p).rev() {
        let s: f64 = ((j + 1)..p).map(|c| a[j][c] * beta[c]).sum();
        beta[j] = (y[j] - s) / a[j][j];
    }
    Some(beta)
}

/// Ordinary least-squares fit of a `k`-harmonic series with period `period` to `(t, y)` pairs.
///
/// The quality block carries R², the regression F statistic with
/// `(2k, n - 2k - 1)` degrees of freedom and its upper-tail p-value.
pub fn fit_fourier(t: &[f64], y: &[f64], period: f64, k: usize) -> Result<(FourierModel, FitResult)> {
    if t.len() != y.len() {
        return Err(Error::InvalidInput("fourier: t and y lengths differ".into()));
    }
    if !(period > 0.0) || k == 0 {
        return Err(Error::InvalidInput(format!(
            "fourier: need period > 0 and k >= 1 (got {period}, {k})"
        )));
    }
    let n = t.len();
    let p = 2 * k + 1;
    if n < p + 1 {
        return Err(Error::InsufficientData(format!(
            "fourier with k={k} needs at least {} points, got {n}",
            p + 1
        )));
    }
    let design: Vec<Vec<f64>> = t.iter().map(|&ti| basis_row(ti, period, k)).collect();
    let beta = qr_least_squares(design.clone(), y.to_vec()).ok_or_else(|| {
        Error::Degenerate(format!(
            "fourier design is rank deficient (fewer than {p} distinct phases)"
        ))
    })?;
    let model = FourierModel {
        period,
        a0: beta[0],
        coefficients: (0..k).map(|i| (beta[1 + 2 * i], beta[2 + 2 * i])).collect(),
    };
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (row, &yi) in design.iter().zip(y) {
        let fitted: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        ss_res += (yi - fitted) * (yi - fitted);
        ss_tot += (yi - y_mean) * (yi - y_mean);
    }
    let d1 = (2 * k) as f64;
    let d2 = (n - p) as f64;
    let (r2, fstat, pvalue) = if ss_tot <= f64::EPSILON * f64::EPSILON * n as f64 {
        (1.0, None, None)
    } else {
        let r2 = 1.0 - ss_res / ss_tot;
        let f = ((ss_tot - ss_res) / d1) / (ss_res / d2);
        let p = f_test_pvalue(f, d1, d2);
        (r2, f.is_finite().then_some(f), Some(p))
    };
    let mut params = std::collections::BTreeMap::new();
    params.insert("period".to_string(), period);
    params.insert("a0".to_string(), model.a0);
    for (i, (a, b)) in model.coefficients.iter().enumerate() {
        params.insert(format!("sin{}", i + 1), *a);
        params.insert(format!("cos{}", i + 1), *b);
    }
    let result = FitResult {
        family: Family::Fourier,
        method: FitMethod::Logls,
        params,
        r2: Some(r2),
        fstat,
        pvalue,
        n,
    };
    Ok((model, result))
}
