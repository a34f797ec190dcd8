use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{gaussian_kde_at, silverman_bandwidth, std_dev, trapezoid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    /// Equal-width bins over the sample range.
    Histogram { bins: usize },
    /// Geometric bins over a positive sample range.
    LogHistogram { bins: usize },
    /// Gaussian kernel with Silverman bandwidth evaluated on `points` grid
    /// points. With `log_space` the kernel runs on `ln x` and the result is
    /// mapped back to a density in `x` on a geometric grid.
    GaussianKde { points: usize, log_space: bool },
}

/// Plot-ready density.
///
/// Histograms carry `edges` and integrate as `Σ density × width`; kernel
/// estimates integrate by the trapezoid rule over `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub method: DensityMethod,
    /// Kernel bandwidth, or the bin count for histograms.
    pub bandwidth_or_bins: f64,
    pub edges: Option<Vec<f64>>,
}

impl DensityEstimate {
    pub fn integral(&self) -> f64 {
        match &self.edges {
            Some(edges) => edges
                .windows(2)
                .zip(&self.density)
                .map(|(w, d)| (w[1] - w[0]) * d)
                .sum(),
            None => trapezoid(&self.grid, &self.density),
        }
    }

    /// Linear interpolation of the density at `x` (zero outside the grid).
    pub fn at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|v| *v <= x);
        if i == 0 {
            return self.density[0];
        }
        if i >= g.len() {
            return self.density[g.len() - 1];
        }
        let (x0, x1) = (g[i - 1], g[i]);
        let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        self.density[i - 1] + t * (self.density[i] - self.density[i - 1])
    }
}

fn histogram(samples: &[f64], edges: Vec<f64>, method: DensityMethod, centers: Vec<f64>) -> DensityEstimate {
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    for &s in samples {
        let i = edges.partition_point(|e| *e <= s);
        let idx = if i == 0 { 0 } else { (i - 1).min(nb - 1) };
        counts[idx] += 1;
    }
    let n = samples.len() as f64;
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, w)| c as f64 / (n * (w[1] - w[0])))
        .collect();
    DensityEstimate {
        grid: centers,
        density,
        method,
        bandwidth_or_bins: nb as f64,
        edges: Some(edges),
    }
}

pub fn estimate_density(samples: &[f64], method: DensityMethod) -> Result<DensityEstimate> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(
            "density estimate needs at least 2 samples".into(),
        ));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("density samples must be finite".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match method {
        DensityMethod::Histogram { bins } => {
            let bins = bins.max(1);
            let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
            let step = (hi - lo) / bins as f64;
            let mut edges: Vec<f64> = (0..=bins).map(|i| lo + step * i as f64).collect();
            edges[bins] = hi;
            let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            Ok(histogram(samples, edges, method, centers))
        }
        DensityMethod::LogHistogram { bins } => {
            if !(lo > 0.0) {
                return Err(Error::InvalidInput("log histogram needs positive samples".into()));
            }
            let bins = bins.max(1);
            let (lo, hi) = if hi > lo {
                (lo, hi)
            } else {
                (lo / 2f64.sqrt(), hi * 2f64.sqrt())
            };
            let (llo, lhi) = (lo.ln(), hi.ln());
            let step = (lhi - llo) / bins as f64;
            let mut edges: Vec<f64> = (0..=bins).map(|i| (llo + step * i as f64).exp()).collect();
            edges[0] = lo;
            edges[bins] = hi;
            let centers = edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
            Ok(histogram(samples, edges, method, centers))
        }
        DensityMethod::GaussianKde { points, log_space } => {
            let points = points.max(16);
            let values: Vec<f64> = if log_space {
                if !(lo > 0.0) {
                    return Err(Error::InvalidInput("log-space KDE needs positive samples".into()));
                }
                samples.iter().map(|v| v.ln()).collect()
            } else {
                samples.to_vec()
            };
            if !(std_dev(&values) > 0.0) {
                return Err(Error::Degenerate("zero-variance samples for kernel density".into()));
            }
            let h = silverman_bandwidth(&values);
            let vlo = values.iter().copied().fold(f64::INFINITY, f64::min) - 4.0 * h;
            let vhi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
            let vgrid = crate::stats::linspace(vlo, vhi, points);
            let dens = gaussian_kde_at(&values, h, &vgrid);
            let (grid, mut density): (Vec<f64>, Vec<f64>) = if log_space {
                vgrid.iter().zip(&dens).map(|(&g, &d)| (g.exp(), d / g.exp())).unzip()
            } else {
                (vgrid, dens)
            };
            let area = trapezoid(&grid, &density);
            if !(area > 0.0) {
                return Err(Error::Numerical("kernel density integrates to zero".into()));
            }
            density.iter_mut().for_each(|d| *d /= area);
            Ok(DensityEstimate {
                grid,
                density,
                method,
                bandwidth_or_bins: h,
                edges: None,
            })
        }
    }
}

/// Two-column CSV `x,density`.
pub fn write_density_csv(path: &Path, est: &DensityEstimate) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "density"])?;
    for (x, d) in est.grid.iter().zip(&est.density) {
        w.write_record([x.to_string(), d.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
