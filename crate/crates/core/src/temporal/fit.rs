use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{f_test_pvalue, mean, weighted_line_fit, LineFit};

pub const DEFAULT_LOG_BINS: usize = 32;
pub const MIN_POWER_LAW_SAMPLES: usize = 50;
pub const MIN_EXPONENTIAL_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fourier,
    PowerLaw,
    Exponential,
    Logarithmic,
}

impl Family {
    fn num_params(self) -> usize {
        match self {
            Family::Fourier => 7,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Least squares on the (log-)binned empirical density.
    #[default]
    Logls,
    /// Maximum likelihood.
    Mle,
}

/// Fitted model with goodness-of-fit.
///
/// Parameter names: power law `c`, `alpha` (density `c x^-alpha`);
/// exponential `a`, `lambda` (density `a e^{-lambda x}`); logarithmic `a`, `b`
/// (density `a + b ln x`). Cross-check estimates are stored under suffixed
/// names such as `alpha_mle` or `lambda_logls`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub method: FitMethod,
    pub params: BTreeMap<String, f64>,
    pub r2: Option<f64>,
    pub fstat: Option<f64>,
    pub pvalue: Option<f64>,
    /// Points entering the regression (bins for binned fits, samples otherwise).
    pub n: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }
}

/// How samples are binned into an empirical density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Unit-width bins centred on integers when every sample is an integer
    /// and the range spans at most 10 000 values, otherwise 32 linear bins.
    Auto,
    Integer,
    Linear(usize),
    Log(usize),
}

/// Occupied bins of an empirical density.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BinnedDensity {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<f64>,
}

fn bin_with_edges(samples: &[f64], edges: &[f64], centers: &[f64]) -> BinnedDensity {
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    for &s in samples {
        // upper edge inclusive for the last bin
        let idx = match edges.partition_point(|e| *e <= s) {
            0 => continue,
            i if i > nb => {
                if s == edges[nb] {
                    nb - 1
                } else {
                    continue;
                }
            }
            i => i - 1,
        };
        counts[idx] += 1;
    }
    let total = samples.len() as f64;
    let mut out = BinnedDensity {
        x: Vec::new(),
        density: Vec::new(),
        counts: Vec::new(),
    };
    for i in 0..nb {
        if counts[i] == 0 {
            continue;
        }
        let width = edges[i + 1] - edges[i];
        out.x.push(centers[i]);
        out.density.push(counts[i] as f64 / (total * width));
        out.counts.push(counts[i] as f64);
    }
    out
}

fn min_max(samples: &[f64]) -> (f64, f64) {
    samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Geometric bins between the smallest and largest sample, density per unit x,
/// abscissa at the geometric bin centre. Empty bins are dropped.
pub(crate) fn log_binned(samples: &[f64], bins: usize) -> Result<BinnedDensity> {
    if samples.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidInput(
            "log binning requires finite positive samples".into(),
        ));
    }
    let (lo, hi) = min_max(samples);
    if !(hi > lo) {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| (llo + step * i as f64).exp()).collect();
    edges[0] = lo;
    edges[bins] = hi;
    let centers: Vec<f64> = edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    Ok(bin_with_edges(samples, &edges, &centers))
}

/// Public view of the log-binned density as `(x, density)` pairs.
pub fn log_binned_density(samples: &[f64], bins: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = log_binned(samples, bins)?;
    Ok((b.x, b.density))
}

fn linear_binned(samples: &[f64], binning: Binning) -> Result<BinnedDensity> {
    let (lo, hi) = min_max(samples);
    if !(hi > lo) {
        return Err(Error::Degenerate("zero-variance samples".into()));
    }
    let integral = samples.iter().all(|s| s.fract() == 0.0) && hi - lo <= 10_000.0;
    let binning = match binning {
        Binning::Auto if integral => Binning::Integer,
        Binning::Auto => Binning::Linear(DEFAULT_LOG_BINS),
        other => other,
    };
    match binning {
        Binning::Integer => {
            let n = (hi - lo).round() as usize + 1;
            let edges: Vec<f64> = (0..=n).map(|i| lo - 0.5 + i as f64).collect();
            let centers: Vec<f64> = (0..n).map(|i| lo + i as f64).collect();
            Ok(bin_with_edges(samples, &edges, &centers))
        }
        Binning::Linear(nb) => {
            let nb = nb.max(1);
            let step = (hi - lo) / nb as f64;
            let mut edges: Vec<f64> = (0..=nb).map(|i| lo + step * i as f64).collect();
            edges[nb] = hi;
            let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            Ok(bin_with_edges(samples, &edges, &centers))
        }
        Binning::Log(nb) => log_binned(samples, nb.max(1)),
        Binning::Auto => unreachable!(),
    }
}

fn regression_quality(fit: &LineFit, n: usize) -> (Option<f64>, Option<f64>) {
    if n < 3 {
        return (None, None);
    }
    let d2 = (n - 2) as f64;
    if fit.r2 >= 1.0 {
        return (None, Some(0.0));
    }
    let f = fit.r2 / (1.0 - fit.r2) * d2;
    (f.is_finite().then_some(f), Some(f_test_pvalue(f, 1.0, d2)))
}

fn result_from_line(
    family: Family,
    method: FitMethod,
    params: BTreeMap<String, f64>,
    fit: &LineFit,
    n: usize,
) -> FitResult {
    let (fstat, pvalue) = regression_quality(fit, n);
    FitResult {
        family,
        method,
        params,
        r2: Some(fit.r2),
        fstat,
        pvalue,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawOptions {
    pub method: FitMethod,
    /// Lower cutoff; defaults to the smallest sample.
    pub xmin: Option<f64>,
    /// Upper truncation for the likelihood; defaults to the largest sample.
    /// `Some(f64::INFINITY)` gives the classic untruncated Hill estimator.
    pub xmax: Option<f64>,
    pub bins: usize,
}

impl Default for PowerLawOptions {
    fn default() -> Self {
        PowerLawOptions {
            method: FitMethod::Logls,
            xmin: None,
            xmax: None,
            bins: DEFAULT_LOG_BINS,
        }
    }
}

/// `h(u) = 1/u - 1/(e^u - 1)`: mean of a truncated exponential on `[0, 1]` with rate `u`.
fn truncated_exp_mean(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        0.5 - u / 12.0 + u * u * u / 720.0
    } else {
        1.0 / u - 1.0 / u.exp_m1()
    }
}

/// Maximum-likelihood exponent of `x^-alpha` on `[xmin, xmax]`.
///
/// In `y = ln(x / xmin)` the model is an exponential with rate `alpha - 1`
/// truncated to `[0, ln(xmax / xmin)]`, whose likelihood equation
/// `mean(y) / r = h((alpha - 1) r)` has a unique root found by bisection.
/// As `xmax -> inf` this reduces to `alpha = 1 + n / Σ ln(x / xmin)`.
fn power_law_mle(samples: &[f64], xmin: f64, xmax: f64) -> Result<(f64, usize)> {
    let tail: Vec<f64> = samples.iter().copied().filter(|&x| x >= xmin && x <= xmax).collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than 2 samples inside [xmin, xmax]".into(),
        ));
    }
    let ybar = tail.iter().map(|x| (x / xmin).ln()).sum::<f64>() / tail.len() as f64;
    if !(ybar > 0.0) {
        return Err(Error::Degenerate("all samples sit at xmin".into()));
    }
    if xmax.is_infinite() {
        return Ok((1.0 + 1.0 / ybar, tail.len()));
    }
    let r = (xmax / xmin).ln();
    let q = ybar / r;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Degenerate("power-law likelihood has no interior optimum".into()));
    }
    let (mut lo, mut hi) = (-1e6f64, 1e6f64);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        // h is decreasing
        if truncated_exp_mean(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((1.0 + 0.5 * (lo + hi) / r, tail.len()))
}

/// Fits `x^-alpha` by log-log least squares on `(x, density)` points (unweighted).
pub fn fit_power_law_points(x: &[f64], density: &[f64]) -> Result<FitResult> {
    if x.len() != density.len() || x.len() < 3 {
        return Err(Error::InsufficientData(
            "power-law point fit needs at least 3 points".into(),
        ));
    }
    if x.iter().chain(density).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(
            "power-law point fit needs positive x and density".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = density.iter().map(|v| v.ln()).collect();
    let fit = weighted_line_fit(&lx, &ly, &vec![1.0; x.len()])?;
    let params = BTreeMap::from([
        ("c".to_string(), fit.intercept.exp()),
        ("alpha".to_string(), -fit.slope),
    ]);
    Ok(result_from_line(
        Family::PowerLaw,
        FitMethod::Logls,
        params,
        &fit,
        x.len(),
    ))
}

fn power_law_on_bins(b: &BinnedDensity) -> Result<(FitResult, LineFit)> {
    if b.x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} occupied log bins (need 3)",
            b.x.len()
        )));
    }
    let lx: Vec<f64> = b.x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = b.density.iter().map(|v| v.ln()).collect();
    let fit = weighted_line_fit(&lx, &ly, &b.counts)?;
    let params = BTreeMap::from([
        ("c".to_string(), fit.intercept.exp()),
        ("alpha".to_string(), -fit.slope),
    ]);
    Ok((
        result_from_line(Family::PowerLaw, FitMethod::Logls, params, &fit, b.x.len()),
        fit,
    ))
}

/// Fits a power-law density to positive samples.
///
/// Both estimators always run. `logls` regresses log density on log x over
/// the log-binned histogram, weighting each bin by its count; `mle` is the
/// truncated maximum-likelihood exponent on `[xmin, xmax]`. The selected
/// method provides `alpha` and `c`; the other estimate is reported as
/// `alpha_mle` or `alpha_logls`. `alpha_hill` holds the untruncated estimator.
/// R², F and p always describe the log-log regression.
pub fn fit_power_law(samples: &[f64], opts: &PowerLawOptions) -> Result<FitResult> {
    if samples.len() < MIN_POWER_LAW_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least {MIN_POWER_LAW_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("power-law samples must be positive".into()));
    }
    let (lo, hi) = min_max(samples);
    if !(hi > lo) {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let xmin = opts.xmin.unwrap_or(lo);
    if !(xmin > 0.0) {
        return Err(Error::InvalidInput("xmin must be positive".into()));
    }
    let xmax = opts.xmax.unwrap_or(hi);
    let binned_samples: Vec<f64> = samples.iter().copied().filter(|&x| x >= xmin && x <= xmax).collect();
    let (logls, _) = power_law_on_bins(&log_binned(&binned_samples, opts.bins.max(3))?)?;
    let (alpha_mle, n_tail) = power_law_mle(samples, xmin, xmax)?;
    let (alpha_hill, _) = power_law_mle(samples, xmin, f64::INFINITY)?;

    let mut result = logls;
    let alpha_logls = result.param("alpha");
    result.params.insert("xmin".into(), xmin);
    result.params.insert("xmax".into(), xmax);
    result.params.insert("alpha_hill".into(), alpha_hill);
    result.params.insert("samples".into(), n_tail as f64);
    match opts.method {
        FitMethod::Logls => {
            result.params.insert("alpha_mle".into(), alpha_mle);
        }
        FitMethod::Mle => {
            let s = 1.0 - alpha_mle;
            let c = if s.abs() < 1e-12 || xmax.is_infinite() {
                if xmax.is_infinite() {
                    (alpha_mle - 1.0) * xmin.powf(alpha_mle - 1.0)
                } else {
                    1.0 / (xmax / xmin).ln()
                }
            } else {
                s / (xmax.powf(s) - xmin.powf(s))
            };
            result.method = FitMethod::Mle;
            result.params.insert("alpha".into(), alpha_mle);
            result.params.insert("c".into(), c);
            result.params.insert("alpha_logls".into(), alpha_logls);
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialOptions {
    pub method: FitMethod,
    pub binning: Binning,
    /// Location for the MLE; defaults to the smallest sample.
    pub xmin: Option<f64>,
}

impl Default for ExponentialOptions {
    fn default() -> Self {
        ExponentialOptions {
            method: FitMethod::Logls,
            binning: Binning::Auto,
            xmin: None,
        }
    }
}

/// Fits `ln P = ln A - lambda x` by least squares on `(x, density)` points (unweighted).
pub fn fit_exponential_points(x: &[f64], density: &[f64]) -> Result<FitResult> {
    if x.len() != density.len() || x.len() < 3 {
        return Err(Error::InsufficientData(
            "exponential point fit needs at least 3 points".into(),
        ));
    }
    if density.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput(
            "exponential point fit needs positive density".into(),
        ));
    }
    let ly: Vec<f64> = density.iter().map(|v| v.ln()).collect();
    let fit = weighted_line_fit(x, &ly, &vec![1.0; x.len()])?;
    let params = BTreeMap::from([
        ("a".to_string(), fit.intercept.exp()),
        ("lambda".to_string(), -fit.slope),
    ]);
    Ok(result_from_line(
        Family::Exponential,
        FitMethod::Logls,
        params,
        &fit,
        x.len(),
    ))
}

fn exponential_on_bins(b: &BinnedDensity) -> Result<FitResult> {
    if b.x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} occupied bins (need 3)",
            b.x.len()
        )));
    }
    let ly: Vec<f64> = b.density.iter().map(|v| v.ln()).collect();
    let fit = weighted_line_fit(&b.x, &ly, &b.counts)?;
    let params = BTreeMap::from([
        ("a".to_string(), fit.intercept.exp()),
        ("lambda".to_string(), -fit.slope),
    ]);
    Ok(result_from_line(
        Family::Exponential,
        FitMethod::Logls,
        params,
        &fit,
        b.x.len(),
    ))
}

/// Fits an exponential density to samples.
///
/// `logls` regresses log density on x over the binned histogram (count
/// weighted); `mle` is `1 / (mean - xmin)`. Both are always reported, the
/// non-selected one as `lambda_mle` or `lambda_logls`.
pub fn fit_exponential(samples: &[f64], opts: &ExponentialOptions) -> Result<FitResult> {
    if samples.len() < MIN_EXPONENTIAL_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "exponential fit needs at least {MIN_EXPONENTIAL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("exponential samples must be finite".into()));
    }
    let (lo, hi) = min_max(samples);
    if !(hi > lo) {
        return Err(Error::Degenerate("zero-variance samples".into()));
    }
    let xmin = opts.xmin.unwrap_or(lo);
    let lambda_mle = 1.0 / (mean(samples) - xmin);
    let mut result = exponential_on_bins(&linear_binned(samples, opts.binning)?)?;
    result.params.insert("xmin".into(), xmin);
    result.params.insert("samples".into(), samples.len() as f64);
    match opts.method {
        FitMethod::Logls => {
            result.params.insert("lambda_mle".into(), lambda_mle);
        }
        FitMethod::Mle => {
            let logls = result.param("lambda");
            result.method = FitMethod::Mle;
            result.params.insert("lambda".into(), lambda_mle);
            result.params.insert("a".into(), lambda_mle * (lambda_mle * xmin).exp());
            result.params.insert("lambda_logls".into(), logls);
        }
    }
    Ok(result)
}

fn logarithmic_on_bins(b: &BinnedDensity) -> Result<FitResult> {
    if b.x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} occupied bins (need 3)",
            b.x.len()
        )));
    }
    let lx: Vec<f64> = b.x.iter().map(|v| v.ln()).collect();
    let fit = weighted_line_fit(&lx, &b.density, &b.counts)?;
    let params = BTreeMap::from([("a".to_string(), fit.intercept), ("b".to_string(), fit.slope)]);
    Ok(result_from_line(
        Family::Logarithmic,
        FitMethod::Logls,
        params,
        &fit,
        b.x.len(),
    ))
}

/// Fits `P = a + b ln x` on the log-binned density of positive samples.
pub fn fit_logarithmic(samples: &[f64], bins: usize) -> Result<FitResult> {
    logarithmic_on_bins(&log_binned(samples, bins)?)
}

/// Fits power-law, exponential and logarithmic densities to the same
/// log-binned histogram and ranks them by R² in each family's fitting space.
///
/// Ties go to fewer parameters, then to the order power law, exponential, logarithmic.
pub fn compare_families(samples: &[f64], bins: usize) -> Result<Vec<FitResult>> {
    if samples.len() < MIN_POWER_LAW_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "family comparison needs at least {MIN_POWER_LAW_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput("family comparison needs positive samples".into()));
    }
    let binned = log_binned(samples, bins)?;
    let mut fits = vec![
        power_law_on_bins(&binned)?.0,
        exponential_on_bins(&binned)?,
        logarithmic_on_bins(&binned)?,
    ];
    fits.sort_by(|a, b| {
        let ra = a.r2.unwrap_or(f64::NEG_INFINITY);
        let rb = b.r2.unwrap_or(f64::NEG_INFINITY);
        rb.total_cmp(&ra)
            .then(a.family.num_params().cmp(&b.family.num_params()))
            .then(a.family.cmp(&b.family))
    });
    Ok(fits)
}
