use std::path::Path;

use serde::Serialize;

use super::{load_corpus, Outcome, OutputDir, RunConfig};
use crate::error::{Error, Result};
use crate::sessions::{
    hourly_activity_profile, segment_all, segment_all_adaptive, session_stats, write_gaps_csv, write_sessions_csv,
    ActivityProfile,
};
use crate::temporal::{
    compare_families, detect_inflection, estimate_density, fit_exponential, fit_fourier, fit_power_law,
    interval_endpoint_profile, write_density_csv, Binning, DensityMethod, EndpointProfile, ExponentialOptions,
    FitResult, FourierModel, Inflection, PowerLawOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierOutput {
    pub profile: ActivityProfile,
    /// Hourly shares in percent, the values the series is fitted to.
    pub percent: Vec<f64>,
    pub model: FourierModel,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalOutput {
    /// Upper limit applied to gaps before fitting, seconds.
    pub cutoff: f64,
    pub cutoff_source: String,
    pub inflection: Outcome<Inflection>,
    pub gaps_total: usize,
    pub gaps_fitted: usize,
    pub power_law: Outcome<FitResult>,
    /// Families ranked best first.
    pub comparison: Outcome<Vec<FitResult>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroOutput {
    pub sessions: usize,
    pub action_count: Outcome<FitResult>,
    pub action_gap: Outcome<FitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalSummary {
    pub users: usize,
    pub sessions: usize,
    pub threshold_secs: Option<i64>,
    pub fourier: Outcome<()>,
    pub interval_power_law_alpha: Option<f64>,
    pub action_count_lambda: Option<f64>,
    pub action_gap_lambda: Option<f64>,
    pub files: Vec<String>,
}

fn write_endpoint_csv(path: &Path, all: &EndpointProfile, band: &EndpointProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["hour", "t_s", "t_e", "t_s_band", "t_e_band"])?;
    for h in 0..24 {
        w.write_record([
            h.to_string(),
            all.t_s[h].to_string(),
            all.t_e[h].to_string(),
            band.t_s[h].to_string(),
            band.t_e[h].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_profile_csv(path: &Path, x: &[f64; 24], fitted: Option<&FourierModel>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["hour", "share", "fitted_percent"])?;
    for (h, v) in x.iter().enumerate() {
        let f = fitted.map(|m| m.eval(h as f64).to_string()).unwrap_or_default();
        w.write_record([h.to_string(), v.to_string(), f])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Segments the corpus and fits the macro, meso and micro models.
///
/// Writes `sessions.csv`, `gaps.csv`, `profile.csv`, `fourier.json`,
/// `interval_fit.json`, `micro_fits.json`, `endpoint_profile.csv`, the
/// density tables `density_intervals.csv`, `density_actions.csv` and
/// `density_action_gaps.csv` (each only when estimable), and
/// `temporal_summary.json`.
pub fn run_temporal(cfg: &RunConfig) -> Result<TemporalSummary> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let times = corpus.click_times();
    let users = times.values().filter(|t| !t.is_empty()).count();
    if users == 0 {
        return Err(Error::InsufficientData("corpus has no click events".into()));
    }
    let s = &cfg.sessions;
    let t = &cfg.temporal;
    let sessions = if s.adaptive {
        segment_all_adaptive(&times)?
    } else {
        segment_all(&times, s.threshold_secs)?
    };
    let stats = session_stats(&sessions, s.utc_offset_secs);
    let mut out = OutputDir::create(cfg)?;
    out.write_with("sessions.csv", |p| write_sessions_csv(p, &sessions))?;
    out.write_with("gaps.csv", |p| write_gaps_csv(p, &stats.gaps))?;

    // macro: daily rhythm
    let profile = hourly_activity_profile(&sessions, t.profile_basis, s.utc_offset_secs);
    let hours: Vec<f64> = (0..24).map(|h| h as f64).collect();
    let percent: Vec<f64> = profile.x.iter().map(|v| v * 100.0).collect();
    let fourier = fit_fourier(&hours, &percent, t.period_hours, t.harmonics).map(|(model, fit)| FourierOutput {
        profile: profile.clone(),
        percent: percent.clone(),
        model,
        fit,
    });
    let fourier_model = fourier.as_ref().ok().map(|f| f.model.clone());
    out.write_with("profile.csv", |p| {
        write_profile_csv(p, &profile.x, fourier_model.as_ref())
    })?;
    let fourier_outcome: Outcome<FourierOutput> = fourier.into();
    out.write_json("fourier.json", &fourier_outcome)?;

    // meso: session intervals
    let gaps: Vec<f64> = stats.gaps.iter().map(|g| g.delta_t as f64).collect();
    let band = (t.band_minutes.0 * 60.0, t.band_minutes.1 * 60.0);
    let inflection = detect_inflection(&gaps, band);
    let (cutoff, cutoff_source) = match (t.interval_cutoff_minutes, &inflection) {
        (Some(c), _) => (c * 60.0, "configured".to_string()),
        (None, Ok(inf)) => (inf.cutoff, "inflection".to_string()),
        (None, Err(_)) => (band.0, "band_lower_edge".to_string()),
    };
    let fitted: Vec<f64> = gaps.iter().copied().filter(|&g| g < cutoff).collect();
    let power_law = fit_power_law(
        &fitted,
        &PowerLawOptions {
            method: t.interval_method,
            xmin: None,
            xmax: None,
            bins: t.bins,
        },
    );
    let interval = IntervalOutput {
        cutoff,
        cutoff_source,
        inflection: inflection.into(),
        gaps_total: gaps.len(),
        gaps_fitted: fitted.len(),
        power_law: power_law.into(),
        comparison: compare_families(&fitted, t.bins).into(),
    };
    out.write_json("interval_fit.json", &interval)?;
    let all_ends = interval_endpoint_profile(&stats.gaps, None);
    let band_ends = interval_endpoint_profile(&stats.gaps, Some(band));
    out.write_with("endpoint_profile.csv", |p| write_endpoint_csv(p, &all_ends, &band_ends))?;

    // micro: actions per session and gaps between actions
    let counts: Vec<f64> = stats.counts.iter().map(|&c| c as f64).collect();
    let deltas: Vec<f64> = stats.deltas.iter().map(|&d| d as f64).collect();
    let micro_opts = ExponentialOptions {
        method: t.micro_method,
        binning: Binning::Auto,
        xmin: None,
    };
    let micro = MicroOutput {
        sessions: sessions.len(),
        action_count: fit_exponential(&counts, &micro_opts).into(),
        action_gap: fit_exponential(&deltas, &micro_opts).into(),
    };
    out.write_json("micro_fits.json", &micro)?;

    let positive_gaps: Vec<f64> = gaps.iter().copied().filter(|&g| g > 0.0).collect();
    let densities = [
        (
            "density_intervals.csv",
            positive_gaps,
            DensityMethod::LogHistogram { bins: t.bins },
        ),
        ("density_actions.csv", counts, DensityMethod::Histogram { bins: t.bins }),
        (
            "density_action_gaps.csv",
            deltas,
            DensityMethod::Histogram { bins: t.bins },
        ),
    ];
    for (name, samples, method) in densities {
        if let Ok(est) = estimate_density(&samples, method) {
            out.write_with(name, |p| write_density_csv(p, &est))?;
        }
    }

    let param = |o: &Outcome<FitResult>, name: &str| o.result.as_ref().map(|r| r.param(name));
    let summary = TemporalSummary {
        users,
        sessions: sessions.len(),
        threshold_secs: (!s.adaptive).then_some(s.threshold_secs),
        fourier: Outcome {
            result: fourier_outcome.result.as_ref().map(|_| ()),
            error: fourier_outcome.error.clone(),
        },
        interval_power_law_alpha: param(&interval.power_law, "alpha"),
        action_count_lambda: param(&micro.action_count, "lambda"),
        action_gap_lambda: param(&micro.action_gap, "lambda"),
        files: out.files().to_vec(),
    };
    out.write_json("temporal_summary.json", &summary)?;
    Ok(summary)
}
