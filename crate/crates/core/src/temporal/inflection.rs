use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sessions::SessionGap;
use crate::stats::{gaussian_kde_at, linspace, silverman_bandwidth};

const VALLEY_GRID: usize = 401;

/// Location of the valley separating short (behavioral) gaps from long (sleep) gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inflection {
    /// Abscissa of the density minimum inside the search band, in sample units.
    pub cutoff: f64,
    /// False when the density is monotone on the band, so the minimum sits on an edge.
    pub clear_valley: bool,
    /// Kernel bandwidth on the log scale.
    pub bandwidth: f64,
}

/// Finds the density minimum of the gap distribution inside `[lo, hi]`.
///
/// The density is a Gaussian KDE on log-gaps (Silverman bandwidth) mapped back
/// to a density in gap units, evaluated on a geometric grid over the band.
pub fn detect_inflection(gaps: &[f64], band: (f64, f64)) -> Result<Inflection> {
    let (lo, hi) = band;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "search band must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if gaps.len() < 1000 {
        return Err(Error::InsufficientData(format!(
            "valley search needs at least 1000 gaps, got {}",
            gaps.len()
        )));
    }
    let logs: Vec<f64> = gaps
        .iter()
        .filter(|g| **g > 0.0 && g.is_finite())
        .map(|g| g.ln())
        .collect();
    if logs.len() < 1000 {
        return Err(Error::InsufficientData("fewer than 1000 positive gaps".into()));
    }
    if !gaps.iter().any(|g| *g >= lo && *g <= hi) {
        return Err(Error::InvalidInput(format!(
            "no samples inside the search band [{lo}, {hi}]"
        )));
    }
    let h = silverman_bandwidth(&logs);
    if !(h > 0.0) {
        return Err(Error::Degenerate("log-gaps have zero spread".into()));
    }
    let grid = linspace(lo.ln(), hi.ln(), VALLEY_GRID);
    let density: Vec<f64> = gaussian_kde_at(&logs, h, &grid)
        .into_iter()
        .zip(&grid)
        .map(|(d, g)| d / g.exp())
        .collect();
    let (imin, _) = density.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
    );
    Ok(Inflection {
        cutoff: grid[imin].exp(),
        clear_valley: imin != 0 && imin != VALLEY_GRID - 1,
        bandwidth: h,
    })
}

/// Hour-of-day distributions of gap starts (`t_s`) and ends (`t_e`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointProfile {
    pub t_s: [f64; 24],
    pub t_e: [f64; 24],
    pub gaps: usize,
}

/// Normalised hour histograms of gap endpoints, optionally restricted to
/// gaps with `lo <= delta_t <= hi` (seconds).
pub fn interval_endpoint_profile(gaps: &[SessionGap], band: Option<(f64, f64)>) -> EndpointProfile {
    let mut ts = [0.0; 24];
    let mut te = [0.0; 24];
    let mut n = 0usize;
    for g in gaps {
        if let Some((lo, hi)) = band {
            let d = g.delta_t as f64;
            if d < lo || d > hi {
                continue;
            }
        }
        ts[(g.start_hour.floor() as usize).min(23)] += 1.0;
        te[(g.end_hour.floor() as usize).min(23)] += 1.0;
        n += 1;
    }
    if n > 0 {
        for v in ts.iter_mut().chain(te.iter_mut()) {
            *v /= n as f64;
        }
    }
    EndpointProfile {
        t_s: ts,
        t_e: te,
        gaps: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_from_seed, sample_exp, sample_truncated_power_law};
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn valley_between_modes() {
        let mut rng = rng_from_seed(17);
        let sleep = Normal::new(720.0, 60.0).unwrap();
        let gaps: Vec<f64> = (0..100_000)
            .map(|_| {
                if rng.random::<f64>() < 0.8 {
                    sample_truncated_power_law(&mut rng, 1.0, 1.0, 360.0)
                } else {
                    sleep.sample(&mut rng)
                }
            })
            .collect();
        let inf = detect_inflection(&gaps, (360.0, 540.0)).unwrap();
        assert!(inf.clear_valley);
        assert!((360.0..=540.0).contains(&inf.cutoff), "{}", inf.cutoff);
    }

    #[test]
    fn unimodal_has_no_valley() {
        let mut rng = rng_from_seed(18);
        let gaps: Vec<f64> = (0..5_000).map(|_| sample_exp(&mut rng, 1.0 / 200.0)).collect();
        let inf = detect_inflection(&gaps, (360.0, 540.0)).unwrap();
        assert!(!inf.clear_valley);
    }

    #[test]
    fn empty_band_is_an_error() {
        let gaps: Vec<f64> = (0..2000)
            .map(|i| if i % 2 == 0 { 10.0 + i as f64 * 0.01 } else { 900.0 })
            .collect();
        assert!(matches!(
            detect_inflection(&gaps, (360.0, 540.0)),
            Err(Error::InvalidInput(_))
        ));
        assert!(detect_inflection(&gaps, (540.0, 360.0)).is_err());
    }

    fn gap(start: f64, end: f64, dt: i64) -> SessionGap {
        SessionGap {
            user_id: "u".into(),
            delta_t: dt,
            start_hour: start,
            end_hour: end,
        }
    }

    #[test]
    fn endpoint_hours() {
        let gaps = vec![gap(23.2, 7.1, 28_800), gap(23.9, 7.5, 27_000), gap(10.0, 10.5, 1800)];
        let all = interval_endpoint_profile(&gaps, None);
        assert_eq!(all.gaps, 3);
        let night = interval_endpoint_profile(&gaps, Some((21_600.0, 32_400.0)));
        assert_eq!(night.t_s[23], 1.0);
        assert_eq!(night.t_e[7], 1.0);
    }
}
