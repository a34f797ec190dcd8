//! Agent-based click simulator.
//!
//! Each agent starts at a first click drawn from the hourly profile X(t),
//! then alternates sessions and inter-session gaps. After every session the
//! agent leaves for the rest of the day with a daypart-dependent exit
//! probability; otherwise the next session starts `ΔT` seconds after the last
//! action of the previous one. All times are whole epoch seconds so traces
//! export to the canonical event log without rounding; intra-session gaps
//! are `ceil(Exp(λ_Δt))`, so no two actions of an agent share a second.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, Event, EventKind};
use crate::rng::{
    derive_seed, open_unit, rng_from_seed, sample_categorical, sample_exp, sample_truncated_power_law, SimRng,
};
use crate::sessions::{hourly_activity_profile, ActivityProfile, ProfileBasis, Session};
use crate::stats::pearson;
use crate::temporal::FourierModel;
use crate::DAY_SECS;

/// Default simulation epoch: 2019-11-09 00:00:00 UTC.
pub const DEFAULT_EPOCH: i64 = 1_573_257_600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Mp,
    Dp,
    Ep,
    Lnp,
}

impl Period {
    pub const ALL: [Period; 4] = [Period::Mp, Period::Dp, Period::Ep, Period::Lnp];
}

/// Hour ranges `[start, end)` of the four dayparts. A range with
/// `start > end` wraps past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaypartBounds {
    pub mp: (f64, f64),
    pub dp: (f64, f64),
    pub ep: (f64, f64),
    pub lnp: (f64, f64),
}

impl Default for DaypartBounds {
    fn default() -> Self {
        DaypartBounds {
            mp: (6.0, 10.0),
            dp: (10.0, 17.0),
            ep: (17.0, 23.0),
            lnp: (23.0, 6.0),
        }
    }
}

fn in_range(t: f64, (a, b): (f64, f64)) -> bool {
    if a <= b {
        t >= a && t < b
    } else {
        t >= a || t < b
    }
}

fn range_len((a, b): (f64, f64)) -> f64 {
    if a <= b {
        b - a
    } else {
        24.0 - a + b
    }
}

impl DaypartBounds {
    fn ranges(&self) -> [(Period, (f64, f64)); 4] {
        [
            (Period::Mp, self.mp),
            (Period::Dp, self.dp),
            (Period::Ep, self.ep),
            (Period::Lnp, self.lnp),
        ]
    }

    /// Checks that the four ranges tile `[0, 24)` without overlap.
    pub fn validate(&self) -> Result<()> {
        let ranges = self.ranges();
        if ranges
            .iter()
            .any(|(_, (a, b))| !(0.0..24.0).contains(a) || !(0.0..=24.0).contains(b) || a == b)
        {
            return Err(Error::InvalidInput(
                "daypart bounds must be non-empty hour ranges within [0, 24]".into(),
            ));
        }
        let total: f64 = ranges.iter().map(|(_, r)| range_len(*r)).sum();
        if (total - 24.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "daypart bounds cover {total} hours, not 24"
            )));
        }
        for (_, (a, _)) in ranges {
            let hits = ranges.iter().filter(|(_, r)| in_range(a, *r)).count();
            if hits != 1 {
                return Err(Error::InvalidInput("daypart bounds overlap".into()));
            }
        }
        Ok(())
    }
}

/// The daypart containing hour-of-day `t`.
pub fn period_of(t: f64, bounds: &DaypartBounds) -> Period {
    let t = t.rem_euclid(24.0);
    bounds
        .ranges()
        .into_iter()
        .find(|(_, r)| in_range(t, *r))
        .map_or(Period::Lnp, |(p, _)| p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitProbs {
    pub mp: f64,
    pub dp: f64,
    pub ep: f64,
    pub lnp: f64,
}

impl Default for ExitProbs {
    fn default() -> Self {
        ExitProbs {
            mp: 0.2,
            dp: 0.3,
            ep: 0.2,
            lnp: 0.8,
        }
    }
}

impl ExitProbs {
    pub fn uniform(p: f64) -> Self {
        ExitProbs {
            mp: p,
            dp: p,
            ep: p,
            lnp: p,
        }
    }

    pub fn get(&self, p: Period) -> f64 {
        match p {
            Period::Mp => self.mp,
            Period::Dp => self.dp,
            Period::Ep => self.ep,
            Period::Lnp => self.lnp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IntervalSource {
    /// Uniform draws from observed inter-session gaps, seconds.
    Empirical { pool: Vec<f64> },
    /// Density `c·ΔT^-alpha` truncated to `[min_gap, cutoff]` seconds.
    /// `c` is carried for reporting only; sampling uses the normalised shape.
    PowerLaw { c: f64, alpha: f64, cutoff: f64 },
}

impl Default for IntervalSource {
    fn default() -> Self {
        IntervalSource::PowerLaw {
            c: 1.501,
            alpha: 1.018,
            cutoff: 21_600.0,
        }
    }
}

/// What happens when a continuing agent's next session falls on a new day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WrapMode {
    /// Absolute time runs on; the day index simply advances.
    #[default]
    Continuous,
    /// Crossing midnight ends the day; the next day starts from a fresh first click.
    ResampleDaily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    /// Hourly first-click proportions X(t).
    pub activity_profile: [f64; 24],
    pub interval_source: IntervalSource,
    pub exit_probs: ExitProbs,
    pub daypart_bounds: DaypartBounds,
    /// Minimum inter-session gap ΔT_τ, seconds.
    pub min_gap: f64,
    /// Rate of the session-length tail, N = 1 + floor(Exp(rate)).
    pub lambda_n: f64,
    /// Rate of intra-session gaps, per second.
    pub lambda_dt: f64,
    pub horizon_days: u32,
    pub seed: u64,
    pub wrap: WrapMode,
    /// Redraws allowed when an empirical gap falls below `min_gap`.
    pub max_retries: usize,
    /// Use `min_gap` itself once retries run out; otherwise fail.
    pub floor: bool,
    /// Epoch second of midnight on day 1 (UTC).
    pub epoch: i64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            activity_profile: profile_from_fourier(&crate::temporal::REFERENCE_DAILY_RHYTHM.model()),
            interval_source: IntervalSource::default(),
            exit_probs: ExitProbs::default(),
            daypart_bounds: DaypartBounds::default(),
            min_gap: 600.0,
            lambda_n: 0.310,
            lambda_dt: 0.019,
            horizon_days: 7,
            seed: 0,
            wrap: WrapMode::Continuous,
            max_retries: 100,
            floor: true,
            epoch: DEFAULT_EPOCH,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        for p in Period::ALL {
            let v = self.exit_probs.get(p);
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("exit probability {v} for {p:?} is outside [0, 1]"));
            }
        }
        self.daypart_bounds.validate()?;
        if self.activity_profile.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return bad("activity profile entries must be finite and non-negative".into());
        }
        if !(self.activity_profile.iter().sum::<f64>() > 0.0) {
            return bad("activity profile is all zero".into());
        }
        if !(self.min_gap >= 1.0) || !self.min_gap.is_finite() {
            return bad(format!("min_gap must be at least 1 s, got {}", self.min_gap));
        }
        if !(self.lambda_n > 0.0) || !self.lambda_n.is_finite() {
            return bad(format!("lambda_n must be positive, got {}", self.lambda_n));
        }
        if !(self.lambda_dt > 0.0) || !self.lambda_dt.is_finite() {
            return bad(format!("lambda_dt must be positive, got {}", self.lambda_dt));
        }
        if self.horizon_days == 0 {
            return bad("horizon must be at least one day".into());
        }
        if self.epoch <= 0 {
            return bad("epoch must be positive".into());
        }
        match &self.interval_source {
            IntervalSource::Empirical { pool } => {
                if pool.is_empty() || pool.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return bad("empirical interval pool must be non-empty and positive".into());
                }
            }
            IntervalSource::PowerLaw { alpha, cutoff, .. } => {
                if !alpha.is_finite() || !(*cutoff > self.min_gap) || !cutoff.is_finite() {
                    return bad(format!(
                        "power-law cutoff {cutoff} must exceed min_gap {}",
                        self.min_gap
                    ));
                }
            }
        }
        Ok(())
    }
}

/// X(t) from a daily Fourier model evaluated at each whole hour, clamped at
/// zero and normalised.
pub fn profile_from_fourier(model: &FourierModel) -> [f64; 24] {
    let mut x = [0.0; 24];
    for (h, v) in x.iter_mut().enumerate() {
        *v = model.eval(h as f64).max(0.0);
    }
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
    x
}

/// Seconds after midnight: hour drawn from `x`, position within the hour uniform.
pub fn sample_first_click<R: Rng + ?Sized>(x: &[f64; 24], rng: &mut R) -> Result<i64> {
    let hour = sample_categorical(rng, x).ok_or_else(|| Error::InvalidInput("activity profile is all zero".into()))?;
    Ok(hour as i64 * 3600 + rng.random_range(0..3600))
}

/// One inter-session gap `ΔT` in whole seconds, at least `min_gap`.
pub fn sample_interval<R: Rng + ?Sized>(config: &AgentConfig, rng: &mut R) -> Result<i64> {
    let min = config.min_gap.ceil() as i64;
    match &config.interval_source {
        IntervalSource::PowerLaw { alpha, cutoff, .. } => {
            let v = sample_truncated_power_law(rng, *alpha, config.min_gap, *cutoff);
            Ok((v.ceil() as i64).max(min))
        }
        IntervalSource::Empirical { pool } => {
            for _ in 0..=config.max_retries {
                let v = pool[rng.random_range(0..pool.len())];
                if v >= config.min_gap {
                    return Ok((v.ceil() as i64).max(min));
                }
            }
            if config.floor {
                Ok(min)
            } else {
                Err(Error::Numerical(format!(
                    "no interval >= {} s after {} redraws",
                    config.min_gap, config.max_retries
                )))
            }
        }
    }
}

/// `T_{t+1} = T_t + ΔT`, with `current` the last action of the previous session.
pub fn next_click_time<R: Rng + ?Sized>(current: i64, config: &AgentConfig, rng: &mut R) -> Result<i64> {
    Ok(current + sample_interval(config, rng)?)
}

fn session_actions(start: i64, config: &AgentConfig, rng: &mut SimRng) -> Vec<i64> {
    let n = 1 + sample_exp(rng, config.lambda_n).floor() as usize;
    let mut times = Vec::with_capacity(n);
    let mut t = start;
    times.push(t);
    for _ in 1..n {
        let gap = loop {
            let g = sample_exp(rng, config.lambda_dt).ceil();
            if g < config.min_gap {
                break g as i64;
            }
        };
        t += gap;
        times.push(t);
    }
    times
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub agent_id: String,
    pub seed: u64,
    pub sessions: Vec<Session>,
}

impl SimTrace {
    pub fn action_times(&self) -> impl Iterator<Item = i64> + '_ {
        self.sessions.iter().flat_map(|s| s.action_times.iter().copied())
    }
}

fn day_of(t: i64, epoch: i64) -> i64 {
    (t - epoch).div_euclid(DAY_SECS)
}

fn hour_at(t: i64, epoch: i64) -> f64 {
    (t - epoch).rem_euclid(DAY_SECS) as f64 / 3600.0
}

/// Simulates one agent with `config.seed`.
pub fn simulate_agent(agent_id: &str, config: &AgentConfig) -> Result<SimTrace> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let horizon = config.epoch + config.horizon_days as i64 * DAY_SECS;
    let min_gap = config.min_gap.ceil() as i64;
    let mut sessions = Vec::new();
    let mut start = config.epoch + sample_first_click(&config.activity_profile, &mut rng)?;
    while start < horizon {
        let mut times = session_actions(start, config, &mut rng);
        times.retain(|&t| t < horizon);
        let end = *times.last().expect("session has its first action");
        sessions.push(Session {
            user_id: agent_id.to_string(),
            start,
            end,
            deltas: times.windows(2).map(|w| w[1] - w[0]).collect(),
            action_times: times,
        });

        let period = period_of(hour_at(end, config.epoch), &config.daypart_bounds);
        let exit = open_unit(&mut rng) < config.exit_probs.get(period);
        let mut next = None;
        if !exit {
            let t = next_click_time(end, config, &mut rng)?;
            let crosses = day_of(t, config.epoch) != day_of(end, config.epoch);
            if !(config.wrap == WrapMode::ResampleDaily && crosses) {
                next = Some(t);
            }
        }
        start = match next {
            Some(t) => t,
            None => {
                let day = day_of(end, config.epoch) + 1;
                let first = config.epoch + day * DAY_SECS + sample_first_click(&config.activity_profile, &mut rng)?;
                first.max(end + min_gap)
            }
        };
    }
    Ok(SimTrace {
        agent_id: agent_id.to_string(),
        seed: config.seed,
        sessions,
    })
}

/// Agent ids sort in simulation order.
pub fn agent_id(index: usize, n: usize) -> String {
    let width = n.saturating_sub(1).to_string().len();
    format!("agent{index:0width$}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub traces: Vec<SimTrace>,
    /// Session-start hourly profile over all agents.
    pub profile: ActivityProfile,
}

/// Simulates `n` agents in parallel; agent `i` uses seed `derive_seed(seed, i)`.
pub fn simulate_population(n: usize, config: &AgentConfig, seed: u64) -> Result<Population> {
    if n == 0 {
        return Err(Error::InvalidInput("population needs at least one agent".into()));
    }
    config.validate()?;
    let traces = (0..n)
        .into_par_iter()
        .map(|i| {
            let cfg = AgentConfig {
                seed: derive_seed(seed, i as u64),
                ..config.clone()
            };
            simulate_agent(&agent_id(i, n), &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<Session> = traces.iter().flat_map(|t| t.sessions.iter().cloned()).collect();
    let offset = config.epoch.rem_euclid(DAY_SECS);
    let profile = hourly_activity_profile(&all, ProfileBasis::SessionStart, -offset);
    Ok(Population { traces, profile })
}

/// Click events for every simulated action, in agent then time order.
pub fn traces_to_corpus(traces: &[SimTrace]) -> Corpus {
    let events = traces
        .iter()
        .flat_map(|tr| {
            tr.action_times().map(move |t| Event {
                user_id: tr.agent_id.clone(),
                timestamp: t,
                article_id: None,
                kind: EventKind::Click,
            })
        })
        .collect();
    Corpus::from_parts(events, Vec::new(), Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityComparison {
    /// `None` when either profile has zero variance.
    pub pearson: Option<f64>,
    pub max_abs_dev: f64,
}

pub fn compare_activity(trace: &[f64; 24], reference: &[f64; 24]) -> ActivityComparison {
    ActivityComparison {
        pearson: pearson(trace, reference),
        max_abs_dev: trace
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peaked(hour: usize) -> [f64; 24] {
        let mut x = [0.0; 24];
        x[hour] = 1.0;
        x
    }

    #[test]
    fn periods() {
        let b = DaypartBounds::default();
        assert!(b.validate().is_ok());
        assert_eq!(period_of(7.0, &b), Period::Mp);
        assert_eq!(period_of(23.5, &b), Period::Lnp);
        assert_eq!(period_of(5.0, &b), Period::Lnp);
        assert_eq!(period_of(10.0, &b), Period::Dp);
        let overlap = DaypartBounds { dp: (9.0, 17.0), ..b };
        assert!(overlap.validate().is_err());
    }

    #[test]
    fn first_click_in_hour() {
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            let t = sample_first_click(&peaked(9), &mut rng).unwrap();
            assert!((9 * 3600..10 * 3600).contains(&t));
        }
        assert!(sample_first_click(&[0.0; 24], &mut rng).is_err());
        let a = sample_first_click(&[1.0; 24], &mut rng_from_seed(4)).unwrap();
        let b = sample_first_click(&[1.0; 24], &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interval_rules() {
        let mut rng = rng_from_seed(0);
        let mut cfg = AgentConfig {
            interval_source: IntervalSource::Empirical { pool: vec![3600.0] },
            ..AgentConfig::default()
        };
        assert_eq!(next_click_time(1000, &cfg, &mut rng).unwrap(), 4600);
        cfg.interval_source = IntervalSource::Empirical { pool: vec![60.0] };
        assert_eq!(next_click_time(1000, &cfg, &mut rng).unwrap(), 1600);
        cfg.floor = false;
        assert!(next_click_time(1000, &cfg, &mut rng).is_err());
    }

    #[test]
    fn forced_exit_one_session_per_day() {
        let cfg = AgentConfig {
            exit_probs: ExitProbs::uniform(1.0),
            horizon_days: 5,
            seed: 3,
            ..AgentConfig::default()
        };
        let tr = simulate_agent("a", &cfg).unwrap();
        let days: Vec<i64> = tr.sessions.iter().map(|s| day_of(s.start, cfg.epoch)).collect();
        assert_eq!(days, [0, 1, 2, 3, 4]);
    }

    #[test]
    fn twelve_sessions_in_a_day() {
        // first click lands in hour 0; a huge count rate makes every session a single action
        let cfg = AgentConfig {
            activity_profile: peaked(0),
            exit_probs: ExitProbs::uniform(0.0),
            interval_source: IntervalSource::Empirical { pool: vec![7200.0] },
            lambda_n: 1e9,
            horizon_days: 1,
            ..AgentConfig::default()
        };
        for seed in 0..20 {
            let tr = simulate_agent("a", &AgentConfig { seed, ..cfg.clone() }).unwrap();
            assert_eq!(tr.sessions.len(), 12);
        }
    }

    #[test]
    fn invalid_exit_prob() {
        let cfg = AgentConfig {
            exit_probs: ExitProbs {
                mp: 1.5,
                ..ExitProbs::default()
            },
            ..AgentConfig::default()
        };
        assert!(simulate_agent("a", &cfg).is_err());
    }

    #[test]
    fn compare_profiles() {
        let x = profile_from_fourier(&crate::temporal::REFERENCE_DAILY_RHYTHM.model());
        let c = compare_activity(&x, &x);
        assert!((c.pearson.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c.max_abs_dev, 0.0);
        let mut rev = x;
        rev.reverse();
        assert!(compare_activity(&x, &rev).pearson.unwrap() < 1.0);
        assert!(compare_activity(&[1.0 / 24.0; 24], &[1.0 / 24.0; 24]).pearson.is_none());
    }

    #[test]
    fn resample_daily_never_crosses_midnight_within_a_session_chain() {
        let cfg = AgentConfig {
            exit_probs: ExitProbs::uniform(0.0),
            wrap: WrapMode::ResampleDaily,
            horizon_days: 3,
            seed: 11,
            ..AgentConfig::default()
        };
        let tr = simulate_agent("a", &cfg).unwrap();
        for w in tr.sessions.windows(2) {
            assert!(w[1].start - w[0].end >= 600);
        }
    }
}
