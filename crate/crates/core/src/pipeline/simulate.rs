use serde::Serialize;

use super::{OutputDir, RunConfig};
use crate::abm::{compare_activity, simulate_population, traces_to_corpus, ActivityComparison};
use crate::error::{Error, Result};
use crate::ingest::{ARTICLES_FILE, EVENTS_FILE, IMPRESSIONS_FILE};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub agents: usize,
    pub seed: u64,
    pub sessions: usize,
    pub events: usize,
    /// Simulated session-start profile against the configured X(t).
    pub comparison: ActivityComparison,
    pub profile: [f64; 24],
    pub files: Vec<String>,
}

/// Simulates `simulate.agents` agents with seed `abm.seed` and writes the
/// traces as a canonical corpus plus `sim_profile.csv` and
/// `simulate_summary.json`.
pub fn run_simulate(cfg: &RunConfig) -> Result<SimulateSummary> {
    cfg.validate()?;
    let pop = simulate_population(cfg.simulate.agents, &cfg.abm, cfg.abm.seed)?;
    let corpus = traces_to_corpus(&pop.traces);
    let mut out = OutputDir::create(cfg)?;
    corpus.write_canonical(&cfg.output)?;
    for name in [EVENTS_FILE, IMPRESSIONS_FILE, ARTICLES_FILE] {
        out.seal(name)?;
    }
    out.write_with("sim_profile.csv", |p| {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["hour", "simulated", "input"])?;
        for h in 0..24 {
            w.write_record([
                h.to_string(),
                pop.profile.x[h].to_string(),
                cfg.abm.activity_profile[h].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(p, e))
    })?;
    let s: f64 = cfg.abm.activity_profile.iter().sum();
    let mut reference = cfg.abm.activity_profile;
    reference.iter_mut().for_each(|v| *v /= s);
    let summary = SimulateSummary {
        agents: cfg.simulate.agents,
        seed: cfg.abm.seed,
        sessions: pop.traces.iter().map(|t| t.sessions.len()).sum(),
        events: corpus.num_events(),
        comparison: compare_activity(&pop.profile.x, &reference),
        profile: pop.profile.x,
        files: out.files().to_vec(),
    };
    out.write_json("simulate_summary.json", &summary)?;
    Ok(summary)
}
