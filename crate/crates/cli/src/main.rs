//! `newsrhythm` command-line tool.
//!
//! Settings come from an optional TOML file (`--config`) and are then
//! overridden by command-line flags. Exit status is 0 on success, 2 for
//! invalid input or configuration, and 1 for runtime failures.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newsrhythm::cohorts::{Algorithm, TagEncoding};
use newsrhythm::ingest::CountBasis;
use newsrhythm::pipeline::{self, ClusterBy, InputFormat, RunConfig};
use newsrhythm::temporal::FitMethod;
use newsrhythm::Error;

#[derive(Debug, Parser)]
#[command(
    name = "newsrhythm",
    version,
    about = "Temporal and content analysis of news click logs"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the run summary as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a behavior log into a canonical corpus directory.
    Ingest(IngestArgs),
    /// Sessions, daily rhythm, interval and intra-session fits.
    Temporal(TemporalArgs),
    /// Similarity features and diversity-binned Wasserstein curves.
    Content(ContentArgs),
    /// Cluster users by interest tags or by hourly activity.
    Cluster(ClusterArgs),
    /// Generate a synthetic click corpus with the agent-based model.
    Simulate(SimulateArgs),
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, value_parser = parse_with::<InputFormat>)]
    format: Option<InputFormat>,
    #[arg(long)]
    behaviors: Option<PathBuf>,
    #[arg(long)]
    news: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
    /// Canonical corpus directory (for `--format canonical`).
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep users with more than this many interactions.
    #[arg(long)]
    min_interactions: Option<usize>,
    #[arg(long, value_parser = parse_count_basis)]
    count_basis: Option<CountBasis>,
    /// Keep exact duplicate events.
    #[arg(long)]
    no_dedup: bool,
    /// Rebuild impression histories from earlier clicks.
    #[arg(long)]
    realtime_history: bool,
}

#[derive(Debug, Args)]
struct TemporalArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Session inactivity threshold, seconds.
    #[arg(long)]
    threshold: Option<i64>,
    /// Derive the session threshold from the data.
    #[arg(long)]
    adaptive: bool,
    #[arg(long, allow_hyphen_values = true)]
    utc_offset: Option<i64>,
    /// Valley search band for the long-gap cutoff, minutes.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    band: Option<Vec<f64>>,
    /// Fixed interval-fit cutoff, minutes.
    #[arg(long)]
    cutoff: Option<f64>,
    #[arg(long)]
    harmonics: Option<usize>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long, value_parser = parse_method)]
    interval_method: Option<FitMethod>,
    #[arg(long, value_parser = parse_method)]
    micro_method: Option<FitMethod>,
}

#[derive(Debug, Args)]
struct ContentArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Embedding file; without it article titles are hashed.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    hash_dim: Option<usize>,
    /// Inclusive exposure-length band.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    exposure_len: Option<Vec<usize>>,
    /// Treat each user's last click as a one-item exposure.
    #[arg(long)]
    proxy_exposure: bool,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_with::<ClusterBy>)]
    by: Option<ClusterBy>,
    /// Comma-separated subset of kmeans, gmm, agglo.
    #[arg(long, value_delimiter = ',', value_parser = parse_with::<Algorithm>)]
    algos: Option<Vec<Algorithm>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_tags: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Plain multi-hot tag vectors instead of rank weights.
    #[arg(long)]
    multi_hot: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon_days: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_with<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<FitMethod, String> {
    match s {
        "mle" => Ok(FitMethod::Mle),
        "logls" => Ok(FitMethod::Logls),
        other => Err(format!("unknown fit method {other:?} (mle, logls)")),
    }
}

fn parse_count_basis(s: &str) -> Result<CountBasis, String> {
    match s {
        "events" => Ok(CountBasis::Events),
        "clicks" => Ok(CountBasis::Clicks),
        "impressions" => Ok(CountBasis::Impressions),
        other => Err(format!("unknown count basis {other:?} (events, clicks, impressions)")),
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, Error> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: cannot read config: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply(cfg: &mut RunConfig, cmd: Command) -> Command {
    match &cmd {
        Command::Ingest(a) => {
            set(&mut cfg.input.format, a.format);
            set(&mut cfg.input.behaviors, a.behaviors.clone().map(Some));
            set(&mut cfg.input.news, a.news.clone().map(Some));
            set(&mut cfg.input.events, a.events.clone().map(Some));
            set(&mut cfg.input.corpus, a.corpus.clone().map(Some));
            set(&mut cfg.output, a.out.clone());
            set(&mut cfg.ingest.min_interactions, a.min_interactions);
            set(&mut cfg.ingest.count_basis, a.count_basis);
            cfg.ingest.dedup &= !a.no_dedup;
            cfg.ingest.realtime_history |= a.realtime_history;
        }
        Command::Temporal(a) => {
            set(&mut cfg.input.corpus, a.corpus.clone().map(Some));
            set(&mut cfg.output, a.out.clone());
            set(&mut cfg.sessions.threshold_secs, a.threshold);
            cfg.sessions.adaptive |= a.adaptive;
            set(&mut cfg.sessions.utc_offset_secs, a.utc_offset);
            set(&mut cfg.temporal.band_minutes, a.band.as_ref().map(|b| (b[0], b[1])));
            set(&mut cfg.temporal.interval_cutoff_minutes, a.cutoff.map(Some));
            set(&mut cfg.temporal.harmonics, a.harmonics);
            set(&mut cfg.temporal.period_hours, a.period);
            set(&mut cfg.temporal.interval_method, a.interval_method);
            set(&mut cfg.temporal.micro_method, a.micro_method);
        }
        Command::Content(a) => {
            set(&mut cfg.input.corpus, a.corpus.clone().map(Some));
            set(&mut cfg.output, a.out.clone());
            set(&mut cfg.content.embeddings, a.embeddings.clone().map(Some));
            set(&mut cfg.content.hash_dim, a.hash_dim);
            set(
                &mut cfg.content.exposure_len,
                a.exposure_len.as_ref().map(|b| Some((b[0], b[1]))),
            );
            cfg.content.proxy_exposure |= a.proxy_exposure;
        }
        Command::Cluster(a) => {
            set(&mut cfg.input.corpus, a.corpus.clone().map(Some));
            set(&mut cfg.output, a.out.clone());
            set(&mut cfg.cluster.by, a.by);
            set(&mut cfg.cluster.algorithms, a.algos.clone());
            set(&mut cfg.cluster.k, a.k);
            set(&mut cfg.cluster.n_tags, a.n_tags);
            set(&mut cfg.cluster.seed, a.seed);
            if a.multi_hot {
                cfg.cluster.encoding = TagEncoding::MultiHot;
            }
        }
        Command::Simulate(a) => {
            set(&mut cfg.simulate.agents, a.agents);
            set(&mut cfg.abm.seed, a.seed);
            set(&mut cfg.abm.horizon_days, a.horizon_days);
            set(&mut cfg.output, a.out.clone());
        }
        Command::Config => {}
    }
    cmd
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load_config(cli.config.as_ref())?;
    let cmd = apply(&mut cfg, cli.command);
    let out = cfg.output.display().to_string();
    let (json, text) = match cmd {
        Command::Ingest(_) => {
            let s = pipeline::run_ingest(&cfg)?;
            let mut text = format!(
                "ingested {} users, {} events, {} impressions, {} articles into {out}\nparsed {} records, skipped {} lines, {} duplicates removed",
                s.users, s.events, s.impressions, s.articles, s.parse.records, s.parse.skipped, s.dedup_removed
            );
            if let Some(f) = &s.filter {
                text.push_str(&format!(
                    "\nmin-interactions filter: {} users retained, {} dropped",
                    f.retained, f.dropped
                ));
            }
            (serde_json::to_string_pretty(&s)?, text)
        }
        Command::Temporal(_) => {
            let s = pipeline::run_temporal(&cfg)?;
            let text = format!(
                "{} sessions from {} users; interval alpha {}, action-count lambda {}, action-gap lambda {}\noutputs in {out}",
                s.sessions,
                s.users,
                fmt_opt(s.interval_power_law_alpha),
                fmt_opt(s.action_count_lambda),
                fmt_opt(s.action_gap_lambda)
            );
            (serde_json::to_string_pretty(&s)?, text)
        }
        Command::Content(_) => {
            let s = pipeline::run_content(&cfg)?;
            let d = &s.diagnostics;
            let mut text = format!(
                "{} feature rows from {} of {} impressions ({} empty history, {} missing embeddings)",
                d.feature_rows, d.impressions_used, d.impressions_in, d.empty_history, d.missing_embedding
            );
            for p in &s.ws_curve {
                text.push_str(&format!(
                    "\nEn [{}, {}): W(m) {} W(M) {}",
                    p.lo,
                    p.hi,
                    fmt_opt(p.ws_median),
                    fmt_opt(p.ws_max)
                ));
            }
            text.push_str(&format!("\noutputs in {out}"));
            (serde_json::to_string_pretty(&s)?, text)
        }
        Command::Cluster(_) => {
            let s = pipeline::run_cluster(&cfg)?;
            let mut text = format!("{} users clustered, k = {}", s.users, s.k);
            for r in &s.scores {
                let best = if r.algorithm == s.best { "  (best)" } else { "" };
                text.push_str(&format!(
                    "\n{:<14} silhouette {}{best}",
                    r.algorithm.name(),
                    fmt_opt(r.silhouette)
                ));
            }
            for g in &s.groups {
                if let Some(p) = g.daypart {
                    text.push_str(&format!("\ncluster {}: {} users, {:?}", g.label, g.size, p));
                }
            }
            text.push_str(&format!("\noutputs in {out}"));
            (serde_json::to_string_pretty(&s)?, text)
        }
        Command::Simulate(_) => {
            let s = pipeline::run_simulate(&cfg)?;
            let text = format!(
                "{} agents, {} sessions, {} events written to {out}; profile correlation with X(t) {}",
                s.agents,
                s.sessions,
                s.events,
                fmt_opt(s.comparison.pearson)
            );
            (serde_json::to_string_pretty(&s)?, text)
        }
        Command::Config => {
            cfg.validate()?;
            let text = toml::to_string(&cfg).map_err(|e| Error::InvalidInput(e.to_string()))?;
            (serde_json::to_string_pretty(&cfg)?, text)
        }
    };
    // a closed pipe on stdout is not an error worth reporting
    let _ = writeln!(std::io::stdout(), "{}", if cli.json { json } else { text });
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
