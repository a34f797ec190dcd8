use serde::Serialize;

use super::{require_path, InputConfig, InputFormat, OutputDir, RunConfig};
use crate::error::{Error, Result};
use crate::ingest::{
    filter_min_interactions, parse_jsonl_events, parse_mind_behaviors, parse_mind_news, Corpus, FilterSummary,
    ParseReport, ARTICLES_FILE, EVENTS_FILE, IMPRESSIONS_FILE,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub format: InputFormat,
    pub parse: ParseReport,
    pub dedup_removed: usize,
    pub filter: Option<FilterSummary>,
    pub users: usize,
    pub events: usize,
    pub impressions: usize,
    pub articles: usize,
}

/// Parses the configured input into a corpus. MIND impressions also yield
/// click events, one per clicked exposure.
pub fn load_input(input: &InputConfig) -> Result<(Corpus, ParseReport)> {
    match input.format {
        InputFormat::Mind => {
            let behaviors = require_path(input.behaviors.as_ref(), "input.behaviors")?;
            let (impressions, mut report) = parse_mind_behaviors(&behaviors)?;
            let articles = match input.news.as_ref() {
                Some(_) => {
                    let news = require_path(input.news.as_ref(), "input.news")?;
                    let (a, r) = parse_mind_news(&news)?;
                    report.merge(&r);
                    a
                }
                None => Vec::new(),
            };
            let mut corpus = Corpus::from_parts(Vec::new(), impressions, articles);
            corpus.derive_click_events();
            Ok((corpus, report))
        }
        InputFormat::Jsonl => {
            let events = require_path(input.events.as_ref(), "input.events")?;
            let (ev, report) = parse_jsonl_events(&events)?;
            Ok((Corpus::from_parts(ev, Vec::new(), Vec::new()), report))
        }
        InputFormat::Canonical => {
            let dir = require_path(input.corpus.as_ref(), "input.corpus")?;
            if !dir.is_dir() {
                return Err(Error::InvalidInput(format!(
                    "{}: not a corpus directory",
                    dir.display()
                )));
            }
            let corpus = Corpus::read_canonical(&dir)?;
            let report = ParseReport {
                records: corpus.num_events() + corpus.num_impressions(),
                lines: corpus.num_events() + corpus.num_impressions(),
                ..ParseReport::default()
            };
            Ok((corpus, report))
        }
    }
}

/// Parses, cleans and filters the input, then writes the canonical corpus and
/// `ingest_summary.json` into the output directory.
pub fn run_ingest(cfg: &RunConfig) -> Result<IngestSummary> {
    cfg.validate()?;
    let (mut corpus, parse) = load_input(&cfg.input)?;
    if cfg.ingest.realtime_history {
        corpus.rebuild_histories()?;
    }
    let dedup_removed = if cfg.ingest.dedup { corpus.dedup_events() } else { 0 };
    let filter = if cfg.ingest.min_interactions > 0 {
        let (c, s) = filter_min_interactions(corpus, cfg.ingest.min_interactions, cfg.ingest.count_basis);
        corpus = c;
        Some(s)
    } else {
        None
    };
    let mut out = OutputDir::create(cfg)?;
    corpus.write_canonical(&cfg.output)?;
    for name in [EVENTS_FILE, IMPRESSIONS_FILE, ARTICLES_FILE] {
        out.seal(name)?;
    }
    let summary = IngestSummary {
        format: cfg.input.format,
        parse,
        dedup_removed,
        filter,
        users: corpus.users.len(),
        events: corpus.num_events(),
        impressions: corpus.num_impressions(),
        articles: corpus.articles.len(),
    };
    out.write_json("ingest_summary.json", &summary)?;
    Ok(summary)
}
