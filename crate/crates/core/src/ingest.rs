//! Behavior-log ingestion.
//!
//! Three input grammars are understood:
//!
//! - MIND-style behaviors TSV: `impression_id \t user_id \t time \t history \t impressions`,
//!   where history is space-separated article ids and impressions are
//!   space-separated `articleId-label` tokens with label `0` or `1`.
//! - MIND-style news TSV: `article_id \t category \t subcategory \t title [\t ...]`.
//! - Generic events JSONL: one object per line with `userId`, `time` (epoch
//!   seconds) and optional `id` and `eventType`.
//!
//! Everything lands in a [`Corpus`], which serializes to the canonical JSONL
//! layout (one [`Event`] or [`Impression`] per line) and parses back losslessly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Click,
    View,
}

/// One timestamped user action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub user_id: String,
    /// UTC epoch seconds.
    pub timestamp: i64,
    pub article_id: Option<String>,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exposure {
    pub article_id: String,
    pub label: u8,
}

impl Exposure {
    pub fn clicked(&self) -> bool {
        self.label == 1
    }
}

/// A list of exposures shown to a user together with the history the user had at that moment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impression {
    pub impression_id: String,
    pub user_id: String,
    pub timestamp: i64,
    pub history: Vec<String>,
    pub exposures: Vec<Exposure>,
}

impl Impression {
    pub fn has_empty_history(&self) -> bool {
        self.history.is_empty()
    }

    /// Clicked article ids in exposure order.
    pub fn clicks(&self) -> impl Iterator<Item = &str> {
        self.exposures
            .iter()
            .filter(|e| e.clicked())
            .map(|e| e.article_id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleMeta {
    pub article_id: String,
    pub category: String,
    #[serde(default)]
    pub subcategory: String,
    pub title: String,
}

/// A canonical corpus line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Record {
    Impression(Impression),
    Event(Event),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLog {
    pub events: Vec<Event>,
    pub impressions: Vec<Impression>,
}

impl UserLog {
    pub fn interactions(&self, basis: CountBasis) -> usize {
        match basis {
            CountBasis::Events => self.events.len(),
            CountBasis::Clicks => self.events.iter().filter(|e| e.kind == EventKind::Click).count(),
            CountBasis::Impressions => self.impressions.len(),
        }
    }

    fn sort(&mut self) {
        // stable: ties keep input order
        self.events.sort_by_key(|e| e.timestamp);
        self.impressions.sort_by_key(|i| i.timestamp);
    }
}

/// What counts as one interaction for [`filter_min_interactions`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountBasis {
    #[default]
    Events,
    Clicks,
    Impressions,
}

/// Per-user chronologically sorted logs plus article metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub users: BTreeMap<String, UserLog>,
    pub articles: BTreeMap<String, ArticleMeta>,
}

impl Corpus {
    pub fn from_parts(events: Vec<Event>, impressions: Vec<Impression>, articles: Vec<ArticleMeta>) -> Self {
        let mut users: BTreeMap<String, UserLog> = BTreeMap::new();
        for e in events {
            users.entry(e.user_id.clone()).or_default().events.push(e);
        }
        for imp in impressions {
            users.entry(imp.user_id.clone()).or_default().impressions.push(imp);
        }
        users.par_iter_mut().for_each(|(_, log)| log.sort());
        let articles = articles.into_iter().map(|a| (a.article_id.clone(), a)).collect();
        Corpus { users, articles }
    }

    pub fn from_records(records: Vec<Record>, articles: Vec<ArticleMeta>) -> Self {
        let mut events = Vec::new();
        let mut impressions = Vec::new();
        for r in records {
            match r {
                Record::Event(e) => events.push(e),
                Record::Impression(i) => impressions.push(i),
            }
        }
        Self::from_parts(events, impressions, articles)
    }

    pub fn num_events(&self) -> usize {
        self.users.values().map(|u| u.events.len()).sum()
    }

    pub fn num_impressions(&self) -> usize {
        self.users.values().map(|u| u.impressions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.users
            .values()
            .all(|u| u.events.is_empty() && u.impressions.is_empty())
    }

    /// All events in canonical order: by user id, then timestamp.
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.users.values().flat_map(|u| u.events.iter())
    }

    pub fn impressions(&self) -> impl Iterator<Item = &Impression> {
        self.users.values().flat_map(|u| u.impressions.iter())
    }

    /// Adds one click event per clicked exposure, stamped with the impression time.
    pub fn derive_click_events(&mut self) {
        self.users.par_iter_mut().for_each(|(_, log)| {
            let derived: Vec<Event> = log
                .impressions
                .iter()
                .flat_map(|imp| {
                    imp.clicks().map(move |a| Event {
                        user_id: imp.user_id.clone(),
                        timestamp: imp.timestamp,
                        article_id: Some(a.to_string()),
                        kind: EventKind::Click,
                    })
                })
                .collect();
            log.events.extend(derived);
            log.sort();
        });
    }

    /// Removes exact duplicate events (same user, timestamp, article and kind).
    /// Returns the number removed.
    pub fn dedup_events(&mut self) -> usize {
        let before = self.num_events();
        for log in self.users.values_mut() {
            let mut seen = std::collections::HashSet::new();
            log.events.retain(|e| seen.insert(e.clone()));
        }
        before - self.num_events()
    }

    /// Replaces every user's impression histories with real-time histories.
    pub fn rebuild_histories(&mut self) -> Result<()> {
        self.users.par_iter_mut().try_for_each(|(_, log)| {
            log.impressions = build_realtime_history(&log.impressions)?;
            Ok(())
        })
    }

    /// Per-user sorted click timestamps (seconds).
    pub fn click_times(&self) -> BTreeMap<String, Vec<i64>> {
        self.users
            .iter()
            .map(|(u, log)| {
                let t = log
                    .events
                    .iter()
                    .filter(|e| e.kind == EventKind::Click)
                    .map(|e| e.timestamp)
                    .collect();
                (u.clone(), t)
            })
            .collect()
    }

    /// Writes `events.jsonl`, `impressions.jsonl` and `articles.jsonl` into `dir`.
    pub fn write_canonical(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(EVENTS_FILE), self.events())?;
        write_jsonl(&dir.join(IMPRESSIONS_FILE), self.impressions())?;
        write_jsonl(&dir.join(ARTICLES_FILE), self.articles.values())?;
        Ok(())
    }

    /// Reads a directory written by [`Corpus::write_canonical`]. Missing files are treated as empty.
    pub fn read_canonical(dir: &Path) -> Result<Self> {
        let mut records = Vec::new();
        for name in [EVENTS_FILE, IMPRESSIONS_FILE] {
            let path = dir.join(name);
            if path.exists() {
                let (mut r, report) = parse_canonical(&path)?;
                if report.skipped > 0 {
                    return Err(Error::InvalidInput(format!(
                        "{}: {} malformed canonical lines (first: {})",
                        path.display(),
                        report.skipped,
                        report.diagnostics.first().map(|d| d.to_string()).unwrap_or_default()
                    )));
                }
                records.append(&mut r);
            }
        }
        let articles_path = dir.join(ARTICLES_FILE);
        let articles = if articles_path.exists() {
            read_jsonl::<ArticleMeta>(&articles_path)?
        } else {
            Vec::new()
        };
        Ok(Self::from_records(records, articles))
    }
}

pub const EVENTS_FILE: &str = "events.jsonl";
pub const IMPRESSIONS_FILE: &str = "impressions.jsonl";
pub const ARTICLES_FILE: &str = "articles.jsonl";

pub(crate) fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let reader = open(path)?;
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Outcome of a skip-and-count parse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    pub lines: usize,
    pub records: usize,
    pub skipped: usize,
    pub empty_history: usize,
    /// First diagnostics only, capped at [`ParseReport::MAX_DIAGNOSTICS`].
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseReport {
    pub const MAX_DIAGNOSTICS: usize = 100;

    fn skip(&mut self, line: usize, message: impl Into<String>) {
        self.skipped += 1;
        if self.diagnostics.len() < Self::MAX_DIAGNOSTICS {
            self.diagnostics.push(Diagnostic {
                line,
                message: message.into(),
            });
        }
    }

    pub fn merge(&mut self, other: &ParseReport) {
        self.lines += other.lines;
        self.records += other.records;
        self.skipped += other.skipped;
        self.empty_history += other.empty_history;
        for d in &other.diagnostics {
            if self.diagnostics.len() < Self::MAX_DIAGNOSTICS {
                self.diagnostics.push(d.clone());
            }
        }
    }
}

/// Parses one `articleId-label` token.
pub fn parse_exposure_token(token: &str) -> std::result::Result<Exposure, String> {
    let (id, label) = token
        .rsplit_once('-')
        .ok_or_else(|| format!("exposure token {token:?} has no label suffix"))?;
    if id.is_empty() {
        return Err(format!("exposure token {token:?} has an empty article id"));
    }
    let label = match label {
        "0" => 0,
        "1" => 1,
        other => return Err(format!("exposure label {other:?} not in {{0,1}}")),
    };
    Ok(Exposure {
        article_id: id.to_string(),
        label,
    })
}

/// Parses a MIND time column (`11/11/2019 9:05:58 AM`) or plain epoch seconds, as UTC.
pub fn parse_mind_time(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    NaiveDateTime::parse_from_str(s, "%m/%d/%Y %I:%M:%S %p")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

fn parse_mind_line(line: &str) -> std::result::Result<Impression, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 5 {
        return Err(format!("expected 5 tab-separated columns, found {}", cols.len()));
    }
    let user_id = cols[1].trim();
    if user_id.is_empty() {
        return Err("empty user id".into());
    }
    let timestamp = parse_mind_time(cols[2]).ok_or_else(|| format!("unparseable time {:?}", cols[2]))?;
    if timestamp <= 0 {
        return Err(format!("non-positive timestamp {timestamp}"));
    }
    let history = cols[3].split_whitespace().map(str::to_string).collect();
    let exposures = cols[4]
        .split_whitespace()
        .map(parse_exposure_token)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if exposures.is_empty() {
        return Err("no exposures".into());
    }
    Ok(Impression {
        impression_id: cols[0].trim().to_string(),
        user_id: user_id.to_string(),
        timestamp,
        history,
        exposures,
    })
}

pub fn parse_mind_behaviors_reader<R: BufRead>(reader: R) -> Result<(Vec<Impression>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(format!("read failure at line {}: {e}", idx + 1)))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match parse_mind_line(line) {
            Ok(imp) => {
                if imp.has_empty_history() {
                    report.empty_history += 1;
                }
                report.records += 1;
                out.push(imp);
            }
            Err(msg) => report.skip(idx + 1, msg),
        }
    }
    Ok((out, report))
}

/// Parses a MIND-style behaviors file. Malformed lines are skipped and counted.
pub fn parse_mind_behaviors(path: &Path) -> Result<(Vec<Impression>, ParseReport)> {
    parse_mind_behaviors_reader(open(path)?)
}

pub fn parse_mind_news_reader<R: BufRead>(reader: R) -> Result<(Vec<ArticleMeta>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(format!("read failure at line {}: {e}", idx + 1)))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 || cols[0].trim().is_empty() {
            report.skip(idx + 1, format!("expected at least 4 columns, found {}", cols.len()));
            continue;
        }
        report.records += 1;
        out.push(ArticleMeta {
            article_id: cols[0].trim().to_string(),
            category: cols[1].trim().to_string(),
            subcategory: cols[2].trim().to_string(),
            title: cols[3].trim().to_string(),
        });
    }
    Ok((out, report))
}

pub fn parse_mind_news(path: &Path) -> Result<(Vec<ArticleMeta>, ParseReport)> {
    parse_mind_news_reader(open(path)?)
}

#[derive(Debug, Deserialize)]
struct RawJsonEvent {
    #[serde(rename = "userId")]
    user_id: Option<serde_json::Value>,
    time: Option<serde_json::Value>,
    id: Option<serde_json::Value>,
    #[serde(rename = "eventType")]
    event_type: Option<String>,
}

fn json_scalar_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn event_kind_from(tag: Option<&str>) -> EventKind {
    match tag.map(|s| s.to_ascii_lowercase()) {
        Some(t) if matches!(t.as_str(), "view" | "impression" | "exposure") => EventKind::View,
        _ => EventKind::Click,
    }
}

fn parse_jsonl_line(line: &str) -> std::result::Result<Event, String> {
    let raw: RawJsonEvent = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let user_id = raw
        .user_id
        .as_ref()
        .and_then(json_scalar_string)
        .filter(|s| !s.is_empty())
        .ok_or("missing userId")?;
    let timestamp = match raw.time.as_ref() {
        Some(serde_json::Value::Number(n)) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.is_finite()).map(|f| f.floor() as i64))
            .ok_or("time is not a finite number")?,
        Some(serde_json::Value::String(s)) => s.trim().parse::<i64>().map_err(|_| "time is not epoch seconds")?,
        _ => return Err("missing time".into()),
    };
    if timestamp <= 0 {
        return Err(format!("non-positive timestamp {timestamp}"));
    }
    Ok(Event {
        user_id,
        timestamp,
        article_id: raw.id.as_ref().and_then(json_scalar_string).filter(|s| !s.is_empty()),
        kind: event_kind_from(raw.event_type.as_deref()),
    })
}

/// Parses generic events JSONL. `eventType` values `view`, `impression` and
/// `exposure` map to [`EventKind::View`]; anything else, or no type, is a click.
pub fn parse_jsonl_events_reader<R: BufRead>(reader: R) -> Result<(Vec<Event>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(format!("read failure at line {}: {e}", idx + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match parse_jsonl_line(&line) {
            Ok(e) => {
                report.records += 1;
                out.push(e);
            }
            Err(msg) => report.skip(idx + 1, msg),
        }
    }
    Ok((out, report))
}

pub fn parse_jsonl_events(path: &Path) -> Result<(Vec<Event>, ParseReport)> {
    parse_jsonl_events_reader(open(path)?)
}

/// Parses canonical corpus lines (the output of [`Corpus::write_canonical`]).
pub fn parse_canonical_reader<R: BufRead>(reader: R) -> Result<(Vec<Record>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidInput(format!("read failure at line {}: {e}", idx + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match serde_json::from_str::<Record>(&line) {
            Ok(r) => {
                let valid = match &r {
                    Record::Event(e) => e.timestamp > 0 && !e.user_id.is_empty(),
                    Record::Impression(i) => {
                        i.timestamp > 0
                            && !i.user_id.is_empty()
                            && !i.exposures.is_empty()
                            && i.exposures.iter().all(|e| e.label <= 1)
                    }
                };
                if valid {
                    if let Record::Impression(i) = &r {
                        if i.has_empty_history() {
                            report.empty_history += 1;
                        }
                    }
                    report.records += 1;
                    out.push(r);
                } else {
                    report.skip(idx + 1, "record violates canonical invariants");
                }
            }
            Err(e) => report.skip(idx + 1, format!("not a canonical record: {e}")),
        }
    }
    Ok((out, report))
}

pub fn parse_canonical(path: &Path) -> Result<(Vec<Record>, ParseReport)> {
    parse_canonical_reader(open(path)?)
}

/// Rebuilds histories so that each impression sees every click made in earlier impressions.
///
/// The first impression keeps its given history; impression `k` gets the
/// history of `k - 1` followed by the clicks of `k - 1` in exposure order.
pub fn build_realtime_history(impressions: &[Impression]) -> Result<Vec<Impression>> {
    if let Some(w) = impressions.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::Unsorted(format!(
            "impression {} (t={}) precedes {} (t={})",
            w[0].impression_id, w[0].timestamp, w[1].impression_id, w[1].timestamp
        )));
    }
    let mut out: Vec<Impression> = Vec::with_capacity(impressions.len());
    for imp in impressions {
        let mut next = imp.clone();
        if let Some(prev) = out.last() {
            let mut history = prev.history.clone();
            history.extend(prev.clicks().map(str::to_string));
            next.history = history;
        }
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterSummary {
    pub retained: usize,
    pub dropped: usize,
}

/// Keeps users with strictly more than `threshold` interactions.
pub fn filter_min_interactions(corpus: Corpus, threshold: usize, basis: CountBasis) -> (Corpus, FilterSummary) {
    let Corpus { users, articles } = corpus;
    let total = users.len();
    let users: BTreeMap<_, _> = users
        .into_iter()
        .filter(|(_, log)| log.interactions(basis) > threshold)
        .collect();
    let summary = FilterSummary {
        retained: users.len(),
        dropped: total - users.len(),
    };
    (Corpus { users, articles }, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn imp(id: &str, t: i64, history: &[&str], exposures: &[(&str, u8)]) -> Impression {
        Impression {
            impression_id: id.into(),
            user_id: "u".into(),
            timestamp: t,
            history: history.iter().map(|s| s.to_string()).collect(),
            exposures: exposures
                .iter()
                .map(|(a, l)| Exposure {
                    article_id: a.to_string(),
                    label: *l,
                })
                .collect(),
        }
    }

    fn event(user: &str, t: i64) -> Event {
        Event {
            user_id: user.into(),
            timestamp: t,
            article_id: None,
            kind: EventKind::Click,
        }
    }

    #[test]
    fn exposure_token_grammar() {
        assert_eq!(
            parse_exposure_token("N55689-1").unwrap(),
            Exposure {
                article_id: "N55689".into(),
                label: 1
            }
        );
        assert_eq!(parse_exposure_token("N1-0").unwrap().label, 0);
        assert!(parse_exposure_token("N1-2").is_err());
        assert!(parse_exposure_token("N1").is_err());
        assert!(parse_exposure_token("-1").is_err());
    }

    #[test]
    fn mind_lines() {
        let data = "1\tU1\t11/11/2019 9:05:58 AM\tN1 N2\tN3-1 N4-0\n\
                    2\tU2\t11/11/2019 9:06:00 AM\t\tN5-0\n\
                    3\tU3\t11/11/2019 9:07:00 AM\tN1\tN1-2\n\
                    4\tU4\tbad\tN1\tN1-0\n";
        let (imps, report) = parse_mind_behaviors_reader(data.as_bytes()).unwrap();
        assert_eq!(imps.len(), 2);
        assert_eq!(imps[0].history, vec!["N1", "N2"]);
        assert_eq!(imps[0].timestamp, 1_573_463_158);
        assert!(imps[1].has_empty_history());
        assert_eq!(report.empty_history, 1);
        assert_eq!(report.skipped, 2);
        assert_eq!(report.diagnostics[0].line, 3);
        assert_eq!(report.diagnostics[1].line, 4);
    }

    #[test]
    fn jsonl_lines() {
        let data = "{\"userId\":\"u1\",\"time\":100,\"id\":\"a1\"}\n{\"time\":100}\n\
                    {\"userId\":\"u2\",\"time\":200,\"eventType\":\"view\",\"extra\":[1,2]}\n\
                    {\"userId\":\"u3\",\"time\":300}\n";
        let (events, report) = parse_jsonl_events_reader(data.as_bytes()).unwrap();
        assert_eq!(report.skipped, 1);
        assert_eq!(events.len(), 3);
        assert_eq!(
            events[0],
            Event {
                user_id: "u1".into(),
                timestamp: 100,
                article_id: Some("a1".into()),
                kind: EventKind::Click
            }
        );
        assert_eq!(events[1].kind, EventKind::View);
        assert_eq!(events[2].user_id, "u3");
    }

    #[test]
    fn realtime_history_appends_clicks() {
        let imps = vec![
            imp("1", 10, &["a"], &[("b", 1), ("x", 0)]),
            imp("2", 20, &[], &[("c", 1), ("y", 0), ("d", 1)]),
            imp("3", 30, &[], &[("z", 0)]),
            imp("4", 40, &[], &[("w", 0)]),
        ];
        let out = build_realtime_history(&imps).unwrap();
        let histories: Vec<Vec<String>> = out.iter().map(|i| i.history.clone()).collect();
        assert_eq!(histories[0], vec!["a"]);
        assert_eq!(histories[1], vec!["a", "b"]);
        assert_eq!(histories[2], vec!["a", "b", "c", "d"]);
        // no clicks in impression 3: identity
        assert_eq!(histories[3], histories[2]);
    }

    #[test]
    fn realtime_history_rejects_unsorted() {
        let imps = vec![imp("1", 20, &[], &[("b", 1)]), imp("2", 10, &[], &[("c", 1)])];
        assert!(matches!(build_realtime_history(&imps), Err(Error::Unsorted(_))));
    }

    #[test]
    fn min_interaction_filter_is_strict() {
        let mut events: Vec<Event> = (0..10).map(|t| event("ten", t + 1)).collect();
        events.extend((0..11).map(|t| event("eleven", t + 1)));
        events.push(event("one", 5));
        let corpus = Corpus::from_parts(events, vec![], vec![]);
        let (kept, summary) = filter_min_interactions(corpus.clone(), 10, CountBasis::Events);
        assert_eq!(kept.users.keys().collect::<Vec<_>>(), vec!["eleven"]);
        assert_eq!(
            summary,
            FilterSummary {
                retained: 1,
                dropped: 2
            }
        );
        let (all, _) = filter_min_interactions(corpus, 0, CountBasis::Events);
        assert_eq!(all.users.len(), 3);
    }

    #[test]
    fn derived_clicks_and_dedup() {
        let mut c = Corpus::from_parts(
            vec![event("u", 5), event("u", 5)],
            vec![imp("1", 10, &[], &[("b", 1), ("x", 0), ("c", 1)])],
            vec![],
        );
        assert_eq!(c.dedup_events(), 1);
        c.derive_click_events();
        let arts: Vec<_> = c.events().map(|e| e.article_id.clone()).collect();
        assert_eq!(arts, vec![None, Some("b".into()), Some("c".into())]);
    }
}
