use std::path::Path;
use std::process::{Command, Output};

fn newsrhythm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newsrhythm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("json summary")
}

const BEHAVIORS: &str = "\
1\tU1\t11/11/2019 9:05:01 AM\tN1 N2\tN3-1 N4-0 N5-0
2\tU2\t11/11/2019 9:10:00 AM\tN3\tN1-0 N2-1 N6-0
3\tU3\t11/11/2019 10:00:00 PM\t\tN1-1 N3-0
4\tU1\t11/12/2019 8:00:00 AM\tN1 N2 N3\tN6-1 N5-0 N4-0
";

const NEWS: &str = "\
N1\tsports\tsoccer\tLate goal seals the derby\t\t\t\t
N2\tsports\ttennis\tFive set final goes late\t\t\t\t
N3\tpolitics\tvote\tBudget vote delayed again\t\t\t\t
N4\tpolitics\tvote\tCouncil debates the budget\t\t\t\t
N5\tweather\tstorm\tStorm warning for the coast\t\t\t\t
N6\tsports\tsoccer\tDerby tickets sell out\t\t\t\t
";

fn mind_fixture(dir: &Path) {
    std::fs::write(dir.join("behaviors.tsv"), BEHAVIORS).unwrap();
    std::fs::write(dir.join("news.tsv"), NEWS).unwrap();
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = newsrhythm(
        &["ingest", "--format", "mind", "--behaviors", "nope.tsv", "--out", "out"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.tsv"), "{}", stderr(&o));
}

#[test]
fn empty_corpus_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("events.jsonl"), "").unwrap();
    let o = newsrhythm(
        &[
            "ingest",
            "--format",
            "jsonl",
            "--events",
            "events.jsonl",
            "--out",
            "corpus",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = newsrhythm(&["temporal", "--corpus", "corpus", "--out", "t"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn invalid_exit_probability_in_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "[abm.exit_probs]\nmp = 1.5\ndp = 0.3\nep = 0.2\nlnp = 0.8\n",
    )
    .unwrap();
    let o = newsrhythm(&["--config", "run.toml", "simulate", "--agents", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1.5"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "[abm]\nlambda = 0.3\n").unwrap();
    let o = newsrhythm(&["--config", "run.toml", "config"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_round_trips_through_toml() {
    let dir = tempfile::tempdir().unwrap();
    let o = newsrhythm(&["config"], dir.path());
    assert!(o.status.success());
    std::fs::write(dir.path().join("echo.toml"), &o.stdout).unwrap();
    let again = newsrhythm(&["--config", "echo.toml", "config"], dir.path());
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(again.stdout, o.stdout);
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_is_reproducible_and_reingests_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--agents", "40", "--seed", "7", "--out", "sim"];
    assert!(newsrhythm(&args, dir.path()).status.success());
    let first = read_dir_bytes(&dir.path().join("sim"));
    std::fs::remove_dir_all(dir.path().join("sim")).unwrap();
    assert!(newsrhythm(&args, dir.path()).status.success());
    assert_eq!(read_dir_bytes(&dir.path().join("sim")), first);

    let s = json(&newsrhythm(
        &[
            "--json",
            "ingest",
            "--format",
            "canonical",
            "--corpus",
            "sim",
            "--out",
            "again",
        ],
        dir.path(),
    ));
    assert_eq!(s["dedup_removed"], 0);
    let a = std::fs::read(dir.path().join("sim/events.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("again/events.jsonl")).unwrap();
    assert_eq!(a, b);
    assert!(dir.path().join("again/events.jsonl.meta.json").exists());
}

#[test]
fn mind_ingest_and_tag_clusters() {
    let dir = tempfile::tempdir().unwrap();
    mind_fixture(dir.path());
    let s = json(&newsrhythm(
        &[
            "--json",
            "ingest",
            "--format",
            "mind",
            "--behaviors",
            "behaviors.tsv",
            "--news",
            "news.tsv",
            "--out",
            "c",
        ],
        dir.path(),
    ));
    assert_eq!(s["users"], 3);
    assert_eq!(s["impressions"], 4);
    assert_eq!(s["events"], 4);

    let s = json(&newsrhythm(
        &["--json", "cluster", "--corpus", "c", "--out", "k", "--k", "2"],
        dir.path(),
    ));
    assert_eq!(s["scores"].as_array().unwrap().len(), 3);
    let scores = std::fs::read_to_string(dir.path().join("k/scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 4);
    assert!(scores.starts_with("algorithm,k,silhouette,seed,best,error"));
}

#[test]
fn activity_clusters_are_labelled() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = String::new();
    for u in 0..6 {
        let hour = if u < 3 { 10 } else { 2 };
        for day in 0..5 {
            for k in 0..3 {
                let t = 1_573_257_600 + day * 86_400 + hour * 3600 + k * 60 + u * 7;
                lines.push_str(&format!("{{\"userId\":\"u{u}\",\"time\":{t}}}\n"));
            }
        }
    }
    std::fs::write(dir.path().join("ev.jsonl"), lines).unwrap();
    assert!(newsrhythm(
        &["ingest", "--format", "jsonl", "--events", "ev.jsonl", "--out", "c"],
        dir.path()
    )
    .status
    .success());
    let o = newsrhythm(
        &["cluster", "--corpus", "c", "--out", "k", "--by", "activity", "--k", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Day") && text.contains("Night"), "{text}");
    let assignments = std::fs::read_to_string(dir.path().join("k/assignments.csv")).unwrap();
    assert!(assignments.lines().next().unwrap().contains("daypart"));
    assert_eq!(assignments.lines().count(), 7);
}

#[test]
fn content_reports_missing_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    mind_fixture(dir.path());
    assert!(newsrhythm(
        &[
            "ingest",
            "--format",
            "mind",
            "--behaviors",
            "behaviors.tsv",
            "--news",
            "news.tsv",
            "--out",
            "c"
        ],
        dir.path()
    )
    .status
    .success());
    // N6 has no vector, so impressions 2 and 4 cannot be scored
    let emb = "d=3\nN1 1 0 0\nN2 0.9 0.1 0\nN3 0 1 0\nN4 0 0.8 0.2\nN5 0 0 1\n";
    std::fs::write(dir.path().join("emb.txt"), emb).unwrap();
    let o = newsrhythm(
        &[
            "--json",
            "content",
            "--corpus",
            "c",
            "--out",
            "f",
            "--embeddings",
            "emb.txt",
        ],
        dir.path(),
    );
    let s = json(&o);
    assert_eq!(s["embedding_source"], "file");
    assert_eq!(s["diagnostics"]["impressions_in"], 4);
    assert_eq!(s["diagnostics"]["empty_history"], 1);
    assert_eq!(s["diagnostics"]["missing_embedding"], 2);
    assert_eq!(s["diagnostics"]["feature_rows"], 3);
    assert!(dir.path().join("f/features.csv").exists());
}

#[test]
fn malformed_embedding_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    mind_fixture(dir.path());
    newsrhythm(
        &[
            "ingest",
            "--format",
            "mind",
            "--behaviors",
            "behaviors.tsv",
            "--news",
            "news.tsv",
            "--out",
            "c",
        ],
        dir.path(),
    );
    std::fs::write(dir.path().join("emb.txt"), "d=3\nN1 1 0\n").unwrap();
    let o = newsrhythm(
        &["content", "--corpus", "c", "--out", "f", "--embeddings", "emb.txt"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_flag_value_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = newsrhythm(&["cluster", "--algos", "kmeans,spectral"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
