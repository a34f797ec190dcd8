mod support;

use std::collections::BTreeMap;

use newsrhythm::cohorts::{adjusted_rand_index, kmeans, KMeansOptions};
use newsrhythm::content::{cosine_similarity, exposure_entropy, wasserstein_1d};
use newsrhythm::ingest::{parse_canonical_reader, Corpus, Event, EventKind};
use newsrhythm::sessions::segment_sessions;
use newsrhythm::temporal::{eval_fourier, FourierModel};
use proptest::prelude::*;

fn events_strategy() -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec(
        (
            0u8..5,
            1_500_000_000i64..1_500_500_000,
            prop::option::of(0u16..50),
            any::<bool>(),
        ),
        0..60,
    )
    .prop_map(|raw| {
        raw.into_iter()
            .map(|(u, t, a, click)| Event {
                user_id: format!("u{u}"),
                timestamp: t,
                article_id: a.map(|a| format!("N{a}")),
                kind: if click { EventKind::Click } else { EventKind::View },
            })
            .collect()
    })
}

fn canonical_bytes(corpus: &Corpus) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    corpus.write_canonical(dir.path()).unwrap();
    let mut out = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    for p in names {
        out.extend(std::fs::read(p).unwrap());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_round_trip_is_identity(events in events_strategy()) {
        let mut corpus = Corpus::from_parts(events, Vec::new(), Vec::new());
        corpus.dedup_events();
        let dir = tempfile::tempdir().unwrap();
        corpus.write_canonical(dir.path()).unwrap();
        let back = Corpus::read_canonical(dir.path()).unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(canonical_bytes(&back), canonical_bytes(&corpus));
    }

    #[test]
    fn canonical_lines_parse_back(events in events_strategy()) {
        let corpus = Corpus::from_parts(events.clone(), Vec::new(), Vec::new());
        let dir = tempfile::tempdir().unwrap();
        corpus.write_canonical(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
        let (records, report) = parse_canonical_reader(text.as_bytes()).unwrap();
        prop_assert_eq!(records.len(), events.len());
        prop_assert!(report.diagnostics.is_empty());
    }

    #[test]
    fn sessions_partition_actions(
        mut times in prop::collection::vec(0i64..200_000, 1..80),
        threshold in 1i64..20_000,
    ) {
        times.sort_unstable();
        let sessions = segment_sessions("u", &times, threshold).unwrap();
        let flat: Vec<i64> = sessions.iter().flat_map(|s| s.action_times.iter().copied()).collect();
        prop_assert_eq!(&flat, &times);
        for s in &sessions {
            prop_assert!(s.deltas.iter().all(|d| *d < threshold));
        }
        for w in sessions.windows(2) {
            prop_assert!(w[1].start - w[0].end >= threshold);
        }
    }

    #[test]
    fn session_count_falls_with_threshold(
        mut times in prop::collection::vec(0i64..200_000, 1..80),
        a in 1i64..20_000,
        b in 1i64..20_000,
    ) {
        times.sort_unstable();
        let (lo, hi) = (a.min(b), a.max(b));
        let n_lo = segment_sessions("u", &times, lo).unwrap().len();
        let n_hi = segment_sessions("u", &times, hi).unwrap().len();
        prop_assert!(n_hi <= n_lo);
    }

    #[test]
    fn wasserstein_axioms(
        a in prop::collection::vec(-50.0f64..50.0, 1..40),
        b in prop::collection::vec(-50.0f64..50.0, 1..40),
        c in prop::collection::vec(-50.0f64..50.0, 1..40),
        shift in -20.0f64..20.0,
    ) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        let ba = wasserstein_1d(&b, &a).unwrap();
        let ac = wasserstein_1d(&a, &c).unwrap();
        let cb = wasserstein_1d(&c, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
        prop_assert!(wasserstein_1d(&a, &a).unwrap().abs() < 1e-12);
        prop_assert!(ab <= ac + cb + 1e-9);
        let shifted: Vec<f64> = a.iter().map(|x| x + shift).collect();
        prop_assert!((wasserstein_1d(&a, &shifted).unwrap() - shift.abs()).abs() < 1e-9);
    }

    #[test]
    fn entropy_is_bounded(cats in prop::collection::vec(0u8..20, 1..40)) {
        let names: Vec<String> = cats.iter().map(|c| format!("c{c}")).collect();
        let distinct = cats.iter().collect::<std::collections::BTreeSet<_>>().len();
        let en = exposure_entropy(&names);
        prop_assert!(en >= -1e-12);
        prop_assert!(en <= (distinct as f64).log2() + 1e-12);
        if distinct == 1 {
            prop_assert_eq!(en, 0.0);
        }
    }

    #[test]
    fn fourier_series_is_periodic(
        a0 in -5.0f64..5.0,
        coefs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..5),
        t in -100.0f64..100.0,
        k in -5i32..5,
    ) {
        let m = FourierModel { period: 24.0, a0, coefficients: coefs };
        let lhs = eval_fourier(&m, t);
        let rhs = eval_fourier(&m, t + 24.0 * k as f64);
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn cosine_ignores_positive_scale(
        u in prop::collection::vec(-10.0f64..10.0, 3),
        v in prop::collection::vec(-10.0f64..10.0, 3),
        s in 0.01f64..100.0,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let base = cosine_similarity(&u, &v).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| x * s).collect();
        prop_assert!((cosine_similarity(&scaled, &v).unwrap() - base).abs() < 1e-9);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&base));
    }

    #[test]
    fn kmeans_labels_survive_uniform_scaling(seed in 0u64..1000, s in 0.1f64..50.0) {
        let (x, _) = support::blobs(15, 0.5, seed);
        let scaled: Vec<Vec<f64>> = x.iter().map(|p| p.iter().map(|v| v * s).collect()).collect();
        let opts = KMeansOptions::default();
        let a = kmeans(&x, 4, seed, &opts).unwrap();
        let b = kmeans(&scaled, 4, seed, &opts).unwrap();
        prop_assert_eq!(adjusted_rand_index(&a.labels, &b.labels).unwrap(), 1.0);
    }
}

#[test]
fn dedup_is_idempotent() {
    let e = |t| Event {
        user_id: "u".into(),
        timestamp: t,
        article_id: Some("N1".into()),
        kind: EventKind::Click,
    };
    let mut corpus = Corpus::from_parts(vec![e(5), e(5), e(9), e(5)], Vec::new(), Vec::new());
    assert_eq!(corpus.dedup_events(), 2);
    let once = corpus.clone();
    assert_eq!(corpus.dedup_events(), 0);
    assert_eq!(corpus, once);
    let counts: BTreeMap<_, _> = corpus.users.iter().map(|(u, l)| (u.clone(), l.events.len())).collect();
    assert_eq!(counts["u"], 2);
}
