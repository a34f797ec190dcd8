//! Synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use newsrhythm::content::{hash_embed, EmbeddingStore};
use newsrhythm::ingest::{ArticleMeta, Exposure, Impression};
use newsrhythm::rng::rng_from_seed;
use newsrhythm::sessions::ActivityProfile;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Four isotropic Gaussian blobs in the plane, centres 10 apart.
pub fn blobs(per_blob: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (10.0, 10.0)];
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for (label, (cx, cy)) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            x.push(vec![cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)]);
            labels.push(label);
        }
    }
    (x, labels)
}

/// Hourly profiles of users whose clicks cluster around one of two hours.
pub fn activity_users(per_group: usize, hours: (f64, f64), seed: u64) -> (Vec<ActivityProfile>, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let spread = Normal::new(0.0, 0.75).unwrap();
    let mut profiles = Vec::new();
    let mut labels = Vec::new();
    for (g, h) in [hours.0, hours.1].into_iter().enumerate() {
        for _ in 0..per_group {
            let times: Vec<f64> = (0..40)
                .map(|day| {
                    let hour = (h + 0.5 + spread.sample(&mut rng)).rem_euclid(24.0);
                    day as f64 * 86_400.0 + hour * 3600.0
                })
                .collect();
            profiles.push(ActivityProfile::from_timestamps(times, 0));
            labels.push(g);
        }
    }
    (profiles, labels)
}

pub const CATEGORIES: usize = 16;
const ARTICLES_PER_CATEGORY: usize = 40;
const TOPIC_WORDS: usize = 20;
pub const EMBED_DIM: usize = 64;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn entropy_bits(cats: &[usize]) -> f64 {
    let mut counts = BTreeMap::new();
    for c in cats {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    let n = cats.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Synthetic news log with one click per impression drawn from
/// `softmax(tau * m_i)`, where `m_i` is the median cosine similarity of
/// exposure `i` to the user's history.
pub struct ContentFixture {
    pub impressions: Vec<Impression>,
    pub articles: BTreeMap<String, ArticleMeta>,
    pub store: EmbeddingStore,
    /// Generator-side `m` per impression and exposure.
    pub m: BTreeMap<String, Vec<f64>>,
}

/// Builds `per_bin` impressions for each entropy bin in `bins`;
/// `tau(bin)` sets the click temperature for impressions in that bin.
pub fn content_fixture(per_bin: usize, bins: &[(f64, f64)], tau: impl Fn(usize) -> f64, seed: u64) -> ContentFixture {
    let mut rng = rng_from_seed(seed);
    let shared: Vec<String> = (0..50).map(|i| format!("common{i}")).collect();
    let mut articles = BTreeMap::new();
    let mut store = EmbeddingStore::new(EMBED_DIM);
    let mut by_cat: Vec<Vec<String>> = vec![Vec::new(); CATEGORIES];
    for (c, ids) in by_cat.iter_mut().enumerate() {
        for j in 0..ARTICLES_PER_CATEGORY {
            let mut words: Vec<String> = (0..5)
                .map(|_| format!("topic{c}w{}", rng.random_range(0..TOPIC_WORDS)))
                .collect();
            words.extend((0..2).map(|_| shared[rng.random_range(0..shared.len())].clone()));
            let title = words.join(" ");
            let id = format!("N{c}x{j}");
            store
                .insert(id.clone(), hash_embed(&title, EMBED_DIM).unwrap())
                .unwrap();
            articles.insert(
                id.clone(),
                ArticleMeta {
                    article_id: id.clone(),
                    category: format!("cat{c:02}"),
                    subcategory: String::new(),
                    title,
                },
            );
            ids.push(id);
        }
    }
    let cat_of = |id: &str| -> usize { id[1..id.find('x').unwrap()].parse().unwrap() };

    // category counts that land each bin's entropy roughly in its middle
    let spread_for = |bin: usize| match bin {
        0 => 3..=4,
        1 => 5..=7,
        _ => 9..=12,
    };
    let mut impressions = Vec::new();
    let mut m_all = BTreeMap::new();
    let mut serial = 0usize;
    for (b, &(lo, hi)) in bins.iter().enumerate() {
        let t = tau(b);
        let mut made = 0;
        while made < per_bin {
            let mut cats: Vec<usize> = (0..CATEGORIES).collect();
            cats.shuffle(&mut rng);
            let favored = [cats[0], cats[1]];
            let history: Vec<String> = (0..15)
                .map(|_| {
                    let c = favored[rng.random_range(0..2)];
                    by_cat[c][rng.random_range(0..ARTICLES_PER_CATEGORY)].clone()
                })
                .collect();
            let len = rng.random_range(10..=15);
            let k = rng.random_range(spread_for(b));
            let mut pool: Vec<usize> = (0..CATEGORIES).collect();
            pool.shuffle(&mut rng);
            let mut chosen: Vec<usize> = pool[..k].to_vec();
            if rng.random_bool(0.5) {
                chosen[0] = favored[0];
            }
            let ecats: Vec<usize> = (0..len).map(|_| chosen[rng.random_range(0..k)]).collect();
            let en = entropy_bits(&ecats);
            let last = b + 1 == bins.len();
            if en < lo || en > hi || (!last && en == hi) {
                continue;
            }
            let exposures: Vec<String> = ecats
                .iter()
                .map(|&c| by_cat[c][rng.random_range(0..ARTICLES_PER_CATEGORY)].clone())
                .collect();
            let m: Vec<f64> = exposures
                .iter()
                .map(|e| {
                    let v = store.get(e).unwrap();
                    median(history.iter().map(|h| cosine(v, store.get(h).unwrap())).collect())
                })
                .collect();
            let top = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = m.iter().map(|x| (t * (x - top)).exp()).collect();
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut click = w.len() - 1;
            for (i, wi) in w.iter().enumerate() {
                if u < *wi {
                    click = i;
                    break;
                }
                u -= wi;
            }
            let id = format!("imp{serial:06}");
            serial += 1;
            debug_assert!(exposures.iter().all(|e| cat_of(e) < CATEGORIES));
            impressions.push(Impression {
                impression_id: id.clone(),
                user_id: format!("user{:04}", serial % 300),
                timestamp: 1_573_300_000 + serial as i64 * 60,
                history,
                exposures: exposures
                    .into_iter()
                    .enumerate()
                    .map(|(i, article_id)| Exposure {
                        article_id,
                        label: u8::from(i == click),
                    })
                    .collect(),
            });
            m_all.insert(id, m);
            made += 1;
        }
    }
    ContentFixture {
        impressions,
        articles,
        store,
        m: m_all,
    }
}

/// Writes a content fixture as MIND-style behaviors and news TSV files.
pub fn write_mind(fx: &ContentFixture, behaviors: &std::path::Path, news: &std::path::Path) {
    use std::fmt::Write;
    let mut b = String::new();
    for imp in &fx.impressions {
        let t = chrono::DateTime::from_timestamp(imp.timestamp, 0).unwrap().naive_utc();
        let tokens: Vec<String> = imp
            .exposures
            .iter()
            .map(|e| format!("{}-{}", e.article_id, e.label))
            .collect();
        writeln!(
            b,
            "{}\t{}\t{}\t{}\t{}",
            imp.impression_id,
            imp.user_id,
            t.format("%m/%d/%Y %I:%M:%S %p"),
            imp.history.join(" "),
            tokens.join(" ")
        )
        .unwrap();
    }
    std::fs::write(behaviors, b).unwrap();
    let mut n = String::new();
    for a in fx.articles.values() {
        writeln!(
            n,
            "{}\t{}\t{}\t{}\t\t\t\t",
            a.article_id, a.category, a.subcategory, a.title
        )
        .unwrap();
    }
    std::fs::write(news, n).unwrap();
}
