use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// How a signature's tags become a vector over the category vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagEncoding {
    /// Rank `r` (0-based) of `n` tags gets weight `n - r`.
    #[default]
    RankWeighted,
    MultiHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestSignature {
    pub user_id: String,
    pub top_tags: Vec<String>,
    pub tag_vector: Vec<f64>,
}

/// Categories ranked by click count, ties broken lexicographically; at most `n`.
pub fn top_n_tags(counts: &BTreeMap<String, usize>, n: usize) -> Vec<String> {
    let mut ranked: Vec<(&String, usize)> = counts.iter().filter(|(_, &c)| c > 0).map(|(k, &c)| (k, c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(n).map(|(k, _)| k.clone()).collect()
}

fn encode(tags: &[String], n: usize, vocab: &[String], encoding: TagEncoding) -> Vec<f64> {
    let mut v = vec![0.0; vocab.len()];
    for (r, t) in tags.iter().enumerate() {
        if let Ok(i) = vocab.binary_search(t) {
            v[i] = match encoding {
                TagEncoding::RankWeighted => (n - r) as f64,
                TagEncoding::MultiHot => 1.0,
            };
        }
    }
    v
}

/// Builds signatures for every user with at least one categorised click.
///
/// Returns the signatures, the sorted vocabulary of tags that appear in any
/// signature, and the ids of users excluded for lack of categorised clicks.
pub fn build_signatures(
    user_counts: &BTreeMap<String, BTreeMap<String, usize>>,
    n: usize,
    encoding: TagEncoding,
) -> (Vec<InterestSignature>, Vec<String>, Vec<String>) {
    let mut excluded = Vec::new();
    let mut tops = Vec::new();
    for (user, counts) in user_counts {
        let tags = top_n_tags(counts, n);
        if tags.is_empty() {
            excluded.push(user.clone());
        } else {
            tops.push((user.clone(), tags));
        }
    }
    let vocab: Vec<String> = tops
        .iter()
        .flat_map(|(_, t)| t.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sigs = tops
        .into_iter()
        .map(|(user_id, top_tags)| InterestSignature {
            tag_vector: encode(&top_tags, n, &vocab, encoding),
            user_id,
            top_tags,
        })
        .collect();
    (sigs, vocab, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[(&str, usize)]) -> BTreeMap<String, usize> {
        v.iter().map(|(k, c)| (k.to_string(), *c)).collect()
    }

    #[test]
    fn ranking_and_ties() {
        assert_eq!(
            top_n_tags(&counts(&[("sport", 5), ("news", 3), ("tech", 1)]), 3),
            ["sport", "news", "tech"]
        );
        assert_eq!(top_n_tags(&counts(&[("b", 2), ("a", 2)]), 3), ["a", "b"]);
        assert_eq!(top_n_tags(&counts(&[("x", 9)]), 3), ["x"]);
        assert_eq!(
            top_n_tags(&counts(&[("a", 1), ("b", 2), ("c", 3), ("d", 4)]), 3),
            ["d", "c", "b"]
        );
    }

    #[test]
    fn encodings() {
        let mut users = BTreeMap::new();
        users.insert("u1".to_string(), counts(&[("a", 3), ("b", 2), ("c", 1)]));
        users.insert("u2".to_string(), counts(&[("d", 1)]));
        users.insert("u3".to_string(), BTreeMap::new());
        let (sigs, vocab, excluded) = build_signatures(&users, 3, TagEncoding::RankWeighted);
        assert_eq!(vocab, ["a", "b", "c", "d"]);
        assert_eq!(excluded, ["u3"]);
        assert_eq!(sigs[0].tag_vector, [3.0, 2.0, 1.0, 0.0]);
        assert_eq!(sigs[1].tag_vector, [0.0, 0.0, 0.0, 3.0]);
        let (sigs, _, _) = build_signatures(&users, 3, TagEncoding::MultiHot);
        assert_eq!(sigs[0].tag_vector, [1.0, 1.0, 1.0, 0.0]);
    }
}
