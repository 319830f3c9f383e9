mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Cursor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{corpus_from_ids, random_corpus};
use stormtopics::corpus::{self, IngestOptions, TokenizerRules};
use stormtopics::Error;

fn rules() -> TokenizerRules {
    TokenizerRules::default()
}

#[test]
fn tokenizer_examples() {
    assert_eq!(corpus::tokenize("Hurricane Sandy!!", &rules()), ["hurricane", "sandy"]);
    assert_eq!(corpus::tokenize("the storm is here http://t.co/x @NWS", &rules()), ["storm"]);
    assert!(corpus::tokenize("", &rules()).is_empty());
}

fn record(id: usize, user: &str, ts: &str, text: &str) -> String {
    serde_json::json!({"id": id.to_string(), "user_id": user, "timestamp": ts, "text": text}).to_string()
}

#[test]
fn malformed_lines_are_counted_not_fatal() {
    let lines = [
        record(1, "a", "2012-10-28T10:00:00Z", "storm coming"),
        "{not json".to_string(),
        record(2, "b", "2012-10-29T10:00:00Z", "power out"),
        record(3, "a", "2012-10-30T10:00:00Z", "flooding again"),
    ];
    let (c, report) = corpus::ingest(Cursor::new(lines.join("\n")), &IngestOptions::default()).unwrap();
    assert_eq!(c.num_docs(), 3);
    assert_eq!(report.skipped, 1);
    assert_eq!(report.accepted, 3);
}

#[test]
fn empty_text_records_are_dropped() {
    let lines = [
        record(1, "a", "2012-10-28T10:00:00Z", "storm coming"),
        record(2, "b", "2012-10-29T10:00:00Z", "the is a http://x.y"),
    ];
    let (c, report) = corpus::ingest(Cursor::new(lines.join("\n")), &IngestOptions::default()).unwrap();
    assert_eq!(c.num_docs(), 1);
    assert_eq!(report.empty, 1);
}

#[test]
fn mostly_malformed_input_aborts() {
    let text = format!("{}\nnope\nnope\n", record(1, "a", "2012-10-28T10:00:00Z", "storm"));
    let err = corpus::ingest(Cursor::new(text), &IngestOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Format(_)), "{err}");
}

#[test]
fn ingested_token_total_matches_per_line_tokenization() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let fillers = ["power", "outage", "NYC", "flooding!", "#Sandy", "@fema", "http://t.co/q", "the", "subway", "2012", "it's", "Don't"];
    let lines: Vec<String> = (0..300)
        .map(|i| {
            let mut words: Vec<&str> = (0..rng.random_range(0..12)).map(|_| fillers[rng.random_range(0..fillers.len())]).collect();
            words.insert(rng.random_range(0..=words.len()), "sandy");
            record(i, &format!("u{}", i % 17), &format!("2012-10-{:02}T08:30:00Z", 22 + i % 10), &words.join(" "))
        })
        .collect();
    let (c, report) = corpus::ingest(Cursor::new(lines.join("\n")), &IngestOptions::default()).unwrap();

    // Independent pass: parse each line on its own and tokenize its text.
    let r = rules();
    let expected: u64 = lines
        .iter()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            corpus::tokenize(v["text"].as_str().unwrap(), &r).len() as u64
        })
        .sum();
    assert_eq!(c.num_tokens(), expected);
    assert_eq!(report.tokens, expected);
    assert_eq!(c.num_docs(), 300);
}

#[test]
fn keyword_filter_examples() {
    let c = corpus_from_ids(&[vec![1], vec![0, 1]], &[], &[]);
    let sandy = c.vocab().word(0).to_string();
    assert_eq!(corpus::keyword_filter(&c, &sandy).unwrap().num_docs(), 1);
    let all = c.vocab().word(1).to_string();
    assert_eq!(corpus::keyword_filter(&c, &all).unwrap().docs(), c.docs());
    assert!(matches!(corpus::keyword_filter(&c, "absent"), Err(Error::Empty(_))));
}

#[test]
fn keyword_filter_matches_linear_scan() {
    let c = random_corpus(7, 100, 40, 8, 5);
    for w in 0..c.vocab().len() {
        let word = c.vocab().word(w as u32);
        let expected = c.docs().iter().filter(|d| d.tokens.iter().any(|&t| c.vocab().word(t) == word)).count();
        match corpus::keyword_filter(&c, word) {
            Ok(f) => {
                assert_eq!(f.num_docs(), expected);
                assert!(f.docs().iter().all(|d| d.tokens.iter().any(|&t| f.vocab().word(t) == word)));
            }
            Err(_) => assert_eq!(expected, 0),
        }
    }
}

#[test]
fn activity_filter_matches_histogram_oracle() {
    let c = random_corpus(8, 1000, 30, 5, 10);
    let mut hist: HashMap<&str, usize> = HashMap::new();
    for d in c.docs() {
        *hist.entry(d.user.as_str()).or_default() += 1;
    }
    // Users are drawn from 20 names, so choose a threshold near the median.
    let mut sizes: Vec<usize> = hist.values().copied().collect();
    sizes.sort_unstable();
    let min = sizes[sizes.len() / 2];
    let oracle: Vec<&str> = c.docs().iter().filter(|d| hist[d.user.as_str()] >= min).map(|d| d.id.as_str()).collect();
    let kept = corpus::filter_users_by_activity(&c, min).unwrap();
    let ids: Vec<&str> = kept.docs().iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids, oracle);

    assert_eq!(corpus::filter_users_by_activity(&c, 1).unwrap().docs(), c.docs());
    assert!(matches!(corpus::filter_users_by_activity(&c, 10_000), Err(Error::Empty(_))));
}

#[test]
fn activity_filter_threshold_example() {
    let c = corpus_from_ids(&[vec![0], vec![1], vec![0, 1], vec![1]], &["A", "A", "A", "B"], &[]);
    let kept = corpus::filter_users_by_activity(&c, 2).unwrap();
    assert_eq!(kept.num_docs(), 3);
    assert!(kept.docs().iter().all(|d| d.user == "A"));
}

#[test]
fn top_word_share_examples() {
    let counts = [("a", 5), ("b", 3), ("c", 2)];
    let tokens: Vec<usize> = counts.iter().enumerate().flat_map(|(i, &(_, n))| std::iter::repeat_n(i, n)).collect();
    let c = corpus_from_ids(&[tokens], &[], &[]);
    assert_eq!(corpus::top_word_share(&c, 1).unwrap(), 0.5);
    assert_eq!(corpus::top_word_share(&c, 3).unwrap(), 1.0);
    assert!(matches!(corpus::top_word_share(&c, 0), Err(Error::Argument(_))));

    let single = corpus_from_ids(&[vec![0, 0, 0]], &[], &[]);
    assert_eq!(corpus::top_word_share(&single, 1).unwrap(), 1.0);
}

#[test]
fn wordcloud_equals_full_sort_oracle() {
    let c = random_corpus(9, 400, 60, 10, 4);
    let mut hist: BTreeMap<String, u64> = BTreeMap::new();
    for d in c.docs() {
        for &t in &d.tokens {
            *hist.entry(c.vocab().word(t).to_string()).or_default() += 1;
        }
    }
    let mut all: Vec<(String, u64)> = hist.into_iter().collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    assert_eq!(corpus::wordcloud_data(&c, 10).unwrap(), all[..10]);
    assert_eq!(corpus::wordcloud_data(&c, 10_000).unwrap(), all);
}

#[test]
fn wordcloud_example() {
    let c = corpus_from_ids(&[vec![0, 0, 0, 0, 0, 1, 1, 1]], &[], &[]);
    let got = corpus::wordcloud_data(&c, 2).unwrap();
    assert_eq!(got, [(common::word(0), 5), (common::word(1), 3)]);
}

#[test]
fn temporal_matrix_direct_cases() {
    let c = corpus_from_ids(&[vec![0, 0], vec![1]], &[], &[3, 5]);
    let m = corpus::temporal_word_matrix(&c, &[common::word(0)]).unwrap();
    assert_eq!(m.days, [3, 4, 5]);
    assert_eq!(m.counts, [vec![2, 0, 0]]);
    let err = corpus::temporal_word_matrix(&c, &["nope".to_string()]).unwrap_err();
    assert!(err.to_string().contains("nope"));
}

#[test]
fn temporal_matrix_equals_nested_loop_oracle() {
    let c = random_corpus(10, 1000, 50, 12, 30);
    let words: Vec<String> = c.vocab().words().to_vec();
    let m = corpus::temporal_word_matrix(&c, &words).unwrap();
    let lo = c.docs().iter().map(|d| d.day).min().unwrap();
    let hi = c.docs().iter().map(|d| d.day).max().unwrap();
    assert_eq!(m.days, (lo..=hi).collect::<Vec<_>>());
    for (wi, w) in words.iter().enumerate() {
        for (di, &day) in m.days.iter().enumerate() {
            let mut n = 0;
            for d in c.docs() {
                if d.day == day {
                    for &t in &d.tokens {
                        if c.vocab().word(t) == w {
                            n += 1;
                        }
                    }
                }
            }
            assert_eq!(m.counts[wi][di], n, "{w} on day {day}");
        }
    }
}

#[test]
fn archive_round_trips_and_is_deterministic() {
    let c = random_corpus(11, 200, 30, 6, 7);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let files = corpus::write_archive(&c, a.path()).unwrap();
    corpus::write_archive(&c, b.path()).unwrap();
    for f in &files {
        let name = f.file_name().unwrap();
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
    let back = corpus::load_archive(a.path()).unwrap();
    assert_eq!(back.docs(), c.docs());
    assert_eq!(back.vocab().words(), c.vocab().words());
    assert_eq!(back.epoch(), c.epoch());
}

#[test]
fn min_count_pruning_keeps_only_frequent_words() {
    let c = random_corpus(12, 300, 80, 6, 3);
    let (pruned, _) = c.prune(8);
    let kept: HashSet<&str> = pruned.vocab().words().iter().map(String::as_str).collect();
    for (w, &n) in c.vocab().words().iter().zip(c.vocab().counts()) {
        assert_eq!(kept.contains(w.as_str()), n >= 8, "{w} count {n}");
    }
    assert!(pruned.docs().iter().all(|d| !d.tokens.is_empty()));
}
