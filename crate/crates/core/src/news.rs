//! Sliding-window entity networks over the dated news corpus.
//!
//! The news span is cut into windows of `width` days moved by `shift` days.
//! Each window selects its entities (the top TF-IDF entities of the window
//! merged with the globally most frequent ones) and builds a symmetric
//! co-occurrence count matrix from the headwords of its tuples.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::TimeSeries;
use crate::error::{Error, Result};
use crate::ingest::{AliasMap, Corpus, RelationTuple, StopList};
use crate::text::count_token_runs;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSegment {
    pub index: usize,
    pub start: NaiveDate,
    /// Exclusive.
    pub end: NaiveDate,
    /// Indices into the news corpus of tuples dated in `[start, end)`.
    pub tuples: Vec<usize>,
    pub entities: Vec<String>,
}

/// Number of windows over an inclusive span of `days` days.
pub fn window_count(days: i64, width: i64, shift: i64) -> usize {
    if days < width {
        0
    } else {
        ((days - width) / shift + 1) as usize
    }
}

/// Windows covering the inclusive day range `[t0, t1]`.
pub fn make_windows(
    t0: NaiveDate,
    t1: NaiveDate,
    width: u32,
    shift: u32,
) -> Result<Vec<WindowSegment>> {
    if width == 0 || shift == 0 {
        return Err(Error::Config(format!(
            "width and shift must be at least 1, got {width} and {shift}"
        )));
    }
    if t0 > t1 {
        return Err(Error::InvalidInput(format!(
            "window range starts after it ends: {t0} > {t1}"
        )));
    }
    let days = (t1 - t0).num_days() + 1;
    let count = window_count(days, width as i64, shift as i64);
    if count == 0 {
        warn!("span of {days} days is shorter than the window width {width}; no windows");
    }
    Ok((0..count)
        .map(|i| {
            let start = t0 + Duration::days(i as i64 * shift as i64);
            WindowSegment {
                index: i,
                start,
                end: start + Duration::days(width as i64),
                tuples: Vec::new(),
                entities: Vec::new(),
            }
        })
        .collect())
}

/// Fills each window's tuple list from `corpus`.
pub fn assign_tuples(windows: &mut [WindowSegment], corpus: &Corpus) {
    for w in windows.iter_mut() {
        w.tuples = corpus
            .tuples()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.date.is_some_and(|d| d >= w.start && d < w.end))
            .map(|(i, _)| i)
            .collect();
    }
}

/// Window × entity TF-IDF scores with `idf = ln(s / (1 + df))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdf {
    pub vocab: Vec<String>,
    /// Raw term frequency per window and vocabulary entry.
    pub tf: Vec<Vec<u64>>,
    pub scores: Vec<Vec<f64>>,
}

/// Occurrences of `entry` (one or more tokens) in the argument phrases of
/// `tuples`.
fn entry_frequency<'a>(entry: &[&str], tuples: impl Iterator<Item = &'a RelationTuple>) -> u64 {
    tuples
        .map(|t| {
            let a1: Vec<&str> = t.arg1.split(' ').collect();
            let a2: Vec<&str> = t.arg2.split(' ').collect();
            (count_token_runs(&a1, entry) + count_token_runs(&a2, entry)) as u64
        })
        .sum()
}

pub fn tfidf_matrix(windows: &[WindowSegment], corpus: &Corpus, vocab: &[String]) -> TfIdf {
    let mut vocab: Vec<String> = vocab.to_vec();
    vocab.sort();
    vocab.dedup();
    let split: Vec<Vec<&str>> = vocab.iter().map(|v| v.split(' ').collect()).collect();
    let tf: Vec<Vec<u64>> = windows
        .par_iter()
        .map(|w| {
            split
                .iter()
                .map(|e| entry_frequency(e, w.tuples.iter().map(|&i| &corpus.tuples()[i])))
                .collect()
        })
        .collect();
    let s = windows.len() as f64;
    let df: Vec<usize> = (0..vocab.len())
        .map(|j| tf.iter().filter(|row| row[j] > 0).count())
        .collect();
    let scores = tf
        .iter()
        .map(|row| {
            row.iter()
                .zip(&df)
                .map(|(&f, &d)| f as f64 * (s / (1.0 + d as f64)).ln())
                .collect()
        })
        .collect();
    TfIdf { vocab, tf, scores }
}

/// Entities of window `row`: the `top_tfidf` best-scoring entities present
/// in the window together with the `top_freq` globally most frequent ones,
/// canonicalised through `aliases` and deduplicated. Ties go to the higher
/// global frequency, then the lexicographically smaller entity.
pub fn select_entities(
    tfidf: &TfIdf,
    row: usize,
    global_freq: &BTreeMap<String, u64>,
    aliases: &AliasMap,
    top_tfidf: usize,
    top_freq: usize,
) -> Vec<String> {
    let freq = |e: &str| global_freq.get(e).copied().unwrap_or(0);
    let mut present: Vec<usize> = (0..tfidf.vocab.len())
        .filter(|&j| tfidf.tf[row][j] > 0)
        .collect();
    present.sort_by(|&a, &b| {
        tfidf.scores[row][b]
            .total_cmp(&tfidf.scores[row][a])
            .then(freq(&tfidf.vocab[b]).cmp(&freq(&tfidf.vocab[a])))
            .then(tfidf.vocab[a].cmp(&tfidf.vocab[b]))
    });
    let mut frequent: Vec<(&String, &u64)> = global_freq.iter().collect();
    frequent.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    present
        .into_iter()
        .take(top_tfidf)
        .map(|j| tfidf.vocab[j].as_str())
        .chain(frequent.into_iter().take(top_freq).map(|(e, _)| e.as_str()))
        .map(|e| aliases.canonical(e).to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Symmetric entity co-occurrence counts of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceNetwork {
    pub window: usize,
    /// Sorted, deduplicated canonical entity names.
    pub entities: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    /// Row-wise L1 normalisation of `counts`; all-zero rows stay zero.
    pub normalized: Vec<Vec<f64>>,
}

impl CooccurrenceNetwork {
    pub fn index_of(&self, entity: &str) -> Option<usize> {
        self.entities
            .binary_search_by(|e| e.as_str().cmp(entity))
            .ok()
    }

    pub fn neighbors(&self, i: usize) -> BTreeSet<usize> {
        (0..self.entities.len())
            .filter(|&j| self.counts[i][j] > 0)
            .collect()
    }

    /// Number of entities adjacent to both `a` and `b`. Unknown entities
    /// have no neighbours.
    pub fn common_neighbors(&self, a: &str, b: &str) -> usize {
        let (Some(i), Some(j)) = (self.index_of(a), self.index_of(b)) else {
            warn!(
                "window {}: entity {a:?} or {b:?} not in the network",
                self.window
            );
            return 0;
        };
        self.neighbors(i).intersection(&self.neighbors(j)).count()
    }

    /// Undirected edges `(i, j, count)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, u64)> {
        let n = self.entities.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.counts[i][j] > 0)
            .map(|(i, j)| (i, j, self.counts[i][j]))
            .collect()
    }
}

/// Builds the co-occurrence network of `tuples` over `entities`.
///
/// For every tuple the canonical headwords `s` of arg1 and `o` of arg2 are
/// linked when both are entities, differ, and the relation head is not a
/// stop word.
pub fn cooccur_network<'a>(
    window: usize,
    tuples: impl IntoIterator<Item = &'a RelationTuple>,
    entities: &[String],
    aliases: &AliasMap,
    stop: &StopList,
) -> CooccurrenceNetwork {
    let entities: Vec<String> = entities
        .iter()
        .map(|e| aliases.canonical(e).to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = entities.len();
    let mut counts = vec![vec![0u64; n]; n];
    let index = |e: &str| entities.binary_search_by(|x| x.as_str().cmp(e)).ok();
    for t in tuples {
        let s = index(aliases.canonical(&t.arg1_head));
        let o = index(aliases.canonical(&t.arg2_head));
        if let (Some(s), Some(o)) = (s, o) {
            if s != o && !stop.contains(&t.rel_head) {
                counts[s][o] += 1;
                counts[o][s] += 1;
            }
        }
    }
    let normalized = counts
        .iter()
        .map(|row| {
            let sum: u64 = row.iter().sum();
            if sum == 0 {
                vec![0.0; n]
            } else {
                row.iter().map(|&c| c as f64 / sum as f64).collect()
            }
        })
        .collect();
    CooccurrenceNetwork {
        window,
        entities,
        counts,
        normalized,
    }
}

/// Parameters of the windowed network stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowParams {
    pub width: u32,
    pub shift: u32,
    pub top_tfidf: usize,
    pub top_freq: usize,
}

impl Default for WindowParams {
    fn default() -> Self {
        WindowParams {
            width: 5,
            shift: 1,
            top_tfidf: 25,
            top_freq: 100,
        }
    }
}

/// Windows (with tuples and entities) and their networks for a news corpus.
///
/// `global_freq` is the entity vocabulary with its corpus-wide frequencies.
pub fn build_networks(
    news: &Corpus,
    global_freq: &BTreeMap<String, u64>,
    aliases: &AliasMap,
    stop: &StopList,
    params: &WindowParams,
) -> Result<(Vec<WindowSegment>, Vec<CooccurrenceNetwork>)> {
    let Some((t0, t1)) = news.span() else {
        warn!("news corpus has no dated tuples; no windows");
        return Ok((Vec::new(), Vec::new()));
    };
    let mut windows = make_windows(t0, t1, params.width, params.shift)?;
    assign_tuples(&mut windows, news);
    let vocab: Vec<String> = global_freq.keys().cloned().collect();
    let tfidf = tfidf_matrix(&windows, news, &vocab);
    for w in windows.iter_mut() {
        w.entities = select_entities(
            &tfidf,
            w.index,
            global_freq,
            aliases,
            params.top_tfidf,
            params.top_freq,
        );
    }
    let networks = windows
        .par_iter()
        .map(|w| {
            cooccur_network(
                w.index,
                w.tuples.iter().map(|&i| &news.tuples()[i]),
                &w.entities,
                aliases,
                stop,
            )
        })
        .collect();
    Ok((windows, networks))
}

/// Common-neighbour count of `a` and `b` per window, keyed by window start.
pub fn attachment_series(
    windows: &[WindowSegment],
    networks: &[CooccurrenceNetwork],
    a: &str,
    b: &str,
    aliases: &AliasMap,
) -> Result<TimeSeries> {
    let (a, b) = (aliases.canonical(a), aliases.canonical(b));
    let points = windows
        .iter()
        .zip(networks)
        .map(|(w, net)| (w.start, net.common_neighbors(a, b) as f64))
        .collect();
    TimeSeries::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Source;

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn tuple(a1: &str, rel: &str, a2: &str) -> RelationTuple {
        RelationTuple::new("d", Source::News, Some(day("2020-01-01")), a1, rel, a2).unwrap()
    }

    #[test]
    fn window_counts() {
        assert_eq!(
            make_windows(day("2020-01-01"), day("2020-04-14"), 5, 1)
                .unwrap()
                .len(),
            101
        );
        assert_eq!(
            make_windows(day("2020-01-01"), day("2020-01-05"), 5, 1)
                .unwrap()
                .len(),
            1
        );
        let w = make_windows(day("2020-01-01"), day("2020-01-10"), 5, 2).unwrap();
        let starts: Vec<i64> = w
            .iter()
            .map(|s| (s.start - day("2020-01-01")).num_days())
            .collect();
        assert_eq!(starts, vec![0, 2, 4]);
        assert!(make_windows(day("2020-01-01"), day("2020-01-03"), 5, 1)
            .unwrap()
            .is_empty());
        assert!(make_windows(day("2020-01-01"), day("2020-01-03"), 0, 1).is_err());
    }

    #[test]
    fn single_tuple_network() {
        let t = tuple("bill gates", "funds", "vaccine research");
        let ents = vec!["gates".to_string(), "research".to_string()];
        let net = cooccur_network(0, [&t], &ents, &AliasMap::new(), &StopList::default());
        assert_eq!(net.counts, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(net.normalized, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn stop_relation_and_self_pair_are_skipped() {
        let mut aliases = AliasMap::new();
        aliases.insert("trump", "donald trump").unwrap();
        aliases.insert("donald", "donald trump").unwrap();
        let ents = vec![
            "gates".to_string(),
            "research".to_string(),
            "donald trump".to_string(),
        ];
        let stopped = tuple("bill gates", "is", "vaccine research");
        let same = tuple("president trump", "met", "donald");
        let net = cooccur_network(0, [&stopped, &same], &ents, &aliases, &StopList::default());
        assert!(net.counts.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn common_neighbor_count() {
        let ents: Vec<String> = ["a1", "a2", "x", "y", "z"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let ts = [
            tuple("a1", "r", "x"),
            tuple("a1", "r", "y"),
            tuple("a2", "r", "x"),
            tuple("a2", "r", "z"),
        ];
        let net = cooccur_network(0, &ts, &ents, &AliasMap::new(), &StopList::empty());
        assert_eq!(net.common_neighbors("a1", "a2"), 1);
        assert_eq!(net.common_neighbors("y", "z"), 0);
        assert_eq!(net.common_neighbors("a1", "nobody"), 0);
    }

    #[test]
    fn selection_merges_and_canonicalises() {
        let mut aliases = AliasMap::new();
        aliases.insert("trump", "donald trump").unwrap();
        aliases.insert("donald", "donald trump").unwrap();
        let vocab: Vec<String> = ["trump", "donald", "virus"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let news = Corpus::from_tuples(vec![
            tuple("trump", "said", "virus"),
            tuple("donald", "said", "virus"),
        ]);
        let mut w = make_windows(day("2020-01-01"), day("2020-01-01"), 1, 1).unwrap();
        assign_tuples(&mut w, &news);
        let m = tfidf_matrix(&w, &news, &vocab);
        let freq: BTreeMap<String, u64> = vocab.iter().map(|v| (v.clone(), 1)).collect();
        let e = select_entities(&m, 0, &freq, &aliases, 25, 100);
        assert_eq!(e, vec!["donald trump".to_string(), "virus".to_string()]);
    }
}
