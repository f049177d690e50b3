//! Sub-nodes: k-means phrase clusters inside each contextual group, labelled
//! by TF-IDF and scored by seed-entity salience.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grouping::{ContextualGroup, GroupAssignment, GroupId};
use crate::ingest::{Corpus, EmbeddingTable, SeedEntityList};
use crate::kmeans::{kmeans, Distance, KMeansParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubnodeId(pub usize);

impl std::fmt::Display for SubnodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subnode {
    pub id: SubnodeId,
    pub group_id: GroupId,
    pub member_phrases: BTreeSet<String>,
    pub centroid: Vec<f64>,
    /// Up to three words, best first.
    pub label: Vec<String>,
    pub ner_score: f64,
}

impl Subnode {
    /// The best label word, or the id when unlabelled.
    pub fn primary_label(&self) -> String {
        self.label
            .first()
            .cloned()
            .unwrap_or_else(|| self.id.to_string())
    }

    pub fn label_text(&self) -> String {
        self.label.join(" ")
    }
}

/// Default number of sub-nodes for a group of `n` phrases:
/// `max(1, ceil(sqrt(n / 2)))`.
pub fn default_k(n_phrases: usize) -> usize {
    ((n_phrases as f64 / 2.0).sqrt().ceil() as usize).max(1)
}

/// How many clusters each group gets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KPolicy {
    /// Replaces [`default_k`] for every group.
    #[serde(default)]
    pub all: Option<usize>,
    /// Per-group values, taking precedence over `all`.
    #[serde(default)]
    pub groups: BTreeMap<GroupId, usize>,
}

impl KPolicy {
    pub fn k_for(&self, group: GroupId, n_phrases: usize) -> usize {
        self.groups
            .get(&group)
            .copied()
            .or(self.all)
            .unwrap_or_else(|| default_k(n_phrases))
    }
}

/// Clusters one group's phrases into sub-nodes with local ids `0..`.
///
/// Phrases without a vector of their own use the mean of their tokens'
/// vectors. Phrases with neither join the cluster sharing the most tokens
/// with them (ties to the lowest cluster); if nothing in the group embeds,
/// the group becomes a single sub-node with a zero centroid.
pub fn kmeans_cluster(
    group: &ContextualGroup,
    emb: &EmbeddingTable,
    k: usize,
    seed: u64,
    distance: Distance,
) -> Vec<Subnode> {
    if group.member_phrases.is_empty() {
        return Vec::new();
    }
    let mut embedded = Vec::new();
    let mut vectors = Vec::new();
    let mut missing = Vec::new();
    for phrase in &group.member_phrases {
        match emb.embed(phrase) {
            Some(v) => {
                embedded.push(phrase);
                vectors.push(v);
            }
            None => missing.push(phrase),
        }
    }
    if !missing.is_empty() {
        warn!(
            "group {}: {} phrase(s) have no embedding, attaching by token overlap",
            group.id,
            missing.len()
        );
    }
    if vectors.is_empty() {
        return vec![Subnode {
            id: SubnodeId(0),
            group_id: group.id,
            member_phrases: group.member_phrases.clone(),
            centroid: vec![0.0; emb.dim()],
            label: Vec::new(),
            ner_score: 0.0,
        }];
    }

    let result = kmeans(
        &vectors,
        &KMeansParams::new(k, seed).with_distance(distance),
    );
    let mut members: Vec<BTreeSet<String>> = vec![BTreeSet::new(); result.centroids.len()];
    for (phrase, &c) in embedded.iter().zip(&result.assignments) {
        members[c].insert((*phrase).clone());
    }
    let tokens_of = |set: &BTreeSet<String>| -> BTreeSet<String> {
        set.iter()
            .flat_map(|p| p.split(' ').map(str::to_string))
            .collect()
    };
    let cluster_tokens: Vec<BTreeSet<String>> = members.iter().map(tokens_of).collect();
    for phrase in missing {
        let best = cluster_tokens
            .iter()
            .enumerate()
            .filter(|(j, _)| !members[*j].is_empty())
            .map(|(j, toks)| (j, phrase.split(' ').filter(|t| toks.contains(*t)).count()))
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .map_or(0, |(j, _)| j);
        members[best].insert(phrase.clone());
    }

    members
        .into_iter()
        .zip(result.centroids)
        .filter(|(m, _)| !m.is_empty())
        .enumerate()
        .map(|(i, (member_phrases, centroid))| Subnode {
            id: SubnodeId(i),
            group_id: group.id,
            member_phrases,
            centroid,
            label: Vec::new(),
            ner_score: 0.0,
        })
        .collect()
}

/// Clusters every group (in parallel) and assigns global sub-node ids in
/// group order. Each group's seed is derived from `seed` and the group id.
pub fn cluster_groups(
    assignment: &GroupAssignment,
    emb: &EmbeddingTable,
    policy: &KPolicy,
    seed: u64,
    distance: Distance,
) -> Vec<Subnode> {
    let mut groups: Vec<&ContextualGroup> = assignment.groups.iter().collect();
    groups.sort_by_key(|g| g.id);
    let per_group: Vec<Vec<Subnode>> = groups
        .par_iter()
        .map(|g| {
            let k = policy.k_for(g.id, g.member_phrases.len());
            let s = seed::derive_indexed(seed, "subnode-kmeans", g.id.0 as u64);
            kmeans_cluster(g, emb, k, s, distance)
        })
        .collect();
    let mut out = Vec::new();
    for mut sub in per_group.into_iter().flatten() {
        sub.id = SubnodeId(out.len());
        out.push(sub);
    }
    out
}

/// Phrase → sub-nodes containing it.
pub fn phrase_index(subnodes: &[Subnode]) -> BTreeMap<String, BTreeSet<SubnodeId>> {
    let mut index: BTreeMap<String, BTreeSet<SubnodeId>> = BTreeMap::new();
    for s in subnodes {
        for p in &s.member_phrases {
            index.entry(p.clone()).or_default().insert(s.id);
        }
    }
    index
}

/// Word → frequency over a sub-node's member-phrase occurrences.
fn term_frequencies(sub: &Subnode, phrase_counts: &BTreeMap<String, u64>) -> BTreeMap<String, f64> {
    let mut tf = BTreeMap::new();
    for phrase in &sub.member_phrases {
        let occ = phrase_counts.get(phrase).copied().unwrap_or(0).max(1) as f64;
        for tok in phrase.split(' ') {
            *tf.entry(tok.to_string()).or_insert(0.0) += occ;
        }
    }
    tf
}

/// Labels each sub-node with its top three words by TF-IDF.
///
/// `tf` is the word's frequency over member-phrase occurrences and
/// `idf = ln((1 + N) / (1 + df)) + 1` over the `N` sub-nodes, which keeps idf
/// positive so a lone sub-node is labelled by its most frequent words. Ties go
/// to the lexicographically smaller word.
pub fn label_tfidf(subnodes: &mut [Subnode], corpus: &Corpus) {
    let counts = corpus.phrase_counts();
    let tfs: Vec<BTreeMap<String, f64>> = subnodes
        .iter()
        .map(|s| term_frequencies(s, &counts))
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tf in &tfs {
        for w in tf.keys() {
            *df.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let n = subnodes.len() as f64;
    let labels: Vec<Vec<String>> = tfs
        .iter()
        .map(|tf| {
            let mut scored: Vec<(&str, f64)> = tf
                .iter()
                .map(|(w, &f)| {
                    let idf = ((1.0 + n) / (1.0 + df[w.as_str()] as f64)).ln() + 1.0;
                    (w.as_str(), f * idf)
                })
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            scored
                .into_iter()
                .take(3)
                .map(|(w, _)| w.to_string())
                .collect()
        })
        .collect();
    for (s, l) in subnodes.iter_mut().zip(labels) {
        s.label = l;
    }
}

/// Total corpus frequency of member phrases containing at least one seed.
pub fn ner_score(
    sub: &Subnode,
    seeds: &SeedEntityList,
    phrase_counts: &BTreeMap<String, u64>,
) -> f64 {
    sub.member_phrases
        .iter()
        .filter(|p| {
            let tokens: Vec<&str> = p.split(' ').collect();
            !seeds.seeds_in(&tokens).is_empty()
        })
        .map(|p| phrase_counts.get(p).copied().unwrap_or(0) as f64)
        .sum()
}

/// Sets `ner_score` on every sub-node.
pub fn score_subnodes(subnodes: &mut [Subnode], seeds: &SeedEntityList, corpus: &Corpus) {
    let counts = corpus.phrase_counts();
    for s in subnodes.iter_mut() {
        s.ner_score = ner_score(s, seeds, &counts);
    }
}
