//! The estimated narrative framework: sub-nodes joined by directed edges
//! carrying the multiset of relationship phrases observed between them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{Corpus, EmbeddingTable};
use crate::kmeans::{kmeans, Distance, KMeansParams};
use crate::subnode::{Subnode, SubnodeId};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeData {
    /// Number of relationship observations; always equals the multiset size.
    pub weight: u64,
    /// Relationship phrase → count.
    pub relations: BTreeMap<String, u64>,
    /// Optional semantic partition of the distinct relationship phrases.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_clusters: Option<RelationPartition>,
}

impl EdgeData {
    fn observe(&mut self, rel: &str) {
        self.weight += 1;
        *self.relations.entry(rel.to_string()).or_insert(0) += 1;
    }

    /// The `n` most frequent relationship phrases (ties lexicographic).
    pub fn top_relations(&self, n: usize) -> Vec<&str> {
        let mut rels: Vec<(&str, u64)> = self
            .relations
            .iter()
            .map(|(r, c)| (r.as_str(), *c))
            .collect();
        rels.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rels.into_iter().take(n).map(|(r, _)| r).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RelationPartition {
    pub clusters: Vec<Vec<String>>,
    /// Phrases for which no vector could be built.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unembedded: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub tuples: usize,
    /// Tuples with an argument phrase outside every sub-node.
    pub dropped: usize,
    pub self_loops_skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeGraph {
    pub nodes: Vec<Subnode>,
    /// Keyed by `(source, target)` following tuple direction arg1 → arg2.
    #[serde(with = "edge_list")]
    pub edges: BTreeMap<(SubnodeId, SubnodeId), EdgeData>,
    pub allow_self_loops: bool,
}

mod edge_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Edge {
        source: SubnodeId,
        target: SubnodeId,
        #[serde(flatten)]
        data: EdgeData,
    }

    pub fn serialize<S: Serializer>(
        edges: &BTreeMap<(SubnodeId, SubnodeId), EdgeData>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(edges.iter().map(|(&(source, target), data)| Edge {
            source,
            target,
            data: data.clone(),
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<(SubnodeId, SubnodeId), EdgeData>, D::Error> {
        let edges: Vec<Edge> = Vec::deserialize(d)?;
        Ok(edges
            .into_iter()
            .map(|e| ((e.source, e.target), e.data))
            .collect())
    }
}

impl NarrativeGraph {
    /// Aggregates tuples into edges between the sub-nodes of their arguments.
    ///
    /// A tuple adds one observation to every `(s, o)` pair with `s` a
    /// sub-node of arg1 and `o` a sub-node of arg2, so phrases in several
    /// sub-nodes fan out.
    pub fn build(
        corpus: &Corpus,
        subnodes: &[Subnode],
        allow_self_loops: bool,
    ) -> (NarrativeGraph, BuildStats) {
        let index = crate::subnode::phrase_index(subnodes);
        let mut edges: BTreeMap<(SubnodeId, SubnodeId), EdgeData> = BTreeMap::new();
        let mut stats = BuildStats {
            tuples: corpus.len(),
            ..Default::default()
        };
        for t in corpus.tuples() {
            let (Some(from), Some(to)) = (index.get(&t.arg1), index.get(&t.arg2)) else {
                stats.dropped += 1;
                continue;
            };
            for &s in from {
                for &o in to {
                    if s == o && !allow_self_loops {
                        stats.self_loops_skipped += 1;
                        continue;
                    }
                    edges.entry((s, o)).or_default().observe(&t.rel);
                }
            }
        }
        let graph = NarrativeGraph {
            nodes: subnodes.to_vec(),
            edges,
            allow_self_loops,
        };
        (graph, stats)
    }

    pub fn node(&self, id: SubnodeId) -> Option<&Subnode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|e| e.weight).sum()
    }

    /// Copy without edges lighter than `min_weight` and without nodes left
    /// isolated.
    pub fn threshold_edges(&self, min_weight: u64) -> NarrativeGraph {
        let edges: BTreeMap<_, _> = self
            .edges
            .iter()
            .filter(|(_, e)| e.weight >= min_weight)
            .map(|(k, e)| (*k, e.clone()))
            .collect();
        let live: BTreeSet<SubnodeId> = edges.keys().flat_map(|&(a, b)| [a, b]).collect();
        NarrativeGraph {
            nodes: self
                .nodes
                .iter()
                .filter(|n| live.contains(&n.id))
                .cloned()
                .collect(),
            edges,
            allow_self_loops: self.allow_self_loops,
        }
    }

    /// Undirected projection: `(a, b, weight)` with `a <= b`, weights of both
    /// directions summed.
    pub fn undirected_edges(&self) -> Vec<(SubnodeId, SubnodeId, f64)> {
        let mut acc: BTreeMap<(SubnodeId, SubnodeId), u64> = BTreeMap::new();
        for (&(a, b), e) in &self.edges {
            *acc.entry((a.min(b), a.max(b))).or_insert(0) += e.weight;
        }
        acc.into_iter()
            .map(|((a, b), w)| (a, b, w as f64))
            .collect()
    }

    /// Weighted degree in the undirected projection (self-loops count twice).
    pub fn weighted_degrees(&self) -> BTreeMap<SubnodeId, f64> {
        let mut deg: BTreeMap<SubnodeId, f64> = self.nodes.iter().map(|n| (n.id, 0.0)).collect();
        for (a, b, w) in self.undirected_edges() {
            *deg.entry(a).or_insert(0.0) += w;
            *deg.entry(b).or_insert(0.0) += w;
        }
        deg
    }

    /// Partitions the relationship phrases of every edge with at least
    /// `min_phrases` distinct phrases.
    pub fn cluster_relationships(
        &mut self,
        emb: &EmbeddingTable,
        k: usize,
        seed: u64,
        min_phrases: usize,
    ) {
        for (key, edge) in self.edges.iter_mut() {
            if edge.relations.len() >= min_phrases.max(1) {
                let s = crate::seed::derive_indexed(
                    seed,
                    "edge-relations",
                    (key.0 .0 as u64) << 32 | key.1 .0 as u64,
                );
                edge.relation_clusters = Some(cluster_edge_relationships(edge, emb, k, s));
            }
        }
    }
}

/// k-means partition of an edge's distinct relationship phrases by their
/// embeddings. `k` is clamped to the number of embeddable phrases.
pub fn cluster_edge_relationships(
    edge: &EdgeData,
    emb: &EmbeddingTable,
    k: usize,
    seed: u64,
) -> RelationPartition {
    let mut phrases = Vec::new();
    let mut vectors = Vec::new();
    let mut unembedded = Vec::new();
    for rel in edge.relations.keys() {
        match emb.embed(rel) {
            Some(v) => {
                phrases.push(rel.clone());
                vectors.push(v);
            }
            None => unembedded.push(rel.clone()),
        }
    }
    let result = kmeans(
        &vectors,
        &KMeansParams::new(k, seed).with_distance(Distance::Euclidean),
    );
    let mut clusters: Vec<Vec<String>> = result
        .clusters()
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.into_iter().map(|i| phrases[i].clone()).collect())
        .collect();
    clusters.sort();
    RelationPartition {
        clusters,
        unembedded,
    }
}
