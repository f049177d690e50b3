//! Overlapping communities from an ensemble of Louvain runs.
//!
//! Each run contributes to a node-pair co-assignment count. Pairs agreeing in
//! at least `tau_core` of the runs link nodes into disjoint cores (connected
//! components). A node joins another community's periphery when its mean
//! co-assignment frequency with that core reaches `tau_relax`. Only cores of
//! two or more nodes take peripheral members. A node left in a singleton core
//! that is peripheral somewhere is dissolved into those peripheries instead of
//! standing as its own community.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NarrativeGraph;
use crate::louvain::{louvain, UndirectedGraph};
use crate::seed;
use crate::subnode::SubnodeId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub runs: usize,
    pub tau_core: f64,
    pub tau_relax: f64,
    pub seed: u64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            runs: 100,
            tau_core: 0.9,
            tau_relax: 0.5,
            seed: 0,
        }
    }
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.tau_relax > 0.0 && self.tau_relax <= self.tau_core && self.tau_core <= 1.0) {
            return Err(Error::Config(format!(
                "need 0 < tau_relax <= tau_core <= 1, got tau_relax = {}, tau_core = {}",
                self.tau_relax, self.tau_core
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub id: usize,
    pub core: Vec<SubnodeId>,
    pub peripheral: Vec<SubnodeId>,
    pub label: String,
    /// Labels of the members used for `label`, highest degree first.
    #[serde(default)]
    pub label_members: Vec<SubnodeId>,
}

impl Community {
    pub fn size(&self) -> usize {
        self.core.len() + self.peripheral.len()
    }

    pub fn members(&self) -> impl Iterator<Item = SubnodeId> + '_ {
        self.core.iter().chain(&self.peripheral).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySet {
    pub communities: Vec<Community>,
    pub params: EnsembleParams,
}

impl CommunitySet {
    /// Node → ids of communities containing it (core or periphery).
    pub fn node_index(&self) -> BTreeMap<SubnodeId, Vec<usize>> {
        let mut index: BTreeMap<SubnodeId, Vec<usize>> = BTreeMap::new();
        for c in &self.communities {
            for m in c.members() {
                index.entry(m).or_default().push(c.id);
            }
        }
        for ids in index.values_mut() {
            ids.sort_unstable();
        }
        index
    }

    pub fn get(&self, id: usize) -> Option<&Community> {
        self.communities.iter().find(|c| c.id == id)
    }
}

/// Pairwise co-assignment counts over `runs` Louvain runs, as a dense
/// row-major `n × n` matrix.
pub fn coassignment_counts(graph: &UndirectedGraph, runs: usize, seed: u64) -> Vec<u32> {
    let n = graph.node_count();
    (0..runs)
        .into_par_iter()
        .map(|r| louvain(graph, seed::derive_indexed(seed, "louvain-run", r as u64)).partition)
        .fold(
            || vec![0u32; n * n],
            |mut acc, part| {
                for i in 0..n {
                    for j in 0..n {
                        if part[i] == part[j] {
                            acc[i * n + j] += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u32; n * n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Index-level cores and peripheries from a co-assignment frequency matrix.
pub fn cores_and_peripheries(
    freq: &[f64],
    n: usize,
    tau_core: f64,
    tau_relax: f64,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if freq[i * n + j] >= tau_core {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                if a != b {
                    comp[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut cores: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut comp, i);
        cores.entry(r).or_default().push(i);
    }
    let cores: Vec<Vec<usize>> = cores.into_values().collect();
    let mut peripheries: Vec<Vec<usize>> = vec![Vec::new(); cores.len()];
    for (ci, core) in cores.iter().enumerate().filter(|(_, c)| c.len() > 1) {
        for v in 0..n {
            if core.contains(&v) {
                continue;
            }
            let mean = core.iter().map(|&u| freq[v * n + u]).sum::<f64>() / core.len() as f64;
            if mean >= tau_relax {
                peripheries[ci].push(v);
            }
        }
    }
    let attached: BTreeSet<usize> = peripheries.iter().flatten().copied().collect();
    cores
        .into_iter()
        .zip(peripheries)
        .filter(|(core, _)| !(core.len() == 1 && attached.contains(&core[0])))
        .collect()
}

/// Undirected projection of a narrative graph as a dense-index graph plus the
/// index → sub-node mapping.
pub fn project(graph: &NarrativeGraph) -> (UndirectedGraph, Vec<SubnodeId>) {
    let ids: Vec<SubnodeId> = graph.nodes.iter().map(|n| n.id).collect();
    let pos: BTreeMap<SubnodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let edges: Vec<(usize, usize, f64)> = graph
        .undirected_edges()
        .into_iter()
        .map(|(a, b, w)| (pos[&a], pos[&b], w))
        .collect();
    (UndirectedGraph::from_edges(ids.len(), &edges), ids)
}

/// Overlapping communities of `graph` (unlabelled, ids in order of each
/// core's smallest node).
pub fn ensemble_communities(
    graph: &NarrativeGraph,
    params: &EnsembleParams,
) -> Result<CommunitySet> {
    params.validate()?;
    let (g, ids) = project(graph);
    let n = ids.len();
    let counts = coassignment_counts(&g, params.runs, params.seed);
    let freq: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / params.runs as f64)
        .collect();
    let communities = cores_and_peripheries(&freq, n, params.tau_core, params.tau_relax)
        .into_iter()
        .enumerate()
        .map(|(id, (core, per))| Community {
            id,
            core: core.into_iter().map(|i| ids[i]).collect(),
            peripheral: per.into_iter().map(|i| ids[i]).collect(),
            label: String::new(),
            label_members: Vec::new(),
        })
        .collect();
    Ok(CommunitySet {
        communities,
        params: *params,
    })
}

/// Labels each community by its three highest weighted-degree core members
/// (ties: higher NER score, then smaller primary label, then id) and sorts
/// communities by size, largest first.
pub fn label_communities(cset: &mut CommunitySet, graph: &NarrativeGraph) {
    let degrees = graph.weighted_degrees();
    for c in cset.communities.iter_mut() {
        let mut members: Vec<SubnodeId> = c.core.clone();
        let key = |id: &SubnodeId| {
            let node = graph.node(*id);
            (
                degrees.get(id).copied().unwrap_or(0.0),
                node.map_or(0.0, |n| n.ner_score),
                node.map(|n| n.primary_label()).unwrap_or_default(),
            )
        };
        members.sort_by(|a, b| {
            let (da, na, la) = key(a);
            let (db, nb, lb) = key(b);
            db.total_cmp(&da)
                .then(nb.total_cmp(&na))
                .then_with(|| la.cmp(&lb))
                .then(a.cmp(b))
        });
        members.truncate(3);
        c.label = members
            .iter()
            .filter_map(|id| graph.node(*id))
            .map(|n| n.primary_label())
            .collect::<Vec<_>>()
            .join(", ");
        c.label_members = members;
    }
    cset.communities
        .sort_by(|a, b| b.size().cmp(&a.size()).then(a.id.cmp(&b.id)));
}
