//! Contextual groups: seed entities joined by how often they share a noun
//! phrase, and the assignment of every argument phrase to the groups whose
//! seeds it contains.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{Corpus, SeedEntityList};

/// Group identifier; [`GroupId::RESIDUAL`] holds phrases with no seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub i64);

impl GroupId {
    pub const RESIDUAL: GroupId = GroupId(-1);

    pub fn is_residual(self) -> bool {
        self == Self::RESIDUAL
    }
}

impl std::fmt::Display for GroupId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextualGroup {
    pub id: GroupId,
    pub seeds: BTreeSet<String>,
    pub member_phrases: BTreeSet<String>,
    /// Total occurrences of member phrases.
    pub frequency: u64,
}

/// Symmetric seed-pair phrase co-occurrence counts, stored with `a < b`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedPairCounts {
    counts: BTreeMap<(String, String), u64>,
}

impl SeedPairCounts {
    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    /// Adds `n` to the pair; self-pairs are ignored.
    pub fn add(&mut self, a: &str, b: &str, n: u64) {
        if a != b && n > 0 {
            *self.counts.entry(Self::key(a, b)).or_insert(0) += n;
        }
    }

    pub fn get(&self, a: &str, b: &str) -> u64 {
        self.counts.get(&Self::key(a, b)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.counts
            .iter()
            .map(|((a, b), n)| (a.as_str(), b.as_str(), *n))
    }
}

impl<'a> FromIterator<(&'a str, &'a str, u64)> for SeedPairCounts {
    fn from_iter<I: IntoIterator<Item = (&'a str, &'a str, u64)>>(iter: I) -> Self {
        let mut c = SeedPairCounts::default();
        for (a, b, n) in iter {
            c.add(a, b, n);
        }
        c
    }
}

/// Counts, per unordered seed pair, the argument-phrase occurrences that
/// contain both seeds.
pub fn seed_cooccurrence(corpus: &Corpus, seeds: &SeedEntityList) -> SeedPairCounts {
    let mut counts = SeedPairCounts::default();
    for (phrase, occurrences) in corpus.phrase_counts() {
        let tokens: Vec<&str> = phrase.split(' ').collect();
        let present: Vec<&str> = seeds.seeds_in(&tokens);
        for (i, a) in present.iter().enumerate() {
            for b in &present[i + 1..] {
                counts.add(a, b, occurrences);
            }
        }
    }
    counts
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index becomes the root, so roots are stable
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the seed graph keeping pairs with count
/// `>= min_cooc`. Every seed ends up in exactly one group; ids follow the
/// lexicographic order of each group's smallest seed. Frequencies and members
/// are filled in by [`assign_phrases`].
pub fn form_groups(
    seeds: &SeedEntityList,
    pairs: &SeedPairCounts,
    min_cooc: u64,
) -> Vec<ContextualGroup> {
    let min_cooc = min_cooc.max(1);
    let names: Vec<&str> = seeds.iter().map(|(s, _)| s).collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut uf = UnionFind::new(names.len());
    for (a, b, n) in pairs.iter() {
        if n < min_cooc {
            continue;
        }
        if let (Some(&ia), Some(&ib)) = (index.get(a), index.get(b)) {
            uf.union(ia, ib);
        }
    }
    // names are sorted, so the root (smallest index) is the smallest seed
    let mut components: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        components
            .entry(uf.find(i))
            .or_default()
            .insert(name.to_string());
    }
    components
        .into_values()
        .enumerate()
        .map(|(id, seeds)| ContextualGroup {
            id: GroupId(id as i64),
            seeds,
            member_phrases: BTreeSet::new(),
            frequency: 0,
        })
        .collect()
}

/// Groups with members, plus the phrase → groups index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    /// Seeded groups in id order, followed by the residual group.
    pub groups: Vec<ContextualGroup>,
    pub phrase_groups: BTreeMap<String, BTreeSet<GroupId>>,
}

impl GroupAssignment {
    pub fn group(&self, id: GroupId) -> Option<&ContextualGroup> {
        self.groups.iter().find(|g| g.id == id)
    }
}

/// Assigns each distinct argument phrase to every group with a seed among its
/// tokens, or to the residual group.
pub fn assign_phrases(corpus: &Corpus, groups: Vec<ContextualGroup>) -> GroupAssignment {
    let mut groups = groups;
    groups.retain(|g| !g.id.is_residual());
    for g in &mut groups {
        g.member_phrases.clear();
        g.frequency = 0;
    }
    let mut residual = ContextualGroup {
        id: GroupId::RESIDUAL,
        seeds: BTreeSet::new(),
        member_phrases: BTreeSet::new(),
        frequency: 0,
    };
    let mut phrase_groups = BTreeMap::new();
    for (phrase, occurrences) in corpus.phrase_counts() {
        let tokens: Vec<&str> = phrase.split(' ').collect();
        let mut hit = BTreeSet::new();
        for g in groups.iter_mut() {
            if g.seeds
                .iter()
                .any(|s| crate::text::phrase_contains(&tokens, s))
            {
                g.member_phrases.insert(phrase.clone());
                g.frequency += occurrences;
                hit.insert(g.id);
            }
        }
        if hit.is_empty() {
            residual.member_phrases.insert(phrase.clone());
            residual.frequency += occurrences;
            hit.insert(GroupId::RESIDUAL);
        }
        phrase_groups.insert(phrase, hit);
    }
    groups.push(residual);
    GroupAssignment {
        groups,
        phrase_groups,
    }
}
