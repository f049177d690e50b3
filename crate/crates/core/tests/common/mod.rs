//! Random fixtures and brute-force reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use actant_core::ingest::{AliasMap, RelationTuple, Source, StopList};
use chrono::NaiveDate;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const WORDS: [&str; 14] = [
    "e0", "e1", "e2", "e3", "e4", "e5", "e6", "e7", "e8", "e9", "the", "big", "x3", "x5",
];
pub const RELS: [&str; 5] = ["funds", "backs", "is", "says", "attacks"];

pub fn day(d: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Duration::days(d)
}

pub fn stop() -> StopList {
    ["is", "says", "the"].into_iter().collect()
}

pub fn aliases() -> AliasMap {
    let mut a = AliasMap::new();
    a.insert("x3", "e3").unwrap();
    a.insert("x5", "e5").unwrap();
    a
}

/// One window's worth of random news tuples and a random entity list.
pub struct NetFixture {
    pub tuples: Vec<RelationTuple>,
    pub entities: Vec<String>,
}

fn phrase(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(1..=3);
    (0..len)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn net_fixture(seed: u64) -> NetFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_tuples = rng.random_range(0..=50);
    let tuples = (0..n_tuples)
        .map(|i| {
            let rel = *RELS.choose(&mut rng).unwrap();
            RelationTuple::new(
                format!("d{i}"),
                Source::News,
                Some(day(0)),
                &phrase(&mut rng),
                rel,
                &phrase(&mut rng),
            )
            .unwrap()
        })
        .collect();
    let n_ents = rng.random_range(1..=10);
    let entities = WORDS[..12]
        .choose_multiple(&mut rng, n_ents)
        .map(|s| s.to_string())
        .collect();
    NetFixture { tuples, entities }
}

/// Reference co-occurrence counts: for every ordered entity pair, scan every
/// tuple.
pub fn oracle_counts(
    fx: &NetFixture,
    aliases: &AliasMap,
    stop: &StopList,
) -> (Vec<String>, Vec<Vec<u64>>) {
    let ents: Vec<String> = fx
        .entities
        .iter()
        .map(|e| aliases.canonical(e).to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = ents.len();
    let mut m = vec![vec![0u64; n]; n];
    for (i, a) in ents.iter().enumerate() {
        for (j, b) in ents.iter().enumerate() {
            if i == j {
                continue;
            }
            for t in &fx.tuples {
                if stop.contains(&t.rel_head) {
                    continue;
                }
                let s = aliases.canonical(&t.arg1_head);
                let o = aliases.canonical(&t.arg2_head);
                if (s == a && o == b) || (s == b && o == a) {
                    m[i][j] += 1;
                }
            }
        }
    }
    (ents, m)
}

/// Number of entities adjacent to both `i` and `j`, by scanning every entity.
pub fn oracle_common(m: &[Vec<u64>], i: usize, j: usize) -> usize {
    (0..m.len()).filter(|&z| m[i][z] > 0 && m[j][z] > 0).count()
}

/// `Σ_{w ∈ V} Σ_{c ∈ C} 1(w = c) / (|V| |C|)`, with multi-word entries
/// matched position by position.
pub fn oracle_coverage(vocab: &[String], tokens: &[String]) -> f64 {
    let v: BTreeSet<&String> = vocab.iter().collect();
    if tokens.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    for w in &v {
        let parts: Vec<&str> = w.split(' ').collect();
        for start in 0..tokens.len() {
            let mut ok = start + parts.len() <= tokens.len();
            let mut k = 0;
            while ok && k < parts.len() {
                ok = tokens[start + k] == parts[k];
                k += 1;
            }
            if ok {
                hits += 1;
            }
        }
    }
    hits as f64 / (v.len() * tokens.len()) as f64
}

/// Random vocabulary and token stream over a small alphabet.
pub fn coverage_fixture(seed: u64) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = ["a", "b", "c", "d", "e", "f", "g"];
    let n_tok = rng.random_range(0..=200);
    let tokens = (0..n_tok)
        .map(|_| alphabet.choose(&mut rng).unwrap().to_string())
        .collect();
    let n_v = rng.random_range(1..=6);
    let vocab = (0..n_v)
        .map(|_| {
            let len = if rng.random_bool(0.25) { 2 } else { 1 };
            (0..len)
                .map(|_| *alphabet.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    (vocab, tokens)
}

/// Homogeneity, completeness and V-measure from an explicit contingency
/// table, base-2 logs.
pub fn oracle_hcv(truth: &[usize], pred: &[usize]) -> (f64, f64, f64) {
    let n = truth.len() as f64;
    let mut table: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        *table.entry((t, p)).or_default() += 1.0;
    }
    let marg = |f: &dyn Fn(&(usize, usize)) -> usize| {
        let mut m: BTreeMap<usize, f64> = BTreeMap::new();
        for (k, v) in &table {
            *m.entry(f(k)).or_default() += v;
        }
        m
    };
    let t_m = marg(&|k| k.0);
    let p_m = marg(&|k| k.1);
    let h =
        |m: &BTreeMap<usize, f64>| -> f64 { m.values().map(|c| -(c / n) * (c / n).log2()).sum() };
    let h_t = h(&t_m);
    let h_p = h(&p_m);
    let h_t_given_p: f64 = table
        .iter()
        .map(|(k, c)| -(c / n) * (c / p_m[&k.1]).log2())
        .sum();
    let h_p_given_t: f64 = table
        .iter()
        .map(|(k, c)| -(c / n) * (c / t_m[&k.0]).log2())
        .sum();
    let hom = if h_t == 0.0 {
        1.0
    } else {
        1.0 - h_t_given_p / h_t
    };
    let com = if h_p == 0.0 {
        1.0
    } else {
        1.0 - h_p_given_t / h_p
    };
    let v = if hom + com == 0.0 {
        0.0
    } else {
        2.0 * hom * com / (hom + com)
    };
    (hom, com, v)
}

/// Modularity of `part` straight from the adjacency matrix:
/// `Q = 1/2m Σ_ij (A_ij - k_i k_j / 2m) δ(c_i, c_j)`.
pub fn oracle_modularity(adj: &[Vec<f64>], part: &[usize]) -> f64 {
    let n = adj.len();
    let k: Vec<f64> = adj.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if part[i] == part[j] {
                q += adj[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as a restricted-growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            rec(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return vec![vec![]];
    }
    rec(&mut vec![0], 0, n, &mut out);
    out
}

/// Random undirected weighted graph as an edge list.
pub fn random_graph(seed: u64, max_n: usize) -> (usize, Vec<(usize, usize, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let p = rng.random_range(0.05..0.5);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j, rng.random_range(1..=5) as f64));
            }
        }
    }
    (n, edges)
}
