//! Seeded input generators for the benchmarks.

use actant_core::ingest::{RelationTuple, Source};
use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Random weighted graph with `n` nodes and about `n * avg_degree / 2` edges.
pub fn random_graph(n: usize, avg_degree: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n * avg_degree / 2)
        .map(|_| {
            (
                rng.random_range(0..n),
                rng.random_range(0..n),
                rng.random_range(1..5) as f64,
            )
        })
        .filter(|(u, v, _)| u != v)
        .collect()
}

/// `n` points in `dim` dimensions around `k` well-separated centres.
pub fn blobs(n: usize, dim: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let c = (i % k) as f64 * 10.0;
            (0..dim)
                .map(|d| if d == 0 { c } else { 0.0 } + rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

/// News tuples over a vocabulary of `entities` single-token names.
pub fn news_tuples(n: usize, entities: usize, seed: u64) -> (Vec<RelationTuple>, Vec<String>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let day = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let names: Vec<String> = (0..entities).map(|i| format!("e{i}")).collect();
    let tuples = (0..n)
        .map(|i| {
            let a = &names[rng.random_range(0..entities)];
            let b = &names[rng.random_range(0..entities)];
            RelationTuple::new(format!("d{i}"), Source::News, Some(day), a, "funds", b)
                .expect("valid tuple")
        })
        .collect();
    (tuples, names)
}

/// Token stream of length `n` over `vocab` distinct words.
pub fn tokens(n: usize, vocab: usize, seed: u64) -> Vec<String> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| format!("w{}", rng.random_range(0..vocab)))
        .collect()
}
