//! Planted narrative model for end-to-end validation.
//!
//! A model has `k` contexts over `n` actants and `r` relation types. Every
//! context owns a connected network over its actants whose edges carry a
//! distribution over relation types. A post picks a context from the prior,
//! draws edges from its network and emits one tuple per edge.
//!
//! Actant `j` is named `actantNNN`; its phrases are the name, optionally
//! preceded by one noise word, so the name is always the headword. Phrase
//! embeddings are Gaussian around a per-actant centre `(sep·σ/√2)·e_j` in
//! `n + r` dimensions, which puts distinct centres exactly `sep·σ` apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Corpus, EmbeddingTable, RelationTuple, SeedEntityList, Source};
use crate::seed;

const NOISE: [&str; 12] = [
    "big", "old", "new", "local", "strange", "secret", "famous", "global", "tiny", "dark", "real",
    "rogue",
];

pub fn actant_name(j: usize) -> String {
    format!("actant{j:03}")
}

pub fn relation_name(j: usize) -> String {
    format!("rel{j:03}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextGraph {
    pub actants: Vec<usize>,
    /// Directed `(from, to)` actant pairs.
    pub edges: Vec<(usize, usize)>,
    /// Distribution over relation types, one per edge.
    pub relations: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub separation: f64,
    pub sigma: f64,
    /// Actants each context borrows from the next block; 0 keeps contexts
    /// disjoint.
    pub overlap: usize,
    /// Probability of each non-path actant pair becoming an edge.
    pub edge_density: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(k: usize, n: usize, r: usize, separation: f64, seed: u64) -> Self {
        ModelParams {
            k,
            n,
            r,
            separation,
            sigma: 1.0,
            overlap: 0,
            edge_density: 0.6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    pub params: ModelParams,
    pub contexts: Vec<ContextGraph>,
    pub prior: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub relation_centers: Vec<Vec<f64>>,
}

pub fn make_model(
    k: usize,
    n: usize,
    r: usize,
    separation: f64,
    seed: u64,
) -> Result<GenerativeModel> {
    ModelParams::new(k, n, r, separation, seed).build()
}

impl ModelParams {
    pub fn build(&self) -> Result<GenerativeModel> {
        let &ModelParams {
            k,
            n,
            r,
            separation,
            sigma,
            overlap,
            edge_density,
            seed,
        } = self;
        if k == 0 || n == 0 || r == 0 {
            return Err(Error::Config("k, n and r must be at least 1".into()));
        }
        if n < k {
            return Err(Error::Config(format!(
                "{n} actants cannot fill {k} contexts"
            )));
        }
        if !(separation >= 0.0 && sigma > 0.0 && (0.0..=1.0).contains(&edge_density)) {
            return Err(Error::Config(
                "need separation >= 0, sigma > 0 and edge density in [0, 1]".into(),
            ));
        }
        let mut rng = seed::rng(seed::derive(seed, "synth-model"));
        let bounds: Vec<usize> = (0..=k).map(|i| i * n / k).collect();
        let contexts = (0..k)
            .map(|c| {
                let mut actants: BTreeSet<usize> = (bounds[c]..bounds[c + 1]).collect();
                if k > 1 {
                    let next = (c + 1) % k;
                    actants.extend((bounds[next]..bounds[next + 1]).take(overlap));
                }
                let actants: Vec<usize> = actants.into_iter().collect();
                let mut pairs: BTreeSet<(usize, usize)> =
                    actants.windows(2).map(|w| (w[0], w[1])).collect();
                for (i, &a) in actants.iter().enumerate() {
                    for &b in &actants[i + 1..] {
                        if rng.random::<f64>() < edge_density {
                            pairs.insert((a, b));
                        }
                    }
                }
                let edges: Vec<(usize, usize)> = pairs
                    .into_iter()
                    .map(|(a, b)| if rng.random::<bool>() { (a, b) } else { (b, a) })
                    .collect();
                let relations = edges
                    .iter()
                    .map(|_| {
                        let w: Vec<f64> = (0..r).map(|_| rng.random::<f64>() + 1e-3).collect();
                        let s: f64 = w.iter().sum();
                        w.into_iter().map(|x| x / s).collect()
                    })
                    .collect();
                ContextGraph {
                    actants,
                    edges,
                    relations,
                }
            })
            .collect();
        let scale = separation * sigma / std::f64::consts::SQRT_2;
        let axis = |j: usize| {
            let mut v = vec![0.0; n + r];
            v[j] = scale;
            v
        };
        Ok(GenerativeModel {
            params: *self,
            contexts,
            prior: vec![1.0 / k as f64; k],
            centers: (0..n).map(axis).collect(),
            relation_centers: (0..r).map(|j| axis(n + j)).collect(),
        })
    }
}

impl GenerativeModel {
    pub fn with_prior(mut self, prior: Vec<f64>) -> Result<Self> {
        let s: f64 = prior.iter().sum();
        if prior.len() != self.contexts.len()
            || prior.iter().any(|p| !p.is_finite() || *p < 0.0)
            || s <= 0.0
        {
            return Err(Error::Config(
                "prior needs one non-negative weight per context".into(),
            ));
        }
        self.prior = prior.into_iter().map(|p| p / s).collect();
        Ok(self)
    }

    pub fn actant_names(&self) -> Vec<String> {
        (0..self.params.n).map(actant_name).collect()
    }

    /// Actant names of each context.
    pub fn context_members(&self) -> Vec<Vec<String>> {
        self.contexts
            .iter()
            .map(|c| c.actants.iter().map(|&a| actant_name(a)).collect())
            .collect()
    }

    /// Seed list of every actant name with its token frequency in
    /// `corpus` (at least 1).
    pub fn seed_list(&self, corpus: &Corpus) -> SeedEntityList {
        let mut list = SeedEntityList::new();
        for name in self.actant_names() {
            list.add(&name, corpus.vocabulary().get(&name).copied().unwrap_or(0));
        }
        list
    }

    /// Embedding of every argument and relation phrase of `corpus`. Each
    /// phrase's noise is drawn from a generator keyed by the phrase, so the
    /// vector does not depend on which corpus it came from.
    pub fn embeddings(&self, corpus: &Corpus, seed: u64) -> EmbeddingTable {
        let dim = self.params.n + self.params.r;
        let noise = Normal::new(0.0, self.params.sigma).expect("sigma is positive");
        let mut phrases: BTreeMap<&str, &[f64]> = BTreeMap::new();
        let names: BTreeMap<String, usize> =
            (0..self.params.n).map(|j| (actant_name(j), j)).collect();
        let rels: BTreeMap<String, usize> =
            (0..self.params.r).map(|j| (relation_name(j), j)).collect();
        for t in corpus.tuples() {
            for (phrase, head) in [(&t.arg1, &t.arg1_head), (&t.arg2, &t.arg2_head)] {
                if let Some(&j) = names.get(head) {
                    phrases.insert(phrase, &self.centers[j]);
                }
            }
            if let Some(&j) = rels.get(&t.rel_head) {
                phrases.insert(&t.rel, &self.relation_centers[j]);
            }
        }
        let mut table = EmbeddingTable::new(dim);
        for (phrase, center) in phrases {
            let mut rng = seed::rng(seed::derive(seed, phrase));
            let v: Vec<f64> = center.iter().map(|c| c + noise.sample(&mut rng)).collect();
            table.insert(phrase, v).expect("dimension matches");
        }
        table
    }

    fn phrase<R: Rng>(&self, actant: usize, rng: &mut R) -> String {
        if rng.random::<bool>() {
            actant_name(actant)
        } else {
            format!(
                "{} {}",
                NOISE[rng.random_range(0..NOISE.len())],
                actant_name(actant)
            )
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_post<R: Rng>(
        &self,
        context: usize,
        tuples_per_post: usize,
        doc_id: &str,
        source: Source,
        date: Option<NaiveDate>,
        rng: &mut R,
        out: &mut Vec<RelationTuple>,
    ) {
        let g = &self.contexts[context];
        for _ in 0..tuples_per_post {
            let e = rng.random_range(0..g.edges.len());
            let (a, b) = g.edges[e];
            let rel = WeightedIndex::new(&g.relations[e])
                .expect("valid distribution")
                .sample(rng);
            let (pa, pb) = (self.phrase(a, rng), self.phrase(b, rng));
            out.push(
                RelationTuple::new(doc_id, source, date, &pa, &relation_name(rel), &pb)
                    .expect("synthetic phrases are non-empty"),
            );
        }
    }

    /// Context weights usable for sampling: edgeless contexts get weight 0.
    fn sampling_weights(&self, weights: &[f64]) -> Result<WeightedIndex<f64>> {
        let w: Vec<f64> = weights
            .iter()
            .zip(&self.contexts)
            .map(|(&p, c)| if c.edges.is_empty() { 0.0 } else { p })
            .collect();
        WeightedIndex::new(&w)
            .map_err(|_| Error::InvalidInput("no context with edges and positive weight".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub posts: usize,
    pub tuples_per_post: usize,
    pub start: NaiveDate,
    /// Posts are dated uniformly over this many days from `start`.
    pub days: u32,
    pub seed: u64,
}

impl SampleParams {
    pub fn new(posts: usize, tuples_per_post: usize, seed: u64) -> Self {
        SampleParams {
            posts,
            tuples_per_post,
            start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            days: 105,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCorpus {
    pub corpus: Corpus,
    /// Context of every post, by post index.
    pub post_contexts: Vec<usize>,
}

/// Draws a social-media corpus from `model`.
pub fn sample_corpus(model: &GenerativeModel, params: &SampleParams) -> Result<SampledCorpus> {
    let mut rng = seed::rng(seed::derive(params.seed, "synth-sample"));
    let pick = model.sampling_weights(&model.prior)?;
    if model.contexts.iter().any(|c| c.edges.is_empty()) {
        warn!("some contexts have no edges and are never sampled");
    }
    let mut tuples = Vec::new();
    let mut post_contexts = Vec::with_capacity(params.posts);
    for p in 0..params.posts {
        let c = pick.sample(&mut rng);
        let date = params.start + Duration::days(rng.random_range(0..params.days.max(1)) as i64);
        model.emit_post(
            c,
            params.tuples_per_post,
            &format!("post{p:06}"),
            Source::Social,
            Some(date),
            &mut rng,
            &mut tuples,
        );
        post_contexts.push(c);
    }
    Ok(SampledCorpus {
        corpus: Corpus::from_tuples(tuples),
        post_contexts,
    })
}

/// Actant name → planted context: the highest-prior context containing it,
/// lowest id on ties.
pub fn planted_labels(model: &GenerativeModel) -> BTreeMap<String, usize> {
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for (c, g) in model.contexts.iter().enumerate() {
        for &a in &g.actants {
            let e = best.entry(a).or_insert(c);
            if model.prior[c] > model.prior[*e] {
                *e = c;
            }
        }
    }
    best.into_iter().map(|(a, c)| (actant_name(a), c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledParams {
    pub days: u32,
    /// Totals per stream, spread as evenly as possible over the days.
    pub social_posts: usize,
    pub news_posts: usize,
    pub tuples_per_post: usize,
    pub start: NaiveDate,
    /// News on day `d` follows the context intensities of day `d - lag`.
    pub lag: i64,
    pub seed: u64,
}

impl CoupledParams {
    pub fn new(days: u32, social_posts: usize, news_posts: usize, lag: i64, seed: u64) -> Self {
        CoupledParams {
            days,
            social_posts,
            news_posts,
            tuples_per_post: 3,
            start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            lag,
            seed,
        }
    }
}

/// Social and news streams driven by shared per-day context intensities.
///
/// Each day every context draws an exponential intensity; posts of that day
/// pick contexts in proportion to prior times intensity. The news stream
/// reads the intensities `lag` days earlier.
pub fn sample_coupled(model: &GenerativeModel, params: &CoupledParams) -> Result<(Corpus, Corpus)> {
    if params.days == 0 {
        return Ok((Corpus::default(), Corpus::default()));
    }
    let k = model.contexts.len();
    let pad = params.lag.unsigned_abs() as i64;
    let mut rng = seed::rng(seed::derive(params.seed, "synth-intensity"));
    let span = params.days as i64 + 2 * pad;
    let intensity: Vec<Vec<f64>> = (0..span)
        .map(|_| (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect())
        .collect();
    let weights = |day: i64| -> Vec<f64> {
        intensity[(day + pad) as usize]
            .iter()
            .zip(&model.prior)
            .map(|(i, p)| i * p)
            .collect()
    };
    let mut streams = Vec::new();
    let days = params.days as i64;
    let streams_spec = [
        (
            Source::Social,
            0,
            params.social_posts as i64,
            "synth-social",
        ),
        (
            Source::News,
            params.lag,
            params.news_posts as i64,
            "synth-news",
        ),
    ];
    for (source, shift, total, label) in streams_spec {
        let mut rng = seed::rng(seed::derive(params.seed, label));
        let mut tuples = Vec::new();
        for d in 0..days {
            let pick = model.sampling_weights(&weights(d - shift))?;
            let date = params.start + Duration::days(d);
            for p in 0..(d + 1) * total / days - d * total / days {
                let c = pick.sample(&mut rng);
                let doc = format!("{source}{d:04}-{p:04}");
                model.emit_post(
                    c,
                    params.tuples_per_post,
                    &doc,
                    source,
                    Some(date),
                    &mut rng,
                    &mut tuples,
                );
            }
        }
        streams.push(Corpus::from_tuples(tuples));
    }
    let news = streams.pop().expect("two streams");
    let social = streams.pop().expect("two streams");
    Ok((social, news))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: BTreeMap<String, usize>,
    pub contexts: Vec<Vec<String>>,
    pub model: GenerativeModel,
}

/// Writes `social.jsonl`, `news.jsonl`, `embeddings.tsv`, `seeds.txt` and
/// `truth.json` into `dir`.
pub fn write_dataset(
    dir: &Path,
    model: &GenerativeModel,
    social: &Corpus,
    news: &Corpus,
    embed_seed: u64,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    social.save(&dir.join("social.jsonl"))?;
    news.save(&dir.join("news.jsonl"))?;
    let both = Corpus::from_tuples(
        social
            .tuples()
            .iter()
            .chain(news.tuples())
            .cloned()
            .collect(),
    );
    model
        .embeddings(&both, embed_seed)
        .save(&dir.join("embeddings.tsv"))?;
    model.seed_list(social).save(&dir.join("seeds.txt"))?;
    let truth = GroundTruth {
        labels: planted_labels(model),
        contexts: model.context_members(),
        model: model.clone(),
    };
    let path = dir.join("truth.json");
    let json = serde_json::to_string_pretty(&truth)?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_shapes() {
        let m = make_model(1, 5, 2, 6.0, 1).unwrap();
        assert_eq!(m.prior, vec![1.0]);
        assert_eq!(m.contexts[0].actants, vec![0, 1, 2, 3, 4]);
        let m = make_model(3, 30, 4, 6.0, 1).unwrap();
        assert!(m.contexts.iter().all(|c| c.actants.len() == 10));
        for c in &m.contexts {
            for d in &c.relations {
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        let d = crate::kmeans::sq_dist(&m.centers[0], &m.centers[1]).sqrt();
        assert!((d - 6.0).abs() < 1e-12);
        let m = make_model(2, 4, 1, 0.0, 1).unwrap();
        assert!(m.centers.iter().all(|c| c == &m.centers[0]));
        assert!(make_model(4, 3, 1, 1.0, 1).is_err());
    }

    #[test]
    fn planted_labels_follow_prior() {
        let m = ModelParams {
            overlap: 1,
            ..ModelParams::new(2, 4, 1, 1.0, 3)
        }
        .build()
        .unwrap();
        // context 0 = {0,1,2}, context 1 = {2,3,0}
        let m = m.with_prior(vec![0.3, 0.7]).unwrap();
        let l = planted_labels(&m);
        assert_eq!(l.len(), 4);
        assert_eq!(l["actant000"], 1);
        assert_eq!(l["actant002"], 1);
        assert_eq!(l["actant001"], 0);
    }

    #[test]
    fn sampling_is_reproducible_and_within_context() {
        let m = make_model(3, 12, 3, 6.0, 5).unwrap();
        let p = SampleParams::new(50, 3, 9);
        let a = sample_corpus(&m, &p).unwrap();
        assert_eq!(a, sample_corpus(&m, &p).unwrap());
        for (i, t) in a.corpus.tuples().iter().enumerate() {
            let ctx = &m.context_members()[a.post_contexts[i / 3]];
            assert!(ctx.contains(&t.arg1_head) && ctx.contains(&t.arg2_head));
        }
        assert!(sample_corpus(&m, &SampleParams::new(0, 3, 9))
            .unwrap()
            .corpus
            .is_empty());
    }
}
