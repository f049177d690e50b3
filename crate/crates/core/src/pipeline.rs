//! Run configuration, stage orchestration and the run manifest.
//!
//! Every stage reads its inputs and upstream artifacts from disk (or from the
//! previous stage when run end to end) and records the SHA-256 of each file
//! it writes in `manifest.json`. A stage refuses to run when an upstream
//! artifact no longer matches the hash recorded for it, unless forced.
//!
//! Seeds: every unset module seed is derived from `seeds.master` with the
//! module name as label (`kmeans`, `relations`, `community`, `news`,
//! `metric`), and the resolved values are echoed in the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::community::{ensemble_communities, label_communities, CommunitySet, EnsembleParams};
use crate::coverage::{
    coverage_score, cross_correlate, relative_coverage, BaselineParams, TimeSeries,
};
use crate::error::{Error, Result};
use crate::export;
use crate::graph::NarrativeGraph;
use crate::grouping::{
    assign_phrases, form_groups, seed_cooccurrence, ContextualGroup, GroupAssignment,
};
use crate::ingest::{
    load_aliases, load_embeddings, load_seeds, load_stop_words, load_tuples, AliasMap, Corpus,
    EmbeddingTable, SeedEntityList, Source, StopList,
};
use crate::kmeans::Distance;
use crate::louvain::{louvain, UndirectedGraph};
use crate::metrics::{evaluate_communities, AgreementReport};
use crate::news::{
    attachment_series, build_networks, CooccurrenceNetwork, WindowParams, WindowSegment,
};
use crate::seed;
use crate::subnode::{cluster_groups, label_tfidf, score_subnodes, KPolicy, Subnode};
use crate::synth::{self, CoupledParams, ModelParams};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub social: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    /// Planted labels (`truth.json` from `simulate`) for recovery scoring.
    pub truth: Option<PathBuf>,
}

impl Inputs {
    fn named(&self) -> Vec<(&'static str, &PathBuf)> {
        [
            ("social", &self.social),
            ("news", &self.news),
            ("embeddings", &self.embeddings),
            ("seeds", &self.seeds),
            ("stop_words", &self.stop_words),
            ("aliases", &self.aliases),
            ("truth", &self.truth),
        ]
        .into_iter()
        .filter_map(|(n, p)| p.as_ref().map(|p| (n, p)))
        .collect()
    }

    /// Makes relative paths relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.social,
            &mut self.news,
            &mut self.embeddings,
            &mut self.seeds,
            &mut self.stop_words,
            &mut self.aliases,
            &mut self.truth,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub master: u64,
    pub kmeans: Option<u64>,
    pub relations: Option<u64>,
    pub community: Option<u64>,
    pub news: Option<u64>,
    pub metric: Option<u64>,
}

impl Seeds {
    fn resolve(&mut self) {
        let m = self.master;
        for (slot, label) in [
            (&mut self.kmeans, "kmeans"),
            (&mut self.relations, "relations"),
            (&mut self.community, "community"),
            (&mut self.news, "news"),
            (&mut self.metric, "metric"),
        ] {
            slot.get_or_insert_with(|| seed::derive(m, label));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    /// Not part of the run identity: left out of the manifest echo.
    pub out_dir: Option<PathBuf>,
    pub seeds: Seeds,
    pub min_cooc: u64,
    pub k: KPolicy,
    pub distance: Distance,
    pub min_edge_weight: u64,
    pub directed_export: bool,
    pub allow_self_loops: bool,
    /// Clusters per edge for relationship partitioning; 0 disables it.
    pub relation_k: usize,
    pub runs: usize,
    pub tau_core: f64,
    pub tau_relax: f64,
    pub width: u32,
    pub shift: u32,
    pub top_tfidf: usize,
    pub top_freq: usize,
    pub baseline_samples: usize,
    pub baseline_size: usize,
    pub max_lag: u32,
    /// Moving-average width applied to daily coverage before correlation.
    pub smoothing: usize,
    /// Entity pairs whose common-neighbour series is exported.
    pub attachment_pairs: Vec<(String, String)>,
    /// Extra named word lists scored alongside the detected communities.
    pub community_words: BTreeMap<String, Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EnsembleParams::default();
        let w = WindowParams::default();
        let b = BaselineParams::default();
        RunConfig {
            inputs: Inputs::default(),
            out_dir: None,
            seeds: Seeds::default(),
            min_cooc: 3,
            k: KPolicy::default(),
            distance: Distance::Euclidean,
            min_edge_weight: 2,
            directed_export: false,
            allow_self_loops: false,
            relation_k: 2,
            runs: e.runs,
            tau_core: e.tau_core,
            tau_relax: e.tau_relax,
            width: w.width,
            shift: w.shift,
            top_tfidf: w.top_tfidf,
            top_freq: w.top_freq,
            baseline_samples: b.samples,
            baseline_size: b.size,
            max_lag: 14,
            smoothing: 5,
            attachment_pairs: Vec::new(),
            community_words: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Reads a JSON config; relative input paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            cfg.inputs.rebase(dir);
            if let Some(out) = cfg.out_dir.as_mut().filter(|o| o.is_relative()) {
                *out = dir.join(&*out);
            }
        }
        Ok(cfg)
    }

    /// Fills every unset seed and checks parameter ranges.
    pub fn resolve(mut self) -> Result<Self> {
        self.seeds.resolve();
        self.ensemble().validate()?;
        if self.min_edge_weight == 0 {
            return Err(Error::Config("min_edge_weight must be at least 1".into()));
        }
        if self.width == 0 || self.shift == 0 {
            return Err(Error::Config("width and shift must be at least 1".into()));
        }
        if self.baseline_samples == 0 || self.baseline_size == 0 {
            return Err(Error::Config(
                "baseline samples and size must be at least 1".into(),
            ));
        }
        if self.smoothing == 0 {
            return Err(Error::Config("smoothing must be at least 1".into()));
        }
        Ok(self)
    }

    pub fn ensemble(&self) -> EnsembleParams {
        EnsembleParams {
            runs: self.runs,
            tau_core: self.tau_core,
            tau_relax: self.tau_relax,
            seed: self.seeds.community.unwrap_or_default(),
        }
    }

    pub fn windows(&self) -> WindowParams {
        WindowParams {
            width: self.width,
            shift: self.shift,
            top_tfidf: self.top_tfidf,
            top_freq: self.top_freq,
        }
    }

    /// Output directory: the `ACTANT_OUT_DIR` environment variable, then the
    /// configured directory, then `./out`.
    pub fn output_dir(&self) -> PathBuf {
        std::env::var_os("ACTANT_OUT_DIR")
            .map(PathBuf::from)
            .or_else(|| self.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn echo(&self) -> RunConfig {
        RunConfig {
            out_dir: None,
            ..self.clone()
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_sha256(path: &Path) -> Result<String> {
    fs::read(path)
        .map(|b| sha256_hex(&b))
        .map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    /// Output file (relative to the output directory) → SHA-256.
    pub outputs: BTreeMap<String, String>,
    #[serde(default)]
    pub summary: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StageRecord {
    fn new(name: &str) -> Self {
        StageRecord {
            name: name.to_string(),
            status: StageStatus::Ok,
            outputs: BTreeMap::new(),
            summary: Value::Null,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, InputDigest>,
    pub stages: Vec<StageRecord>,
    /// Set when some stage failed after writing part of its outputs.
    pub partial: bool,
}

impl RunManifest {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let mut m = RunManifest {
            tool: "actant".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: RunConfig::default(),
            config_sha256: String::new(),
            inputs: BTreeMap::new(),
            stages: Vec::new(),
            partial: false,
        };
        m.set_config(cfg)?;
        Ok(m)
    }

    fn set_config(&mut self, cfg: &RunConfig) -> Result<()> {
        self.config = cfg.echo();
        self.config_sha256 = sha256_hex(serde_json::to_string(&self.config)?.as_bytes());
        self.inputs.clear();
        for (name, path) in cfg.inputs.named() {
            if path.exists() {
                self.inputs.insert(
                    name.to_string(),
                    InputDigest {
                        path: path.display().to_string(),
                        sha256: file_sha256(path)?,
                    },
                );
            }
        }
        Ok(())
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    fn put(&mut self, record: StageRecord) {
        match self.stages.iter_mut().find(|s| s.name == record.name) {
            Some(s) => *s = record,
            None => self.stages.push(record),
        }
        self.partial = self.stages.iter().any(|s| s.status == StageStatus::Failed);
    }

    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// The pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Group,
    Cluster,
    Graph,
    Communities,
    Newsnet,
    Coverage,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Group,
        Stage::Cluster,
        Stage::Graph,
        Stage::Communities,
        Stage::Newsnet,
        Stage::Coverage,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Group => "group",
            Stage::Cluster => "cluster",
            Stage::Graph => "graph",
            Stage::Communities => "communities",
            Stage::Newsnet => "newsnet",
            Stage::Coverage => "coverage",
            Stage::Evaluate => "evaluate",
        }
    }

    /// Upstream artifacts a stage reads, with the stage that writes each.
    fn upstream(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Stage::Ingest | Stage::Group | Stage::Newsnet => &[],
            Stage::Cluster => &[("group", "groups.json")],
            Stage::Graph => &[("cluster", "subnodes.json")],
            Stage::Communities => &[("graph", "graph.json")],
            Stage::Coverage => &[
                ("cluster", "subnodes.json"),
                ("communities", "communities.json"),
            ],
            Stage::Evaluate => &[
                ("cluster", "subnodes.json"),
                ("communities", "communities.json"),
            ],
        }
    }
}

/// State carried across stages of one invocation.
struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    manifest: RunManifest,
    social: Option<Corpus>,
    news: Option<Option<Corpus>>,
    embeddings: Option<EmbeddingTable>,
    seeds: Option<SeedEntityList>,
    groups: Option<Vec<ContextualGroup>>,
    subnodes: Option<Vec<Subnode>>,
    graph: Option<NarrativeGraph>,
    communities: Option<CommunitySet>,
    networks: Option<Option<NetworkBundle>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkBundle {
    windows: Vec<WindowSegment>,
    networks: Vec<CooccurrenceNetwork>,
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf> {
    p.as_ref()
        .ok_or_else(|| Error::Config(format!("no {what} input configured")))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

impl Ctx {
    fn new(cfg: RunConfig) -> Result<Self> {
        let out = cfg.output_dir();
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let manifest = RunManifest::new(&cfg)?;
        Ok(Ctx {
            cfg,
            out,
            manifest,
            social: None,
            news: None,
            embeddings: None,
            seeds: None,
            groups: None,
            subnodes: None,
            graph: None,
            communities: None,
            networks: None,
        })
    }

    fn write(&self, rec: &mut StageRecord, name: &str, content: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        rec.outputs.insert(name.to_string(), sha256_hex(content));
        Ok(())
    }

    fn save_manifest(&self) -> Result<()> {
        let path = self.out.join(MANIFEST);
        fs::write(&path, self.manifest.to_json()?).map_err(|e| Error::io(&path, e))
    }

    /// Fails when an upstream artifact is missing, unrecorded or changed.
    fn check_upstream(&self, stage: Stage) -> Result<()> {
        for &(producer, file) in stage.upstream() {
            let path = self.out.join(file);
            if !path.exists() {
                return Err(Error::InvalidInput(format!(
                    "{} not found; run `{producer}` first",
                    path.display()
                )));
            }
            let recorded = self
                .manifest
                .stage(producer)
                .filter(|s| s.status == StageStatus::Ok)
                .and_then(|s| s.outputs.get(file));
            let Some(recorded) = recorded else {
                return Err(Error::Stale {
                    file: file.into(),
                    reason: format!("not recorded as an output of a successful `{producer}` run"),
                });
            };
            if &file_sha256(&path)? != recorded {
                return Err(Error::Stale {
                    file: file.into(),
                    reason: "contents differ from the manifest".into(),
                });
            }
        }
        Ok(())
    }

    fn social(&mut self) -> Result<&Corpus> {
        if self.social.is_none() {
            let path = required(&self.cfg.inputs.social, "social")?;
            let (corpus, report) = load_tuples(path, Source::Social)?;
            if report.malformed > 0 {
                warn!(
                    "{}: skipped {} malformed records",
                    path.display(),
                    report.malformed
                );
            }
            self.social = Some(corpus);
        }
        Ok(self.social.as_ref().expect("loaded"))
    }

    fn news(&mut self) -> Result<Option<&Corpus>> {
        if self.news.is_none() {
            let loaded = match &self.cfg.inputs.news {
                Some(path) => {
                    let (corpus, report) = load_tuples(path, Source::News)?;
                    if report.malformed > 0 {
                        warn!(
                            "{}: skipped {} malformed records",
                            path.display(),
                            report.malformed
                        );
                    }
                    Some(corpus)
                }
                None => None,
            };
            self.news = Some(loaded);
        }
        Ok(self.news.as_ref().expect("loaded").as_ref())
    }

    fn embeddings(&mut self) -> Result<&EmbeddingTable> {
        if self.embeddings.is_none() {
            let (table, dups) =
                load_embeddings(required(&self.cfg.inputs.embeddings, "embeddings")?)?;
            if dups > 0 {
                warn!("{dups} duplicate embedding rows; the last one wins");
            }
            self.embeddings = Some(table);
        }
        Ok(self.embeddings.as_ref().expect("loaded"))
    }

    fn seeds(&mut self) -> Result<&SeedEntityList> {
        if self.seeds.is_none() {
            self.seeds = Some(load_seeds(required(&self.cfg.inputs.seeds, "seeds")?)?);
        }
        Ok(self.seeds.as_ref().expect("loaded"))
    }

    fn stop_words(&self) -> Result<StopList> {
        match &self.cfg.inputs.stop_words {
            Some(p) => load_stop_words(p),
            None => Ok(StopList::default()),
        }
    }

    fn aliases(&self) -> Result<AliasMap> {
        match &self.cfg.inputs.aliases {
            Some(p) => load_aliases(p),
            None => Ok(AliasMap::new()),
        }
    }

    fn groups(&mut self) -> Result<Vec<ContextualGroup>> {
        if self.groups.is_none() {
            self.groups = Some(read_json(&self.out.join("groups.json"))?);
        }
        Ok(self.groups.clone().expect("loaded"))
    }

    fn subnodes(&mut self) -> Result<&Vec<Subnode>> {
        if self.subnodes.is_none() {
            self.subnodes = Some(read_json(&self.out.join("subnodes.json"))?);
        }
        Ok(self.subnodes.as_ref().expect("loaded"))
    }

    fn graph(&mut self) -> Result<&NarrativeGraph> {
        if self.graph.is_none() {
            self.graph = Some(read_json(&self.out.join("graph.json"))?);
        }
        Ok(self.graph.as_ref().expect("loaded"))
    }

    fn communities(&mut self) -> Result<&CommunitySet> {
        if self.communities.is_none() {
            self.communities = Some(read_json(&self.out.join("communities.json"))?);
        }
        Ok(self.communities.as_ref().expect("loaded"))
    }

    fn networks(&mut self) -> Result<Option<&NetworkBundle>> {
        if self.networks.is_none() {
            let path = self.out.join("networks/networks.json");
            self.networks = Some(if path.exists() {
                Some(read_json(&path)?)
            } else {
                None
            });
        }
        Ok(self.networks.as_ref().expect("loaded").as_ref())
    }

    fn run(&mut self, stage: Stage, rec: &mut StageRecord) -> Result<()> {
        match stage {
            Stage::Ingest => self.ingest(rec),
            Stage::Group => self.group(rec),
            Stage::Cluster => self.cluster(rec),
            Stage::Graph => self.build_graph(rec),
            Stage::Communities => self.detect(rec),
            Stage::Newsnet => self.newsnet(rec),
            Stage::Coverage => self.coverage(rec),
            Stage::Evaluate => self.evaluate(rec),
        }
    }

    fn ingest(&mut self, rec: &mut StageRecord) -> Result<()> {
        let social_path = required(&self.cfg.inputs.social, "social")?.clone();
        let (social, social_report) = load_tuples(&social_path, Source::Social)?;
        let news_report = match self.cfg.inputs.news.clone() {
            Some(p) => {
                let (news, report) = load_tuples(&p, Source::News)?;
                self.news = Some(Some(news));
                Some(report)
            }
            None => {
                self.news = Some(None);
                None
            }
        };
        let (emb, duplicates) =
            load_embeddings(required(&self.cfg.inputs.embeddings, "embeddings")?)?;
        let seeds = load_seeds(required(&self.cfg.inputs.seeds, "seeds")?)?;
        let stop = self.stop_words()?;
        let aliases = self.aliases()?;
        let span = |c: Option<&Corpus>| {
            c.and_then(Corpus::span)
                .map(|(a, b)| [a.to_string(), b.to_string()])
        };
        let report = json!({
            "social": social_report,
            "news": news_report,
            "vocabulary_size": social.vocabulary().len(),
            "social_span": span(Some(&social)),
            "news_span": span(self.news.as_ref().and_then(Option::as_ref)),
            "embeddings": { "phrases": emb.len(), "dim": emb.dim(), "duplicates": duplicates },
            "seeds": seeds.len(),
            "aliases": aliases.len(),
            "stop_words_default": self.cfg.inputs.stop_words.is_none(),
        });
        let _ = stop;
        self.write(rec, "ingest.json", to_json(&report)?.as_bytes())?;
        rec.summary =
            json!({ "tuples": social_report.loaded, "malformed": social_report.malformed });
        self.social = Some(social);
        self.embeddings = Some(emb);
        self.seeds = Some(seeds);
        Ok(())
    }

    fn group(&mut self, rec: &mut StageRecord) -> Result<()> {
        let min_cooc = self.cfg.min_cooc;
        let seeds = self.seeds()?.clone();
        let corpus = self.social()?;
        let pairs = seed_cooccurrence(corpus, &seeds);
        let assignment = assign_phrases(corpus, form_groups(&seeds, &pairs, min_cooc));
        let seeded = assignment
            .groups
            .iter()
            .filter(|g| !g.id.is_residual())
            .count();
        self.write(rec, "groups.json", to_json(&assignment.groups)?.as_bytes())?;
        rec.summary = json!({ "groups": seeded, "phrases": assignment.phrase_groups.len() });
        self.groups = Some(assignment.groups);
        Ok(())
    }

    fn cluster(&mut self, rec: &mut StageRecord) -> Result<()> {
        let groups = self.groups()?;
        let seed = self.cfg.seeds.kmeans.unwrap_or_default();
        let (policy, distance) = (self.cfg.k.clone(), self.cfg.distance);
        let emb = self.embeddings()?.clone();
        let seeds = self.seeds()?.clone();
        let corpus = self.social()?;
        let assignment = GroupAssignment {
            groups,
            phrase_groups: BTreeMap::new(),
        };
        let mut subnodes = cluster_groups(&assignment, &emb, &policy, seed, distance);
        label_tfidf(&mut subnodes, corpus);
        score_subnodes(&mut subnodes, &seeds, corpus);
        self.write(rec, "subnodes.json", to_json(&subnodes)?.as_bytes())?;
        self.write(
            rec,
            "subnodes.csv",
            export::subnodes_csv(&subnodes)?.as_bytes(),
        )?;
        rec.summary = json!({ "subnodes": subnodes.len() });
        self.subnodes = Some(subnodes);
        Ok(())
    }

    fn build_graph(&mut self, rec: &mut StageRecord) -> Result<()> {
        let subnodes = self.subnodes()?.clone();
        let (allow, rk, seed) = (
            self.cfg.allow_self_loops,
            self.cfg.relation_k,
            self.cfg.seeds.relations.unwrap_or_default(),
        );
        let emb = self.embeddings()?.clone();
        let corpus = self.social()?;
        let (mut graph, stats) = NarrativeGraph::build(corpus, &subnodes, allow);
        if rk > 0 {
            graph.cluster_relationships(&emb, rk, seed, rk);
        }
        self.write(rec, "graph.json", to_json(&graph)?.as_bytes())?;
        let graphml = export::narrative_graphml(&graph, None, self.cfg.directed_export);
        self.write(rec, "graph.graphml", graphml.as_bytes())?;
        rec.summary =
            json!({ "nodes": graph.nodes.len(), "edges": graph.edges.len(), "build": stats });
        self.graph = Some(graph);
        Ok(())
    }

    fn detect(&mut self, rec: &mut StageRecord) -> Result<()> {
        let params = self.cfg.ensemble();
        let (min_w, directed) = (self.cfg.min_edge_weight, self.cfg.directed_export);
        let kept = self.graph()?.threshold_edges(min_w);
        let mut cset = ensemble_communities(&kept, &params)?;
        label_communities(&mut cset, &kept);
        self.write(rec, "communities.json", to_json(&cset)?.as_bytes())?;
        let graphml = export::narrative_graphml(&kept, Some(&cset), directed);
        self.write(rec, "communities.graphml", graphml.as_bytes())?;
        let sizes: Vec<usize> = cset.communities.iter().map(|c| c.size()).collect();
        rec.summary =
            json!({ "communities": sizes.len(), "sizes": sizes, "nodes": kept.nodes.len() });
        self.communities = Some(cset);
        Ok(())
    }

    fn newsnet(&mut self, rec: &mut StageRecord) -> Result<()> {
        let params = self.cfg.windows();
        let pairs = self.cfg.attachment_pairs.clone();
        let stop = self.stop_words()?;
        let aliases = self.aliases()?;
        let global: BTreeMap<String, u64> = self
            .seeds()?
            .iter()
            .map(|(e, f)| (e.to_string(), f))
            .collect();
        let Some(news) = self.news()? else {
            return Err(Error::Config("no news input configured".into()));
        };
        let (windows, networks) = build_networks(news, &global, &aliases, &stop, &params)?;
        for net in &networks {
            let base = format!("networks/window_{:03}", net.window);
            self.write(
                rec,
                &format!("{base}.graphml"),
                export::network_graphml(net).as_bytes(),
            )?;
            self.write(
                rec,
                &format!("{base}.csv"),
                export::network_csv(net, false)?.as_bytes(),
            )?;
            self.write(
                rec,
                &format!("{base}.norm.csv"),
                export::network_csv(net, true)?.as_bytes(),
            )?;
        }
        let mut rows = Vec::new();
        for (a, b) in &pairs {
            let series = attachment_series(&windows, &networks, a, b, &aliases)?;
            for (d, v) in series.points() {
                rows.push(vec![a.clone(), b.clone(), d.to_string(), v.to_string()]);
            }
        }
        self.write(
            rec,
            "attachment.csv",
            export::table_csv(&["a", "b", "date", "value"], &rows)?.as_bytes(),
        )?;
        let bundle = NetworkBundle { windows, networks };
        self.write(rec, "networks/networks.json", to_json(&bundle)?.as_bytes())?;
        rec.summary = json!({ "windows": bundle.windows.len() });
        self.networks = Some(Some(bundle));
        Ok(())
    }

    /// Named word lists: detected communities first (`c<id>`), then the
    /// configured lists.
    fn word_lists(&mut self) -> Result<Vec<(String, String, Vec<String>)>> {
        let seeds = self.seeds()?.clone();
        let subnodes = self.subnodes()?.clone();
        let cset = self.communities()?.clone();
        let mut lists: Vec<(String, String, Vec<String>)> = cset
            .communities
            .iter()
            .map(|c| {
                (
                    format!("c{}", c.id),
                    c.label.clone(),
                    community_actants(c.members(), &subnodes, &seeds),
                )
            })
            .collect();
        for (name, words) in &self.cfg.community_words {
            lists.push((name.clone(), name.clone(), words.clone()));
        }
        Ok(lists)
    }

    fn coverage(&mut self, rec: &mut StageRecord) -> Result<()> {
        let lists = self.word_lists()?;
        let cfg = self.cfg.clone();
        let vocab: Vec<String> = self.seeds()?.iter().map(|(e, _)| e.to_string()).collect();
        let social = self.social()?.clone();
        let news = self.news()?.cloned();
        let span = [social.span(), news.as_ref().and_then(Corpus::span)]
            .into_iter()
            .flatten()
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)));
        let days: Vec<NaiveDate> = match span {
            Some((a, b)) => (0..=(b - a).num_days())
                .map(|i| a + Duration::days(i))
                .collect(),
            None => Vec::new(),
        };
        let social_days = daily_tokens(&social);
        let news_days = news.as_ref().map(daily_tokens);
        let all_social: Vec<&str> = social
            .tuples()
            .iter()
            .flat_map(|t| t.all_tokens())
            .collect();
        let all_news: Option<Vec<&str>> = news
            .as_ref()
            .map(|n| n.tuples().iter().flat_map(|t| t.all_tokens()).collect());
        let baseline = BaselineParams {
            samples: cfg.baseline_samples,
            size: cfg.baseline_size,
            seed: cfg.seeds.metric.unwrap_or_default(),
        };
        let (mut cov_rows, mut rel_rows, mut xc_rows) = (Vec::new(), Vec::new(), Vec::new());
        let mut best_lags = BTreeMap::new();
        for (name, label, words) in &lists {
            if words.is_empty() {
                warn!("community {name} has no words; skipped");
                continue;
            }
            for (source, tokens) in [("social", Some(&all_social)), ("news", all_news.as_ref())] {
                let Some(tokens) = tokens else { continue };
                let r = relative_coverage(words, tokens, &vocab, &baseline)?;
                rel_rows.push(vec![
                    name.clone(),
                    label.clone(),
                    source.into(),
                    r.score.to_string(),
                    r.baseline.to_string(),
                    r.ratio.to_string(),
                    r.infinite.to_string(),
                    r.with_replacement.to_string(),
                ]);
            }
            let series = |by_day: &BTreeMap<NaiveDate, Vec<String>>| -> Result<TimeSeries> {
                let points = days
                    .iter()
                    .map(|d| {
                        let toks = by_day.get(d).map(Vec::as_slice).unwrap_or(&[]);
                        coverage_score(words, toks).map(|m| (*d, m))
                    })
                    .collect::<Result<Vec<_>>>()?;
                TimeSeries::new(points)
            };
            let s_raw = series(&social_days)?;
            let s_smooth = s_raw.smoothed(cfg.smoothing);
            let n_raw = news_days.as_ref().map(&series).transpose()?;
            let n_smooth = n_raw.as_ref().map(|s| s.smoothed(cfg.smoothing));
            for (i, d) in days.iter().enumerate() {
                let opt = |s: &Option<TimeSeries>| {
                    s.as_ref()
                        .map(|s| s.points()[i].1.to_string())
                        .unwrap_or_default()
                };
                cov_rows.push(vec![
                    name.clone(),
                    d.to_string(),
                    s_raw.points()[i].1.to_string(),
                    s_smooth.points()[i].1.to_string(),
                    opt(&n_raw),
                    opt(&n_smooth),
                ]);
            }
            if let Some(n_smooth) = &n_smooth {
                match cross_correlate(&s_smooth, n_smooth, cfg.max_lag) {
                    Ok(cc) => {
                        for (lag, r) in &cc.values {
                            xc_rows.push(vec![
                                name.clone(),
                                lag.to_string(),
                                r.map(|r| r.to_string()).unwrap_or_default(),
                            ]);
                        }
                        best_lags.insert(name.clone(), cc.best_lag);
                    }
                    Err(e) => warn!("cross-correlation for {name} skipped: {e}"),
                }
            }
        }
        let cov_header = [
            "community",
            "date",
            "social",
            "social_smoothed",
            "news",
            "news_smoothed",
        ];
        self.write(
            rec,
            "coverage.csv",
            export::table_csv(&cov_header, &cov_rows)?.as_bytes(),
        )?;
        let rel_header = [
            "community",
            "label",
            "source",
            "score",
            "baseline",
            "ratio",
            "infinite",
            "with_replacement",
        ];
        self.write(
            rec,
            "relative_coverage.csv",
            export::table_csv(&rel_header, &rel_rows)?.as_bytes(),
        )?;
        self.write(
            rec,
            "xcorr.csv",
            export::table_csv(&["community", "lag", "r"], &xc_rows)?.as_bytes(),
        )?;
        rec.summary = json!({ "communities": lists.len(), "best_lag": best_lags });
        Ok(())
    }

    fn evaluate(&mut self, rec: &mut StageRecord) -> Result<()> {
        let lists = self.word_lists()?;
        let socmed: Vec<Vec<String>> = lists
            .iter()
            .filter(|(name, _, _)| name.starts_with('c'))
            .map(|l| l.2.clone())
            .filter(|w| !w.is_empty())
            .collect();
        let seed = self.cfg.seeds.news.unwrap_or_default();
        let mut rows = Vec::new();
        let mut reports = Vec::new();
        if let Some(bundle) = self.networks()? {
            for (w, net) in bundle.windows.iter().zip(&bundle.networks) {
                let news = window_communities(
                    net,
                    seed::derive_indexed(seed, "window-louvain", w.index as u64),
                );
                let mut report = if news.is_empty() || socmed.is_empty() {
                    AgreementReport {
                        window: None,
                        start: None,
                        matched: 0,
                        total: news.iter().map(Vec::len).sum(),
                        coverage: 0.0,
                        homogeneity: None,
                        completeness: None,
                        v_measure: None,
                    }
                } else {
                    evaluate_communities(&news, &socmed)?
                };
                report.window = Some(w.index);
                report.start = Some(w.start);
                let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                rows.push(vec![
                    w.index.to_string(),
                    w.start.to_string(),
                    report.matched.to_string(),
                    report.total.to_string(),
                    report.coverage.to_string(),
                    opt(report.homogeneity),
                    opt(report.completeness),
                    opt(report.v_measure),
                ]);
                reports.push(report);
            }
        } else {
            warn!("no window networks found; agreement report is empty");
        }
        let header = [
            "window",
            "start",
            "matched",
            "total",
            "coverage",
            "homogeneity",
            "completeness",
            "v_measure",
        ];
        self.write(
            rec,
            "agreement.csv",
            export::table_csv(&header, &rows)?.as_bytes(),
        )?;
        let mut summary = json!({ "windows": reports.len() });
        if let Some(path) = self.cfg.inputs.truth.clone() {
            let truth: TruthLabels = read_json(&path)?;
            let subnodes = self.subnodes()?.clone();
            let cset = self.communities()?.clone();
            let report = planted_recovery(&cset, &subnodes, &truth.labels)?;
            self.write(rec, "recovery.json", to_json(&report)?.as_bytes())?;
            summary["recovery_v_measure"] = json!(report.v_measure);
        }
        rec.summary = summary;
        Ok(())
    }
}

#[derive(Deserialize)]
struct TruthLabels {
    labels: BTreeMap<String, usize>,
}

fn daily_tokens(corpus: &Corpus) -> BTreeMap<NaiveDate, Vec<String>> {
    let mut by_day: BTreeMap<NaiveDate, Vec<String>> = BTreeMap::new();
    for t in corpus.tuples() {
        if let Some(d) = t.date {
            by_day
                .entry(d)
                .or_default()
                .extend(t.all_tokens().map(str::to_string));
        }
    }
    by_day
}

/// Actant words of a community: the label words of its members together
/// with the seed entities contained in their phrases, sorted.
pub fn community_actants(
    members: impl Iterator<Item = crate::subnode::SubnodeId>,
    subnodes: &[Subnode],
    seeds: &SeedEntityList,
) -> Vec<String> {
    let by_id: BTreeMap<_, _> = subnodes.iter().map(|s| (s.id, s)).collect();
    let mut words = BTreeSet::new();
    for id in members {
        let Some(s) = by_id.get(&id) else { continue };
        words.extend(s.label.iter().cloned());
        for p in &s.member_phrases {
            let tokens: Vec<&str> = p.split(' ').collect();
            words.extend(seeds.seeds_in(&tokens).into_iter().map(str::to_string));
        }
    }
    words.into_iter().collect()
}

/// Communities of one window network from a single Louvain run, as lists of
/// entity names. Entities without any co-occurrence are left out.
pub fn window_communities(net: &CooccurrenceNetwork, seed: u64) -> Vec<Vec<String>> {
    let edges: Vec<(usize, usize, f64)> = net
        .edges()
        .into_iter()
        .map(|(i, j, c)| (i, j, c as f64))
        .collect();
    if edges.is_empty() {
        return Vec::new();
    }
    let g = UndirectedGraph::from_edges(net.entities.len(), &edges);
    let part = louvain(&g, seed).partition;
    let mut comms: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, e) in net.entities.iter().enumerate() {
        if !g.neighbors(i).is_empty() {
            comms.entry(part[i]).or_default().push(e.clone());
        }
    }
    comms.into_values().collect()
}

/// Recovery of planted contexts: each labelled actant goes to the community
/// whose core holds most of the sub-nodes mentioning it (lowest id on ties);
/// actants in no core form their own singleton communities.
pub fn planted_recovery(
    cset: &CommunitySet,
    subnodes: &[Subnode],
    labels: &BTreeMap<String, usize>,
) -> Result<AgreementReport> {
    let mut core_of = BTreeMap::new();
    for c in &cset.communities {
        for &m in &c.core {
            core_of.insert(m, c.id);
        }
    }
    let mut predicted: BTreeMap<String, usize> = BTreeMap::new();
    let mut next_free = cset.communities.iter().map(|c| c.id + 1).max().unwrap_or(0);
    for actant in labels.keys() {
        let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
        for s in subnodes {
            let mentions = s
                .member_phrases
                .iter()
                .any(|p| p.split(' ').any(|t| t == actant));
            if let (true, Some(&c)) = (mentions, core_of.get(&s.id)) {
                *votes.entry(c).or_default() += 1;
            }
        }
        let best = votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(c, _)| *c);
        let c = best.unwrap_or_else(|| {
            next_free += 1;
            next_free - 1
        });
        predicted.insert(actant.clone(), c);
    }
    let group = |m: &BTreeMap<String, usize>| -> Vec<Vec<String>> {
        let mut by: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for (a, &c) in m {
            by.entry(c).or_default().push(a.clone());
        }
        by.into_values().collect()
    };
    evaluate_communities(&group(&predicted), &group(labels))
}

/// Runs one stage against the artifacts already in the output directory.
pub fn run_stage(cfg: RunConfig, stage: Stage, force: bool) -> Result<RunManifest> {
    let cfg = cfg.resolve()?;
    let mut ctx = Ctx::new(cfg)?;
    if let Some(mut existing) = RunManifest::load(&ctx.out)? {
        existing.set_config(&ctx.cfg)?;
        ctx.manifest = existing;
    }
    if force {
        warn!("--force: skipping upstream freshness checks");
    } else {
        ctx.check_upstream(stage)
            .map_err(|e| e.in_stage(stage.name()))?;
    }
    execute(&mut ctx, stage)?;
    Ok(ctx.manifest)
}

fn execute(ctx: &mut Ctx, stage: Stage) -> Result<()> {
    info!("stage {}", stage.name());
    let mut rec = StageRecord::new(stage.name());
    let result = ctx.run(stage, &mut rec);
    if let Err(e) = &result {
        rec.status = StageStatus::Failed;
        rec.error = Some(e.to_string());
    }
    ctx.manifest.put(rec);
    ctx.save_manifest()?;
    result.map_err(|e| e.in_stage(stage.name()))
}

/// Runs every stage in order, writing all artifacts and the manifest to the
/// output directory. Window networks, coverage correlation and news
/// agreement are skipped without a news input.
pub fn run_pipeline(cfg: RunConfig) -> Result<RunManifest> {
    let cfg = cfg.resolve()?;
    let mut ctx = Ctx::new(cfg)?;
    let has_news = ctx.cfg.inputs.news.is_some();
    for stage in Stage::ALL {
        if stage == Stage::Newsnet && !has_news {
            let mut rec = StageRecord::new(stage.name());
            rec.status = StageStatus::Skipped;
            ctx.manifest.put(rec);
            continue;
        }
        execute(&mut ctx, stage)?;
    }
    Ok(ctx.manifest)
}

/// Parameters of the `simulate` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub k: usize,
    pub n: usize,
    pub r: usize,
    pub separation: f64,
    pub sigma: f64,
    pub overlap: usize,
    pub edge_density: f64,
    pub social_posts: usize,
    pub news_posts: usize,
    pub tuples_per_post: usize,
    pub days: u32,
    pub lag: i64,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            k: 3,
            n: 30,
            r: 4,
            separation: 6.0,
            sigma: 1.0,
            overlap: 0,
            edge_density: 0.6,
            social_posts: 2000,
            news_posts: 2000,
            tuples_per_post: 3,
            days: 105,
            lag: 0,
            seed: 0,
        }
    }
}

/// Writes a synthetic dataset and a ready-to-run `config.json` into `dir`.
pub fn simulate(sim: &SimulateConfig, dir: &Path) -> Result<()> {
    let model = ModelParams {
        sigma: sim.sigma,
        overlap: sim.overlap,
        edge_density: sim.edge_density,
        ..ModelParams::new(
            sim.k,
            sim.n,
            sim.r,
            sim.separation,
            seed::derive(sim.seed, "model"),
        )
    }
    .build()?;
    let coupled = CoupledParams {
        tuples_per_post: sim.tuples_per_post,
        ..CoupledParams::new(
            sim.days,
            sim.social_posts,
            sim.news_posts,
            sim.lag,
            seed::derive(sim.seed, "streams"),
        )
    };
    let (social, news) = synth::sample_coupled(&model, &coupled)?;
    synth::write_dataset(
        dir,
        &model,
        &social,
        &news,
        seed::derive(sim.seed, "embeddings"),
    )?;
    let cfg = RunConfig {
        inputs: Inputs {
            social: Some("social.jsonl".into()),
            news: Some("news.jsonl".into()),
            embeddings: Some("embeddings.tsv".into()),
            seeds: Some("seeds.txt".into()),
            truth: Some("truth.json".into()),
            ..Inputs::default()
        },
        seeds: Seeds {
            master: sim.seed,
            ..Seeds::default()
        },
        ..RunConfig::default()
    };
    let path = dir.join("config.json");
    fs::write(&path, to_json(&cfg)?).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_resolve_deterministically() {
        let a = RunConfig::default().resolve().unwrap();
        let b = RunConfig::default().resolve().unwrap();
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(a.seeds.kmeans, Some(seed::derive(0, "kmeans")));
        let c = RunConfig {
            seeds: Seeds {
                kmeans: Some(5),
                ..Seeds::default()
            },
            ..RunConfig::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(c.seeds.kmeans, Some(5));
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        let bad = RunConfig {
            tau_relax: 0.95,
            ..RunConfig::default()
        };
        assert!(matches!(bad.resolve(), Err(Error::Config(_))));
        let bad = RunConfig {
            min_edge_weight: 0,
            ..RunConfig::default()
        };
        assert!(matches!(bad.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"min_coocc": 2}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"min_cooc": 7}"#).unwrap();
        assert_eq!(cfg.min_cooc, 7);
    }
}
