//! Estimation of narrative-framework networks from extracted relationship
//! tuples.
//!
//! The crate is organised as a sequence of stages, each usable on its own:
//!
//! * [`ingest`]: tuple, embedding, seed, stop-word and alias loaders.
//! * [`grouping`]: seed-driven contextual groups of noun phrases.
//! * [`kmeans`] and [`subnode`]: per-group phrase clustering into sub-nodes.
//! * [`graph`]: the weighted, relationship-labelled sub-node graph.
//! * [`louvain`] and [`community`]: overlapping communities from repeated
//!   Louvain runs.
//! * [`news`]: sliding windows, per-window entity selection and co-occurrence
//!   actant networks.
//! * [`coverage`] and [`metrics`]: coverage scores, random baselines,
//!   cross-correlation and clustering agreement.
//! * [`synth`]: a generative narrative model producing corpora with planted
//!   ground truth.
//! * [`pipeline`]: configuration, stage orchestration and run manifests.

pub mod community;
pub mod coverage;
pub mod error;
pub mod export;
pub mod graph;
pub mod grouping;
pub mod ingest;
pub mod kmeans;
pub mod louvain;
pub mod metrics;
pub mod news;
pub mod pipeline;
pub mod seed;
pub mod subnode;
pub mod synth;
pub mod text;

pub use community::{Community, CommunitySet, EnsembleParams};
pub use coverage::{CrossCorrelation, RelativeCoverage, TimeSeries};
pub use error::{Error, ErrorKind, Result};
pub use graph::{EdgeData, NarrativeGraph};
pub use grouping::{ContextualGroup, GroupAssignment, GroupId, SeedPairCounts};
pub use ingest::{
    AliasMap, Corpus, EmbeddingTable, LoadReport, RelationTuple, SeedEntityList, Source, StopList,
};
pub use kmeans::{Distance, KMeansParams, KMeansResult};
pub use louvain::{LouvainResult, UndirectedGraph};
pub use metrics::AgreementReport;
pub use news::{CooccurrenceNetwork, WindowSegment};
pub use pipeline::{RunConfig, RunManifest};
pub use subnode::{Subnode, SubnodeId};
pub use synth::GenerativeModel;
