use std::path::PathBuf;
use std::process::ExitCode;

use actant_core::grouping::GroupId;
use actant_core::kmeans::Distance;
use actant_core::pipeline::{self, RunConfig, SimulateConfig, Stage, StageRecord};
use actant_core::{Error, ErrorKind};
use clap::{Args, Parser, Subcommand};

/// Narrative-framework networks from relationship tuples.
#[derive(Parser, Debug)]
#[command(name = "actant", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every stage in order.
    Run(StageArgs),
    /// Load and validate all inputs.
    Ingest(StageArgs),
    /// Form contextual groups from seed co-occurrence.
    Group(StageArgs),
    /// Cluster each group's phrases into sub-nodes.
    Cluster(StageArgs),
    /// Build the sub-node graph.
    Graph(StageArgs),
    /// Detect overlapping communities.
    Communities(StageArgs),
    /// Build per-window news co-occurrence networks.
    Newsnet(StageArgs),
    /// Coverage series, baselines and cross-correlation.
    Coverage(StageArgs),
    /// Agreement of news and social-media communities.
    Evaluate(StageArgs),
    /// Write a synthetic dataset with planted ground truth.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct StageArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (the ACTANT_OUT_DIR environment variable wins).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Run even if upstream artifacts do not match the manifest.
    #[arg(long)]
    force: bool,

    #[arg(long, help_heading = "Inputs")]
    social: Option<PathBuf>,
    #[arg(long, help_heading = "Inputs")]
    news: Option<PathBuf>,
    #[arg(long, help_heading = "Inputs")]
    embeddings: Option<PathBuf>,
    #[arg(long, help_heading = "Inputs")]
    seeds: Option<PathBuf>,
    #[arg(long, help_heading = "Inputs")]
    stop_words: Option<PathBuf>,
    #[arg(long, help_heading = "Inputs")]
    aliases: Option<PathBuf>,
    /// Planted labels for recovery scoring.
    #[arg(long, help_heading = "Inputs")]
    truth: Option<PathBuf>,

    /// Master seed; every unset module seed is derived from it.
    #[arg(long, help_heading = "Seeds")]
    seed: Option<u64>,
    #[arg(long, help_heading = "Seeds")]
    kmeans_seed: Option<u64>,
    #[arg(long, help_heading = "Seeds")]
    relation_seed: Option<u64>,
    #[arg(long, help_heading = "Seeds")]
    community_seed: Option<u64>,
    #[arg(long, help_heading = "Seeds")]
    news_seed: Option<u64>,
    #[arg(long, help_heading = "Seeds")]
    metric_seed: Option<u64>,

    /// Minimum seed-pair co-occurrence for grouping.
    #[arg(long, help_heading = "Grouping and clustering")]
    min_cooc: Option<u64>,
    /// Sub-nodes per group: `N` for all groups or `GROUP=N` for one; repeatable.
    #[arg(
        long,
        value_name = "[GROUP=]K",
        help_heading = "Grouping and clustering"
    )]
    k_override: Vec<String>,
    /// euclidean or cosine.
    #[arg(long, help_heading = "Grouping and clustering")]
    distance: Option<Distance>,
    /// Clusters per edge when grouping relationship phrases.
    #[arg(long, help_heading = "Grouping and clustering")]
    relation_k: Option<usize>,

    #[arg(long, help_heading = "Graph")]
    min_edge_weight: Option<u64>,
    #[arg(long, help_heading = "Graph")]
    directed_export: bool,
    #[arg(long, help_heading = "Graph")]
    allow_self_loops: bool,

    /// Louvain runs in the ensemble.
    #[arg(long, help_heading = "Communities")]
    runs: Option<usize>,
    #[arg(long, help_heading = "Communities")]
    tau_core: Option<f64>,
    #[arg(long, help_heading = "Communities")]
    tau_relax: Option<f64>,

    /// Window width in days.
    #[arg(long, help_heading = "News windows")]
    width: Option<u32>,
    /// Window shift in days.
    #[arg(long, help_heading = "News windows")]
    shift: Option<u32>,
    #[arg(long, help_heading = "News windows")]
    top_tfidf: Option<usize>,
    #[arg(long, help_heading = "News windows")]
    top_freq: Option<usize>,

    #[arg(long, help_heading = "Coverage")]
    baseline_samples: Option<usize>,
    #[arg(long, help_heading = "Coverage")]
    baseline_size: Option<usize>,
    #[arg(long, help_heading = "Coverage")]
    max_lag: Option<u32>,
    /// Moving-average width applied before cross-correlation.
    #[arg(long, help_heading = "Coverage")]
    smoothing: Option<usize>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Directory for the dataset and its config.json.
    #[arg(long, short)]
    out: PathBuf,
    /// Contexts.
    #[arg(long)]
    k: Option<usize>,
    /// Actants.
    #[arg(long)]
    n: Option<usize>,
    /// Relationship types.
    #[arg(long)]
    r: Option<usize>,
    /// Distance between context centres, in units of sigma.
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Actants shared between consecutive contexts.
    #[arg(long)]
    overlap: Option<usize>,
    #[arg(long)]
    edge_density: Option<f64>,
    #[arg(long)]
    social_posts: Option<usize>,
    #[arg(long)]
    news_posts: Option<usize>,
    #[arg(long)]
    tuples_per_post: Option<usize>,
    #[arg(long)]
    days: Option<u32>,
    /// Days by which the news stream trails social media.
    #[arg(long, allow_negative_numbers = true)]
    lag: Option<i64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl StageArgs {
    fn config(self) -> Result<(RunConfig, bool), Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let inputs = &mut cfg.inputs;
        set_opt(&mut inputs.social, self.social);
        set_opt(&mut inputs.news, self.news);
        set_opt(&mut inputs.embeddings, self.embeddings);
        set_opt(&mut inputs.seeds, self.seeds);
        set_opt(&mut inputs.stop_words, self.stop_words);
        set_opt(&mut inputs.aliases, self.aliases);
        set_opt(&mut inputs.truth, self.truth);
        set_opt(&mut cfg.out_dir, self.out);

        set(&mut cfg.seeds.master, self.seed);
        set_opt(&mut cfg.seeds.kmeans, self.kmeans_seed);
        set_opt(&mut cfg.seeds.relations, self.relation_seed);
        set_opt(&mut cfg.seeds.community, self.community_seed);
        set_opt(&mut cfg.seeds.news, self.news_seed);
        set_opt(&mut cfg.seeds.metric, self.metric_seed);

        set(&mut cfg.min_cooc, self.min_cooc);
        for spec in &self.k_override {
            match spec.split_once('=') {
                Some((g, k)) => {
                    let g: i64 = g.trim().parse().map_err(|_| {
                        Error::Config(format!("bad group id in --k-override {spec:?}"))
                    })?;
                    cfg.k.groups.insert(GroupId(g), parse_k(k, spec)?);
                }
                None => cfg.k.all = Some(parse_k(spec, spec)?),
            }
        }
        set(&mut cfg.distance, self.distance);
        set(&mut cfg.relation_k, self.relation_k);
        set(&mut cfg.min_edge_weight, self.min_edge_weight);
        cfg.directed_export |= self.directed_export;
        cfg.allow_self_loops |= self.allow_self_loops;
        set(&mut cfg.runs, self.runs);
        set(&mut cfg.tau_core, self.tau_core);
        set(&mut cfg.tau_relax, self.tau_relax);
        set(&mut cfg.width, self.width);
        set(&mut cfg.shift, self.shift);
        set(&mut cfg.top_tfidf, self.top_tfidf);
        set(&mut cfg.top_freq, self.top_freq);
        set(&mut cfg.baseline_samples, self.baseline_samples);
        set(&mut cfg.baseline_size, self.baseline_size);
        set(&mut cfg.max_lag, self.max_lag);
        set(&mut cfg.smoothing, self.smoothing);
        Ok((cfg, self.force))
    }
}

fn parse_k(k: &str, spec: &str) -> Result<usize, Error> {
    match k.trim().parse() {
        Ok(k) if k > 0 => Ok(k),
        _ => Err(Error::Config(format!(
            "--k-override {spec:?}: k must be a positive integer"
        ))),
    }
}

impl SimulateArgs {
    fn config(&self) -> SimulateConfig {
        let mut s = SimulateConfig::default();
        set(&mut s.k, self.k);
        set(&mut s.n, self.n);
        set(&mut s.r, self.r);
        set(&mut s.separation, self.separation);
        set(&mut s.sigma, self.sigma);
        set(&mut s.overlap, self.overlap);
        set(&mut s.edge_density, self.edge_density);
        set(&mut s.social_posts, self.social_posts);
        set(&mut s.news_posts, self.news_posts);
        set(&mut s.tuples_per_post, self.tuples_per_post);
        set(&mut s.days, self.days);
        set(&mut s.lag, self.lag);
        set(&mut s.seed, self.seed);
        s
    }
}

fn print_stage(s: &StageRecord) {
    let status = format!("{:?}", s.status).to_lowercase();
    match &s.error {
        Some(e) => println!("{:<12} {status:<8} {e}", s.name),
        None => println!("{:<12} {status:<8} {}", s.name, s.summary),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let (stage, args) = match cli.command {
        Command::Simulate(args) => {
            pipeline::simulate(&args.config(), &args.out)?;
            println!("wrote {}", args.out.join("config.json").display());
            return Ok(());
        }
        Command::Run(args) => {
            let (cfg, _) = args.config()?;
            pipeline::run_pipeline(cfg)?
                .stages
                .iter()
                .for_each(print_stage);
            return Ok(());
        }
        Command::Ingest(a) => (Stage::Ingest, a),
        Command::Group(a) => (Stage::Group, a),
        Command::Cluster(a) => (Stage::Cluster, a),
        Command::Graph(a) => (Stage::Graph, a),
        Command::Communities(a) => (Stage::Communities, a),
        Command::Newsnet(a) => (Stage::Newsnet, a),
        Command::Coverage(a) => (Stage::Coverage, a),
        Command::Evaluate(a) => (Stage::Evaluate, a),
    };
    let (cfg, force) = args.config()?;
    let manifest = pipeline::run_stage(cfg, stage, force)?;
    manifest
        .stage(stage.name())
        .into_iter()
        .for_each(print_stage);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Input => 3,
                ErrorKind::Stage => 4,
            })
        }
    }
}
