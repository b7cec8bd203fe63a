//! `jag` — affiliation-graph community tooling.
//!
//! Subcommands: `generate` (synthetic graphs from planted affiliations),
//! `detect` (maximum-likelihood community search), `validate` (edge
//! probability experiments), `score` (cover comparison), `sample-subnets`
//! (ego subnetwork extraction), and `replicate` (sample → detect → score →
//! aggregate).
//!
//! Exit codes: 0 success, 2 usage, 3 input/parse, 4 runtime capacity.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use jag_core::affiliation::{Affiliation, CommunityId};
use jag_core::error::Error;
use jag_core::generator::{
    sample_agm_graph, sample_jag_graph, simulate_event_process, MembershipSpec, PlantedConfig,
    ProcessConfig,
};
use jag_core::inference::{detect_communities, McmcConfig};
use jag_core::io::{
    load_dataset, parse_community_file, parse_edge_list, sample_subnetworks, write_atomic,
    write_community_file, write_detection_result, write_edge_list, LabelDict, SubnetSamplerConfig,
};
use jag_core::metrics::{f1_score, omega_index, overlapping_nmi, Cover};
use jag_core::models::{AgmParams, GridSpec, ModelParams};
use jag_core::validate::{
    binning_experiment, isolated_density_experiment, sample_constrained_pairs,
    sample_uniform_pairs, IsolatedConfig, DEFAULT_MIN_BIN_COUNT, DEFAULT_REJECTION_BUDGET,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser, Serialize)]
#[command(name = "jag", version, about = "Affiliation-graph community modeling and detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Generate a synthetic graph plus its planted affiliation.
    Generate(GenerateArgs),
    /// Detect overlapping communities by likelihood search.
    Detect(DetectArgs),
    /// Run edge-probability validation experiments.
    #[command(subcommand)]
    Validate(ValidateCommand),
    /// Score a detected cover against ground truth.
    Score(ScoreArgs),
    /// Sample ego subnetworks around multi-membership seed nodes.
    SampleSubnets(SubnetArgs),
    /// Chain sample-subnets, detect, and score; aggregate the metrics.
    Replicate(ReplicateArgs),
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Model {
    /// Edge probability alpha * J(S_u, S_v).
    Jag,
    /// Coin-flip per shared community with probability p.
    Agm,
    /// Community-event friendship process.
    Process,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Layout {
    /// Equal-size communities in a chain with fixed pairwise overlap.
    Chain,
    /// Independent Bernoulli memberships.
    Random,
}

#[derive(Args, Serialize)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "jag")]
    model: Model,
    /// Number of planted communities.
    #[arg(long)]
    num_communities: usize,
    /// Community membership layout.
    #[arg(long, value_enum, default_value = "chain")]
    layout: Layout,
    /// Nodes per community (chain layout).
    #[arg(long, default_value_t = 30)]
    community_size: usize,
    /// Nodes shared by consecutive communities (chain layout).
    #[arg(long, default_value_t = 0)]
    overlap: usize,
    /// Total node count; defaults to what the layout needs.
    #[arg(long)]
    nodes: Option<usize>,
    /// Membership probability (random layout).
    #[arg(long, value_parser = parse_probability, default_value_t = 0.2)]
    membership_prob: f64,
    /// Global edge-probability scale (jag model).
    #[arg(long, value_parser = parse_probability, default_value_t = 0.5)]
    alpha: f64,
    /// Per-community edge probability (agm model).
    #[arg(long, value_parser = parse_probability, default_value_t = 0.5)]
    p: f64,
    /// Background edge probability.
    #[arg(long, value_parser = parse_probability, default_value_t = 1e-8)]
    epsilon: f64,
    /// Rounds of the event process (process model).
    #[arg(long, default_value_t = 100)]
    rounds: u64,
    /// Per-round friendship probability for co-attendees (process model).
    #[arg(long, value_parser = parse_probability, default_value_t = 0.01)]
    meet_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DetectArgs {
    /// Edge-list file of the graph to cluster.
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    mcmc: McmcArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct McmcArgs {
    /// Number of communities the assignment may use.
    #[arg(long)]
    num_communities: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iters: u64,
    /// Steps without best-likelihood improvement before a chain stops.
    #[arg(long, default_value_t = 2_000)]
    patience: u64,
    /// Proposals per step; the best of the batch is the candidate.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Accepted moves between slope refits.
    #[arg(long = "alpha-refit", default_value_t = 50)]
    alpha_refit: u64,
    #[arg(long, value_parser = parse_probability, default_value_t = 0.01)]
    grid_step: f64,
    /// Optional second-stage refinement step around the coarse argmax.
    #[arg(long, value_parser = parse_probability)]
    grid_refine: Option<f64>,
    #[arg(long, value_parser = parse_probability, default_value_t = 1e-8)]
    epsilon: f64,
    /// Membership probability of the random initial assignment.
    #[arg(long, value_parser = parse_probability, default_value_t = 0.1)]
    init_prob: f64,
}

impl McmcArgs {
    fn to_config(&self, seed: u64) -> McmcConfig<f64> {
        let mut grid = GridSpec::with_step(self.grid_step);
        grid.refine_step = self.grid_refine;
        McmcConfig {
            community_count: self.num_communities,
            max_iters: self.max_iters,
            patience: self.patience,
            restarts: self.restarts,
            batch: self.batch,
            alpha_refit_interval: self.alpha_refit,
            grid,
            init_membership_prob: self.init_prob,
            epsilon: self.epsilon,
            seed,
        }
    }
}

#[derive(Subcommand, Serialize)]
enum ValidateCommand {
    /// Jaccard-binned edge frequencies and the fitted slope.
    Bins(BinsArgs),
    /// Internal edge density of isolated communities.
    Isolated(IsolatedArgs),
}

#[derive(Args, Serialize)]
struct BinsArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Ground-truth community file.
    #[arg(long)]
    communities: PathBuf,
    /// Accept community files whose labels do not all resolve.
    #[arg(long, default_value_t = false)]
    lenient: bool,
    /// Number of sampled node pairs.
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
    /// Constrain pairs to an exact shared-community set (comma-separated
    /// community indices); default is uniform random pairs.
    #[arg(long, value_delimiter = ',')]
    constrained: Option<Vec<u32>>,
    /// Rejection-sampling attempt budget for constrained pairs.
    #[arg(long, default_value_t = DEFAULT_REJECTION_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Bins with fewer pairs are flagged in the report.
    #[arg(long, default_value_t = DEFAULT_MIN_BIN_COUNT)]
    min_bin_count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct IsolatedArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    communities: PathBuf,
    #[arg(long, default_value_t = false)]
    lenient: bool,
    /// Smallest isolated community worth measuring.
    #[arg(long, default_value_t = 5)]
    min_size: usize,
    /// Communities sampled when more qualify.
    #[arg(long, default_value_t = 5)]
    max_count: usize,
    /// Externally estimated slope to report alongside the densities.
    #[arg(long, value_parser = parse_probability)]
    slope: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ScoreArgs {
    /// Ground-truth community file.
    #[arg(long)]
    truth: PathBuf,
    /// Detected community file.
    #[arg(long)]
    detected: PathBuf,
    /// Optional edge list fixing the node universe for the omega index.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Also write scores.json and provenance.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SubnetArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    communities: PathBuf,
    #[arg(long, default_value_t = false)]
    lenient: bool,
    /// Minimum community memberships of a seed node.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Number of subnetworks to sample.
    #[arg(long, default_value_t = 500)]
    count: usize,
    /// Restricted communities smaller than this are dropped.
    #[arg(long, default_value_t = 2)]
    min_community_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ReplicateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    communities: PathBuf,
    #[arg(long, default_value_t = false)]
    lenient: bool,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 2)]
    min_community_size: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_iters: u64,
    #[arg(long, default_value_t = 2_000)]
    patience: u64,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long = "alpha-refit", default_value_t = 50)]
    alpha_refit: u64,
    #[arg(long, value_parser = parse_probability, default_value_t = 0.01)]
    grid_step: f64,
    #[arg(long, value_parser = parse_probability, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, value_parser = parse_probability, default_value_t = 0.1)]
    init_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::InvalidMove(_) | Error::EmptyGrid => 2,
        Error::Parse { .. }
        | Error::Io { .. }
        | Error::SizeMismatch(_)
        | Error::EmptyCover
        | Error::NodeOutOfRange { .. }
        | Error::CommunityOutOfRange { .. } => 3,
        Error::RejectionBudgetExhausted { .. }
        | Error::ProposalExhausted
        | Error::EnumerationTooLarge { .. }
        | Error::NoQualifyingSeed { .. }
        | Error::NoIsolatedCommunities
        | Error::DegenerateOmega => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Validate(ValidateCommand::Bins(args)) => cmd_validate_bins(args),
        Command::Validate(ValidateCommand::Isolated(args)) => cmd_validate_isolated(args),
        Command::Score(args) => cmd_score(args),
        Command::SampleSubnets(args) => cmd_sample_subnets(args),
        Command::Replicate(args) => cmd_replicate(args),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    write_atomic(path, body.as_bytes())
}

fn write_provenance(dir: &Path, command: &str, seed: u64, config: &impl Serialize) -> Result<(), Error> {
    write_json(
        &dir.join("provenance.json"),
        &json!({ "command": command, "seed": seed, "config": config }),
    )
}

fn load_graph_and_cover(
    graph: &Path,
    communities: &Path,
    lenient: bool,
) -> Result<(jag_core::Graph, Cover, LabelDict), Error> {
    let dataset = load_dataset(graph, communities, !lenient)?;
    Ok((dataset.graph, dataset.cover, dataset.dict))
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let spec = match args.layout {
        Layout::Chain => MembershipSpec::Chain {
            community_size: args.community_size,
            overlap: args.overlap,
        },
        Layout::Random => MembershipSpec::Random {
            membership_prob: args.membership_prob,
        },
    };
    let planted = PlantedConfig {
        node_count: args.nodes,
        community_count: args.num_communities,
        spec,
        seed: args.seed,
    };
    let affiliation = planted.build()?;

    let mut coattendance: Option<String> = None;
    let graph = match args.model {
        Model::Jag => {
            let params = ModelParams::new(args.alpha, args.epsilon)?;
            sample_jag_graph(&affiliation, &params, args.seed)
        }
        Model::Agm => {
            let params = AgmParams::uniform(affiliation.community_count(), args.p)?;
            sample_agm_graph(&affiliation, &params, args.epsilon, args.seed)?
        }
        Model::Process => {
            let cfg = ProcessConfig::new(args.rounds, args.meet_prob, args.seed)?;
            let (graph, counts) = simulate_event_process(&affiliation, &cfg)?;
            let mut csv = String::from("u,v,coattendance\n");
            for (u, v, count) in counts.nonzero() {
                csv.push_str(&format!("{u},{v},{count}\n"));
            }
            coattendance = Some(csv);
            graph
        }
    };

    ensure_dir(&args.out)?;
    let dict = LabelDict::identity(graph.node_count());
    write_edge_list(&graph, &dict, args.out.join("graph.txt"))?;
    write_community_file(&affiliation.to_cover(), &dict, args.out.join("communities.txt"))?;
    if let Some(csv) = coattendance {
        write_atomic(args.out.join("coattendance.csv"), csv.as_bytes())?;
    }
    write_provenance(&args.out, "generate", args.seed, &args)?;
    eprintln!(
        "generated {} nodes, {} edges, {} communities -> {}",
        graph.node_count(),
        graph.edge_count(),
        affiliation.community_count(),
        args.out.display()
    );
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), Error> {
    let (graph, dict, _) = parse_edge_list(&args.graph)?;
    let cfg = args.mcmc.to_config(args.seed);
    let result = detect_communities(&graph, &cfg)?;
    ensure_dir(&args.out)?;
    write_detection_result(&result, &cfg, &dict, &args.out)?;
    write_provenance(&args.out, "detect", args.seed, &args)?;
    eprintln!(
        "detected {} communities (alpha = {:.3}, log-likelihood = {:.3}) -> {}",
        result.best_affiliation.to_cover().len(),
        result.alpha_hat,
        result.best_log_likelihood,
        args.out.display()
    );
    Ok(())
}

fn cmd_validate_bins(args: BinsArgs) -> Result<(), Error> {
    let (graph, cover, _) = load_graph_and_cover(&args.graph, &args.communities, args.lenient)?;
    let affiliation = Affiliation::from_cover(graph.node_count(), &cover)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let pairs = match &args.constrained {
        Some(fixed) => {
            let fixed: Vec<CommunityId> = fixed.iter().copied().map(CommunityId).collect();
            sample_constrained_pairs(&affiliation, &fixed, args.pairs, args.budget, &mut rng)?
        }
        None => sample_uniform_pairs(graph.node_count(), args.pairs, &mut rng)?,
    };
    let report = binning_experiment::<f64>(&graph, &affiliation, &pairs, args.bins, args.min_bin_count)?;

    ensure_dir(&args.out)?;
    write_atomic(args.out.join("bins.csv"), report.to_csv().as_bytes())?;
    write_json(&args.out.join("summary.json"), &report)?;
    write_provenance(&args.out, "validate bins", args.seed, &args)?;
    eprintln!(
        "binned {} pairs: fitted slope {:.4} (residual {:.4}) -> {}",
        report.total_pairs(),
        report.fitted_slope,
        report.fit_residual,
        args.out.display()
    );
    Ok(())
}

fn cmd_validate_isolated(args: IsolatedArgs) -> Result<(), Error> {
    let (graph, cover, _) = load_graph_and_cover(&args.graph, &args.communities, args.lenient)?;
    let affiliation = Affiliation::from_cover(graph.node_count(), &cover)?;
    let cfg = IsolatedConfig {
        min_size: args.min_size,
        max_count: args.max_count,
        seed: args.seed,
        comparison_alpha: args.slope,
    };
    let report = isolated_density_experiment::<f64>(&graph, &affiliation, &cfg)?;

    ensure_dir(&args.out)?;
    write_atomic(
        args.out.join("isolated.csv"),
        report.to_csv(&graph, &affiliation).as_bytes(),
    )?;
    write_json(&args.out.join("summary.json"), &report)?;
    write_provenance(&args.out, "validate isolated", args.seed, &args)?;
    eprintln!(
        "isolated density {:.3} +/- {:.3} over {} communities -> {}",
        report.mean,
        report.std,
        report.communities.len(),
        args.out.display()
    );
    Ok(())
}

fn score_covers(
    truth: &Cover,
    detected: &Cover,
    graph_nodes: Option<usize>,
) -> Result<serde_json::Value, Error> {
    let f1: f64 = f1_score(truth, detected)?;
    let nmi: f64 = overlapping_nmi(truth, detected)?;
    let omega: f64 = omega_index(truth, detected, graph_nodes)?;
    Ok(json!({
        "f1": f1,
        "nmi": nmi,
        "omega": omega,
        "variants": {
            "f1": "symmetric best-match average",
            "nmi": "overlapping covers, binary membership vectors",
            "omega": "co-membership level agreement, chance-corrected",
        },
    }))
}

fn cmd_score(args: ScoreArgs) -> Result<(), Error> {
    let mut dict = LabelDict::new();
    let graph_nodes = match &args.graph {
        Some(path) => {
            let (graph, parsed_dict, _) = parse_edge_list(path)?;
            dict = parsed_dict;
            Some(graph.node_count())
        }
        None => None,
    };
    let (truth, _) = parse_community_file(&args.truth, &mut dict, false)?;
    let (detected, _) = parse_community_file(&args.detected, &mut dict, false)?;
    let record = score_covers(&truth, &detected, graph_nodes)?;
    println!("{record}");
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("scores.json"), &record)?;
        write_provenance(out, "score", 0, &args)?;
    }
    Ok(())
}

fn cmd_sample_subnets(args: SubnetArgs) -> Result<(), Error> {
    let (graph, cover, dict) = load_graph_and_cover(&args.graph, &args.communities, args.lenient)?;
    let cfg = SubnetSamplerConfig {
        k: args.k,
        count: args.count,
        seed: args.seed,
        min_community_size: args.min_community_size,
    };
    let subnets = sample_subnetworks(&graph, &cover, &cfg)?;

    ensure_dir(&args.out)?;
    for (i, subnet) in subnets.iter().enumerate() {
        let dir = args.out.join(format!("subnet_{i:04}"));
        ensure_dir(&dir)?;
        // Files keep original labels; nodes.txt lists every subnet node
        // (including edge-isolated ones) and is the back-mapping.
        let sub_dict = subnet_dict(subnet.node_map.as_slice(), &dict);
        write_edge_list(&subnet.graph, &sub_dict, dir.join("graph.txt"))?;
        write_community_file(&subnet.cover, &sub_dict, dir.join("communities.txt"))?;
        let nodes: String = subnet
            .node_map
            .iter()
            .map(|&old| format!("{}\n", dict.label(old)))
            .collect();
        write_atomic(dir.join("nodes.txt"), nodes.as_bytes())?;
        write_json(
            &dir.join("meta.json"),
            &json!({
                "seed_node": dict.label(subnet.seed_node.0),
                "nodes": subnet.graph.node_count(),
                "edges": subnet.graph.edge_count(),
                "communities": subnet.cover.len(),
            }),
        )?;
    }
    write_provenance(&args.out, "sample-subnets", args.seed, &args)?;
    eprintln!("sampled {} subnetworks -> {}", subnets.len(), args.out.display());
    Ok(())
}

/// Dictionary for a subnetwork's dense ids: new id -> original label.
fn subnet_dict(node_map: &[u32], dict: &LabelDict) -> LabelDict {
    let mut sub = LabelDict::new();
    for &old in node_map {
        sub.get_or_insert(dict.label(old));
    }
    sub
}

fn cmd_replicate(args: ReplicateArgs) -> Result<(), Error> {
    let (graph, cover, _) = load_graph_and_cover(&args.graph, &args.communities, args.lenient)?;
    let sampler = SubnetSamplerConfig {
        k: args.k,
        count: args.count,
        seed: args.seed,
        min_community_size: args.min_community_size,
    };
    let subnets = sample_subnetworks(&graph, &cover, &sampler)?;

    struct SubnetScore {
        f1: f64,
        nmi: f64,
        omega: f64,
        communities: usize,
        nodes: usize,
    }

    let outcomes: Vec<Option<SubnetScore>> = subnets
        .par_iter()
        .enumerate()
        .map(|(i, subnet)| -> Result<Option<SubnetScore>, Error> {
            if subnet.cover.is_empty() {
                return Ok(None);
            }
            let cfg = McmcConfig {
                community_count: subnet.cover.len(),
                max_iters: args.max_iters,
                patience: args.patience,
                restarts: args.restarts,
                batch: args.batch,
                alpha_refit_interval: args.alpha_refit,
                grid: GridSpec::with_step(args.grid_step),
                init_membership_prob: args.init_prob,
                epsilon: args.epsilon,
                seed: args.seed.wrapping_add(i as u64 + 1),
            };
            let result = detect_communities(&subnet.graph, &cfg)?;
            let detected = result.best_affiliation.to_cover();
            if detected.is_empty() {
                return Ok(None);
            }
            let f1: f64 = f1_score(&subnet.cover, &detected)?;
            let nmi: f64 = overlapping_nmi(&subnet.cover, &detected)?;
            let omega: f64 =
                omega_index(&subnet.cover, &detected, Some(subnet.graph.node_count()))
                    .unwrap_or(f64::NAN);
            Ok(Some(SubnetScore {
                f1,
                nmi,
                omega,
                communities: subnet.cover.len(),
                nodes: subnet.graph.node_count(),
            }))
        })
        .collect::<Result<_, Error>>()?;

    let scored: Vec<&SubnetScore> = outcomes.iter().flatten().collect();
    if scored.is_empty() {
        return Err(Error::InvalidArgument(
            "no subnetwork produced a scoreable cover".into(),
        ));
    }
    let mean_std = |values: Vec<f64>| {
        let clean: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        let mean = clean.iter().sum::<f64>() / clean.len() as f64;
        let std = if clean.len() < 2 {
            0.0
        } else {
            (clean.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (clean.len() - 1) as f64)
                .sqrt()
        };
        (mean, std)
    };
    let (f1_mean, f1_std) = mean_std(scored.iter().map(|s| s.f1).collect());
    let (nmi_mean, nmi_std) = mean_std(scored.iter().map(|s| s.nmi).collect());
    let (omega_mean, omega_std) = mean_std(scored.iter().map(|s| s.omega).collect());

    ensure_dir(&args.out)?;
    let mut csv = String::from("subnet,nodes,communities,f1,nmi,omega\n");
    let mut scored_index = 0usize;
    for (i, outcome) in outcomes.iter().enumerate() {
        if let Some(s) = outcome {
            csv.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                s.nodes, s.communities, s.f1, s.nmi, s.omega
            ));
            scored_index += 1;
        }
    }
    debug_assert_eq!(scored_index, scored.len());
    write_atomic(args.out.join("scores.csv"), csv.as_bytes())?;
    write_json(
        &args.out.join("aggregate.json"),
        &json!({
            "subnets": subnets.len(),
            "scored": scored.len(),
            "skipped": subnets.len() - scored.len(),
            "f1": { "mean": f1_mean, "std": f1_std },
            "nmi": { "mean": nmi_mean, "std": nmi_std },
            "omega": { "mean": omega_mean, "std": omega_std },
        }),
    )?;
    write_provenance(&args.out, "replicate", args.seed, &args)?;
    eprintln!(
        "replicated over {} subnets: F1 {:.3} +/- {:.3}, NMI {:.3} +/- {:.3}, omega {:.3} +/- {:.3} -> {}",
        scored.len(),
        f1_mean,
        f1_std,
        nmi_mean,
        nmi_std,
        omega_mean,
        omega_std,
        args.out.display()
    );
    Ok(())
}
