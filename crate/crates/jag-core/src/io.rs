//! Dataset ingestion, subnetwork sampling, and result serialization.
//!
//! File formats:
//! - Edge list: UTF-8 text, two whitespace-separated node labels per line,
//!   `#`-prefixed comment lines ignored.
//! - Community file: UTF-8 text, one community per line as whitespace
//!   separated member labels, blank lines skipped.
//! - Run report: JSON object with keys `alpha_hat`, `log_likelihood`,
//!   `iterations`, `acceptance_rate`, `restarts`, `seed`, `config`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affiliation::Affiliation;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::inference::{DetectionResult, McmcConfig};
use crate::metrics::Cover;
use crate::real::Real;

/// Bidirectional node-label dictionary. Labels map to dense ids in
/// first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelDict {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Dictionary mapping `"0", "1", ...` to themselves; used for generated
    /// data that never had external labels.
    pub fn identity(n: usize) -> Self {
        let mut dict = Self::new();
        for i in 0..n {
            dict.get_or_insert(&i.to_string());
        }
        dict
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn get_or_insert(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn label(&self, id: u32) -> &str {
        &self.labels[id as usize]
    }
}

/// Counters reported by the edge-list parser.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EdgeParseStats {
    pub self_loops: u64,
    pub duplicate_edges: u64,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

type RawEdgeList = (Vec<(u32, u32)>, LabelDict, EdgeParseStats);

fn parse_edge_list_raw(path: &Path) -> Result<RawEdgeList> {
    let mut dict = LabelDict::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut seen: std::collections::HashSet<(u32, u32)> = std::collections::HashSet::new();
    let mut stats = EdgeParseStats::default();

    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected 2 tokens, found {}", tokens.len()),
            });
        }
        let a = dict.get_or_insert(tokens[0]);
        let b = dict.get_or_insert(tokens[1]);
        if a == b {
            stats.self_loops += 1;
            continue;
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            stats.duplicate_edges += 1;
            continue;
        }
        edges.push(key);
    }
    Ok((edges, dict, stats))
}

/// Parses a whitespace-separated edge list into a simple graph plus the label
/// dictionary assigning dense ids in first-appearance order. Self-loops and
/// duplicate edges are dropped and counted.
pub fn parse_edge_list(path: impl AsRef<Path>) -> Result<(Graph, LabelDict, EdgeParseStats)> {
    let (edges, dict, stats) = parse_edge_list_raw(path.as_ref())?;
    let graph = Graph::from_edges(dict.len(), edges)?;
    Ok((graph, dict, stats))
}

/// Counters reported by the community-file parser.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CommunityParseStats {
    /// Labels not present in the dictionary before this parse; they extend it
    /// and become isolated nodes when the graph is rebuilt.
    pub new_labels: u64,
    /// Communities skipped in lenient mode because no member label was known.
    pub skipped_communities: u64,
}

/// Parses a community file (one community per line) against a shared label
/// dictionary. Unknown labels extend the dictionary. A community referencing
/// zero previously known nodes is a resolution error in strict mode and is
/// skipped with a counter in lenient mode.
pub fn parse_community_file(
    path: impl AsRef<Path>,
    dict: &mut LabelDict,
    strict: bool,
) -> Result<(Cover, CommunityParseStats)> {
    let path = path.as_ref();
    let known_before = dict.len() as u32;
    let mut stats = CommunityParseStats::default();
    let mut communities: Vec<Vec<u32>> = Vec::new();

    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let any_known = tokens.iter().any(|t| {
            dict.get(t)
                .map(|id| id < known_before)
                .unwrap_or(false)
        });
        if !any_known && known_before > 0 {
            if strict {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: "community references no known node label".into(),
                });
            }
            stats.skipped_communities += 1;
            continue;
        }
        let mut members: Vec<u32> = Vec::with_capacity(tokens.len());
        for token in tokens {
            if dict.get(token).is_none() {
                stats.new_labels += 1;
            }
            members.push(dict.get_or_insert(token));
        }
        members.sort_unstable();
        members.dedup();
        communities.push(members);
    }
    Ok((Cover::new(communities)?, stats))
}

/// A parsed graph-plus-ground-truth dataset sharing one label dictionary.
/// Nodes appearing only in the community file become isolated graph nodes.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub cover: Cover,
    pub dict: LabelDict,
    pub edge_stats: EdgeParseStats,
    pub community_stats: CommunityParseStats,
}

/// Loads an edge list and a community file against one shared dictionary.
pub fn load_dataset(
    edge_path: impl AsRef<Path>,
    community_path: impl AsRef<Path>,
    strict: bool,
) -> Result<Dataset> {
    let (edges, mut dict, edge_stats) = parse_edge_list_raw(edge_path.as_ref())?;
    let (cover, community_stats) = parse_community_file(community_path, &mut dict, strict)?;
    let graph = Graph::from_edges(dict.len(), edges)?;
    Ok(Dataset {
        graph,
        cover,
        dict,
        edge_stats,
        community_stats,
    })
}

/// Writes bytes to `path` atomically: a temp file in the same directory is
/// persisted over the target by rename, so concurrent readers never observe a
/// partial file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new(),
    }
    .map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes a graph as an edge list using the dictionary's labels, one canonical
/// edge per line.
pub fn write_edge_list(g: &Graph, dict: &LabelDict, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for &(u, v) in g.edges() {
        out.push_str(dict.label(u));
        out.push('\t');
        out.push_str(dict.label(v));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Writes a cover as a community file, one community per line. Covers contain
/// no empty communities by construction, so none are written.
pub fn write_community_file(cover: &Cover, dict: &LabelDict, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for members in cover.communities() {
        let labels: Vec<&str> = members.iter().map(|&u| dict.label(u)).collect();
        out.push_str(&labels.join("\t"));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Subnetwork sampler settings. A seed node must belong to at least `k`
/// ground-truth communities; the subnetwork is the subgraph induced by every
/// node sharing a community with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnetSamplerConfig {
    pub k: usize,
    pub count: usize,
    pub seed: u64,
    /// Communities keep only members inside the subnetwork; restrictions
    /// smaller than this are dropped.
    pub min_community_size: usize,
}

impl Default for SubnetSamplerConfig {
    fn default() -> Self {
        SubnetSamplerConfig {
            k: 2,
            count: 500,
            seed: 0,
            min_community_size: 2,
        }
    }
}

/// One sampled subnetwork with re-densified node ids.
#[derive(Debug, Clone)]
pub struct Subnetwork {
    pub graph: Graph,
    /// Ground-truth cover restricted to the subnetwork's nodes.
    pub cover: Cover,
    /// Maps new dense ids back to original node ids (sorted by original id).
    pub node_map: Vec<u32>,
    /// Seed node in original ids.
    pub seed_node: NodeId,
}

/// Samples `count` ego subnetworks: a uniform seed node with at least `k`
/// memberships, all nodes sharing at least one community with it, the induced
/// subgraph, and the cover restricted to those nodes.
pub fn sample_subnetworks(
    g: &Graph,
    cover: &Cover,
    cfg: &SubnetSamplerConfig,
) -> Result<Vec<Subnetwork>> {
    if cfg.k == 0 || cfg.count == 0 {
        return Err(Error::InvalidArgument(
            "subnetwork sampling needs k >= 1 and count >= 1".into(),
        ));
    }
    let a = Affiliation::from_cover(g.node_count(), cover)?;
    let eligible: Vec<NodeId> = (0..g.node_count() as u32)
        .map(NodeId)
        .filter(|&u| a.membership_count(u) >= cfg.k)
        .collect();
    if eligible.is_empty() {
        return Err(Error::NoQualifyingSeed { k: cfg.k });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut subnets = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let seed_node = eligible[rng.random_range(0..eligible.len())];
        let mut nodes: Vec<u32> = vec![seed_node.0];
        for &c in a.community_set(seed_node)? {
            nodes.extend(a.members(c)?.iter().map(|n| n.0));
        }
        nodes.sort_unstable();
        nodes.dedup();

        let new_id = |old: u32| nodes.binary_search(&old).ok().map(|i| i as u32);
        let mut edges = Vec::new();
        for (new_u, &old_u) in nodes.iter().enumerate() {
            for &old_v in g.neighbors(NodeId(old_u)) {
                if old_v > old_u {
                    if let Some(new_v) = new_id(old_v) {
                        edges.push((new_u as u32, new_v));
                    }
                }
            }
        }
        let graph = Graph::from_edges(nodes.len(), edges)?;

        let mut restricted: Vec<Vec<u32>> = Vec::new();
        for members in cover.communities() {
            let inside: Vec<u32> = members.iter().filter_map(|&u| new_id(u)).collect();
            if inside.len() >= cfg.min_community_size {
                restricted.push(inside);
            }
        }
        subnets.push(Subnetwork {
            graph,
            cover: Cover::new(restricted)?,
            node_map: nodes,
            seed_node,
        });
    }
    Ok(subnets)
}

/// Detection run report, serialized as JSON with fixed keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport<F> {
    pub alpha_hat: F,
    pub log_likelihood: F,
    pub iterations: u64,
    pub acceptance_rate: f64,
    pub restarts: usize,
    pub seed: u64,
    pub config: McmcConfig<F>,
}

impl<F: Real + Serialize> RunReport<F> {
    pub fn new(result: &DetectionResult<F>, cfg: &McmcConfig<F>) -> Self {
        RunReport {
            alpha_hat: result.alpha_hat,
            log_likelihood: result.best_log_likelihood,
            iterations: result.total_steps,
            acceptance_rate: result.acceptance_rate(),
            restarts: cfg.restarts,
            seed: cfg.seed,
            config: cfg.clone(),
        }
    }
}

/// Writes a detection result: the detected cover in community-file format
/// under the original labels, plus a JSON run report. Returns the two paths
/// written (`communities.txt`, `report.json`).
pub fn write_detection_result<F: Real + Serialize>(
    result: &DetectionResult<F>,
    cfg: &McmcConfig<F>,
    dict: &LabelDict,
    out_dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let cover_path = out_dir.join("communities.txt");
    write_community_file(&result.best_affiliation.to_cover(), dict, &cover_path)?;

    let report = RunReport::new(result, cfg);
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidArgument(format!("report serialization failed: {e}")))?;
    let report_path = out_dir.join("report.json");
    write_atomic(&report_path, json.as_bytes())?;
    Ok((cover_path, report_path))
}
