//! Observation experiments over a graph plus ground-truth affiliation:
//! Jaccard-binned edge frequencies with a fitted slope, exact-intersection
//! constrained pair sampling, and isolated-community edge density.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::affiliation::{Affiliation, CommunityId};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::real::Real;

/// Default cap on rejection-sampling attempts per requested batch.
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

/// Default minimum pair count before a bin is flagged as thin.
pub const DEFAULT_MIN_BIN_COUNT: u64 = 30;

/// Default minimum size for an isolated community to enter the density
/// experiment; densities over fewer than a handful of pairs say nothing.
pub const DEFAULT_ISOLATED_MIN_SIZE: usize = 5;

/// Uniform unordered node pairs with distinct endpoints, sampled with
/// replacement.
pub fn sample_uniform_pairs<R: Rng>(
    node_count: usize,
    n_pairs: usize,
    rng: &mut R,
) -> Result<Vec<(NodeId, NodeId)>> {
    if node_count < 2 {
        return Err(Error::InvalidArgument(
            "pair sampling needs at least two nodes".into(),
        ));
    }
    let mut pairs = Vec::with_capacity(n_pairs);
    while pairs.len() < n_pairs {
        let u = rng.random_range(0..node_count) as u32;
        let v = rng.random_range(0..node_count) as u32;
        if u != v {
            pairs.push((NodeId(u), NodeId(v)));
        }
    }
    Ok(pairs)
}

/// Rejection-samples `n_pairs` node pairs whose shared-community set is
/// **exactly** `fixed` (each endpoint may belong to further communities, but
/// the intersection must equal `fixed`). Draws are uniform over qualifying
/// pairs, with replacement. Errors once `budget` attempts have been spent.
pub fn sample_constrained_pairs<R: Rng>(
    a: &Affiliation,
    fixed: &[CommunityId],
    n_pairs: usize,
    budget: u64,
    rng: &mut R,
) -> Result<Vec<(NodeId, NodeId)>> {
    if fixed.is_empty() {
        return Err(Error::InvalidArgument(
            "constrained sampling needs a non-empty fixed community set".into(),
        ));
    }
    let mut target: Vec<CommunityId> = fixed.to_vec();
    target.sort_unstable();
    target.dedup();
    for &c in &target {
        a.validate_community(c)?;
    }

    let n = a.node_count();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "pair sampling needs at least two nodes".into(),
        ));
    }
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut attempts: u64 = 0;
    while pairs.len() < n_pairs {
        if attempts >= budget {
            return Err(Error::RejectionBudgetExhausted {
                budget,
                achieved: pairs.len(),
                requested: n_pairs,
            });
        }
        attempts += 1;
        let u = NodeId(rng.random_range(0..n) as u32);
        let v = NodeId(rng.random_range(0..n) as u32);
        if u == v {
            continue;
        }
        if a.shared_communities(u, v)? == target {
            pairs.push((u, v));
        }
    }
    Ok(pairs)
}

/// Statistics of a single Jaccard bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinStat<F> {
    pub pair_count: u64,
    pub edge_count: u64,
    /// `edge_count / pair_count`; 0 for empty bins.
    pub p_edge: F,
    /// Mean Jaccard similarity of the pairs landing in the bin.
    pub mean_jaccard: F,
    /// Pair count fell below the configured minimum.
    pub low_count: bool,
}

/// Jaccard-binned edge-frequency report with a through-origin weighted
/// least-squares slope, the direct estimate of the model's global scalar.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinningReport<F> {
    /// `bins + 1` ascending breakpoints spanning `[0, 1]`.
    pub bin_edges: Vec<F>,
    pub bins: Vec<BinStat<F>>,
    pub fitted_slope: F,
    /// Count-weighted RMS residual of the fit.
    pub fit_residual: F,
    pub min_bin_count: u64,
}

impl<F: Real> BinningReport<F> {
    pub fn total_pairs(&self) -> u64 {
        self.bins.iter().map(|b| b.pair_count).sum()
    }

    pub fn total_edges(&self) -> u64 {
        self.bins.iter().map(|b| b.edge_count).sum()
    }

    /// One row per bin: `bin_lo,bin_hi,pair_count,edge_count,p_edge,mean_jaccard,low_count`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("bin_lo,bin_hi,pair_count,edge_count,p_edge,mean_jaccard,low_count\n");
        for (i, bin) in self.bins.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.bin_edges[i],
                self.bin_edges[i + 1],
                bin.pair_count,
                bin.edge_count,
                bin.p_edge,
                bin.mean_jaccard,
                bin.low_count
            ));
        }
        out
    }
}

/// Bins the given pairs by Jaccard similarity over `num_bins` equal-width
/// bins on `[0, 1]`, tallies edge frequencies per bin, and fits a
/// through-origin slope by least squares weighted by bin pair counts.
pub fn binning_experiment<F: Real>(
    g: &Graph,
    a: &Affiliation,
    pairs: &[(NodeId, NodeId)],
    num_bins: usize,
    min_bin_count: u64,
) -> Result<BinningReport<F>> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "binning needs at least one pair".into(),
        ));
    }
    if num_bins == 0 {
        return Err(Error::InvalidArgument("bin count must be >= 1".into()));
    }
    if g.node_count() != a.node_count() {
        return Err(Error::SizeMismatch(format!(
            "graph has {} nodes, affiliation has {}",
            g.node_count(),
            a.node_count()
        )));
    }

    let mut counts = vec![0u64; num_bins];
    let mut edges = vec![0u64; num_bins];
    let mut jaccard_sums = vec![0.0f64; num_bins];
    for &(u, v) in pairs {
        let j: f64 = a.jaccard(u, v)?;
        let idx = ((j * num_bins as f64).floor() as usize).min(num_bins - 1);
        counts[idx] += 1;
        jaccard_sums[idx] += j;
        if g.has_edge(u, v) {
            edges[idx] += 1;
        }
    }

    let mut bins = Vec::with_capacity(num_bins);
    let mut slope_num = 0.0f64;
    let mut slope_den = 0.0f64;
    for i in 0..num_bins {
        let pair_count = counts[i];
        let mean_j = if pair_count == 0 {
            0.0
        } else {
            jaccard_sums[i] / pair_count as f64
        };
        let p_edge = if pair_count == 0 {
            0.0
        } else {
            edges[i] as f64 / pair_count as f64
        };
        slope_num += pair_count as f64 * mean_j * p_edge;
        slope_den += pair_count as f64 * mean_j * mean_j;
        bins.push(BinStat {
            pair_count,
            edge_count: edges[i],
            p_edge: F::from_f64_lossy(p_edge),
            mean_jaccard: F::from_f64_lossy(mean_j),
            low_count: pair_count < min_bin_count,
        });
    }
    let slope = if slope_den > 0.0 { slope_num / slope_den } else { 0.0 };

    let mut residual_num = 0.0f64;
    let mut weight_sum = 0.0f64;
    for (i, bin) in bins.iter().enumerate() {
        if bin.pair_count == 0 {
            continue;
        }
        let mean_j = jaccard_sums[i] / bin.pair_count as f64;
        let p_edge = edges[i] as f64 / bin.pair_count as f64;
        let r = p_edge - slope * mean_j;
        residual_num += bin.pair_count as f64 * r * r;
        weight_sum += bin.pair_count as f64;
    }
    let residual = (residual_num / weight_sum).sqrt();

    let bin_edges = (0..=num_bins)
        .map(|i| F::from_f64_lossy(i as f64 / num_bins as f64))
        .collect();
    Ok(BinningReport {
        bin_edges,
        bins,
        fitted_slope: F::from_f64_lossy(slope),
        fit_residual: F::from_f64_lossy(residual),
        min_bin_count,
    })
}

/// Communities whose members all have exactly one membership, of size at
/// least `min_size`; uniformly subsampled down to `max_count` when more
/// qualify. Returned ids are sorted.
pub fn find_isolated_communities<R: Rng>(
    a: &Affiliation,
    min_size: usize,
    max_count: usize,
    rng: &mut R,
) -> Vec<CommunityId> {
    let mut isolated: Vec<CommunityId> = (0..a.community_count() as u32)
        .map(CommunityId)
        .filter(|&c| {
            let members = a.members(c).expect("community id in range");
            members.len() >= min_size
                && members.iter().all(|&u| a.membership_count(u) == 1)
        })
        .collect();
    if isolated.len() > max_count {
        let chosen = rand::seq::index::sample(rng, isolated.len(), max_count);
        let mut subset: Vec<CommunityId> = chosen.into_iter().map(|i| isolated[i]).collect();
        subset.sort_unstable();
        isolated = subset;
    }
    isolated
}

/// Configuration of the isolated-community density experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsolatedConfig<F> {
    pub min_size: usize,
    pub max_count: usize,
    pub seed: u64,
    /// Externally estimated slope to report next to the densities.
    pub comparison_alpha: Option<F>,
}

impl<F: Real> Default for IsolatedConfig<F> {
    fn default() -> Self {
        IsolatedConfig {
            min_size: DEFAULT_ISOLATED_MIN_SIZE,
            max_count: 5,
            seed: 0,
            comparison_alpha: None,
        }
    }
}

/// Internal edge density of each isolated community, with the mean and
/// sample standard deviation across them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolatedCommunityReport<F> {
    pub communities: Vec<u32>,
    pub sizes: Vec<usize>,
    pub densities: Vec<F>,
    pub mean: F,
    pub std: F,
    pub comparison_alpha: Option<F>,
}

impl<F: Real> IsolatedCommunityReport<F> {
    /// One row per community: `community_id,size,internal_edges,density`.
    pub fn to_csv(&self, g: &Graph, a: &Affiliation) -> String {
        let mut out = String::from("community_id,size,internal_edges,density\n");
        for (i, &c) in self.communities.iter().enumerate() {
            let members = a.members(CommunityId(c)).expect("community id in range");
            let edges = internal_edges(g, members);
            out.push_str(&format!(
                "{},{},{},{}\n",
                c, self.sizes[i], edges, self.densities[i]
            ));
        }
        out
    }
}

fn internal_edges(g: &Graph, members: &[NodeId]) -> u64 {
    let mut edges = 0;
    for (i, &u) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            if g.has_edge(u, v) {
                edges += 1;
            }
        }
    }
    edges
}

/// Finds isolated communities and measures their internal edge density:
/// `internal_edges / (m choose 2)` per community, plus mean and sample
/// standard deviation across communities. Under the Jaccard-scaled model
/// every such density estimates the global scalar directly.
pub fn isolated_density_experiment<F: Real>(
    g: &Graph,
    a: &Affiliation,
    cfg: &IsolatedConfig<F>,
) -> Result<IsolatedCommunityReport<F>> {
    if g.node_count() != a.node_count() {
        return Err(Error::SizeMismatch(format!(
            "graph has {} nodes, affiliation has {}",
            g.node_count(),
            a.node_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let communities = find_isolated_communities(a, cfg.min_size, cfg.max_count, &mut rng);
    if communities.is_empty() {
        return Err(Error::NoIsolatedCommunities);
    }

    let mut sizes = Vec::with_capacity(communities.len());
    let mut densities: Vec<f64> = Vec::with_capacity(communities.len());
    for &c in &communities {
        let members = a.members(c)?;
        let m = members.len() as u64;
        let possible = m * (m - 1) / 2;
        sizes.push(members.len());
        densities.push(internal_edges(g, members) as f64 / possible as f64);
    }
    let mean = densities.iter().sum::<f64>() / densities.len() as f64;
    let std = if densities.len() < 2 {
        0.0
    } else {
        let var = densities.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / (densities.len() - 1) as f64;
        var.sqrt()
    };

    Ok(IsolatedCommunityReport {
        communities: communities.iter().map(|c| c.0).collect(),
        sizes,
        densities: densities.into_iter().map(F::from_f64_lossy).collect(),
        mean: F::from_f64_lossy(mean),
        std: F::from_f64_lossy(std),
        comparison_alpha: cfg.comparison_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{planted_chain, sample_jag_graph};
    use crate::models::ModelParams;
    use crate::testutil::affiliation_from_sets;
    use std::collections::HashMap;

    #[test]
    fn constrained_pairs_match_exact_intersection() {
        // Sets: node 0 {0,1}, node 1 {0,1,2}, node 2 {0}, node 3 {0,1,3}.
        let a = affiliation_from_sets(&[&[0, 1], &[0, 1, 2], &[0], &[0, 1, 3]], 4);
        let fixed = [CommunityId(0), CommunityId(1)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pairs = sample_constrained_pairs(&a, &fixed, 200, 1_000_000, &mut rng).unwrap();
        for &(u, v) in &pairs {
            let shared = a.shared_communities(u, v).unwrap();
            assert_eq!(shared, fixed.to_vec(), "pair ({u}, {v})");
        }
        // Pair (1, 3) has intersection {0, 1} exactly even though both carry
        // extra communities; pair (0, 1) too. Pair (1, 1) impossible, and any
        // pair with node 2 has intersection {0} and must never appear.
        assert!(pairs.iter().all(|&(u, v)| u.0 != 2 && v.0 != 2));
    }

    #[test]
    fn constrained_pairs_budget_exhaustion() {
        let a = affiliation_from_sets(&[&[0], &[0]], 2);
        let fixed = [CommunityId(1)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = sample_constrained_pairs(&a, &fixed, 5, 1000, &mut rng).unwrap_err();
        match err {
            Error::RejectionBudgetExhausted {
                achieved, requested, ..
            } => {
                assert_eq!(achieved, 0);
                assert_eq!(requested, 5);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn constrained_pairs_uniform_over_qualifying_set() {
        // Qualifying pairs of intersection {0}: all pairs among nodes 0..4
        // that share community 0 only.
        let a = affiliation_from_sets(&[&[0], &[0], &[0], &[0, 1], &[1]], 2);
        let fixed = [CommunityId(0)];
        // Brute-force the qualifying set.
        let mut qualifying = Vec::new();
        for u in 0..5u32 {
            for v in (u + 1)..5u32 {
                if a.shared_communities(NodeId(u), NodeId(v)).unwrap() == fixed.to_vec() {
                    qualifying.push((u, v));
                }
            }
        }
        assert_eq!(qualifying.len(), 6); // (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let samples = sample_constrained_pairs(&a, &fixed, 30_000, 10_000_000, &mut rng).unwrap();
        let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (u, v) in samples {
            let key = (u.0.min(v.0), u.0.max(v.0));
            *counts.entry(key).or_default() += 1;
        }
        let expected = 30_000.0 / qualifying.len() as f64;
        let chi2: f64 = qualifying
            .iter()
            .map(|key| {
                let obs = *counts.get(key).unwrap_or(&0) as f64;
                (obs - expected) * (obs - expected) / expected
            })
            .sum();
        // df = 5; the 0.999 quantile is about 20.5.
        assert!(chi2 < 20.5, "chi-square statistic {chi2} too large");
    }

    #[test]
    fn binning_single_complete_community() {
        let a = planted_chain(1, 8, 0).unwrap();
        let params = ModelParams::new(1.0, 0.0).unwrap();
        let g = sample_jag_graph(&a, &params, 3);
        let mut pairs = Vec::new();
        for u in 0..8u32 {
            for v in (u + 1)..8u32 {
                pairs.push((NodeId(u), NodeId(v)));
            }
        }
        let report: BinningReport<f64> = binning_experiment(&g, &a, &pairs, 10, 5).unwrap();
        assert_eq!(report.total_pairs(), 28);
        assert_eq!(report.bins[9].pair_count, 28);
        assert_eq!(report.bins[9].p_edge, 1.0);
        assert!((report.fitted_slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binning_rejects_empty_pair_list() {
        let a = planted_chain(1, 4, 0).unwrap();
        let g = sample_jag_graph(&a, &ModelParams::new(0.5, 0.0).unwrap(), 1);
        assert!(binning_experiment::<f64>(&g, &a, &[], 10, 5).is_err());
    }

    #[test]
    fn binning_recovers_generative_slope() {
        let a = planted_chain(4, 60, 15).unwrap();
        let params = ModelParams::new(0.5, 1e-8).unwrap();
        let g = sample_jag_graph(&a, &params, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs = sample_uniform_pairs(a.node_count(), 100_000, &mut rng).unwrap();
        let report: BinningReport<f64> = binning_experiment(&g, &a, &pairs, 10, 30).unwrap();
        assert_eq!(report.total_pairs(), 100_000);
        assert!(report.total_edges() <= report.total_pairs());
        for bin in &report.bins {
            assert!((0.0..=1.0).contains(&bin.p_edge));
        }
        assert!(
            (report.fitted_slope - 0.5).abs() < 0.05,
            "slope {} strays from 0.5",
            report.fitted_slope
        );
        // Edge frequency rises with Jaccard similarity across populated bins.
        let populated: Vec<&BinStat<f64>> =
            report.bins.iter().filter(|b| b.pair_count >= 1000).collect();
        assert!(populated.len() >= 3);
        for w in populated.windows(2) {
            assert!(w[1].mean_jaccard > w[0].mean_jaccard);
            assert!(w[1].p_edge > w[0].p_edge);
        }
    }

    #[test]
    fn isolated_communities_found_and_filtered() {
        // Communities 0..3 isolated; 3 and 4 overlap on node 18.
        let mut a = affiliation_from_sets(
            &[
                &[0], &[0], &[0], &[0], &[0],
                &[1], &[1], &[1], &[1], &[1],
                &[2], &[2], &[2], &[2], &[2],
                &[3], &[3], &[3],
            ],
            5,
        );
        a.add_membership(NodeId(17), CommunityId(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let found = find_isolated_communities(&a, 3, 10, &mut rng);
        assert_eq!(found, vec![CommunityId(0), CommunityId(1), CommunityId(2)]);
    }

    #[test]
    fn every_node_multi_membership_means_no_isolated() {
        let a = affiliation_from_sets(&[&[0, 1], &[0, 1], &[0, 1]], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(find_isolated_communities(&a, 1, 10, &mut rng).is_empty());
    }

    #[test]
    fn tiny_isolated_community_excluded_by_min_size() {
        let a = affiliation_from_sets(&[&[0]], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(find_isolated_communities(&a, 3, 10, &mut rng).is_empty());
    }

    #[test]
    fn isolated_density_alpha_one_is_exactly_one() {
        let a = planted_chain(2, 10, 0).unwrap();
        let params = ModelParams::new(1.0, 0.0).unwrap();
        let g = sample_jag_graph(&a, &params, 2);
        let report: IsolatedCommunityReport<f64> =
            isolated_density_experiment(&g, &a, &IsolatedConfig::default()).unwrap();
        assert_eq!(report.communities.len(), 2);
        assert_eq!(report.mean, 1.0);
        assert_eq!(report.std, 0.0);
    }

    #[test]
    fn isolated_density_requires_a_match() {
        let a = affiliation_from_sets(&[&[0, 1], &[0, 1]], 2);
        let g = Graph::empty(2);
        let err =
            isolated_density_experiment::<f64>(&g, &a, &IsolatedConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoIsolatedCommunities));
    }

    #[test]
    fn isolated_densities_cluster_around_shared_alpha() {
        let a = planted_chain(2, 40, 0).unwrap();
        let params = ModelParams::new(0.4, 0.0).unwrap();
        let g = sample_jag_graph(&a, &params, 21);
        let report: IsolatedCommunityReport<f64> =
            isolated_density_experiment(&g, &a, &IsolatedConfig::default()).unwrap();
        assert_eq!(report.densities.len(), 2);
        assert!((report.densities[0] - report.densities[1]).abs() < 0.1);
    }
}
