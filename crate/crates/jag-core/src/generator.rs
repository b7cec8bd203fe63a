//! Synthetic data: planted affiliations, direct graph sampling under both
//! edge-probability models, and the community-event friendship process with
//! its exact enumeration oracle.

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, CommunityId};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::models::{agm_edge_prob, jag_edge_prob, AgmParams, ModelParams};
use crate::real::Real;

/// Largest community universe the permutation oracle will enumerate.
pub const ENUMERATION_MAX_COMMUNITIES: usize = 10;

/// How memberships are laid out in a planted affiliation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MembershipSpec {
    /// Equal-size communities in a chain: community `i` covers a contiguous
    /// block of `community_size` nodes, sharing `overlap` nodes with
    /// community `i + 1`. `overlap = 0` gives isolated communities.
    Chain {
        community_size: usize,
        overlap: usize,
    },
    /// Independent Bernoulli memberships; nodes may end up unaffiliated.
    Random { membership_prob: f64 },
    /// Explicit per-node community-id lists.
    Explicit(Vec<Vec<u32>>),
}

/// Test-fixture affiliation generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    /// Total node count; when omitted it is derived from the membership
    /// layout. Extra nodes beyond the layout stay unaffiliated.
    pub node_count: Option<usize>,
    pub community_count: usize,
    pub spec: MembershipSpec,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn chain(community_count: usize, community_size: usize, overlap: usize) -> Self {
        PlantedConfig {
            node_count: None,
            community_count,
            spec: MembershipSpec::Chain {
                community_size,
                overlap,
            },
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<Affiliation> {
        match &self.spec {
            MembershipSpec::Chain {
                community_size,
                overlap,
            } => self.build_chain(*community_size, *overlap),
            MembershipSpec::Random { membership_prob } => self.build_random(*membership_prob),
            MembershipSpec::Explicit(lists) => self.build_explicit(lists),
        }
    }

    fn resolve_node_count(&self, derived: usize) -> Result<usize> {
        match self.node_count {
            None => Ok(derived),
            Some(n) if n >= derived => Ok(n),
            Some(n) => Err(Error::InvalidArgument(format!(
                "node count {n} cannot hold the {derived} nodes required by the membership layout"
            ))),
        }
    }

    fn build_chain(&self, size: usize, overlap: usize) -> Result<Affiliation> {
        if self.community_count == 0 || size == 0 {
            return Err(Error::InvalidArgument(
                "chain layout needs at least one non-empty community".into(),
            ));
        }
        if overlap >= size {
            return Err(Error::InvalidArgument(format!(
                "overlap {overlap} must be smaller than community size {size}"
            )));
        }
        let stride = size - overlap;
        let derived = stride * self.community_count + overlap;
        let n = self.resolve_node_count(derived)?;
        let mut a = Affiliation::new(n, self.community_count);
        for k in 0..self.community_count {
            let start = k * stride;
            for u in start..start + size {
                a.add_membership(NodeId(u as u32), CommunityId(k as u32))?;
            }
        }
        Ok(a)
    }

    fn build_random(&self, membership_prob: f64) -> Result<Affiliation> {
        if !(0.0..=1.0).contains(&membership_prob) {
            return Err(Error::InvalidArgument(format!(
                "membership probability must lie in [0, 1], got {membership_prob}"
            )));
        }
        let n = self.node_count.ok_or_else(|| {
            Error::InvalidArgument("random membership layout needs an explicit node count".into())
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut a = Affiliation::new(n, self.community_count);
        for u in 0..n {
            for c in 0..self.community_count {
                if rng.random::<f64>() < membership_prob {
                    a.add_membership(NodeId(u as u32), CommunityId(c as u32))?;
                }
            }
        }
        Ok(a)
    }

    fn build_explicit(&self, lists: &[Vec<u32>]) -> Result<Affiliation> {
        let n = self.resolve_node_count(lists.len())?;
        let mut a = Affiliation::new(n, self.community_count);
        for (u, comms) in lists.iter().enumerate() {
            for &c in comms {
                a.add_membership(NodeId(u as u32), CommunityId(c))?;
            }
        }
        Ok(a)
    }
}

/// Chain-of-communities fixture: `community_count` equal-size communities,
/// consecutive ones sharing `overlap` nodes.
pub fn planted_chain(
    community_count: usize,
    community_size: usize,
    overlap: usize,
) -> Result<Affiliation> {
    PlantedConfig::chain(community_count, community_size, overlap).build()
}

/// Samples a graph where every unordered pair independently becomes an edge
/// with the Jaccard-scaled probability; pairs sharing no community connect
/// with probability `epsilon` only.
pub fn sample_jag_graph<F: Real>(a: &Affiliation, params: &ModelParams<F>, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a.node_count();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            let p = jag_edge_prob(a, params, NodeId(u), NodeId(v))
                .expect("pair indices in range")
                .to_f64()
                .expect("probability fits in f64");
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("sampled edges in range")
}

/// Samples a graph under the per-community coin-flip model.
pub fn sample_agm_graph<F: Real>(
    a: &Affiliation,
    params: &AgmParams<F>,
    epsilon: F,
    seed: u64,
) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a.node_count();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            let p = agm_edge_prob(a, params, NodeId(u), NodeId(v), epsilon)?
                .to_f64()
                .expect("probability fits in f64");
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Configuration of the community-event friendship process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig<F> {
    /// Number of rounds; each round draws a fresh global community ranking.
    pub rounds: u64,
    /// Probability that two co-attending nodes befriend in a given round.
    pub meet_prob: F,
    pub seed: u64,
}

impl<F: Real> ProcessConfig<F> {
    pub fn new(rounds: u64, meet_prob: F, seed: u64) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be >= 1".into()));
        }
        if !(meet_prob > F::zero() && meet_prob <= F::one()) {
            return Err(Error::InvalidArgument(format!(
                "meet probability must lie in (0, 1], got {meet_prob}"
            )));
        }
        Ok(ProcessConfig {
            rounds,
            meet_prob,
            seed,
        })
    }
}

/// Symmetric per-pair tallies over unordered node pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    node_count: usize,
    counts: Vec<u64>,
}

impl PairCounts {
    fn new(node_count: usize) -> Self {
        PairCounts {
            node_count,
            counts: vec![0; node_count * node_count.saturating_sub(1) / 2],
        }
    }

    #[inline]
    fn index(&self, u: u32, v: u32) -> usize {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let (a, b, n) = (a as usize, b as usize, self.node_count);
        a * (2 * n - a - 1) / 2 + (b - a - 1)
    }

    #[inline]
    pub fn get(&self, u: NodeId, v: NodeId) -> u64 {
        self.counts[self.index(u.0, v.0)]
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Non-zero tallies as `(u, v, count)`, in canonical pair order.
    pub fn nonzero(&self) -> Vec<(NodeId, NodeId, u64)> {
        let mut out = Vec::new();
        for u in 0..self.node_count as u32 {
            for v in (u + 1)..self.node_count as u32 {
                let c = self.counts[self.index(u, v)];
                if c > 0 {
                    out.push((NodeId(u), NodeId(v), c));
                }
            }
        }
        out
    }
}

/// Simulates the event process: each round draws a uniform global ranking of
/// all communities, every affiliated node attends its best-ranked community,
/// and each co-attending pair gains the edge with probability `meet_prob` if
/// absent. Edges accumulate monotonically; nodes with empty community sets
/// abstain and stay isolated. Returns the final graph and per-pair
/// co-attendance tallies.
pub fn simulate_event_process<F: Real>(
    a: &Affiliation,
    cfg: &ProcessConfig<F>,
) -> Result<(Graph, PairCounts)> {
    ProcessConfig::new(cfg.rounds, cfg.meet_prob, cfg.seed)?;
    let n = a.node_count();
    let c = a.community_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let meet_prob = cfg.meet_prob.to_f64().expect("probability fits in f64");

    let mut counts = PairCounts::new(n);
    let mut has_edge = vec![false; n * n.saturating_sub(1) / 2];
    let mut order: Vec<u32> = (0..c as u32).collect();
    let mut rank = vec![0u32; c];
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); c];

    for _ in 0..cfg.rounds {
        order.shuffle(&mut rng);
        for (pos, &community) in order.iter().enumerate() {
            rank[community as usize] = pos as u32;
        }
        for bucket in &mut buckets {
            bucket.clear();
        }
        for u in 0..n {
            let set = a.community_set(NodeId(u as u32)).expect("node in range");
            if set.is_empty() {
                continue;
            }
            let chosen = set
                .iter()
                .min_by_key(|comm| rank[comm.index()])
                .expect("non-empty set");
            buckets[chosen.index()].push(u as u32);
        }
        for bucket in &buckets {
            for (i, &u) in bucket.iter().enumerate() {
                for &v in &bucket[i + 1..] {
                    let idx = counts.index(u, v);
                    counts.counts[idx] += 1;
                    if !has_edge[idx] && rng.random::<f64>() < meet_prob {
                        has_edge[idx] = true;
                    }
                }
            }
        }
    }

    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if has_edge[counts.index(u, v)] {
                edges.push((u, v));
            }
        }
    }
    Ok((Graph::from_edges(n, edges)?, counts))
}

/// Per-pair edge probability after `rounds` independent rounds of the event
/// process: `1 - (1 - meet_prob * J)^rounds`. The product
/// `meet_prob * rounds * J` is its first-order approximation.
pub fn event_process_edge_prob<F: Real>(meet_prob: F, jaccard: F, rounds: u64) -> F {
    let per_round = meet_prob * jaccard;
    F::one() - (F::one() - per_round).powf(F::from_u64(rounds).expect("rounds fits in Real"))
}

/// Visits every permutation of `items` exactly once (iterative Heap's
/// algorithm).
fn for_each_permutation<T: Copy>(items: &mut [T], mut visit: impl FnMut(&[T])) {
    let n = items.len();
    let mut stack = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(stack[i], i);
            }
            visit(items);
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
}

fn coattendance_fraction(masks: (u32, u32), ids: &mut [u32]) -> Ratio<u64> {
    let (union_mask, inter_mask) = masks;
    let mut favorable: u64 = 0;
    let mut total: u64 = 0;
    for_each_permutation(ids, |perm| {
        total += 1;
        for &id in perm {
            if union_mask & (1 << id) != 0 {
                if inter_mask & (1 << id) != 0 {
                    favorable += 1;
                }
                break;
            }
        }
    });
    Ratio::new(favorable, total)
}

fn pair_masks(a: &Affiliation, u: NodeId, v: NodeId) -> Result<(u32, u32)> {
    let mut mask_u: u32 = 0;
    for c in a.community_set(u)? {
        mask_u |= 1 << c.0;
    }
    let mut mask_v: u32 = 0;
    for c in a.community_set(v)? {
        mask_v |= 1 << c.0;
    }
    Ok((mask_u | mask_v, mask_u & mask_v))
}

/// Exact co-attendance probability of a pair under the event process,
/// computed by enumerating every permutation of **all** communities and
/// routing both nodes to their best-ranked membership. The result is the
/// exact fraction of rankings with co-attendance, which equals the Jaccard
/// similarity of the two community sets.
///
/// Capped at [`ENUMERATION_MAX_COMMUNITIES`] communities.
pub fn coattendance_prob_exact(a: &Affiliation, u: NodeId, v: NodeId) -> Result<Ratio<u64>> {
    let c = a.community_count();
    if c > ENUMERATION_MAX_COMMUNITIES {
        return Err(Error::EnumerationTooLarge {
            count: c,
            max: ENUMERATION_MAX_COMMUNITIES,
        });
    }
    let masks = pair_masks(a, u, v)?;
    let mut ids: Vec<u32> = (0..c as u32).collect();
    Ok(coattendance_fraction(masks, &mut ids))
}

/// Same probability, but enumerating permutations of `S_u ∪ S_v` only. Only
/// the relative order within the union matters, so this must agree with
/// [`coattendance_prob_exact`]; the tests check that equivalence. The
/// community universe may be arbitrarily large as long as the union stays
/// within the enumeration cap.
pub fn coattendance_prob_exact_restricted(
    a: &Affiliation,
    u: NodeId,
    v: NodeId,
) -> Result<Ratio<u64>> {
    let s_u = a.community_set(u)?;
    let s_v = a.community_set(v)?;
    // Remap the union onto dense indices so the mask stays small no matter
    // how large the universe is.
    let mut union_ids: Vec<CommunityId> = s_u.iter().chain(s_v.iter()).copied().collect();
    union_ids.sort_unstable();
    union_ids.dedup();
    if union_ids.len() > ENUMERATION_MAX_COMMUNITIES {
        return Err(Error::EnumerationTooLarge {
            count: union_ids.len(),
            max: ENUMERATION_MAX_COMMUNITIES,
        });
    }
    let mut union_mask: u32 = 0;
    let mut inter_mask: u32 = 0;
    for (i, c) in union_ids.iter().enumerate() {
        union_mask |= 1 << i;
        if s_u.binary_search(c).is_ok() && s_v.binary_search(c).is_ok() {
            inter_mask |= 1 << i;
        }
    }
    let mut ids: Vec<u32> = (0..union_ids.len() as u32).collect();
    Ok(coattendance_fraction((union_mask, inter_mask), &mut ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::affiliation_from_sets;

    #[test]
    fn chain_layout_shapes() {
        let a = planted_chain(3, 30, 5).unwrap();
        assert_eq!(a.node_count(), 80);
        assert_eq!(a.community_count(), 3);
        assert_eq!(a.members(CommunityId(0)).unwrap().len(), 30);
        // Nodes 25..30 sit in both community 0 and 1.
        assert_eq!(a.jaccard_counts(NodeId(25), NodeId(26)).unwrap(), (2, 2));
        assert_eq!(a.jaccard_counts(NodeId(0), NodeId(79)).unwrap(), (0, 2));
        a.check_consistency().unwrap();
    }

    #[test]
    fn chain_layout_rejects_overlap_at_least_size() {
        assert!(planted_chain(2, 5, 5).is_err());
    }

    #[test]
    fn explicit_node_count_must_fit_layout() {
        let cfg = PlantedConfig {
            node_count: Some(3),
            community_count: 1,
            spec: MembershipSpec::Chain {
                community_size: 5,
                overlap: 0,
            },
            seed: 0,
        };
        assert!(cfg.build().is_err());
    }

    #[test]
    fn jag_sampler_alpha_zero_gives_empty_graph() {
        let a = planted_chain(2, 10, 3).unwrap();
        let params = ModelParams::new(0.0, 0.0).unwrap();
        let g = sample_jag_graph(&a, &params, 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn jag_sampler_isolated_community_alpha_one_is_complete() {
        let a = planted_chain(1, 12, 0).unwrap();
        let params = ModelParams::new(1.0, 0.0).unwrap();
        let g = sample_jag_graph(&a, &params, 1);
        assert_eq!(g.edge_count(), 12 * 11 / 2);
        g.check_consistency().unwrap();
    }

    #[test]
    fn jag_sampler_is_seed_deterministic() {
        let a = planted_chain(3, 15, 4).unwrap();
        let params = ModelParams::new(0.6, 1e-8).unwrap();
        assert_eq!(sample_jag_graph(&a, &params, 9), sample_jag_graph(&a, &params, 9));
        assert_ne!(
            sample_jag_graph(&a, &params, 9).edges(),
            sample_jag_graph(&a, &params, 10).edges()
        );
    }

    #[test]
    fn jag_sampler_stratum_rates_track_alpha_times_jaccard() {
        // Two half-overlapping communities of 200: strata at J = 1, 1/2, 0.
        let a = planted_chain(2, 200, 100).unwrap();
        let params = ModelParams::new(0.5, 0.0).unwrap();
        let g = sample_jag_graph(&a, &params, 123);
        // Stratum: plain members of community 0 (nodes 0..100) against the
        // shared block (nodes 100..200): J = 1/2, 100 * 100 pairs.
        let mut edges = 0u64;
        for u in 0..100u32 {
            for v in 100..200u32 {
                if g.has_edge(NodeId(u), NodeId(v)) {
                    edges += 1;
                }
            }
        }
        let count = 100.0 * 100.0;
        let p = 0.25;
        let freq = edges as f64 / count;
        let sigma = (p * (1.0 - p) / count).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * sigma,
            "stratum rate {freq} outside 3 sigma of {p}"
        );
    }

    #[test]
    fn agm_sampler_degenerate_probs() {
        let a = planted_chain(2, 8, 2).unwrap();
        let empty = sample_agm_graph(&a, &AgmParams::uniform(2, 0.0).unwrap(), 0.0, 3).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let full = sample_agm_graph(&a, &AgmParams::uniform(2, 1.0).unwrap(), 0.0, 3).unwrap();
        // Every pair sharing at least one community is an edge.
        for &(u, v) in &a.co_membership_pairs() {
            assert!(full.has_edge(u, v));
        }
        assert_eq!(full.edge_count(), a.co_membership_pairs().len());
    }

    #[test]
    fn event_process_single_shared_community_coattends_every_round() {
        let a = affiliation_from_sets(&[&[0], &[0]], 1);
        let cfg = ProcessConfig::new(500, 0.01, 7).unwrap();
        let (_, counts) = simulate_event_process::<f64>(&a, &cfg).unwrap();
        assert_eq!(counts.get(NodeId(0), NodeId(1)), 500);
    }

    #[test]
    fn event_process_single_round_full_meet_prob() {
        let a = affiliation_from_sets(&[&[0, 1], &[0, 2], &[3]], 4);
        let cfg = ProcessConfig::new(1, 1.0, 11).unwrap();
        let (g, counts) = simulate_event_process::<f64>(&a, &cfg).unwrap();
        for u in 0..3u32 {
            for v in (u + 1)..3u32 {
                let coattended = counts.get(NodeId(u), NodeId(v)) > 0;
                assert_eq!(g.has_edge(NodeId(u), NodeId(v)), coattended);
            }
        }
    }

    #[test]
    fn event_process_unaffiliated_nodes_stay_isolated() {
        let a = affiliation_from_sets(&[&[0], &[0], &[]], 1);
        let cfg = ProcessConfig::new(200, 1.0, 5).unwrap();
        let (g, counts) = simulate_event_process::<f64>(&a, &cfg).unwrap();
        assert_eq!(g.degree(NodeId(2)), 0);
        assert_eq!(counts.get(NodeId(0), NodeId(2)), 0);
    }

    #[test]
    fn exact_oracle_motivating_example() {
        // S_u = {0, 5}, S_v = {0, 6} in a 7-community universe: J = 1/3.
        let a = affiliation_from_sets(&[&[0, 5], &[0, 6]], 7);
        let p = coattendance_prob_exact(&a, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(p, Ratio::new(1, 3));
        let restricted = coattendance_prob_exact_restricted(&a, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(restricted, Ratio::new(1, 3));
    }

    #[test]
    fn exact_oracle_identical_and_disjoint_sets() {
        let a = affiliation_from_sets(&[&[1, 2], &[1, 2], &[0, 3]], 5);
        assert_eq!(
            coattendance_prob_exact(&a, NodeId(0), NodeId(1)).unwrap(),
            Ratio::from_integer(1)
        );
        assert_eq!(
            coattendance_prob_exact(&a, NodeId(0), NodeId(2)).unwrap(),
            Ratio::from_integer(0)
        );
    }

    #[test]
    fn exact_oracle_rejects_large_universes() {
        let a = Affiliation::new(2, 11);
        assert!(matches!(
            coattendance_prob_exact(&a, NodeId(0), NodeId(1)),
            Err(Error::EnumerationTooLarge { count: 11, max: 10 })
        ));
    }

    #[test]
    fn restricted_oracle_handles_large_universes_with_small_unions() {
        // 40 communities in the universe, but the pair only touches three.
        let mut a = Affiliation::new(2, 40);
        a.add_membership(NodeId(0), CommunityId(2)).unwrap();
        a.add_membership(NodeId(0), CommunityId(37)).unwrap();
        a.add_membership(NodeId(1), CommunityId(2)).unwrap();
        a.add_membership(NodeId(1), CommunityId(39)).unwrap();
        let p = coattendance_prob_exact_restricted(&a, NodeId(0), NodeId(1)).unwrap();
        assert_eq!(p, Ratio::new(1, 3));

        // A union larger than the cap is rejected even when the global
        // enumeration would be impossible anyway.
        let mut b = Affiliation::new(2, 40);
        for c in 0..11 {
            b.add_membership(NodeId(0), CommunityId(c)).unwrap();
        }
        assert!(matches!(
            coattendance_prob_exact_restricted(&b, NodeId(0), NodeId(1)),
            Err(Error::EnumerationTooLarge { count: 11, max: 10 })
        ));
    }

    #[test]
    fn event_edge_prob_first_order_bound() {
        // |exact - c*T*J| <= (c*T*J)^2 / 2 in the small-product regime.
        for &(meet_prob, j, rounds) in &[
            (0.001, 0.5, 100u64),
            (0.0001, 1.0 / 3.0, 300),
            (0.01, 0.1, 50),
        ] {
            let exact: f64 = event_process_edge_prob(meet_prob, j, rounds);
            let linear = meet_prob * rounds as f64 * j;
            assert!(
                (exact - linear).abs() <= linear * linear / 2.0,
                "exact {exact} vs linear {linear}"
            );
        }
    }
}
