//! Fixture builders and independent reference computations for the test
//! suites. Everything here deliberately avoids the optimized code paths it is
//! used to check.

use rand::Rng;

use crate::affiliation::{Affiliation, CommunityId};
use crate::graph::{Graph, NodeId};
use crate::models::{jag_edge_prob, ModelParams};
use crate::real::Real;

/// Affiliation from per-node community-id lists.
pub fn affiliation_from_sets(sets: &[&[u32]], community_count: usize) -> Affiliation {
    let mut a = Affiliation::new(sets.len(), community_count);
    for (u, comms) in sets.iter().enumerate() {
        for &c in *comms {
            a.add_membership(NodeId(u as u32), CommunityId(c))
                .expect("fixture indices in range");
        }
    }
    a
}

/// Independent Bernoulli membership matrix; nodes may end up unaffiliated.
pub fn random_affiliation<R: Rng>(
    node_count: usize,
    community_count: usize,
    membership_prob: f64,
    rng: &mut R,
) -> Affiliation {
    let mut a = Affiliation::new(node_count, community_count);
    for u in 0..node_count {
        for c in 0..community_count {
            if rng.random::<f64>() < membership_prob {
                a.add_membership(NodeId(u as u32), CommunityId(c as u32))
                    .expect("fixture indices in range");
            }
        }
    }
    a
}

/// Erdős–Rényi graph, each unordered pair an edge with probability `p`.
pub fn random_graph<R: Rng>(node_count: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..node_count as u32 {
        for v in (u + 1)..node_count as u32 {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(node_count, edges).expect("fixture edges in range")
}

/// Reference log-likelihood: the plain O(n^2) double loop over all unordered
/// pairs, with no co-membership shortcuts.
pub fn log_likelihood_naive<F: Real>(g: &Graph, a: &Affiliation, params: &ModelParams<F>) -> F {
    let mut ll = F::zero();
    for u in 0..g.node_count() as u32 {
        for v in (u + 1)..g.node_count() as u32 {
            let p = jag_edge_prob(a, params, NodeId(u), NodeId(v)).expect("nodes in range");
            ll = ll + if g.has_edge(NodeId(u), NodeId(v)) {
                p.ln()
            } else {
                (-p).ln_1p()
            };
        }
    }
    ll
}

/// Relative closeness with an absolute floor of 1:
/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true; // covers equal infinities
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
