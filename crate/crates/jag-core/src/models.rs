//! Edge-probability models and the assignment log-likelihood.
//!
//! Two models share the affiliation structure. The single-parameter model
//! sets `p(u,v) = alpha * J(S_u, S_v)`; the per-community model sets
//! `p(u,v) = 1 - prod_{k in C_uv} (1 - p_k)`. Both are composed with a small
//! background probability `epsilon` by noisy-OR so that observed edges
//! between unrelated nodes keep the likelihood finite:
//! `p = 1 - (1 - p_model)(1 - epsilon)`. With `epsilon = 0` the pure models
//! are recovered exactly.

use serde::{Deserialize, Serialize};

use crate::affiliation::{jaccard_of_sets, Affiliation, CommunityId};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::inference::MembershipMove;
use crate::real::Real;

/// Global parameters of the Jaccard-scaled model: the slope `alpha` and the
/// background edge probability `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<F> {
    pub alpha: F,
    pub epsilon: F,
}

impl<F: Real> ModelParams<F> {
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    /// Validates `0 <= alpha <= 1` and `0 <= epsilon < 1`. `epsilon = 0` is
    /// allowed and reproduces the pure model, at the cost of `-inf`
    /// log-likelihoods when an observed edge has Jaccard similarity 0.
    pub fn new(alpha: F, epsilon: F) -> Result<Self> {
        if !(alpha >= F::zero() && alpha <= F::one()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !(epsilon >= F::zero() && epsilon < F::one()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(ModelParams { alpha, epsilon })
    }

    /// `alpha` with the default background probability `1e-8`.
    pub fn with_default_epsilon(alpha: F) -> Result<Self> {
        Self::new(alpha, F::from_f64_lossy(Self::DEFAULT_EPSILON))
    }
}

/// Per-community edge probabilities `p_k` for the coin-flip model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgmParams<F> {
    probs: Vec<F>,
}

impl<F: Real> AgmParams<F> {
    /// One probability per community, each in `[0, 1]`.
    pub fn new(probs: Vec<F>) -> Result<Self> {
        for (k, &p) in probs.iter().enumerate() {
            if !(p >= F::zero() && p <= F::one()) {
                return Err(Error::InvalidArgument(format!(
                    "community probability p_{k} must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(AgmParams { probs })
    }

    /// The same probability for every one of `count` communities.
    pub fn uniform(count: usize, p: F) -> Result<Self> {
        Self::new(vec![p; count])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn prob(&self, k: CommunityId) -> F {
        self.probs[k.index()]
    }
}

/// Noisy-OR composition of a model probability with the background:
/// `1 - (1 - p)(1 - eps)`, computed as `eps + (1 - eps) * p` so that
/// `eps = 0` returns `p` without cancellation error.
#[inline]
pub fn compose_background<F: Real>(p_model: F, epsilon: F) -> F {
    epsilon + (F::one() - epsilon) * p_model
}

/// Edge probability under the Jaccard-scaled model:
/// `1 - (1 - alpha * J(S_u, S_v))(1 - eps)`.
pub fn jag_edge_prob<F: Real>(
    a: &Affiliation,
    params: &ModelParams<F>,
    u: NodeId,
    v: NodeId,
) -> Result<F> {
    let j: F = a.jaccard(u, v)?;
    Ok(compose_background(params.alpha * j, params.epsilon))
}

/// Edge probability under the per-community coin-flip model:
/// `1 - (1 - eps) * prod_{k in C_uv} (1 - p_k)`. Returns `eps` (0 when
/// `eps = 0`) for pairs sharing no community.
pub fn agm_edge_prob<F: Real>(
    a: &Affiliation,
    params: &AgmParams<F>,
    u: NodeId,
    v: NodeId,
    epsilon: F,
) -> Result<F> {
    if params.len() != a.community_count() {
        return Err(Error::SizeMismatch(format!(
            "{} community probabilities for {} communities",
            params.len(),
            a.community_count()
        )));
    }
    let shared = a.shared_communities(u, v)?;
    let miss_all = shared
        .iter()
        .fold(F::one(), |acc, &k| acc * (F::one() - params.prob(k)));
    Ok(F::one() - (F::one() - epsilon) * miss_all)
}

/// Log term contributed by one pair: `ln p` for an edge, `ln(1 - p)` for a
/// non-edge.
#[inline]
fn pair_log_term<F: Real>(is_edge: bool, p: F) -> F {
    if is_edge {
        p.ln()
    } else {
        (-p).ln_1p()
    }
}

fn check_sizes(g: &Graph, a: &Affiliation) -> Result<()> {
    if g.node_count() != a.node_count() {
        return Err(Error::SizeMismatch(format!(
            "graph has {} nodes, affiliation has {}",
            g.node_count(),
            a.node_count()
        )));
    }
    Ok(())
}

/// Log-likelihood of an assignment under the Jaccard-scaled model:
/// `sum_{(u,v) in E} ln p(u,v) + sum_{(u,v) not in E} ln(1 - p(u,v))` over
/// unordered pairs.
///
/// Only pairs sharing at least one community are enumerated explicitly; every
/// remaining pair has probability exactly `epsilon`, so non-edges among them
/// contribute a closed-form `count * ln(1 - eps)` and edges among them
/// contribute `ln eps` each. Cost is proportional to community mass plus the
/// edge count rather than `n^2`.
pub fn log_likelihood<F: Real>(g: &Graph, a: &Affiliation, params: &ModelParams<F>) -> Result<F> {
    check_sizes(g, a)?;
    let mut ll = F::zero();
    let pairs = a.co_membership_pairs();
    for &(u, v) in &pairs {
        let p = jag_edge_prob(a, params, u, v)?;
        ll = ll + pair_log_term(g.has_edge(u, v), p);
    }

    // Edges whose endpoints share no community: p = eps exactly.
    let mut zero_j_edges: u64 = 0;
    for &(u, v) in g.edges() {
        let (inter, _) = a.jaccard_counts(NodeId(u), NodeId(v))?;
        if inter == 0 {
            zero_j_edges += 1;
            ll = ll + params.epsilon.ln();
        }
    }

    // All remaining pairs are non-edges at probability eps.
    let remaining = g.pair_count() - pairs.len() as u64 - zero_j_edges;
    ll = ll + F::from_u64(remaining).expect("pair count fits in Real") * (-params.epsilon).ln_1p();
    Ok(ll)
}

/// Change in log-likelihood from applying one membership move, without
/// mutating the affiliation.
///
/// Only pairs `(u, w)` whose probability can change are re-evaluated: `w`
/// ranges over members of the communities in `S_u ∪ S_u'` plus the neighbors
/// of `u`. All other pair terms cancel, because their Jaccard similarity is
/// zero both before and after the move.
pub fn log_likelihood_delta<F: Real>(
    g: &Graph,
    a: &Affiliation,
    params: &ModelParams<F>,
    mv: &MembershipMove,
) -> Result<F> {
    check_sizes(g, a)?;
    mv.validate(a)?;

    let u = mv.node();
    let before = a.community_set(u)?;
    let after = mv.apply_to_set(before);

    // Candidate partners: members of every community the node touches before
    // or after, plus graph neighbors.
    let mut candidates: Vec<u32> = Vec::new();
    for &c in before.iter().chain(mv.added_community().iter()) {
        candidates.extend(a.members(c)?.iter().map(|n| n.0));
    }
    candidates.extend_from_slice(g.neighbors(u));
    candidates.sort_unstable();
    candidates.dedup();

    let mut delta = F::zero();
    for &w in &candidates {
        if w == u.0 {
            continue;
        }
        let s_w = a.community_set(NodeId(w))?;
        let j_before: F = jaccard_of_sets(before, s_w);
        let j_after: F = jaccard_of_sets(&after, s_w);
        if j_before == j_after {
            continue;
        }
        let is_edge = g.has_edge(u, NodeId(w));
        let p_before = compose_background(params.alpha * j_before, params.epsilon);
        let p_after = compose_background(params.alpha * j_after, params.epsilon);
        delta = delta + pair_log_term(is_edge, p_after) - pair_log_term(is_edge, p_before);
    }
    Ok(delta)
}

/// Grid over `[lo, hi]` for the single-parameter likelihood search, with an
/// optional second refinement pass around the coarse argmax.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<F> {
    pub lo: F,
    pub hi: F,
    pub step: F,
    pub refine_step: Option<F>,
}

impl<F: Real> GridSpec<F> {
    /// `[0, 1]` at the given step, no refinement.
    pub fn with_step(step: F) -> Self {
        GridSpec {
            lo: F::zero(),
            hi: F::one(),
            step,
            refine_step: None,
        }
    }

    /// Coarse pass at `step` followed by a local pass at `refine_step` in a
    /// one-coarse-step window around the coarse argmax.
    pub fn two_stage(step: F, refine_step: F) -> Self {
        GridSpec {
            refine_step: Some(refine_step),
            ..Self::with_step(step)
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: F| matches!(x.partial_cmp(&F::zero()), Some(std::cmp::Ordering::Greater));
        if !positive(self.step) || self.lo > self.hi {
            return Err(Error::EmptyGrid);
        }
        if let Some(r) = self.refine_step {
            if !positive(r) {
                return Err(Error::EmptyGrid);
            }
        }
        Ok(())
    }

    /// `lo, lo + step, ...` up to `hi` (inclusive when `step` divides the
    /// span, up to accumulated rounding).
    fn points(&self, lo: F, hi: F, step: F) -> Vec<F> {
        let tol = step * F::from_f64_lossy(1e-6);
        let mut pts = Vec::new();
        for i in 0.. {
            let x = lo + F::from_usize(i).expect("grid index fits in Real") * step;
            if x > hi + tol {
                break;
            }
            pts.push(x.min(hi));
        }
        pts
    }
}

impl<F: Real> Default for GridSpec<F> {
    fn default() -> Self {
        Self::with_step(F::from_f64_lossy(0.01))
    }
}

/// Per-assignment sufficient statistics for the likelihood as a function of
/// `alpha`: pair counts grouped by exact Jaccard value. Grid evaluation is
/// then O(distinct Jaccard values) per point instead of O(pairs).
struct JaccardHistogram {
    // (intersection, union) -> (edge pairs, non-edge pairs)
    groups: Vec<((u32, u32), (u64, u64))>,
    zero_j_edges: u64,
    zero_j_nonedges: u64,
}

impl JaccardHistogram {
    fn build(g: &Graph, a: &Affiliation) -> Result<Self> {
        use std::collections::BTreeMap;
        let mut map: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
        let pairs = a.co_membership_pairs();
        for &(u, v) in &pairs {
            let (inter, union) = a.jaccard_counts(u, v)?;
            let entry = map.entry((inter as u32, union as u32)).or_default();
            if g.has_edge(u, v) {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        let mut zero_j_edges = 0;
        for &(u, v) in g.edges() {
            let (inter, _) = a.jaccard_counts(NodeId(u), NodeId(v))?;
            if inter == 0 {
                zero_j_edges += 1;
            }
        }
        let zero_j_nonedges = g.pair_count() - pairs.len() as u64 - zero_j_edges;
        Ok(JaccardHistogram {
            groups: map.into_iter().collect(),
            zero_j_edges,
            zero_j_nonedges,
        })
    }

    fn log_likelihood<F: Real>(&self, alpha: F, epsilon: F) -> F {
        let mut ll = F::zero();
        for &((inter, union), (edges, nonedges)) in &self.groups {
            let j = F::ratio_of(inter as usize, union as usize);
            let p = compose_background(alpha * j, epsilon);
            if edges > 0 {
                ll = ll + F::from_u64(edges).unwrap() * p.ln();
            }
            if nonedges > 0 {
                ll = ll + F::from_u64(nonedges).unwrap() * (-p).ln_1p();
            }
        }
        if self.zero_j_edges > 0 {
            ll = ll + F::from_u64(self.zero_j_edges).unwrap() * epsilon.ln();
        }
        ll + F::from_u64(self.zero_j_nonedges).unwrap() * (-epsilon).ln_1p()
    }
}

/// Grid search for the `alpha` maximizing the assignment likelihood. Returns
/// the argmax and the log-likelihood achieved there (recomputed through the
/// standard path). Ties break toward smaller `alpha`.
pub fn fit_alpha<F: Real>(
    g: &Graph,
    a: &Affiliation,
    grid: &GridSpec<F>,
    epsilon: F,
) -> Result<(F, F)> {
    check_sizes(g, a)?;
    grid.validate()?;
    let hist = JaccardHistogram::build(g, a)?;

    let scan = |lo: F, hi: F, step: F| -> Result<(F, F)> {
        let points = grid.points(lo, hi, step);
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut best = (points[0], hist.log_likelihood(points[0], epsilon));
        for &alpha in &points[1..] {
            let ll = hist.log_likelihood(alpha, epsilon);
            if ll > best.1 {
                best = (alpha, ll);
            }
        }
        Ok(best)
    };

    let (mut alpha_hat, _) = scan(grid.lo, grid.hi, grid.step)?;
    if let Some(refine) = grid.refine_step {
        let lo = (alpha_hat - grid.step).max(grid.lo);
        let hi = (alpha_hat + grid.step).min(grid.hi);
        alpha_hat = scan(lo, hi, refine)?.0;
    }
    let ll = log_likelihood(g, a, &ModelParams::new(alpha_hat, epsilon)?)?;
    Ok((alpha_hat, ll))
}
