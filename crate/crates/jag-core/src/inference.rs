//! MCMC community detection: stochastic local search over membership moves,
//! accepted by likelihood ratio, with periodic refits of the global slope and
//! independent restarts.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affiliation::{Affiliation, CommunityId};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::models::{fit_alpha, log_likelihood_delta, GridSpec, ModelParams};
use crate::real::Real;

/// One mutation of the node/community membership matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipMove {
    /// Remove an existing membership.
    Delete { node: NodeId, community: CommunityId },
    /// Insert a membership that does not exist yet.
    Add { node: NodeId, community: CommunityId },
    /// Atomically move one membership of a node to a community it is not in.
    Switch {
        node: NodeId,
        from: CommunityId,
        to: CommunityId,
    },
}

/// Move discriminant, used in traces and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Delete,
    Add,
    Switch,
}

impl MembershipMove {
    pub fn delete(node: NodeId, community: CommunityId) -> Self {
        MembershipMove::Delete { node, community }
    }

    pub fn add(node: NodeId, community: CommunityId) -> Self {
        MembershipMove::Add { node, community }
    }

    pub fn switch(node: NodeId, from: CommunityId, to: CommunityId) -> Self {
        MembershipMove::Switch { node, from, to }
    }

    pub fn kind(&self) -> MoveKind {
        match self {
            MembershipMove::Delete { .. } => MoveKind::Delete,
            MembershipMove::Add { .. } => MoveKind::Add,
            MembershipMove::Switch { .. } => MoveKind::Switch,
        }
    }

    pub fn node(&self) -> NodeId {
        match *self {
            MembershipMove::Delete { node, .. }
            | MembershipMove::Add { node, .. }
            | MembershipMove::Switch { node, .. } => node,
        }
    }

    /// Checks the move against the current assignment: deletes must target an
    /// existing membership, adds a missing one, and switches one of each for
    /// the same node.
    pub fn validate(&self, a: &Affiliation) -> Result<()> {
        match *self {
            MembershipMove::Delete { node, community } => {
                a.validate_node(node)?;
                a.validate_community(community)?;
                if !a.has_membership(node, community) {
                    return Err(Error::InvalidMove(format!(
                        "delete of absent membership ({node}, {community})"
                    )));
                }
            }
            MembershipMove::Add { node, community } => {
                a.validate_node(node)?;
                a.validate_community(community)?;
                if a.has_membership(node, community) {
                    return Err(Error::InvalidMove(format!(
                        "add of existing membership ({node}, {community})"
                    )));
                }
            }
            MembershipMove::Switch { node, from, to } => {
                a.validate_node(node)?;
                a.validate_community(from)?;
                a.validate_community(to)?;
                if !a.has_membership(node, from) {
                    return Err(Error::InvalidMove(format!(
                        "switch from absent membership ({node}, {from})"
                    )));
                }
                if a.has_membership(node, to) {
                    return Err(Error::InvalidMove(format!(
                        "switch into existing membership ({node}, {to})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies the move in place. The move must be valid.
    pub fn apply(&self, a: &mut Affiliation) -> Result<()> {
        self.validate(a)?;
        match *self {
            MembershipMove::Delete { node, community } => {
                a.remove_membership(node, community)?;
            }
            MembershipMove::Add { node, community } => {
                a.add_membership(node, community)?;
            }
            MembershipMove::Switch { node, from, to } => {
                a.remove_membership(node, from)?;
                a.add_membership(node, to)?;
            }
        }
        Ok(())
    }

    /// The moved node's community set after the move, as a fresh sorted
    /// vector. `before` must be the node's current sorted community set.
    pub(crate) fn apply_to_set(&self, before: &[CommunityId]) -> Vec<CommunityId> {
        let mut after: Vec<CommunityId> = before.to_vec();
        match *self {
            MembershipMove::Delete { community, .. } => {
                if let Ok(pos) = after.binary_search(&community) {
                    after.remove(pos);
                }
            }
            MembershipMove::Add { community, .. } => {
                if let Err(pos) = after.binary_search(&community) {
                    after.insert(pos, community);
                }
            }
            MembershipMove::Switch { from, to, .. } => {
                if let Ok(pos) = after.binary_search(&from) {
                    after.remove(pos);
                }
                if let Err(pos) = after.binary_search(&to) {
                    after.insert(pos, to);
                }
            }
        }
        after
    }

    /// Community gained by the move, if any.
    pub(crate) fn added_community(&self) -> Option<CommunityId> {
        match *self {
            MembershipMove::Delete { .. } => None,
            MembershipMove::Add { community, .. } => Some(community),
            MembershipMove::Switch { to, .. } => Some(to),
        }
    }
}

/// Configuration of the detection search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig<F> {
    /// Number of communities the assignment may use (a model input).
    pub community_count: usize,
    /// Hard cap on proposal steps per chain.
    pub max_iters: u64,
    /// Stop a chain after this many steps without improving its best
    /// likelihood.
    pub patience: u64,
    /// Independent restarts; the best chain wins.
    pub restarts: usize,
    /// Proposals drawn per step; the one with the largest likelihood change
    /// is the step's candidate. 1 reproduces plain single-proposal search.
    pub batch: usize,
    /// Refit the slope after this many accepted moves. 1 refits after every
    /// accepted move.
    pub alpha_refit_interval: u64,
    /// Grid used for the slope refits and the final fit.
    pub grid: GridSpec<F>,
    /// Probability that each (node, community) membership is switched on in
    /// the initial random assignment.
    pub init_membership_prob: F,
    /// Background edge probability used throughout the likelihood.
    pub epsilon: F,
    pub seed: u64,
}

impl<F: Real> McmcConfig<F> {
    pub fn new(community_count: usize) -> Self {
        McmcConfig {
            community_count,
            max_iters: 100_000,
            patience: 2_000,
            restarts: 5,
            batch: 1,
            alpha_refit_interval: 50,
            grid: GridSpec::default(),
            init_membership_prob: F::from_f64_lossy(0.1),
            epsilon: F::from_f64_lossy(ModelParams::<F>::DEFAULT_EPSILON),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.community_count == 0 {
            return Err(Error::InvalidArgument("community count must be >= 1".into()));
        }
        if self.max_iters == 0 || self.patience == 0 || self.restarts == 0 || self.batch == 0 {
            return Err(Error::InvalidArgument(
                "max_iters, patience, restarts, and batch must be positive".into(),
            ));
        }
        if self.alpha_refit_interval == 0 {
            return Err(Error::InvalidArgument(
                "alpha refit interval must be positive".into(),
            ));
        }
        if !(self.init_membership_prob > F::zero() && self.init_membership_prob < F::one()) {
            return Err(Error::InvalidArgument(
                "init membership probability must lie in (0, 1)".into(),
            ));
        }
        ModelParams::new(F::zero(), self.epsilon)?;
        Ok(())
    }
}

/// One step of a chain's trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry<F> {
    /// Chain log-likelihood after this step.
    pub log_likelihood: F,
    pub accepted: bool,
    pub kind: MoveKind,
}

/// Outcome of a detection run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult<F> {
    pub best_affiliation: Affiliation,
    /// Slope from the final full grid fit on the best assignment.
    pub alpha_hat: F,
    /// `max_alpha` log-likelihood of the best assignment, recomputed from
    /// scratch.
    pub best_log_likelihood: F,
    /// Trace of the winning chain.
    pub trace: Vec<TraceEntry<F>>,
    /// Restart that produced the winner.
    pub restart_index: usize,
    pub accepted_moves: u64,
    pub total_steps: u64,
}

impl<F: Real> DetectionResult<F> {
    pub fn acceptance_rate(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            self.accepted_moves as f64 / self.total_steps as f64
        }
    }
}

/// Random initial assignment: each (node, community) membership is set
/// independently with `init_membership_prob`; any node left with an empty
/// community set is repaired with one uniformly random membership, so every
/// node starts somewhere.
pub fn random_initial_assignment<F: Real, R: Rng>(
    node_count: usize,
    cfg: &McmcConfig<F>,
    rng: &mut R,
) -> Affiliation {
    let c = cfg.community_count;
    let p = cfg.init_membership_prob.to_f64().expect("prob fits in f64");
    let mut a = Affiliation::new(node_count, c);
    for u in 0..node_count {
        for k in 0..c {
            if rng.random::<f64>() < p {
                a.add_membership(NodeId(u as u32), CommunityId(k as u32))
                    .expect("indices in range");
            }
        }
        if a.membership_count(NodeId(u as u32)) == 0 {
            let k = rng.random_range(0..c);
            a.add_membership(NodeId(u as u32), CommunityId(k as u32))
                .expect("indices in range");
        }
    }
    a
}

/// Draws one membership move. The operation kind is uniform over delete, add,
/// and switch, redrawing when the drawn kind has no legal move; within a
/// kind, delete is uniform over present pairs, add over absent pairs, and
/// switch picks an eligible node then one current and one non-current
/// community uniformly.
pub fn propose_move<R: Rng>(a: &Affiliation, rng: &mut R) -> Result<MembershipMove> {
    let n = a.node_count();
    let c = a.community_count();
    let total = a.total_memberships();
    let full = n * c;

    let delete_ok = total > 0;
    let add_ok = total < full;
    let switch_ok = a.partial_node_count() > 0;
    if !delete_ok && !add_ok && !switch_ok {
        return Err(Error::ProposalExhausted);
    }

    loop {
        match rng.random_range(0..3u32) {
            0 if delete_ok => return Ok(sample_delete(a, rng)),
            1 if add_ok => return Ok(sample_add(a, rng)),
            2 if switch_ok => return Ok(sample_switch(a, rng)),
            _ => continue,
        }
    }
}

/// Uniform over present (node, community) pairs.
fn sample_delete<R: Rng>(a: &Affiliation, rng: &mut R) -> MembershipMove {
    let mut t = rng.random_range(0..a.total_memberships());
    for u in 0..a.node_count() {
        let node = NodeId(u as u32);
        let len = a.membership_count(node);
        if t < len {
            let community = a.community_set(node).expect("node in range")[t];
            return MembershipMove::delete(node, community);
        }
        t -= len;
    }
    unreachable!("membership counter matches views");
}

/// Uniform over absent (node, community) pairs.
fn sample_add<R: Rng>(a: &Affiliation, rng: &mut R) -> MembershipMove {
    let c = a.community_count();
    let absent_total = a.node_count() * c - a.total_memberships();
    let mut t = rng.random_range(0..absent_total);
    for u in 0..a.node_count() {
        let node = NodeId(u as u32);
        let absent = c - a.membership_count(node);
        if t < absent {
            let community = nth_absent_community(a, node, t);
            return MembershipMove::add(node, community);
        }
        t -= absent;
    }
    unreachable!("membership counter matches views");
}

/// The `k`-th community (by id) that `node` is not a member of.
fn nth_absent_community(a: &Affiliation, node: NodeId, k: usize) -> CommunityId {
    let current = a.community_set(node).expect("node in range");
    let mut skipped = 0;
    let mut cursor = 0;
    for id in 0..a.community_count() as u32 {
        if cursor < current.len() && current[cursor].0 == id {
            cursor += 1;
            continue;
        }
        if skipped == k {
            return CommunityId(id);
        }
        skipped += 1;
    }
    unreachable!("k below the number of absent communities");
}

/// Node uniform among nodes with a legal switch, then uniform current and
/// non-current communities.
fn sample_switch<R: Rng>(a: &Affiliation, rng: &mut R) -> MembershipMove {
    let n = a.node_count();
    let c = a.community_count();
    let eligible = |node: NodeId| {
        let len = a.membership_count(node);
        len > 0 && len < c
    };

    let mut node = None;
    for _ in 0..1024 {
        let candidate = NodeId(rng.random_range(0..n) as u32);
        if eligible(candidate) {
            node = Some(candidate);
            break;
        }
    }
    let node = node.unwrap_or_else(|| {
        // Rare: few eligible nodes. Fall back to an explicit index.
        let all: Vec<NodeId> = (0..n as u32).map(NodeId).filter(|&v| eligible(v)).collect();
        all[rng.random_range(0..all.len())]
    });

    let current = a.community_set(node).expect("node in range");
    let from = current[rng.random_range(0..current.len())];
    let to = nth_absent_community(a, node, rng.random_range(0..c - current.len()));
    MembershipMove::switch(node, from, to)
}

/// Metropolis acceptance on a log-likelihood change: always accept
/// improvements, otherwise accept with probability `exp(delta)`.
pub fn metropolis_accept<F: Real, R: Rng>(delta: F, rng: &mut R) -> bool {
    if delta > F::zero() {
        return true;
    }
    let u = F::from_f64_lossy(rng.random::<f64>());
    u < delta.exp()
}

/// Outcome of one [`McmcChain::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome<F> {
    pub accepted: bool,
    pub delta: F,
    pub kind: MoveKind,
}

/// A single search chain owning its assignment exclusively.
pub struct McmcChain<'g, F: Real> {
    graph: &'g Graph,
    cfg: McmcConfig<F>,
    affiliation: Affiliation,
    params: ModelParams<F>,
    log_likelihood: F,
    rng: ChaCha8Rng,
    accepted_moves: u64,
    total_steps: u64,
    accepted_since_refit: u64,
}

impl<'g, F: Real> McmcChain<'g, F> {
    /// Fresh chain with a random initial assignment. `restart_index` selects
    /// an independent RNG stream of the configured seed.
    pub fn new(graph: &'g Graph, cfg: &McmcConfig<F>, restart_index: usize) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart_index as u64);
        let affiliation = random_initial_assignment(graph.node_count(), cfg, &mut rng);
        Self::with_state(graph, cfg, affiliation, rng)
    }

    /// Chain starting from a caller-supplied assignment.
    pub fn from_affiliation(
        graph: &'g Graph,
        cfg: &McmcConfig<F>,
        affiliation: Affiliation,
        restart_index: usize,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart_index as u64);
        Self::with_state(graph, cfg, affiliation, rng)
    }

    fn with_state(
        graph: &'g Graph,
        cfg: &McmcConfig<F>,
        affiliation: Affiliation,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if affiliation.node_count() != graph.node_count() {
            return Err(Error::SizeMismatch(format!(
                "graph has {} nodes, assignment has {}",
                graph.node_count(),
                affiliation.node_count()
            )));
        }
        let (alpha, ll) = fit_alpha(graph, &affiliation, &cfg.grid, cfg.epsilon)?;
        Ok(McmcChain {
            graph,
            cfg: cfg.clone(),
            params: ModelParams::new(alpha, cfg.epsilon)?,
            log_likelihood: ll,
            affiliation,
            rng,
            accepted_moves: 0,
            total_steps: 0,
            accepted_since_refit: 0,
        })
    }

    /// One search step: draw a batch of proposals, keep the one with the best
    /// likelihood change, Metropolis-accept it, apply on acceptance, and
    /// refit the slope every `alpha_refit_interval` accepted moves.
    pub fn step(&mut self) -> Result<StepOutcome<F>> {
        let mut chosen: Option<(MembershipMove, F)> = None;
        for _ in 0..self.cfg.batch {
            let mv = propose_move(&self.affiliation, &mut self.rng)?;
            let delta = log_likelihood_delta(self.graph, &self.affiliation, &self.params, &mv)?;
            if chosen.as_ref().is_none_or(|(_, best)| delta > *best) {
                chosen = Some((mv, delta));
            }
        }
        let (mv, delta) = chosen.expect("batch size is positive");
        let kind = mv.kind();
        let accepted = metropolis_accept(delta, &mut self.rng);
        self.total_steps += 1;
        if accepted {
            mv.apply(&mut self.affiliation)?;
            self.log_likelihood = self.log_likelihood + delta;
            self.accepted_moves += 1;
            self.accepted_since_refit += 1;
            if self.accepted_since_refit >= self.cfg.alpha_refit_interval {
                self.refit_alpha()?;
            }
        }
        Ok(StepOutcome {
            accepted,
            delta,
            kind,
        })
    }

    /// Full grid refit of the slope on the current assignment. Resets the
    /// running log-likelihood from scratch, so incremental drift cannot
    /// accumulate past a refit.
    pub fn refit_alpha(&mut self) -> Result<()> {
        let (alpha, ll) = fit_alpha(self.graph, &self.affiliation, &self.cfg.grid, self.cfg.epsilon)?;
        self.params = ModelParams::new(alpha, self.cfg.epsilon)?;
        self.log_likelihood = ll;
        self.accepted_since_refit = 0;
        Ok(())
    }

    pub fn affiliation(&self) -> &Affiliation {
        &self.affiliation
    }

    pub fn params(&self) -> &ModelParams<F> {
        &self.params
    }

    /// Running log-likelihood under the current slope, maintained
    /// incrementally between refits.
    pub fn log_likelihood(&self) -> F {
        self.log_likelihood
    }

    pub fn accepted_moves(&self) -> u64 {
        self.accepted_moves
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }
}

struct ChainOutcome<F> {
    best_affiliation: Affiliation,
    alpha_hat: F,
    best_log_likelihood: F,
    trace: Vec<TraceEntry<F>>,
    restart_index: usize,
    accepted_moves: u64,
    total_steps: u64,
}

fn run_chain<F: Real>(g: &Graph, cfg: &McmcConfig<F>, restart_index: usize) -> Result<ChainOutcome<F>> {
    let mut chain = McmcChain::new(g, cfg, restart_index)?;
    let mut best_affiliation = chain.affiliation().clone();
    let mut best_ll = chain.log_likelihood();
    let mut trace = Vec::new();
    let mut stagnant: u64 = 0;

    for _ in 0..cfg.max_iters {
        let outcome = chain.step()?;
        trace.push(TraceEntry {
            log_likelihood: chain.log_likelihood(),
            accepted: outcome.accepted,
            kind: outcome.kind,
        });
        if chain.log_likelihood() > best_ll {
            best_ll = chain.log_likelihood();
            best_affiliation = chain.affiliation().clone();
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= cfg.patience {
                break;
            }
        }
    }

    let (alpha_hat, best_log_likelihood) = fit_alpha(g, &best_affiliation, &cfg.grid, cfg.epsilon)?;
    Ok(ChainOutcome {
        best_affiliation,
        alpha_hat,
        best_log_likelihood,
        trace,
        restart_index,
        accepted_moves: chain.accepted_moves(),
        total_steps: chain.total_steps(),
    })
}

/// Runs `restarts` independent chains from distinct random initializations
/// and returns the assignment with the highest `max_alpha` likelihood. Ties
/// go to the lowest restart index. Chains execute in parallel; each derives
/// its own RNG stream from (seed, restart index), so results do not depend on
/// scheduling.
pub fn detect_communities<F: Real>(g: &Graph, cfg: &McmcConfig<F>) -> Result<DetectionResult<F>> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(Error::InvalidArgument("graph has no nodes".into()));
    }

    let outcomes: Vec<ChainOutcome<F>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_chain(g, cfg, r))
        .collect::<Result<_>>()?;

    let mut winner: Option<ChainOutcome<F>> = None;
    let mut accepted_moves = 0;
    let mut total_steps = 0;
    for outcome in outcomes {
        accepted_moves += outcome.accepted_moves;
        total_steps += outcome.total_steps;
        let better = winner
            .as_ref()
            .is_none_or(|w| outcome.best_log_likelihood > w.best_log_likelihood);
        if better {
            winner = Some(outcome);
        }
    }
    let winner = winner.expect("at least one restart");
    Ok(DetectionResult {
        best_affiliation: winner.best_affiliation,
        alpha_hat: winner.alpha_hat,
        best_log_likelihood: winner.best_log_likelihood,
        trace: winner.trace,
        restart_index: winner.restart_index,
        accepted_moves,
        total_steps,
    })
}
