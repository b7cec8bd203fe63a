//! Node-to-community affiliation structure and Jaccard similarity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::metrics::Cover;
use crate::real::Real;

/// Dense community index, `0 <= id < community_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommunityId(pub u32);

impl CommunityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bipartite node/community membership with two mutually consistent indexed
/// views: the community set of each node and the member set of each
/// community. Both views are kept as sorted vectors; community sets are
/// expected to stay small, so sorted-merge intersection beats hashing on the
/// likelihood hot path.
///
/// Empty community sets and empty communities are both permitted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affiliation {
    node_count: usize,
    community_count: usize,
    node_to_comms: Vec<Vec<CommunityId>>,
    comm_to_nodes: Vec<Vec<NodeId>>,
    total_memberships: usize,
    // Nodes with 0 < |S_u| < community_count; lets move proposal check
    // switch legality in O(1).
    partial_nodes: usize,
}

impl Affiliation {
    /// All-empty affiliation over the given node and community universes.
    pub fn new(node_count: usize, community_count: usize) -> Self {
        Affiliation {
            node_count,
            community_count,
            node_to_comms: vec![Vec::new(); node_count],
            comm_to_nodes: vec![Vec::new(); community_count],
            total_memberships: 0,
            partial_nodes: 0,
        }
    }

    /// Builds an affiliation from explicit per-node membership lists.
    pub fn from_memberships(
        node_count: usize,
        community_count: usize,
        memberships: &[(NodeId, CommunityId)],
    ) -> Result<Self> {
        let mut a = Affiliation::new(node_count, community_count);
        for &(u, c) in memberships {
            a.add_membership(u, c)?;
        }
        Ok(a)
    }

    /// Builds an affiliation from a cover: community `k` of the cover becomes
    /// community id `k`, and every member node gains that membership.
    pub fn from_cover(node_count: usize, cover: &Cover) -> Result<Self> {
        let mut a = Affiliation::new(node_count, cover.len());
        for (k, members) in cover.communities().iter().enumerate() {
            for &u in members {
                a.add_membership(NodeId(u), CommunityId(k as u32))?;
            }
        }
        Ok(a)
    }

    /// Exports communities as a cover, dropping empty communities.
    pub fn to_cover(&self) -> Cover {
        let sets: Vec<Vec<u32>> = self
            .comm_to_nodes
            .iter()
            .filter(|members| !members.is_empty())
            .map(|members| members.iter().map(|n| n.0).collect())
            .collect();
        Cover::new(sets).expect("non-empty member lists form a valid cover")
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn community_count(&self) -> usize {
        self.community_count
    }

    /// Total number of (node, community) membership pairs.
    #[inline]
    pub fn total_memberships(&self) -> usize {
        self.total_memberships
    }

    /// Number of nodes whose community set is neither empty nor full.
    #[inline]
    pub fn partial_node_count(&self) -> usize {
        self.partial_nodes
    }

    pub fn validate_node(&self, u: NodeId) -> Result<()> {
        if u.index() >= self.node_count {
            return Err(Error::NodeOutOfRange {
                node: u.index(),
                node_count: self.node_count,
            });
        }
        Ok(())
    }

    pub fn validate_community(&self, c: CommunityId) -> Result<()> {
        if c.index() >= self.community_count {
            return Err(Error::CommunityOutOfRange {
                community: c.index(),
                community_count: self.community_count,
            });
        }
        Ok(())
    }

    /// The community set `S_u`: every community containing `u`, sorted.
    pub fn community_set(&self, u: NodeId) -> Result<&[CommunityId]> {
        self.validate_node(u)?;
        Ok(&self.node_to_comms[u.index()])
    }

    /// Sorted member list of community `c`.
    pub fn members(&self, c: CommunityId) -> Result<&[NodeId]> {
        self.validate_community(c)?;
        Ok(&self.comm_to_nodes[c.index()])
    }

    #[inline]
    pub fn membership_count(&self, u: NodeId) -> usize {
        self.node_to_comms[u.index()].len()
    }

    #[inline]
    pub fn has_membership(&self, u: NodeId, c: CommunityId) -> bool {
        self.node_to_comms[u.index()].binary_search(&c).is_ok()
    }

    /// Inserts membership `(u, c)`. Returns `false` if it was already present.
    pub fn add_membership(&mut self, u: NodeId, c: CommunityId) -> Result<bool> {
        self.validate_node(u)?;
        self.validate_community(c)?;
        let comms = &mut self.node_to_comms[u.index()];
        match comms.binary_search(&c) {
            Ok(_) => Ok(false),
            Err(pos) => {
                let was_partial = is_partial(comms.len(), self.community_count);
                comms.insert(pos, c);
                let now_partial = is_partial(comms.len(), self.community_count);
                self.update_partial(was_partial, now_partial);

                let members = &mut self.comm_to_nodes[c.index()];
                let pos = members.binary_search(&u).unwrap_err();
                members.insert(pos, u);
                self.total_memberships += 1;
                Ok(true)
            }
        }
    }

    /// Removes membership `(u, c)`. Returns `false` if it was not present.
    pub fn remove_membership(&mut self, u: NodeId, c: CommunityId) -> Result<bool> {
        self.validate_node(u)?;
        self.validate_community(c)?;
        let comms = &mut self.node_to_comms[u.index()];
        match comms.binary_search(&c) {
            Err(_) => Ok(false),
            Ok(pos) => {
                let was_partial = is_partial(comms.len(), self.community_count);
                comms.remove(pos);
                let now_partial = is_partial(comms.len(), self.community_count);
                self.update_partial(was_partial, now_partial);

                let members = &mut self.comm_to_nodes[c.index()];
                let pos = members.binary_search(&u).expect("dual view consistent");
                members.remove(pos);
                self.total_memberships -= 1;
                Ok(true)
            }
        }
    }

    fn update_partial(&mut self, was: bool, now: bool) {
        match (was, now) {
            (false, true) => self.partial_nodes += 1,
            (true, false) => self.partial_nodes -= 1,
            _ => {}
        }
    }

    /// `S_u ∩ S_v`, the communities common to both nodes.
    pub fn shared_communities(&self, u: NodeId, v: NodeId) -> Result<Vec<CommunityId>> {
        self.validate_node(u)?;
        self.validate_node(v)?;
        let a = &self.node_to_comms[u.index()];
        let b = &self.node_to_comms[v.index()];
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(out)
    }

    /// `(|S_u ∩ S_v|, |S_u ∪ S_v|)` as exact counts.
    #[inline]
    pub fn jaccard_counts(&self, u: NodeId, v: NodeId) -> Result<(usize, usize)> {
        self.validate_node(u)?;
        self.validate_node(v)?;
        Ok(jaccard_counts_of_sets(
            &self.node_to_comms[u.index()],
            &self.node_to_comms[v.index()],
        ))
    }

    /// Jaccard similarity `|S_u ∩ S_v| / |S_u ∪ S_v|`.
    ///
    /// Defined as 0 when both community sets are empty, so unaffiliated pairs
    /// are maximally unlikely to connect.
    #[inline]
    pub fn jaccard<F: Real>(&self, u: NodeId, v: NodeId) -> Result<F> {
        let (inter, union) = self.jaccard_counts(u, v)?;
        Ok(F::ratio_of(inter, union))
    }

    /// All unordered node pairs that share at least one community, sorted and
    /// deduplicated. The likelihood only has to visit these pairs explicitly;
    /// every other pair has Jaccard similarity 0.
    pub fn co_membership_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
        for members in &self.comm_to_nodes {
            for (i, &u) in members.iter().enumerate() {
                for &v in &members[i + 1..] {
                    pairs.push((u, v));
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Exhaustive dual-view consistency check: `c ∈ S_u` iff `u ∈ members(c)`,
    /// both views sorted, counters accurate.
    pub fn check_consistency(&self) -> Result<()> {
        let mut total = 0;
        let mut partial = 0;
        for (u, comms) in self.node_to_comms.iter().enumerate() {
            if comms.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::SizeMismatch(format!(
                    "community set of node {u} is not strictly sorted"
                )));
            }
            total += comms.len();
            if is_partial(comms.len(), self.community_count) {
                partial += 1;
            }
            for &c in comms {
                if self.comm_to_nodes[c.index()]
                    .binary_search(&NodeId(u as u32))
                    .is_err()
                {
                    return Err(Error::SizeMismatch(format!(
                        "node {u} lists community {c} but is missing from its member view"
                    )));
                }
            }
        }
        for (c, members) in self.comm_to_nodes.iter().enumerate() {
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::SizeMismatch(format!(
                    "member list of community {c} is not strictly sorted"
                )));
            }
            for &u in members {
                if self.node_to_comms[u.index()]
                    .binary_search(&CommunityId(c as u32))
                    .is_err()
                {
                    return Err(Error::SizeMismatch(format!(
                        "community {c} lists node {u} but is missing from its community set"
                    )));
                }
            }
        }
        if total != self.total_memberships {
            return Err(Error::SizeMismatch(format!(
                "membership counter {} does not match views {total}",
                self.total_memberships
            )));
        }
        if partial != self.partial_nodes {
            return Err(Error::SizeMismatch(format!(
                "partial-node counter {} does not match views {partial}",
                self.partial_nodes
            )));
        }
        Ok(())
    }
}

#[inline]
fn is_partial(len: usize, community_count: usize) -> bool {
    len > 0 && len < community_count
}

/// Intersection and union sizes of two sorted community sets.
#[inline]
pub fn jaccard_counts_of_sets(a: &[CommunityId], b: &[CommunityId]) -> (usize, usize) {
    let (mut i, mut j, mut inter) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (inter, a.len() + b.len() - inter)
}

/// Jaccard similarity of two sorted community sets; 0 when both are empty.
#[inline]
pub fn jaccard_of_sets<F: Real>(a: &[CommunityId], b: &[CommunityId]) -> F {
    let (inter, union) = jaccard_counts_of_sets(a, b);
    F::ratio_of(inter, union)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affiliation_from(sets: &[&[u32]], community_count: usize) -> Affiliation {
        let mut a = Affiliation::new(sets.len(), community_count);
        for (u, comms) in sets.iter().enumerate() {
            for &c in *comms {
                a.add_membership(NodeId(u as u32), CommunityId(c)).unwrap();
            }
        }
        a
    }

    #[test]
    fn community_set_returns_memberships() {
        // v1 in {C1..C5}, v2 in {C1, C6}, v3 in {C1, C7}
        let a = affiliation_from(&[&[0, 1, 2, 3, 4], &[0, 5], &[0, 6]], 7);
        let s1: Vec<u32> = a
            .community_set(NodeId(0))
            .unwrap()
            .iter()
            .map(|c| c.0)
            .collect();
        assert_eq!(s1, vec![0, 1, 2, 3, 4]);
        assert!(a.community_set(NodeId(1)).unwrap().len() == 2);
    }

    #[test]
    fn empty_community_set() {
        let a = Affiliation::new(2, 3);
        assert!(a.community_set(NodeId(1)).unwrap().is_empty());
    }

    #[test]
    fn add_then_query() {
        let mut a = Affiliation::new(2, 3);
        assert!(a.add_membership(NodeId(0), CommunityId(2)).unwrap());
        assert!(!a.add_membership(NodeId(0), CommunityId(2)).unwrap());
        assert!(a.has_membership(NodeId(0), CommunityId(2)));
        assert_eq!(a.total_memberships(), 1);
    }

    #[test]
    fn shared_communities_intersection() {
        let a = affiliation_from(&[&[0, 1, 2, 3, 4], &[0, 5], &[0, 6]], 7);
        let shared = a.shared_communities(NodeId(1), NodeId(2)).unwrap();
        assert_eq!(shared, vec![CommunityId(0)]);
        let same = a.shared_communities(NodeId(0), NodeId(0)).unwrap();
        assert_eq!(same.len(), 5);
        let b = affiliation_from(&[&[0], &[1]], 2);
        assert!(b.shared_communities(NodeId(0), NodeId(1)).unwrap().is_empty());
    }

    #[test]
    fn jaccard_of_motivating_sets() {
        // S_u = {C1..C5}, S_v = {C1, C6}: J = 1/6.
        let a = affiliation_from(&[&[0, 1, 2, 3, 4], &[0, 5], &[0, 6]], 7);
        assert_eq!(a.jaccard::<f64>(NodeId(0), NodeId(1)).unwrap(), 1.0 / 6.0);
        // S_u = {C1, C6}, S_v = {C1, C7}: J = 1/3.
        assert_eq!(a.jaccard::<f64>(NodeId(1), NodeId(2)).unwrap(), 1.0 / 3.0);
        // Identical non-empty sets.
        assert_eq!(a.jaccard::<f64>(NodeId(0), NodeId(0)).unwrap(), 1.0);
    }

    #[test]
    fn jaccard_empty_sets_is_zero() {
        let a = Affiliation::new(2, 2);
        assert_eq!(a.jaccard::<f64>(NodeId(0), NodeId(1)).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_node_is_an_error() {
        let a = Affiliation::new(2, 2);
        assert!(matches!(
            a.community_set(NodeId(5)),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            a.jaccard::<f64>(NodeId(0), NodeId(2)),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn co_membership_pairs_deduplicates() {
        // Nodes 0 and 1 share two communities; the pair appears once.
        let a = affiliation_from(&[&[0, 1], &[0, 1], &[1]], 2);
        let pairs = a.co_membership_pairs();
        assert_eq!(
            pairs,
            vec![
                (NodeId(0), NodeId(1)),
                (NodeId(0), NodeId(2)),
                (NodeId(1), NodeId(2)),
            ]
        );
    }

    #[test]
    fn cover_round_trip() {
        let a = affiliation_from(&[&[0], &[0, 1], &[1]], 3);
        let cover = a.to_cover();
        // Community 2 is empty and dropped.
        assert_eq!(cover.len(), 2);
        let b = Affiliation::from_cover(3, &cover).unwrap();
        assert_eq!(b.jaccard_counts(NodeId(0), NodeId(1)).unwrap(), (1, 2));
    }
}
