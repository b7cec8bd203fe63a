//! Immutable undirected simple graph with sorted adjacency lists.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index, `0 <= id < node_count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Undirected simple graph. Edges are stored once in canonical `(u, v)` order
/// with `u < v`, alongside per-node sorted neighbor lists for O(log degree)
/// membership queries. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops and duplicate edges
    /// (including reversed duplicates) are dropped, so the result is always
    /// simple. Errors on endpoints outside `0..node_count`.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut canon: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::NodeOutOfRange {
                    node: a.max(b) as usize,
                    node_count,
                });
            }
            if a == b {
                continue;
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &canon {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        Ok(Graph {
            node_count,
            edges: canon,
            adjacency,
        })
    }

    /// Empty graph on `node_count` isolated nodes.
    pub fn empty(node_count: usize) -> Self {
        Graph {
            node_count,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); node_count],
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(u, v)` order with `u < v`, sorted.
    #[inline]
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u.index()].len()
    }

    /// Sorted neighbor list of `u`.
    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[u32] {
        &self.adjacency[u.index()]
    }

    /// Edge membership via binary search on the smaller adjacency list.
    #[inline]
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        let (a, b) = if self.adjacency[u.index()].len() <= self.adjacency[v.index()].len() {
            (u.index(), v.0)
        } else {
            (v.index(), u.0)
        };
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Number of unordered node pairs, `n * (n - 1) / 2`.
    #[inline]
    pub fn pair_count(&self) -> u64 {
        let n = self.node_count as u64;
        n * (n - 1) / 2
    }

    /// Edge density over all unordered pairs.
    pub fn density(&self) -> f64 {
        if self.pair_count() == 0 {
            0.0
        } else {
            self.edge_count() as f64 / self.pair_count() as f64
        }
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

    /// Exhaustive cross-check that the edge set and the adjacency view agree
    /// and that the graph is simple. Intended for tests and debugging.
    pub fn check_consistency(&self) -> Result<()> {
        let mut from_adj: Vec<(u32, u32)> = Vec::new();
        for (u, list) in self.adjacency.iter().enumerate() {
            for window in list.windows(2) {
                if window[0] >= window[1] {
                    return Err(Error::SizeMismatch(format!(
                        "adjacency of node {u} is not strictly sorted"
                    )));
                }
            }
            for &v in list {
                if v as usize == u {
                    return Err(Error::SizeMismatch(format!("self-loop at node {u}")));
                }
                if (u as u32) < v {
                    from_adj.push((u as u32, v));
                }
            }
        }
        from_adj.sort_unstable();
        if from_adj != self.edges {
            return Err(Error::SizeMismatch(
                "edge set and adjacency view disagree".into(),
            ));
        }
        Ok(())
    }
}
