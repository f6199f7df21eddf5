//! The reduced lattice: one node per class of monomials.

use std::collections::HashMap;

use super::partition::{partitions_of, Partition};
use crate::combinatorics::binomial;
use crate::{Error, Result};

/// Directed graph on partitions of `0..=n` with at most `m` parts.
///
/// Nodes are stored level by level, ascending lexicographically within a
/// level, so node indices are a topological order and index order is the
/// tie-break used by the solvers. Index 0 is the root.
///
/// All edges into a node cost the same, `2n * C(n-1, k-1) * class_size`,
/// the complex operations needed to compute every monomial of a level-`k`
/// class from its parents. That value is stored as the node's weight.
#[derive(Clone, Debug)]
pub struct PartitionGraph {
    n: usize,
    m: usize,
    nodes: Vec<Partition>,
    level_offsets: Vec<usize>,
    weights: Vec<u128>,
    class_sizes: Vec<u128>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    index: HashMap<Partition, usize>,
}

/// Operations to compute one node of level `k`: `2n * C(n-1, k-1)`.
pub fn node_cost(n: usize, k: usize) -> Option<u128> {
    if k == 0 {
        return Some(0);
    }
    binomial(n as u64 - 1, k as u64 - 1)?.checked_mul(2 * n as u128)
}

/// Builds the reduced lattice for `n` photons and `m` modes. Classes with
/// more parts than modes are empty and left out.
pub fn build_partition_graph(n: usize, m: usize) -> Result<PartitionGraph> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput(format!(
            "partition graph needs n >= 1 and m >= 1, got n={n}, m={m}"
        )));
    }
    let overflow = || Error::SizeOverflow(format!("edge weights for n={n}, m={m}"));
    let mut nodes = Vec::new();
    let mut level_offsets = vec![0];
    let mut weights = Vec::new();
    let mut class_sizes = Vec::new();
    for k in 0..=n {
        let cost = node_cost(n, k).ok_or_else(overflow)?;
        for part in partitions_of(k).into_iter().filter(|p| p.len() <= m) {
            let size = part.class_size(m).ok_or_else(overflow)?;
            weights.push(cost.checked_mul(size).ok_or_else(overflow)?);
            class_sizes.push(size);
            nodes.push(part);
        }
        level_offsets.push(nodes.len());
    }
    let index: HashMap<Partition, usize> =
        nodes.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut parents = vec![Vec::new(); nodes.len()];
    let mut children = vec![Vec::new(); nodes.len()];
    for (i, part) in nodes.iter().enumerate() {
        if part.level() == n {
            continue;
        }
        for child in part.children() {
            if let Some(&c) = index.get(&child) {
                children[i].push(c);
                parents[c].push(i);
            }
        }
    }
    for list in children.iter_mut().chain(parents.iter_mut()) {
        list.sort_unstable();
    }
    Ok(PartitionGraph {
        n,
        m,
        nodes,
        level_offsets,
        weights,
        class_sizes,
        parents,
        children,
        index,
    })
}

impl PartitionGraph {
    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, i: usize) -> &Partition {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[Partition] {
        &self.nodes
    }

    pub fn index_of(&self, p: &Partition) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Node indices of level `k`.
    pub fn level(&self, k: usize) -> std::ops::Range<usize> {
        self.level_offsets[k]..self.level_offsets[k + 1]
    }

    /// Level-`n` nodes, which every plan must reach.
    pub fn terminals(&self) -> std::ops::Range<usize> {
        self.level(self.n)
    }

    /// Weight of every edge entering `i`.
    pub fn weight(&self, i: usize) -> u128 {
        self.weights[i]
    }

    pub fn class_size(&self, i: usize) -> u128 {
        self.class_sizes[i]
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// `(tail, head, weight)` for every edge, tails ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u128)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(move |(t, hs)| hs.iter().map(move |&h| (t, h, self.weights[h])))
    }

    /// Monomials in the original lattice, root included: `C(n+m, n)`.
    pub fn original_node_count(&self) -> u128 {
        self.class_sizes.iter().sum()
    }

    /// Weight of visiting every node, i.e. of the plain depth-first walk.
    pub fn full_weight(&self) -> u128 {
        self.weights.iter().sum()
    }
}
