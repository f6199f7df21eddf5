//! Traversal plans and the solvers that produce them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::graph::PartitionGraph;
use super::partition::Partition;
use crate::{Error, Result};

/// Largest level width the exact solver enumerates subsets of. The
/// terminal level is never enumerated, so `n <= 9` fits when `m >= n`.
pub const EXACT_LEVEL_WIDTH_CAP: usize = 22;

const INF: u128 = u128::MAX;

/// Arborescence on the partition graph rooted at the empty partition and
/// reaching every level-`n` class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraversalPlan {
    pub n: usize,
    pub m: usize,
    /// Parent of every class in the plan except the root.
    pub parents: BTreeMap<Partition, Partition>,
    pub total_weight: u128,
}

impl TraversalPlan {
    /// Builds a plan from graph node indices, `parent[i] = Some(p)` for
    /// every node in the plan except the root.
    fn from_indices(g: &PartitionGraph, parent: &[Option<usize>]) -> Self {
        let mut parents = BTreeMap::new();
        let mut total = 0u128;
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                parents.insert(g.node(i).clone(), g.node(*p).clone());
                total += g.weight(i);
            }
        }
        TraversalPlan {
            n: g.photons(),
            m: g.modes(),
            parents,
            total_weight: total,
        }
    }

    /// Classes in the plan, root included.
    pub fn classes(&self) -> impl Iterator<Item = &Partition> {
        std::iter::once(&ROOT).chain(self.parents.keys())
    }

    pub fn contains(&self, p: &Partition) -> bool {
        p.is_empty() || self.parents.contains_key(p)
    }

    /// Children of every class, ascending.
    pub fn children(&self) -> BTreeMap<Partition, Vec<Partition>> {
        let mut out: BTreeMap<Partition, Vec<Partition>> = BTreeMap::new();
        for (child, parent) in &self.parents {
            out.entry(parent.clone()).or_default().push(child.clone());
        }
        out
    }

    /// Checks the plan against `g`: every edge exists, every class hangs
    /// off the root, every terminal is covered and the weight adds up.
    pub fn validate(&self, g: &PartitionGraph) -> Result<()> {
        if self.n != g.photons() {
            return Err(Error::Plan(format!(
                "plan is for n={} but the graph has n={}",
                self.n,
                g.photons()
            )));
        }
        let mut total = 0u128;
        for (child, parent) in &self.parents {
            let c = g
                .index_of(child)
                .ok_or_else(|| Error::Plan(format!("class {child} is not in the graph")))?;
            let p = g
                .index_of(parent)
                .ok_or_else(|| Error::Plan(format!("class {parent} is not in the graph")))?;
            if !g.parents(c).contains(&p) {
                return Err(Error::Plan(format!("{parent} -> {child} is not an edge")));
            }
            if !self.contains(parent) {
                return Err(Error::Plan(format!(
                    "parent {parent} of {child} is not reached by the plan"
                )));
            }
            total += g.weight(c);
        }
        if let Some(t) = g.terminals().find(|&t| !self.parents.contains_key(g.node(t))) {
            return Err(Error::Plan(format!("terminal {} is not reached", g.node(t))));
        }
        if g.modes() == self.m && total != self.total_weight {
            return Err(Error::Plan(format!(
                "plan claims weight {} but its edges sum to {total}",
                self.total_weight
            )));
        }
        Ok(())
    }

    /// Weight of the same arborescence when applied to `g`, which may have
    /// a different number of modes. Classes absent from `g` cost nothing.
    pub fn weight_on(&self, g: &PartitionGraph) -> u128 {
        self.parents
            .keys()
            .filter_map(|c| g.index_of(c))
            .map(|i| g.weight(i))
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PlanFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(text)?;
        let mut parents = BTreeMap::new();
        for (child, parent) in file.parent_map {
            let c: Partition = child.parse()?;
            let p: Partition = parent.parse()?;
            if c.level() != p.level() + 1 {
                return Err(Error::Parse(format!(
                    "parent_map entry {c} -> {p} skips a level"
                )));
            }
            parents.insert(c, p);
        }
        Ok(TraversalPlan {
            n: file.n,
            m: file.m,
            parents,
            total_weight: file.total_weight,
        })
    }
}

static ROOT: Partition = Partition::EMPTY;

/// Serialized plan: `{n, m, parent_map: {"(2,1)": "(1,1)", ...}, total_weight}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanFile {
    pub n: usize,
    pub m: usize,
    pub parent_map: BTreeMap<String, String>,
    pub total_weight: u128,
}

impl From<&TraversalPlan> for PlanFile {
    fn from(plan: &TraversalPlan) -> Self {
        PlanFile {
            n: plan.n,
            m: plan.m,
            parent_map: plan
                .parents
                .iter()
                .map(|(c, p)| (c.to_string(), p.to_string()))
                .collect(),
            total_weight: plan.total_weight,
        }
    }
}

/// Plan visiting every class, each under its smallest parent. Its weight
/// equals the plain depth-first traversal's operation count.
pub fn full_plan(g: &PartitionGraph) -> TraversalPlan {
    let parent: Vec<Option<usize>> = (0..g.node_count())
        .map(|i| g.parents(i).first().copied())
        .collect();
    TraversalPlan::from_indices(g, &parent)
}

/// Minimum-weight plan.
///
/// Since every edge into a class costs the same, a plan is a choice of
/// classes per level in which each chosen class has a chosen parent on
/// the level above, and its weight is the sum of the chosen classes. The
/// solver keeps, for every subset `X` of a level, the cheapest way to
/// choose `X` there and anything above; a subset is feasible from any
/// parent subset whose children cover it. Ties go to the parent subset
/// with the smallest bitmask, then to the smallest parent index.
pub fn solve_exact(g: &PartitionGraph) -> Result<TraversalPlan> {
    let n = g.photons();
    if let Some(k) = (0..n).find(|&k| g.level(k).len() > EXACT_LEVEL_WIDTH_CAP) {
        return Err(Error::Plan(format!(
            "level {k} has {} classes, above the exact solver cap of {EXACT_LEVEL_WIDTH_CAP}; use the greedy solver",
            g.level(k).len()
        )));
    }
    if g.level(n).len() > 63 {
        return Err(Error::Plan(format!(
            "{} terminals do not fit the exact solver's bitmasks",
            g.level(n).len()
        )));
    }
    // cost[k][X]: cheapest selection on levels 0..=k whose level-k set is X.
    let mut cost: Vec<Vec<u128>> = vec![vec![INF, 0]];
    for k in 1..n {
        let cover = cover_table(g, k - 1);
        let width = g.level(k).len();
        let mut best = vec![INF; 1 << width];
        for (c, &x) in cover.iter().enumerate() {
            let v = cost[k - 1][c];
            if v < best[x as usize] {
                best[x as usize] = v;
            }
        }
        // best[X] = min over supersets.
        for b in 0..width {
            for x in 0..best.len() {
                if x & (1 << b) == 0 && best[x | (1 << b)] < best[x] {
                    best[x] = best[x | (1 << b)];
                }
            }
        }
        let base = g.level(k).start;
        let mut level_cost = vec![0u128; 1 << width];
        for x in 1..level_cost.len() {
            let low = x.trailing_zeros() as usize;
            level_cost[x] = level_cost[x & (x - 1)] + g.weight(base + low);
        }
        let row = best
            .iter()
            .zip(&level_cost)
            .map(|(&b, &w)| if b == INF { INF } else { b + w })
            .collect();
        cost.push(row);
    }

    // Walk back from the full terminal level.
    let mut parent: Vec<Option<usize>> = vec![None; g.node_count()];
    let mut want: u64 = (1u64 << g.level(n).len()) - 1;
    for k in (1..=n).rev() {
        let cover = cover_table(g, k - 1);
        let mut chosen: Option<(u128, usize)> = None;
        for (c, &x) in cover.iter().enumerate() {
            if x & want == want {
                let v = cost[k - 1][c];
                if v != INF && chosen.is_none_or(|(b, _)| v < b) {
                    chosen = Some((v, c));
                }
            }
        }
        let (_, c) = chosen.ok_or_else(|| Error::Plan("no arborescence reaches every terminal".into()))?;
        let (head_base, tail_base) = (g.level(k).start, g.level(k - 1).start);
        for h in bits(want) {
            let node = head_base + h;
            let p = g
                .parents(node)
                .iter()
                .copied()
                .find(|&p| c & (1 << (p - tail_base)) != 0)
                .expect("cover guarantees a parent");
            parent[node] = Some(p);
        }
        want = c as u64;
    }
    Ok(TraversalPlan::from_indices(g, &parent))
}

fn bits(x: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |b| x & (1 << b) != 0)
}

/// `cover[C]` = bitmask of level-`k+1` classes with a parent in the
/// level-`k` subset `C`.
fn cover_table(g: &PartitionGraph, k: usize) -> Vec<u64> {
    let tails = g.level(k);
    let head_base = g.level(k + 1).start;
    let single: Vec<u64> = tails
        .clone()
        .map(|t| g.children(t).iter().fold(0u64, |acc, &h| acc | 1 << (h - head_base)))
        .collect();
    let mut cover = vec![0u64; 1 << tails.len()];
    for c in 1..cover.len() {
        let low = c.trailing_zeros() as usize;
        cover[c] = cover[c & (c - 1)] | single[low];
    }
    cover
}

/// Shortest-path heuristic: starting from the root, repeatedly attach the
/// terminal that is cheapest to reach from the current tree along its
/// cheapest path. Ties go to smaller node indices.
pub fn solve_greedy(g: &PartitionGraph) -> TraversalPlan {
    let count = g.node_count();
    let mut in_tree = vec![false; count];
    in_tree[0] = true;
    let mut parent: Vec<Option<usize>> = vec![None; count];
    // dist[v]: cost of the new classes on the cheapest path from the tree.
    let mut dist = vec![0u128; count];
    let mut pred = vec![usize::MAX; count];
    for v in 1..count {
        let (d, p) = cheapest_parent(g, &dist, v);
        dist[v] = d + g.weight(v);
        pred[v] = p;
    }
    let mut open: BTreeSet<(u128, usize)> = g.terminals().map(|t| (dist[t], t)).collect();
    while let Some((_, t)) = open.pop_first() {
        let mut dirty: BTreeSet<usize> = BTreeSet::new();
        let mut v = t;
        while !in_tree[v] {
            in_tree[v] = true;
            parent[v] = Some(pred[v]);
            dist[v] = 0;
            dirty.extend(g.children(v));
            v = pred[v];
        }
        // Distances only shrink; relax descendants in topological order.
        while let Some(v) = dirty.pop_first() {
            if in_tree[v] {
                continue;
            }
            let (d, p) = cheapest_parent(g, &dist, v);
            let nd = d + g.weight(v);
            if (nd, p) != (dist[v], pred[v]) {
                let terminal = g.terminals().contains(&v);
                if terminal {
                    open.remove(&(dist[v], v));
                }
                dist[v] = nd;
                pred[v] = p;
                if terminal {
                    open.insert((nd, v));
                }
                dirty.extend(g.children(v));
            }
        }
    }
    TraversalPlan::from_indices(g, &parent)
}

fn cheapest_parent(g: &PartitionGraph, dist: &[u128], v: usize) -> (u128, usize) {
    g.parents(v)
        .iter()
        .map(|&p| (dist[p], p))
        .min()
        .expect("every non-root class has a parent")
}

#[cfg(test)]
mod tests {
    use super::super::graph::build_partition_graph;
    use super::*;

    /// Minimum over all subsets of interior classes, checking feasibility
    /// directly.
    fn brute_force(g: &PartitionGraph) -> u128 {
        let n = g.photons();
        let interior: Vec<usize> = (1..g.level(n).start).collect();
        let terminal_weight: u128 = g.terminals().map(|t| g.weight(t)).sum();
        let mut best = INF;
        for mask in 0u64..(1 << interior.len()) {
            let mut chosen = vec![false; g.node_count()];
            chosen[0] = true;
            for (b, &v) in interior.iter().enumerate() {
                chosen[v] = mask & (1 << b) != 0;
            }
            for t in g.terminals() {
                chosen[t] = true;
            }
            let ok = (1..g.node_count())
                .filter(|&v| chosen[v])
                .all(|v| g.parents(v).iter().any(|&p| chosen[p]));
            if ok {
                let w: u128 = interior.iter().filter(|&&v| chosen[v]).map(|&v| g.weight(v)).sum();
                best = best.min(w + terminal_weight);
            }
        }
        best
    }

    #[test]
    fn exact_matches_brute_force() {
        for n in 1..=6 {
            for m in [1, 2, n, n + 3] {
                let g = build_partition_graph(n, m).unwrap();
                let plan = solve_exact(&g).unwrap();
                plan.validate(&g).unwrap();
                assert_eq!(plan.total_weight, brute_force(&g), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn known_optima() {
        for (n, m, expect) in [
            (2, 2, 20),
            (3, 3, 150),
            (4, 4, 1032),
            (5, 5, 5210),
            (6, 6, 29436),
            (7, 7, 141_428),
        ] {
            let g = build_partition_graph(n, m).unwrap();
            assert_eq!(solve_exact(&g).unwrap().total_weight, expect, "n={n}");
        }
    }

    #[test]
    fn greedy_is_bracketed() {
        for n in 1..=7 {
            for m in [n, 2 * n] {
                let g = build_partition_graph(n, m).unwrap();
                let greedy = solve_greedy(&g);
                greedy.validate(&g).unwrap();
                let exact = solve_exact(&g).unwrap();
                assert!(greedy.total_weight >= exact.total_weight);
                assert!(greedy.total_weight <= g.full_weight());
            }
        }
        let g = build_partition_graph(4, 4).unwrap();
        assert_eq!(solve_greedy(&g).total_weight, 1032);
        let g = build_partition_graph(5, 5).unwrap();
        assert!(solve_greedy(&g).total_weight <= 6810);
    }

    #[test]
    fn full_plan_weight() {
        let g = build_partition_graph(5, 5).unwrap();
        let plan = full_plan(&g);
        plan.validate(&g).unwrap();
        assert_eq!(plan.total_weight, 6810);
    }

    #[test]
    fn refuses_wide_levels() {
        let g = build_partition_graph(10, 10).unwrap();
        assert!(matches!(solve_exact(&g), Err(Error::Plan(_))));
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let g = build_partition_graph(5, 5).unwrap();
        let plan = solve_exact(&g).unwrap();
        let back = TraversalPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(back, plan);
        let mut broken = plan.clone();
        let terminal = g.node(g.terminals().start).clone();
        broken.parents.remove(&terminal);
        let err = broken.validate(&g).unwrap_err().to_string();
        assert!(err.contains(&terminal.to_string()), "{err}");
    }

    #[test]
    fn reweighting_for_more_modes() {
        let g5 = build_partition_graph(5, 5).unwrap();
        let plan = solve_exact(&g5).unwrap();
        let g10 = build_partition_graph(5, 10).unwrap();
        plan.validate(&g10).unwrap();
        assert!(plan.weight_on(&g10) >= solve_exact(&g10).unwrap().total_weight);
    }
}
