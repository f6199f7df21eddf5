//! SteinLib STP exchange for external Steiner arborescence solvers.
//!
//! Nodes are numbered from 1 in graph index order, so node `i + 1` is
//! [`PartitionGraph::node`]`(i)` and node 1 is the root. The node labels
//! are listed in the comment section for reference.

use std::fmt::Write as _;
use std::path::Path;

use super::graph::PartitionGraph;
use super::solve::TraversalPlan;
use crate::{Error, Result};

const HEADER: &str = "33D32945 STP File, STP Format Version 1.0";

/// Renders `g` as a directed (SAP) STP instance.
pub fn export_stp(g: &PartitionGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}\n");
    out.push_str("SECTION Comment\n");
    let _ = writeln!(
        out,
        "Name \"partition lattice n={} m={}\"",
        g.photons(),
        g.modes()
    );
    out.push_str("Creator \"loslap\"\n");
    out.push_str("Problem \"Steiner Arborescence Problem\"\n");
    let labels: Vec<String> = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{}={p}", i + 1))
        .collect();
    let _ = writeln!(out, "Remark \"{}\"", labels.join(" "));
    out.push_str("END\n\n");

    out.push_str("SECTION Graph\n");
    let _ = writeln!(out, "Nodes {}", g.node_count());
    let _ = writeln!(out, "Arcs {}", g.edge_count());
    for (t, h, w) in g.edges() {
        let _ = writeln!(out, "A {} {} {w}", t + 1, h + 1);
    }
    out.push_str("END\n\n");

    out.push_str("SECTION Terminals\n");
    let _ = writeln!(out, "Terminals {}", g.terminals().len());
    let _ = writeln!(out, "Root {}", g.root() + 1);
    for t in g.terminals() {
        let _ = writeln!(out, "T {}", t + 1);
    }
    out.push_str("END\n\nEOF\n");
    out
}

pub fn write_stp(g: &PartitionGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, export_stp(g))?;
    Ok(())
}

/// Renders the arcs of `plan` in the solution format read by
/// [`import_solution`].
pub fn export_solution(g: &PartitionGraph, plan: &TraversalPlan) -> Result<String> {
    let mut out = String::from("SECTION Solution\n");
    let _ = writeln!(out, "Arcs {}", plan.parents.len());
    for (child, parent) in &plan.parents {
        let lookup = |p| {
            g.index_of(p)
                .ok_or_else(|| Error::Plan(format!("class {p} is not in the graph")))
        };
        let _ = writeln!(out, "A {} {}", lookup(parent)? + 1, lookup(child)? + 1);
    }
    out.push_str("END\n\nEOF\n");
    Ok(out)
}

/// Parses a solution arc list and validates it as a plan on `g`.
///
/// Lines `A u v` or `E u v` (an optional trailing weight is ignored) name
/// arcs by 1-based node number; undirected `E` lines are oriented from the
/// lower level. Section markers and keyword lines are skipped.
pub fn import_solution(g: &PartitionGraph, text: &str) -> Result<TraversalPlan> {
    let mut parent: Vec<Option<usize>> = vec![None; g.node_count()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };
        if first.starts_with('#') {
            continue;
        }
        let bad = |why: &str| Error::Parse(format!("solution line {}: {why}: {raw:?}", lineno + 1));
        match first {
            "A" | "E" => {}
            _ if first.len() > 1 && first.chars().all(|c| c.is_ascii_alphanumeric()) => continue,
            _ => return Err(bad("expected an arc")),
        }
        let mut node = || -> Result<usize> {
            let t = tokens.next().ok_or_else(|| bad("missing node number"))?;
            let v: usize = t.parse().map_err(|_| bad("bad node number"))?;
            if v == 0 || v > g.node_count() {
                return Err(bad("node number out of range"));
            }
            Ok(v - 1)
        };
        let (mut a, mut b) = (node()?, node()?);
        if first == "E" && g.node(a).level() > g.node(b).level() {
            std::mem::swap(&mut a, &mut b);
        }
        if !g.children(a).contains(&b) {
            return Err(bad(&format!("{} -> {} is not an arc", g.node(a), g.node(b))));
        }
        if let Some(p) = parent[b] {
            if p != a {
                return Err(Error::Plan(format!(
                    "class {} has two parents, {} and {}",
                    g.node(b),
                    g.node(p),
                    g.node(a)
                )));
            }
        }
        parent[b] = Some(a);
    }
    let mut parents = std::collections::BTreeMap::new();
    let mut total = 0u128;
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            parents.insert(g.node(i).clone(), g.node(*p).clone());
            total += g.weight(i);
        }
    }
    let plan = TraversalPlan {
        n: g.photons(),
        m: g.modes(),
        parents,
        total_weight: total,
    };
    plan.validate(g)?;
    Ok(plan)
}
