//! Running a traversal plan on the original lattice.

use std::collections::HashMap;
use std::ops::ControlFlow;

use num_complex::Complex64;

use super::partition::Partition;
use super::solve::TraversalPlan;
use crate::matrix::InterferometerMatrix;
use crate::traversal::{check_capacity, update_coefficients, Band, Node, TraversalStats};
use crate::{Error, Result, DEFAULT_MEMORY_CAP_BYTES};

/// Variables grouped by exponent: `slot(i)` holds the modes whose exponent
/// in the current monomial is `i`, ascending.
///
/// A mode may only enter a slot above every mode already there. With that
/// rule each monomial has one way to be built: its last move put the
/// largest mode of the slot it filled.
#[derive(Clone, Debug)]
pub struct VariableSlots {
    slots: Vec<Vec<usize>>,
    degree: usize,
}

impl VariableSlots {
    /// All `m` modes at exponent 0, room for exponents up to `n`.
    pub fn new(m: usize, n: usize) -> Self {
        let mut slots = vec![Vec::new(); n + 1];
        slots[0] = (0..m).collect();
        VariableSlots { slots, degree: 0 }
    }

    pub fn slot(&self, exponent: usize) -> &[usize] {
        &self.slots[exponent]
    }

    pub fn max(&self, exponent: usize) -> Option<usize> {
        self.slots[exponent].last().copied()
    }

    pub fn can_add(&self, exponent: usize, mode: usize) -> bool {
        self.max(exponent).is_none_or(|top| top < mode)
    }

    /// Sum of exponents.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Moves the mode at `position` of slot `exponent - 1` into slot
    /// `exponent`. Returns the mode.
    pub fn raise(&mut self, exponent: usize, position: usize) -> usize {
        let mode = self.slots[exponent - 1].remove(position);
        debug_assert!(self.can_add(exponent, mode));
        self.slots[exponent].push(mode);
        self.degree += 1;
        mode
    }

    /// Undoes the matching [`raise`](Self::raise).
    pub fn lower(&mut self, exponent: usize, position: usize) {
        let mode = self.slots[exponent].pop().expect("slot filled by raise");
        self.slots[exponent - 1].insert(position, mode);
        self.degree -= 1;
    }
}

/// Plan flattened to indices: `children[c]` lists `(child, exponent)`
/// where the child class raises one variable to `exponent`.
struct PlanTree {
    children: Vec<Vec<(usize, usize)>>,
}

impl PlanTree {
    fn new(plan: &TraversalPlan) -> Result<Self> {
        let root = Partition::empty();
        let mut ids: HashMap<&Partition, usize> = HashMap::from([(&root, 0)]);
        for class in plan.parents.keys() {
            let next = ids.len();
            ids.entry(class).or_insert(next);
        }
        let mut children = vec![Vec::new(); ids.len()];
        for (child, parent) in &plan.parents {
            let p = *ids
                .get(parent)
                .ok_or_else(|| Error::Plan(format!("parent {parent} of {child} is not in the plan")))?;
            let e = parent
                .raised_exponent(child)
                .ok_or_else(|| Error::Plan(format!("{parent} -> {child} is not an edge")))?;
            children[p].push((ids[child], e));
        }
        // Keys were visited in ascending order, so children are ascending.
        Ok(PlanTree { children })
    }
}

struct Executor<'a, F> {
    u: &'a InterferometerMatrix,
    tree: PlanTree,
    slots: VariableSlots,
    coefficients: Vec<Complex64>,
    occupations: Vec<usize>,
    path: Vec<usize>,
    stats: TraversalStats,
    visitor: F,
}

impl<F> Executor<'_, F>
where
    F: FnMut(&Node<'_>) -> ControlFlow<()>,
{
    fn visit(&mut self, class: usize) -> ControlFlow<()> {
        let n = self.u.cols();
        let level = self.slots.degree() + 1;
        for c in 0..self.tree.children[class].len() {
            let (child, exponent) = self.tree.children[class][c];
            let mut position = 0;
            while position < self.slots.slot(exponent - 1).len() {
                let mode = self.slots.slot(exponent - 1)[position];
                if !self.slots.can_add(exponent, mode) {
                    position += 1;
                    continue;
                }
                self.slots.raise(exponent, position);
                self.occupations[mode] += 1;
                self.path.push(mode);
                self.stats.multiply_adds +=
                    update_coefficients(self.u, mode, level, &mut self.coefficients);
                self.stats.nodes += 1;
                if level == n {
                    self.stats.leaves += 1;
                }
                let node = Node::new(
                    &self.occupations,
                    &self.path,
                    Band::new(&self.coefficients, n, level),
                );
                let flow = match (self.visitor)(&node) {
                    ControlFlow::Continue(()) if level < n => self.visit(child),
                    other => other,
                };
                self.path.pop();
                self.occupations[mode] -= 1;
                self.slots.lower(exponent, position);
                flow?;
                position += 1;
            }
        }
        ControlFlow::Continue(())
    }
}

/// Visits the monomials of every class in `plan`, each computed from a
/// monomial of its plan parent, under the default memory cap.
pub fn execute_plan<F>(u: &InterferometerMatrix, plan: &TraversalPlan, visitor: F) -> Result<TraversalStats>
where
    F: FnMut(&Node<'_>) -> ControlFlow<()>,
{
    execute_plan_with_cap(u, plan, DEFAULT_MEMORY_CAP_BYTES, visitor)
}

pub fn execute_plan_with_cap<F>(
    u: &InterferometerMatrix,
    plan: &TraversalPlan,
    cap_bytes: u64,
    visitor: F,
) -> Result<TraversalStats>
where
    F: FnMut(&Node<'_>) -> ControlFlow<()>,
{
    let (m, n) = (u.rows(), u.cols());
    if plan.n != n {
        return Err(Error::Dimension(format!(
            "plan is for {} photons but the matrix has {n} columns",
            plan.n
        )));
    }
    check_capacity(n, cap_bytes)?;
    let mut coefficients = vec![Complex64::new(0.0, 0.0); 1usize << n];
    coefficients[(1usize << n) - 1] = Complex64::new(1.0, 0.0);
    let mut exec = Executor {
        u,
        tree: PlanTree::new(plan)?,
        slots: VariableSlots::new(m, n),
        coefficients,
        occupations: vec![0; m],
        path: Vec::with_capacity(n),
        stats: TraversalStats::default(),
        visitor,
    };
    exec.stats.completed = exec.visit(0).is_continue();
    Ok(exec.stats)
}

#[cfg(test)]
mod tests {
    use super::super::graph::build_partition_graph;
    use super::super::solve::{full_plan, solve_exact, solve_greedy};
    use super::*;
    use crate::haar_random_unitary;
    use crate::traversal::iterate_amplitudes;
    use std::collections::{HashMap, HashSet};

    fn run(u: &InterferometerMatrix, plan: &TraversalPlan) -> (HashMap<Vec<usize>, Complex64>, TraversalStats, usize) {
        let mut leaves = HashMap::new();
        let mut seen = HashSet::new();
        let mut visits = 0;
        let stats = execute_plan(u, plan, |node| {
            visits += 1;
            assert!(seen.insert(node.occupations().to_vec()), "revisited {:?}", node.occupations());
            assert!(plan.contains(&Partition::of_occupations(node.occupations())));
            if node.is_leaf() {
                leaves.insert(node.occupations().to_vec(), node.amplitude());
            }
            ControlFlow::Continue(())
        })
        .unwrap();
        (leaves, stats, visits)
    }

    #[test]
    fn plans_reproduce_the_plain_traversal() {
        for n in 1..=6usize {
            for m in [n.saturating_sub(2).max(1), n, n + 2] {
                let u = haar_random_unitary(m.max(n), n as u64 * 10 + m as u64);
                let u = InterferometerMatrix::from_rows((0..m).map(|i| u.row(i)[..n].to_vec()).collect()).unwrap();
                let g = build_partition_graph(n, m).unwrap();
                let reference: HashMap<_, _> = iterate_amplitudes(&u)
                    .unwrap()
                    .map(|(s, a)| (s.into_occupations(), a))
                    .collect();
                for plan in [full_plan(&g), solve_exact(&g).unwrap(), solve_greedy(&g)] {
                    let (leaves, stats, _) = run(&u, &plan);
                    assert_eq!(leaves.len(), reference.len());
                    for (s, a) in &reference {
                        assert!((leaves[s] - a).norm() < 1e-10, "n={n} m={m} {s:?}");
                    }
                    assert_eq!(stats.flops() as u128, plan.total_weight, "n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn full_plan_visits_every_node() {
        let u = haar_random_unitary(4, 1).truncate_columns(4).unwrap();
        let g = build_partition_graph(4, 4).unwrap();
        let (_, stats, visits) = run(&u, &full_plan(&g));
        assert_eq!(visits, 69);
        assert_eq!(stats.nodes, 69);
    }

    #[test]
    fn three_photon_plan_with_alternative_parents() {
        // (1,1) only feeds (1,1,1); (2,1) is reached from (2).
        let text = r#"{"n":3,"m":3,"parent_map":{"(1)":"()","(2)":"(1)","(1,1)":"(1)","(3)":"(2)","(2,1)":"(2)","(1,1,1)":"(1,1)"},"total_weight":150}"#;
        let plan = TraversalPlan::from_json(text).unwrap();
        let g = build_partition_graph(3, 3).unwrap();
        plan.validate(&g).unwrap();
        let u = haar_random_unitary(3, 5);
        let (leaves, stats, visits) = run(&u, &plan);
        assert_eq!(leaves.len(), 10);
        assert_eq!(visits, 19);
        assert_eq!(stats.flops(), 150);

        let broken = r#"{"n":3,"m":3,"parent_map":{"(1,1,1)":"(2,1)"},"total_weight":0}"#;
        assert!(TraversalPlan::from_json(broken).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let g = build_partition_graph(3, 3).unwrap();
        let u = haar_random_unitary(3, 0).truncate_columns(2).unwrap();
        assert!(execute_plan(&u, &full_plan(&g), |_| ControlFlow::Continue(())).is_err());
    }

    #[test]
    fn slots_keep_canonical_order() {
        let mut s = VariableSlots::new(4, 3);
        let a = s.raise(1, 1);
        assert_eq!(a, 1);
        assert!(!s.can_add(1, 0));
        assert!(s.can_add(1, 2));
        let b = s.raise(1, 1); // mode 2
        assert_eq!(s.slot(1), &[1, 2]);
        assert_eq!(s.degree(), 2);
        s.lower(1, 1);
        assert_eq!(b, 2);
        s.lower(1, 1);
        assert_eq!(s.slot(0), &[0, 1, 2, 3]);
    }
}
