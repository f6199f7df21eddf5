//! Traversal plans on the reduced lattice.
//!
//! Monomials that differ only by a renaming of variables have the same
//! computational cost, so the lattice is reduced to one node per class,
//! labelled by the integer partition of the exponents. A plan is an
//! arborescence on that graph from the root to every class of degree `n`;
//! executing it visits only the monomials of the classes it contains.
//!
//! ```
//! use loslap::steiner::{build_partition_graph, solve_exact};
//!
//! let g = build_partition_graph(5, 5).unwrap();
//! assert_eq!(g.node_count(), 19);
//! assert_eq!(g.full_weight(), 6810);
//! assert!(solve_exact(&g).unwrap().total_weight <= 5210);
//! ```

mod execute;
mod graph;
mod partition;
mod solve;
mod stp;

pub use execute::{execute_plan, execute_plan_with_cap, VariableSlots};
pub use graph::{build_partition_graph, node_cost, PartitionGraph};
pub use partition::{partitions_of, Partition};
pub use solve::{full_plan, solve_exact, solve_greedy, PlanFile, TraversalPlan, EXACT_LEVEL_WIDTH_CAP};
pub use stp::{export_solution, export_stp, import_solution, write_stp};
