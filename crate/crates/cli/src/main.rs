mod args;
mod output;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use loslap::adaptive::{adaptive_traversal_with_cap, AdaptivePolicy};
use loslap::bits::MAX_SUBSET_BITS;
use loslap::costmodel::{
    cost_table_csv, crossover_mask_size, flops_permanent_all, frontier_csv, loslap_dominates,
    min_mask_for_memory, region_csv, Budget,
};
use loslap::noise::{
    distinguishable_distribution, lossy_traverse, multiphoton_distribution, DistinguishabilityGroups,
    LossModel,
};
use loslap::permanent::full_distribution_naive;
use loslap::slos::slos_full_with_cap;
use loslap::steiner::{
    build_partition_graph, execute_plan_with_cap, export_stp, full_plan, import_solution, solve_exact,
    solve_greedy, TraversalPlan,
};
use loslap::traversal::{check_capacity, Traversal};
use loslap::{haar_random_unitary, Complex64, FockState, InterferometerMatrix, DEFAULT_MEMORY_CAP_BYTES};

use args::*;
use output::{amplitude_line, num, AMPLITUDE_HEADER};

const UNITARITY_TOLERANCE: f64 = 1e-9;
const MEMORY_CAP_VAR: &str = "LOSLAP_MEMORY_CAP_BYTES";

#[derive(Debug)]
enum Failure {
    /// Bad arguments or input files.
    Invalid(String),
    /// Refused because the job would exceed a resource cap.
    Budget(String),
    /// The output stream closed early.
    Closed,
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Invalid(_) => ExitCode::from(2),
            Failure::Budget(_) => ExitCode::from(3),
            Failure::Closed => ExitCode::SUCCESS,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(msg) | Failure::Budget(msg) => f.write_str(msg),
            Failure::Closed => Ok(()),
        }
    }
}

impl From<loslap::Error> for Failure {
    fn from(e: loslap::Error) -> Self {
        match e {
            loslap::Error::Budget { .. } => Failure::Budget(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            Failure::Closed
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Invalid(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, Failure::Closed) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

fn memory_cap() -> Outcome<u64> {
    match std::env::var(MEMORY_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Invalid(format!("{MEMORY_CAP_VAR} must be a byte count, got {v:?}"))),
        Err(_) => Ok(DEFAULT_MEMORY_CAP_BYTES),
    }
}

fn load_matrix(src: &MatrixSource) -> Outcome<InterferometerMatrix> {
    if let Some(n) = src.n {
        if n > MAX_SUBSET_BITS {
            return invalid(format!(
                "--n {n} exceeds the {MAX_SUBSET_BITS}-photon limit of the subset bitmask"
            ));
        }
    }
    let full = match (&src.matrix, src.haar_seed) {
        (Some(path), None) => InterferometerMatrix::load(path)
            .map_err(|e| Failure::Invalid(format!("--matrix {}: {e}", path.display())))?,
        (None, Some(seed)) => {
            let m = src.m.ok_or_else(|| Failure::Invalid("--haar-seed needs --m".into()))?;
            if m == 0 {
                return invalid("--m must be at least 1");
            }
            haar_random_unitary(m, seed)
        }
        (None, None) => return invalid("give a matrix source: --matrix FILE or --haar-seed SEED --m M"),
        (Some(_), Some(_)) => return invalid("--matrix and --haar-seed are mutually exclusive"),
    };
    if src.matrix.is_some() {
        if let Some(m) = src.m {
            if m != full.rows() {
                return invalid(format!("--m {m} does not match the {} rows of --matrix", full.rows()));
            }
        }
    }
    if src.require_unitary {
        let deviation = full.column_orthonormality_deviation();
        if !(deviation <= UNITARITY_TOLERANCE) {
            return invalid(format!(
                "--require-unitary: matrix columns deviate from orthonormality by {deviation:.3e} \
                 (tolerance {UNITARITY_TOLERANCE:e}); column norms {:?}",
                full.column_norms()
            ));
        }
    }
    let n = src.n.unwrap_or(full.cols());
    if n > full.cols() {
        return invalid(format!("--n {n} exceeds the {} columns of the matrix", full.cols()));
    }
    if n > MAX_SUBSET_BITS {
        return invalid(format!(
            "matrix has {n} columns, above the {MAX_SUBSET_BITS}-photon limit of the subset bitmask"
        ));
    }
    Ok(full.truncate_columns(n)?)
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Iterate(a) => iterate(a),
        Command::Lossy(a) => lossy(a),
        Command::Adaptive(a) => adaptive(a),
        Command::Steiner(c) => steiner(c),
        Command::Cost(c) => cost(c),
        Command::Compare(a) => compare(a),
    }
}

fn write_amplitudes(out: &mut dyn Write, amplitudes: &[(FockState, Complex64)]) -> Outcome {
    writeln!(out, "{AMPLITUDE_HEADER}")?;
    for (s, a) in amplitudes {
        amplitude_line(out, s, *a)?;
    }
    out.flush()?;
    Ok(())
}

/// Streams leaves straight to `out` unless they have to be sorted first.
fn stream_amplitudes(
    out: &mut dyn Write,
    leaves: impl Iterator<Item = loslap::Result<(FockState, Complex64)>>,
    sort: bool,
    limit: Option<u64>,
) -> Outcome {
    let leaves = leaves.take(limit.map_or(usize::MAX, |l| usize::try_from(l).unwrap_or(usize::MAX)));
    if sort {
        let mut all = leaves.collect::<loslap::Result<Vec<_>>>()?;
        all.sort_by(|a, b| a.0.cmp(&b.0));
        return write_amplitudes(out, &all);
    }
    writeln!(out, "{AMPLITUDE_HEADER}")?;
    for leaf in leaves {
        let (s, a) = leaf?;
        amplitude_line(out, &s, a)?;
    }
    out.flush()?;
    Ok(())
}

fn plan_for(u: &InterferometerMatrix, path: Option<&Path>) -> Outcome<TraversalPlan> {
    let g = build_partition_graph(u.cols(), u.rows())?;
    let plan = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Invalid(format!("--plan {}: {e}", p.display())))?;
            TraversalPlan::from_json(&text).map_err(|e| Failure::Invalid(format!("--plan {}: {e}", p.display())))?
        }
        None => solve_exact(&g).unwrap_or_else(|_| solve_greedy(&g)),
    };
    if plan.n != u.cols() || plan.m != u.rows() {
        return invalid(format!(
            "--plan is for n={} m={} but the matrix gives n={} m={}",
            plan.n,
            plan.m,
            u.cols(),
            u.rows()
        ));
    }
    plan.validate(&g)?;
    Ok(plan)
}

/// Output amplitudes of one engine, with its FLOP count and whether that
/// count was measured or taken from the cost model.
fn run_engine(
    engine: Engine,
    u: &InterferometerMatrix,
    plan: Option<&Path>,
    cap: u64,
) -> Outcome<(Vec<(FockState, Complex64)>, u128, &'static str)> {
    Ok(match engine {
        Engine::Loslap => {
            let mut leaves = Traversal::with_cap(u, cap)?.into_leaves();
            let amps = leaves.by_ref().collect::<loslap::Result<Vec<_>>>()?;
            (amps, leaves.stats().flops() as u128, "measured")
        }
        Engine::Slos => {
            let e = slos_full_with_cap(u, cap)?;
            let flops = e.flops() as u128;
            (e.amplitudes, flops, "measured")
        }
        Engine::Permanent => {
            let flops = flops_permanent_all(u.cols(), u.rows());
            let flops = flops.try_into().unwrap_or(u128::MAX);
            (full_distribution_naive(u).collect(), flops, "model")
        }
        Engine::SteinerPlan => {
            let plan = plan_for(u, plan)?;
            let mut amps = Vec::new();
            let stats = execute_plan_with_cap(u, &plan, cap, |node| {
                if node.is_leaf() {
                    amps.push((node.state(), node.amplitude()));
                }
                ControlFlow::Continue(())
            })?;
            (amps, stats.flops() as u128, "measured")
        }
    })
}

fn simulate(a: SimulateArgs) -> Outcome {
    let u = load_matrix(&a.source)?;
    let cap = memory_cap()?;
    if a.plan.is_some() && a.engine != Engine::SteinerPlan {
        return invalid("--plan only applies to --engine steiner-plan");
    }
    if (a.groups.is_some() || a.doubled) && a.engine != Engine::Loslap {
        return invalid("--groups and --doubled need --engine loslap");
    }
    let mut out = output::open(a.output.as_deref())?;
    if let Some(text) = &a.groups {
        let groups: DistinguishabilityGroups =
            text.parse().map_err(|e| Failure::Invalid(format!("--groups {text:?}: {e}")))?;
        if groups.photon_count() != u.cols() {
            return invalid(format!(
                "--groups covers {} photons but there are {}",
                groups.photon_count(),
                u.cols()
            ));
        }
        check_capacity(u.cols(), cap)?;
        writeln!(out, "state,probability")?;
        for (s, p) in distinguishable_distribution(&u, &groups)? {
            writeln!(out, "{},{}", output::state(&s), num(p))?;
        }
        out.flush()?;
        return Ok(());
    }
    if a.doubled {
        check_capacity(2 * u.cols(), cap)?;
        let leaves = multiphoton_distribution(&u, true)?.map(Ok);
        return stream_amplitudes(&mut out, leaves, a.sort, None);
    }
    match a.engine {
        Engine::Loslap => stream_amplitudes(&mut out, Traversal::with_cap(&u, cap)?.into_leaves(), a.sort, None),
        engine => {
            let (mut amps, _, _) = run_engine(engine, &u, a.plan.as_deref(), cap)?;
            if a.sort {
                amps.sort_by(|x, y| x.0.cmp(&y.0));
            }
            write_amplitudes(&mut out, &amps)
        }
    }
}

fn iterate(a: IterateArgs) -> Outcome {
    let u = load_matrix(&a.source)?;
    let leaves = Traversal::with_cap(&u, memory_cap()?)?.into_leaves();
    let mut out = output::open(a.output.as_deref())?;
    stream_amplitudes(&mut out, leaves, false, a.limit)
}

fn lossy(a: LossyArgs) -> Outcome {
    let loss = LossModel::new(a.eta).map_err(|_| Failure::Invalid(format!("--eta {}: eta must lie in [0,1]", a.eta)))?;
    let u = load_matrix(&a.source)?;
    check_capacity(u.cols(), memory_cap()?)?;
    let mut out = output::open(a.output.as_deref())?;
    writeln!(out, "state,photons,probability")?;
    if a.sort {
        let mut rows = Vec::new();
        lossy_traverse(&u, loss, |occ, p| {
            rows.push((occ.iter().sum::<usize>(), occ.to_vec(), p));
            ControlFlow::Continue(())
        })?;
        rows.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
        for (photons, occ, p) in rows {
            writeln!(out, "{},{photons},{}", output::occupations(&occ), num(p))?;
        }
    } else {
        let mut failure = None;
        lossy_traverse(&u, loss, |occ, p| {
            let photons: usize = occ.iter().sum();
            match writeln!(out, "{},{photons},{}", output::occupations(occ), num(p)) {
                Ok(()) => ControlFlow::Continue(()),
                Err(e) => {
                    failure = Some(e);
                    ControlFlow::Break(())
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e.into());
        }
    }
    out.flush()?;
    Ok(())
}

fn adaptive(a: AdaptiveArgs) -> Outcome {
    let u = load_matrix(&a.source)?;
    let policy = AdaptivePolicy::load(&a.policy)
        .map_err(|e| Failure::Invalid(format!("--policy {}: {e}", a.policy.display())))?;
    let leaves = adaptive_traversal_with_cap(&policy, &u, memory_cap()?)?.into_leaves();
    let mut out = output::open(a.output.as_deref())?;
    stream_amplitudes(&mut out, leaves, a.sort, None)
}

fn steiner(command: SteinerCommand) -> Outcome {
    match command {
        SteinerCommand::Optimize { size, solver, output } => {
            let g = build_partition_graph(size.n, size.m)?;
            let plan = match solver {
                Solver::Exact => solve_exact(&g)?,
                Solver::Greedy => solve_greedy(&g),
                Solver::Full => full_plan(&g),
            };
            eprintln!(
                "classes {} of {}, flops {} of {}",
                plan.classes().count(),
                g.node_count(),
                plan.total_weight,
                g.full_weight()
            );
            let mut out = output::open(output.as_deref())?;
            writeln!(out, "{}", plan.to_json()?)?;
            out.flush()?;
        }
        SteinerCommand::Execute {
            source,
            plan,
            sort,
            output,
        } => {
            let u = load_matrix(&source)?;
            let (mut amps, _, _) = run_engine(Engine::SteinerPlan, &u, Some(&plan), memory_cap()?)?;
            if sort {
                amps.sort_by(|x, y| x.0.cmp(&y.0));
            }
            write_amplitudes(&mut *output::open(output.as_deref())?, &amps)?;
        }
        SteinerCommand::ExportStp { size, output } => {
            let g = build_partition_graph(size.n, size.m)?;
            let mut out = output::open(output.as_deref())?;
            out.write_all(export_stp(&g).as_bytes())?;
            out.flush()?;
        }
        SteinerCommand::Import {
            size,
            solution,
            output,
        } => {
            let g = build_partition_graph(size.n, size.m)?;
            let text = std::fs::read_to_string(&solution)
                .map_err(|e| Failure::Invalid(format!("--solution {}: {e}", solution.display())))?;
            let plan = import_solution(&g, &text)
                .map_err(|e| Failure::Invalid(format!("--solution {}: {e}", solution.display())))?;
            let mut out = output::open(output.as_deref())?;
            writeln!(out, "{}", plan.to_json()?)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cost(command: CostCommand) -> Outcome {
    let mut out = output::open(None)?;
    match command {
        CostCommand::Table { size } => out.write_all(cost_table_csv(size.n, size.m)?.as_bytes())?,
        CostCommand::Frontier { n_min, n_max, budget } => {
            if n_min == 0 || n_min > n_max {
                return invalid(format!("--n-min {n_min} and --n-max {n_max} must satisfy 1 <= n-min <= n-max"));
            }
            let budget = Budget::new(budget.memory_bytes, budget.flops_per_second, budget.wall_seconds)?;
            out.write_all(frontier_csv(n_min..=n_max, &budget).as_bytes())?;
        }
        CostCommand::Crossover {
            n,
            m_min,
            m_max,
            m_step,
            memory_bytes,
            regions,
        } => {
            if n == 0 || m_min == 0 || m_min > m_max || m_step == 0 {
                return invalid("need --n >= 1, 1 <= --m-min <= --m-max and --m-step >= 1");
            }
            let modes = (m_min..=m_max).step_by(m_step);
            if regions {
                out.write_all(region_csv(n, modes, memory_bytes).as_bytes())?;
            } else {
                let memory = memory_bytes.unwrap_or(DEFAULT_MEMORY_CAP_BYTES);
                writeln!(out, "m,crossover_mask,min_mask_for_memory,loslap_dominates")?;
                for m in modes {
                    let show = |k: Option<usize>| k.map_or_else(|| "infeasible".to_string(), |k| k.to_string());
                    writeln!(
                        out,
                        "{m},{},{},{}",
                        show(crossover_mask_size(n, m)),
                        show(min_mask_for_memory(n, m, memory)),
                        loslap_dominates(n, m, memory)
                    )?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn compare(a: CompareArgs) -> Outcome {
    let u = load_matrix(&a.source)?;
    let cap = memory_cap()?;
    let (ra, rb) = std::thread::scope(|s| {
        let first = s.spawn(|| run_engine(a.engine_a, &u, None, cap));
        let second = run_engine(a.engine_b, &u, None, cap);
        (first.join().expect("engine thread panicked"), second)
    });
    let (amps_a, flops_a, source_a) = ra?;
    let (amps_b, flops_b, source_b) = rb?;
    let map_b: BTreeMap<FockState, Complex64> = amps_b.into_iter().collect();
    if amps_a.len() != map_b.len() {
        return invalid(format!("engines produced {} and {} states", amps_a.len(), map_b.len()));
    }
    let mut diff: f64 = 0.0;
    for (s, x) in &amps_a {
        let y = map_b
            .get(s)
            .ok_or_else(|| Failure::Invalid(format!("state {s} missing from the second engine")))?;
        diff = diff.max((x - y).norm());
    }
    let name = |e: Engine| format!("{e:?}").to_lowercase().replace("steinerplan", "steiner-plan");
    let mut out = output::open(a.output.as_deref())?;
    writeln!(out, "metric,value")?;
    writeln!(out, "engine_a,{}", name(a.engine_a))?;
    writeln!(out, "flops_a,{flops_a}")?;
    writeln!(out, "flops_a_source,{source_a}")?;
    writeln!(out, "engine_b,{}", name(a.engine_b))?;
    writeln!(out, "flops_b,{flops_b}")?;
    writeln!(out, "flops_b_source,{source_b}")?;
    writeln!(out, "states,{}", amps_a.len())?;
    writeln!(out, "max_abs_diff,{}", num(diff))?;
    out.flush()?;
    Ok(())
}
