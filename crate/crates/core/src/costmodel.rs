//! Operation and memory counts for every simulation method, with the
//! budget and crossover solvers built on them.
//!
//! FLOPs count complex multiplications plus complex additions, so one
//! instrumented multiply-add is two FLOPs. Memory is counted in complex
//! slots of [`COMPLEX_BYTES`] bytes. Counts are exact big integers.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::combinatorics::binomial_big;
use crate::fock::FockStates;
use crate::{Error, Result, COMPLEX_BYTES, DEFAULT_MEMORY_CAP_BYTES};

fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

fn c(n: usize, k: usize) -> BigUint {
    binomial_big(n as u64, k as u64)
}

/// `2n * sum_{k=1..n} C(n-1, k-1) * C(m+k-1, m-1)`: every node of degree
/// `k` costs `2n * C(n-1, k-1)` and there are `C(m+k-1, k)` of them.
pub fn flops_loslap(n: usize, m: usize) -> BigUint {
    if n == 0 || m == 0 {
        return BigUint::zero();
    }
    let sum: BigUint = (1..=n).map(|k| c(n - 1, k - 1) * c(m + k - 1, m - 1)).sum();
    big(2 * n) * sum
}

/// `2n * C(n+m-1, n)`.
pub fn flops_slos(n: usize, m: usize) -> BigUint {
    if m == 0 {
        return BigUint::zero();
    }
    big(2 * n) * c(n + m - 1, n)
}

/// `n * C(2m+n-1, n)`, the per-state permanent cost summed over all
/// outputs with the `min(s_l + 1)` divisor dropped.
pub fn flops_permanent_all(n: usize, m: usize) -> BigUint {
    if m == 0 {
        return BigUint::zero();
    }
    big(n) * c(2 * m + n - 1, n)
}

/// `n * sum_s prod_j (s_j + 1) / min_{s_l != 0} (s_l + 1)`, enumerated
/// state by state. Exponential in the state count; for small sizes only.
pub fn flops_permanent_all_exact(n: usize, m: usize) -> BigUint {
    let mut sum = BigUint::zero();
    for occ in FockStates::new(m, n) {
        let prod: BigUint = occ.iter().map(|&s| big(s + 1)).product();
        let min = occ.iter().filter(|&&s| s != 0).map(|&s| s + 1).min().unwrap_or(1);
        sum += prod / big(min);
    }
    big(n) * sum
}

/// Total FLOPs of running masked SLOS for every mask on `k` of the `m`
/// modes: `sum_{s=1..n} sum_{d=s..n} 2s * C(n-d+k-a, n-d) * C(m, s) *
/// C(d-1, d-s)` with `a = 1` when `k = m` and `0` otherwise. `k = 0` is the
/// unmasked expansion.
pub fn flops_slos_mask(n: usize, m: usize, k: usize) -> BigUint {
    assert!(k <= m, "mask on {k} modes out of {m}");
    let alpha = usize::from(k == m && m > 0);
    let mut sum = BigUint::zero();
    for s in 1..=n.min(m) {
        let support = c(m, s);
        for d in s..=n {
            sum += big(2 * s) * c(n - d + k - alpha, n - d) * &support * c(d - 1, d - s);
        }
    }
    sum
}

/// Above this mask size the `ceil((1 + p/k)^k)` factor is evaluated in
/// floating point; the exact integer power grows as `k log k` bits.
const EXACT_POWER_LIMIT: usize = 1024;

/// `ceil((1 + p/k)^k)`.
fn submask_bound(p: usize, k: usize) -> BigUint {
    if p == 0 {
        return BigUint::one();
    }
    if k <= EXACT_POWER_LIMIT {
        let num = big(k + p).pow(k as u32);
        let den = big(k).pow(k as u32);
        let (q, r) = (&num / &den, &num % &den);
        return if r.is_zero() { q } else { q + 1u32 };
    }
    let x = (k as f64 * (p as f64 / k as f64).ln_1p()).exp();
    BigUint::from(x.ceil() as u64)
}

/// Peak states held by one masked SLOS call with a mask on `k` modes:
/// the maximum over mask photon counts `p` of
/// `ceil((1 + p/k)^k) * C(m-k+n-p, n-p)`, taking the submask product at
/// its upper bound. With `k = m` only `p = n` masks exist.
pub fn mem_slos_mask(n: usize, m: usize, k: usize) -> BigUint {
    assert!(k <= m, "mask on {k} modes out of {m}");
    if k == 0 {
        return mem_slos(n, m);
    }
    let ps = if k == m { n..=n } else { 0..=n };
    ps.map(|p| submask_bound(p, k) * c(m - k + n - p, n - p))
        .max()
        .unwrap_or_default()
}

/// Two consecutive expansion generations: `C(m+n-1, n) + C(m+n-2, n-1)`.
pub fn mem_slos(n: usize, m: usize) -> BigUint {
    if m == 0 {
        return BigUint::zero();
    }
    if n == 0 {
        return BigUint::one();
    }
    c(m + n - 1, n) + c(m + n - 2, n - 1)
}

/// `2^n` coefficients, independent of `m`.
pub fn mem_loslap(n: usize) -> BigUint {
    BigUint::one() << n
}

/// The matrix plus `n` running coefficients.
pub fn mem_permanent_all(n: usize, m: usize) -> BigUint {
    big(m) * big(m) + big(n)
}

/// A simulation method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    PermanentAll,
    Slos,
    /// Masked SLOS over every mask on this many modes.
    SlosMask(usize),
    Loslap,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::PermanentAll => f.write_str("permanent_all"),
            Method::Slos => f.write_str("slos"),
            Method::SlosMask(k) => write!(f, "slos_mask({k})"),
            Method::Loslap => f.write_str("loslap"),
        }
    }
}

/// Cost of one method at one size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostReport {
    pub method: Method,
    pub flops: BigUint,
    pub memory_complex_slots: BigUint,
}

impl CostReport {
    pub fn new(method: Method, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!("cost model needs n, m >= 1, got n={n} m={m}")));
        }
        let (flops, memory_complex_slots) = match method {
            Method::PermanentAll => (flops_permanent_all(n, m), mem_permanent_all(n, m)),
            Method::Slos => (flops_slos(n, m), mem_slos(n, m)),
            Method::SlosMask(k) => {
                if k == 0 || k > m {
                    return Err(Error::InvalidInput(format!("mask size must lie in [1, {m}], got {k}")));
                }
                (flops_slos_mask(n, m, k), mem_slos_mask(n, m, k))
            }
            Method::Loslap => (flops_loslap(n, m), mem_loslap(n)),
        };
        Ok(CostReport {
            method,
            flops,
            memory_complex_slots,
        })
    }

    pub fn memory_bytes(&self) -> BigUint {
        &self.memory_complex_slots * COMPLEX_BYTES
    }
}

/// Machine limits for feasibility questions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub memory_bytes: u64,
    pub flops_per_second: u64,
    pub wall_seconds: u64,
}

impl Budget {
    pub fn new(memory_bytes: u64, flops_per_second: u64, wall_seconds: u64) -> Result<Self> {
        if memory_bytes == 0 || flops_per_second == 0 || wall_seconds == 0 {
            return Err(Error::InvalidInput("budget fields must be positive".into()));
        }
        Ok(Budget {
            memory_bytes,
            flops_per_second,
            wall_seconds,
        })
    }

    /// 8 GiB, 1 GHz, one day.
    pub fn laptop_day() -> Self {
        Budget {
            memory_bytes: DEFAULT_MEMORY_CAP_BYTES,
            flops_per_second: 1_000_000_000,
            wall_seconds: 86_400,
        }
    }

    pub fn flops(&self) -> BigUint {
        BigUint::from(self.flops_per_second) * self.wall_seconds
    }

    pub fn memory_slots(&self) -> BigUint {
        BigUint::from(self.memory_bytes / COMPLEX_BYTES)
    }

    fn admits(&self, flops: &BigUint, slots: &BigUint) -> bool {
        *flops <= self.flops() && *slots <= self.memory_slots()
    }
}

/// Largest `m` at which `method` fits `budget` with `n` photons, 0 when
/// even `m = 1` does not. For [`Method::SlosMask`] the mask size is capped
/// at `m`.
pub fn max_modes_within_budget(method: Method, n: usize, budget: &Budget) -> u64 {
    max_modes_by(|m| {
        let m = m as usize;
        let method = match method {
            Method::SlosMask(k) => Method::SlosMask(k.clamp(1, m)),
            other => other,
        };
        let r = CostReport::new(method, n.max(1), m).expect("valid sizes");
        budget.admits(&r.flops, &r.memory_complex_slots)
    })
}

/// Like [`max_modes_within_budget`] for masked SLOS, choosing at every `m`
/// the smallest mask that fits in memory. Masked FLOPs never decrease with
/// the mask size, so that mask is also the fastest feasible one.
pub fn max_modes_slos_best_mask(n: usize, budget: &Budget) -> u64 {
    max_modes_by(|m| {
        let m = m as usize;
        match min_mask_for_memory(n, m, budget.memory_bytes) {
            Some(k) => flops_slos_mask(n, m, k) <= budget.flops(),
            None => false,
        }
    })
}

const MODE_SEARCH_LIMIT: u64 = 1 << 52;

/// Largest `m >= 1` with `feasible(m)`, assuming feasibility is monotone.
fn max_modes_by(feasible: impl Fn(u64) -> bool) -> u64 {
    if !feasible(1) {
        return 0;
    }
    let (mut lo, mut hi) = (1u64, 2u64);
    while feasible(hi) {
        lo = hi;
        if hi >= MODE_SEARCH_LIMIT {
            return hi;
        }
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest photon count for which `method` fits `budget` at `m = 1`.
pub fn max_photons_within_budget(method: Method, budget: &Budget) -> usize {
    let mut n = 0;
    while n < 256 && max_modes_within_budget(method, n + 1, budget) > 0 {
        n += 1;
    }
    n
}

/// Smallest mask size `k` in `[1, m]` whose masked SLOS costs at least as
/// much as the lattice traversal.
pub fn crossover_mask_size(n: usize, m: usize) -> Option<usize> {
    let target = flops_loslap(n, m);
    (1..=m).find(|&k| flops_slos_mask(n, m, k) >= target)
}

/// Smallest mask size `k` in `[1, m]` whose masked SLOS fits in
/// `memory_bytes`.
pub fn min_mask_for_memory(n: usize, m: usize, memory_bytes: u64) -> Option<usize> {
    let slots = BigUint::from(memory_bytes / COMPLEX_BYTES);
    // The empty mask term alone needs C(m-k+n, n) slots, so masks leaving
    // more than `reach` free modes are ruled out without evaluation.
    let (mut reach, mut hi) = (0usize, m + 1);
    while hi - reach > 1 {
        let mid = reach + (hi - reach) / 2;
        if c(mid + n, n) <= slots {
            reach = mid;
        } else {
            hi = mid;
        }
    }
    let start = m.saturating_sub(reach).max(1);
    (start..=m).find(|&k| mem_slos_mask(n, m, k) <= slots)
}

/// Which method is faster for one adaptive configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winner {
    /// Masked SLOS, run with this mask size.
    SlosMask(usize),
    Loslap,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::SlosMask(_) => f.write_str("slos_mask"),
            Winner::Loslap => f.write_str("loslap"),
        }
    }
}

/// Faster method for `k` adaptive measurements on `m` modes. With a
/// memory limit the mask grows to the smallest size that fits; if none
/// fits the traversal wins.
pub fn mask_winner(n: usize, m: usize, k: usize, memory_bytes: Option<u64>) -> Winner {
    let mask = match memory_bytes {
        None => k,
        Some(bytes) => match min_mask_for_memory(n, m, bytes) {
            Some(min) => k.max(min),
            None => return Winner::Loslap,
        },
    };
    if flops_slos_mask(n, m, mask) < flops_loslap(n, m) {
        Winner::SlosMask(mask)
    } else {
        Winner::Loslap
    }
}

/// True when the smallest mask that fits in memory is already past the
/// crossover, so the traversal wins for every adaptive measurement count.
pub fn loslap_dominates(n: usize, m: usize, memory_bytes: u64) -> bool {
    match (min_mask_for_memory(n, m, memory_bytes), crossover_mask_size(n, m)) {
        (_, None) => false,
        (None, Some(_)) => true,
        (Some(min), Some(cross)) => min > cross,
    }
}

/// CSV with one row per method: `n,m,method,flops,memory_slots,memory_bytes`.
/// Masked SLOS appears once per mask size.
pub fn cost_table_csv(n: usize, m: usize) -> Result<String> {
    let mut out = String::from("n,m,method,flops,memory_slots,memory_bytes\n");
    let methods = [Method::PermanentAll, Method::Slos]
        .into_iter()
        .chain((1..=m).map(Method::SlosMask))
        .chain([Method::Loslap]);
    for method in methods {
        let r = CostReport::new(method, n, m)?;
        let _ = writeln!(
            out,
            "{n},{m},{method},{},{},{}",
            r.flops,
            r.memory_complex_slots,
            r.memory_bytes()
        );
    }
    Ok(out)
}

/// Feasibility frontier: largest `m` per method for each photon count.
pub fn frontier_csv(photons: impl IntoIterator<Item = usize>, budget: &Budget) -> String {
    let mut out = String::from("n,permanent_all,slos,slos_best_mask,loslap\n");
    for n in photons {
        let _ = writeln!(
            out,
            "{n},{},{},{},{}",
            max_modes_within_budget(Method::PermanentAll, n, budget),
            max_modes_within_budget(Method::Slos, n, budget),
            max_modes_slos_best_mask(n, budget),
            max_modes_within_budget(Method::Loslap, n, budget),
        );
    }
    out
}

/// Region table over adaptive measurement counts: `m,k,mask_size,winner`,
/// where `mask_size` is the mask masked SLOS would run with (empty when it
/// cannot fit in memory).
pub fn region_csv(n: usize, modes: impl IntoIterator<Item = usize>, memory_bytes: Option<u64>) -> String {
    let mut out = String::from("m,k,mask_size,winner\n");
    for m in modes {
        let min = memory_bytes.map(|b| min_mask_for_memory(n, m, b));
        for k in 1..=m {
            let mask = match min {
                None => Some(k),
                Some(None) => None,
                Some(Some(min)) => Some(k.max(min)),
            };
            let winner = mask_winner(n, m, k, memory_bytes);
            let mask = mask.map(|k| k.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{m},{k},{mask},{winner}");
        }
    }
    out
}

/// Ratio of two counts as `f64`.
pub fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    let scale = a.bits().max(b.bits()).saturating_sub(60);
    let (a, b) = ((a >> scale).to_f64().unwrap_or(f64::NAN), (b >> scale).to_f64().unwrap_or(f64::NAN));
    a / b
}
