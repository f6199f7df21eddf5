//! Depth-first traversal of the lattice of partial derivatives.
//!
//! A node `x^s` of degree `k` stands for `d^k P / dx^s`, which is fully
//! described by the `C(n, k)` permanents
//! `Per(U[r_s, columns not in J])` for `|J| = n - k`. All of them live in
//! one vector of `2^n` coefficients indexed by the [`SubsetMask`] of `J`.
//! A child only writes the popcount band one below its parent, so the
//! bands of every ancestor on the current path stay intact and
//! backtracking is free.
//!
//! Children are explored in ascending mode order and a mode is pushed only
//! if it is not smaller than the current top of the stack, so every
//! monomial is reached by exactly one path.

use std::ops::ControlFlow;

use num_complex::Complex64;

use crate::bits::{Combinations, SubsetMask, MAX_SUBSET_BITS};
use crate::fock::FockState;
use crate::matrix::InterferometerMatrix;
use crate::{Error, Result, COMPLEX_BYTES, DEFAULT_MEMORY_CAP_BYTES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficient slots used by a traversal with `n` photons: `2^n`.
pub fn peak_memory_coefficients(n: usize) -> u128 {
    1u128 << n
}

/// Differentiates the node held in `v` by `x_mode`, writing the level
/// `level` band: for every `j` with `n - level` bits set,
/// `v[j] = sum_{p not in j} u[mode, p] * v[j | 1 << p]`.
///
/// Returns the number of complex multiply-adds, `level * C(n, level)`.
pub fn update_coefficients(
    u: &InterferometerMatrix,
    mode: usize,
    level: usize,
    v: &mut [Complex64],
) -> u64 {
    let n = u.cols();
    assert!(
        (1..=n).contains(&level),
        "level {level} outside 1..={n}"
    );
    debug_assert_eq!(v.len(), 1usize << n);
    let row = u.row(mode);
    let full = (1u64 << n) - 1;
    let mut count = 0u64;
    for j in Combinations::new(n, n - level) {
        let j = j.bits();
        let mut free = !j & full;
        let mut acc = ZERO;
        while free != 0 {
            let p = free.trailing_zeros();
            acc += row[p as usize] * v[(j | (1 << p)) as usize];
            free &= free - 1;
        }
        v[j as usize] = acc;
        count += level as u64;
    }
    count
}

/// Read-only view of one popcount band of the coefficient vector: the
/// coefficients of the current node.
#[derive(Clone, Copy, Debug)]
pub struct Band<'a> {
    values: &'a [Complex64],
    n: usize,
    weight: usize,
}

impl<'a> Band<'a> {
    pub(crate) fn new(values: &'a [Complex64], n: usize, level: usize) -> Self {
        Band {
            values,
            n,
            weight: n - level,
        }
    }

    /// Number of set bits shared by every index of the band.
    pub fn weight(&self) -> usize {
        self.weight
    }

    /// `Per(U[r_s, columns not in mask])`.
    pub fn get(&self, mask: SubsetMask) -> Complex64 {
        debug_assert_eq!(mask.len() as usize, self.weight);
        self.values[mask.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubsetMask, Complex64)> + 'a {
        let values = self.values;
        Combinations::new(self.n, self.weight).map(move |j| (j, values[j.index()]))
    }

    /// `sum |c|^2` over the band.
    pub fn norm_sqr_sum(&self) -> f64 {
        self.iter().map(|(_, c)| c.norm_sqr()).sum()
    }
}

/// One visited lattice node.
#[derive(Clone, Copy, Debug)]
pub struct Node<'a> {
    occupations: &'a [usize],
    stack: &'a [usize],
    band: Band<'a>,
}

impl<'a> Node<'a> {
    pub(crate) fn new(occupations: &'a [usize], stack: &'a [usize], band: Band<'a>) -> Self {
        Node {
            occupations,
            stack,
            band,
        }
    }

    pub fn occupations(&self) -> &'a [usize] {
        self.occupations
    }

    pub fn state(&self) -> FockState {
        FockState::new(self.occupations.to_vec())
    }

    /// Modes pushed on the path from the root, non-decreasing.
    pub fn stack(&self) -> &'a [usize] {
        self.stack
    }

    /// Degree of the monomial.
    pub fn level(&self) -> usize {
        self.stack.len()
    }

    /// Mode of the last differentiation.
    pub fn mode(&self) -> usize {
        *self.stack.last().expect("the root is never emitted")
    }

    pub fn is_leaf(&self) -> bool {
        self.band.weight == 0
    }

    pub fn band(&self) -> Band<'a> {
        self.band
    }

    /// Output amplitude `Per(U[r_s, :]) / sqrt(s!)`. Only meaningful at a leaf.
    pub fn amplitude(&self) -> Complex64 {
        debug_assert!(self.is_leaf());
        self.band.values[0] / crate::combinatorics::factorial_product(self.occupations).sqrt()
    }
}

/// Context handed to a [`PushHook`] before a pushed node is computed.
#[derive(Debug)]
pub struct Push<'a> {
    /// Stack including the mode just pushed.
    pub stack: &'a [usize],
    /// Occupations including the mode just pushed.
    pub occupations: &'a [usize],
}

/// Runs before each coefficient update and may replace the matrix used
/// for it and for every later update.
pub trait PushHook {
    fn before_update(&mut self, push: Push<'_>, matrix: &mut InterferometerMatrix) -> Result<()>;
}

/// Hook that leaves the matrix alone.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoHook;

impl PushHook for NoHook {
    #[inline]
    fn before_update(&mut self, _: Push<'_>, _: &mut InterferometerMatrix) -> Result<()> {
        Ok(())
    }
}

/// Totals collected over a traversal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub nodes: u64,
    pub leaves: u64,
    pub multiply_adds: u64,
    /// False when the visitor stopped the walk early.
    pub completed: bool,
}

impl TraversalStats {
    pub fn flops(&self) -> u64 {
        2 * self.multiply_adds
    }
}

/// Resumable depth-first walk. Each call to [`Traversal::step`] moves to
/// the next node in depth-first order and exposes it.
#[derive(Debug)]
pub struct Traversal<H = NoHook> {
    matrix: InterferometerMatrix,
    n: usize,
    m: usize,
    coefficients: Vec<Complex64>,
    stack: Vec<usize>,
    occupations: Vec<usize>,
    next: usize,
    hook: H,
    stats: TraversalStats,
}

impl Traversal<NoHook> {
    pub fn new(u: &InterferometerMatrix) -> Result<Self> {
        Self::with_hook(u, NoHook, DEFAULT_MEMORY_CAP_BYTES)
    }

    pub fn with_cap(u: &InterferometerMatrix, cap_bytes: u64) -> Result<Self> {
        Self::with_hook(u, NoHook, cap_bytes)
    }
}

/// Checks the photon count against the mask width and memory cap.
pub fn check_capacity(n: usize, cap_bytes: u64) -> Result<()> {
    if n > MAX_SUBSET_BITS {
        return Err(Error::InvalidInput(format!(
            "n = {n} exceeds the {MAX_SUBSET_BITS}-photon limit of the subset bitmask"
        )));
    }
    let required = peak_memory_coefficients(n) * COMPLEX_BYTES as u128;
    if required > cap_bytes as u128 {
        return Err(Error::Budget {
            what: format!("2^{n} traversal coefficients"),
            required,
            cap: cap_bytes,
            unit: "bytes",
        });
    }
    Ok(())
}

impl<H: PushHook> Traversal<H> {
    pub fn with_hook(u: &InterferometerMatrix, hook: H, cap_bytes: u64) -> Result<Self> {
        let (m, n) = (u.rows(), u.cols());
        check_capacity(n, cap_bytes)?;
        let mut coefficients = vec![ZERO; 1usize << n];
        coefficients[(1usize << n) - 1] = Complex64::new(1.0, 0.0);
        Ok(Traversal {
            matrix: u.clone(),
            n,
            m,
            coefficients,
            stack: Vec::with_capacity(n),
            occupations: vec![0; m],
            next: 0,
            hook,
            stats: TraversalStats::default(),
        })
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    /// Length of the coefficient vector, always `2^n`.
    pub fn coefficient_slots(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Matrix used by the most recent update.
    pub fn matrix(&self) -> &InterferometerMatrix {
        &self.matrix
    }

    pub fn stats(&self) -> TraversalStats {
        self.stats
    }

    pub fn hook(&self) -> &H {
        &self.hook
    }

    pub fn into_hook(self) -> H {
        self.hook
    }

    /// Advances to the next node, or returns `None` once every node has
    /// been visited.
    pub fn step(&mut self) -> Result<Option<Node<'_>>> {
        loop {
            if self.stack.len() == self.n || self.next >= self.m {
                let Some(top) = self.stack.pop() else {
                    self.stats.completed = true;
                    return Ok(None);
                };
                self.occupations[top] -= 1;
                self.next = top + 1;
                continue;
            }
            let mode = self.next;
            self.stack.push(mode);
            self.occupations[mode] += 1;
            let push = Push {
                stack: &self.stack,
                occupations: &self.occupations,
            };
            self.hook.before_update(push, &mut self.matrix)?;
            let level = self.stack.len();
            self.stats.multiply_adds +=
                update_coefficients(&self.matrix, mode, level, &mut self.coefficients);
            self.stats.nodes += 1;
            if level == self.n {
                self.stats.leaves += 1;
            }
            return Ok(Some(Node {
                occupations: &self.occupations,
                stack: &self.stack,
                band: Band::new(&self.coefficients, self.n, level),
            }));
        }
    }

    /// Turns the walk into a stream of leaf amplitudes.
    pub fn into_leaves(self) -> Leaves<H> {
        Leaves {
            inner: self,
            failed: false,
        }
    }

    /// Visits every remaining node until `visitor` breaks.
    pub fn run<F>(&mut self, mut visitor: F) -> Result<TraversalStats>
    where
        F: FnMut(&Node<'_>) -> ControlFlow<()>,
    {
        while let Some(node) = self.step()? {
            if visitor(&node).is_break() {
                return Ok(self.stats);
            }
        }
        Ok(self.stats)
    }
}

/// Leaf amplitudes of a hooked traversal. Stops after the first error.
#[derive(Debug)]
pub struct Leaves<H> {
    inner: Traversal<H>,
    failed: bool,
}

impl<H: PushHook> Leaves<H> {
    pub fn stats(&self) -> TraversalStats {
        self.inner.stats()
    }
}

impl<H: PushHook> Iterator for Leaves<H> {
    type Item = Result<(FockState, Complex64)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            match self.inner.step() {
                Ok(Some(node)) if node.is_leaf() => {
                    return Some(Ok((node.state(), node.amplitude())))
                }
                Ok(Some(_)) => {}
                Ok(None) => return None,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Visits every node of the lattice for the input `|1,...,1>` on the
/// columns of `u`, root excluded.
pub fn traverse<F>(u: &InterferometerMatrix, visitor: F) -> Result<TraversalStats>
where
    F: FnMut(&Node<'_>) -> ControlFlow<()>,
{
    Traversal::new(u)?.run(visitor)
}

/// Lazy stream of output amplitudes in depth-first leaf order.
pub fn iterate_amplitudes(u: &InterferometerMatrix) -> Result<Amplitudes> {
    Ok(Amplitudes {
        inner: Traversal::new(u)?,
    })
}

/// Iterator returned by [`iterate_amplitudes`].
#[derive(Debug)]
pub struct Amplitudes {
    inner: Traversal<NoHook>,
}

impl Amplitudes {
    pub fn stats(&self) -> TraversalStats {
        self.inner.stats()
    }
}

impl Iterator for Amplitudes {
    type Item = (FockState, Complex64);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let node = self.inner.step().expect("plain traversal cannot fail")?;
            if node.is_leaf() {
                return Some((node.state(), node.amplitude()));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::binomial;
    use crate::fock::ModeAssignment;
    use crate::haar_random_unitary;
    use crate::permanent::{full_distribution_naive, permanent, repeated_submatrix};
    use std::collections::HashMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_photon_updates() {
        let u = haar_random_unitary(3, 4).truncate_columns(2).unwrap();
        let mut v = vec![ZERO; 4];
        v[3] = c(1.0, 0.0);
        let (i, q) = (1, 2);
        assert_eq!(update_coefficients(&u, i, 1, &mut v), 2);
        assert_eq!(v[0b10], u.get(i, 0));
        assert_eq!(v[0b01], u.get(i, 1));
        assert_eq!(update_coefficients(&u, q, 2, &mut v), 2);
        let expect = u.get(i, 0) * u.get(q, 1) + u.get(i, 1) * u.get(q, 0);
        assert!((v[0] - expect).norm() < 1e-15);
        assert_eq!(v[3], c(1.0, 0.0));
    }

    #[test]
    fn three_by_three_event_counts() {
        let u = haar_random_unitary(3, 1);
        let mut order = Vec::new();
        let stats = traverse(&u, |node| {
            order.push(node.stack().to_vec());
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(stats.nodes, 19);
        assert_eq!(stats.leaves, 10);
        assert!(stats.completed);
        // Depth-first with ascending children.
        let expect: Vec<Vec<usize>> = vec![
            vec![0], vec![0, 0], vec![0, 0, 0], vec![0, 0, 1], vec![0, 0, 2],
            vec![0, 1], vec![0, 1, 1], vec![0, 1, 2], vec![0, 2], vec![0, 2, 2],
            vec![1], vec![1, 1], vec![1, 1, 1], vec![1, 1, 2], vec![1, 2], vec![1, 2, 2],
            vec![2], vec![2, 2], vec![2, 2, 2],
        ];
        assert_eq!(order, expect);
    }

    #[test]
    fn single_photon() {
        let u = haar_random_unitary(2, 3).truncate_columns(1).unwrap();
        let mut seen = Vec::new();
        traverse(&u, |node| {
            seen.push((node.mode(), node.band().get(SubsetMask::EMPTY)));
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(seen, vec![(0, u.get(0, 0)), (1, u.get(1, 0))]);
    }

    #[test]
    fn every_band_entry_is_a_permanent() {
        for (m, n) in [(3, 3), (4, 4), (5, 3), (6, 2)] {
            let u = haar_random_unitary(m, 11).truncate_columns(n).unwrap();
            traverse(&u, |node| {
                let rows = node.state().to_assignment();
                for (j, value) in node.band().iter() {
                    let cols = ModeAssignment::new(j.complement(n).columns().collect());
                    let per = permanent(&repeated_submatrix(&u, &rows, &cols).unwrap());
                    assert!((value - per).norm() < 1e-10, "{:?} {j:?}", node.stack());
                }
                ControlFlow::Continue(())
            })
            .unwrap();
        }
    }

    #[test]
    fn ancestors_survive_backtracking() {
        let u = haar_random_unitary(4, 2).truncate_columns(3).unwrap();
        let mut t = Traversal::new(&u).unwrap();
        let mut saved: HashMap<Vec<usize>, Vec<Complex64>> = HashMap::new();
        while let Some(node) = t.step().unwrap() {
            let key = node.stack().to_vec();
            let band: Vec<_> = node.band().iter().map(|(_, c)| c).collect();
            // Every prefix of the current path must still hold its band.
            for len in 1..key.len() {
                let prefix = &key[..len];
                let old = &saved[prefix];
                let now: Vec<_> = Band::new(t_coeffs(&node), 3, len).iter().map(|(_, c)| c).collect();
                assert_eq!(old, &now, "{prefix:?}");
            }
            saved.insert(key, band);
        }
    }

    fn t_coeffs<'a>(node: &Node<'a>) -> &'a [Complex64] {
        node.band.values
    }

    #[test]
    fn hom_and_identity() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = InterferometerMatrix::from_rows(vec![vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]])
            .unwrap();
        let out: HashMap<_, _> = iterate_amplitudes(&u).unwrap().collect();
        assert!((out[&FockState::new(vec![2, 0])] - c(0.0, h)).norm() < 1e-15);
        assert!(out[&FockState::new(vec![1, 1])].norm() < 1e-15);
        assert!((out[&FockState::new(vec![0, 2])] - c(0.0, h)).norm() < 1e-15);

        for (s, a) in iterate_amplitudes(&InterferometerMatrix::identity(3)).unwrap() {
            let expect = if s.occupations() == [1, 1, 1] { 1.0 } else { 0.0 };
            assert!((a - c(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_oracle_and_counts_operations() {
        for m in 1..=6 {
            for n in 1..=5 {
                let u = haar_random_unitary(m.max(n), 5).truncate_columns(n).unwrap();
                let u = if m < n {
                    // More photons than modes: keep m rows of a wider unitary.
                    let rows: Vec<_> = (0..m).map(|i| u.row(i).to_vec()).collect();
                    InterferometerMatrix::from_rows(rows).unwrap()
                } else {
                    u
                };
                let naive: HashMap<_, _> = full_distribution_naive(&u).collect();
                let mut amps = iterate_amplitudes(&u).unwrap();
                let mut count = 0;
                for (s, a) in amps.by_ref() {
                    assert!((a - naive[&s]).norm() < 1e-10);
                    count += 1;
                }
                assert_eq!(count, naive.len());
                let expect: u128 = (1..=n as u64)
                    .map(|k| {
                        n as u128
                            * binomial(n as u64 - 1, k - 1).unwrap()
                            * binomial(m as u64 + k - 1, m as u64 - 1).unwrap()
                    })
                    .sum();
                assert_eq!(amps.stats().multiply_adds as u128, expect, "m={m} n={n}");
                assert_eq!(amps.stats().nodes as u128, binomial((n + m) as u64, n as u64).unwrap() - 1);
            }
        }
    }

    #[test]
    fn visitor_can_stop() {
        let u = haar_random_unitary(4, 0).truncate_columns(3).unwrap();
        let mut seen = 0;
        let stats = traverse(&u, |_| {
            seen += 1;
            if seen == 5 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert_eq!(stats.nodes, 5);
        assert!(!stats.completed);
    }

    #[test]
    fn capacity_limits() {
        assert_eq!(peak_memory_coefficients(0), 1);
        assert_eq!(peak_memory_coefficients(10), 1024);
        assert_eq!(peak_memory_coefficients(29) * 16, 8 << 30);
        assert!(check_capacity(29, DEFAULT_MEMORY_CAP_BYTES).is_ok());
        assert!(matches!(check_capacity(30, DEFAULT_MEMORY_CAP_BYTES), Err(Error::Budget { .. })));
        assert!(matches!(check_capacity(64, u64::MAX), Err(Error::InvalidInput(_))));
        let u = haar_random_unitary(4, 0).truncate_columns(4).unwrap();
        assert_eq!(Traversal::new(&u).unwrap().coefficient_slots(), 16);
    }

    #[test]
    fn deterministic() {
        let u = haar_random_unitary(5, 8).truncate_columns(4).unwrap();
        let a: Vec<_> = iterate_amplitudes(&u).unwrap().collect();
        let b: Vec<_> = iterate_amplitudes(&u).unwrap().collect();
        assert_eq!(a, b);
    }
}
