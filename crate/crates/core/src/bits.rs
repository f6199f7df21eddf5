//! Column subsets encoded as bitmasks.
//!
//! Bit `p` of a mask is set when column `p` (0-based) still belongs to the
//! set `J` of product factors that have not been differentiated away. The
//! all-ones mask is the root of the derivative lattice, mask `0` a leaf.

use std::fmt;

/// Largest supported photon count: masks live in a `u64` and the top bit is
/// kept free so that `1 << n` never overflows.
pub const MAX_SUBSET_BITS: usize = 63;

/// A subset of the `n` input columns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetMask(pub u64);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    /// Mask with the lowest `n` bits set.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_SUBSET_BITS);
        SubsetMask((1u64 << n) - 1)
    }

    pub fn from_columns(columns: impl IntoIterator<Item = usize>) -> Self {
        SubsetMask(columns.into_iter().fold(0, |acc, c| acc | (1 << c)))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, column: usize) -> bool {
        self.0 >> column & 1 == 1
    }

    /// Columns in ascending order.
    pub fn columns(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let p = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(p)
            }
        })
    }

    /// Complement within `n` columns.
    #[inline]
    pub fn complement(self, n: usize) -> Self {
        SubsetMask(self.0 ^ ((1u64 << n) - 1))
    }
}

impl fmt::Binary for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Binary::fmt(&self.0, f)
    }
}

/// Smallest integer greater than `j` with the same number of set bits
/// (Gosper's hack). `j` must be non-zero.
#[inline]
pub fn next_combination(j: u64) -> u64 {
    debug_assert!(j != 0);
    let t = j | j.wrapping_sub(1);
    let lowest_clear = !t & t.wrapping_add(1);
    t.wrapping_add(1) | (lowest_clear.wrapping_sub(1) >> (j.trailing_zeros() + 1))
}

/// All masks over `n` bits with exactly `weight` bits set, in increasing order.
#[derive(Clone, Debug)]
pub struct Combinations {
    next: Option<u64>,
    limit: u64,
}

impl Combinations {
    pub fn new(n: usize, weight: usize) -> Self {
        assert!(n <= MAX_SUBSET_BITS, "at most {MAX_SUBSET_BITS} columns");
        let next = (weight <= n).then(|| (1u64 << weight) - 1);
        Combinations {
            next,
            limit: 1u64 << n,
        }
    }
}

impl Iterator for Combinations {
    type Item = SubsetMask;

    fn next(&mut self) -> Option<SubsetMask> {
        let j = self.next?;
        self.next = if j == 0 {
            None
        } else {
            let succ = next_combination(j);
            (succ < self.limit).then_some(succ)
        };
        Some(SubsetMask(j))
    }
}
