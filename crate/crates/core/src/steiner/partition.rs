//! Integer partitions labelling classes of monomials.

use std::fmt;
use std::str::FromStr;

use crate::combinatorics::binomial;
use crate::{Error, Result};

/// Exponent multiset of a monomial with the variables forgotten, stored as
/// a non-increasing list of positive parts.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition(Vec<usize>);

impl Partition {
    pub const EMPTY: Partition = Partition(Vec::new());

    /// Sorts `parts` and drops zeros.
    pub fn new(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    /// The empty partition, label of the lattice root.
    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    /// Class of the monomial with exponents `occupations`.
    pub fn of_occupations(occupations: &[usize]) -> Self {
        Self::new(occupations.to_vec())
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    /// Degree `k` of the monomials in the class.
    pub fn level(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of parts, i.e. of distinct variables in each monomial.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Partitions reached by raising one part by one or appending a part 1,
    /// ascending and without repeats.
    pub fn children(&self) -> Vec<Partition> {
        let mut out: Vec<Partition> = Vec::with_capacity(self.0.len() + 1);
        for (i, &p) in self.0.iter().enumerate() {
            // Raising the first of a run of equal parts keeps the order.
            if i > 0 && self.0[i - 1] == p {
                continue;
            }
            let mut parts = self.0.clone();
            parts[i] += 1;
            out.push(Partition(parts));
        }
        let mut parts = self.0.clone();
        parts.push(1);
        out.push(Partition(parts));
        out.sort();
        out
    }

    /// If `child` is `self` with one part `e - 1` raised to `e` (a new part
    /// when `e = 1`), returns `e`.
    pub fn raised_exponent(&self, child: &Partition) -> Option<usize> {
        if child.level() != self.level() + 1 {
            return None;
        }
        // Merge the two descending lists, keeping unmatched parts.
        let (mut a, mut b) = (0, 0);
        let (mut only_child, mut only_self) = (Vec::new(), Vec::new());
        while a < child.0.len() || b < self.0.len() {
            match (child.0.get(a), self.0.get(b)) {
                (Some(x), Some(y)) if x == y => {
                    a += 1;
                    b += 1;
                }
                (Some(&x), Some(&y)) if x > y => {
                    only_child.push(x);
                    a += 1;
                }
                (Some(&x), None) => {
                    only_child.push(x);
                    a += 1;
                }
                (_, Some(&y)) => {
                    only_self.push(y);
                    b += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        match (only_child.as_slice(), only_self.as_slice()) {
            ([e], []) if *e == 1 => Some(1),
            ([e], [d]) if *e == d + 1 => Some(*e),
            _ => None,
        }
    }

    /// Monomials over `m` variables in the class:
    /// `m! / ((m - len)! * prod_v mult_v!)`. Zero when there are more parts
    /// than variables, `None` on overflow.
    pub fn class_size(&self, m: usize) -> Option<u128> {
        if self.0.len() > m {
            return Some(0);
        }
        let mut free = m as u64;
        let mut acc: u128 = 1;
        for run in self.0.chunk_by(|a, b| a == b) {
            let mult = run.len() as u64;
            acc = acc.checked_mul(binomial(free, mult)?)?;
            free -= mult;
        }
        Some(acc)
    }
}

/// All partitions of `k`, ascending lexicographically.
pub fn partitions_of(k: usize) -> Vec<Partition> {
    fn go(rest: usize, max_part: usize, prefix: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        for p in 1..=rest.min(max_part) {
            prefix.push(p);
            go(rest - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(k, k, &mut Vec::new(), &mut out);
    out
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Accepts `(2,1)`, `2,1`, `()` and the empty string.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(inner)
            .trim();
        if inner.is_empty() {
            return Ok(Partition::empty());
        }
        let parts = inner
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(0) | Err(_) => Err(Error::Parse(format!("bad partition part {t:?} in {s:?}"))),
                Ok(p) => Ok(p),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition::new(parts))
    }
}
