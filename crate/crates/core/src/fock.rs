//! Fock states, mode assignments and the enumeration order of output states.
//!
//! States are enumerated in ascending lexicographic order of their
//! occupation vectors, so for two photons in two modes the order is
//! `|0,2>`, `|1,1>`, `|2,0>`. [`FockIndexer`] ranks a state within that order
//! without materialising the list.

use std::fmt;
use std::str::FromStr;

use crate::combinatorics::{binomial, factorial_product};
use crate::{Error, Result};

/// Occupation numbers `|s_1, ..., s_m>` over `m` modes.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        FockState(occupations)
    }

    pub fn vacuum(modes: usize) -> Self {
        FockState(vec![0; modes])
    }

    /// `|1,...,1,0,...,0>` with `n` photons in the first `n` of `m` modes.
    pub fn first_modes(n: usize, modes: usize) -> Self {
        let mut occ = vec![0; modes];
        occ[..n].fill(1);
        FockState(occ)
    }

    #[inline]
    pub fn modes(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn into_occupations(self) -> Vec<usize> {
        self.0
    }

    #[inline]
    pub fn photon_count(&self) -> usize {
        self.0.iter().sum()
    }

    /// Sorted list of modes, one entry per photon.
    pub fn to_assignment(&self) -> ModeAssignment {
        ModeAssignment(
            self.0
                .iter()
                .enumerate()
                .flat_map(|(mode, &count)| std::iter::repeat_n(mode, count))
                .collect(),
        )
    }

    /// `sqrt(prod_i s_i!)`.
    pub fn normalization_factor(&self) -> f64 {
        factorial_product(&self.0).sqrt()
    }

    /// Occupations restricted to `modes`, in the given order.
    pub fn restrict(&self, modes: &[usize]) -> FockState {
        FockState(modes.iter().map(|&i| self.0[i]).collect())
    }
}

impl From<Vec<usize>> for FockState {
    fn from(v: Vec<usize>) -> Self {
        FockState(v)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for FockState {
    type Err = Error;

    /// Parses comma-separated occupations such as `0,2,1,0,1`. The empty
    /// string is the state over zero modes.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(FockState(Vec::new()));
        }
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad occupation {t:?} in {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(FockState)
    }
}

/// Output mode of every photon, stored non-decreasing and 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ModeAssignment(Vec<usize>);

impl ModeAssignment {
    /// Sorts the given modes.
    pub fn new(mut modes: Vec<usize>) -> Self {
        modes.sort_unstable();
        ModeAssignment(modes)
    }

    pub fn modes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inverse of [`FockState::to_assignment`].
    pub fn to_fock(&self, modes: usize) -> Result<FockState> {
        let mut occ = vec![0; modes];
        for &i in &self.0 {
            *occ.get_mut(i).ok_or_else(|| {
                Error::InvalidInput(format!("mode {i} out of range for {modes} modes"))
            })? += 1;
        }
        Ok(FockState(occ))
    }
}

/// Number of `n`-photon states over `m` modes, `C(n+m-1, n)`.
pub fn fock_state_count(m: usize, n: usize) -> Result<usize> {
    if m == 0 {
        return Ok(usize::from(n == 0));
    }
    binomial((n + m - 1) as u64, n as u64)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| Error::SizeOverflow(format!("C({}, {n}) states for m={m}, n={n}", n + m - 1)))
}

/// All `n`-photon states over `m` modes in ascending lexicographic order.
pub fn enumerate_fock_states(m: usize, n: usize) -> Result<Vec<FockState>> {
    if m == 0 {
        return Err(Error::InvalidInput("need at least one mode".into()));
    }
    let count = fock_state_count(m, n)?;
    let mut out = Vec::new();
    out.try_reserve_exact(count)
        .map_err(|_| Error::SizeOverflow(format!("{count} states for m={m}, n={n}")))?;
    out.extend(FockStates::new(m, n).map(FockState));
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// Lazy lexicographic enumeration of occupation vectors with fixed sum.
#[derive(Clone, Debug)]
pub struct FockStates {
    current: Option<Vec<usize>>,
}

impl FockStates {
    pub fn new(m: usize, n: usize) -> Self {
        let current = (m > 0).then(|| {
            let mut v = vec![0; m];
            v[m - 1] = n;
            v
        });
        FockStates { current }
    }
}

/// Advances `occ` to its lexicographic successor with the same sum.
/// Returns `false` when `occ` was the last state.
pub fn advance_state(occ: &mut [usize]) -> bool {
    let m = occ.len();
    let Some(q) = occ.iter().rposition(|&x| x > 0) else {
        return false;
    };
    if q == 0 {
        return false;
    }
    let tail = occ[q];
    occ[q - 1] += 1;
    occ[q] = 0;
    occ[m - 1] = tail - 1;
    true
}

impl Iterator for FockStates {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let mut succ = cur.clone();
        if advance_state(&mut succ) {
            self.current = Some(succ);
        }
        Some(cur)
    }
}

/// Ranks states within the lexicographic enumeration of their photon count.
#[derive(Clone, Debug)]
pub struct FockIndexer {
    m: usize,
    max_photons: usize,
    // counts[r][p] = number of states with p photons over r modes.
    counts: Vec<Vec<usize>>,
}

impl FockIndexer {
    /// Indexer for states over `m` modes with at most `max_photons` photons.
    pub fn new(m: usize, max_photons: usize) -> Result<Self> {
        let mut counts = vec![vec![0usize; max_photons + 1]; m + 1];
        counts[0][0] = 1;
        for (r, row) in counts.iter_mut().enumerate().skip(1) {
            for (p, c) in row.iter_mut().enumerate() {
                *c = fock_state_count(r, p)?;
            }
        }
        Ok(FockIndexer {
            m,
            max_photons,
            counts,
        })
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    /// Number of states with `photons` photons.
    pub fn level_size(&self, photons: usize) -> usize {
        self.counts[self.m][photons]
    }

    /// Position of `occ` in `enumerate_fock_states(m, sum(occ))`.
    pub fn rank(&self, occ: &[usize]) -> usize {
        debug_assert_eq!(occ.len(), self.m);
        let mut remaining: usize = occ.iter().sum();
        debug_assert!(remaining <= self.max_photons);
        let mut rank = 0;
        for (i, &s) in occ.iter().enumerate().take(self.m.saturating_sub(1)) {
            let rest = self.m - i - 1;
            // States sharing the prefix but with a smaller value at i place
            // remaining - v photons on the last `rest` modes for every v < s.
            for v in 0..s {
                rank += self.counts[rest][remaining - v];
            }
            remaining -= s;
        }
        rank
    }
}
