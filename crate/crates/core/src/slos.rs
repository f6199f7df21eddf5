//! Polynomial expansion baselines.
//!
//! [`slos_full`] multiplies out `P = P_1 P_2 ... P_n` one factor at a time,
//! keeping two consecutive partial polynomials as dense arrays. The
//! coefficient of `x^s` in `P` times `sqrt(s!)` is the output amplitude.
//!
//! [`slos_masked`] only keeps intermediate monomials that can still grow into
//! an output matching a [`Mask`]. Iterating over every mask on a fixed set
//! of modes ([`slos_all_masks`]) recovers the full distribution with a
//! smaller memory footprint.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::combinatorics::binomial;
use crate::fock::{advance_state, FockIndexer, FockState, FockStates};
use crate::matrix::InterferometerMatrix;
use crate::{Error, Result, COMPLEX_BYTES, DEFAULT_MEMORY_CAP_BYTES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes produced by an expansion together with its operation counts.
#[derive(Clone, Debug, Default)]
pub struct Expansion {
    /// Output states and amplitudes in ascending lexicographic order.
    pub amplitudes: Vec<(FockState, Complex64)>,
    /// Complex multiply-add pairs performed.
    pub multiply_adds: u64,
    /// Intermediate monomials created over all degrees, vacuum included.
    pub states_generated: u64,
    /// Largest number of coefficients held at once.
    pub peak_coefficients: u64,
}

impl Expansion {
    /// Complex operations, counting a multiplication and an addition
    /// separately.
    pub fn flops(&self) -> u64 {
        2 * self.multiply_adds
    }
}

/// Occupation pattern imposed on a subset of modes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    modes: Vec<usize>,
    occupations: Vec<usize>,
}

impl Mask {
    pub fn new(modes: Vec<usize>, occupations: Vec<usize>) -> Result<Self> {
        if modes.len() != occupations.len() {
            return Err(Error::InvalidInput(format!(
                "mask lists {} modes but {} occupations",
                modes.len(),
                occupations.len()
            )));
        }
        let mut sorted = modes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("mask modes must be distinct".into()));
        }
        Ok(Mask { modes, occupations })
    }

    /// The mask on no modes, matched by every output.
    pub fn empty() -> Self {
        Mask {
            modes: Vec::new(),
            occupations: Vec::new(),
        }
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn occupations(&self) -> &[usize] {
        &self.occupations
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn photon_count(&self) -> usize {
        self.occupations.iter().sum()
    }

    pub fn matches(&self, occ: &[usize]) -> bool {
        self.modes
            .iter()
            .zip(&self.occupations)
            .all(|(&i, &t)| occ[i] == t)
    }

    /// Whether a degree-`d` monomial can still grow into a matching
    /// `n`-photon output.
    fn can_reach(&self, occ: &[usize], d: usize, n: usize) -> bool {
        let mut deficit = 0;
        for (&i, &t) in self.modes.iter().zip(&self.occupations) {
            if occ[i] > t {
                return false;
            }
            deficit += t - occ[i];
        }
        deficit <= n - d
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        if let Some(&i) = self.modes.iter().find(|&&i| i >= m) {
            return Err(Error::InvalidInput(format!("mask mode {i} out of range for {m} modes")));
        }
        if self.photon_count() > n {
            return Err(Error::InvalidInput(format!(
                "mask holds {} photons but only {n} are injected",
                self.photon_count()
            )));
        }
        Ok(())
    }
}

/// Every mask on `modes` that some `n`-photon output can match: totals in
/// `0..=n`, or exactly `n` when `covers_all_modes` leaves no other mode to
/// hold the rest. Ordered by total, then lexicographically.
pub fn enumerate_masks(modes: &[usize], n: usize, covers_all_modes: bool) -> Vec<Mask> {
    let k = modes.len();
    let totals = if covers_all_modes { n..=n } else { 0..=n };
    if k == 0 {
        return if totals.contains(&0) { vec![Mask::empty()] } else { Vec::new() };
    }
    totals
        .flat_map(|p| FockStates::new(k, p))
        .map(|occ| Mask {
            modes: modes.to_vec(),
            occupations: occ,
        })
        .collect()
}

fn check_budget(what: &str, slots: u128, cap_bytes: u64) -> Result<()> {
    let required = slots.saturating_mul(COMPLEX_BYTES as u128);
    if required > cap_bytes as u128 {
        return Err(Error::Budget {
            what: what.into(),
            required,
            cap: cap_bytes,
            unit: "bytes",
        });
    }
    Ok(())
}

/// Full expansion under the default memory cap.
pub fn slos_full(u: &InterferometerMatrix) -> Result<Expansion> {
    slos_full_with_cap(u, DEFAULT_MEMORY_CAP_BYTES)
}

/// Full expansion; refuses before allocating when the two live
/// generations would exceed `cap_bytes`.
pub fn slos_full_with_cap(u: &InterferometerMatrix, cap_bytes: u64) -> Result<Expansion> {
    let (m, n) = (u.rows(), u.cols());
    let last = binomial((m + n - 1) as u64, n as u64);
    let before = binomial((m + n - 2) as u64, (n - 1) as u64);
    let slots = last
        .zip(before)
        .and_then(|(a, b)| a.checked_add(b))
        .ok_or_else(|| Error::SizeOverflow(format!("SLOS storage for m={m}, n={n}")))?;
    check_budget("SLOS coefficient storage", slots, cap_bytes)?;

    let indexer = FockIndexer::new(m, n)?;
    let mut current = vec![Complex64::new(1.0, 0.0)];
    let mut multiply_adds = 0u64;
    let mut states_generated = 1u64;
    let mut peak = 1u64;
    let mut occ = vec![0usize; m];
    for d in 0..n {
        let mut next = vec![ZERO; indexer.level_size(d + 1)];
        peak = peak.max((current.len() + next.len()) as u64);
        occ.fill(0);
        occ[m - 1] = d;
        for &c in &current {
            for i in 0..m {
                occ[i] += 1;
                next[indexer.rank(&occ)] += c * u.get(i, d);
                occ[i] -= 1;
            }
            multiply_adds += m as u64;
            advance_state(&mut occ);
        }
        states_generated += next.len() as u64;
        current = next;
    }
    let amplitudes = FockStates::new(m, n)
        .zip(current)
        .map(|(occ, c)| {
            let s = FockState::new(occ);
            let amp = c * s.normalization_factor();
            (s, amp)
        })
        .collect();
    Ok(Expansion {
        amplitudes,
        multiply_adds,
        states_generated,
        peak_coefficients: peak,
    })
}

/// Expansion restricted to outputs matching `mask`, under the default cap.
pub fn slos_masked(u: &InterferometerMatrix, mask: &Mask) -> Result<Expansion> {
    slos_masked_with_cap(u, mask, DEFAULT_MEMORY_CAP_BYTES)
}

/// Expansion restricted to outputs matching `mask`.
///
/// Each surviving monomial of degree `d + 1` pulls from its parents, one
/// multiply-add per nonzero exponent. Parents of survivors always survive.
pub fn slos_masked_with_cap(
    u: &InterferometerMatrix,
    mask: &Mask,
    cap_bytes: u64,
) -> Result<Expansion> {
    let (m, n) = (u.rows(), u.cols());
    mask.validate(m, n)?;
    let slots = mask_parent_count(mask, m, n)
        .ok_or_else(|| Error::SizeOverflow(format!("masked storage for m={m}, n={n}")))?;
    check_budget("masked SLOS coefficient storage", slots, cap_bytes)?;

    let mut out = Expansion::default();
    let vacuum = vec![0usize; m];
    if !mask.can_reach(&vacuum, 0, n) {
        return Ok(out);
    }
    let mut current: HashMap<Vec<usize>, Complex64> = HashMap::from([(vacuum, Complex64::new(1.0, 0.0))]);
    out.states_generated = 1;
    out.peak_coefficients = 1;
    for d in 0..n {
        // Children in a deterministic order so sums are reproducible.
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut parents: Vec<&Vec<usize>> = current.keys().collect();
        parents.sort_unstable();
        for parent in parents {
            for i in 0..m {
                let mut child = parent.clone();
                child[i] += 1;
                if mask.can_reach(&child, d + 1, n) && seen.insert(child.clone()) {
                    children.push(child);
                }
            }
        }
        children.sort_unstable();
        let mut next = HashMap::with_capacity(children.len());
        for child in children {
            let mut acc = ZERO;
            let mut parent = child.clone();
            for i in 0..m {
                if child[i] > 0 {
                    parent[i] -= 1;
                    acc += current[&parent] * u.get(i, d);
                    parent[i] += 1;
                    out.multiply_adds += 1;
                }
            }
            next.insert(child, acc);
        }
        out.states_generated += next.len() as u64;
        out.peak_coefficients = out.peak_coefficients.max((current.len() + next.len()) as u64);
        current = next;
    }
    let mut amplitudes: Vec<_> = current
        .into_iter()
        .map(|(occ, c)| {
            let s = FockState::new(occ);
            let amp = c * s.normalization_factor();
            (s, amp)
        })
        .collect();
    amplitudes.sort_by(|a, b| a.0.cmp(&b.0));
    out.amplitudes = amplitudes;
    Ok(out)
}

/// Number of monomials of any degree that can still reach an output
/// matching `mask`: `prod_i (mask_i + 1) * C(m - k + n - p, n - p)` with
/// `p` the mask's photon count, or `None` on overflow.
pub fn mask_parent_count(mask: &Mask, m: usize, n: usize) -> Option<u128> {
    let k = mask.len();
    let p = mask.photon_count();
    if p > n {
        return Some(0);
    }
    if k == m && p != n {
        return Some(0);
    }
    let sub: u128 = mask
        .occupations
        .iter()
        .try_fold(1u128, |acc, &t| acc.checked_mul(t as u128 + 1))?;
    sub.checked_mul(binomial((m - k + n - p) as u64, (n - p) as u64)?)
}

/// Runs [`slos_masked`] for every mask on `modes` and concatenates the
/// results. Operation counts are summed, peak memory is the largest single
/// run.
pub fn slos_all_masks(u: &InterferometerMatrix, modes: &[usize]) -> Result<Expansion> {
    let mut total = Expansion::default();
    let covers_all = modes.len() == u.rows();
    for mask in enumerate_masks(modes, u.cols(), covers_all) {
        let run = slos_masked(u, &mask)?;
        total.multiply_adds += run.multiply_adds;
        total.states_generated += run.states_generated;
        total.peak_coefficients = total.peak_coefficients.max(run.peak_coefficients);
        total.amplitudes.extend(run.amplitudes);
    }
    total.amplitudes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(total)
}
