//! Feedforward: later optics chosen by measurement outcomes on the first
//! `k` modes.
//!
//! Stack entries never decrease, so once the traversal pushes a mode
//! `>= k` the occupations of modes `0..k` are final for the whole
//! subtree. At that moment the rows of the unmeasured modes are replaced
//! by those of `V_p * U`, where `V_p` is the policy's unitary for outcome
//! `p`. Rows of measured modes never change, so the coefficients already
//! computed on the path stay valid.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fock::FockState;
use crate::matrix::{InterferometerMatrix, MatrixFile};
use crate::slos::{enumerate_masks, slos_masked, Mask};
use crate::traversal::{Leaves, Node, Push, PushHook, Traversal, TraversalStats};
use crate::{Error, Result, DEFAULT_MEMORY_CAP_BYTES};

const BLOCK_TOLERANCE: f64 = 1e-12;

/// Replacement unitaries keyed by the outcome on modes `0..k`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptivePolicy {
    k: usize,
    m: usize,
    entries: BTreeMap<Vec<usize>, InterferometerMatrix>,
    default: Option<InterferometerMatrix>,
}

impl AdaptivePolicy {
    /// Empty policy measuring modes `0..k` of `m`.
    pub fn new(k: usize, m: usize) -> Result<Self> {
        if k > m {
            return Err(Error::InvalidInput(format!(
                "cannot measure {k} modes out of {m}"
            )));
        }
        Ok(AdaptivePolicy {
            k,
            m,
            entries: BTreeMap::new(),
            default: None,
        })
    }

    /// Policy answering every outcome with `v`.
    pub fn constant(k: usize, v: InterferometerMatrix) -> Result<Self> {
        let mut p = Self::new(k, v.rows())?;
        p.set_default(v)?;
        Ok(p)
    }

    /// Policy that never changes the circuit.
    pub fn identity(k: usize, m: usize) -> Result<Self> {
        Self::constant(k, InterferometerMatrix::identity(m))
    }

    pub fn measured_modes(&self) -> usize {
        self.k
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    fn check_unitary_shape(&self, v: &InterferometerMatrix) -> Result<()> {
        if v.rows() != self.m || v.cols() != self.m {
            return Err(Error::Dimension(format!(
                "policy unitaries must be {m}x{m}, got {}x{}",
                v.rows(),
                v.cols(),
                m = self.m
            )));
        }
        for i in 0..self.m {
            for j in 0..self.m {
                if i < self.k || j < self.k {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    let dev = (v.get(i, j) - Complex64::new(expect, 0.0)).norm();
                    if dev > BLOCK_TOLERANCE {
                        return Err(Error::InvalidInput(format!(
                            "policy unitary entry ({i},{j}) touches a measured mode (deviation {dev:e})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Sets the unitary for `outcome`, the occupations of modes `0..k`.
    pub fn insert(&mut self, outcome: Vec<usize>, v: InterferometerMatrix) -> Result<()> {
        if outcome.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "outcome {outcome:?} must list {} occupations",
                self.k
            )));
        }
        self.check_unitary_shape(&v)?;
        self.entries.insert(outcome, v);
        Ok(())
    }

    /// Unitary used for outcomes without an entry.
    pub fn set_default(&mut self, v: InterferometerMatrix) -> Result<()> {
        self.check_unitary_shape(&v)?;
        self.default = Some(v);
        Ok(())
    }

    pub fn lookup(&self, outcome: &[usize]) -> Result<&InterferometerMatrix> {
        self.entries
            .get(outcome)
            .or(self.default.as_ref())
            .ok_or_else(|| {
                Error::MissingPolicy(format!(
                    "no unitary for outcome {} on the measured modes",
                    FockState::new(outcome.to_vec())
                ))
            })
    }

    /// Writes rows `k..m` of `V_outcome * base` into `target`, whose other
    /// rows are left alone.
    pub fn apply(
        &self,
        outcome: &[usize],
        base: &InterferometerMatrix,
        target: &mut InterferometerMatrix,
    ) -> Result<()> {
        let v = self.lookup(outcome)?;
        for i in self.k..self.m {
            for j in 0..base.cols() {
                let mut acc = Complex64::new(0.0, 0.0);
                for l in self.k..self.m {
                    acc += v.get(i, l) * base.get(l, j);
                }
                target.set(i, j, acc);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PolicyFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(text)?;
        let first = file
            .default
            .as_ref()
            .or(file.entries.first().map(|e| &e.unitary))
            .ok_or_else(|| Error::Parse("policy has neither \"entries\" nor \"default\"".into()))?;
        let mut policy = Self::new(file.k, first.m)?;
        if let Some(d) = file.default {
            policy.set_default(d.try_into()?)?;
        }
        for (i, entry) in file.entries.into_iter().enumerate() {
            let outcome: FockState = entry
                .outcome
                .parse()
                .map_err(|e| Error::Parse(format!("entries[{i}].outcome: {e}")))?;
            policy.insert(outcome.into_occupations(), entry.unitary.try_into()?)?;
        }
        Ok(policy)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Serialized policy:
/// `{"k": 1, "entries": [{"outcome": "1", "unitary": {...}}], "default": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyFile {
    pub k: usize,
    #[serde(default)]
    pub entries: Vec<PolicyEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<MatrixFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub outcome: String,
    pub unitary: MatrixFile,
}

impl From<&AdaptivePolicy> for PolicyFile {
    fn from(p: &AdaptivePolicy) -> Self {
        PolicyFile {
            k: p.k,
            entries: p
                .entries
                .iter()
                .map(|(o, v)| PolicyEntry {
                    outcome: FockState::new(o.clone()).to_string(),
                    unitary: v.into(),
                })
                .collect(),
            default: p.default.as_ref().map(MatrixFile::from),
        }
    }
}

/// `base` with the unmeasured rows replaced by those of `V_outcome * base`.
pub fn update_u(
    outcome: &[usize],
    base: &InterferometerMatrix,
    policy: &AdaptivePolicy,
) -> Result<InterferometerMatrix> {
    if base.rows() != policy.m {
        return Err(Error::Dimension(format!(
            "policy acts on {} modes but the matrix has {} rows",
            policy.m,
            base.rows()
        )));
    }
    let mut out = base.clone();
    policy.apply(outcome, base, &mut out)?;
    Ok(out)
}

/// [`PushHook`] that swaps in the policy's matrix whenever the measured
/// prefix becomes final.
#[derive(Debug)]
pub struct FeedforwardHook<'a> {
    policy: &'a AdaptivePolicy,
    base: &'a InterferometerMatrix,
    /// Number of times the policy was consulted.
    pub lookups: u64,
}

impl PushHook for FeedforwardHook<'_> {
    fn before_update(&mut self, push: Push<'_>, matrix: &mut InterferometerMatrix) -> Result<()> {
        let k = self.policy.k;
        let depth = push.stack.len();
        let mode = push.stack[depth - 1];
        let crossed = mode >= k && (depth == 1 || push.stack[depth - 2] < k);
        if crossed {
            self.lookups += 1;
            self.policy.apply(&push.occupations[..k], self.base, matrix)?;
        }
        Ok(())
    }
}

/// Adaptive traversal with the same node contract as
/// [`traverse`](crate::traversal::traverse).
pub fn adaptive_traversal<'a>(
    policy: &'a AdaptivePolicy,
    base: &'a InterferometerMatrix,
) -> Result<Traversal<FeedforwardHook<'a>>> {
    adaptive_traversal_with_cap(policy, base, DEFAULT_MEMORY_CAP_BYTES)
}

pub fn adaptive_traversal_with_cap<'a>(
    policy: &'a AdaptivePolicy,
    base: &'a InterferometerMatrix,
    cap_bytes: u64,
) -> Result<Traversal<FeedforwardHook<'a>>> {
    if base.rows() != policy.m {
        return Err(Error::Dimension(format!(
            "policy acts on {} modes but the matrix has {} rows",
            policy.m,
            base.rows()
        )));
    }
    let hook = FeedforwardHook {
        policy,
        base,
        lookups: 0,
    };
    Traversal::with_hook(base, hook, cap_bytes)
}

pub fn traverse_adaptive<F>(
    policy: &AdaptivePolicy,
    base: &InterferometerMatrix,
    visitor: F,
) -> Result<TraversalStats>
where
    F: FnMut(&Node<'_>) -> ControlFlow<()>,
{
    adaptive_traversal(policy, base)?.run(visitor)
}

/// Lazy adaptive output amplitudes in depth-first leaf order.
pub fn iterate_adaptive_amplitudes<'a>(
    policy: &'a AdaptivePolicy,
    base: &'a InterferometerMatrix,
) -> Result<Leaves<FeedforwardHook<'a>>> {
    Ok(adaptive_traversal(policy, base)?.into_leaves())
}

/// One masked expansion per outcome, each with its own fixed matrix.
/// Keys are outcomes on modes `0..k`; values list the matching outputs in
/// lexicographic order.
pub fn brute_force_adaptive(
    policy: &AdaptivePolicy,
    base: &InterferometerMatrix,
) -> Result<BTreeMap<FockState, Vec<(FockState, Complex64)>>> {
    let k = policy.k;
    let modes: Vec<usize> = (0..k).collect();
    let mut out = BTreeMap::new();
    for mask in enumerate_masks(&modes, base.cols(), k == base.rows()) {
        let outcome = mask.occupations().to_vec();
        let u = update_u(&outcome, base, policy)?;
        let run = slos_masked(&u, &Mask::new(modes.clone(), outcome.clone())?)?;
        out.insert(FockState::new(outcome), run.amplitudes);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar_random_unitary;
    use crate::traversal::iterate_amplitudes;
    use std::collections::HashMap;

    /// `I_k (+) W` for a Haar `W` on the remaining modes.
    pub(crate) fn block_unitary(m: usize, k: usize, seed: u64) -> InterferometerMatrix {
        if k == m {
            return InterferometerMatrix::identity(m);
        }
        let w = haar_random_unitary(m - k, seed);
        let mut v = InterferometerMatrix::identity(m);
        for i in k..m {
            for j in k..m {
                v.set(i, j, w.get(i - k, j - k));
            }
        }
        v
    }

    fn random_policy(m: usize, k: usize, n: usize, seed: u64) -> AdaptivePolicy {
        let mut p = AdaptivePolicy::new(k, m).unwrap();
        let modes: Vec<usize> = (0..k).collect();
        for (i, mask) in enumerate_masks(&modes, n, k == m).into_iter().enumerate() {
            p.insert(mask.occupations().to_vec(), block_unitary(m, k, seed * 1000 + i as u64))
                .unwrap();
        }
        p
    }

    fn adaptive_map(p: &AdaptivePolicy, u: &InterferometerMatrix) -> HashMap<FockState, Complex64> {
        iterate_adaptive_amplitudes(p, u).unwrap().map(Result::unwrap).collect()
    }

    #[test]
    fn identity_policy_changes_nothing() {
        let u = haar_random_unitary(5, 3).truncate_columns(3).unwrap();
        for k in 0..=5 {
            let p = AdaptivePolicy::identity(k, 5).unwrap();
            let plain: Vec<_> = iterate_amplitudes(&u).unwrap().collect();
            let adaptive: Vec<_> = iterate_adaptive_amplitudes(&p, &u).unwrap().map(Result::unwrap).collect();
            assert_eq!(plain, adaptive, "k={k}");
        }
    }

    #[test]
    fn swap_on_single_photon_outcome() {
        let (m, n, k) = (3, 2, 1);
        let u = haar_random_unitary(m, 4).truncate_columns(n).unwrap();
        let mut swap = InterferometerMatrix::identity(m);
        swap.set(1, 1, Complex64::new(0.0, 0.0));
        swap.set(2, 2, Complex64::new(0.0, 0.0));
        swap.set(1, 2, Complex64::new(1.0, 0.0));
        swap.set(2, 1, Complex64::new(1.0, 0.0));
        let mut p = AdaptivePolicy::identity(k, m).unwrap();
        p.insert(vec![1], swap).unwrap();
        let got = adaptive_map(&p, &u);
        for (outcome, states) in brute_force_adaptive(&p, &u).unwrap() {
            for (s, a) in states {
                assert!((got[&s] - a).norm() < 1e-10, "{outcome} {s}");
            }
        }
        // The swap exchanges the amplitudes of |1,1,0> and |1,0,1>.
        let plain: HashMap<_, _> = iterate_amplitudes(&u).unwrap().collect();
        let s110 = FockState::new(vec![1, 1, 0]);
        let s101 = FockState::new(vec![1, 0, 1]);
        assert!((got[&s110] - plain[&s101]).norm() < 1e-12);
        assert!((got[&s101] - plain[&s110]).norm() < 1e-12);
    }

    #[test]
    fn matches_brute_force_and_normalises() {
        for m in 2..=5 {
            for n in 1..=4.min(m) {
                for k in 0..=2.min(m) {
                    let base = haar_random_unitary(m, (m * 100 + n * 10 + k) as u64);
                    let u = base.truncate_columns(n).unwrap();
                    let p = random_policy(m, k, n, 7);
                    let got = adaptive_map(&p, &u);
                    let mut total = 0.0;
                    let mut count = 0;
                    for states in brute_force_adaptive(&p, &u).unwrap().values() {
                        for (s, a) in states {
                            assert!((got[s] - a).norm() < 1e-10, "m={m} n={n} k={k} {s}");
                            total += a.norm_sqr();
                            count += 1;
                        }
                    }
                    assert_eq!(count, got.len());
                    assert!((total - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn outcome_probabilities_are_preserved() {
        let (m, n, k) = (4, 3, 2);
        let u = haar_random_unitary(m, 21).truncate_columns(n).unwrap();
        let p = random_policy(m, k, n, 3);
        let plain: Vec<_> = iterate_amplitudes(&u).unwrap().collect();
        for (outcome, states) in brute_force_adaptive(&p, &u).unwrap() {
            let adaptive: f64 = states.iter().map(|(_, a)| a.norm_sqr()).sum();
            let before: f64 = plain
                .iter()
                .filter(|(s, _)| s.occupations()[..k] == *outcome.occupations())
                .map(|(_, a)| a.norm_sqr())
                .sum();
            assert!((adaptive - before).abs() < 1e-10, "{outcome}");
        }
    }

    #[test]
    fn other_outcomes_do_not_leak() {
        let (m, n, k) = (4, 3, 1);
        let u = haar_random_unitary(m, 2).truncate_columns(n).unwrap();
        let p = random_policy(m, k, n, 1);
        let before = adaptive_map(&p, &u);
        let mut q = p.clone();
        q.insert(vec![2], block_unitary(m, k, 999)).unwrap();
        let after = adaptive_map(&q, &u);
        for (s, a) in &before {
            if s.occupations()[0] != 2 {
                assert_eq!(after[s], *a, "{s}");
            }
        }
        assert!(before.iter().any(|(s, a)| s.occupations()[0] == 2 && after[s] != *a));
    }

    #[test]
    fn update_preserves_unitarity() {
        let base = haar_random_unitary(5, 8);
        let p = random_policy(5, 2, 3, 5);
        let updated = update_u(&[1, 0], &base, &p).unwrap();
        assert!(updated.column_orthonormality_deviation() < 1e-12);
        for i in 0..2 {
            assert_eq!(updated.row(i), base.row(i));
        }
        // A permutation of unmeasured modes permutes those rows only.
        let mut perm = InterferometerMatrix::identity(5);
        for (i, j) in [(2, 4), (3, 2), (4, 3)] {
            perm.set(i, i, Complex64::new(0.0, 0.0));
            perm.set(i, j, Complex64::new(1.0, 0.0));
        }
        let q = AdaptivePolicy::constant(2, perm).unwrap();
        let permuted = update_u(&[0, 0], &base, &q).unwrap();
        assert_eq!(permuted.row(2), base.row(4));
        assert_eq!(permuted.row(3), base.row(2));
        assert_eq!(permuted.row(4), base.row(3));
    }

    #[test]
    fn missing_entry_is_named() {
        let u = haar_random_unitary(3, 0).truncate_columns(2).unwrap();
        let mut p = AdaptivePolicy::new(1, 3).unwrap();
        p.insert(vec![0], InterferometerMatrix::identity(3)).unwrap();
        let err = iterate_adaptive_amplitudes(&p, &u)
            .unwrap()
            .find_map(Result::err)
            .unwrap();
        assert!(matches!(&err, Error::MissingPolicy(msg) if msg.contains("outcome 1")), "{err}");
    }

    #[test]
    fn rejects_unitaries_touching_measured_modes() {
        let mut p = AdaptivePolicy::new(1, 3).unwrap();
        assert!(p.insert(vec![0], haar_random_unitary(3, 1)).is_err());
        assert!(p.insert(vec![0, 1], InterferometerMatrix::identity(3)).is_err());
        assert!(p.insert(vec![0], InterferometerMatrix::identity(2)).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let p = random_policy(4, 1, 2, 4);
        let back = AdaptivePolicy::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
        let err = AdaptivePolicy::from_json(r#"{"k":1,"entries":[{"outcome":"x","unitary":{"m":1,"n":1,"re":[[1]],"im":[[0]]}}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("outcome"), "{err}");
    }
}
