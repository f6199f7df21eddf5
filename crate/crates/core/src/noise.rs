//! Noisy strong simulation from a single lossless traversal.
//!
//! A node `x^s` of degree `k` holds `Per(U[r_s, T])` for every set `T` of
//! `k` input columns. Reading those values as the amplitudes of the
//! experiment in which only the photons of `T` survived gives uniform loss
//! and groups of mutually distinguishable photons without extra
//! coefficient updates.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bits::SubsetMask;
use crate::combinatorics::factorial_product;
use crate::fock::{FockIndexer, FockState, FockStates};
use crate::matrix::InterferometerMatrix;
use crate::traversal::{iterate_amplitudes, traverse, Amplitudes, TraversalStats};
use crate::{Error, Result};

/// Default cap on the number of state pairs combined when merging group
/// distributions.
pub const DEFAULT_CONVOLUTION_BUDGET: u128 = 50_000_000;

/// Each photon is lost independently with probability `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossModel {
    eta: f64,
}

impl LossModel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidInput(format!("eta must lie in [0,1], got {eta}")));
        }
        Ok(LossModel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Probability that one given set of `kept` photons out of `n` survives.
    pub fn subset_weight(&self, n: usize, kept: usize) -> f64 {
        self.eta.powi((n - kept) as i32) * (1.0 - self.eta).powi(kept as i32)
    }
}

/// Streams `(occupations, probability)` for every output with `0..=n`
/// photons, vacuum first, then in depth-first node order.
pub fn lossy_traverse<F>(u: &InterferometerMatrix, loss: LossModel, mut sink: F) -> Result<TraversalStats>
where
    F: FnMut(&[usize], f64) -> ControlFlow<()>,
{
    let n = u.cols();
    let vacuum = vec![0; u.rows()];
    if sink(&vacuum, loss.subset_weight(n, 0)).is_break() {
        return Ok(TraversalStats::default());
    }
    traverse(u, |node| {
        let occ = node.occupations();
        let p = loss.subset_weight(n, node.level()) * node.band().norm_sqr_sum()
            / factorial_product(occ);
        sink(occ, p)
    })
}

/// Output distribution under uniform loss, over every photon count, in
/// [`lossy_traverse`] order.
pub fn lossy_distribution(u: &InterferometerMatrix, loss: LossModel) -> Result<Vec<(FockState, f64)>> {
    let mut out = Vec::new();
    lossy_traverse(u, loss, |occ, p| {
        out.push((FockState::new(occ.to_vec()), p));
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Partition of the input photons into groups; photons in different groups
/// never interfere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinguishabilityGroups {
    groups: Vec<Vec<usize>>,
}

impl DistinguishabilityGroups {
    /// `groups` lists 0-based photon indices; together they must cover
    /// `0..n` exactly once.
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidInput("distinguishability groups must be non-empty".into()));
            }
            for &p in g {
                if p >= n {
                    return Err(Error::InvalidInput(format!(
                        "photon {} out of range for {n} photons",
                        p + 1
                    )));
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(Error::InvalidInput(format!("photon {} appears in two groups", p + 1)));
                }
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("photon {} is in no group", p + 1)));
        }
        Ok(DistinguishabilityGroups { groups })
    }

    /// All photons indistinguishable.
    pub fn single(n: usize) -> Self {
        DistinguishabilityGroups {
            groups: vec![(0..n).collect()],
        }
    }

    /// Every photon on its own.
    pub fn singletons(n: usize) -> Self {
        DistinguishabilityGroups {
            groups: (0..n).map(|p| vec![p]).collect(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn photon_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

impl fmt::Display for DistinguishabilityGroups {
    /// 1-based photon labels, e.g. `1,2|3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: Vec<String> = self
            .groups
            .iter()
            .map(|g| g.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        f.write_str(&text.join("|"))
    }
}

/// Parses `1,2|3` (1-based photon labels). The photon count is the
/// number of labels.
impl FromStr for DistinguishabilityGroups {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let groups = s
            .split('|')
            .map(|g| {
                g.split(',')
                    .map(|t| match t.trim().parse::<usize>() {
                        Ok(p) if p >= 1 => Ok(p - 1),
                        _ => Err(Error::Parse(format!("bad photon label {t:?} in groups {s:?}"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let n = groups.iter().map(Vec::len).sum();
        Self::new(groups, n)
    }
}

/// Output distribution when photons in different groups are perfectly
/// distinguishable, under the default convolution budget.
pub fn distinguishable_distribution(
    u: &InterferometerMatrix,
    groups: &DistinguishabilityGroups,
) -> Result<Vec<(FockState, f64)>> {
    distinguishable_distribution_with_budget(u, groups, DEFAULT_CONVOLUTION_BUDGET)
}

/// Each group's distribution is read off the band of one traversal at the
/// level of the group's size: the entry whose mask holds every column
/// outside the group. The groups are then combined by summing over all
/// ways to split an output between them. Results are in lexicographic
/// order.
pub fn distinguishable_distribution_with_budget(
    u: &InterferometerMatrix,
    groups: &DistinguishabilityGroups,
    max_pairs: u128,
) -> Result<Vec<(FockState, f64)>> {
    let (m, n) = (u.rows(), u.cols());
    if groups.photon_count() != n {
        return Err(Error::InvalidInput(format!(
            "groups cover {} photons but the matrix has {n} columns",
            groups.photon_count()
        )));
    }
    let indexer = FockIndexer::new(m, n)?;
    // Budget for the merge, checked before any work.
    let mut pairs: u128 = 0;
    let mut acc_size: u128 = 1;
    let mut acc_level = 0;
    for g in groups.groups() {
        let size = indexer.level_size(g.len()) as u128;
        pairs = pairs.saturating_add(acc_size.saturating_mul(size));
        acc_level += g.len();
        acc_size = indexer.level_size(acc_level) as u128;
    }
    if pairs > max_pairs {
        return Err(Error::Budget {
            what: "distinguishable group merge".into(),
            required: pairs,
            cap: u64::try_from(max_pairs).unwrap_or(u64::MAX),
            unit: "state pairs",
        });
    }

    let full = SubsetMask::full(n);
    let masks: Vec<SubsetMask> = groups
        .groups()
        .iter()
        .map(|g| SubsetMask(full.bits() & !SubsetMask::from_columns(g.iter().copied()).bits()))
        .collect();
    let mut per_group: Vec<Vec<f64>> = groups
        .groups()
        .iter()
        .map(|g| vec![0.0; indexer.level_size(g.len())])
        .collect();
    traverse(u, |node| {
        for (gi, g) in groups.groups().iter().enumerate() {
            if g.len() == node.level() {
                let occ = node.occupations();
                let c = node.band().get(masks[gi]);
                per_group[gi][indexer.rank(occ)] = c.norm_sqr() / factorial_product(occ);
            }
        }
        ControlFlow::Continue(())
    })?;

    let mut acc = vec![1.0];
    let mut level = 0;
    let mut sum = vec![0usize; m];
    for (g, dist) in groups.groups().iter().zip(&per_group) {
        let next_level = level + g.len();
        let mut next = vec![0.0; indexer.level_size(next_level)];
        for (a_occ, &pa) in FockStates::new(m, level).zip(&acc) {
            if pa == 0.0 {
                continue;
            }
            for (b_occ, &pb) in FockStates::new(m, g.len()).zip(dist) {
                for i in 0..m {
                    sum[i] = a_occ[i] + b_occ[i];
                }
                next[indexer.rank(&sum)] += pa * pb;
            }
        }
        acc = next;
        level = next_level;
    }
    Ok(FockStates::new(m, n)
        .zip(acc)
        .map(|(occ, p)| (FockState::new(occ), p))
        .collect())
}

/// Amplitudes for the input `|1,...,1>`, or with `doubled` for two photons
/// in each input mode (`|2,...,2>`), computed by repeating every column.
pub fn multiphoton_distribution(u: &InterferometerMatrix, doubled: bool) -> Result<Multiphoton> {
    if !doubled {
        return Ok(Multiphoton {
            inner: iterate_amplitudes(u)?,
            scale: 1.0,
        });
    }
    let columns: Vec<usize> = (0..u.cols()).flat_map(|c| [c, c]).collect();
    let repeated = u.select_columns(&columns)?;
    Ok(Multiphoton {
        inner: iterate_amplitudes(&repeated)?,
        scale: (2.0f64).powi(u.cols() as i32).sqrt().recip(),
    })
}

/// Iterator returned by [`multiphoton_distribution`].
#[derive(Debug)]
pub struct Multiphoton {
    inner: Amplitudes,
    scale: f64,
}

impl Multiphoton {
    pub fn stats(&self) -> TraversalStats {
        self.inner.stats()
    }
}

impl Iterator for Multiphoton {
    type Item = (FockState, Complex64);

    fn next(&mut self) -> Option<Self::Item> {
        self.inner.next().map(|(s, a)| (s, a * self.scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar_random_unitary;
    use crate::permanent::{amplitude, full_distribution_naive, permanent, SquareMatrix};
    use std::collections::HashMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Sum over surviving column subsets of their lossless distributions.
    fn loss_oracle(u: &InterferometerMatrix, loss: LossModel) -> HashMap<FockState, f64> {
        let n = u.cols();
        let mut out = HashMap::new();
        out.insert(FockState::vacuum(u.rows()), loss.subset_weight(n, 0));
        for subset in 1u64..(1 << n) {
            let cols: Vec<usize> = (0..n).filter(|&c| subset & (1 << c) != 0).collect();
            let sub = u.select_columns(&cols).unwrap();
            let w = loss.subset_weight(n, cols.len());
            for (s, a) in full_distribution_naive(&sub) {
                *out.entry(s).or_insert(0.0) += w * a.norm_sqr();
            }
        }
        out
    }

    #[test]
    fn loss_matches_subset_enumeration() {
        for m in 1..=5 {
            for n in 1..=4 {
                let base = haar_random_unitary(m.max(n), (m * 7 + n) as u64);
                let u = InterferometerMatrix::from_rows((0..m).map(|i| base.row(i)[..n].to_vec()).collect()).unwrap();
                for eta in [0.0, 0.1, 0.3, 0.5, 1.0] {
                    let loss = LossModel::new(eta).unwrap();
                    let oracle = loss_oracle(&u, loss);
                    let got = lossy_distribution(&u, loss).unwrap();
                    assert_eq!(got.len(), oracle.len());
                    for (s, p) in &got {
                        assert!((p - oracle[s]).abs() < 1e-10, "m={m} n={n} eta={eta} {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn loss_extremes_and_normalisation() {
        let u = haar_random_unitary(4, 5).truncate_columns(3).unwrap();
        let none = lossy_distribution(&u, LossModel::new(0.0).unwrap()).unwrap();
        let plain: HashMap<_, _> = iterate_amplitudes(&u).unwrap().collect();
        for (s, p) in &none {
            if s.photon_count() < 3 {
                assert_eq!(*p, 0.0);
            } else {
                assert!((p - plain[s].norm_sqr()).abs() < 1e-14);
            }
        }
        let all = lossy_distribution(&u, LossModel::new(1.0).unwrap()).unwrap();
        for (s, p) in &all {
            assert_eq!(*p, if s.photon_count() == 0 { 1.0 } else { 0.0 });
        }
        for eta in [0.2, 0.7] {
            let total: f64 = lossy_distribution(&u, LossModel::new(eta).unwrap()).unwrap().iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
        assert!(LossModel::new(1.5).unwrap_err().to_string().contains("eta must lie in [0,1]"));
    }

    #[test]
    fn loss_adds_no_coefficient_work() {
        let u = haar_random_unitary(5, 1).truncate_columns(4).unwrap();
        let lossy = lossy_traverse(&u, LossModel::new(0.3).unwrap(), |_, _| ControlFlow::Continue(())).unwrap();
        let plain = traverse(&u, |_| ControlFlow::Continue(())).unwrap();
        assert_eq!(lossy.multiply_adds, plain.multiply_adds);
    }

    #[test]
    fn one_group_is_lossless() {
        let u = haar_random_unitary(4, 2).truncate_columns(3).unwrap();
        let got = distinguishable_distribution(&u, &DistinguishabilityGroups::single(3)).unwrap();
        let plain: HashMap<_, _> = iterate_amplitudes(&u).unwrap().collect();
        for (s, p) in got {
            assert!((p - plain[&s].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn singletons_are_classical() {
        for (m, n) in [(3, 2), (4, 3), (5, 4)] {
            let u = haar_random_unitary(m, 9).truncate_columns(n).unwrap();
            let got = distinguishable_distribution(&u, &DistinguishabilityGroups::singletons(n)).unwrap();
            let mut total = 0.0;
            for (s, p) in got {
                let rows = s.to_assignment();
                let data = rows
                    .modes()
                    .iter()
                    .flat_map(|&r| (0..n).map(move |j| (r, j)))
                    .map(|(r, j)| c(u.get(r, j).norm_sqr(), 0.0))
                    .collect();
                let expect = permanent(&SquareMatrix::new(n, data).unwrap()).re / factorial_product(s.occupations());
                assert!((p - expect).abs() < 1e-12, "{s}");
                total += p;
            }
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hom_dip_vanishes() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = InterferometerMatrix::from_rows(vec![vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]]).unwrap();
        let got: HashMap<_, _> = distinguishable_distribution(&u, &DistinguishabilityGroups::singletons(2))
            .unwrap()
            .into_iter()
            .collect();
        assert!((got[&FockState::new(vec![1, 1])] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_groups_normalise_and_follow_mode_relabelling() {
        let u = haar_random_unitary(5, 4).truncate_columns(4).unwrap();
        let groups: DistinguishabilityGroups = "1,3|2|4".parse().unwrap();
        let got = distinguishable_distribution(&u, &groups).unwrap();
        let total: f64 = got.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let perm = [3, 0, 4, 1, 2];
        let rows: Vec<Vec<Complex64>> = perm.iter().map(|&i| u.row(i).to_vec()).collect();
        let permuted = InterferometerMatrix::from_rows(rows).unwrap();
        let other: HashMap<_, _> = distinguishable_distribution(&permuted, &groups).unwrap().into_iter().collect();
        for (s, p) in &got {
            let relabelled = FockState::new(perm.iter().map(|&i| s.occupations()[i]).collect());
            assert!((other[&relabelled] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn group_parsing_and_budget() {
        assert_eq!("1,2|3".parse::<DistinguishabilityGroups>().unwrap().to_string(), "1,2|3");
        assert!("1,1".parse::<DistinguishabilityGroups>().is_err());
        assert!("1,3".parse::<DistinguishabilityGroups>().is_err());
        assert!("0".parse::<DistinguishabilityGroups>().is_err());
        let u = haar_random_unitary(6, 0).truncate_columns(4).unwrap();
        let err = distinguishable_distribution_with_budget(&u, &DistinguishabilityGroups::singletons(4), 10).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }

    #[test]
    fn doubled_input() {
        let u2 = haar_random_unitary(2, 3);
        let u = u2.truncate_columns(1).unwrap();
        let t = FockState::new(vec![2]);
        let got: Vec<_> = multiphoton_distribution(&u, true).unwrap().collect();
        assert_eq!(got.len(), 3);
        for (s, a) in got {
            assert!((a - amplitude(&u, &s, &t).unwrap()).norm() < 1e-10);
        }
        let id = InterferometerMatrix::identity(2);
        for (s, a) in multiphoton_distribution(&id, true).unwrap() {
            let expect = if s.occupations() == [2, 2] { 1.0 } else { 0.0 };
            assert!((a - c(expect, 0.0)).norm() < 1e-12, "{s}");
        }
        let u = haar_random_unitary(4, 1).truncate_columns(2).unwrap();
        let plain: Vec<_> = iterate_amplitudes(&u).unwrap().collect();
        let same: Vec<_> = multiphoton_distribution(&u, false).unwrap().collect();
        assert_eq!(plain, same);
    }
}
