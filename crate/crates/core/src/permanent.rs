//! Matrix permanents and the permanent-based amplitude oracle.
//!
//! `<s|U|t> = Per(U[r_s, r_t]) / sqrt(s! t!)` where `r_s`, `r_t` list the
//! occupied output modes and input columns with repetition.

use num_complex::Complex64;

use crate::fock::{FockState, FockStates, ModeAssignment};
use crate::matrix::InterferometerMatrix;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense `k x k` complex matrix. `k = 0` is allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{dim}x{dim} matrix needs {} entries, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if let Some(r) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Dimension(format!(
                "row {r} has {} entries in a {dim}x{dim} matrix",
                rows[r].len()
            )));
        }
        Self::new(dim, rows.into_iter().flatten().collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        SquareMatrix { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code
/// order so each step updates the row sums by a single column.
pub fn permanent(a: &SquareMatrix) -> Complex64 {
    let k = a.dim();
    if k == 0 {
        return ONE;
    }
    assert!(k < 64, "permanent of a {k}x{k} matrix is out of reach");
    let mut row_sums = vec![ZERO; k];
    let mut total = ZERO;
    let mut in_subset = 0u64;
    for g in 1u64..(1u64 << k) {
        let col = g.trailing_zeros() as usize;
        let bit = 1u64 << col;
        in_subset ^= bit;
        if in_subset & bit != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a.get(i, col);
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a.get(i, col);
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if in_subset.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if k % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Permanent by Glynn's formula with Gray-code sign flips.
pub fn permanent_glynn(a: &SquareMatrix) -> Complex64 {
    let k = a.dim();
    if k == 0 {
        return ONE;
    }
    assert!(k < 64, "permanent of a {k}x{k} matrix is out of reach");
    // Column sums of delta_i * a_ij, all deltas starting at +1.
    let mut col_sums: Vec<Complex64> = (0..k).map(|j| (0..k).map(|i| a.get(i, j)).sum()).collect();
    let mut total: Complex64 = col_sums.iter().product();
    let mut negative = 0u64;
    for g in 1u64..(1u64 << (k - 1)) {
        let flip = g.trailing_zeros() as usize;
        let row = flip + 1;
        negative ^= 1 << flip;
        let sign = if negative & (1 << flip) != 0 { -2.0 } else { 2.0 };
        for (j, c) in col_sums.iter_mut().enumerate() {
            *c += a.get(row, j) * sign;
        }
        let prod: Complex64 = col_sums.iter().product();
        if negative.count_ones() % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total / (1u64 << (k - 1)) as f64
}

/// Permanent by summing over all `k!` permutations. Reference only.
pub fn permanent_by_definition(a: &SquareMatrix) -> Complex64 {
    fn go(a: &SquareMatrix, row: usize, used: &mut [bool], acc: Complex64) -> Complex64 {
        if row == a.dim() {
            return acc;
        }
        let mut sum = ZERO;
        for col in 0..a.dim() {
            if !used[col] {
                used[col] = true;
                sum += go(a, row + 1, used, acc * a.get(row, col));
                used[col] = false;
            }
        }
        sum
    }
    go(a, 0, &mut vec![false; a.dim()], ONE)
}

/// `U[r_s[i], r_t[j]]`, rows and columns repeated as listed.
pub fn repeated_submatrix(
    u: &InterferometerMatrix,
    rows: &ModeAssignment,
    cols: &ModeAssignment,
) -> Result<SquareMatrix> {
    if rows.len() != cols.len() {
        return Err(Error::InvalidInput(format!(
            "row assignment has {} photons but column assignment has {}",
            rows.len(),
            cols.len()
        )));
    }
    if let Some(&r) = rows.modes().iter().find(|&&r| r >= u.rows()) {
        return Err(Error::InvalidInput(format!(
            "row {r} out of range for {} modes",
            u.rows()
        )));
    }
    if let Some(&c) = cols.modes().iter().find(|&&c| c >= u.cols()) {
        return Err(Error::InvalidInput(format!(
            "column {c} out of range for {} columns",
            u.cols()
        )));
    }
    let data = rows
        .modes()
        .iter()
        .flat_map(|&r| cols.modes().iter().map(move |&c| u.get(r, c)))
        .collect();
    SquareMatrix::new(rows.len(), data)
}

/// `<s|U|t>` for an output state `s` over the rows of `u` and an input
/// state `t` over its columns.
pub fn amplitude(u: &InterferometerMatrix, s: &FockState, t: &FockState) -> Result<Complex64> {
    if s.modes() != u.rows() || t.modes() != u.cols() {
        return Err(Error::Dimension(format!(
            "states over {} and {} modes do not fit a {}x{} matrix",
            s.modes(),
            t.modes(),
            u.rows(),
            u.cols()
        )));
    }
    if s.photon_count() != t.photon_count() {
        return Err(Error::InvalidInput(format!(
            "output has {} photons but input has {}",
            s.photon_count(),
            t.photon_count()
        )));
    }
    let a = repeated_submatrix(u, &s.to_assignment(), &t.to_assignment())?;
    Ok(permanent(&a) / (s.normalization_factor() * t.normalization_factor()))
}

/// Every `n`-photon output amplitude for the input `|1,...,1>` on the
/// columns of `u`, one permanent per state, in enumeration order.
pub fn full_distribution_naive(
    u: &InterferometerMatrix,
) -> impl Iterator<Item = (FockState, Complex64)> + '_ {
    let n = u.cols();
    let input: Vec<usize> = (0..n).collect();
    FockStates::new(u.rows(), n).map(move |occ| {
        let s = FockState::new(occ);
        let a = repeated_submatrix(u, &s.to_assignment(), &ModeAssignment::new(input.clone()))
            .expect("assignments are in range by construction");
        let amp = permanent(&a) / s.normalization_factor();
        (s, amp)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar_random_unitary;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_square(k: usize, seed: u64) -> SquareMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..k * k)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SquareMatrix::new(k, data).unwrap()
    }

    pub(crate) fn hom() -> InterferometerMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        InterferometerMatrix::from_rows(vec![vec![c(h, 0.0), c(0.0, h)], vec![c(0.0, h), c(h, 0.0)]])
            .unwrap()
    }

    #[test]
    fn small_cases() {
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(0.1, -1.0), c(2.0, 0.0));
        let m = SquareMatrix::from_rows(vec![vec![a, b], vec![cc, d]]).unwrap();
        let expect = a * d + b * cc;
        assert!((permanent(&m) - expect).norm() < 1e-14);
        assert!((permanent_glynn(&m) - expect).norm() < 1e-14);
        for k in 0..6 {
            assert!((permanent(&SquareMatrix::identity(k)) - ONE).norm() < 1e-14);
        }
        let ones = SquareMatrix::new(4, vec![ONE; 16]).unwrap();
        assert!((permanent(&ones) - c(24.0, 0.0)).norm() < 1e-12);
        assert!((permanent_glynn(&ones) - c(24.0, 0.0)).norm() < 1e-12);
        assert_eq!(permanent(&SquareMatrix::new(0, vec![]).unwrap()), ONE);
    }

    #[test]
    fn ryser_and_glynn_match_definition() {
        for k in 1..=6 {
            for seed in 0..5 {
                let a = random_square(k, seed * 10 + k as u64);
                let reference = permanent_by_definition(&a);
                assert!((permanent(&a) - reference).norm() < 1e-10, "ryser k={k}");
                assert!((permanent_glynn(&a) - reference).norm() < 1e-10, "glynn k={k}");
            }
        }
    }

    #[test]
    fn zero_row_gives_zero() {
        let mut a = random_square(5, 3);
        for j in 0..5 {
            a.data[2 * 5 + j] = ZERO;
        }
        assert!(permanent(&a).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn invariant_under_row_and_column_permutations(
            seed in 0u64..1000,
            rows in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(),
            cols in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let a = random_square(5, seed);
            let data = rows.iter().flat_map(|&r| cols.iter().map(move |&cc| (r, cc)))
                .map(|(r, cc)| a.get(r, cc)).collect();
            let b = SquareMatrix::new(5, data).unwrap();
            prop_assert!((permanent(&a) - permanent(&b)).norm() < 1e-12);
        }
    }

    #[test]
    fn repeated_submatrix_example() {
        let vals: Vec<Complex64> = (1..=9).map(|x| c(x as f64, 0.0)).collect();
        let u = InterferometerMatrix::new(3, 3, vals.clone()).unwrap();
        let rs = ModeAssignment::new(vec![0, 0, 0, 2]);
        let rt = ModeAssignment::new(vec![0, 1, 1, 2]);
        let sub = repeated_submatrix(&u, &rs, &rt).unwrap();
        let (a, b, cc) = (vals[0], vals[1], vals[2]);
        let (g, h, i) = (vals[6], vals[7], vals[8]);
        for r in 0..3 {
            assert_eq!(sub.row(r), &[a, b, b, cc]);
        }
        assert_eq!(sub.row(3), &[g, h, h, i]);

        let all = ModeAssignment::new(vec![0, 1, 2]);
        assert_eq!(repeated_submatrix(&u, &all, &all).unwrap().data, vals);
        let one = repeated_submatrix(&u, &ModeAssignment::new(vec![1]), &ModeAssignment::new(vec![0]));
        assert_eq!(one.unwrap().data, vec![vals[3]]);
        assert!(repeated_submatrix(&u, &ModeAssignment::new(vec![3]), &ModeAssignment::new(vec![0])).is_err());
        assert!(repeated_submatrix(&u, &ModeAssignment::new(vec![1, 2]), &ModeAssignment::new(vec![0])).is_err());
    }

    #[test]
    fn hong_ou_mandel() {
        let u = hom();
        let t = FockState::new(vec![1, 1]);
        assert!(amplitude(&u, &FockState::new(vec![1, 1]), &t).unwrap().norm() < 1e-15);
        let a = amplitude(&u, &FockState::new(vec![2, 0]), &t).unwrap();
        assert!((a - c(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((a.norm_sqr() - 0.5).abs() < 1e-15);
        assert!(amplitude(&u, &FockState::new(vec![1, 0]), &t).is_err());

        let dist: Vec<_> = full_distribution_naive(&u).collect();
        assert_eq!(dist.len(), 3);
        assert!((dist[0].1 - c(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(dist[1].1.norm() < 1e-15);
        assert!((dist[2].1 - c(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn identity_circuit() {
        let u = InterferometerMatrix::identity(3);
        let s = FockState::new(vec![1, 1, 0]);
        let t = FockState::new(vec![1, 1, 0]);
        assert!((amplitude(&u, &s, &t).unwrap() - ONE).norm() < 1e-15);
        for (state, amp) in full_distribution_naive(&u) {
            let expect = if state.occupations() == [1, 1, 1] { 1.0 } else { 0.0 };
            assert!((amp.norm() - expect).abs() < 1e-15, "{state}");
        }
    }

    #[test]
    fn naive_distribution_is_normalised() {
        for seed in 0..5 {
            let u = haar_random_unitary(4, seed).truncate_columns(2).unwrap();
            let total: f64 = full_distribution_naive(&u).map(|(_, a)| a.norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
