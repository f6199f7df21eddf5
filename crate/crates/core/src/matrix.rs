//! Interferometer matrices and their file formats.
//!
//! Column `j` holds the image of the `j`-th input creation operator, so an
//! `m x n` matrix describes `n` injected photons spread over `m` modes.
//!
//! Two on-disk formats are supported:
//!
//! - JSON: `{"m": 2, "n": 2, "re": [[..], ..], "im": [[..], ..]}` with `m`
//!   rows of `n` values each.
//! - CSV: one line per row, each cell written as a `re,im` pair.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major complex matrix with `m >= 1` rows and `n >= 1` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferometerMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl InterferometerMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(InterferometerMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        Self::new(m, n, rows.into_iter().flatten().collect())
    }

    pub fn identity(m: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            data[i * m + i] = Complex64::new(1.0, 0.0);
        }
        InterferometerMatrix {
            rows: m,
            cols: m,
            data,
        }
    }

    /// Number of modes `m`.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of input columns `n`.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// First `n` columns.
    pub fn truncate_columns(&self, n: usize) -> Result<Self> {
        self.select_columns(&(0..n).collect::<Vec<_>>())
    }

    /// Matrix whose `j`-th column is column `columns[j]` of `self`; columns
    /// may repeat.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&c) = columns.iter().find(|&&c| c >= self.cols) {
            return Err(Error::Dimension(format!(
                "column {c} out of range for {} columns",
                self.cols
            )));
        }
        let data = (0..self.rows)
            .flat_map(|i| columns.iter().map(move |&c| (i, c)))
            .map(|(i, c)| self.get(i, c))
            .collect();
        Self::new(self.rows, columns.len(), data)
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &InterferometerMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut data = vec![Complex64::new(0.0, 0.0); self.rows * rhs.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..rhs.cols {
                    data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Self::new(self.rows, rhs.cols, data)
    }

    /// `max |(A^dagger A - I)_ij|`: zero exactly when the columns are
    /// orthonormal.
    pub fn column_orthonormality_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.cols {
            for b in a..self.cols {
                let dot: Complex64 = (0..self.rows)
                    .map(|i| self.get(i, a).conj() * self.get(i, b))
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &InterferometerMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MatrixFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<MatrixFile>(text)?.try_into()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            for (j, z) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{},{}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let values = line
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("line {}: bad number {t:?}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() % 2 != 0 {
                return Err(Error::Parse(format!(
                    "line {}: expected re,im pairs but found {} values",
                    lineno + 1,
                    values.len()
                )));
            }
            rows.push(
                values
                    .chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
            );
        }
        Self::from_rows(rows)
    }

    /// Loads a matrix, choosing the format from the file extension
    /// (`.csv` for CSV, anything else for JSON).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

/// Serialized form of an [`InterferometerMatrix`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub m: usize,
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&InterferometerMatrix> for MatrixFile {
    fn from(u: &InterferometerMatrix) -> Self {
        let split = |f: fn(&Complex64) -> f64| {
            (0..u.rows)
                .map(|i| u.row(i).iter().map(f).collect())
                .collect()
        };
        MatrixFile {
            m: u.rows,
            n: u.cols,
            re: split(|z| z.re),
            im: split(|z| z.im),
        }
    }
}

impl TryFrom<MatrixFile> for InterferometerMatrix {
    type Error = Error;

    fn try_from(f: MatrixFile) -> Result<Self> {
        if f.re.len() != f.m || f.im.len() != f.m {
            return Err(Error::Parse(format!(
                "field \"re\"/\"im\" must have m={} rows, got {} and {}",
                f.m,
                f.re.len(),
                f.im.len()
            )));
        }
        let mut data = Vec::with_capacity(f.m * f.n);
        for (i, (re, im)) in f.re.iter().zip(&f.im).enumerate() {
            if re.len() != f.n || im.len() != f.n {
                return Err(Error::Parse(format!(
                    "row {i} of \"re\"/\"im\" must have n={} entries",
                    f.n
                )));
            }
            data.extend(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)));
        }
        InterferometerMatrix::new(f.m, f.n, data)
    }
}

/// Haar-distributed `m x m` unitary, deterministic in `seed`.
///
/// Draws a complex Ginibre matrix and orthonormalises its columns with
/// two passes of modified Gram-Schmidt. The implied `R` factor has a
/// positive real diagonal, which is the phase convention that makes the
/// result Haar distributed.
pub fn haar_random_unitary(m: usize, seed: u64) -> InterferometerMatrix {
    assert!(m >= 1, "need at least one mode");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // Column-major working copy.
    let mut cols: Vec<Vec<Complex64>> = (0..m)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im) * scale
                })
                .collect()
        })
        .collect();
    for j in 0..m {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for _pass in 0..2 {
            for q in done.iter() {
                let proj: Complex64 = q.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                for (c, a) in col.iter_mut().zip(q) {
                    *c -= proj * a;
                }
            }
        }
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for c in col.iter_mut() {
            *c /= norm;
        }
    }
    let data = (0..m)
        .flat_map(|i| cols.iter().map(move |c| c[i]))
        .collect();
    InterferometerMatrix {
        rows: m,
        cols: m,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_mode_unitary_is_a_phase() {
        for seed in 0..5 {
            let u = haar_random_unitary(1, seed);
            assert!((u.get(0, 0).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn four_mode_unitarity_by_multiplication() {
        let u = haar_random_unitary(4, 7);
        let mut dagger = u.clone();
        for i in 0..4 {
            for j in 0..4 {
                dagger.set(i, j, u.get(j, i).conj());
            }
        }
        let prod = dagger.matmul(&u).unwrap();
        assert!(prod.max_abs_diff(&InterferometerMatrix::identity(4)) < 1e-12);
        assert!(u.column_orthonormality_deviation() < 1e-12);
    }

    #[test]
    fn haar_is_deterministic() {
        assert_eq!(haar_random_unitary(6, 42), haar_random_unitary(6, 42));
        assert_ne!(haar_random_unitary(6, 42), haar_random_unitary(6, 43));
    }

    #[test]
    fn haar_columns_orthonormal_for_many_sizes() {
        for m in 1..=12 {
            for seed in 0..4 {
                let u = haar_random_unitary(m, seed);
                assert!(u.column_orthonormality_deviation() < 1e-12, "m={m} seed={seed}");
                let t = u.truncate_columns((m + 1) / 2).unwrap();
                assert!(t.column_norms().iter().all(|x| (x - 1.0).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(InterferometerMatrix::new(0, 1, vec![]).is_err());
        assert!(InterferometerMatrix::new(2, 2, vec![c(1.0, 0.0)]).is_err());
        assert!(InterferometerMatrix::from_rows(vec![vec![c(1.0, 0.0)], vec![]]).is_err());
    }

    #[test]
    fn json_and_csv_roundtrip() {
        let u = haar_random_unitary(3, 1).truncate_columns(2).unwrap();
        let back = InterferometerMatrix::from_json(&u.to_json().unwrap()).unwrap();
        assert_eq!(back, u);
        let back = InterferometerMatrix::from_csv(&u.to_csv()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn json_schema_errors_name_the_field() {
        let err = InterferometerMatrix::from_json(r#"{"m":2,"n":1,"re":[[1]],"im":[[0],[0]]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("\"re\""), "{err}");
        let err = InterferometerMatrix::from_json(r#"{"m":1,"n":1,"re":[[1]]}"#).unwrap_err();
        assert!(err.to_string().contains("im"), "{err}");
        assert!(InterferometerMatrix::from_csv("1,0,2\n").is_err());
    }

    #[test]
    fn repeated_columns() {
        let u = InterferometerMatrix::from_rows(vec![
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(4.0, 0.0)],
        ])
        .unwrap();
        let r = u.select_columns(&[0, 0, 1, 1]).unwrap();
        assert_eq!(r.row(1), &[c(3.0, 0.0), c(3.0, 0.0), c(4.0, 0.0), c(4.0, 0.0)]);
        assert!(u.select_columns(&[2]).is_err());
    }
}
