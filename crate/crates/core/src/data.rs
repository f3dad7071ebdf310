//! Row-major sample matrices.

use crate::error::{Error, Result};

/// An `n x d` matrix of finite samples, stored row-major.
///
/// Row order is significant: batching and the strongly convex schedule index
/// samples contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    pub fn from_row_major(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!(
                "dataset needs n >= 1 and d >= 1, got n = {n}, d = {d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::invalid(format!(
                "expected {} values for a {n}x{d} dataset, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Dataset { values, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::invalid(format!(
                    "row {i} has {} columns, expected {d}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::from_row_major(values, rows.len(), d)
    }

    /// Constructs without validation; callers guarantee shape and finiteness.
    pub(crate) fn from_parts_unchecked(values: Vec<f64>, n: usize, d: usize) -> Self {
        debug_assert_eq!(values.len(), n * d);
        Dataset { values, n, d }
    }

    pub(crate) fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.d).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Contiguous rows `start..end` as a new dataset.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Dataset> {
        if start >= end || end > self.n {
            return Err(Error::invalid(format!(
                "row range {start}..{end} is empty or exceeds n = {}",
                self.n
            )));
        }
        Ok(Dataset {
            values: self.values[start * self.d..end * self.d].to_vec(),
            n: end - start,
            d: self.d,
        })
    }

    /// Coordinate-wise sample mean, summed in row order.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.d];
        for r in self.rows() {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        let n = self.n as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Coordinate-wise moment bound: `E|<X - mu, e_j>|^k <= gamma` for every `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    pub k: f64,
    pub gamma: f64,
}

impl MomentSpec {
    pub fn new(k: f64, gamma: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 2.0) {
            return Err(Error::invalid(format!(
                "moment order k must be >= 2, got {k}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(format!(
                "moment bound must be positive, got {gamma}"
            )));
        }
        Ok(MomentSpec { k, gamma })
    }

    /// Unit bound on the `k`-th moment.
    pub fn unit(k: f64) -> Result<Self> {
        Self::new(k, 1.0)
    }
}

/// Half-open row ranges of `m` contiguous batches over `n` rows.
///
/// The first `m - 1` batches hold `n / m` rows; the last absorbs the remainder.
pub fn batch_ranges(n: usize, m: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if m == 0 {
        return Err(Error::invalid("batch count must be at least 1"));
    }
    if n < m {
        return Err(Error::TooFewSamples { n, m });
    }
    let size = n / m;
    Ok((0..m)
        .map(|i| {
            let start = i * size;
            let end = if i + 1 == m { n } else { start + size };
            start..end
        })
        .collect())
}

/// Splits a dataset into `m` contiguous batches (see [`batch_ranges`]).
pub fn split_batches(dataset: &Dataset, m: usize) -> Result<Vec<Dataset>> {
    batch_ranges(dataset.n(), m)?
        .into_iter()
        .map(|r| dataset.slice_rows(r.start, r.end))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize, d: usize) -> Dataset {
        Dataset::from_row_major((0..n * d).map(|v| v as f64).collect(), n, d).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Dataset::from_row_major(vec![1.0, f64::NAN], 1, 2).is_err());
        assert!(Dataset::from_row_major(vec![f64::INFINITY], 1, 1).is_err());
        assert!(Dataset::from_row_major(vec![], 0, 1).is_err());
        assert!(Dataset::from_row_major(vec![1.0; 3], 2, 2).is_err());
    }

    #[test]
    fn even_split() {
        let b = split_batches(&seq(10, 1), 2).unwrap();
        assert_eq!(b[0].as_slice(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(b[1].as_slice(), &[5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn remainder_goes_to_last_batch() {
        let sizes: Vec<_> = split_batches(&seq(7, 2), 3)
            .unwrap()
            .iter()
            .map(Dataset::n)
            .collect();
        assert_eq!(sizes, vec![2, 2, 3]);
    }

    #[test]
    fn singleton_batches() {
        let b = split_batches(&seq(4, 3), 4).unwrap();
        assert_eq!(b.len(), 4);
        for (i, batch) in b.iter().enumerate() {
            assert_eq!(batch.n(), 1);
            assert_eq!(batch.row(0)[0], (i * 3) as f64);
        }
    }

    #[test]
    fn fewer_samples_than_batches() {
        assert_eq!(
            split_batches(&seq(3, 1), 4).unwrap_err(),
            Error::TooFewSamples { n: 3, m: 4 }
        );
    }

    #[test]
    fn column_access_is_stable() {
        let ds = seq(3, 2);
        assert_eq!(ds.column(1).collect::<Vec<_>>(), vec![1.0, 3.0, 5.0]);
        assert_eq!(ds.get(2, 0), 4.0);
    }
}
