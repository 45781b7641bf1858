//! Compressed-row sparse matrices: the carrier for all assembled operators
//! and Newton Jacobians.

use crate::error::{Error, Result};

/// Real sparse matrix in compressed-row form. Column indices are sorted and
/// unique within each row; explicitly stored zeros are permitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::invalid(format!(
                    "triplet ({i}, {j}) out of bounds for {nrows}x{ncols} matrix"
                )));
            }
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut cursor = counts.clone();
        for &(i, j, v) in triplets {
            let p = cursor[i];
            cols[p] = j;
            vals[p] = v;
            cursor[i] += 1;
        }
        // Sort each row by column and merge duplicates in place.
        let mut row_offsets = vec![0usize; nrows + 1];
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        for i in 0..nrows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            let mut row: Vec<(usize, f64)> = cols[lo..hi]
                .iter()
                .copied()
                .zip(vals[lo..hi].iter().copied())
                .collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            for (j, v) in row {
                if out_cols.len() > row_offsets[i] && *out_cols.last().unwrap() == j {
                    *out_vals.last_mut().unwrap() += v;
                } else {
                    out_cols.push(j);
                    out_vals.push(v);
                }
            }
            row_offsets[i + 1] = out_cols.len();
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices: out_cols,
            values: out_vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// Stored value at (i, j), or 0 if the entry is not present.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut trips = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                trips.push((j, i, v));
            }
        }
        SparseMatrix::from_triplets(self.ncols, self.nrows, &trips)
            .expect("transpose of a valid matrix is valid")
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// Row sums, e.g. for mass lumping.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Quadratic form xᵀ A y.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(ay.iter()).map(|(a, b)| a * b).sum()
    }

    /// Restriction A[rows, cols] given index subsets (old index -> position).
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut trips = Vec::new();
        for (new_i, &old_i) in rows.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if col_map[j] != usize::MAX {
                    trips.push((new_i, col_map[j], v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), cols.len(), &trips)
            .expect("restriction of a valid matrix is valid")
    }
}

/// Incremental triplet accumulator for stacked block systems.
#[derive(Debug, Default)]
pub struct TripletBuilder {
    triplets: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.triplets.push((i, j, v));
    }

    /// Places `scale * block` with its (0,0) entry at (row_offset, col_offset).
    pub fn add_block(
        &mut self,
        row_offset: usize,
        col_offset: usize,
        block: &SparseMatrix,
        scale: f64,
    ) {
        for (i, j, v) in block.triplets() {
            self.triplets.push((row_offset + i, col_offset + j, scale * v));
        }
    }

    /// Places diag(values) with its first entry at (row_offset, col_offset).
    pub fn add_diag(&mut self, row_offset: usize, col_offset: usize, values: &[f64]) {
        for (k, &v) in values.iter().enumerate() {
            self.triplets.push((row_offset + k, col_offset + k, v));
        }
    }

    pub fn build(&self, nrows: usize, ncols: usize) -> Result<SparseMatrix> {
        SparseMatrix::from_triplets(nrows, ncols, &self.triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_rows_sorted() {
        let a = SparseMatrix::from_triplets(
            2,
            3,
            &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, -1.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 3);
        let row0: Vec<_> = a.row(0).collect();
        assert_eq!(row0, vec![(0, 2.0), (2, 1.5)]);
        assert_eq!(a.get(1, 1), -1.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn out_of_bounds_triplet_rejected() {
        let err = SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn matvec_and_transpose() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)])
            .unwrap();
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 3.0]);
        let at = a.transpose();
        assert_eq!(at.get(1, 0), 2.0);
        assert_eq!(at.get(0, 1), 0.0);
    }

    #[test]
    fn block_builder_places_blocks() {
        let id = SparseMatrix::identity(2);
        let mut b = TripletBuilder::new();
        b.add_block(0, 2, &id, -1.0);
        b.add_diag(2, 0, &[5.0, 6.0]);
        let m = b.build(4, 4).unwrap();
        assert_eq!(m.get(0, 2), -1.0);
        assert_eq!(m.get(1, 3), -1.0);
        assert_eq!(m.get(2, 0), 5.0);
        assert_eq!(m.get(3, 1), 6.0);
    }
}
