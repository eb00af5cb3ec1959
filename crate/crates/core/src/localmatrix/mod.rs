//! Matrices local to one partition, stored dense (row-major) or in
//! compressed sparse row form.
//!
//! CSR matrices are kept canonical: row pointers start at zero and never
//! decrease, column indices are strictly increasing within a row, and no
//! explicit zeros are stored.

mod linalg;
mod ops;
mod triplet;

use std::fmt;
use std::ops::{Range, RangeFull};

use crate::error::{Error, Result};

pub use linalg::{Eigen, Svd};
pub use ops::{ElemOp, Operand};
pub use triplet::{read_triplets, write_triplets, Triplet};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csr {
    pub(crate) indptr: Vec<usize>,
    pub(crate) indices: Vec<usize>,
    pub(crate) values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Storage {
    Dense(Vec<f64>),
    Csr(Csr),
}

#[derive(Clone, PartialEq)]
pub struct LocalMatrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

/// Row or column selector for [`LocalMatrix::slice`] and
/// [`LocalMatrix::update`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sel {
    At(usize),
    List(Vec<usize>),
    All,
}

impl Sel {
    fn resolve(&self, bound: usize) -> Result<Vec<usize>> {
        let idx = match self {
            Sel::At(i) => vec![*i],
            Sel::List(v) => v.clone(),
            Sel::All => return Ok((0..bound).collect()),
        };
        if let Some(&bad) = idx.iter().find(|&&i| i >= bound) {
            return Err(Error::Index { index: bad, bound });
        }
        Ok(idx)
    }
}

impl From<usize> for Sel {
    fn from(i: usize) -> Self {
        Sel::At(i)
    }
}

impl From<Vec<usize>> for Sel {
    fn from(v: Vec<usize>) -> Self {
        Sel::List(v)
    }
}

impl From<&[usize]> for Sel {
    fn from(v: &[usize]) -> Self {
        Sel::List(v.to_vec())
    }
}

impl<const N: usize> From<[usize; N]> for Sel {
    fn from(v: [usize; N]) -> Self {
        Sel::List(v.to_vec())
    }
}

impl From<Range<usize>> for Sel {
    fn from(r: Range<usize>) -> Self {
        Sel::List(r.collect())
    }
}

impl From<RangeFull> for Sel {
    fn from(_: RangeFull) -> Self {
        Sel::All
    }
}

/// Result of [`LocalMatrix::slice`]: two single indices select a scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Scalar(f64),
    Matrix(LocalMatrix),
}

impl Selection {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            Selection::Scalar(x) => Some(*x),
            Selection::Matrix(_) => None,
        }
    }

    pub fn into_matrix(self) -> LocalMatrix {
        match self {
            Selection::Scalar(x) => LocalMatrix::from_vec(1, 1, vec![x]).expect("1x1"),
            Selection::Matrix(m) => m,
        }
    }
}

/// Right-hand side of [`LocalMatrix::update`].
#[derive(Debug, Clone, Copy)]
pub enum Assign<'a> {
    /// Written to every selected cell.
    Scalar(f64),
    Matrix(&'a LocalMatrix),
}

impl From<f64> for Assign<'_> {
    fn from(x: f64) -> Self {
        Assign::Scalar(x)
    }
}

impl<'a> From<&'a LocalMatrix> for Assign<'a> {
    fn from(m: &'a LocalMatrix) -> Self {
        Assign::Matrix(m)
    }
}

impl LocalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LocalMatrix {
            rows,
            cols,
            storage: Storage::Dense(vec![0.0; rows * cols]),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        LocalMatrix::dense_unchecked(n, n, data)
    }

    /// Dense matrix from a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dim(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(LocalMatrix::dense_unchecked(rows, cols, data))
    }

    pub(crate) fn dense_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        LocalMatrix {
            rows,
            cols,
            storage: Storage::Dense(data),
        }
    }

    /// Dense matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dim(format!(
                    "row {i} has {} values, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(LocalMatrix::dense_unchecked(rows.len(), cols, data))
    }

    /// `n x 1` matrix.
    pub fn column(values: &[f64]) -> Self {
        LocalMatrix::dense_unchecked(values.len(), 1, values.to_vec())
    }

    /// `1 x n` matrix.
    pub fn row(values: &[f64]) -> Self {
        LocalMatrix::dense_unchecked(1, values.len(), values.to_vec())
    }

    /// CSR matrix from raw arrays. Explicit zeros are dropped; every other
    /// structural invariant must already hold.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 {
            return Err(Error::Dim(format!(
                "row pointer length {} for {rows} rows",
                indptr.len()
            )));
        }
        if indptr[0] != 0 || indptr[rows] != values.len() || indices.len() != values.len() {
            return Err(Error::Dim(
                "row pointers do not cover the value array".into(),
            ));
        }
        for i in 0..rows {
            let (lo, hi) = (indptr[i], indptr[i + 1]);
            if hi < lo {
                return Err(Error::Dim(format!("row pointers decrease at row {i}")));
            }
            let idx = &indices[lo..hi];
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Dim(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
            if let Some(&c) = idx.iter().find(|&&c| c >= cols) {
                return Err(Error::Index {
                    index: c,
                    bound: cols,
                });
            }
        }
        let mut m = LocalMatrix {
            rows,
            cols,
            storage: Storage::Csr(Csr {
                indptr,
                indices,
                values,
            }),
        };
        m.drop_zeros();
        Ok(m)
    }

    /// CSR matrix from `(row, col, value)` entries in any order. Duplicate
    /// coordinates are rejected.
    pub fn from_triplets(rows: usize, cols: usize, entries: &[Triplet]) -> Result<Self> {
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|t| (t.row, t.col));
        if let Some(w) = sorted
            .windows(2)
            .find(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(Error::Dim(format!(
                "duplicate entry at ({}, {})",
                w[0].row, w[0].col
            )));
        }
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for t in &sorted {
            if t.row >= rows {
                return Err(Error::Index {
                    index: t.row,
                    bound: rows,
                });
            }
            if t.col >= cols {
                return Err(Error::Index {
                    index: t.col,
                    bound: cols,
                });
            }
            indptr[t.row + 1] += 1;
            indices.push(t.col);
            values.push(t.value);
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        LocalMatrix::from_csr(rows, cols, indptr, indices, values)
    }

    pub(crate) fn csr_unchecked(rows: usize, cols: usize, csr: Csr) -> Self {
        let mut m = LocalMatrix {
            rows,
            cols,
            storage: Storage::Csr(csr),
        };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if let Storage::Csr(csr) = &mut self.storage {
            if !csr.values.contains(&0.0) {
                return;
            }
            let mut w = 0;
            let mut start = 0;
            for i in 0..self.rows {
                let end = csr.indptr[i + 1];
                for k in start..end {
                    if csr.values[k] != 0.0 {
                        csr.indices[w] = csr.indices[k];
                        csr.values[w] = csr.values[k];
                        w += 1;
                    }
                }
                start = end;
                csr.indptr[i + 1] = w;
            }
            csr.indices.truncate(w);
            csr.values.truncate(w);
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr(_))
    }

    /// Row-major values of a dense matrix.
    pub fn as_dense_slice(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(d) => Some(d),
            Storage::Csr(_) => None,
        }
    }

    /// `(row pointers, column indices, values)` of a CSR matrix.
    pub fn csr_parts(&self) -> Option<(&[usize], &[usize], &[f64])> {
        match &self.storage {
            Storage::Csr(c) => Some((&c.indptr, &c.indices, &c.values)),
            Storage::Dense(_) => None,
        }
    }

    /// Stored nonzeros of a CSR matrix; counted nonzeros of a dense one.
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.iter().filter(|&&v| v != 0.0).count(),
            Storage::Csr(c) => c.values.len(),
        }
    }

    fn check_cell(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.rows {
            return Err(Error::Index {
                index: i,
                bound: self.rows,
            });
        }
        if j >= self.cols {
            return Err(Error::Index {
                index: j,
                bound: self.cols,
            });
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        self.check_cell(i, j)?;
        Ok(self.at(i, j))
    }

    /// Unchecked element access for in-range indices.
    pub(crate) fn at(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[i * self.cols + j],
            Storage::Csr(c) => {
                let (lo, hi) = (c.indptr[i], c.indptr[i + 1]);
                match c.indices[lo..hi].binary_search(&j) {
                    Ok(k) => c.values[lo + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Values of row `i`, dense.
    pub fn row_values(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.rows {
            return Err(Error::Index {
                index: i,
                bound: self.rows,
            });
        }
        Ok(match &self.storage {
            Storage::Dense(d) => d[i * self.cols..(i + 1) * self.cols].to_vec(),
            Storage::Csr(c) => {
                let mut out = vec![0.0; self.cols];
                for k in c.indptr[i]..c.indptr[i + 1] {
                    out[c.indices[k]] = c.values[k];
                }
                out
            }
        })
    }

    /// All rows as vectors.
    pub fn to_row_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row_values(i).expect("in range"))
            .collect()
    }

    /// Strictly increasing column indices of the nonzero entries of `row`.
    pub fn non_zero_indices(&self, row: usize) -> Result<Vec<usize>> {
        if row >= self.rows {
            return Err(Error::Index {
                index: row,
                bound: self.rows,
            });
        }
        Ok(match &self.storage {
            Storage::Dense(d) => d[row * self.cols..(row + 1) * self.cols]
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, _)| j)
                .collect(),
            Storage::Csr(c) => c.indices[c.indptr[row]..c.indptr[row + 1]].to_vec(),
        })
    }

    /// Column indices and values of the nonzero entries of `row`.
    pub fn sparse_row(&self, row: usize) -> Result<(Vec<usize>, Vec<f64>)> {
        let idx = self.non_zero_indices(row)?;
        let vals = idx.iter().map(|&j| self.at(row, j)).collect();
        Ok((idx, vals))
    }

    pub fn to_dense(&self) -> LocalMatrix {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Csr(c) => {
                let mut data = vec![0.0; self.rows * self.cols];
                for i in 0..self.rows {
                    for k in c.indptr[i]..c.indptr[i + 1] {
                        data[i * self.cols + c.indices[k]] = c.values[k];
                    }
                }
                LocalMatrix::dense_unchecked(self.rows, self.cols, data)
            }
        }
    }

    /// Canonical CSR copy; exact zeros are not stored.
    pub fn to_csr(&self) -> LocalMatrix {
        match &self.storage {
            Storage::Csr(_) => self.clone(),
            Storage::Dense(d) => {
                let mut indptr = Vec::with_capacity(self.rows + 1);
                let mut indices = Vec::new();
                let mut values = Vec::new();
                indptr.push(0);
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        let v = d[i * self.cols + j];
                        if v != 0.0 {
                            indices.push(j);
                            values.push(v);
                        }
                    }
                    indptr.push(values.len());
                }
                LocalMatrix::csr_unchecked(
                    self.rows,
                    self.cols,
                    Csr {
                        indptr,
                        indices,
                        values,
                    },
                )
            }
        }
    }

    /// Rows of `self` above rows of `other` (`self on other`).
    pub fn stack_rows(&self, other: &LocalMatrix) -> Result<LocalMatrix> {
        if self.cols != other.cols {
            return Err(Error::Dim(format!(
                "cannot stack {}x{} on {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let rows = self.rows + other.rows;
        match (&self.storage, &other.storage) {
            (Storage::Csr(a), Storage::Csr(b)) => {
                let mut indptr = a.indptr.clone();
                let base = *a.indptr.last().unwrap_or(&0);
                indptr.extend(b.indptr[1..].iter().map(|p| p + base));
                let indices = [a.indices.as_slice(), &b.indices].concat();
                let values = [a.values.as_slice(), &b.values].concat();
                Ok(LocalMatrix::csr_unchecked(
                    rows,
                    self.cols,
                    Csr {
                        indptr,
                        indices,
                        values,
                    },
                ))
            }
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                let data = [a.dense_data(), b.dense_data()].concat();
                Ok(LocalMatrix::dense_unchecked(rows, self.cols, data))
            }
        }
    }

    /// Columns of `self` followed by columns of `other` (`self then other`).
    pub fn concat_cols(&self, other: &LocalMatrix) -> Result<LocalMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dim(format!(
                "cannot place {}x{} beside {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let cols = self.cols + other.cols;
        match (&self.storage, &other.storage) {
            (Storage::Csr(a), Storage::Csr(b)) => {
                let mut indptr = vec![0];
                let mut indices = Vec::with_capacity(a.values.len() + b.values.len());
                let mut values = Vec::with_capacity(indices.capacity());
                for i in 0..self.rows {
                    for k in a.indptr[i]..a.indptr[i + 1] {
                        indices.push(a.indices[k]);
                        values.push(a.values[k]);
                    }
                    for k in b.indptr[i]..b.indptr[i + 1] {
                        indices.push(b.indices[k] + self.cols);
                        values.push(b.values[k]);
                    }
                    indptr.push(values.len());
                }
                Ok(LocalMatrix::csr_unchecked(
                    self.rows,
                    cols,
                    Csr {
                        indptr,
                        indices,
                        values,
                    },
                ))
            }
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                let mut data = Vec::with_capacity(self.rows * cols);
                for i in 0..self.rows {
                    data.extend_from_slice(&a.dense_data()[i * self.cols..(i + 1) * self.cols]);
                    data.extend_from_slice(&b.dense_data()[i * other.cols..(i + 1) * other.cols]);
                }
                Ok(LocalMatrix::dense_unchecked(self.rows, cols, data))
            }
        }
    }

    pub(crate) fn dense_data(&self) -> &[f64] {
        match &self.storage {
            Storage::Dense(d) => d,
            Storage::Csr(_) => panic!("dense_data on a CSR matrix"),
        }
    }

    /// Selects rows and columns in selector order. Two single indices give a
    /// scalar; anything else a matrix with the same storage kind.
    pub fn slice(&self, rows: impl Into<Sel>, cols: impl Into<Sel>) -> Result<Selection> {
        let (rows, cols) = (rows.into(), cols.into());
        if let (Sel::At(i), Sel::At(j)) = (&rows, &cols) {
            return self.get(*i, *j).map(Selection::Scalar);
        }
        let ri = rows.resolve(self.rows)?;
        let ci = cols.resolve(self.cols)?;
        let out = match &self.storage {
            Storage::Dense(d) => {
                let mut data = Vec::with_capacity(ri.len() * ci.len());
                for &i in &ri {
                    let row = &d[i * self.cols..(i + 1) * self.cols];
                    data.extend(ci.iter().map(|&j| row[j]));
                }
                LocalMatrix::dense_unchecked(ri.len(), ci.len(), data)
            }
            Storage::Csr(_) => {
                let all_cols = matches!(cols, Sel::All);
                let mut indptr = vec![0];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for &i in &ri {
                    if all_cols {
                        let (idx, vals) = self.sparse_row(i)?;
                        indices.extend(idx);
                        values.extend(vals);
                    } else {
                        for (new_j, &j) in ci.iter().enumerate() {
                            let v = self.at(i, j);
                            if v != 0.0 {
                                indices.push(new_j);
                                values.push(v);
                            }
                        }
                    }
                    indptr.push(values.len());
                }
                LocalMatrix::csr_unchecked(
                    ri.len(),
                    ci.len(),
                    Csr {
                        indptr,
                        indices,
                        values,
                    },
                )
            }
        };
        Ok(Selection::Matrix(out))
    }

    /// Overwrites the selected region. Dense storage only.
    pub fn update<'a>(
        &mut self,
        rows: impl Into<Sel>,
        cols: impl Into<Sel>,
        value: impl Into<Assign<'a>>,
    ) -> Result<()> {
        let ri = rows.into().resolve(self.rows)?;
        let ci = cols.into().resolve(self.cols)?;
        let ncols = self.cols;
        let Storage::Dense(data) = &mut self.storage else {
            return Err(Error::Unsupported("update on a CSR matrix".into()));
        };
        match value.into() {
            Assign::Scalar(x) => {
                for &i in &ri {
                    for &j in &ci {
                        data[i * ncols + j] = x;
                    }
                }
            }
            Assign::Matrix(src) => {
                if src.dims() != (ri.len(), ci.len()) {
                    return Err(Error::Dim(format!(
                        "cannot assign {}x{} into a {}x{} region",
                        src.rows,
                        src.cols,
                        ri.len(),
                        ci.len()
                    )));
                }
                for (si, &i) in ri.iter().enumerate() {
                    for (sj, &j) in ci.iter().enumerate() {
                        data[i * ncols + j] = src.at(si, sj);
                    }
                }
            }
        }
        Ok(())
    }

    /// Entrywise comparison across storage kinds.
    pub fn max_abs_diff(&self, other: &LocalMatrix) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::Dim(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        let a = self.to_dense();
        let b = other.to_dense();
        Ok(a.dense_data()
            .iter()
            .zip(b.dense_data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let vals: &[f64] = match &self.storage {
            Storage::Dense(d) => d,
            Storage::Csr(c) => &c.values,
        };
        vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for LocalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.is_sparse() { "csr" } else { "dense" };
        writeln!(f, "LocalMatrix<{kind}> {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:.4}", self.at(i, j)))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}
