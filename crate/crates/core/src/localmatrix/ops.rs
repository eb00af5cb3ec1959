use super::{Csr, LocalMatrix, Storage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ElemOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ElemOp::Add => a + b,
            ElemOp::Sub => a - b,
            ElemOp::Mul => a * b,
            ElemOp::Div => a / b,
        }
    }
}

/// Right operand of [`LocalMatrix::elementwise`].
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Scalar(f64),
    Matrix(&'a LocalMatrix),
}

impl From<f64> for Operand<'_> {
    fn from(x: f64) -> Self {
        Operand::Scalar(x)
    }
}

impl<'a> From<&'a LocalMatrix> for Operand<'a> {
    fn from(m: &'a LocalMatrix) -> Self {
        Operand::Matrix(m)
    }
}

fn merge_rows(a: &Csr, b: &Csr, rows: usize, op: ElemOp) -> Csr {
    let mut indptr = Vec::with_capacity(rows + 1);
    let mut indices = Vec::with_capacity(a.values.len() + b.values.len());
    let mut values = Vec::with_capacity(indices.capacity());
    indptr.push(0);
    for i in 0..rows {
        let (mut p, pe) = (a.indptr[i], a.indptr[i + 1]);
        let (mut q, qe) = (b.indptr[i], b.indptr[i + 1]);
        while p < pe || q < qe {
            let ca = if p < pe { a.indices[p] } else { usize::MAX };
            let cb = if q < qe { b.indices[q] } else { usize::MAX };
            let (col, v) = if ca == cb {
                let v = op.apply(a.values[p], b.values[q]);
                p += 1;
                q += 1;
                (ca, v)
            } else if ca < cb {
                p += 1;
                (ca, op.apply(a.values[p - 1], 0.0))
            } else {
                q += 1;
                (cb, op.apply(0.0, b.values[q - 1]))
            };
            indices.push(col);
            values.push(v);
        }
        indptr.push(values.len());
    }
    Csr {
        indptr,
        indices,
        values,
    }
}

impl LocalMatrix {
    /// Entrywise `self op rhs`. Results are dense except for CSR scaled by
    /// a finite scalar and CSR plus or minus CSR, which stay sparse.
    /// Division by zero follows IEEE semantics.
    pub fn elementwise<'a>(&self, rhs: impl Into<Operand<'a>>, op: ElemOp) -> Result<LocalMatrix> {
        match rhs.into() {
            Operand::Scalar(x) => {
                if let Storage::Csr(c) = &self.storage {
                    if op == ElemOp::Mul && x.is_finite() {
                        let csr = Csr {
                            indptr: c.indptr.clone(),
                            indices: c.indices.clone(),
                            values: c.values.iter().map(|v| v * x).collect(),
                        };
                        return Ok(LocalMatrix::csr_unchecked(self.rows, self.cols, csr));
                    }
                }
                let d = self.to_dense();
                let data = d.dense_data().iter().map(|&a| op.apply(a, x)).collect();
                Ok(LocalMatrix::dense_unchecked(self.rows, self.cols, data))
            }
            Operand::Matrix(other) => {
                if self.dims() != other.dims() {
                    return Err(Error::Dim(format!(
                        "elementwise on {}x{} and {}x{}",
                        self.rows, self.cols, other.rows, other.cols
                    )));
                }
                if let (Storage::Csr(a), Storage::Csr(b), ElemOp::Add | ElemOp::Sub) =
                    (&self.storage, &other.storage, op)
                {
                    let csr = merge_rows(a, b, self.rows, op);
                    return Ok(LocalMatrix::csr_unchecked(self.rows, self.cols, csr));
                }
                let a = self.to_dense();
                let b = other.to_dense();
                let data = a
                    .dense_data()
                    .iter()
                    .zip(b.dense_data())
                    .map(|(&x, &y)| op.apply(x, y))
                    .collect();
                Ok(LocalMatrix::dense_unchecked(self.rows, self.cols, data))
            }
        }
    }

    pub fn scale(&self, factor: f64) -> LocalMatrix {
        self.elementwise(factor, ElemOp::Mul)
            .expect("scalar operand")
    }

    /// Matrix product. Sparse operands are never densified; the result is
    /// CSR only when both operands are CSR.
    ///
    /// Every kernel accumulates `sum_k a[i][k] * b[k][j]` in ascending `k`,
    /// so dense and CSR encodings of the same operands agree.
    pub fn times(&self, other: &LocalMatrix) -> Result<LocalMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m) = (self.rows, other.cols);
        let inner = self.cols;
        match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => {
                let mut out = vec![0.0; n * m];
                for i in 0..n {
                    let orow = &mut out[i * m..(i + 1) * m];
                    for k in 0..inner {
                        let aik = a[i * inner + k];
                        let brow = &b[k * m..(k + 1) * m];
                        for (o, bv) in orow.iter_mut().zip(brow) {
                            *o += aik * bv;
                        }
                    }
                }
                Ok(LocalMatrix::dense_unchecked(n, m, out))
            }
            (Storage::Csr(a), Storage::Dense(b)) => {
                let mut out = vec![0.0; n * m];
                for i in 0..n {
                    let orow = &mut out[i * m..(i + 1) * m];
                    for p in a.indptr[i]..a.indptr[i + 1] {
                        let (k, aik) = (a.indices[p], a.values[p]);
                        let brow = &b[k * m..(k + 1) * m];
                        for (o, bv) in orow.iter_mut().zip(brow) {
                            *o += aik * bv;
                        }
                    }
                }
                Ok(LocalMatrix::dense_unchecked(n, m, out))
            }
            (Storage::Dense(a), Storage::Csr(b)) => {
                let mut out = vec![0.0; n * m];
                for i in 0..n {
                    let orow = &mut out[i * m..(i + 1) * m];
                    for k in 0..inner {
                        let aik = a[i * inner + k];
                        for q in b.indptr[k]..b.indptr[k + 1] {
                            orow[b.indices[q]] += aik * b.values[q];
                        }
                    }
                }
                Ok(LocalMatrix::dense_unchecked(n, m, out))
            }
            (Storage::Csr(a), Storage::Csr(b)) => {
                let mut acc = vec![0.0; m];
                let mut touched = vec![false; m];
                let mut cols_hit = Vec::new();
                let mut indptr = vec![0];
                let mut indices = Vec::new();
                let mut values = Vec::new();
                for i in 0..n {
                    for p in a.indptr[i]..a.indptr[i + 1] {
                        let (k, aik) = (a.indices[p], a.values[p]);
                        for q in b.indptr[k]..b.indptr[k + 1] {
                            let j = b.indices[q];
                            if !touched[j] {
                                touched[j] = true;
                                cols_hit.push(j);
                            }
                            acc[j] += aik * b.values[q];
                        }
                    }
                    cols_hit.sort_unstable();
                    for &j in &cols_hit {
                        indices.push(j);
                        values.push(acc[j]);
                        acc[j] = 0.0;
                        touched[j] = false;
                    }
                    cols_hit.clear();
                    indptr.push(values.len());
                }
                Ok(LocalMatrix::csr_unchecked(
                    n,
                    m,
                    Csr {
                        indptr,
                        indices,
                        values,
                    },
                ))
            }
        }
    }

    /// Inner product of two vectors (either orientation) of equal length.
    pub fn dot(&self, other: &LocalMatrix) -> Result<f64> {
        let is_vec = |m: &LocalMatrix| m.rows == 1 || m.cols == 1;
        let len = |m: &LocalMatrix| m.rows * m.cols;
        if !is_vec(self) || !is_vec(other) || len(self) != len(other) {
            return Err(Error::Dim(format!(
                "dot needs equal-length vectors, got {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let at = |m: &LocalMatrix, k: usize| {
            if m.rows == 1 {
                m.at(0, k)
            } else {
                m.at(k, 0)
            }
        };
        match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => Ok(a.iter().zip(b).map(|(x, y)| x * y).sum()),
            _ => {
                let mut sum = 0.0;
                for k in 0..len(self) {
                    let x = at(self, k);
                    if x != 0.0 {
                        sum += x * at(other, k);
                    }
                }
                Ok(sum)
            }
        }
    }

    pub fn transpose(&self) -> LocalMatrix {
        let (r, c) = (self.rows, self.cols);
        match &self.storage {
            Storage::Dense(d) => {
                let mut out = vec![0.0; r * c];
                for i in 0..r {
                    for j in 0..c {
                        out[j * r + i] = d[i * c + j];
                    }
                }
                LocalMatrix::dense_unchecked(c, r, out)
            }
            Storage::Csr(a) => {
                let nnz = a.values.len();
                let mut indptr = vec![0usize; c + 1];
                for &j in &a.indices {
                    indptr[j + 1] += 1;
                }
                for j in 0..c {
                    indptr[j + 1] += indptr[j];
                }
                let mut next = indptr.clone();
                let mut indices = vec![0; nnz];
                let mut values = vec![0.0; nnz];
                for i in 0..r {
                    for p in a.indptr[i]..a.indptr[i + 1] {
                        let j = a.indices[p];
                        let dst = next[j];
                        indices[dst] = i;
                        values[dst] = a.values[p];
                        next[j] += 1;
                    }
                }
                LocalMatrix::csr_unchecked(
                    c,
                    r,
                    Csr {
                        indptr,
                        indices,
                        values,
                    },
                )
            }
        }
    }
}
