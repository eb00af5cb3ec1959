use super::LocalMatrix;
use crate::error::{Error, Result};

/// Pivots at or below this magnitude make `solve` report a singular matrix.
pub const PIVOT_TOLERANCE: f64 = 1e-12;
/// Largest tolerated `|a_ij - a_ji|` for `eigen`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Singular values above `RANK_TOLERANCE * max(s)` count towards the rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(s) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: LocalMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    pub v: LocalMatrix,
}

/// Eigen-decomposition of a symmetric matrix. `vectors` holds one unit
/// eigenvector per column, matching `values` (non-increasing).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: LocalMatrix,
}

/// Column-major copy of a matrix, convenient for column rotations.
fn columns_of(m: &LocalMatrix) -> Vec<Vec<f64>> {
    let d = m.to_dense();
    let (r, c) = d.dims();
    let data = d.dense_data();
    (0..c)
        .map(|j| (0..r).map(|i| data[i * c + j]).collect())
        .collect()
}

fn from_columns(rows: usize, cols: &[Vec<f64>]) -> LocalMatrix {
    let c = cols.len();
    let mut data = vec![0.0; rows * c];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * c + j] = *v;
        }
    }
    LocalMatrix::dense_unchecked(rows, c, data)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl LocalMatrix {
    /// Solves `self * x = b` by LU decomposition with partial pivoting.
    /// `b` may have several columns.
    pub fn solve(&self, b: &LocalMatrix) -> Result<LocalMatrix> {
        let n = self.rows;
        if self.cols != n {
            return Err(Error::Dim(format!(
                "solve needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if b.rows != n {
            return Err(Error::Dim(format!(
                "right-hand side has {} rows, expected {n}",
                b.rows
            )));
        }
        let mut a = self.to_dense().dense_data().to_vec();
        let m = b.cols;
        let mut x = b.to_dense().dense_data().to_vec();

        for col in 0..n {
            let (pivot_row, pivot) = (col..n)
                .map(|r| (r, a[r * n + col]))
                .max_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
                .expect("non-empty range");
            if pivot.is_nan() || pivot.abs() <= PIVOT_TOLERANCE {
                return Err(Error::SingularMatrix { col, pivot });
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                for j in 0..m {
                    x.swap(col * m + j, pivot_row * m + j);
                }
            }
            for r in col + 1..n {
                let factor = a[r * n + col] / pivot;
                if factor == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in col + 1..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
                for j in 0..m {
                    x[r * m + j] -= factor * x[col * m + j];
                }
            }
        }
        for col in (0..n).rev() {
            let pivot = a[col * n + col];
            for j in 0..m {
                let mut s = x[col * m + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * x[k * m + j];
                }
                x[col * m + j] = s / pivot;
            }
        }
        Ok(LocalMatrix::dense_unchecked(n, m, x))
    }

    /// [`solve`](Self::solve) for a single right-hand side vector.
    pub fn solve_vector(&self, b: &[f64]) -> Result<Vec<f64>> {
        let x = self.solve(&LocalMatrix::column(b))?;
        Ok(x.dense_data().to_vec())
    }

    /// Thin SVD by one-sided Jacobi rotations. For an `m x n` input, `U` is
    /// `m x r`, `V` is `n x r` with `r = min(m, n)`.
    pub fn svd(&self) -> Result<Svd> {
        if self.rows < self.cols {
            let t = self.transpose().svd()?;
            return Ok(Svd {
                u: t.v,
                singular_values: t.singular_values,
                v: t.u,
            });
        }
        let (m, n) = self.dims();
        let mut w = columns_of(self);
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();

        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = dot(&w[p], &w[p]);
                    let beta = dot(&w[q], &w[q]);
                    let gamma = dot(&w[p], &w[q]);
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }

        let mut order: Vec<(f64, usize)> = w.iter().map(|c| norm(c)).zip(0..).collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        let smax = order.first().map_or(0.0, |o| o.0);
        let cutoff = smax * 1e-13;

        let mut u_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        let mut v_cols = Vec::with_capacity(n);
        for &(sigma, j) in &order {
            s.push(sigma);
            v_cols.push(v[j].clone());
            if sigma > cutoff && sigma > 0.0 {
                u_cols.push(Some(w[j].iter().map(|x| x / sigma).collect()));
            } else {
                u_cols.push(None);
            }
        }
        let u_cols = complete_basis(m, u_cols);
        Ok(Svd {
            u: from_columns(m, &u_cols),
            singular_values: s,
            v: from_columns(n, &v_cols),
        })
    }

    /// Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi.
    pub fn eigen(&self) -> Result<Eigen> {
        let n = self.rows;
        if self.cols != n {
            return Err(Error::Dim(format!(
                "eigen needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let d = self.to_dense();
        let mut a = d.dense_data().to_vec();
        for i in 0..n {
            for j in i + 1..n {
                if (a[i * n + j] - a[j * n + i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::Unsupported(
                        "eigen decomposition of a non-symmetric matrix".into(),
                    ));
                }
            }
        }
        let mut v = LocalMatrix::identity(n).dense_data().to_vec();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();

        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum();
            if off.sqrt() <= f64::EPSILON * scale * 1e-3 || off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    // A <- J^T A J, touching rows and columns p, q
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
        let values = order.iter().map(|&i| a[i * n + i]).collect();
        let mut vectors = vec![0.0; n * n];
        for (new_j, &j) in order.iter().enumerate() {
            for k in 0..n {
                vectors[k * n + new_j] = v[k * n + j];
            }
        }
        Ok(Eigen {
            values,
            vectors: LocalMatrix::dense_unchecked(n, n, vectors),
        })
    }

    /// Number of singular values above `1e-10 * max(s)`; zero for an all-zero
    /// matrix.
    pub fn rank(&self) -> Result<usize> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(0);
        }
        let s = self.svd()?.singular_values;
        let smax = s.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return Ok(0);
        }
        Ok(s.iter().filter(|&&x| x > RANK_TOLERANCE * smax).count())
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills missing columns with unit vectors orthogonal to all others, by
/// Gram-Schmidt on the standard basis.
fn complete_basis(m: usize, cols: Vec<Option<Vec<f64>>>) -> Vec<Vec<f64>> {
    let mut done: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut out = Vec::with_capacity(cols.len());
    let mut next_basis = 0;
    for col in cols {
        match col {
            Some(c) => out.push(c),
            None => {
                let mut best: Option<Vec<f64>> = None;
                while next_basis < m {
                    let mut e = vec![0.0; m];
                    e[next_basis] = 1.0;
                    next_basis += 1;
                    for _ in 0..2 {
                        for d in &done {
                            let proj = dot(&e, d);
                            for (x, y) in e.iter_mut().zip(d) {
                                *x -= proj * y;
                            }
                        }
                    }
                    let len = norm(&e);
                    if len > 1e-6 {
                        best = Some(e.iter().map(|x| x / len).collect());
                        break;
                    }
                }
                let c = best.expect("standard basis spans the space");
                done.push(c.clone());
                out.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> LocalMatrix {
        LocalMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn solve_examples() {
        let b = [3.0, -1.0, 2.0];
        assert_eq!(
            LocalMatrix::identity(3).solve_vector(&b).unwrap(),
            b.to_vec()
        );
        let a = m(&[&[2.0, 0.0], &[0.0, 4.0]]);
        assert_eq!(a.solve_vector(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(a.solve_vector(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn solve_errors() {
        let singular = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(
            singular.solve_vector(&[1.0, 1.0]),
            Err(Error::SingularMatrix { .. })
        ));
        assert!(matches!(
            LocalMatrix::zeros(2, 3).solve_vector(&[1.0, 1.0]),
            Err(Error::Dim(_))
        ));
        assert!(matches!(
            LocalMatrix::identity(2).solve_vector(&[1.0]),
            Err(Error::Dim(_))
        ));
    }

    #[test]
    fn svd_of_diagonal() {
        let s = m(&[&[3.0, 0.0], &[0.0, 1.0]]).svd().unwrap();
        assert_eq!(s.singular_values, vec![3.0, 1.0]);
        let s = m(&[&[1.0, 0.0], &[0.0, 3.0]]).svd().unwrap();
        assert_eq!(s.singular_values, vec![3.0, 1.0]);
    }

    #[test]
    fn svd_of_wide_matrix() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let s = a.svd().unwrap();
        assert_eq!(s.u.dims(), (2, 2));
        assert_eq!(s.v.dims(), (3, 2));
        let mut us = s.u.clone();
        for j in 0..2 {
            for i in 0..2 {
                let x = us.get(i, j).unwrap() * s.singular_values[j];
                us.update(i, j, x).unwrap();
            }
        }
        let back = us.times(&s.v.transpose()).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn svd_of_zero_matrix_is_orthonormal() {
        let s = LocalMatrix::zeros(3, 2).svd().unwrap();
        assert_eq!(s.singular_values, vec![0.0, 0.0]);
        let utu = s.u.transpose().times(&s.u).unwrap();
        assert!(utu.max_abs_diff(&LocalMatrix::identity(2)).unwrap() < 1e-15);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(LocalMatrix::zeros(4, 4).rank().unwrap(), 0);
        assert_eq!(LocalMatrix::identity(5).rank().unwrap(), 5);
        let u = LocalMatrix::column(&[1.0, -2.0, 0.5]);
        let v = LocalMatrix::row(&[3.0, 1.0, 4.0, -1.0]);
        assert_eq!(u.times(&v).unwrap().rank().unwrap(), 1);
        assert_eq!(LocalMatrix::zeros(0, 3).rank().unwrap(), 0);
    }

    #[test]
    fn eigen_examples() {
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = a.eigen().unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        for j in 0..2 {
            let v = e.vectors.slice(.., j).unwrap().into_matrix();
            let av = a.times(&v).unwrap();
            assert!(av.max_abs_diff(&v.scale(e.values[j])).unwrap() < 1e-12);
        }
        assert!(matches!(
            m(&[&[1.0, 2.0], &[0.0, 1.0]]).eigen(),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            LocalMatrix::zeros(2, 3).eigen(),
            Err(Error::Dim(_))
        ));
    }
}
