use std::convert::Infallible;
use std::fmt::Display;
use std::ops::Deref;

use super::schema::{Column, Schema};
use super::table::{strip_partition, MLTable};
use super::value::{MLRow, ValueKind};
use crate::engine::WorkerPool;
use crate::error::{Error, Result};
use crate::localmatrix::LocalMatrix;

/// A table whose cells are all non-empty scalars. Row `i` is the feature
/// vector `x_i`.
///
/// Dereferences to [`MLTable`], so every table operation is available; those
/// return plain tables, which can be cast back with
/// [`MLTable::to_numeric`].
#[derive(Clone, Debug, PartialEq)]
pub struct MLNumericTable(MLTable);

impl MLNumericTable {
    pub(crate) fn from_table_unchecked(table: MLTable) -> Self {
        MLNumericTable(table)
    }

    /// Builds a table from equally long feature vectors split into
    /// `partitions` contiguous partitions.
    pub fn from_vectors<V: AsRef<[f64]>>(vectors: &[V], partitions: usize) -> Result<Self> {
        let d = vectors.first().map_or(0, |v| v.as_ref().len());
        MLNumericTable::from_vectors_with_width(vectors, d, partitions)
    }

    /// Like [`from_vectors`](Self::from_vectors) but with the column count
    /// fixed up front, so an empty set of vectors still has a schema.
    pub fn from_vectors_with_width<V: AsRef<[f64]>>(
        vectors: &[V],
        width: usize,
        partitions: usize,
    ) -> Result<Self> {
        let schema = Schema::scalars(width)?;
        let mut rows = Vec::with_capacity(vectors.len());
        for (i, v) in vectors.iter().enumerate() {
            let v = v.as_ref();
            if v.len() != width {
                return Err(Error::Dim(format!(
                    "vector {i} has {} entries, expected {width}",
                    v.len()
                )));
            }
            if let Some(j) = v.iter().position(|x| x.is_nan()) {
                return Err(Error::Cast {
                    row: i,
                    col: j,
                    reason: "NaN feature".into(),
                });
            }
            rows.push(MLRow::from_scalars(v));
        }
        let table = MLTable::with_partitions(schema, rows, partitions)?;
        Ok(MLNumericTable(table))
    }

    pub fn as_table(&self) -> &MLTable {
        &self.0
    }

    pub fn into_table(self) -> MLTable {
        self.0
    }

    pub fn with_pool(self, pool: WorkerPool) -> Self {
        MLNumericTable(self.0.with_pool(pool))
    }

    pub fn repartition(&self, partitions: usize) -> Result<Self> {
        self.0.repartition(partitions).map(MLNumericTable)
    }

    /// Number of features `d`.
    pub fn num_features(&self) -> usize {
        self.0.num_cols()
    }

    /// All rows as dense vectors.
    pub fn to_vectors(&self) -> Vec<Vec<f64>> {
        self.0
            .rows()
            .map(|r| r.to_scalars().expect("numeric row"))
            .collect()
    }

    /// Rows of partition `p` as a dense matrix.
    pub fn partition_matrix(&self, p: usize) -> Result<LocalMatrix> {
        let part = self.0.partitions().get(p).ok_or(Error::Index {
            index: p,
            bound: self.0.num_partitions(),
        })?;
        Ok(rows_to_matrix(part, self.num_features()))
    }

    /// Every partition as a dense matrix, in partition order.
    pub fn partition_matrices(&self) -> Vec<LocalMatrix> {
        let d = self.num_features();
        self.0
            .pool()
            .map_slices(self.0.partitions(), |_, rows| Ok(rows_to_matrix(rows, d)))
            .expect("conversion cannot fail")
    }

    /// Runs `f` on each partition as a dense [`LocalMatrix`] and stacks the
    /// returned matrices, in partition order, into a new table.
    pub fn matrix_batch_map<F>(&self, f: F) -> Result<MLNumericTable>
    where
        F: Fn(&LocalMatrix) -> LocalMatrix + Sync,
    {
        self.try_matrix_batch_map(|m| Ok::<_, Infallible>(f(m)))
    }

    pub fn try_matrix_batch_map<F, E>(&self, f: F) -> Result<MLNumericTable>
    where
        F: Fn(&LocalMatrix) -> std::result::Result<LocalMatrix, E> + Sync,
        E: Display,
    {
        let d = self.num_features();
        let outputs = self
            .0
            .pool()
            .map_slices(self.0.partitions(), |p, rows| {
                f(&rows_to_matrix(rows, d)).map_err(|e| Error::UserFunction {
                    row: self.0.partitions()[..p].iter().map(Vec::len).sum(),
                    message: e.to_string(),
                })
            })
            .map_err(strip_partition)?;
        let width = outputs.first().map_or(d, LocalMatrix::num_cols);
        if let Some((p, m)) = outputs
            .iter()
            .enumerate()
            .find(|(_, m)| m.num_cols() != width)
        {
            return Err(Error::Schema(format!(
                "partition {p} produced {} columns, partition 0 produced {width}",
                m.num_cols()
            )));
        }
        let schema = if width == d {
            self.0.schema().clone()
        } else {
            Schema::new(vec![Column::unnamed(ValueKind::Scalar); width])?
        };
        let parts = outputs
            .iter()
            .map(|m| {
                (0..m.num_rows())
                    .map(|i| MLRow::from_scalars(&m.row_values(i).expect("in range")))
                    .collect()
            })
            .collect();
        Ok(MLNumericTable(MLTable::assemble_unchecked(
            schema,
            parts,
            self.0.pool().clone(),
        )))
    }
}

pub(crate) fn rows_to_matrix(rows: &[MLRow], d: usize) -> LocalMatrix {
    let mut data = Vec::with_capacity(rows.len() * d);
    for r in rows {
        data.extend(r.iter().map(|v| v.as_scalar().expect("numeric row")));
    }
    LocalMatrix::dense_unchecked(rows.len(), d, data)
}

impl Deref for MLNumericTable {
    type Target = MLTable;

    fn deref(&self) -> &MLTable {
        &self.0
    }
}

impl TryFrom<MLTable> for MLNumericTable {
    type Error = Error;

    fn try_from(t: MLTable) -> Result<Self> {
        t.to_numeric()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localmatrix::Sel;

    fn table(parts: usize) -> MLNumericTable {
        let v: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![i as f64, (i * i) as f64 - 3.0])
            .collect();
        MLNumericTable::from_vectors(&v, parts).unwrap()
    }

    #[test]
    fn identity_batch_map() {
        let t = table(3);
        assert_eq!(t.matrix_batch_map(|m| m.clone()).unwrap(), t);
    }

    #[test]
    fn append_ones_column() {
        let t = table(2);
        let out = t
            .matrix_batch_map(|m| {
                m.concat_cols(
                    &LocalMatrix::from_vec(m.num_rows(), 1, vec![1.0; m.num_rows()]).unwrap(),
                )
                .unwrap()
            })
            .unwrap();
        assert_eq!(out.num_cols(), 3);
        assert_eq!(out.num_rows(), 7);
        assert!(out.rows().all(|r| r[2].as_scalar() == Some(1.0)));
    }

    #[test]
    fn inconsistent_widths_fail() {
        let t = table(3);
        let err = t
            .matrix_batch_map(|m| {
                if m.num_rows() == 3 {
                    m.clone()
                } else {
                    m.slice(.., 0).unwrap().into_matrix()
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn partition_matrices_follow_partitioning() {
        let t = table(3);
        let mats = t.partition_matrices();
        assert_eq!(
            mats.iter().map(|m| m.num_rows()).collect::<Vec<_>>(),
            vec![3, 2, 2]
        );
        assert_eq!(
            mats[1]
                .slice(0, Sel::All)
                .unwrap()
                .into_matrix()
                .row_values(0)
                .unwrap(),
            vec![3.0, 6.0]
        );
    }

    #[test]
    fn from_vectors_rejects_ragged() {
        assert!(MLNumericTable::from_vectors(&[vec![1.0], vec![1.0, 2.0]], 1).is_err());
        assert!(MLNumericTable::from_vectors(&[vec![f64::NAN]], 1).is_err());
    }
}
