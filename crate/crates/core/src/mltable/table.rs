use std::collections::HashMap;
use std::convert::Infallible;
use std::fmt::{self, Display};
use std::sync::Arc;

use super::numeric::MLNumericTable;
use super::schema::{Column, Schema};
use super::value::{KeyValue, MLRow, MLValue, ValueKind};
use crate::engine::WorkerPool;
use crate::error::{Error, Result};

/// An immutable, schema-carrying collection of rows split into partitions.
///
/// The logical row order is the concatenation of the partitions in order.
/// Every operation returns a new table; partition-level work runs on the
/// table's [`WorkerPool`].
#[derive(Clone)]
pub struct MLTable {
    schema: Schema,
    partitions: Arc<Vec<Vec<MLRow>>>,
    pool: WorkerPool,
}

/// Splits `rows` into `parts` contiguous chunks whose sizes differ by at most
/// one, larger chunks first.
pub(crate) fn split_even<T>(rows: Vec<T>, parts: usize) -> Vec<Vec<T>> {
    let parts = parts.max(1);
    let n = rows.len();
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut it = rows.into_iter();
    for p in 0..parts {
        let size = base + usize::from(p < extra);
        out.push(it.by_ref().take(size).collect());
    }
    out
}

pub(crate) fn strip_partition(e: Error) -> Error {
    match e {
        Error::Partition { source, .. } => strip_partition(*source),
        other => other,
    }
}

impl MLTable {
    /// Builds a table on the shared default pool with one partition per worker.
    pub fn new(schema: Schema, rows: Vec<MLRow>) -> Result<Self> {
        let pool = WorkerPool::default();
        let parts = pool.workers();
        MLTable::with_partitions(schema, rows, parts).map(|t| t.with_pool(pool))
    }

    pub fn with_partitions(schema: Schema, rows: Vec<MLRow>, partitions: usize) -> Result<Self> {
        if partitions == 0 {
            return Err(Error::Config("partition count must be positive".into()));
        }
        MLTable::from_partitions(schema, split_even(rows, partitions))
    }

    /// Uses the given partitioning as is. An empty list yields one empty
    /// partition.
    pub fn from_partitions(schema: Schema, mut partitions: Vec<Vec<MLRow>>) -> Result<Self> {
        let mut index = 0;
        for part in &partitions {
            for row in part {
                schema
                    .check(row)
                    .map_err(|e| Error::Schema(format!("row {index}: {e}")))?;
                index += 1;
            }
        }
        if partitions.is_empty() {
            partitions.push(Vec::new());
        }
        Ok(MLTable::assemble_unchecked(
            schema,
            partitions,
            WorkerPool::default(),
        ))
    }

    pub fn empty(schema: Schema) -> Self {
        MLTable::assemble_unchecked(schema, vec![Vec::new()], WorkerPool::default())
    }

    pub(crate) fn assemble_unchecked(
        schema: Schema,
        partitions: Vec<Vec<MLRow>>,
        pool: WorkerPool,
    ) -> Self {
        MLTable {
            schema,
            partitions: Arc::new(partitions),
            pool,
        }
    }

    /// Same rows and partitioning, executed on `pool`.
    pub fn with_pool(mut self, pool: WorkerPool) -> Self {
        self.pool = pool;
        self
    }

    pub fn pool(&self) -> &WorkerPool {
        &self.pool
    }

    pub fn repartition(&self, partitions: usize) -> Result<MLTable> {
        if partitions == 0 {
            return Err(Error::Config("partition count must be positive".into()));
        }
        let rows = self.to_rows();
        Ok(MLTable::assemble_unchecked(
            self.schema.clone(),
            split_even(rows, partitions),
            self.pool.clone(),
        ))
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn partitions(&self) -> &[Vec<MLRow>] {
        &self.partitions
    }

    pub fn num_partitions(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition_sizes(&self) -> Vec<usize> {
        self.partitions.iter().map(Vec::len).collect()
    }

    pub fn num_rows(&self) -> usize {
        self.partitions.iter().map(Vec::len).sum()
    }

    pub fn num_cols(&self) -> usize {
        self.schema.len()
    }

    /// Rows in logical order.
    pub fn rows(&self) -> impl Iterator<Item = &MLRow> + '_ {
        self.partitions.iter().flatten()
    }

    pub fn to_rows(&self) -> Vec<MLRow> {
        self.rows().cloned().collect()
    }

    /// Global index of the first row of each partition.
    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.partitions
            .iter()
            .map(|p| {
                let start = acc;
                acc += p.len();
                start
            })
            .collect()
    }

    fn derive(&self, schema: Schema, partitions: Vec<Vec<MLRow>>) -> MLTable {
        MLTable::assemble_unchecked(schema, partitions, self.pool.clone())
    }

    fn check_col(&self, col: usize) -> Result<()> {
        if col >= self.num_cols() {
            return Err(Error::Index {
                index: col,
                bound: self.num_cols(),
            });
        }
        Ok(())
    }

    /// Keeps the columns at `cols`, in that order.
    pub fn project(&self, cols: &[usize]) -> Result<MLTable> {
        for &c in cols {
            self.check_col(c)?;
        }
        let mut names_used = std::collections::HashSet::new();
        let columns = cols
            .iter()
            .map(|&c| {
                let src = &self.schema.columns()[c];
                let name = src.name.clone().filter(|n| names_used.insert(n.clone()));
                Column {
                    name,
                    kind: src.kind,
                }
            })
            .collect();
        let schema = Schema::new(columns)?;
        let parts = self
            .pool
            .map_slices(&self.partitions, |_, rows| {
                Ok(rows
                    .iter()
                    .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
                    .collect())
            })
            .map_err(strip_partition)?;
        Ok(self.derive(schema, parts))
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn union(&self, other: &MLTable) -> Result<MLTable> {
        if !self.schema.compatible(&other.schema) {
            return Err(Error::Schema(format!(
                "cannot union {} with {}",
                self.schema, other.schema
            )));
        }
        let columns = self
            .schema
            .columns()
            .iter()
            .zip(other.schema.columns())
            .map(|(a, b)| Column {
                name: a.name.clone().or_else(|| b.name.clone()),
                kind: a.kind,
            })
            .collect();
        let schema = Schema::new(columns)?;
        let parts = self
            .partitions
            .iter()
            .chain(other.partitions.iter())
            .filter(|p| !p.is_empty())
            .cloned()
            .collect::<Vec<_>>();
        let parts = if parts.is_empty() {
            vec![Vec::new()]
        } else {
            parts
        };
        Ok(self.derive(schema, parts))
    }

    pub fn filter<F>(&self, pred: F) -> MLTable
    where
        F: Fn(&MLRow) -> bool + Sync,
    {
        match self.try_filter(|r| Ok::<_, Infallible>(pred(r))) {
            Ok(t) => t,
            Err(e) => unreachable!("infallible predicate failed: {e}"),
        }
    }

    /// Like [`filter`](Self::filter) for predicates that can fail; the error
    /// names the global index of the offending row.
    pub fn try_filter<F, E>(&self, pred: F) -> Result<MLTable>
    where
        F: Fn(&MLRow) -> std::result::Result<bool, E> + Sync,
        E: Display,
    {
        let offsets = self.offsets();
        let parts = self
            .pool
            .map_slices(&self.partitions, |p, rows| {
                let mut kept = Vec::new();
                for (i, row) in rows.iter().enumerate() {
                    match pred(row) {
                        Ok(true) => kept.push(row.clone()),
                        Ok(false) => {}
                        Err(e) => {
                            return Err(Error::UserFunction {
                                row: offsets[p] + i,
                                message: e.to_string(),
                            })
                        }
                    }
                }
                Ok(kept)
            })
            .map_err(strip_partition)?;
        Ok(self.derive(self.schema.clone(), parts))
    }

    /// Applies `f` to every row. The output schema is inferred from the
    /// produced rows and enforced on all of them.
    pub fn map<F>(&self, f: F) -> Result<MLTable>
    where
        F: Fn(&MLRow) -> MLRow + Sync,
    {
        self.try_map(|r| Ok::<_, Infallible>(f(r)))
    }

    pub fn try_map<F, E>(&self, f: F) -> Result<MLTable>
    where
        F: Fn(&MLRow) -> std::result::Result<MLRow, E> + Sync,
        E: Display,
    {
        self.try_flat_map(|r| f(r).map(std::iter::once))
    }

    /// Applies `f` to every row and concatenates the produced rows in input
    /// order.
    pub fn flat_map<F, I>(&self, f: F) -> Result<MLTable>
    where
        F: Fn(&MLRow) -> I + Sync,
        I: IntoIterator<Item = MLRow>,
    {
        self.try_flat_map(|r| Ok::<_, Infallible>(f(r)))
    }

    pub fn try_flat_map<F, I, E>(&self, f: F) -> Result<MLTable>
    where
        F: Fn(&MLRow) -> std::result::Result<I, E> + Sync,
        I: IntoIterator<Item = MLRow>,
        E: Display,
    {
        let offsets = self.offsets();
        let parts = self
            .pool
            .map_slices(&self.partitions, |p, rows| {
                let mut out = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    let produced = f(row).map_err(|e| Error::UserFunction {
                        row: offsets[p] + i,
                        message: e.to_string(),
                    })?;
                    out.extend(produced);
                }
                Ok(out)
            })
            .map_err(strip_partition)?;
        self.assemble_inferred(parts, &self.schema.clone())
    }

    /// Infers the schema of user-produced rows and checks each of them.
    fn assemble_inferred(&self, parts: Vec<Vec<MLRow>>, fallback: &Schema) -> Result<MLTable> {
        let schema = match Schema::infer(parts.iter().flatten(), fallback)? {
            Some(s) => s,
            None => fallback.clone(),
        };
        for (i, row) in parts.iter().flatten().enumerate() {
            schema
                .check(row)
                .map_err(|e| Error::Schema(format!("output row {i}: {e}")))?;
        }
        Ok(self.derive(schema, parts))
    }

    fn check_no_empty(&self, cols: impl Fn(usize) -> bool) -> Result<()> {
        for (i, row) in self.rows().enumerate() {
            if let Some(c) = row
                .iter()
                .enumerate()
                .position(|(j, v)| cols(j) && v.is_empty())
            {
                return Err(Error::Schema(format!(
                    "empty cell at row {i}, column {c} cannot be reduced"
                )));
            }
        }
        Ok(())
    }

    /// Folds all rows with an associative, commutative `f`.
    ///
    /// Partitions are folded in parallel; the partial results are then
    /// combined at the master in partition order.
    pub fn reduce<F>(&self, f: F) -> Result<MLRow>
    where
        F: Fn(&MLRow, &MLRow) -> MLRow + Sync,
    {
        if self.num_rows() == 0 {
            return Err(Error::EmptyTable);
        }
        self.check_no_empty(|_| true)?;
        let partials = self
            .pool
            .map_slices(&self.partitions, |_, rows| {
                let mut it = rows.iter();
                Ok(it
                    .next()
                    .map(|first| it.fold(first.clone(), |acc, r| f(&acc, r))))
            })
            .map_err(strip_partition)?;
        let mut partials = partials.into_iter().flatten();
        let first = partials.next().ok_or(Error::EmptyTable)?;
        Ok(partials.fold(first, |acc, r| f(&acc, &r)))
    }

    /// Groups rows by the value in `key_col` and folds the remaining columns
    /// of each group with `f`. Output rows are `key` followed by the folded
    /// values, sorted by key.
    pub fn reduce_by_key<F>(&self, key_col: usize, f: F) -> Result<MLTable>
    where
        F: Fn(&MLRow, &MLRow) -> MLRow + Sync,
    {
        self.check_col(key_col)?;
        if self.num_rows() == 0 {
            return Err(Error::EmptyTable);
        }
        self.check_no_empty(|_| true)?;
        let split = |row: &MLRow| -> MLRow {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != key_col)
                .map(|(_, v)| v.clone())
                .collect()
        };
        type Groups = HashMap<KeyValue, (MLValue, MLRow)>;
        let partials: Vec<Groups> = self
            .pool
            .map_slices(&self.partitions, |_, rows| {
                let mut groups: Groups = HashMap::new();
                for row in rows {
                    let key_val = &row[key_col];
                    let key = key_val.key().ok_or_else(|| {
                        Error::Schema(format!("key {key_val:?} cannot be grouped"))
                    })?;
                    let rest = split(row);
                    match groups.get_mut(&key) {
                        Some((_, acc)) => *acc = f(acc, &rest),
                        None => {
                            groups.insert(key, (key_val.clone(), rest));
                        }
                    }
                }
                Ok(groups)
            })
            .map_err(strip_partition)?;
        let mut merged: Groups = HashMap::new();
        for part in partials {
            for (key, (key_val, acc)) in part {
                match merged.get_mut(&key) {
                    Some((_, total)) => *total = f(total, &acc),
                    None => {
                        merged.insert(key, (key_val, acc));
                    }
                }
            }
        }
        let mut out: Vec<(MLValue, MLRow)> = merged.into_values().collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        let rows: Vec<MLRow> = out
            .into_iter()
            .map(|(k, rest)| std::iter::once(k).chain(rest.into_values()).collect())
            .collect();

        let key_column = self.schema.columns()[key_col].clone();
        let fallback_cols: Vec<Column> = std::iter::once(key_column)
            .chain(
                self.schema
                    .columns()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != key_col)
                    .map(|(_, c)| c.clone()),
            )
            .collect();
        let fallback = Schema::new(fallback_cols)?;
        let parts = split_even(rows, self.num_partitions());
        self.assemble_inferred(parts, &fallback)
    }

    /// Inner equi-join on the columns at `keys`, which must exist with equal
    /// kinds in both tables. Output columns are all of `self`'s followed by
    /// `other`'s non-key columns. For every row of `self`, in order, one
    /// output row is emitted per matching row of `other`, in `other`'s order.
    /// `Empty` and NaN keys never match.
    pub fn join(&self, other: &MLTable, keys: &[usize]) -> Result<MLTable> {
        if keys.is_empty() {
            return Err(Error::Schema("join needs at least one key column".into()));
        }
        for &k in keys {
            self.check_col(k)?;
            other.check_col(k)?;
            let (a, b) = (
                self.schema.columns()[k].kind,
                other.schema.columns()[k].kind,
            );
            if a != b {
                return Err(Error::Schema(format!(
                    "key column {k} has kind {a} on the left and {b} on the right"
                )));
            }
        }
        let right_cols: Vec<usize> = (0..other.num_cols())
            .filter(|c| !keys.contains(c))
            .collect();

        let mut columns: Vec<Column> = self.schema.columns().to_vec();
        for &c in &right_cols {
            let src = &other.schema.columns()[c];
            let name = src.name.as_ref().and_then(|n| {
                [n.clone(), format!("{n}_right")]
                    .into_iter()
                    .find(|cand| columns.iter().all(|c| c.name.as_deref() != Some(cand)))
            });
            columns.push(Column {
                name,
                kind: src.kind,
            });
        }
        let schema = Schema::new(columns)?;

        let right_rows: Vec<&MLRow> = other.rows().collect();
        let mut index: HashMap<Vec<KeyValue>, Vec<usize>> = HashMap::new();
        for (i, row) in right_rows.iter().enumerate() {
            if let Some(key) = row.key(keys) {
                index.entry(key).or_default().push(i);
            }
        }

        let parts = self
            .pool
            .map_slices(&self.partitions, |_, rows| {
                let mut out = Vec::new();
                for row in rows {
                    let Some(key) = row.key(keys) else { continue };
                    if let Some(matches) = index.get(&key) {
                        for &m in matches {
                            let right = right_rows[m];
                            out.push(
                                row.iter()
                                    .cloned()
                                    .chain(right_cols.iter().map(|&c| right[c].clone()))
                                    .collect(),
                            );
                        }
                    }
                }
                Ok(out)
            })
            .map_err(strip_partition)?;
        Ok(self.derive(schema, parts))
    }

    /// Casts to a numeric table: `Int` cells widen to `Scalar`; `Empty`
    /// cells and non-numeric columns are rejected.
    pub fn to_numeric(&self) -> Result<MLNumericTable> {
        for (j, c) in self.schema.columns().iter().enumerate() {
            if !matches!(c.kind, ValueKind::Int | ValueKind::Scalar) {
                let row = self.rows().position(|r| !r[j].is_empty()).unwrap_or(0);
                return Err(Error::Cast {
                    row,
                    col: j,
                    reason: format!("column kind {} is not numeric", c.kind),
                });
            }
        }
        for (i, row) in self.rows().enumerate() {
            if let Some(j) = row.iter().position(MLValue::is_empty) {
                return Err(Error::Cast {
                    row: i,
                    col: j,
                    reason: "empty cell".into(),
                });
            }
        }
        let schema = Schema::new(
            self.schema
                .columns()
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    kind: ValueKind::Scalar,
                })
                .collect(),
        )?;
        let parts = self
            .pool
            .map_slices(&self.partitions, |_, rows| {
                Ok(rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|v| match v {
                                MLValue::Int(i) => MLValue::Scalar(*i as f64),
                                other => other.clone(),
                            })
                            .collect()
                    })
                    .collect())
            })
            .map_err(strip_partition)?;
        Ok(MLNumericTable::from_table_unchecked(
            self.derive(schema, parts),
        ))
    }
}

impl PartialEq for MLTable {
    /// Equal schemas and equal logical row sequences; partitioning is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.num_rows() == other.num_rows()
            && self.rows().zip(other.rows()).all(|(a, b)| a == b)
    }
}

impl fmt::Debug for MLTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MLTable")
            .field("schema", &self.schema)
            .field("partition_sizes", &self.partition_sizes())
            .finish()
    }
}
