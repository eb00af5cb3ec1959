//! Random instances and straightforward reference implementations shared by
//! the integration tests.

// the references are deliberately plain index loops
#![allow(dead_code, clippy::needless_range_loop)]

use std::cmp::Ordering;

use mlkit::mltable::{Column, MLRow, MLTable, MLValue, Schema, ValueKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rows = Vec<Vec<MLValue>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const KINDS: [ValueKind; 4] = [
    ValueKind::Str,
    ValueKind::Int,
    ValueKind::Bool,
    ValueKind::Scalar,
];

/// A cell of `kind` from a small domain so that joins find matches;
/// `Empty` with probability `empty`.
pub fn random_value(rng: &mut impl Rng, kind: ValueKind, empty: f64) -> MLValue {
    if rng.random::<f64>() < empty {
        return MLValue::Empty;
    }
    match kind {
        ValueKind::Str => MLValue::Str(["a", "b", "c", "d", "e"][rng.random_range(0..5)].into()),
        ValueKind::Int => MLValue::Int(rng.random_range(-3..4)),
        ValueKind::Bool => MLValue::Bool(rng.random()),
        ValueKind::Scalar => MLValue::Scalar(rng.random_range(-4..5) as f64 * 0.5),
    }
}

pub fn random_kinds(rng: &mut impl Rng, cols: usize) -> Vec<ValueKind> {
    (0..cols).map(|_| KINDS[rng.random_range(0..4)]).collect()
}

pub fn random_rows(rng: &mut impl Rng, kinds: &[ValueKind], rows: usize, empty: f64) -> Rows {
    (0..rows)
        .map(|_| kinds.iter().map(|&k| random_value(rng, k, empty)).collect())
        .collect()
}

pub fn named_schema(kinds: &[ValueKind], prefix: &str) -> Schema {
    Schema::new(
        kinds
            .iter()
            .enumerate()
            .map(|(j, &k)| Column::new(format!("{prefix}{j}"), k))
            .collect(),
    )
    .unwrap()
}

pub fn table(schema: Schema, rows: &Rows, partitions: usize) -> MLTable {
    let rows = rows.iter().map(|r| MLRow::new(r.clone())).collect();
    MLTable::with_partitions(schema, rows, partitions).unwrap()
}

/// Random table with up to `max_rows` rows and 1..=`max_cols` columns.
pub fn random_table(rng: &mut impl Rng, max_rows: usize, max_cols: usize) -> (MLTable, Rows) {
    let cols = rng.random_range(1..=max_cols);
    let kinds = random_kinds(rng, cols);
    let n = rng.random_range(0..=max_rows);
    let rows = random_rows(rng, &kinds, n, 0.1);
    let parts = rng.random_range(1..=8);
    (table(named_schema(&kinds, "c"), &rows, parts), rows)
}

pub fn contents(t: &MLTable) -> Rows {
    t.rows().map(|r| r.values().to_vec()).collect()
}

fn cmp_rows(a: &[MLValue], b: &[MLValue]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

pub fn sorted(mut rows: Rows) -> Rows {
    rows.sort_by(|a, b| cmp_rows(a, b));
    rows
}

pub fn same_multiset(a: Rows, b: Rows) -> bool {
    sorted(a) == sorted(b)
}

// ---- reference implementations -------------------------------------------

pub fn project(rows: &Rows, cols: &[usize]) -> Rows {
    let mut out = Vec::new();
    for r in rows {
        let mut o = Vec::new();
        for &c in cols {
            o.push(r[c].clone());
        }
        out.push(o);
    }
    out
}

pub fn union(a: &Rows, b: &Rows) -> Rows {
    let mut out = a.clone();
    for r in b {
        out.push(r.clone());
    }
    out
}

pub fn filter(rows: &Rows, pred: impl Fn(&[MLValue]) -> bool) -> Rows {
    let mut out = Vec::new();
    for r in rows {
        if pred(r) {
            out.push(r.clone());
        }
    }
    out
}

/// Nested-loop inner join: for every left row in order, every matching
/// right row in order.
pub fn join(a: &Rows, b: &Rows, keys: &[usize], b_cols: usize) -> Rows {
    let mut out = Vec::new();
    for ra in a {
        for rb in b {
            let matches = keys
                .iter()
                .all(|&k| ra[k] != MLValue::Empty && rb[k] != MLValue::Empty && ra[k] == rb[k]);
            if matches {
                let mut row = ra.clone();
                for c in 0..b_cols {
                    if !keys.contains(&c) {
                        row.push(rb[c].clone());
                    }
                }
                out.push(row);
            }
        }
    }
    out
}

pub fn flat_map(rows: &Rows, f: impl Fn(&[MLValue]) -> Rows) -> Rows {
    let mut out = Vec::new();
    for r in rows {
        for produced in f(r) {
            out.push(produced);
        }
    }
    out
}

pub fn fold(rows: &Rows, f: impl Fn(&[MLValue], &[MLValue]) -> Vec<MLValue>) -> Vec<MLValue> {
    let mut acc = rows[0].clone();
    for r in &rows[1..] {
        acc = f(&acc, r);
    }
    acc
}

/// Groups by the key column, folds the remaining columns in row order and
/// sorts the groups by key.
pub fn reduce_by_key(
    rows: &Rows,
    key: usize,
    f: impl Fn(&[MLValue], &[MLValue]) -> Vec<MLValue>,
) -> Rows {
    let mut groups: Vec<(MLValue, Vec<MLValue>)> = Vec::new();
    for r in rows {
        let rest: Vec<MLValue> = r
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != key)
            .map(|(_, v)| v.clone())
            .collect();
        match groups.iter_mut().find(|(k, _)| *k == r[key]) {
            Some((_, acc)) => *acc = f(acc, &rest),
            None => groups.push((r[key].clone(), rest)),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
        .into_iter()
        .map(|(k, rest)| std::iter::once(k).chain(rest).collect())
        .collect()
}

/// Integer sum, cell by cell.
pub fn int_sum(a: &[MLValue], b: &[MLValue]) -> Vec<MLValue> {
    a.iter()
        .zip(b)
        .map(|(x, y)| MLValue::Int(x.as_int().unwrap().wrapping_add(y.as_int().unwrap())))
        .collect()
}

/// Scalar sum, cell by cell.
pub fn scalar_sum(a: &[MLValue], b: &[MLValue]) -> Vec<MLValue> {
    a.iter()
        .zip(b)
        .map(|(x, y)| MLValue::Scalar(x.as_scalar().unwrap() + y.as_scalar().unwrap()))
        .collect()
}

pub fn int_rows(rng: &mut impl Rng, rows: usize, cols: usize, keys: i64) -> Rows {
    (0..rows)
        .map(|_| {
            let mut r = vec![MLValue::Int(rng.random_range(0..keys))];
            r.extend((1..cols).map(|_| MLValue::Int(rng.random_range(-1000..1000))));
            r
        })
        .collect()
}

// ---- dense linear algebra references --------------------------------------

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random::<f64>() < density {
                        rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Solves a small dense system by Gauss-Jordan elimination with partial
/// pivoting.
pub fn gauss_jordan(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| r.iter().copied().chain([bi]).collect())
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        let pivot = m[c][c];
        for v in m[c].iter_mut() {
            *v /= pivot;
        }
        for r in 0..n {
            if r != c {
                let factor = m[r][c];
                for j in c..=n {
                    m[r][j] -= factor * m[c][j];
                }
            }
        }
    }
    m.iter().map(|r| r[n]).collect()
}
