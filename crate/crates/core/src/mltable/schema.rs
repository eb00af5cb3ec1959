use std::collections::HashSet;
use std::fmt;

use super::value::{MLRow, MLValue, ValueKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: Option<String>,
    pub kind: ValueKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ValueKind) -> Self {
        Column {
            name: Some(name.into()),
            kind,
        }
    }

    pub fn unnamed(kind: ValueKind) -> Self {
        Column { name: None, kind }
    }
}

/// Ordered, non-empty list of columns. Names are optional but unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Schema("schema must have at least one column".into()));
        }
        let mut seen = HashSet::new();
        for name in columns.iter().filter_map(|c| c.name.as_deref()) {
            if !seen.insert(name) {
                return Err(Error::Schema(format!("duplicate column name {name:?}")));
            }
        }
        Ok(Schema { columns })
    }

    pub fn unnamed(kinds: &[ValueKind]) -> Result<Self> {
        Schema::new(kinds.iter().map(|&k| Column::unnamed(k)).collect())
    }

    /// `n` unnamed scalar columns.
    pub fn scalars(n: usize) -> Result<Self> {
        Schema::unnamed(&vec![ValueKind::Scalar; n])
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn kinds(&self) -> Vec<ValueKind> {
        self.columns.iter().map(|c| c.kind).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.as_deref() == Some(name))
    }

    /// Checks a row against this schema; `Empty` is allowed in any column.
    pub fn check(&self, row: &MLRow) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "row has {} values, schema has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (j, (v, c)) in row.iter().zip(&self.columns).enumerate() {
            if let Some(kind) = v.kind() {
                if kind != c.kind {
                    return Err(Error::Schema(format!(
                        "column {j} expects {} but got {kind} ({v})",
                        c.kind
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same kinds in the same order, and equal names wherever both have one.
    pub fn compatible(&self, other: &Schema) -> bool {
        self.columns.len() == other.columns.len()
            && self.columns.iter().zip(&other.columns).all(|(a, b)| {
                a.kind == b.kind
                    && match (&a.name, &b.name) {
                        (Some(x), Some(y)) => x == y,
                        _ => true,
                    }
            })
    }

    /// Schema of rows produced by a user function.
    ///
    /// The first row fixes the arity. Each column takes the kind of its first
    /// non-`Empty` cell; all-`Empty` columns fall back to `fallback`'s kind at
    /// that position, then to `Str`. Names from `fallback` are kept when the
    /// inferred kinds match it exactly.
    pub(crate) fn infer<'a>(
        rows: impl IntoIterator<Item = &'a MLRow>,
        fallback: &Schema,
    ) -> Result<Option<Schema>> {
        let mut rows = rows.into_iter();
        let Some(first) = rows.next() else {
            return Ok(None);
        };
        let arity = first.len();
        let mut kinds: Vec<Option<ValueKind>> = first.iter().map(MLValue::kind).collect();
        let mut pending = kinds.iter().filter(|k| k.is_none()).count();
        for row in rows {
            if pending == 0 {
                break;
            }
            if row.len() != arity {
                break; // reported by the conformance pass
            }
            for (k, v) in kinds.iter_mut().zip(row.iter()) {
                if k.is_none() {
                    if let Some(kind) = v.kind() {
                        *k = Some(kind);
                        pending -= 1;
                    }
                }
            }
        }
        let kinds: Vec<ValueKind> = kinds
            .into_iter()
            .enumerate()
            .map(|(j, k)| {
                k.or_else(|| fallback.columns.get(j).map(|c| c.kind))
                    .unwrap_or(ValueKind::Str)
            })
            .collect();
        if kinds == fallback.kinds() {
            Ok(Some(fallback.clone()))
        } else {
            Schema::unnamed(&kinds).map(Some)
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match &c.name {
                Some(n) => write!(f, "{n}: {}", c.kind)?,
                None => write!(f, "{}", c.kind)?,
            }
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::row;

    #[test]
    fn rejects_empty_and_duplicate() {
        assert!(Schema::new(vec![]).is_err());
        let dup = vec![
            Column::new("a", ValueKind::Int),
            Column::new("a", ValueKind::Str),
        ];
        assert!(Schema::new(dup).is_err());
        let unnamed = vec![
            Column::unnamed(ValueKind::Int),
            Column::unnamed(ValueKind::Int),
        ];
        assert!(Schema::new(unnamed).is_ok());
    }

    #[test]
    fn check_allows_empty_cells() {
        let s = Schema::unnamed(&[ValueKind::Int, ValueKind::Str]).unwrap();
        assert!(s.check(&row![1i64, "x"]).is_ok());
        assert!(s
            .check(&MLRow::new(vec![MLValue::Empty, MLValue::Empty]))
            .is_ok());
        assert!(s.check(&row![1.0, "x"]).is_err());
        assert!(s.check(&row![1i64]).is_err());
    }

    #[test]
    fn compatibility_ignores_missing_names() {
        let a = Schema::new(vec![Column::new("x", ValueKind::Int)]).unwrap();
        let b = Schema::unnamed(&[ValueKind::Int]).unwrap();
        let c = Schema::new(vec![Column::new("y", ValueKind::Int)]).unwrap();
        assert!(a.compatible(&b));
        assert!(!a.compatible(&c));
        assert!(!a.compatible(&Schema::scalars(1).unwrap()));
    }
}
