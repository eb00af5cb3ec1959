use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

/// Kind of a table column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Str,
    Int,
    Bool,
    Scalar,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ValueKind::Str => "string",
            ValueKind::Int => "int",
            ValueKind::Bool => "bool",
            ValueKind::Scalar => "scalar",
        };
        f.write_str(name)
    }
}

/// A single table cell. `Empty` marks a missing value of any column kind.
#[derive(Debug, Clone, PartialEq)]
pub enum MLValue {
    Str(String),
    Int(i64),
    Bool(bool),
    Scalar(f64),
    Empty,
}

impl MLValue {
    /// `None` for `Empty`.
    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            MLValue::Str(_) => Some(ValueKind::Str),
            MLValue::Int(_) => Some(ValueKind::Int),
            MLValue::Bool(_) => Some(ValueKind::Bool),
            MLValue::Scalar(_) => Some(ValueKind::Scalar),
            MLValue::Empty => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, MLValue::Empty)
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            MLValue::Scalar(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            MLValue::Int(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            MLValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            MLValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Total order used for sorting keys: by kind first, then by value,
    /// with `Empty` last and scalars compared by `f64::total_cmp`.
    pub fn total_cmp(&self, other: &MLValue) -> Ordering {
        use MLValue::*;
        match (self, other) {
            (Str(a), Str(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Bool(a), Bool(b)) => a.cmp(b),
            (Scalar(a), Scalar(b)) => a.total_cmp(b),
            (Empty, Empty) => Ordering::Equal,
            (Empty, _) => Ordering::Greater,
            (_, Empty) => Ordering::Less,
            (a, b) => a.kind().cmp(&b.kind()),
        }
    }

    /// Hashable form for equi-joins and grouping. `None` for cells that never
    /// compare equal to anything (`Empty`, NaN).
    pub(crate) fn key(&self) -> Option<KeyValue> {
        match self {
            MLValue::Str(s) => Some(KeyValue::Str(s.clone())),
            MLValue::Int(i) => Some(KeyValue::Int(*i)),
            MLValue::Bool(b) => Some(KeyValue::Bool(*b)),
            MLValue::Scalar(x) if x.is_nan() => None,
            // +0.0 and -0.0 compare equal
            MLValue::Scalar(x) => Some(KeyValue::Scalar((x + 0.0).to_bits())),
            MLValue::Empty => None,
        }
    }
}

impl fmt::Display for MLValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MLValue::Str(s) => f.write_str(s),
            MLValue::Int(i) => write!(f, "{i}"),
            MLValue::Bool(b) => write!(f, "{b}"),
            MLValue::Scalar(x) => write!(f, "{x:?}"),
            MLValue::Empty => Ok(()),
        }
    }
}

impl From<f64> for MLValue {
    fn from(x: f64) -> Self {
        MLValue::Scalar(x)
    }
}

impl From<i64> for MLValue {
    fn from(x: i64) -> Self {
        MLValue::Int(x)
    }
}

impl From<bool> for MLValue {
    fn from(x: bool) -> Self {
        MLValue::Bool(x)
    }
}

impl From<&str> for MLValue {
    fn from(x: &str) -> Self {
        MLValue::Str(x.to_string())
    }
}

impl From<String> for MLValue {
    fn from(x: String) -> Self {
        MLValue::Str(x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum KeyValue {
    Str(String),
    Int(i64),
    Bool(bool),
    Scalar(u64),
}

/// An ordered list of cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MLRow(Vec<MLValue>);

impl MLRow {
    pub fn new(values: Vec<MLValue>) -> Self {
        MLRow(values)
    }

    pub fn from_scalars(values: &[f64]) -> Self {
        MLRow(values.iter().map(|&x| MLValue::Scalar(x)).collect())
    }

    pub fn values(&self) -> &[MLValue] {
        &self.0
    }

    pub fn into_values(self) -> Vec<MLValue> {
        self.0
    }

    /// Scalar cells as a vector, or `None` if any cell is not a scalar.
    pub fn to_scalars(&self) -> Option<Vec<f64>> {
        self.0.iter().map(MLValue::as_scalar).collect()
    }

    pub(crate) fn key(&self, cols: &[usize]) -> Option<Vec<KeyValue>> {
        cols.iter().map(|&c| self.0[c].key()).collect()
    }
}

impl Deref for MLRow {
    type Target = [MLValue];

    fn deref(&self) -> &[MLValue] {
        &self.0
    }
}

impl From<Vec<MLValue>> for MLRow {
    fn from(values: Vec<MLValue>) -> Self {
        MLRow(values)
    }
}

impl FromIterator<MLValue> for MLRow {
    fn from_iter<I: IntoIterator<Item = MLValue>>(iter: I) -> Self {
        MLRow(iter.into_iter().collect())
    }
}

/// Builds an [`MLRow`] from values convertible into [`MLValue`].
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        $crate::mltable::MLRow::new(vec![$($crate::mltable::MLValue::from($v)),*])
    };
}
