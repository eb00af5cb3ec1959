//! Plain-text model files.
//!
//! A logistic model is its dimension `d` on the first line followed by one
//! weight per line. A factorization model starts with `m n k` and continues
//! with the `m x k` entries of `U` and then the `n x k` entries of `V`, one
//! row per line, row-major. Values are written in shortest round-trip form.

use std::io::{BufRead, Write};

use super::{FactorizationModel, LogisticModel, WeightVector};
use crate::error::{Error, Result};
use crate::localmatrix::LocalMatrix;

pub fn write_logistic<W: Write>(model: &LogisticModel, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", model.weights.len())?;
    for x in model.weights.iter() {
        writeln!(w, "{x:?}")?;
    }
    Ok(())
}

pub fn read_logistic<R: BufRead>(reader: R) -> Result<LogisticModel> {
    let mut lines = Lines::new(reader);
    let d = lines.header(1)?[0];
    let mut weights = Vec::with_capacity(d);
    for _ in 0..d {
        weights.extend(lines.values(1)?);
    }
    lines.finish()?;
    Ok(LogisticModel::new(WeightVector::new(weights)?))
}

pub fn write_factorization<W: Write>(model: &FactorizationModel, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "{} {} {}",
        model.u.num_rows(),
        model.v.num_rows(),
        model.rank()
    )?;
    for m in [&model.u, &model.v] {
        for row in m.to_row_vecs() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_factorization<R: BufRead>(reader: R) -> Result<FactorizationModel> {
    let mut lines = Lines::new(reader);
    let dims = lines.header(3)?;
    let (m, n, k) = (dims[0], dims[1], dims[2]);
    let mut read = |rows: usize| -> Result<LocalMatrix> {
        let mut data = Vec::with_capacity(rows * k);
        for _ in 0..rows {
            data.extend(lines.values(k)?);
        }
        LocalMatrix::from_vec(rows, k, data)
    };
    let u = read(m)?;
    let v = read(n)?;
    lines.finish()?;
    FactorizationModel::new(u, v)
}

/// Line reader that skips blank lines and tracks line numbers for errors.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            inner: reader.lines(),
            line: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_fields(&mut self) -> Result<Option<Vec<String>>> {
        for line in self.inner.by_ref() {
            self.line += 1;
            let line = line.map_err(|e| Error::Parse {
                line: self.line,
                message: e.to_string(),
            })?;
            let fields: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
            if !fields.is_empty() {
                return Ok(Some(fields));
            }
        }
        Ok(None)
    }

    fn fields(&mut self, count: usize) -> Result<Vec<String>> {
        let fields = self
            .next_fields()?
            .ok_or_else(|| self.error("unexpected end of file"))?;
        if fields.len() != count {
            return Err(self.error(format!("expected {count} fields, found {}", fields.len())));
        }
        Ok(fields)
    }

    fn header(&mut self, count: usize) -> Result<Vec<usize>> {
        self.fields(count)?
            .iter()
            .map(|f| {
                f.parse()
                    .map_err(|e| self.error(format!("bad dimension {f:?}: {e}")))
            })
            .collect()
    }

    fn values(&mut self, count: usize) -> Result<Vec<f64>> {
        self.fields(count)?
            .iter()
            .map(|f| {
                f.parse()
                    .map_err(|e| self.error(format!("bad value {f:?}: {e}")))
            })
            .collect()
    }

    fn finish(mut self) -> Result<()> {
        match self.next_fields()? {
            None => Ok(()),
            Some(_) => Err(self.error("trailing data after model")),
        }
    }
}
