//! Plain-text sparse matrix format: one `row col value` entry per line,
//! 0-based indices, whitespace separated. Blank lines and lines starting
//! with `#` are ignored.

use std::io::{BufRead, Write};

use super::LocalMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

pub fn read_triplets<R: BufRead>(reader: R) -> Result<Vec<Triplet>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse {
            line: n + 1,
            message,
        };
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let row = fields[0]
            .parse()
            .map_err(|e| err(format!("bad row index {:?}: {e}", fields[0])))?;
        let col = fields[1]
            .parse()
            .map_err(|e| err(format!("bad column index {:?}: {e}", fields[1])))?;
        let value = fields[2]
            .parse()
            .map_err(|e| err(format!("bad value {:?}: {e}", fields[2])))?;
        out.push(Triplet { row, col, value });
    }
    Ok(out)
}

/// Writes the stored entries of `m` in row-major order.
pub fn write_triplets<W: Write>(m: &LocalMatrix, mut w: W) -> std::io::Result<()> {
    for i in 0..m.num_rows() {
        for j in m.non_zero_indices(i).expect("row in range") {
            writeln!(w, "{i} {j} {:?}", m.at(i, j))?;
        }
    }
    Ok(())
}

impl LocalMatrix {
    /// CSR matrix from triplet text. Without explicit dimensions the shape
    /// is one past the largest row and column index.
    pub fn read_triplet_text<R: BufRead>(reader: R, dims: Option<(usize, usize)>) -> Result<Self> {
        let entries = read_triplets(reader)?;
        let (rows, cols) = dims.unwrap_or_else(|| {
            entries
                .iter()
                .fold((0, 0), |(r, c), t| (r.max(t.row + 1), c.max(t.col + 1)))
        });
        LocalMatrix::from_triplets(rows, cols, &entries)
    }
}
