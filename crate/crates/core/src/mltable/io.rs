//! CSV tables and plain-text corpora.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::schema::{Column, Schema};
use super::table::MLTable;
use super::value::{MLRow, MLValue, ValueKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: u8,
    /// `None` uses one partition per default worker.
    pub partitions: Option<usize>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            delimiter: b',',
            partitions: None,
        }
    }
}

/// Column kind for a set of non-empty cells: `Bool` if every cell is
/// `true`/`false`, else `Int`, else `Scalar`, else `Str`.
fn infer_kind<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> ValueKind {
    let mut cells = cells.filter(|c| !c.is_empty()).peekable();
    if cells.peek().is_none() {
        return ValueKind::Str;
    }
    if cells.clone().all(|c| c == "true" || c == "false") {
        ValueKind::Bool
    } else if cells.clone().all(|c| c.parse::<i64>().is_ok()) {
        ValueKind::Int
    } else if cells.clone().all(|c| c.parse::<f64>().is_ok()) {
        ValueKind::Scalar
    } else {
        ValueKind::Str
    }
}

fn parse_cell(cell: &str, kind: ValueKind) -> MLValue {
    if cell.is_empty() {
        return MLValue::Empty;
    }
    match kind {
        ValueKind::Bool => MLValue::Bool(cell == "true"),
        ValueKind::Int => MLValue::Int(cell.parse().expect("inferred int")),
        ValueKind::Scalar => MLValue::Scalar(cell.parse().expect("inferred scalar")),
        ValueKind::Str => MLValue::Str(cell.to_string()),
    }
}

/// Reads a CSV table. Empty cells become `Empty`.
pub fn read_csv_from<R: Read>(reader: R, opts: CsvOptions) -> Result<MLTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .delimiter(opts.delimiter)
        .flexible(false)
        .from_reader(reader);
    let header: Option<Vec<String>> = if opts.has_header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|r| r.len()))
        .ok_or_else(|| Error::Schema("CSV input has neither header nor rows".into()))?;
    let kinds: Vec<ValueKind> = (0..width)
        .map(|j| infer_kind(records.iter().map(move |r| r.get(j).unwrap_or(""))))
        .collect();
    let columns = kinds
        .iter()
        .enumerate()
        .map(|(j, &kind)| Column {
            name: header.as_ref().map(|h| h[j].clone()),
            kind,
        })
        .collect();
    let schema = Schema::new(columns)?;
    let rows = records
        .iter()
        .map(|r| {
            r.iter()
                .zip(&kinds)
                .map(|(c, &k)| parse_cell(c, k))
                .collect()
        })
        .collect();
    match opts.partitions {
        Some(p) => MLTable::with_partitions(schema, rows, p),
        None => MLTable::new(schema, rows),
    }
}

pub fn read_csv(path: impl AsRef<Path>, opts: CsvOptions) -> Result<MLTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, opts)
}

/// Writes `table` as CSV. Scalars use the shortest representation that
/// reads back to the same value and always carry a decimal point, so kinds
/// survive a round trip.
pub fn write_csv<W: Write>(table: &MLTable, writer: W, opts: CsvOptions) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(opts.delimiter)
        .from_writer(writer);
    if opts.has_header {
        let names: Vec<String> = table
            .schema()
            .columns()
            .iter()
            .enumerate()
            .map(|(j, c)| c.name.clone().unwrap_or_else(|| format!("c{j}")))
            .collect();
        w.write_record(&names)?;
    }
    for row in table.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// One document per non-blank line, as a single string column `text`.
pub fn read_corpus(path: impl AsRef<Path>, partitions: Option<usize>) -> Result<MLTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            rows.push(MLRow::new(vec![MLValue::Str(line)]));
        }
    }
    let schema = Schema::new(vec![Column::new("text", ValueKind::Str)])?;
    match partitions {
        Some(p) => MLTable::with_partitions(schema, rows, p),
        None => MLTable::new(schema, rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::row;

    #[test]
    fn infers_kinds_and_empties() {
        let text = "id,score,name,flag\n1,0.5,a,true\n2,,b,false\n3,2,,true\n";
        let t = read_csv_from(text.as_bytes(), CsvOptions::default()).unwrap();
        assert_eq!(
            t.schema().kinds(),
            vec![
                ValueKind::Int,
                ValueKind::Scalar,
                ValueKind::Str,
                ValueKind::Bool
            ]
        );
        assert_eq!(t.schema().index_of("name"), Some(2));
        let rows = t.to_rows();
        assert_eq!(rows[0], row![1i64, 0.5, "a", true]);
        assert_eq!(rows[1][1], MLValue::Empty);
        assert_eq!(rows[2][1], MLValue::Scalar(2.0));
        assert_eq!(rows[2][2], MLValue::Empty);
    }

    #[test]
    fn headerless_with_delimiter() {
        let opts = CsvOptions {
            has_header: false,
            delimiter: b';',
            partitions: Some(2),
        };
        let t = read_csv_from("1;x\n2;y\n".as_bytes(), opts).unwrap();
        assert_eq!(t.num_rows(), 2);
        assert_eq!(t.num_partitions(), 2);
        assert!(t.schema().columns()[0].name.is_none());
    }

    #[test]
    fn round_trip() {
        let text = "a,b,c\n1,0.1,x\n,-3.0,\n7,1e-300,z\n";
        let t = read_csv_from(text.as_bytes(), CsvOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf, CsvOptions::default()).unwrap();
        let back = read_csv_from(buf.as_slice(), CsvOptions::default()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn corpus_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.txt");
        std::fs::write(&path, "first doc\n\nsecond doc\n").unwrap();
        let t = read_corpus(&path, Some(1)).unwrap();
        assert_eq!(t.num_rows(), 2);
        let missing = read_corpus(dir.path().join("nope.txt"), None).unwrap_err();
        assert!(missing.to_string().contains("nope.txt"));
    }
}
