use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::mltable::{
    split_even, Column, MLNumericTable, MLRow, MLTable, MLValue, Schema, ValueKind,
};

/// Lowercase word n-grams of `text`.
///
/// Tokens are the maximal runs of alphanumeric characters; each n-gram is
/// `n` consecutive tokens joined by single spaces. Texts with fewer than
/// `n` tokens, and `n == 0`, give no n-grams.
pub fn n_grams(text: &str, n: usize) -> Vec<String> {
    let lower = text.to_lowercase();
    let tokens: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    if n == 0 || tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

fn terms_schema() -> Schema {
    Schema::new(vec![
        Column::new("doc", ValueKind::Int),
        Column::new("term", ValueKind::Str),
    ])
    .expect("valid schema")
}

/// One `(doc, term)` row per n-gram of every document, where `doc` is the
/// document's row index in `corpus` and `text_col` holds its text.
/// Partitioning follows the corpus; an empty cell contributes no terms.
pub fn n_grams_table(corpus: &MLTable, text_col: usize, n: usize) -> Result<MLTable> {
    let kind = corpus
        .schema()
        .columns()
        .get(text_col)
        .ok_or(Error::Index {
            index: text_col,
            bound: corpus.num_cols(),
        })?
        .kind;
    if kind != ValueKind::Str {
        return Err(Error::Schema(format!(
            "text column {text_col} holds {kind} values, expected Str"
        )));
    }
    let mut offsets = Vec::with_capacity(corpus.num_partitions());
    let mut start = 0;
    for size in corpus.partition_sizes() {
        offsets.push(start);
        start += size;
    }
    let partitions = corpus.pool().map_partitions(corpus, |p, rows| {
        let mut out = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let doc = (offsets[p] + i) as i64;
            if let Some(text) = row[text_col].as_str() {
                out.extend(
                    n_grams(text, n)
                        .into_iter()
                        .map(|t| MLRow::new(vec![MLValue::Int(doc), MLValue::Str(t)])),
                );
            }
        }
        Ok(out)
    })?;
    Ok(MLTable::from_partitions(terms_schema(), partitions)?.with_pool(corpus.pool().clone()))
}

/// tf-idf features and the vocabulary naming their columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdf {
    /// One row per document, one column per vocabulary term.
    pub features: MLNumericTable,
    /// Distinct terms in sorted order.
    pub vocabulary: Vec<String>,
}

/// tf-idf weights of a `(doc, term)` table such as the one produced by
/// [`n_grams_table`], for documents `0..num_docs`.
///
/// The weight of a term in a document is its raw count times
/// `ln(num_docs / df)`, with `df` the number of documents containing it.
/// Documents without terms get an all-zero row.
pub fn tf_idf(terms: &MLTable, num_docs: usize) -> Result<TfIdf> {
    if num_docs == 0 {
        return Err(Error::EmptyTable);
    }
    if terms.schema().kinds() != [ValueKind::Int, ValueKind::Str] {
        return Err(Error::Schema(format!(
            "expected (Int doc, Str term) rows, got {:?}",
            terms.schema().kinds()
        )));
    }
    let partials = terms.pool().map_partitions(terms, |_, rows| {
        let mut counts: HashMap<(usize, &str), usize> = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            let (Some(doc), Some(term)) = (row[0].as_int(), row[1].as_str()) else {
                return Err(Error::UserFunction {
                    row: i,
                    message: "empty doc or term cell".into(),
                });
            };
            let doc = usize::try_from(doc)
                .ok()
                .filter(|&d| d < num_docs)
                .ok_or_else(|| Error::Index {
                    index: doc.max(0) as usize,
                    bound: num_docs,
                })?;
            *counts.entry((doc, term)).or_default() += 1;
        }
        Ok(counts
            .into_iter()
            .map(|((d, t), c)| (d, t.to_string(), c))
            .collect::<Vec<_>>())
    })?;

    // (term, doc) -> count, ordered so the vocabulary falls out sorted
    let mut counts: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for (doc, term, c) in partials.into_iter().flatten() {
        *counts.entry((term, doc)).or_default() += c;
    }
    let mut vocabulary: Vec<String> = Vec::new();
    let mut df: Vec<usize> = Vec::new();
    for (term, _) in counts.keys() {
        if vocabulary.last() != Some(term) {
            vocabulary.push(term.clone());
            df.push(0);
        }
        *df.last_mut().expect("just pushed") += 1;
    }
    if vocabulary.is_empty() {
        return Err(Error::Degenerate("corpus has no terms".into()));
    }

    let v = vocabulary.len();
    let mut matrix = vec![0.0; num_docs * v];
    let mut col = 0;
    for ((term, doc), c) in &counts {
        if vocabulary[col] != *term {
            col += 1;
        }
        let idf = (num_docs as f64 / df[col] as f64).ln();
        matrix[doc * v + col] = *c as f64 * idf;
    }
    let rows: Vec<MLRow> = matrix.chunks(v).map(MLRow::from_scalars).collect();
    let schema = Schema::new(
        vocabulary
            .iter()
            .map(|t| Column::new(t.clone(), ValueKind::Scalar))
            .collect(),
    )?;
    let table = MLTable::from_partitions(schema, split_even(rows, terms.num_partitions()))?
        .with_pool(terms.pool().clone());
    Ok(TfIdf {
        features: table.to_numeric()?,
        vocabulary,
    })
}
