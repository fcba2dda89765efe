//! Feature matrices and their CSV form (`id,label,<feature...>`, empty cell =
//! missing).

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub label: Option<u8>,
    /// One entry per feature column; `None` marks a missing value.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        if row.values.len() != self.feature_names.len() {
            return Err(Error::invalid(
                format!("row `{}`", row.id),
                format!(
                    "has {} values, expected {}",
                    row.values.len(),
                    self.feature_names.len()
                ),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.rows.iter().map(move |r| r.values[j])
    }

    pub fn row_by_id(&self, id: &str) -> Option<&FeatureRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.id.as_str()).collect()
    }

    /// All labels, or an error naming the first unlabeled row.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                r.label
                    .ok_or_else(|| Error::invalid("label", format!("row `{}` is unlabeled", r.id)))
            })
            .collect()
    }

    /// Rows reordered to follow `ids`; every id must be present exactly once.
    pub fn aligned_to(&self, ids: &[&str]) -> Result<FeatureMatrix> {
        if ids.len() != self.rows.len() {
            return Err(Error::invalid(
                "ids",
                format!(
                    "matrix has {} rows but {} ids were expected",
                    self.rows.len(),
                    ids.len()
                ),
            ));
        }
        let index: HashMap<&str, usize> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect();
        let rows =
            ids.iter()
                .map(|id| {
                    index.get(id).map(|&i| self.rows[i].clone()).ok_or_else(|| {
                        Error::invalid("ids", format!("id `{id}` is not in the matrix"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            feature_names: self.feature_names.clone(),
            rows,
        })
    }
}

fn format_value(v: f64) -> String {
    // `Debug` is the shortest representation that parses back to the same bits.
    format!("{v:?}")
}

pub fn write_matrix_to<W: Write>(matrix: &FeatureMatrix, out: W) -> Result<()> {
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(matrix.feature_names.iter().cloned());
    w.write_record(&header).map_err(ser)?;
    for row in &matrix.rows {
        let mut record = Vec::with_capacity(header.len());
        record.push(row.id.clone());
        record.push(row.label.map(|l| l.to_string()).unwrap_or_default());
        record.extend(
            row.values
                .iter()
                .map(|v| v.map(format_value).unwrap_or_default()),
        );
        w.write_record(&record).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))
}

pub fn write_feature_matrix(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_to(matrix, std::io::BufWriter::new(file))
}

pub fn parse_matrix<R: Read>(input: R, source: &str) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| Error::parse(source, 1, e.to_string()))?,
        None => return Err(Error::parse(source, 1, "missing header")),
    };
    if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::parse(source, 1, "header must start with `id,label`"));
    }
    let mut matrix = FeatureMatrix::new(header.iter().skip(2).map(str::to_string).collect());
    for (idx, record) in records.enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::parse(source, line, e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::parse(
                source,
                line,
                format!(
                    "column mismatch: {} cells, header has {}",
                    record.len(),
                    header.len()
                ),
            ));
        }
        let label = match &record[1] {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => {
                return Err(Error::parse(
                    source,
                    line,
                    format!("label must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let values = record
            .iter()
            .skip(2)
            .zip(&matrix.feature_names)
            .map(|(cell, name)| {
                if cell.is_empty() {
                    return Ok(None);
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(Error::parse(
                        source,
                        line,
                        format!("column `{name}`: `{cell}` is not a finite number"),
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        matrix.rows.push(FeatureRow {
            id: record[0].to_string(),
            label,
            values,
        });
    }
    Ok(matrix)
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(std::io::BufReader::new(file), &path.display().to_string())
}
