//! Externally supplied dense feature vectors, one JSON object per line:
//! `{"id": str, "vector": [number, ...]}`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::corpus::ClaimRecord;
use crate::error::{Error, Result};
use crate::textprep::FeatureVector;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    id: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = EmbeddingTable::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: EmbeddingLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if entry.vector.is_empty() || entry.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: "vector must be non-empty and finite".into(),
                });
            }
            if table.vectors.is_empty() {
                table.dim = entry.vector.len();
            } else if entry.vector.len() != table.dim {
                return Err(Error::DimensionMismatch {
                    expected: table.dim,
                    found: entry.vector.len(),
                });
            }
            if table
                .vectors
                .insert(entry.id.clone(), entry.vector)
                .is_some()
            {
                return Err(Error::DuplicateId(entry.id));
            }
        }
        if table.vectors.is_empty() {
            return Err(Error::NoRecords);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        EmbeddingTable::read(BufReader::new(file))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, id: &str) -> Option<FeatureVector> {
        self.vectors.get(id).map(|v| FeatureVector::from_dense(v))
    }

    /// Feature rows for `records`; fails if any id lacks a vector.
    pub fn rows(&self, records: &[ClaimRecord]) -> Result<Vec<FeatureVector>> {
        records
            .iter()
            .map(|r| {
                self.vector(&r.id).ok_or_else(|| Error::InvalidRecord {
                    id: r.id.clone(),
                    message: "no embedding vector".into(),
                })
            })
            .collect()
    }

    /// Column labels for attribution displays.
    pub fn labels(&self) -> Vec<String> {
        (0..self.dim).map(|i| format!("dim_{i}")).collect()
    }
}
