//! Teacher probabilities produced outside this crate.
//!
//! One JSON object per line: `{"id": str, "p_true": number, "logit": number?}`.
//! Probabilities are the exchange value; a logit, when present, must agree
//! with `p_true` through the sigmoid to within 1e-6.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimRecord, Dataset};
use crate::error::{Error, Result};
use crate::math::sigmoid;

pub const LOGIT_TOLERANCE: f64 = 1e-6;
const MISSING_SAMPLE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherTarget {
    pub id: String,
    pub p_true: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TeacherMetadata {
    pub teacher: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TeacherTargets {
    by_id: HashMap<String, TeacherTarget>,
    pub metadata: TeacherMetadata,
    /// Lines whose id is not in the dataset.
    pub ignored_extras: usize,
}

impl TeacherTargets {
    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn p_true(&self, id: &str) -> Option<f64> {
        self.by_id.get(id).map(|t| t.p_true)
    }

    pub fn get(&self, id: &str) -> Option<&TeacherTarget> {
        self.by_id.get(id)
    }

    /// The record's own target, or its parent's for an augmentation product.
    pub fn for_record(&self, record: &ClaimRecord) -> Option<f64> {
        self.p_true(&record.id)
            .or_else(|| record.parent_id.as_deref().and_then(|p| self.p_true(p)))
    }

    /// Probabilities aligned with `records`, see [`TeacherTargets::for_record`].
    pub fn for_records<'a>(
        &self,
        records: impl IntoIterator<Item = &'a ClaimRecord>,
    ) -> Result<Vec<f64>> {
        let mut values = Vec::new();
        let mut missing = Vec::new();
        for r in records {
            match self.for_record(r) {
                Some(p) => values.push(p),
                None => missing.push(r.id.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(missing_error(missing));
        }
        Ok(values)
    }

    /// Probabilities aligned with `ids`; fails listing up to ten missing ids.
    pub fn aligned<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Vec<f64>> {
        let mut values = Vec::new();
        let mut missing = Vec::new();
        for id in ids {
            match self.p_true(id) {
                Some(p) => values.push(p),
                None => missing.push(id.to_string()),
            }
        }
        if !missing.is_empty() {
            return Err(missing_error(missing));
        }
        Ok(values)
    }

    /// Validates and indexes targets against `dataset`.
    pub fn from_targets(
        targets: Vec<TeacherTarget>,
        dataset: &Dataset,
        metadata: TeacherMetadata,
    ) -> Result<Self> {
        let ids: HashSet<&str> = dataset.records().iter().map(|r| r.id.as_str()).collect();
        let mut by_id = HashMap::with_capacity(dataset.len());
        let mut ignored_extras = 0;
        for target in targets {
            validate(&target)?;
            if !ids.contains(target.id.as_str()) {
                ignored_extras += 1;
                continue;
            }
            if by_id.contains_key(&target.id) {
                return Err(Error::DuplicateId(target.id));
            }
            by_id.insert(target.id.clone(), target);
        }
        let missing: Vec<String> = dataset
            .records()
            .iter()
            .filter(|r| {
                let inherited = r.parent_id.as_ref().is_some_and(|p| by_id.contains_key(p));
                !by_id.contains_key(&r.id) && !inherited
            })
            .map(|r| r.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(missing_error(missing));
        }
        if ignored_extras > 0 {
            log::warn!("ignored {ignored_extras} teacher target(s) for ids outside the dataset");
        }
        Ok(TeacherTargets {
            by_id,
            metadata,
            ignored_extras,
        })
    }
}

fn missing_error(missing: Vec<String>) -> Error {
    Error::MissingTargets {
        count: missing.len(),
        sample: missing.into_iter().take(MISSING_SAMPLE).collect(),
    }
}

fn validate(target: &TeacherTarget) -> Result<()> {
    let p = target.p_true;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange {
            id: target.id.clone(),
            value: p,
        });
    }
    if let Some(logit) = target.logit {
        if logit.is_nan() || (sigmoid(logit) - p).abs() > LOGIT_TOLERANCE {
            return Err(Error::LogitMismatch {
                id: target.id.clone(),
                p_true: p,
                logit,
            });
        }
    }
    Ok(())
}

pub fn read_targets<R: BufRead>(reader: R) -> Result<Vec<TeacherTarget>> {
    let mut targets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let target: TeacherTarget = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        targets.push(target);
    }
    Ok(targets)
}

/// Reads a teacher-target file and checks it covers every record of `dataset`.
pub fn ingest_teacher_targets(path: &Path, dataset: &Dataset) -> Result<TeacherTargets> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let targets = read_targets(BufReader::new(file))?;
    let metadata = TeacherMetadata {
        teacher: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        created: None,
    };
    TeacherTargets::from_targets(targets, dataset, metadata)
}
