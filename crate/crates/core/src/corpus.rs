//! Labeled claim datasets: loading, validation, persistence and fold splits.
//!
//! JSONL is the canonical on-disk format, one record per line:
//!
//! ```text
//! {"id": "c1", "text": "...", "label": "true", "source": "CDC", "date": "2020-04-11"}
//! ```
//!
//! CSV import maps columns by header name and needs at least `id,text,label`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Fake,
    True,
}

impl Label {
    pub fn parse(token: &str) -> Option<Label> {
        match token.trim().to_ascii_lowercase().as_str() {
            "true" | "real" => Some(Label::True),
            "fake" | "false" => Some(Label::Fake),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "true",
            Label::Fake => "fake",
        }
    }

    /// 1.0 for a true claim, 0.0 for a fake one.
    pub fn target(self) -> f64 {
        match self {
            Label::True => 1.0,
            Label::Fake => 0.0,
        }
    }

    pub fn from_probability(p_true: f64, threshold: f64) -> Label {
        if p_true >= threshold {
            Label::True
        } else {
            Label::Fake
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::parse(s).ok_or_else(|| Error::UnknownLabel {
            line: 0,
            token: s.to_string(),
        })
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        Label::parse(&token)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown label \"{token}\"")))
    }
}

/// One labeled claim with optional provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
}

impl ClaimRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        ClaimRecord {
            id: id.into(),
            text: text.into(),
            label,
            source: None,
            date: None,
            evidence: None,
            parent_id: None,
        }
    }

    pub fn is_augmented(&self) -> bool {
        self.parent_id.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    records: Vec<ClaimRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!(
                "unknown dataset format \"{other}\""
            ))),
        }
    }
}

impl Format {
    /// Guess from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl Dataset {
    /// Validates the records and builds a dataset. Record order is kept.
    pub fn new(name: impl Into<String>, records: Vec<ClaimRecord>) -> Result<Self> {
        validate(&records)?;
        Ok(Dataset {
            name: name.into(),
            records,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Dataset {
            name: name.into(),
            records: Vec::new(),
        }
    }

    pub fn records(&self) -> &[ClaimRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ClaimRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClaimRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Number of (fake, true) records.
    pub fn class_counts(&self) -> (usize, usize) {
        let trues = self
            .records
            .iter()
            .filter(|r| r.label == Label::True)
            .count();
        (self.records.len() - trues, trues)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let (fake, real) = self.class_counts();
        if fake == 0 || real == 0 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// A new dataset made of the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_jsonl(&mut out).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut *out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn validate(records: &[ClaimRecord]) -> Result<()> {
    let mut labels: HashMap<&str, Label> = HashMap::with_capacity(records.len());
    for record in records {
        if record.text.trim().is_empty() {
            return Err(Error::EmptyText {
                id: record.id.clone(),
            });
        }
        if labels.insert(record.id.as_str(), record.label).is_some() {
            return Err(Error::DuplicateId(record.id.clone()));
        }
        if let Some(date) = &record.date {
            if chrono::NaiveDate::parse_from_str(date, "%Y-%m-%d").is_err() {
                return Err(Error::InvalidRecord {
                    id: record.id.clone(),
                    message: format!("date \"{date}\" is not an ISO-8601 calendar date"),
                });
            }
        }
    }
    for record in records {
        if let Some(parent) = &record.parent_id {
            match labels.get(parent.as_str()) {
                None => {
                    return Err(Error::InvalidRecord {
                        id: record.id.clone(),
                        message: format!("parent \"{parent}\" does not exist"),
                    })
                }
                Some(&label) if label != record.label => {
                    return Err(Error::InvalidRecord {
                        id: record.id.clone(),
                        message: format!("label differs from parent \"{parent}\""),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(())
}

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = match format {
        Format::Jsonl => read_jsonl(BufReader::new(file))?,
        Format::Csv => read_csv(file)?,
    };
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, records)
}

/// Parses claim JSONL. Blank lines are skipped; errors carry 1-based line numbers.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ClaimRecord>> {
    #[derive(Deserialize)]
    struct RawRecord {
        id: String,
        text: String,
        label: String,
        #[serde(default)]
        source: Option<String>,
        #[serde(default)]
        date: Option<String>,
        #[serde(default)]
        evidence: Option<String>,
        #[serde(default)]
        parent_id: Option<String>,
    }

    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = Label::parse(&raw.label).ok_or_else(|| Error::UnknownLabel {
            line: line_no,
            token: raw.label.clone(),
        })?;
        records.push(ClaimRecord {
            id: raw.id,
            text: raw.text,
            label,
            source: raw.source,
            date: raw.date,
            evidence: raw.evidence,
            parent_id: raw.parent_id,
        });
    }
    Ok(records)
}

fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<ClaimRecord>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let required = |name: &str| {
        column(name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing required column \"{name}\""),
        })
    };
    let (id_col, text_col, label_col) = (required("id")?, required("text")?, required("label")?);
    let optional = [
        column("source"),
        column("date"),
        column("evidence"),
        column("parent_id"),
    ];

    let mut records = Vec::new();
    for (idx, row) in csv.records().enumerate() {
        // header occupies line 1
        let line_no = idx + 2;
        let row = row.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let field = |col: usize| row.get(col).unwrap_or("").to_string();
        let opt_field = |col: Option<usize>| {
            col.and_then(|c| row.get(c))
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
        };
        let token = field(label_col);
        let label = Label::parse(&token).ok_or(Error::UnknownLabel {
            line: line_no,
            token,
        })?;
        records.push(ClaimRecord {
            id: field(id_col),
            text: field(text_col),
            label,
            source: opt_field(optional[0]),
            date: opt_field(optional[1]),
            evidence: opt_field(optional[2]),
            parent_id: opt_field(optional[3]),
        });
    }
    Ok(records)
}

/// A k-fold partition of a dataset's ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: Vec<Vec<String>>,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Record indices of `dataset` in (training, held-out) order for `fold`.
    pub fn fold_indices(&self, dataset: &Dataset, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let held_out: HashSet<&str> = self.folds[fold].iter().map(String::as_str).collect();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, record) in dataset.records().iter().enumerate() {
            if held_out.contains(record.id.as_str()) {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Stratified k-fold split.
///
/// Each class is shuffled with a seeded ChaCha stream and dealt round-robin
/// across folds, so each fold's count for a class is the floor or ceiling of
/// `n_class / k`. Dealing for the second class continues where the first
/// stopped, which keeps total fold sizes within one of each other.
pub fn stratified_kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<SplitPlan> {
    check_k(dataset, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    let mut next = 0usize;
    for label in [Label::Fake, Label::True] {
        let mut members: Vec<&ClaimRecord> = dataset
            .records()
            .iter()
            .filter(|r| r.label == label)
            .collect();
        members.shuffle(&mut rng);
        for record in members {
            folds[next % k].push(record.id.clone());
            next += 1;
        }
    }
    Ok(SplitPlan {
        folds,
        seed,
        stratified: true,
    })
}

/// Plain shuffled k-fold split without class balancing.
pub fn kfold(dataset: &Dataset, k: usize, seed: u64) -> Result<SplitPlan> {
    check_k(dataset, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<&ClaimRecord> = dataset.records().iter().collect();
    order.shuffle(&mut rng);
    let mut folds: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, record) in order.into_iter().enumerate() {
        folds[i % k].push(record.id.clone());
    }
    Ok(SplitPlan {
        folds,
        seed,
        stratified: false,
    })
}

fn check_k(dataset: &Dataset, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the number of records ({})",
            dataset.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn balanced(n_true: usize, n_fake: usize) -> Dataset {
        let mut records = Vec::new();
        for i in 0..n_true {
            records.push(ClaimRecord::new(
                format!("t{i}"),
                format!("true claim {i}"),
                Label::True,
            ));
        }
        for i in 0..n_fake {
            records.push(ClaimRecord::new(
                format!("f{i}"),
                format!("fake claim {i}"),
                Label::Fake,
            ));
        }
        Dataset::new("toy", records).unwrap()
    }

    #[test]
    fn label_tokens() {
        assert_eq!(Label::parse("TRUE"), Some(Label::True));
        assert_eq!(Label::parse("Real"), Some(Label::True));
        assert_eq!(Label::parse("false"), Some(Label::Fake));
        assert_eq!(Label::parse(" Fake "), Some(Label::Fake));
        assert_eq!(Label::parse("maybe"), None);
    }

    #[test]
    fn jsonl_reports_line_numbers() {
        let input = "{\"id\":\"a\",\"text\":\"x y\",\"label\":\"true\"}\n\n{\"id\":\"b\",\"text\":";
        match read_jsonl(Cursor::new(input)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        let input = "{\"id\":\"a\",\"text\":\"x\",\"label\":\"mostly\"}\n";
        assert!(matches!(
            read_jsonl(Cursor::new(input)),
            Err(Error::UnknownLabel { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_id_is_named() {
        let records = vec![
            ClaimRecord::new("c1", "one", Label::True),
            ClaimRecord::new("c1", "two", Label::Fake),
        ];
        let err = Dataset::new("d", records).unwrap_err();
        assert!(matches!(&err, Error::DuplicateId(id) if id == "c1"));
        assert!(err.to_string().contains("c1"));
    }

    #[test]
    fn blank_text_is_rejected() {
        let records = vec![ClaimRecord::new("c1", "   ", Label::True)];
        assert!(matches!(
            Dataset::new("d", records),
            Err(Error::EmptyText { .. })
        ));
    }

    #[test]
    fn parent_must_exist_with_same_label() {
        let mut child = ClaimRecord::new("c2", "para", Label::Fake);
        child.parent_id = Some("c1".into());
        let parent = ClaimRecord::new("c1", "orig", Label::True);
        assert!(Dataset::new("d", vec![parent.clone(), child.clone()]).is_err());
        child.label = Label::True;
        assert!(Dataset::new("d", vec![parent, child.clone()]).is_ok());
        child.parent_id = Some("nope".into());
        assert!(Dataset::new("d", vec![child]).is_err());
    }

    #[test]
    fn bad_date_is_rejected() {
        let mut r = ClaimRecord::new("c1", "text", Label::True);
        r.date = Some("Jan. 28, 2020".into());
        assert!(Dataset::new("d", vec![r.clone()]).is_err());
        r.date = Some("2020-01-28".into());
        assert!(Dataset::new("d", vec![r]).is_ok());
    }

    #[test]
    fn leave_one_out_on_ten_records() {
        let ds = balanced(5, 5);
        let plan = stratified_kfold(&ds, 10, 3).unwrap();
        assert_eq!(plan.k(), 10);
        assert!(plan.folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn sixty_forty_split_is_exact() {
        let ds = balanced(60, 40);
        let plan = stratified_kfold(&ds, 10, 11).unwrap();
        for fold in &plan.folds {
            let trues = fold.iter().filter(|id| id.starts_with('t')).count();
            let fakes = fold.iter().filter(|id| id.starts_with('f')).count();
            assert_eq!((trues, fakes), (6, 4));
        }
    }

    #[test]
    fn split_is_deterministic_and_seed_dependent() {
        let ds = balanced(30, 20);
        let a = stratified_kfold(&ds, 5, 7).unwrap();
        let b = stratified_kfold(&ds, 5, 7).unwrap();
        let c = stratified_kfold(&ds, 5, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn k_out_of_range() {
        let ds = balanced(3, 3);
        assert!(stratified_kfold(&ds, 1, 0).is_err());
        assert!(stratified_kfold(&ds, 7, 0).is_err());
        assert!(kfold(&ds, 0, 0).is_err());
    }

    #[test]
    fn fold_indices_partition_records() {
        let ds = balanced(6, 4);
        let plan = kfold(&ds, 3, 1).unwrap();
        let mut seen = vec![0; ds.len()];
        for f in 0..plan.k() {
            let (train, test) = plan.fold_indices(&ds, f);
            assert_eq!(train.len() + test.len(), ds.len());
            for i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }
}
