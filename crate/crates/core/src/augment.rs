//! Back-translation augmentation through a pluggable translation service.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimRecord, Dataset};
use crate::error::{Error, Result};

pub const SOURCE_LANGUAGE: &str = "en";
pub const DEFAULT_PIVOT: &str = "de";

pub trait TranslationClient: Send + Sync {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String>;
}

/// Returns its input unchanged. Every back-translation through it is skipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityClient;

impl TranslationClient for IdentityClient {
    fn translate(&self, text: &str, _source: &str, _target: &str) -> Result<String> {
        Ok(text.to_string())
    }
}

/// Serves precomputed paraphrases keyed by original text.
///
/// The outbound leg returns the paraphrase and the return leg passes text
/// through, so a round trip yields exactly the stored paraphrase.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    paraphrases: HashMap<String, String>,
}

#[derive(Deserialize)]
struct FixtureLine {
    id: String,
    paraphrase: String,
}

impl FixtureClient {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        FixtureClient {
            paraphrases: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    /// Loads `{"id", "paraphrase"}` JSONL and resolves ids against `dataset`.
    /// Ids that are not in the dataset are ignored.
    pub fn load(path: &Path, dataset: &Dataset) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut paraphrases = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: FixtureLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
            if let Some(record) = dataset.get(&entry.id) {
                paraphrases.insert(record.text.clone(), entry.paraphrase);
            }
        }
        Ok(FixtureClient { paraphrases })
    }

    pub fn len(&self) -> usize {
        self.paraphrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paraphrases.is_empty()
    }
}

impl TranslationClient for FixtureClient {
    fn translate(&self, text: &str, source: &str, _target: &str) -> Result<String> {
        if source != SOURCE_LANGUAGE {
            return Ok(text.to_string());
        }
        self.paraphrases
            .get(text)
            .cloned()
            .ok_or_else(|| Error::Translation(format!("no fixture paraphrase for \"{text}\"")))
    }
}

/// JSON-over-HTTP translation service.
///
/// Request: `POST {"text", "source", "target"}`; response: `{"text"}`.
/// Any non-2xx status is a failure.
#[derive(Debug, Clone)]
pub struct HttpTranslationClient {
    endpoint: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct TranslationRequest<'a> {
    text: &'a str,
    source: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct TranslationResponse {
    text: String,
}

impl HttpTranslationClient {
    pub fn new(
        endpoint: impl Into<String>,
        token: Option<String>,
        timeout: Duration,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Translation(e.to_string()))?;
        Ok(HttpTranslationClient {
            endpoint: endpoint.into(),
            token,
            client,
        })
    }
}

impl TranslationClient for HttpTranslationClient {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String> {
        let mut request = self.client.post(&self.endpoint).json(&TranslationRequest {
            text,
            source,
            target,
        });
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .map_err(|e| Error::Translation(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::Translation(format!("service returned {status}")));
        }
        let body: TranslationResponse = response
            .json()
            .map_err(|e| Error::Translation(format!("malformed response: {e}")))?;
        Ok(body.text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackTranslation {
    Produced(ClaimRecord),
    SkippedIdentical,
}

/// Id given to the back-translation of `parent_id` through `pivot`.
pub fn product_id(parent_id: &str, pivot: &str) -> String {
    format!("{parent_id}~bt-{pivot}")
}

/// Translates `record` to `pivot` and back. A result equal to the original
/// (ignoring case) is reported as skipped.
pub fn back_translate(
    client: &dyn TranslationClient,
    record: &ClaimRecord,
    pivot: &str,
) -> Result<BackTranslation> {
    if record.text.trim().is_empty() {
        return Err(Error::EmptyText {
            id: record.id.clone(),
        });
    }
    let outbound = client.translate(&record.text, SOURCE_LANGUAGE, pivot)?;
    if outbound.trim().is_empty() {
        return Err(Error::EmptyTranslation);
    }
    let text = client.translate(&outbound, pivot, SOURCE_LANGUAGE)?;
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::EmptyTranslation);
    }
    if text.to_lowercase() == record.text.trim().to_lowercase() {
        return Ok(BackTranslation::SkippedIdentical);
    }
    Ok(BackTranslation::Produced(ClaimRecord {
        id: product_id(&record.id, pivot),
        text: text.to_string(),
        label: record.label,
        source: record.source.clone(),
        date: record.date.clone(),
        evidence: record.evidence.clone(),
        parent_id: Some(record.id.clone()),
    }))
}

/// Where augmentation products may be used during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentScope {
    /// Products enter a training fold only alongside their parent, and are
    /// never evaluated on.
    #[default]
    TrainFoldsOnly,
    /// Products are ordinary records, split across folds like any other.
    WholeDataset,
}

impl FromStr for AugmentScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "train_folds_only" | "train" => Ok(AugmentScope::TrainFoldsOnly),
            "whole_dataset" | "whole" => Ok(AugmentScope::WholeDataset),
            other => Err(Error::InvalidArgument(format!(
                "unknown augmentation scope \"{other}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AugmentationReport {
    pub produced: usize,
    pub skipped_identical: usize,
    pub failed: usize,
    pub pivot_language: String,
    pub scope: AugmentScope,
    /// Records that are themselves augmentation products; they are never
    /// re-augmented and do not count toward the totals above.
    pub excluded_products: usize,
    pub failures: Vec<FailedTranslation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedTranslation {
    pub id: String,
    pub error: String,
}

impl AugmentationReport {
    /// Number of original records considered for augmentation.
    pub fn considered(&self) -> usize {
        self.produced + self.skipped_identical + self.failed
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AugmentOptions {
    /// Upper bound on concurrent translation requests.
    pub max_concurrency: usize,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions { max_concurrency: 4 }
    }
}

/// Back-translates every original record and appends the products after the
/// originals, in input order. Failures are recorded, never fatal.
pub fn augment_dataset(
    client: &dyn TranslationClient,
    dataset: &Dataset,
    pivot: &str,
    scope: AugmentScope,
    options: AugmentOptions,
) -> Result<(Dataset, AugmentationReport)> {
    let originals: Vec<&ClaimRecord> = dataset
        .records()
        .iter()
        .filter(|r| !r.is_augmented())
        .collect();
    let mut report = AugmentationReport {
        pivot_language: pivot.to_string(),
        scope,
        excluded_products: dataset.len() - originals.len(),
        ..Default::default()
    };

    let outcomes = translate_all(client, &originals, pivot, options.max_concurrency)?;

    let mut taken: HashSet<String> = dataset.records().iter().map(|r| r.id.clone()).collect();
    let mut records = dataset.records().to_vec();
    for (parent, outcome) in originals.iter().zip(outcomes) {
        match outcome {
            Ok(BackTranslation::Produced(mut product)) => {
                product.id = unique_id(&product.id, &taken);
                taken.insert(product.id.clone());
                records.push(product);
                report.produced += 1;
            }
            Ok(BackTranslation::SkippedIdentical) => report.skipped_identical += 1,
            Err(e) => {
                log::warn!("back-translation of {} failed: {e}", parent.id);
                report.failed += 1;
                report.failures.push(FailedTranslation {
                    id: parent.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    let augmented = Dataset::new(dataset.name.clone(), records)?;
    Ok((augmented, report))
}

fn translate_all(
    client: &dyn TranslationClient,
    records: &[&ClaimRecord],
    pivot: &str,
    max_concurrency: usize,
) -> Result<Vec<Result<BackTranslation>>> {
    use rayon::prelude::*;

    if max_concurrency <= 1 || records.len() <= 1 {
        return Ok(records
            .iter()
            .map(|r| back_translate(client, r, pivot))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_concurrency)
        .build()
        .map_err(|e| Error::Translation(e.to_string()))?;
    // par_iter().collect() keeps input order
    Ok(pool.install(|| {
        records
            .par_iter()
            .map(|r| back_translate(client, r, pivot))
            .collect()
    }))
}

fn unique_id(candidate: &str, taken: &HashSet<String>) -> String {
    if !taken.contains(candidate) {
        return candidate.to_string();
    }
    (2..)
        .map(|n| format!("{candidate}-{n}"))
        .find(|id| !taken.contains(id))
        .expect("unbounded search")
}
