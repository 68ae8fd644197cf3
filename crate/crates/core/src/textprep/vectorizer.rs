use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, TokenStream, TokenizerConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    pub tokenizer: TokenizerConfig,
    /// Minimum number of documents a token must appear in.
    pub min_df: usize,
    pub l2_normalize: bool,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            tokenizer: TokenizerConfig::default(),
            min_df: 1,
            l2_normalize: true,
        }
    }
}

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl FeatureVector {
    /// Builds a vector from `(index, value)` pairs. Pairs are sorted; zero
    /// values are dropped; repeated indices are summed.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite feature value at {i}"
                )));
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Ok(FeatureVector {
            indices,
            values,
            dim,
        })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let dense_len = values.len();
        let (indices, values) = values
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        FeatureVector {
            indices,
            values,
            dim: dense_len,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        self.scatter_into(&mut dense);
        dense
    }

    /// Writes the non-zero entries into `dense`, leaving other slots untouched.
    pub fn scatter_into(&self, dense: &mut [f64]) {
        for (i, v) in self.iter() {
            dense[i] = v;
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Fitted TF-IDF vocabulary. Columns follow lexicographic token order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    doc_count: usize,
    config: VectorizerConfig,
}

#[derive(Serialize, Deserialize)]
struct VectorizerFile {
    config: VectorizerConfig,
    doc_count: usize,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
}

/// Fits vocabulary and smoothed idf weights, `ln((1 + N) / (1 + df)) + 1`.
pub fn fit_vectorizer(corpus: &[TokenStream], config: &VectorizerConfig) -> Result<Vectorizer> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let mut seen: Vec<&str> = doc.iter().collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let n = corpus.len() as f64;
    let min_df = config.min_df.max(1);
    let mut terms = Vec::new();
    let mut idf = Vec::new();
    for (token, count) in df {
        if count >= min_df {
            terms.push(token.to_string());
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
    }
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vectorizer::from_parts(
        terms,
        idf,
        corpus.len(),
        config.clone(),
    ))
}

impl Vectorizer {
    fn from_parts(
        terms: Vec<String>,
        idf: Vec<f64>,
        doc_count: usize,
        config: VectorizerConfig,
    ) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vectorizer {
            terms,
            index,
            idf,
            doc_count,
            config,
        }
    }

    /// Tokenizes every text with the configured tokenizer and fits on the result.
    pub fn fit_texts<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        config: &VectorizerConfig,
    ) -> Result<Self> {
        let corpus: Vec<TokenStream> = texts
            .into_iter()
            .map(|t| tokenize(t, &config.tokenizer))
            .collect();
        fit_vectorizer(&corpus, config)
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, column: usize) -> &str {
        &self.terms[column]
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    /// Raw count times idf for in-vocabulary tokens, L2-normalized when
    /// configured. A vector with no in-vocabulary tokens stays zero.
    pub fn transform(&self, tokens: &TokenStream) -> FeatureVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for token in tokens.iter() {
            if let Some(col) = self.column(token) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut pairs: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, count)| (col, count * self.idf[col]))
            .collect();
        if self.config.l2_normalize {
            let norm = pairs.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, v) in &mut pairs {
                    *v /= norm;
                }
            }
        }
        let (indices, values) = pairs.into_iter().unzip();
        FeatureVector {
            indices,
            values,
            dim: self.dim(),
        }
    }

    pub fn transform_text(&self, text: &str) -> FeatureVector {
        self.transform(&tokenize(text, &self.config.tokenizer))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VectorizerFile {
            config: self.config.clone(),
            doc_count: self.doc_count,
            vocabulary: self.terms.clone(),
            idf: self.idf.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: VectorizerFile = serde_json::from_str(json)?;
        if file.vocabulary.len() != file.idf.len() {
            return Err(Error::DimensionMismatch {
                expected: file.vocabulary.len(),
                found: file.idf.len(),
            });
        }
        if file.vocabulary.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "vocabulary must be strictly lexicographically ordered".into(),
            ));
        }
        if file.idf.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "idf weights must be finite and non-negative".into(),
            ));
        }
        Ok(Vectorizer::from_parts(
            file.vocabulary,
            file.idf,
            file.doc_count,
            file.config,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vectorizer::from_json(&json)
    }
}
