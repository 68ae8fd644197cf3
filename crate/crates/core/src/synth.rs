//! Planted synthetic claim corpus.
//!
//! Each claim carries a few *signal* words drawn from a class-conditional
//! distribution and a handful of *noise* words that are equally likely under
//! both classes. Because the generating model is known, the Bayes-optimal
//! decision for any claim can be computed exactly ([`PlantedModel::posterior_true`]).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimRecord, Dataset, Label};
use crate::error::{Error, Result};

pub const TRUE_WORDS: [&str; 4] = ["study", "trial", "hospital", "ministry"];
pub const FAKE_WORDS: [&str; 4] = ["miracle", "hoax", "secret", "garlic"];
pub const NOISE_WORDS: [&str; 40] = [
    "people", "city", "week", "report", "water", "doctor", "school", "market", "family", "country",
    "night", "morning", "street", "phone", "video", "message", "friend", "church", "river",
    "village", "winter", "summer", "train", "airport", "police", "teacher", "student", "farmer",
    "bread", "coffee", "museum", "garden", "bridge", "island", "mountain", "festival", "library",
    "factory", "kitchen", "window",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_claims: usize,
    /// Signal words per claim.
    pub signal_per_claim: usize,
    /// Probability that a signal word comes from the claim's own class.
    pub fidelity: f64,
    pub min_noise: usize,
    pub max_noise: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_claims: 200,
            signal_per_claim: 3,
            fidelity: 0.9,
            min_noise: 4,
            max_noise: 7,
            seed: 0,
        }
    }
}

/// The word-label model a corpus was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    pub fidelity: f64,
}

impl PlantedModel {
    /// Exact posterior probability that a claim with these words is true,
    /// under a uniform class prior.
    pub fn posterior_true(&self, words: &[&str]) -> f64 {
        let q = self.fidelity;
        let mut log_ratio = 0.0;
        for w in words {
            if TRUE_WORDS.contains(w) {
                log_ratio += (q / (1.0 - q)).ln();
            } else if FAKE_WORDS.contains(w) {
                log_ratio -= (q / (1.0 - q)).ln();
            }
        }
        1.0 / (1.0 + (-log_ratio).exp())
    }

    /// Bayes decision for a generated claim text.
    pub fn classify(&self, text: &str) -> Label {
        let words: Vec<&str> = text.trim_end_matches('.').split(' ').collect();
        Label::from_probability(self.posterior_true(&words), 0.5)
    }
}

/// Draws a balanced corpus: claim `i` is true when `i` is even.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, PlantedModel)> {
    if config.n_claims < 2 {
        return Err(Error::InvalidArgument("n_claims must be at least 2".into()));
    }
    if !(0.5..1.0).contains(&config.fidelity) {
        return Err(Error::InvalidArgument(
            "fidelity must lie in [0.5, 1)".into(),
        ));
    }
    if config.min_noise > config.max_noise {
        return Err(Error::InvalidArgument("min_noise exceeds max_noise".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width = config.n_claims.to_string().len().max(3);
    let mut records = Vec::with_capacity(config.n_claims);
    for i in 0..config.n_claims {
        let label = if i % 2 == 0 { Label::True } else { Label::Fake };
        let (own, other) = match label {
            Label::True => (&TRUE_WORDS, &FAKE_WORDS),
            Label::Fake => (&FAKE_WORDS, &TRUE_WORDS),
        };
        let mut words: Vec<&str> = Vec::new();
        for _ in 0..config.signal_per_claim {
            let pool = if rng.gen_bool(config.fidelity) {
                own
            } else {
                other
            };
            words.push(pool.choose(&mut rng).expect("non-empty pool"));
        }
        let n_noise = rng.gen_range(config.min_noise..=config.max_noise);
        for _ in 0..n_noise {
            words.push(NOISE_WORDS.choose(&mut rng).expect("non-empty pool"));
        }
        words.shuffle(&mut rng);
        let mut record = ClaimRecord::new(
            format!("syn-{i:0width$}"),
            format!("{}.", words.join(" ")),
            label,
        );
        record.source = Some("synthetic".into());
        records.push(record);
    }
    let dataset = Dataset::new("synthetic_claims", records)?;
    Ok((
        dataset,
        PlantedModel {
            fidelity: config.fidelity,
        },
    ))
}
