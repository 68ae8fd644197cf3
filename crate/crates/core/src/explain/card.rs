//! Explanation cards: the claim, the predicted label and, depending on the
//! tier, a force plot of word contributions and the claim's provenance.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Attribution, Method};
use crate::corpus::{ClaimRecord, Label};
use crate::error::{Error, Result};
use crate::math::sigmoid;

/// Number of words shown in rendered force plots.
pub const DEFAULT_TOP_K: usize = 15;

/// Placeholder for provenance fields the record does not carry.
pub const UNAVAILABLE: &str = "unavailable";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    /// Text and predicted label.
    T,
    /// Adds the force plot.
    #[serde(rename = "TSE")]
    Tse,
    /// Adds source and evidence.
    #[serde(rename = "TSESE")]
    Tsese,
}

impl std::str::FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T" => Ok(Tier::T),
            "TSE" => Ok(Tier::Tse),
            "TSESE" => Ok(Tier::Tsese),
            _ => Err(Error::InvalidArgument(format!(
                "unknown tier \"{s}\" (expected T, TSE or TSESE)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CardFormat {
    Json,
    Html,
    Terminal,
}

impl std::str::FromStr for CardFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(CardFormat::Json),
            "html" => Ok(CardFormat::Html),
            "terminal" | "text" => Ok(CardFormat::Terminal),
            _ => Err(Error::InvalidArgument(format!(
                "unknown card format \"{s}\""
            ))),
        }
    }
}

/// Red pushes towards true, blue towards fake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordColor {
    Red,
    Blue,
    Neutral,
}

impl WordColor {
    pub fn of(phi: f64) -> WordColor {
        if phi > 0.0 {
            WordColor::Red
        } else if phi < 0.0 {
            WordColor::Blue
        } else {
            WordColor::Neutral
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordContribution {
    pub feature: usize,
    pub word: String,
    pub phi: f64,
    pub color: WordColor,
    /// Whether the word occurs in the claim; absent words still move the
    /// prediction relative to the background.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub present: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcePlot {
    pub base_probability: f64,
    pub base_logodds: f64,
    pub output_probability: f64,
    pub output_logodds: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// How many words the rendered plot shows.
    pub top_k: usize,
    /// Every non-zero contribution, largest |φ| first.
    pub words: Vec<WordContribution>,
}

impl ForcePlot {
    pub fn shown(&self) -> &[WordContribution] {
        &self.words[..self.top_k.min(self.words.len())]
    }

    /// Summed φ of the words beyond the top k.
    pub fn rest(&self) -> f64 {
        self.words.iter().skip(self.top_k).map(|w| w.phi).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub evidence: String,
    pub date: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationCard {
    pub tier: Tier,
    pub claim_id: String,
    pub text: String,
    pub predicted_label: Label,
    pub output_probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_plot: Option<ForcePlot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Builds the card for `claim`. `labels` names each feature; `present`, when
/// given, lists the features occurring in the claim.
pub fn render_card(
    attribution: &Attribution,
    claim: &ClaimRecord,
    labels: &[String],
    present: Option<&[usize]>,
    tier: Tier,
    top_k: usize,
) -> Result<ExplanationCard> {
    if labels.len() != attribution.dim() {
        return Err(Error::DimensionMismatch {
            expected: attribution.dim(),
            found: labels.len(),
        });
    }
    let output_probability = sigmoid(attribution.output_logodds);

    let force_plot = (tier != Tier::T).then(|| {
        let mut words: Vec<WordContribution> = attribution
            .phi
            .iter()
            .enumerate()
            .filter(|(_, &phi)| phi != 0.0)
            .map(|(feature, &phi)| WordContribution {
                feature,
                word: labels[feature].clone(),
                phi,
                color: WordColor::of(phi),
                present: present.map(|p| p.contains(&feature)),
            })
            .collect();
        words.sort_by(|a, b| {
            b.phi
                .abs()
                .total_cmp(&a.phi.abs())
                .then(a.feature.cmp(&b.feature))
        });
        ForcePlot {
            base_probability: attribution.base_probability,
            base_logodds: attribution.base_logodds,
            output_probability,
            output_logodds: attribution.output_logodds,
            method: attribution.method,
            samples: attribution.samples,
            seed: attribution.seed,
            top_k,
            words,
        }
    });

    let provenance = (tier == Tier::Tsese).then(|| {
        let field = |v: &Option<String>| {
            v.as_deref()
                .filter(|s| !s.trim().is_empty())
                .unwrap_or(UNAVAILABLE)
                .to_string()
        };
        Provenance {
            source: field(&claim.source),
            evidence: field(&claim.evidence),
            date: field(&claim.date),
        }
    });

    Ok(ExplanationCard {
        tier,
        claim_id: claim.id.clone(),
        text: claim.text.clone(),
        predicted_label: Label::from_probability(output_probability, 0.5),
        output_probability,
        force_plot,
        provenance,
    })
}

impl ExplanationCard {
    pub fn render(&self, format: CardFormat) -> Result<String> {
        match format {
            CardFormat::Json => Ok(serde_json::to_string_pretty(self)?),
            CardFormat::Html => Ok(self.to_html()),
            CardFormat::Terminal => Ok(self.render_terminal(false)),
        }
    }

    /// Plain-text card with signed bars, optionally colored with ANSI codes.
    pub fn render_terminal(&self, color: bool) -> String {
        const BAR: usize = 24;
        let (red, blue, reset) = if color {
            ("\x1b[31m", "\x1b[34m", "\x1b[0m")
        } else {
            ("", "", "")
        };

        let mut out = String::new();
        let _ = writeln!(out, "Claim {}: {}", self.claim_id, self.text);
        let _ = writeln!(
            out,
            "Predicted: {} (truth probability {:.2})",
            self.predicted_label.as_str(),
            self.output_probability
        );
        if let Some(plot) = &self.force_plot {
            let _ = writeln!(
                out,
                "Base value {:.2} -> output {:.2} (log-odds {:+.3} -> {:+.3}, {})",
                plot.base_probability,
                plot.output_probability,
                plot.base_logodds,
                plot.output_logodds,
                method_name(plot.method)
            );
            let shown = plot.shown();
            let scale = shown.iter().map(|w| w.phi.abs()).fold(0.0, f64::max);
            let width = shown
                .iter()
                .map(|w| w.word.chars().count())
                .max()
                .unwrap_or(0);
            for w in shown {
                let len = if scale > 0.0 {
                    ((w.phi.abs() / scale) * BAR as f64).round().max(1.0) as usize
                } else {
                    0
                };
                let (start, glyph) = match w.color {
                    WordColor::Red => (red, '+'),
                    WordColor::Blue => (blue, '-'),
                    WordColor::Neutral => ("", ' '),
                };
                let end = if start.is_empty() { "" } else { reset };
                let bar: String = std::iter::repeat_n(glyph, len).collect();
                let absent = if w.present == Some(false) {
                    "  (absent)"
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    "  {:<width$}  {:+.4}  {start}{bar}{end}{absent}",
                    w.word,
                    w.phi,
                    width = width
                );
            }
            let hidden = plot.words.len() - shown.len();
            if hidden > 0 {
                let _ = writeln!(out, "  ({hidden} more words, total {:+.4})", plot.rest());
            }
        }
        if let Some(p) = &self.provenance {
            let _ = writeln!(out, "Source: {}", p.source);
            let _ = writeln!(out, "Date: {}", p.date);
            let _ = writeln!(out, "Evidence: {}", p.evidence);
        }
        out
    }

    fn to_html(&self) -> String {
        let mut out = String::new();
        out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
        let _ = writeln!(
            out,
            "<title>Claim {}</title>\n</head>",
            escape(&self.claim_id)
        );
        out.push_str(
            "<body style=\"font-family:sans-serif;max-width:48em;margin:2em auto;color:#222\">\n\
             <div class=\"card\" style=\"border:1px solid #ccc;border-radius:6px;padding:1em 1.5em\">\n",
        );
        let _ = writeln!(
            out,
            "<p class=\"claim\" style=\"font-size:1.2em\">{}</p>",
            escape(&self.text)
        );
        let _ = writeln!(
            out,
            "<p class=\"label\">Predicted: <strong>{}</strong> (truth probability {:.2})</p>",
            self.predicted_label.as_str(),
            self.output_probability
        );
        if let Some(plot) = &self.force_plot {
            let _ = writeln!(
                out,
                "<p class=\"force\">Base value {:.2} &rarr; output {:.2} <small>(log-odds {:+.3} &rarr; {:+.3}, {})</small></p>",
                plot.base_probability,
                plot.output_probability,
                plot.base_logodds,
                plot.output_logodds,
                method_name(plot.method)
            );
            out.push_str("<div class=\"words\" style=\"line-height:2\">\n");
            let scale = plot.shown().iter().map(|w| w.phi.abs()).fold(0.0, f64::max);
            for w in plot.shown() {
                let (fg, bg) = match w.color {
                    WordColor::Red => ("#b00020", "rgba(255,0,60,"),
                    WordColor::Blue => ("#0b4fb3", "rgba(0,120,255,"),
                    WordColor::Neutral => ("#555", "rgba(128,128,128,"),
                };
                let alpha = if scale > 0.0 {
                    0.15 + 0.6 * w.phi.abs() / scale
                } else {
                    0.15
                };
                let (absent_class, absent_style) = if w.present == Some(false) {
                    (" absent", ";text-decoration:line-through")
                } else {
                    ("", "")
                };
                let _ = writeln!(
                    out,
                    "<span class=\"word {}{absent_class}\" title=\"{:+.4}\" style=\"color:{fg};background:{bg}{alpha:.2});padding:2px 6px;margin:2px;border-radius:3px{absent_style}\">{} {:+.3}</span>",
                    color_name(w.color),
                    w.phi,
                    escape(&w.word),
                    w.phi
                );
            }
            let hidden = plot.words.len() - plot.shown().len();
            if hidden > 0 {
                let _ = writeln!(
                    out,
                    "<span class=\"rest\">{hidden} more words, total {:+.3}</span>",
                    plot.rest()
                );
            }
            out.push_str("</div>\n");
        }
        if let Some(p) = &self.provenance {
            out.push_str("<dl class=\"provenance\">\n");
            for (name, value) in [
                ("Source", &p.source),
                ("Date", &p.date),
                ("Evidence", &p.evidence),
            ] {
                let _ = writeln!(out, "<dt>{name}</dt><dd>{}</dd>", escape(value));
            }
            out.push_str("</dl>\n");
        }
        out.push_str("</div>\n</body>\n</html>\n");
        out
    }
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::LinearExact => "linear exact",
        Method::BruteForce => "exact",
        Method::TreeInterventional => "tree",
        Method::Sampling => "sampling",
    }
}

fn color_name(color: WordColor) -> &'static str {
    match color {
        WordColor::Red => "red",
        WordColor::Blue => "blue",
        WordColor::Neutral => "neutral",
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}
