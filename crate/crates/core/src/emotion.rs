//! Emotion probability vectors and the sidecar CSV they travel in.
//!
//! The sidecar is UTF-8, LF-terminated, with the exact header
//!
//! ```text
//! image_id,amusement,awe,contentment,excitement,anger,disgust,fear,sadness,something_else
//! ```
//!
//! and one row per image. `image_id` is the image filename stem.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("line {line}: malformed sidecar: {reason}")]
    MalformedFile { line: usize, reason: String },
    #[error("line {line}: unknown emotion label `{label}`")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: negative probability for {label} in `{image_id}`")]
    NegativeProbability { line: usize, image_id: String, label: EmotionLabel },
    #[error("line {line}: probabilities for `{image_id}` sum to {sum}")]
    BadNormalization { line: usize, image_id: String, sum: f64 },
    #[error("line {line}: duplicate image id `{image_id}`")]
    DuplicateImageId { line: usize, image_id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The nine categorical labels, in sidecar column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionLabel {
    Amusement,
    Awe,
    Contentment,
    Excitement,
    Anger,
    Disgust,
    Fear,
    Sadness,
    SomethingElse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Positive,
    Negative,
    Neutral,
}

impl EmotionLabel {
    pub const COUNT: usize = 9;

    pub const ALL: [EmotionLabel; 9] = [
        EmotionLabel::Amusement,
        EmotionLabel::Awe,
        EmotionLabel::Contentment,
        EmotionLabel::Excitement,
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Sadness,
        EmotionLabel::SomethingElse,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Amusement => "amusement",
            EmotionLabel::Awe => "awe",
            EmotionLabel::Contentment => "contentment",
            EmotionLabel::Excitement => "excitement",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::SomethingElse => "something_else",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Canonical label for a name or one of its common synonyms
    /// (`fun`, `satisfaction`, `rage`, ...).
    pub fn from_synonym(name: &str) -> Option<Self> {
        let lower = name.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Self::from_name(&lower).or(match lower.as_str() {
            "fun" | "entertainment" => Some(EmotionLabel::Amusement),
            "satisfaction" => Some(EmotionLabel::Contentment),
            "rage" => Some(EmotionLabel::Anger),
            "arousal" => Some(EmotionLabel::Excitement),
            "other" => Some(EmotionLabel::SomethingElse),
            _ => None,
        })
    }

    pub fn valence(self) -> Valence {
        match self {
            EmotionLabel::Amusement | EmotionLabel::Awe | EmotionLabel::Contentment | EmotionLabel::Excitement => {
                Valence::Positive
            }
            EmotionLabel::Anger | EmotionLabel::Disgust | EmotionLabel::Fear | EmotionLabel::Sadness => {
                Valence::Negative
            }
            EmotionLabel::SomethingElse => Valence::Neutral,
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const SIDECAR_HEADER: &str =
    "image_id,amusement,awe,contentment,excitement,anger,disgust,fear,sadness,something_else";

/// Rows whose probabilities sum within this distance of 1 are renormalized.
pub const SUM_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionVector {
    image_id: String,
    probs: [f64; EmotionLabel::COUNT],
}

/// Why a probability row was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorRejection {
    Negative(EmotionLabel),
    Sum(f64),
}

impl EmotionVector {
    /// Validates and renormalizes a probability row.
    pub fn new(image_id: impl Into<String>, probs: [f64; EmotionLabel::COUNT]) -> Result<Self, VectorRejection> {
        if let Some(i) = probs.iter().position(|p| !(*p >= 0.0)) {
            return Err(VectorRejection::Negative(EmotionLabel::ALL[i]));
        }
        let sum: f64 = probs.iter().sum();
        if !((sum - 1.0).abs() <= SUM_TOLERANCE) {
            return Err(VectorRejection::Sum(sum));
        }
        let probs = if sum == 1.0 { probs } else { probs.map(|p| p / sum) };
        Ok(Self { image_id: image_id.into(), probs })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn prob(&self, label: EmotionLabel) -> f64 {
        self.probs[label.index()]
    }

    pub fn probs(&self) -> &[f64; EmotionLabel::COUNT] {
        &self.probs
    }

    /// Highest-probability label; ties go to the alphabetically first name.
    pub fn argmax(&self) -> EmotionLabel {
        let mut best = EmotionLabel::ALL[0];
        for e in EmotionLabel::ALL {
            let (p, q) = (self.prob(e), self.prob(best));
            if p > q || (p == q && e.name() < best.name()) {
                best = e;
            }
        }
        best
    }
}

/// Labels at or above `threshold`, falling back to the argmax when none
/// qualifies. Never empty.
pub fn dominant_emotions(v: &EmotionVector, threshold: f64) -> BTreeSet<EmotionLabel> {
    let set: BTreeSet<_> = EmotionLabel::ALL.into_iter().filter(|&e| v.prob(e) >= threshold).collect();
    if set.is_empty() {
        BTreeSet::from([v.argmax()])
    } else {
        set
    }
}

pub fn read_sidecar(path: &Path) -> Result<Vec<EmotionVector>, EmotionError> {
    parse_sidecar(BufReader::new(File::open(path)?))
}

pub fn parse_sidecar<R: BufRead>(reader: R) -> Result<Vec<EmotionVector>, EmotionError> {
    let mut lines = reader.split(b'\n');
    let header = match lines.next() {
        Some(h) => decode(h?, 1)?,
        None => return Err(malformed(1, "missing header")),
    };
    check_header(&header)?;

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = decode(line?, line_no)?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != EmotionLabel::COUNT + 1 {
            return Err(malformed(line_no, format!("expected 10 fields, found {}", fields.len())));
        }
        let image_id = fields[0];
        if image_id.is_empty() {
            return Err(malformed(line_no, "empty image_id"));
        }
        let mut probs = [0.0; EmotionLabel::COUNT];
        for (slot, raw) in probs.iter_mut().zip(&fields[1..]) {
            *slot = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(line_no, format!("`{raw}` is not a decimal number")))?;
        }
        let v = EmotionVector::new(image_id, probs).map_err(|r| match r {
            VectorRejection::Negative(label) => {
                EmotionError::NegativeProbability { line: line_no, image_id: image_id.to_owned(), label }
            }
            VectorRejection::Sum(sum) => {
                EmotionError::BadNormalization { line: line_no, image_id: image_id.to_owned(), sum }
            }
        })?;
        if !seen.insert(image_id.to_owned()) {
            return Err(EmotionError::DuplicateImageId { line: line_no, image_id: image_id.to_owned() });
        }
        out.push(v);
    }
    Ok(out)
}

fn decode(bytes: Vec<u8>, line: usize) -> Result<String, EmotionError> {
    String::from_utf8(bytes).map_err(|_| malformed(line, "invalid UTF-8"))
}

fn malformed(line: usize, reason: impl Into<String>) -> EmotionError {
    EmotionError::MalformedFile { line, reason: reason.into() }
}

fn check_header(header: &str) -> Result<(), EmotionError> {
    if header == SIDECAR_HEADER {
        return Ok(());
    }
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"image_id") {
        return Err(malformed(1, "first column must be image_id"));
    }
    if let Some(unknown) = cols[1..].iter().find(|c| EmotionLabel::from_name(c).is_none()) {
        return Err(EmotionError::UnknownLabel { line: 1, label: (*unknown).to_owned() });
    }
    Err(malformed(1, format!("header must be `{SIDECAR_HEADER}`")))
}

/// Writes vectors in sidecar format using shortest round-trip float text.
pub fn write_sidecar<W: Write>(mut w: W, vectors: &[EmotionVector]) -> io::Result<()> {
    writeln!(w, "{SIDECAR_HEADER}")?;
    for v in vectors {
        write!(w, "{}", v.image_id)?;
        for p in v.probs {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
