//! Harmony detection on the quantized wheel.
//!
//! All geometry is done on wheel positions (0..12, 30 degrees apart), never on
//! raw hue angles. A template matches when every one of its members is
//! present, so one palette usually yields several harmonies at once.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{IttenHue, QuantizedPalette};

#[derive(Debug, Error, PartialEq)]
pub enum HarmonyError {
    #[error("hue index {0} is outside 0..=11")]
    InvalidHueIndex(usize),
    #[error("no harmony instances to choose from")]
    NoInstances,
    #[error("presence threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
}

/// Closed set of harmony relations, declared in tie-break priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonyType {
    Analogous,
    Complementary,
    SplitComplementary,
    Triad,
    /// Also called a rectangular harmony.
    Tetrad,
    Monochromatic,
    Monotone,
}

impl HarmonyType {
    pub const ALL: [HarmonyType; 7] = [
        HarmonyType::Monotone,
        HarmonyType::Monochromatic,
        HarmonyType::Analogous,
        HarmonyType::Complementary,
        HarmonyType::SplitComplementary,
        HarmonyType::Triad,
        HarmonyType::Tetrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HarmonyType::Monotone => "monotone",
            HarmonyType::Monochromatic => "monochromatic",
            HarmonyType::Analogous => "analogous",
            HarmonyType::Complementary => "complementary",
            HarmonyType::SplitComplementary => "split_complementary",
            HarmonyType::Triad => "triad",
            HarmonyType::Tetrad => "tetrad",
        }
    }

    pub fn member_count(self) -> usize {
        match self {
            HarmonyType::Monotone => 0,
            HarmonyType::Monochromatic => 1,
            HarmonyType::Complementary => 2,
            HarmonyType::Analogous | HarmonyType::SplitComplementary | HarmonyType::Triad => 3,
            HarmonyType::Tetrad => 4,
        }
    }

    /// Lower is preferred when shares tie.
    fn priority(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for HarmonyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of wheel positions stored as a 12-bit mask. Orders
/// lexicographically by ascending member list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HueSet(u16);

impl Ord for HueSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.indices().cmp(other.indices())
    }
}

impl PartialOrd for HueSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl HueSet {
    pub const FULL: HueSet = HueSet(0x0fff);

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_bits(bits: u16) -> Result<Self, HarmonyError> {
        if bits & !Self::FULL.0 != 0 {
            return Err(HarmonyError::InvalidHueIndex((15 - bits.leading_zeros()) as usize));
        }
        Ok(Self(bits))
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Result<Self, HarmonyError> {
        let mut bits = 0u16;
        for i in indices {
            if i > 11 {
                return Err(HarmonyError::InvalidHueIndex(i));
            }
            bits |= 1 << i;
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn contains(self, index: usize) -> bool {
        index < 12 && self.0 & (1 << index) != 0
    }

    pub fn is_superset(self, other: HueSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Ascending wheel positions.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..12).filter(move |&i| self.0 & (1 << i) != 0)
    }

    /// Rotates every member `k` positions around the wheel.
    pub fn rotate(self, k: usize) -> Self {
        let k = (k % 12) as u32;
        let b = u32::from(self.0);
        Self((((b << k) | (b >> (12 - k))) & 0x0fff) as u16)
    }
}

impl FromIterator<IttenHue> for HueSet {
    fn from_iter<I: IntoIterator<Item = IttenHue>>(iter: I) -> Self {
        Self(iter.into_iter().fold(0, |acc, h| acc | 1 << h.index()))
    }
}

/// A detected relation and the wheel positions it spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Harmony {
    pub harmony_type: HarmonyType,
    pub members: HueSet,
}

impl Harmony {
    /// Sum of member-hue shares, accumulated in ascending wheel order.
    pub fn combined_share(&self, palette: &QuantizedPalette) -> f64 {
        self.members.indices().map(|i| palette.hue_share(i)).sum()
    }

    pub fn hues(&self) -> impl Iterator<Item = IttenHue> {
        self.members.indices().map(|i| IttenHue::ALL[i])
    }

    pub fn rotate(self, k: usize) -> Self {
        Self { harmony_type: self.harmony_type, members: self.members.rotate(k) }
    }

    /// Member names joined by `+`, ascending wheel order.
    pub fn label(&self) -> String {
        self.hues().map(IttenHue::name).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonyInstance {
    pub harmony: Harmony,
    pub combined_share: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresenceConfig {
    pub presence_threshold: f64,
}

impl Default for PresenceConfig {
    fn default() -> Self {
        Self { presence_threshold: 0.05 }
    }
}

impl PresenceConfig {
    pub fn validate(&self) -> Result<(), HarmonyError> {
        let t = self.presence_threshold;
        if t > 0.0 && t < 1.0 {
            Ok(())
        } else {
            Err(HarmonyError::InvalidThreshold(t))
        }
    }
}

/// Chromatic bins whose share reaches the presence threshold.
pub fn present_hues(palette: &QuantizedPalette, cfg: &PresenceConfig) -> HueSet {
    IttenHue::ALL
        .into_iter()
        .filter(|h| palette.hue_share(h.index()) >= cfg.presence_threshold)
        .collect()
}

fn offsets_set(base: usize, offsets: &[usize]) -> HueSet {
    HueSet(offsets.iter().fold(0, |acc, o| acc | 1 << ((base + o) % 12)))
}

/// Every template on the wheel, deduplicated, in `(type, members)` order.
pub fn all_templates() -> Vec<Harmony> {
    let mut out = Vec::new();
    let mut push = |t: HarmonyType, members: HueSet| {
        let h = Harmony { harmony_type: t, members };
        if !out.contains(&h) {
            out.push(h);
        }
    };
    for i in 0..12 {
        push(HarmonyType::Analogous, offsets_set(i, &[0, 1, 2]));
        push(HarmonyType::Complementary, offsets_set(i, &[0, 6]));
        push(HarmonyType::SplitComplementary, offsets_set(i, &[0, 5, 7]));
        push(HarmonyType::Triad, offsets_set(i, &[0, 4, 8]));
    }
    for i in 0..6 {
        for j in (i + 1)..6 {
            push(HarmonyType::Tetrad, offsets_set(i, &[0, 6, j - i, j - i + 6]));
        }
    }
    out.sort();
    out
}

/// Every harmony template fully contained in `hues`.
///
/// An empty set yields a single monotone harmony and a single hue yields
/// monochromatic.
pub fn detect_harmonies(hues: HueSet) -> Vec<Harmony> {
    match hues.len() {
        0 => vec![Harmony { harmony_type: HarmonyType::Monotone, members: hues }],
        1 => vec![Harmony { harmony_type: HarmonyType::Monochromatic, members: hues }],
        _ => TEMPLATES.with(|t| t.iter().copied().filter(|h| hues.is_superset(h.members)).collect()),
    }
}

/// Index-based entry point that validates positions.
pub fn detect_harmonies_from_indices(indices: &[usize]) -> Result<Vec<Harmony>, HarmonyError> {
    HueSet::from_indices(indices.iter().copied()).map(detect_harmonies)
}

thread_local! {
    static TEMPLATES: Vec<Harmony> = all_templates();
}

/// Picks the harmony with the largest combined share. Ties prefer the
/// earlier type in analogous, complementary, split-complementary, triad,
/// tetrad, monochromatic, monotone order, then the lexicographically
/// smaller member list.
pub fn dominant_harmony(
    instances: &[Harmony],
    palette: &QuantizedPalette,
) -> Result<HarmonyInstance, HarmonyError> {
    instances
        .iter()
        .map(|&h| HarmonyInstance { harmony: h, combined_share: h.combined_share(palette) })
        .min_by(|a, b| {
            b.combined_share
                .total_cmp(&a.combined_share)
                .then_with(|| a.harmony.harmony_type.priority().cmp(&b.harmony.harmony_type.priority()))
                .then_with(|| a.harmony.members.cmp(&b.harmony.members))
        })
        .ok_or(HarmonyError::NoInstances)
}
