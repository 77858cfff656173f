//! Joining per-image color statistics with emotion vectors.
//!
//! Correlations are accumulated as co-moments that merge associatively, so
//! per-shard partial results can be combined in any grouping. Undefined
//! correlations (either side has zero variance) are `None`, never 0.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::color::{IttenBin, QuantizedPalette};
use crate::density::{Channel, ChannelHistogram};
use crate::emotion::{EmotionLabel, EmotionVector};
use crate::harmony::{Harmony, HarmonyType};

/// Joined images needed before correlations are meaningful.
pub const MIN_JOINED: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("need at least {needed} joined images, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("per-image histograms do not share the same binning")]
    BinningMismatch,
}

/// Running means and centered second moments for a pair of variables.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoMoments {
    n: u64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    m2_y: f64,
    c_xy: f64,
}

impl CoMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / n;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &CoMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        self.m2_x += other.m2_x + dx * dx * na * nb / n;
        self.m2_y += other.m2_y + dy * dy * na * nb / n;
        self.c_xy += other.c_xy + dx * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Pearson r, or `None` when either variable is constant.
    pub fn pearson(&self) -> Option<f64> {
        if self.n < 2 || self.m2_x <= 0.0 || self.m2_y <= 0.0 {
            return None;
        }
        Some((self.c_xy / (self.m2_x.sqrt() * self.m2_y.sqrt())).clamp(-1.0, 1.0))
    }
}

/// Ids that paired up and those left over on either side.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JoinSummary {
    pub matched: usize,
    pub orphan_images: Vec<String>,
    pub orphan_emotions: Vec<String>,
}

/// Exact `image_id` join. Output is sorted by id regardless of input order.
pub fn join<'a, T, I>(items: I, emotions: &'a [EmotionVector]) -> (Vec<(&'a str, &'a T, &'a EmotionVector)>, JoinSummary)
where
    I: IntoIterator<Item = (&'a str, &'a T)>,
    T: 'a,
{
    let mut by_id: BTreeMap<&str, &EmotionVector> = emotions.iter().map(|e| (e.image_id(), e)).collect();
    let mut pairs = Vec::new();
    let mut orphan_images = Vec::new();
    for (id, item) in items {
        match by_id.remove(id) {
            Some(e) => pairs.push((id, item, e)),
            None => orphan_images.push(id.to_owned()),
        }
    }
    pairs.sort_by(|a, b| a.0.cmp(b.0));
    orphan_images.sort();
    let summary = JoinSummary {
        matched: pairs.len(),
        orphan_images,
        orphan_emotions: by_id.keys().map(|k| (*k).to_owned()).collect(),
    };
    (pairs, summary)
}

fn require(found: usize, needed: usize) -> Result<(), FusionError> {
    if found < needed {
        Err(FusionError::InsufficientData { needed, found })
    } else {
        Ok(())
    }
}

/// Pearson r between every color share and every emotion probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    /// Rows follow [`IttenBin::ALL`], columns [`EmotionLabel::ALL`].
    pub values: [[Option<f64>; EmotionLabel::COUNT]; IttenBin::COUNT],
    pub n: usize,
}

impl CorrelationMatrix {
    pub fn get(&self, bin: IttenBin, emotion: EmotionLabel) -> Option<f64> {
        self.values[bin.slot()][emotion.index()]
    }
}

/// Mergeable partial state for [`CorrelationMatrix`].
#[derive(Debug, Clone, Default)]
pub struct CorrelationAccumulator {
    cells: [[CoMoments; EmotionLabel::COUNT]; IttenBin::COUNT],
    n: usize,
}

impl CorrelationAccumulator {
    pub fn push(&mut self, palette: &QuantizedPalette, emotions: &EmotionVector) {
        for (row, share) in self.cells.iter_mut().zip(palette.shares()) {
            for (cell, p) in row.iter_mut().zip(emotions.probs()) {
                cell.push(*share, *p);
            }
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &CorrelationAccumulator) {
        for (a, b) in self.cells.iter_mut().flatten().zip(other.cells.iter().flatten()) {
            a.merge(b);
        }
        self.n += other.n;
    }

    pub fn finish(&self) -> Result<CorrelationMatrix, FusionError> {
        require(self.n, MIN_JOINED)?;
        Ok(CorrelationMatrix { values: self.cells.map(|row| row.map(|c| c.pearson())), n: self.n })
    }
}

pub fn color_emotion_correlation_joined(
    samples: &[(&QuantizedPalette, &EmotionVector)],
) -> Result<CorrelationMatrix, FusionError> {
    let mut acc = CorrelationAccumulator::default();
    for (p, e) in samples {
        acc.push(p, e);
    }
    acc.finish()
}

/// Joins palettes to emotions by id and correlates the intersection.
pub fn color_emotion_correlation(
    palettes: &[(String, QuantizedPalette)],
    emotions: &[EmotionVector],
) -> Result<(CorrelationMatrix, JoinSummary), FusionError> {
    let (pairs, summary) = join(palettes.iter().map(|(id, p)| (id.as_str(), p)), emotions);
    let samples: Vec<_> = pairs.iter().map(|(_, p, e)| (*p, *e)).collect();
    Ok((color_emotion_correlation_joined(&samples)?, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonyEmotionRow {
    pub harmony_type: HarmonyType,
    /// Images exhibiting this harmony at least once.
    pub images: usize,
    /// Mean emotion vector over those images, renormalized; `None` when
    /// no image has this harmony.
    pub conditional_mean: Option<[f64; EmotionLabel::COUNT]>,
    /// Point-biserial r between the presence indicator and each emotion.
    pub point_biserial: [Option<f64>; EmotionLabel::COUNT],
}

impl HarmonyEmotionRow {
    pub fn is_empty(&self) -> bool {
        self.images == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonyEmotionTable {
    /// One row per [`HarmonyType::ALL`] entry, empty rows included.
    pub rows: Vec<HarmonyEmotionRow>,
    pub n: usize,
}

impl HarmonyEmotionTable {
    pub fn row(&self, t: HarmonyType) -> &HarmonyEmotionRow {
        self.rows.iter().find(|r| r.harmony_type == t).expect("every harmony type has a row")
    }
}

/// Multi-label harmony presence against emotion probabilities.
pub fn harmony_emotion_table(samples: &[(&[Harmony], &EmotionVector)]) -> Result<HarmonyEmotionTable, FusionError> {
    require(samples.len(), MIN_JOINED)?;
    let rows = HarmonyType::ALL
        .into_iter()
        .map(|t| {
            let mut sums = [0.0; EmotionLabel::COUNT];
            let mut images = 0;
            let mut moments = [CoMoments::default(); EmotionLabel::COUNT];
            for (harmonies, e) in samples {
                let present = harmonies.iter().any(|h| h.harmony_type == t);
                if present {
                    images += 1;
                    for (s, p) in sums.iter_mut().zip(e.probs()) {
                        *s += p;
                    }
                }
                let indicator = if present { 1.0 } else { 0.0 };
                for (m, p) in moments.iter_mut().zip(e.probs()) {
                    m.push(indicator, *p);
                }
            }
            let conditional_mean = (images > 0).then(|| {
                let total: f64 = sums.iter().sum();
                sums.map(|s| s / total)
            });
            HarmonyEmotionRow {
                harmony_type: t,
                images,
                conditional_mean,
                point_biserial: moments.map(|m| m.pearson()),
            }
        })
        .collect();
    Ok(HarmonyEmotionTable { rows, n: samples.len() })
}

/// Share of each emotion in every channel bin, weighted by how much of
/// each image falls in that bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmotionRatioCurve {
    pub channel: Channel,
    pub bin_edges: Vec<f64>,
    pub ratios: Vec<[f64; EmotionLabel::COUNT]>,
    /// `false` for bins that received no mass from any image; their
    /// ratios are all zero.
    pub occupied: Vec<bool>,
}

/// `R(e, b) = sum_img p_e(img) h_img(b) / sum_e' sum_img p_e'(img) h_img(b)`
/// with `h_img` the image's normalized bin mass.
pub fn emotion_ratio_curve(samples: &[(&ChannelHistogram, &EmotionVector)]) -> Result<EmotionRatioCurve, FusionError> {
    let first = samples.first().ok_or(FusionError::InsufficientData { needed: 1, found: 0 })?.0;
    let bins = first.bins();
    let mut numer = vec![[0.0; EmotionLabel::COUNT]; bins];
    for (hist, e) in samples {
        if hist.channel() != first.channel() || hist.bins() != bins {
            return Err(FusionError::BinningMismatch);
        }
        for (row, mass) in numer.iter_mut().zip(hist.masses()) {
            if mass > 0.0 {
                for (cell, p) in row.iter_mut().zip(e.probs()) {
                    *cell += p * mass;
                }
            }
        }
    }
    let mut occupied = Vec::with_capacity(bins);
    let ratios = numer
        .into_iter()
        .map(|row| {
            let denom: f64 = row.iter().sum();
            occupied.push(denom > 0.0);
            if denom > 0.0 {
                row.map(|v| v / denom)
            } else {
                [0.0; EmotionLabel::COUNT]
            }
        })
        .collect();
    Ok(EmotionRatioCurve { channel: first.channel(), bin_edges: first.bin_edges().to_vec(), ratios, occupied })
}

/// Curves for hue, saturation and lightness from per-image histograms
/// given in that channel order.
pub fn emotion_ratio_curves(
    samples: &[(&[ChannelHistogram; 3], &EmotionVector)],
) -> Result<[EmotionRatioCurve; 3], FusionError> {
    let per = |c: usize| {
        let s: Vec<_> = samples.iter().map(|(h, e)| (&h[c], *e)).collect();
        emotion_ratio_curve(&s)
    };
    Ok([per(0)?, per(1)?, per(2)?])
}
