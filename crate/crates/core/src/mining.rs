//! A-priori mining of `{one color} -> {emotions}` rules over per-image
//! transactions.
//!
//! The lattice is restricted to itemsets with at most one color and at most
//! `max_consequent` emotions. That shape is closed under taking subsets, so
//! the usual anti-monotone pruning still applies. Transactions and
//! candidates are bit masks over the 24 possible items.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{IttenBin, QuantizedPalette};
use crate::emotion::{dominant_emotions, EmotionLabel, EmotionVector};

#[derive(Debug, Error, PartialEq)]
pub enum MiningError {
    #[error("no images to build transactions from")]
    EmptyCorpus,
    #[error("no transactions to mine")]
    NoTransactions,
    #[error("invalid mining parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Item {
    Color(IttenBin),
    Emotion(EmotionLabel),
}

const ITEM_COUNT: usize = IttenBin::COUNT + EmotionLabel::COUNT;
const COLOR_MASK: u32 = (1 << IttenBin::COUNT) - 1;

impl Item {
    fn bit(self) -> u32 {
        match self {
            Item::Color(b) => 1 << b.slot(),
            Item::Emotion(e) => 1 << (IttenBin::COUNT + e.index()),
        }
    }

    fn from_position(pos: usize) -> Item {
        if pos < IttenBin::COUNT {
            Item::Color(IttenBin::ALL[pos])
        } else {
            Item::Emotion(EmotionLabel::ALL[pos - IttenBin::COUNT])
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Color(b) => write!(f, "color:{b}"),
            Item::Emotion(e) => write!(f, "emo:{e}"),
        }
    }
}

fn items_of(mask: u32) -> impl Iterator<Item = Item> {
    (0..ITEM_COUNT).filter(move |i| mask & (1 << i) != 0).map(Item::from_position)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub image_id: String,
    pub items: BTreeSet<Item>,
}

impl Transaction {
    pub fn new<I: IntoIterator<Item = Item>>(image_id: impl Into<String>, items: I) -> Self {
        Self { image_id: image_id.into(), items: items.into_iter().collect() }
    }

    fn mask(&self) -> u32 {
        self.items.iter().fold(0, |m, i| m | i.bit())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransactionConfig {
    /// Minimum share for a color bin (achromatics included) to count as an item.
    pub color_threshold: f64,
    /// Threshold handed to [`dominant_emotions`].
    pub emotion_threshold: f64,
}

impl Default for TransactionConfig {
    fn default() -> Self {
        Self { color_threshold: 0.05, emotion_threshold: 0.25 }
    }
}

pub fn build_transactions(
    samples: &[(&str, &QuantizedPalette, &EmotionVector)],
    cfg: &TransactionConfig,
) -> Result<Vec<Transaction>, MiningError> {
    if samples.is_empty() {
        return Err(MiningError::EmptyCorpus);
    }
    Ok(samples
        .iter()
        .map(|(id, palette, emotions)| {
            let colors = palette.iter().filter(|(_, s)| *s >= cfg.color_threshold).map(|(b, _)| Item::Color(b));
            let emos = dominant_emotions(emotions, cfg.emotion_threshold).into_iter().map(Item::Emotion);
            Transaction::new(*id, colors.chain(emos))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_consequent: usize,
    /// Whether `something_else` may appear in consequents.
    pub include_something_else: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self { min_support: 0.05, min_confidence: 0.3, max_consequent: 3, include_something_else: false }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.min_support) {
            return Err(MiningError::InvalidParameter(format!("min_support {}", self.min_support)));
        }
        if !unit(self.min_confidence) {
            return Err(MiningError::InvalidParameter(format!("min_confidence {}", self.min_confidence)));
        }
        if self.max_consequent == 0 {
            return Err(MiningError::InvalidParameter("max_consequent must be at least 1".into()));
        }
        Ok(())
    }

    fn allowed_items(&self) -> u32 {
        let all = (1u32 << ITEM_COUNT) - 1;
        if self.include_something_else {
            all
        } else {
            all & !Item::Emotion(EmotionLabel::SomethingElse).bit()
        }
    }

    fn fits_shape(&self, mask: u32) -> bool {
        let colors = (mask & COLOR_MASK).count_ones();
        let emotions = (mask & !COLOR_MASK).count_ones() as usize;
        colors <= 1 && emotions <= self.max_consequent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemset {
    pub items: Vec<Item>,
    pub count: u64,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationRule {
    pub antecedent: IttenBin,
    pub consequent: BTreeSet<EmotionLabel>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

impl AssociationRule {
    /// Consequent labels joined by `+` in column order.
    pub fn consequent_label(&self) -> String {
        self.consequent.iter().map(|e| e.name()).collect::<Vec<_>>().join("+")
    }
}

fn count_supports(transactions: &[u32], candidates: &[u32]) -> Vec<u64> {
    const SHARD: usize = 1024;
    transactions
        .par_chunks(SHARD)
        .map(|shard| {
            candidates
                .iter()
                .map(|&c| shard.iter().filter(|&&t| t & c == c).count() as u64)
                .collect::<Vec<_>>()
        })
        .reduce(
            || vec![0; candidates.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Level-wise frequent itemsets as `(mask, count)`, in generation order.
fn lattice(transactions: &[u32], cfg: &MiningConfig) -> Vec<(u32, u64)> {
    let n = transactions.len() as f64;
    let min_count = |c: u64| c as f64 / n >= cfg.min_support;
    let allowed = cfg.allowed_items();

    let singles: Vec<u32> = (0..ITEM_COUNT).map(|i| 1u32 << i).filter(|b| b & allowed != 0).collect();
    let mut level: Vec<(u32, u64)> = singles
        .iter()
        .copied()
        .zip(count_supports(transactions, &singles))
        .filter(|(_, c)| min_count(*c))
        .collect();
    let mut all = level.clone();

    while !level.is_empty() {
        let known: HashSet<u32> = level.iter().map(|(m, _)| *m).collect();
        let mut candidates = BTreeSet::new();
        for (i, &(a, _)) in level.iter().enumerate() {
            for &(b, _) in &level[i + 1..] {
                let joined = a | b;
                if joined.count_ones() != a.count_ones() + 1 || !cfg.fits_shape(joined) {
                    continue;
                }
                // every immediate subset must itself be frequent
                let closed = (0..ITEM_COUNT)
                    .filter(|k| joined & (1 << k) != 0)
                    .all(|k| known.contains(&(joined & !(1 << k))));
                if closed {
                    candidates.insert(joined);
                }
            }
        }
        let candidates: Vec<u32> = candidates.into_iter().collect();
        level = candidates
            .iter()
            .copied()
            .zip(count_supports(transactions, &candidates))
            .filter(|(_, c)| min_count(*c))
            .collect();
        all.extend_from_slice(&level);
    }
    all
}

fn masks(transactions: &[Transaction]) -> Vec<u32> {
    transactions.iter().map(Transaction::mask).collect()
}

pub fn frequent_itemsets(transactions: &[Transaction], cfg: &MiningConfig) -> Result<Vec<FrequentItemset>, MiningError> {
    if transactions.is_empty() {
        return Err(MiningError::NoTransactions);
    }
    cfg.validate()?;
    let n = transactions.len() as f64;
    Ok(lattice(&masks(transactions), cfg)
        .into_iter()
        .map(|(m, count)| FrequentItemset { items: items_of(m).collect(), count, support: count as f64 / n })
        .collect())
}

/// Rules with support and confidence at or above the configured minimums,
/// sorted by lift then support (both descending), then by name.
pub fn mine_rules(transactions: &[Transaction], cfg: &MiningConfig) -> Result<Vec<AssociationRule>, MiningError> {
    if transactions.is_empty() {
        return Err(MiningError::NoTransactions);
    }
    cfg.validate()?;
    let n = transactions.len() as u64;
    let frequent = lattice(&masks(transactions), cfg);
    let counts: std::collections::HashMap<u32, u64> = frequent.iter().copied().collect();

    let mut rules: Vec<AssociationRule> = frequent
        .iter()
        .filter(|(m, _)| (m & COLOR_MASK).count_ones() == 1 && m & !COLOR_MASK != 0)
        .filter_map(|&(m, joint)| {
            let color = m & COLOR_MASK;
            let emotions = m & !COLOR_MASK;
            let color_count = counts[&color];
            let emotion_count = counts[&emotions];
            let confidence = joint as f64 / color_count as f64;
            if confidence < cfg.min_confidence {
                return None;
            }
            let antecedent = match Item::from_position(color.trailing_zeros() as usize) {
                Item::Color(b) => b,
                Item::Emotion(_) => unreachable!("color mask holds a color"),
            };
            let consequent = items_of(emotions)
                .map(|i| match i {
                    Item::Emotion(e) => e,
                    Item::Color(_) => unreachable!("emotion mask holds emotions"),
                })
                .collect();
            Some(AssociationRule {
                antecedent,
                consequent,
                support: joint as f64 / n as f64,
                confidence,
                lift: (joint as f64 * n as f64) / (color_count as f64 * emotion_count as f64),
            })
        })
        .collect();
    rules.sort_by(rule_order);
    Ok(rules)
}

fn rule_order(a: &AssociationRule, b: &AssociationRule) -> Ordering {
    b.lift
        .total_cmp(&a.lift)
        .then_with(|| b.support.total_cmp(&a.support))
        .then_with(|| a.antecedent.name().cmp(b.antecedent.name()))
        .then_with(|| a.consequent_label().cmp(&b.consequent_label()))
}

/// Keeps rules with lift strictly above `min_lift`, preserving order.
pub fn filter_lift(rules: Vec<AssociationRule>, min_lift: f64) -> Vec<AssociationRule> {
    rules.into_iter().filter(|r| r.lift > min_lift).collect()
}
