//! Color usage, harmony structure and color-emotion association analytics
//! over image corpora.
//!
//! The pipeline has three strands that meet at a join on `image_id`:
//!
//! * [`color`] samples pixels, converts them to HSL and quantizes them onto
//!   the twelve-hue Itten wheel plus black, gray and white;
//!   [`harmony`] finds analogous, complementary, split-complementary, triad
//!   and tetrad relations in the quantized palette; [`density`] builds
//!   per-channel histograms and kernel density estimates.
//! * [`emotion`] reads per-image emotion probability vectors from a CSV
//!   sidecar.
//! * [`fusion`] correlates the two, and [`mining`] extracts
//!   `{color} -> {emotions}` association rules.
//!
//! [`pipeline`] runs the whole thing over a directory and [`report`] writes
//! the resulting tables.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod color;
pub mod density;
pub mod emotion;
pub mod fusion;
pub mod harmony;
pub mod mining;
pub mod pipeline;
pub mod report;

pub use color::{HslColor, IttenBin, IttenHue, QuantizedPalette, QuantizerConfig, RgbColor, SamplingConfig};
pub use density::{Bandwidth, Channel, ChannelHistogram, DensityEstimate};
pub use emotion::{EmotionLabel, EmotionVector, Valence};
pub use fusion::{CorrelationMatrix, EmotionRatioCurve, HarmonyEmotionTable, JoinSummary};
pub use harmony::{Harmony, HarmonyInstance, HarmonyType, HueSet, PresenceConfig};
pub use mining::{AssociationRule, Item, MiningConfig, Transaction, TransactionConfig};
pub use pipeline::{run, PerImageRecord, PipelineError, RunConfig};
pub use report::CorpusReport;
