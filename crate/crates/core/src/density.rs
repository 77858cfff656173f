//! Per-channel histograms and kernel density estimates for H, S and L.
//!
//! Hue is treated as circular: the Gaussian kernel is wrapped over the
//! neighbouring 360 degree images (three on each side). Saturation and
//! lightness live on `[0, 1]` and use reflection at both boundaries, so mass
//! that would leak past 0 or 1 is folded back into the domain.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("no values supplied")]
    EmptyInput,
    #[error("value {value} is outside the {channel} domain")]
    OutOfDomain { channel: Channel, value: f64 },
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("cannot merge histograms with different binning")]
    BinningMismatch,
    #[error("weights must be non-negative with a positive total")]
    BadWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Hue,
    Saturation,
    Lightness,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Hue, Channel::Saturation, Channel::Lightness];

    /// `(low, high)` bounds; hue excludes its upper bound for raw values.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Channel::Hue => (0.0, 360.0),
            Channel::Saturation | Channel::Lightness => (0.0, 1.0),
        }
    }

    pub fn width(self) -> f64 {
        let (lo, hi) = self.domain();
        hi - lo
    }

    pub fn short(self) -> &'static str {
        match self {
            Channel::Hue => "h",
            Channel::Saturation => "s",
            Channel::Lightness => "l",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Hue => "hue",
            Channel::Saturation => "saturation",
            Channel::Lightness => "lightness",
        }
    }

    fn accepts(self, v: f64) -> bool {
        let (lo, hi) = self.domain();
        match self {
            Channel::Hue => (lo..hi).contains(&v),
            _ => (lo..=hi).contains(&v),
        }
    }

    /// Evaluation points may sit on the closed domain for every channel.
    fn accepts_eval(self, v: f64) -> bool {
        let (lo, hi) = self.domain();
        (lo..=hi).contains(&v)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Equal-width bin counts. Bins are half-open except the last, which is
/// closed on the right for saturation and lightness.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelHistogram {
    channel: Channel,
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl ChannelHistogram {
    pub fn empty(channel: Channel, bins: usize) -> Result<Self, DensityError> {
        if bins == 0 {
            return Err(DensityError::NoBins);
        }
        let (lo, hi) = channel.domain();
        let bin_edges = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        Ok(Self { channel, bin_edges, counts: vec![0; bins] })
    }

    pub fn add(&mut self, value: f64) -> Result<(), DensityError> {
        if !self.channel.accepts(value) {
            return Err(DensityError::OutOfDomain { channel: self.channel, value });
        }
        let (lo, _) = self.channel.domain();
        let bins = self.counts.len();
        let idx = (((value - lo) / self.channel.width()) * bins as f64) as usize;
        self.counts[idx.min(bins - 1)] += 1;
        Ok(())
    }

    /// Elementwise count addition.
    pub fn merge(&mut self, other: &ChannelHistogram) -> Result<(), DensityError> {
        if self.channel != other.channel || self.counts.len() != other.counts.len() {
            return Err(DensityError::BinningMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
    }

    /// Counts divided by the total; all zeros when the histogram is empty.
    pub fn masses(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

pub fn histogram(values: &[f64], channel: Channel, bins: usize) -> Result<ChannelHistogram, DensityError> {
    if values.is_empty() {
        return Err(DensityError::EmptyInput);
    }
    let mut h = ChannelHistogram::empty(channel, bins)?;
    for &v in values {
        h.add(v)?;
    }
    Ok(h)
}

/// Kernel bandwidth: a fixed width in channel units, or Silverman's rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Bandwidth::Auto);
        }
        let v: f64 = s.parse().map_err(|_| format!("expected `auto` or a number, got `{s}`"))?;
        if v > 0.0 && v.is_finite() {
            Ok(Bandwidth::Fixed(v))
        } else {
            Err(format!("bandwidth must be positive, got {v}"))
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Auto => f.write_str("auto"),
            Bandwidth::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => s.serialize_str("auto"),
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => v.to_string().parse(),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub channel: Channel,
    pub eval_points: Vec<f64>,
    pub densities: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoid-rule integral over the evaluation grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.eval_points, &self.densities)
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

/// `n` evenly spaced points covering the closed channel domain.
pub fn eval_grid(channel: Channel, n: usize) -> Vec<f64> {
    let (lo, hi) = channel.domain();
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

const WRAPS: i32 = 3;

fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// Boundary-corrected kernel sum for one sample, before the `1/h` factor.
fn kernel_mass(channel: Channel, x: f64, sample: f64, h: f64) -> f64 {
    match channel {
        Channel::Hue => (-WRAPS..=WRAPS)
            .map(|k| gaussian((x - sample + 360.0 * f64::from(k)) / h))
            .sum(),
        Channel::Saturation | Channel::Lightness => {
            let (lo, hi) = channel.domain();
            gaussian((x - sample) / h)
                + gaussian((x - (2.0 * lo - sample)) / h)
                + gaussian((x - (2.0 * hi - sample)) / h)
        }
    }
}

/// Gaussian KDE over raw channel values.
pub fn kde(
    values: &[f64],
    channel: Channel,
    bandwidth: Bandwidth,
    eval_points: &[f64],
) -> Result<DensityEstimate, DensityError> {
    let weights = vec![1.0; values.len()];
    kde_weighted(values, &weights, channel, bandwidth, eval_points)
}

/// Gaussian KDE with frequency weights; used to smooth merged histograms
/// via their bin centers.
pub fn kde_weighted(
    values: &[f64],
    weights: &[f64],
    channel: Channel,
    bandwidth: Bandwidth,
    eval_points: &[f64],
) -> Result<DensityEstimate, DensityError> {
    if values.is_empty() {
        return Err(DensityError::EmptyInput);
    }
    if weights.len() != values.len() || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(DensityError::BadWeights);
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(DensityError::BadWeights);
    }
    if let Some(&value) = values.iter().find(|v| !channel.accepts(**v)) {
        return Err(DensityError::OutOfDomain { channel, value });
    }
    if let Some(&value) = eval_points.iter().find(|v| !channel.accepts_eval(**v)) {
        return Err(DensityError::OutOfDomain { channel, value });
    }
    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(DensityError::NonPositiveBandwidth(h)),
        Bandwidth::Auto => silverman_bandwidth(values, weights, channel),
    };
    let norm = total * h;
    let densities = eval_points
        .iter()
        .map(|&x| {
            values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(&v, &w)| w * kernel_mass(channel, x, v, h))
                .sum::<f64>()
                / norm
        })
        .collect();
    Ok(DensityEstimate { channel, eval_points: eval_points.to_vec(), densities, bandwidth: h })
}

/// Silverman's rule `0.9 * min(sd, IQR / 1.34) * n^(-1/5)` on weighted
/// samples, falling back to `sd` when the IQR collapses, floored at a
/// thousandth of the channel width.
pub fn silverman_bandwidth(values: &[f64], weights: &[f64], channel: Channel) -> f64 {
    let floor = 1e-3 * channel.width();
    let n: f64 = weights.iter().sum();
    if n <= 1.0 {
        return floor;
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / n;
    let var = values.iter().zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.max(0.0).sqrt();
    let iqr = weighted_quantile(values, weights, 0.75) - weighted_quantile(values, weights, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(floor)
}

/// Linear-interpolation quantile treating weights as repeat counts.
fn weighted_quantile(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .copied()
        .zip(weights.iter().copied())
        .filter(|(_, w)| *w > 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n: f64 = pairs.iter().map(|p| p.1).sum();
    let pos = p * (n - 1.0);
    let lower = pos.floor();
    let frac = pos - lower;
    let at_rank = |rank: f64| {
        let mut cum = 0.0;
        for &(v, w) in &pairs {
            cum += w;
            if rank < cum {
                return v;
            }
        }
        pairs.last().map_or(0.0, |p| p.0)
    };
    let a = at_rank(lower);
    if frac == 0.0 {
        a
    } else {
        a + frac * (at_rank(lower + 1.0) - a)
    }
}
