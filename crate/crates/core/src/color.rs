//! Pixel sampling, RGB/HSL conversion and quantization onto the twelve-hue
//! Itten wheel plus the achromatic bins.

use std::fmt;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ColorError {
    #[error("image has no pixels")]
    EmptyImage,
    #[error("cannot quantize an empty pixel set")]
    EmptyPixelSet,
    #[error("invalid HSL component: {0}")]
    InvalidHsl(String),
    #[error("invalid quantizer configuration: {0}")]
    InvalidConfig(String),
    #[error("palette shares must be non-negative and sum to 1 (got sum {0})")]
    InvalidShares(f64),
}

/// An 8-bit sRGB pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbColor {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }
}

/// Hue in degrees `[0, 360)`, saturation and lightness in `[0, 1]`.
///
/// Achromatic colors (`s == 0`) always carry `h == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HslColor {
    h: f64,
    s: f64,
    l: f64,
}

impl HslColor {
    /// Builds a color, wrapping the hue into `[0, 360)`.
    pub fn new(h: f64, s: f64, l: f64) -> Result<Self, ColorError> {
        if !h.is_finite() {
            return Err(ColorError::InvalidHsl(format!("hue {h}")));
        }
        if !(0.0..=1.0).contains(&s) {
            return Err(ColorError::InvalidHsl(format!("saturation {s}")));
        }
        if !(0.0..=1.0).contains(&l) {
            return Err(ColorError::InvalidHsl(format!("lightness {l}")));
        }
        Ok(Self::canonical(h, s, l))
    }

    fn canonical(h: f64, s: f64, l: f64) -> Self {
        if s == 0.0 {
            return Self { h: 0.0, s, l };
        }
        let mut h = h.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        if h >= 360.0 {
            h = 0.0;
        }
        Self { h, s, l }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn l(&self) -> f64 {
        self.l
    }
}

/// Hexcone RGB to HSL.
pub fn rgb_to_hsl(c: RgbColor) -> HslColor {
    let r = f64::from(c.r) / 255.0;
    let g = f64::from(c.g) / 255.0;
    let b = f64::from(c.b) / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let l = (max + min) / 2.0;
    if max == min {
        return HslColor { h: 0.0, s: 0.0, l };
    }
    let delta = max - min;
    let s = (delta / (1.0 - (2.0 * l - 1.0).abs())).min(1.0);
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    HslColor::canonical(60.0 * sector, s, l)
}

/// Inverse hexcone transform with channel rounding.
pub fn hsl_to_rgb(c: HslColor) -> RgbColor {
    let chroma = (1.0 - (2.0 * c.l - 1.0).abs()) * c.s;
    let h_prime = c.h / 60.0;
    let x = chroma * (1.0 - (h_prime.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match h_prime as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = c.l - chroma / 2.0;
    let to_byte = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    RgbColor::new(to_byte(r1), to_byte(g1), to_byte(b1))
}

/// Pixel budget for per-image analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub max_pixels: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { max_pixels: 10_000 }
    }
}

/// Deterministic uniform-grid subsample of at most `cfg.max_pixels` pixels,
/// row-major. Images within budget are returned whole.
pub fn sample_pixels(image: &RgbImage, cfg: SamplingConfig) -> Result<Vec<RgbColor>, ColorError> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let total = w * h;
    if total == 0 {
        return Err(ColorError::EmptyImage);
    }
    let budget = cfg.max_pixels.max(1);
    let stride = grid_stride(w, h, budget);
    let mut out = Vec::with_capacity(w.div_ceil(stride) * h.div_ceil(stride));
    for y in (0..h).step_by(stride) {
        for x in (0..w).step_by(stride) {
            let p = image.get_pixel(x as u32, y as u32);
            out.push(RgbColor::new(p[0], p[1], p[2]));
        }
    }
    Ok(out)
}

/// Smallest square stride whose grid fits within `budget` pixels.
fn grid_stride(w: usize, h: usize, budget: usize) -> usize {
    if w * h <= budget {
        return 1;
    }
    let mut stride = ((w * h) as f64 / budget as f64).sqrt().ceil().max(1.0) as usize;
    while w.div_ceil(stride) * h.div_ceil(stride) > budget {
        stride += 1;
    }
    stride
}

/// The twelve hues of the Itten wheel in cyclic wheel order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IttenHue {
    Red,
    RedOrange,
    Orange,
    YellowOrange,
    Yellow,
    YellowGreen,
    Green,
    BlueGreen,
    Blue,
    BlueViolet,
    Violet,
    RedViolet,
}

impl IttenHue {
    pub const ALL: [IttenHue; 12] = [
        IttenHue::Red,
        IttenHue::RedOrange,
        IttenHue::Orange,
        IttenHue::YellowOrange,
        IttenHue::Yellow,
        IttenHue::YellowGreen,
        IttenHue::Green,
        IttenHue::BlueGreen,
        IttenHue::Blue,
        IttenHue::BlueViolet,
        IttenHue::Violet,
        IttenHue::RedViolet,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            IttenHue::Red => "red",
            IttenHue::RedOrange => "red-orange",
            IttenHue::Orange => "orange",
            IttenHue::YellowOrange => "yellow-orange",
            IttenHue::Yellow => "yellow",
            IttenHue::YellowGreen => "yellow-green",
            IttenHue::Green => "green",
            IttenHue::BlueGreen => "blue-green",
            IttenHue::Blue => "blue",
            IttenHue::BlueViolet => "blue-violet",
            IttenHue::Violet => "violet",
            IttenHue::RedViolet => "red-violet",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.name() == name)
    }

    /// The hue opposite on the wheel (six positions away).
    pub fn complement(self) -> Self {
        Self::ALL[(self.index() + 6) % 12]
    }
}

impl fmt::Display for IttenHue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the fifteen quantization bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IttenBin {
    Chromatic(IttenHue),
    Black,
    Gray,
    White,
}

impl IttenBin {
    pub const COUNT: usize = 15;

    /// Report order: the twelve hues in wheel order, then black, gray, white.
    pub const ALL: [IttenBin; 15] = [
        IttenBin::Chromatic(IttenHue::Red),
        IttenBin::Chromatic(IttenHue::RedOrange),
        IttenBin::Chromatic(IttenHue::Orange),
        IttenBin::Chromatic(IttenHue::YellowOrange),
        IttenBin::Chromatic(IttenHue::Yellow),
        IttenBin::Chromatic(IttenHue::YellowGreen),
        IttenBin::Chromatic(IttenHue::Green),
        IttenBin::Chromatic(IttenHue::BlueGreen),
        IttenBin::Chromatic(IttenHue::Blue),
        IttenBin::Chromatic(IttenHue::BlueViolet),
        IttenBin::Chromatic(IttenHue::Violet),
        IttenBin::Chromatic(IttenHue::RedViolet),
        IttenBin::Black,
        IttenBin::Gray,
        IttenBin::White,
    ];

    /// Dense position in [`IttenBin::ALL`].
    pub fn slot(self) -> usize {
        match self {
            IttenBin::Chromatic(h) => h.index(),
            IttenBin::Black => 12,
            IttenBin::Gray => 13,
            IttenBin::White => 14,
        }
    }

    pub fn hue_index(self) -> Option<usize> {
        match self {
            IttenBin::Chromatic(h) => Some(h.index()),
            _ => None,
        }
    }

    pub fn is_chromatic(self) -> bool {
        matches!(self, IttenBin::Chromatic(_))
    }

    pub fn name(self) -> &'static str {
        match self {
            IttenBin::Chromatic(h) => h.name(),
            IttenBin::Black => "black",
            IttenBin::Gray => "gray",
            IttenBin::White => "white",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }
}

impl Serialize for IttenBin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl fmt::Display for IttenBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Anchor hues (RGB hue degrees) for the twelve wheel positions.
pub const DEFAULT_ANCHORS: [f64; 12] = [
    0.0, 15.0, 30.0, 45.0, 60.0, 90.0, 120.0, 180.0, 240.0, 270.0, 300.0, 330.0,
];

/// Achromatic thresholds and the anchor table used by [`quantize`].
///
/// Lightness is checked before saturation: a dark saturated pixel is black.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantizerConfig {
    pub s_min: f64,
    pub l_black: f64,
    pub l_white: f64,
    pub anchors: [f64; 12],
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            s_min: 0.08,
            l_black: 0.10,
            l_white: 0.92,
            anchors: DEFAULT_ANCHORS,
        }
    }
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<(), ColorError> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.s_min) || !unit.contains(&self.l_black) || !unit.contains(&self.l_white) {
            return Err(ColorError::InvalidConfig("thresholds must lie in [0, 1]".into()));
        }
        if self.l_black > self.l_white {
            return Err(ColorError::InvalidConfig("l_black exceeds l_white".into()));
        }
        if self.anchors.iter().any(|a| !(0.0..360.0).contains(a)) {
            return Err(ColorError::InvalidConfig("anchors must lie in [0, 360)".into()));
        }
        Ok(())
    }

    /// Bin for a single pixel.
    pub fn classify(&self, c: HslColor) -> IttenBin {
        if c.l < self.l_black {
            return IttenBin::Black;
        }
        if c.l > self.l_white {
            return IttenBin::White;
        }
        if c.s < self.s_min {
            return IttenBin::Gray;
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &anchor) in self.anchors.iter().enumerate() {
            let d = circular_distance(c.h, anchor);
            // strict comparison keeps the lower index on ties
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        IttenBin::Chromatic(IttenHue::ALL[best])
    }
}

/// Angular distance in degrees on the hue circle, in `[0, 180]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Per-image pixel shares over the fifteen bins.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPalette {
    shares: [f64; IttenBin::COUNT],
    pixel_count: usize,
}

impl QuantizedPalette {
    /// Builds a palette from explicit shares; missing bins are zero.
    pub fn from_shares<I>(shares: I, pixel_count: usize) -> Result<Self, ColorError>
    where
        I: IntoIterator<Item = (IttenBin, f64)>,
    {
        let mut dense = [0.0; IttenBin::COUNT];
        for (bin, share) in shares {
            dense[bin.slot()] += share;
        }
        let sum: f64 = dense.iter().sum();
        if dense.iter().any(|s| !(*s >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(ColorError::InvalidShares(sum));
        }
        if pixel_count == 0 {
            return Err(ColorError::EmptyPixelSet);
        }
        Ok(Self { shares: dense, pixel_count })
    }

    pub fn from_counts(counts: &[u64; IttenBin::COUNT]) -> Result<Self, ColorError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(ColorError::EmptyPixelSet);
        }
        let mut shares = [0.0; IttenBin::COUNT];
        for (s, &c) in shares.iter_mut().zip(counts) {
            *s = c as f64 / total as f64;
        }
        Ok(Self { shares, pixel_count: total as usize })
    }

    pub fn share(&self, bin: IttenBin) -> f64 {
        self.shares[bin.slot()]
    }

    /// Shares in [`IttenBin::ALL`] order.
    pub fn shares(&self) -> &[f64; IttenBin::COUNT] {
        &self.shares
    }

    pub fn hue_share(&self, hue_index: usize) -> f64 {
        self.shares[hue_index]
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn iter(&self) -> impl Iterator<Item = (IttenBin, f64)> + '_ {
        IttenBin::ALL.into_iter().zip(self.shares.iter().copied())
    }
}

/// Assigns every pixel to exactly one bin and returns the share histogram.
pub fn quantize(pixels: &[HslColor], cfg: &QuantizerConfig) -> Result<QuantizedPalette, ColorError> {
    if pixels.is_empty() {
        return Err(ColorError::EmptyPixelSet);
    }
    let mut counts = [0u64; IttenBin::COUNT];
    for &p in pixels {
        counts[cfg.classify(p).slot()] += 1;
    }
    QuantizedPalette::from_counts(&counts)
}
