//! Corpus discovery, per-image analysis and the end-to-end run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use image::RgbImage;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{hsl_to_rgb, quantize, rgb_to_hsl, sample_pixels, QuantizedPalette, QuantizerConfig, SamplingConfig};
use crate::density::{Bandwidth, Channel, ChannelHistogram};
use crate::emotion::{read_sidecar, EmotionError, EmotionVector};
use crate::fusion::{self, JoinSummary, MIN_JOINED};
use crate::harmony::{detect_harmonies, dominant_harmony, present_hues, Harmony, HarmonyInstance, PresenceConfig};
use crate::mining::{build_transactions, filter_lift, mine_rules, MiningConfig, TransactionConfig};
use crate::report::{self, CorpusReport, FusionReport, SkipRecord};

/// Raster extensions picked up by [`discover_corpus`], compared case-insensitively.
pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp", "gif", "tif", "tiff", "webp"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input directory {0} does not exist")]
    MissingDirectory(PathBuf),
    #[error("no decodable images found in {0}")]
    EmptyCorpus(PathBuf),
    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("emotion sidecar rejected: {0}")]
    Sidecar(#[from] EmotionError),
    #[error("only {} images matched the emotion sidecar (need {MIN_JOINED})", .0.matched)]
    JoinFailure(JoinSummary),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl PipelineError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(_) | PipelineError::Decode { .. } => 1,
            PipelineError::Config(_) => 2,
            PipelineError::MissingDirectory(_) | PipelineError::EmptyCorpus(_) => 3,
            PipelineError::JoinFailure(_) => 4,
            PipelineError::Sidecar(_) => 5,
        }
    }
}

/// Every knob of a run. Mirrors the CLI flags; a TOML config file uses the
/// same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub emotions: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub hue_bins: usize,
    pub sl_bins: usize,
    pub eval_points: usize,
    /// `auto`, or a fixed width expressed as a fraction of the channel
    /// domain (so 0.05 means 18 degrees of hue).
    pub bandwidth: Bandwidth,
    pub color_presence_threshold: f64,
    pub emotion_threshold: f64,
    pub s_min: f64,
    pub l_black: f64,
    pub l_white: f64,
    pub min_support: f64,
    pub min_confidence: f64,
    pub min_lift: f64,
    pub max_consequent: usize,
    pub include_something_else: bool,
    pub max_pixels: usize,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = QuantizerConfig::default();
        let m = MiningConfig::default();
        Self {
            input_dir: PathBuf::new(),
            emotions: None,
            output_dir: PathBuf::new(),
            hue_bins: 256,
            sl_bins: 100,
            eval_points: 512,
            bandwidth: Bandwidth::Auto,
            color_presence_threshold: PresenceConfig::default().presence_threshold,
            emotion_threshold: TransactionConfig::default().emotion_threshold,
            s_min: q.s_min,
            l_black: q.l_black,
            l_white: q.l_white,
            min_support: m.min_support,
            min_confidence: m.min_confidence,
            min_lift: 1.0,
            max_consequent: m.max_consequent,
            include_something_else: m.include_something_else,
            max_pixels: SamplingConfig::default().max_pixels,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| Err(PipelineError::Config(m));
        if self.input_dir.as_os_str().is_empty() {
            return err("input_dir is required".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return err("output_dir is required".into());
        }
        if self.hue_bins == 0 || self.sl_bins == 0 {
            return err("bin counts must be at least 1".into());
        }
        if self.eval_points < 2 {
            return err("eval_points must be at least 2".into());
        }
        if let Bandwidth::Fixed(b) = self.bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return err(format!("bandwidth must be positive, got {b}"));
            }
        }
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.color_presence_threshold) {
            return err(format!("color presence threshold {} outside (0, 1)", self.color_presence_threshold));
        }
        if !open_unit(self.emotion_threshold) {
            return err(format!("emotion threshold {} outside (0, 1)", self.emotion_threshold));
        }
        if !(self.min_lift >= 0.0) {
            return err(format!("min_lift {} must be non-negative", self.min_lift));
        }
        if self.max_pixels == 0 {
            return err("max_pixels must be at least 1".into());
        }
        if self.workers == 0 {
            return err("workers must be at least 1".into());
        }
        self.quantizer().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.mining().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn quantizer(&self) -> QuantizerConfig {
        QuantizerConfig { s_min: self.s_min, l_black: self.l_black, l_white: self.l_white, ..Default::default() }
    }

    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig { max_pixels: self.max_pixels }
    }

    pub fn presence(&self) -> PresenceConfig {
        PresenceConfig { presence_threshold: self.color_presence_threshold }
    }

    pub fn transactions(&self) -> TransactionConfig {
        TransactionConfig { color_threshold: self.color_presence_threshold, emotion_threshold: self.emotion_threshold }
    }

    pub fn mining(&self) -> MiningConfig {
        MiningConfig {
            min_support: self.min_support,
            min_confidence: self.min_confidence,
            max_consequent: self.max_consequent,
            include_something_else: self.include_something_else,
        }
    }

    pub fn bins(&self, channel: Channel) -> usize {
        match channel {
            Channel::Hue => self.hue_bins,
            _ => self.sl_bins,
        }
    }

    /// Bandwidth in channel units.
    pub fn channel_bandwidth(&self, channel: Channel) -> Bandwidth {
        match self.bandwidth {
            Bandwidth::Auto => Bandwidth::Auto,
            Bandwidth::Fixed(f) => Bandwidth::Fixed(f * channel.width()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub images: Vec<PathBuf>,
    pub skipped: Vec<SkipRecord>,
}

impl Discovery {
    /// Files examined, recognized or not.
    pub fn discovered(&self) -> usize {
        self.images.len() + self.skipped.len()
    }
}

fn is_raster(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Lists raster files directly inside `dir` in lexicographic order. Other
/// files become skip records; subdirectories are ignored.
pub fn discover_corpus(dir: &Path) -> Result<Discovery, PipelineError> {
    if !dir.is_dir() {
        return Err(PipelineError::MissingDirectory(dir.to_path_buf()));
    }
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                skipped.push(SkipRecord { file: "?".into(), reason: format!("unreadable entry: {e}") });
                continue;
            }
        };
        let path = entry.path();
        match entry.file_type() {
            Ok(t) if t.is_dir() => continue,
            Ok(_) => {}
            Err(e) => {
                skipped.push(SkipRecord { file: file_name(&path), reason: format!("unreadable: {e}") });
                continue;
            }
        }
        if is_raster(&path) {
            images.push(path);
        } else {
            skipped.push(SkipRecord { file: file_name(&path), reason: "unrecognized extension".into() });
        }
    }
    if images.is_empty() {
        return Err(PipelineError::EmptyCorpus(dir.to_path_buf()));
    }
    images.sort();
    skipped.sort_by(|a, b| a.file.cmp(&b.file));
    Ok(Discovery { images, skipped })
}

/// Everything computed for one image before the emotion join.
#[derive(Debug, Clone, PartialEq)]
pub struct PerImageRecord {
    pub image_id: String,
    pub palette: QuantizedPalette,
    pub harmonies: Vec<Harmony>,
    /// `None` when two or more hues are present but no template matches.
    pub dominant: Option<HarmonyInstance>,
    /// Hue, saturation and lightness histograms in that order. Hue counts
    /// only pixels that quantized to a chromatic bin.
    pub histograms: [ChannelHistogram; 3],
}

/// Sample, convert, quantize, detect harmonies and bin the channels.
pub fn analyze_raster(image_id: &str, image: &RgbImage, cfg: &RunConfig) -> Result<PerImageRecord, PipelineError> {
    let decode_err = |reason: String| PipelineError::Decode { path: PathBuf::from(image_id), reason };
    let pixels = sample_pixels(image, cfg.sampling()).map_err(|e| decode_err(e.to_string()))?;
    let hsl: Vec<_> = pixels.iter().map(|&p| rgb_to_hsl(p)).collect();
    let quantizer = cfg.quantizer();
    let palette = quantize(&hsl, &quantizer).map_err(|e| decode_err(e.to_string()))?;

    let mut histograms = Channel::ALL.map(|c| {
        ChannelHistogram::empty(c, cfg.bins(c)).expect("bin counts validated")
    });
    for c in &hsl {
        if quantizer.classify(*c).is_chromatic() {
            histograms[0].add(c.h()).expect("hue in [0, 360)");
        }
        histograms[1].add(c.s()).expect("saturation in [0, 1]");
        histograms[2].add(c.l()).expect("lightness in [0, 1]");
    }

    let harmonies = detect_harmonies(present_hues(&palette, &cfg.presence()));
    let dominant = dominant_harmony(&harmonies, &palette).ok();
    Ok(PerImageRecord { image_id: image_id.to_owned(), palette, harmonies, dominant, histograms })
}

pub fn image_id(path: &Path) -> String {
    path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
}

pub fn analyze_image(path: &Path, cfg: &RunConfig) -> Result<PerImageRecord, PipelineError> {
    let decoded = image::open(path)
        .map_err(|e| PipelineError::Decode { path: path.to_path_buf(), reason: e.to_string() })?
        .into_rgb8();
    analyze_raster(&image_id(path), &decoded, cfg).map_err(|e| match e {
        PipelineError::Decode { reason, .. } => PipelineError::Decode { path: path.to_path_buf(), reason },
        other => other,
    })
}

/// Runs every stage and returns the in-memory report without writing it.
pub fn analyze_corpus(cfg: &RunConfig) -> Result<CorpusReport, PipelineError> {
    cfg.validate()?;
    let discovery = discover_corpus(&cfg.input_dir)?;
    let emotions = cfg.emotions.as_deref().map(read_sidecar).transpose()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))?;
    info!("analyzing {} images with {} workers", discovery.images.len(), cfg.workers);
    let results: Vec<_> =
        pool.install(|| discovery.images.par_iter().map(|p| (p, analyze_image(p, cfg))).collect());

    let mut skipped = discovery.skipped.clone();
    let mut records: Vec<PerImageRecord> = Vec::with_capacity(results.len());
    for (path, result) in results {
        match result {
            Ok(rec) if records.iter().any(|r| r.image_id == rec.image_id) => {
                skipped.push(SkipRecord { file: file_name(path), reason: format!("duplicate image id `{}`", rec.image_id) });
            }
            Ok(rec) => records.push(rec),
            Err(e) => {
                warn!("{e}");
                skipped.push(SkipRecord { file: file_name(path), reason: e.to_string() });
            }
        }
    }
    skipped.sort_by(|a, b| a.file.cmp(&b.file));
    if records.is_empty() {
        return Err(PipelineError::EmptyCorpus(cfg.input_dir.clone()));
    }

    let fusion = match &emotions {
        Some(vectors) => Some(pool.install(|| fuse(&records, vectors, cfg))?),
        None => None,
    };
    Ok(report::assemble(cfg, discovery.discovered(), records, skipped, fusion))
}

fn fuse(records: &[PerImageRecord], vectors: &[EmotionVector], cfg: &RunConfig) -> Result<FusionReport, PipelineError> {
    let (pairs, join) = fusion::join(records.iter().map(|r| (r.image_id.as_str(), r)), vectors);
    if pairs.len() < MIN_JOINED {
        return Err(PipelineError::JoinFailure(join));
    }
    let insufficient = |e: fusion::FusionError| PipelineError::Config(e.to_string());

    let palettes: Vec<_> = pairs.iter().map(|(_, r, e)| (&r.palette, *e)).collect();
    let correlation = fusion::color_emotion_correlation_joined(&palettes).map_err(insufficient)?;

    let harmonies: Vec<_> = pairs.iter().map(|(_, r, e)| (r.harmonies.as_slice(), *e)).collect();
    let harmony_emotion = fusion::harmony_emotion_table(&harmonies).map_err(insufficient)?;

    let hists: Vec<_> = pairs.iter().map(|(_, r, e)| (&r.histograms, *e)).collect();
    let ratio_curves = fusion::emotion_ratio_curves(&hists).map_err(insufficient)?;

    let samples: Vec<_> = pairs.iter().map(|(id, r, e)| (*id, &r.palette, *e)).collect();
    let transactions = build_transactions(&samples, &cfg.transactions()).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mined = mine_rules(&transactions, &cfg.mining()).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mined_count = mined.len();
    let rules = filter_lift(mined, cfg.min_lift);

    Ok(FusionReport {
        join,
        correlation,
        harmony_emotion,
        ratio_curves,
        transactions: transactions.len(),
        rules_before_lift_filter: mined_count,
        rules,
    })
}

/// Analyzes the corpus and writes every report file into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<CorpusReport, PipelineError> {
    let report = analyze_corpus(cfg)?;
    report::write_all(&report, &cfg.output_dir)?;
    Ok(report)
}

/// Renders a solid-color raster; handy for fixtures and smoke tests.
pub fn solid_image(width: u32, height: u32, hsl: crate::color::HslColor) -> RgbImage {
    let c = hsl_to_rgb(hsl);
    RgbImage::from_pixel(width, height, image::Rgb([c.r, c.g, c.b]))
}
