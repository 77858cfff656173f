//! Corpus-level tables and their on-disk formats.
//!
//! Tables are CSV with fixed nine-decimal floats and `null` for undefined
//! statistics; plot data is long-form (one row per series point); run
//! metadata is JSON. Nothing time-dependent is written, so identical
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::color::IttenBin;
use crate::density::{kde_weighted, Channel, ChannelHistogram, DensityEstimate, eval_grid};
use crate::emotion::EmotionLabel;
use crate::fusion::{CorrelationMatrix, EmotionRatioCurve, HarmonyEmotionTable, JoinSummary};
use crate::harmony::{all_templates, Harmony, HarmonyType};
use crate::mining::AssociationRule;
use crate::pipeline::{PerImageRecord, RunConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaletteRow {
    pub bin: IttenBin,
    /// Average of per-image shares.
    pub mean_share: f64,
    /// Share of all sampled pixels in the corpus.
    pub pooled_share: f64,
    /// Images where the bin reaches the presence threshold.
    pub images_present: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonyFrequencyRow {
    pub harmony_type: HarmonyType,
    /// Images with at least one instance (multi-label count).
    pub images: usize,
    /// Template matches summed over images.
    pub instances: usize,
    /// Images whose dominant harmony has this type (single-label count).
    pub dominant_images: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyRow {
    pub harmony: Harmony,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionReport {
    pub join: JoinSummary,
    pub correlation: CorrelationMatrix,
    pub harmony_emotion: HarmonyEmotionTable,
    pub ratio_curves: [EmotionRatioCurve; 3],
    pub transactions: usize,
    pub rules_before_lift_filter: usize,
    pub rules: Vec<AssociationRule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub config: RunConfig,
    pub discovered: usize,
    pub skipped: Vec<SkipRecord>,
    pub records: Vec<PerImageRecord>,
    pub palette: Vec<PaletteRow>,
    pub harmony_frequencies: Vec<HarmonyFrequencyRow>,
    pub analogous: Vec<FamilyRow>,
    pub complementary: Vec<FamilyRow>,
    pub pooled_histograms: [ChannelHistogram; 3],
    /// `None` for a channel with no pixels (hue of an all-gray corpus).
    pub densities: [Option<DensityEstimate>; 3],
    /// Absent when the run had no emotion sidecar.
    pub fusion: Option<FusionReport>,
}

impl CorpusReport {
    pub fn decoded(&self) -> usize {
        self.records.len()
    }
}

pub(crate) fn assemble(
    cfg: &RunConfig,
    discovered: usize,
    records: Vec<PerImageRecord>,
    skipped: Vec<SkipRecord>,
    fusion: Option<FusionReport>,
) -> CorpusReport {
    let palette = palette_table(&records, cfg.color_presence_threshold);
    let harmony_frequencies = harmony_table(&records);
    let analogous = family_table(&records, HarmonyType::Analogous);
    let complementary = family_table(&records, HarmonyType::Complementary);

    let pooled_histograms = [0, 1, 2].map(|i| {
        let c = Channel::ALL[i];
        let mut pooled = ChannelHistogram::empty(c, cfg.bins(c)).expect("bin counts validated");
        for r in &records {
            pooled.merge(&r.histograms[i]).expect("per-image histograms share binning");
        }
        pooled
    });
    let densities = [0, 1, 2].map(|i| pooled_density(&pooled_histograms[i], cfg));

    CorpusReport {
        config: cfg.clone(),
        discovered,
        skipped,
        records,
        palette,
        harmony_frequencies,
        analogous,
        complementary,
        pooled_histograms,
        densities,
        fusion,
    }
}

/// KDE over bin centers weighted by pooled counts.
fn pooled_density(h: &ChannelHistogram, cfg: &RunConfig) -> Option<DensityEstimate> {
    if h.total() == 0 {
        return None;
    }
    let weights: Vec<f64> = h.counts().iter().map(|&c| c as f64).collect();
    let grid = eval_grid(h.channel(), cfg.eval_points);
    kde_weighted(&h.centers(), &weights, h.channel(), cfg.channel_bandwidth(h.channel()), &grid).ok()
}

fn palette_table(records: &[PerImageRecord], threshold: f64) -> Vec<PaletteRow> {
    let total_pixels: f64 = records.iter().map(|r| r.palette.pixel_count() as f64).sum();
    IttenBin::ALL
        .into_iter()
        .map(|bin| {
            let mean_share = records.iter().map(|r| r.palette.share(bin)).sum::<f64>() / records.len() as f64;
            let pooled = records.iter().map(|r| r.palette.share(bin) * r.palette.pixel_count() as f64).sum::<f64>();
            PaletteRow {
                bin,
                mean_share,
                pooled_share: pooled / total_pixels,
                images_present: records.iter().filter(|r| r.palette.share(bin) >= threshold).count(),
            }
        })
        .collect()
}

fn harmony_table(records: &[PerImageRecord]) -> Vec<HarmonyFrequencyRow> {
    HarmonyType::ALL
        .into_iter()
        .map(|t| HarmonyFrequencyRow {
            harmony_type: t,
            images: records.iter().filter(|r| r.harmonies.iter().any(|h| h.harmony_type == t)).count(),
            instances: records.iter().map(|r| r.harmonies.iter().filter(|h| h.harmony_type == t).count()).sum(),
            dominant_images: records.iter().filter(|r| r.dominant.is_some_and(|d| d.harmony.harmony_type == t)).count(),
        })
        .collect()
}

/// Every template of one family with its match count, most frequent first.
fn family_table(records: &[PerImageRecord], family: HarmonyType) -> Vec<FamilyRow> {
    let mut rows: Vec<FamilyRow> = all_templates()
        .into_iter()
        .filter(|h| h.harmony_type == family)
        .map(|harmony| FamilyRow {
            harmony,
            count: records.iter().filter(|r| r.harmonies.contains(&harmony)).count(),
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.harmony.members.cmp(&b.harmony.members)));
    rows
}

pub fn fmt_f(v: f64) -> String {
    // avoid "-0.000000000"
    let s = format!("{v:.9}");
    if s.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
        s.trim_start_matches('-').to_owned()
    } else {
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_owned(), fmt_f)
}

fn percent(part: usize, whole: usize) -> String {
    if whole == 0 {
        fmt_f(0.0)
    } else {
        fmt_f(100.0 * part as f64 / whole as f64)
    }
}

pub fn palette_csv(report: &CorpusReport) -> String {
    let n = report.decoded();
    let mut out = String::from("color,mean_share,pooled_share,images_present,image_percent\n");
    for r in &report.palette {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.bin,
            fmt_f(r.mean_share),
            fmt_f(r.pooled_share),
            r.images_present,
            percent(r.images_present, n)
        );
    }
    out
}

pub fn harmony_frequencies_csv(report: &CorpusReport) -> String {
    let n = report.decoded();
    let mut out = String::from("harmony,images,image_percent,instances,dominant_images,dominant_percent\n");
    for r in &report.harmony_frequencies {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.harmony_type,
            r.images,
            percent(r.images, n),
            r.instances,
            r.dominant_images,
            percent(r.dominant_images, n)
        );
    }
    out
}

pub fn family_csv(rows: &[FamilyRow]) -> String {
    let total: usize = rows.iter().map(|r| r.count).sum();
    let mut out = String::from("harmony,count,percent\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.harmony.label(), r.count, percent(r.count, total));
    }
    out
}

fn emotion_header(first: &str) -> String {
    let mut h = first.to_owned();
    for e in EmotionLabel::ALL {
        h.push(',');
        h.push_str(e.name());
    }
    h.push('\n');
    h
}

pub fn correlation_csv(m: &CorrelationMatrix) -> String {
    let mut out = emotion_header("color");
    for bin in IttenBin::ALL {
        out.push_str(bin.name());
        for e in EmotionLabel::ALL {
            out.push(',');
            out.push_str(&fmt_opt(m.get(bin, e)));
        }
        out.push('\n');
    }
    out
}

pub fn harmony_emotion_csv(t: &HarmonyEmotionTable) -> String {
    let mut out = String::from("harmony,images,emotion,conditional_mean,point_biserial\n");
    for row in &t.rows {
        for e in EmotionLabel::ALL {
            let mean = row.conditional_mean.map(|m| m[e.index()]);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.harmony_type,
                row.images,
                e,
                fmt_opt(mean),
                fmt_opt(row.point_biserial[e.index()])
            );
        }
    }
    out
}

pub fn ratio_csv(c: &EmotionRatioCurve) -> String {
    let mut out = String::from("bin_lo,bin_hi,occupied,emotion,ratio\n");
    for (i, ratios) in c.ratios.iter().enumerate() {
        for e in EmotionLabel::ALL {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f(c.bin_edges[i]),
                fmt_f(c.bin_edges[i + 1]),
                c.occupied[i],
                e,
                fmt_f(ratios[e.index()])
            );
        }
    }
    out
}

pub fn rules_csv(rules: &[AssociationRule]) -> String {
    let mut out = String::from("antecedent,consequent,support,confidence,lift\n");
    for r in rules {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.antecedent,
            r.consequent_label(),
            fmt_f(r.support),
            fmt_f(r.confidence),
            fmt_f(r.lift)
        );
    }
    out
}

/// Long-form plot data: `histogram` rows at bin centers scaled to a
/// density, then `kde` rows on the evaluation grid.
pub fn density_csv(h: &ChannelHistogram, d: Option<&DensityEstimate>) -> String {
    let mut out = String::from("series,x,value\n");
    let total = h.total() as f64;
    let width = h.channel().width() / h.bins() as f64;
    for (x, &c) in h.centers().iter().zip(h.counts()) {
        let v = if total > 0.0 { c as f64 / (total * width) } else { 0.0 };
        let _ = writeln!(out, "histogram,{},{}", fmt_f(*x), fmt_f(v));
    }
    if let Some(d) = d {
        for (x, v) in d.eval_points.iter().zip(&d.densities) {
            let _ = writeln!(out, "kde,{},{}", fmt_f(*x), fmt_f(*v));
        }
    }
    out
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    tool: &'static str,
    version: &'static str,
    config: serde_json::Value,
    corpus: CorpusMeta<'a>,
    sections: Sections,
    density_bandwidths: [Option<f64>; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    fusion: Option<FusionMeta<'a>>,
}

#[derive(Serialize)]
struct CorpusMeta<'a> {
    discovered: usize,
    decoded: usize,
    skipped: &'a [SkipRecord],
}

#[derive(Serialize)]
struct Sections {
    palette: &'static str,
    harmonies: &'static str,
    density: &'static str,
    fusion: &'static str,
    mining: &'static str,
}

#[derive(Serialize)]
struct FusionMeta<'a> {
    join: &'a JoinSummary,
    correlation_n: usize,
    transactions: usize,
    rules_before_lift_filter: usize,
    rules_after_lift_filter: usize,
}

/// Configuration echo without execution-only settings (worker count,
/// output location), which must not change the report bytes.
fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("workers");
        map.remove("output_dir");
    }
    v
}

pub fn run_json(report: &CorpusReport) -> String {
    let has_fusion = report.fusion.is_some();
    let state = |present: bool| if present { "present" } else { "absent" };
    let meta = RunMetadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: config_echo(&report.config),
        corpus: CorpusMeta { discovered: report.discovered, decoded: report.decoded(), skipped: &report.skipped },
        sections: Sections {
            palette: "present",
            harmonies: "present",
            density: "present",
            fusion: state(has_fusion),
            mining: state(has_fusion),
        },
        density_bandwidths: report.densities.each_ref().map(|d| d.as_ref().map(|d| d.bandwidth)),
        fusion: report.fusion.as_ref().map(|f| FusionMeta {
            join: &f.join,
            correlation_n: f.correlation.n,
            transactions: f.transactions,
            rules_before_lift_filter: f.rules_before_lift_filter,
            rules_after_lift_filter: f.rules.len(),
        }),
    };
    let mut s = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    s.push('\n');
    s
}

/// File name and contents of every report this run produces.
pub fn render(report: &CorpusReport) -> Vec<(String, String)> {
    let mut files = vec![
        ("palette.csv".to_owned(), palette_csv(report)),
        ("harmony_frequencies.csv".to_owned(), harmony_frequencies_csv(report)),
        ("analogous.csv".to_owned(), family_csv(&report.analogous)),
        ("complementary.csv".to_owned(), family_csv(&report.complementary)),
    ];
    for (i, c) in Channel::ALL.iter().enumerate() {
        files.push((
            format!("density_{}.csv", c.short()),
            density_csv(&report.pooled_histograms[i], report.densities[i].as_ref()),
        ));
    }
    if let Some(f) = &report.fusion {
        files.push(("correlation_matrix.csv".to_owned(), correlation_csv(&f.correlation)));
        files.push(("harmony_emotion.csv".to_owned(), harmony_emotion_csv(&f.harmony_emotion)));
        for curve in &f.ratio_curves {
            files.push((format!("emotion_ratio_{}.csv", curve.channel.short()), ratio_csv(curve)));
        }
        files.push(("rules.csv".to_owned(), rules_csv(&f.rules)));
    }
    files.push(("run.json".to_owned(), run_json(report)));
    files
}

pub fn write_all(report: &CorpusReport, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in render(report) {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
