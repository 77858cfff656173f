//! Independent reference implementations shared by the integration tests.
//! Each one is written from the definition, without reusing library code
//! paths, so agreement means something.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chromaffect::{Channel, HarmonyType, RunConfig};

// ---- harmonies -------------------------------------------------------

/// Matches every type against every combination of present hues using the
/// angular definitions directly.
pub fn brute_force_harmonies(bits: u16) -> BTreeSet<(HarmonyType, u16)> {
    let present: Vec<usize> = (0..12).filter(|i| bits & (1 << i) != 0).collect();
    let mut out = BTreeSet::new();
    match present.len() {
        0 => {
            out.insert((HarmonyType::Monotone, 0));
            return out;
        }
        1 => {
            out.insert((HarmonyType::Monochromatic, bits));
            return out;
        }
        _ => {}
    }
    let dist = |a: usize, b: usize| {
        let d = (a as i32 - b as i32).rem_euclid(12) as usize;
        d.min(12 - d)
    };
    let n = present.len();
    for a in 0..n {
        for b in a + 1..n {
            let (x, y) = (present[a], present[b]);
            if dist(x, y) == 6 {
                out.insert((HarmonyType::Complementary, (1 << x) | (1 << y)));
            }
            for c in b + 1..n {
                let z = present[c];
                let mask = (1u16 << x) | (1 << y) | (1 << z);
                let mut ds = [dist(x, y), dist(y, z), dist(x, z)];
                ds.sort_unstable();
                match ds {
                    [1, 1, 2] => {
                        out.insert((HarmonyType::Analogous, mask));
                    }
                    [4, 4, 4] => {
                        out.insert((HarmonyType::Triad, mask));
                    }
                    // a key hue five steps from both others, which are two apart
                    [2, 5, 5] => {
                        out.insert((HarmonyType::SplitComplementary, mask));
                    }
                    _ => {}
                }
                for &w in &present[c + 1..n] {
                    let quad = [x, y, z, w];
                    let paired = quad.iter().all(|&p| quad.iter().filter(|&&q| dist(p, q) == 6).count() == 1);
                    if paired {
                        out.insert((HarmonyType::Tetrad, mask | (1 << w)));
                    }
                }
            }
        }
    }
    out
}

// ---- density ---------------------------------------------------------

fn phi(u: f64) -> f64 {
    (-u * u / 2.0).exp() / (2.0 * PI).sqrt()
}

/// Direct double-loop KDE with wrap (hue) or reflection (S, L).
pub fn direct_kde(values: &[f64], channel: Channel, h: f64, x: f64) -> f64 {
    let mut acc = 0.0;
    for &v in values {
        acc += match channel {
            Channel::Hue => {
                let mut s = 0.0;
                for k in -3..=3 {
                    s += phi((x - v - 360.0 * k as f64) / h);
                }
                s
            }
            _ => phi((x - v) / h) + phi((x + v) / h) + phi((x - (2.0 - v)) / h),
        };
    }
    acc / (values.len() as f64 * h)
}

/// Silverman's rule from a sorted copy with textbook interpolated quartiles.
pub fn silverman(values: &[f64], width: f64) -> f64 {
    let n = values.len() as f64;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (n - 1.0);
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
    };
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(1e-3 * width)
}

// ---- statistics ------------------------------------------------------

/// Two-pass Pearson; `None` when either side has zero variance.
pub fn textbook_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

// ---- mining ----------------------------------------------------------

/// A transaction as (color bin slots, emotion indices).
pub type RawTx = (BTreeSet<usize>, BTreeSet<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct RawRule {
    pub color: usize,
    pub emotions: BTreeSet<usize>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

/// Every {color} -> {emotions} rule over all non-empty emotion subsets up
/// to `max_consequent`, by scanning the transactions for each candidate.
pub fn exhaustive_rules(
    txs: &[RawTx],
    colors: &[usize],
    emotions: &[usize],
    min_support: f64,
    min_confidence: f64,
    max_consequent: usize,
) -> Vec<RawRule> {
    let n = txs.len() as f64;
    let count = |c: Option<usize>, es: &BTreeSet<usize>| {
        txs.iter()
            .filter(|(tc, te)| c.is_none_or(|c| tc.contains(&c)) && es.iter().all(|e| te.contains(e)))
            .count() as f64
    };
    let mut out = Vec::new();
    for subset in 1u32..(1 << emotions.len()) {
        let es: BTreeSet<usize> = (0..emotions.len()).filter(|i| subset & (1 << i) != 0).map(|i| emotions[i]).collect();
        if es.len() > max_consequent {
            continue;
        }
        let ce = count(None, &es);
        for &c in colors {
            let joint = count(Some(c), &es);
            let cc = count(Some(c), &BTreeSet::new());
            if joint == 0.0 || joint / n < min_support {
                continue;
            }
            let confidence = joint / cc;
            if confidence < min_confidence {
                continue;
            }
            out.push(RawRule { color: c, emotions: es.clone(), support: joint / n, confidence, lift: joint * n / (cc * ce) });
        }
    }
    out
}

// ---- fixtures --------------------------------------------------------

pub fn fixtures() -> PathBuf {
    Path::new("tests").join("fixtures")
}

/// The golden-run configuration. Paths are relative to the crate root,
/// which is the working directory of integration tests.
pub fn golden_config(workers: usize, output_dir: &Path) -> RunConfig {
    RunConfig {
        input_dir: fixtures().join("corpus"),
        emotions: Some(fixtures().join("emotions.csv")),
        output_dir: output_dir.to_path_buf(),
        workers,
        ..Default::default()
    }
}
