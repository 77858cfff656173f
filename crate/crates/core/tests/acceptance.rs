//! Acceptance suite. Runs as a plain binary (`harness = false`) so every
//! criterion prints one PASS/FAIL line with its timing, then exits nonzero
//! if any failed.
//!
//!     cargo test -p chromaffect --test acceptance
//!
//! Set `CHROMAFFECT_BLESS=1` to rewrite the golden report directory from the
//! current build before comparing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
mod common;

/// Name, time limit in seconds, and check.
type Criterion = (&'static str, u64, fn() -> Outcome);

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chromaffect::color::{hsl_to_rgb, rgb_to_hsl};
use chromaffect::density::{eval_grid, kde};
use chromaffect::fusion::color_emotion_correlation;
use chromaffect::harmony::{all_templates, detect_harmonies};
use chromaffect::mining::{filter_lift, mine_rules};
use chromaffect::pipeline::analyze_raster;
use chromaffect::report::correlation_csv;
use chromaffect::{
    Bandwidth, Channel, EmotionLabel, EmotionVector, HarmonyType, HueSet, IttenBin, IttenHue, Item, MiningConfig,
    QuantizedPalette, RgbColor, RunConfig, Transaction,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn hue(name: &str) -> usize {
    IttenHue::from_name(name).unwrap_or_else(|| panic!("unknown hue {name}")).index()
}

// ---- criteria --------------------------------------------------------

fn wheel_structure() -> Outcome {
    let complementary: BTreeSet<BTreeSet<usize>> = all_templates()
        .into_iter()
        .filter(|h| h.harmony_type == HarmonyType::Complementary)
        .map(|h| h.members.indices().collect())
        .collect();
    let table3 = [
        ("blue-green", "red-orange"),
        ("blue", "orange"),
        ("red", "green"),
        ("yellow-green", "red-violet"),
        ("yellow-orange", "blue-violet"),
    ];
    for (a, b) in table3 {
        let pair = BTreeSet::from([hue(a), hue(b)]);
        ensure!(complementary.contains(&pair), "({a}, {b}) is not a complementary template");
        ensure!((hue(a) as i32 - hue(b) as i32).abs() == 6, "({a}, {b}) is not six steps apart");
    }
    ensure!(complementary.len() == 6, "expected 6 complementary templates, got {}", complementary.len());
    let named: BTreeSet<BTreeSet<usize>> = table3.iter().map(|(a, b)| BTreeSet::from([hue(a), hue(b)])).collect();
    let rest: Vec<_> = complementary.difference(&named).collect();
    ensure!(rest == [&BTreeSet::from([hue("yellow"), hue("violet")])], "unexpected unnamed pair {rest:?}");

    let table2 = [
        ["yellow-orange", "orange", "red-orange"],
        ["orange", "red-orange", "red"],
        ["yellow", "yellow-orange", "orange"],
        ["yellow-green", "yellow", "yellow-orange"],
        ["red-orange", "red", "red-violet"],
        ["blue-green", "green", "yellow-green"],
        ["blue", "blue-green", "green"],
        ["red-violet", "violet", "blue-violet"],
        ["red", "red-violet", "violet"],
        ["violet", "blue-violet", "blue"],
        ["green", "yellow-green", "yellow"],
    ];
    let analogous: BTreeSet<u16> = all_templates()
        .into_iter()
        .filter(|h| h.harmony_type == HarmonyType::Analogous)
        .map(|h| h.members.bits())
        .collect();
    let mut seen = BTreeSet::new();
    for triple in table2 {
        let idx: Vec<usize> = triple.iter().map(|n| hue(n)).collect();
        let start = idx.iter().copied().find(|&i| idx.contains(&((i + 1) % 12)) && idx.contains(&((i + 2) % 12)));
        ensure!(start.is_some(), "{triple:?} is not a consecutive-index triple");
        let bits = HueSet::from_indices(idx).unwrap().bits();
        ensure!(analogous.contains(&bits), "{triple:?} is not an analogous template");
        seen.insert(bits);
    }
    ensure!(seen.len() == 11, "table triples are not distinct");
    let missing: Vec<_> = analogous.difference(&seen).collect();
    let expected = HueSet::from_indices([hue("blue-green"), hue("blue"), hue("blue-violet")]).unwrap().bits();
    ensure!(missing == [&expected], "absent triple is {missing:?}");
    Ok("5/5 complementary pairs, 11/11 analogous triples, absent triple blue-green+blue+blue-violet".into())
}

fn harmony_oracle() -> Outcome {
    let mut instances = 0;
    for bits in 0u16..4096 {
        let got: BTreeSet<(HarmonyType, u16)> = detect_harmonies(HueSet::from_bits(bits).unwrap())
            .into_iter()
            .map(|h| (h.harmony_type, h.members.bits()))
            .collect();
        let want = brute_force_harmonies(bits);
        ensure!(got == want, "subset {bits:#05x}: got {got:?}, want {want:?}");
        instances += got.len();
    }
    Ok(format!("4096 subsets equal, {instances} instances"))
}

fn hsl_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0;
    for _ in 0..100_000 {
        let c = RgbColor { r: rng.random(), g: rng.random(), b: rng.random() };
        let back = hsl_to_rgb(rgb_to_hsl(c));
        let d = [(c.r, back.r), (c.g, back.g), (c.b, back.b)].iter().map(|(a, b)| a.abs_diff(*b)).max().unwrap();
        ensure!(d <= 1, "{c:?} came back as {back:?}");
        worst = worst.max(d);
    }
    Ok(format!("100000 colors, max channel error {worst}"))
}

fn kde_correctness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    let mut integrals = Vec::new();
    for channel in Channel::ALL {
        let (lo, hi) = channel.domain();
        let width = hi - lo;
        // clustered near both domain ends so wrap and reflection matter
        let values: Vec<f64> = (0..50)
            .map(|i| {
                let u: f64 = rng.random::<f64>() * 0.15;
                let v = if i % 2 == 0 { lo + u * width } else { hi - u * width };
                if channel == Channel::Hue { v.rem_euclid(360.0) } else { v.clamp(lo, hi) }
            })
            .collect();
        let grid = eval_grid(channel, 512);

        let auto = kde(&values, channel, Bandwidth::Auto, &grid).map_err(|e| e.to_string())?;
        let h_oracle = silverman(&values, width);
        ensure!((auto.bandwidth - h_oracle).abs() <= 1e-12 * width, "{channel}: bandwidth {} vs {h_oracle}", auto.bandwidth);
        for fixed in [auto.bandwidth, 0.03 * width] {
            let est = kde(&values, channel, Bandwidth::Fixed(fixed), &grid).map_err(|e| e.to_string())?;
            for (x, d) in grid.iter().zip(&est.densities) {
                let want = direct_kde(&values, channel, fixed, *x);
                let err = (d - want).abs();
                ensure!(err <= 1e-9, "{channel} h={fixed} x={x}: {d} vs {want}");
                worst = worst.max(err);
            }
        }
        let integral = auto.integral();
        ensure!((integral - 1.0).abs() <= 1e-3, "{channel}: integral {integral}");
        integrals.push(format!("{}={integral:.6}", channel.short()));
    }
    Ok(format!("max pointwise error {worst:.1e}; integrals {}", integrals.join(" ")))
}

fn rule_mining_oracle() -> Outcome {
    let colors = [IttenBin::Black, IttenBin::Chromatic(IttenHue::Red), IttenBin::Chromatic(IttenHue::Blue)];
    let emotions = [EmotionLabel::Awe, EmotionLabel::Fear, EmotionLabel::Sadness, EmotionLabel::Amusement, EmotionLabel::Anger];
    let cfg = MiningConfig { min_support: 0.05, min_confidence: 0.2, max_consequent: 3, include_something_else: false };
    let mut checked = 0;
    for seed in 0..40u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let n = rng.random_range(5..=50);
        let mut raw: Vec<RawTx> = Vec::new();
        let mut txs = Vec::new();
        for i in 0..n {
            let cs: BTreeSet<usize> = (0..colors.len()).filter(|_| rng.random_bool(0.5)).collect();
            let es: BTreeSet<usize> = (0..emotions.len()).filter(|_| rng.random_bool(0.4)).collect();
            let items = cs.iter().map(|&c| Item::Color(colors[c])).chain(es.iter().map(|&e| Item::Emotion(emotions[e])));
            txs.push(Transaction::new(format!("t{i}"), items));
            raw.push((cs, es));
        }
        let color_ids: Vec<usize> = (0..colors.len()).collect();
        let emotion_ids: Vec<usize> = (0..emotions.len()).collect();
        let oracle = exhaustive_rules(&raw, &color_ids, &emotion_ids, cfg.min_support, cfg.min_confidence, cfg.max_consequent);
        let mined = mine_rules(&txs, &cfg).map_err(|e| e.to_string())?;

        let key = |c: IttenBin, es: &BTreeSet<EmotionLabel>| (c.name().to_owned(), es.iter().map(|e| e.index()).collect::<Vec<_>>());
        let got: BTreeMap<_, _> = mined.iter().map(|r| (key(r.antecedent, &r.consequent), (r.support, r.confidence, r.lift))).collect();
        let want: BTreeMap<_, _> = oracle
            .iter()
            .map(|r| {
                let es: BTreeSet<EmotionLabel> = r.emotions.iter().map(|&e| emotions[e]).collect();
                (key(colors[r.color], &es), (r.support, r.confidence, r.lift))
            })
            .collect();
        ensure!(got.len() == mined.len(), "seed {seed}: duplicate rules");
        ensure!(got.keys().eq(want.keys()), "seed {seed}: rule sets differ\n got {:?}\nwant {:?}", got.keys(), want.keys());
        for (k, (g, w)) in got.iter().map(|(k, g)| (k, (g, &want[k]))) {
            ensure!(
                (g.0 - w.0).abs() <= 1e-12 && (g.1 - w.1).abs() <= 1e-12 && (g.2 - w.2).abs() <= 1e-12,
                "seed {seed} rule {k:?}: {g:?} vs {w:?}"
            );
        }
        for threshold in [1.0, 1.5] {
            let kept = filter_lift(mined.clone(), threshold);
            let expected = oracle.iter().filter(|r| r.lift > threshold).count();
            ensure!(kept.len() == expected, "seed {seed}: lift filter at {threshold} kept {} of {expected}", kept.len());
        }
        checked += mined.len();
    }

    // strictness at the boundary: independence gives lift exactly 1
    let a = Item::Color(IttenBin::Black);
    let e = Item::Emotion(EmotionLabel::Fear);
    let txs = vec![
        Transaction::new("1", [a, e]),
        Transaction::new("2", [a]),
        Transaction::new("3", [e]),
        Transaction::new("4", []),
    ];
    let rules = mine_rules(&txs, &MiningConfig { min_confidence: 0.1, ..Default::default() }).map_err(|e| e.to_string())?;
    ensure!(rules.len() == 1 && rules[0].lift == 1.0, "independent pair should give exactly lift 1: {rules:?}");
    ensure!(filter_lift(rules.clone(), 1.0).is_empty(), "lift == threshold must be filtered out");
    ensure!(filter_lift(rules, 1.0 - 1e-12).len() == 1, "lift just above threshold must be kept");
    Ok(format!("40 random corpora, {checked} rules equal; lift filter strict"))
}

fn pearson_correctness() -> Outcome {
    // 10 images; blue is never present and white is constant, so both rows
    // have zero variance. Awe is constant across images too.
    let mut palettes = Vec::new();
    let mut emotions = Vec::new();
    for i in 0..10u64 {
        let mut counts = [0u64; IttenBin::COUNT];
        counts[IttenBin::Black.slot()] = 3 + (i * 7) % 11;
        counts[IttenBin::Chromatic(IttenHue::Red).slot()] = 1 + (i * i) % 9;
        counts[IttenBin::Gray.slot()] = 2 + (i * 5) % 4;
        counts[IttenBin::Chromatic(IttenHue::Green).slot()] = 10 - i;
        counts[IttenBin::Chromatic(IttenHue::Orange).slot()] = (i * 3) % 5;
        counts[IttenBin::Chromatic(IttenHue::Violet).slot()] = i % 3 + i / 5;
        let rest: u64 = counts.iter().sum();
        // white fixed at half the pixels keeps its share constant
        counts[IttenBin::White.slot()] = rest;
        palettes.push((format!("img{i:02}"), QuantizedPalette::from_counts(&counts).map_err(|e| e.to_string())?));

        // multiples of 1/64 sum exactly, so no renormalization disturbs the
        // constant awe column
        let mut p = [0.0; EmotionLabel::COUNT];
        p[EmotionLabel::Awe.index()] = 0.25;
        p[EmotionLabel::Fear.index()] = (1 + 2 * i) as f64 / 64.0;
        p[EmotionLabel::Sadness.index()] = ((i * 3) % 7) as f64 / 64.0;
        p[EmotionLabel::Amusement.index()] = (i % 4) as f64 / 64.0;
        p[EmotionLabel::Anger.index()] = ((i * 5) % 3) as f64 / 64.0;
        p[EmotionLabel::Excitement.index()] = (i / 3) as f64 / 64.0;
        let used: f64 = p.iter().sum();
        p[EmotionLabel::Contentment.index()] = 1.0 - used;
        emotions.push(EmotionVector::new(format!("img{i:02}"), p).map_err(|e| format!("{e:?}"))?);
    }
    let (matrix, join) = color_emotion_correlation(&palettes, &emotions).map_err(|e| e.to_string())?;
    ensure!(join.matched == 10, "joined {}", join.matched);

    let (mut nulls, mut values) = (0, 0);
    for bin in IttenBin::ALL {
        let x: Vec<f64> = palettes.iter().map(|(_, p)| p.share(bin)).collect();
        for e in EmotionLabel::ALL {
            let y: Vec<f64> = emotions.iter().map(|v| v.prob(e)).collect();
            let want = textbook_pearson(&x, &y);
            let got = matrix.get(bin, e);
            match (got, want) {
                (None, None) => nulls += 1,
                (Some(g), Some(w)) => {
                    ensure!((g - w).abs() <= 1e-12, "{bin}/{e}: {g} vs {w}");
                    values += 1;
                }
                _ => return Err(format!("{bin}/{e}: got {got:?}, want {want:?}")),
            }
        }
    }
    ensure!(nulls > 0 && values > 0, "fixture should produce both nulls ({nulls}) and values ({values})");
    let csv = correlation_csv(&matrix);
    let blue_row = csv.lines().find(|l| l.starts_with("blue,")).ok_or("no blue row")?;
    ensure!(blue_row.split(',').skip(1).all(|f| f == "null"), "zero-variance row not written as null: {blue_row}");
    Ok(format!("{values} entries within 1e-12, {nulls} nulls"))
}

fn list_dir(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        out.insert(name, fs::read(entry.path()).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn golden_run() -> Outcome {
    let golden_dir = fixtures().join("golden");
    if std::env::var_os("CHROMAFFECT_BLESS").is_some() {
        let _ = fs::remove_dir_all(&golden_dir);
        chromaffect::run(&golden_config(1, &golden_dir)).map_err(|e| e.to_string())?;
    }
    let golden = list_dir(&golden_dir)?;
    ensure!(golden.len() == 14, "golden directory holds {} files", golden.len());
    for workers in [1, 4, 8] {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        chromaffect::run(&golden_config(workers, tmp.path())).map_err(|e| e.to_string())?;
        let got = list_dir(tmp.path())?;
        ensure!(got.keys().eq(golden.keys()), "workers={workers}: file set {:?}", got.keys());
        for (name, bytes) in &golden {
            ensure!(&got[name] == bytes, "workers={workers}: {name} differs from golden");
        }
    }
    Ok(format!("{} files byte-identical at workers 1, 4, 8", golden.len()))
}

fn constructed_signal() -> Outcome {
    let cfg = RunConfig { input_dir: "unused".into(), output_dir: "unused".into(), workers: 1, ..Default::default() };
    let mut palettes = Vec::new();
    let mut emotions = Vec::new();
    let mut rng = StdRng::seed_from_u64(7);
    for i in 0..30u32 {
        let img = image::RgbImage::from_fn(30, 20, |x, y| {
            if x < i {
                image::Rgb([0, 0, 0])
            } else if (x + y) % 3 == 0 {
                image::Rgb([230, 200, 40])
            } else {
                image::Rgb([40, 90, 220])
            }
        });
        let id = format!("img{i:02}");
        let rec = analyze_raster(&id, &img, &cfg).map_err(|e| e.to_string())?;
        let black = rec.palette.share(IttenBin::Black);
        // fear proportional to black share, the remainder spread at random
        let mut p = [0.0; EmotionLabel::COUNT];
        p[EmotionLabel::Fear.index()] = 0.9 * black;
        let others: Vec<f64> = (0..8).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = others.iter().sum();
        let mut slots = EmotionLabel::ALL.into_iter().filter(|e| *e != EmotionLabel::Fear);
        for w in others {
            p[slots.next().unwrap().index()] = (1.0 - 0.9 * black) * w / total;
        }
        emotions.push(EmotionVector::new(id.clone(), p).map_err(|e| format!("{e:?}"))?);
        palettes.push((id, rec.palette));
    }
    let (matrix, _) = color_emotion_correlation(&palettes, &emotions).map_err(|e| e.to_string())?;
    let r = matrix.get(IttenBin::Black, EmotionLabel::Fear).ok_or("r(black, fear) undefined")?;
    ensure!(r >= 0.99, "r(black, fear) = {r}");
    Ok(format!("r(black, fear) = {r:.6} over 30 images"))
}

// ---- runner ----------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("wheel structure", 1, wheel_structure),
        ("harmony oracle equivalence", 5, harmony_oracle),
        ("HSL round trip", 5, hsl_round_trip),
        ("KDE correctness", 5, kde_correctness),
        ("rule-mining oracle equivalence", 5, rule_mining_oracle),
        ("Pearson correctness", 1, pearson_correctness),
        ("end-to-end golden run", 30, golden_run),
        ("constructed-signal recovery", 5, constructed_signal),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(limit) => Err(format!("took {elapsed:.2?}, limit {limit} s")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name:<32} {:>9.2?} (limit {limit} s)  {detail}", elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<32} {:>9.2?} (limit {limit} s)  {why}", elapsed);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
