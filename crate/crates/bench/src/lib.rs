//! Synthetic inputs shared by the criterion benches.

use chromaffect::color::{HslColor, RgbColor};
use chromaffect::emotion::{EmotionLabel, EmotionVector};
use chromaffect::mining::{Item, Transaction};
use chromaffect::IttenBin;

/// Deterministic pseudo-random stream (SplitMix64).
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn rgb_pixels(n: usize, seed: u64) -> Vec<RgbColor> {
    let mut rng = SplitMix::new(seed);
    (0..n)
        .map(|_| {
            let v = rng.next_u64();
            RgbColor::new(v as u8, (v >> 8) as u8, (v >> 16) as u8)
        })
        .collect()
}

pub fn hsl_pixels(n: usize, seed: u64) -> Vec<HslColor> {
    rgb_pixels(n, seed).into_iter().map(chromaffect::color::rgb_to_hsl).collect()
}

pub fn transactions(n: usize, seed: u64) -> Vec<Transaction> {
    let mut rng = SplitMix::new(seed);
    (0..n)
        .map(|i| {
            let colors = IttenBin::ALL.into_iter().filter(|_| rng.unit() < 0.25).map(Item::Color).collect::<Vec<_>>();
            let emos = EmotionLabel::ALL.into_iter().filter(|_| rng.unit() < 0.2).map(Item::Emotion).collect::<Vec<_>>();
            Transaction::new(format!("t{i}"), colors.into_iter().chain(emos))
        })
        .collect()
}

pub fn emotion_vector(id: &str, rng: &mut SplitMix) -> EmotionVector {
    let raw: [f64; 9] = std::array::from_fn(|_| rng.unit() + 1e-3);
    let sum: f64 = raw.iter().sum();
    EmotionVector::new(id, raw.map(|p| p / sum)).expect("normalized by construction")
}
