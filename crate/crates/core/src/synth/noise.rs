use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::tasks::LongVideo;

/// Noise levels of the robustness sweep.
pub const SWEEP_LEVELS: [f64; 4] = [0.0, 0.1, 0.3, 0.5];

/// Feature-space stand-ins for image corruptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Fog,
    Mask,
    Distortion,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::Fog, NoiseKind::Mask, NoiseKind::Distortion];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Fog => "fog",
            NoiseKind::Mask => "mask",
            NoiseKind::Distortion => "distortion",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Lookup(format!("noise kind `{s}`")))
    }
}

/// A corruption and its level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Restricts the level to the sweep grid.
    pub fn sweep(kind: NoiseKind, level: f64, seed: u64) -> Result<Self> {
        if !SWEEP_LEVELS.contains(&level) {
            return Err(Error::Param(format!(
                "level {level} is not one of {SWEEP_LEVELS:?}"
            )));
        }
        Ok(Self { kind, level, seed })
    }

    /// Any level in `[0, 1]`.
    pub fn free(kind: NoiseKind, level: f64, seed: u64) -> Result<Self> {
        check_level(level)?;
        Ok(Self { kind, level, seed })
    }

    pub fn apply(&self, v: &LongVideo) -> Result<LongVideo> {
        match self.kind {
            NoiseKind::Fog => inject_fog(v, self.level, self.seed),
            NoiseKind::Mask => inject_mask(v, self.level, self.seed),
            NoiseKind::Distortion => inject_distortion(v, self.level, self.seed),
        }
    }
}

fn check_level(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!(
            "noise level must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

/// Zeroes a contiguous window of `ceil(p * T)` visual frames; each segment
/// touching the window loses its text feature with probability `p`.
pub fn inject_mask(v: &LongVideo, p: f64, seed: u64) -> Result<LongVideo> {
    check_level(p)?;
    let frames = v.frames();
    let len = ((p * frames as f64).ceil() as usize).min(frames);
    if len == 0 {
        return Ok(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..=frames - len);
    let end = start + len;
    let mut visual = v.visual().clone();
    let cols = visual.cols();
    visual.data_mut()[start * cols..end * cols].fill(0.0);
    let mut text = v.text().clone();
    let tcols = text.cols();
    for (i, l) in v.labels().iter().enumerate() {
        let touched = l.start < end && start < l.end;
        if touched && rng.random_bool(p) {
            text.data_mut()[i * tcols..(i + 1) * tcols].fill(0.0);
        }
    }
    v.with_features(visual, text)
}

/// Pulls visual features toward their per-video mean: `(1 - p) x + p mean`.
pub fn inject_fog(v: &LongVideo, p: f64, _seed: u64) -> Result<LongVideo> {
    check_level(p)?;
    if p == 0.0 {
        return Ok(v.clone());
    }
    let x = v.visual();
    let n = x.rows().max(1) as f64;
    let mean: Vec<f64> = (0..x.cols())
        .map(|c| (0..x.rows()).map(|r| x.get(r, c)).sum::<f64>() / n)
        .collect();
    let mut out = Tensor::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        for (c, &m) in mean.iter().enumerate() {
            out.set(r, c, (1.0 - p) * x.get(r, c) + p * m);
        }
    }
    v.with_features(out, v.text().clone())
}

/// Smooth warp `x + p * gamma * tanh(x)` with one seeded
/// `gamma ~ U[-1, 1]` per feature.
pub fn inject_distortion(v: &LongVideo, p: f64, seed: u64) -> Result<LongVideo> {
    check_level(p)?;
    if p == 0.0 {
        return Ok(v.clone());
    }
    let x = v.visual();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma: Vec<f64> = (0..x.cols())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let mut out = x.clone();
    for r in 0..x.rows() {
        for (c, &g) in gamma.iter().enumerate() {
            let val = x.get(r, c);
            out.set(r, c, val + p * g * val.tanh());
        }
    }
    v.with_features(out, v.text().clone())
}
