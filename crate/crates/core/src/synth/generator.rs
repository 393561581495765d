use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::fuzzy::RuleBank;
use crate::labels::{EmotionClass, NUM_CLASSES};
use crate::tasks::{LongVideo, SegmentLabel, TEXT_DIM, VISUAL_DIM};

pub const CODING_DIM: usize = 12;

/// Synthetic video settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub frames_per_segment: usize,
    /// Standard deviation of coding and text noise.
    pub sigma: f64,
    /// Ramp length range, as a fraction of the segment.
    pub ramp_min: f64,
    pub ramp_max: f64,
    pub segments_per_video: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            frames_per_segment: 24,
            sigma: 0.1,
            ramp_min: 0.3,
            ramp_max: 1.0,
            segments_per_video: 6,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.ramp_min && self.ramp_min <= self.ramp_max && self.ramp_max <= 1.0) {
            return Err(Error::Config(format!(
                "ramp range must satisfy 0 < min <= max <= 1, got [{}, {}]",
                self.ramp_min, self.ramp_max
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Config(format!(
                "noise sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.frames_per_segment == 0 || self.segments_per_video == 0 {
            return Err(Error::Config(
                "frames per segment and segments per video must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fixed random maps from codings to visual features and from class
/// one-hots to text features.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifts {
    pub visual: Tensor<f64>,
    pub text: Tensor<f64>,
}

impl Lifts {
    /// Gaussian entries scaled by `1/sqrt(fan_in)`.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize| {
            let n = Normal::new(0.0, 1.0 / (rows as f64).sqrt()).unwrap();
            let data = (0..rows * cols).map(|_| n.sample(&mut rng)).collect();
            Tensor::new(rows, cols, data).unwrap()
        };
        let visual = draw(CODING_DIM, VISUAL_DIM);
        let text = draw(NUM_CLASSES, TEXT_DIM);
        Self { visual, text }
    }
}

/// A generated video with its latent codings and ramp fractions.
#[derive(Debug, Clone)]
pub struct GeneratedVideo {
    pub video: LongVideo,
    /// Noisy per-frame codings before the visual lift.
    pub codings: Tensor<f64>,
    pub ramps: Vec<f64>,
}

/// Builds a video whose segments carry `classes` in order.
///
/// Each segment's coding ramps linearly from zero to the class prototype
/// over a random fraction of the segment and then holds.
pub fn generate_video(
    classes: &[EmotionClass],
    cfg: &GeneratorConfig,
    bank: &RuleBank,
    lifts: &Lifts,
    seed: u64,
) -> Result<GeneratedVideo> {
    cfg.validate()?;
    if bank.n_components() != CODING_DIM {
        return Err(Error::Config(format!(
            "generator needs a {CODING_DIM}-component rule bank"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let t_seg = cfg.frames_per_segment;
    let frames = t_seg * classes.len();

    let mut codings = Tensor::zeros(frames, CODING_DIM);
    let mut text = Tensor::zeros(classes.len(), TEXT_DIM);
    let mut labels = Vec::with_capacity(classes.len());
    let mut ramps = Vec::with_capacity(classes.len());
    for (s, &class) in classes.iter().enumerate() {
        let proto = &bank
            .prototype(class)
            .ok_or_else(|| Error::Lookup(format!("no rule for {class} in the bank")))?
            .prototype;
        let r = if cfg.ramp_min < cfg.ramp_max {
            rng.random_range(cfg.ramp_min..=cfg.ramp_max)
        } else {
            cfg.ramp_min
        };
        ramps.push(r);
        let ramp_len = r * t_seg as f64;
        for t in 0..t_seg {
            let frac = ((t + 1) as f64 / ramp_len).min(1.0);
            let row = s * t_seg + t;
            for (c, &p) in proto.iter().enumerate() {
                codings.set(row, c, p * frac + noise.sample(&mut rng));
            }
        }
        for (j, &v) in lifts.text.row(class.index()).iter().enumerate() {
            text.set(s, j, v + noise.sample(&mut rng));
        }
        labels.push(SegmentLabel::new(class, s * t_seg, (s + 1) * t_seg));
    }
    let visual = codings.matmul(&lifts.visual)?;
    Ok(GeneratedVideo {
        video: LongVideo::new(visual, text, labels)?,
        codings,
        ramps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::eccentricity;

    fn classes() -> Vec<EmotionClass> {
        (0..6)
            .map(|i| EmotionClass::from_index(i * 3 + 1).unwrap())
            .collect()
    }

    #[test]
    fn noiseless_full_ramp_ends_on_the_prototype() {
        let cfg = GeneratorConfig {
            sigma: 0.0,
            ramp_min: 1.0,
            ramp_max: 1.0,
            ..Default::default()
        };
        let bank = RuleBank::default_bank();
        let g = generate_video(&classes(), &cfg, &bank, &Lifts::seeded(1), 5).unwrap();
        for (s, c) in classes().iter().enumerate() {
            let last = g.codings.row((s + 1) * 24 - 1);
            assert_eq!(last, bank.prototype(*c).unwrap().prototype.as_slice());
        }
    }

    #[test]
    fn same_seed_same_video() {
        let bank = RuleBank::default_bank();
        let lifts = Lifts::seeded(2);
        let a = generate_video(&classes(), &GeneratorConfig::default(), &bank, &lifts, 9).unwrap();
        let b = generate_video(&classes(), &GeneratorConfig::default(), &bank, &lifts, 9).unwrap();
        assert_eq!(a.video, b.video);
        let c = generate_video(&classes(), &GeneratorConfig::default(), &bank, &lifts, 10).unwrap();
        assert_ne!(a.video, c.video);
    }

    #[test]
    fn ramps_vary_when_the_range_is_open() {
        let bank = RuleBank::default_bank();
        let g = generate_video(
            &classes(),
            &GeneratorConfig::default(),
            &bank,
            &Lifts::seeded(3),
            4,
        )
        .unwrap();
        assert!(g.ramps.iter().any(|&r| r != g.ramps[0]));
        assert!(g.ramps.iter().all(|&r| (0.3..=1.0).contains(&r)));
    }

    #[test]
    fn terminal_codings_sit_near_their_prototype() {
        let bank = RuleBank::default_bank();
        let g = generate_video(
            &classes(),
            &GeneratorConfig::default(),
            &bank,
            &Lifts::seeded(3),
            4,
        )
        .unwrap();
        for (s, c) in classes().iter().enumerate() {
            let e = eccentricity(
                g.codings.row((s + 1) * 24 - 1),
                &bank.prototype(*c).unwrap().prototype,
            )
            .unwrap();
            assert!(e < 0.1, "{c}: {e}");
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let bad = GeneratorConfig {
            ramp_min: 0.8,
            ramp_max: 0.5,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = GeneratorConfig {
            sigma: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
