use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::generator::{generate_video, GeneratorConfig, Lifts};
use crate::error::{Error, Result};
use crate::fuzzy::RuleBank;
use crate::labels::{EmotionClass, NUM_CLASSES};
use crate::tasks::LongVideo;

pub const MANIFEST: &str = "manifest.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn id(self) -> u64 {
        self as u64
    }
}

/// Sizes and generator settings of a benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub train_videos: usize,
    pub val_videos: usize,
    pub test_videos: usize,
    pub generator: GeneratorConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            train_videos: 60,
            val_videos: 30,
            test_videos: 30,
            generator: GeneratorConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn videos(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train_videos,
            Split::Val => self.val_videos,
            Split::Test => self.test_videos,
        }
    }
}

/// One generated video and its provenance.
#[derive(Debug, Clone)]
pub struct BenchVideo {
    pub seed: u64,
    pub video: LongVideo,
}

/// Train, validation and test videos generated with one shared lift.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub train: Vec<BenchVideo>,
    pub val: Vec<BenchVideo>,
    pub test: Vec<BenchVideo>,
}

/// Per-video seed; splits occupy disjoint ranges.
pub fn video_seed(bench_seed: u64, split: Split, index: usize) -> u64 {
    bench_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((split.id() << 40) + index as u64)
}

/// Class sequence of every video in a split: classes are dealt round
/// robin and shuffled, so each class appears equally often (up to one).
fn split_labels(n_videos: usize, per_video: usize, seed: u64) -> Vec<Vec<EmotionClass>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all: Vec<EmotionClass> = (0..n_videos * per_video)
        .map(|i| EmotionClass::from_index(i % NUM_CLASSES).unwrap())
        .collect();
    all.shuffle(&mut rng);
    all.chunks(per_video).map(<[_]>::to_vec).collect()
}

impl Benchmark {
    pub fn generate(cfg: &BenchConfig, bank: &RuleBank, seed: u64) -> Result<Self> {
        cfg.generator.validate()?;
        let lifts = Lifts::seeded(seed ^ 0x11F7);
        let make = |split: Split| -> Result<Vec<BenchVideo>> {
            let n = cfg.videos(split);
            let labels = split_labels(
                n,
                cfg.generator.segments_per_video,
                video_seed(seed, split, usize::MAX >> 24),
            );
            labels
                .iter()
                .enumerate()
                .map(|(i, classes)| {
                    let vs = video_seed(seed, split, i);
                    let g = generate_video(classes, &cfg.generator, bank, &lifts, vs)?;
                    Ok(BenchVideo {
                        seed: vs,
                        video: g.video,
                    })
                })
                .collect()
        };
        Ok(Self {
            train: make(Split::Train)?,
            val: make(Split::Val)?,
            test: make(Split::Test)?,
        })
    }

    pub fn split(&self, split: Split) -> &[BenchVideo] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn videos(&self, split: Split) -> Vec<LongVideo> {
        self.split(split).iter().map(|b| b.video.clone()).collect()
    }

    /// Writes `<split>/video_NNNN.fzv` files and the manifest.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let mut manifest = String::new();
        for split in Split::ALL {
            fs::create_dir_all(dir.join(split.name()))?;
            for (i, b) in self.split(split).iter().enumerate() {
                let rel = format!("{}/video_{i:04}.fzv", split.name());
                let f = fs::File::create(dir.join(&rel))?;
                let mut w = BufWriter::new(f);
                b.video.write_to(&mut w)?;
                std::io::Write::flush(&mut w)?;
                let labels: Vec<String> = b
                    .video
                    .labels()
                    .iter()
                    .map(|l| l.class.to_string())
                    .collect();
                manifest.push_str(&format!("{rel}\t{}\t{}\n", b.seed, labels.join(",")));
            }
        }
        fs::write(dir.join(MANIFEST), manifest)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let mut bench = Self {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
        };
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| Error::Data(format!("{MANIFEST} line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let seed: u64 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad seed `{}`", fields[1])))?;
            let split = Split::ALL
                .into_iter()
                .find(|s| fields[0].starts_with(&format!("{}/", s.name())))
                .ok_or_else(|| {
                    err(format!(
                        "path `{}` is not under a split directory",
                        fields[0]
                    ))
                })?;
            let f = fs::File::open(dir.join(fields[0]))?;
            let video = LongVideo::read_from(BufReader::new(f))?;
            let listed: Vec<String> = video.labels().iter().map(|l| l.class.to_string()).collect();
            if listed.join(",") != fields[2] {
                return Err(err("labels disagree with the video file".into()));
            }
            let entry = BenchVideo { seed, video };
            match split {
                Split::Train => bench.train.push(entry),
                Split::Val => bench.val.push(entry),
                Split::Test => bench.test.push(entry),
            }
        }
        Ok(bench)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small() -> BenchConfig {
        BenchConfig {
            train_videos: 6,
            val_videos: 3,
            test_videos: 3,
            ..Default::default()
        }
    }

    #[test]
    fn every_split_covers_all_classes() {
        let b = Benchmark::generate(&small(), &RuleBank::default_bank(), 1).unwrap();
        for split in Split::ALL {
            let seen: HashSet<usize> = b
                .split(split)
                .iter()
                .flat_map(|v| v.video.labels().iter().map(|l| l.class.index()))
                .collect();
            assert_eq!(seen.len(), NUM_CLASSES, "{}", split.name());
        }
    }

    #[test]
    fn split_seeds_are_disjoint() {
        let b = Benchmark::generate(&small(), &RuleBank::default_bank(), 1).unwrap();
        let sets: Vec<HashSet<u64>> = Split::ALL
            .iter()
            .map(|&s| b.split(s).iter().map(|v| v.seed).collect())
            .collect();
        assert!(
            sets[0].is_disjoint(&sets[1])
                && sets[0].is_disjoint(&sets[2])
                && sets[1].is_disjoint(&sets[2])
        );
    }
}
