use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::fuzzy::FuzzyConfig;
use crate::meta::{EpisodeConfig, MetaConfig, Order};
use crate::synth::{BenchConfig, GeneratorConfig, Split};

/// Floating point width used for training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn bits(self) -> u32 {
        match self {
            Precision::F64 => 64,
            Precision::F32 => 32,
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "64" => Ok(Precision::F64),
            "32" => Ok(Precision::F32),
            _ => Err(Error::Config(format!(
                "precision must be 64 or 32, got `{s}`"
            ))),
        }
    }
}

/// Every setting of a run as one flat key-value document.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub precision: Precision,

    pub lambda1: f64,
    pub lambda2: f64,

    pub mode: Order,
    pub alpha: f64,
    pub beta: f64,
    pub tasks_per_step: usize,
    pub inner_steps: usize,
    pub momentum: f64,
    pub second_moment: f64,
    pub weight_decay: f64,
    pub k_support: usize,
    pub k_query: usize,
    pub outer_steps: usize,
    pub checkpoint_every: usize,

    pub d: usize,
    pub kernel: usize,
    pub layers: usize,
    pub coding_weight: f64,
    pub use_fuzzy: bool,
    pub use_spatial: bool,
    pub use_temporal: bool,
    pub use_meta: bool,

    pub train_videos: usize,
    pub val_videos: usize,
    pub test_videos: usize,
    pub segments_per_video: usize,
    pub frames_per_segment: usize,
    pub sigma: f64,
    pub ramp_min: f64,
    pub ramp_max: f64,

    /// Evaluation tasks per emotion.
    pub eval_tasks: usize,
    pub eval_split: Split,
    pub grid_split: Split,

    pub bench: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub curves: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let meta = MetaConfig::default();
        let episode = EpisodeConfig::default();
        let enc = EncoderConfig::default();
        let bench = BenchConfig::default();
        let gen = &bench.generator;
        Self {
            seed: 1,
            precision: Precision::F64,
            lambda1: enc.fuzzy.lambda1,
            lambda2: enc.fuzzy.lambda2,
            mode: meta.order,
            alpha: meta.alpha,
            beta: meta.beta,
            tasks_per_step: meta.tasks_per_step,
            inner_steps: meta.inner_steps,
            momentum: meta.momentum,
            second_moment: meta.second_moment,
            weight_decay: meta.weight_decay,
            k_support: episode.k_support,
            k_query: episode.k_query,
            outer_steps: 500,
            checkpoint_every: 100,
            d: enc.d,
            kernel: enc.kernel,
            layers: enc.layers,
            coding_weight: enc.coding_weight,
            use_fuzzy: enc.use_fuzzy,
            use_spatial: enc.use_spatial,
            use_temporal: enc.use_temporal,
            use_meta: true,
            train_videos: bench.train_videos,
            val_videos: bench.val_videos,
            test_videos: bench.test_videos,
            segments_per_video: gen.segments_per_video,
            frames_per_segment: gen.frames_per_segment,
            sigma: gen.sigma,
            ramp_min: gen.ramp_min,
            ramp_max: gen.ramp_max,
            eval_tasks: 10,
            eval_split: Split::Test,
            grid_split: Split::Val,
            bench: None,
            checkpoint: None,
            rules: None,
            curves: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

fn parse_split(key: &str, value: &str) -> Result<Split> {
    Split::ALL
        .into_iter()
        .find(|s| s.name() == value)
        .ok_or_else(|| Error::Config(format!("bad split `{value}` for `{key}`")))
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn mode_name(m: Order) -> &'static str {
    match m {
        Order::Second => "second_order",
        Order::First => "first_order",
    }
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl RunConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "precision" => self.precision = v.parse()?,
            "lambda1" => self.lambda1 = parse(key, v)?,
            "lambda2" => self.lambda2 = parse(key, v)?,
            "mode" => {
                self.mode = match v {
                    "second_order" => Order::Second,
                    "first_order" => Order::First,
                    _ => {
                        return Err(Error::Config(format!(
                            "mode must be second_order or first_order, got `{v}`"
                        )))
                    }
                }
            }
            "alpha" => self.alpha = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "tasks_per_step" => self.tasks_per_step = parse(key, v)?,
            "inner_steps" => self.inner_steps = parse(key, v)?,
            "momentum" => self.momentum = parse(key, v)?,
            "second_moment" => self.second_moment = parse(key, v)?,
            "weight_decay" => self.weight_decay = parse(key, v)?,
            "k_support" => self.k_support = parse(key, v)?,
            "k_query" => self.k_query = parse(key, v)?,
            "outer_steps" => self.outer_steps = parse(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "d" => self.d = parse(key, v)?,
            "kernel" => self.kernel = parse(key, v)?,
            "layers" => self.layers = parse(key, v)?,
            "coding_weight" => self.coding_weight = parse(key, v)?,
            "use_fuzzy" => self.use_fuzzy = parse_bool(key, v)?,
            "use_spatial" => self.use_spatial = parse_bool(key, v)?,
            "use_temporal" => self.use_temporal = parse_bool(key, v)?,
            "use_meta" => self.use_meta = parse_bool(key, v)?,
            "train_videos" => self.train_videos = parse(key, v)?,
            "val_videos" => self.val_videos = parse(key, v)?,
            "test_videos" => self.test_videos = parse(key, v)?,
            "segments_per_video" => self.segments_per_video = parse(key, v)?,
            "frames_per_segment" => self.frames_per_segment = parse(key, v)?,
            "sigma" => self.sigma = parse(key, v)?,
            "ramp_min" => self.ramp_min = parse(key, v)?,
            "ramp_max" => self.ramp_max = parse(key, v)?,
            "eval_tasks" => self.eval_tasks = parse(key, v)?,
            "eval_split" => self.eval_split = parse_split(key, v)?,
            "grid_split" => self.grid_split = parse_split(key, v)?,
            "bench" => self.bench = parse_path(v),
            "checkpoint" => self.checkpoint = parse_path(v),
            "rules" => self.rules = parse_path(v),
            "curves" => self.curves = parse_path(v),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_kind(&e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_kind(&e))))
    }

    /// All keys in a fixed order; parsing this text reproduces `self`.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("seed", self.seed.to_string());
        kv("precision", self.precision.bits().to_string());
        kv("lambda1", self.lambda1.to_string());
        kv("lambda2", self.lambda2.to_string());
        kv("mode", mode_name(self.mode).into());
        kv("alpha", self.alpha.to_string());
        kv("beta", self.beta.to_string());
        kv("tasks_per_step", self.tasks_per_step.to_string());
        kv("inner_steps", self.inner_steps.to_string());
        kv("momentum", self.momentum.to_string());
        kv("second_moment", self.second_moment.to_string());
        kv("weight_decay", self.weight_decay.to_string());
        kv("k_support", self.k_support.to_string());
        kv("k_query", self.k_query.to_string());
        kv("outer_steps", self.outer_steps.to_string());
        kv("checkpoint_every", self.checkpoint_every.to_string());
        kv("d", self.d.to_string());
        kv("kernel", self.kernel.to_string());
        kv("layers", self.layers.to_string());
        kv("coding_weight", self.coding_weight.to_string());
        kv("use_fuzzy", self.use_fuzzy.to_string());
        kv("use_spatial", self.use_spatial.to_string());
        kv("use_temporal", self.use_temporal.to_string());
        kv("use_meta", self.use_meta.to_string());
        kv("train_videos", self.train_videos.to_string());
        kv("val_videos", self.val_videos.to_string());
        kv("test_videos", self.test_videos.to_string());
        kv("segments_per_video", self.segments_per_video.to_string());
        kv("frames_per_segment", self.frames_per_segment.to_string());
        kv("sigma", self.sigma.to_string());
        kv("ramp_min", self.ramp_min.to_string());
        kv("ramp_max", self.ramp_max.to_string());
        kv("eval_tasks", self.eval_tasks.to_string());
        kv("eval_split", self.eval_split.name().into());
        kv("grid_split", self.grid_split.name().into());
        kv("bench", path_str(&self.bench));
        kv("checkpoint", path_str(&self.checkpoint));
        kv("rules", path_str(&self.rules));
        kv("curves", path_str(&self.curves));
        out
    }

    pub fn fuzzy(&self) -> FuzzyConfig {
        FuzzyConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
        }
    }

    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            d: self.d,
            kernel: self.kernel,
            layers: self.layers,
            use_fuzzy: self.use_fuzzy,
            use_spatial: self.use_spatial,
            use_temporal: self.use_temporal,
            coding_weight: self.coding_weight,
            fuzzy: self.fuzzy(),
        }
    }

    /// Bi-level settings; without meta-learning the inner rate is zero,
    /// which trains the initialization directly on query data.
    pub fn meta(&self) -> MetaConfig {
        MetaConfig {
            alpha: if self.use_meta { self.alpha } else { 0.0 },
            beta: self.beta,
            tasks_per_step: self.tasks_per_step,
            inner_steps: self.inner_steps,
            order: self.mode,
            momentum: self.momentum,
            second_moment: self.second_moment,
            weight_decay: self.weight_decay,
        }
    }

    pub fn episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            k_support: self.k_support,
            k_query: self.k_query,
        }
    }

    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            train_videos: self.train_videos,
            val_videos: self.val_videos,
            test_videos: self.test_videos,
            generator: GeneratorConfig {
                frames_per_segment: self.frames_per_segment,
                sigma: self.sigma,
                ramp_min: self.ramp_min,
                ramp_max: self.ramp_max,
                segments_per_video: self.segments_per_video,
            },
        }
    }

    /// Checks every section so that no work starts on a bad config.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(strip_kind(&e));
        self.encoder().validate().map_err(cfg_err)?;
        self.meta().validate().map_err(cfg_err)?;
        self.bench_config().generator.validate().map_err(cfg_err)?;
        if self.k_support == 0 || self.k_query == 0 {
            return Err(Error::Config(
                "k_support and k_query must be positive".into(),
            ));
        }
        if self.eval_tasks == 0 {
            return Err(Error::Config("eval_tasks must be positive".into()));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        if self.train_videos == 0 || self.val_videos == 0 || self.test_videos == 0 {
            return Err(Error::Config("every split needs at least one video".into()));
        }
        let min = self.encoder().min_frames();
        if self.frames_per_segment < min {
            return Err(Error::Config(format!(
                "frames_per_segment {} is below the temporal stack's minimum of {min}",
                self.frames_per_segment
            )));
        }
        Ok(())
    }
}

/// Error text without the kind prefix.
fn strip_kind(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Param(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("seed = 9\nlambda1 = 0.7 # comment\nuse_fuzzy = false\nbench = /tmp/b\nmode = first_order\n")
            .unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.seed, 9);
        assert!(!cfg.use_fuzzy);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let mut cfg = RunConfig::default();
        for bad in [
            "lamda1 = 0.4",
            "alpha = fast",
            "precision = 16",
            "no equals sign",
        ] {
            let e = cfg.apply_text(bad).unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}: {e}");
        }
    }

    #[test]
    fn validation_catches_ranges() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.lambda2 = 1.5;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = RunConfig::default();
        cfg.frames_per_segment = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.use_meta = false;
        assert_eq!(cfg.meta().alpha, 0.0);
    }
}
