//! Command-line front end: run configuration and the report-writing
//! commands.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{
    annotate, config_echo_name, eval, gen, grid, grid_argmax, grid_values, load_bank, load_curves,
    metrics_csv, parse_codings, robustness, train, write_atomic, GridCell, RobustnessRow,
    CHECKPOINT,
};
pub use config::{Precision, RunConfig};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "fuzzymeta",
    version,
    about = "Fuzzy-rule guided meta-learning for fine-grained emotion recognition"
)]
pub struct Cli {
    /// `key = value` config file applied over the defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fuzzymeta-out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_parser = ["64", "32"])]
    pub precision: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Ablations {
    /// Drop the fuzzy semantic features.
    #[arg(long)]
    pub no_fuzzy: bool,
    /// Skip task-graph message passing.
    #[arg(long)]
    pub no_spatial: bool,
    /// Use width-1 temporal kernels.
    #[arg(long)]
    pub no_temporal: bool,
    /// Train single-level, without inner adaptation.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Benchmark directory written by `gen`.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// Checkpoint written by `train`; its training config is picked up
    /// from the same directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub ablations: Ablations,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic benchmark.
    Gen,
    /// Meta-train the encoder.
    Train {
        #[arg(long)]
        bench: Option<PathBuf>,
        #[arg(long)]
        outer_steps: Option<usize>,
        #[command(flatten)]
        ablations: Ablations,
    },
    /// Accuracy, recall and confusion matrices on held-out tasks.
    Eval(ModelArgs),
    /// Accuracy under fog, mask and distortion at every sweep level.
    Robustness(ModelArgs),
    /// Accuracy surface over the two fuzzy ranges.
    Grid(ModelArgs),
    /// Label component codings with (emotion, intensity, confidence).
    Annotate {
        /// One coding per line.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        curves: Option<PathBuf>,
    },
}

impl Ablations {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.no_fuzzy {
            cfg.use_fuzzy = false;
        }
        if self.no_spatial {
            cfg.use_spatial = false;
        }
        if self.no_temporal {
            cfg.use_temporal = false;
        }
        if self.no_meta {
            cfg.use_meta = false;
        }
    }
}

impl Cli {
    /// Applies the config file and then the flags over `base`.
    fn layer(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(p) = &self.precision {
            cfg.precision = p.parse()?;
        }
        match &self.command {
            Command::Gen => {}
            Command::Train {
                bench,
                outer_steps,
                ablations,
            } => {
                if let Some(b) = bench {
                    cfg.bench = Some(b.clone());
                }
                if let Some(n) = outer_steps {
                    cfg.outer_steps = *n;
                }
                ablations.apply(&mut cfg);
            }
            Command::Eval(m) | Command::Robustness(m) | Command::Grid(m) => {
                if let Some(b) = &m.bench {
                    cfg.bench = Some(b.clone());
                }
                if let Some(c) = &m.checkpoint {
                    cfg.checkpoint = Some(c.clone());
                }
                m.ablations.apply(&mut cfg);
            }
            Command::Annotate { rules, curves, .. } => {
                if let Some(r) = rules {
                    cfg.rules = Some(r.clone());
                }
                if let Some(c) = curves {
                    cfg.curves = Some(c.clone());
                }
            }
        }
        Ok(cfg)
    }

    /// Effective configuration. Commands that load a checkpoint start from
    /// the training run's echoed config when it sits next to the checkpoint.
    pub fn resolve(&self) -> Result<RunConfig> {
        let cfg = self.layer(RunConfig::default())?;
        if !matches!(
            self.command,
            Command::Eval(_) | Command::Robustness(_) | Command::Grid(_)
        ) {
            return Ok(cfg);
        }
        let trained = cfg
            .checkpoint
            .as_deref()
            .and_then(Path::parent)
            .map(|dir| dir.join(config_echo_name("train")))
            .filter(|p| p.is_file());
        match trained {
            Some(path) => {
                let mut base = RunConfig::default();
                base.apply_file(&path)?;
                let mut cfg = self.layer(base)?;
                // the echo has no checkpoint; keep the one that led here
                cfg.checkpoint = self.layer(RunConfig::default())?.checkpoint;
                Ok(cfg)
            }
            None => Ok(cfg),
        }
    }

    pub fn run(&self) -> Result<()> {
        let cfg = self.resolve()?;
        let out = &self.out;
        match &self.command {
            Command::Gen => {
                let b = gen(&cfg, out)?;
                println!(
                    "wrote {} train, {} val, {} test videos to {}",
                    b.train.len(),
                    b.val.len(),
                    b.test.len(),
                    out.display()
                );
            }
            Command::Train { .. } => {
                train(&cfg, out)?;
                println!("wrote {}", out.join(CHECKPOINT).display());
            }
            Command::Eval(_) => {
                let m = eval(&cfg, out)?;
                print!("{}", metrics_csv(&m));
            }
            Command::Robustness(_) => {
                for r in robustness(&cfg, out)? {
                    println!(
                        "{:<10} {:.1}  acc {:.4}  recall {:.4}",
                        r.kind, r.level, r.accuracy, r.recall
                    );
                }
            }
            Command::Grid(_) => {
                let cells = grid(&cfg, out)?;
                let best = grid_argmax(&cells).expect("non-empty grid");
                println!(
                    "best lambda1 {} lambda2 {}: acc {:.4} recall {:.4}",
                    best.lambda1, best.lambda2, best.accuracy, best.recall
                );
            }
            Command::Annotate { input, .. } => {
                let csv = annotate(&cfg, input, out)?;
                println!("annotated {} codings", csv.lines().count() - 1);
            }
        }
        Ok(())
    }
}
