use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::{Precision, RunConfig};
use crate::autodiff::{read_checkpoint, write_checkpoint, ParamSet, Real};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::fuzzy::{annotate as annotate_coding, IntensityCurves, RuleBank};
use crate::labels::{Emotion, EmotionClass};
use crate::meta::{
    evaluate, fixed_tasks, train as train_loop, EncoderLearner, MetaState, Metrics, Prediction,
    StepLog,
};
use crate::synth::{Benchmark, NoiseKind, NoiseSpec, Split, SWEEP_LEVELS};
use crate::tasks::{LongVideo, MetaTask, TaskPool};

pub const CHECKPOINT: &str = "checkpoint.fzc";

/// File name of the config echo written by `command`.
pub fn config_echo_name(command: &str) -> String {
    format!("{command}_config.txt")
}

fn sampling_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_7A5C
}

fn eval_seed(seed: u64) -> u64 {
    seed ^ 0xE7A1_0000
}

fn noise_seed(seed: u64, kind: NoiseKind, video: usize) -> u64 {
    let k = NoiseKind::ALL.iter().position(|&x| x == kind).unwrap() as u64;
    (seed ^ 0x0153_0000)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((k << 32) + video as u64)
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok(BufReader::new(f))
}

fn f(v: f64) -> String {
    v.to_string()
}

pub fn load_bank(cfg: &RunConfig) -> Result<RuleBank> {
    match &cfg.rules {
        Some(p) => RuleBank::parse(&read_text(p)?),
        None => Ok(RuleBank::default_bank()),
    }
}

pub fn load_curves(cfg: &RunConfig) -> Result<IntensityCurves> {
    match &cfg.curves {
        Some(p) => IntensityCurves::parse(&read_text(p)?),
        None => Ok(IntensityCurves::default_curves()),
    }
}

fn bench_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.bench
        .as_deref()
        .ok_or_else(|| Error::Config("no benchmark directory (set `bench` or pass --bench)".into()))
}

fn load_bench(cfg: &RunConfig) -> Result<Benchmark> {
    let dir = bench_dir(cfg)?;
    Benchmark::read_dir(dir).map_err(|e| match e {
        Error::Io(io) => Error::Data(format!("benchmark {}: {io}", dir.display())),
        other => other,
    })
}

fn encoder(cfg: &RunConfig) -> Result<Encoder> {
    Encoder::new(cfg.encoder(), load_bank(cfg)?)
}

fn load_params<T: Real>(cfg: &RunConfig, enc: &Encoder) -> Result<ParamSet<T>> {
    let path = cfg.checkpoint.as_deref().ok_or_else(|| {
        Error::Config("no checkpoint (set `checkpoint` or pass --checkpoint)".into())
    })?;
    let params = read_checkpoint::<T, _>(open(path)?)?;
    enc.check_params(&params)?;
    Ok(params)
}

fn echo(cfg: &RunConfig, out: &Path, command: &str) -> Result<()> {
    write_atomic(&out.join(config_echo_name(command)), cfg.echo().as_bytes())
}

/// Generates a benchmark into `out`.
pub fn gen(cfg: &RunConfig, out: &Path) -> Result<Benchmark> {
    cfg.validate()?;
    let bank = load_bank(cfg)?;
    let bench = Benchmark::generate(&cfg.bench_config(), &bank, cfg.seed)?;
    // stage everything, then move it into place
    let stage = out.join(".gen-staging");
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(&stage)?;
    bench.write_dir(&stage)?;
    for split in Split::ALL {
        let dst = out.join(split.name());
        if dst.exists() {
            fs::remove_dir_all(&dst)?;
        }
        fs::rename(stage.join(split.name()), dst)?;
    }
    fs::rename(
        stage.join(crate::synth::MANIFEST),
        out.join(crate::synth::MANIFEST),
    )?;
    fs::remove_dir_all(&stage)?;
    echo(cfg, out, "gen")?;
    Ok(bench)
}

/// Meta-trains from a seeded initialization; writes the final checkpoint,
/// interval checkpoints, the training log and a separate timing log.
pub fn train(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F64 => train_as::<f64>(cfg, out),
        Precision::F32 => train_as::<f32>(cfg, out),
    }
}

fn train_as<T: Real>(cfg: &RunConfig, out: &Path) -> Result<()> {
    let enc = encoder(cfg)?;
    let bench = load_bench(cfg)?;
    let pool = TaskPool::from_videos(&bench.videos(Split::Train))?;
    let mut state = MetaState::new(enc.init_params::<T>(cfg.seed), cfg.meta())?;
    let mut log = format!("{}\n", StepLog::HEADER);
    let mut timing = String::from("step\twall_ms\n");
    let started = Instant::now();
    train_loop(
        &mut state,
        &enc,
        &pool,
        cfg.episode(),
        cfg.outer_steps,
        sampling_seed(cfg.seed),
        |entry, params| {
            log.push_str(&entry.tsv());
            log.push('\n');
            writeln!(timing, "{}\t{}", entry.step, entry.wall_ms).unwrap();
            if entry.step % 50 == 0 {
                eprintln!(
                    "step {:>5}  query loss {:.4}  query acc {:.3}  {:.1}s",
                    entry.step,
                    entry.query_loss,
                    entry.query_accuracy,
                    started.elapsed().as_secs_f64()
                );
            }
            if entry.step % cfg.checkpoint_every == 0 {
                let mut buf = Vec::new();
                write_checkpoint(params, &mut buf)?;
                let name = format!("step_{:06}.fzc", entry.step);
                write_atomic(&out.join("checkpoints").join(name), &buf)?;
            }
            Ok(())
        },
    )?;
    let mut buf = Vec::new();
    write_checkpoint(&state.params, &mut buf)?;
    write_atomic(&out.join(CHECKPOINT), &buf)?;
    write_atomic(&out.join("train_log.tsv"), log.as_bytes())?;
    write_atomic(&out.join("timing.tsv"), timing.as_bytes())?;
    echo(cfg, out, "train")
}

/// Evaluation tasks of `split`, after optional noise.
fn split_tasks(cfg: &RunConfig, videos: &[LongVideo]) -> Result<Vec<MetaTask>> {
    let pool = TaskPool::from_videos(videos)?;
    fixed_tasks(&pool, cfg.episode(), cfg.eval_tasks, eval_seed(cfg.seed))
}

fn class_names() -> Vec<String> {
    EmotionClass::all().map(|c| c.to_string()).collect()
}

fn confusion_csv(names: &[String], m: &[Vec<u64>]) -> String {
    let mut s = format!("true,{}\n", names.join(","));
    for (name, row) in names.iter().zip(m) {
        let counts: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(s, "{name},{}", counts.join(",")).unwrap();
    }
    s
}

/// Metrics CSV text.
pub fn metrics_csv(m: &Metrics) -> String {
    format!(
        "metric,value\ncount,{}\naccuracy18,{}\nrecall18,{}\naccuracy6,{}\nrecall6,{}\n",
        m.count,
        f(m.accuracy18),
        f(m.recall18),
        f(m.accuracy6),
        f(m.recall6)
    )
}

fn predictions_csv(preds: &[Prediction]) -> String {
    let names = class_names();
    let mut s = String::from("task,true,predicted\n");
    for p in preds {
        writeln!(s, "{},{},{}", p.task, names[p.label], names[p.predicted]).unwrap();
    }
    s
}

/// Adapts on and scores the evaluation split; writes metrics, both
/// confusion matrices and the raw prediction dump.
pub fn eval(cfg: &RunConfig, out: &Path) -> Result<Metrics> {
    cfg.validate()?;
    let (m, preds) = match cfg.precision {
        Precision::F64 => eval_as::<f64>(cfg)?,
        Precision::F32 => eval_as::<f32>(cfg)?,
    };
    let emotions: Vec<String> = Emotion::ALL.iter().map(|e| e.name().to_string()).collect();
    write_atomic(&out.join("metrics.csv"), metrics_csv(&m).as_bytes())?;
    write_atomic(
        &out.join("confusion18.csv"),
        confusion_csv(&class_names(), &m.confusion18).as_bytes(),
    )?;
    write_atomic(
        &out.join("confusion6.csv"),
        confusion_csv(&emotions, &m.confusion6).as_bytes(),
    )?;
    write_atomic(
        &out.join("predictions.csv"),
        predictions_csv(&preds).as_bytes(),
    )?;
    echo(cfg, out, "eval")?;
    Ok(m)
}

fn eval_as<T: Real>(cfg: &RunConfig) -> Result<(Metrics, Vec<Prediction>)> {
    let enc = encoder(cfg)?;
    let params = load_params::<T>(cfg, &enc)?;
    let bench = load_bench(cfg)?;
    let tasks = split_tasks(cfg, &bench.videos(cfg.eval_split))?;
    evaluate(
        &EncoderLearner { encoder: &enc },
        &params,
        &tasks,
        &cfg.meta(),
    )
}

/// One cell of the robustness table.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub kind: NoiseKind,
    pub level: f64,
    pub accuracy: f64,
    pub recall: f64,
}

/// Scores the evaluation split under every noise kind and sweep level.
pub fn robustness(cfg: &RunConfig, out: &Path) -> Result<Vec<RobustnessRow>> {
    cfg.validate()?;
    let rows = match cfg.precision {
        Precision::F64 => robustness_as::<f64>(cfg)?,
        Precision::F32 => robustness_as::<f32>(cfg)?,
    };
    let mut csv = String::from("noise,level,acc,recall\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            r.kind,
            f(r.level),
            f(r.accuracy),
            f(r.recall)
        )
        .unwrap();
    }
    write_atomic(&out.join("robustness.csv"), csv.as_bytes())?;
    echo(cfg, out, "robustness")?;
    Ok(rows)
}

fn robustness_as<T: Real>(cfg: &RunConfig) -> Result<Vec<RobustnessRow>> {
    let enc = encoder(cfg)?;
    let params = load_params::<T>(cfg, &enc)?;
    let bench = load_bench(cfg)?;
    let clean = bench.videos(cfg.eval_split);
    let learner = EncoderLearner { encoder: &enc };
    let mut rows = Vec::new();
    for kind in NoiseKind::ALL {
        for &level in &SWEEP_LEVELS {
            let noisy = clean
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    NoiseSpec::sweep(kind, level, noise_seed(cfg.seed, kind, i))?.apply(v)
                })
                .collect::<Result<Vec<_>>>()?;
            let tasks = split_tasks(cfg, &noisy)?;
            let (m, _) = evaluate(&learner, &params, &tasks, &cfg.meta())?;
            rows.push(RobustnessRow {
                kind,
                level,
                accuracy: m.accuracy18,
                recall: m.recall18,
            });
        }
    }
    Ok(rows)
}

/// One cell of the fuzzy-range surface.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub accuracy: f64,
    pub recall: f64,
}

/// Grid values 0.1, 0.2, ..., 0.9.
pub fn grid_values() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Highest-accuracy cell; the first in row-major order wins ties.
pub fn grid_argmax(cells: &[GridCell]) -> Option<&GridCell> {
    cells
        .iter()
        .fold(None, |best: Option<&GridCell>, c| match best {
            Some(b) if b.accuracy >= c.accuracy => Some(b),
            _ => Some(c),
        })
}

/// Re-runs fuzzy inference under every (lambda1, lambda2) pair with fixed
/// parameters and scores the grid split.
pub fn grid(cfg: &RunConfig, out: &Path) -> Result<Vec<GridCell>> {
    cfg.validate()?;
    let cells = match cfg.precision {
        Precision::F64 => grid_as::<f64>(cfg)?,
        Precision::F32 => grid_as::<f32>(cfg)?,
    };
    let mut csv = String::from("lambda1,lambda2,acc,recall\n");
    for c in &cells {
        writeln!(
            csv,
            "{},{},{},{}",
            f(c.lambda1),
            f(c.lambda2),
            f(c.accuracy),
            f(c.recall)
        )
        .unwrap();
    }
    let best = grid_argmax(&cells).expect("81 cells");
    let best_csv = format!(
        "lambda1,lambda2,acc,recall\n{},{},{},{}\n",
        f(best.lambda1),
        f(best.lambda2),
        f(best.accuracy),
        f(best.recall)
    );
    write_atomic(&out.join("grid.csv"), csv.as_bytes())?;
    write_atomic(&out.join("grid_best.csv"), best_csv.as_bytes())?;
    echo(cfg, out, "grid")?;
    Ok(cells)
}

fn grid_as<T: Real>(cfg: &RunConfig) -> Result<Vec<GridCell>> {
    let base = encoder(cfg)?;
    let params = load_params::<T>(cfg, &base)?;
    let bench = load_bench(cfg)?;
    let tasks = split_tasks(cfg, &bench.videos(cfg.grid_split))?;
    let mut cells = Vec::with_capacity(81);
    for &l1 in &grid_values() {
        for &l2 in &grid_values() {
            let enc = base.with_fuzzy(crate::fuzzy::FuzzyConfig::new(l1, l2)?)?;
            let (m, _) = evaluate(
                &EncoderLearner { encoder: &enc },
                &params,
                &tasks,
                &cfg.meta(),
            )?;
            cells.push(GridCell {
                lambda1: l1,
                lambda2: l2,
                accuracy: m.accuracy18,
                recall: m.recall18,
            });
        }
    }
    Ok(cells)
}

/// Parses one coding per non-empty line, values separated by commas or
/// whitespace.
pub fn parse_codings(text: &str, components: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad value `{t}`"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != components {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected {components} values, found {}", values.len()),
            });
        }
        out.push(values);
    }
    Ok(out)
}

/// Labels every coding of `input`; writes `annotations.csv`.
pub fn annotate(cfg: &RunConfig, input: &Path, out: &Path) -> Result<String> {
    cfg.validate()?;
    let bank = load_bank(cfg)?;
    let curves = load_curves(cfg)?;
    let codings = parse_codings(&read_text(input)?, bank.n_components())?;
    let mut csv = String::from("emotion,intensity,confidence\n");
    for o in &codings {
        let a = annotate_coding(o, &bank, &curves, &cfg.fuzzy())?;
        writeln!(
            csv,
            "{},{},{}",
            a.class.emotion,
            a.class.intensity,
            f(a.confidence)
        )
        .unwrap();
    }
    write_atomic(&out.join("annotations.csv"), csv.as_bytes())?;
    echo(cfg, out, "annotate")?;
    Ok(csv)
}
