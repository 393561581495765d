use fuzzymeta::fuzzy::{eccentricity, FuzzyRule, RuleBank};
use fuzzymeta::labels::EmotionClass;
use fuzzymeta::synth::{generate_video, BenchConfig, Benchmark, GeneratorConfig, Lifts, Split};
use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reference_bank() -> RuleBank {
    let full = RuleBank::default_bank();
    let rules: Vec<FuzzyRule> = full.rules()[..12].to_vec();
    RuleBank::new(12, rules).unwrap()
}

fn classes_of(bank: &RuleBank) -> Vec<EmotionClass> {
    bank.rules().iter().map(|r| r.class).collect()
}

#[test]
fn pseudo_inverse_recovers_codings_near_the_prototype() {
    let bank = RuleBank::default_bank();
    let cfg = GeneratorConfig::default();
    let lifts = Lifts::seeded(77);
    let lift = DMatrix::from_row_slice(12, lifts.visual.cols(), lifts.visual.data());
    let pinv = lift.clone().pseudo_inverse(1e-12).unwrap();

    let classes: Vec<EmotionClass> = EmotionClass::all().collect();
    for seed in 0..5 {
        let g = generate_video(
            &classes,
            &GeneratorConfig {
                segments_per_video: 18,
                ..cfg.clone()
            },
            &bank,
            &lifts,
            seed,
        )
        .unwrap();
        let v = g.video.visual();
        let visual = DMatrix::from_row_slice(v.rows(), v.cols(), v.data());
        let codings = visual * &pinv;
        let t = cfg.frames_per_segment;
        let tail = t / 4;
        for (s, class) in classes.iter().enumerate() {
            let mut mean = vec![0.0; 12];
            for row in (s + 1) * t - tail..(s + 1) * t {
                for (j, m) in mean.iter_mut().enumerate() {
                    *m += codings[(row, j)] / tail as f64;
                }
            }
            let e = eccentricity(&mean, &bank.prototype(*class).unwrap().prototype).unwrap();
            assert!(e < 0.1, "seed {seed} {class}: {e}");
        }
    }
}

#[test]
fn terminal_codings_are_separable_by_nearest_prototype() {
    let bank = reference_bank();
    let classes = classes_of(&bank);
    let lifts = Lifts::seeded(5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = GeneratorConfig {
        segments_per_video: 10,
        ..Default::default()
    };
    let mut total = 0;
    for seed in 0..100 {
        let labels: Vec<EmotionClass> = (0..10)
            .map(|_| *classes.choose(&mut rng).unwrap())
            .collect();
        let g = generate_video(&labels, &cfg, &bank, &lifts, seed).unwrap();
        for (s, class) in labels.iter().enumerate() {
            let last = g.codings.row((s + 1) * cfg.frames_per_segment - 1);
            let nearest = bank
                .rules()
                .iter()
                .min_by(|a, b| {
                    let da: f64 = last
                        .iter()
                        .zip(&a.prototype)
                        .map(|(x, y)| (x - y).abs())
                        .sum();
                    let db: f64 = last
                        .iter()
                        .zip(&b.prototype)
                        .map(|(x, y)| (x - y).abs())
                        .sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            assert_eq!(nearest.class, *class, "video {seed} segment {s}");
            total += 1;
        }
    }
    assert_eq!(total, 1000);
}

#[test]
fn benchmark_round_trips_through_disk() {
    let cfg = BenchConfig {
        train_videos: 4,
        val_videos: 2,
        test_videos: 3,
        ..Default::default()
    };
    let bench = Benchmark::generate(&cfg, &RuleBank::default_bank(), 12).unwrap();
    let dir = tempfile::tempdir().unwrap();
    bench.write_dir(dir.path()).unwrap();
    let back = Benchmark::read_dir(dir.path()).unwrap();
    for split in Split::ALL {
        assert_eq!(back.videos(split), bench.videos(split), "{split:?}");
        let seeds = |b: &Benchmark| b.split(split).iter().map(|v| v.seed).collect::<Vec<_>>();
        assert_eq!(seeds(&back), seeds(&bench));
    }
}

#[test]
fn benchmark_generation_is_deterministic() {
    let cfg = BenchConfig {
        train_videos: 3,
        val_videos: 1,
        test_videos: 1,
        ..Default::default()
    };
    let bank = RuleBank::default_bank();
    let a = Benchmark::generate(&cfg, &bank, 4).unwrap();
    let b = Benchmark::generate(&cfg, &bank, 4).unwrap();
    let c = Benchmark::generate(&cfg, &bank, 5).unwrap();
    assert_eq!(a.videos(Split::Train), b.videos(Split::Train));
    assert_ne!(a.videos(Split::Train), c.videos(Split::Train));
}
