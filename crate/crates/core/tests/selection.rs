mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use mammocad::gafs::{
    full_search, mutate, roulette_select, run_ga_for_length, search_report, BpnFitness, Chromosome,
    Evaluator, Fitness, GaConfig,
};
use mammocad::neural::{
    gradient_check, train, train_traced, Model, NetworkShape, Samples, TrainConfig,
};
use mammocad::Result;
use rand::Rng;

/// Fitness from a fixed table of per-id weights with a pairwise bonus, so the
/// optimum for any L can be enumerated.
struct TableFitness {
    weights: Vec<f64>,
    calls: AtomicUsize,
}

impl TableFitness {
    fn new(seed: u64, universe: usize) -> Self {
        let mut r = common::rng(seed);
        Self { weights: (0..universe).map(|_| r.random_range(0.0..1.0)).collect(), calls: AtomicUsize::new(0) }
    }

    fn score(&self, ids: &[u16]) -> f64 {
        let base: f64 = ids.iter().map(|&i| self.weights[i as usize - 1]).sum();
        let pair = ids.iter().map(|&i| (i as f64 * 0.37).sin()).product::<f64>().abs();
        (base / ids.len() as f64 + 0.3 * pair) / 1.3
    }
}

impl Fitness for TableFitness {
    fn universe(&self) -> usize {
        self.weights.len()
    }

    fn evaluate(&self, ids: &[u16]) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.score(ids))
    }
}

#[test]
fn roulette_matches_proportions() {
    let mut r = common::rng(1);
    let fits = [1.0, 0.0, 4.0, 5.0];
    let draws = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[roulette_select(&fits, &mut r).unwrap()] += 1;
    }
    assert_eq!(counts[1], 0);
    for (k, p) in [0.1, 0.0, 0.4, 0.5].into_iter().enumerate() {
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!((counts[k] as f64 - draws as f64 * p).abs() <= 3.0 * sigma.max(1.0), "slot {k}: {}", counts[k]);
    }
    let mut counts = [0usize; 4];
    for _ in 0..40_000 {
        counts[roulette_select(&[0.0; 4], &mut r).unwrap()] += 1;
    }
    let sigma = (40_000.0f64 * 0.25 * 0.75).sqrt();
    assert!(counts.iter().all(|&c| (c as f64 - 10_000.0).abs() <= 3.0 * sigma), "{counts:?}");
}

#[test]
fn mutation_rate_is_per_gene() {
    let mut r = common::rng(2);
    let (len, universe, rate, trials) = (20, 130, 0.05, 5_000);
    let mut changed = 0usize;
    for _ in 0..trials {
        let genes = common::random_ids(len, universe as u16, &[], &mut r);
        let out = mutate(genes.clone(), universe, rate, &mut r).unwrap();
        changed += genes.iter().zip(out.genes()).filter(|(a, b)| a != b).count();
        let mut g = out.canonical();
        g.dedup();
        assert_eq!(g.len(), len);
    }
    let n = (len * trials) as f64;
    let sigma = (n * rate * (1.0 - rate)).sqrt();
    assert!((changed as f64 - n * rate).abs() <= 3.0 * sigma, "{changed} of {n}");
}

#[test]
fn mutation_reports_exhausted_pool() {
    let mut r = common::rng(3);
    let err = mutate(vec![1, 1, 2], 2, 0.0, &mut r).unwrap_err();
    assert_eq!(err.code(), "id-pool-exhausted");
    assert!(Chromosome::new(vec![3, 3], 10).is_err());
    assert!(Chromosome::new(vec![11], 10).is_err());
}

#[test]
fn ga_finds_best_pair_in_small_universe() {
    let mut hits = 0;
    for seed in 0..10 {
        let fit = TableFitness::new(40 + seed, 10);
        let mut best = f64::MIN;
        for a in 1..=10u16 {
            for b in a + 1..=10 {
                best = best.max(fit.score(&[a, b]));
            }
        }
        let eval = Evaluator::new(&fit);
        // A small population loses ids fast; extra mutation keeps the pool open.
        let cfg = GaConfig { population_size: Some(16), mutation_probability: 0.05, seed, feature_count: 10, ..GaConfig::default() };
        let rec = run_ga_for_length(2, &eval, &cfg).unwrap();
        assert!(rec.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(rec.history.len(), rec.generations + 1);
        if rec.fitness == best {
            hits += 1;
        }
    }
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn search_memoizes_and_prefers_smaller_sizes() {
    struct Flat;
    impl Fitness for Flat {
        fn universe(&self) -> usize {
            12
        }
        fn evaluate(&self, _: &[u16]) -> Result<f64> {
            Ok(0.5)
        }
    }
    let cfg = GaConfig { l_range: [1, 12], feature_count: 12, population_size: Some(8), ..GaConfig::default() };
    let res = full_search(&Flat, &cfg).unwrap();
    assert_eq!(res.global_best().length, 1);
    assert_eq!(res.records.len(), 12);
    assert_eq!(res.record(12).unwrap().best.len(), 12);

    let fit = TableFitness::new(5, 30);
    let cfg = GaConfig { l_range: [1, 6], feature_count: 30, seed: 4, ..GaConfig::default() };
    let res = full_search(&fit, &cfg).unwrap();
    assert_eq!(res.evaluations, fit.calls.load(Ordering::SeqCst));
    let best = res.records.iter().map(|r| r.fitness).fold(f64::MIN, f64::max);
    assert_eq!(res.global_best().fitness, best);
    let again = full_search(&fit, &cfg).unwrap();
    assert_eq!(res, again);
    let report = search_report(&res, 30);
    assert!(report.lines().count() >= 6);
}

#[test]
fn informative_subset_beats_noise_subset() {
    let informative = [7u16, 23, 41, 64, 88, 115];
    let mut wins = 0;
    for seed in 0..10 {
        let d = common::informative_design(seed, &informative);
        let mut r = common::rng(seed + 100);
        let noise = common::random_ids(6, 130, &informative, &mut r);
        let n = d.train.len();
        let rows: Vec<usize> = (0..n).collect();
        let (fit_rows, score_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| i % 4 != 3);
        let fit = BpnFitness::new(
            d.train.subset(&fit_rows),
            d.train.subset(&score_rows),
            TrainConfig { max_epochs: 150, seed, ..TrainConfig::default() },
        )
        .unwrap();
        let mut ids = informative.to_vec();
        ids.sort();
        let mut noise_sorted = noise.clone();
        noise_sorted.sort();
        if fit.evaluate(&ids).unwrap() > fit.evaluate(&noise_sorted).unwrap() {
            wins += 1;
        }
    }
    assert_eq!(wins, 10);
}

fn blobs(seed: u64, inputs: usize) -> Samples {
    let mut r = common::rng(seed);
    let centers: Vec<Vec<f64>> = (0..4).map(|_| (0..inputs).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..80 {
        let c = i % 4;
        x.extend(centers[c].iter().map(|v| v + r.random_range(-0.2..0.2)));
        y.push(c);
    }
    Samples::new(inputs, x, y).unwrap()
}

#[test]
fn loss_never_increases_across_epochs() {
    for seed in 0..10 {
        let data = blobs(seed, 2 + seed as usize % 5);
        let cfg = TrainConfig { momentum: 0.0, max_epochs: 80, seed, early_stop_patience: 1000, ..TrainConfig::default() };
        let (model, history) = train_traced(&data, NetworkShape::for_inputs(data.inputs()), &cfg).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0]), "seed {seed}");
        assert!(history.last().unwrap() < &history[0]);
        assert_eq!(model.training.final_loss, *history.last().unwrap());
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = common::rng(6);
    for s in 0..20 {
        let shape = NetworkShape::with_hidden(r.random_range(1..=30), r.random_range(1..=20));
        let err = gradient_check(shape, 1000 + s).unwrap();
        assert!(err < 1e-4, "{shape:?}: {err}");
    }
}

#[test]
fn saved_model_predicts_identically() {
    let data = blobs(7, 3);
    let model = train(&data, NetworkShape::for_inputs(3), &TrainConfig { seed: 7, ..TrainConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let back = Model::load(&path).unwrap();
    assert_eq!(back.parameters(), model.parameters());
    for i in 0..data.len() {
        assert_eq!(back.predict(data.row(i)).unwrap(), model.predict(data.row(i)).unwrap());
    }
    assert!(model.accuracy(&data).unwrap() > 0.9);
    assert_eq!(model.predict(&[0.0; 2]).unwrap_err().code(), "dimension-mismatch");
}

#[test]
fn training_is_seed_deterministic() {
    let data = blobs(8, 4);
    let cfg = TrainConfig { seed: 99, max_epochs: 40, ..TrainConfig::default() };
    let a = train(&data, NetworkShape::for_inputs(4), &cfg).unwrap();
    let b = train(&data, NetworkShape::for_inputs(4), &cfg).unwrap();
    assert_eq!(a.parameters(), b.parameters());
    let c = train(&data, NetworkShape::for_inputs(4), &TrainConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.parameters(), c.parameters());
}
