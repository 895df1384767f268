//! Genetic feature selection: one GA per subset size L, identifier genes,
//! elitism plus roulette selection, alternating-gene crossover and
//! duplicate-guided mutation, stopped on stagnation.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_name, FEATURE_COUNT};
use crate::neural::{train, NetworkShape, Samples, TrainConfig};

/// A feature subset: distinct 1-based ids drawn from `1..=universe`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    genes: Vec<u16>,
}

impl Chromosome {
    pub fn new(genes: Vec<u16>, universe: usize) -> Result<Self> {
        if genes.is_empty() || genes.len() > universe {
            return Err(Error::InvalidInput(format!(
                "chromosome length {} outside 1..={universe}",
                genes.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &g in &genes {
            if g == 0 || g as usize > universe {
                return Err(Error::InvalidInput(format!("gene {g} outside 1..={universe}")));
            }
            if !seen.insert(g) {
                return Err(Error::InvalidInput(format!("duplicate gene {g}")));
            }
        }
        Ok(Self { genes })
    }

    pub fn genes(&self) -> &[u16] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Sorted genes; two chromosomes with the same set compare equal here.
    pub fn canonical(&self) -> Vec<u16> {
        let mut g = self.genes.clone();
        g.sort_unstable();
        g
    }

    fn random(len: usize, universe: usize, rng: &mut impl Rng) -> Self {
        let mut ids: Vec<u16> = (1..=universe as u16).collect();
        let (chosen, _) = ids.partial_shuffle(rng, len);
        Self { genes: chosen.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FitnessSplit {
    /// Fitness is accuracy on a fold carved from the training split.
    #[default]
    Validation,
    /// Fitness is accuracy on the test split.
    PaperTest,
}

impl std::str::FromStr for FitnessSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "validation" => Ok(Self::Validation),
            "paper-test" => Ok(Self::PaperTest),
            other => Err(Error::InvalidInput(format!(
                "fitness split {other:?} (expected validation or paper-test)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    /// Fixed population size for every L; derived from L when absent.
    pub population_size: Option<usize>,
    /// Fixed generation cap for every L; derived from L when absent.
    pub generation_cap: Option<usize>,
    pub stagnation_window: usize,
    pub elite_count: usize,
    pub crossover_probability: f64,
    pub mutation_probability: f64,
    pub seed: u64,
    /// Inclusive range of subset sizes to search.
    pub l_range: [usize; 2],
    pub fitness_split: FitnessSplit,
    /// Share of the training split held out for fitness in validation mode.
    pub validation_fraction: f64,
    /// Number of candidate ids.
    pub feature_count: usize,
    /// Training settings for fitness evaluation.
    pub fitness_training: TrainConfig,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: None,
            generation_cap: None,
            stagnation_window: 10,
            elite_count: 2,
            crossover_probability: 1.0,
            mutation_probability: 0.01,
            seed: 0,
            l_range: [1, FEATURE_COUNT],
            fitness_split: FitnessSplit::Validation,
            validation_fraction: 0.25,
            feature_count: FEATURE_COUNT,
            fitness_training: TrainConfig { max_epochs: 150, ..TrainConfig::default() },
        }
    }
}

impl GaConfig {
    /// `4 * clamp(round(64 / sqrt(L)), 6, 32)` unless overridden.
    pub fn population_for(&self, len: usize) -> usize {
        self.population_size.unwrap_or_else(|| {
            4 * ((64.0 / (len as f64).sqrt()).round() as usize).clamp(6, 32)
        })
    }

    /// `clamp(round(256 / sqrt(L)), 24, 160)` unless overridden.
    pub fn generation_cap_for(&self, len: usize) -> usize {
        self.generation_cap
            .unwrap_or_else(|| ((256.0 / (len as f64).sqrt()).round() as usize).clamp(24, 160))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if let Some(n) = self.population_size {
            if n < 4 || n % 4 != 0 {
                return bad(format!("population_size {n} must be a multiple of 4 and >= 4"));
            }
        }
        if self.generation_cap == Some(0) {
            return bad("generation_cap must be >= 1".into());
        }
        if self.stagnation_window == 0 {
            return bad("stagnation_window must be >= 1".into());
        }
        if self.elite_count >= 4 {
            return bad("elite_count must be < 4".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_probability)
            || !(0.0..=1.0).contains(&self.mutation_probability)
        {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)".into());
        }
        if self.feature_count == 0 || self.feature_count > u16::MAX as usize {
            return bad(format!("feature_count {} out of range", self.feature_count));
        }
        let [a, b] = self.l_range;
        if a == 0 || a > b || b > self.feature_count {
            return bad(format!("l_range {a}..{b} must lie within 1..{}", self.feature_count));
        }
        Ok(())
    }
}

/// Selection probabilities `f_i / sum f`; uniform when every fitness is zero.
pub fn roulette_probabilities(fits: &[f64]) -> Result<Vec<f64>> {
    if fits.is_empty() {
        return Err(Error::InvalidInput("empty population".into()));
    }
    if let Some(f) = fits.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::InvalidInput(format!("fitness {f} must be finite and >= 0")));
    }
    let total: f64 = fits.iter().sum();
    if total == 0.0 {
        return Ok(vec![1.0 / fits.len() as f64; fits.len()]);
    }
    Ok(fits.iter().map(|f| f / total).collect())
}

/// Draws one index with probability proportional to fitness.
pub fn roulette_select(fits: &[f64], rng: &mut impl Rng) -> Result<usize> {
    let probs = roulette_probabilities(fits)?;
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return Ok(i);
        }
    }
    // Rounding left `acc` a hair under 1: take the last nonzero slot.
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1))
}

/// Crossover at every gene boundary: children alternate genes starting from
/// their own parent. Children may hold duplicates until mutated.
pub fn crossover(p1: &[u16], p2: &[u16]) -> Result<(Vec<u16>, Vec<u16>)> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch(p1.len(), p2.len()));
    }
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for i in (1..p1.len()).step_by(2) {
        c1[i] = p2[i];
        c2[i] = p1[i];
    }
    Ok((c1, c2))
}

/// Repairs duplicates (later copies replaced by unused ids) or, on a
/// duplicate-free input, resets each gene to an unused id with probability
/// `rate`.
pub fn mutate(
    mut genes: Vec<u16>,
    universe: usize,
    rate: f64,
    rng: &mut impl Rng,
) -> Result<Chromosome> {
    if let Some(&g) = genes.iter().find(|&&g| g == 0 || g as usize > universe) {
        return Err(Error::InvalidInput(format!("gene {g} outside 1..={universe}")));
    }
    let mut used = vec![false; universe + 1];
    let mut dup_slots = Vec::new();
    for (i, &g) in genes.iter().enumerate() {
        if used[g as usize] {
            dup_slots.push(i);
        }
        used[g as usize] = true;
    }
    let draw_unused = |used: &mut Vec<bool>, rng: &mut _| -> Result<u16> {
        let pool: Vec<u16> = (1..=universe as u16).filter(|&id| !used[id as usize]).collect();
        let &id = pool_choice(&pool, rng).ok_or(Error::IdPoolExhausted)?;
        used[id as usize] = true;
        Ok(id)
    };
    if !dup_slots.is_empty() {
        for i in dup_slots {
            genes[i] = draw_unused(&mut used, rng)?;
        }
    } else if rate > 0.0 {
        for i in 0..genes.len() {
            if rng.random::<f64>() < rate && genes.len() < universe {
                let old = genes[i];
                genes[i] = draw_unused(&mut used, rng)?;
                used[old as usize] = false;
            }
        }
    }
    Chromosome::new(genes, universe)
}

fn pool_choice<'a>(pool: &'a [u16], rng: &mut impl Rng) -> Option<&'a u16> {
    if pool.is_empty() {
        None
    } else {
        Some(&pool[rng.random_range(0..pool.len())])
    }
}

/// Scores a sorted, distinct id subset. Implementations must be
/// deterministic in the subset.
pub trait Fitness: Sync {
    fn universe(&self) -> usize;
    fn evaluate(&self, ids: &[u16]) -> Result<f64>;
}

/// Memoizes a [`Fitness`] by canonical subset and evaluates batches in
/// parallel.
pub struct Evaluator<'a> {
    inner: &'a dyn Fitness,
    memo: RwLock<HashMap<Vec<u16>, f64>>,
    computed: AtomicUsize,
}

impl<'a> Evaluator<'a> {
    pub fn new(inner: &'a dyn Fitness) -> Self {
        Self { inner, memo: RwLock::new(HashMap::new()), computed: AtomicUsize::new(0) }
    }

    pub fn universe(&self) -> usize {
        self.inner.universe()
    }

    /// Number of underlying evaluations performed (memo misses).
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn distinct_seen(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    pub fn evaluate(&self, chrom: &Chromosome) -> Result<f64> {
        Ok(self.evaluate_all(std::slice::from_ref(chrom))?[0])
    }

    pub fn evaluate_all(&self, pop: &[Chromosome]) -> Result<Vec<f64>> {
        let keys: Vec<Vec<u16>> = pop.iter().map(Chromosome::canonical).collect();
        let missing: Vec<Vec<u16>> = {
            let memo = self.memo.read().expect("memo lock");
            let mut set: Vec<Vec<u16>> =
                keys.iter().filter(|k| !memo.contains_key(*k)).cloned().collect();
            set.sort();
            set.dedup();
            set
        };
        let fresh: Vec<(Vec<u16>, f64)> = missing
            .into_par_iter()
            .map(|k| {
                let f = self.inner.evaluate(&k)?;
                self.computed.fetch_add(1, Ordering::Relaxed);
                Ok((k, f))
            })
            .collect::<Result<_>>()?;
        let mut memo = self.memo.write().expect("memo lock");
        for (k, f) in fresh {
            memo.entry(k).or_insert(f);
        }
        Ok(keys.iter().map(|k| memo[k]).collect())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable seed for a subset, independent of evaluation order.
pub fn subset_seed(seed: u64, ids: &[u16]) -> u64 {
    ids.iter().fold(splitmix64(seed), |h, &id| splitmix64(h ^ u64::from(id)))
}

/// Accuracy of a network trained on the subset's columns.
pub struct BpnFitness {
    train: Samples,
    score: Samples,
    cfg: TrainConfig,
}

impl BpnFitness {
    pub fn new(train: Samples, score: Samples, cfg: TrainConfig) -> Result<Self> {
        if train.inputs() != score.inputs() {
            return Err(Error::DimensionMismatch { expected: train.inputs(), got: score.inputs() });
        }
        if score.is_empty() {
            return Err(Error::InvalidInput("empty fitness scoring set".into()));
        }
        Ok(Self { train, score, cfg })
    }
}

impl Fitness for BpnFitness {
    fn universe(&self) -> usize {
        self.train.inputs()
    }

    fn evaluate(&self, ids: &[u16]) -> Result<f64> {
        let cols: Vec<usize> = ids.iter().map(|&id| id as usize - 1).collect();
        let cfg = TrainConfig { seed: subset_seed(self.cfg.seed, ids), ..self.cfg };
        let model = train(&self.train.project(&cols), NetworkShape::for_inputs(ids.len()), &cfg)?;
        model.accuracy(&self.score.project(&cols))
    }
}

/// Stratified seeded split of row indices: about `fraction` of each class
/// goes to the second list.
pub fn stratified_split(labels: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    let mut held = Vec::new();
    let classes: BTreeSet<usize> = labels.iter().copied().collect();
    for c in classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        rows.shuffle(&mut rng);
        let n_held = (rows.len() as f64 * fraction).round() as usize;
        held.extend_from_slice(&rows[..n_held]);
        keep.extend_from_slice(&rows[n_held..]);
    }
    keep.sort_unstable();
    held.sort_unstable();
    (keep, held)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRecord {
    pub length: usize,
    pub best: Chromosome,
    pub fitness: f64,
    pub generations: usize,
    /// Best fitness of the population at generation 0, 1, ...
    pub history: Vec<f64>,
}

/// Runs the GA for one subset size. Needs `2 <= len < universe`.
pub fn run_ga_for_length(len: usize, eval: &Evaluator, cfg: &GaConfig) -> Result<LengthRecord> {
    let universe = eval.universe();
    if len < 2 || len >= universe {
        return Err(Error::InvalidInput(format!("GA length {len} outside 2..{universe}")));
    }
    let n = cfg.population_for(len);
    let cap = cfg.generation_cap_for(len);
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ (len as u64) << 32));

    let mut pop: Vec<Chromosome> = (0..n).map(|_| Chromosome::random(len, universe, &mut rng)).collect();
    let mut fits = eval.evaluate_all(&pop)?;
    let argmax = |fits: &[f64]| {
        let mut b = 0;
        for i in 1..fits.len() {
            if fits[i] > fits[b] {
                b = i;
            }
        }
        b
    };
    let b = argmax(&fits);
    let (mut best, mut best_fit) = (pop[b].clone(), fits[b]);
    let mut history = vec![best_fit];
    let mut stale = 0;
    let mut generations = 0;

    while generations < cap && stale < cfg.stagnation_window {
        generations += 1;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| fits[b].total_cmp(&fits[a]).then(a.cmp(&b)));
        let mut next: Vec<Chromosome> =
            order.iter().take(cfg.elite_count).map(|&i| pop[i].clone()).collect();
        while next.len() < n {
            let a = roulette_select(&fits, &mut rng)?;
            let b = roulette_select(&fits, &mut rng)?;
            let (c1, c2) = if rng.random::<f64>() < cfg.crossover_probability {
                crossover(pop[a].genes(), pop[b].genes())?
            } else {
                (pop[a].genes.clone(), pop[b].genes.clone())
            };
            next.push(mutate(c1, universe, cfg.mutation_probability, &mut rng)?);
            if next.len() < n {
                next.push(mutate(c2, universe, cfg.mutation_probability, &mut rng)?);
            }
        }
        pop = next;
        fits = eval.evaluate_all(&pop)?;
        let b = argmax(&fits);
        history.push(fits[b]);
        if fits[b] > best_fit {
            best_fit = fits[b];
            best = pop[b].clone();
            stale = 0;
        } else {
            stale += 1;
        }
    }
    Ok(LengthRecord { length: len, best, fitness: best_fit, generations, history })
}

fn exhaustive_singles(eval: &Evaluator) -> Result<LengthRecord> {
    let pop: Vec<Chromosome> =
        (1..=eval.universe() as u16).map(|id| Chromosome { genes: vec![id] }).collect();
    let fits = eval.evaluate_all(&pop)?;
    let mut b = 0;
    for i in 1..fits.len() {
        if fits[i] > fits[b] {
            b = i;
        }
    }
    Ok(LengthRecord {
        length: 1,
        best: pop[b].clone(),
        fitness: fits[b],
        generations: 0,
        history: vec![fits[b]],
    })
}

fn full_set(eval: &Evaluator) -> Result<LengthRecord> {
    let all = Chromosome { genes: (1..=eval.universe() as u16).collect() };
    let f = eval.evaluate(&all)?;
    Ok(LengthRecord { length: all.len(), best: all, fitness: f, generations: 0, history: vec![f] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub records: Vec<LengthRecord>,
    /// Index into `records` of the global best.
    pub best_index: usize,
    pub evaluations: usize,
}

impl SearchResult {
    pub fn global_best(&self) -> &LengthRecord {
        &self.records[self.best_index]
    }

    pub fn record(&self, len: usize) -> Option<&LengthRecord> {
        self.records.iter().find(|r| r.length == len)
    }

    /// `(L, best fitness)` for every searched size.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        self.records.iter().map(|r| (r.length, r.fitness)).collect()
    }
}

/// Searches every L in `cfg.l_range`: all singletons for L=1, the whole set
/// for L=universe, a GA otherwise. The global best is the fittest record,
/// the smaller L on ties.
pub fn full_search(fitness: &dyn Fitness, cfg: &GaConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let universe = fitness.universe();
    let [lo, hi] = cfg.l_range;
    if hi > universe {
        return Err(Error::InvalidInput(format!("l_range end {hi} exceeds {universe} features")));
    }
    let eval = Evaluator::new(fitness);
    let records: Vec<LengthRecord> = (lo..=hi)
        .into_par_iter()
        .map(|len| match len {
            1 => exhaustive_singles(&eval),
            l if l == universe => full_set(&eval),
            l => run_ga_for_length(l, &eval, cfg),
        })
        .collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, r) in records.iter().enumerate() {
        if r.fitness > records[best_index].fitness {
            best_index = i;
        }
    }
    Ok(SearchResult { records, best_index, evaluations: eval.computed() })
}

fn id_name(id: u16, universe: usize) -> String {
    match feature_name(id) {
        Some(n) if universe == FEATURE_COUNT => n.to_string(),
        _ => format!("feature_{id}"),
    }
}

/// Plain-text search report.
pub fn search_report(result: &SearchResult, universe: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# mammocad search report v1");
    let _ = writeln!(out, "fitness_evaluations: {}", result.evaluations);
    for r in &result.records {
        let ids = r.best.canonical();
        let _ = writeln!(
            out,
            "L={} fitness={:.6} generations={} ids=[{}]",
            r.length,
            r.fitness,
            r.generations,
            ids.iter().map(u16::to_string).collect::<Vec<_>>().join(",")
        );
        if r.length <= 32 {
            let names: Vec<String> = ids.iter().map(|&id| id_name(id, universe)).collect();
            let _ = writeln!(out, "  names: {}", names.join(", "));
        }
    }
    let g = result.global_best();
    let _ = writeln!(out, "\n[global best]\nL={} fitness={:.6}", g.length, g.fitness);
    for id in g.best.canonical() {
        let _ = writeln!(out, "  {id:>3} {}", id_name(id, universe));
    }
    out
}

/// CSV of the per-L curve: `length,fitness,generations`.
pub fn curve_csv(result: &SearchResult) -> String {
    let mut out = String::from("length,fitness,generations\n");
    for r in &result.records {
        let _ = writeln!(out, "{},{},{}", r.length, r.fitness, r.generations);
    }
    out
}
