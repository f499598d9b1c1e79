//! The generational loop.
//!
//! Every offspring slot is filled by crossover of two tournament winners (with
//! probability `crossover_rate`) or by reproduction of one winner; the result
//! is then independently wrapped in a semantic mutation with probability
//! `mutation_rate`. With elitism, slot 0 is a reproduction record of the
//! previous generation's best-by-training individual and is never mutated.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{Archive, IndividualRef, MutationMode, Origin, Perturbation, Record};
use crate::data::SplitDataset;
use crate::error::{Error, Result};
use crate::exprtree::{gen_tree, ramp_plan, ExprTree, GenMethod, TreeGenConfig};
use crate::selection::{SelectionDistribution, Selector};
use crate::semantics::semantics_of_tree;

/// Attempts per generation-0 slot before seeding gives up on non-finite semantics.
pub const SEED_ATTEMPTS: usize = 25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    /// Applications of the generational step after generation 0.
    pub generations: usize,
    pub max_initial_depth: usize,
    /// Max depth of the Grow trees used by crossover and mutation.
    pub random_tree_depth: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_step: f64,
    pub mutation_mode: MutationMode,
    pub tournament_size: usize,
    pub distribution: SelectionDistribution,
    pub elitism: bool,
    pub p_constant: f64,
    pub constant_range: [f64; 2],
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 100,
            max_initial_depth: 4,
            random_tree_depth: 4,
            crossover_rate: 0.9,
            mutation_rate: 0.3,
            mutation_step: 0.1,
            mutation_mode: MutationMode::Bounded,
            tournament_size: 4,
            distribution: SelectionDistribution::STANDARD,
            elitism: true,
            p_constant: 0.3,
            constant_range: [-1.0, 1.0],
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn tree_config(&self, max_depth: usize, n_features: usize) -> TreeGenConfig {
        TreeGenConfig {
            max_depth,
            n_features,
            constant_range: self.constant_range[0]..=self.constant_range[1],
            p_constant: self.p_constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {v} outside [0, 1]")))
            }
        };
        if self.population_size == 0 {
            return Err(Error::Config("population size must be at least 1".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::Config("tournament size must be at least 1".into()));
        }
        rate("crossover rate", self.crossover_rate)?;
        rate("mutation rate", self.mutation_rate)?;
        if !(self.mutation_step.is_finite() && self.mutation_step >= 0.0) {
            return Err(Error::Config(format!("mutation step {} must be finite and non-negative", self.mutation_step)));
        }
        self.distribution.validate()?;
        self.tree_config(self.max_initial_depth, 1).validate()
    }

    fn selector(&self) -> Selector {
        Selector::MultiGenerational { distribution: self.distribution, tournament_size: self.tournament_size }
    }
}

/// Tournament winners of a run, in draw order, and how far back each came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionLog {
    pub winners: Vec<IndividualRef>,
    /// `offset_histogram[o]` counts winners taken `o` generations before the previous one.
    pub offset_histogram: Vec<u64>,
}

impl SelectionLog {
    fn record(&mut self, building: usize, winner: IndividualRef) {
        let offset = building - 1 - winner.generation;
        if self.offset_histogram.len() <= offset {
            self.offset_histogram.resize(offset + 1, 0);
        }
        self.offset_histogram[offset] += 1;
        self.winners.push(winner);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Training RMSE of the best-by-training individual of each generation, generation 0 first.
    pub best_train_rmse: Vec<f64>,
    /// Test RMSE of that same individual.
    pub best_test_rmse: Vec<f64>,
    pub best: IndividualRef,
    pub selections: SelectionLog,
    pub records: usize,
    pub duration: Duration,
}

impl RunResult {
    pub fn final_train_rmse(&self) -> f64 {
        *self.best_train_rmse.last().expect("trajectory has generation 0")
    }

    pub fn final_test_rmse(&self) -> f64 {
        *self.best_test_rmse.last().expect("trajectory has generation 0")
    }
}

/// A finished run together with its archive.
pub struct Run {
    pub result: RunResult,
    pub archive: Archive,
}

/// Builds generation 0 with ramped half-and-half. A slot whose tree yields
/// non-finite semantics on either split is regenerated with the same method
/// and depth, up to [`SEED_ATTEMPTS`] times.
pub fn seed_population<R: Rng + ?Sized>(cfg: &EvolutionConfig, split: &SplitDataset, rng: &mut R) -> Result<Archive> {
    let n_features = split.train.n_features();
    let mut trees = Vec::with_capacity(cfg.population_size);
    for (slot, (method, depth)) in ramp_plan(cfg.max_initial_depth, cfg.population_size).into_iter().enumerate() {
        let tree_cfg = cfg.tree_config(depth, n_features);
        let mut attempt = 0;
        let tree = loop {
            attempt += 1;
            let t = gen_tree(&tree_cfg, method, rng);
            let check =
                semantics_of_tree(&t, &split.train.inputs).and_then(|_| semantics_of_tree(&t, &split.test.inputs));
            match check {
                Ok(_) => break t,
                Err(e) if attempt >= SEED_ATTEMPTS => {
                    return Err(Error::SeedingFailed { slot, attempts: attempt, source: Box::new(e) })
                }
                Err(Error::NonFinite { .. }) => continue,
                Err(e) => return Err(e),
            }
        };
        trees.push(tree);
    }
    Archive::seed(trees, split)
}

fn random_tree<R: Rng + ?Sized>(cfg: &EvolutionConfig, n_features: usize, rng: &mut R) -> ExprTree {
    gen_tree(&cfg.tree_config(cfg.random_tree_depth, n_features), GenMethod::Grow, rng)
}

/// Appends one generation of `cfg.population_size` offspring.
pub fn next_generation<R: Rng + ?Sized>(
    archive: &mut Archive,
    cfg: &EvolutionConfig,
    selector: &Selector,
    rng: &mut R,
    log: &mut SelectionLog,
) -> Result<()> {
    let building = archive.generation_count();
    if building == 0 {
        return Err(Error::NothingToSelect);
    }
    let n_features = archive.train().n_features();
    let mut records = Vec::with_capacity(cfg.population_size);
    if cfg.elitism {
        records.push(Record { origin: Origin::Copy(archive.best_in(building - 1)), mutation: None });
    }
    let mut select = |rng: &mut R| -> Result<IndividualRef> {
        let w = selector.select(archive, rng)?;
        log.record(building, w);
        Ok(w)
    };
    while records.len() < cfg.population_size {
        let origin = if rng.random_bool(cfg.crossover_rate) {
            let p1 = select(rng)?;
            let p2 = select(rng)?;
            Origin::Crossover { parents: [p1, p2], random_tree: random_tree(cfg, n_features, rng) }
        } else {
            Origin::Copy(select(rng)?)
        };
        let mutation = if rng.random_bool(cfg.mutation_rate) {
            let tree_a = random_tree(cfg, n_features, rng);
            let tree_b = match cfg.mutation_mode {
                MutationMode::Bounded => Some(random_tree(cfg, n_features, rng)),
                MutationMode::Raw => None,
            };
            Some(Perturbation { tree_a, tree_b, step: cfg.mutation_step })
        } else {
            None
        };
        records.push(Record { origin, mutation });
    }
    let offspring = {
        let archive = &*archive;
        records.into_par_iter().map(|r| archive.realize(r)).collect::<Result<Vec<_>>>()?
    };
    archive.push_generation(offspring)
}

/// Runs a full evolution with an explicit parent selector and keeps the archive.
pub fn evolve_with(cfg: &EvolutionConfig, split: &SplitDataset, selector: Selector) -> Result<Run> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut archive = seed_population(cfg, split, &mut rng)?;
    let mut log = SelectionLog::default();
    let mut best_train_rmse = Vec::with_capacity(cfg.generations + 1);
    let mut best_test_rmse = Vec::with_capacity(cfg.generations + 1);
    let mut push_best = |archive: &Archive| {
        let best = archive.best_in(archive.generation_count() - 1);
        let ind = archive.get(best).expect("best_in returns a stored ref");
        best_train_rmse.push(ind.train_fitness);
        best_test_rmse.push(ind.test_fitness);
        best
    };
    let mut best = push_best(&archive);
    for _ in 0..cfg.generations {
        next_generation(&mut archive, cfg, &selector, &mut rng, &mut log)?;
        best = push_best(&archive);
    }
    let result = RunResult {
        best_train_rmse,
        best_test_rmse,
        best,
        selections: log,
        records: archive.count_nodes().records,
        duration: started.elapsed(),
    };
    Ok(Run { result, archive })
}

pub fn evolve(cfg: &EvolutionConfig, split: &SplitDataset) -> Result<Run> {
    evolve_with(cfg, split, cfg.selector())
}

pub fn run_evolution(cfg: &EvolutionConfig, split: &SplitDataset) -> Result<RunResult> {
    evolve(cfg, split).map(|run| run.result)
}
