//! The outer (1+1) EA that evolves an instance's cost parameters so one
//! solver reliably beats another.
//!
//! Each generation mutates the (mu, sigma2) vectors with per-node Gaussian
//! steps, recomputes the budget from the new expected values, scores the
//! offspring by the ratio (or discounting) fitness, and keeps the better of
//! parent and offspring. Both mutation scales self-adapt by the 1/5 success
//! rule. The parent's fitness is frozen at its own evaluation; stochastic
//! re-evaluation is available behind a flag.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::instance::{compute_budget, init_random, StochasticInstance};
use crate::ratio::{discounted_fitness, paired_ratios, Confidence, RatioStats, DEFAULT_EPSILON};
use crate::seed::mix3;
use crate::solvers::{run_batch, Algorithm, SolverConfig};

/// 1/5-rule step factor: multiply by F on success, F^(-1/4) on failure.
pub const ADAPT_FACTOR: f64 = 1.5;
/// Lower clamp for both mutation scales.
pub const SIGMA_MIN: f64 = 1e-3;

// Seed-ladder tags.
const TAG_INIT: u64 = 0x01;
const TAG_MUTATE: u64 = 0x02;
const TAG_EVAL: u64 = 0x03;
const TAG_REEVAL: u64 = 0x04;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    /// Mean of per-run performance ratios.
    Ratio,
    /// Mean minus k_alpha sample standard deviations.
    Discounted,
}

impl FitnessKind {
    pub fn parse(s: &str) -> Result<FitnessKind> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(FitnessKind::Ratio),
            "discounted" => Ok(FitnessKind::Discounted),
            other => Err(Error::Config(format!(
                "unknown fitness kind {other:?} (expected ratio or discounted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolverConfig {
    pub easy_algo: Algorithm,
    pub hard_algo: Algorithm,
    pub fitness_kind: FitnessKind,
    pub confidence: Confidence,
    pub inner_runs: usize,
    pub inner_budget: usize,
    /// Total outer fitness evaluations, counting the initial instance.
    pub outer_budget: usize,
    pub p_m: f64,
    pub sigma1_init: f64,
    pub sigma2_init: f64,
    pub mu_max: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Re-evaluate the parent with fresh seeds every generation instead of
    /// freezing its fitness (for noise studies).
    pub reevaluate_parent: bool,
    pub fga_beta: f64,
    pub sa_t0: Option<f64>,
    pub sa_cool: Option<f64>,
}

impl EvolverConfig {
    pub fn new(easy: Algorithm, hard: Algorithm, seed: u64) -> Self {
        EvolverConfig {
            easy_algo: easy,
            hard_algo: hard,
            fitness_kind: FitnessKind::Ratio,
            confidence: Confidence::C99,
            inner_runs: 10,
            inner_budget: 10_000,
            outer_budget: 10_000,
            p_m: 1.0,
            sigma1_init: 10.0,
            sigma2_init: 33.0,
            mu_max: 1000.0,
            alpha: 0.05,
            epsilon: DEFAULT_EPSILON,
            seed,
            reevaluate_parent: false,
            fga_beta: 1.5,
            sa_t0: None,
            sa_cool: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_m > 0.0 && self.p_m <= 1.0) {
            return Err(Error::Config(format!("p_m {} outside (0, 1]", self.p_m)));
        }
        if self.sigma1_init <= 0.0 || self.sigma2_init <= 0.0 {
            return Err(Error::Config("mutation scales must be positive".into()));
        }
        if self.inner_runs == 0 || self.inner_budget == 0 || self.outer_budget == 0 {
            return Err(Error::Config("budgets must be at least 1".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if self.mu_max <= 0.0 {
            return Err(Error::Config(format!(
                "mu_max {} must be positive",
                self.mu_max
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    fn solver_config(&self, algorithm: Algorithm) -> SolverConfig {
        SolverConfig {
            algorithm,
            eval_budget: self.inner_budget,
            seed: 0, // replaced per run by run_batch
            fga_beta: self.fga_beta,
            sa_t0: self.sa_t0,
            sa_cool: self.sa_cool,
            record_trajectory: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionLogEntry {
    pub generation: usize,
    /// Offspring fitness this generation (initial instance for generation 0).
    pub fitness: f64,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    /// Mutation scales used to produce this generation's offspring.
    pub sigma1: f64,
    pub sigma2: f64,
    pub budget: f64,
    pub accepted: bool,
    /// Stored parent fitness after selection.
    pub best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best_instance: StochasticInstance,
    pub best_fitness: f64,
    pub best_stats: RatioStats,
    pub log: Vec<EvolutionLogEntry>,
    pub final_sigma1: f64,
    pub final_sigma2: f64,
}

/// Gaussian perturbation of every node's (mu, sigma2) with probability `p_m`,
/// clamped to the model ranges. The variance clamp uses the post-mutation
/// mean, so offspring always satisfy sigma2 <= mu^2/3. The budget is
/// recomputed from the new expected values; the parent is left untouched.
pub fn mutate_instance(
    parent: &StochasticInstance,
    sigma1: f64,
    sigma2: f64,
    p_m: f64,
    seed: u64,
) -> StochasticInstance {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let step_mu = Normal::new(0.0, sigma1).expect("positive sigma1");
    let step_var = Normal::new(0.0, sigma2).expect("positive sigma2");
    let mut child = parent.clone();
    for i in 0..child.mu.len() {
        if p_m < 1.0 && rng.random::<f64>() >= p_m {
            continue;
        }
        let a = step_mu.sample(&mut rng);
        let b = step_var.sample(&mut rng);
        let mu = (child.mu[i] + a).clamp(0.0, child.mu_max);
        let var_max = mu * mu / 3.0;
        child.mu[i] = mu;
        child.sigma2[i] = (child.sigma2[i] + b).clamp(0.0, var_max);
    }
    child.budget = compute_budget(&child.mu);
    child
}

/// 1/5 success rule step: grow by F on success, shrink by F^(-1/4) otherwise,
/// clamped to [lo, hi].
pub fn adapt_sigma(sigma: f64, success: bool, lo: f64, hi: f64) -> f64 {
    let factor = if success {
        ADAPT_FACTOR
    } else {
        ADAPT_FACTOR.powf(-0.25)
    };
    (sigma * factor).clamp(lo, hi)
}

/// Score one instance: batch-run both algorithms with generation-derived
/// seeds, pair the ratios, and apply the configured fitness.
pub fn evaluate_instance(
    inst: &StochasticInstance,
    g: &Graph,
    cfg: &EvolverConfig,
    eval_seed: u64,
) -> Result<(f64, RatioStats)> {
    let easy = run_batch(
        &cfg.solver_config(cfg.easy_algo),
        inst,
        g,
        cfg.inner_runs,
        eval_seed,
    )?;
    let hard = run_batch(
        &cfg.solver_config(cfg.hard_algo),
        inst,
        g,
        cfg.inner_runs,
        eval_seed,
    )?;
    let ratios = paired_ratios(&easy, &hard, cfg.epsilon)?;
    let stats = discounted_fitness(&ratios, cfg.confidence, cfg.epsilon)?;
    let fitness = match cfg.fitness_kind {
        FitnessKind::Ratio => stats.mean,
        FitnessKind::Discounted => stats.discounted,
    };
    Ok((fitness, stats))
}

/// Run the outer (1+1) EA to budget exhaustion.
pub fn evolve(g: &Graph, cfg: &EvolverConfig) -> Result<EvolveOutcome> {
    cfg.validate()?;
    let sigma1_hi = cfg.mu_max;
    let sigma2_hi = cfg.mu_max * cfg.mu_max / 3.0;

    let mut parent = init_random(g, cfg.mu_max, cfg.alpha, mix3(cfg.seed, TAG_INIT, 0))?;
    let (mut parent_fitness, mut parent_stats) =
        evaluate_instance(&parent, g, cfg, mix3(cfg.seed, TAG_EVAL, 0))?;
    let mut evals = 1usize;

    let mut sigma1 = cfg.sigma1_init;
    let mut sigma2 = cfg.sigma2_init;
    let mut log = vec![EvolutionLogEntry {
        generation: 0,
        fitness: parent_fitness,
        mean_ratio: parent_stats.mean,
        std_ratio: parent_stats.std,
        sigma1,
        sigma2,
        budget: parent.budget,
        accepted: true,
        best_fitness: parent_fitness,
    }];

    let mut generation = 0usize;
    while evals < cfg.outer_budget {
        generation += 1;
        if cfg.reevaluate_parent {
            if evals + 2 > cfg.outer_budget {
                break;
            }
            let (pf, ps) = evaluate_instance(&parent, g, cfg, mix3(cfg.seed, TAG_REEVAL, generation as u64))?;
            evals += 1;
            parent_fitness = pf;
            parent_stats = ps;
        }
        let child = mutate_instance(
            &parent,
            sigma1,
            sigma2,
            cfg.p_m,
            mix3(cfg.seed, TAG_MUTATE, generation as u64),
        );
        let (child_fitness, child_stats) =
            evaluate_instance(&child, g, cfg, mix3(cfg.seed, TAG_EVAL, generation as u64))?;
        evals += 1;

        // Ties are accepted for plateau drift, but only strict improvements
        // count as 1/5-rule successes.
        let success = child_fitness > parent_fitness;
        let accepted = child_fitness >= parent_fitness;
        let entry_sigma1 = sigma1;
        let entry_sigma2 = sigma2;
        let child_budget = child.budget;
        if accepted {
            parent = child;
            parent_fitness = child_fitness;
            parent_stats = child_stats.clone();
        }
        sigma1 = adapt_sigma(sigma1, success, SIGMA_MIN, sigma1_hi);
        sigma2 = adapt_sigma(sigma2, success, SIGMA_MIN, sigma2_hi);

        log.push(EvolutionLogEntry {
            generation,
            fitness: child_fitness,
            mean_ratio: child_stats.mean,
            std_ratio: child_stats.std,
            sigma1: entry_sigma1,
            sigma2: entry_sigma2,
            budget: child_budget,
            accepted,
            best_fitness: parent_fitness,
        });
    }

    Ok(EvolveOutcome {
        best_instance: parent,
        best_fitness: parent_fitness,
        best_stats: parent_stats,
        log,
        final_sigma1: sigma1,
        final_sigma2: sigma2,
    })
}
