//! Five baseline randomized heuristics over bitstrings, maximizing the
//! penalized coverage fitness under a fixed evaluation budget.
//!
//! All solvers start from the all-zeros solution (feasible by construction,
//! fitness 0) and report the elitist best-so-far result. The initial
//! evaluation counts against the budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::instance::{BitSolution, StochasticInstance};
use crate::seed::mix3;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// (1+1) EA: standard bit mutation with rate 1/n, accept if >=.
    Ea,
    /// Randomized local search: one uniform random bit flip, accept if >=.
    Rls,
    /// Greedy hill climber: deterministic scan 0..n-1 repeating, accept if >=.
    Ghc,
    /// Fast GA: heavy-tailed mutation strength r ~ r^(-beta) on {1..n/2}.
    Fga,
    /// Simulated annealing: single bit flip, Metropolis acceptance under
    /// geometric cooling.
    Sa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ea,
        Algorithm::Rls,
        Algorithm::Ghc,
        Algorithm::Fga,
        Algorithm::Sa,
    ];

    /// Stable id used in the seeding ladder.
    pub fn id(self) -> u64 {
        match self {
            Algorithm::Ea => 0,
            Algorithm::Rls => 1,
            Algorithm::Ghc => 2,
            Algorithm::Fga => 3,
            Algorithm::Sa => 4,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Ea => "ea",
            Algorithm::Rls => "rls",
            Algorithm::Ghc => "ghc",
            Algorithm::Fga => "fga",
            Algorithm::Sa => "sa",
        }
    }

    pub fn parse(tag: &str) -> Result<Algorithm> {
        match tag.to_ascii_lowercase().as_str() {
            "ea" => Ok(Algorithm::Ea),
            "rls" => Ok(Algorithm::Rls),
            "ghc" => Ok(Algorithm::Ghc),
            "fga" => Ok(Algorithm::Fga),
            "sa" => Ok(Algorithm::Sa),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected ea, rls, ghc, fga, or sa)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub eval_budget: usize,
    pub seed: u64,
    /// Power-law exponent for FGA mutation strengths.
    pub fga_beta: f64,
    /// SA initial temperature; `None` means n/10.
    pub sa_t0: Option<f64>,
    /// SA geometric cooling factor; `None` means (1e-3)^(1/eval_budget), so
    /// the final temperature is 1e-3 * T0 at budget exhaustion.
    pub sa_cool: Option<f64>,
    /// Record the (eval_index, best_so_far) trajectory.
    pub record_trajectory: bool,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, eval_budget: usize, seed: u64) -> Self {
        SolverConfig {
            algorithm,
            eval_budget,
            seed,
            fga_beta: 1.5,
            sa_t0: None,
            sa_cool: None,
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_budget == 0 {
            return Err(Error::Config("eval_budget must be at least 1".into()));
        }
        if self.fga_beta <= 1.0 {
            return Err(Error::Config(format!(
                "fga_beta {} must exceed 1",
                self.fga_beta
            )));
        }
        if let Some(t0) = self.sa_t0 {
            if t0 <= 0.0 {
                return Err(Error::Config(format!("sa_t0 {t0} must be positive")));
            }
        }
        if let Some(c) = self.sa_cool {
            if !(0.0 < c && c < 1.0) {
                return Err(Error::Config(format!("sa_cool {c} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverRunResult {
    pub best_fitness: f64,
    pub best_solution: BitSolution,
    pub evals_used: usize,
    pub trajectory: Option<Vec<(usize, f64)>>,
}

/// Sampler for mutation strengths r in {1..=r_max} with P(r) proportional to
/// r^(-beta), via inverse CDF over the precomputed cumulative weights.
pub struct PowerLawSampler {
    cumulative: Vec<f64>,
}

impl PowerLawSampler {
    pub fn new(r_max: usize, beta: f64) -> Self {
        let r_max = r_max.max(1);
        let mut cumulative = Vec::with_capacity(r_max);
        let mut total = 0.0;
        for r in 1..=r_max {
            total += (r as f64).powf(-beta);
            cumulative.push(total);
        }
        PowerLawSampler { cumulative }
    }

    #[inline]
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty support");
        let u = rng.random::<f64>() * total;
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&u).expect("finite weights"))
        {
            Ok(i) | Err(i) => (i + 1).min(self.cumulative.len()),
        }
    }

    /// P(r) for the goodness-of-fit checks in the test suite.
    pub fn probability(&self, r: usize) -> f64 {
        let total = *self.cumulative.last().unwrap();
        let lo = if r >= 2 { self.cumulative[r - 2] } else { 0.0 };
        (self.cumulative[r - 1] - lo) / total
    }

    pub fn support_max(&self) -> usize {
        self.cumulative.len()
    }
}

/// Run one solver to budget exhaustion. Seed-deterministic; the initial
/// all-zeros evaluation counts as the first of `eval_budget` evaluations.
pub fn run_solver(
    cfg: &SolverConfig,
    inst: &StochasticInstance,
    g: &Graph,
) -> Result<SolverRunResult> {
    cfg.validate()?;
    let n = g.node_count();
    if inst.node_count() != n {
        return Err(Error::Dimension {
            expected: n,
            got: inst.node_count(),
        });
    }

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut x = BitSolution::zeros(n);
    let mut fx = inst.penalized_fitness_unchecked(g, &x);
    let mut evals = 1usize;

    let mut best = x.clone();
    let mut best_fitness = fx;
    let mut trajectory = cfg.record_trajectory.then(|| vec![(1usize, fx)]);

    let fga_sampler = matches!(cfg.algorithm, Algorithm::Fga)
        .then(|| PowerLawSampler::new(n / 2, cfg.fga_beta));
    let sa_t0 = cfg.sa_t0.unwrap_or(n as f64 / 10.0);
    let sa_cool = cfg
        .sa_cool
        .unwrap_or_else(|| 1e-3f64.powf(1.0 / cfg.eval_budget as f64));

    let mut temperature = sa_t0;
    let mut scan = 0usize; // GHC scan position

    while evals < cfg.eval_budget {
        let mut y = x.clone();
        match cfg.algorithm {
            Algorithm::Ea => {
                let rate = 1.0 / n as f64;
                for i in 0..n {
                    if rng.random::<f64>() < rate {
                        y.flip(i);
                    }
                }
            }
            Algorithm::Rls | Algorithm::Sa => {
                y.flip(rng.random_range(0..n));
            }
            Algorithm::Ghc => {
                y.flip(scan);
                scan = (scan + 1) % n;
            }
            Algorithm::Fga => {
                // A zero-flip offspring still consumes one evaluation.
                let r = fga_sampler.as_ref().unwrap().sample(&mut rng);
                let rate = r as f64 / n as f64;
                for i in 0..n {
                    if rng.random::<f64>() < rate {
                        y.flip(i);
                    }
                }
            }
        }
        let fy = inst.penalized_fitness_unchecked(g, &y);
        evals += 1;

        let accept = if matches!(cfg.algorithm, Algorithm::Sa) {
            temperature *= sa_cool;
            let delta = fy - fx;
            delta >= 0.0 || rng.random::<f64>() < (delta / temperature).exp()
        } else {
            fy >= fx
        };
        if accept {
            x = y;
            fx = fy;
            if fx > best_fitness {
                best_fitness = fx;
                best = x.clone();
            }
        }
        if let Some(t) = trajectory.as_mut() {
            t.push((evals, best_fitness));
        }
    }

    Ok(SolverRunResult {
        best_fitness,
        best_solution: best,
        evals_used: evals,
        trajectory,
    })
}

fn run_seeds(cfg: &SolverConfig, runs: usize, base_seed: u64) -> Vec<u64> {
    (0..runs)
        .map(|i| mix3(base_seed, cfg.algorithm.id(), i as u64))
        .collect()
}

/// Independent runs with seeds `mix(base_seed, algorithm_id, run_index)`.
/// Results come back in run-index order regardless of execution order.
#[cfg(feature = "parallel")]
pub fn run_batch(
    cfg: &SolverConfig,
    inst: &StochasticInstance,
    g: &Graph,
    runs: usize,
    base_seed: u64,
) -> Result<Vec<SolverRunResult>> {
    run_seeds(cfg, runs, base_seed)
        .into_par_iter()
        .map(|seed| {
            let run_cfg = SolverConfig { seed, ..cfg.clone() };
            run_solver(&run_cfg, inst, g)
        })
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_batch(
    cfg: &SolverConfig,
    inst: &StochasticInstance,
    g: &Graph,
    runs: usize,
    base_seed: u64,
) -> Result<Vec<SolverRunResult>> {
    run_batch_seq(cfg, inst, g, runs, base_seed)
}

/// Sequential batch runner; `run_batch` must match it result-for-result.
pub fn run_batch_seq(
    cfg: &SolverConfig,
    inst: &StochasticInstance,
    g: &Graph,
    runs: usize,
    base_seed: u64,
) -> Result<Vec<SolverRunResult>> {
    run_seeds(cfg, runs, base_seed)
        .into_iter()
        .map(|seed| {
            let run_cfg = SolverConfig { seed, ..cfg.clone() };
            run_solver(&run_cfg, inst, g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_random_graph;
    use crate::instance::init_random;

    /// K10 with zero variances and unit costs: every solution is feasible and
    /// any single selected node covers everything.
    fn trivial_setup() -> (Graph, StochasticInstance) {
        let g = gen_random_graph(10, 1.0, 0).unwrap();
        let inst = StochasticInstance {
            graph_ref: None,
            mu: vec![1.0; 10],
            sigma2: vec![0.0; 10],
            mu_max: 1000.0,
            budget: 10.0,
            alpha: 0.05,
        };
        (g, inst)
    }

    #[test]
    fn all_solvers_crack_k10() {
        let (g, inst) = trivial_setup();
        for algo in Algorithm::ALL {
            let cfg = SolverConfig::new(algo, 100, 7);
            let res = run_solver(&cfg, &inst, &g).unwrap();
            assert_eq!(res.best_fitness, 10.0, "{algo} missed the optimum");
            assert_eq!(res.evals_used, 100);
        }
    }

    #[test]
    fn budget_one_returns_initial_solution() {
        let (g, inst) = trivial_setup();
        for algo in Algorithm::ALL {
            let cfg = SolverConfig::new(algo, 1, 7);
            let res = run_solver(&cfg, &inst, &g).unwrap();
            assert_eq!(res.best_fitness, 0.0);
            assert_eq!(res.best_solution.count_ones(), 0);
            assert_eq!(res.evals_used, 1);
        }
    }

    #[test]
    fn run_solver_is_deterministic() {
        let g = gen_random_graph(60, 0.05, 11).unwrap();
        let inst = init_random(&g, 1000.0, 0.05, 11).unwrap();
        for algo in Algorithm::ALL {
            let cfg = SolverConfig::new(algo, 500, 23);
            let a = run_solver(&cfg, &inst, &g).unwrap();
            let b = run_solver(&cfg, &inst, &g).unwrap();
            assert_eq!(a.best_fitness, b.best_fitness);
            assert_eq!(a.best_solution, b.best_solution);
        }
    }

    #[test]
    fn ghc_ignores_its_seed() {
        let g = gen_random_graph(40, 0.1, 5).unwrap();
        let inst = init_random(&g, 1000.0, 0.05, 5).unwrap();
        let mut cfg = SolverConfig::new(Algorithm::Ghc, 300, 1);
        let a = run_solver(&cfg, &inst, &g).unwrap();
        cfg.seed = 999;
        let b = run_solver(&cfg, &inst, &g).unwrap();
        assert_eq!(a.best_fitness, b.best_fitness);
        assert_eq!(a.best_solution, b.best_solution);
    }

    #[test]
    fn trajectories_are_non_decreasing_and_start_feasible() {
        let g = gen_random_graph(50, 0.05, 2).unwrap();
        let inst = init_random(&g, 1000.0, 0.05, 2).unwrap();
        for algo in Algorithm::ALL {
            let mut cfg = SolverConfig::new(algo, 400, 3);
            cfg.record_trajectory = true;
            let res = run_solver(&cfg, &inst, &g).unwrap();
            let traj = res.trajectory.unwrap();
            assert_eq!(traj.len(), 400);
            assert!(traj.windows(2).all(|w| w[0].1 <= w[1].1), "{algo} regressed");
            assert!(res.best_fitness >= 0.0);
            assert_eq!(traj.last().unwrap().1, res.best_fitness);
        }
    }

    #[test]
    fn power_law_sampler_chi_square() {
        // r ~ r^(-1.5) on {1..=10}; chi^2 GoF at the 1% level, df = 9.
        let sampler = PowerLawSampler::new(10, 1.5);
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let samples = 100_000usize;
        let mut counts = vec![0usize; 10];
        for _ in 0..samples {
            let r = sampler.sample(&mut rng);
            counts[r - 1] += 1;
        }
        let mut chi2 = 0.0;
        for r in 1..=10 {
            let expected = sampler.probability(r) * samples as f64;
            let diff = counts[r - 1] as f64 - expected;
            chi2 += diff * diff / expected;
        }
        assert!(chi2 < 21.666, "chi^2 = {chi2} exceeds the 0.99 quantile for df 9");
    }

    #[test]
    fn power_law_probabilities_sum_to_one() {
        let sampler = PowerLawSampler::new(25, 1.5);
        let total: f64 = (1..=25).map(|r| sampler.probability(r)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn batch_is_deterministic_and_ordered() {
        let g = gen_random_graph(40, 0.08, 9).unwrap();
        let inst = init_random(&g, 1000.0, 0.05, 9).unwrap();
        let cfg = SolverConfig::new(Algorithm::Ea, 300, 0);
        let a = run_batch(&cfg, &inst, &g, 6, 1234).unwrap();
        let b = run_batch(&cfg, &inst, &g, 6, 1234).unwrap();
        let s = run_batch_seq(&cfg, &inst, &g, 6, 1234).unwrap();
        assert_eq!(a.len(), 6);
        for i in 0..6 {
            assert_eq!(a[i].best_fitness, b[i].best_fitness);
            assert_eq!(a[i].best_fitness, s[i].best_fitness);
            assert_eq!(a[i].best_solution, s[i].best_solution);
        }
    }

    #[test]
    fn unknown_algorithm_tag_is_rejected() {
        assert!(Algorithm::parse("gsemo").is_err());
        assert_eq!(Algorithm::parse("EA").unwrap(), Algorithm::Ea);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SolverConfig::new(Algorithm::Ea, 0, 0);
        assert!(cfg.validate().is_err());
        cfg.eval_budget = 10;
        cfg.fga_beta = 1.0;
        assert!(cfg.validate().is_err());
        cfg.fga_beta = 1.5;
        cfg.sa_cool = Some(1.0);
        assert!(cfg.validate().is_err());
    }
}
