//! Stochastic cost instances and the Chebyshev feasibility surrogate.
//!
//! An instance attaches an expected cost and a variance to every node of a
//! graph, plus a budget and a violation probability. A selection is feasible
//! when the one-sided Chebyshev tail bound on `Pr(C(x) > B)` is at most
//! alpha. The surrogate load `W(x) = E[C(x)] + sqrt(((1-a)/a) Var[C(x)])`
//! rearranges that bound into cost units, so feasibility is `W(x) <= B`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A selection vector x in {0,1}^n, stored as packed 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitSolution {
    words: Vec<u64>,
    len: usize,
}

impl BitSolution {
    pub fn zeros(len: usize) -> Self {
        BitSolution {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.word_index * 64 + bit)
    }
}

/// Per-node cost expectations and variances over a fixed graph; the genotype
/// the outer evolver mutates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticInstance {
    /// Where the graph came from (file path or a generator description).
    pub graph_ref: Option<String>,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub mu_max: f64,
    pub budget: f64,
    pub alpha: f64,
}

impl StochasticInstance {
    pub fn node_count(&self) -> usize {
        self.mu.len()
    }

    fn check_dims(&self, x: &BitSolution) -> Result<()> {
        if x.len() != self.mu.len() {
            return Err(Error::Dimension {
                expected: self.mu.len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Check the model invariants: 0 <= mu_i <= mu_max, 0 <= sigma2_i <=
    /// mu_i^2/3, positive budget, alpha in (0,1).
    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.sigma2.len() {
            return Err(Error::Dimension {
                expected: self.mu.len(),
                got: self.sigma2.len(),
            });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Range(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.budget <= 0.0 {
            return Err(Error::Range(format!("budget {} not positive", self.budget)));
        }
        for i in 0..self.mu.len() {
            let (mu, s2) = (self.mu[i], self.sigma2[i]);
            if !(0.0..=self.mu_max).contains(&mu) {
                return Err(Error::Range(format!(
                    "mu[{i}] = {mu} outside [0, {}]",
                    self.mu_max
                )));
            }
            if s2 < 0.0 || s2 > mu * mu / 3.0 {
                return Err(Error::Range(format!(
                    "sigma2[{i}] = {s2} outside [0, mu^2/3 = {}]",
                    mu * mu / 3.0
                )));
            }
        }
        Ok(())
    }

    pub fn expected_cost(&self, x: &BitSolution) -> Result<f64> {
        self.check_dims(x)?;
        Ok(self.expected_cost_unchecked(x))
    }

    #[inline]
    pub fn expected_cost_unchecked(&self, x: &BitSolution) -> f64 {
        x.ones().map(|i| self.mu[i]).sum()
    }

    pub fn variance_cost(&self, x: &BitSolution) -> Result<f64> {
        self.check_dims(x)?;
        Ok(self.variance_cost_unchecked(x))
    }

    #[inline]
    pub fn variance_cost_unchecked(&self, x: &BitSolution) -> f64 {
        x.ones().map(|i| self.sigma2[i]).sum()
    }

    /// One-sided Chebyshev bound on `Pr(C(x) > B)`. Returns 1 when the mean
    /// meets or exceeds the budget (the bound is vacuous there) and 0 for a
    /// zero-variance selection under budget.
    pub fn chebyshev_beta(&self, x: &BitSolution) -> Result<f64> {
        self.check_dims(x)?;
        let mean = self.expected_cost_unchecked(x);
        let var = self.variance_cost_unchecked(x);
        Ok(beta_from_moments(mean, var, self.budget))
    }

    /// Surrogate load `W(x)`; feasibility is `W(x) <= B`, equivalent to
    /// `beta(x) <= alpha` whenever the mean is under budget.
    pub fn surrogate_load(&self, x: &BitSolution) -> Result<f64> {
        self.check_dims(x)?;
        let mean = self.expected_cost_unchecked(x);
        let var = self.variance_cost_unchecked(x);
        Ok(load_from_moments(mean, var, self.alpha))
    }

    pub fn is_feasible(&self, x: &BitSolution) -> Result<bool> {
        Ok(self.chebyshev_beta(x)? <= self.alpha)
    }

    /// Coverage when feasible, `B - W(x)` (negative) when infeasible.
    pub fn penalized_fitness(&self, g: &Graph, x: &BitSolution) -> Result<f64> {
        self.check_dims(x)?;
        if g.node_count() != self.mu.len() {
            return Err(Error::Dimension {
                expected: self.mu.len(),
                got: g.node_count(),
            });
        }
        Ok(self.penalized_fitness_unchecked(g, x))
    }

    /// Hot-path fitness used by the inner solvers.
    #[inline]
    pub fn penalized_fitness_unchecked(&self, g: &Graph, x: &BitSolution) -> f64 {
        let mut mean = 0.0;
        let mut var = 0.0;
        for i in x.ones() {
            mean += self.mu[i];
            var += self.sigma2[i];
        }
        if beta_from_moments(mean, var, self.budget) <= self.alpha {
            g.coverage_unchecked(x) as f64
        } else {
            self.budget - load_from_moments(mean, var, self.alpha)
        }
    }
}

#[inline]
fn beta_from_moments(mean: f64, var: f64, budget: f64) -> f64 {
    if mean >= budget {
        return 1.0;
    }
    if var == 0.0 {
        return 0.0;
    }
    let deficit = budget - mean;
    var / (var + deficit * deficit)
}

#[inline]
fn load_from_moments(mean: f64, var: f64, alpha: f64) -> f64 {
    mean + ((1.0 - alpha) / alpha * var).sqrt()
}

/// Budget rule `B = (sum mu_i) / 30`; equals `n/30 * mu_max/2` in expectation
/// for freshly drawn uniform expected costs.
pub fn compute_budget(mu: &[f64]) -> f64 {
    mu.iter().sum::<f64>() / 30.0
}

/// Draw a fresh instance: mu_i ~ U(0, mu_max], sigma2_i ~ U(0, mu_i^2/3].
pub fn init_random(g: &Graph, mu_max: f64, alpha: f64, seed: u64) -> Result<StochasticInstance> {
    if mu_max <= 0.0 {
        return Err(Error::Range(format!("mu_max {mu_max} must be positive")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Range(format!("alpha {alpha} outside (0, 1)")));
    }
    let n = g.node_count();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut mu = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    for _ in 0..n {
        // random::<f64>() is in [0, 1); 1 - r maps it to (0, 1].
        let m = (1.0 - rng.random::<f64>()) * mu_max;
        let s2 = (1.0 - rng.random::<f64>()) * m * m / 3.0;
        mu.push(m);
        sigma2.push(s2);
    }
    let budget = compute_budget(&mu);
    Ok(StochasticInstance {
        graph_ref: None,
        mu,
        sigma2,
        mu_max,
        budget,
        alpha,
    })
}

/// On-disk instance format. Evolved instances are the artifact's primary
/// output, so every field needed to replay them is spelled out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub graph: Option<String>,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub alpha: f64,
    pub budget: f64,
    pub mu_max: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<String>,
}

pub fn write_instance(
    path: &Path,
    inst: &StochasticInstance,
    seed: Option<u64>,
    provenance: Option<String>,
) -> Result<()> {
    let file = InstanceFile {
        n: inst.node_count(),
        graph: inst.graph_ref.clone(),
        mu: inst.mu.clone(),
        sigma2: inst.sigma2.clone(),
        alpha: inst.alpha,
        budget: inst.budget,
        mu_max: inst.mu_max,
        seed,
        provenance,
    };
    let writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(writer, &file)?;
    Ok(())
}

pub fn read_instance(path: &Path) -> Result<StochasticInstance> {
    let reader = BufReader::new(File::open(path)?);
    let file: InstanceFile = serde_json::from_reader(reader)?;
    if file.mu.len() != file.n || file.sigma2.len() != file.n {
        return Err(Error::Dimension {
            expected: file.n,
            got: file.mu.len().min(file.sigma2.len()),
        });
    }
    Ok(StochasticInstance {
        graph_ref: file.graph,
        mu: file.mu,
        sigma2: file.sigma2,
        mu_max: file.mu_max,
        budget: file.budget,
        alpha: file.alpha,
    })
}
