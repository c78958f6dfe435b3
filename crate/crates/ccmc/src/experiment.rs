//! Batch experiment orchestration: evolve cohorts of instances per
//! (graph, algorithm pair, mutation setting) cell, validate them with fresh
//! seeds, and aggregate summary tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolver::{evaluate_instance, evolve, EvolutionLogEntry, EvolverConfig, FitnessKind};
use crate::graph::Graph;
use crate::instance::{init_random, write_instance, StochasticInstance};
use crate::ratio::Confidence;
use crate::seed::{mix2, mix3};
use crate::solvers::Algorithm;

const TAG_CELL: u64 = 0x10;
const TAG_VALIDATE: u64 = 0x11;
const TAG_BASELINE: u64 = 0x12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSetting {
    pub sigma1: f64,
    pub sigma2: f64,
}

/// The three mutation-scale settings used throughout the experiments.
pub const SIGMA_SETTINGS: [SigmaSetting; 3] = [
    SigmaSetting { sigma1: 10.0, sigma2: 33.0 },
    SigmaSetting { sigma1: 15.0, sigma2: 75.0 },
    SigmaSetting { sigma1: 20.0, sigma2: 133.0 },
];

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub pairs: Vec<(Algorithm, Algorithm)>,
    pub fitness_kinds: Vec<(FitnessKind, Confidence)>,
    pub sigma_settings: Vec<SigmaSetting>,
    /// Evolved instances per cell.
    pub repetitions: usize,
    /// Template whose per-cell fields (pair, fitness, sigmas, seed) get
    /// overwritten for each cell.
    pub base: EvolverConfig,
    /// Fresh-seed validation runs per evolved instance.
    pub validation_runs: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.pairs.is_empty() || self.fitness_kinds.is_empty() || self.sigma_settings.is_empty() {
            return Err(Error::Config("experiment spec has an empty dimension".into()));
        }
        Ok(())
    }
}

/// One evolved-and-validated instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub graph: String,
    pub easy: Algorithm,
    pub hard: Algorithm,
    pub fitness_kind: FitnessKind,
    pub k_alpha: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rep: usize,
    pub seed: u64,
    /// Final training fitness (function value of the evolved instance).
    pub final_fitness: f64,
    pub final_mean_ratio: f64,
    pub final_std_ratio: f64,
    /// Validation pass with seeds disjoint from training.
    pub reeval_mean: f64,
    pub reeval_std: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Stats4 {
    pub average: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats4 {
    pub fn from_values(values: &[f64]) -> Stats4 {
        assert!(!values.is_empty());
        let n = values.len() as f64;
        let average = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - average).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Stats4 { average, std, min, max }
    }
}

/// Aggregates for one (graph, pair, fitness, sigma) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub graph: String,
    pub easy: Algorithm,
    pub hard: Algorithm,
    pub fitness_kind: FitnessKind,
    pub k_alpha: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub instances: usize,
    pub final_fitness: Stats4,
    pub reeval_mean: Stats4,
    /// Aggregated per-instance validation stds.
    pub reeval_std: Stats4,
    /// Pooled standard deviation of all validation ratios in the cell.
    pub pooled_reeval_std: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub records: Vec<InstanceRecord>,
    /// Per-cell failures; the run continues past them.
    pub failures: Vec<String>,
}

fn cell_seed(spec_seed: u64, cell: usize, rep: usize) -> u64 {
    mix3(mix2(spec_seed, TAG_CELL), cell as u64, rep as u64)
}

/// Evolve and validate every cell of the spec. When `out_dir` is given, each
/// instance gets `instance.json` and `evolution_log.csv` in its own
/// subdirectory, and the summary CSV/Markdown land at the top level.
pub fn run_experiment(
    graphs: &[(String, Graph)],
    spec: &ExperimentSpec,
    out_dir: Option<&Path>,
) -> Result<SummaryTable> {
    spec.validate()?;
    let mut table = SummaryTable::default();
    let mut cell_index = 0usize;

    for (graph_name, graph) in graphs {
        for &(easy, hard) in &spec.pairs {
            for &(kind, confidence) in &spec.fitness_kinds {
                for &sigma in &spec.sigma_settings {
                    let mut cell_records = Vec::new();
                    for rep in 0..spec.repetitions {
                        let seed = cell_seed(spec.seed, cell_index, rep);
                        match run_cell_rep(
                            graph_name, graph, easy, hard, kind, confidence, sigma, rep, seed,
                            spec, out_dir, cell_index,
                        ) {
                            Ok(record) => cell_records.push(record),
                            Err(e) => table.failures.push(format!(
                                "{graph_name} {easy}/{hard} sigma1={} rep {rep}: {e}",
                                sigma.sigma1
                            )),
                        }
                    }
                    if !cell_records.is_empty() {
                        table.rows.push(aggregate_cell(&cell_records));
                        table.records.extend(cell_records);
                    }
                    cell_index += 1;
                }
            }
        }
    }

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_instance_records_csv(&dir.join("instances.csv"), &table.records)?;
        write_summary_csv(&dir.join("summary.csv"), &table.rows)?;
        fs::write(dir.join("summary.md"), summary_markdown(&table.rows))?;
    }
    Ok(table)
}

#[allow(clippy::too_many_arguments)]
fn run_cell_rep(
    graph_name: &str,
    graph: &Graph,
    easy: Algorithm,
    hard: Algorithm,
    kind: FitnessKind,
    confidence: Confidence,
    sigma: SigmaSetting,
    rep: usize,
    seed: u64,
    spec: &ExperimentSpec,
    out_dir: Option<&Path>,
    cell_index: usize,
) -> Result<InstanceRecord> {
    let mut cfg = spec.base.clone();
    cfg.easy_algo = easy;
    cfg.hard_algo = hard;
    cfg.fitness_kind = kind;
    cfg.confidence = confidence;
    cfg.sigma1_init = sigma.sigma1;
    cfg.sigma2_init = sigma.sigma2;
    cfg.seed = seed;

    let outcome = evolve(graph, &cfg)?;

    // Validation pass: same evaluation machinery, disjoint seed stream,
    // configurable run count.
    let mut val_cfg = cfg.clone();
    val_cfg.inner_runs = spec.validation_runs;
    let (_, val_stats) = evaluate_instance(
        &outcome.best_instance,
        graph,
        &val_cfg,
        mix3(mix2(spec.seed, TAG_VALIDATE), cell_index as u64, rep as u64),
    )?;

    if let Some(dir) = out_dir {
        let sub = dir.join(format!(
            "{graph_name}_{easy}_{hard}_{:?}_s{}_rep{rep}",
            kind, sigma.sigma1
        ));
        fs::create_dir_all(&sub)?;
        let mut inst = outcome.best_instance.clone();
        inst.graph_ref = Some(graph_name.to_string());
        write_instance(
            &sub.join("instance.json"),
            &inst,
            Some(seed),
            Some(format!("evolved: easy={easy} hard={hard} fitness={kind:?}")),
        )?;
        write_evolution_log_csv(&sub.join("evolution_log.csv"), &outcome.log)?;
    }

    Ok(InstanceRecord {
        graph: graph_name.to_string(),
        easy,
        hard,
        fitness_kind: kind,
        k_alpha: confidence.k_alpha(),
        sigma1: sigma.sigma1,
        sigma2: sigma.sigma2,
        rep,
        seed,
        final_fitness: outcome.best_fitness,
        final_mean_ratio: outcome.best_stats.mean,
        final_std_ratio: outcome.best_stats.std,
        reeval_mean: val_stats.mean,
        reeval_std: val_stats.std,
    })
}

fn aggregate_cell(records: &[InstanceRecord]) -> SummaryRow {
    let first = &records[0];
    let finals: Vec<f64> = records.iter().map(|r| r.final_fitness).collect();
    let means: Vec<f64> = records.iter().map(|r| r.reeval_mean).collect();
    let stds: Vec<f64> = records.iter().map(|r| r.reeval_std).collect();
    // Pooled variance over equal-sized validation batches.
    let pooled = (records.iter().map(|r| r.reeval_std.powi(2)).sum::<f64>()
        / records.len() as f64)
        .sqrt();
    SummaryRow {
        graph: first.graph.clone(),
        easy: first.easy,
        hard: first.hard,
        fitness_kind: first.fitness_kind,
        k_alpha: first.k_alpha,
        sigma1: first.sigma1,
        sigma2: first.sigma2,
        instances: records.len(),
        final_fitness: Stats4::from_values(&finals),
        reeval_mean: Stats4::from_values(&means),
        reeval_std: Stats4::from_values(&stds),
        pooled_reeval_std: pooled,
    }
}

/// Evaluate `instances` random (unevolved) instances under both the plain
/// ratio and the discounting fitness, from the same solver batches.
pub fn random_baseline(
    graph_name: &str,
    graph: &Graph,
    base: &EvolverConfig,
    instances: usize,
    seed: u64,
) -> Result<BaselineSummary> {
    if instances == 0 {
        return Err(Error::Config("need at least one baseline instance".into()));
    }
    let mut means = Vec::with_capacity(instances);
    let mut discounted = Vec::with_capacity(instances);
    for i in 0..instances {
        let inst_seed = mix3(mix2(seed, TAG_BASELINE), i as u64, 0);
        let inst = init_random(graph, base.mu_max, base.alpha, inst_seed)?;
        let (_, stats) = evaluate_instance(
            &inst,
            graph,
            base,
            mix3(mix2(seed, TAG_BASELINE), i as u64, 1),
        )?;
        means.push(stats.mean);
        discounted.push(stats.discounted);
    }
    Ok(BaselineSummary {
        graph: graph_name.to_string(),
        easy: base.easy_algo,
        hard: base.hard_algo,
        instances,
        inner_budget: base.inner_budget,
        ratio: Stats4::from_values(&means),
        discounted: Stats4::from_values(&discounted),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub graph: String,
    pub easy: Algorithm,
    pub hard: Algorithm,
    pub instances: usize,
    pub inner_budget: usize,
    pub ratio: Stats4,
    pub discounted: Stats4,
}

// ---------------------------------------------------------------------------
// CSV / Markdown output. Headers are fixed so the files stay schema-stable
// and re-parseable by `read_instance_records_csv`.
// ---------------------------------------------------------------------------

const INSTANCE_CSV_HEADER: [&str; 14] = [
    "graph",
    "easy",
    "hard",
    "fitness_kind",
    "k_alpha",
    "sigma1",
    "sigma2",
    "rep",
    "seed",
    "final_fitness",
    "final_mean_ratio",
    "final_std_ratio",
    "reeval_mean",
    "reeval_std",
];

pub fn write_instance_records_csv(path: &Path, records: &[InstanceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(INSTANCE_CSV_HEADER)?;
    for r in records {
        w.write_record(&[
            r.graph.clone(),
            r.easy.to_string(),
            r.hard.to_string(),
            format!("{:?}", r.fitness_kind).to_lowercase(),
            r.k_alpha.to_string(),
            r.sigma1.to_string(),
            r.sigma2.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.final_fitness.to_string(),
            r.final_mean_ratio.to_string(),
            r.final_std_ratio.to_string(),
            r.reeval_mean.to_string(),
            r.reeval_std.to_string(),
        ])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

pub fn read_instance_records_csv(path: &Path) -> Result<Vec<InstanceRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| -> Result<&str> {
            row.get(i).ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing column {i} in {}", path.display()),
            })
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?.parse().map_err(|_| Error::Parse {
                line: 0,
                msg: format!("invalid number in column {i}"),
            })
        };
        out.push(InstanceRecord {
            graph: field(0)?.to_string(),
            easy: Algorithm::parse(field(1)?)?,
            hard: Algorithm::parse(field(2)?)?,
            fitness_kind: FitnessKind::parse(field(3)?)?,
            k_alpha: num(4)?,
            sigma1: num(5)?,
            sigma2: num(6)?,
            rep: num(7)? as usize,
            seed: num(8)? as u64,
            final_fitness: num(9)?,
            final_mean_ratio: num(10)?,
            final_std_ratio: num(11)?,
            reeval_mean: num(12)?,
            reeval_std: num(13)?,
        });
    }
    Ok(out)
}

/// Rebuild summary rows from a per-instance CSV; used by the `report`
/// subcommand and as the consistency oracle for the emitted summaries.
pub fn aggregate_records(records: &[InstanceRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut seen: Vec<(String, Algorithm, Algorithm, FitnessKind, u64)> = Vec::new();
    for r in records {
        let key = (
            r.graph.clone(),
            r.easy,
            r.hard,
            r.fitness_kind,
            r.sigma1.to_bits(),
        );
        if seen.contains(&key) {
            continue;
        }
        let cell: Vec<InstanceRecord> = records
            .iter()
            .filter(|c| {
                c.graph == r.graph
                    && c.easy == r.easy
                    && c.hard == r.hard
                    && c.fitness_kind == r.fitness_kind
                    && c.sigma1 == r.sigma1
            })
            .cloned()
            .collect();
        rows.push(aggregate_cell(&cell));
        seen.push(key);
    }
    rows
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "graph", "easy", "hard", "fitness_kind", "k_alpha", "sigma1", "sigma2", "instances",
        "final_avg", "final_std", "final_min", "final_max",
        "reeval_mean_avg", "reeval_mean_std", "reeval_mean_min", "reeval_mean_max",
        "reeval_std_avg", "reeval_std_std", "reeval_std_min", "reeval_std_max",
        "pooled_reeval_std",
    ])?;
    for r in rows {
        w.write_record(&[
            r.graph.clone(),
            r.easy.to_string(),
            r.hard.to_string(),
            format!("{:?}", r.fitness_kind).to_lowercase(),
            r.k_alpha.to_string(),
            r.sigma1.to_string(),
            r.sigma2.to_string(),
            r.instances.to_string(),
            r.final_fitness.average.to_string(),
            r.final_fitness.std.to_string(),
            r.final_fitness.min.to_string(),
            r.final_fitness.max.to_string(),
            r.reeval_mean.average.to_string(),
            r.reeval_mean.std.to_string(),
            r.reeval_mean.min.to_string(),
            r.reeval_mean.max.to_string(),
            r.reeval_std.average.to_string(),
            r.reeval_std.std.to_string(),
            r.reeval_std.min.to_string(),
            r.reeval_std.max.to_string(),
            r.pooled_reeval_std.to_string(),
        ])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

pub fn summary_markdown(rows: &[SummaryRow]) -> String {
    let mut md = String::from(
        "| graph | easy/hard | fitness | sigma1 | n | final avg | final std | reeval mean | reeval std |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        md.push_str(&format!(
            "| {} | {}/{} | {:?} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
            r.graph,
            r.easy,
            r.hard,
            r.fitness_kind,
            r.sigma1,
            r.instances,
            r.final_fitness.average,
            r.final_fitness.std,
            r.reeval_mean.average,
            r.reeval_std.average,
        ));
    }
    md
}

pub fn write_evolution_log_csv(path: &Path, log: &[EvolutionLogEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "generation", "fitness", "mean_ratio", "std_ratio", "sigma1", "sigma2", "budget",
        "accepted", "best_fitness",
    ])?;
    for e in log {
        w.write_record(&[
            e.generation.to_string(),
            e.fitness.to_string(),
            e.mean_ratio.to_string(),
            e.std_ratio.to_string(),
            e.sigma1.to_string(),
            e.sigma2.to_string(),
            e.budget.to_string(),
            e.accepted.to_string(),
            e.best_fitness.to_string(),
        ])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Write solver batch results as the `solve` subcommand's CSV.
pub fn write_runs_csv(
    path: &Path,
    algo: Algorithm,
    results: &[crate::solvers::SolverRunResult],
    base_seed: u64,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run", "algo", "best_fitness", "evals", "seed"])?;
    for (i, r) in results.iter().enumerate() {
        w.write_record(&[
            i.to_string(),
            algo.to_string(),
            r.best_fitness.to_string(),
            r.evals_used.to_string(),
            crate::seed::mix3(base_seed, algo.id(), i as u64).to_string(),
        ])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

#[allow(unused)]
fn graph_ref_of(inst: &StochasticInstance) -> Option<&str> {
    inst.graph_ref.as_deref()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_random_graph;

    fn toy_spec(seed: u64) -> ExperimentSpec {
        let mut base = EvolverConfig::new(Algorithm::Ea, Algorithm::Fga, 0);
        base.inner_runs = 3;
        base.inner_budget = 150;
        base.outer_budget = 5;
        ExperimentSpec {
            pairs: vec![(Algorithm::Ea, Algorithm::Fga)],
            fitness_kinds: vec![(FitnessKind::Ratio, Confidence::C99)],
            sigma_settings: vec![SIGMA_SETTINGS[0]],
            repetitions: 2,
            base,
            validation_runs: 3,
            seed,
        }
    }

    #[test]
    fn experiment_aggregates_and_reruns_identically() {
        let g = gen_random_graph(25, 0.12, 3).unwrap();
        let graphs = vec![("toy".to_string(), g)];
        let spec = toy_spec(11);
        let a = run_experiment(&graphs, &spec, None).unwrap();
        let b = run_experiment(&graphs, &spec, None).unwrap();
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.records.len(), 2);
        assert!(a.failures.is_empty());
        let row = &a.rows[0];
        assert!(row.final_fitness.min <= row.final_fitness.average);
        assert!(row.final_fitness.average <= row.final_fitness.max);
        assert_eq!(row.instances, 2);
        assert_eq!(a.records[0].final_fitness, b.records[0].final_fitness);
        assert_eq!(a.rows[0].reeval_mean.average, b.rows[0].reeval_mean.average);
    }

    #[test]
    fn csv_round_trip_and_reaggregation_match() {
        let g = gen_random_graph(25, 0.12, 3).unwrap();
        let graphs = vec![("toy".to_string(), g)];
        let spec = toy_spec(21);
        let dir = tempfile::tempdir().unwrap();
        let table = run_experiment(&graphs, &spec, Some(dir.path())).unwrap();

        let records = read_instance_records_csv(&dir.path().join("instances.csv")).unwrap();
        assert_eq!(records.len(), table.records.len());
        let rows = aggregate_records(&records);
        assert_eq!(rows.len(), table.rows.len());
        for (a, b) in rows.iter().zip(&table.rows) {
            assert!((a.final_fitness.average - b.final_fitness.average).abs() < 1e-12);
            assert!((a.reeval_std.average - b.reeval_std.average).abs() < 1e-12);
            assert!((a.pooled_reeval_std - b.pooled_reeval_std).abs() < 1e-12);
        }
        assert!(dir.path().join("summary.csv").exists());
        assert!(dir.path().join("summary.md").exists());
    }

    #[test]
    fn baseline_degenerate_single_instance() {
        let g = gen_random_graph(20, 0.15, 4).unwrap();
        let mut base = EvolverConfig::new(Algorithm::Ea, Algorithm::Fga, 0);
        base.inner_runs = 3;
        base.inner_budget = 100;
        let summary = random_baseline("toy", &g, &base, 1, 5).unwrap();
        assert_eq!(summary.ratio.min, summary.ratio.max);
        assert_eq!(summary.ratio.min, summary.ratio.average);
        assert!(summary.discounted.average <= summary.ratio.average);
    }

    #[test]
    fn stats4_hand_values() {
        let s = Stats4::from_values(&[1.0, 2.0, 3.0]);
        assert_eq!(s.average, 2.0);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 3.0);
        assert!((s.std - 1.0).abs() < 1e-12);
    }
}
