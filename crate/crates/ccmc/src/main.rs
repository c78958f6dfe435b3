use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ccmc::error::{Error, Result};
use ccmc::evolver::{evaluate_instance, evolve, EvolverConfig, FitnessKind};
use ccmc::experiment::{
    aggregate_records, random_baseline, read_instance_records_csv, run_experiment,
    write_evolution_log_csv, write_runs_csv, write_summary_csv,
    summary_markdown, ExperimentSpec, SigmaSetting, SIGMA_SETTINGS,
};
use ccmc::graph::{gen_random_graph, load_edge_list, load_matrix_market, Graph, IndexBase};
use ccmc::instance::{init_random, read_instance, write_instance};
use ccmc::ratio::{Confidence, DEFAULT_EPSILON};
use ccmc::solvers::{run_batch, Algorithm, SolverConfig};

/// Environment variable naming the default output root; relative output
/// paths are resolved against it when set.
const OUT_ROOT_ENV: &str = "CCMC_OUT_ROOT";

#[derive(Parser)]
#[command(
    name = "ccmc",
    about = "Evolve discriminating instances for the chance-constrained maximum coverage problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GraphFormat {
    Edgelist,
    Mtx,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AlgoArg {
    Ea,
    Rls,
    Ghc,
    Fga,
    Sa,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Algorithm {
        match a {
            AlgoArg::Ea => Algorithm::Ea,
            AlgoArg::Rls => Algorithm::Rls,
            AlgoArg::Ghc => Algorithm::Ghc,
            AlgoArg::Fga => Algorithm::Fga,
            AlgoArg::Sa => Algorithm::Sa,
        }
    }
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Graph file to load.
    #[arg(long)]
    graph: PathBuf,
    /// File format.
    #[arg(long, value_enum, default_value = "edgelist")]
    format: GraphFormat,
    /// Indexing base of edge-list files.
    #[arg(long, default_value = "0")]
    index_base: u8,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph> {
        load_graph(&self.graph, self.format, self.index_base)
    }
}

fn load_graph(path: &Path, format: GraphFormat, index_base: u8) -> Result<Graph> {
    let reader = BufReader::new(File::open(path)?);
    match format {
        GraphFormat::Edgelist => {
            let base = match index_base {
                0 => IndexBase::Zero,
                1 => IndexBase::One,
                other => {
                    return Err(Error::Config(format!(
                        "index base {other} not supported (use 0 or 1)"
                    )))
                }
            };
            load_edge_list(reader, base)
        }
        GraphFormat::Mtx => load_matrix_market(reader),
    }
}

#[derive(Args, Clone)]
struct ConfidenceArgs {
    /// Confidence level for the discounting fitness (0.90 or 0.99).
    #[arg(long, default_value = "0.99")]
    confidence: String,
    /// Explicit confidence multiplier; overrides --confidence.
    #[arg(long)]
    k_alpha: Option<f64>,
}

impl ConfidenceArgs {
    fn resolve(&self) -> Result<Confidence> {
        match self.k_alpha {
            Some(k) => Ok(Confidence::Explicit(k)),
            None => Confidence::parse(&self.confidence),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a G(n, p) random graph and write it as an edge list.
    GenGraph {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        edge_prob: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a random stochastic instance for a graph.
    InitInstance {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 1000.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver for several independent runs on a fixed instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-run best-so-far trajectories.
        #[arg(long)]
        log_trajectory: bool,
        #[arg(long, default_value_t = 1.5)]
        fga_beta: f64,
        #[arg(long)]
        sa_t0: Option<f64>,
        #[arg(long)]
        sa_cool: Option<f64>,
    },
    /// Score an easy/hard pair on one instance (ratio statistics).
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum)]
        easy: AlgoArg,
        #[arg(long, value_enum)]
        hard: AlgoArg,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[command(flatten)]
        confidence: ConfidenceArgs,
        #[arg(long)]
        seed: u64,
        /// Write the statistics as JSON.
        #[arg(long)]
        out_json: Option<PathBuf>,
        /// Write the per-run ratios as CSV.
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Evolve one discriminating instance with the outer (1+1) EA.
    Evolve(EvolveArgs),
    /// Full experiment grid: cells x repetitions, with a validation pass.
    Experiment(ExperimentArgs),
    /// Evaluate random (unevolved) instances under both fitness functions.
    Baseline {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum)]
        easy: AlgoArg,
        #[arg(long, value_enum)]
        hard: AlgoArg,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 1000.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute summary tables from a per-instance CSV.
    Report {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_enum)]
    easy: AlgoArg,
    #[arg(long, value_enum)]
    hard: AlgoArg,
    /// Fitness kind: ratio or discounted.
    #[arg(long, default_value = "ratio")]
    fitness: String,
    #[command(flatten)]
    confidence: ConfidenceArgs,
    #[arg(long, default_value_t = 10.0)]
    sigma1: f64,
    #[arg(long, default_value_t = 33.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    pm: f64,
    #[arg(long, default_value_t = 1000.0)]
    mu_max: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    inner_budget: usize,
    #[arg(long, default_value_t = 10)]
    inner_runs: usize,
    #[arg(long, default_value_t = 10_000)]
    outer_budget: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Re-evaluate the parent each generation instead of freezing its fitness.
    #[arg(long)]
    reevaluate_parent: bool,
    #[arg(long)]
    seed: u64,
    /// Output directory (instance.json, evolution_log.csv, summary.json).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Graph files (repeatable). Edge-list unless the extension is .mtx.
    #[arg(long, required = true)]
    graph: Vec<PathBuf>,
    #[arg(long, default_value = "0")]
    index_base: u8,
    /// Algorithm pairs as easy:hard, e.g. ea:fga (repeatable).
    #[arg(long)]
    pair: Vec<String>,
    /// Fitness kinds (repeatable): ratio, discounted.
    #[arg(long)]
    fitness: Vec<String>,
    /// Mutation settings as sigma1:sigma2 (repeatable; default the three
    /// standard settings).
    #[arg(long)]
    sigma: Vec<String>,
    /// Evolved instances per cell.
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    confidence: ConfidenceArgs,
    #[arg(long)]
    mu_max: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    inner_budget: Option<usize>,
    #[arg(long)]
    inner_runs: Option<usize>,
    #[arg(long)]
    outer_budget: Option<usize>,
    #[arg(long)]
    validation_runs: Option<usize>,
    /// Flat key=value config file; CLI flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed (mandatory; no wall-clock seeding).
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn resolve_out(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(root) = std::env::var(OUT_ROOT_ENV) {
            return PathBuf::from(root).join(path);
        }
    }
    path.to_path_buf()
}

fn parse_sigma(s: &str) -> Result<SigmaSetting> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("sigma setting {s:?} not of the form s1:s2")))?;
    let parse = |t: &str| -> Result<f64> {
        t.parse()
            .map_err(|_| Error::Config(format!("invalid sigma value {t:?}")))
    };
    Ok(SigmaSetting {
        sigma1: parse(a)?,
        sigma2: parse(b)?,
    })
}

fn parse_pair(s: &str) -> Result<(Algorithm, Algorithm)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("pair {s:?} not of the form easy:hard")))?;
    Ok((Algorithm::parse(a)?, Algorithm::parse(b)?))
}

fn read_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for line in fs::read_to_string(path)?.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {line:?} not key=value")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGraph {
            nodes,
            edge_prob,
            seed,
            out,
        } => {
            let g = gen_random_graph(nodes, edge_prob, seed)?;
            let out = resolve_out(&out);
            let mut f = File::create(&out)?;
            writeln!(f, "# G(n={nodes}, p={edge_prob}, seed={seed}), m={}", g.edge_count())?;
            for (u, v) in g.edges() {
                writeln!(f, "{u} {v}")?;
            }
            println!(
                "wrote {} ({} nodes, {} edges)",
                out.display(),
                g.node_count(),
                g.edge_count()
            );
            Ok(())
        }
        Command::InitInstance {
            graph,
            mu_max,
            alpha,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let mut inst = init_random(&g, mu_max, alpha, seed)?;
            inst.graph_ref = Some(graph.graph.display().to_string());
            let out = resolve_out(&out);
            write_instance(&out, &inst, Some(seed), Some("init-instance".into()))?;
            println!(
                "wrote {} (n={}, budget={:.3})",
                out.display(),
                inst.node_count(),
                inst.budget
            );
            Ok(())
        }
        Command::Solve {
            instance,
            graph,
            algo,
            budget,
            runs,
            seed,
            out,
            log_trajectory,
            fga_beta,
            sa_t0,
            sa_cool,
        } => {
            let g = graph.load()?;
            let inst = read_instance(&instance)?;
            let algo: Algorithm = algo.into();
            let cfg = SolverConfig {
                algorithm: algo,
                eval_budget: budget,
                seed: 0,
                fga_beta,
                sa_t0,
                sa_cool,
                record_trajectory: log_trajectory,
            };
            let results = run_batch(&cfg, &inst, &g, runs, seed)?;
            let out = resolve_out(&out);
            write_runs_csv(&out, algo, &results, seed)?;
            if log_trajectory {
                let traj_path = out.with_extension("trajectory.csv");
                let mut w = csv::Writer::from_path(&traj_path)?;
                w.write_record(["run", "eval", "best_fitness"])?;
                for (i, r) in results.iter().enumerate() {
                    for (eval, best) in r.trajectory.as_deref().unwrap_or(&[]) {
                        w.write_record(&[i.to_string(), eval.to_string(), best.to_string()])?;
                    }
                }
                w.flush().map_err(std::io::Error::from)?;
            }
            for (i, r) in results.iter().enumerate() {
                println!("run {i}: best_fitness {:.4} ({} evals)", r.best_fitness, r.evals_used);
            }
            Ok(())
        }
        Command::Evaluate {
            instance,
            graph,
            easy,
            hard,
            runs,
            budget,
            confidence,
            seed,
            out_json,
            out_csv,
        } => {
            let g = graph.load()?;
            let inst = read_instance(&instance)?;
            let mut cfg = EvolverConfig::new(easy.into(), hard.into(), seed);
            cfg.inner_runs = runs;
            cfg.inner_budget = budget;
            cfg.confidence = confidence.resolve()?;
            let (_, stats) = evaluate_instance(&inst, &g, &cfg, seed)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            if let Some(path) = out_json {
                fs::write(resolve_out(&path), serde_json::to_string_pretty(&stats)?)?;
            }
            if let Some(path) = out_csv {
                let mut w = csv::Writer::from_path(resolve_out(&path))?;
                w.write_record(["run", "ratio"])?;
                for (i, r) in stats.per_run_ratios.iter().enumerate() {
                    w.write_record(&[i.to_string(), r.to_string()])?;
                }
                w.flush().map_err(std::io::Error::from)?;
            }
            Ok(())
        }
        Command::Evolve(args) => {
            let g = args.graph.load()?;
            let mut cfg = EvolverConfig::new(args.easy.into(), args.hard.into(), args.seed);
            cfg.fitness_kind = FitnessKind::parse(&args.fitness)?;
            cfg.confidence = args.confidence.resolve()?;
            cfg.sigma1_init = args.sigma1;
            cfg.sigma2_init = args.sigma2;
            cfg.p_m = args.pm;
            cfg.mu_max = args.mu_max;
            cfg.alpha = args.alpha;
            cfg.inner_budget = args.inner_budget;
            cfg.inner_runs = args.inner_runs;
            cfg.outer_budget = args.outer_budget;
            cfg.epsilon = args.epsilon;
            cfg.reevaluate_parent = args.reevaluate_parent;

            let outcome = evolve(&g, &cfg)?;
            let dir = resolve_out(&args.out);
            fs::create_dir_all(&dir)?;
            let mut inst = outcome.best_instance.clone();
            inst.graph_ref = Some(args.graph.graph.display().to_string());
            write_instance(
                &dir.join("instance.json"),
                &inst,
                Some(args.seed),
                Some(format!(
                    "evolved: easy={} hard={} fitness={}",
                    cfg.easy_algo, cfg.hard_algo, args.fitness
                )),
            )?;
            write_evolution_log_csv(&dir.join("evolution_log.csv"), &outcome.log)?;
            let summary = serde_json::json!({
                "best_fitness": outcome.best_fitness,
                "mean_ratio": outcome.best_stats.mean,
                "std_ratio": outcome.best_stats.std,
                "k_alpha": outcome.best_stats.k_alpha,
                "generations": outcome.log.len() - 1,
                "accepted": outcome.log.iter().filter(|e| e.accepted).count(),
                "final_sigma1": outcome.final_sigma1,
                "final_sigma2": outcome.final_sigma2,
                "config": &cfg,
            });
            fs::write(
                dir.join("summary.json"),
                serde_json::to_string_pretty(&summary)?,
            )?;
            println!(
                "evolved instance: fitness {:.4} (mean {:.4}, std {:.4}) -> {}",
                outcome.best_fitness,
                outcome.best_stats.mean,
                outcome.best_stats.std,
                dir.display()
            );
            Ok(())
        }
        Command::Experiment(args) => run_experiment_cmd(args),
        Command::Baseline {
            graph,
            easy,
            hard,
            instances,
            budget,
            runs,
            mu_max,
            alpha,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let mut base = EvolverConfig::new(easy.into(), hard.into(), seed);
            base.inner_budget = budget;
            base.inner_runs = runs;
            base.mu_max = mu_max;
            base.alpha = alpha;
            let name = graph
                .graph
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "graph".into());
            let summary = random_baseline(&name, &g, &base, instances, seed)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(path) = out {
                fs::write(resolve_out(&path), serde_json::to_string_pretty(&summary)?)?;
            }
            Ok(())
        }
        Command::Report { instances, out } => {
            let records = read_instance_records_csv(&instances)?;
            if records.is_empty() {
                return Err(Error::Config("no records in instances CSV".into()));
            }
            let rows = aggregate_records(&records);
            let dir = resolve_out(&out);
            fs::create_dir_all(&dir)?;
            write_summary_csv(&dir.join("summary.csv"), &rows)?;
            fs::write(dir.join("summary.md"), summary_markdown(&rows))?;
            println!("wrote {} summary rows to {}", rows.len(), dir.display());
            Ok(())
        }
    }
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => read_config_file(path)?,
        None => HashMap::new(),
    };
    let from_cfg = |key: &str| config.get(key).cloned();
    let parse_usize = |key: &str| -> Result<Option<usize>> {
        from_cfg(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("config {key}={v:?} not an integer")))
            })
            .transpose()
    };
    let parse_f64 = |key: &str| -> Result<Option<f64>> {
        from_cfg(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("config {key}={v:?} not a number")))
            })
            .transpose()
    };

    // Precedence: CLI flag > config file > default.
    let reps = args.reps.or(parse_usize("reps")?).unwrap_or(10);
    let mu_max = args.mu_max.or(parse_f64("mu-max")?).unwrap_or(1000.0);
    let alpha = args.alpha.or(parse_f64("alpha")?).unwrap_or(0.05);
    let inner_budget = args
        .inner_budget
        .or(parse_usize("inner-budget")?)
        .unwrap_or(10_000);
    let inner_runs = args.inner_runs.or(parse_usize("inner-runs")?).unwrap_or(10);
    let outer_budget = args
        .outer_budget
        .or(parse_usize("outer-budget")?)
        .unwrap_or(10_000);
    let validation_runs = args
        .validation_runs
        .or(parse_usize("validation-runs")?)
        .unwrap_or(10);

    let mut pair_strs = args.pair.clone();
    if pair_strs.is_empty() {
        if let Some(v) = from_cfg("pair") {
            pair_strs = v.split(',').map(str::to_string).collect();
        }
    }
    if pair_strs.is_empty() {
        pair_strs = vec!["ea:fga".into(), "ea:ghc".into()];
    }
    let pairs = pair_strs
        .iter()
        .map(|s| parse_pair(s))
        .collect::<Result<Vec<_>>>()?;

    let mut fitness_strs = args.fitness.clone();
    if fitness_strs.is_empty() {
        if let Some(v) = from_cfg("fitness") {
            fitness_strs = v.split(',').map(str::to_string).collect();
        }
    }
    if fitness_strs.is_empty() {
        fitness_strs = vec!["ratio".into(), "discounted".into()];
    }
    let confidence = args.confidence.resolve()?;
    let fitness_kinds = fitness_strs
        .iter()
        .map(|s| FitnessKind::parse(s).map(|k| (k, confidence)))
        .collect::<Result<Vec<_>>>()?;

    let mut sigma_strs = args.sigma.clone();
    if sigma_strs.is_empty() {
        if let Some(v) = from_cfg("sigma") {
            sigma_strs = v.split(',').map(str::to_string).collect();
        }
    }
    let sigma_settings = if sigma_strs.is_empty() {
        SIGMA_SETTINGS.to_vec()
    } else {
        sigma_strs
            .iter()
            .map(|s| parse_sigma(s))
            .collect::<Result<Vec<_>>>()?
    };

    let mut graphs = Vec::new();
    for path in &args.graph {
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") => GraphFormat::Mtx,
            _ => GraphFormat::Edgelist,
        };
        let g = load_graph(path, format, args.index_base)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        graphs.push((name, g));
    }

    let mut base = EvolverConfig::new(Algorithm::Ea, Algorithm::Fga, 0);
    base.mu_max = mu_max;
    base.alpha = alpha;
    base.inner_budget = inner_budget;
    base.inner_runs = inner_runs;
    base.outer_budget = outer_budget;

    let spec = ExperimentSpec {
        pairs,
        fitness_kinds,
        sigma_settings,
        repetitions: reps,
        base,
        validation_runs,
        seed: args.seed,
    };
    let dir = resolve_out(&args.out);
    let table = run_experiment(&graphs, &spec, Some(&dir))?;
    for failure in &table.failures {
        eprintln!("cell failure: {failure}");
    }
    println!(
        "{} cells, {} instances -> {}",
        table.rows.len(),
        table.records.len(),
        dir.display()
    );
    print!("{}", summary_markdown(&table.rows));
    Ok(())
}
