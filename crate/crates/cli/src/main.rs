//! Command-line front end: problem generation, solving, training, benchmarks and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gqco::baselines::{qaoa_optimize, simulated_annealing, timed, QaoaConfig, SaConfig};
use gqco::embed::{embed, features_csv};
use gqco::harness::{
    circuit_stats, failure_report, gqco_solve, maxcut_demo, run_benchmark, summarize_run, BenchmarkSpec, Instance,
    CIRCUIT_STATS_HEADER,
};
use gqco::ising::{brute_force_solve, random_problem};
use gqco::model::ExpertInit;
use gqco::train::{expert_tune, TrainConfig, Trainer};
use gqco::{GqcoError, Model, Problem, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gqco", version, about = "Generative quantum combinatorial optimisation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Gqco,
    Sa,
    Qaoa,
    Brute,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random Ising problem as JSON.
    GenProblem {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one problem and print the answer as JSON.
    Solve {
        #[arg(long, value_enum)]
        solver: SolverArg,
        #[arg(long)]
        problem: PathBuf,
        /// Model checkpoint (gqco only).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Circuits sampled by gqco.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write node and edge features as CSV into this directory.
        #[arg(long)]
        dump_features: Option<PathBuf>,
    },
    /// Run (or resume) curriculum training in a run directory.
    Train {
        /// Training configuration JSON (defaults apply to missing fields).
        #[arg(long)]
        config: Option<PathBuf>,
        /// New run directory.
        #[arg(long, conflicts_with = "resume")]
        out: Option<PathBuf>,
        /// Existing run directory to continue.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop after this many further steps.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Train only the expert for one size, leaving shared weights frozen.
    ExpertTune {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output checkpoint.
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark gqco against the baselines.
    Bench {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Re-solve budgets for failed problems.
        #[arg(long, value_delimiter = ',', default_value = "200,400,800,1600")]
        resolve: Vec<usize>,
    },
    /// Summarise a training run or benchmark directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Six-node max-cut under finite shot budgets.
    Demo {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| GqcoError::config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn load_model(path: &Path) -> Result<Model> {
    if !path.exists() {
        return Err(GqcoError::config(format!("checkpoint {} not found", path.display())));
    }
    Model::load(path)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GQCO_THREADS") {
        let n: usize = v.parse().map_err(|_| GqcoError::config(format!("GQCO_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(GqcoError::config("GQCO_THREADS must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| GqcoError::resource(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    solver: SolverArg,
    problem: &Path,
    checkpoint: Option<&Path>,
    samples: usize,
    sweeps: usize,
    layers: usize,
    seed: u64,
    dump: Option<&Path>,
) -> Result<()> {
    let p: Problem = read_json(problem)?;
    let truth = brute_force_solve(&p)?;
    let out = match solver {
        SolverArg::Gqco => {
            let path = checkpoint.ok_or_else(|| GqcoError::config("--checkpoint is required for the gqco solver"))?;
            let model = load_model(path)?;
            if let Some(dir) = dump {
                let (nodes, edges) = features_csv(&embed(&p, model.config().max_qubits));
                fs::create_dir_all(dir)?;
                fs::write(dir.join("nodes.csv"), nodes)?;
                fs::write(dir.join("edges.csv"), edges)?;
            }
            let inst = Instance::from_problem(p, 0, seed)?;
            let rec = gqco_solve(&inst, &model, samples, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let circuit = gqco::circuit::Circuit::from_tokens(model.vocabulary(), rec.n, rec.tokens.clone().unwrap_or_default())?;
            json!({
                "solver": "gqco", "answer": rec.answer, "energy": rec.energy, "min_energy": rec.min_energy,
                "correct": rec.correct, "wall_time": rec.wall_time, "expectation": rec.expectation,
                "circuit": circuit.to_json(),
            })
        }
        SolverArg::Qaoa => {
            let start = std::time::Instant::now();
            let run = qaoa_optimize(&p, &QaoaConfig::with_layers(layers, seed))?;
            let wall_time = start.elapsed().as_secs_f64();
            json!({
                "solver": "qaoa", "answer": run.answer, "energy": gqco::ising::bits_energy(&p, &run.answer)?,
                "min_energy": truth.min_energy, "correct": truth.is_ground_state(&run.answer), "wall_time": wall_time,
                "expectation": run.expectation, "angles": run.angles,
            })
        }
        SolverArg::Sa | SolverArg::Brute => {
            let o = if matches!(solver, SolverArg::Sa) {
                timed(&p, |p| simulated_annealing(p, &SaConfig::with_sweeps(sweeps, seed)))?
            } else {
                timed(&p, gqco::baselines::brute_force_answer)?
            };
            json!({
                "solver": if matches!(solver, SolverArg::Sa) { "sa" } else { "brute" }, "answer": o.bits, "energy": o.energy,
                "min_energy": truth.min_energy, "correct": truth.is_ground_state(&o.bits), "wall_time": o.wall_time,
            })
        }
    };
    print_json(&out)
}

fn train(config: Option<&Path>, out: Option<&Path>, resume: Option<&Path>, steps: Option<u64>) -> Result<()> {
    let mut trainer = match (resume, out) {
        (Some(dir), _) => {
            if config.is_some() {
                return Err(GqcoError::config("--config cannot change a resumed run"));
            }
            Trainer::<f64>::resume(dir)?
        }
        (None, Some(dir)) => {
            let cfg: TrainConfig = config.map(read_json).transpose()?.unwrap_or_default();
            Trainer::create(cfg, dir)?
        }
        (None, None) => return Err(GqcoError::config("either --out or --resume is required")),
    };
    trainer.run(steps, |r| {
        if let Some(acc) = r.accuracy {
            println!("step {} n_max {} loss {:.4} accuracy {acc:.3}", r.step, r.n_max, r.metrics.loss);
        }
    })?;
    println!("{}", summarize_run(trainer.run_dir().expect("run directory"))?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::GenProblem { n, seed, out } => {
            let p: Problem = random_problem(n, seed)?;
            let text = serde_json::to_string_pretty(&p)?;
            match out {
                Some(path) => fs::write(path, text + "\n")?,
                None => println!("{text}"),
            }
        }
        Command::Solve { solver, problem, checkpoint, samples, sweeps, layers, seed, dump_features } => {
            solve(solver, &problem, checkpoint.as_deref(), samples, sweeps, layers, seed, dump_features.as_deref())?
        }
        Command::Train { config, out, resume, steps } => train(config.as_deref(), out.as_deref(), resume.as_deref(), steps)?,
        Command::ExpertTune { checkpoint, n, steps, config, out } => {
            let mut model = load_model(&checkpoint)?;
            let cfg: TrainConfig = config.as_deref().map(read_json).transpose()?.unwrap_or_default();
            if model.select_expert(n).is_err() {
                model.add_expert(n, ExpertInit::CopyNearest)?;
                println!("added expert for n = {n}");
            }
            let metrics = expert_tune(&mut model, n, &cfg, steps)?;
            if let Some(last) = metrics.last() {
                println!("final loss {:.4} best expectation {:.4}", last.loss, last.best_expectation);
            }
            model.save(&out)?;
        }
        Command::Bench { spec, checkpoint, out, resolve } => {
            let spec: BenchmarkSpec = spec.as_deref().map(read_json).transpose()?.unwrap_or_default();
            let model = load_model(&checkpoint)?;
            let res = run_benchmark(&spec, &model, Some(&out))?;
            let mut stats = format!("{CIRCUIT_STATS_HEADER}\n");
            for row in circuit_stats(&model, &spec)? {
                stats.push_str(&row.csv_row());
                stats.push('\n');
            }
            fs::write(out.join("circuit_stats.csv"), stats)?;
            let mut instances = Vec::new();
            for &n in &spec.sizes {
                instances.extend(spec.instances::<f64>(n)?);
            }
            let failures = failure_report(&res.records, &instances, &model, &resolve, spec.seed)?;
            fs::write(out.join("failures.json"), serde_json::to_string_pretty(&failures)?)?;
            println!("{}", summarize_run(&out)?);
        }
        Command::Report { run, json } => {
            let summary = summarize_run(&run)?;
            if json {
                print_json(&summary)?;
            } else {
                print!("{summary}");
            }
        }
        Command::Demo { checkpoint, seed } => print_json(&maxcut_demo(&load_model(&checkpoint)?, seed)?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
