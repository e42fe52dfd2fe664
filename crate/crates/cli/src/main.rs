use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use woodbury_core::estimator::{
    shot_plan, write_estimates_csv, CircuitEstimator, EstimatorConfig, EvaluationMode,
    MitigationConfig, MitigationMode,
};
use woodbury_core::experiment::{
    oracle_check, run_figure1, verify_conjecture, write_plot_json, write_rows_csv, ExperimentConfig,
};
use woodbury_core::rng::derive_seed;
use woodbury_core::simulator::NoiseModel;
use woodbury_core::solver::{solve_overlap, solve_rank1_overlap, solve_rank1_overlap_with_plan, APart};
use woodbury_core::WoodburyProblem;

/// Shots per overlap for the pilot run that feeds `--epsilon`.
const PILOT_SHOTS: u64 = 1000;
const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "woodbury", version, about = "Woodbury-identity linear solver on simulated quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate <z|x> for a problem file
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "sampled")]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        /// Target precision; derives per-overlap shot counts (rank one, A = I)
        #[arg(long, conflicts_with = "shots")]
        epsilon: Option<f64>,
        #[arg(long, default_value = "none")]
        mitigation: MitigationMode,
        /// Noise model JSON file
        #[arg(long)]
        noise: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-overlap estimates as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the all-uniform instance over sizes and mitigation modes
    Figure1 {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Plot series JSON (defaults to <out> with a .plot.json extension)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Compare the closed-form rank-one conditioning against SVD
    VerifyConjecture {
        #[arg(long, default_value_t = 1024)]
        dim_max: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare exact-mode solves with the dense oracle on random problems
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        max_qubits: usize,
        #[arg(long, default_value_t = 4)]
        max_rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(io::BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem: &Path,
    mode: Mode,
    shots: u64,
    epsilon: Option<f64>,
    mitigation: MitigationMode,
    noise: Option<&Path>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let p: WoodburyProblem = read_json(problem)?;
    let noise = match noise {
        Some(path) => read_json(path)?,
        None => NoiseModel::noiseless(),
    };
    let config = EstimatorConfig {
        mode: match mode {
            Mode::Exact => EvaluationMode::Exact,
            Mode::Sampled => EvaluationMode::Sampled,
        },
        noise,
        mitigation: MitigationConfig::new(mitigation, None, None)?,
        shots,
        ..EstimatorConfig::default()
    };
    let report = match epsilon {
        None => solve_overlap(&p, &CircuitEstimator::new(config, seed)?)?,
        Some(eps) => {
            if matches!(mode, Mode::Exact) {
                bail!("--epsilon only applies to sampled mode");
            }
            if p.rank() != 1 || *p.a_part() != APart::Identity {
                bail!("--epsilon needs a rank-one problem with A = I");
            }
            let pilot_config = EstimatorConfig {
                shots: PILOT_SHOTS,
                ..config.clone()
            };
            let pilot = solve_rank1_overlap(&p, &CircuitEstimator::new(pilot_config, derive_seed(seed, 1))?)?;
            let ip: Vec<_> = pilot.per_inner_product.iter().map(|e| e.value).collect();
            let f = p.factors();
            let ab = f.alphas[0] * f.c_matrix[(0, 0)] * f.betas[0];
            let plan = shot_plan(eps, ab, ip[0], ip[1], ip[2], ip[3])?;
            eprintln!(
                "shot plan: z|b {}, v0|b {}, v0|u0 {}, z|u0 {}",
                plan.n_zb, plan.n_v0b, plan.n_v0u0, plan.n_zu0
            );
            solve_rank1_overlap_with_plan(&p, &CircuitEstimator::new(config, seed)?, Some(&plan))?
        }
    };
    if let Some(path) = out {
        let mut w = create(path)?;
        write_estimates_csv(&mut w, &report.per_inner_product)?;
        w.flush()?;
    }
    print_json(&report)
}

fn figure1(config: &Path, out: &Path, plot: Option<&Path>) -> Result<()> {
    let cfg: ExperimentConfig = read_json(config)?;
    let rows = run_figure1(&cfg)?;
    let mut w = create(out)?;
    write_rows_csv(&mut w, &rows)?;
    w.flush()?;
    let plot_path = plot.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("plot.json"));
    let mut w = create(&plot_path)?;
    write_plot_json(&mut w, &rows)?;
    w.flush()?;
    for r in &rows {
        println!(
            "log2_n={:<3} {:<8} estimate={:.6} relative_error={:.3e}",
            r.log2_n,
            r.mitigation.label(),
            r.estimate,
            r.relative_error
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve {
            problem,
            mode,
            shots,
            epsilon,
            mitigation,
            noise,
            seed,
            out,
        } => solve(&problem, mode, shots, epsilon, mitigation, noise.as_deref(), seed, out.as_deref()),
        Command::Figure1 { config, out, plot } => figure1(&config, &out, plot.as_deref()),
        Command::VerifyConjecture { dim_max, trials, seed } => {
            let report = verify_conjecture(dim_max, trials, seed)?;
            print_json(&report)
        }
        Command::OracleCheck {
            trials,
            max_qubits,
            max_rank,
            seed,
        } => {
            let report = oracle_check(trials, max_qubits, max_rank, seed)?;
            print_json(&report)?;
            if report.max_delta > ORACLE_TOLERANCE {
                bail!("max deviation {:e} exceeds {ORACLE_TOLERANCE:e}", report.max_delta);
            }
            Ok(())
        }
    }
}
