use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qentropy::distinctness::DistinctnessCostModel;
use qentropy::harness::verify::{run_suite, Suite};
use qentropy::harness::{
    load_distribution, run_estimate, run_experiment, write_csv, Algo, EstimateRequest, ExperimentConfig, Measure,
    SEED_ENV,
};
use qentropy::mean::EstimationMode;
use qentropy::Result;

#[derive(Parser)]
#[command(name = "qentropy", version, about = "Simulated quantum entropy estimators with query accounting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Contract,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Belovs,
    Ambainis,
    Flat34,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator trial and print its report as JSON.
    Estimate {
        /// shannon, kl, renyi, power-sum, min-entropy, coverage, support-size or plugin.
        #[arg(long)]
        algo: String,
        /// Instance shorthand (e.g. zipf:1.5:256) or distribution JSON file.
        #[arg(long)]
        dist: String,
        /// Second distribution for kl.
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// KL promise bound on p_i/q_i.
        #[arg(long)]
        f: Option<f64>,
        /// Coverage sample count, or plug-in sample count.
        #[arg(long)]
        n_samples: Option<u64>,
        /// Support-size probability floor 1/m.
        #[arg(long)]
        m: Option<u64>,
        /// Plug-in functional, e.g. shannon or renyi:2.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, value_enum, default_value = "contract")]
        mode: ModeArg,
        #[arg(long, value_enum)]
        distinctness_cost: Option<CostArg>,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
    },
    /// Run a JSON experiment config and write one CSV row per trial.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Used when the config has no master_seed.
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
    },
    /// Run an invariant suite: estamp, sandwich, poisson, collision, meanest or all.
    Verify {
        suite: String,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
    },
    /// Print the exact value of a functional.
    Exact {
        #[arg(long)]
        dist: String,
        /// shannon, renyi:A, power-sum:A, min-entropy, support-size, coverage:N or kl.
        #[arg(long)]
        measure: String,
        #[arg(long)]
        q: Option<String>,
    },
}

/// Print a line, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Estimate {
            algo,
            dist,
            q,
            alpha,
            eps,
            delta,
            f,
            n_samples,
            m,
            measure,
            mode,
            distinctness_cost,
            seed,
        } => {
            let algo: Algo = algo.parse()?;
            let mut req = EstimateRequest::new(algo, load_distribution(&dist, seed)?, eps, seed);
            req.q = q.map(|t| load_distribution(&t, seed)).transpose()?;
            req.alpha = alpha;
            req.delta = delta;
            req.ratio_bound = f;
            req.n_samples = n_samples;
            req.m = m;
            req.measure = measure.map(|t| t.parse::<Measure>()).transpose()?;
            req.mode = match mode {
                ModeArg::Contract => EstimationMode::Contract,
                ModeArg::Exact => EstimationMode::Exact,
            };
            req.cost_model = distinctness_cost.map(|c| match c {
                CostArg::Belovs => DistinctnessCostModel::belovs(),
                CostArg::Ambainis => DistinctnessCostModel::ambainis(),
                CostArg::Flat34 => DistinctnessCostModel::flat34(),
            });
            let report = run_estimate(&req)?;
            emit(&serde_json::to_string_pretty(&report.to_json())?)?;
            Ok(true)
        }
        Command::Experiment { config, out, seed } => {
            let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&config)?)?;
            let master = cfg.master_seed.unwrap_or(seed);
            let rows = run_experiment(&cfg, master)?;
            write_csv(&rows, BufWriter::new(File::create(&out)?))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(true)
        }
        Command::Verify { suite, seed } => {
            let suite: Suite = suite.parse()?;
            let checks = run_suite(suite, seed)?;
            for c in &checks {
                emit(&c.to_string())?;
            }
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::Exact { dist, measure, q } => {
            let p = load_distribution(&dist, 0)?;
            let q = q.map(|t| load_distribution(&t, 0)).transpose()?;
            let measure: Measure = measure.parse()?;
            let value = measure.evaluate(&p, q.as_ref())?;
            let out = serde_json::json!({ "measure": measure.to_string(), "value": value });
            emit(&out.to_string())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
