use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qldp::harness::{emit_csv, run_experiment, ConfigOverrides, ExperimentConfig};
use qldp::io::{
    read_density_matrix, read_povm, read_product_state, read_qldp_plan, read_qsq_plan, write_json,
};
use qldp::learning::{
    copies_per_bit, generalization_error, learn_parity_qldp, learn_parity_qsq,
    quantum_example_state, ExampleDistribution, ParityConcept,
};
use qldp::measurement::{
    check_dp, expectation, minimal_triviality, minimal_triviality_on_set, DpVerdict,
    TrivialityCertificate, WitnessStates,
};
use qldp::oracles::{noise_model, QsqOracle};
use qldp::protocols::{simulate_noninteractive_qldp, simulate_nonadaptive_qsq};
use qldp::{Error, ProductState, Result, Stream};

const EXIT_VIOLATION: u8 = 4;
const EXIT_THRESHOLD: u8 = 5;

#[derive(Parser)]
#[command(name = "qldp", version, about = "Quantum local differential privacy toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest α for which a POVM is α-trivial, over all states or a given set.
    CheckTrivial {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long, num_args = 1..)]
        states: Vec<PathBuf>,
    },
    /// Checks α-differential privacy of a POVM on a list of product states.
    CheckDp {
        #[arg(long)]
        povm: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        states: Vec<PathBuf>,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        registers: usize,
    },
    #[command(subcommand)]
    Simulate(Simulate),
    #[command(subcommand)]
    Learn(Learn),
    /// Runs a seeded experiment from a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

#[derive(Args)]
struct SeedArg {
    /// Falls back to QLDP_SEED.
    #[arg(long, env = "QLDP_SEED")]
    seed: u64,
}

#[derive(Subcommand)]
enum Simulate {
    /// Answers statistical queries with private measurements.
    QsqViaQldp {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        report: PathBuf,
    },
    /// Samples private measurements through statistical queries.
    QldpViaQsq {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        beta: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "uniform")]
        noise: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Qsq,
    Qldp,
}

#[derive(Subcommand)]
enum Learn {
    /// Learns a parity from quantum examples.
    Parity {
        #[arg(long)]
        d: usize,
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        s: Option<String>,
        #[arg(long)]
        random: bool,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 0.2)]
        tau: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "adversarial_extreme")]
        noise: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn certificate_json(cert: &TrivialityCertificate, states: &[PathBuf]) -> Value {
    let witness = match &cert.witness.states {
        WitnessStates::Eigenvectors { .. } => json!({
            "kind": "extremal eigenvectors",
            "outcome": cert.witness.outcome,
        }),
        WitnessStates::SetIndices { high, low } => json!({
            "kind": "state pair",
            "outcome": cert.witness.outcome,
            "high": states[*high].display().to_string(),
            "low": states[*low].display().to_string(),
        }),
    };
    json!({
        "alpha_star": finite_or_string(cert.alpha_star),
        "ratio": finite_or_string(cert.witness.ratio),
        "witness": witness,
    })
}

fn finite_or_string(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::CheckTrivial { povm, states } => {
            let m = read_povm(&povm)?;
            let cert = if states.is_empty() {
                minimal_triviality(&m)
            } else {
                let set = states
                    .iter()
                    .map(|p| read_density_matrix(p))
                    .collect::<Result<Vec<_>>>()?;
                minimal_triviality_on_set(&m, &set)?
            };
            print(&certificate_json(&cert, &states));
            Ok(0)
        }
        Command::CheckDp {
            povm,
            states,
            alpha,
            registers,
        } => {
            let m = read_povm(&povm)?;
            let list = states
                .iter()
                .map(|p| read_product_state(p))
                .collect::<Result<Vec<_>>>()?;
            if let Some((path, s)) = states.iter().zip(&list).find(|(_, s)| s.len() != registers) {
                return Err(Error::Validation(format!(
                    "{} has {} registers, expected {registers}",
                    path.display(),
                    s.len()
                )));
            }
            match check_dp(&m, &list, alpha)? {
                DpVerdict::Pass { neighbor_pairs } => {
                    print(&json!({ "pass": true, "alpha": alpha, "neighbor_pairs": neighbor_pairs }));
                    Ok(0)
                }
                DpVerdict::Violation(v) => {
                    print(&json!({
                        "pass": false,
                        "alpha": alpha,
                        "rho": states[v.rho].display().to_string(),
                        "sigma": states[v.sigma].display().to_string(),
                        "outcome": v.outcome,
                        "log_ratio": finite_or_string(v.ratio.ln()),
                    }));
                    Ok(EXIT_VIOLATION)
                }
            }
        }
        Command::Simulate(sim) => simulate(sim),
        Command::Learn(Learn::Parity {
            d,
            s,
            random: _,
            mode,
            epsilon,
            beta,
            tau,
            seed,
            report,
            noise,
        }) => learn_parity(d, s, mode, epsilon, beta, tau, seed.seed, &report, &noise),
        Command::Experiment {
            config,
            out,
            csv,
            trials,
            seed,
            parallelism,
        } => {
            let env_seed = match std::env::var("QLDP_SEED") {
                Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| {
                    Error::Validation(format!("QLDP_SEED must be an unsigned integer, got {v:?}"))
                })?),
                Err(_) => None,
            };
            let overrides = ConfigOverrides {
                master_seed: seed,
                trials,
                parallelism,
                default_seed: env_seed,
            };
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let report = run_experiment(&cfg)?;
            if let Some(path) = &out {
                write_json(path, &report)?;
            }
            if let Some(path) = &csv {
                emit_csv(&report, path)?;
            }
            for check in &report.checks {
                println!(
                    "{} {}: {} (threshold {})",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.value,
                    check.threshold
                );
            }
            println!(
                "{} {} ({} trials, {:.2}s)",
                if report.pass { "PASS" } else { "FAIL" },
                cfg.kind,
                cfg.trials,
                report.wall_clock_secs
            );
            Ok(if report.pass { 0 } else { EXIT_THRESHOLD })
        }
    }
}

fn simulate(sim: Simulate) -> Result<u8> {
    match sim {
        Simulate::QsqViaQldp {
            state,
            queries,
            alpha,
            beta,
            seed,
            report,
        } => {
            let rho = read_density_matrix(&state)?;
            let plan = read_qsq_plan(&queries)?;
            let result = simulate_nonadaptive_qsq(&plan, &rho, alpha, beta, Stream::from_seed(seed.seed))?;
            let exact = plan
                .queries()
                .iter()
                .map(|q| expectation(&q.povm, &rho))
                .collect::<Result<Vec<_>>>()?;
            let out = json!({
                "estimates": result.estimates,
                "exact": exact,
                "tolerances": plan.queries().iter().map(|q| q.tau).collect::<Vec<_>>(),
                "samples": result.samples,
                "qsq_queries": plan.len(),
                "qldp_queries": result.registers_used,
                "registers_used": result.registers_used,
                "budget": result.budget,
                "ledger": result.ledger,
            });
            write_json(&report, &out)?;
            println!("answered {} queries with {} registers", plan.len(), result.registers_used);
            Ok(0)
        }
        Simulate::QldpViaQsq {
            state,
            queries,
            epsilon,
            beta,
            seed,
            report,
            noise,
        } => {
            let rho = read_density_matrix(&state)?;
            let plan = read_qldp_plan(&queries, epsilon)?;
            let root = Stream::from_seed(seed.seed);
            let mut oracle = QsqOracle::new(rho, noise_model(&noise)?, root.split(0));
            let mut rng = root.split(1);
            let result = simulate_noninteractive_qldp(&plan, &mut oracle, beta, &mut rng)?;
            let out = json!({
                "tau": result.tau,
                "noise": noise,
                "outcomes": result.outcomes,
                "qldp_queries": plan.len(),
                "qsq_queries": result.qsq_queries,
                "clamps": result.clamps,
                "budget": plan.budget(),
            });
            write_json(&report, &out)?;
            println!(
                "sampled {} measurements with {} statistical queries",
                plan.len(),
                result.qsq_queries
            );
            Ok(0)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn learn_parity(
    d: usize,
    s: Option<String>,
    mode: Mode,
    epsilon: f64,
    beta: f64,
    tau: f64,
    seed: u64,
    report: &Path,
    noise: &str,
) -> Result<u8> {
    use rand::Rng;

    let root = Stream::from_seed(seed);
    let concept = match s {
        Some(bits) => {
            let c = ParityConcept::parse(&bits)?;
            if c.d() != d {
                return Err(Error::Validation(format!("--s has {} bits but --d is {d}", c.d())));
            }
            c
        }
        None => {
            if d == 0 || d > 63 {
                return Err(Error::Validation(format!("d must lie in 1..=63, got {d}")));
            }
            ParityConcept::from_index(d, root.split(2).random_range(0..1u64 << d))?
        }
    };
    let uniform = ExampleDistribution::uniform(d)?;
    let state = quantum_example_state(&concept, &uniform)?;
    let out = match mode {
        Mode::Qsq => {
            let mut oracle = QsqOracle::new(state, noise_model(noise)?, root.split(0));
            let h = learn_parity_qsq(&mut oracle, d, tau)?;
            json!({
                "mode": "qsq",
                "secret": concept.to_string(),
                "recovered": h.to_string(),
                "correct": h == concept,
                "generalization_error": generalization_error(&h, &concept, &uniform)?,
                "noise": noise,
                "tau": tau,
                "qsq_queries": oracle.queries(),
                "copies_consumed": 0,
            })
        }
        Mode::Qldp => {
            let n = copies_per_bit(d, epsilon, beta, tau)? * d as u64;
            let copies = ProductState::copies(state, n as usize)?;
            let run = learn_parity_qldp(&copies, d, epsilon, beta, tau, root.split(1))?;
            let used = &run.ledger[..run.copies_used as usize];
            json!({
                "mode": "qldp",
                "secret": concept.to_string(),
                "recovered": run.hypothesis.to_string(),
                "correct": run.hypothesis == concept,
                "generalization_error": generalization_error(&run.hypothesis, &concept, &uniform)?,
                "estimates": run.estimates,
                "alpha": run.alpha,
                "tau": tau,
                "qldp_queries": run.queries,
                "copies_per_bit": run.copies_per_bit,
                "copies_consumed": run.copies_used,
                "budget": run.budget,
                "max_register_spent": used.iter().map(|l| l.spent).fold(0.0, f64::max),
                "max_register_queries": used.iter().map(|l| l.queries).max().unwrap_or(0),
            })
        }
    };
    write_json(report, &out)?;
    let correct = out["correct"].as_bool().unwrap_or(false);
    println!(
        "secret {} recovered {} ({})",
        out["secret"].as_str().unwrap_or_default(),
        out["recovered"].as_str().unwrap_or_default(),
        if correct { "correct" } else { "incorrect" }
    );
    Ok(if correct { 0 } else { EXIT_THRESHOLD })
}
