//! CLI driver: sampling, exact evaluation, shot estimation, depth sweeps,
//! light-cone analysis, mixed-state traces, and CSV aggregation.
//!
//! Payloads (JSON or CSV) go to stdout or the -o path; diagnostics go to
//! stderr. Exit codes: 0 success, 2 usage/validation errors, 1 runtime
//! failures.

use clap::{Args, Parser, Subcommand};
use otoc_sim::ensemble::{
    sample_circuit_with_seed, Circuit, EnsembleSpec, GateDistribution, GridGeometry,
    TwoQubitGate, C64,
};
use otoc_sim::harness::{self, depth_sweep, fluctuation_stats, load_records, write_records_csv};
use otoc_sim::lightcone::{min_connecting_depth, support_growth, support_of};
use otoc_sim::otoc::{
    mixed_state_moment, otoc_moment, shot_estimate, shots_for_epsilon, CorrelatorSpec,
    TraceMethod,
};
use otoc_sim::pauli::{PauliLetter, PauliString};
use otoc_sim::rng::{derive_stream_seed, Xoshiro256StarStar};
use otoc_sim::statevector;
use otoc_sim::Error;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "otoc", about = "Brickwork random-circuit OTOC simulation")]
struct Cli {
    /// Cap worker parallelism (defaults to the number of cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the statevector memory guard (qubits)
    #[arg(long, global = true)]
    max_qubits: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
}

#[derive(Args)]
struct OperatorArgs {
    /// Butterfly operator, e.g. "X:(3,3)" or "X:(3,3),X:(3,2)"
    /// [default: X at (rows,cols)]
    #[arg(long = "b")]
    butterfly: Option<String>,
    /// Measurement operator (Z-type), e.g. "Z:(1,1)" [default: Z at (1,1)]
    #[arg(long = "m")]
    measurement: Option<String>,
}

#[derive(Args)]
struct ShotArgs {
    /// Number of measurement shots
    #[arg(long, conflicts_with = "epsilon")]
    shots: Option<u64>,
    /// Target additive error; maps to ceil(1/eps^2) shots
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a circuit instance and emit its JSON
    Sample {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gate distribution: haar-2q or fixed-entangler
        #[arg(long, default_value = "haar-2q")]
        ensemble: String,
        /// JSON file with the 4x4 entangler matrix ([[ [re,im], x4 ], x4])
        /// for the fixed-entangler ensemble
        #[arg(long)]
        entangler: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact OTOC moment of a stored circuit
    Eval {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        ops: OperatorArgs,
    },
    /// Emulated shot-based estimate of the OTOC moment
    Estimate {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        ops: OperatorArgs,
        #[command(flatten)]
        shots: ShotArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Ensemble depth sweep; emits the results CSV
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated depths, e.g. 2,4,8
        #[arg(long)]
        depths: String,
        /// Comma-separated moment orders, e.g. 1,2
        #[arg(long, default_value = "2")]
        ks: String,
        #[arg(long)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        ops: OperatorArgs,
        #[command(flatten)]
        shots: ShotArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Light-cone analysis: d* and support growth
    Lightcone {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        depth: usize,
        #[command(flatten)]
        ops: OperatorArgs,
    },
    /// Maximally mixed moment Tr(C^{2k})/2^n
    Trace {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        ops: OperatorArgs,
        /// exact or stochastic
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate an existing results CSV
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

fn resolve_operators(
    geometry: &GridGeometry,
    ops: &OperatorArgs,
) -> Result<(PauliString, PauliString), Error> {
    let butterfly = match &ops.butterfly {
        Some(s) => PauliString::parse(s, geometry)?,
        None => PauliString::single(
            geometry.index(geometry.rows(), geometry.cols())?,
            PauliLetter::X,
        ),
    };
    let measurement = match &ops.measurement {
        Some(s) => PauliString::parse(s, geometry)?,
        None => PauliString::single(0, PauliLetter::Z),
    };
    Ok((butterfly, measurement))
}

fn resolve_shots(shots: &ShotArgs) -> Result<(u64, Option<f64>), Error> {
    match (shots.shots, shots.epsilon) {
        (Some(s), None) => Ok((s, None)),
        (None, Some(e)) => Ok((shots_for_epsilon(e)?, Some(e))),
        (None, None) => Err(Error::InvalidSpec(
            "one of --shots or --epsilon is required".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap enforces exclusivity"),
    }
}

fn parse_list(text: &str, name: &str) -> Result<Vec<usize>, Error> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad {name} entry '{p}'")))
        })
        .collect()
}

fn load_entangler(path: &PathBuf) -> Result<TwoQubitGate, Error> {
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)?;
    if raw.len() != 4 || raw.iter().any(|r| r.len() != 4) {
        return Err(Error::InvalidSpec(
            "entangler matrix must be 4x4 of [re,im] pairs".into(),
        ));
    }
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = C64::new(raw[i][j][0], raw[i][j][1]);
        }
    }
    Ok(TwoQubitGate(m))
}

fn emit(payload: &str, output: &Option<PathBuf>) -> Result<(), Error> {
    match output {
        Some(path) => std::fs::write(path, payload)?,
        None => println!("{payload}"),
    }
    Ok(())
}

/// Usage-class errors exit 2; runtime failures exit 1.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidGeometry(_)
        | Error::SiteOutOfRange { .. }
        | Error::InvalidOperator(_)
        | Error::InvalidSpec(_)
        | Error::QubitGuard { .. }
        | Error::Unsupported(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Sample {
            grid,
            depth,
            seed,
            ensemble,
            entangler,
            output,
        } => {
            let geometry = GridGeometry::new(grid.rows, grid.cols)?;
            let distribution = match ensemble.as_str() {
                "haar-2q" => GateDistribution::HaarTwoQubit,
                "fixed-entangler" => {
                    let path = entangler.ok_or_else(|| {
                        Error::InvalidSpec(
                            "--entangler FILE is required for fixed-entangler".into(),
                        )
                    })?;
                    GateDistribution::FixedEntangler {
                        entangler: load_entangler(&path)?,
                    }
                }
                other => {
                    return Err(Error::InvalidSpec(format!(
                        "unknown ensemble '{other}'"
                    )))
                }
            };
            let spec = EnsembleSpec::new(
                geometry,
                depth,
                distribution,
                PauliString::single(geometry.index(grid.rows, grid.cols)?, PauliLetter::X),
                PauliString::single(0, PauliLetter::Z),
                seed,
            )?;
            let circuit = sample_circuit_with_seed(&spec, seed);
            emit(&circuit.to_json()?, &output)
        }

        Command::Eval { circuit, k, ops } => {
            let circuit = harness::load_circuit(&circuit)?;
            check_guard(&circuit)?;
            let (b, m) = resolve_operators(&circuit.geometry, &ops)?;
            let spec = CorrelatorSpec::new(&circuit, b, m, k)?;
            let exact = otoc_moment(&spec)?;
            emit(
                &json!({ "k": k, "exact": exact }).to_string(),
                &None,
            )
        }

        Command::Estimate {
            circuit,
            k,
            ops,
            shots,
            seed,
        } => {
            let circuit = harness::load_circuit(&circuit)?;
            check_guard(&circuit)?;
            let (b, m) = resolve_operators(&circuit.geometry, &ops)?;
            let (n_shots, epsilon) = resolve_shots(&shots)?;
            let spec = CorrelatorSpec::new(&circuit, b, m, k)?;
            let exact = otoc_moment(&spec)?;
            let mut rng =
                Xoshiro256StarStar::from_seed(derive_stream_seed(seed, &[k as u64]));
            let est = shot_estimate(&spec, n_shots, &mut rng)?;
            let mut out = json!({
                "k": k,
                "exact": exact,
                "estimate": est.estimate,
                "stderr": est.stderr,
                "shots": est.shots,
            });
            if let Some(e) = epsilon {
                out["epsilon"] = json!(e);
            }
            emit(&out.to_string(), &None)
        }

        Command::Sweep {
            grid,
            depths,
            ks,
            instances,
            seed,
            ops,
            shots,
            output,
        } => {
            let geometry = GridGeometry::new(grid.rows, grid.cols)?;
            if geometry.n_qubits() > statevector::max_qubits() {
                return Err(Error::QubitGuard {
                    n: geometry.n_qubits(),
                    limit: statevector::max_qubits(),
                    gib: (1u128 << geometry.n_qubits()) as f64 * 16.0
                        / (1u64 << 30) as f64,
                });
            }
            let (b, m) = resolve_operators(&geometry, &ops)?;
            let depths = parse_list(&depths, "depth")?;
            let ks = parse_list(&ks, "k")?;
            let shot_count = match (shots.shots, shots.epsilon) {
                (None, None) => None,
                _ => Some(resolve_shots(&shots)?.0),
            };
            let base = EnsembleSpec::new(
                geometry,
                depths[0],
                GateDistribution::HaarTwoQubit,
                b,
                m,
                seed,
            )?;
            let table = depth_sweep(&base, &depths, instances, &ks, shot_count)?;
            let mut buf = Vec::new();
            write_records_csv(&mut buf, &table.rows)?;
            emit(String::from_utf8(buf).unwrap().trim_end(), &output)
        }

        Command::Lightcone { grid, depth, ops } => {
            let geometry = GridGeometry::new(grid.rows, grid.cols)?;
            let (b, m) = resolve_operators(&geometry, &ops)?;
            let d_star = min_connecting_depth(&geometry, &b, &m)?;
            let growth = support_growth(&geometry, depth, &support_of(&b))?;
            emit(
                &json!({
                    "d_star": d_star,
                    "support_size_by_depth": growth,
                })
                .to_string(),
                &None,
            )
        }

        Command::Trace {
            circuit,
            k,
            ops,
            method,
            samples,
            seed,
        } => {
            let circuit = harness::load_circuit(&circuit)?;
            check_guard(&circuit)?;
            let (b, m) = resolve_operators(&circuit.geometry, &ops)?;
            let spec = CorrelatorSpec::new(&circuit, b, m, k)?;
            let method = match method.as_str() {
                "exact" => TraceMethod::Exact,
                "stochastic" => TraceMethod::Stochastic { samples },
                other => {
                    return Err(Error::InvalidSpec(format!(
                        "unknown trace method '{other}'"
                    )))
                }
            };
            let mut rng = Xoshiro256StarStar::from_seed(seed);
            let out = mixed_state_moment(&spec, method, &mut rng)?;
            emit(
                &json!({
                    "k": k,
                    "value": out.value,
                    "stderr": out.stderr,
                })
                .to_string(),
                &None,
            )
        }

        Command::Stats { input } => {
            let records = load_records(&input)?;
            let stats = fluctuation_stats(&records)?;
            emit(&serde_json::to_string(&stats)?, &None)
        }
    }
}

fn check_guard(circuit: &Circuit) -> Result<(), Error> {
    let n = circuit.n_qubits();
    let limit = statevector::max_qubits();
    if n > limit {
        return Err(Error::QubitGuard {
            n,
            limit,
            gib: (1u128 << n) as f64 * 16.0 / (1u64 << 30) as f64,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(max) = cli.max_qubits {
        std::env::set_var("OTOC_MAX_QUBITS", max.to_string());
    }
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("otoc: failed to configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otoc: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
