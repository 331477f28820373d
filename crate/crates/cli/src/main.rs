//! `trn`: command-line front end for time resource networks.
//!
//! Exit codes:
//!
//! | code | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 0    | success; for `check` and `demo`, the network is consistent |
//! | 1    | the network is inconsistent                                |
//! | 2    | the deadline passed before a verdict                       |
//! | 3    | input error: bad arguments, document, or configuration     |
//! | 4    | runtime failure: I/O, external solver, or internal error   |

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trn::atn::{allocate_risk, simulate_pstn};
use trn::bench::{self, BenchConfig, SolverKind};
use trn::cp::{encode_as_stcs, ExhaustiveScope};
use trn::document::{ScheduleDocument, TrnDocument, FORMAT_VERSION};
use trn::generator::{generate, Density, GenParams};
use trn::mip::{default_horizon, encode, export_lp, solve_trn, solver_from_env};
use trn::resource::resource_consistent_schedule;
use trn::temporal::check_schedule;
use trn::{scenario, solve, solve_exhaustive, Atn, Error, SolveResult, SolverConfig};

const EXIT_CONSISTENT: u8 = 0;
const EXIT_INCONSISTENT: u8 = 1;
const EXIT_TIMEOUT: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "trn", version, about = "Time resource network consistency checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Cp,
    Mip,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DensityArg {
    Sparse,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scenario {
    SmartHouse,
}

#[derive(Subcommand)]
enum Command {
    /// Decide time-resource consistency of a TRN document.
    Check {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "cp")]
        solver: SolverArg,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Write the witness schedule as JSON.
        #[arg(long)]
        schedule_out: Option<PathBuf>,
        /// External MIP solver command (defaults to $TRN_MIP_SOLVER).
        #[arg(long)]
        mip_command: Option<String>,
        /// Permute every event instead of only resource events (exhaustive only).
        #[arg(long)]
        all_events: bool,
    },
    /// Generate a random TRN-over-STN instance.
    Gen {
        #[arg(long)]
        events: usize,
        /// Number of temporal constraints; derived from --density when absent.
        #[arg(long)]
        temporal: Option<usize>,
        #[arg(long)]
        resource: usize,
        #[arg(long, value_enum, default_value = "sparse")]
        density: DensityArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark grid and write per-instance records as CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the ratio tables as CSV.
        #[arg(long)]
        ratios: Option<PathBuf>,
    },
    /// Write the big-M MIP model of a TRN-over-STN document in LP format.
    ExportLp {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Big-M constant; defaults to the network's temporal span.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Solve a built-in scenario and validate its witness by simulation.
    Demo {
        #[arg(value_enum)]
        scenario: Scenario,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CmdResult = Result<u8, Failure>;

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error: error.into(),
    }
}

fn failure(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        error: error.into(),
    }
}

fn classify(error: Error) -> Failure {
    let code = match &error {
        Error::Timeout | Error::SolverTimeout => EXIT_TIMEOUT,
        Error::InconsistentNetwork
        | Error::UnknownEvent(_)
        | Error::MissingEvent(_)
        | Error::Malformed(_)
        | Error::Domain(_)
        | Error::CapExceeded { .. }
        | Error::UnsupportedAtn(_)
        | Error::SolverNotFound(_)
        | Error::Document(_)
        | Error::Json(_) => EXIT_INPUT,
        _ => EXIT_FAILURE,
    };
    Failure {
        code,
        error: error.into(),
    }
}

fn load(path: &Path) -> Result<trn::Trn, Failure> {
    let doc = match TrnDocument::read(path) {
        Err(Error::Io { path, source }) => {
            return Err(input(anyhow::anyhow!("cannot read {}: {source}", path.display())))
        }
        other => other.map_err(classify)?,
    };
    doc.to_trn().map_err(classify)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(failure)?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn seconds(timeout: Option<f64>) -> Result<Option<Duration>, Failure> {
    timeout
        .map(|s| {
            Duration::try_from_secs_f64(s)
                .ok()
                .filter(|d| !d.is_zero())
                .ok_or_else(|| input(anyhow::anyhow!("--timeout must be a positive number of seconds")))
        })
        .transpose()
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    file: &Path,
    solver: SolverArg,
    timeout: Option<f64>,
    schedule_out: Option<&Path>,
    mip_command: Option<String>,
    all_events: bool,
) -> CmdResult {
    let trn = load(file)?;
    let deadline = seconds(timeout)?;
    let started = Instant::now();
    let result: SolveResult = match solver {
        SolverArg::Cp => solve(&trn, &SolverConfig { deadline, ..SolverConfig::default() }),
        SolverArg::Exhaustive => {
            let scope = if all_events { ExhaustiveScope::AllEvents } else { ExhaustiveScope::ResourceEvents };
            solve_exhaustive(
                &trn,
                &SolverConfig {
                    deadline,
                    exhaustive_scope: scope,
                    ..SolverConfig::default()
                },
            )
        }
        SolverArg::Mip => {
            if !matches!(trn.atn(), Atn::Stn(_)) {
                return Err(input(anyhow::anyhow!(
                    "the mip solver needs a temporal network with a MIP formulation; \
                     {} networks have none, use --solver cp",
                    trn.atn().kind()
                )));
            }
            let command = match mip_command {
                Some(c) => c,
                None => solver_from_env().map_err(classify)?,
            };
            solve_trn(&trn, &command, deadline)
        }
    }
    .map_err(|e| match e {
        Error::Timeout | Error::SolverTimeout => Failure {
            code: EXIT_TIMEOUT,
            error: anyhow::anyhow!("timeout after {:.3} s", started.elapsed().as_secs_f64()),
        },
        other => classify(other),
    })?;

    let stn = trn.atn().base();
    let stats = &result.stats;
    eprintln!(
        "nodes {} | time prunes {} | resource prunes {} | orderings {} | {:.3} s",
        stats.nodes_expanded,
        stats.prunes_by_time,
        stats.prunes_by_resource,
        stats.orderings_checked,
        stats.elapsed.as_secs_f64()
    );
    if result.consistent {
        println!("consistent");
        if let Some(risk) = result.risk_bound {
            println!("risk bound {risk:.6} (success probability >= {:.6})", 1.0 - risk);
        }
    } else {
        println!("inconsistent");
    }

    if let Some(path) = schedule_out {
        let doc = match &result.schedule {
            Some(s) if result.consistent => {
                ScheduleDocument::new(stn, s, result.ordering.as_ref(), result.risk_bound)
            }
            _ => ScheduleDocument {
                version: FORMAT_VERSION,
                consistent: false,
                schedule: Default::default(),
                ordering: None,
                risk_bound: None,
            },
        };
        let text = serde_json::to_string_pretty(&doc).map_err(failure)? + "\n";
        std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(failure)?;
    }
    Ok(if result.consistent { EXIT_CONSISTENT } else { EXIT_INCONSISTENT })
}

fn cmd_gen(
    events: usize,
    temporal: Option<usize>,
    resource: usize,
    density: DensityArg,
    seed: u64,
    output: Option<&Path>,
) -> CmdResult {
    let density = match density {
        DensityArg::Sparse => Density::Sparse,
        DensityArg::Dense => Density::Dense,
    };
    let params = match temporal {
        Some(t) => GenParams::new(events, t, resource, seed),
        None => GenParams::with_density(events, resource, density, seed),
    };
    let g = generate(&params).map_err(|e| match e {
        Error::GenerationFailure(_) => failure(e),
        other => classify(other),
    })?;
    let stn = g.trn.atn().base();
    let temporal_ok = check_schedule(stn, &g.hidden_schedule).map_err(failure)?;
    let resource_ok = resource_consistent_schedule(&g.hidden_schedule, g.trn.resources()).map_err(failure)?;
    let generating = g.trn.resources().iter().filter(|r| r.is_generating()).count();
    eprintln!(
        "N={} T={} R={} ({} generating, {} consuming) seed={}",
        stn.len(),
        stn.constraints().len(),
        g.trn.resources().len(),
        generating,
        g.trn.resources().len() - generating,
        seed
    );
    eprintln!("latent schedule: temporal {temporal_ok}, resource {resource_ok}");
    for e in g.hidden_schedule.sorted_events() {
        eprintln!("  {} {:.6}", stn.name(e), g.hidden_schedule.get(e).unwrap_or(f64::NAN));
    }
    let mut out = writer(output)?;
    writeln!(out, "{}", TrnDocument::from_trn(&g.trn).to_json())
        .and_then(|_| out.flush())
        .map_err(failure)?;
    Ok(EXIT_CONSISTENT)
}

fn cmd_bench(config: &Path, output: &Path, ratios: Option<&Path>) -> CmdResult {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("cannot read {}", config.display()))
        .map_err(input)?;
    let config = BenchConfig::from_json(&text).map_err(classify)?;
    let records = bench::run(&config).map_err(classify)?;
    let file = File::create(output)
        .with_context(|| format!("cannot create {}", output.display()))
        .map_err(failure)?;
    bench::write_csv(&records, BufWriter::new(file)).map_err(failure)?;

    let mut csv_tables = String::new();
    for (num, den) in [
        (SolverKind::Mip, SolverKind::Cp),
        (SolverKind::Exhaustive, SolverKind::Cp),
        (SolverKind::ExhaustiveAll, SolverKind::Cp),
    ] {
        if !(config.solvers.contains(&num) && config.solvers.contains(&den)) {
            continue;
        }
        let rows = bench::ratio_table(&records, num, den);
        let title = format!("{} / {} mean time", num.as_str(), den.as_str());
        print!("{}", bench::render_ratio_table(&rows, &title));
        csv_tables.push_str(&format!("# {title}\n"));
        csv_tables.push_str(&bench::ratio_csv(&rows));
    }
    if let Some(path) = ratios {
        std::fs::write(path, csv_tables)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(failure)?;
    }
    let errors = records.iter().filter(|r| r.outcome == bench::Outcome::Error).count();
    if errors > 0 {
        eprintln!("{errors} record(s) with outcome 'error'");
    }
    eprintln!("{} records written to {}", records.len(), output.display());
    Ok(EXIT_CONSISTENT)
}

fn cmd_export_lp(file: &Path, output: Option<&Path>, horizon: Option<f64>) -> CmdResult {
    let trn = load(file)?;
    let horizon = horizon.unwrap_or_else(|| default_horizon(&trn));
    let model = encode(&trn, horizon).map_err(classify)?;
    let mut out = writer(output)?;
    out.write_all(export_lp(&model).as_bytes())
        .and_then(|_| out.flush())
        .map_err(failure)?;
    Ok(EXIT_CONSISTENT)
}

/// Wall-clock rendering of minutes after noon.
fn clock(minutes: f64) -> String {
    let m = (minutes.round() as i64 + 12 * 60).rem_euclid(24 * 60);
    format!("{:02}:{:02}", m / 60, m % 60)
}

fn cmd_demo(samples: usize, seed: u64) -> CmdResult {
    let trn = scenario::smart_house().map_err(failure)?;
    let result = solve(&trn, &SolverConfig::default()).map_err(classify)?;
    let stn = trn.atn().base();
    println!("smart house, minutes after noon, p = {}", scenario::SUCCESS_PROBABILITY);
    let (Some(schedule), Some(sigma)) = (&result.schedule, &result.ordering) else {
        println!("inconsistent");
        return Ok(EXIT_INCONSISTENT);
    };
    println!("consistent");
    println!("schedule:");
    for e in schedule.sorted_events() {
        let t = schedule.get(e).unwrap_or(f64::NAN);
        println!("  {:<12} {:>9.3}  {}", stn.name(e), t, clock(t));
    }
    let Atn::Pstn(pstn) = trn.atn() else {
        return Err(failure(anyhow::anyhow!("scenario is not probabilistic")));
    };
    let mut extra = trn.interval_constraints();
    extra.extend(encode_as_stcs(sigma));
    let alloc = allocate_risk(pstn, &extra);
    println!("tightened uncertain events:");
    for u in pstn.udns() {
        let (_, lo, hi) = alloc.boxes[&u.to];
        println!("  {:<12} [{lo:.3}, {hi:.3}]", stn.name(u.to));
    }
    let risk = result.risk_bound.unwrap_or(f64::NAN);
    println!("certified risk bound {risk:.6}");
    println!("certified success probability {:.6}", 1.0 - risk);
    if samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let freq = simulate_pstn(pstn, &extra, schedule, samples, &mut rng).map_err(failure)?;
        println!("simulated success frequency {freq:.6} over {samples} samples");
    }
    Ok(EXIT_CONSISTENT)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Check {
            file,
            solver,
            timeout,
            schedule_out,
            mip_command,
            all_events,
        } => cmd_check(&file, solver, timeout, schedule_out.as_deref(), mip_command, all_events),
        Command::Gen {
            events,
            temporal,
            resource,
            density,
            seed,
            output,
        } => cmd_gen(events, temporal, resource, density, seed, output.as_deref()),
        Command::Bench { config, output, ratios } => cmd_bench(&config, &output, ratios.as_deref()),
        Command::ExportLp { file, output, horizon } => cmd_export_lp(&file, output.as_deref(), horizon),
        Command::Demo {
            scenario: Scenario::SmartHouse,
            samples,
            seed,
        } => cmd_demo(samples, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_CONSISTENT });
        }
    };
    let code = match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(f)) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
        Err(_) => EXIT_FAILURE,
    };
    ExitCode::from(code)
}
