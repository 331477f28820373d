//! Benchmark grid: generated instances solved by several deciders under a
//! per-instance timeout, with CSV output and solver-vs-solver ratio tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cp::{solve, solve_exhaustive, ExhaustiveScope, SolverConfig};
use crate::error::{Error, Result};
use crate::generator::{generate, Density, GenParams};
use crate::mip::{solve_trn, solver_from_env};
use crate::resource::Trn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Cp,
    Mip,
    /// Permutations of the resource events.
    Exhaustive,
    /// Permutations of every event.
    ExhaustiveAll,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Cp => "cp",
            SolverKind::Mip => "mip",
            SolverKind::Exhaustive => "exhaustive",
            SolverKind::ExhaustiveAll => "exhaustive-all",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp" => Ok(SolverKind::Cp),
            "mip" => Ok(SolverKind::Mip),
            "exhaustive" => Ok(SolverKind::Exhaustive),
            "exhaustive-all" => Ok(SolverKind::ExhaustiveAll),
            other => Err(Error::Domain(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Consistent,
    Inconsistent,
    Timeout,
    Error,
}

impl Outcome {
    fn verdict(self) -> Option<bool> {
        match self {
            Outcome::Consistent => Some(true),
            Outcome::Inconsistent => Some(false),
            _ => None,
        }
    }

    fn finished(self) -> bool {
        self.verdict().is_some()
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub n_values: Vec<usize>,
    pub r_values: Vec<usize>,
    #[serde(default = "BenchConfig::default_densities")]
    pub densities: Vec<Density>,
    pub trials_per_cell: usize,
    /// Per-instance wall-clock limit in seconds.
    pub timeout_s: f64,
    #[serde(default = "BenchConfig::default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub base_seed: u64,
    /// Run on the calling thread only.
    #[serde(default)]
    pub serial: bool,
    /// External MIP solver command; falls back to `TRN_MIP_SOLVER`.
    #[serde(default)]
    pub mip_command: Option<String>,
    /// Skip a solver on larger cells once it has timed out on every trial of
    /// a smaller one with the same R and density.
    #[serde(default = "default_true")]
    pub skip_after_timeout: bool,
}

impl BenchConfig {
    fn default_densities() -> Vec<Density> {
        vec![Density::Sparse, Density::Dense]
    }

    fn default_solvers() -> Vec<SolverKind> {
        vec![SolverKind::Cp, SolverKind::Mip]
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        if c.trials_per_cell == 0 || c.timeout_s.is_nan() || c.timeout_s <= 0.0 {
            return Err(Error::Domain("trials_per_cell and timeout_s must be positive".into()));
        }
        Ok(c)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub solver: SolverKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub density: Density,
    pub trial: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub elapsed_s: f64,
}

/// Per-instance seed from the grid coordinates (splitmix64 finaliser over a
/// running combination).
pub fn cell_seed(base: u64, n: usize, r: usize, density: Density, trial: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let d = match density {
        Density::Sparse => 0,
        Density::Dense => 1,
    };
    [n as u64, r as u64, d, trial as u64]
        .into_iter()
        .fold(mix(base), |acc, x| mix(acc ^ x))
}

/// Runs one decider on one instance; `Err` only for timeouts and failures.
pub fn run_solver(
    solver: SolverKind,
    trn: &Trn,
    timeout: Duration,
    mip_command: Option<&str>,
) -> Result<bool> {
    let config = SolverConfig {
        deadline: Some(timeout),
        exhaustive_cap: None,
        ..SolverConfig::default()
    };
    match solver {
        SolverKind::Cp => Ok(solve(trn, &config)?.consistent),
        SolverKind::Exhaustive => Ok(solve_exhaustive(trn, &config)?.consistent),
        SolverKind::ExhaustiveAll => {
            let config = SolverConfig {
                exhaustive_scope: ExhaustiveScope::AllEvents,
                ..config
            };
            Ok(solve_exhaustive(trn, &config)?.consistent)
        }
        SolverKind::Mip => {
            let command = match mip_command {
                Some(c) => c.to_string(),
                None => solver_from_env()?,
            };
            Ok(solve_trn(trn, &command, Some(timeout))?.consistent)
        }
    }
}

struct Job {
    solver: SolverKind,
    instance: usize,
}

struct Instance {
    n: usize,
    r: usize,
    density: Density,
    trial: usize,
    seed: u64,
    trn: Option<Trn>,
}

fn worker_count(config: &BenchConfig) -> usize {
    if config.serial {
        return 1;
    }
    thread::available_parallelism()
        .map(|n| n.get().saturating_sub(1))
        .unwrap_or(1)
        .max(1)
}

/// Runs the full grid. Generation failures and solver errors become
/// `error` records; solvers that finish with different verdicts on the same
/// instance have all their records for it turned into `error` as well.
pub fn run(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let mut instances = Vec::new();
    for &density in &config.densities {
        for &r in &config.r_values {
            for &n in &config.n_values {
                for trial in 0..config.trials_per_cell {
                    let seed = cell_seed(config.base_seed, n, r, density, trial);
                    let trn = generate(&GenParams::with_density(n, r, density, seed))
                        .ok()
                        .map(|g| g.trn);
                    instances.push(Instance {
                        n,
                        r,
                        density,
                        trial,
                        seed,
                        trn,
                    });
                }
            }
        }
    }

    let timeout = config.timeout();
    let mut records = Vec::new();
    // cells run in increasing N so that a solver can be skipped once it has
    // timed out on every trial of a smaller cell
    let mut gave_up: BTreeMap<(SolverKind, usize, Density), usize> = BTreeMap::new();
    let mut by_cell: BTreeMap<(Density, usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        by_cell.entry((inst.density, inst.r, inst.n)).or_default().push(i);
    }
    for (&(density, r, n), members) in &by_cell {
        let mut jobs = Vec::new();
        for &solver in &config.solvers {
            let skip = config.skip_after_timeout
                && gave_up.get(&(solver, r, density)).is_some_and(|&m| m < n);
            for &i in members {
                if skip {
                    let inst = &instances[i];
                    records.push(record(solver, inst, Outcome::Timeout, timeout.as_secs_f64()));
                } else {
                    jobs.push(Job { solver, instance: i });
                }
            }
        }
        let cell = run_jobs(&jobs, &instances, timeout, config, worker_count(config));
        for &solver in &config.solvers {
            let mine: Vec<&BenchRecord> = cell.iter().filter(|r| r.solver == solver).collect();
            if !mine.is_empty() && mine.iter().all(|r| r.outcome == Outcome::Timeout) {
                gave_up.entry((solver, r, density)).or_insert(n);
            }
        }
        records.extend(cell);
    }

    mark_disagreements(&mut records);
    records.sort_by(|a, b| {
        (a.density, a.r, a.n, a.trial, a.solver).cmp(&(b.density, b.r, b.n, b.trial, b.solver))
    });
    Ok(records)
}

fn record(solver: SolverKind, inst: &Instance, outcome: Outcome, elapsed_s: f64) -> BenchRecord {
    BenchRecord {
        solver,
        n: inst.n,
        r: inst.r,
        density: inst.density,
        trial: inst.trial,
        seed: inst.seed,
        outcome,
        elapsed_s,
    }
}

fn run_jobs(
    jobs: &[Job],
    instances: &[Instance],
    timeout: Duration,
    config: &BenchConfig,
    workers: usize,
) -> Vec<BenchRecord> {
    let next = AtomicUsize::new(0);
    let out = Mutex::new(Vec::with_capacity(jobs.len()));
    let work = || loop {
        let k = next.fetch_add(1, AtomicOrdering::Relaxed);
        let Some(job) = jobs.get(k) else { break };
        let inst = &instances[job.instance];
        let started = Instant::now();
        let outcome = match &inst.trn {
            None => Outcome::Error,
            Some(trn) => match run_solver(job.solver, trn, timeout, config.mip_command.as_deref()) {
                Ok(true) => Outcome::Consistent,
                Ok(false) => Outcome::Inconsistent,
                Err(Error::Timeout | Error::SolverTimeout) => Outcome::Timeout,
                Err(_) => Outcome::Error,
            },
        };
        let rec = record(job.solver, inst, outcome, started.elapsed().as_secs_f64());
        out.lock().expect("no panics while holding the lock").push(rec);
    };
    if workers <= 1 {
        work();
    } else {
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    out.into_inner().expect("workers joined")
}

fn mark_disagreements(records: &mut [BenchRecord]) {
    let mut verdicts: BTreeMap<(Density, usize, usize, usize), (bool, bool)> = BTreeMap::new();
    for r in records.iter() {
        if let Some(v) = r.outcome.verdict() {
            let e = verdicts.entry((r.density, r.r, r.n, r.trial)).or_default();
            if v {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
    }
    for r in records.iter_mut() {
        if verdicts.get(&(r.density, r.r, r.n, r.trial)) == Some(&(true, true)) && r.outcome.finished() {
            r.outcome = Outcome::Error;
        }
    }
}

pub fn write_csv<W: Write>(records: &[BenchRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub density: Density,
    pub n: usize,
    pub r: usize,
    pub numerator_mean: f64,
    pub numerator_std: f64,
    pub denominator_mean: f64,
    pub denominator_std: f64,
    /// `0` when only the denominator timed out, `inf` when only the numerator
    /// did.
    pub ratio: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-cell ratio of mean solve times, `numerator / denominator`. A solver
/// counts as timed out on a cell if any of its records there did not finish;
/// cells where both timed out are left out.
pub fn ratio_table(records: &[BenchRecord], numerator: SolverKind, denominator: SolverKind) -> Vec<RatioRow> {
    let mut cells: BTreeMap<(Density, usize, usize), (Vec<&BenchRecord>, Vec<&BenchRecord>)> = BTreeMap::new();
    for r in records {
        let slot = cells.entry((r.density, r.n, r.r)).or_default();
        if r.solver == numerator {
            slot.0.push(r);
        } else if r.solver == denominator {
            slot.1.push(r);
        }
    }
    let mut rows = Vec::new();
    for ((density, n, r), (num, den)) in cells {
        if num.is_empty() || den.is_empty() {
            continue;
        }
        let failed = |xs: &[&BenchRecord]| xs.iter().any(|r| !r.outcome.finished());
        let times = |xs: &[&BenchRecord]| xs.iter().map(|r| r.elapsed_s).collect::<Vec<_>>();
        let (num_failed, den_failed) = (failed(&num), failed(&den));
        let (nm, ns) = mean_std(&times(&num));
        let (dm, ds) = mean_std(&times(&den));
        let ratio = match (num_failed, den_failed) {
            (true, true) => continue,
            (false, true) => 0.0,
            (true, false) => f64::INFINITY,
            (false, false) => nm / dm,
        };
        rows.push(RatioRow {
            density,
            n,
            r,
            numerator_mean: nm,
            numerator_std: ns,
            denominator_mean: dm,
            denominator_std: ds,
            ratio,
        });
    }
    rows
}

pub fn ratio_csv(rows: &[RatioRow]) -> String {
    let mut out = String::from("density,N,R,num_mean_s,num_std_s,den_mean_s,den_std_s,ratio\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.density.as_str(),
            r.n,
            r.r,
            r.numerator_mean,
            r.numerator_std,
            r.denominator_mean,
            r.denominator_std,
            r.ratio
        );
    }
    out
}

/// Aligned text rendering, one block per density with N down and R across.
pub fn render_ratio_table(rows: &[RatioRow], title: &str) -> String {
    let mut out = String::new();
    let mut densities: Vec<Density> = rows.iter().map(|r| r.density).collect();
    densities.dedup();
    for d in densities {
        let sub: Vec<&RatioRow> = rows.iter().filter(|r| r.density == d).collect();
        let mut ns: Vec<usize> = sub.iter().map(|r| r.n).collect();
        let mut rs: Vec<usize> = sub.iter().map(|r| r.r).collect();
        ns.sort_unstable();
        ns.dedup();
        rs.sort_unstable();
        rs.dedup();
        let _ = writeln!(out, "{title} ({})", d.as_str());
        let _ = write!(out, "{:>6}", "N\\R");
        for r in &rs {
            let _ = write!(out, " {r:>10}");
        }
        out.push('\n');
        for n in &ns {
            let _ = write!(out, "{n:>6}");
            for r in &rs {
                let cell = sub.iter().find(|x| x.n == *n && x.r == *r);
                let text = match cell {
                    None => "-".to_string(),
                    Some(x) if x.ratio.is_infinite() => "inf".to_string(),
                    Some(x) => format!("{:.2}", x.ratio),
                };
                let _ = write!(out, " {text:>10}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
