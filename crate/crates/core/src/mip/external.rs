//! Subprocess bridge to an LP-file-consuming MIP solver.
//!
//! The command is run as `<command> <model.lp>` (or with `{lp}` substituted
//! if the command contains it) and must print the solution on stdout:
//!
//! ```text
//! status feasible|infeasible|unknown
//! <var> <value>
//! ...
//! ```
//!
//! CBC-style solution listings (`Optimal - objective value 0` followed by
//! `<index> <name> <value> <reduced cost>` rows) are recognised as well.

use std::collections::BTreeMap;
use std::io::{ErrorKind, Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::{decode_solution, default_horizon, encode, export_lp, MipModel, MipSolution, MipStatus};
use crate::atn::{tc_check, TcResult};
use crate::cp::{encode_as_stcs, SearchStats, SolveResult};
use crate::error::{Error, Result};
use crate::resource::{resource_consistent_order, Trn};

/// Environment variable naming the default solver command.
pub const SOLVER_ENV: &str = "TRN_MIP_SOLVER";

fn status_word(word: &str) -> Option<MipStatus> {
    match word.to_ascii_lowercase().as_str() {
        "feasible" | "optimal" | "solution" => Some(MipStatus::Feasible),
        "infeasible" => Some(MipStatus::Infeasible),
        "unknown" | "timeout" | "stopped" => Some(MipStatus::Unknown),
        _ => None,
    }
}

/// Solver command from [`SOLVER_ENV`].
pub fn solver_from_env() -> Result<String> {
    match std::env::var(SOLVER_ENV) {
        Ok(c) if !c.trim().is_empty() => Ok(c),
        _ => Err(Error::SolverNotFound(format!("{SOLVER_ENV} is not set"))),
    }
}

pub fn parse_solution(text: &str) -> Result<MipSolution> {
    let mut status = None;
    let mut values = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_start_matches("**").trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::SolutionParse(format!("line {}: '{}'", lineno + 1, raw.trim()));

        if tokens[0].eq_ignore_ascii_case("status") && tokens.len() == 2 {
            status = Some(status_word(tokens[1]).ok_or_else(bad)?);
            continue;
        }
        // CBC header, e.g. "Optimal - objective value 0" or "Infeasible - objective value 0"
        if tokens.len() > 2 && (tokens[1] == "-" || line.contains("objective value")) {
            let word = if tokens[0].eq_ignore_ascii_case("integer") { tokens[1] } else { tokens[0] };
            status = Some(status_word(word).unwrap_or(MipStatus::Unknown));
            continue;
        }
        match tokens.as_slice() {
            [name, value] => {
                values.insert(name.to_string(), value.parse().map_err(|_| bad())?);
            }
            [index, name, value, _reduced] if index.parse::<usize>().is_ok() => {
                values.insert(name.to_string(), value.parse().map_err(|_| bad())?);
            }
            _ => return Err(bad()),
        }
    }
    let status = status.unwrap_or(if values.is_empty() {
        MipStatus::Unknown
    } else {
        MipStatus::Feasible
    });
    Ok(MipSolution { status, values })
}

/// Writes the model to a temporary LP file, runs the solver on it and parses
/// its output. The child is killed once `deadline` elapses.
pub fn solve_external(
    model: &MipModel,
    solver_command: &str,
    deadline: Option<Duration>,
) -> Result<MipSolution> {
    let mut file = tempfile::Builder::new()
        .prefix("trn-model-")
        .suffix(".lp")
        .tempfile()
        .map_err(|e| Error::io(std::env::temp_dir(), e))?;
    file.write_all(export_lp(model).as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(file.path(), e))?;
    let lp_path = file.path().to_string_lossy().into_owned();

    let mut parts = solver_command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| Error::SolverNotFound("empty solver command".into()))?;
    let mut args: Vec<String> = parts.map(str::to_string).collect();
    if args.iter().any(|a| a.contains("{lp}")) {
        for a in &mut args {
            *a = a.replace("{lp}", &lp_path);
        }
    } else {
        args.push(lp_path);
    }

    let started = Instant::now();
    let mut child = Command::new(program)
        .args(&args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound | ErrorKind::PermissionDenied => {
                Error::SolverNotFound(format!("{program}: {e}"))
            }
            _ => Error::io(program, e),
        })?;

    let drain = |mut r: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut buf = String::new();
            let _ = r.read_to_string(&mut buf);
            buf
        })
    };
    let stdout = drain(Box::new(child.stdout.take().expect("piped stdout")));
    let stderr = drain(Box::new(child.stderr.take().expect("piped stderr")));

    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| Error::io(program, e))? {
            break status;
        }
        if deadline.is_some_and(|d| started.elapsed() >= d) {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::SolverTimeout);
        }
        thread::sleep(Duration::from_millis(2));
    };
    let out = stdout.join().unwrap_or_default();
    let err = stderr.join().unwrap_or_default();
    if !status.success() {
        return Err(Error::SolverFailed {
            status: status.to_string(),
            stderr: err.trim().to_string(),
        });
    }
    parse_solution(&out)
}

/// Decides a TRN over an STN through the external solver.
///
/// The witness is recomputed from the decoded order of the resource events,
/// so it is exact rather than carrying the solver's feasibility tolerance.
pub fn solve_trn(trn: &Trn, solver_command: &str, deadline: Option<Duration>) -> Result<SolveResult> {
    let started = Instant::now();
    let model = encode(trn, default_horizon(trn))?;
    let solution = solve_external(&model, solver_command, deadline)?;
    let stats = |orderings_checked| SearchStats {
        orderings_checked,
        elapsed: started.elapsed(),
        ..SearchStats::default()
    };
    match solution.status {
        MipStatus::Infeasible => Ok(SolveResult {
            stats: stats(0),
            ..SolveResult::default()
        }),
        MipStatus::Unknown => Err(Error::SolverTimeout),
        MipStatus::Feasible => {
            let (_, sigma) = decode_solution(&model, &solution)?;
            // solver times carry tolerance noise; rebuild the witness from the order
            if !resource_consistent_order(&sigma, trn.resources()) {
                return Err(Error::UncertifiedSolution("decoded order overdraws a resource".into()));
            }
            let mut extra = trn.interval_constraints();
            extra.extend(encode_as_stcs(&sigma));
            match tc_check(trn.atn(), &extra) {
                TcResult { consistent: true, schedule: Some(schedule), .. } => Ok(SolveResult {
                    consistent: true,
                    schedule: Some(schedule),
                    ordering: Some(sigma),
                    risk_bound: None,
                    stats: stats(1),
                }),
                _ => Err(Error::UncertifiedSolution(
                    "decoded order is temporally infeasible".into(),
                )),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_listing() {
        let s = parse_solution("status feasible\nt_A 1\nt_B 2.5\n").unwrap();
        assert_eq!(s.status, MipStatus::Feasible);
        assert_eq!(s.values["t_B"], 2.5);
        let s = parse_solution("status infeasible\n").unwrap();
        assert_eq!(s.status, MipStatus::Infeasible);
        let s = parse_solution("t_A 0\n").unwrap();
        assert_eq!(s.status, MipStatus::Feasible);
        assert_eq!(parse_solution("").unwrap().status, MipStatus::Unknown);
    }

    #[test]
    fn parses_cbc_listing() {
        let text = "Optimal - objective value 0.00000000\n      0 t_A  1  0\n      1 x_A_B 1 0\n";
        let s = parse_solution(text).unwrap();
        assert_eq!(s.status, MipStatus::Feasible);
        assert_eq!(s.values["x_A_B"], 1.0);
        let s = parse_solution("Infeasible - objective value 0\n").unwrap();
        assert_eq!(s.status, MipStatus::Infeasible);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_solution("t_A one\n"), Err(Error::SolutionParse(_))));
        assert!(matches!(parse_solution("status maybe\n"), Err(Error::SolutionParse(_))));
        assert!(matches!(parse_solution("a b c\n"), Err(Error::SolutionParse(_))));
    }
}
