//! Shared builders and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trn::resource::ResourceConstraint;
use trn::temporal::{EventId, Schedule, Stc, Stn};
use trn::{Atn, Trn};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn distinct_pair<R: Rng>(rng: &mut R, n: usize) -> (EventId, EventId) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (EventId(a), EventId(b))
}

/// Random TRN over an STN with small integer bounds and rates of both signs.
/// Unlike generated benchmark instances, these are often inconsistent.
pub fn adversarial_trn<R: Rng>(rng: &mut R, n: usize, n_stc: usize, n_res: usize) -> Trn {
    let mut stn = Stn::with_events((0..n).map(|i| format!("v{i}")));
    for _ in 0..n_stc {
        let (a, b) = distinct_pair(rng, n);
        let lower = if rng.random_bool(0.2) {
            f64::NEG_INFINITY
        } else {
            rng.random_range(-4..=4) as f64
        };
        let upper = if rng.random_bool(0.3) {
            f64::INFINITY
        } else if lower.is_finite() {
            lower + rng.random_range(0..=4) as f64
        } else {
            rng.random_range(-4..=4) as f64
        };
        stn.add_constraint(Stc::new(a, b, lower, upper)).unwrap();
    }
    let resources = (0..n_res)
        .map(|_| {
            let (a, b) = distinct_pair(rng, n);
            let mag = rng.random_range(1..=3) as f64;
            let rate = if rng.random_bool(0.5) { mag } else { -mag };
            ResourceConstraint::new(a, b, rate).unwrap()
        })
        .collect();
    Trn::new(Atn::Stn(stn), resources).unwrap()
}

/// Usage straight from the definition: the rates of all constraints whose
/// half-open interval `[s(start), s(end))` contains `t`.
pub fn usage_by_definition(s: &Schedule, rs: &[ResourceConstraint], t: f64) -> f64 {
    rs.iter()
        .filter(|r| {
            let (a, b) = (s.get(r.start).unwrap(), s.get(r.end).unwrap());
            a <= t && t < b
        })
        .map(|r| r.rate)
        .sum()
}

/// Resource consistency by sampling usage at every event time, every
/// midpoint between consecutive distinct times and two exterior points.
pub fn dense_resource_check(s: &Schedule, rs: &[ResourceConstraint], tol: f64) -> bool {
    let mut times: Vec<f64> = s.iter().map(|(_, t)| t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut probes = times.clone();
    probes.extend(times.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    if let (Some(first), Some(last)) = (times.first(), times.last()) {
        probes.push(first - 1.0);
        probes.push(last + 1.0);
    }
    probes.iter().all(|&t| usage_by_definition(s, rs, t) <= tol)
}

/// Direct bound check of every constraint, independent of the library.
pub fn satisfies(constraints: &[Stc], s: &Schedule, tol: f64) -> bool {
    constraints.iter().all(|c| {
        let d = s.get(c.to).unwrap() - s.get(c.from).unwrap();
        d >= c.lower - tol && d <= c.upper + tol
    })
}
