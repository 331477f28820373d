//! Seeded random TRN-over-STN instances.
//!
//! A latent schedule is drawn first; every temporal and resource constraint is
//! then built around it, so the latent schedule always witnesses consistency.
//! Each generation step draws from its own ChaCha stream (`set_stream(step)`
//! on the same seed), so changing how much one step consumes never shifts the
//! draws of another.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use crate::atn::Atn;
use crate::error::{Error, Result};
use crate::resource::{usage_at, ResourceConstraint, Trn};
use crate::temporal::{EventId, Schedule, Stc, Stn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    /// `T = 2N`
    Sparse,
    /// `T = N^2 / 2`
    Dense,
}

impl Density {
    pub fn temporal_count(self, n_events: usize) -> usize {
        match self {
            Density::Sparse => 2 * n_events,
            Density::Dense => n_events * n_events / 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Density::Sparse => "sparse",
            Density::Dense => "dense",
        }
    }
}

impl std::str::FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(Density::Sparse),
            "dense" => Ok(Density::Dense),
            other => Err(Error::Domain(format!("unknown density '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub n_events: usize,
    pub n_temporal: usize,
    pub n_resource: usize,
    pub density: Option<Density>,
    pub seed: u64,
}

impl GenParams {
    pub fn new(n_events: usize, n_temporal: usize, n_resource: usize, seed: u64) -> Self {
        Self {
            n_events,
            n_temporal,
            n_resource,
            density: None,
            seed,
        }
    }

    /// Temporal constraint count derived from the density.
    pub fn with_density(n_events: usize, n_resource: usize, density: Density, seed: u64) -> Self {
        Self {
            n_events,
            n_temporal: density.temporal_count(n_events),
            n_resource,
            density: Some(density),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_events < 2 || self.n_temporal < 2 || self.n_resource < 2 {
            return Err(Error::Domain(format!(
                "need N >= 2, T >= 2, R >= 2; got N={}, T={}, R={}",
                self.n_events, self.n_temporal, self.n_resource
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedInstance {
    pub trn: Trn,
    /// The latent schedule every constraint was built around.
    pub hidden_schedule: Schedule,
}

const STEP_SCHEDULE: u64 = 2;
const STEP_TEMPORAL: u64 = 3;
const STEP_SPLIT: u64 = 4;
const STEP_GENERATING: u64 = 5;
const STEP_CONSUMING: u64 = 6;

fn stream(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Two distinct events ordered by latent time, with a positive gap.
fn latent_pair<R: Rng>(rng: &mut R, s: &[f64]) -> (usize, usize) {
    loop {
        let a = rng.random_range(0..s.len());
        let b = rng.random_range(0..s.len());
        if a == b || s[a] == s[b] {
            continue;
        }
        return if s[a] < s[b] { (a, b) } else { (b, a) };
    }
}

/// Exponential with rate `1 / sqrt(d)`, i.e. mean `sqrt(d)`.
pub fn slack_distribution(d: f64) -> Exp<f64> {
    Exp::new(1.0 / d.sqrt()).expect("positive rate")
}

pub fn generate(params: &GenParams) -> Result<GeneratedInstance> {
    params.validate()?;
    let n = params.n_events;

    let mut rng = stream(params.seed, STEP_SCHEDULE);
    let latent: Vec<f64> = (0..n)
        .map(|_| loop {
            let t: f64 = rng.random();
            if t > 0.0 {
                break t;
            }
        })
        .collect();

    let mut stn = Stn::with_events((0..n).map(|i| format!("e{i}")));
    let mut rng = stream(params.seed, STEP_TEMPORAL);
    for _ in 0..params.n_temporal {
        let (x, y) = latent_pair(&mut rng, &latent);
        let d = latent[y] - latent[x];
        let lower_bound = rng.random_bool(0.5);
        let slack = slack_distribution(d).sample(&mut rng);
        let c = if lower_bound {
            Stc::at_least(EventId(x), EventId(y), d - slack)
        } else {
            Stc::at_most(EventId(x), EventId(y), d + slack)
        };
        stn.add_constraint(c)?;
    }

    let generating = stream(params.seed, STEP_SPLIT).random_range(1..params.n_resource);
    let consuming = params.n_resource - generating;

    let hidden: Schedule = latent.iter().enumerate().map(|(i, &t)| (EventId(i), t)).collect();
    let mut resources = Vec::with_capacity(params.n_resource);
    let mut rng = stream(params.seed, STEP_GENERATING);
    for _ in 0..generating {
        let (x, y) = latent_pair(&mut rng, &latent);
        let rate = rng.random_range(-1.0..0.0);
        resources.push(ResourceConstraint::new(EventId(x), EventId(y), rate)?);
    }

    let mut rng = stream(params.seed, STEP_CONSUMING);
    let mut by_time: Vec<usize> = (0..n).collect();
    by_time.sort_by(|&a, &b| latent[a].total_cmp(&latent[b]));
    for _ in 0..consuming {
        // usage just after each event, in latent order
        let after: Vec<f64> = by_time
            .iter()
            .map(|&e| usage_at(&hidden, &resources, latent[e]))
            .collect::<Result<_>>()?;
        // pairs whose whole interval has spare generation, with that
        // interval's maximum usage; sampling uniformly among them is the
        // same as redrawing pairs until one has m < 0
        let mut valid = Vec::new();
        for a in 0..n {
            let mut max_usage = f64::NEG_INFINITY;
            for b in a + 1..n {
                max_usage = max_usage.max(after[b - 1]);
                if max_usage >= 0.0 {
                    break;
                }
                valid.push((by_time[a], by_time[b], max_usage));
            }
        }
        if valid.is_empty() {
            return Err(Error::GenerationFailure(format!(
                "no interval has spare generation for consumer {} of {consuming} (seed {})",
                resources.len() - generating + 1,
                params.seed
            )));
        }
        let (x, y, m) = valid[rng.random_range(0..valid.len())];
        let rate = loop {
            let r = rng.random_range(0.0..-m);
            if r > 0.0 {
                break r;
            }
        };
        resources.push(ResourceConstraint::new(EventId(x), EventId(y), rate)?);
    }

    Ok(GeneratedInstance {
        trn: Trn::new(Atn::Stn(stn), resources)?,
        hidden_schedule: hidden,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::resource_consistent_schedule;
    use crate::temporal::check_schedule;

    #[test]
    fn structural_counts() {
        let g = generate(&GenParams::new(10, 20, 4, 7)).unwrap();
        assert_eq!(g.trn.atn().base().len(), 10);
        assert_eq!(g.trn.atn().base().constraints().len(), 20);
        assert_eq!(g.trn.resources().len(), 4);
        assert!(g.trn.resources().iter().any(|r| r.rate < 0.0));
        assert!(g.trn.resources().iter().any(|r| r.rate > 0.0));
    }

    #[test]
    fn deterministic() {
        let p = GenParams::with_density(12, 5, Density::Dense, 99);
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        assert_eq!(p.n_temporal, 72);
        let q = GenParams { seed: 100, ..p };
        assert_ne!(generate(&p).unwrap(), generate(&q).unwrap());
    }

    #[test]
    fn latent_schedule_is_a_witness() {
        for seed in 0..100 {
            let g = generate(&GenParams::with_density(8, 4, Density::Sparse, seed)).unwrap();
            let stn = g.trn.atn().base();
            assert!(check_schedule(stn, &g.hidden_schedule).unwrap());
            assert!(resource_consistent_schedule(&g.hidden_schedule, g.trn.resources()).unwrap());
        }
    }

    #[test]
    fn invalid_params() {
        assert!(generate(&GenParams::new(1, 2, 2, 0)).is_err());
        assert!(generate(&GenParams::new(2, 1, 2, 0)).is_err());
        assert!(generate(&GenParams::new(2, 2, 1, 0)).is_err());
    }
}
