//! Simple resource constraints and the event-point reduction of resource
//! consistency.
//!
//! Net usage is piecewise constant and only changes at scheduled events, so it
//! is enough to look just after each event. When the events are totally
//! ordered that value is a prefix sum of per-event resource changes.

use std::collections::{BTreeMap, BTreeSet};

use crate::atn::Atn;
use crate::error::{Error, Result};
use crate::temporal::{EventId, Schedule, Stc};

/// Net usage above this value counts as a violation. Absorbs the rounding of
/// prefix sums whose exact value is zero.
pub const USAGE_TOLERANCE: f64 = 1e-9;

/// Rate `rate` drawn (positive) or supplied (negative) on `[s(start), s(end))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResourceConstraint {
    pub start: EventId,
    pub end: EventId,
    pub rate: f64,
}

impl ResourceConstraint {
    pub fn new(start: EventId, end: EventId, rate: f64) -> Result<Self> {
        if start == end {
            return Err(Error::Malformed(format!(
                "resource constraint starts and ends at {start}"
            )));
        }
        if rate == 0.0 || !rate.is_finite() {
            return Err(Error::Malformed(format!("resource rate must be finite and non-zero, got {rate}")));
        }
        Ok(Self { start, end, rate })
    }

    pub fn is_generating(&self) -> bool {
        self.rate < 0.0
    }

    /// Usage contributed at time `t` under `s`.
    pub fn usage(&self, start_time: f64, end_time: f64, t: f64) -> f64 {
        if start_time <= t && t < end_time {
            self.rate
        } else {
            0.0
        }
    }
}

/// Time resource network: a temporal network plus resource constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct Trn {
    atn: Atn,
    resources: Vec<ResourceConstraint>,
}

impl Trn {
    pub fn new(atn: Atn, resources: Vec<ResourceConstraint>) -> Result<Self> {
        for r in &resources {
            atn.base().check_event(r.start)?;
            atn.base().check_event(r.end)?;
        }
        Ok(Self { atn, resources })
    }

    pub fn atn(&self) -> &Atn {
        &self.atn
    }

    pub fn resources(&self) -> &[ResourceConstraint] {
        &self.resources
    }

    pub fn resource_events(&self) -> BTreeSet<EventId> {
        resource_events(&self.resources)
    }

    /// `start <= end` for every resource constraint.
    ///
    /// The prefix-sum view of usage only matches the interval definition when
    /// no resource interval is reversed, so the solvers add these to the
    /// temporal side of every check.
    pub fn interval_constraints(&self) -> Vec<Stc> {
        self.resources
            .iter()
            .map(|r| Stc::precedence(r.start, r.end))
            .collect()
    }
}

pub fn resource_events(resources: &[ResourceConstraint]) -> BTreeSet<EventId> {
    resources.iter().flat_map(|r| [r.start, r.end]).collect()
}

/// Change of net usage right after `e` executes.
pub fn delta(e: EventId, resources: &[ResourceConstraint]) -> f64 {
    resources
        .iter()
        .map(|r| {
            let mut d = 0.0;
            if r.start == e {
                d += r.rate;
            }
            if r.end == e {
                d -= r.rate;
            }
            d
        })
        .sum()
}

/// Net usage `U_s(t)`.
pub fn usage_at(s: &Schedule, resources: &[ResourceConstraint], t: f64) -> Result<f64> {
    resources.iter().try_fold(0.0, |acc, r| {
        Ok(acc + r.usage(s.time(r.start)?, s.time(r.end)?, t))
    })
}

/// Resource consistency of a schedule, checked at every resource event time.
pub fn resource_consistent_schedule(s: &Schedule, resources: &[ResourceConstraint]) -> Result<bool> {
    for e in resource_events(resources) {
        if usage_at(s, resources, s.time(e)?)? > USAGE_TOLERANCE {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rank assignment over resource events; ranks start at 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ordering {
    ranks: BTreeMap<EventId, usize>,
}

impl Ordering {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total order from a sequence, first element ranked 1.
    pub fn from_sequence(events: &[EventId]) -> Result<Self> {
        let mut o = Self::new();
        for (i, &e) in events.iter().enumerate() {
            o.assign(e, i + 1)?;
        }
        Ok(o)
    }

    pub fn assign(&mut self, e: EventId, rank: usize) -> Result<()> {
        if rank == 0 {
            return Err(Error::Domain("ranks start at 1".into()));
        }
        if let Some((&other, _)) = self.ranks.iter().find(|&(&o, &r)| r == rank && o != e) {
            return Err(Error::Domain(format!("rank {rank} already taken by {other}")));
        }
        self.ranks.insert(e, rank);
        Ok(())
    }

    pub fn unassign(&mut self, e: EventId) {
        self.ranks.remove(&e);
    }

    pub fn rank(&self, e: EventId) -> Option<usize> {
        self.ranks.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventId, usize)> + '_ {
        self.ranks.iter().map(|(&e, &r)| (e, r))
    }

    /// Assigned events in rank order.
    pub fn sequence(&self) -> Vec<EventId> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by_key(|&(_, r)| r);
        v.into_iter().map(|(e, _)| e).collect()
    }

    pub fn is_total_over(&self, events: &BTreeSet<EventId>) -> bool {
        self.ranks.len() == events.len()
            && events.iter().all(|e| self.ranks.contains_key(e))
            && (1..=events.len()).all(|r| self.ranks.values().any(|&x| x == r))
    }
}

/// Usage right after each event of `sequence`.
pub fn prefix_usage(sequence: &[EventId], resources: &[ResourceConstraint]) -> Vec<f64> {
    sequence
        .iter()
        .scan(0.0, |acc, &e| {
            *acc += delta(e, resources);
            Some(*acc)
        })
        .collect()
}

/// Resource consistency of a strict total order.
pub fn resource_consistent_order(sigma: &Ordering, resources: &[ResourceConstraint]) -> bool {
    prefix_usage(&sigma.sequence(), resources)
        .into_iter()
        .all(|u| u <= USAGE_TOLERANCE)
}
