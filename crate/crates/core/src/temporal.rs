//! Events, simple temporal constraints and STN consistency.
//!
//! A simple temporal constraint `lower <= t(to) - t(from) <= upper` becomes two
//! weighted edges of the distance graph: `from -> to` with weight `upper` and
//! `to -> from` with weight `-lower`. The network is consistent iff the graph
//! has no negative cycle, which Floyd-Warshall exposes as a negative diagonal
//! entry of the closed distance matrix.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack accepted by [`check_schedule`] on every bound.
///
/// Witness schedules are computed from sums of floating point bounds, so a
/// taut constraint may be off by a few ulps.
pub const SCHEDULE_TOLERANCE: f64 = 1e-9;

/// Dense index of an event inside its network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventId(pub usize);

impl EventId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// `lower <= t(to) - t(from) <= upper`, bounds in minutes and possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimpleTemporalConstraint {
    pub from: EventId,
    pub to: EventId,
    pub lower: f64,
    pub upper: f64,
}

pub type Stc = SimpleTemporalConstraint;

impl SimpleTemporalConstraint {
    pub fn new(from: EventId, to: EventId, lower: f64, upper: f64) -> Self {
        Self {
            from,
            to,
            lower,
            upper,
        }
    }

    /// `after` happens no earlier than `before`.
    pub fn precedence(before: EventId, after: EventId) -> Self {
        Self::new(before, after, 0.0, f64::INFINITY)
    }

    pub fn at_least(from: EventId, to: EventId, lower: f64) -> Self {
        Self::new(from, to, lower, f64::INFINITY)
    }

    pub fn at_most(from: EventId, to: EventId, upper: f64) -> Self {
        Self::new(from, to, f64::NEG_INFINITY, upper)
    }

    pub fn exactly(from: EventId, to: EventId, value: f64) -> Self {
        Self::new(from, to, value, value)
    }

    pub fn involves(&self, e: EventId) -> bool {
        self.from == e || self.to == e
    }

    /// Closed-interval satisfaction with an absolute tolerance.
    pub fn is_satisfied_by(&self, from_time: f64, to_time: f64, tolerance: f64) -> bool {
        let diff = to_time - from_time;
        diff >= self.lower - tolerance && diff <= self.upper + tolerance
    }

    fn validate(&self) -> Result<()> {
        let bad = self.lower.is_nan()
            || self.upper.is_nan()
            || self.lower == f64::INFINITY
            || self.upper == f64::NEG_INFINITY
            || self.lower > self.upper;
        if bad {
            return Err(Error::Malformed(format!(
                "constraint {} -> {} has invalid bounds [{}, {}]",
                self.from, self.to, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Simple temporal network: named events plus simple temporal constraints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stn {
    names: Vec<String>,
    constraints: Vec<Stc>,
}

impl Stn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_events<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            names: names.into_iter().map(Into::into).collect(),
            constraints: Vec::new(),
        }
    }

    pub fn add_event(&mut self, name: impl Into<String>) -> EventId {
        self.names.push(name.into());
        EventId(self.names.len() - 1)
    }

    /// Adds a constraint after checking endpoints and bounds.
    pub fn add_constraint(&mut self, stc: Stc) -> Result<()> {
        self.check_event(stc.from)?;
        self.check_event(stc.to)?;
        stc.validate()?;
        self.constraints.push(stc);
        Ok(())
    }

    /// Adds a constraint without bound validation. Used for derived networks
    /// whose rewritten bounds may legitimately cross (an inconsistent edge).
    pub(crate) fn push_derived(&mut self, stc: Stc) {
        debug_assert!(stc.from.0 < self.names.len() && stc.to.0 < self.names.len());
        self.constraints.push(stc);
    }

    pub fn check_event(&self, e: EventId) -> Result<()> {
        if e.0 < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownEvent(e))
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn events(&self) -> impl ExactSizeIterator<Item = EventId> {
        (0..self.names.len()).map(EventId)
    }

    pub fn name(&self, e: EventId) -> &str {
        &self.names[e.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn find(&self, name: &str) -> Option<EventId> {
        self.names.iter().position(|n| n == name).map(EventId)
    }

    pub fn constraints(&self) -> &[Stc] {
        &self.constraints
    }

    /// Copy of this network with `extra` appended.
    pub fn augmented(&self, extra: &[Stc]) -> Stn {
        let mut out = self.clone();
        out.constraints.extend_from_slice(extra);
        out
    }

    /// Same events, no constraints.
    pub(crate) fn events_only(&self) -> Stn {
        Stn {
            names: self.names.clone(),
            constraints: Vec::new(),
        }
    }
}

/// All-pairs shortest-path distances of an STN distance graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Distance graph of `constraints` over `n` events, not yet closed.
    pub fn from_constraints<'a>(n: usize, constraints: impl IntoIterator<Item = &'a Stc>) -> Self {
        let mut d = vec![f64::INFINITY; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        let mut m = Self { n, d };
        for c in constraints {
            m.relax_edge(c.from.0, c.to.0, c.upper);
            m.relax_edge(c.to.0, c.from.0, -c.lower);
        }
        m
    }

    fn relax_edge(&mut self, i: usize, j: usize, w: f64) {
        if w.is_finite() && w < self.d[i * self.n + j] {
            self.d[i * self.n + j] = w;
        }
    }

    /// Floyd-Warshall closure in place.
    pub fn close(&mut self) {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let dik = self.d[i * n + k];
                if dik == f64::INFINITY {
                    continue;
                }
                for j in 0..n {
                    let dkj = self.d[k * n + j];
                    if dkj == f64::INFINITY {
                        continue;
                    }
                    let via = dik + dkj;
                    if via < self.d[i * n + j] {
                        self.d[i * n + j] = via;
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Shortest distance from `i` to `j`, i.e. the tightest upper bound on `t(j) - t(i)`.
    pub fn get(&self, i: EventId, j: EventId) -> f64 {
        self.d[i.0 * self.n + j.0]
    }

    pub fn is_consistent(&self) -> bool {
        self.is_consistent_within(0.0)
    }

    /// Consistency with a diagonal slack: cycles of weight `>= -epsilon` pass.
    pub fn is_consistent_within(&self, epsilon: f64) -> bool {
        (0..self.n).all(|i| self.d[i * self.n + i] >= -epsilon)
    }
}

pub fn apsp(stn: &Stn) -> DistanceMatrix {
    apsp_with(stn, &[])
}

/// Closure of `stn` plus `extra`, without cloning the network.
pub fn apsp_with(stn: &Stn, extra: &[Stc]) -> DistanceMatrix {
    let mut m = DistanceMatrix::from_constraints(stn.len(), stn.constraints().iter().chain(extra));
    m.close();
    m
}

pub fn stn_consistent(stn: &Stn) -> bool {
    apsp(stn).is_consistent()
}

/// Event times in minutes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    times: BTreeMap<EventId, f64>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: EventId, t: f64) {
        self.times.insert(e, t);
    }

    pub fn get(&self, e: EventId) -> Option<f64> {
        self.times.get(&e).copied()
    }

    pub fn time(&self, e: EventId) -> Result<f64> {
        self.get(e).ok_or(Error::MissingEvent(e))
    }

    pub fn contains(&self, e: EventId) -> bool {
        self.times.contains_key(&e)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventId, f64)> + '_ {
        self.times.iter().map(|(&e, &t)| (e, t))
    }

    /// Events sorted by time, ties broken by id.
    pub fn sorted_events(&self) -> Vec<EventId> {
        let mut events: Vec<_> = self.times.keys().copied().collect();
        events.sort_by(|a, b| self.times[a].total_cmp(&self.times[b]).then(a.cmp(b)));
        events
    }
}

impl FromIterator<(EventId, f64)> for Schedule {
    fn from_iter<I: IntoIterator<Item = (EventId, f64)>>(iter: I) -> Self {
        Self {
            times: iter.into_iter().collect(),
        }
    }
}

/// Earliest-time witness relative to `reference`, which is pinned at 0.
///
/// Events reachable from the reference in the distance graph land on their
/// earliest feasible time `-d[e][reference]`. Events in other components are
/// placed greedily against the already-placed ones, which always succeeds on
/// a closed, consistent matrix.
pub fn extract_schedule(stn: &Stn, reference: EventId) -> Result<Schedule> {
    stn.check_event(reference)?;
    let m = apsp(stn);
    if !m.is_consistent() {
        return Err(Error::InconsistentNetwork);
    }
    Ok(schedule_from_closure(&m, reference))
}

pub(crate) fn schedule_from_closure(m: &DistanceMatrix, reference: EventId) -> Schedule {
    let n = m.len();
    let mut placed: Vec<(EventId, f64)> = Vec::with_capacity(n);
    placed.push((reference, 0.0));
    for i in (0..n).map(EventId).filter(|&e| e != reference) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &(j, tj) in &placed {
            lo = lo.max(tj - m.get(i, j));
            hi = hi.min(tj + m.get(j, i));
        }
        let t = if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        };
        placed.push((i, t));
    }
    placed.into_iter().collect()
}

/// True iff `s` satisfies every constraint of `stn` (closed bounds, up to
/// [`SCHEDULE_TOLERANCE`]).
pub fn check_schedule(stn: &Stn, s: &Schedule) -> Result<bool> {
    check_schedule_within(stn, s, SCHEDULE_TOLERANCE)
}

pub fn check_schedule_within(stn: &Stn, s: &Schedule, tolerance: f64) -> Result<bool> {
    for e in stn.events() {
        s.time(e)?;
    }
    Ok(stn
        .constraints()
        .iter()
        .all(|c| c.is_satisfied_by(s.times[&c.from], s.times[&c.to], tolerance)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> (Stn, [EventId; 3]) {
        let mut stn = Stn::new();
        let a = stn.add_event("A");
        let b = stn.add_event("B");
        let c = stn.add_event("C");
        stn.add_constraint(Stc::new(a, b, 1.0, 2.0)).unwrap();
        stn.add_constraint(Stc::new(b, c, 1.0, 2.0)).unwrap();
        (stn, [a, b, c])
    }

    #[test]
    fn empty_network_is_consistent() {
        let stn = Stn::new();
        let m = apsp(&stn);
        assert!(m.is_empty());
        assert!(m.is_consistent());
        assert!(stn_consistent(&stn));
    }

    #[test]
    fn contradictory_pair_has_negative_diagonal() {
        let mut stn = Stn::new();
        let a = stn.add_event("A");
        let b = stn.add_event("B");
        stn.add_constraint(Stc::new(a, b, 1.0, 2.0)).unwrap();
        stn.add_constraint(Stc::new(b, a, 1.0, 2.0)).unwrap();
        let m = apsp(&stn);
        assert!(m.get(a, a) < 0.0 || m.get(b, b) < 0.0);
        assert!(!stn_consistent(&stn));
    }

    #[test]
    fn chain_distances() {
        let (stn, [a, _, c]) = chain();
        let m = apsp(&stn);
        assert_eq!(m.get(a, c), 4.0);
        assert_eq!(m.get(c, a), -2.0);
    }

    #[test]
    fn chain_with_short_deadline_is_inconsistent() {
        let (mut stn, [a, _, c]) = chain();
        stn.add_constraint(Stc::at_most(a, c, 1.0)).unwrap();
        assert!(!stn_consistent(&stn));
    }

    #[test]
    fn single_event_schedule() {
        let mut stn = Stn::new();
        let e = stn.add_event("e");
        let s = extract_schedule(&stn, e).unwrap();
        assert_eq!(s.get(e), Some(0.0));
    }

    #[test]
    fn earliest_schedule_uses_lower_bounds() {
        let mut stn = Stn::new();
        let a = stn.add_event("A");
        let b = stn.add_event("B");
        stn.add_constraint(Stc::new(a, b, 3.0, 5.0)).unwrap();
        let s = extract_schedule(&stn, a).unwrap();
        assert_eq!(s.get(a), Some(0.0));
        assert_eq!(s.get(b), Some(3.0));

        let (stn, [a, b, c]) = chain();
        let s = extract_schedule(&stn, a).unwrap();
        assert_eq!((s.get(a), s.get(b), s.get(c)), (Some(0.0), Some(1.0), Some(2.0)));
        assert!(check_schedule(&stn, &s).unwrap());
    }

    #[test]
    fn extract_rejects_inconsistent_network() {
        let (mut stn, [a, _, c]) = chain();
        stn.add_constraint(Stc::at_most(a, c, 1.0)).unwrap();
        assert!(matches!(extract_schedule(&stn, a), Err(Error::InconsistentNetwork)));
    }

    #[test]
    fn disconnected_events_still_get_times() {
        let mut stn = Stn::new();
        let a = stn.add_event("A");
        let b = stn.add_event("B");
        let c = stn.add_event("C");
        stn.add_constraint(Stc::at_most(b, c, -4.0)).unwrap();
        let s = extract_schedule(&stn, a).unwrap();
        assert_eq!(s.len(), 3);
        assert!(check_schedule(&stn, &s).unwrap());
    }

    #[test]
    fn closed_bounds() {
        let mut stn = Stn::new();
        let a = stn.add_event("A");
        let b = stn.add_event("B");
        stn.add_constraint(Stc::new(a, b, 3.0, 5.0)).unwrap();
        let s = |tb: f64| -> Schedule { [(a, 0.0), (b, tb)].into_iter().collect() };
        assert!(check_schedule(&stn, &s(4.0)).unwrap());
        assert!(check_schedule(&stn, &s(5.0)).unwrap());
        assert!(!check_schedule(&stn, &s(5.001)).unwrap());
        let partial: Schedule = [(a, 0.0)].into_iter().collect();
        assert!(matches!(check_schedule(&stn, &partial), Err(Error::MissingEvent(e)) if e == b));
    }

    #[test]
    fn rejects_bad_constraints() {
        let mut stn = Stn::new();
        let a = stn.add_event("A");
        assert!(stn.add_constraint(Stc::new(a, EventId(5), 0.0, 1.0)).is_err());
        assert!(stn.add_constraint(Stc::new(a, a, 2.0, 1.0)).is_err());
        assert!(stn.add_constraint(Stc::new(a, a, f64::NAN, 1.0)).is_err());
    }

    #[test]
    fn closure_is_idempotent() {
        let (stn, _) = chain();
        let m = apsp(&stn);
        let mut again = m.clone();
        again.close();
        assert_eq!(m, again);
    }
}
