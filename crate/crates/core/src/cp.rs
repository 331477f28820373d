//! Ordering search for time-resource consistency.
//!
//! Resource consistency depends only on the relative order of the resource
//! events, so the solver searches over orders of those events and asks the
//! temporal network whether the order can be realised. [`solve`] builds the
//! order one rank at a time (rank 1 first) and runs two pruners at every
//! node; [`solve_exhaustive`] enumerates whole permutations and is kept as the
//! reference implementation.

use std::time::{Duration, Instant};

use itertools::Itertools;

use crate::atn::{tc_check, tc_consistent, Atn, TcResult};
use crate::error::{Error, Result};
use crate::resource::{
    delta, resource_consistent_order, Ordering, ResourceConstraint, Trn, USAGE_TOLERANCE,
};
use crate::temporal::{EventId, Schedule, Stc};

/// Order in which candidate events are tried for the next rank.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VariableOrder {
    /// Most generating first (Δ ascending), ties by event id.
    #[default]
    DeltaAscending,
    /// Event id order.
    Naive,
}

/// Which events [`solve_exhaustive`] permutes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExhaustiveScope {
    /// Only events that appear in resource constraints.
    #[default]
    ResourceEvents,
    /// Every event of the network.
    AllEvents,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub deadline: Option<Duration>,
    pub variable_order: VariableOrder,
    /// Largest permutation size [`solve_exhaustive`] accepts; `None` lifts the cap.
    pub exhaustive_cap: Option<usize>,
    pub exhaustive_scope: ExhaustiveScope,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            deadline: None,
            variable_order: VariableOrder::default(),
            exhaustive_cap: Some(9),
            exhaustive_scope: ExhaustiveScope::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_deadline(mut self, deadline: Duration) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn with_variable_order(mut self, order: VariableOrder) -> Self {
        self.variable_order = order;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchStats {
    /// Partial or complete assignments tested by the pruners.
    pub nodes_expanded: u64,
    pub prunes_by_time: u64,
    pub prunes_by_resource: u64,
    /// Complete orders handed to the full consistency check.
    pub orderings_checked: u64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveResult {
    pub consistent: bool,
    /// Witness over the controllable events.
    pub schedule: Option<Schedule>,
    /// Order of the resource events realised by the witness.
    pub ordering: Option<Ordering>,
    /// Certified failure probability bound, for pSTN networks.
    pub risk_bound: Option<f64>,
    pub stats: SearchStats,
}

/// Precedence chain over consecutively ranked events.
///
/// Gaps are skipped: ranks {2: e5, 3: e1, 5: e6} give `e5 <= e1 <= e6`.
pub fn implied_chain(partial: &Ordering) -> Vec<Stc> {
    chain(&partial.sequence())
}

/// Encodes a total order as `|σ| - 1` precedence constraints.
pub fn encode_as_stcs(sigma: &Ordering) -> Vec<Stc> {
    implied_chain(sigma)
}

fn chain(sequence: &[EventId]) -> Vec<Stc> {
    sequence
        .iter()
        .tuple_windows()
        .map(|(&u, &v)| Stc::precedence(u, v))
        .collect()
}

/// Resource totals seen by the pruner: the seed first, then the usage just
/// after each assigned event in rank order.
///
/// Unassigned generating events may still be placed in a free rank below an
/// assigned one, so their generation is credited up front to every assigned
/// rank that has a free rank beneath it. Below a fully assigned prefix nothing
/// can be inserted and no credit is given.
pub fn resource_running_totals(partial: &Ordering, resources: &[ResourceConstraint]) -> Vec<f64> {
    let ranked: Vec<(usize, f64)> = partial.iter().map(|(e, r)| (r, delta(e, resources))).collect();
    let unassigned: Vec<f64> = crate::resource::resource_events(resources)
        .into_iter()
        .filter(|&e| partial.rank(e).is_none())
        .map(|e| delta(e, resources))
        .collect();
    running_totals(&ranked, &unassigned)
}

/// [`resource_running_totals`] over bare `(rank, Δ)` pairs and the Δ of the
/// unassigned events.
pub fn running_totals(ranked: &[(usize, f64)], unassigned: &[f64]) -> Vec<f64> {
    let seed: f64 = unassigned.iter().filter(|&&d| d < 0.0).sum();
    let mut ranked = ranked.to_vec();
    ranked.sort_by_key(|&(r, _)| r);

    let mut totals = vec![seed];
    let mut prefix = 0.0;
    for (i, &(rank, d)) in ranked.iter().enumerate() {
        prefix += d;
        // ranks below `rank` not taken by the i assigned events before it
        let free_below = rank - 1 - i;
        totals.push(if free_below > 0 { seed + prefix } else { prefix });
    }
    totals
}

/// Pruning decision on [`running_totals`]; `false` means prune.
pub fn totals_admissible(totals: &[f64]) -> bool {
    totals.iter().skip(1).all(|&u| u <= USAGE_TOLERANCE)
}

/// Resource pruner; `false` means no extension of `partial` can be resource
/// consistent.
pub fn prune_resource(partial: &Ordering, resources: &[ResourceConstraint]) -> bool {
    totals_admissible(&resource_running_totals(partial, resources))
}

/// Temporal pruner; `false` means the precedence chain implied by `partial`
/// already makes the network inconsistent.
pub fn prune_time(partial: &Ordering, atn: &Atn) -> bool {
    tc_consistent(atn, &implied_chain(partial))
}

struct Search<'a> {
    atn: &'a Atn,
    /// Candidate events in heuristic order, with their Δ.
    candidates: Vec<(EventId, f64)>,
    intervals: Vec<Stc>,
    deadline: Option<Instant>,
    stats: SearchStats,
}

impl Search<'_> {
    fn check_deadline(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }

    fn extras(&self, sequence: &[EventId]) -> Vec<Stc> {
        let mut extra = self.intervals.clone();
        extra.extend(chain(sequence));
        extra
    }

    /// Depth-first over the next rank. Returns the first complete order that
    /// passes the full check.
    fn descend(
        &mut self,
        sequence: &mut Vec<EventId>,
        used: &mut [bool],
        prefix: f64,
    ) -> Result<Option<TcResult>> {
        if sequence.len() == self.candidates.len() {
            self.stats.orderings_checked += 1;
            let r = tc_check(self.atn, &self.extras(sequence));
            return Ok(r.consistent.then_some(r));
        }
        for i in 0..self.candidates.len() {
            if used[i] {
                continue;
            }
            self.check_deadline()?;
            self.stats.nodes_expanded += 1;
            let (e, d) = self.candidates[i];
            let next = prefix + d;
            if next > USAGE_TOLERANCE {
                self.stats.prunes_by_resource += 1;
                continue;
            }
            sequence.push(e);
            let complete = sequence.len() == self.candidates.len();
            // a complete order goes straight to the full check
            if !complete && !tc_consistent(self.atn, &self.extras(sequence)) {
                self.stats.prunes_by_time += 1;
                sequence.pop();
                continue;
            }
            used[i] = true;
            let found = self.descend(sequence, used, next)?;
            used[i] = false;
            if found.is_some() {
                return Ok(found);
            }
            sequence.pop();
        }
        Ok(None)
    }
}

/// Decides time-resource consistency by pruned depth-first search over the
/// order of the resource events.
pub fn solve(trn: &Trn, config: &SolverConfig) -> Result<SolveResult> {
    let started = Instant::now();
    let resources = trn.resources();
    let mut candidates: Vec<(EventId, f64)> = trn
        .resource_events()
        .into_iter()
        .map(|e| (e, delta(e, resources)))
        .collect();
    if config.variable_order == VariableOrder::DeltaAscending {
        candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    }
    let mut search = Search {
        atn: trn.atn(),
        intervals: trn.interval_constraints(),
        candidates,
        deadline: config.deadline.map(|d| started + d),
        stats: SearchStats::default(),
    };

    let mut sequence = Vec::with_capacity(search.candidates.len());
    let mut used = vec![false; search.candidates.len()];
    let found = if search.candidates.is_empty() || tc_consistent(trn.atn(), &search.intervals) {
        search.descend(&mut sequence, &mut used, 0.0)?
    } else {
        search.stats.prunes_by_time += 1;
        None
    };
    let mut stats = search.stats;
    stats.elapsed = started.elapsed();
    Ok(finish(found, &sequence, stats))
}

fn finish(found: Option<TcResult>, sequence: &[EventId], stats: SearchStats) -> SolveResult {
    match found {
        Some(tc) => SolveResult {
            consistent: true,
            schedule: tc.schedule,
            ordering: Some(Ordering::from_sequence(sequence).expect("sequence is duplicate free")),
            risk_bound: tc.risk_bound,
            stats,
        },
        None => SolveResult {
            stats,
            ..SolveResult::default()
        },
    }
}

/// Literal enumeration: every permutation is checked for resource consistency
/// and then, if it passes, for temporal consistency with the order imposed.
pub fn solve_exhaustive(trn: &Trn, config: &SolverConfig) -> Result<SolveResult> {
    let started = Instant::now();
    let deadline = config.deadline.map(|d| started + d);
    let re = trn.resource_events();
    let events: Vec<EventId> = match config.exhaustive_scope {
        ExhaustiveScope::ResourceEvents => re.iter().copied().collect(),
        ExhaustiveScope::AllEvents => trn.atn().base().events().collect(),
    };
    if let Some(cap) = config.exhaustive_cap {
        if events.len() > cap {
            return Err(Error::CapExceeded {
                size: events.len(),
                cap,
            });
        }
    }
    let intervals = trn.interval_constraints();
    let mut stats = SearchStats::default();
    for perm in events.iter().copied().permutations(events.len()) {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Error::Timeout);
        }
        stats.orderings_checked += 1;
        let sigma = Ordering::from_sequence(&perm).expect("permutation is duplicate free");
        if !resource_consistent_order(&sigma, trn.resources()) {
            stats.prunes_by_resource += 1;
            continue;
        }
        let mut extra = intervals.clone();
        extra.extend(encode_as_stcs(&sigma));
        let tc = tc_check(trn.atn(), &extra);
        if tc.consistent {
            let on_re: Vec<EventId> = perm.into_iter().filter(|e| re.contains(e)).collect();
            stats.elapsed = started.elapsed();
            return Ok(finish(Some(tc), &on_re, stats));
        }
        stats.prunes_by_time += 1;
    }
    stats.elapsed = started.elapsed();
    Ok(finish(None, &[], stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::Stn;

    fn ev(i: usize) -> EventId {
        EventId(i)
    }

    /// Four events with Δ = (4, -6, 3, 4), each closed at a shared sink `e4`
    /// whose Δ is minus their sum.
    fn worked_example(d1: f64) -> Vec<ResourceConstraint> {
        let sink = ev(4);
        [(0, d1), (1, -6.0), (2, 3.0), (3, 4.0)]
            .into_iter()
            .map(|(i, r)| ResourceConstraint::new(ev(i), sink, r).unwrap())
            .collect()
    }

    #[test]
    fn unassigned_generation_counts_first() {
        let mut partial = Ordering::new();
        partial.assign(ev(2), 2).unwrap();
        partial.assign(ev(0), 3).unwrap();
        partial.assign(ev(4), 5).unwrap();
        let rs = worked_example(4.0);
        assert_eq!(resource_running_totals(&partial, &rs), vec![-6.0, -3.0, 1.0, -4.0]);
        assert!(!prune_resource(&partial, &rs));
        let rs = worked_example(2.0);
        assert_eq!(resource_running_totals(&partial, &rs), vec![-6.0, -3.0, -1.0, -4.0]);
        assert!(prune_resource(&partial, &rs));
    }

    #[test]
    fn bare_deltas() {
        // Δ = (4, -6, 3, 4); e3 at rank 2, e1 at rank 3
        let t = running_totals(&[(2, 3.0), (3, 4.0)], &[-6.0, 4.0]);
        assert_eq!(t, vec![-6.0, -3.0, 1.0]);
        assert!(!totals_admissible(&t));
        let t = running_totals(&[(2, 3.0), (3, 2.0)], &[-6.0, 4.0]);
        assert_eq!(t, vec![-6.0, -3.0, -1.0]);
        assert!(totals_admissible(&t));
    }

    #[test]
    fn contiguous_prefix_gets_no_credit() {
        let rs = worked_example(4.0);
        let partial = Ordering::from_sequence(&[ev(2)]).unwrap();
        // e1 and the sink are the unassigned generators
        assert_eq!(resource_running_totals(&partial, &rs), vec![-11.0, 3.0]);
        assert!(!prune_resource(&partial, &rs));
        assert!(prune_resource(&Ordering::new(), &rs));
    }

    #[test]
    fn chain_from_partial_ranks() {
        let mut partial = Ordering::new();
        partial.assign(ev(1), 3).unwrap();
        partial.assign(ev(5), 2).unwrap();
        partial.assign(ev(6), 5).unwrap();
        assert_eq!(
            implied_chain(&partial),
            vec![Stc::precedence(ev(5), ev(1)), Stc::precedence(ev(1), ev(6))]
        );
    }

    #[test]
    fn encode_examples() {
        let sigma = Ordering::from_sequence(&[ev(2), ev(1), ev(3)]).unwrap();
        assert_eq!(
            encode_as_stcs(&sigma),
            vec![Stc::precedence(ev(2), ev(1)), Stc::precedence(ev(1), ev(3))]
        );
        assert!(encode_as_stcs(&Ordering::from_sequence(&[ev(0)]).unwrap()).is_empty());
    }

    #[test]
    fn time_pruner() {
        let mut stn = Stn::with_events(["A", "B"]);
        stn.add_constraint(Stc::new(ev(0), ev(1), 1.0, 2.0)).unwrap();
        let atn = Atn::Stn(stn);
        assert!(prune_time(&Ordering::new(), &atn));
        assert!(!prune_time(&Ordering::from_sequence(&[ev(1), ev(0)]).unwrap(), &atn));
        assert!(prune_time(&Ordering::from_sequence(&[ev(0), ev(1)]).unwrap(), &atn));
    }

    #[test]
    fn exhaustive_cap() {
        let stn = Stn::with_events((0..12).map(|i| format!("e{i}")));
        let rs = (0..6)
            .map(|i| ResourceConstraint::new(ev(2 * i), ev(2 * i + 1), -1.0).unwrap())
            .collect();
        let trn = Trn::new(Atn::Stn(stn), rs).unwrap();
        assert!(matches!(
            solve_exhaustive(&trn, &SolverConfig::default()),
            Err(Error::CapExceeded { size: 12, cap: 9 })
        ));
    }

    #[test]
    fn deadline_is_enforced() {
        // every order starting with e0 fails; the first one that does not
        // lies beyond 11! permutations
        let stn = Stn::with_events((0..12).map(|i| format!("e{i}")));
        let rs = vec![ResourceConstraint::new(ev(0), ev(1), 1.0).unwrap()];
        let trn = Trn::new(Atn::Stn(stn), rs).unwrap();
        let config = SolverConfig {
            exhaustive_cap: None,
            exhaustive_scope: ExhaustiveScope::AllEvents,
            deadline: Some(Duration::from_millis(50)),
            ..SolverConfig::default()
        };
        let t = Instant::now();
        assert!(matches!(solve_exhaustive(&trn, &config), Err(Error::Timeout)));
        assert!(t.elapsed() < Duration::from_secs(2));
        // consistent by collapsing the interval to zero length
        let r = solve(&trn, &config).unwrap();
        assert!(r.consistent);
        let s = r.schedule.unwrap();
        assert_eq!(s.get(ev(0)), s.get(ev(1)));
    }
}
