//! Abstract temporal networks: STN, STNU and pSTN behind one TC check.
//!
//! Every variant is reduced to an ordinary STN over the same event indices and
//! decided with Floyd-Warshall. For an STNU the reduction substitutes
//! `t(received) = t(activator) + w` into each requirement constraint and
//! tightens the bounds for the worst `w` in the contingent interval (strong
//! controllability). A pSTN is first turned into an STNU by cutting each
//! uncertain duration at Gaussian quantiles chosen from the risk budget.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::gaussian_quantile;
use crate::temporal::{
    apsp_with, schedule_from_closure, DistanceMatrix, EventId, Schedule, Stc, Stn,
    SCHEDULE_TOLERANCE,
};

/// Uncontrollable duration `to - from` in `[lower, upper]`, chosen by nature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContingentLink {
    pub from: EventId,
    pub to: EventId,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stnu {
    base: Stn,
    contingent: Vec<ContingentLink>,
}

impl Stnu {
    pub fn new(base: Stn, contingent: Vec<ContingentLink>) -> Result<Self> {
        for link in &contingent {
            base.check_event(link.from)?;
            base.check_event(link.to)?;
            let ok = link.lower.is_finite()
                && link.upper.is_finite()
                && 0.0 <= link.lower
                && link.lower <= link.upper;
            if !ok {
                return Err(Error::Malformed(format!(
                    "contingent link {} => {} needs 0 <= lower <= upper, got [{}, {}]",
                    link.from, link.to, link.lower, link.upper
                )));
            }
        }
        check_received(&base, contingent.iter().map(|l| (l.from, l.to)))?;
        Ok(Self { base, contingent })
    }

    pub fn base(&self) -> &Stn {
        &self.base
    }

    pub fn contingent(&self) -> &[ContingentLink] {
        &self.contingent
    }

    pub fn link_into(&self, received: EventId) -> Option<&ContingentLink> {
        self.contingent.iter().find(|l| l.to == received)
    }

    pub fn is_controllable(&self, e: EventId) -> bool {
        self.link_into(e).is_none()
    }

    /// Schedule of all events for one realization of the contingent durations,
    /// given in the order of [`Stnu::contingent`].
    pub fn realize(&self, controllable: &Schedule, durations: &[f64]) -> Result<Schedule> {
        realize(
            controllable,
            self.contingent.iter().zip(durations).map(|(l, &w)| (l.from, l.to, w)),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Distribution {
    Normal { mean: f64, std: f64 },
}

impl Distribution {
    pub fn quantile(&self, q: f64) -> Result<f64> {
        match *self {
            Distribution::Normal { mean, std } => Ok(mean + std * gaussian_quantile(q)?),
        }
    }
}

/// Probabilistic duration `to - from ~ dist`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertainDuration {
    pub from: EventId,
    pub to: EventId,
    pub dist: Distribution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pstn {
    base: Stn,
    udns: Vec<UncertainDuration>,
    probability: f64,
}

impl Pstn {
    pub fn new(base: Stn, udns: Vec<UncertainDuration>, probability: f64) -> Result<Self> {
        if !(probability > 0.0 && probability < 1.0) {
            return Err(Error::Malformed(format!(
                "success probability {probability} must lie in (0, 1)"
            )));
        }
        for u in &udns {
            base.check_event(u.from)?;
            base.check_event(u.to)?;
            let Distribution::Normal { mean, std } = u.dist;
            if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
                return Err(Error::Malformed(format!(
                    "uncertain duration {} => {} needs finite mean and std > 0",
                    u.from, u.to
                )));
            }
        }
        check_received(&base, udns.iter().map(|u| (u.from, u.to)))?;
        Ok(Self {
            base,
            udns,
            probability,
        })
    }

    pub fn base(&self) -> &Stn {
        &self.base
    }

    pub fn udns(&self) -> &[UncertainDuration] {
        &self.udns
    }

    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn udn_into(&self, received: EventId) -> Option<&UncertainDuration> {
        self.udns.iter().find(|u| u.to == received)
    }

    pub fn is_controllable(&self, e: EventId) -> bool {
        self.udn_into(e).is_none()
    }
}

fn check_received(base: &Stn, links: impl Iterator<Item = (EventId, EventId)>) -> Result<()> {
    let links: Vec<_> = links.collect();
    let mut seen = vec![false; base.len()];
    for &(_, to) in &links {
        if std::mem::replace(&mut seen[to.0], true) {
            return Err(Error::Malformed(format!(
                "received event '{}' is the target of more than one uncertain link",
                base.name(to)
            )));
        }
    }
    for &(from, to) in &links {
        if from == to || seen[from.0] {
            return Err(Error::Malformed(format!(
                "uncertain link into '{}' must start at a controllable event",
                base.name(to)
            )));
        }
    }
    Ok(())
}

fn realize(
    controllable: &Schedule,
    links: impl Iterator<Item = (EventId, EventId, f64)>,
) -> Result<Schedule> {
    let mut s = controllable.clone();
    for (from, to, w) in links {
        s.insert(to, controllable.time(from)? + w);
    }
    Ok(s)
}

/// A temporal network usable underneath a TRN.
#[derive(Clone, Debug, PartialEq)]
pub enum Atn {
    Stn(Stn),
    Stnu(Stnu),
    Pstn(Pstn),
}

impl Atn {
    pub fn base(&self) -> &Stn {
        match self {
            Atn::Stn(stn) => stn,
            Atn::Stnu(stnu) => stnu.base(),
            Atn::Pstn(pstn) => pstn.base(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Atn::Stn(_) => "stn",
            Atn::Stnu(_) => "stnu",
            Atn::Pstn(_) => "pstn",
        }
    }

    pub fn is_controllable(&self, e: EventId) -> bool {
        match self {
            Atn::Stn(_) => true,
            Atn::Stnu(stnu) => stnu.is_controllable(e),
            Atn::Pstn(pstn) => pstn.is_controllable(e),
        }
    }

    /// Lowest-index controllable event; witnesses pin it at time 0.
    pub fn reference_event(&self) -> Option<EventId> {
        self.base().events().find(|&e| self.is_controllable(e))
    }
}

/// Outcome of a temporal consistency check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TcResult {
    pub consistent: bool,
    /// Witness over the controllable events.
    pub schedule: Option<Schedule>,
    /// Certified upper bound on the failure probability (pSTN only).
    pub risk_bound: Option<f64>,
}

/// Temporal consistency of `atn` with `extra` constraints added to its
/// requirement set.
pub fn tc_check(atn: &Atn, extra: &[Stc]) -> TcResult {
    match atn {
        Atn::Stn(stn) => stn_check(stn, extra, true),
        Atn::Stnu(stnu) => stnu_strong_controllability(stnu, extra),
        Atn::Pstn(pstn) => pstn_consistent(pstn, extra),
    }
}

/// Verdict only, skipping witness construction.
pub fn tc_consistent(atn: &Atn, extra: &[Stc]) -> bool {
    match atn {
        Atn::Stn(stn) => stn_check(stn, extra, false).consistent,
        Atn::Stnu(stnu) => sc_check(stnu.base(), extra, |e| stnu_box(stnu, e), false).consistent,
        Atn::Pstn(pstn) => pstn_check(pstn, extra, false),
    }
}

fn stn_check(stn: &Stn, extra: &[Stc], witness: bool) -> TcResult {
    let m = apsp_with(stn, extra);
    finish(&m, stn, |_| true, witness)
}

fn finish(
    m: &DistanceMatrix,
    base: &Stn,
    controllable: impl Fn(EventId) -> bool,
    witness: bool,
) -> TcResult {
    if !m.is_consistent() {
        return TcResult::default();
    }
    let schedule = witness.then(|| {
        let reference = base.events().find(|&e| controllable(e));
        match reference {
            Some(r) => schedule_from_closure(m, r)
                .iter()
                .filter(|&(e, _)| controllable(e))
                .collect(),
            None => Schedule::new(),
        }
    });
    TcResult {
        consistent: true,
        schedule,
        risk_bound: None,
    }
}

/// Activator and duration box of a received event.
type Contingency = Option<(EventId, f64, f64)>;

fn stnu_box(stnu: &Stnu, e: EventId) -> Contingency {
    stnu.link_into(e).map(|l| (l.from, l.lower, l.upper))
}

// `a - b` where an infinite `a` stays put. Finite `a` never meets an infinite
// `b` for a correctly built box (irrelevant tails are only left open).
fn shift(bound: f64, delta: f64) -> f64 {
    if bound.is_infinite() {
        bound
    } else {
        bound + delta
    }
}

/// Worst-case rewrite of one requirement constraint onto controllable events.
fn rewrite(c: &Stc, contingency: impl Fn(EventId) -> Contingency) -> Stc {
    let (from, from_lo, from_hi) = match contingency(c.from) {
        Some((a, lo, hi)) => (a, lo, hi),
        None => (c.from, 0.0, 0.0),
    };
    let (to, to_lo, to_hi) = match contingency(c.to) {
        Some((a, lo, hi)) => (a, lo, hi),
        None => (c.to, 0.0, 0.0),
    };
    // lower <= (t_to' + w_to) - (t_from' + w_from) <= upper for every w
    let lower = shift(shift(c.lower, -to_lo), from_hi);
    let upper = shift(shift(c.upper, -to_hi), from_lo);
    Stc::new(from, to, lower, upper)
}

fn sc_check(
    base: &Stn,
    extra: &[Stc],
    contingency: impl Fn(EventId) -> Contingency + Copy,
    witness: bool,
) -> TcResult {
    let mut reduced = base.events_only();
    for c in base.constraints().iter().chain(extra) {
        reduced.push_derived(rewrite(c, contingency));
    }
    let m = apsp_with(&reduced, &[]);
    finish(&m, base, |e| contingency(e).is_none(), witness)
}

/// Strong controllability: one static schedule of the controllable events
/// that satisfies every requirement constraint for all contingent durations.
pub fn stnu_strong_controllability(stnu: &Stnu, extra: &[Stc]) -> TcResult {
    sc_check(stnu.base(), extra, |e| stnu_box(stnu, e), true)
}

/// Risk allocation for one pSTN check.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskAllocation {
    /// Number of constraints touching at least one received event.
    pub chance_constraints: usize,
    /// Truncation box per received event: `(activator, lower, upper)`.
    pub boxes: HashMap<EventId, (EventId, f64, f64)>,
    /// Sum of the tail mass cut off by all boxes.
    pub risk: f64,
}

/// Splits the budget `1 - p` uniformly over the chance constraints and cuts
/// every uncertain duration at the matching quantiles.
///
/// A constraint's share is divided among the received events it touches; an
/// event touched by several constraints keeps the smallest share it is given,
/// so the boxes' tail masses sum to at most `1 - p` (union bound) and only
/// shrink as constraints are added. Only tails that some finite bound actually
/// reads are cut; the other side of the box is left open.
pub fn allocate_risk(pstn: &Pstn, extra: &[Stc]) -> RiskAllocation {
    let received = |e: EventId| pstn.udn_into(e).is_some();
    let n = pstn.base().len();
    let mut chance = 0usize;
    let mut share_div = vec![0usize; n];
    let mut needs_low = vec![false; n];
    let mut needs_high = vec![false; n];
    for c in pstn.base().constraints().iter().chain(extra) {
        let touched = usize::from(received(c.from)) + usize::from(received(c.to) && c.to != c.from);
        if touched == 0 {
            continue;
        }
        chance += 1;
        for e in [c.from, c.to].into_iter().filter(|&e| received(e)) {
            share_div[e.0] = share_div[e.0].max(touched);
        }
        // small `w_to` threatens the lower bound, large `w_to` the upper one
        if received(c.to) {
            needs_low[c.to.0] |= c.lower.is_finite();
            needs_high[c.to.0] |= c.upper.is_finite();
        }
        if received(c.from) {
            needs_high[c.from.0] |= c.lower.is_finite();
            needs_low[c.from.0] |= c.upper.is_finite();
        }
    }

    let mut boxes = HashMap::new();
    let mut risk = 0.0;
    let per_constraint = if chance > 0 {
        (1.0 - pstn.probability()) / chance as f64
    } else {
        0.0
    };
    for u in pstn.udns() {
        let r = u.to.0;
        let (lo_q, hi_q) = if share_div[r] == 0 {
            (None, None)
        } else {
            let delta = per_constraint / share_div[r] as f64;
            let cut = match (needs_low[r], needs_high[r]) {
                (true, true) => (Some(delta / 2.0), Some(1.0 - delta / 2.0)),
                (true, false) => (Some(delta), None),
                (false, true) => (None, Some(1.0 - delta)),
                (false, false) => (None, None),
            };
            if needs_low[r] || needs_high[r] {
                risk += delta;
            }
            cut
        };
        let quantile = |q: f64| u.dist.quantile(q).expect("risk share lies in (0, 1)");
        let lower = lo_q.map_or(f64::NEG_INFINITY, quantile);
        let upper = hi_q.map_or(f64::INFINITY, quantile);
        boxes.insert(u.to, (u.from, lower, upper));
    }
    RiskAllocation {
        chance_constraints: chance,
        boxes,
        risk,
    }
}

fn pstn_sc(pstn: &Pstn, extra: &[Stc], witness: bool) -> (TcResult, f64) {
    let alloc = allocate_risk(pstn, extra);
    let boxes = &alloc.boxes;
    let result = sc_check(pstn.base(), extra, |e| boxes.get(&e).copied(), witness);
    (result, alloc.risk)
}

fn pstn_check(pstn: &Pstn, extra: &[Stc], witness: bool) -> bool {
    pstn_sc(pstn, extra, witness).0.consistent
}

/// Conservative chance-constrained consistency at the network's probability.
/// A `consistent` verdict certifies failure probability at most `risk_bound`,
/// which never exceeds `1 - p`.
pub fn pstn_consistent(pstn: &Pstn, extra: &[Stc]) -> TcResult {
    let (mut result, risk) = pstn_sc(pstn, extra, true);
    if result.consistent {
        result.risk_bound = Some(risk);
    }
    result
}

/// Fraction of `samples` sampled realizations under which `schedule` (over the
/// controllable events) satisfies every constraint of the pSTN plus `extra`.
pub fn simulate_pstn<R: Rng + ?Sized>(
    pstn: &Pstn,
    extra: &[Stc],
    schedule: &Schedule,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let normals: Vec<Normal<f64>> = pstn
        .udns()
        .iter()
        .map(|u| {
            let Distribution::Normal { mean, std } = u.dist;
            Normal::new(mean, std).map_err(|e| Error::Malformed(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let constraints: Vec<Stc> = pstn.base().constraints().iter().chain(extra).copied().collect();
    let mut ok = 0usize;
    for _ in 0..samples {
        let draws = pstn
            .udns()
            .iter()
            .zip(&normals)
            .map(|(u, n)| (u.from, u.to, n.sample(rng)));
        let s = realize(schedule, draws)?;
        let pass = constraints.iter().try_fold(true, |acc, c| {
            Ok::<_, Error>(acc && c.is_satisfied_by(s.time(c.from)?, s.time(c.to)?, SCHEDULE_TOLERANCE))
        })?;
        ok += usize::from(pass);
    }
    Ok(if samples == 0 { 1.0 } else { ok as f64 / samples as f64 })
}
