//! Big-M mixed integer encoding of time-resource consistency.
//!
//! One continuous time variable per event, one binary `x_{a,b}` per ordered
//! pair of distinct resource events (`x_{a,b} = 1` allows `a <= b`), and one
//! usage row per resource event summing the resource change of every event
//! ordered before it. Three-event transitivity rows keep the binaries a total
//! order even when events coincide. The model has a feasible point iff the
//! TRN over an STN is time-resource consistent.

mod external;
mod lp;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use external::{parse_solution, solve_external, solve_trn, solver_from_env, SOLVER_ENV};
pub use lp::export_lp;

use crate::atn::Atn;
use crate::error::{Error, Result};
use crate::resource::{delta, Ordering, Trn};
use crate::temporal::{EventId, Schedule};

/// Equation a row or bound comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Equation {
    /// `0 <= t_e <= M`
    Horizon,
    /// `t_a - t_b >= -M x_ab`
    OrderLower,
    /// `t_a - t_b <= M (1 - x_ab)`
    OrderUpper,
    /// `x_ab + x_ba = 1`
    Exclusive,
    /// `1 <= x_ab + x_bc + x_ca <= 2`: no order cycle among three events.
    Transitive,
    /// `x_ab` binary
    Binary,
    /// Usage just after a resource event is non-positive.
    Usage,
    /// Temporal constraints of the network.
    Temporal,
}

impl Equation {
    pub fn tag(self) -> &'static str {
        match self {
            Equation::Horizon => "eq3",
            Equation::OrderLower => "eq4",
            Equation::OrderUpper => "eq5",
            Equation::Exclusive => "eq6",
            Equation::Transitive => "tr",
            Equation::Binary => "eq7",
            Equation::Usage => "eq8",
            Equation::Temporal => "eq9",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VarKind {
    Continuous { lower: f64, upper: f64 },
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub equation: Equation,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    pub fn is_satisfied(&self, values: &[f64], tolerance: f64) -> bool {
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tolerance,
            Sense::Ge => lhs >= self.rhs - tolerance,
            Sense::Eq => (lhs - self.rhs).abs() <= tolerance,
        }
    }
}

/// Feasibility tolerance for checking a point against the model.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct MipModel {
    pub horizon: f64,
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    time_vars: Vec<VarId>,
    order_vars: BTreeMap<(EventId, EventId), VarId>,
    resource_events: Vec<EventId>,
}

impl MipModel {
    pub fn time_var(&self, e: EventId) -> VarId {
        self.time_vars[e.0]
    }

    /// `x_{a,b}` for distinct resource events.
    pub fn order_var(&self, a: EventId, b: EventId) -> Option<VarId> {
        self.order_vars.get(&(a, b)).copied()
    }

    pub fn binary_count(&self) -> usize {
        self.order_vars.len()
    }

    pub fn resource_events(&self) -> &[EventId] {
        &self.resource_events
    }

    pub fn rows(&self, equation: Equation) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints.iter().filter(move |c| c.equation == equation)
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// Rows of `equation` violated by `values` (indexed by [`VarId`]).
    pub fn violated(&self, values: &[f64], equation: Option<Equation>) -> Vec<&LinearConstraint> {
        self.constraints
            .iter()
            .filter(|c| equation.is_none_or(|eq| c.equation == eq))
            .filter(|c| !c.is_satisfied(values, FEASIBILITY_TOLERANCE))
            .collect()
    }

    /// Variable values for a schedule and a total order of the resource
    /// events, as the intended solution would set them.
    pub fn assignment(&self, schedule: &Schedule, sigma: &Ordering) -> Result<Vec<f64>> {
        let mut values = vec![0.0; self.variables.len()];
        for (e, &v) in self.time_vars.iter().enumerate() {
            values[v.0] = schedule.time(EventId(e))?;
        }
        for (&(a, b), &v) in &self.order_vars {
            let (ra, rb) = match (sigma.rank(a), sigma.rank(b)) {
                (Some(ra), Some(rb)) => (ra, rb),
                _ => return Err(Error::Domain("order does not rank every resource event".into())),
            };
            values[v.0] = if ra < rb { 1.0 } else { 0.0 };
        }
        Ok(values)
    }
}

/// Horizon `M` used when none is given: the sum over all temporal constraints
/// of their largest finite absolute bound, plus one.
pub fn default_horizon(trn: &Trn) -> f64 {
    trn.atn()
        .base()
        .constraints()
        .iter()
        .map(|c| {
            [c.lower, c.upper]
                .into_iter()
                .filter(|b| b.is_finite())
                .map(f64::abs)
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        + 1.0
}

/// LP-safe identifier fragment for an event name.
fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

/// Builds the model for a TRN over an STN with horizon `horizon`.
pub fn encode(trn: &Trn, horizon: f64) -> Result<MipModel> {
    let stn = match trn.atn() {
        Atn::Stn(stn) => stn,
        other => {
            return Err(Error::UnsupportedAtn(format!(
                "{} networks have no linear formulation of temporal consistency",
                other.kind()
            )))
        }
    };
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }

    // unique LP names per event
    let mut used: HashMap<String, usize> = HashMap::new();
    let labels: Vec<String> = stn
        .events()
        .map(|e| {
            let base = sanitize(stn.name(e));
            let n = used.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                base
            } else {
                format!("{base}_{}", e.0)
            }
        })
        .collect();

    let mut variables = Vec::new();
    let time_vars: Vec<VarId> = labels
        .iter()
        .map(|l| {
            variables.push(Variable {
                name: format!("t_{l}"),
                kind: VarKind::Continuous {
                    lower: 0.0,
                    upper: horizon,
                },
            });
            VarId(variables.len() - 1)
        })
        .collect();

    let re: Vec<EventId> = trn.resource_events().into_iter().collect();
    let mut order_vars = BTreeMap::new();
    for &a in &re {
        for &b in &re {
            if a != b {
                variables.push(Variable {
                    name: format!("x_{}_{}", labels[a.0], labels[b.0]),
                    kind: VarKind::Binary,
                });
                order_vars.insert((a, b), VarId(variables.len() - 1));
            }
        }
    }

    let mut constraints = Vec::new();
    let mut row = |name: String, equation, terms, sense, rhs| {
        constraints.push(LinearConstraint {
            name,
            equation,
            terms,
            sense,
            rhs,
        })
    };

    for &a in &re {
        for &b in &re {
            if a == b {
                continue;
            }
            let (ta, tb, x) = (time_vars[a.0], time_vars[b.0], order_vars[&(a, b)]);
            let pair = format!("{}_{}", labels[a.0], labels[b.0]);
            let terms = vec![(ta, 1.0), (tb, -1.0), (x, horizon)];
            row(format!("eq4_{pair}"), Equation::OrderLower, terms.clone(), Sense::Ge, 0.0);
            row(format!("eq5_{pair}"), Equation::OrderUpper, terms, Sense::Le, horizon);
        }
    }
    for (i, &a) in re.iter().enumerate() {
        for &b in &re[i + 1..] {
            let terms = vec![(order_vars[&(a, b)], 1.0), (order_vars[&(b, a)], 1.0)];
            let name = format!("eq6_{}_{}", labels[a.0], labels[b.0]);
            row(name, Equation::Exclusive, terms, Sense::Eq, 1.0);
        }
    }
    // Exclusivity alone admits a cycle among simultaneous events, and each
    // usage row then omits part of the group.
    for (i, &a) in re.iter().enumerate() {
        for (j, &b) in re.iter().enumerate().skip(i + 1) {
            for &c in &re[j + 1..] {
                let terms = vec![
                    (order_vars[&(a, b)], 1.0),
                    (order_vars[&(b, c)], 1.0),
                    (order_vars[&(c, a)], 1.0),
                ];
                let name = format!("tr_{}_{}_{}", labels[a.0], labels[b.0], labels[c.0]);
                row(format!("{name}_lo"), Equation::Transitive, terms.clone(), Sense::Ge, 1.0);
                row(format!("{name}_hi"), Equation::Transitive, terms, Sense::Le, 2.0);
            }
        }
    }
    // the event's own change counts in its row: usage is read just after it
    let deltas: HashMap<EventId, f64> = re.iter().map(|&e| (e, delta(e, trn.resources()))).collect();
    for &a in &re {
        let terms = re
            .iter()
            .filter(|&&b| b != a && deltas[&b] != 0.0)
            .map(|&b| (order_vars[&(b, a)], deltas[&b]))
            .collect();
        row(format!("eq8_{}", labels[a.0]), Equation::Usage, terms, Sense::Le, -deltas[&a]);
    }

    let intervals = trn.interval_constraints();
    let temporal = stn
        .constraints()
        .iter()
        .map(|c| (c, "c"))
        .chain(intervals.iter().map(|c| (c, "r")));
    for (k, (c, kind)) in temporal.enumerate() {
        let terms = vec![(time_vars[c.to.0], 1.0), (time_vars[c.from.0], -1.0)];
        if c.lower.is_finite() {
            row(format!("eq9_{kind}{k}_lb"), Equation::Temporal, terms.clone(), Sense::Ge, c.lower);
        }
        if c.upper.is_finite() {
            row(format!("eq9_{kind}{k}_ub"), Equation::Temporal, terms, Sense::Le, c.upper);
        }
    }

    Ok(MipModel {
        horizon,
        variables,
        constraints,
        time_vars,
        order_vars,
        resource_events: re,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MipStatus {
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipSolution {
    pub status: MipStatus,
    pub values: BTreeMap<String, f64>,
}

impl MipSolution {
    /// Dense value vector; variables missing from the solution read as 0.
    pub fn dense(&self, model: &MipModel) -> Vec<f64> {
        model
            .variables
            .iter()
            .map(|v| self.values.get(&v.name).copied().unwrap_or(0.0))
            .collect()
    }
}

/// Schedule from the time variables and order of the resource events from the
/// rounded binaries.
pub fn decode_solution(model: &MipModel, solution: &MipSolution) -> Result<(Schedule, Ordering)> {
    if solution.status != MipStatus::Feasible {
        return Err(Error::Domain("only feasible solutions can be decoded".into()));
    }
    let values = solution.dense(model);
    let schedule: Schedule = model
        .time_vars
        .iter()
        .enumerate()
        .map(|(e, v)| (EventId(e), values[v.0]))
        .collect();

    let precedes = |a: EventId, b: EventId| values[model.order_vars[&(a, b)].0] >= 0.5;
    let re = &model.resource_events;
    for (i, &a) in re.iter().enumerate() {
        for &b in &re[i + 1..] {
            if precedes(a, b) == precedes(b, a) {
                return Err(Error::InconsistentBinaries(
                    model.variables[model.time_vars[a.0].0].name.clone(),
                    model.variables[model.time_vars[b.0].0].name.clone(),
                ));
            }
        }
    }
    // more successors means earlier; times only break tournament cycles,
    // which the order rows admit among simultaneous events
    let mut seq = re.clone();
    let wins = |a: EventId| re.iter().filter(|&&b| b != a && precedes(a, b)).count();
    seq.sort_by(|&a, &b| {
        let (ta, tb) = (schedule.get(a).unwrap_or(0.0), schedule.get(b).unwrap_or(0.0));
        wins(b).cmp(&wins(a)).then(ta.total_cmp(&tb)).then(a.cmp(&b))
    });
    let ordering = Ordering::from_sequence(&seq)?;
    Ok((schedule, ordering))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::ResourceConstraint;
    use crate::temporal::{Stc, Stn};

    fn two_event(rate: f64) -> Trn {
        let mut stn = Stn::with_events(["A", "B"]);
        stn.add_constraint(Stc::new(EventId(0), EventId(1), 1.0, 3.0)).unwrap();
        let r = ResourceConstraint::new(EventId(0), EventId(1), rate).unwrap();
        Trn::new(Atn::Stn(stn), vec![r]).unwrap()
    }

    #[test]
    fn two_event_counts() {
        let m = encode(&two_event(-1.0), 10.0).unwrap();
        assert_eq!(m.binary_count(), 2);
        assert_eq!(m.rows(Equation::Exclusive).count(), 1);
        assert_eq!(m.rows(Equation::Usage).count(), 2);
        assert_eq!(m.rows(Equation::OrderLower).count(), 2);
        assert_eq!(m.rows(Equation::OrderUpper).count(), 2);
        assert_eq!(m.rows(Equation::Transitive).count(), 0);
    }

    #[test]
    fn no_resources_no_binaries() {
        let mut stn = Stn::with_events(["A", "B"]);
        stn.add_constraint(Stc::new(EventId(0), EventId(1), 1.0, 3.0)).unwrap();
        let trn = Trn::new(Atn::Stn(stn), vec![]).unwrap();
        let m = encode(&trn, 5.0).unwrap();
        assert_eq!(m.binary_count(), 0);
        assert!(m.constraints.iter().all(|c| c.equation == Equation::Temporal));
        assert_eq!(m.constraints.len(), 2);
    }

    #[test]
    fn default_horizon_sums_bounds() {
        assert_eq!(default_horizon(&two_event(1.0)), 4.0);
    }

    #[test]
    fn rejects_uncertain_networks() {
        let stn = Stn::with_events(["A", "B"]);
        let pstn = crate::atn::Pstn::new(stn, vec![], 0.9).unwrap();
        let trn = Trn::new(Atn::Pstn(pstn), vec![]).unwrap();
        assert!(matches!(encode(&trn, 1.0), Err(Error::UnsupportedAtn(_))));
        assert!(matches!(encode(&two_event(1.0), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn decode_two_event() {
        let m = encode(&two_event(-1.0), 10.0).unwrap();
        let values = [("t_A", 1.0), ("t_B", 2.0), ("x_A_B", 1.0), ("x_B_A", 0.0)];
        let sol = MipSolution {
            status: MipStatus::Feasible,
            values: values.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        };
        let (s, o) = decode_solution(&m, &sol).unwrap();
        assert_eq!((s.get(EventId(0)), s.get(EventId(1))), (Some(1.0), Some(2.0)));
        assert_eq!(o.sequence(), vec![EventId(0), EventId(1)]);
    }

    #[test]
    fn decode_rounds_binaries() {
        let m = encode(&two_event(-1.0), 10.0).unwrap();
        let mk = |xab: f64, xba: f64| MipSolution {
            status: MipStatus::Feasible,
            values: [("t_A", 2.0), ("t_B", 2.0), ("x_A_B", xab), ("x_B_A", xba)]
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect(),
        };
        let (_, o) = decode_solution(&m, &mk(0.4, 0.6)).unwrap();
        assert_eq!(o.sequence(), vec![EventId(1), EventId(0)]);
        assert!(matches!(
            decode_solution(&m, &mk(0.7, 0.6)),
            Err(Error::InconsistentBinaries(..))
        ));
    }

    #[test]
    fn cyclic_order_among_simultaneous_events_is_cut() {
        // P supplies 1, A B C each draw 0.4 at the same instant, Z releases all
        let mut stn = Stn::with_events(["P", "A", "B", "C", "Z"]);
        let e = EventId;
        for c in [
            Stc::exactly(e(1), e(2), 0.0),
            Stc::exactly(e(2), e(3), 0.0),
            Stc::at_least(e(0), e(1), 1.0),
            Stc::at_least(e(1), e(4), 1.0),
        ] {
            stn.add_constraint(c).unwrap();
        }
        let resources = [(0, -1.0), (1, 0.4), (2, 0.4), (3, 0.4)]
            .into_iter()
            .map(|(s, r)| ResourceConstraint::new(e(s), e(4), r).unwrap())
            .collect();
        let trn = Trn::new(Atn::Stn(stn), resources).unwrap();
        let verdict = crate::cp::solve_exhaustive(&trn, &Default::default()).unwrap();
        assert!(!verdict.consistent);

        let m = encode(&trn, 10.0).unwrap();
        let mut values = vec![0.0; m.variables.len()];
        for (ev, t) in [(0, 0.0), (1, 1.0), (2, 1.0), (3, 1.0), (4, 2.0)] {
            values[m.time_var(e(ev)).0] = t;
        }
        let ahead = |a: usize, b: usize| match (a, b) {
            (0, _) | (_, 4) => true,
            (_, 0) | (4, _) => false,
            (a, b) => b == a % 3 + 1,
        };
        for a in 0..5 {
            for b in (0..5).filter(|&b| b != a) {
                values[m.order_var(e(a), e(b)).unwrap().0] = if ahead(a, b) { 1.0 } else { 0.0 };
            }
        }
        let violated = m.violated(&values, None);
        assert!(!violated.is_empty());
        assert!(violated.iter().all(|c| c.equation == Equation::Transitive));
    }

    #[test]
    fn binaries_outrank_solver_time_noise() {
        let m = encode(&two_event(-1.0), 10.0).unwrap();
        let values = [("t_A", 2.0 + 1e-9), ("t_B", 2.0), ("x_A_B", 1.0), ("x_B_A", 0.0)];
        let sol = MipSolution {
            status: MipStatus::Feasible,
            values: values.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        };
        let (_, o) = decode_solution(&m, &sol).unwrap();
        assert_eq!(o.sequence(), vec![EventId(0), EventId(1)]);
    }

    #[test]
    fn name_collisions_are_disambiguated() {
        let stn = Stn::with_events(["a b", "a-b"]);
        let r = ResourceConstraint::new(EventId(0), EventId(1), -1.0).unwrap();
        let m = encode(&Trn::new(Atn::Stn(stn), vec![r]).unwrap(), 1.0).unwrap();
        assert_eq!(m.variables[0].name, "t_a_b");
        assert_eq!(m.variables[1].name, "t_a_b_1");
    }
}
