//! Smart-house demonstration instance.
//!
//! Times are minutes after noon. A 150 W supply covers the day; the washer
//! (130 W) must finish before the resident arrives, dinner (100 W, 30 min)
//! must be ready within 15 minutes of the arrival, the lights (80 W) come on
//! before sunset and stay on until at least 12 hours in, and a 30 minute
//! snack (20 W) runs between hours 10 and 11. Arrival and sunset are
//! uncertain: `N(300, 5)` and `N(420, 1)` after the start of the day.

use crate::atn::{Atn, Distribution, Pstn, UncertainDuration};
use crate::error::Result;
use crate::resource::{ResourceConstraint, Trn};
use crate::temporal::{EventId, Stc, Stn};

pub const DAY_START: &str = "day_start";
pub const DAY_END: &str = "day_end";
pub const ARRIVAL: &str = "arrival";
pub const SUNSET: &str = "sunset";
pub const WASH_START: &str = "wash_start";
pub const WASH_END: &str = "wash_end";
pub const COOK_START: &str = "cook_start";
pub const COOK_END: &str = "cook_end";
pub const LIGHTS_ON: &str = "lights_on";
pub const LIGHTS_OFF: &str = "lights_off";
pub const SNACK_START: &str = "snack_start";
pub const SNACK_END: &str = "snack_end";

pub const SUCCESS_PROBABILITY: f64 = 0.98;

/// Builds the scenario as a pSTN-based network; `day_start` is event 0.
pub fn smart_house() -> Result<Trn> {
    let mut stn = Stn::new();
    let mut ev = |name: &str| stn.add_event(name);
    let day_start = ev(DAY_START);
    let day_end = ev(DAY_END);
    let arrival = ev(ARRIVAL);
    let sunset = ev(SUNSET);
    let wash_start = ev(WASH_START);
    let wash_end = ev(WASH_END);
    let cook_start = ev(COOK_START);
    let cook_end = ev(COOK_END);
    let lights_on = ev(LIGHTS_ON);
    let lights_off = ev(LIGHTS_OFF);
    let snack_start = ev(SNACK_START);
    let snack_end = ev(SNACK_END);

    for c in [
        Stc::exactly(day_start, day_end, 780.0),
        Stc::exactly(wash_start, wash_end, 120.0),
        Stc::precedence(wash_end, arrival),
        Stc::exactly(cook_start, cook_end, 30.0),
        Stc::new(arrival, cook_end, -15.0, 15.0),
        Stc::precedence(lights_on, sunset),
        Stc::at_least(day_start, lights_off, 720.0),
        Stc::exactly(snack_start, snack_end, 30.0),
        Stc::at_least(day_start, snack_start, 600.0),
        Stc::at_most(day_start, snack_end, 660.0),
    ] {
        stn.add_constraint(c)?;
    }

    let udns = vec![
        UncertainDuration {
            from: day_start,
            to: arrival,
            dist: Distribution::Normal { mean: 300.0, std: 5.0 },
        },
        UncertainDuration {
            from: day_start,
            to: sunset,
            dist: Distribution::Normal { mean: 420.0, std: 1.0 },
        },
    ];
    let pstn = Pstn::new(stn, udns, SUCCESS_PROBABILITY)?;

    let resources = [
        (day_start, day_end, -150.0),
        (wash_start, wash_end, 130.0),
        (cook_start, cook_end, 100.0),
        (lights_on, lights_off, 80.0),
        (snack_start, snack_end, 20.0),
    ]
    .into_iter()
    .map(|(s, e, r)| ResourceConstraint::new(s, e, r))
    .collect::<Result<_>>()?;
    Trn::new(Atn::Pstn(pstn), resources)
}

/// Looks up a scenario event by name.
pub fn event(trn: &Trn, name: &str) -> EventId {
    trn.atn()
        .base()
        .find(name)
        .unwrap_or_else(|| panic!("scenario has no event '{name}'"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atn::{allocate_risk, simulate_pstn};
    use crate::cp::{encode_as_stcs, solve, SolverConfig};
    use crate::resource::resource_consistent_schedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_with_certified_risk() {
        let trn = smart_house().unwrap();
        let r = solve(&trn, &SolverConfig::default()).unwrap();
        assert!(r.consistent);
        let risk = r.risk_bound.unwrap();
        assert!(risk <= 1.0 - SUCCESS_PROBABILITY + 1e-12);

        let s = r.schedule.unwrap();
        let t = |name| s.get(event(&trn, name)).unwrap();
        assert_eq!(t(DAY_START), 0.0);
        assert!((t(DAY_END) - 780.0).abs() < 1e-9);
        assert!(t(WASH_START) >= -1e-9);
        assert!(t(LIGHTS_OFF) >= 720.0 - 1e-9);
        assert!(t(SNACK_START) >= 600.0 - 1e-9 && t(SNACK_END) <= 660.0 + 1e-9);

        // the tightened arrival and sunset windows bound the controllable plan
        let sigma = r.ordering.unwrap();
        let mut extra = trn.interval_constraints();
        extra.extend(encode_as_stcs(&sigma));
        let Atn::Pstn(pstn) = trn.atn() else { unreachable!() };
        let alloc = allocate_risk(pstn, &extra);
        let (_, arrival_lo, _) = alloc.boxes[&event(&trn, ARRIVAL)];
        let (_, sunset_lo, _) = alloc.boxes[&event(&trn, SUNSET)];
        assert!(t(WASH_END) <= arrival_lo + 1e-9);
        assert!(t(LIGHTS_ON) <= sunset_lo + 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let freq = simulate_pstn(pstn, &extra, &s, 20_000, &mut rng).unwrap();
        assert!(freq >= SUCCESS_PROBABILITY, "success frequency {freq}");
    }

    #[test]
    fn witness_respects_supply_when_realised_at_the_mean() {
        let trn = smart_house().unwrap();
        let r = solve(&trn, &SolverConfig::default()).unwrap();
        let mut s = r.schedule.unwrap();
        s.insert(event(&trn, ARRIVAL), 300.0);
        s.insert(event(&trn, SUNSET), 420.0);
        assert!(resource_consistent_schedule(&s, trn.resources()).unwrap());
    }
}
