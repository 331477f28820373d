//! JSON interchange format for TRN instances and solver witnesses.
//!
//! ```json
//! {
//!   "version": 1,
//!   "events": ["A", "B"],
//!   "temporal": {
//!     "type": "stn",
//!     "constraints": [{"from": "A", "to": "B", "lb": 1.0, "ub": null}]
//!   },
//!   "resources": [{"start": "A", "end": "B", "rate": -1.0}]
//! }
//! ```
//!
//! `null` bounds are infinite. STNU documents add `contingent` links, pSTN
//! documents add `udns` and `probability`. Unknown fields are rejected.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atn::{Atn, ContingentLink, Distribution, Pstn, Stnu, UncertainDuration};
use crate::error::{Error, Result};
use crate::resource::{ResourceConstraint, Trn};
use crate::temporal::{EventId, Schedule, Stc, Stn};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrnDocument {
    pub version: u32,
    pub events: Vec<String>,
    pub temporal: TemporalDocument,
    #[serde(default)]
    pub resources: Vec<ResourceDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TemporalDocument {
    Stn {
        #[serde(default)]
        constraints: Vec<BoundDocument>,
    },
    Stnu {
        #[serde(default)]
        constraints: Vec<BoundDocument>,
        #[serde(default)]
        contingent: Vec<BoundDocument>,
    },
    Pstn {
        #[serde(default)]
        constraints: Vec<BoundDocument>,
        #[serde(default)]
        udns: Vec<UdnDocument>,
        probability: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundDocument {
    pub from: String,
    pub to: String,
    pub lb: Option<f64>,
    pub ub: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UdnDocument {
    pub from: String,
    pub to: String,
    pub dist: Distribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceDocument {
    pub start: String,
    pub end: String,
    pub rate: f64,
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl BoundDocument {
    fn from_stc(stn: &Stn, c: &Stc) -> Self {
        Self {
            from: stn.name(c.from).to_string(),
            to: stn.name(c.to).to_string(),
            lb: finite_or_none(c.lower),
            ub: finite_or_none(c.upper),
        }
    }
}

impl TrnDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: TrnDocument = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(Error::Document(format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                doc.version
            )));
        }
        Ok(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn from_trn(trn: &Trn) -> Self {
        let stn = trn.atn().base();
        let constraints = stn
            .constraints()
            .iter()
            .map(|c| BoundDocument::from_stc(stn, c))
            .collect();
        let temporal = match trn.atn() {
            Atn::Stn(_) => TemporalDocument::Stn { constraints },
            Atn::Stnu(stnu) => TemporalDocument::Stnu {
                constraints,
                contingent: stnu
                    .contingent()
                    .iter()
                    .map(|l| BoundDocument {
                        from: stn.name(l.from).to_string(),
                        to: stn.name(l.to).to_string(),
                        lb: Some(l.lower),
                        ub: Some(l.upper),
                    })
                    .collect(),
            },
            Atn::Pstn(pstn) => TemporalDocument::Pstn {
                constraints,
                udns: pstn
                    .udns()
                    .iter()
                    .map(|u| UdnDocument {
                        from: stn.name(u.from).to_string(),
                        to: stn.name(u.to).to_string(),
                        dist: u.dist,
                    })
                    .collect(),
                probability: pstn.probability(),
            },
        };
        Self {
            version: FORMAT_VERSION,
            events: stn.names().to_vec(),
            temporal,
            resources: trn
                .resources()
                .iter()
                .map(|r| ResourceDocument {
                    start: stn.name(r.start).to_string(),
                    end: stn.name(r.end).to_string(),
                    rate: r.rate,
                })
                .collect(),
        }
    }

    /// Validates names and bounds and builds the network.
    pub fn to_trn(&self) -> Result<Trn> {
        let mut index = HashMap::new();
        for (i, name) in self.events.iter().enumerate() {
            if index.insert(name.as_str(), EventId(i)).is_some() {
                return Err(Error::Document(format!("duplicate event name '{name}'")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Document(format!("unknown event '{name}'")))
        };

        let mut stn = Stn::with_events(self.events.iter().cloned());
        let constraints = match &self.temporal {
            TemporalDocument::Stn { constraints }
            | TemporalDocument::Stnu { constraints, .. }
            | TemporalDocument::Pstn { constraints, .. } => constraints,
        };
        for c in constraints {
            let stc = Stc::new(
                lookup(&c.from)?,
                lookup(&c.to)?,
                c.lb.unwrap_or(f64::NEG_INFINITY),
                c.ub.unwrap_or(f64::INFINITY),
            );
            stn.add_constraint(stc)?;
        }

        let atn = match &self.temporal {
            TemporalDocument::Stn { .. } => Atn::Stn(stn),
            TemporalDocument::Stnu { contingent, .. } => {
                let links = contingent
                    .iter()
                    .map(|l| {
                        let (Some(lower), Some(upper)) = (l.lb, l.ub) else {
                            return Err(Error::Document(format!(
                                "contingent link {} => {} needs finite lb and ub",
                                l.from, l.to
                            )));
                        };
                        Ok(ContingentLink {
                            from: lookup(&l.from)?,
                            to: lookup(&l.to)?,
                            lower,
                            upper,
                        })
                    })
                    .collect::<Result<_>>()?;
                Atn::Stnu(Stnu::new(stn, links)?)
            }
            TemporalDocument::Pstn {
                udns, probability, ..
            } => {
                let udns = udns
                    .iter()
                    .map(|u| {
                        Ok(UncertainDuration {
                            from: lookup(&u.from)?,
                            to: lookup(&u.to)?,
                            dist: u.dist,
                        })
                    })
                    .collect::<Result<_>>()?;
                Atn::Pstn(Pstn::new(stn, udns, *probability)?)
            }
        };

        let resources = self
            .resources
            .iter()
            .map(|r| ResourceConstraint::new(lookup(&r.start)?, lookup(&r.end)?, r.rate))
            .collect::<Result<_>>()?;
        Trn::new(atn, resources)
    }
}

/// Witness written by `trn check --schedule-out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    pub version: u32,
    pub consistent: bool,
    /// Event name to time, controllable events only.
    pub schedule: BTreeMap<String, f64>,
    /// Resource events in witness order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_bound: Option<f64>,
}

impl ScheduleDocument {
    pub fn new(
        stn: &Stn,
        schedule: &Schedule,
        ordering: Option<&crate::resource::Ordering>,
        risk_bound: Option<f64>,
    ) -> Self {
        Self {
            version: FORMAT_VERSION,
            consistent: true,
            schedule: schedule
                .iter()
                .map(|(e, t)| (stn.name(e).to_string(), t))
                .collect(),
            ordering: ordering.map(|o| o.sequence().into_iter().map(|e| stn.name(e).to_string()).collect()),
            risk_bound,
        }
    }

    /// Schedule keyed by event id, resolving names against `stn`.
    pub fn to_schedule(&self, stn: &Stn) -> Result<Schedule> {
        self.schedule
            .iter()
            .map(|(name, &t)| {
                stn.find(name)
                    .map(|e| (e, t))
                    .ok_or_else(|| Error::Document(format!("unknown event '{name}'")))
            })
            .collect()
    }
}
