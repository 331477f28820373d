mod common;

use proptest::prelude::*;
use rand::Rng;

use trn::atn::{ContingentLink, Distribution, Pstn, Stnu, UncertainDuration};
use trn::document::TrnDocument;
use trn::generator::{generate, Density, GenParams};
use trn::temporal::{EventId, Stn};
use trn::{Atn, Trn};

/// Rebuilds the temporal part of `trn` as an STNU or pSTN over fresh events.
fn with_uncertainty(trn: &Trn, seed: u64) -> Trn {
    let mut rng = common::rng(seed);
    let base = trn.atn().base();
    let mut stn = Stn::with_events(base.names().iter().cloned().chain(["u_from".into(), "u_to".into()]));
    for c in base.constraints() {
        stn.add_constraint(*c).unwrap();
    }
    let (from, to) = (EventId(base.len()), EventId(base.len() + 1));
    let atn = if rng.random_bool(0.5) {
        let lower = rng.random_range(0.0..5.0);
        let link = ContingentLink { from, to, lower, upper: lower + rng.random_range(0.0..5.0) };
        Atn::Stnu(Stnu::new(stn, vec![link]).unwrap())
    } else {
        let dist = Distribution::Normal { mean: rng.random_range(1.0..50.0), std: rng.random_range(0.1..5.0) };
        let udn = UncertainDuration { from, to, dist };
        Atn::Pstn(Pstn::new(stn, vec![udn], rng.random_range(0.5..0.999)).unwrap())
    };
    Trn::new(atn, trn.resources().to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generated_documents_round_trip(seed in any::<u64>(), n in 2usize..12, r in 2usize..6, dense in any::<bool>()) {
        let density = if dense { Density::Dense } else { Density::Sparse };
        let Ok(g) = generate(&GenParams::with_density(n, r, density, seed)) else { return Ok(()) };
        let doc = TrnDocument::from_trn(&g.trn);
        let text = doc.to_json();
        let back = TrnDocument::parse(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(TrnDocument::from_trn(&back.to_trn().unwrap()).to_json(), text);
    }

    #[test]
    fn unbounded_and_uncertain_documents_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.random_range(2..=7);
        let stn_net = common::adversarial_trn(&mut rng, n, 6, 3);
        for trn in [stn_net.clone(), with_uncertainty(&stn_net, seed)] {
            let doc = TrnDocument::from_trn(&trn);
            let back = TrnDocument::parse(&doc.to_json()).unwrap();
            prop_assert_eq!(&back, &doc);
            let rebuilt = back.to_trn().unwrap();
            prop_assert_eq!(rebuilt.atn().kind(), trn.atn().kind());
            prop_assert_eq!(rebuilt.resources(), trn.resources());
            prop_assert_eq!(rebuilt.atn().base().constraints(), trn.atn().base().constraints());
        }
    }
}
