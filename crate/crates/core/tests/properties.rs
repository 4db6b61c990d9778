//! Property tests for the model invariants.

use indexmap::IndexMap;
use proptest::prelude::*;
use reptrace::beta::{beta_mass, beta_mass_quadrature, regularized_incomplete_beta};
use reptrace::fire::recency_weight;
use reptrace::model::{combine_term_trust, overall_trust, NativeRange};
use reptrace::simulate::{run_scenario, ProviderModel, ProviderPhase, RaterProfile, Scenario};
use reptrace::store::{opinion_bin, RatingPattern, RatingStore};
use reptrace::travos::{
    combine_evidence, confidence, decomposition_weights, discount_opinion, BetaParams, WitnessOpinion,
};
use reptrace::{AgentId, ComponentTrust, Rating, ReputationType, Term};

fn term(i: usize) -> Term {
    Term::new(format!("t{i}")).unwrap()
}

fn params() -> impl Strategy<Value = BetaParams> {
    (1.0..60.0f64, 1.0..60.0f64).prop_map(|(a, b)| BetaParams::new(a, b).unwrap())
}

fn opinion(p: BetaParams) -> WitnessOpinion {
    WitnessOpinion::new(AgentId::new("w").unwrap(), AgentId::new("b").unwrap(), term(0), p)
}

fn components() -> impl Strategy<Value = Vec<ComponentTrust>> {
    prop::collection::vec((0.0..=1.0f64, 0.01..5.0f64), 1..=4).prop_map(|vw| {
        vw.into_iter()
            .zip(ReputationType::ALL)
            .map(|((v, w), k)| ComponentTrust::present(k, v, w))
            .collect()
    })
}

proptest! {
    #[test]
    fn term_trust_bounded_and_scale_free(cs in components(), scale in 0.01..100.0f64) {
        let t = combine_term_trust(&cs).unwrap();
        let lo = cs.iter().filter_map(|c| c.value).fold(f64::INFINITY, f64::min);
        let hi = cs.iter().filter_map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(t >= lo - 1e-12 && t <= hi + 1e-12);
        let scaled: Vec<ComponentTrust> = cs
            .iter()
            .map(|c| ComponentTrust { weight: c.weight * scale, ..c.clone() })
            .collect();
        prop_assert!((combine_term_trust(&scaled).unwrap() - t).abs() < 1e-9);
    }

    #[test]
    fn overall_scale_free(vals in prop::collection::vec((0.0..=1.0f64, 0.01..3.0f64), 1..8), scale in 0.01..100.0f64) {
        let trusts: IndexMap<Term, f64> = vals.iter().enumerate().map(|(i, (v, _))| (term(i), *v)).collect();
        let weights: IndexMap<Term, f64> = vals.iter().enumerate().map(|(i, (_, w))| (term(i), *w)).collect();
        let scaled: IndexMap<Term, f64> = weights.iter().map(|(t, w)| (t.clone(), w * scale)).collect();
        let a = overall_trust(&trusts, &weights).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((overall_trust(&trusts, &scaled).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn incomplete_beta_symmetry(a in 0.2..80.0f64, b in 0.2..80.0f64, x in 0.0..=1.0f64) {
        let lhs = regularized_incomplete_beta(a, b, x).unwrap();
        let rhs = 1.0 - regularized_incomplete_beta(b, a, 1.0 - x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn closed_form_agrees_with_quadrature(a in 1.0..40.0f64, b in 1.0..40.0f64, lo in 0.0..1.0f64, w in 0.0..0.5f64) {
        let hi = (lo + w).min(1.0);
        let c = beta_mass(a, b, lo, hi).unwrap();
        let q = beta_mass_quadrature(a, b, lo, hi, 1e-12).unwrap();
        prop_assert!((c - q).abs() < 1e-8, "{c} vs {q}");
    }

    #[test]
    fn discount_extremes(p in params()) {
        let none = discount_opinion(&opinion(p), 0.0).unwrap();
        prop_assert!((none.alpha - 1.0).abs() < 1e-9 && (none.beta - 1.0).abs() < 1e-9);
        let full = discount_opinion(&opinion(p), 1.0).unwrap();
        prop_assert!((full.alpha - p.alpha).abs() < 1e-6 * p.alpha);
        prop_assert!((full.beta - p.beta).abs() < 1e-6 * p.beta);
    }

    #[test]
    fn discount_moves_mean_toward_half(p in params(), rho in 0.0..=1.0f64) {
        if let Ok(d) = discount_opinion(&opinion(p), rho) {
            let e = p.expected_value();
            let target = 0.5 + rho * (e - 0.5);
            prop_assert!((d.expected_value() - target).abs() < 1e-9);
        }
    }

    #[test]
    fn combination_order_free(i in params(), ws in prop::collection::vec(params(), 0..6)) {
        let fwd = combine_evidence(i, &ws);
        let mut rev = ws.clone();
        rev.reverse();
        let back = combine_evidence(i, &rev);
        prop_assert!((fwd.alpha - back.alpha).abs() < 1e-9 && (fwd.beta - back.beta).abs() < 1e-9);
        let (wi, ww) = decomposition_weights(i, &ws);
        prop_assert!((wi + ww - 1.0).abs() < 1e-12);
        if !ws.is_empty() {
            // components recombine to the composite expected value
            let pooled_a: f64 = ws.iter().map(|w| w.alpha).sum();
            let pooled_b: f64 = ws.iter().map(|w| w.beta).sum();
            let recombined = wi * i.expected_value() + ww * pooled_a / (pooled_a + pooled_b);
            prop_assert!((recombined - fwd.expected_value()).abs() < 1e-9);
        }
    }

    #[test]
    fn confidence_grows_with_epsilon(p in params(), e1 in 0.0..0.5f64, e2 in 0.0..0.5f64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(confidence(p, lo).unwrap() <= confidence(p, hi).unwrap() + 1e-12);
    }

    #[test]
    fn recency_weight_decreasing(dt in 0.0..50.0f64, extra in 0.0..50.0f64, lambda in 0.1..20.0f64) {
        let w = recency_weight(dt, lambda);
        prop_assert!(w > 0.0 && w <= 1.0);
        prop_assert!(recency_weight(dt + extra, lambda) <= w);
    }

    #[test]
    fn bins_cover_unit_interval(v in 0.0..=1.0f64, bins in 1usize..20) {
        let b = opinion_bin(v, bins).unwrap();
        prop_assert!(b >= 1 && b <= bins);
        let lo = (b - 1) as f64 / bins as f64;
        prop_assert!(v >= lo - 1e-12);
    }

    #[test]
    fn tsv_round_trip(rows in prop::collection::vec((0usize..3, 0usize..3, 0usize..4, 0.0..=1.0f64, 0u64..100), 0..30)) {
        let mut store = RatingStore::new();
        for (s, t, k, v, ts) in rows {
            store.insert(Rating::from_native(
                AgentId::new(format!("s{s}")).unwrap(),
                AgentId::new(format!("p{t}")).unwrap(),
                term(t),
                ReputationType::ALL[k],
                v,
                NativeRange::Unit,
                ts,
                Some(format!("i{ts}")),
            ).unwrap());
        }
        let mut buf = Vec::new();
        store.write_tsv(&mut buf).unwrap();
        let back = RatingStore::read_tsv(buf.as_slice()).unwrap();
        let a = store.query(&RatingPattern::any());
        let b = back.query(&RatingPattern::any());
        prop_assert_eq!(a, b);
    }
}

fn provider(name: &str) -> ProviderModel {
    let phase = |mu: f64| ProviderPhase {
        days_mu: mu,
        days_sigma: 1.5,
        max_days: 8,
        price: 30.0,
        parcel_probs: [0.6, 0.2, 0.1, 0.1],
        service_probs: [0.4, 0.3, 0.2, 0.1],
    };
    ProviderModel {
        id: AgentId::new(name).unwrap(),
        phases: [phase(2.0), phase(6.0)],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulation_deterministic_and_bounded(seed in any::<u64>(), rounds in 1u32..12) {
        let scenario = Scenario {
            providers: vec![provider("P1"), provider("P2"), provider("P3")],
            agents: ["A1", "A2", "A3"].iter().map(|a| AgentId::new(*a).unwrap()).collect(),
            rounds,
            seed,
            selection: Default::default(),
            topology: Default::default(),
            profile: RaterProfile::default(),
            history_cap: None,
        };
        let world = run_scenario(&scenario).unwrap();
        prop_assert_eq!(&world, &run_scenario(&scenario).unwrap());
        for stores in world.values() {
            prop_assert!(stores.ratings.iter().all(|r| (0.0..=1.0).contains(&r.value)));
            prop_assert!(stores.ratings.iter().all(|r| r.timestamp < rounds as u64));
            prop_assert!(stores.observations.iter().all(|o| (0.0..=1.0).contains(&o.outcome_rating)));
        }
    }
}
