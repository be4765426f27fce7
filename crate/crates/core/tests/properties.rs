use proptest::prelude::*;

use delegation::agent::{agent_response, effort_of_gain, info_gain, informed_choice, CostModel};
use delegation::model::{BiasFunction, DecisionSetting, PayoffKernel, StateDistribution};
use delegation::principal::{evaluate, informed_payoff, informed_payoff_envelope};
use delegation::sets::{ex_ante_conjugate, make_set, minimalize, theta_conjugate, DelegationSet};

fn quartic(beta: f64) -> DecisionSetting {
    DecisionSetting::new(
        StateDistribution::uniform(0.0, 1.0).unwrap(),
        PayoffKernel::power(4.0).unwrap(),
        BiasFunction::constant(beta),
    )
    .unwrap()
}

/// Up to three pieces in `[-0.5, 2.5]`, some of them single points.
fn set_strategy() -> impl Strategy<Value = DelegationSet> {
    prop::collection::vec((-0.5f64..2.5, 0.0f64..0.6, any::<bool>()), 1..4).prop_map(|pieces| {
        let mut raw: Vec<(f64, f64)> = pieces
            .into_iter()
            .map(|(a, w, point)| (a, if point { a } else { a + w }))
            .collect();
        raw.sort_by(|p, q| p.0.total_cmp(&q.0));
        make_set(&raw).unwrap()
    })
}

fn union(a: &DelegationSet, b: &DelegationSet) -> DelegationSet {
    let mut raw: Vec<(f64, f64)> = a
        .intervals()
        .iter()
        .chain(b.intervals())
        .map(|[x, y]| (*x, *y))
        .collect();
    raw.sort_by(|p, q| p.0.total_cmp(&q.0));
    make_set(&raw).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 200,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn ex_ante_conjugate_is_an_involution(beta in 0.01f64..0.49, y in -0.5f64..2.5) {
        for s in [DecisionSetting::uqc(beta).unwrap(), quartic(beta)] {
            // Conjugates outside the working range are rejected by design.
            let Ok(z) = ex_ante_conjugate(&s, y) else { continue };
            prop_assert!((ex_ante_conjugate(&s, z).unwrap() - y).abs() <= 1e-8);
            let gap = s.report_difference(s.ex_ante_agent(y) - s.ex_ante_agent(z));
            prop_assert!(gap.abs() <= 1e-8);
        }
    }

    #[test]
    fn state_conjugate_is_an_involution(beta in 0.01f64..0.49, t in 0.0f64..=1.0, y in -0.5f64..2.5) {
        let s = quartic(beta);
        if let Ok(z) = theta_conjugate(&s, t, y) {
            prop_assert!((theta_conjugate(&s, t, z).unwrap() - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn minimalize_is_idempotent_and_keeps_payoffs(beta in 0.01f64..0.49, kappa in 0.005f64..0.3, d in set_strategy()) {
        let s = DecisionSetting::uqc(beta).unwrap();
        let cost = CostModel::szalay(kappa).unwrap();
        let m = minimalize(&s, &d);
        prop_assert_eq!(minimalize(&s, &m), m.clone());
        let (a, b) = (evaluate(&s, &cost, &d), evaluate(&s, &cost, &m));
        prop_assert!((a.agent.info_gain - b.agent.info_gain).abs() <= 1e-8);
        prop_assert!((a.u_total - b.u_total).abs() <= 1e-8);
    }

    #[test]
    fn agent_payoffs_grow_with_the_set(beta in 0.01f64..0.49, d1 in set_strategy(), extra in set_strategy()) {
        let s = DecisionSetting::uqc(beta).unwrap();
        let cost = CostModel::szalay(0.05).unwrap();
        let (r1, r2) = (agent_response(&s, &cost, &d1), agent_response(&s, &cost, &union(&d1, &extra)));
        prop_assert!(r1.uninformed_payoff <= r2.uninformed_payoff + 1e-10);
        prop_assert!(r1.informed_payoff <= r2.informed_payoff + 1e-10);
        prop_assert!(r1.info_gain >= 0.0);
    }

    #[test]
    fn informed_choice_is_monotone(beta in 0.01f64..0.49, d in set_strategy()) {
        for s in [DecisionSetting::uqc(beta).unwrap(), quartic(beta)] {
            let picks: Vec<f64> = (0..=200).map(|i| informed_choice(&s, &d, i as f64 / 200.0)).collect();
            prop_assert!(picks.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(picks.iter().all(|y| d.contains(*y)));
        }
    }

    #[test]
    fn effort_inverts_marginal_cost(kappa in 0.001f64..1.0, e in 0.0f64..0.999) {
        let cost = CostModel::szalay(kappa).unwrap();
        prop_assert!((effort_of_gain(&cost, cost.c_prime(e)) - e).abs() <= 1e-9);
    }

    #[test]
    fn envelope_matches_direct_payoff(beta in 0.01f64..0.49, d in set_strategy()) {
        let s = DecisionSetting::uqc_generic(beta).unwrap();
        let direct = informed_payoff(&s, &d);
        prop_assert!((informed_payoff_envelope(&s, &d).unwrap() - direct).abs() <= 1e-6);
    }

    #[test]
    fn objective_mixes_the_two_payoffs(beta in 0.01f64..0.49, kappa in 0.005f64..0.3, d in set_strategy()) {
        let s = DecisionSetting::uqc(beta).unwrap();
        let ev = evaluate(&s, &CostModel::szalay(kappa).unwrap(), &d);
        let (lo, hi) = (ev.u_p0.min(ev.u_p1), ev.u_p0.max(ev.u_p1));
        prop_assert!(ev.u_total >= lo - 1e-12 && ev.u_total <= hi + 1e-12);
        prop_assert!((ev.agent.info_gain - info_gain(&s, &d)).abs() <= 1e-15);
    }

    #[test]
    fn sets_round_trip_through_json(d in set_strategy()) {
        let text = serde_json::to_string(&d).unwrap();
        prop_assert_eq!(serde_json::from_str::<DelegationSet>(&text).unwrap(), d);
    }
}
