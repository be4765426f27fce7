use delegation::agent::{info_gain, CostModel};
use delegation::high_point::{high_point_demo, high_point_set, hollow_singleton_set};
use delegation::model::DecisionSetting;
use delegation::optimizer::{optimize_family, Family, DEFAULT_GRID};
use delegation::principal::{evaluate, informed_payoff};
use delegation::Error;

#[test]
fn bias_outside_the_range_is_rejected() {
    assert!(matches!(
        high_point_demo(0.2, 0.1),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        high_point_demo(0.5, 0.1),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        high_point_demo(0.3, 0.0),
        Err(Error::Precondition(_))
    ));
}

/// States below ½ pick from the interval, the rest take ½ + 2β; both pieces
/// integrated by hand.
fn hollow_singleton_closed_form(beta: f64) -> f64 {
    let low = beta * beta * (0.5 - beta) + beta.powi(3) / 3.0;
    let high = ((2.0 * beta).powi(3) - (2.0 * beta - 0.5).powi(3)) / 3.0;
    -(low + high)
}

#[test]
fn hollow_singleton_payoff_against_hand_integral() {
    for beta in [0.26, 0.28, 0.3, 0.35, 0.45] {
        let s = DecisionSetting::uqc(beta).unwrap();
        let v = informed_payoff(&s, &hollow_singleton_set(beta, 0.5));
        assert!(
            (v - hollow_singleton_closed_form(beta)).abs() < 1e-12,
            "{beta}"
        );
    }
}

#[test]
fn construction_makes_the_high_point_win() {
    for beta in [0.28, 0.3, 0.35] {
        let r = high_point_demo(beta, 0.1).unwrap();
        assert!(r.success, "{beta}: {:?}", r.violation);
        let last = r.final_attempt().unwrap();
        assert!(last.ordering_holds && last.dominates);
        assert!(r.ybar > 1.0 + beta && r.ybar < 1.5 + 2.0 * beta);
        assert!(r.u_p1_high_point > r.u0);
        assert!(r.delta1 > r.delta0);

        // Independent re-check of the winning cost.
        let s = DecisionSetting::uqc(beta).unwrap();
        let cost = CostModel::near_step(last.eps, last.x0, Some(last.s)).unwrap();
        let d = high_point_set(beta, r.ybar);
        let hp = evaluate(&s, &cost, &d).u_total;
        for fam in [Family::Interval, Family::Hollow] {
            let best = optimize_family(&s, &cost, fam, DEFAULT_GRID).unwrap();
            assert!(hp > best.evaluation.u_total, "{beta} {fam:?}");
        }
        assert!((info_gain(&s, &d) - r.delta1).abs() < 1e-15);
    }
}

#[test]
fn stated_ranges_do_not_hold() {
    // ȳ must sit close to 3/2 + 2β for u_P1(D_ȳ) to exceed -1/12.
    let r = high_point_demo(0.3, 0.1).unwrap();
    assert!(!r.ybar_below_three_halves_plus_beta);
    let s = DecisionSetting::uqc(0.3).unwrap();
    for i in 1..50 {
        let y = 1.3 + 0.5 * i as f64 / 50.0;
        assert!(informed_payoff(&s, &high_point_set(0.3, y)) < r.u0);
    }
    assert!(!r.identity_holds);
    // At β = 0.28 no cap above ½ brings the hollow payoff below -1/12.
    let r = high_point_demo(0.28, 0.1).unwrap();
    assert!(!r.hollow_below_u0);
}
