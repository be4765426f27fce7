//! An explicit cost under which high-point delegation beats every interval
//! and hollow set in the uniform/quadratic setting with bias in `(¼, ½)`.
//!
//! The set is `D_ȳ = [β, ½] ∪ {ȳ}`. The cost is a near-step logistic whose
//! jump sits between the agent's information gain on a short interval
//! `[β, y0*]` and on `D_ȳ`, so only sets at least as attractive to the agent
//! as `D_ȳ` get noticeable effort.

use serde::Serialize;

use crate::agent::{info_gain, CostModel};
use crate::error::{Error, Result};
use crate::model::DecisionSetting;
use crate::numeric::{bisect, linspace};
use crate::optimizer::{optimize_family, Family, DEFAULT_GRID};
use crate::principal::{evaluate, informed_payoff};
use crate::sets::{make_set, DelegationSet};

/// Attempts before giving up; `ε` is halved after each failure.
pub const MAX_ATTEMPTS: usize = 11;
/// Resolution of the `ȳ` scan.
const YBAR_GRID: usize = 2001;
/// Tolerance of the closed-form payoff check.
pub const IDENTITY_TOL: f64 = 1e-8;

/// `[β, ½] ∪ {ȳ}`.
pub fn high_point_set(beta: f64, ybar: f64) -> DelegationSet {
    make_set(&[(beta, 0.5), (ybar, ybar)]).expect("well formed")
}

/// `[β, y0] ∪ {1 + 2β - y0}`, a hollow set whose upper part is the ex ante
/// conjugate of `y0`.
pub fn hollow_singleton_set(beta: f64, y0: f64) -> DelegationSet {
    let y1 = 1.0 + 2.0 * beta - y0;
    make_set(&[(beta, y0), (y1, y1)]).expect("well formed")
}

/// Values of the three competing families under one constructed cost.
#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub eps: f64,
    pub x0: f64,
    pub s: f64,
    /// `δ0 < c'(ε²) < c'(ε - ε²) < δ1 < 1 < c'(ε)`.
    pub ordering_holds: bool,
    pub high_point_value: f64,
    pub best_high_point: f64,
    pub best_interval: f64,
    pub best_hollow: f64,
    pub dominates: bool,
    pub violation: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HighPointReport {
    pub beta: f64,
    pub u0: f64,
    pub ybar: f64,
    pub u_p1_high_point: f64,
    /// `ȳ < 3/2 + β`.
    pub ybar_below_three_halves_plus_beta: bool,
    pub y0_star: f64,
    /// `Δ_A([β, y0*])`.
    pub delta0: f64,
    /// `Δ_A(D_ȳ)`.
    pub delta1: f64,
    /// `u_P1([β, y0*] ∪ {1 + 2β - y0*})`.
    pub u_p1_hollow_at_y0_star: f64,
    /// Whether the hollow-singleton payoff at `y0*` is below `u0`.
    pub hollow_below_u0: bool,
    /// `u_P1([β, ½] ∪ {½ + 2β})`, computed.
    pub identity_value: f64,
    /// `-1/12 - (β/2)(4β - 1)`.
    pub identity_claim: f64,
    pub identity_holds: bool,
    pub attempts: Vec<Attempt>,
    pub success: bool,
    pub violation: Option<String>,
}

impl HighPointReport {
    /// Strict reading: `ȳ` below `3/2 + β` and the hollow payoff condition
    /// at `y0*`.
    pub fn literal_thresholds(&self) -> bool {
        self.ybar_below_three_halves_plus_beta && self.hollow_below_u0 && self.delta1 > self.delta0
    }

    pub fn final_attempt(&self) -> Option<&Attempt> {
        self.attempts.last()
    }
}

/// Builds the construction for bias `beta`, starting from `eps` and halving
/// it until the high-point set wins or the attempts run out.
pub fn high_point_demo(beta: f64, eps: f64) -> Result<HighPointReport> {
    high_point_demo_with_grid(beta, eps, DEFAULT_GRID)
}

pub fn high_point_demo_with_grid(beta: f64, eps: f64, grid_n: usize) -> Result<HighPointReport> {
    if !(beta > 0.25 && beta < 0.5) {
        return Err(Error::Precondition(format!(
            "bias must lie in (1/4, 1/2), got {beta}"
        )));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Precondition(format!(
            "eps must lie in (0, 1/2), got {eps}"
        )));
    }
    let setting = DecisionSetting::uqc(beta)?;
    let u0 = setting.report_principal(setting.ex_ante_principal(0.5));
    let gain = |d: &DelegationSet| info_gain(&setting, d);

    let identity_value = informed_payoff(&setting, &hollow_singleton_set(beta, 0.5));
    let identity_claim = -1.0 / 12.0 - 0.5 * beta * (4.0 * beta - 1.0);

    // Beyond the θ̄-conjugate of ½ the top point is never chosen.
    let cap = 1.5 + 2.0 * beta;
    let floor = 1.0 + beta;
    let u_half = informed_payoff(&setting, &DelegationSet::interval(beta, 0.5));
    let target = 0.5 * (u0 + u_half);
    let ybar = linspace(floor, cap, YBAR_GRID)
        .into_iter()
        .skip(1)
        .take(YBAR_GRID - 2)
        .find(|&y| informed_payoff(&setting, &high_point_set(beta, y)) >= target);

    let mut report = HighPointReport {
        beta,
        u0,
        ybar: f64::NAN,
        u_p1_high_point: f64::NAN,
        ybar_below_three_halves_plus_beta: false,
        y0_star: f64::NAN,
        delta0: f64::NAN,
        delta1: f64::NAN,
        u_p1_hollow_at_y0_star: f64::NAN,
        hollow_below_u0: false,
        identity_value,
        identity_claim,
        identity_holds: (identity_value - identity_claim).abs() <= IDENTITY_TOL,
        attempts: Vec::new(),
        success: false,
        violation: None,
    };
    let Some(ybar) = ybar else {
        report.violation = Some("no ȳ with u_P1(D_ȳ) above u0".into());
        return Ok(report);
    };
    let d_hp = high_point_set(beta, ybar);
    report.ybar = ybar;
    report.u_p1_high_point = informed_payoff(&setting, &d_hp);
    report.ybar_below_three_halves_plus_beta = ybar < 1.5 + beta;
    let delta1 = gain(&d_hp);
    report.delta1 = delta1;

    // y0* sits halfway between ½ and the first point where either the
    // interval gain reaches δ1 or the hollow payoff reaches u0.
    let top = 0.5 + beta;
    let interval_gap = |y: f64| gain(&DelegationSet::interval(beta, y)) - delta1;
    let hollow_gap = |y: f64| informed_payoff(&setting, &hollow_singleton_set(beta, y)) - u0;
    let crossing = |g: &dyn Fn(f64) -> f64| -> f64 {
        if g(0.5) >= 0.0 {
            return top;
        }
        let grid = linspace(0.5, top, 401);
        match grid.windows(2).find(|w| g(w[1]) >= 0.0) {
            Some(w) => bisect(g, w[0], w[1], 1e-13, 200).unwrap_or(w[1]),
            None => top,
        }
    };
    let limit = crossing(&interval_gap).min(crossing(&hollow_gap));
    let y0_star = 0.5 * (0.5 + limit);
    report.y0_star = y0_star;
    report.delta0 = gain(&DelegationSet::interval(beta, y0_star));
    report.u_p1_hollow_at_y0_star = informed_payoff(&setting, &hollow_singleton_set(beta, y0_star));
    report.hollow_below_u0 = report.u_p1_hollow_at_y0_star < u0;
    let delta0 = report.delta0;
    if !(delta1 > delta0) {
        report.violation = Some(format!(
            "Δ_A(D_ȳ) = {delta1} does not exceed Δ_A([β, y0*]) = {delta0}"
        ));
        return Ok(report);
    }

    let mut e = eps;
    for _ in 0..MAX_ATTEMPTS {
        let attempt = try_eps(&setting, &d_hp, delta0, delta1, e, grid_n)?;
        let done = attempt.ordering_holds && attempt.dominates;
        report.violation = attempt.violation.clone();
        report.attempts.push(attempt);
        if done {
            report.success = true;
            break;
        }
        e *= 0.5;
    }
    Ok(report)
}

fn try_eps(
    setting: &DecisionSetting,
    d_hp: &DelegationSet,
    delta0: f64,
    delta1: f64,
    eps: f64,
    grid_n: usize,
) -> Result<Attempt> {
    let x0 = 0.5 * (delta0 + delta1);
    let spread = 0.5 * (delta1 - delta0);
    let s = (x0 / 200.0).min(spread / (((1.0 - eps) / eps).ln() + 2.0));
    let cost = CostModel::near_step(eps, x0, Some(s))?;
    let chain = [
        ("δ0", delta0),
        ("c'(ε²)", cost.c_prime(eps * eps)),
        ("c'(ε - ε²)", cost.c_prime(eps - eps * eps)),
        ("δ1", delta1),
        ("1", 1.0),
        ("c'(ε)", cost.c_prime(eps)),
    ];
    let broken = chain.windows(2).find(|w| !(w[0].1 < w[1].1));
    let mut violation = broken.map(|w| format!("{} < {} fails at ε = {eps}", w[0].0, w[1].0));

    let high_point_value = evaluate(setting, &cost, d_hp).u_total;
    let best = |f: Family| {
        optimize_family(setting, &cost, f, grid_n)
            .map_or(f64::NEG_INFINITY, |b| b.evaluation.u_total)
    };
    let (best_interval, best_hollow, best_high_point) = (
        best(Family::Interval),
        best(Family::Hollow),
        best(Family::HighPoint),
    );
    let rival = best_interval.max(best_hollow);
    let dominates = high_point_value > rival;
    if violation.is_none() && !dominates {
        violation = Some(format!(
            "U_P(D_ȳ) = {high_point_value} does not beat {rival} at ε = {eps}"
        ));
    }
    Ok(Attempt {
        eps,
        x0,
        s,
        ordering_holds: broken.is_none(),
        high_point_value,
        best_high_point: best_high_point.max(high_point_value),
        best_interval,
        best_hollow,
        dominates,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_bias() {
        assert!(matches!(
            high_point_demo(0.2, 0.1),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            high_point_demo(0.3, 0.5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn hollow_singleton_payoff_closed_form() {
        // States below ½ choose from [β, ½], the rest take ½ + 2β: the
        // midpoint of ½ and ½ + 2β is ½ + β.
        for beta in [0.26, 0.3, 0.35, 0.45] {
            let s = DecisionSetting::uqc(beta).unwrap();
            let v = informed_payoff(&s, &hollow_singleton_set(beta, 0.5));
            let closed = -(2.5 * beta * beta - 2.0 / 3.0 * beta.powi(3) - 0.5 * beta + 1.0 / 24.0);
            assert!((v - closed).abs() < 1e-12, "{beta}: {v} vs {closed}");
        }
    }
}
