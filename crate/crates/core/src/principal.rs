//! The principal's side: payoffs with an uninformed and an informed agent,
//! the effort-weighted objective and the informed-agent benchmark.

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::agent::{respond, AgentResponse, ChoiceProfile, CostModel};
use crate::error::{Error, Result};
use crate::model::{conditional_mean_above, DecisionSetting, Normalization};
use crate::numeric::bisect;
use crate::sets::DelegationSet;

/// Tolerance of the benchmark cutoff search, in state units.
pub const BENCHMARK_TOL: f64 = 1e-12;

/// All payoff components of one `(setting, cost, D)` triple, in the
/// setting's reported units.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub u_p0: f64,
    pub u_p1: f64,
    pub delta_p: f64,
    pub agent: AgentResponse,
    /// `(1 - ê)·u_P0 + ê·u_P1`.
    pub u_total: f64,
}

impl Serialize for Evaluation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Evaluation", 9)?;
        st.serialize_field("u_P0", &self.u_p0)?;
        st.serialize_field("u_P1", &self.u_p1)?;
        st.serialize_field("delta_P", &self.delta_p)?;
        st.serialize_field("u_A0", &self.agent.uninformed_payoff)?;
        st.serialize_field("u_A1", &self.agent.informed_payoff)?;
        st.serialize_field("delta_A", &self.agent.info_gain)?;
        st.serialize_field("effort", &self.agent.effort)?;
        st.serialize_field("U_P", &self.u_total)?;
        st.serialize_field("uninformed_decision", &self.agent.uninformed_decision)?;
        st.end()
    }
}

pub fn evaluate(setting: &DecisionSetting, cost: &CostModel, d: &DelegationSet) -> Evaluation {
    let (agent, profile) = respond(setting, cost, d);
    let u_p0 = setting.report_principal(setting.ex_ante_principal(agent.uninformed_decision));
    let u_p1 = setting.report_principal(informed_principal_generic(setting, &profile));
    let e = agent.effort;
    Evaluation {
        u_p0,
        u_p1,
        delta_p: u_p1 - u_p0,
        u_total: (1.0 - e) * u_p0 + e * u_p1,
        agent,
    }
}

fn informed_principal_generic(setting: &DecisionSetting, profile: &ChoiceProfile) -> f64 {
    profile.integrate(setting, |y, t| setting.u_principal(y, t))
}

/// `u_{P,1}(D)` in reported units, without building the agent response.
pub fn informed_payoff(setting: &DecisionSetting, d: &DelegationSet) -> f64 {
    let profile = ChoiceProfile::new(setting, d);
    setting.report_principal(informed_principal_generic(setting, &profile))
}

/// `u_{P,1}(D) - u_{P,0}(D)`.
pub fn delta_p(setting: &DecisionSetting, cost: &CostModel, d: &DelegationSet) -> f64 {
    evaluate(setting, cost, d).delta_p
}

/// `u_{P,1}(D)` through the agent's informed payoff:
/// `u_A(D,θ̲)B(θ̲)f(θ̲) - u_A(D,θ̄)B(θ̄)f(θ̄) + ∫ u_A(D,θ)[f + (Bf)'] dθ`.
///
/// Only meaningful in generic units.
pub fn informed_payoff_envelope(setting: &DecisionSetting, d: &DelegationSet) -> Result<f64> {
    if setting.normalization() != Normalization::Generic {
        return Err(Error::Normalization);
    }
    let profile = ChoiceProfile::new(setting, d);
    let (lo, hi) = setting.support();
    let value = |t: f64, y: f64| setting.u_agent(y, t);
    let first = profile
        .segments
        .first()
        .expect("profile covers the support");
    let last = profile.segments.last().expect("profile covers the support");
    let at_lo = value(lo, ChoiceProfile::decision(setting, first.choice, lo));
    let at_hi = value(hi, ChoiceProfile::decision(setting, last.choice, hi));
    let bias = setting.bias();
    let dist = setting.dist();
    let boundary = at_lo * bias.scaled(lo) * dist.pdf(lo) - at_hi * bias.scaled(hi) * dist.pdf(hi);
    let quad = setting.quadrature();
    let interior: f64 = profile
        .segments
        .iter()
        .map(|seg| {
            let g = |t: f64| {
                value(t, ChoiceProfile::decision(setting, seg.choice, t))
                    * setting.virtual_weight(t)
            };
            if setting.is_polynomial() {
                quad.integrate_poly(g, seg.lo, seg.hi)
            } else {
                quad.integrate_piece(g, seg.lo, seg.hi, hi - lo)
            }
        })
        .sum();
    Ok(boundary + interior)
}

/// The informed-agent benchmark interval `[y_A(θ̲), y_A(θ̂)]`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Benchmark {
    pub theta_hat: f64,
    pub cap: f64,
    pub interval: DelegationSet,
    /// `u_{P,1}` of the benchmark interval.
    pub value: f64,
}

/// Solves `θ̂ + b(θ̂) = E[θ | θ >= θ̂]` by bisection on the sign change of
/// the residual.
pub fn informed_benchmark(setting: &DecisionSetting) -> Result<Benchmark> {
    let (lo, hi) = setting.support();
    let bias = setting.bias();
    let dist = setting.dist();
    let residual = |t: f64| -> f64 {
        if t >= hi {
            return bias.value(hi);
        }
        match conditional_mean_above(dist, t) {
            Ok(m) => bias.effective(t) - m,
            Err(_) => bias.value(t),
        }
    };
    let r_lo = residual(lo);
    let r_hi = residual(hi);
    if !(r_lo < 0.0 && r_hi > 0.0) {
        return Err(Error::Assumption(format!(
            "benchmark residual has no sign change on the support ({r_lo} at the bottom, {r_hi} at the top)"
        )));
    }
    let theta_hat = bisect(residual, lo, hi, BENCHMARK_TOL, 200)
        .ok_or_else(|| Error::Assumption("benchmark residual not bracketed".into()))?;
    let cap = setting.agent_favorite(theta_hat);
    let interval = DelegationSet::interval(setting.ya_lo(), cap);
    let value = informed_payoff(setting, &interval);
    Ok(Benchmark {
        theta_hat,
        cap,
        interval,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BiasFunction, PayoffKernel, StateDistribution};
    use crate::numeric::linspace;
    use crate::sets::make_set;

    fn set(raw: &[(f64, f64)]) -> DelegationSet {
        make_set(raw).unwrap()
    }

    /// Midpoint-rule state-grid oracle for all evaluation fields.
    fn grid_oracle(beta: f64, kappa: f64, d: &DelegationSet) -> [f64; 5] {
        let n = 10_000;
        let pts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let members = |m: usize| -> Vec<f64> {
            d.intervals()
                .iter()
                .flat_map(|[a, b]| linspace(*a, *b, if a == b { 1 } else { m }))
                .collect()
        };
        let loss = |y: f64, s: f64| -(y - s).powi(2);
        let (y0, u_a0) = members(2001)
            .into_iter()
            .fold((f64::NAN, f64::NEG_INFINITY), |acc, y| {
                let v = pts.iter().map(|t| loss(y, t + beta)).sum::<f64>() / n as f64;
                if v > acc.1 + 1e-12 {
                    (y, v)
                } else {
                    acc
                }
            });
        let u_p0 = pts.iter().map(|t| loss(y0, *t)).sum::<f64>() / n as f64;
        let fine = members(200_001);
        let (mut u_a1, mut u_p1) = (0.0, 0.0);
        for &t in &pts {
            let k = fine.partition_point(|&y| y < t + beta);
            let y = [k.saturating_sub(1), k.min(fine.len() - 1)]
                .into_iter()
                .map(|i| fine[i])
                .min_by(|a, b| (a - t - beta).abs().total_cmp(&(b - t - beta).abs()))
                .unwrap();
            u_a1 += loss(y, t + beta) / n as f64;
            u_p1 += loss(y, t) / n as f64;
        }
        let gain = u_a1 - u_a0;
        let e = 1.0 - (-gain / kappa).exp();
        [u_p0, u_p1, gain, e, (1.0 - e) * u_p0 + e * u_p1]
    }

    #[test]
    fn singleton_at_half_gives_minus_one_twelfth() {
        for beta in [0.1, 0.3, 0.45] {
            let s = DecisionSetting::uqc(beta).unwrap();
            let ev = evaluate(
                &s,
                &CostModel::szalay(0.05).unwrap(),
                &DelegationSet::singleton(0.5),
            );
            assert!((ev.u_total + 1.0 / 12.0).abs() < 1e-12);
            assert_eq!(ev.agent.effort, 0.0);
        }
    }

    #[test]
    fn benchmark_interval_informed_payoff() {
        let s = DecisionSetting::uqc(0.25).unwrap();
        let v = informed_payoff(&s, &set(&[(0.25, 0.75)]));
        assert!((v + 1.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_matches_state_grid_oracle() {
        let s = DecisionSetting::uqc(0.3).unwrap();
        let d = set(&[(0.3, 0.5), (1.1, 1.2)]);
        let ev = evaluate(&s, &CostModel::szalay(0.05).unwrap(), &d);
        let o = grid_oracle(0.3, 0.05, &d);
        let got = [
            ev.u_p0,
            ev.u_p1,
            ev.agent.info_gain,
            ev.agent.effort,
            ev.u_total,
        ];
        for (g, w) in got.iter().zip(o) {
            assert!((g - w).abs() < 1e-6, "{got:?} vs {o:?}");
        }
    }

    #[test]
    fn envelope_examples() {
        for beta in [0.1, 0.3] {
            let s = DecisionSetting::uqc_generic(beta).unwrap();
            let full = set(&[(beta, 1.0 + beta)]);
            let env = informed_payoff_envelope(&s, &full).unwrap();
            assert!((env - (1.0 / 6.0 - beta * beta / 2.0)).abs() < 1e-12);
            assert!((env - informed_payoff(&s, &full)).abs() < 1e-12);
        }
        let s = DecisionSetting::uqc_generic(0.3).unwrap();
        let d = set(&[(0.3, 0.5), (1.1, 1.2)]);
        let env = informed_payoff_envelope(&s, &d).unwrap();
        assert!((env - informed_payoff(&s, &d)).abs() < 1e-6);
        let zero = DecisionSetting::new(
            StateDistribution::power(2.0).unwrap(),
            PayoffKernel::quadratic(),
            BiasFunction::constant(0.0),
        )
        .unwrap();
        let d = set(&[(0.0, 0.4), (0.7, 0.9)]);
        let cost = CostModel::szalay(0.05).unwrap();
        let env = informed_payoff_envelope(&zero, &d).unwrap();
        let r = crate::agent::agent_response(&zero, &cost, &d);
        assert!((env - r.informed_payoff).abs() < 1e-10);
        assert!((env - informed_payoff(&zero, &d)).abs() < 1e-10);
    }

    #[test]
    fn envelope_rejects_loss_units() {
        let s = DecisionSetting::uqc(0.3).unwrap();
        assert_eq!(
            informed_payoff_envelope(&s, &DelegationSet::singleton(0.5)),
            Err(Error::Normalization)
        );
    }

    #[test]
    fn benchmark_examples() {
        let b = informed_benchmark(&DecisionSetting::uqc(0.2).unwrap()).unwrap();
        assert!((b.theta_hat - 0.6).abs() < 1e-10);
        assert!((b.cap - 0.8).abs() < 1e-10);
        assert!((b.interval.min() - 0.2).abs() < 1e-15);
        let b = informed_benchmark(&DecisionSetting::uqc(1e-6).unwrap()).unwrap();
        assert!((b.theta_hat - 1.0).abs() < 1e-5 && (b.cap - 1.0).abs() < 1e-5);

        let s = DecisionSetting::new(
            StateDistribution::power(2.0).unwrap(),
            PayoffKernel::quadratic_loss(),
            BiasFunction::constant(0.2),
        )
        .unwrap();
        let b = informed_benchmark(&s).unwrap();
        let resid = |t: f64| t + 0.2 - (2.0 / 3.0) * (1.0 - t.powi(3)) / (1.0 - t * t);
        // Dense scan oracle for the sign change.
        let grid = linspace(0.0, 0.999, 99_901);
        let k = grid
            .windows(2)
            .position(|w| resid(w[0]) < 0.0 && resid(w[1]) >= 0.0)
            .unwrap();
        assert!(b.theta_hat >= grid[k] - 1e-12 && b.theta_hat <= grid[k + 1] + 1e-12);
        assert!(resid(b.theta_hat).abs() < 1e-8);
    }

    #[test]
    fn benchmark_needs_sign_change() {
        assert!(matches!(
            informed_benchmark(&DecisionSetting::uqc(0.0).unwrap()),
            Err(Error::Assumption(_))
        ));
    }

    #[test]
    fn delta_p_examples() {
        let cost = CostModel::szalay(0.05).unwrap();
        let s = DecisionSetting::uqc(0.3).unwrap();
        assert!(delta_p(&s, &cost, &DelegationSet::singleton(0.7)).abs() < 1e-12);
        assert!((delta_p(&s, &cost, &set(&[(0.3, 1.3)])) - 1.0 / 12.0).abs() < 1e-12);
        let s = DecisionSetting::uqc(0.25).unwrap();
        let want = -1.0 / 24.0 + (0.0625 + 1.0 / 12.0);
        assert!((delta_p(&s, &cost, &set(&[(0.25, 0.75)])) - want).abs() < 1e-12);
    }

    #[test]
    fn evaluation_json_keys() {
        let s = DecisionSetting::uqc(0.3).unwrap();
        let ev = evaluate(
            &s,
            &CostModel::szalay(0.05).unwrap(),
            &DelegationSet::singleton(0.5),
        );
        let v: serde_json::Value = serde_json::to_value(&ev).unwrap();
        for k in [
            "u_P0",
            "u_P1",
            "delta_A",
            "effort",
            "U_P",
            "uninformed_decision",
        ] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
