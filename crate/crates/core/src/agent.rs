//! The agent's best response: choices with and without information, the
//! value of information and the effort it buys.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DecisionSetting, RealFn};
use crate::numeric::{bisect, Quadrature};
use crate::sets::{Candidates, DelegationSet};

/// Absolute tolerance (agent utility units) for treating two choices as tied.
pub const EPS_TIE: f64 = 1e-9;
/// Effort is searched on `[0, EFFORT_CAP]` when no closed form exists.
pub const EFFORT_CAP: f64 = 1.0 - 1e-12;

/// Serializable description of a built-in cost family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    /// `c(e) = κ[(1 - e) ln(1 - e) + e]`.
    Szalay { kappa: f64 },
    /// Logistic effort response saturating at `eps`.
    NearStep {
        eps: f64,
        x0: f64,
        #[serde(default)]
        s: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CostKind {
    SzalayExponential { kappa: f64 },
    NearStepLogistic { eps: f64, x0: f64, s: f64 },
    Custom,
}

/// Effort cost `c` and the induced effort function `ê = (c')⁻¹`.
#[derive(Clone)]
pub struct CostModel {
    kind: CostKind,
    c: RealFn,
    c_prime: RealFn,
    c_second: RealFn,
    effort: RealFn,
    effort_prime: RealFn,
    effort_second: Option<RealFn>,
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CostModel({:?})", self.kind)
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl CostModel {
    pub fn szalay(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Config(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        Ok(Self {
            kind: CostKind::SzalayExponential { kappa },
            c: Arc::new(move |e: f64| {
                if e >= 1.0 {
                    kappa
                } else {
                    kappa * ((1.0 - e) * (1.0 - e).ln() + e)
                }
            }),
            c_prime: Arc::new(move |e: f64| -kappa * (1.0 - e).ln()),
            c_second: Arc::new(move |e: f64| kappa / (1.0 - e)),
            effort: Arc::new(move |x: f64| -(-x / kappa).exp_m1()),
            effort_prime: Arc::new(move |x: f64| (-x / kappa).exp() / kappa),
            effort_second: Some(Arc::new(move |x: f64| {
                -(-x / kappa).exp() / (kappa * kappa)
            })),
        })
    }

    /// Effort `ê(x) = ε·(σ(z) - σ(z₀)) / (1 - σ(z₀))` with `z = (x - x0)/s`
    /// and `z₀ = -x0/s`, so that `ê(0) = 0` and `ê → ε`. The marginal cost
    /// is infinite at and above `ε`.
    pub fn near_step(eps: f64, x0: f64, s: Option<f64>) -> Result<Self> {
        let s = s.unwrap_or(x0 / 200.0);
        if !(eps > 0.0 && eps < 1.0) || !(x0 > 0.0) || !(s > 0.0) {
            return Err(Error::Config(format!(
                "near-step cost needs 0 < eps < 1, x0 > 0, s > 0 (got {eps}, {x0}, {s})"
            )));
        }
        let sig0 = logistic(-x0 / s);
        let scale = eps / (1.0 - sig0);
        let inverse = move |e: f64| -> f64 {
            if e <= 0.0 {
                return 0.0;
            }
            if e >= eps {
                return f64::INFINITY;
            }
            let p = sig0 + e / scale;
            x0 + s * (p / (1.0 - p)).ln()
        };
        let slope = move |x: f64| {
            let g = logistic((x - x0) / s);
            scale * g * (1.0 - g) / s
        };
        let curvature = move |x: f64| {
            let g = logistic((x - x0) / s);
            scale * g * (1.0 - g) * (1.0 - 2.0 * g) / (s * s)
        };
        let q = Quadrature::new(64, 8);
        Ok(Self {
            kind: CostKind::NearStepLogistic { eps, x0, s },
            c: Arc::new(move |e: f64| {
                if e >= eps {
                    f64::INFINITY
                } else {
                    q.integrate(inverse, 0.0, e.max(0.0))
                }
            }),
            c_prime: Arc::new(inverse),
            c_second: Arc::new(move |e: f64| {
                if e >= eps {
                    f64::INFINITY
                } else {
                    1.0 / slope(inverse(e))
                }
            }),
            effort: Arc::new(move |x: f64| {
                if x <= 0.0 {
                    0.0
                } else {
                    (scale * (logistic((x - x0) / s) - sig0)).min(eps)
                }
            }),
            effort_prime: Arc::new(slope),
            effort_second: Some(Arc::new(curvature)),
        })
    }

    /// A user-supplied cost; effort is found by bisection on `c'`.
    pub fn custom(
        c: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let c_prime: RealFn = Arc::new(c_prime);
        let c_second: RealFn = Arc::new(c_second);
        let cp = c_prime.clone();
        let effort: RealFn = Arc::new(move |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            if cp(EFFORT_CAP) <= x {
                return EFFORT_CAP;
            }
            bisect(|e| cp(e) - x, 0.0, EFFORT_CAP, 1e-15, 200).unwrap_or(0.0)
        });
        let (e, cs) = (effort.clone(), c_second.clone());
        let model = Self {
            kind: CostKind::Custom,
            c: Arc::new(c),
            c_prime,
            c_second,
            effort,
            effort_prime: Arc::new(move |x: f64| 1.0 / cs(e(x))),
            effort_second: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_spec(spec: &CostSpec) -> Result<Self> {
        match *spec {
            CostSpec::Szalay { kappa } => Self::szalay(kappa),
            CostSpec::NearStep { eps, x0, s } => Self::near_step(eps, x0, s),
        }
    }

    /// Grid checks of `c(0) = c'(0) = 0`, convexity and the steep upper end.
    pub fn validate(&self) -> Result<()> {
        if self.c(0.0).abs() > 1e-12 || self.c_prime(0.0).abs() > 1e-12 {
            return Err(Error::Config("cost must satisfy c(0) = c'(0) = 0".into()));
        }
        for i in 1..1000 {
            let e = i as f64 / 1000.0;
            if !(self.c_second(e) > 0.0) {
                return Err(Error::Config(format!("c''({e}) is not positive")));
            }
        }
        if self.c_prime(1.0 - 1e-6) < 10.0 * self.c_prime(0.5).max(1e-12) {
            return Err(Error::Config(
                "c'(e) must grow without bound as e -> 1".into(),
            ));
        }
        Ok(())
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn c(&self, e: f64) -> f64 {
        (self.c)(e)
    }

    pub fn c_prime(&self, e: f64) -> f64 {
        (self.c_prime)(e)
    }

    pub fn c_second(&self, e: f64) -> f64 {
        (self.c_second)(e)
    }

    pub fn effort(&self, x: f64) -> f64 {
        (self.effort)(x)
    }

    pub fn effort_prime(&self, x: f64) -> f64 {
        (self.effort_prime)(x)
    }

    pub fn effort_second(&self, x: f64) -> Option<f64> {
        self.effort_second.as_ref().map(|g| g(x))
    }
}

/// `ê(x) = (c')⁻¹(x)`; non-positive returns buy no effort.
pub fn effort_of_gain(cost: &CostModel, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        cost.effort(x)
    }
}

/// Arrow–Pratt coefficient `-ê''(x)/ê'(x)` of the effort function.
pub fn arrow_pratt(cost: &CostModel, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("arrow_pratt needs x > 0, got {x}")));
    }
    if let CostKind::SzalayExponential { kappa } = cost.kind {
        return Ok(1.0 / kappa);
    }
    let slope = cost.effort_prime(x);
    if !(slope.abs() >= 1e-14) {
        return Err(Error::DegenerateSlope(x));
    }
    let curv = match cost.effort_second(x) {
        Some(c) => c,
        None => {
            let h = 1e-6 * x.max(1.0);
            let lo = (x - h).max(0.0);
            (cost.effort_prime(x + h) - cost.effort_prime(lo)) / (x + h - lo)
        }
    };
    Ok(-curv / slope)
}

/// What an informed agent picks on a stretch of states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Choice {
    /// The same decision throughout.
    Fixed(f64),
    /// The agent's unconstrained favorite `y_A(θ)`.
    Ideal,
}

/// One stretch `[lo, hi]` of states with a common choice rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub choice: Choice,
}

/// Indifference point of an informed agent between the two ends of a gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub state: f64,
    pub left: f64,
    pub right: f64,
}

/// The informed agent's choice as a function of the state, as a sequence
/// of segments covering the support.
#[derive(Debug, Clone)]
pub struct ChoiceProfile {
    pub segments: Vec<Segment>,
    pub thresholds: Vec<Threshold>,
}

impl ChoiceProfile {
    pub fn new(setting: &DecisionSetting, d: &DelegationSet) -> Self {
        let kernel = setting.kernel();
        let (lo, hi) = setting.support();
        let level_of = |y: f64| kernel.level_of(y);
        // Breakpoints in effective-state space, each opening a piece.
        let iv = d.intervals();
        let mut pieces: Vec<(f64, Choice)> = vec![(f64::NEG_INFINITY, Choice::Fixed(iv[0][0]))];
        let mut thresholds = Vec::new();
        for (i, &[a, b]) in iv.iter().enumerate() {
            if b > a {
                pieces.push((level_of(a), Choice::Ideal));
            }
            pieces.push((level_of(b), Choice::Fixed(b)));
            if let Some(&[next, _]) = iv.get(i + 1) {
                let cut = (kernel.a(b) - kernel.a(next)) / (next - b);
                pieces.push((cut, Choice::Fixed(next)));
                let state = setting.state_for_level(cut);
                if state > lo && state < hi {
                    thresholds.push(Threshold {
                        state,
                        left: b,
                        right: next,
                    });
                }
            }
        }
        let mut segments: Vec<Segment> = Vec::new();
        for (k, &(start, choice)) in pieces.iter().enumerate() {
            let end = pieces.get(k + 1).map_or(f64::INFINITY, |p| p.0);
            let t0 = if start == f64::NEG_INFINITY {
                lo
            } else {
                setting.state_for_level(start)
            };
            let t1 = if end == f64::INFINITY {
                hi
            } else {
                setting.state_for_level(end)
            };
            if t1 <= t0 {
                continue;
            }
            match segments.last_mut() {
                Some(last) if last.choice == choice && last.hi >= t0 => last.hi = t1,
                _ => segments.push(Segment {
                    lo: t0,
                    hi: t1,
                    choice,
                }),
            }
        }
        if segments.is_empty() {
            // Zero-width support pieces only arise for a point support.
            segments.push(Segment {
                lo,
                hi,
                choice: Choice::Fixed(informed_choice(setting, d, lo)),
            });
        }
        Self {
            segments,
            thresholds,
        }
    }

    /// Decision implied by a segment's rule in state `t`.
    pub fn decision(setting: &DecisionSetting, choice: Choice, t: f64) -> f64 {
        match choice {
            Choice::Fixed(y) => y,
            Choice::Ideal => setting.agent_favorite(t),
        }
    }

    /// `∫ g(y(θ), θ) f(θ) dθ` over the profile.
    pub fn integrate(&self, setting: &DecisionSetting, g: impl Fn(f64, f64) -> f64) -> f64 {
        self.segments
            .iter()
            .map(|seg| {
                setting.integrate_piece(
                    |t| g(Self::decision(setting, seg.choice, t), t),
                    seg.lo,
                    seg.hi,
                )
            })
            .sum()
    }
}

/// Among the maximizers in `cands` of `agent_value`, the one with the
/// highest `principal_value`, then the lowest.
fn pick(
    cands: Candidates,
    agent_value: impl Fn(f64) -> f64,
    principal_value: impl Fn(f64) -> f64,
) -> f64 {
    match cands {
        Candidates::One(y) => y,
        Candidates::Two(a, b) => {
            let (ua, ub) = (agent_value(a), agent_value(b));
            if (ua - ub).abs() <= EPS_TIE {
                if principal_value(b) > principal_value(a) + EPS_TIE {
                    b
                } else {
                    a
                }
            } else if ua > ub {
                a
            } else {
                b
            }
        }
    }
}

/// `y_A(D, θ)`: the informed agent's choice, ties to the principal.
pub fn informed_choice(setting: &DecisionSetting, d: &DelegationSet, theta: f64) -> f64 {
    let peak = setting.agent_favorite(theta);
    pick(
        d.candidates(peak),
        |y| setting.u_agent(y, theta),
        |y| setting.u_principal(y, theta),
    )
}

/// `y_{A,0}(D)` and `u_{A,0}(D)` in reported units.
pub fn uninformed_choice(setting: &DecisionSetting, d: &DelegationSet) -> (f64, f64) {
    let y = uninformed_decision(setting, d);
    (y, setting.report_agent(setting.ex_ante_agent(y)))
}

pub(crate) fn uninformed_decision(setting: &DecisionSetting, d: &DelegationSet) -> f64 {
    pick(
        d.candidates(setting.y_a0()),
        |y| setting.ex_ante_agent(y),
        |y| setting.ex_ante_principal(y),
    )
}

/// The agent's sequential best response to `D`.
#[derive(Debug, Clone, Serialize)]
pub struct AgentResponse {
    pub uninformed_decision: f64,
    pub uninformed_payoff: f64,
    pub informed_payoff: f64,
    pub info_gain: f64,
    pub effort: f64,
    pub thresholds: Vec<Threshold>,
}

/// Best response together with the choice profile it was built from.
pub(crate) fn respond(
    setting: &DecisionSetting,
    cost: &CostModel,
    d: &DelegationSet,
) -> (AgentResponse, ChoiceProfile) {
    let profile = ChoiceProfile::new(setting, d);
    let y0 = uninformed_decision(setting, d);
    let u0 = setting.ex_ante_agent(y0);
    let u1 = if d.is_singleton() {
        u0
    } else {
        profile.integrate(setting, |y, t| setting.u_agent(y, t))
    };
    // Learning never hurts; this only removes rounding noise when every
    // state picks the uninformed decision.
    let gain = setting.report_difference(u1 - u0).max(0.0);
    let response = AgentResponse {
        uninformed_decision: y0,
        uninformed_payoff: setting.report_agent(u0),
        informed_payoff: setting.report_agent(u1),
        info_gain: gain,
        effort: effort_of_gain(cost, gain),
        thresholds: profile.thresholds.clone(),
    };
    (response, profile)
}

pub fn agent_response(
    setting: &DecisionSetting,
    cost: &CostModel,
    d: &DelegationSet,
) -> AgentResponse {
    respond(setting, cost, d).0
}

/// `Δ_A(D)` in reported units; needs no cost.
pub fn info_gain(setting: &DecisionSetting, d: &DelegationSet) -> f64 {
    if d.is_singleton() {
        return 0.0;
    }
    let profile = ChoiceProfile::new(setting, d);
    let u0 = setting.ex_ante_agent(uninformed_decision(setting, d));
    let u1 = profile.integrate(setting, |y, t| setting.u_agent(y, t));
    setting.report_difference(u1 - u0).max(0.0)
}
