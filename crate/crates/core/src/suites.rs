//! Named property suites. Each returns one [`Check`] per property and
//! setting, so the command line and the tests share the same sweeps.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{
    agent_response, effort_of_gain, info_gain, informed_choice, CostKind, CostModel, EFFORT_CAP,
};
use crate::bias::{szalay_condition, theorem3_bound_check};
use crate::error::{Error, Result};
use crate::model::{
    check_assumptions, BiasFunction, DecisionSetting, PayoffKernel, StateDistribution,
};
use crate::numeric::linspace;
use crate::optimizer::{regime_map, solve, FormLabel, RegimeRow, DEFAULT_GRID};
use crate::oracle::{default_grid, enumerate_best, verify_characterization};
use crate::principal::{evaluate, informed_benchmark, informed_payoff, informed_payoff_envelope};
use crate::sets::{ex_ante_conjugate, gaps, make_set, minimalize, theta_conjugate, DelegationSet};

/// Outcome of one property.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(
        suite: &'static str,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            suite,
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {}", self.suite, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Model,
    Sets,
    Agent,
    Principal,
    Optimizer,
    Bias,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Model,
        Suite::Sets,
        Suite::Agent,
        Suite::Principal,
        Suite::Optimizer,
        Suite::Bias,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Model => "model",
            Suite::Sets => "sets",
            Suite::Agent => "agent",
            Suite::Principal => "principal",
            Suite::Optimizer => "optimizer",
            Suite::Bias => "bias",
            Suite::Oracle => "oracle",
        }
    }

    pub fn run(self) -> Result<Vec<Check>> {
        match self {
            Suite::Model => model_suite(),
            Suite::Sets => sets_suite(),
            Suite::Agent => agent_suite(),
            Suite::Principal => principal_suite(),
            Suite::Optimizer => optimizer_suite(),
            Suite::Bias => bias_suite(),
            Suite::Oracle => oracle_suite(),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

/// Suites named by `spec`: one name or `all`.
pub fn select(spec: &str) -> Result<Vec<Suite>> {
    if spec == "all" {
        Ok(Suite::ALL.to_vec())
    } else {
        Ok(vec![spec.parse()?])
    }
}

/// Biases used by the sweeps.
pub const SWEEP_BETAS: [f64; 3] = [0.1, 0.3, 0.45];
/// Points per parameter sweep.
pub const SWEEP_POINTS: usize = 50;
const SEED: u64 = 20_240_601;

fn uqc(beta: f64) -> DecisionSetting {
    DecisionSetting::uqc(beta).expect("valid bias")
}

fn quartic(beta: f64) -> DecisionSetting {
    DecisionSetting::new(
        StateDistribution::uniform(0.0, 1.0).expect("valid"),
        PayoffKernel::power(4.0).expect("valid"),
        BiasFunction::constant(beta),
    )
    .expect("valid setting")
}

fn skewed(beta: f64) -> DecisionSetting {
    DecisionSetting::new(
        StateDistribution::power(2.0).expect("valid"),
        PayoffKernel::quadratic_loss(),
        BiasFunction::affine(beta, 0.2),
    )
    .expect("valid setting")
}

/// `n` points strictly inside `(a, b)`.
fn interior(a: f64, b: f64, n: usize) -> Vec<f64> {
    let g = linspace(a, b, n + 2);
    g[1..=n].to_vec()
}

fn increasing(v: &[f64]) -> Option<usize> {
    v.windows(2).position(|w| !(w[1] > w[0]))
}

fn decreasing(v: &[f64]) -> Option<usize> {
    v.windows(2).position(|w| !(w[1] < w[0]))
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

/// Increasing up to the maximum, decreasing after it, up to `tol`.
fn single_peaked(v: &[f64], tol: f64) -> bool {
    let k = argmax(v);
    v[..=k].windows(2).all(|w| w[1] >= w[0] - tol) && v[k..].windows(2).all(|w| w[1] <= w[0] + tol)
}

fn random_set(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> DelegationSet {
    let k = rng.gen_range(1..=3);
    let mut pts: Vec<f64> = (0..2 * k).map(|_| rng.gen_range(lo..hi)).collect();
    pts.sort_by(f64::total_cmp);
    let raw: Vec<(f64, f64)> = pts
        .chunks(2)
        .map(|c| {
            if rng.gen_bool(0.25) {
                (c[0], c[0])
            } else {
                (c[0], c[1])
            }
        })
        .collect();
    make_set(&raw).expect("sorted endpoints")
}

fn random_sets(setting: &DecisionSetting, count: usize, seed: u64) -> Vec<DelegationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (setting.ya_lo(), setting.ya_hi());
    let span = b - a;
    (0..count)
        .map(|_| random_set(&mut rng, a - 0.25 * span, b + 0.5 * span))
        .collect()
}

fn describe(fail: Option<usize>, xs: &[f64]) -> String {
    match fail {
        None => format!("{} points", xs.len()),
        Some(i) => format!("fails between {} and {}", xs[i], xs[i + 1]),
    }
}

pub fn model_suite() -> Result<Vec<Check>> {
    const S: &str = "model";
    let mut out = Vec::new();
    let settings = [
        ("uqc 0.1", uqc(0.1)),
        ("uqc 0.3", uqc(0.3)),
        ("quartic", quartic(0.1)),
        ("skewed", skewed(0.1)),
    ];
    for (label, s) in &settings {
        let (lo, hi) = s.support();
        let grid = linspace(lo, hi, 2001);
        let ya: Vec<f64> = grid.iter().map(|&t| s.agent_favorite(t)).collect();
        out.push(Check::new(
            S,
            format!("{label}: y_A strictly increasing"),
            increasing(&ya).is_none(),
            describe(increasing(&ya), &grid),
        ));
        let sign_ok = grid.iter().all(|&t| {
            let d = s.agent_favorite(t) - s.principal_favorite(t);
            let b = s.bias().value(t);
            (d > 0.0) == (b > 0.0) && (d < 0.0) == (b < 0.0)
        });
        out.push(Check::new(
            S,
            format!("{label}: sign of y_A - y_P follows b"),
            sign_ok,
            "",
        ));
        let one = s.expectation(|_| 1.0)?;
        out.push(Check::new(
            S,
            format!("{label}: E[1] = 1"),
            (one - 1.0).abs() <= 1e-10,
            format!("{one}"),
        ));
    }
    // f = 1 + c(1 - 2θ): the log slope is smallest at θ = 1, -2c/(1 - c).
    for c in [0.2, 0.5] {
        let dist = StateDistribution::custom(
            0.0,
            1.0,
            move |t| t + c * t * (1.0 - t),
            move |t| 1.0 + c * (1.0 - 2.0 * t),
            Some(std::sync::Arc::new(move |_| -2.0 * c)),
        )?;
        for beta in [0.2, 0.45, 0.7] {
            let s = DecisionSetting::new(
                dist.clone(),
                PayoffKernel::quadratic_loss(),
                BiasFunction::constant(beta),
            )?;
            let report = check_assumptions(&s, 2001)?;
            let a1 = report.check("A1").map(|x| x.passed).unwrap_or(false);
            let expected = -2.0 * c / (1.0 - c) > -1.0 / beta;
            out.push(Check::new(
                S,
                format!("A1 matches log-slope bound (c={c}, beta={beta})"),
                a1 == expected,
                format!("A1 {a1}, bound {expected}"),
            ));
        }
    }
    Ok(out)
}

pub fn sets_suite() -> Result<Vec<Check>> {
    const S: &str = "sets";
    let mut out = Vec::new();
    for (label, s) in [
        ("uqc 0.3", uqc(0.3)),
        ("quartic", quartic(0.1)),
        ("skewed", skewed(0.1)),
    ] {
        let (lo, hi) = s.support();
        let ys = interior(s.ya_lo() - 0.2, s.ya_hi() + 0.2, 41);
        let mut worst: f64 = 0.0;
        for t in [lo, 0.5 * (lo + hi), hi] {
            for &y in &ys {
                if let Ok(z) = theta_conjugate(&s, t, y) {
                    if let Ok(back) = theta_conjugate(&s, t, z) {
                        worst = worst.max((back - y).abs());
                    }
                }
            }
        }
        out.push(Check::new(
            S,
            format!("{label}: state conjugate is an involution"),
            worst <= 1e-8,
            format!("max error {worst:e}"),
        ));
        let (mut inv, mut pay): (f64, f64) = (0.0, 0.0);
        for &y in &ys {
            let z = ex_ante_conjugate(&s, y)?;
            inv = inv.max((ex_ante_conjugate(&s, z)? - y).abs());
            pay = pay.max((s.report_difference(s.ex_ante_agent(y) - s.ex_ante_agent(z))).abs());
        }
        out.push(Check::new(
            S,
            format!("{label}: ex ante conjugate is an involution"),
            inv <= 1e-8,
            format!("max error {inv:e}"),
        ));
        out.push(Check::new(
            S,
            format!("{label}: conjugates give equal expected utility"),
            pay <= 1e-8,
            format!("max gap {pay:e}"),
        ));
        if s.kernel().is_quadratic() {
            let refl = ys
                .iter()
                .map(|&y| {
                    (ex_ante_conjugate(&s, y).unwrap_or(f64::NAN) - (2.0 * s.y_a0() - y)).abs()
                })
                .fold(0.0, f64::max);
            out.push(Check::new(
                S,
                format!("{label}: quadratic conjugate is a reflection"),
                refl <= 1e-12,
                format!("max error {refl:e}"),
            ));
        }
        let cost = CostModel::szalay(0.05)?;
        let mut idem = true;
        let mut agree: f64 = 0.0;
        for d in random_sets(&s, 60, SEED) {
            let m = minimalize(&s, &d);
            idem &= minimalize(&s, &m) == m;
            let (a, b) = (evaluate(&s, &cost, &d), evaluate(&s, &cost, &m));
            for (x, y) in [
                (a.agent.uninformed_payoff, b.agent.uninformed_payoff),
                (a.agent.informed_payoff, b.agent.informed_payoff),
                (a.agent.info_gain, b.agent.info_gain),
                (a.u_total, b.u_total),
            ] {
                agree = agree.max((x - y).abs());
            }
        }
        out.push(Check::new(
            S,
            format!("{label}: minimalize is idempotent"),
            idem,
            "60 random sets",
        ));
        out.push(Check::new(
            S,
            format!("{label}: minimalize keeps payoffs"),
            agree <= 1e-8,
            format!("max difference {agree:e}"),
        ));
    }
    Ok(out)
}

/// Agent-side comparative statics on the three families, for one bias.
pub fn agent_statics(beta: f64, n: usize) -> Result<Vec<Check>> {
    const S: &str = "agent";
    let s = uqc(beta);
    let mut out = Vec::new();
    let (lo, ya0, hi) = (s.ya_lo(), s.y_a0(), s.ya_hi());
    let gain = |d: &DelegationSet| info_gain(&s, d);

    let ys = interior(lo, hi, n);
    let v: Vec<f64> = ys
        .iter()
        .map(|&y| gain(&DelegationSet::interval(lo, y)))
        .collect();
    out.push(Check::new(
        S,
        format!("beta={beta}: interval gain increasing in the cap"),
        increasing(&v).is_none(),
        describe(increasing(&v), &ys),
    ));

    let rmax = (ya0 - lo).min(hi - ya0);
    let rs = interior(0.0, rmax, n);
    let hollow = |r: f64, y2: f64| make_set(&[(lo, ya0 - r), (ya0 + r, y2)]);
    let v: Vec<f64> = rs
        .iter()
        .map(|&r| hollow(r, hi).map(|d| gain(&d)))
        .collect::<Result<_>>()?;
    out.push(Check::new(
        S,
        format!("beta={beta}: hollow gain increasing in the gap"),
        increasing(&v).is_none(),
        describe(increasing(&v), &rs),
    ));
    let r = 0.5 * rmax;
    let y2s = interior(ya0 + r, hi, n);
    let v: Vec<f64> = y2s
        .iter()
        .map(|&y2| hollow(r, y2).map(|d| gain(&d)))
        .collect::<Result<_>>()?;
    out.push(Check::new(
        S,
        format!("beta={beta}: hollow gain increasing in the top"),
        increasing(&v).is_none(),
        describe(increasing(&v), &y2s),
    ));

    let (top_state, _) = (s.support().1, ());
    let y0 = 0.5 * (lo + ya0);
    let ybars = interior(
        hi.max(ex_ante_conjugate(&s, y0)?),
        theta_conjugate(&s, top_state, y0)?,
        n,
    );
    let high = |y0: f64, ybar: f64| make_set(&[(lo.min(y0), y0), (ybar, ybar)]);
    let v: Vec<f64> = ybars
        .iter()
        .map(|&yb| high(y0, yb).map(|d| gain(&d)))
        .collect::<Result<_>>()?;
    out.push(Check::new(
        S,
        format!("beta={beta}: high-point gain decreasing in the point"),
        decreasing(&v).is_none(),
        describe(decreasing(&v), &ybars),
    ));
    let (ybar, y0s) = high_point_y0_sweep(&s, n)?;
    let v: Vec<f64> = y0s
        .iter()
        .map(|&y| high(y, ybar).map(|d| gain(&d)))
        .collect::<Result<_>>()?;
    let worst = v
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    out.push(Check::new(
        S,
        format!("beta={beta}: high-point gain convex in the interval cap"),
        worst >= -1e-12,
        format!("min second difference {worst:e}"),
    ));
    Ok(out)
}

/// A fixed high point above `y_A(θ̄)` and the caps `y0` for which it stays
/// a high point.
fn high_point_y0_sweep(s: &DecisionSetting, n: usize) -> Result<(f64, Vec<f64>)> {
    let (lo, ya0, hi) = (s.ya_lo(), s.y_a0(), s.ya_hi());
    let ybar = hi + 0.25 * (hi - lo);
    let a = lo.max(ex_ante_conjugate(s, ybar)?);
    let b = ya0.min(theta_conjugate(s, s.support().1, ybar)?);
    Ok((ybar, interior(a, b, n)))
}

pub fn agent_suite() -> Result<Vec<Check>> {
    const S: &str = "agent";
    let mut out = Vec::new();
    for (label, s) in [
        ("uqc 0.1", uqc(0.1)),
        ("uqc 0.3", uqc(0.3)),
        ("uqc 0.45", uqc(0.45)),
        ("quartic", quartic(0.1)),
        ("skewed", skewed(0.1)),
    ] {
        let cost = CostModel::szalay(0.05)?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let (a, b) = (s.ya_lo(), s.ya_hi());
        let span = b - a;
        let (mut mono, mut nonneg, mut choice_mono) = (true, true, true);
        let states = linspace(s.support().0, s.support().1, 201);
        for _ in 0..60 {
            let d1 = random_set(&mut rng, a - 0.25 * span, b + 0.5 * span);
            let extra = random_set(&mut rng, a - 0.25 * span, b + 0.5 * span);
            let mut raw: Vec<(f64, f64)> = d1
                .intervals()
                .iter()
                .chain(extra.intervals())
                .map(|[x, y]| (*x, *y))
                .collect();
            raw.sort_by(|p, q| p.0.total_cmp(&q.0));
            let d2 = make_set(&raw)?;
            let (r1, r2) = (
                agent_response(&s, &cost, &d1),
                agent_response(&s, &cost, &d2),
            );
            mono &= r1.uninformed_payoff <= r2.uninformed_payoff + 1e-10
                && r1.informed_payoff <= r2.informed_payoff + 1e-10;
            nonneg &= r1.info_gain >= 0.0 && r2.info_gain >= 0.0;
            let picks: Vec<f64> = states
                .iter()
                .map(|&t| informed_choice(&s, &d1, t))
                .collect();
            choice_mono &= picks.windows(2).all(|w| w[1] >= w[0]);
        }
        out.push(Check::new(
            S,
            format!("{label}: payoffs monotone in inclusion"),
            mono,
            "60 random pairs",
        ));
        out.push(Check::new(
            S,
            format!("{label}: information gain nonnegative"),
            nonneg,
            "120 random sets",
        ));
        out.push(Check::new(
            S,
            format!("{label}: informed choice nondecreasing"),
            choice_mono,
            "60 random sets",
        ));
    }
    for (label, cost) in [
        ("szalay 0.02", CostModel::szalay(0.02)?),
        ("szalay 0.1", CostModel::szalay(0.1)?),
        ("near-step", CostModel::near_step(0.2, 0.01, None)?),
    ] {
        let near_step = matches!(cost.kind(), CostKind::NearStepLogistic { .. });
        let xs: Vec<f64> = (0..=200)
            .map(|i| 10f64.powf(-5.0 + 5.0 * i as f64 / 200.0))
            .collect();
        let e: Vec<f64> = xs.iter().map(|&x| effort_of_gain(&cost, x)).collect();
        // Strict until the effort saturates in floating point.
        let inc = e
            .windows(2)
            .all(|w| w[1] > w[0] || w[0] >= EFFORT_CAP || (w[1] == w[0] && near_step));
        let cap = match cost.kind() {
            CostKind::NearStepLogistic { eps, .. } => eps,
            _ => 1.0,
        };
        let inv = interior(0.0, cap, 99)
            .iter()
            .map(|&e| (effort_of_gain(&cost, cost.c_prime(e)) - e).abs())
            .fold(0.0, f64::max);
        out.push(Check::new(
            S,
            format!("{label}: effort increasing in the gain"),
            inc,
            "",
        ));
        out.push(Check::new(
            S,
            format!("{label}: effort inverts marginal cost"),
            inv <= 1e-9,
            format!("max error {inv:e}"),
        ));
    }
    for beta in SWEEP_BETAS {
        out.extend(agent_statics(beta, SWEEP_POINTS)?);
    }
    Ok(out)
}

/// Principal-side comparative statics on the three families, for one bias.
pub fn principal_statics(beta: f64, n: usize) -> Result<Vec<Check>> {
    const S: &str = "principal";
    let s = uqc(beta);
    let mut out = Vec::new();
    let (lo, ya0, hi) = (s.ya_lo(), s.y_a0(), s.ya_hi());
    let bench = informed_benchmark(&s)?;
    let u = |d: &DelegationSet| informed_payoff(&s, d);

    let rmax = (ya0 - lo).min(hi - ya0);
    let rs = interior(0.0, rmax, n);
    let hollow = |r: f64, y2: f64| make_set(&[(lo, ya0 - r), (ya0 + r, y2)]);
    let v: Vec<f64> = rs
        .iter()
        .map(|&r| hollow(r, hi).map(|d| u(&d)))
        .collect::<Result<_>>()?;
    out.push(Check::new(
        S,
        format!("beta={beta}: hollow payoff decreasing in the gap"),
        decreasing(&v).is_none(),
        describe(decreasing(&v), &rs),
    ));

    let r = 0.5 * rmax;
    let y2s = linspace(ya0 + r, hi, n);
    let v: Vec<f64> = y2s
        .iter()
        .map(|&y2| hollow(r, y2).map(|d| u(&d)))
        .collect::<Result<_>>()?;
    let step = y2s[1] - y2s[0];
    let target = bench.cap.clamp(ya0 + r, hi);
    let k = argmax(&v);
    let ok = single_peaked(&v, 1e-12) && (y2s[k] - target).abs() <= step;
    out.push(Check::new(
        S,
        format!("beta={beta}: hollow payoff peaks at the benchmark cap"),
        ok,
        format!("argmax {}, cap {target}", y2s[k]),
    ));

    let ys = linspace(lo, hi, n);
    let v: Vec<f64> = ys
        .iter()
        .map(|&y| u(&DelegationSet::interval(lo, y)))
        .collect();
    let step = ys[1] - ys[0];
    let k = argmax(&v);
    let ok = single_peaked(&v, 1e-12) && (ys[k] - bench.cap).abs() <= step;
    out.push(Check::new(
        S,
        format!("beta={beta}: interval payoff peaks at the benchmark cap"),
        ok,
        format!("argmax {}, cap {}", ys[k], bench.cap),
    ));

    let high = |y0: f64, ybar: f64| make_set(&[(lo.min(y0), y0), (ybar, ybar)]);
    let (ybar, y0s) = high_point_y0_sweep(&s, n)?;
    let v: Vec<f64> = y0s
        .iter()
        .map(|&y| high(y, ybar).map(|d| u(&d)))
        .collect::<Result<_>>()?;
    out.push(Check::new(
        S,
        format!("beta={beta}: high-point payoff increasing in the interval cap"),
        increasing(&v).is_none(),
        describe(increasing(&v), &y0s),
    ));
    let y0 = 0.5 * (lo + ya0);
    let ybars = interior(
        hi.max(ex_ante_conjugate(&s, y0)?),
        theta_conjugate(&s, s.support().1, y0)?,
        n,
    );
    let v: Vec<f64> = ybars
        .iter()
        .map(|&yb| high(y0, yb).map(|d| u(&d)))
        .collect::<Result<_>>()?;
    let interior_max = (1..v.len() - 1).find(|&i| v[i] >= v[i - 1] && v[i] >= v[i + 1]);
    out.push(Check::new(
        S,
        format!("beta={beta}: high-point payoff quasiconvex in the point"),
        interior_max.is_none(),
        interior_max.map_or(String::new(), |i| format!("local max at {}", ybars[i])),
    ));
    Ok(out)
}

/// Adding the ex ante conjugate of the cap to an interval helps the
/// principal exactly when the mean agent type is below the benchmark type.
pub fn conjugate_extension(beta: f64, n: usize) -> Result<Check> {
    let s = uqc(beta);
    let bench = informed_benchmark(&s)?;
    let sign = bench_sign(&s, bench.theta_hat);
    let y0s = interior(s.ya_lo(), s.y_a0(), n);
    let mut bad = Vec::new();
    for &y0 in &y0s {
        let y1 = ex_ante_conjugate(&s, y0)?;
        let base = DelegationSet::interval(s.ya_lo().min(y0), y0);
        let with = make_set(&[(s.ya_lo().min(y0), y0), (y1, y1)])?;
        let diff = informed_payoff(&s, &with) - informed_payoff(&s, &base);
        let got = if diff > 1e-12 {
            1
        } else if diff < -1e-12 {
            -1
        } else {
            0
        };
        if got != sign {
            bad.push(y0);
        }
    }
    Ok(Check::new(
        "principal",
        format!("beta={beta}: adding the conjugate point has the predicted sign"),
        bad.is_empty(),
        if bad.is_empty() {
            format!("sign {sign} on {n} caps")
        } else {
            format!("wrong at {bad:?}")
        },
    ))
}

fn bench_sign(s: &DecisionSetting, theta_hat: f64) -> i32 {
    let d = s.bias().effective(theta_hat) - s.mean_effective();
    if d > 1e-12 {
        1
    } else if d < -1e-12 {
        -1
    } else {
        0
    }
}

/// Largest gap between the envelope and the direct informed payoff over
/// `count` random sets in generic units.
pub fn envelope_gap(beta: f64, count: usize, seed: u64) -> Result<f64> {
    let s = DecisionSetting::uqc_generic(beta)?;
    random_sets(&s, count, seed)
        .par_iter()
        .map(|d| Ok((informed_payoff_envelope(&s, d)? - informed_payoff(&s, d)).abs()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

pub fn principal_suite() -> Result<Vec<Check>> {
    const S: &str = "principal";
    let mut out = Vec::new();
    for beta in [0.1, 0.3] {
        let gap = envelope_gap(beta, 200, SEED)?;
        out.push(Check::new(
            S,
            format!("beta={beta}: envelope identity"),
            gap <= 1e-6,
            format!("max error {gap:e} over 200 sets"),
        ));
    }
    for (label, s) in [
        ("uqc 0.1", uqc(0.1)),
        ("uqc 0.3", uqc(0.3)),
        ("quartic", quartic(0.1)),
        ("skewed", skewed(0.1)),
    ] {
        let bench = informed_benchmark(&s)?;
        let ys = linspace(s.ya_lo(), s.ya_hi(), 400);
        let best = ys
            .iter()
            .map(|&y| informed_payoff(&s, &DelegationSet::interval(s.ya_lo(), y)))
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::new(
            S,
            format!("{label}: benchmark interval beats other intervals"),
            bench.value >= best - 1e-12,
            format!("benchmark {}, best grid interval {best}", bench.value),
        ));
    }
    for beta in SWEEP_BETAS {
        out.extend(principal_statics(beta, SWEEP_POINTS)?);
    }
    for beta in [0.1, 0.24, 0.26, 0.3, 0.45] {
        out.push(conjugate_extension(beta, SWEEP_POINTS)?);
    }
    Ok(out)
}

/// Checks on the gaps and value of one solved cell.
pub fn solve_checks(beta: f64, kappa: f64) -> Result<Vec<Check>> {
    const S: &str = "optimizer";
    let s = uqc(beta);
    let cost = CostModel::szalay(kappa)?;
    let r = solve(&s, &cost, DEFAULT_GRID)?;
    let cell = format!("beta={beta}, kappa={kappa}");
    let mut out = Vec::new();
    let ya0 = s.y_a0();
    let bad: Vec<String> = gaps(&r.best_set)
        .iter()
        .filter(|g| {
            let diff = s.report_difference(s.ex_ante_agent(g.d1) - s.ex_ante_agent(g.d2));
            let straddle = g.d1 < ya0 && ya0 < g.d2;
            !(straddle && (diff.abs() <= 1e-6 || (diff > 0.0 && g.d2 > s.ya_hi())))
        })
        .map(|g| format!("({}, {})", g.d1, g.d2))
        .collect();
    out.push(Check::new(
        S,
        format!("{cell}: gaps straddle the ex ante favorite"),
        bad.is_empty(),
        bad.join(" "),
    ));
    let bench = informed_benchmark(&s)?;
    let v = r.evaluation.u_total;
    out.push(Check::new(
        S,
        format!("{cell}: below the informed benchmark"),
        v <= bench.value + 1e-9,
        format!("{v} vs {}", bench.value),
    ));
    let single = evaluate(&s, &cost, &DelegationSet::singleton(s.y_p0())).u_total;
    let interval = evaluate(&s, &cost, &bench.interval).u_total;
    out.push(Check::new(
        S,
        format!("{cell}: beats the singleton and the benchmark interval"),
        v >= single - 1e-12 && v >= interval - 1e-9,
        format!("{v} vs {single}, {interval}"),
    ));
    if r.form == FormLabel::Hollow {
        let (_, _, y2) = r.parameters();
        let step = (s.ya_hi() - s.ya_lo()) / (DEFAULT_GRID - 1) as f64;
        out.push(Check::new(
            S,
            format!("{cell}: hollow top above the benchmark cap"),
            y2 > bench.cap - step,
            format!("y2 {y2}, cap {}", bench.cap),
        ));
    }
    Ok(out)
}

fn upper_width(row: &RegimeRow) -> f64 {
    match row.form {
        FormLabel::Hollow | FormLabel::HollowSingleton => row.y2_or_ybar - row.y1,
        _ => 0.0,
    }
}

/// Regime sweep over `betas` at one `kappa`: the upper hollow interval
/// shrinks until it vanishes, and the switch to interval delegation cuts
/// effort and raises the uninformed payoff.
pub fn regime_sweep(
    kappa: f64,
    betas: &[f64],
    grid_n: usize,
) -> Result<(Vec<RegimeRow>, Vec<Check>)> {
    const S: &str = "optimizer";
    let rows = regime_map(betas, &[kappa], grid_n)?;
    let widths: Vec<f64> = rows.iter().map(upper_width).collect();
    let end = widths
        .iter()
        .position(|&w| w <= 0.0)
        .unwrap_or(widths.len());
    let bad = (1..end.min(widths.len())).find(|&i| widths[i] > widths[i - 1] + 1e-3);
    let mut out = vec![Check::new(
        S,
        format!("kappa={kappa}: hollow top width shrinks in the bias"),
        bad.is_none(),
        bad.map_or(
            format!(
                "width reaches zero at beta={}",
                rows.get(end).map_or(f64::NAN, |r| r.beta)
            ),
            |i| format!("grows at beta={}", rows[i].beta),
        ),
    )];
    let switch = (1..rows.len())
        .find(|&i| rows[i - 1].form.is_hollow() && rows[i].form == FormLabel::Interval);
    match switch {
        Some(i) => {
            let (a, b) = (&rows[i - 1], &rows[i]);
            out.push(Check::new(
                S,
                format!("kappa={kappa}: effort drops at the switch"),
                b.effort < a.effort,
                format!(
                    "beta {} -> {}: {} -> {}",
                    a.beta, b.beta, a.effort, b.effort
                ),
            ));
            out.push(Check::new(
                S,
                format!("kappa={kappa}: uninformed payoff rises at the switch"),
                b.u_p0 > a.u_p0,
                format!("{} -> {}", a.u_p0, b.u_p0),
            ));
        }
        None => out.push(Check::new(
            S,
            format!("kappa={kappa}: hollow to interval switch"),
            false,
            "no switch in the sweep",
        )),
    }
    Ok((rows, out))
}

pub fn optimizer_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for beta in SWEEP_BETAS {
        for kappa in [0.02, 0.1] {
            out.extend(solve_checks(beta, kappa)?);
        }
    }
    let betas: Vec<f64> = (2..=48).map(|i| i as f64 / 100.0).collect();
    out.extend(regime_sweep(0.02, &betas, DEFAULT_GRID)?.1);
    Ok(out)
}

pub fn bias_suite() -> Result<Vec<Check>> {
    const S: &str = "bias";
    let kappa = 0.05;
    let cost = CostModel::szalay(kappa)?;
    let cond = szalay_condition(&cost);
    let mut out = vec![Check::new(
        S,
        "condition holds at kappa=0.05",
        cond.holds,
        format!("e0 {}", cond.e0),
    )];
    let reports: Vec<_> = [0.005, 0.01, 0.02]
        .par_iter()
        .map(|&b| theorem3_bound_check(kappa, b, DEFAULT_GRID))
        .collect::<Result<_>>()?;
    out.push(Check::new(
        S,
        "unbiased optimum has a gap",
        reports[0].radius > 1e-4,
        format!("radius {}", reports[0].radius),
    ));
    for r in &reports {
        let b = r.beta;
        out.push(Check::new(
            S,
            format!("beta={b}: biased agent preferred"),
            r.v_beta > r.v0,
            format!("{} vs {}", r.v_beta, r.v0),
        ));
        out.push(Check::new(
            S,
            format!("beta={b}: gain lower bound"),
            r.bound_holds,
            format!("{} >= {}", r.lhs, r.rhs),
        ));
        out.push(Check::new(
            S,
            format!("beta={b}: shifted set feasible"),
            r.shift_slack >= -1e-9,
            format!("slack {}", r.shift_slack),
        ));
        out.push(Check::new(
            S,
            format!("beta={b}: shift keeps gain and effort"),
            r.shift_gain_gap <= 1e-9 && r.shift_effort_gap <= 1e-9,
            format!("{:e}, {:e}", r.shift_gain_gap, r.shift_effort_gap),
        ));
    }
    Ok(out)
}

pub fn oracle_suite() -> Result<Vec<Check>> {
    const S: &str = "oracle";
    let mut out = Vec::new();
    for (beta, kappa) in [(0.1, 0.02), (0.3, 0.05), (0.45, 0.05)] {
        let s = uqc(beta);
        let cost = CostModel::szalay(kappa)?;
        let cell = format!("beta={beta}, kappa={kappa}");
        let rep = verify_characterization(&s, &cost, &default_grid(&s, 12))?;
        out.push(Check::new(
            S,
            format!("{cell}: characterization"),
            rep.passed,
            format!(
                "oracle {}, parametric {}, nearest {}",
                rep.best_value, rep.parametric_value, rep.nearest_form
            ),
        ));
        let coarse = enumerate_best(&s, &cost, &default_grid(&s, 6))?;
        let fine = enumerate_best(&s, &cost, &default_grid(&s, 11))?;
        out.push(Check::new(
            S,
            format!("{cell}: refining the grid never hurts"),
            fine.best_value >= coarse.best_value - 1e-12,
            format!("{} -> {}", coarse.best_value, fine.best_value),
        ));
        let gap6 = rep.parametric_value - coarse.best_value;
        let gap12 = rep.parametric_value - rep.best_value;
        out.push(Check::new(
            S,
            format!("{cell}: oracle approaches the optimum"),
            gap12 <= gap6 + 1e-12,
            format!("{gap6:e} -> {gap12:e}"),
        ));
        let grid = &rep.oracle.grid;
        let mut raised = Vec::new();
        for g in rep.gap_checks.iter().filter(|g| g.material) {
            for &y in grid.iter().filter(|&&y| y > g.d1 && y < g.d2) {
                let mut raw: Vec<(f64, f64)> =
                    rep.oracle.best_decisions.iter().map(|&x| (x, x)).collect();
                raw.push((y, y));
                raw.sort_by(|p, q| p.0.total_cmp(&q.0));
                let v = evaluate(&s, &cost, &make_set(&raw)?).u_total;
                if v > rep.best_value + 1e-9 {
                    raised.push(y);
                }
            }
        }
        out.push(Check::new(
            S,
            format!("{cell}: filling a gap does not help"),
            raised.is_empty(),
            format!("{raised:?}"),
        ));
    }
    Ok(out)
}
