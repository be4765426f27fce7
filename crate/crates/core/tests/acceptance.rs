//! Acceptance criteria, one PASS/FAIL line each. Runs as its own binary so
//! the lines are always shown; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use delegation::agent::{agent_response, CostModel};
use delegation::bias::{
    informed_equivalent_bias, optimal_bias, szalay_condition, theorem3_bound_check,
};
use delegation::high_point::{high_point_demo, IDENTITY_TOL};
use delegation::model::DecisionSetting;
use delegation::numeric::range_inclusive;
use delegation::optimizer::{solve, FormLabel, DEFAULT_GRID};
use delegation::oracle::{default_grid, verify_characterization};
use delegation::principal::informed_benchmark;
use delegation::sets::DelegationSet;
use delegation::suites::{
    agent_statics, conjugate_extension, envelope_gap, principal_statics, regime_sweep, SWEEP_BETAS,
    SWEEP_POINTS,
};

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    range_inclusive(lo, hi, step)
        .into_iter()
        .map(|x| (x * 1e9).round() / 1e9)
        .collect()
}

fn benchmark_cap() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 1..=9 {
        let beta = 0.05 * i as f64;
        let b = informed_benchmark(&DecisionSetting::uqc(beta).unwrap()).unwrap();
        worst = worst.max((b.theta_hat - (1.0 - 2.0 * beta)).abs());
    }
    outcome(worst <= 1e-8, format!("max |θ̂ - (1 - 2β)| = {worst:.2e}"))
}

fn envelope() -> Outcome {
    let gaps: Vec<f64> = [0.1, 0.3]
        .iter()
        .map(|&b| envelope_gap(b, 200, 7).unwrap())
        .collect();
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst <= 1e-6,
        format!("max error {worst:.2e} over 2 x 200 sets"),
    )
}

fn regime_landmarks() -> Outcome {
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut run = |beta: f64, kappa: f64, ok: &dyn Fn(FormLabel) -> bool| {
        let t = Instant::now();
        let r = solve(
            &DecisionSetting::uqc(beta).unwrap(),
            &CostModel::szalay(kappa).unwrap(),
            DEFAULT_GRID,
        )
        .unwrap();
        slowest = slowest.max(t.elapsed());
        if !ok(r.form) {
            bad.push(format!("({beta}, {kappa}) -> {}", r.form));
        }
    };
    for beta in [0.05, 0.15, 0.24] {
        for kappa in [0.01, 0.05, 0.2] {
            run(beta, kappa, &|f| f.is_hollow());
        }
    }
    for beta in [0.40, 0.45] {
        for kappa in [0.01, 0.05, 0.2] {
            run(beta, kappa, &|f| {
                matches!(f, FormLabel::Interval | FormLabel::HighPoint)
            });
        }
    }
    run(0.30, 1e-4, &|f| f == FormLabel::Interval);
    let fast = slowest < Duration::from_secs(10);
    outcome(
        bad.is_empty() && fast,
        if bad.is_empty() {
            format!("19 cells, slowest solve {slowest:.2?}")
        } else {
            bad.join("; ")
        },
    )
}

fn regime_path() -> Outcome {
    let (_, checks) = regime_sweep(0.02, &grid(0.02, 0.48, 0.01), DEFAULT_GRID).unwrap();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.to_string())
        .collect();
    let detail: Vec<String> = checks.iter().map(|c| c.detail.clone()).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            detail.join("; ")
        } else {
            failed.join("; ")
        },
    )
}

fn gain_from_bias() -> Outcome {
    let kappa = 0.05;
    let cond = szalay_condition(&CostModel::szalay(kappa).unwrap()).holds;
    let reports: Vec<_> = [0.005, 0.01, 0.02]
        .iter()
        .map(|&b| theorem3_bound_check(kappa, b, DEFAULT_GRID).unwrap())
        .collect();
    let r = reports[0].radius;
    let better = reports.iter().all(|x| x.v_beta > x.v0);
    let bound = reports.iter().all(|x| x.lhs >= x.rhs - 1e-6);
    outcome(
        cond && r > 1e-4 && better && bound,
        format!(
            "condition {cond}, r = {r:.4}, V(β) - V(0) = [{}], bounds [{}]",
            reports
                .iter()
                .map(|x| format!("{:.3e}", x.lhs))
                .collect::<Vec<_>>()
                .join(", "),
            reports
                .iter()
                .map(|x| format!("{:.3e}", x.rhs))
                .collect::<Vec<_>>()
                .join(", "),
        ),
    )
}

fn bias_landmarks() -> Outcome {
    let betas = grid(0.0, 0.1, 0.005);
    let kappas = grid(0.01, 0.15, 0.005);
    let curves: Vec<_> = kappas
        .iter()
        .map(|&k| optimal_bias(k, &betas, DEFAULT_GRID).unwrap())
        .collect();
    let max_star = curves
        .iter()
        .map(|c| c.beta_star)
        .fold(f64::NEG_INFINITY, f64::max);
    let at = curves
        .iter()
        .find(|c| (c.kappa - 0.08).abs() < 1e-9)
        .unwrap();
    let equivalent = informed_equivalent_bias(at.gain()).unwrap();
    let peak = curves
        .iter()
        .fold(&curves[0], |b, c| if c.gain() > b.gain() { c } else { b });
    let ok = (max_star - 0.045).abs() <= 0.005
        && (at.beta_star - 0.036).abs() <= 0.004
        && (equivalent - 0.027).abs() <= 0.005
        && (0.06..=0.09).contains(&peak.kappa);
    outcome(
        ok,
        format!(
            "max β* = {max_star:.4}, β*(0.08) = {:.4}, equivalent bias {equivalent:.4}, gain peaks at κ = {}",
            at.beta_star, peak.kappa
        ),
    )
}

fn oracle_agreement() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (beta, kappa) in [(0.1, 0.02), (0.3, 0.05), (0.45, 0.05)] {
        let s = DecisionSetting::uqc(beta).unwrap();
        let rep = verify_characterization(
            &s,
            &CostModel::szalay(kappa).unwrap(),
            &default_grid(&s, 12),
        )
        .unwrap();
        ok &= rep.passed;
        parts.push(format!(
            "({beta}, {kappa}) {} vs {}",
            rep.nearest_form, rep.parametric_form
        ));
    }
    outcome(ok, parts.join("; "))
}

fn high_point() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for beta in [0.28, 0.3, 0.35] {
        let r = high_point_demo(beta, 0.1).unwrap();
        let thresholds = r.literal_thresholds();
        let identity = (r.identity_value - r.identity_claim).abs() <= IDENTITY_TOL;
        ok &= r.success && thresholds && identity;
        parts.push(format!(
            "β={beta}: thresholds {thresholds}, identity {identity} ({:.6} vs {:.6}), dominance {}",
            r.identity_value, r.identity_claim, r.success
        ));
    }
    outcome(ok, parts.join("; "))
}

fn agent_values() -> Outcome {
    let s = DecisionSetting::uqc(0.3).unwrap();
    let cost = CostModel::szalay(0.05).unwrap();
    let gain = |d: DelegationSet| agent_response(&s, &cost, &d).info_gain;
    let errs = [
        (gain(DelegationSet::interval(0.3, 1.3)) - 1.0 / 12.0).abs(),
        (gain(DelegationSet::interval(0.3, 0.8)) - 1.0 / 24.0).abs(),
        gain(DelegationSet::singleton(0.5)).abs(),
    ];
    let e = (cost.effort(1.0 / 12.0) - (1.0 - (-5.0f64 / 3.0).exp())).abs();
    outcome(
        errs.iter().all(|x| *x <= 1e-9) && e <= 1e-12,
        format!(
            "gain errors {:.1e} {:.1e} {:.1e}, effort error {e:.1e}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn comparative_statics() -> Outcome {
    let mut checks = Vec::new();
    for beta in SWEEP_BETAS {
        checks.extend(agent_statics(beta, SWEEP_POINTS).unwrap());
        checks.extend(principal_statics(beta, SWEEP_POINTS).unwrap());
        checks.push(conjugate_extension(beta, SWEEP_POINTS).unwrap());
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.to_string())
        .collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} sweeps", checks.len())
        } else {
            failed.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("benchmark cap", Duration::from_secs(1), benchmark_cap),
        ("envelope identity", Duration::from_secs(10), envelope),
        (
            "regime landmarks",
            Duration::from_secs(190),
            regime_landmarks,
        ),
        (
            "regime path at kappa 0.02",
            Duration::from_secs(300),
            regime_path,
        ),
        (
            "gain from a small bias",
            Duration::from_secs(120),
            gain_from_bias,
        ),
        (
            "optimal bias landmarks",
            Duration::from_secs(900),
            bias_landmarks,
        ),
        (
            "oracle agreement",
            Duration::from_secs(180),
            oracle_agreement,
        ),
        (
            "high-point construction",
            Duration::from_secs(300),
            high_point,
        ),
        (
            "agent response values",
            Duration::from_secs(1),
            agent_values,
        ),
        (
            "comparative statics sweeps",
            Duration::from_secs(60),
            comparative_statics,
        ),
    ];
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let elapsed = t.elapsed();
        let passed = o.passed && elapsed <= *budget;
        failures += usize::from(!passed);
        let tag = if passed { "PASS" } else { "FAIL" };
        let slow = if elapsed > *budget {
            " (over time budget)"
        } else {
            ""
        };
        println!(
            "{tag} criterion {}: {name} [{elapsed:.2?}{slow}] {}",
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
