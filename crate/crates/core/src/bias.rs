//! How the principal's value of delegation depends on the agent's bias in
//! the uniform/quadratic setting with constant bias.

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{agent_response, CostModel};
use crate::error::{Error, Result};
use crate::model::DecisionSetting;
use crate::numeric::{bisect, fmt_sig, golden_max, linspace};
use crate::optimizer::solve;
use crate::principal::evaluate;
use crate::sets::{make_set, DelegationSet};

/// Refinement tolerance for the optimal bias.
pub const BETA_TOL: f64 = 1e-4;

/// `[0, ½ - r] ∪ [½ + r, 1]`, the unbiased agent's candidate sets.
pub fn punctured_interval(r: f64) -> DelegationSet {
    let r = r.clamp(0.0, 0.5);
    make_set(&[(0.0, 0.5 - r), (0.5 + r, 1.0)]).expect("punctured interval is well formed")
}

/// Best punctured interval for an unbiased agent.
#[derive(Debug, Clone, Serialize)]
pub struct UnbiasedOptimum {
    pub radius: f64,
    pub value: f64,
    pub effort: f64,
    pub info_gain: f64,
}

pub fn unbiased_optimum(cost: &CostModel, grid_n: usize) -> Result<UnbiasedOptimum> {
    let setting = DecisionSetting::uqc(0.0)?;
    let value = |r: f64| evaluate(&setting, cost, &punctured_interval(r)).u_total;
    let n = grid_n.max(3);
    let top = 0.5 - 1e-9;
    let grid = linspace(0.0, top, n);
    let values: Vec<f64> = grid.par_iter().map(|&r| value(r)).collect();
    let k = (0..n).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let step = top / (n - 1) as f64;
    let lo = (grid[k] - step).max(0.0);
    let hi = (grid[k] + step).min(top);
    let (mut radius, mut best) = golden_max(value, lo, hi, 1e-10);
    if values[k] > best {
        radius = grid[k];
        best = values[k];
    }
    let ev = evaluate(&setting, cost, &punctured_interval(radius));
    Ok(UnbiasedOptimum {
        radius,
        value: best,
        effort: ev.agent.effort,
        info_gain: ev.agent.info_gain,
    })
}

/// `V(β)`: the principal's optimal payoff when the agent's bias is `β`.
pub fn delegation_value(beta: f64, cost: &CostModel, grid_n: usize) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!(
            "bias must be nonnegative, got {beta}"
        )));
    }
    if beta == 0.0 {
        return Ok(unbiased_optimum(cost, grid_n)?.value);
    }
    let setting = DecisionSetting::uqc(beta)?;
    Ok(solve(&setting, cost, grid_n)?.evaluation.u_total)
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasCurve {
    pub kappa: f64,
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    pub beta_star: f64,
    pub v_star: f64,
    pub unbiased_value: f64,
}

impl BiasCurve {
    /// `V(β*) - V(0)`.
    pub fn gain(&self) -> f64 {
        self.v_star - self.unbiased_value
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.betas
            .iter()
            .zip(&self.values)
            .map(|(b, v)| {
                format!(
                    "{},{},{}",
                    fmt_sig(self.kappa, 10),
                    fmt_sig(*b, 10),
                    fmt_sig(*v, 10)
                )
            })
            .collect()
    }

    pub fn summary(&self) -> BiasSummary {
        let gain = self.gain();
        BiasSummary {
            kappa: self.kappa,
            beta_star: self.beta_star,
            v_star: self.v_star,
            v0: self.unbiased_value,
            gain,
            informed_equivalent_bias: informed_equivalent_bias(gain.max(0.0)).ok(),
        }
    }
}

pub const BIAS_CSV_HEADER: &str = "kappa,beta,V";

#[derive(Debug, Clone, Serialize)]
pub struct BiasSummary {
    pub kappa: f64,
    pub beta_star: f64,
    #[serde(rename = "V_star")]
    pub v_star: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    pub gain: f64,
    pub informed_equivalent_bias: Option<f64>,
}

/// Evaluates `V` on `betas` (which should contain 0) and refines the
/// argmax by golden section between its grid neighbors.
pub fn optimal_bias(kappa: f64, betas: &[f64], grid_n: usize) -> Result<BiasCurve> {
    if betas.is_empty() {
        return Err(Error::Validation("bias grid is empty".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0 && **b < 0.5)) {
        return Err(Error::Domain(format!(
            "bias grid value {b} outside [0, 0.5)"
        )));
    }
    let cost = CostModel::szalay(kappa)?;
    let mut betas = betas.to_vec();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    let values: Vec<f64> = betas
        .par_iter()
        .map(|&b| delegation_value(b, &cost, grid_n))
        .collect::<Result<_>>()?;
    let unbiased_value = match betas.iter().position(|&b| b == 0.0) {
        Some(i) => values[i],
        None => delegation_value(0.0, &cost, grid_n)?,
    };
    let k = (0..betas.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let (mut beta_star, mut v_star) = (betas[k], values[k]);
    if betas.len() > 1 {
        let lo = if k > 0 { betas[k - 1] } else { betas[0] };
        let hi = betas[(k + 1).min(betas.len() - 1)];
        // The refinement stays off β = 0, whose family differs.
        let lo = if lo == 0.0 { (hi - lo) * 1e-3 } else { lo };
        let f = |b: f64| delegation_value(b, &cost, grid_n).unwrap_or(f64::NEG_INFINITY);
        let (b, v) = golden_max(f, lo, hi, BETA_TOL);
        if v > v_star {
            beta_star = b;
            v_star = v;
        }
    }
    Ok(BiasCurve {
        kappa,
        betas,
        values,
        beta_star,
        v_star,
        unbiased_value,
    })
}

/// Whether `c'(e0)/c''(e0) > 1 - e0` at the effort `e0` an unbiased agent
/// exerts with full discretion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SzalayCondition {
    pub holds: bool,
    pub e0: f64,
    pub ratio: f64,
    /// Ratio and `1 - e0` agree to rounding; the strict inequality fails.
    pub boundary: bool,
}

pub fn szalay_condition(cost: &CostModel) -> SzalayCondition {
    let e0 = cost.effort(1.0 / 12.0);
    let ratio = cost.c_prime(e0) / cost.c_second(e0);
    let rhs = 1.0 - e0;
    let boundary = (ratio - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300);
    SzalayCondition {
        holds: ratio > rhs && !boundary,
        e0,
        ratio,
        boundary,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasBoundReport {
    pub applicable: bool,
    pub kappa: f64,
    pub beta: f64,
    pub radius: f64,
    pub e_star: f64,
    pub v0: f64,
    pub v_beta: f64,
    /// `V(β) - V(0)`.
    pub lhs: f64,
    /// `β(2r(1 - e*) - β)`.
    pub rhs: f64,
    pub bound_holds: bool,
    /// `|Δ_A(β + D*; β) - Δ_A(D*; 0)|`.
    pub shift_gain_gap: f64,
    /// `|ê(β + D*; β) - ê(D*; 0)|`.
    pub shift_effort_gap: f64,
    /// `V(β) - U_P(β + D*; β)`, nonnegative when the shifted set is
    /// dominated.
    pub shift_slack: f64,
}

/// Checks the lower bound on the gain from bias, and translation
/// invariance of the agent's response to the shifted unbiased optimum.
pub fn theorem3_bound_check(kappa: f64, beta: f64, grid_n: usize) -> Result<BiasBoundReport> {
    let cost = CostModel::szalay(kappa)?;
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!(
            "bias must be nonnegative, got {beta}"
        )));
    }
    let cond = szalay_condition(&cost);
    let opt = unbiased_optimum(&cost, grid_n)?;
    let rhs = beta * (2.0 * opt.radius * (1.0 - opt.effort) - beta);
    let mut report = BiasBoundReport {
        applicable: cond.holds,
        kappa,
        beta,
        radius: opt.radius,
        e_star: opt.effort,
        v0: opt.value,
        v_beta: opt.value,
        lhs: 0.0,
        rhs,
        bound_holds: true,
        shift_gain_gap: 0.0,
        shift_effort_gap: 0.0,
        shift_slack: 0.0,
    };
    if !cond.holds || beta == 0.0 {
        report.bound_holds = !cond.holds || rhs <= 1e-6;
        return Ok(report);
    }
    let v_beta = delegation_value(beta, &cost, grid_n)?;
    let setting = DecisionSetting::uqc(beta)?;
    let base = punctured_interval(opt.radius);
    let shifted = make_set(
        &base
            .intervals()
            .iter()
            .map(|[a, b]| (a + beta, b + beta))
            .collect::<Vec<_>>(),
    )?;
    let moved = agent_response(&setting, &cost, &shifted);
    let shifted_value = evaluate(&setting, &cost, &shifted).u_total;
    report.v_beta = v_beta;
    report.lhs = v_beta - opt.value;
    report.bound_holds = report.lhs >= rhs - 1e-6;
    report.shift_gain_gap = (moved.info_gain - opt.info_gain).abs();
    report.shift_effort_gap = (moved.effort - opt.effort).abs();
    report.shift_slack = v_beta - shifted_value;
    Ok(report)
}

/// The constant bias whose informed-agent loss `β² - (4/3)β³` equals `gain`.
pub fn informed_equivalent_bias(gain: f64) -> Result<f64> {
    let g = |b: f64| b * b - 4.0 / 3.0 * b * b * b;
    let top = g(0.5);
    if !(gain >= 0.0) || gain > top + 1e-15 {
        return Err(Error::OutOfRange(gain, 0.0, top));
    }
    if gain == 0.0 {
        return Ok(0.0);
    }
    Ok(bisect(|b| g(b) - gain, 0.0, 0.5, 1e-15, 200).unwrap_or(0.5))
}
