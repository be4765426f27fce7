//! Brute-force check of the optimizer: every subset of a small decision
//! grid is evaluated and the best one is compared with the parametric
//! optimum and inspected for the predicted gap structure.

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{Choice, ChoiceProfile, CostModel};
use crate::error::{Error, Result};
use crate::model::DecisionSetting;
use crate::numeric::linspace;
use crate::optimizer::{solve_unchecked, FormLabel, SolveResult, DEFAULT_GRID};
use crate::principal::{evaluate, Evaluation};
use crate::sets::{make_set, DelegationSet};

pub const MAX_GRID: usize = 18;
pub const DEFAULT_M: usize = 12;
/// Choice probability above which a decision counts as used.
pub const MATERIAL_PROB: f64 = 1e-3;
/// Gaps narrower than this many grid steps are not material.
pub const MATERIAL_STEPS: f64 = 2.0;
const VALUE_TIE: f64 = 1e-12;

/// `m` equispaced decisions on `[y_A(θ̲), y_A(θ̄) + ½(y_A(θ̄) - y_A(θ̲))]`.
pub fn default_grid(setting: &DecisionSetting, m: usize) -> Vec<f64> {
    let (a, b) = (setting.ya_lo(), setting.ya_hi());
    linspace(a, b + 0.5 * (b - a), m)
}

fn subset_set(grid: &[f64], mask: u32) -> DelegationSet {
    let pts: Vec<(f64, f64)> = (0..grid.len())
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (grid[i], grid[i]))
        .collect();
    make_set(&pts).expect("nonempty subset")
}

fn indices(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|i| mask >> i & 1 == 1).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub grid: Vec<f64>,
    pub best_subset: Vec<usize>,
    pub best_decisions: Vec<f64>,
    pub best_value: f64,
    pub best_evaluation: Evaluation,
    pub subsets_evaluated: usize,
}

/// Evaluates every nonempty subset of `grid`; ties within `1e-12` go to
/// the lexicographically smallest index list.
pub fn enumerate_best(
    setting: &DecisionSetting,
    cost: &CostModel,
    grid: &[f64],
) -> Result<OracleResult> {
    let m = grid.len();
    if m == 0 || m > MAX_GRID {
        return Err(Error::Validation(format!(
            "oracle grid must have 1 to {MAX_GRID} points, got {m}"
        )));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Validation(
            "oracle grid must be strictly increasing".into(),
        ));
    }
    if let Some(y) = grid.iter().find(|y| !setting.in_working_range(**y)) {
        let (a, b) = setting.working_range();
        return Err(Error::OutOfRange(*y, a, b));
    }
    let total = 1u32 << m;
    let values: Vec<f64> = (1..total)
        .into_par_iter()
        .map(|mask| evaluate(setting, cost, &subset_set(grid, mask)).u_total)
        .collect();
    let mut best = 1u32;
    for mask in 2..total {
        let (v, b) = (values[mask as usize - 1], values[best as usize - 1]);
        let better = v > b + VALUE_TIE
            || ((v - b).abs() <= VALUE_TIE && indices(mask, m) < indices(best, m));
        if better {
            best = mask;
        }
    }
    let set = subset_set(grid, best);
    let best_subset = indices(best, m);
    Ok(OracleResult {
        grid: grid.to_vec(),
        best_decisions: best_subset.iter().map(|&i| grid[i]).collect(),
        best_subset,
        best_value: values[best as usize - 1],
        best_evaluation: evaluate(setting, cost, &set),
        subsets_evaluated: values.len(),
    })
}

/// Diagnostics for one gap of the oracle's best subset.
#[derive(Debug, Clone, Serialize)]
pub struct GapCheck {
    pub d1: f64,
    pub d2: f64,
    pub material: bool,
    pub straddles: bool,
    /// `E[u_A(d1)] - E[u_A(d2)]`, reported units.
    pub ex_ante_difference: f64,
    /// Largest difference attributable to the grid spacing.
    pub tolerance: f64,
    pub passed: bool,
    /// Within one grid step of a case boundary; reported, not failed.
    pub borderline: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterizationReport {
    pub best_value: f64,
    pub parametric_value: f64,
    pub parametric_form: FormLabel,
    pub value_check: bool,
    pub gap_checks: Vec<GapCheck>,
    pub nearest_form: FormLabel,
    pub form_matches: bool,
    pub passed: bool,
    pub oracle: OracleResult,
}

/// Probability that decision `y` is taken: informed with probability `ê`,
/// uninformed otherwise.
fn choice_probability(
    setting: &DecisionSetting,
    d: &DelegationSet,
    ev: &Evaluation,
    y: f64,
) -> f64 {
    let profile = ChoiceProfile::new(setting, d);
    let informed: f64 = profile
        .segments
        .iter()
        .filter(|s| s.choice == Choice::Fixed(y))
        .map(|s| setting.dist().cdf(s.hi) - setting.dist().cdf(s.lo))
        .sum();
    let e = ev.agent.effort;
    let uninformed = if ev.agent.uninformed_decision == y {
        1.0
    } else {
        0.0
    };
    e * informed + (1.0 - e) * uninformed
}

/// Shape of a grid subset, read as the nearest of the three forms.
pub fn nearest_form(setting: &DecisionSetting, grid: &[f64], subset: &[usize]) -> FormLabel {
    let ya0 = setting.y_a0();
    let pts: Vec<f64> = subset.iter().map(|&i| grid[i]).collect();
    let step = grid_step(grid);
    let top = *pts.last().expect("nonempty subset");
    if top <= ya0 {
        return FormLabel::Interval;
    }
    if pts[0] >= ya0 {
        return FormLabel::Hollow;
    }
    let n = subset.len();
    let isolated_top = n >= 2 && subset[n - 1] - subset[n - 2] > 1;
    if isolated_top && top > setting.ya_hi() {
        let d1 = pts[n - 2];
        let diff =
            setting.report_difference(setting.ex_ante_agent(d1) - setting.ex_ante_agent(top));
        if d1 < ya0 && diff > slope_bound(setting, d1, top, step) {
            return FormLabel::HighPoint;
        }
    }
    FormLabel::Hollow
}

fn grid_step(grid: &[f64]) -> f64 {
    if grid.len() < 2 {
        0.0
    } else {
        (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
    }
}

/// Change in `E[u_A]` a shift of one grid step can cause at either end.
fn slope_bound(setting: &DecisionSetting, d1: f64, d2: f64, step: f64) -> f64 {
    let k = setting.kernel();
    let slope = |y: f64| (setting.mean_effective() - k.level_of(y)).abs();
    setting.report_difference(step * slope(d1).max(slope(d2)))
}

/// Oracle versus parametric optimum: value dominance, gap structure and
/// form agreement.
pub fn verify_characterization(
    setting: &DecisionSetting,
    cost: &CostModel,
    grid: &[f64],
) -> Result<CharacterizationReport> {
    let oracle = enumerate_best(setting, cost, grid)?;
    let solved: SolveResult = solve_unchecked(setting, cost, DEFAULT_GRID);
    Ok(compare(setting, oracle, &solved))
}

pub(crate) fn compare(
    setting: &DecisionSetting,
    oracle: OracleResult,
    solved: &SolveResult,
) -> CharacterizationReport {
    let grid = &oracle.grid;
    let step = grid_step(grid);
    let ya0 = setting.y_a0();
    let set = subset_set_from(grid, &oracle.best_subset);
    let ev = &oracle.best_evaluation;
    let mut gap_checks = Vec::new();
    for w in oracle.best_subset.windows(2) {
        if w[1] - w[0] < 2 {
            continue;
        }
        let (d1, d2) = (grid[w[0]], grid[w[1]]);
        let used = choice_probability(setting, &set, ev, d1) > MATERIAL_PROB
            && choice_probability(setting, &set, ev, d2) > MATERIAL_PROB;
        let wide = d2 - d1 > MATERIAL_STEPS * step * (1.0 + 1e-9);
        let low = d2 <= setting.ya_hi();
        let material = used && wide && low;
        let straddles = d1 < ya0 && ya0 < d2;
        let diff = setting.report_difference(setting.ex_ante_agent(d1) - setting.ex_ante_agent(d2));
        let tolerance = slope_bound(setting, d1, d2, step);
        let ok = straddles && diff.abs() <= tolerance;
        let borderline = used
            && wide
            && ((d2 - setting.ya_hi()).abs() <= step
                || (d1 - ya0).abs() <= step
                || (d2 - ya0).abs() <= step);
        gap_checks.push(GapCheck {
            d1,
            d2,
            material,
            straddles,
            ex_ante_difference: diff,
            tolerance,
            passed: !material || ok || borderline,
            borderline: material && !ok && borderline,
        });
    }
    let parametric_value = solved.evaluation.u_total;
    let value_check = oracle.best_value <= parametric_value + 1e-6;
    let nearest = nearest_form(setting, grid, &oracle.best_subset);
    let form_matches = same_shape(nearest, solved.form);
    let passed = value_check && form_matches && gap_checks.iter().all(|g| g.passed);
    CharacterizationReport {
        best_value: oracle.best_value,
        parametric_value,
        parametric_form: solved.form,
        value_check,
        gap_checks,
        nearest_form: nearest,
        form_matches,
        passed,
        oracle,
    }
}

fn subset_set_from(grid: &[f64], subset: &[usize]) -> DelegationSet {
    let pts: Vec<(f64, f64)> = subset.iter().map(|&i| (grid[i], grid[i])).collect();
    make_set(&pts).expect("nonempty subset")
}

fn same_shape(a: FormLabel, b: FormLabel) -> bool {
    let norm = |f: FormLabel| match f {
        FormLabel::HollowSingleton => FormLabel::Hollow,
        other => other,
    };
    norm(a) == norm(b)
}
