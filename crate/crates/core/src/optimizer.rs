//! Search over the three candidate shapes of an optimal delegation set.
//!
//! Each family is parameterized on a unit box so one grid-plus-refinement
//! routine serves all of them:
//!
//! - interval: `[y_A(θ̲), y0]` with `y0` between `y_P0` and `y_A0`;
//! - hollow: `[y_A(θ̲), y0] ∪ [y1, y2]` with `y1` the ex ante conjugate
//!   of `y0`;
//! - high point: `[y_A(θ̲), y0] ∪ {ȳ}` with `ȳ` strictly above the ex ante
//!   conjugate of `y0` and below its conjugate in the highest state.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{arrow_pratt, CostModel};
use crate::error::{Error, Result};
use crate::model::{check_assumptions, DecisionSetting, DEFAULT_CHECK_GRID};
use crate::numeric::{fmt_sig, golden_max, linspace};
use crate::principal::{evaluate, informed_benchmark, informed_payoff, Evaluation};
use crate::sets::{ex_ante_conjugate, make_set, theta_conjugate, DelegationSet};

pub const DEFAULT_GRID: usize = 200;
/// Convergence threshold of the local refinement, in unit-box coordinates.
pub const PARAM_TOL: f64 = 1e-6;
/// `y2 - y1` below this makes a hollow set a hollow singleton.
pub const SINGLETON_WIDTH: f64 = 1e-7;
/// A high point needs an ex ante preference gap above this.
pub const STRICT_PREFERENCE: f64 = 1e-6;
/// Values closer than this count as ties between families.
pub const VALUE_TIE: f64 = 1e-12;

const REFINE_STARTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Interval,
    Hollow,
    HighPoint,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Interval, Family::Hollow, Family::HighPoint];

    fn dims(self) -> usize {
        match self {
            Family::Interval => 1,
            Family::Hollow | Family::HighPoint => 2,
        }
    }
}

/// A delegation set described by its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelegationForm {
    Interval {
        y0: f64,
    },
    Hollow {
        y0: f64,
        y1: f64,
        y2: f64,
    },
    HighPoint {
        y0: f64,
        ybar: f64,
    },
    /// The single decision `y`; kept as a guard candidate.
    Singleton {
        y: f64,
    },
}

/// Reported shape of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormLabel {
    Hollow,
    HollowSingleton,
    Interval,
    HighPoint,
    Singleton,
}

impl FormLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FormLabel::Hollow => "hollow",
            FormLabel::HollowSingleton => "hollow_singleton",
            FormLabel::Interval => "interval",
            FormLabel::HighPoint => "high_point",
            FormLabel::Singleton => "singleton",
        }
    }

    /// Hollow sets whose upper interval has shrunk to a point are still
    /// hollow.
    pub fn is_hollow(self) -> bool {
        matches!(self, FormLabel::Hollow | FormLabel::HollowSingleton)
    }
}

impl fmt::Display for FormLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const FORM_TOL: f64 = 1e-9;
const CONJUGACY_TOL: f64 = 1e-8;

/// The canonical set described by `form`, after checking its shape
/// constraints (weakly, so box edges are admissible).
pub fn realize(setting: &DecisionSetting, form: &DelegationForm) -> Result<DelegationSet> {
    let ya0 = setting.y_a0();
    let bottom = |y0: f64| setting.ya_lo().min(y0);
    let eu = |y: f64| setting.ex_ante_agent(y);
    match *form {
        DelegationForm::Interval { y0 } => {
            if y0 < setting.y_p0() - FORM_TOL || y0 > ya0 + FORM_TOL {
                return Err(Error::Form(format!(
                    "interval cap {y0} must lie between y_P0 = {} and y_A0 = {ya0}",
                    setting.y_p0()
                )));
            }
            Ok(DelegationSet::interval(bottom(y0), y0))
        }
        DelegationForm::Hollow { y0, y1, y2 } => {
            if !(y0 <= ya0 + FORM_TOL && ya0 <= y1 + FORM_TOL && y1 <= y2 + FORM_TOL) {
                return Err(Error::Form(format!(
                    "hollow set needs y0 < y_A0 < y1 <= y2 (got {y0}, {ya0}, {y1}, {y2})"
                )));
            }
            if (eu(y0) - eu(y1)).abs() > CONJUGACY_TOL {
                return Err(Error::Form(format!(
                    "hollow endpoints {y0} and {y1} are not ex ante conjugates"
                )));
            }
            make_set(&[(bottom(y0), y0), (y1, y2.max(y1))])
        }
        DelegationForm::HighPoint { y0, ybar } => {
            if !(y0 <= ya0 + FORM_TOL && setting.ya_hi() <= ybar + FORM_TOL) {
                return Err(Error::Form(format!(
                    "high point needs y0 < y_A0 and ybar > y_A(top state) (got {y0}, {ybar})"
                )));
            }
            if eu(y0) < eu(ybar) - FORM_TOL {
                return Err(Error::Form(format!(
                    "high point {ybar} must be ex ante worse for the agent than {y0}"
                )));
            }
            make_set(&[(bottom(y0), y0), (ybar, ybar)])
        }
        DelegationForm::Singleton { y } => Ok(DelegationSet::singleton(y)),
    }
}

/// Maps a point of the unit box to a family member, or `None` where the
/// family is empty.
fn form_at(setting: &DecisionSetting, family: Family, u: &[f64]) -> Option<DelegationForm> {
    let ya0 = setting.y_a0();
    match family {
        Family::Interval => {
            let yp0 = setting.y_p0();
            (ya0 > yp0).then(|| DelegationForm::Interval {
                y0: yp0 + u[0] * (ya0 - yp0),
            })
        }
        Family::Hollow => {
            let reach = ya0 - setting.ya_lo();
            if reach <= 0.0 {
                return None;
            }
            let y0 = ya0 - u[0] * reach;
            let y1 = ex_ante_conjugate(setting, y0).ok()?;
            let cap = y1.max(setting.ya_hi());
            Some(DelegationForm::Hollow {
                y0,
                y1,
                y2: y1 + u[1] * (cap - y1),
            })
        }
        Family::HighPoint => {
            let start = setting.ya_lo().min(ya0);
            if ya0 <= start {
                return None;
            }
            let y0 = start + u[0] * (ya0 - start);
            let lower = setting.ya_hi().max(ex_ante_conjugate(setting, y0).ok()?);
            let (_, top) = setting.support();
            let upper = theta_conjugate(setting, top, y0).ok()?;
            (upper > lower).then(|| DelegationForm::HighPoint {
                y0,
                ybar: lower + u[1] * (upper - lower),
            })
        }
    }
}

fn value_at(setting: &DecisionSetting, cost: &CostModel, family: Family, u: &[f64]) -> f64 {
    form_at(setting, family, u)
        .and_then(|form| realize(setting, &form).ok())
        .map_or(f64::NEG_INFINITY, |d| evaluate(setting, cost, &d).u_total)
}

/// Best member of one family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyBest {
    pub family: Family,
    pub form: DelegationForm,
    pub set: DelegationSet,
    pub evaluation: Evaluation,
    /// Location in the family's unit parameter box.
    pub unit: Vec<f64>,
}

/// Coordinate-wise golden-section ascent, each step bracketed to one grid
/// cell around the current point.
fn refine(f: &(dyn Fn(&[f64]) -> f64 + Sync), start: Vec<f64>, cell: f64) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = f(&x);
    for _ in 0..100 {
        let mut moved: f64 = 0.0;
        for d in 0..x.len() {
            let lo = (x[d] - cell).max(0.0);
            let hi = (x[d] + cell).min(1.0);
            let (xd, v) = golden_max(
                |t| {
                    let mut probe = x.clone();
                    probe[d] = t;
                    f(&probe)
                },
                lo,
                hi,
                1e-10,
            );
            if v > fx {
                moved = moved.max((xd - x[d]).abs());
                x[d] = xd;
                fx = v;
            }
        }
        if moved < PARAM_TOL {
            break;
        }
    }
    (x, fx)
}

/// Grid search over the family's unit box followed by local refinement of
/// the best few grid maxima. `None` when the family is empty.
pub fn optimize_family(
    setting: &DecisionSetting,
    cost: &CostModel,
    family: Family,
    grid_n: usize,
) -> Option<FamilyBest> {
    let n = grid_n.max(2);
    let axis = linspace(0.0, 1.0, n);
    let dims = family.dims();
    let total = n.pow(dims as u32);
    let point = |k: usize| -> Vec<f64> {
        match dims {
            1 => vec![axis[k]],
            _ => vec![axis[k / n], axis[k % n]],
        }
    };
    let f = |u: &[f64]| value_at(setting, cost, family, u);
    let values: Vec<f64> = (0..total).into_par_iter().map(|k| f(&point(k))).collect();

    let neighbors = |k: usize| -> Vec<usize> {
        let mut out = Vec::new();
        if dims == 1 {
            if k > 0 {
                out.push(k - 1);
            }
            if k + 1 < n {
                out.push(k + 1);
            }
        } else {
            let (i, j) = ((k / n) as isize, (k % n) as isize);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if (di, dj) != (0, 0) && a >= 0 && b >= 0 && a < n as isize && b < n as isize {
                        out.push(a as usize * n + b as usize);
                    }
                }
            }
        }
        out
    };
    let mut starts: Vec<usize> = (0..total)
        .filter(|&k| values[k].is_finite() && neighbors(k).iter().all(|&m| values[m] <= values[k]))
        .collect();
    if starts.is_empty() {
        return None;
    }
    starts.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    starts.truncate(REFINE_STARTS);

    let cell = 1.0 / (n - 1) as f64;
    let refined: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|&k| refine(&f, point(k), cell))
        .collect();
    let (unit, _) = refined
        .into_iter()
        .fold(None::<(Vec<f64>, f64)>, |best, cand| match best {
            Some(b) if b.1 >= cand.1 => Some(b),
            _ => Some(cand),
        })?;
    let form = form_at(setting, family, &unit)?;
    let set = realize(setting, &form).ok()?;
    let evaluation = evaluate(setting, cost, &set);
    Some(FamilyBest {
        family,
        form,
        set,
        evaluation,
        unit,
    })
}

/// Regime indicators for a setting and cost.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeFlags {
    /// `E[θ + b(θ)] <= θ̂ + b(θ̂)`.
    pub low_bias: bool,
    /// `u_P1({y_P0}) >= u_P1([y_A(θ̲), y_A0])`.
    pub very_high_bias: bool,
    /// Smallest sampled `-ê''/ê'` over returns in `(0, 1]`.
    pub min_arrow_pratt: f64,
}

pub fn regime_flags(setting: &DecisionSetting, cost: &CostModel) -> RegimeFlags {
    let low_bias = informed_benchmark(setting)
        .map(|b| setting.mean_effective() <= setting.bias().effective(b.theta_hat))
        .unwrap_or(false);
    let single = informed_payoff(setting, &DelegationSet::singleton(setting.y_p0()));
    let full = informed_payoff(
        setting,
        &DelegationSet::interval(setting.ya_lo().min(setting.y_a0()), setting.y_a0()),
    );
    let min_arrow_pratt = (0..=240)
        .map(|i| 10f64.powf(-6.0 + 6.0 * i as f64 / 240.0))
        .filter_map(|x| arrow_pratt(cost, x).ok())
        .fold(f64::INFINITY, f64::min);
    RegimeFlags {
        low_bias,
        very_high_bias: single >= full,
        min_arrow_pratt,
    }
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub form: FormLabel,
    pub best_form: DelegationForm,
    pub best_set: DelegationSet,
    pub evaluation: Evaluation,
    pub per_family_best: Vec<FamilyBest>,
    pub regime_flags: RegimeFlags,
}

impl SolveResult {
    /// `(y0, y1, y2_or_ybar)` with `NaN` for absent parameters.
    pub fn parameters(&self) -> (f64, f64, f64) {
        match self.best_form {
            DelegationForm::Interval { y0 } => (y0, f64::NAN, f64::NAN),
            DelegationForm::Hollow { y0, y1, y2 } => (y0, y1, y2),
            DelegationForm::HighPoint { y0, ybar } => (y0, f64::NAN, ybar),
            DelegationForm::Singleton { y } => (y, f64::NAN, f64::NAN),
        }
    }

    pub fn family_value(&self, family: Family) -> Option<f64> {
        self.per_family_best
            .iter()
            .find(|b| b.family == family)
            .map(|b| b.evaluation.u_total)
    }
}

/// Shape label of a family optimum.
pub fn classify(setting: &DecisionSetting, best: &FamilyBest) -> FormLabel {
    match best.form {
        DelegationForm::Interval { .. } => FormLabel::Interval,
        DelegationForm::Singleton { .. } => FormLabel::Singleton,
        DelegationForm::Hollow { y0, y1, y2 } => {
            if y1 - y0 < SINGLETON_WIDTH {
                FormLabel::Interval
            } else if y2 - y1 < SINGLETON_WIDTH {
                FormLabel::HollowSingleton
            } else {
                FormLabel::Hollow
            }
        }
        DelegationForm::HighPoint { y0, ybar } => {
            let gap = setting.ex_ante_agent(y0) - setting.ex_ante_agent(ybar);
            if setting.report_difference(gap) > STRICT_PREFERENCE {
                FormLabel::HighPoint
            } else {
                FormLabel::HollowSingleton
            }
        }
    }
}

/// Optimal delegation set over the three families and the `{y_P0}` guard.
/// Ties go to the earlier of interval, hollow, high point.
pub fn solve(setting: &DecisionSetting, cost: &CostModel, grid_n: usize) -> Result<SolveResult> {
    let report = check_assumptions(setting, DEFAULT_CHECK_GRID)?;
    if !report.all_passed() {
        return Err(Error::Assumption(format!(
            "assumptions {} fail",
            report.failures().join(", ")
        )));
    }
    Ok(solve_unchecked(setting, cost, grid_n))
}

/// [`solve`] without the assumption check.
pub fn solve_unchecked(setting: &DecisionSetting, cost: &CostModel, grid_n: usize) -> SolveResult {
    let per_family_best: Vec<FamilyBest> = Family::ALL
        .par_iter()
        .map(|&fam| optimize_family(setting, cost, fam, grid_n))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let guard_set = DelegationSet::singleton(setting.y_p0());
    let guard = FamilyBest {
        family: Family::Interval,
        form: DelegationForm::Singleton { y: setting.y_p0() },
        evaluation: evaluate(setting, cost, &guard_set),
        set: guard_set,
        unit: Vec::new(),
    };
    let mut best = &guard;
    for cand in &per_family_best {
        if cand.evaluation.u_total > best.evaluation.u_total + VALUE_TIE
            || (matches!(best.form, DelegationForm::Singleton { .. })
                && cand.evaluation.u_total >= best.evaluation.u_total - VALUE_TIE)
        {
            best = cand;
        }
    }
    SolveResult {
        form: classify(setting, best),
        best_form: best.form,
        best_set: best.set.clone(),
        evaluation: best.evaluation.clone(),
        regime_flags: regime_flags(setting, cost),
        per_family_best,
    }
}

/// One cell of a regime map.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub beta: f64,
    pub kappa: f64,
    pub form: FormLabel,
    pub y0: f64,
    pub y1: f64,
    pub y2_or_ybar: f64,
    pub u_total: f64,
    pub effort: f64,
    pub u_p0: f64,
}

impl RegimeRow {
    pub const CSV_HEADER: &'static str = "beta,kappa,form,y0,y1,y2_or_ybar,U_P,effort";

    pub fn csv_line(&self) -> String {
        let f = |x: f64| {
            if x.is_nan() {
                String::new()
            } else {
                fmt_sig(x, 10)
            }
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            f(self.beta),
            f(self.kappa),
            self.form,
            f(self.y0),
            f(self.y1),
            f(self.y2_or_ybar),
            f(self.u_total),
            f(self.effort)
        )
    }
}

/// Solves the uniform/quadratic/constant-bias setting with exponential
/// costs on every `(β, κ)` cell, in parallel, rows ordered β-major.
pub fn regime_map(betas: &[f64], kappas: &[f64], grid_n: usize) -> Result<Vec<RegimeRow>> {
    let cells: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| kappas.iter().map(move |&k| (b, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(beta, kappa)| {
            let setting = DecisionSetting::uqc(beta)?;
            let cost = CostModel::szalay(kappa)?;
            let r = solve(&setting, &cost, grid_n)?;
            let (y0, y1, y2) = r.parameters();
            Ok(RegimeRow {
                beta,
                kappa,
                form: r.form,
                y0,
                y1,
                y2_or_ybar: y2,
                u_total: r.evaluation.u_total,
                effort: r.evaluation.agent.effort,
                u_p0: r.evaluation.u_p0,
            })
        })
        .collect()
}

/// The regime map as CSV text.
pub fn regime_csv(rows: &[RegimeRow]) -> String {
    let mut out = String::from(RegimeRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uqc(beta: f64) -> DecisionSetting {
        DecisionSetting::uqc(beta).unwrap()
    }

    #[test]
    fn realize_examples() {
        let s = uqc(0.3);
        let y1 = ex_ante_conjugate(&s, 0.5).unwrap();
        let d = realize(
            &s,
            &DelegationForm::Hollow {
                y0: 0.5,
                y1,
                y2: 1.2,
            },
        )
        .unwrap();
        assert_eq!(d.intervals().len(), 2);
        assert!((d.intervals()[1][0] - 1.1).abs() < 1e-14);
        let d = realize(&s, &DelegationForm::Interval { y0: 0.7 }).unwrap();
        assert_eq!(d.intervals(), &[[0.3, 0.7]]);
        let d = realize(&s, &DelegationForm::HighPoint { y0: 0.5, ybar: 1.6 }).unwrap();
        assert_eq!(d.intervals(), &[[0.3, 0.5], [1.6, 1.6]]);
    }

    #[test]
    fn realize_rejects_broken_forms() {
        let s = uqc(0.3);
        assert!(matches!(
            realize(
                &s,
                &DelegationForm::Hollow {
                    y0: 0.5,
                    y1: 1.0,
                    y2: 1.2
                }
            ),
            Err(Error::Form(_))
        ));
        assert!(realize(&s, &DelegationForm::Interval { y0: 0.9 }).is_err());
        assert!(realize(
            &s,
            &DelegationForm::HighPoint {
                y0: 0.5,
                ybar: 1.05
            }
        )
        .is_err());
    }

    #[test]
    fn interval_family_interior_optimum() {
        let s = uqc(0.45);
        let cost = CostModel::szalay(0.05).unwrap();
        let best = optimize_family(&s, &cost, Family::Interval, 200).unwrap();
        let DelegationForm::Interval { y0 } = best.form else {
            panic!("{:?}", best.form)
        };
        assert!(y0 > 0.5 && y0 < 0.95);
        // 1D scan oracle.
        let scan = linspace(0.5, 0.95, 4501)
            .into_iter()
            .map(|y| evaluate(&s, &cost, &DelegationSet::interval(0.45, y)).u_total)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(best.evaluation.u_total >= scan - 1e-9);
        assert!(best.evaluation.u_total - scan < 1e-6);
    }

    #[test]
    fn hollow_family_top_above_benchmark_cap() {
        let s = uqc(0.1);
        let cost = CostModel::szalay(0.02).unwrap();
        let best = optimize_family(&s, &cost, Family::Hollow, 200).unwrap();
        let DelegationForm::Hollow { y2, .. } = best.form else {
            panic!()
        };
        assert!(y2 > 0.9);
    }

    #[test]
    fn high_point_box_spans_conjugates() {
        let s = uqc(0.3);
        let Some(DelegationForm::HighPoint { y0, ybar }) =
            form_at(&s, Family::HighPoint, &[0.2, 0.0])
        else {
            panic!()
        };
        assert!((y0 - 0.4).abs() < 1e-12);
        assert!((ybar - 1.2f64.max(1.3)).abs() < 1e-12);
        let Some(DelegationForm::HighPoint { ybar, .. }) =
            form_at(&s, Family::HighPoint, &[0.2, 1.0])
        else {
            panic!()
        };
        assert!((ybar - 2.2).abs() < 1e-12);
    }

    #[test]
    fn solve_landmarks() {
        let r = solve(&uqc(0.1), &CostModel::szalay(0.02).unwrap(), 200).unwrap();
        assert!(r.form.is_hollow(), "{:?}", r.form);
        let r = solve(&uqc(0.45), &CostModel::szalay(0.05).unwrap(), 200).unwrap();
        assert!(matches!(r.form, FormLabel::Interval | FormLabel::HighPoint));
        let r = solve(&uqc(0.3), &CostModel::szalay(1e-4).unwrap(), 200).unwrap();
        assert_eq!(r.form, FormLabel::Interval);
        assert!(solve(&uqc(0.6), &CostModel::szalay(0.05).unwrap(), 20).is_err());
    }

    #[test]
    fn csv_format() {
        let row = RegimeRow {
            beta: 0.15,
            kappa: 0.05,
            form: FormLabel::Hollow,
            y0: 1.0 / 3.0,
            y1: 0.9,
            y2_or_ybar: f64::NAN,
            u_total: -0.05,
            effort: 0.5,
            u_p0: -0.1,
        };
        assert_eq!(
            row.csv_line(),
            "0.15,0.05,hollow,0.3333333333,0.9,,-0.05,0.5"
        );
    }
}
