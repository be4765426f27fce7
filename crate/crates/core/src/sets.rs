//! Compact delegation sets as finite unions of closed intervals, plus the
//! geometric primitives built on them: gaps, conjugates and minimality.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DecisionSetting;

/// Two decisions closer than this are the same decision.
pub const EPS_MERGE: f64 = 1e-9;
/// Conjugate root-finding tolerance on decision values.
pub const CONJUGATE_TOL: f64 = 1e-12;

/// A nonempty, sorted union of disjoint closed intervals. Points are stored
/// as degenerate intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet")]
pub struct DelegationSet {
    intervals: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct RawSet {
    intervals: Vec<[f64; 2]>,
}

impl TryFrom<RawSet> for DelegationSet {
    type Error = Error;

    fn try_from(raw: RawSet) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = raw.intervals.iter().map(|p| (p[0], p[1])).collect();
        make_set(&pairs)
    }
}

impl fmt::Display for DelegationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|[a, b]| {
                if a == b {
                    format!("{{{a}}}")
                } else {
                    format!("[{a}, {b}]")
                }
            })
            .collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

/// Sorts and merges raw intervals into canonical form.
pub fn make_set(raw: &[(f64, f64)]) -> Result<DelegationSet> {
    if raw.is_empty() {
        return Err(Error::Validation("delegation set must be nonempty".into()));
    }
    let mut v = Vec::with_capacity(raw.len());
    for &(a, b) in raw {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Validation(format!("non-finite interval [{a}, {b}]")));
        }
        if a > b {
            return Err(Error::Validation(format!(
                "interval [{a}, {b}] has lo > hi"
            )));
        }
        v.push([a, b]);
    }
    v.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv[0] <= last[1] + EPS_MERGE => last[1] = last[1].max(iv[1]),
            _ => out.push(iv),
        }
    }
    Ok(DelegationSet { intervals: out })
}

impl DelegationSet {
    pub fn new(raw: &[(f64, f64)]) -> Result<Self> {
        make_set(raw)
    }

    pub fn singleton(y: f64) -> Self {
        Self {
            intervals: vec![[y, y]],
        }
    }

    /// `[lo, hi]`; a reversed pair becomes the singleton `{lo}`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            intervals: vec![[lo, hi.max(lo)]],
        }
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn min(&self) -> f64 {
        self.intervals[0][0]
    }

    pub fn max(&self) -> f64 {
        self.intervals[self.intervals.len() - 1][1]
    }

    pub fn is_singleton(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0][0] == self.intervals[0][1]
    }

    pub fn contains(&self, y: f64) -> bool {
        self.intervals.iter().any(|[a, b]| *a <= y && y <= *b)
    }

    /// `D ∩ [lo, hi]`, or `None` when empty.
    pub fn clip(&self, lo: f64, hi: f64) -> Option<Self> {
        let intervals: Vec<[f64; 2]> = self
            .intervals
            .iter()
            .filter(|[a, b]| *b >= lo && *a <= hi)
            .map(|[a, b]| [a.max(lo), b.min(hi)])
            .collect();
        (!intervals.is_empty()).then_some(Self { intervals })
    }

    /// The points of `D` that can maximize a single-peaked objective with
    /// peak `y`: `y` itself if it lies in `D`, otherwise the nearest member
    /// below and the nearest member above.
    pub fn candidates(&self, y: f64) -> Candidates {
        let iv = &self.intervals;
        let idx = iv.partition_point(|[a, _]| *a <= y);
        if idx == 0 {
            return Candidates::One(iv[0][0]);
        }
        let [a, b] = iv[idx - 1];
        if y <= b {
            return Candidates::One(y.max(a));
        }
        match iv.get(idx) {
            Some([next, _]) => Candidates::Two(b, *next),
            None => Candidates::One(b),
        }
    }
}

/// Result of [`DelegationSet::candidates`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Candidates {
    One(f64),
    Two(f64, f64),
}

impl Candidates {
    pub fn as_slice(&self) -> Vec<f64> {
        match *self {
            Candidates::One(y) => vec![y],
            Candidates::Two(a, b) => vec![a, b],
        }
    }
}

/// A maximal gap: `d1 < d2` both in `D`, `(d1, d2)` disjoint from `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub d1: f64,
    pub d2: f64,
}

pub fn gaps(d: &DelegationSet) -> Vec<Gap> {
    d.intervals
        .windows(2)
        .map(|w| Gap {
            d1: w[0][1],
            d2: w[1][0],
        })
        .collect()
}

/// The decision `y' != y` the agent values equally with `y` at effective
/// state `level`; `y` itself at the peak.
pub fn conjugate_at_level(setting: &DecisionSetting, level: f64, y: f64) -> Result<f64> {
    let (wlo, whi) = setting.working_range();
    if !setting.in_working_range(y) {
        return Err(Error::OutOfRange(y, wlo, whi));
    }
    let kernel = setting.kernel();
    let peak = kernel
        .decision_for_level(level)
        .ok_or_else(|| Error::Config(format!("no favorite decision at level {level}")))?;
    if (y - peak).abs() <= 1e-10 {
        return Ok(y);
    }
    let out = if kernel.is_quadratic() {
        2.0 * peak - y
    } else {
        let target = kernel.utility(y, level);
        let g = |x: f64| kernel.utility(x, level) - target;
        let dir = if y < peak { 1.0 } else { -1.0 };
        let mut step = (peak - y).abs().max(1e-6);
        let mut far = peak + dir * step;
        while g(far) > 0.0 {
            if !setting.in_working_range(far) {
                return Err(Error::OutOfRange(far, wlo, whi));
            }
            step *= 2.0;
            far = peak + dir * step;
        }
        let (a, b) = if dir > 0.0 { (peak, far) } else { (far, peak) };
        crate::numeric::bisect(g, a, b, CONJUGATE_TOL, 200)
            .ok_or_else(|| Error::Domain(format!("conjugate of {y} not bracketed")))?
    };
    if !setting.in_working_range(out) {
        return Err(Error::OutOfRange(out, wlo, whi));
    }
    Ok(out)
}

/// The θ-conjugate of `y`: equal agent utility in state θ.
pub fn theta_conjugate(setting: &DecisionSetting, theta: f64, y: f64) -> Result<f64> {
    conjugate_at_level(setting, setting.bias().effective(theta), y)
}

/// The ex ante conjugate of `y`: equal expected agent utility.
pub fn ex_ante_conjugate(setting: &DecisionSetting, y: f64) -> Result<f64> {
    conjugate_at_level(setting, setting.mean_effective(), y)
}

/// Best decision in `D` for an agent at effective state `level`; ties go
/// to the largest (`prefer_high`) or smallest maximizer.
fn agent_pick(setting: &DecisionSetting, d: &DelegationSet, level: f64, prefer_high: bool) -> f64 {
    let kernel = setting.kernel();
    let peak = kernel.decision_for_level(level).unwrap_or(f64::NAN);
    match d.candidates(peak) {
        Candidates::One(y) => y,
        Candidates::Two(a, b) => {
            let ua = kernel.utility(a, level);
            let ub = kernel.utility(b, level);
            if (ua - ub).abs() <= crate::agent::EPS_TIE {
                if prefer_high {
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

/// `D ∩ [y_lo, y_hi]` where `y_lo` is the largest agent-optimal decision in
/// the lowest state and `y_hi` the smallest in the highest state. Decisions
/// outside that range are never chosen by an informed agent.
pub fn minimalize(setting: &DecisionSetting, d: &DelegationSet) -> DelegationSet {
    let (lo, hi) = setting.support();
    let bias = setting.bias();
    let y_lo = agent_pick(setting, d, bias.effective(lo), true);
    let y_hi = agent_pick(setting, d, bias.effective(hi), false);
    d.clip(y_lo, y_hi.max(y_lo))
        .unwrap_or_else(|| DelegationSet::singleton(y_lo))
}
