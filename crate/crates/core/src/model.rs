//! The decision environment: state distribution, payoff kernel and bias.
//!
//! Utilities are `u_P(y, θ) = θ·y + a(y)` for the principal and
//! `u_A(y, θ) = (θ + b(θ))·y + a(y)` for the agent. Both are the same
//! function of the decision and an *effective state*: θ for the principal
//! and `s(θ) = θ + b(θ)` for the agent. Most of the crate works with that
//! shared form through [`PayoffKernel::utility`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{bisect, linspace, solve_increasing, Quadrature};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid size used by constructor validation and assumption checks.
pub const DEFAULT_CHECK_GRID: usize = 2001;
/// Settings with `min(1 + b') < MIN_BIAS_SLOPE` are rejected.
pub const MIN_BIAS_SLOPE: f64 = 1e-6;

const FAVORITE_TOL: f64 = 1e-14;
const ROOT_LIMIT: f64 = 1e6;

fn arc(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

/// Distribution of the state on a bounded support.
#[derive(Clone)]
pub struct StateDistribution {
    lo: f64,
    hi: f64,
    cdf: RealFn,
    pdf: RealFn,
    pdf_prime: Option<RealFn>,
    poly_degree: Option<usize>,
    label: String,
}

impl fmt::Debug for StateDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on [{}, {}]", self.label, self.lo, self.hi)
    }
}

impl StateDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "uniform support [{lo}, {hi}] is empty"
            )));
        }
        let w = hi - lo;
        Ok(Self {
            lo,
            hi,
            cdf: arc(move |t| ((t - lo) / w).clamp(0.0, 1.0)),
            pdf: arc(move |_| 1.0 / w),
            pdf_prime: Some(arc(|_| 0.0)),
            poly_degree: Some(0),
            label: "uniform".into(),
        })
    }

    /// `F(θ) = θ^k` on `[0, 1]`, `k >= 1`.
    pub fn power(k: f64) -> Result<Self> {
        if !(k >= 1.0) || !k.is_finite() {
            return Err(Error::Config(format!(
                "power distribution needs k >= 1 for a bounded density, got {k}"
            )));
        }
        let poly_degree = (k.fract() == 0.0 && k <= 14.0).then(|| k as usize - 1);
        Ok(Self {
            lo: 0.0,
            hi: 1.0,
            cdf: arc(move |t| t.clamp(0.0, 1.0).powf(k)),
            pdf: arc(move |t| k * t.clamp(0.0, 1.0).powf(k - 1.0)),
            pdf_prime: Some(arc(move |t| {
                if k == 1.0 {
                    0.0
                } else {
                    k * (k - 1.0) * t.clamp(0.0, 1.0).powf(k - 2.0)
                }
            })),
            poly_degree,
            label: format!("power(k={k})"),
        })
    }

    /// A user-supplied distribution; validated on a grid.
    pub fn custom(
        lo: f64,
        hi: f64,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        pdf_prime: Option<RealFn>,
    ) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Config(format!("support [{lo}, {hi}] is empty")));
        }
        let dist = Self {
            lo,
            hi,
            cdf: arc(cdf),
            pdf: arc(pdf),
            pdf_prime,
            poly_degree: None,
            label: "custom".into(),
        };
        dist.validate(DEFAULT_CHECK_GRID)?;
        Ok(dist)
    }

    /// Marks the density as a polynomial of the given degree, enabling
    /// single-panel exact integration.
    pub fn with_polynomial_degree(mut self, degree: usize) -> Self {
        self.poly_degree = Some(degree);
        self
    }

    /// Grid checks: density positive in the interior, CDF anchored and
    /// nondecreasing, density integrates to one.
    pub fn validate(&self, grid_n: usize) -> Result<()> {
        let grid = linspace(self.lo, self.hi, grid_n.max(3));
        let last = grid.len() - 1;
        let mut prev = f64::NEG_INFINITY;
        for (i, &t) in grid.iter().enumerate() {
            let f = self.pdf(t);
            if !f.is_finite() || f < 0.0 || (f <= 0.0 && i != 0 && i != last) {
                return Err(Error::Config(format!(
                    "density is not positive at {t}: {f}"
                )));
            }
            let c = self.cdf(t);
            if c < prev - 1e-14 {
                return Err(Error::Config(format!("cdf decreases at {t}")));
            }
            prev = c;
        }
        if self.cdf(self.lo).abs() > 1e-10 || (self.cdf(self.hi) - 1.0).abs() > 1e-10 {
            return Err(Error::Config(
                "cdf must run from 0 to 1 over the support".into(),
            ));
        }
        let mass = Quadrature::default().integrate(|t| self.pdf(t), self.lo, self.hi);
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Config(format!(
                "density integrates to {mass}, not 1"
            )));
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cdf(&self, t: f64) -> f64 {
        (self.cdf)(t)
    }

    pub fn pdf(&self, t: f64) -> f64 {
        (self.pdf)(t)
    }

    /// `f'(θ)`: analytic when supplied, otherwise a central difference with
    /// step `(θ̄ - θ̲)·1e-5` (one-sided at the support ends).
    pub fn pdf_prime(&self, t: f64) -> f64 {
        match &self.pdf_prime {
            Some(d) => d(t),
            None => finite_difference(|x| self.pdf(x), t, self.lo, self.hi),
        }
    }

    pub fn polynomial_degree(&self) -> Option<usize> {
        self.poly_degree
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Central difference clipped to `[lo, hi]`, one-sided at the ends.
pub(crate) fn finite_difference(g: impl Fn(f64) -> f64, t: f64, lo: f64, hi: f64) -> f64 {
    let h = (hi - lo) * 1e-5;
    if t - h < lo {
        (g(t + h) - g(t)) / h
    } else if t + h > hi {
        (g(t) - g(t - h)) / h
    } else {
        (g(t + h) - g(t - h)) / (2.0 * h)
    }
}

/// The agent's bias `b(θ)` together with its derivative.
#[derive(Clone)]
pub struct BiasFunction {
    b: RealFn,
    b_prime: RealFn,
    b_second: Option<RealFn>,
    affine: Option<(f64, f64)>,
    label: String,
}

impl fmt::Debug for BiasFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl BiasFunction {
    pub fn constant(beta: f64) -> Self {
        Self::affine(beta, 0.0)
    }

    /// `b(θ) = intercept + slope·θ`.
    pub fn affine(intercept: f64, slope: f64) -> Self {
        let label = if slope == 0.0 {
            format!("constant({intercept})")
        } else {
            format!("affine({intercept} + {slope}·θ)")
        };
        Self {
            b: arc(move |t| intercept + slope * t),
            b_prime: arc(move |_| slope),
            b_second: Some(arc(|_| 0.0)),
            affine: Some((intercept, slope)),
            label,
        }
    }

    pub fn custom(
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            b: arc(b),
            b_prime: arc(b_prime),
            b_second: None,
            affine: None,
            label: "custom".into(),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.b)(t)
    }

    pub fn slope(&self, t: f64) -> f64 {
        (self.b_prime)(t)
    }

    pub fn second(&self, t: f64) -> Option<f64> {
        self.b_second.as_ref().map(|d| d(t))
    }

    /// `θ + b(θ)`, the agent's effective state.
    pub fn effective(&self, t: f64) -> f64 {
        t + self.value(t)
    }

    /// `B(θ) = b(θ) / (1 + b'(θ))`.
    pub fn scaled(&self, t: f64) -> f64 {
        self.value(t) / (1.0 + self.slope(t))
    }

    /// Constant bias value, if the bias is constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.affine {
            Some((c, 0.0)) => Some(c),
            _ => None,
        }
    }

    pub fn as_affine(&self) -> Option<(f64, f64)> {
        self.affine
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Generic,
    QuadraticLoss,
}

/// The decision-only part `a(y)` of both utilities.
#[derive(Clone)]
pub struct PayoffKernel {
    a: RealFn,
    a_prime: RealFn,
    a_second: RealFn,
    marginal_inverse: Option<RealFn>,
    quadratic: bool,
    normalization: Normalization,
    label: String,
}

impl fmt::Debug for PayoffKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:?})", self.label, self.normalization)
    }
}

impl PayoffKernel {
    /// `a(y) = -y²/2`, utilities reported as quadratic losses.
    pub fn quadratic_loss() -> Self {
        Self {
            normalization: Normalization::QuadraticLoss,
            ..Self::quadratic()
        }
    }

    /// `a(y) = -y²/2`, utilities reported in generic units.
    pub fn quadratic() -> Self {
        Self {
            a: arc(|y| -0.5 * y * y),
            a_prime: arc(|y| -y),
            a_second: arc(|_| -1.0),
            marginal_inverse: Some(arc(|t| t)),
            quadratic: true,
            normalization: Normalization::Generic,
            label: "quadratic".into(),
        }
    }

    /// `a(y) = -|y|^p / p` for `p > 1`, generic units.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::Config(format!("power kernel needs p > 1, got {p}")));
        }
        if p == 2.0 {
            return Ok(Self::quadratic());
        }
        let q = 1.0 / (p - 1.0);
        Ok(Self {
            a: arc(move |y: f64| -y.abs().powf(p) / p),
            a_prime: arc(move |y: f64| -y.signum() * y.abs().powf(p - 1.0)),
            a_second: arc(move |y: f64| -(p - 1.0) * y.abs().powf(p - 2.0)),
            marginal_inverse: Some(arc(move |t: f64| t.signum() * t.abs().powf(q))),
            quadratic: false,
            normalization: Normalization::Generic,
            label: format!("power(p={p})"),
        })
    }

    pub fn custom(
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            a: arc(a),
            a_prime: arc(a_prime),
            a_second: arc(a_second),
            marginal_inverse: None,
            quadratic: false,
            normalization: Normalization::Generic,
            label: "custom".into(),
        }
    }

    /// Same kernel reported in generic units.
    pub fn generic(mut self) -> Self {
        self.normalization = Normalization::Generic;
        self
    }

    pub fn a(&self, y: f64) -> f64 {
        (self.a)(y)
    }

    pub fn a_prime(&self, y: f64) -> f64 {
        (self.a_prime)(y)
    }

    pub fn a_second(&self, y: f64) -> f64 {
        (self.a_second)(y)
    }

    /// Generic utility `level·y + a(y)` of decision `y` at effective state
    /// `level`.
    pub fn utility(&self, y: f64, level: f64) -> f64 {
        level * y + self.a(y)
    }

    /// The effective state at which `y` is the favorite decision, `-a'(y)`.
    pub fn level_of(&self, y: f64) -> f64 {
        -self.a_prime(y)
    }

    /// The decision `y` solving `-a'(y) = level`.
    pub fn decision_for_level(&self, level: f64) -> Option<f64> {
        match &self.marginal_inverse {
            Some(inv) => Some(inv(level)),
            None => solve_increasing(|y| self.level_of(y), level, 0.0, ROOT_LIMIT, FAVORITE_TOL),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        self.quadratic
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Player {
    Principal,
    Agent,
}

/// A fully specified decision environment `(F, a, b)` with its derived
/// favorite decisions and moments.
#[derive(Clone)]
pub struct DecisionSetting {
    dist: StateDistribution,
    kernel: PayoffKernel,
    bias: BiasFunction,
    quad: Quadrature,
    polynomial: bool,
    mean_state: f64,
    mean_effective: f64,
    second_state: f64,
    second_effective: f64,
    y_p0: f64,
    y_a0: f64,
    theta_a: f64,
    working: (f64, f64),
    ya_lo: f64,
    ya_hi: f64,
}

impl fmt::Debug for DecisionSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecisionSetting")
            .field("dist", &self.dist)
            .field("kernel", &self.kernel)
            .field("bias", &self.bias)
            .field("y_P0", &self.y_p0)
            .field("y_A0", &self.y_a0)
            .finish()
    }
}

impl DecisionSetting {
    pub fn new(dist: StateDistribution, kernel: PayoffKernel, bias: BiasFunction) -> Result<Self> {
        Self::with_quadrature(dist, kernel, bias, Quadrature::default())
    }

    pub fn with_quadrature(
        dist: StateDistribution,
        kernel: PayoffKernel,
        bias: BiasFunction,
        quad: Quadrature,
    ) -> Result<Self> {
        if kernel.normalization == Normalization::QuadraticLoss && !kernel.quadratic {
            return Err(Error::Config(
                "quadratic-loss normalization requires a(y) = -y²/2".into(),
            ));
        }
        let (lo, hi) = dist.support();
        let grid = linspace(lo, hi, DEFAULT_CHECK_GRID);
        let (worst_t, worst) =
            grid.iter()
                .map(|&t| (t, 1.0 + bias.slope(t)))
                .fold(
                    (lo, f64::INFINITY),
                    |acc, x| if x.1 < acc.1 { x } else { acc },
                );
        if !(worst >= MIN_BIAS_SLOPE) {
            return Err(Error::Config(format!(
                "1 + b'(θ) = {worst} at θ = {worst_t}; must stay above {MIN_BIAS_SLOPE}"
            )));
        }

        let polynomial = kernel.quadratic
            && bias.affine.is_some()
            && dist
                .poly_degree
                .is_some_and(|d| 2 + d <= quad.exact_degree());

        let k = kernel.clone();
        let favorite = move |level: f64, what: &str| -> Result<f64> {
            k.decision_for_level(level)
                .filter(|y| y.is_finite())
                .ok_or_else(|| {
                    Error::Config(format!(
                        "range condition violated: -a'(y) never reaches {level} ({what})"
                    ))
                })
        };
        let yp_lo = favorite(lo, "y_P at the lowest state")?;
        let yp_hi = favorite(hi, "y_P at the highest state")?;
        let ya_lo = favorite(bias.effective(lo), "y_A at the lowest state")?;
        let ya_hi = favorite(bias.effective(hi), "y_A at the highest state")?;
        let bottom = yp_lo.min(ya_lo);
        let top = ya_hi.max(yp_hi);
        let span = (top - bottom).max(1e-9);
        let working = (bottom - span, top + 2.0 * span);

        let mut setting = Self {
            dist,
            kernel,
            bias,
            quad,
            polynomial,
            mean_state: 0.0,
            mean_effective: 0.0,
            second_state: 0.0,
            second_effective: 0.0,
            y_p0: 0.0,
            y_a0: 0.0,
            theta_a: 0.0,
            working,
            ya_lo,
            ya_hi,
        };
        setting.mean_state = setting.expectation_smooth(|t| t);
        setting.mean_effective = setting.expectation_smooth(|t| setting.bias.effective(t));
        setting.second_state = setting.expectation_smooth(|t| t * t);
        setting.second_effective =
            setting.expectation_smooth(|t| setting.bias.effective(t).powi(2));
        setting.y_p0 = favorite(setting.mean_state, "ex ante principal favorite")?;
        setting.y_a0 = favorite(setting.mean_effective, "ex ante agent favorite")?;
        setting.theta_a = setting.state_for_level(setting.mean_effective);

        for y in linspace(working.0, working.1, 401) {
            let c = setting.kernel.a_second(y);
            if !(c <= 0.0) {
                return Err(Error::Config(format!("a''({y}) = {c} is not concave")));
            }
        }
        Ok(setting)
    }

    /// Uniform state on `[0, 1]`, quadratic losses, constant bias `beta`.
    pub fn uqc(beta: f64) -> Result<Self> {
        Self::new(
            StateDistribution::uniform(0.0, 1.0)?,
            PayoffKernel::quadratic_loss(),
            BiasFunction::constant(beta),
        )
    }

    /// [`DecisionSetting::uqc`] in generic units.
    pub fn uqc_generic(beta: f64) -> Result<Self> {
        Self::new(
            StateDistribution::uniform(0.0, 1.0)?,
            PayoffKernel::quadratic(),
            BiasFunction::constant(beta),
        )
    }

    /// Same environment with a different bias.
    pub fn with_bias(&self, bias: BiasFunction) -> Result<Self> {
        Self::with_quadrature(
            self.dist.clone(),
            self.kernel.clone(),
            bias,
            self.quad.clone(),
        )
    }

    pub fn dist(&self) -> &StateDistribution {
        &self.dist
    }

    pub fn kernel(&self) -> &PayoffKernel {
        &self.kernel
    }

    pub fn bias(&self) -> &BiasFunction {
        &self.bias
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn normalization(&self) -> Normalization {
        self.kernel.normalization
    }

    /// Whether all state integrands are piecewise polynomials that one
    /// Gauss–Legendre panel integrates exactly.
    pub fn is_polynomial(&self) -> bool {
        self.polynomial
    }

    pub fn support(&self) -> (f64, f64) {
        self.dist.support()
    }

    pub fn mean_state(&self) -> f64 {
        self.mean_state
    }

    /// `E[θ + b(θ)]`.
    pub fn mean_effective(&self) -> f64 {
        self.mean_effective
    }

    pub fn y_p0(&self) -> f64 {
        self.y_p0
    }

    pub fn y_a0(&self) -> f64 {
        self.y_a0
    }

    /// The state with `θ_A + b(θ_A) = E[θ + b(θ)]`.
    pub fn theta_a(&self) -> f64 {
        self.theta_a
    }

    /// `y_A(θ̲)`.
    pub fn ya_lo(&self) -> f64 {
        self.ya_lo
    }

    /// `y_A(θ̄)`.
    pub fn ya_hi(&self) -> f64 {
        self.ya_hi
    }

    pub fn working_range(&self) -> (f64, f64) {
        self.working
    }

    pub fn in_working_range(&self, y: f64) -> bool {
        y >= self.working.0 - 1e-12 && y <= self.working.1 + 1e-12
    }

    /// Principal's generic utility.
    pub fn u_principal(&self, y: f64, t: f64) -> f64 {
        self.kernel.utility(y, t)
    }

    /// Agent's generic utility.
    pub fn u_agent(&self, y: f64, t: f64) -> f64 {
        self.kernel.utility(y, self.bias.effective(t))
    }

    /// `E[u_A(y, θ)]` in generic units.
    pub fn ex_ante_agent(&self, y: f64) -> f64 {
        self.kernel.utility(y, self.mean_effective)
    }

    /// `E[u_P(y, θ)]` in generic units.
    pub fn ex_ante_principal(&self, y: f64) -> f64 {
        self.kernel.utility(y, self.mean_state)
    }

    /// `y_A(θ)`.
    pub fn agent_favorite(&self, t: f64) -> f64 {
        self.decision_for_level(self.bias.effective(t))
    }

    /// `y_P(θ)`.
    pub fn principal_favorite(&self, t: f64) -> f64 {
        self.decision_for_level(t)
    }

    fn decision_for_level(&self, level: f64) -> f64 {
        self.kernel.decision_for_level(level).unwrap_or(f64::NAN)
    }

    /// The state whose agent effective state equals `level`, clamped to the
    /// support.
    pub fn state_for_level(&self, level: f64) -> f64 {
        let (lo, hi) = self.support();
        if level <= self.bias.effective(lo) {
            return lo;
        }
        if level >= self.bias.effective(hi) {
            return hi;
        }
        if let Some((c, s)) = self.bias.affine {
            return ((level - c) / (1.0 + s)).clamp(lo, hi);
        }
        bisect(|t| self.bias.effective(t) - level, lo, hi, 1e-14, 200).unwrap_or(lo)
    }

    /// `y_A^{-1}(y)` clamped to the support.
    pub fn agent_type_of(&self, y: f64) -> f64 {
        self.state_for_level(self.kernel.level_of(y))
    }

    /// `∫_a^b g(θ) f(θ) dθ`. When the setting is polynomial, `g` must be a
    /// polynomial in θ of degree at most 2 (as every payoff integrand is).
    pub fn integrate_piece(&self, g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let h = |t: f64| g(t) * self.dist.pdf(t);
        if self.polynomial {
            self.quad.integrate_poly(h, a, b)
        } else {
            let (lo, hi) = self.support();
            self.quad.integrate_piece(h, a, b, hi - lo)
        }
    }

    fn expectation_smooth(&self, g: impl Fn(f64) -> f64) -> f64 {
        let (lo, hi) = self.support();
        self.quad.integrate(|t| g(t) * self.dist.pdf(t), lo, hi)
    }

    /// `E[g(θ)]` by composite Gauss–Legendre quadrature.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let (lo, hi) = self.support();
        let bad = std::cell::Cell::new(None);
        let v = self.quad.integrate(
            |t| {
                let x = g(t);
                if !x.is_finite() && bad.get().is_none() {
                    bad.set(Some((t, x)));
                }
                x * self.dist.pdf(t)
            },
            lo,
            hi,
        );
        match bad.get() {
            Some((at, value)) => Err(Error::NonFinite { at, value }),
            None => Ok(v),
        }
    }

    /// Converts a generic principal payoff into reported units.
    pub fn report_principal(&self, generic: f64) -> f64 {
        match self.normalization() {
            Normalization::Generic => generic,
            Normalization::QuadraticLoss => 2.0 * generic - self.second_state,
        }
    }

    /// Converts a generic agent payoff into reported units.
    pub fn report_agent(&self, generic: f64) -> f64 {
        match self.normalization() {
            Normalization::Generic => generic,
            Normalization::QuadraticLoss => 2.0 * generic - self.second_effective,
        }
    }

    /// Converts a generic payoff *difference* into reported units.
    pub fn report_difference(&self, generic: f64) -> f64 {
        match self.normalization() {
            Normalization::Generic => generic,
            Normalization::QuadraticLoss => 2.0 * generic,
        }
    }

    /// `(B f)'(θ)`: analytic when the bias curvature and density slope are
    /// known, else a finite difference (one-sided at the support ends).
    pub fn scaled_density_slope(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        let f = self.dist.pdf(t);
        match (self.bias.second(t), &self.dist.pdf_prime) {
            (Some(b2), Some(_)) => {
                let b = self.bias.value(t);
                let b1 = self.bias.slope(t);
                let scaled_slope = (b1 * (1.0 + b1) - b * b2) / (1.0 + b1).powi(2);
                scaled_slope * f + self.bias.scaled(t) * self.dist.pdf_prime(t)
            }
            _ => finite_difference(|x| self.bias.scaled(x) * self.dist.pdf(x), t, lo, hi),
        }
    }

    /// `f(θ) + (B f)'(θ)`, the weight on type θ's payoff in the utility
    /// representation.
    pub fn virtual_weight(&self, t: f64) -> f64 {
        self.dist.pdf(t) + self.scaled_density_slope(t)
    }
}

/// Favorite decision of `who` in state `t`.
pub fn favorite_decision(setting: &DecisionSetting, who: Player, t: f64) -> Result<f64> {
    let (lo, hi) = setting.support();
    if !(t >= lo && t <= hi) {
        return Err(Error::Domain(format!("state {t} outside [{lo}, {hi}]")));
    }
    let level = match who {
        Player::Principal => t,
        Player::Agent => setting.bias().effective(t),
    };
    let y = setting.kernel().decision_for_level(level).ok_or_else(|| {
        Error::Config(format!(
            "range condition violated: no decision with -a'(y) = {level}"
        ))
    })?;
    if !setting.in_working_range(y) {
        let (a, b) = setting.working_range();
        return Err(Error::OutOfRange(y, a, b));
    }
    Ok(y)
}

/// `(y_P0, y_A0)`.
pub fn ex_ante_favorites(setting: &DecisionSetting) -> (f64, f64) {
    (setting.y_p0(), setting.y_a0())
}

/// `E[θ | θ >= t]`.
pub fn conditional_mean_above(dist: &StateDistribution, t: f64) -> Result<f64> {
    let (lo, hi) = dist.support();
    if !(t >= lo && t < hi) {
        return Err(Error::Domain(format!("threshold {t} outside [{lo}, {hi})")));
    }
    let mass = 1.0 - dist.cdf(t);
    if mass < 1e-12 {
        return Err(Error::DegenerateTail { t, mass });
    }
    let q = Quadrature::default();
    let num = if dist
        .polynomial_degree()
        .is_some_and(|d| d < q.exact_degree())
    {
        q.integrate_poly(|x| x * dist.pdf(x), t, hi)
    } else {
        q.integrate_piece(|x| x * dist.pdf(x), t, hi, hi - lo)
    };
    Ok(num / mass)
}

/// `E[g(θ)]` under the setting's distribution.
pub fn expectation(setting: &DecisionSetting, g: impl Fn(f64) -> f64) -> Result<f64> {
    setting.expectation(g)
}

/// Outcome of one assumption check on the state grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    /// The grid state (or boundary) with the worst margin.
    pub worst_state: Option<f64>,
    /// Margin at the worst state; positive means satisfied.
    pub worst_margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Grid check of the three joint assumptions on `(F, b)`:
/// A1 `f + (B f)' > 0`, A2 `b(θ̲) >= 0, b(θ̄) > 0, E[b] > 0`,
/// A3 `θ̲ + b(θ̲) < E[θ]`.
pub fn check_assumptions(setting: &DecisionSetting, grid_n: usize) -> Result<AssumptionReport> {
    if grid_n < 3 {
        return Err(Error::Validation(format!(
            "grid_n must be at least 3, got {grid_n}"
        )));
    }
    let (lo, hi) = setting.support();
    let bias = setting.bias();

    let (a1_state, a1_margin) = linspace(lo, hi, grid_n)
        .into_iter()
        .map(|t| (t, setting.virtual_weight(t)))
        .fold(
            (lo, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    let a1 = AssumptionCheck {
        name: "A1".into(),
        passed: a1_margin > 0.0,
        worst_state: Some(a1_state),
        worst_margin: a1_margin,
        detail: format!("min f + (Bf)' = {a1_margin:.6e} at θ = {a1_state}"),
    };

    let mean_bias = setting.mean_effective() - setting.mean_state();
    let parts = [
        (lo, bias.value(lo), "b(θ̲) >= 0", true),
        (hi, bias.value(hi), "b(θ̄) > 0", false),
        (f64::NAN, mean_bias, "E[b(θ)] > 0", false),
    ];
    let mut a2_margin = f64::INFINITY;
    let mut a2_state = None;
    let mut a2_failed = Vec::new();
    for (state, value, what, weak) in parts {
        let ok = if weak { value >= 0.0 } else { value > 0.0 };
        if !ok {
            a2_failed.push(format!("{what} fails ({value})"));
        }
        if value < a2_margin {
            a2_margin = value;
            a2_state = (!state.is_nan()).then_some(state);
        }
    }
    let a2 = AssumptionCheck {
        name: "A2".into(),
        passed: a2_failed.is_empty(),
        worst_state: a2_state,
        worst_margin: a2_margin,
        detail: if a2_failed.is_empty() {
            "b(θ̲) >= 0, b(θ̄) > 0, E[b] > 0".into()
        } else {
            a2_failed.join("; ")
        },
    };

    let a3_margin = setting.mean_state() - bias.effective(lo);
    let a3 = AssumptionCheck {
        name: "A3".into(),
        passed: a3_margin > 0.0,
        worst_state: Some(lo),
        worst_margin: a3_margin,
        detail: format!(
            "θ̲ + b(θ̲) = {} vs E[θ] = {}",
            bias.effective(lo),
            setting.mean_state()
        ),
    };
    Ok(AssumptionReport {
        checks: vec![a1, a2, a3],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(beta: f64) -> DecisionSetting {
        DecisionSetting::new(
            StateDistribution::uniform(0.0, 1.0).unwrap(),
            PayoffKernel::power(4.0).unwrap(),
            BiasFunction::constant(beta),
        )
        .unwrap()
    }

    #[test]
    fn favorite_decisions_quadratic() {
        let s = DecisionSetting::uqc(0.2).unwrap();
        assert!((favorite_decision(&s, Player::Agent, 0.4).unwrap() - 0.6).abs() < 1e-15);
        assert!((favorite_decision(&s, Player::Principal, 0.4).unwrap() - 0.4).abs() < 1e-15);
        assert!(favorite_decision(&s, Player::Agent, 1.5).is_err());
    }

    #[test]
    fn favorite_decision_quartic_matches_bisection() {
        let s = quartic(0.0);
        let y = favorite_decision(&s, Player::Principal, 0.8).unwrap();
        // Independent oracle: bisection on a'(y) + θ = -y³ + 0.8.
        let oracle = bisect(|y| 0.8 - y * y * y, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((y - oracle).abs() < 1e-12);
        assert!((y - 0.8f64.cbrt()).abs() < 1e-12);
        assert!((y - 0.9283).abs() < 1e-4);
    }

    #[test]
    fn ex_ante_favorites_examples() {
        let (p, a) = ex_ante_favorites(&DecisionSetting::uqc(0.3).unwrap());
        assert!((p - 0.5).abs() < 1e-14 && (a - 0.8).abs() < 1e-14);
        let (p, a) = ex_ante_favorites(&DecisionSetting::uqc(0.0).unwrap());
        assert!((p - 0.5).abs() < 1e-14 && (a - 0.5).abs() < 1e-14);
        let (p, a) = ex_ante_favorites(&quartic(0.0));
        assert!((p - 0.5f64.cbrt()).abs() < 1e-12);
        assert!((a - p).abs() < 1e-14);
        assert!((p - 0.7937).abs() < 1e-4);
    }

    #[test]
    fn assumptions_in_uqc() {
        let ok = check_assumptions(&DecisionSetting::uqc(0.3).unwrap(), 2001).unwrap();
        assert!(ok.all_passed());
        let r = check_assumptions(&DecisionSetting::uqc(0.6).unwrap(), 2001).unwrap();
        assert_eq!(r.failures(), vec!["A3"]);
        let r = check_assumptions(&DecisionSetting::uqc(0.0).unwrap(), 2001).unwrap();
        assert!(r.failures().contains(&"A2"));
        assert!(check_assumptions(&DecisionSetting::uqc(0.3).unwrap(), 2).is_err());
    }

    #[test]
    fn a1_reduces_to_log_density_slope_for_constant_bias() {
        // f(θ) = 2 e^{-2θ}/(1 - e^{-2}) on [0,1]: f'/f = -2.
        let z = 1.0 - (-2.0f64).exp();
        let dist = StateDistribution::custom(
            0.0,
            1.0,
            move |t| (1.0 - (-2.0 * t).exp()) / z,
            move |t| 2.0 * (-2.0 * t).exp() / z,
            None,
        )
        .unwrap();
        for beta in [0.3, 0.45, 0.55, 0.8] {
            let s = DecisionSetting::new(
                dist.clone(),
                PayoffKernel::quadratic_loss(),
                BiasFunction::constant(beta),
            )
            .unwrap();
            let report = check_assumptions(&s, 501).unwrap();
            let log_slope_ok = -2.0 > -1.0 / beta;
            assert_eq!(
                report.check("A1").unwrap().passed,
                log_slope_ok,
                "beta={beta}"
            );
        }
    }

    #[test]
    fn conditional_mean_examples() {
        let u = StateDistribution::uniform(0.0, 1.0).unwrap();
        assert!((conditional_mean_above(&u, 0.6).unwrap() - 0.8).abs() < 1e-14);
        assert!((conditional_mean_above(&u, 0.0).unwrap() - 0.5).abs() < 1e-14);
        let sq = StateDistribution::power(2.0).unwrap();
        // Oracle: ∫2θ² / ∫2θ on [0.5, 1] = (7/12) / (3/4).
        assert!((conditional_mean_above(&sq, 0.5).unwrap() - 7.0 / 9.0).abs() < 1e-13);
        assert!(conditional_mean_above(&u, 1.0).is_err());
        assert!(matches!(
            conditional_mean_above(&u, 1.0 - 1e-14),
            Err(Error::DegenerateTail { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let s = DecisionSetting::uqc(0.3).unwrap();
        assert!((expectation(&s, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((expectation(&s, |t| t).unwrap() - 0.5).abs() < 1e-12);
        assert!((expectation(&s, |t| t * t).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(expectation(&s, |t| if t > 0.5 { f64::NAN } else { t }).is_err());
    }

    #[test]
    fn rejects_flat_effective_state() {
        let u = StateDistribution::uniform(0.0, 1.0).unwrap();
        let r = DecisionSetting::new(
            u,
            PayoffKernel::quadratic(),
            BiasFunction::affine(0.1, -1.0),
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn loss_normalization_requires_quadratic_kernel() {
        let u = StateDistribution::uniform(0.0, 1.0).unwrap();
        let k = PayoffKernel {
            normalization: Normalization::QuadraticLoss,
            ..PayoffKernel::power(4.0).unwrap()
        };
        assert!(DecisionSetting::new(u, k, BiasFunction::constant(0.1)).is_err());
    }

    #[test]
    fn theta_a_solves_mean_effective_state() {
        let s = DecisionSetting::new(
            StateDistribution::power(2.0).unwrap(),
            PayoffKernel::quadratic(),
            BiasFunction::affine(0.1, 0.5),
        )
        .unwrap();
        let t = s.theta_a();
        assert!((s.bias().effective(t) - s.mean_effective()).abs() < 1e-12);
    }
}
