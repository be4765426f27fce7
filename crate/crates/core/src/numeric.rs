//! Numerical plumbing: composite Gauss–Legendre quadrature, bracketed
//! bisection and golden-section search.

use std::f64::consts::PI;

/// Default number of composite panels across a full support.
pub const DEFAULT_PANELS: usize = 256;
/// Default Gauss–Legendre order per panel.
pub const DEFAULT_ORDER: usize = 8;

/// Composite Gauss–Legendre rule.
///
/// A single panel of order `n` integrates polynomials of degree `2n - 1`
/// exactly; callers that know their integrand is polynomial on a piece can
/// use [`Quadrature::integrate_poly`] to skip the panel split.
#[derive(Debug, Clone)]
pub struct Quadrature {
    panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(DEFAULT_PANELS, DEFAULT_ORDER)
    }
}

impl Quadrature {
    pub fn new(panels: usize, order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order.max(1));
        Self {
            panels: panels.max(1),
            nodes,
            weights,
        }
    }

    /// Reads `DELEGATE_QUAD_PANELS` and falls back to the default panel count.
    pub fn from_env() -> Self {
        let panels = std::env::var("DELEGATE_QUAD_PANELS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&p| p > 0)
            .unwrap_or(DEFAULT_PANELS);
        Self::new(panels, DEFAULT_ORDER)
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Highest polynomial degree one panel integrates exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    /// One Gauss–Legendre panel on `[a, b]`.
    pub fn integrate_poly(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule on `[a, b]` with `panels` equal panels.
    pub fn integrate_panels(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + i as f64 * h;
                let hi = if i + 1 == panels { b } else { lo + h };
                self.integrate_poly(&f, lo, hi)
            })
            .sum()
    }

    /// Composite rule with the configured panel count over `[a, b]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        self.integrate_panels(f, a, b, self.panels)
    }

    /// Composite rule on a sub-range `[a, b]` of a reference span of width
    /// `span`, using a panel count proportional to the sub-range width.
    pub fn integrate_piece(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, span: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let share = ((b - a) / span).clamp(0.0, 1.0);
        let panels = (share * self.panels as f64).ceil() as usize;
        self.integrate_panels(f, a, b, panels.max(1))
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Bisection for a root of `f` on `[a, b]`, which must bracket a sign change
/// (a zero at either end is returned directly). Stops when the bracket is
/// narrower than `tol` or after `max_iter` halvings.
///
/// Returns `None` when `f(a)` and `f(b)` share a strict sign.
pub fn bisect(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Root of an increasing function `f` with `f(x) = target`, found by
/// expanding a bracket around `start` by doubling and then bisecting.
/// Gives up (returns `None`) once the bracket leaves `[-limit, limit]`.
pub fn solve_increasing(
    f: impl Fn(f64) -> f64,
    target: f64,
    start: f64,
    limit: f64,
    tol: f64,
) -> Option<f64> {
    let g = |x: f64| f(x) - target;
    let g0 = g(start);
    if g0 == 0.0 {
        return Some(start);
    }
    let mut step = 1.0_f64.max(start.abs() * 0.5);
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut near = start;
    loop {
        let far = start + dir * step;
        if far.abs() > limit {
            return None;
        }
        if g(far).signum() != g0.signum() {
            let (a, b) = if near < far { (near, far) } else { (far, near) };
            return bisect(g, a, b, tol, 400);
        }
        near = far;
        step *= 2.0;
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`, to bracket
/// width `tol`. Both endpoints are compared against the interior optimum,
/// so a maximum sitting on a boundary is returned exactly.
///
/// Returns `(x_max, f_max)`.
pub fn golden_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let (a0, b0) = (a, b);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while (b - a) > tol && iters < 200 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iters += 1;
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a0, b0] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Evenly spaced points `lo, lo + step, ..., <= hi` (inclusive within a
/// relative tolerance of the step).
pub fn range_inclusive(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return vec![lo];
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// `n` equispaced points on `[lo, hi]` including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Formats a float with at most `digits` significant digits, shortest form.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x);
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in 1..=12 {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn single_panel_is_exact_for_degree_fifteen() {
        let q = Quadrature::new(1, 8);
        let got = q.integrate_poly(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert!((got - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-14);
    }

    #[test]
    fn composite_integrates_smooth_function() {
        let q = Quadrature::default();
        let got = q.integrate(f64::exp, 0.0, 1.0);
        assert!((got - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn solve_increasing_expands_bracket() {
        let r = solve_increasing(|y| y * y * y, 0.8, 0.0, 1e6, 1e-15).unwrap();
        assert!((r - 0.8f64.cbrt()).abs() < 1e-13);
        assert!(solve_increasing(|y| y.atan(), 2.0, 0.0, 1e3, 1e-12).is_none());
    }

    #[test]
    fn golden_finds_interior_and_boundary_maxima() {
        let (x, _) = golden_max(|x| -(x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn ranges_and_formatting() {
        assert_eq!(range_inclusive(0.01, 0.49, 0.02).len(), 25);
        assert_eq!(range_inclusive(0.02, 0.48, 0.01).len(), 47);
        assert_eq!(fmt_sig(1.0 / 3.0, 10), "0.3333333333");
        assert_eq!(fmt_sig(0.1, 10), "0.1");
        assert_eq!(fmt_sig(-1.0 / 12.0, 10), "-0.08333333333");
    }
}
