//! The greedy-optimality threshold `c*`, its bounds, and the greedy
//! throughput curves.
//!
//! `c*` is the largest capacity with `D(c) = r'(c) - E[r'(X)·1{X < c}] >= 0`;
//! the set where `D >= 0` is the interval `[0, c*]`.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde_json::{json, Value};

use crate::distributions::EnergyDistribution;
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::reward::RewardFunction;
use crate::roots::{bisect_predicate, scan_sup};

/// Relative bracket width at which threshold bisections stop.
pub const BISECTION_REL_TOL: f64 = 1e-12;
/// Default number of scan points for `c̲` and `c̄`.
pub const SCAN_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DiscreteExact,
    ContinuousRoot,
    Bisection,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::DiscreteExact => "discrete-exact",
            Method::ContinuousRoot => "continuous-root",
            Method::Bisection => "bisection",
        }
    }
}

/// An upper bound that may exceed every capacity the solver can scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperBound {
    Finite(f64),
    /// The defining predicate still held at the scan cap of an unbounded
    /// support.
    UnboundedWithinCap { cap: f64 },
}

impl UpperBound {
    pub fn finite(self) -> Option<f64> {
        match self {
            UpperBound::Finite(v) => Some(v),
            UpperBound::UnboundedWithinCap { .. } => None,
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            UpperBound::Finite(v) => json!(v),
            UpperBound::UnboundedWithinCap { cap } => json!({ "unbounded_within_cap": cap }),
        }
    }
}

/// Rejects laws where `r'(x̲) <= r'(x̄)`, for which greedy is optimal at
/// every capacity.
pub fn check_assumption(d: &EnergyDistribution, r: &RewardFunction) -> Result<()> {
    let r_lo = r.derivative(d.x_lo());
    let r_hi = r.derivative(d.x_hi());
    if r_lo > r_hi {
        Ok(())
    } else {
        Err(Error::Degenerate { r_lo, r_hi })
    }
}

/// `D(c) = r'(c) - ρ(c)·E[r'(X) | X < c]`.
pub fn d_value(d: &EnergyDistribution, r: &RewardFunction, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("capacity must be >= 0, got {c}")));
    }
    let below = if c > 0.0 {
        d.truncated_expect(|x| r.derivative(x), c)?
    } else {
        0.0
    };
    Ok(r.derivative(c) - below)
}

/// Boolean bisection over a fallible predicate; the first error aborts the
/// search and is returned.
fn bisect_fallible<P>(pred: P, lo: f64, hi: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    P: Fn(f64) -> Result<bool>,
{
    let failure = RefCell::new(None);
    let bracket = bisect_predicate(
        |c| match pred(c) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                false
            }
        },
        lo,
        hi,
        rel_tol,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(bracket),
    }
}

/// `c*` by boolean bisection on `D(c) >= 0`, valid for any law and reward.
pub fn c_star(d: &EnergyDistribution, r: &RewardFunction) -> Result<f64> {
    check_assumption(d, r)?;
    let x_lo = d.x_lo();
    let holds = |c: f64| d_value(d, r, c).map(|v| v >= 0.0);
    let limit = if d.x_hi().is_finite() {
        if holds(d.x_hi())? {
            return Ok(d.x_hi());
        }
        d.x_hi()
    } else {
        d.scan_cap()
    };
    let mut hi = d.mean().max(1.0).min(limit);
    while holds(hi)? {
        if hi >= limit {
            return Err(Error::NonConvergence {
                what: "threshold bracket",
                iterations: 0,
                residual: d_value(d, r, hi)?,
            });
        }
        hi = (2.0 * hi).min(limit);
    }
    let lo = (x_lo + 1e-12 * x_lo.max(1.0)).min(x_lo + 0.5 * (hi - x_lo));
    let (lo, _) = bisect_fallible(holds, lo, hi, BISECTION_REL_TOL)?;
    Ok(lo)
}

/// `c*` for discrete laws by walking the partial sums
/// `S_j = Σ_{i<=j} r'(ξ_i) p(ξ_i)`: either `c*` is an atom or the root of
/// `r'(c) = S_j` between two atoms.
pub fn c_star_discrete_exact(d: &EnergyDistribution, r: &RewardFunction) -> Result<f64> {
    let atoms = d
        .atoms()
        .ok_or_else(|| Error::domain("exact walk needs a discrete law"))?;
    check_assumption(d, r)?;
    let root = |s: f64, lo: f64, hi: Option<f64>| {
        let pred = |c: f64| r.derivative(c) >= s;
        let hi = match hi {
            Some(h) => h,
            None => {
                let mut h = 2.0 * lo.max(1.0);
                while pred(h) {
                    h *= 2.0;
                }
                h
            }
        };
        bisect_predicate(pred, lo, hi, 0.0).0
    };
    let mut s = 0.0;
    let mut atoms = atoms.peekable();
    while let Some((xi, m)) = atoms.next() {
        let slope = r.derivative(xi);
        s += slope * m;
        if slope <= s {
            return Ok(xi);
        }
        match atoms.peek() {
            Some(&(next, _)) if r.derivative(next) >= s => {}
            Some(&(next, _)) => return Ok(root(s, xi, Some(next))),
            // Only reachable when a truncated tail hides the last atoms.
            None => return Ok(root(s, xi, None)),
        }
    }
    Err(Error::domain("discrete law has no atoms"))
}

/// `c*` for continuous laws under the AWGN reward: the root of
/// `G(c) = 1/(1+c) - ∫₀^c f(x)/(1+x) dx`.
///
/// Below `c = 1` the equivalent form
/// `P(X >= c) + ∫₀^c x f(x)/(1+x) dx - c/(1+c)` is used, which avoids
/// cancelling two terms near one when the mean is tiny. Quadrature is
/// purely relative so the root is found at any scale.
pub fn c_star_continuous_awgn(d: &EnergyDistribution) -> Result<f64> {
    if d.is_discrete() {
        return Err(Error::domain("continuous root needs a continuous law"));
    }
    let quad = Quadrature::with_tolerances(0.0, 1e-13);
    let g = |c: f64| -> Result<f64> {
        if c <= 1.0 {
            let tail = d.truncated_expect_with(|x| x / (1.0 + x), c, &quad)?;
            Ok(d.survival(c) + tail - c / (1.0 + c))
        } else {
            let head = d.truncated_expect_with(|x| 1.0 / (1.0 + x), c, &quad)?;
            Ok(1.0 / (1.0 + c) - head)
        }
    };
    let mut lo = d.mean();
    let mut hi = d.mean();
    if g(hi)? > 0.0 {
        while g(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while g(lo)? <= 0.0 {
            hi = lo;
            lo *= 0.5;
        }
    }
    let (a, b) = bisect_fallible(|c| g(c).map(|v| v > 0.0), lo, hi, 1e-13)?;
    Ok(0.5 * (a + b))
}

/// Picks the characterisation suited to the law: the exact walk for
/// discrete laws, the AWGN root for continuous ones, bisection otherwise.
pub fn c_star_auto(d: &EnergyDistribution, r: &RewardFunction) -> Result<(f64, Method)> {
    if d.is_discrete() {
        Ok((c_star_discrete_exact(d, r)?, Method::DiscreteExact))
    } else if r.is_awgn() {
        check_assumption(d, r)?;
        Ok((c_star_continuous_awgn(d)?, Method::ContinuousRoot))
    } else {
        Ok((c_star(d, r)?, Method::Bisection))
    }
}

fn scan_limit(d: &EnergyDistribution) -> f64 {
    d.x_hi().min(d.scan_cap())
}

/// Scan-then-bisect supremum of a fallible predicate over `(lo, hi]`.
fn scan_fallible<P>(pred: P, lo: f64, hi: f64, points: usize) -> Result<crate::roots::ScanOutcome>
where
    P: Fn(f64) -> Result<bool>,
{
    let failure = RefCell::new(None);
    let out = scan_sup(
        |c| match pred(c) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                false
            }
        },
        lo,
        hi,
        points,
        BISECTION_REL_TOL,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `ξ̲(c)`, the smallest conditional mean of `X` given `X < c` compatible
/// with `(μ, ρ(c), x̄)`.
fn xi_lower(d: &EnergyDistribution, rho: f64) -> f64 {
    if d.x_hi().is_finite() {
        ((d.mean() - (1.0 - rho) * d.x_hi()) / rho).max(d.x_lo())
    } else {
        d.x_lo()
    }
}

/// `ξ̄(c)`, the largest conditional mean of `X` given `X < c`.
fn xi_upper(d: &EnergyDistribution, rho: f64, c: f64) -> f64 {
    ((d.mean() - (1.0 - rho) * c) / rho).min(c)
}

/// Predicate defining `c̲` via the upper concave envelope of `r'`.
pub fn lower_predicate(d: &EnergyDistribution, r: &RewardFunction, c: f64) -> Result<bool> {
    let rho = d.cdf_strict(c);
    if rho == 0.0 {
        return Ok(true);
    }
    let xi = xi_lower(d, rho).clamp(d.x_lo(), c);
    Ok(r.derivative(c) >= rho * r.deriv_upper_concave_env(d.x_lo(), c, xi)?)
}

/// Closed AWGN form of [`lower_predicate`]: `c <= ζ̄(c)`.
pub fn lower_predicate_awgn(d: &EnergyDistribution, c: f64) -> bool {
    let rho = d.cdf_strict(c);
    if rho == 0.0 {
        return true;
    }
    let zeta = ((1.0 - rho) * (1.0 + d.x_lo()) + rho * xi_lower(d, rho)) / rho;
    c <= zeta
}

/// Predicate defining `c̄` via the lower convex envelope of `r'`.
pub fn upper_predicate(d: &EnergyDistribution, r: &RewardFunction, c: f64) -> Result<bool> {
    let rho = d.cdf_strict(c);
    if rho == 0.0 {
        return Ok(true);
    }
    let xi = xi_upper(d, rho, c).clamp(d.x_lo(), c);
    Ok(r.derivative(c) >= rho * r.deriv_lower_convex_env(d.x_lo(), c, xi)?)
}

/// Closed AWGN form of [`upper_predicate`] on `(μ, x̄)`:
/// `c <= (μ + ρ - ρ²)/(1 - ρ + ρ²)`.
pub fn upper_predicate_awgn(d: &EnergyDistribution, c: f64) -> bool {
    let rho = d.cdf_strict(c);
    c <= (d.mean() + rho - rho * rho) / (1.0 - rho + rho * rho)
}

/// `c̲` with the default scan density.
pub fn bound_lower(d: &EnergyDistribution, r: &RewardFunction) -> Result<f64> {
    bound_lower_with(d, r, SCAN_POINTS).map(|(v, _)| v)
}

/// `c̲` scanned on `points` nodes; also returns the scan step.
pub fn bound_lower_with(d: &EnergyDistribution, r: &RewardFunction, points: usize) -> Result<(f64, f64)> {
    check_assumption(d, r)?;
    let (lo, hi) = (d.x_lo(), scan_limit(d));
    let out = if r.is_awgn() {
        scan_sup(|c| lower_predicate_awgn(d, c), lo, hi, points, BISECTION_REL_TOL)
    } else {
        scan_fallible(|c| lower_predicate(d, r, c), lo, hi, points)?
    };
    Ok((out.sup, out.step))
}

/// `c̄` with the default scan density.
pub fn bound_upper(d: &EnergyDistribution, r: &RewardFunction) -> Result<UpperBound> {
    bound_upper_with(d, r, SCAN_POINTS).map(|(v, _)| v)
}

/// `c̄` scanned on `points` nodes over `(μ, min{x̄, cap}]`; also returns the
/// scan step.
pub fn bound_upper_with(
    d: &EnergyDistribution,
    r: &RewardFunction,
    points: usize,
) -> Result<(UpperBound, f64)> {
    check_assumption(d, r)?;
    let (lo, hi) = (d.mean(), scan_limit(d));
    let out = if r.is_awgn() {
        scan_sup(|c| upper_predicate_awgn(d, c), lo, hi, points, BISECTION_REL_TOL)
    } else {
        scan_fallible(|c| upper_predicate(d, r, c), lo, hi, points)?
    };
    let bound = if out.saturated && !d.x_hi().is_finite() {
        UpperBound::UnboundedWithinCap { cap: hi }
    } else {
        UpperBound::Finite(out.sup)
    };
    Ok((bound, out.step))
}

/// Semi-universal AWGN bounds `(c̳, c̿)` from `(x̲, x̄, μ)` alone.
pub fn semi_bounds_awgn(x_lo: f64, x_hi: f64, mu: f64) -> Result<(f64, f64)> {
    if !(x_lo >= 0.0 && x_lo.is_finite() && mu.is_finite() && x_lo <= mu && mu <= x_hi) {
        return Err(Error::domain(format!(
            "need 0 <= x_lo <= mu <= x_hi, got ({x_lo}, {x_hi}, {mu})"
        )));
    }
    let semi_lower = if !x_hi.is_finite() {
        x_lo
    } else if mu <= x_hi - x_lo - 1.0 {
        (1.0 + x_lo) * (x_hi - x_lo) / (x_hi - mu) - 1.0
    } else {
        mu
    };
    let semi_upper = if mu <= 1.5 * x_lo + 0.5 {
        let s = mu + x_lo;
        let disc = s * s - 4.0 * (x_lo * x_lo + x_lo - mu);
        0.5 * (s + disc.max(0.0).sqrt())
    } else {
        4.0 * mu / 3.0 + 1.0 / 3.0
    };
    Ok((semi_lower, semi_upper.min(x_hi)))
}

/// Closed forms of all five quantities for a two-point law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliReference {
    pub c_star: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub semi_lower: f64,
    pub semi_upper: f64,
}

pub fn bernoulli_reference(x_lo: f64, x_hi: f64, p: f64) -> Result<BernoulliReference> {
    if !(0.0 <= x_lo && x_lo < x_hi && x_hi.is_finite() && p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "need 0 <= x_lo < x_hi < inf and p in (0, 1), got ({x_lo}, {x_hi}, {p})"
        )));
    }
    let q = 1.0 - p;
    let knee = (x_lo + p) / q;
    let c_star = knee.min(x_hi);
    let c_upper = if knee > x_hi {
        x_hi
    } else {
        (q * (x_lo + p) + p * x_hi) / (q + p * p)
    };
    let semi_lower = if ((2.0 - p) * x_lo + 1.0) / q <= x_hi {
        knee
    } else {
        q * x_lo + p * x_hi
    };
    let semi_upper = if ((1.0 + 2.0 * p) * x_lo + 1.0) / (2.0 * p) >= x_hi {
        let s = (2.0 - p) * x_lo + p * x_hi;
        let disc = s * s - 4.0 * (x_lo * x_lo + p * (x_lo - x_hi));
        0.5 * (s + disc.sqrt())
    } else {
        4.0 / 3.0 * (q * x_lo + p * x_hi) + 1.0 / 3.0
    };
    Ok(BernoulliReference {
        c_star,
        c_lower: c_star,
        c_upper,
        semi_lower,
        semi_upper: semi_upper.min(x_hi),
    })
}

/// `F(a) = (πa/2)∫₀^a exp(-πy²/4) dy`.
pub fn rayleigh_functional(a: f64) -> Result<f64> {
    if a <= 0.0 {
        return Ok(0.0);
    }
    let integral = Quadrature::with_tolerances(0.0, 1e-13)
        .integrate(|y| (-PI * y * y / 4.0).exp(), 0.0, a)?
        .value;
    Ok(PI * a / 2.0 * integral)
}

/// The limit `a* = lim c*/μ` for Rayleigh arrivals: the root of `F(a) = 1`.
pub fn rayleigh_a_star() -> Result<f64> {
    let (lo, hi) = bisect_fallible(|a| rayleigh_functional(a).map(|v| v < 1.0), 0.0, 2.0, 1e-13)?;
    Ok(0.5 * (lo + hi))
}

/// `γ̲(c) = E[r(min{X, c})]`, the greedy throughput.
pub fn greedy_throughput(d: &EnergyDistribution, r: &RewardFunction, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("capacity must be >= 0, got {c}")));
    }
    if c == 0.0 {
        return Ok(r.value(0.0));
    }
    Ok(d.truncated_expect(|x| r.value(x), c)? + d.survival(c) * r.value(c))
}

/// `γ̄(c) = r(E[min{X, c}])`, the Jensen upper bound on the throughput.
pub fn throughput_upper(d: &EnergyDistribution, r: &RewardFunction, c: f64) -> Result<f64> {
    Ok(r.value(d.expected_min(c)?))
}

/// `c*`, its bounds and diagnostics for one `(X, r)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub c_star: f64,
    pub c_lower: f64,
    pub c_upper: UpperBound,
    /// `c̳`, AWGN only.
    pub semi_lower: Option<f64>,
    /// `c̿`, AWGN only.
    pub semi_upper: Option<f64>,
    pub method: Method,
    /// `D(c*)`.
    pub residual: f64,
    pub scan_step_lower: f64,
    pub scan_step_upper: f64,
    pub mean: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl ThresholdReport {
    pub fn compute(d: &EnergyDistribution, r: &RewardFunction) -> Result<Self> {
        Self::compute_with(d, r, SCAN_POINTS)
    }

    pub fn compute_with(d: &EnergyDistribution, r: &RewardFunction, points: usize) -> Result<Self> {
        let (c_star, method) = c_star_auto(d, r)?;
        let (c_lower, scan_step_lower) = bound_lower_with(d, r, points)?;
        let (c_upper, scan_step_upper) = bound_upper_with(d, r, points)?;
        let (semi_lower, semi_upper) = if r.is_awgn() {
            let (lo, hi) = semi_bounds_awgn(d.x_lo(), d.x_hi(), d.mean())?;
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };
        Ok(Self {
            c_star,
            c_lower,
            c_upper,
            semi_lower,
            semi_upper,
            method,
            residual: d_value(d, r, c_star)?,
            scan_step_lower,
            scan_step_upper,
            mean: d.mean(),
            x_lo: d.x_lo(),
            x_hi: d.x_hi(),
        })
    }

    pub fn to_json(&self) -> Value {
        let finite_or_null = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
        json!({
            "c_star": self.c_star,
            "c_lower": self.c_lower,
            "c_upper": self.c_upper.to_json(),
            "semi_lower": self.semi_lower,
            "semi_upper": self.semi_upper,
            "method": self.method.as_str(),
            "residual": self.residual,
            "scan_step_lower": self.scan_step_lower,
            "scan_step_upper": self.scan_step_upper,
            "mu": self.mean,
            "x_lo": self.x_lo,
            "x_hi": finite_or_null(self.x_hi),
        })
    }
}
