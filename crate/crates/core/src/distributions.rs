//! Energy-arrival laws and the probabilistic primitives the threshold
//! characterisation consumes.
//!
//! Everything is phrased with the *strict* distribution function
//! `ρ(x) = P(X < x)`; the usual right-continuous CDF is deliberately not
//! exposed.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::spec::parse_spec;

/// Tail mass below which infinite discrete supports are truncated.
pub const TAIL_MASS: f64 = 1e-14;
/// `quantile(1 - CAP_TAIL)` is the finite scan range for infinite supports.
pub const CAP_TAIL: f64 = 1e-12;
/// Mass allowed to be dropped on each side of the Poisson window.
const POISSON_WINDOW_TAIL: f64 = 1e-16;
/// Probabilities must sum to one within this before normalisation.
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `P(X = x_lo) = 1 - p`, `P(X = x_hi) = p`.
    Bernoulli { x_lo: f64, x_hi: f64, p: f64 },
    /// Atoms `(ξ_i, p_i)` with `ξ_1 < ξ_2 < ...`.
    FiniteDiscrete { points: Vec<(f64, f64)> },
    /// `P(X = k) = (1 - p)^k p`, `k = 0, 1, ...`.
    Geometric { p: f64 },
    Poisson { lambda: f64 },
    /// Uniform on `[0, ω]`.
    Uniform { omega: f64 },
    /// Density `η e^{-ηx}`.
    Exponential { eta: f64 },
    /// Density `(x/θ) e^{-x²/(2θ)}`.
    Rayleigh { theta: f64 },
}

/// Named families usable in asymptotic sweeps, parameterised by the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyName {
    Geometric,
    Poisson,
    Uniform,
    Exponential,
    Rayleigh,
}

impl FamilyName {
    pub const ALL: [FamilyName; 5] = [
        FamilyName::Geometric,
        FamilyName::Poisson,
        FamilyName::Uniform,
        FamilyName::Exponential,
        FamilyName::Rayleigh,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geometric" => Ok(FamilyName::Geometric),
            "poisson" => Ok(FamilyName::Poisson),
            "uniform" => Ok(FamilyName::Uniform),
            "exponential" => Ok(FamilyName::Exponential),
            "rayleigh" => Ok(FamilyName::Rayleigh),
            other => Err(Error::parse(s, format!("unknown family `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Geometric => "geometric",
            FamilyName::Poisson => "poisson",
            FamilyName::Uniform => "uniform",
            FamilyName::Exponential => "exponential",
            FamilyName::Rayleigh => "rayleigh",
        }
    }

    pub fn is_discrete(self) -> bool {
        matches!(self, FamilyName::Geometric | FamilyName::Poisson)
    }

    /// The member of this family with mean `mu`.
    pub fn with_mean(self, mu: f64) -> Result<EnergyDistribution> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::domain(format!("mean must be positive and finite, got {mu}")));
        }
        match self {
            FamilyName::Geometric => EnergyDistribution::geometric(1.0 / (1.0 + mu)),
            FamilyName::Poisson => EnergyDistribution::poisson(mu),
            FamilyName::Uniform => EnergyDistribution::uniform(2.0 * mu),
            FamilyName::Exponential => EnergyDistribution::exponential(1.0 / mu),
            FamilyName::Rayleigh => EnergyDistribution::rayleigh(2.0 * mu * mu / PI),
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PoissonWindow {
    k_lo: u64,
    k_hi: u64,
}

#[derive(Debug)]
pub struct EnergyDistribution {
    family: Family,
    mean: f64,
    x_lo: f64,
    x_hi: f64,
    cap: f64,
    /// Atoms with positive mass for Bernoulli / finite-discrete laws.
    atoms: Vec<(f64, f64)>,
    /// Last geometric atom kept (tail beyond it below [`TAIL_MASS`]).
    geometric_end: u64,
    poisson: Option<PoissonWindow>,
    /// Cumulative Poisson masses over the window, built on first use.
    poisson_cdf: OnceLock<Vec<f64>>,
    quad: Quadrature,
}

impl Clone for EnergyDistribution {
    fn clone(&self) -> Self {
        Self {
            family: self.family.clone(),
            mean: self.mean,
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            cap: self.cap,
            atoms: self.atoms.clone(),
            geometric_end: self.geometric_end,
            poisson: self.poisson,
            poisson_cdf: OnceLock::new(),
            quad: self.quad,
        }
    }
}

impl PartialEq for EnergyDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `ln n! - ((n + ½)ln n - n + ln√(2π))`, the Stirling remainder.
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/m) + m - x`, by series when `x` is close to `m`.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Log-pmf in the saddle-point form, accurate to a few ulps even when
/// `λ` and `k` are in the millions.
fn poisson_ln_pmf(lambda: f64, k: u64) -> f64 {
    if k == 0 {
        return -lambda;
    }
    let k = k as f64;
    -stirling_error(k) - deviance(k, lambda) - 0.5 * (2.0 * PI * k).ln()
}

/// Window `[k_lo, k_hi]` outside which each Poisson tail carries less than
/// [`POISSON_WINDOW_TAIL`]. Tails are bounded geometrically from the pmf
/// ratio `λ/(k+1)`.
fn poisson_window(lambda: f64) -> PoissonWindow {
    let mode = lambda.floor() as u64;
    // Right: tail beyond k is <= pmf(k+1) / (1 - λ/(k+2)).
    let right_ok = |k: u64| {
        let ratio = lambda / (k as f64 + 2.0);
        ratio < 1.0 && poisson_ln_pmf(lambda, k + 1) - (1.0 - ratio).ln() < POISSON_WINDOW_TAIL.ln()
    };
    let mut hi_bad = mode;
    let mut hi_good = mode.max(1);
    while !right_ok(hi_good) {
        hi_bad = hi_good;
        hi_good = hi_good.saturating_mul(2).max(hi_good + 1);
    }
    while hi_good - hi_bad > 1 {
        let mid = hi_bad + (hi_good - hi_bad) / 2;
        if right_ok(mid) {
            hi_good = mid;
        } else {
            hi_bad = mid;
        }
    }
    // Left: mass below k is <= pmf(k-1) / (1 - (k-1)/λ).
    let left_ok = |k: u64| {
        if k == 0 {
            return true;
        }
        let ratio = (k - 1) as f64 / lambda;
        ratio < 1.0 && poisson_ln_pmf(lambda, k - 1) - (1.0 - ratio).ln() < POISSON_WINDOW_TAIL.ln()
    };
    let (mut lo_good, mut lo_bad) = (0u64, mode);
    if left_ok(mode) {
        lo_good = mode;
    } else {
        while lo_bad - lo_good > 1 {
            let mid = lo_good + (lo_bad - lo_good) / 2;
            if left_ok(mid) {
                lo_good = mid;
            } else {
                lo_bad = mid;
            }
        }
    }
    PoissonWindow {
        k_lo: lo_good,
        k_hi: hi_good,
    }
}

/// Smallest k with the geometric-bound Poisson tail `P(X > k) <= tail`.
fn poisson_quantile_cap(lambda: f64, window: PoissonWindow, tail: f64) -> f64 {
    let ok = |k: u64| {
        let ratio = lambda / (k as f64 + 2.0);
        ratio < 1.0 && poisson_ln_pmf(lambda, k + 1) - (1.0 - ratio).ln() <= tail.ln()
    };
    let (mut bad, mut good) = (window.k_lo, window.k_hi);
    if ok(bad) {
        return bad as f64;
    }
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good as f64
}

impl EnergyDistribution {
    fn build(family: Family) -> Result<Self> {
        let mut d = EnergyDistribution {
            family,
            mean: 0.0,
            x_lo: 0.0,
            x_hi: 0.0,
            cap: 0.0,
            atoms: Vec::new(),
            geometric_end: 0,
            poisson: None,
            poisson_cdf: OnceLock::new(),
            quad: Quadrature::default(),
        };
        match d.family.clone() {
            Family::Bernoulli { x_lo, x_hi, p } => {
                if !(x_lo.is_finite() && x_hi.is_finite() && 0.0 <= x_lo && x_lo < x_hi) {
                    return Err(Error::domain(format!(
                        "bernoulli needs 0 <= xlo < xhi < inf, got ({x_lo}, {x_hi})"
                    )));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::domain(format!("bernoulli p must lie in [0, 1], got {p}")));
                }
                d.atoms = [(x_lo, 1.0 - p), (x_hi, p)]
                    .into_iter()
                    .filter(|&(_, m)| m > 0.0)
                    .collect();
                d.mean = (1.0 - p) * x_lo + p * x_hi;
            }
            Family::FiniteDiscrete { points } => {
                if points.is_empty() {
                    return Err(Error::domain("discrete law needs at least one atom"));
                }
                for &(x, m) in &points {
                    if !(x.is_finite() && x >= 0.0) {
                        return Err(Error::domain(format!("atom location must be finite and >= 0, got {x}")));
                    }
                    if !(m.is_finite() && m > 0.0) {
                        return Err(Error::domain(format!("atom mass must be positive, got {m}")));
                    }
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::domain("atoms must be strictly increasing without duplicates"));
                }
                let total: f64 = points.iter().map(|&(_, m)| m).sum();
                if (total - 1.0).abs() > SUM_TOLERANCE {
                    return Err(Error::domain(format!("atom masses sum to {total}, not 1")));
                }
                d.atoms = points.iter().map(|&(x, m)| (x, m / total)).collect();
                d.mean = d.atoms.iter().map(|&(x, m)| x * m).sum();
            }
            Family::Geometric { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::domain(format!("geometric p must lie in (0, 1), got {p}")));
                }
                let ln_q = (-p).ln_1p();
                d.mean = (1.0 - p) / p;
                d.x_hi = f64::INFINITY;
                // Tail beyond atom k is q^(k+1).
                d.geometric_end = ((TAIL_MASS.ln() / ln_q).ceil() as u64).saturating_sub(1);
                d.cap = ((CAP_TAIL.ln() / ln_q).ceil() - 1.0).max(0.0);
            }
            Family::Poisson { lambda } => {
                positive("poisson lambda", lambda)?;
                let window = poisson_window(lambda);
                d.poisson = Some(window);
                d.mean = lambda;
                d.x_hi = f64::INFINITY;
                d.cap = poisson_quantile_cap(lambda, window, CAP_TAIL);
            }
            Family::Uniform { omega } => {
                positive("uniform omega", omega)?;
                d.mean = 0.5 * omega;
                d.x_hi = omega;
                d.cap = omega;
            }
            Family::Exponential { eta } => {
                positive("exponential eta", eta)?;
                d.mean = 1.0 / eta;
                d.x_hi = f64::INFINITY;
                d.cap = -CAP_TAIL.ln() / eta;
            }
            Family::Rayleigh { theta } => {
                positive("rayleigh theta", theta)?;
                d.mean = (PI * theta / 2.0).sqrt();
                d.x_hi = f64::INFINITY;
                d.cap = (-2.0 * theta * CAP_TAIL.ln()).sqrt();
            }
        }
        if !d.atoms.is_empty() {
            d.x_lo = d.atoms[0].0;
            d.x_hi = d.atoms[d.atoms.len() - 1].0;
            d.cap = d.x_hi;
        }
        Ok(d)
    }

    pub fn bernoulli(x_lo: f64, x_hi: f64, p: f64) -> Result<Self> {
        Self::build(Family::Bernoulli { x_lo, x_hi, p })
    }

    pub fn finite_discrete(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(Family::FiniteDiscrete { points })
    }

    pub fn geometric(p: f64) -> Result<Self> {
        Self::build(Family::Geometric { p })
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::build(Family::Poisson { lambda })
    }

    pub fn uniform(omega: f64) -> Result<Self> {
        Self::build(Family::Uniform { omega })
    }

    pub fn exponential(eta: f64) -> Result<Self> {
        Self::build(Family::Exponential { eta })
    }

    pub fn rayleigh(theta: f64) -> Result<Self> {
        Self::build(Family::Rayleigh { theta })
    }

    /// Replaces the quadrature settings used by [`Self::truncated_expect`].
    pub fn with_quadrature(mut self, quad: Quadrature) -> Self {
        self.quad = quad;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Essential infimum `x̲`.
    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    /// Essential supremum `x̄`; `+inf` for unbounded supports.
    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    /// `x̄` when finite, otherwise `quantile(1 - 1e-12)`.
    pub fn scan_cap(&self) -> f64 {
        self.cap
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self.family,
            Family::Bernoulli { .. } | Family::FiniteDiscrete { .. } | Family::Geometric { .. } | Family::Poisson { .. }
        )
    }

    /// Atoms in increasing order (tail-truncated for infinite supports);
    /// `None` for continuous laws.
    pub fn atoms(&self) -> Option<Atoms<'_>> {
        let inner = match &self.family {
            Family::Bernoulli { .. } | Family::FiniteDiscrete { .. } => AtomsInner::List(self.atoms.iter()),
            Family::Geometric { p } => AtomsInner::Geometric {
                k: 0,
                end: self.geometric_end,
                p: *p,
                ln_q: (-p).ln_1p(),
            },
            Family::Poisson { lambda } => {
                let w = self.poisson.expect("poisson window");
                AtomsInner::Poisson {
                    k: w.k_lo,
                    end: w.k_hi,
                    lambda: *lambda,
                }
            }
            _ => return None,
        };
        Some(Atoms { inner })
    }

    fn poisson_cumulative(&self) -> &[f64] {
        self.poisson_cdf.get_or_init(|| {
            let mut acc = 0.0;
            self.atoms()
                .expect("poisson is discrete")
                .map(|(_, m)| {
                    acc += m;
                    acc
                })
                .collect()
        })
    }

    /// Density for continuous laws (0 for discrete ones).
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self.family {
            Family::Uniform { omega } => {
                if x <= omega {
                    1.0 / omega
                } else {
                    0.0
                }
            }
            Family::Exponential { eta } => eta * (-eta * x).exp(),
            Family::Rayleigh { theta } => x / theta * (-x * x / (2.0 * theta)).exp(),
            _ => 0.0,
        }
    }

    /// `ρ(x) = P(X < x)`.
    pub fn cdf_strict(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 || x <= self.x_lo {
            return 0.0;
        }
        match &self.family {
            Family::Bernoulli { .. } | Family::FiniteDiscrete { .. } => {
                self.atoms.iter().take_while(|&&(a, _)| a < x).map(|&(_, m)| m).sum()
            }
            Family::Geometric { p } => {
                // Atoms k < x are 0..ceil(x)-1.
                let n = x.ceil();
                -(n * (-p).ln_1p()).exp_m1()
            }
            Family::Poisson { .. } => {
                let w = self.poisson.expect("poisson window");
                let n = x.ceil();
                if n <= w.k_lo as f64 {
                    return 0.0;
                }
                let cum = self.poisson_cumulative();
                let idx = ((n as u64 - 1 - w.k_lo) as usize).min(cum.len() - 1);
                cum[idx]
            }
            Family::Uniform { omega } => (x / omega).min(1.0),
            Family::Exponential { eta } => -(-eta * x).exp_m1(),
            Family::Rayleigh { theta } => -(-x * x / (2.0 * theta)).exp_m1(),
        }
    }

    /// `P(X >= x) = 1 - ρ(x)`, computed without cancellation for the
    /// continuous families.
    pub fn survival(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 1.0;
        }
        match self.family {
            Family::Uniform { omega } => (1.0 - x / omega).max(0.0),
            Family::Exponential { eta } => (-eta * x).exp(),
            Family::Rayleigh { theta } => (-x * x / (2.0 * theta)).exp(),
            Family::Geometric { p } => (x.ceil() * (-p).ln_1p()).exp(),
            _ => 1.0 - self.cdf_strict(x),
        }
    }

    /// `P(X = x)`.
    pub fn point_mass(&self, x: f64) -> f64 {
        match &self.family {
            Family::Bernoulli { .. } | Family::FiniteDiscrete { .. } => self
                .atoms
                .iter()
                .find(|&&(a, _)| a == x)
                .map_or(0.0, |&(_, m)| m),
            Family::Geometric { p } => {
                if x >= 0.0 && x.fract() == 0.0 && x.is_finite() {
                    p * (x * (-p).ln_1p()).exp()
                } else {
                    0.0
                }
            }
            Family::Poisson { lambda } if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 => {
                poisson_ln_pmf(*lambda, x as u64).exp()
            }
            _ => 0.0,
        }
    }

    /// `E[g(X)·1{X < c}] = ρ(c)·E[g(X) | X < c]`.
    ///
    /// Exact atom sums for discrete laws (tails below [`TAIL_MASS`] dropped),
    /// adaptive Gauss–Kronrod for continuous ones. `c <= 0` is a domain
    /// error.
    pub fn truncated_expect<G: Fn(f64) -> f64>(&self, g: G, c: f64) -> Result<f64> {
        if !(c > 0.0) {
            return Err(Error::domain(format!("truncation point must be > 0, got {c}")));
        }
        self.truncated_expect_with(g, c, &self.quad)
    }

    /// As [`Self::truncated_expect`] with explicit quadrature settings; any
    /// `c <= x̲` yields 0.
    pub fn truncated_expect_with<G: Fn(f64) -> f64>(&self, g: G, c: f64, quad: &Quadrature) -> Result<f64> {
        if c.is_nan() || c <= self.x_lo {
            return Ok(0.0);
        }
        if let Some(atoms) = self.atoms() {
            return Ok(atoms.take_while(|&(x, _)| x < c).map(|(x, m)| m * g(x)).sum());
        }
        let upper = c.min(self.x_hi).min(self.integration_horizon());
        if upper <= self.x_lo {
            return Ok(0.0);
        }
        quad.integrate(|x| g(x) * self.density(x), self.x_lo, upper)
            .map(|e| e.value)
    }

    /// Point beyond which a continuous density underflows to zero.
    fn integration_horizon(&self) -> f64 {
        // e^{-745} is below the smallest subnormal.
        match self.family {
            Family::Exponential { eta } => 745.0 / eta,
            Family::Rayleigh { theta } => (2.0 * theta * 745.0).sqrt(),
            _ => f64::INFINITY,
        }
    }

    /// `E[min{X, c}]`.
    pub fn expected_min(&self, c: f64) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(Error::domain(format!("capacity must be >= 0, got {c}")));
        }
        if c == 0.0 {
            return Ok(0.0);
        }
        Ok(self.truncated_expect_with(|x| x, c, &self.quad)? + c * self.survival(c))
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Bernoulli { x_lo, x_hi, p } => {
                if rng.random::<f64>() < *p {
                    *x_hi
                } else {
                    *x_lo
                }
            }
            Family::FiniteDiscrete { .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(x, m) in &self.atoms {
                    acc += m;
                    if u < acc {
                        return x;
                    }
                }
                self.atoms[self.atoms.len() - 1].0
            }
            Family::Geometric { p } => Geometric::new(*p).expect("validated p").sample(rng) as f64,
            Family::Poisson { lambda } => Poisson::new(*lambda).expect("validated lambda").sample(rng),
            Family::Uniform { omega } => omega * rng.random::<f64>(),
            Family::Exponential { eta } => Exp::new(*eta).expect("validated eta").sample(rng),
            Family::Rayleigh { theta } => {
                let u: f64 = rng.random();
                (-2.0 * theta * (-u).ln_1p()).sqrt()
            }
        }
    }

    /// Parses the CLI grammar, e.g. `poisson:lambda=2.0`,
    /// `bernoulli:xlo=0,xhi=5,p=0.5`, `discrete:points=0:0.2;1:0.5;4:0.3`.
    /// Sweep families also accept `mu=<mean>` in place of their parameter.
    pub fn parse(input: &str) -> Result<Self> {
        let args = parse_spec(input)?;
        match args.name.as_str() {
            "bernoulli" => {
                args.only(&["xlo", "xhi", "p"])?;
                Self::bernoulli(args.require("xlo")?, args.require("xhi")?, args.require("p")?)
            }
            "discrete" => {
                args.only(&["points"])?;
                let raw = args
                    .raw("points")
                    .ok_or_else(|| Error::parse(input, "missing key `points`"))?;
                let mut points = Vec::new();
                for entry in raw.split(';') {
                    let (x, m) = entry
                        .split_once(':')
                        .ok_or_else(|| Error::parse(input, format!("atom `{entry}` is not x:p")))?;
                    points.push((
                        crate::spec::parse_number(input, "atom", x)?,
                        crate::spec::parse_number(input, "mass", m)?,
                    ));
                }
                Self::finite_discrete(points)
            }
            name => {
                let family = FamilyName::parse(name)
                    .map_err(|_| Error::parse(input, format!("unknown distribution `{name}`")))?;
                let key = match family {
                    FamilyName::Geometric => "p",
                    FamilyName::Poisson => "lambda",
                    FamilyName::Uniform => "omega",
                    FamilyName::Exponential => "eta",
                    FamilyName::Rayleigh => "theta",
                };
                args.only(&[key, "mu"])?;
                let value = match (args.number(key)?, args.number("mu")?) {
                    (Some(v), None) => v,
                    (None, Some(mu)) => return family.with_mean(mu),
                    (Some(_), Some(_)) => {
                        return Err(Error::parse(input, format!("give either `{key}` or `mu`, not both")))
                    }
                    (None, None) => return Err(Error::parse(input, format!("missing key `{key}`"))),
                };
                match family {
                    FamilyName::Geometric => Self::geometric(value),
                    FamilyName::Poisson => Self::poisson(value),
                    FamilyName::Uniform => Self::uniform(value),
                    FamilyName::Exponential => Self::exponential(value),
                    FamilyName::Rayleigh => Self::rayleigh(value),
                }
            }
        }
    }
}

impl fmt::Display for EnergyDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Bernoulli { x_lo, x_hi, p } => write!(f, "bernoulli:xlo={x_lo},xhi={x_hi},p={p}"),
            Family::FiniteDiscrete { points } => {
                write!(f, "discrete:points=")?;
                for (i, (x, m)) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}:{m}")?;
                }
                Ok(())
            }
            Family::Geometric { p } => write!(f, "geometric:p={p}"),
            Family::Poisson { lambda } => write!(f, "poisson:lambda={lambda}"),
            Family::Uniform { omega } => write!(f, "uniform:omega={omega}"),
            Family::Exponential { eta } => write!(f, "exponential:eta={eta}"),
            Family::Rayleigh { theta } => write!(f, "rayleigh:theta={theta}"),
        }
    }
}

/// Increasing `(location, mass)` pairs of a discrete law.
pub struct Atoms<'a> {
    inner: AtomsInner<'a>,
}

enum AtomsInner<'a> {
    List(std::slice::Iter<'a, (f64, f64)>),
    Geometric { k: u64, end: u64, p: f64, ln_q: f64 },
    Poisson { k: u64, end: u64, lambda: f64 },
}

impl Iterator for Atoms<'_> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        match &mut self.inner {
            AtomsInner::List(it) => it.next().copied(),
            AtomsInner::Geometric { k, end, p, ln_q } => {
                if *k > *end {
                    return None;
                }
                let x = *k as f64;
                *k += 1;
                Some((x, *p * (x * *ln_q).exp()))
            }
            AtomsInner::Poisson { k, end, lambda } => {
                if *k > *end {
                    return None;
                }
                let x = *k;
                *k += 1;
                Some((x as f64, poisson_ln_pmf(*lambda, x).exp()))
            }
        }
    }
}
