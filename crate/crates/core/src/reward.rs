//! Concave reward functions `r` with continuous derivative, plus the upper
//! concave / lower convex envelopes of `r'` used by the threshold bounds.

use std::fmt;

use crate::error::{Error, Result};

/// Sample count for the hull-based envelope of tabulated derivatives.
pub const ENVELOPE_POINTS: usize = 4097;

#[derive(Debug, Clone, PartialEq)]
pub enum RewardFunction {
    /// `r(x) = ½·ln(1 + x)`.
    Awgn,
    /// `r(x) = slope·x`.
    Linear { slope: f64 },
    Tabulated(Tabulated),
}

/// Breakpoint table `(x, r(x), r'(x))`, linearly interpolated, extended
/// affinely past the last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    x: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
}

impl Tabulated {
    /// Validates the table: starts at 0, strictly increasing abscissae,
    /// `r(0) >= 0`, nondecreasing values, nonincreasing nonnegative
    /// derivatives and nonincreasing chord slopes.
    pub fn new(points: Vec<(f64, f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::domain("tabulated reward needs at least two breakpoints"));
        }
        if points.iter().any(|&(x, r, d)| !(x.is_finite() && r.is_finite() && d.is_finite())) {
            return Err(Error::domain("tabulated reward entries must be finite"));
        }
        if points[0].0 != 0.0 {
            return Err(Error::domain("tabulated reward must start at x = 0"));
        }
        if points[0].1 < 0.0 {
            return Err(Error::domain("tabulated reward needs r(0) >= 0"));
        }
        let mut prev_chord = f64::INFINITY;
        for w in points.windows(2) {
            let ((x0, r0, d0), (x1, r1, d1)) = (w[0], w[1]);
            if x1 <= x0 {
                return Err(Error::domain("tabulated reward abscissae must be strictly increasing"));
            }
            if r1 < r0 {
                return Err(Error::domain("tabulated reward must be nondecreasing"));
            }
            if d1 > d0 || d1 < 0.0 || d0 < 0.0 {
                return Err(Error::domain(
                    "tabulated derivative must be nonnegative and nonincreasing (concave reward)",
                ));
            }
            let chord = (r1 - r0) / (x1 - x0);
            if chord > prev_chord * (1.0 + 1e-12) {
                return Err(Error::domain("tabulated reward chords must be nonincreasing (concave reward)"));
            }
            prev_chord = chord;
        }
        let (x, rest): (Vec<_>, Vec<_>) = points.into_iter().map(|(x, r, d)| (x, (r, d))).unzip();
        let (r, dr) = rest.into_iter().unzip();
        Ok(Self { x, r, dr })
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let last = self.x.len() - 1;
        if x >= self.x[last] {
            return None;
        }
        let i = self.x.partition_point(|&v| v <= x).saturating_sub(1);
        let t = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        Some((i, t))
    }

    fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((i, t)) => self.r[i] + t * (self.r[i + 1] - self.r[i]),
            None => {
                let l = self.x.len() - 1;
                self.r[l] + self.dr[l] * (x - self.x[l])
            }
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((i, t)) => self.dr[i] + t * (self.dr[i + 1] - self.dr[i]),
            None => self.dr[self.x.len() - 1],
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.x
            .iter()
            .zip(&self.r)
            .zip(&self.dr)
            .map(|((&x, &r), &d)| (x, r, d))
    }
}

fn check_energy(x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!("energy must be >= 0, got {x}")))
    }
}

fn check_window(x_lo: f64, c: f64, x: f64) -> Result<()> {
    if !(x_lo < c) {
        return Err(Error::domain(format!("envelope needs x_lo < c, got [{x_lo}, {c}]")));
    }
    if !(x_lo..=c).contains(&x) {
        return Err(Error::domain(format!("{x} outside envelope interval [{x_lo}, {c}]")));
    }
    Ok(())
}

impl RewardFunction {
    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(Error::domain(format!("linear reward slope must be positive, got {slope}")));
        }
        Ok(RewardFunction::Linear { slope })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        check_energy(x)?;
        Ok(self.value(x))
    }

    pub fn deriv(&self, x: f64) -> Result<f64> {
        check_energy(x)?;
        Ok(self.derivative(x))
    }

    /// Unchecked `r(x)` for hot loops; callers guarantee `x >= 0`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            RewardFunction::Awgn => 0.5 * x.ln_1p(),
            RewardFunction::Linear { slope } => slope * x,
            RewardFunction::Tabulated(t) => t.value(x),
        }
    }

    /// Unchecked `r'(x)`; `x = +inf` gives the limit `r'(∞)`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            RewardFunction::Awgn => 0.5 / (1.0 + x),
            RewardFunction::Linear { slope } => *slope,
            RewardFunction::Tabulated(t) => t.deriv(x),
        }
    }

    pub fn is_awgn(&self) -> bool {
        matches!(self, RewardFunction::Awgn)
    }

    /// Upper concave envelope of `r'` over `[x_lo, c]` evaluated at `x`.
    pub fn deriv_upper_concave_env(&self, x_lo: f64, c: f64, x: f64) -> Result<f64> {
        check_window(x_lo, c, x)?;
        Ok(match self {
            // r' is convex, so the envelope is the chord through the endpoints.
            RewardFunction::Awgn => (1.0 + x_lo + c - x) / (2.0 * (1.0 + x_lo) * (1.0 + c)),
            RewardFunction::Linear { slope } => *slope,
            RewardFunction::Tabulated(_) => {
                hull_envelope(|t| self.derivative(t), x_lo, c, x, ENVELOPE_POINTS, Hull::Upper)
            }
        })
    }

    /// Lower convex envelope of `r'` over `[x_lo, c]` evaluated at `x`.
    pub fn deriv_lower_convex_env(&self, x_lo: f64, c: f64, x: f64) -> Result<f64> {
        check_window(x_lo, c, x)?;
        Ok(match self {
            RewardFunction::Awgn => 0.5 / (1.0 + x),
            RewardFunction::Linear { slope } => *slope,
            RewardFunction::Tabulated(_) => {
                hull_envelope(|t| self.derivative(t), x_lo, c, x, ENVELOPE_POINTS, Hull::Lower)
            }
        })
    }

    /// Parses `awgn`, `linear:slope=S` or `tabulated:points=x:r:dr;x:r:dr;...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (spec, None),
        };
        match (name.to_ascii_lowercase().as_str(), args) {
            ("awgn", None) => Ok(RewardFunction::Awgn),
            ("awgn", Some(_)) => Err(Error::parse(spec, "awgn takes no parameters")),
            ("linear", Some(args)) => {
                let (key, value) = args
                    .split_once('=')
                    .ok_or_else(|| Error::parse(spec, "expected slope=<value>"))?;
                if key.trim() != "slope" {
                    return Err(Error::parse(spec, format!("unknown key `{}`", key.trim())));
                }
                let slope = value
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(spec, format!("bad slope: {e}")))?;
                RewardFunction::linear(slope)
            }
            ("tabulated", Some(args)) => {
                let list = args
                    .strip_prefix("points=")
                    .ok_or_else(|| Error::parse(spec, "expected points=<x:r:dr;...>"))?;
                let mut points = Vec::new();
                for entry in list.split(';') {
                    let fields: Vec<_> = entry.split(':').collect();
                    if fields.len() != 3 {
                        return Err(Error::parse(spec, format!("breakpoint `{entry}` is not x:r:dr")));
                    }
                    let mut nums = [0.0; 3];
                    for (slot, f) in nums.iter_mut().zip(&fields) {
                        *slot = f
                            .trim()
                            .parse::<f64>()
                            .map_err(|e| Error::parse(spec, format!("bad number `{f}`: {e}")))?;
                    }
                    points.push((nums[0], nums[1], nums[2]));
                }
                Tabulated::new(points).map(RewardFunction::Tabulated)
            }
            (other, _) => Err(Error::parse(spec, format!("unknown reward `{other}`"))),
        }
    }
}

impl fmt::Display for RewardFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardFunction::Awgn => write!(f, "awgn"),
            RewardFunction::Linear { slope } => write!(f, "linear:slope={slope}"),
            RewardFunction::Tabulated(t) => {
                write!(f, "tabulated:points=")?;
                for (i, (x, r, d)) in t.points().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}:{r}:{d}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hull {
    /// Upper concave envelope.
    Upper,
    /// Lower convex envelope.
    Lower,
}

/// Envelope of `f` sampled on `n` equispaced points of `[a, b]` (endpoints
/// included), linearly interpolated between hull vertices and evaluated at
/// `x`.
pub fn hull_envelope<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, x: f64, n: usize, side: Hull) -> f64 {
    assert!(n >= 2 && a < b);
    let h = (b - a) / (n - 1) as f64;
    let node = |i: usize| if i == n - 1 { b } else { a + h * i as f64 };
    // Andrew's monotone chain over points already sorted by abscissa.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(n);
    for i in 0..n {
        let p = (node(i), f(node(i)));
        while hull.len() >= 2 {
            let (o, q) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (q.0 - o.0) * (p.1 - o.1) - (q.1 - o.1) * (p.0 - o.0);
            let drop = match side {
                Hull::Upper => cross >= 0.0,
                Hull::Lower => cross <= 0.0,
            };
            if drop {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let k = hull.partition_point(|&(hx, _)| hx < x);
    if k == 0 {
        return hull[0].1;
    }
    if k == hull.len() {
        return hull[hull.len() - 1].1;
    }
    let (p, q) = (hull[k - 1], hull[k]);
    let t = (x - p.0) / (q.0 - p.0);
    p.1 + t * (q.1 - p.1)
}
