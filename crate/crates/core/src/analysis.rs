//! Throughput curves and asymptotic sweeps of `c*` against the reference
//! scalings `ψ(μ)`.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::bellman::{solve, SolverConfig};
use crate::distributions::{EnergyDistribution, FamilyName};
use crate::error::{Error, Result};
use crate::output::csv_line;
use crate::reward::RewardFunction;
use crate::threshold::{c_star_auto, greedy_throughput, rayleigh_a_star, throughput_upper};

/// Largest mean accepted in the small regime.
pub const SMALL_MU_MAX: f64 = 1.0;
/// Smallest mean accepted in the large regime.
pub const LARGE_MU_MIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Small,
    Large,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(Regime::Small),
            "large" => Ok(Regime::Large),
            other => Err(Error::parse(s, format!("unknown regime `{other}` (small | large)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Small => "small",
            Regime::Large => "large",
        }
    }
}

fn a_star() -> Result<f64> {
    static A_STAR: OnceLock<f64> = OnceLock::new();
    if let Some(a) = A_STAR.get() {
        return Ok(*a);
    }
    let a = rayleigh_a_star()?;
    Ok(*A_STAR.get_or_init(|| a))
}

/// Reference scaling `ψ(μ)` with `c* ~ ψ(μ)` in the given regime.
pub fn psi(family: FamilyName, regime: Regime, mu: f64) -> Result<f64> {
    use FamilyName::*;
    let ln = mu.ln();
    Ok(match (family, regime) {
        (Geometric, Regime::Small) | (Poisson, Regime::Small) | (Poisson, Regime::Large) => mu,
        (Geometric, Regime::Large) | (Exponential, Regime::Large) => mu / ln,
        (Uniform, Regime::Small) => 2.0 * mu,
        (Uniform, Regime::Large) => 2.0 * mu / ln,
        (Exponential, Regime::Small) => -mu * ln,
        (Rayleigh, Regime::Small) => 2.0 / std::f64::consts::PI.sqrt() * mu * (-ln).sqrt(),
        (Rayleigh, Regime::Large) => a_star()? * mu,
    })
}

/// Closed-form `c*` where one is known: geometric `μ` for `μ <= 1` and
/// Poisson `e^μ - 1` for `μ <= ln 2`.
pub fn exact_c_star(family: FamilyName, mu: f64) -> Option<f64> {
    match family {
        FamilyName::Geometric if mu <= 1.0 => Some(mu),
        FamilyName::Poisson if mu <= std::f64::consts::LN_2 => Some(mu.exp_m1()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    pub c_star: f64,
    pub psi: f64,
    pub ratio: f64,
    /// Closed-form `c*` when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

pub fn check_regime(regime: Regime, mu: f64) -> Result<()> {
    let ok = mu.is_finite()
        && mu > 0.0
        && match regime {
            Regime::Small => mu <= SMALL_MU_MAX,
            Regime::Large => mu >= LARGE_MU_MIN,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "mu = {mu} outside the {} regime (small: 0 < mu <= {SMALL_MU_MAX}, large: mu >= {LARGE_MU_MIN})",
            regime.as_str()
        )))
    }
}

/// `c*/ψ(μ)` over increasing means; rows are computed in parallel and
/// returned in input order.
pub fn asymptotic_sweep(family: FamilyName, regime: Regime, mus: &[f64]) -> Result<Vec<SweepRow>> {
    if mus.is_empty() {
        return Err(Error::domain("sweep needs at least one mean"));
    }
    for &mu in mus {
        check_regime(regime, mu)?;
    }
    if mus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("means must be strictly increasing"));
    }
    let r = RewardFunction::Awgn;
    mus.par_iter()
        .map(|&mu| {
            let d = family.with_mean(mu)?;
            let (c_star, _) = c_star_auto(&d, &r)?;
            let psi = psi(family, regime, mu)?;
            Ok(SweepRow {
                mu,
                c_star,
                psi,
                ratio: c_star / psi,
                exact: exact_c_star(family, mu),
            })
        })
        .collect()
}

/// Distances `|ratio - 1|` ordered from the first to the last decade
/// approached, i.e. decreasing `μ` for the small regime.
pub fn approach_errors(rows: &[SweepRow], regime: Regime) -> Vec<f64> {
    let mut errs: Vec<f64> = rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    if regime == Regime::Small {
        errs.reverse();
    }
    errs
}

/// `|ratio - 1|` never increases across the sweep (up to `slack`) and ends
/// below `bound`.
pub fn trend_holds(rows: &[SweepRow], regime: Regime, bound: f64, slack: f64) -> bool {
    let errs = approach_errors(rows, regime);
    errs.windows(2).all(|w| w[1] <= w[0] + slack) && errs.last().is_some_and(|&e| e < bound)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("mu,c_star,psi,ratio\n");
    for r in rows {
        out.push_str(&csv_line(&[r.mu, r.c_star, r.psi, r.ratio]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub c: f64,
    /// Optimal throughput; `None` when the solver failed for this row.
    pub gamma_star: Option<f64>,
    pub gamma_greedy: f64,
    pub gamma_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `(c, γ*, γ̲, γ̄)` on `points` capacities evenly spaced in
/// `[c_min, c_max]`; a single row when `c_min == c_max`.
pub fn curves(
    d: &EnergyDistribution,
    r: &RewardFunction,
    c_min: f64,
    c_max: f64,
    points: usize,
    cfg: &SolverConfig,
) -> Result<Vec<CurveRow>> {
    if !(c_min > 0.0 && c_min <= c_max && c_max.is_finite()) {
        return Err(Error::domain(format!("need 0 < c_min <= c_max < inf, got [{c_min}, {c_max}]")));
    }
    let caps: Vec<f64> = if c_min == c_max {
        vec![c_min]
    } else {
        if points < 2 {
            return Err(Error::domain("need at least two points"));
        }
        (0..points)
            .map(|k| c_min + (c_max - c_min) * k as f64 / (points - 1) as f64)
            .collect()
    };
    caps.par_iter()
        .map(|&c| {
            let gamma_greedy = greedy_throughput(d, r, c)?;
            let gamma_upper = throughput_upper(d, r, c)?;
            let (gamma_star, error) = match solve(d, r, c, cfg) {
                Ok(sol) => (Some(sol.gain), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(CurveRow {
                c,
                gamma_star,
                gamma_greedy,
                gamma_upper,
                error,
            })
        })
        .collect()
}

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("c,gamma_star,gamma_greedy,gamma_upper\n");
    for r in rows {
        out.push_str(&csv_line(&[
            r.c,
            r.gamma_star.unwrap_or(f64::NAN),
            r.gamma_greedy,
            r.gamma_upper,
        ]));
    }
    out
}
