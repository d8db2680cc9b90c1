//! Seeded trajectories of the battery recursion
//! `B_t = min{B_{t-1} - G_{t-1} + X_t, c}` under pluggable policies.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bellman::BellmanSolution;
use crate::distributions::EnergyDistribution;
use crate::error::{Error, Result};
use crate::reward::RewardFunction;
use crate::spec::parse_spec;

/// Number of batches for batch-means confidence intervals.
pub const BATCHES: usize = 100;

pub type StationaryMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Policy {
    /// `G_t = B_t`.
    Greedy,
    /// Saves `eps` on odd slots whose arrival is near-maximal.
    ModifiedGreedy { eps: f64 },
    /// Leftover `b - g(b)` interpolated from a Bellman solution.
    FromSolution(Arc<BellmanSolution>),
    Custom(StationaryMap),
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Greedy => write!(f, "Greedy"),
            Policy::ModifiedGreedy { eps } => write!(f, "ModifiedGreedy {{ eps: {eps} }}"),
            Policy::FromSolution(s) => write!(f, "FromSolution {{ grid_n: {} }}", s.grid.len()),
            Policy::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    Greedy,
    Modified { eps: f64 },
    Optimal,
}

impl PolicySpec {
    /// Parses `greedy`, `modified:eps=E` or `optimal`.
    pub fn parse(input: &str) -> Result<Self> {
        let args = parse_spec(input)?;
        match args.name.as_str() {
            "greedy" | "optimal" if !args.is_empty() => {
                Err(Error::parse(input, format!("`{}` takes no parameters", args.name)))
            }
            "greedy" => Ok(PolicySpec::Greedy),
            "optimal" => Ok(PolicySpec::Optimal),
            "modified" => {
                args.only(&["eps"])?;
                let eps = args.require("eps")?;
                if eps <= 0.0 {
                    return Err(Error::parse(input, "eps must be positive"));
                }
                Ok(PolicySpec::Modified { eps })
            }
            other => Err(Error::parse(input, format!("unknown policy `{other}`"))),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Greedy => write!(f, "greedy"),
            PolicySpec::Modified { eps } => write!(f, "modified:eps={eps}"),
            PolicySpec::Optimal => write!(f, "optimal"),
        }
    }
}

/// Checks `eps ∈ (0, ½·min{x̄, c}]`.
pub fn validate_eps(eps: f64, x_hi: f64, c: f64) -> Result<()> {
    let limit = 0.5 * x_hi.min(c);
    if eps > 0.0 && eps <= limit {
        Ok(())
    } else {
        Err(Error::domain(format!("eps must lie in (0, {limit}], got {eps}")))
    }
}

/// The two-phase rule: on odd slots consume `b - eps` when
/// `x >= min{x̄, c} - eps`, otherwise consume everything.
pub fn modified_greedy_step(odd_slot: bool, b: f64, x: f64, c: f64, x_hi: f64, eps: f64) -> f64 {
    if odd_slot && x >= x_hi.min(c) - eps {
        b - eps
    } else {
        b
    }
}

impl Policy {
    fn action(&self, slot: u64, b: f64, x: f64, c: f64, x_hi: f64) -> f64 {
        match self {
            Policy::Greedy => b,
            Policy::ModifiedGreedy { eps } => modified_greedy_step(slot % 2 == 1, b, x, c, x_hi, *eps),
            Policy::FromSolution(sol) => (b - sol.leftover_at(b)).max(0.0),
            Policy::Custom(map) => map(b),
        }
    }

    fn validate(&self, d: &EnergyDistribution, c: f64) -> Result<()> {
        match self {
            Policy::ModifiedGreedy { eps } => validate_eps(*eps, d.x_hi(), c),
            Policy::FromSolution(sol) if (sol.capacity - c).abs() > 1e-12 * c => Err(Error::domain(format!(
                "solution was computed for capacity {}, not {c}",
                sol.capacity
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub steps: u64,
    pub avg_reward: f64,
    /// Batch-means 95% half-width; `None` with fewer than two batches.
    pub ci_halfwidth_95: Option<f64>,
    pub seed: u64,
    pub final_battery: f64,
}

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Mean and 95% half-width of i.i.d. samples.
fn mean_ci(samples: &[f64]) -> (f64, Option<f64>) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    if samples.len() < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, Some(t_quantile(samples.len() - 1) * (var / k).sqrt()))
}

fn run(
    policy: &Policy,
    d: &EnergyDistribution,
    r: &RewardFunction,
    c: f64,
    n: u64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Option<f64>, f64)> {
    let batches = (BATCHES as u64).min(n);
    let x_hi = d.x_hi();
    let mut batch_means = Vec::with_capacity(batches as usize);
    let (mut battery, mut spent) = (0.0f64, 0.0f64);
    let mut total = 0.0;
    let mut slot = 0u64;
    for k in 0..batches {
        let end = n * (k + 1) / batches;
        let len = end - slot;
        let mut acc = 0.0;
        while slot < end {
            slot += 1;
            let x = d.sample(rng);
            battery = (battery - spent + x).min(c);
            debug_assert!((0.0..=c).contains(&battery), "battery {battery} left [0, {c}]");
            let g = policy.action(slot, battery, x, c, x_hi);
            if !(0.0..=battery).contains(&g) {
                return Err(Error::Inadmissible { slot, b: battery, g });
            }
            spent = g;
            acc += r.value(g);
        }
        total += acc;
        batch_means.push(acc / len as f64);
    }
    let (_, half) = mean_ci(&batch_means);
    Ok((total / n as f64, half, battery))
}

fn check_run(c: f64, n: u64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain(format!("capacity must be positive and finite, got {c}")));
    }
    if n == 0 {
        return Err(Error::domain("need at least one step"));
    }
    Ok(())
}

/// Simulates `n` slots; identical arguments give bit-identical results.
pub fn simulate(
    policy: &Policy,
    d: &EnergyDistribution,
    r: &RewardFunction,
    c: f64,
    n: u64,
    seed: u64,
) -> Result<SimulationResult> {
    check_run(c, n)?;
    policy.validate(d, c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (avg_reward, ci_halfwidth_95, final_battery) = run(policy, d, r, c, n, &mut rng)?;
    Ok(SimulationResult {
        steps: n,
        avg_reward,
        ci_halfwidth_95,
        seed,
        final_battery,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Per-replicate `avg(A) - avg(B)`, in replicate order.
    pub differences: Vec<f64>,
    pub mean_difference: f64,
    pub ci_halfwidth_95: f64,
    /// The 95% interval excludes zero.
    pub significant: bool,
    pub seed_base: u64,
}

/// Paired runs of two policies on common arrival streams; replicate `k`
/// uses stream `k` of `seed_base`.
#[allow(clippy::too_many_arguments)]
pub fn compare_policies(
    a: &Policy,
    b: &Policy,
    d: &EnergyDistribution,
    r: &RewardFunction,
    c: f64,
    n: u64,
    seed_base: u64,
    replicates: usize,
) -> Result<Comparison> {
    check_run(c, n)?;
    if replicates < 10 {
        return Err(Error::domain(format!("need at least 10 replicates, got {replicates}")));
    }
    a.validate(d, c)?;
    b.validate(d, c)?;
    let stream = |k: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_base);
        rng.set_stream(k as u64);
        rng
    };
    let differences = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let (ra, _, _) = run(a, d, r, c, n, &mut stream(k))?;
            let (rb, _, _) = run(b, d, r, c, n, &mut stream(k))?;
            Ok(ra - rb)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean_difference, half) = mean_ci(&differences);
    let half = half.expect("at least ten replicates");
    Ok(Comparison {
        significant: mean_difference.abs() > half,
        differences,
        mean_difference,
        ci_halfwidth_95: half,
        seed_base,
    })
}
