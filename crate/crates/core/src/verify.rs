//! Self-check suite: one check per acceptance criterion, each reporting
//! pass or fail on its own.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{asymptotic_sweep, curves, curves_csv, sweep_csv, trend_holds, Regime};
use crate::bellman::{phi_scan, solve, SolverConfig, PHI_SLACK};
use crate::distributions::{EnergyDistribution, FamilyName};
use crate::error::Result;
use crate::reward::RewardFunction;
use crate::sim::{compare_policies, simulate, Policy};
use crate::threshold::{
    bernoulli_reference, bound_lower, bound_upper, c_star, c_star_auto, c_star_continuous_awgn,
    c_star_discrete_exact, greedy_throughput, rayleigh_a_star, semi_bounds_awgn,
};

pub const CHECK_COUNT: u8 = 10;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} ({}) [{:.2}s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub fn name(id: u8) -> &'static str {
    match id {
        1 => "bernoulli closed forms",
        2 => "discrete/continuous characterization",
        3 => "exact values",
        4 => "greedy optimal below threshold",
        5 => "greedy suboptimal above threshold",
        6 => "bound ordering",
        7 => "phi monotonicity",
        8 => "asymptotic trends",
        9 => "throughput sandwich",
        10 => "determinism",
        _ => "unknown",
    }
}

/// Runs check `id` (1..=10) with randomness derived from `seed`.
pub fn run_check(id: u8, seed: u64) -> CheckResult {
    let start = Instant::now();
    let outcome = match id {
        1 => bernoulli_closed_forms(seed),
        2 => characterizations(seed),
        3 => exact_values(),
        4 => greedy_below_threshold(),
        5 => greedy_above_threshold(seed),
        6 => bound_ordering(seed),
        7 => phi_monotonicity(),
        8 => asymptotic_trends(),
        9 => sandwich(),
        10 => determinism(seed),
        _ => Ok((false, format!("no check numbered {id}"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        id,
        name: name(id),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    (1..=CHECK_COUNT).map(|id| run_check(id, seed)).collect()
}

type Outcome = Result<(bool, String)>;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Random two-point law with `x̲ ∈ [0, 3)`, `x̄ - x̲ ∈ [0.05, 10)`,
/// `p ∈ [0.02, 0.98)`.
pub fn random_bernoulli<R: Rng>(rng: &mut R) -> (f64, f64, f64) {
    let x_lo = rng.random_range(0.0..3.0);
    let x_hi = x_lo + rng.random_range(0.05..10.0);
    let p = rng.random_range(0.02..0.98);
    (x_lo, x_hi, p)
}

fn bernoulli_closed_forms(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x01);
    let r = RewardFunction::Awgn;
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let (x_lo, x_hi, p) = random_bernoulli(&mut rng);
        let d = EnergyDistribution::bernoulli(x_lo, x_hi, p)?;
        let reference = bernoulli_reference(x_lo, x_hi, p)?;
        let upper = bound_upper(&d, &r)?.finite().unwrap_or(f64::INFINITY);
        let (semi_lower, semi_upper) = semi_bounds_awgn(x_lo, x_hi, d.mean())?;
        for (got, want) in [
            (c_star(&d, &r)?, reference.c_star),
            (bound_lower(&d, &r)?, reference.c_lower),
            (upper, reference.c_upper),
            (semi_lower, reference.semi_lower),
            (semi_upper, reference.semi_upper),
        ] {
            worst = worst.max(rel_err(got, want));
        }
    }
    Ok((worst <= 1e-8, format!("500 triples, worst error {worst:.2e}")))
}

fn random_instance<R: Rng>(rng: &mut R, family: FamilyName) -> Result<EnergyDistribution> {
    let mu = 10f64.powf(rng.random_range(-1.3..1.3));
    family.with_mean(mu)
}

fn random_finite_discrete<R: Rng>(rng: &mut R) -> Result<EnergyDistribution> {
    let n = rng.random_range(2..7);
    let mut x = rng.random_range(0.0..2.0);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push((x, rng.random_range(0.05..1.0)));
        x += rng.random_range(0.1..3.0);
    }
    let total: f64 = points.iter().map(|p| p.1).sum();
    for p in &mut points {
        p.1 /= total;
    }
    EnergyDistribution::finite_discrete(points)
}

fn characterizations(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x02);
    let r = RewardFunction::Awgn;
    let (mut worst_discrete, mut worst_continuous) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let d = match k % 4 {
            0 => {
                let (x_lo, x_hi, p) = random_bernoulli(&mut rng);
                EnergyDistribution::bernoulli(x_lo, x_hi, p)?
            }
            1 => random_finite_discrete(&mut rng)?,
            2 => random_instance(&mut rng, FamilyName::Geometric)?,
            _ => random_instance(&mut rng, FamilyName::Poisson)?,
        };
        worst_discrete = worst_discrete.max(rel_err(c_star(&d, &r)?, c_star_discrete_exact(&d, &r)?));
    }
    let continuous = [FamilyName::Uniform, FamilyName::Exponential, FamilyName::Rayleigh];
    for k in 0..100 {
        let d = random_instance(&mut rng, continuous[k % 3])?;
        worst_continuous = worst_continuous.max(rel_err(c_star(&d, &r)?, c_star_continuous_awgn(&d)?));
    }
    Ok((
        worst_discrete <= 1e-8 && worst_continuous <= 1e-8,
        format!("worst discrete {worst_discrete:.2e}, continuous {worst_continuous:.2e}"),
    ))
}

fn exact_values() -> Outcome {
    let r = RewardFunction::Awgn;
    let mut worst_geometric = 0.0f64;
    for mu in [0.1, 0.5, 1.0] {
        let (c, _) = c_star_auto(&FamilyName::Geometric.with_mean(mu)?, &r)?;
        worst_geometric = worst_geometric.max((c - mu).abs());
    }
    let mut worst_poisson = 0.0f64;
    for mu in [0.2, 0.5, std::f64::consts::LN_2] {
        let (c, _) = c_star_auto(&EnergyDistribution::poisson(mu)?, &r)?;
        worst_poisson = worst_poisson.max((c - mu.exp_m1()).abs());
    }
    let a = rayleigh_a_star()?;
    Ok((
        worst_geometric <= 1e-9 && worst_poisson <= 1e-8 && (a - 0.875).abs() <= 1e-3,
        format!("geometric {worst_geometric:.2e}, poisson {worst_poisson:.2e}, a* = {a:.6}"),
    ))
}

/// Built-in families at unit mean.
pub fn unit_mean_families() -> Result<Vec<(&'static str, EnergyDistribution)>> {
    Ok(vec![
        ("geometric", EnergyDistribution::geometric(0.5)?),
        ("poisson", EnergyDistribution::poisson(1.0)?),
        ("uniform", EnergyDistribution::uniform(2.0)?),
        ("exponential", EnergyDistribution::exponential(1.0)?),
        ("rayleigh", EnergyDistribution::rayleigh(2.0 / std::f64::consts::PI)?),
    ])
}

fn greedy_below_threshold() -> Outcome {
    let r = RewardFunction::Awgn;
    let cfg = SolverConfig::with_grid(512);
    let (mut worst_gain, mut worst_policy) = (0.0f64, 0.0f64);
    for (_, d) in unit_mean_families()? {
        let (cs, _) = c_star_auto(&d, &r)?;
        for frac in [0.2, 0.4, 0.6, 0.8, 0.95] {
            let c = frac * cs;
            let sol = solve(&d, &r, c, &cfg)?;
            let exact = greedy_throughput(&d, &r, c)?;
            worst_gain = worst_gain.max((sol.gain - exact).abs() / exact);
            let s = sol.step();
            for (b, g) in sol.grid.iter().zip(&sol.policy) {
                worst_policy = worst_policy.max((b - g) / s);
            }
        }
    }
    Ok((
        worst_gain <= 1e-4 && worst_policy <= 1.0 + 1e-9,
        format!("worst relative gain error {worst_gain:.2e}, worst shortfall {worst_policy:.3} steps"),
    ))
}

/// ε maximising the paired gain of ModifiedGreedy over Greedy in a short
/// pilot on streams disjoint from the main run.
pub fn pilot_eps(d: &EnergyDistribution, r: &RewardFunction, c: f64, seed: u64) -> Result<f64> {
    let limit = 0.5 * d.x_hi().min(c);
    let mut best = (f64::NEG_INFINITY, 0.05);
    for k in 1..=10 {
        let eps = 0.05 * k as f64;
        if eps > limit {
            break;
        }
        let cmp = compare_policies(&Policy::ModifiedGreedy { eps }, &Policy::Greedy, d, r, c, 100_000, seed, 10)?;
        if cmp.mean_difference > best.0 {
            best = (cmp.mean_difference, eps);
        }
    }
    Ok(best.1)
}

fn greedy_above_threshold(seed: u64) -> Outcome {
    let r = RewardFunction::Awgn;
    let mut passed = true;
    let mut details = Vec::new();
    for (label, d) in [
        ("bernoulli", EnergyDistribution::bernoulli(0.0, 5.0, 0.5)?),
        ("exponential", EnergyDistribution::exponential(1.0)?),
    ] {
        let (cs, _) = c_star_auto(&d, &r)?;
        let c = 2.0 * cs;
        let sol = solve(&d, &r, c, &SolverConfig::default())?;
        let margin = sol.gain - greedy_throughput(&d, &r, c)?;
        let eps = pilot_eps(&d, &r, c, seed.wrapping_add(1_000_003))?;
        let cmp = compare_policies(&Policy::ModifiedGreedy { eps }, &Policy::Greedy, &d, &r, c, 1_000_000, seed, 20)?;
        let ok = margin > 1e-3 && cmp.significant && cmp.mean_difference > 0.0;
        passed &= ok;
        details.push(format!(
            "{label}: margin {margin:.3e}, eps {eps:.2}, gain {:.3e} ± {:.1e}",
            cmp.mean_difference, cmp.ci_halfwidth_95
        ));
    }
    Ok((passed, details.join("; ")))
}

fn random_any<R: Rng>(rng: &mut R, k: usize) -> Result<EnergyDistribution> {
    match k % 7 {
        0 => {
            let (x_lo, x_hi, p) = random_bernoulli(rng);
            EnergyDistribution::bernoulli(x_lo, x_hi, p)
        }
        1 => random_finite_discrete(rng),
        2 => random_instance(rng, FamilyName::Geometric),
        3 => random_instance(rng, FamilyName::Poisson),
        4 => random_instance(rng, FamilyName::Uniform),
        5 => random_instance(rng, FamilyName::Exponential),
        _ => random_instance(rng, FamilyName::Rayleigh),
    }
}

fn bound_ordering(seed: u64) -> Outcome {
    const SLACK: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x06);
    let r = RewardFunction::Awgn;
    let (mut violations, mut unbounded) = (0usize, 0usize);
    for k in 0..1000 {
        let d = random_any(&mut rng, k)?;
        let (cs, _) = c_star_auto(&d, &r)?;
        let lower = bound_lower(&d, &r)?;
        let (semi_lower, semi_upper) = semi_bounds_awgn(d.x_lo(), d.x_hi(), d.mean())?;
        let mut chain = vec![semi_lower, lower, cs];
        match bound_upper(&d, &r)?.finite() {
            Some(upper) => {
                if !(d.mean() < upper) {
                    violations += 1;
                }
                chain.extend([upper, semi_upper]);
            }
            None => unbounded += 1,
        }
        let slack = |v: f64| SLACK * v.abs().max(1.0);
        if chain.windows(2).any(|w| w[0] > w[1] + slack(w[1])) {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("1000 instances, {violations} violations, {unbounded} with c̄ beyond the cap")))
}

/// Families checked for `φ` monotonicity.
pub fn phi_families() -> Result<Vec<(&'static str, EnergyDistribution)>> {
    let mut all = vec![("bernoulli", EnergyDistribution::bernoulli(0.0, 5.0, 0.5)?)];
    all.extend(unit_mean_families()?);
    Ok(all)
}

fn phi_monotonicity() -> Outcome {
    let r = RewardFunction::Awgn;
    let mut passed = true;
    let mut failures = Vec::new();
    for (label, d) in phi_families()? {
        let (cs, _) = c_star_auto(&d, &r)?;
        let below = phi_scan(&d, &r, 0.9 * cs, 50, 200)?;
        let above = phi_scan(&d, &r, 1.5 * cs, 50, 200)?;
        let ok = below.monotone && above.min_left < 0.0;
        if !ok {
            failures.push(format!(
                "{label} (drop {:.2e}, min left {:.2e})",
                below.worst_drop, above.min_left
            ));
        }
        passed &= ok;
    }
    let detail = if failures.is_empty() {
        format!("6 families, slack {PHI_SLACK:.0e}")
    } else {
        format!("failed: {}", failures.join(", "))
    };
    Ok((passed, detail))
}

/// Three-decade sweeps per family and regime, and the bound on the final
/// `|ratio - 1|`.
pub fn trend_sweeps() -> Vec<(FamilyName, Regime, [f64; 3], f64)> {
    use FamilyName::*;
    use Regime::*;
    vec![
        (Geometric, Small, [0.01, 0.1, 1.0], 0.05),
        (Poisson, Small, [1e-4, 1e-3, 1e-2], 0.05),
        (Uniform, Small, [1e-4, 1e-3, 1e-2], 0.05),
        (Exponential, Small, [1e-100, 1e-99, 1e-98], 0.05),
        (Rayleigh, Small, [1e-8, 1e-7, 1e-6], 0.05),
        (Geometric, Large, [1e6, 1e7, 1e8], 0.15),
        (Poisson, Large, [1e2, 1e3, 1e4], 0.15),
        (Uniform, Large, [1e6, 1e7, 1e8], 0.15),
        (Exponential, Large, [1e12, 1e13, 1e14], 0.15),
        (Rayleigh, Large, [1e2, 1e3, 1e4], 0.15),
    ]
}

fn asymptotic_trends() -> Outcome {
    let mut failures = Vec::new();
    for (family, regime, mus, bound) in trend_sweeps() {
        let rows = asymptotic_sweep(family, regime, &mus)?;
        if !trend_holds(&rows, regime, bound, 1e-12) {
            let ratios: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.ratio)).collect();
            failures.push(format!("{family}/{} [{}]", regime.as_str(), ratios.join(", ")));
        }
    }
    let detail = if failures.is_empty() {
        "10 sweeps".to_string()
    } else {
        format!("failed: {}", failures.join("; "))
    };
    Ok((failures.is_empty(), detail))
}

fn sandwich() -> Outcome {
    const TOL: f64 = 1e-4;
    let r = RewardFunction::Awgn;
    let cfg = SolverConfig::with_grid(512);
    let mut passed = true;
    let mut details = Vec::new();
    for (label, d) in [
        ("bernoulli", EnergyDistribution::bernoulli(0.0, 5.0, 0.5)?),
        ("uniform", EnergyDistribution::uniform(2.0)?),
        ("exponential", EnergyDistribution::exponential(1.0)?),
    ] {
        let (cs, _) = c_star_auto(&d, &r)?;
        let rows = curves(&d, &r, 0.05 * cs, 2.0 * cs, 40, &cfg)?;
        let (mut worst_gap, mut worst_order, mut failed) = (0.0f64, 0.0f64, 0usize);
        for row in &rows {
            let Some(star) = row.gamma_star else {
                failed += 1;
                continue;
            };
            worst_order = worst_order.max(row.gamma_greedy - star).max(star - row.gamma_upper);
            if row.c <= cs {
                worst_gap = worst_gap.max((star - row.gamma_greedy).abs());
            }
        }
        let at_threshold = solve(&d, &r, cs, &cfg)?.gain - greedy_throughput(&d, &r, cs)?;
        worst_gap = worst_gap.max(at_threshold.abs());
        let ok = failed == 0 && worst_order <= TOL && worst_gap <= TOL;
        passed &= ok;
        details.push(format!("{label}: order {worst_order:.1e}, gap {worst_gap:.1e}"));
    }
    Ok((passed, details.join("; ")))
}

fn determinism(seed: u64) -> Outcome {
    let r = RewardFunction::Awgn;
    let d = EnergyDistribution::bernoulli(0.0, 5.0, 0.5)?;
    let sim = || -> Result<String> {
        let res = simulate(&Policy::ModifiedGreedy { eps: 0.25 }, &d, &r, 2.0, 100_000, seed)?;
        Ok(serde_json::to_string(&res).expect("serialisable"))
    };
    let curve = || -> Result<String> {
        Ok(curves_csv(&curves(&d, &r, 0.5, 2.0, 6, &SolverConfig::with_grid(128))?))
    };
    let sweep = || -> Result<String> {
        Ok(sweep_csv(&asymptotic_sweep(FamilyName::Exponential, Regime::Large, &[1e2, 1e3, 1e4])?))
    };
    let same = [sim()? == sim()?, curve()? == curve()?, sweep()? == sweep()?];
    Ok((
        same.iter().all(|&s| s),
        format!("simulate {}, curves {}, sweep {}", same[0], same[1], same[2]),
    ))
}
