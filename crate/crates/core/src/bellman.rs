//! Average-reward Bellman equation
//! `γ + h(b) = max_{0<=g<=b} { r(g) + E[h(min{b - g + X, c})] }`
//! solved by relative value iteration on a uniform battery grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::EnergyDistribution;
use crate::error::{Error, Result};
use crate::output::fmt_g;
use crate::quadrature::gauss_legendre;
use crate::reward::RewardFunction;
use crate::roots::golden_max;

/// Minimum total Gauss–Legendre nodes across the panels of a continuous law.
const MIN_QUADRATURE_NODES: usize = 512;
const MIN_NODES_PER_PANEL: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub grid_n: usize,
    /// Span of `T h - h` at which iteration stops.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Relaxation factor in `(0, 1]`; values below one break periodicity.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_n: 512,
            tol: 1e-8,
            max_sweeps: 100_000,
            damping: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_grid(grid_n: usize) -> Self {
        Self {
            grid_n,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellmanSolution {
    pub capacity: f64,
    pub grid: Vec<f64>,
    pub gain: f64,
    /// Bias normalised so that `h(0) = 0`.
    pub bias: Vec<f64>,
    pub policy: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionSummary {
    pub gamma: f64,
    pub residual: f64,
    pub iterations: usize,
    pub grid_n: usize,
    pub capacity: f64,
}

impl BellmanSolution {
    pub fn step(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Bias interpolated linearly between grid points.
    pub fn bias_at(&self, b: f64) -> f64 {
        interpolate(&self.bias, self.step(), b)
    }

    /// Leftover energy `b - g(b)` interpolated linearly.
    pub fn leftover_at(&self, b: f64) -> f64 {
        let s = self.step();
        let k = ((b / s).floor() as usize).min(self.grid.len() - 2);
        let t = ((b - self.grid[k]) / s).clamp(0.0, 1.0);
        let y0 = self.grid[k] - self.policy[k];
        let y1 = self.grid[k + 1] - self.policy[k + 1];
        y0 + t * (y1 - y0)
    }

    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            gamma: self.gain,
            residual: self.residual,
            iterations: self.iterations,
            grid_n: self.grid.len(),
            capacity: self.capacity,
        }
    }

    /// `b,h,g_opt` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("b,h,g_opt\n");
        for ((b, h), g) in self.grid.iter().zip(&self.bias).zip(&self.policy) {
            out.push_str(&format!("{},{},{}\n", fmt_g(*b), fmt_g(*h), fmt_g(*g)));
        }
        out
    }
}

fn interpolate(values: &[f64], step: f64, x: f64) -> f64 {
    let n = values.len();
    let pos = (x / step).max(0.0);
    let k = (pos.floor() as usize).min(n - 2);
    let t = (pos - k as f64).clamp(0.0, 1.0);
    values[k] + t * (values[k + 1] - values[k])
}

/// Transition weights of `min{y_j + X, c}` onto the grid, for every grid
/// leftover `y_j = j·s`.
///
/// Mass of `X` in `[m·s, (m+1)·s)` is split between offsets `m` and `m+1`
/// by linear interpolation; the structure is identical for every `j`, so a
/// row is a prefix of the panel arrays plus the mass sent to the top.
struct Kernel {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// `top[j] = P(y_j + X >= c)`.
    top: Vec<f64>,
}

impl Kernel {
    fn build(d: &EnergyDistribution, n: usize, step: f64) -> Result<Self> {
        let panels = n - 1;
        let c = step * panels as f64;
        let mut lower = vec![0.0; panels];
        let mut upper = vec![0.0; panels];
        let mut top = vec![0.0; n];
        if let Some(atoms) = d.atoms() {
            for (x, m) in atoms.take_while(|&(x, _)| x < c) {
                let pos = x / step;
                let k = (pos.floor() as usize).min(panels - 1);
                let t = (pos - k as f64).clamp(0.0, 1.0);
                lower[k] += m * (1.0 - t);
                upper[k] += m * t;
            }
            // Mass not placed in panels (including any truncated tail)
            // goes to the top.
            let mut below = 0.0;
            top[n - 1] = 1.0;
            for j in (0..n - 1).rev() {
                let m = n - 2 - j;
                below += lower[m] + upper[m];
                top[j] = (1.0 - below).max(0.0);
            }
        } else {
            let per_panel = MIN_NODES_PER_PANEL.max(MIN_QUADRATURE_NODES.div_ceil(panels));
            let (nodes, weights) = gauss_legendre(per_panel);
            let x_hi = d.x_hi();
            let first_moment = |a: f64, b: f64, origin: f64| {
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&z, &w)| {
                        let x = mid + half * z;
                        w * (x - origin) / step * d.density(x)
                    })
                    .sum::<f64>()
                    * half
            };
            for m in 0..panels {
                let (a, b) = (m as f64 * step, (m + 1) as f64 * step);
                let mass = d.cdf_strict(b) - d.cdf_strict(a);
                let moment = if a >= x_hi {
                    0.0
                } else if b > x_hi {
                    first_moment(a, x_hi, a)
                } else {
                    first_moment(a, b, a)
                };
                upper[m] = moment.clamp(0.0, mass);
                lower[m] = mass - upper[m];
            }
            for (j, slot) in top.iter_mut().enumerate() {
                *slot = d.survival((n - 1 - j) as f64 * step);
            }
        }
        if top.iter().chain(&lower).chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::domain("transition kernel is not finite"));
        }
        Ok(Self { lower, upper, top })
    }

    /// `W_j = E[h(min{y_j + X, c})]` for every `j`.
    fn apply(&self, h: &[f64], out: &mut [f64]) {
        let n = h.len();
        out.par_iter_mut().enumerate().for_each(|(j, w)| {
            let mut acc = self.top[j] * h[n - 1];
            for m in 0..n - 1 - j {
                acc += self.lower[m] * h[j + m] + self.upper[m] * h[j + m + 1];
            }
            *w = acc;
        });
    }
}

/// Maximiser of `r(g) + W(b_i - g)`: grid search from the greedy action
/// downward (ties keep the larger action) and one golden-section pass on
/// the neighbouring cells with `W` interpolated.
fn best_action(i: usize, step: f64, rewards: &[f64], w: &[f64], r: &RewardFunction) -> (f64, f64) {
    let b = i as f64 * step;
    let mut best_j = 0;
    let mut best = rewards[i] + w[0];
    for j in 1..=i {
        let v = rewards[i - j] + w[j];
        if v > best {
            best = v;
            best_j = j;
        }
    }
    if i == 0 {
        return (0.0, best);
    }
    let g_grid = (i - best_j) as f64 * step;
    let lo = (g_grid - step).max(0.0);
    let hi = (g_grid + step).min(b);
    let (g, v) = golden_max(|g| r.value(g) + interpolate(w, step, b - g), lo, hi, 1e-9 * step.max(1e-300));
    if v > best {
        (g, v)
    } else {
        (g_grid, best)
    }
}

pub fn solve(d: &EnergyDistribution, r: &RewardFunction, c: f64, cfg: &SolverConfig) -> Result<BellmanSolution> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::domain(format!("capacity must be positive and finite, got {c}")));
    }
    if cfg.grid_n < 64 {
        return Err(Error::domain(format!("grid needs at least 64 points, got {}", cfg.grid_n)));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::domain(format!("damping must lie in (0, 1], got {}", cfg.damping)));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    let n = cfg.grid_n;
    let step = c / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { c } else { i as f64 * step }).collect();
    let rewards: Vec<f64> = grid.iter().map(|&g| r.value(g)).collect();
    let kernel = Kernel::build(d, n, step)?;

    let mut h = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut th = vec![0.0; n];
    let mut policy = vec![0.0; n];
    let mut span = f64::INFINITY;
    for sweep in 1..=cfg.max_sweeps {
        kernel.apply(&h, &mut w);
        th.par_iter_mut()
            .zip(policy.par_iter_mut())
            .enumerate()
            .for_each(|(i, (t, p))| {
                let (g, v) = best_action(i, step, &rewards, &w, r);
                *t = v;
                *p = g;
            });
        let (lo, hi) = th
            .iter()
            .zip(&h)
            .map(|(t, v)| t - v)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        span = hi - lo;
        if !span.is_finite() {
            break;
        }
        if span <= cfg.tol {
            let base = th[0];
            return Ok(BellmanSolution {
                capacity: c,
                grid,
                gain: 0.5 * (lo + hi),
                bias: th.iter().map(|t| t - base).collect(),
                policy,
                residual: span,
                iterations: sweep,
            });
        }
        let base = th[0];
        for (hv, t) in h.iter_mut().zip(&th) {
            *hv = (1.0 - cfg.damping) * *hv + cfg.damping * (t - base);
        }
    }
    Err(Error::NonConvergence {
        what: "relative value iteration",
        iterations: cfg.max_sweeps,
        residual: span,
    })
}

/// `E[h(min{y + X, c})]` with `h` given by the solution's interpolated bias,
/// computed by the distribution's own quadrature or atom sums.
fn expected_bias(sol: &BellmanSolution, d: &EnergyDistribution, y: f64) -> Result<f64> {
    let c = sol.capacity;
    let gap = c - y;
    let head = if gap > 0.0 {
        d.truncated_expect(|x| sol.bias_at(y + x), gap)?
    } else {
        0.0
    };
    Ok(head + d.survival(gap) * sol.bias_at(c))
}

/// Largest Bellman-equation defect `|max_g{...} - γ - h(b)|` over `points`
/// battery levels placed between the solver's grid points.
pub fn bellman_residual(
    sol: &BellmanSolution,
    d: &EnergyDistribution,
    r: &RewardFunction,
    points: usize,
) -> Result<f64> {
    const CANDIDATES: usize = 256;
    let c = sol.capacity;
    let levels: Vec<f64> = (0..points).map(|k| (k as f64 + 0.37) * c / points as f64).collect();
    let defects: Vec<Result<f64>> = levels
        .par_iter()
        .map(|&b| {
            let value = |g: f64| expected_bias(sol, d, b - g).map(|e| r.value(g) + e);
            let mut best = (b, value(b)?);
            for k in 0..CANDIDATES {
                let g = b * k as f64 / CANDIDATES as f64;
                let v = value(g)?;
                if v > best.1 {
                    best = (g, v);
                }
            }
            let width = b / CANDIDATES as f64;
            let (lo, hi) = ((best.0 - width).max(0.0), (best.0 + width).min(b));
            let mut failure = None;
            let (_, refined) = golden_max(
                |g| match value(g) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NEG_INFINITY
                    }
                },
                lo,
                hi,
                1e-10 * c,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            Ok((best.1.max(refined) - sol.gain - sol.bias_at(b)).abs())
        })
        .collect();
    defects.into_iter().try_fold(0.0f64, |acc, d| Ok(acc.max(d?)))
}

fn check_state(c: f64, b: f64, g: f64) -> Result<()> {
    if !(0.0 <= g && g <= b && b <= c && c.is_finite()) {
        return Err(Error::domain(format!("need 0 <= g <= b <= c, got g={g}, b={b}, c={c}")));
    }
    Ok(())
}

/// `φ(g) = r(g) + E[r(min{b - g + X, c})]`, the one-step objective with
/// the reward itself as bias.
pub fn phi(d: &EnergyDistribution, r: &RewardFunction, c: f64, b: f64, g: f64) -> Result<f64> {
    check_state(c, b, g)?;
    let gap = c - b + g;
    let head = if gap > 0.0 {
        d.truncated_expect(|x| r.value(b - g + x), gap)?
    } else {
        0.0
    };
    Ok(r.value(g) + head + d.survival(gap) * r.value(c))
}

/// Left and right derivatives of [`phi`] in `g`.
///
/// `left = r'(g) - E[r'(b - g + X)·1{X < c - b + g}]` and
/// `right = left - P(X = c - b + g)·r'(c)`.
pub fn phi_semi_derivatives(
    d: &EnergyDistribution,
    r: &RewardFunction,
    c: f64,
    b: f64,
    g: f64,
) -> Result<(f64, f64)> {
    check_state(c, b, g)?;
    let gap = c - b + g;
    let head = if gap > 0.0 {
        d.truncated_expect(|x| r.derivative(b - g + x), gap)?
    } else {
        0.0
    };
    let left = r.derivative(g) - head;
    Ok((left, left - d.point_mass(gap) * r.derivative(c)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiScan {
    pub capacity: f64,
    pub b_points: usize,
    pub g_points: usize,
    /// `φ` never drops between neighbouring `g` grid points.
    pub monotone: bool,
    /// Largest drop `φ(g_k) - φ(g_{k+1})` seen (negative when strictly increasing).
    pub worst_drop: f64,
    /// Smallest left semi-derivative and where it occurs.
    pub min_left: f64,
    pub min_left_at: (f64, f64),
}

/// Evaluates `φ` and its left semi-derivative on `g_k = b·k/(g_points-1)`
/// for `b_i = c·i/b_points`, `i = 1..=b_points`.
pub fn phi_scan(
    d: &EnergyDistribution,
    r: &RewardFunction,
    c: f64,
    b_points: usize,
    g_points: usize,
) -> Result<PhiScan> {
    if !(c > 0.0 && c.is_finite()) || b_points == 0 || g_points < 2 {
        return Err(Error::domain("phi scan needs c > 0, b_points >= 1, g_points >= 2"));
    }
    let per_b: Vec<Result<(f64, f64, f64)>> = (1..=b_points)
        .into_par_iter()
        .map(|i| {
            let b = if i == b_points { c } else { c * i as f64 / b_points as f64 };
            let mut drop = f64::NEG_INFINITY;
            let mut min_left = (f64::INFINITY, 0.0);
            let mut prev: Option<f64> = None;
            for k in 0..g_points {
                let g = if k == g_points - 1 { b } else { b * k as f64 / (g_points - 1) as f64 };
                let v = phi(d, r, c, b, g)?;
                if let Some(p) = prev {
                    drop = drop.max(p - v);
                }
                prev = Some(v);
                if k > 0 {
                    let (left, _) = phi_semi_derivatives(d, r, c, b, g)?;
                    if left < min_left.0 {
                        min_left = (left, g);
                    }
                }
            }
            Ok((drop, min_left.0, min_left.1))
        })
        .collect();
    let mut scan = PhiScan {
        capacity: c,
        b_points,
        g_points,
        monotone: true,
        worst_drop: f64::NEG_INFINITY,
        min_left: f64::INFINITY,
        min_left_at: (0.0, 0.0),
    };
    for (i, res) in per_b.into_iter().enumerate() {
        let (drop, left, g) = res?;
        let b = if i + 1 == b_points { c } else { c * (i + 1) as f64 / b_points as f64 };
        scan.worst_drop = scan.worst_drop.max(drop);
        if left < scan.min_left {
            scan.min_left = left;
            scan.min_left_at = (b, g);
        }
    }
    scan.monotone = scan.worst_drop <= PHI_SLACK;
    Ok(scan)
}

/// Rounding slack allowed when comparing neighbouring `φ` values.
pub const PHI_SLACK: f64 = 1e-12;
