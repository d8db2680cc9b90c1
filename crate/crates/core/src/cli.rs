//! Command-line front end of the `ehpc` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analysis::{asymptotic_sweep, curves, curves_csv, sweep_csv, Regime};
use crate::bellman::{phi_scan, solve, SolverConfig};
use crate::distributions::{EnergyDistribution, FamilyName};
use crate::error::Error;
use crate::reward::RewardFunction;
use crate::sim::{compare_policies, simulate, Policy, PolicySpec};
use crate::spec::parse_number_list;
use crate::threshold::{bound_lower_with, bound_upper_with, c_star_auto, semi_bounds_awgn, ThresholdReport, SCAN_POINTS};
use crate::verify::{run_check, CHECK_COUNT};

pub const EXIT_OK: i32 = 0;
/// Some verify check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "ehpc", version, about = "Greedy-optimality thresholds and optimal power control for energy harvesting links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Model {
    /// Arrival law, e.g. `bernoulli:xlo=0,xhi=5,p=0.5` or `exponential:mu=1`.
    #[arg(long)]
    dist: String,
    /// Reward: `awgn`, `linear:slope=S` or `tabulated:points=x:r:dr;...`.
    #[arg(long, default_value = "awgn")]
    reward: String,
}

#[derive(Debug, Args)]
struct Solver {
    /// Battery grid points.
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Span tolerance on `T h - h`.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
    #[arg(long, default_value_t = 1.0)]
    damping: f64,
}

impl Solver {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            grid_n: self.grid,
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            damping: self.damping,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// c* with its bounds, as JSON.
    Threshold {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = SCAN_POINTS)]
        scan_points: usize,
    },
    /// Bounds on c* without computing it, as JSON.
    Bounds {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = SCAN_POINTS)]
        scan_points: usize,
    },
    /// Optimal policy at one capacity; CSV `b,h,g_opt`.
    Solve {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        capacity: f64,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Average reward of a policy along one seeded trajectory, as JSON.
    Simulate {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        capacity: f64,
        /// `greedy`, `modified:eps=E` or `optimal`.
        #[arg(long, default_value = "greedy")]
        policy: String,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Paired comparison against this policy instead of a single run.
        #[arg(long)]
        against: Option<String>,
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        #[command(flatten)]
        solver: Solver,
    },
    /// Throughput curves `c,gamma_star,gamma_greedy,gamma_upper`.
    Curves {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        c_min: f64,
        #[arg(long)]
        c_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// `c*/ψ(μ)` over a list of means; CSV `mu,c_star,psi,ratio`.
    Sweep {
        #[arg(long)]
        family: String,
        #[arg(long)]
        regime: String,
        /// Comma-separated means in increasing order.
        #[arg(long)]
        mu: String,
        #[command(flatten)]
        output: Output,
    },
    /// Monotonicity of the one-step objective on a `(b, g)` grid, as JSON.
    Phicheck {
        #[command(flatten)]
        model: Model,
        /// Capacity; defaults to `fraction·c*`.
        #[arg(long)]
        capacity: Option<f64>,
        #[arg(long, default_value_t = 0.9)]
        fraction: f64,
        #[arg(long, default_value_t = 50)]
        b_points: usize,
        #[arg(long, default_value_t = 200)]
        g_points: usize,
    },
    /// Runs the self-check suite; exit 1 when a check fails.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Run only this check (1-10).
        #[arg(long)]
        only: Option<u8>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure::Lib(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DOMAIN
            }
        }
        Err(Failure::Io(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_IO
        }
    }
}

fn model(m: &Model) -> Result<(EnergyDistribution, RewardFunction), Error> {
    Ok((EnergyDistribution::parse(&m.dist)?, RewardFunction::parse(&m.reward)?))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

fn emit(text: &str, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    match command {
        Command::Threshold { model: m, scan_points } => {
            let (d, r) = model(&m)?;
            let report = ThresholdReport::compute_with(&d, &r, scan_points)?;
            stdout.write_all(pretty(&report.to_json()).as_bytes())?;
        }
        Command::Bounds { model: m, scan_points } => {
            let (d, r) = model(&m)?;
            let (lower, step_lower) = bound_lower_with(&d, &r, scan_points)?;
            let (upper, step_upper) = bound_upper_with(&d, &r, scan_points)?;
            let semi = if r.is_awgn() {
                Some(semi_bounds_awgn(d.x_lo(), d.x_hi(), d.mean())?)
            } else {
                None
            };
            let v = json!({
                "c_lower": lower,
                "c_upper": upper.to_json(),
                "semi_lower": semi.map(|s| s.0),
                "semi_upper": semi.map(|s| s.1),
                "scan_step_lower": step_lower,
                "scan_step_upper": step_upper,
                "mu": d.mean(),
            });
            stdout.write_all(pretty(&v).as_bytes())?;
        }
        Command::Solve {
            model: m,
            capacity,
            solver,
            output,
        } => {
            let (d, r) = model(&m)?;
            let sol = solve(&d, &r, capacity, &solver.config())?;
            let summary = serde_json::to_value(sol.summary()).expect("summary serialises");
            if output.json {
                let rows: Vec<Value> = (0..sol.grid.len())
                    .map(|i| json!({"b": sol.grid[i], "h": sol.bias[i], "g_opt": sol.policy[i]}))
                    .collect();
                emit(&pretty(&json!({"summary": summary, "rows": rows})), &output.out, stdout)?;
            } else {
                emit(&sol.to_csv(), &output.out, stdout)?;
                let sink: &mut dyn Write = if output.out.is_some() { stdout } else { stderr };
                sink.write_all(pretty(&summary).as_bytes())?;
            }
        }
        Command::Simulate {
            model: m,
            capacity,
            policy,
            steps,
            seed,
            against,
            replicates,
            solver,
        } => {
            let (d, r) = model(&m)?;
            let build = |text: &str| -> Result<Policy, Error> {
                Ok(match PolicySpec::parse(text)? {
                    PolicySpec::Greedy => Policy::Greedy,
                    PolicySpec::Modified { eps } => Policy::ModifiedGreedy { eps },
                    PolicySpec::Optimal => Policy::FromSolution(Arc::new(solve(&d, &r, capacity, &solver.config())?)),
                })
            };
            let a = build(&policy)?;
            let v = match against {
                None => {
                    let res = simulate(&a, &d, &r, capacity, steps, seed)?;
                    let mut v = serde_json::to_value(res).expect("result serialises");
                    v["policy"] = json!(PolicySpec::parse(&policy)?.to_string());
                    v
                }
                Some(other) => {
                    let b = build(&other)?;
                    let cmp = compare_policies(&a, &b, &d, &r, capacity, steps, seed, replicates)?;
                    let mut v = serde_json::to_value(cmp).expect("comparison serialises");
                    v["policy"] = json!(PolicySpec::parse(&policy)?.to_string());
                    v["against"] = json!(PolicySpec::parse(&other)?.to_string());
                    v["steps"] = json!(steps);
                    v
                }
            };
            stdout.write_all(pretty(&v).as_bytes())?;
        }
        Command::Curves {
            model: m,
            c_min,
            c_max,
            points,
            solver,
            output,
        } => {
            let (d, r) = model(&m)?;
            let rows = curves(&d, &r, c_min, c_max, points, &solver.config())?;
            let text = if output.json {
                pretty(&serde_json::to_value(&rows).expect("rows serialise"))
            } else {
                curves_csv(&rows)
            };
            emit(&text, &output.out, stdout)?;
            for row in rows.iter().filter(|row| row.error.is_some()) {
                writeln!(stderr, "warning: c = {}: {}", row.c, row.error.as_deref().unwrap_or(""))?;
            }
        }
        Command::Sweep {
            family,
            regime,
            mu,
            output,
        } => {
            let family = FamilyName::parse(&family)?;
            let regime = Regime::parse(&regime)?;
            let mus = parse_number_list(&mu)?;
            let rows = asymptotic_sweep(family, regime, &mus)?;
            let text = if output.json {
                pretty(&serde_json::to_value(&rows).expect("rows serialise"))
            } else {
                sweep_csv(&rows)
            };
            emit(&text, &output.out, stdout)?;
        }
        Command::Phicheck {
            model: m,
            capacity,
            fraction,
            b_points,
            g_points,
        } => {
            let (d, r) = model(&m)?;
            let (c_star, _) = c_star_auto(&d, &r)?;
            let c = match capacity {
                Some(c) => c,
                None if fraction > 0.0 && fraction.is_finite() => fraction * c_star,
                None => return Err(Error::domain(format!("fraction must be positive, got {fraction}")).into()),
            };
            let scan = phi_scan(&d, &r, c, b_points, g_points)?;
            let mut v = serde_json::to_value(&scan).expect("scan serialises");
            v["c_star"] = json!(c_star);
            stdout.write_all(pretty(&v).as_bytes())?;
        }
        Command::Verify { seed, only, json } => {
            let ids: Vec<u8> = match only {
                Some(id) if (1..=CHECK_COUNT).contains(&id) => vec![id],
                Some(id) => return Err(Error::domain(format!("no check numbered {id}")).into()),
                None => (1..=CHECK_COUNT).collect(),
            };
            let mut results = Vec::new();
            for id in ids {
                let res = run_check(id, seed);
                if !json {
                    writeln!(stdout, "{}", res.line())?;
                    stdout.flush()?;
                }
                results.push(res);
            }
            let passed = results.iter().filter(|r| r.passed).count();
            if json {
                stdout.write_all(pretty(&serde_json::to_value(&results).expect("results serialise")).as_bytes())?;
            } else {
                writeln!(stdout, "{passed}/{} checks passed", results.len())?;
            }
            return Ok(if passed == results.len() { EXIT_OK } else { EXIT_CHECK_FAILED });
        }
    }
    Ok(EXIT_OK)
}
