//! Command-line front end: configuration, subcommand dispatch and CSV output.
//!
//! Configuration is layered: built-in defaults, then a per-subcommand preset,
//! then an optional `key = value` file (`--config`), then command-line flags.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::assembly::{Advection, Theta};
use crate::carleman::{default_shift, RatioStatus, DEFAULT_SIGMA};
use crate::error::LabError;
use crate::experiments::{
    run_carleman_report, run_cost_sweep, run_dissipation, run_illposed, run_observability, sine_profile, Setup,
    SweepResolution,
};
use crate::gramian::Problem;
use crate::hum::{compute_null_control, verify_optimality, HumSettings};
use crate::march::{solve_forward, Loads};
use crate::mesh::{ControlSide, PhysParams};

/// Build identifier embedded at compile time.
pub const BUILD_ID: &str = env!("ADVLAB_BUILD_ID");

#[derive(Debug, Parser)]
#[command(name = "advlab", version, about = "Null control and observability experiments for 1-D advection-diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output CSV path (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Free evolution of the sine profile: X-norm and boundary traces per level.
    Solve,
    /// Penalized HUM control of the sine profile.
    Control,
    /// Observability constants for the four problem/boundary combinations.
    Observability,
    /// Backward dissipation of random adjoint data between t1 and t2.
    Dissipation,
    /// Carleman inequality ratios on random adjoint solutions.
    Carleman,
    /// Observability constant and control cost against viscosity.
    CostSweep,
    /// Direct/Γ1 against Adjoint/Γ0 constants under mesh refinement.
    Illposed,
}

/// Numeric overrides; each mirrors a configuration key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long = "L", global = true)]
    pub length: Option<f64>,
    #[arg(long = "T", global = true)]
    pub horizon: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    #[arg(long, global = true)]
    pub nt: Option<usize>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub t1: Option<f64>,
    #[arg(long, global = true)]
    pub t2: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Control side: gamma0 or gamma1.
    #[arg(long, global = true)]
    pub side: Option<String>,
    /// Advection discretization: centered or upwind.
    #[arg(long, global = true)]
    pub advection: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Comma-separated viscosities for cost-sweep.
    #[arg(long, global = true)]
    pub eps_list: Option<String>,
    /// Comma-separated cell counts for illposed.
    #[arg(long, global = true)]
    pub nx_list: Option<String>,
    #[arg(long, global = true)]
    pub c_shift: Option<f64>,
    #[arg(long, global = true)]
    pub cells_per_eps: Option<f64>,
    #[arg(long, global = true)]
    pub steps_per_time: Option<f64>,
    #[arg(long, global = true)]
    pub steps_per_cell: Option<usize>,
    #[arg(long, global = true)]
    pub u0_scale: Option<f64>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($key:literal, $field:expr) => {
                if let Some(v) = &$field {
                    out.push(($key, v.to_string()));
                }
            };
        }
        push!("L", self.length);
        push!("T", self.horizon);
        push!("eps", self.eps);
        push!("nx", self.nx);
        push!("nt", self.nt);
        push!("theta", self.theta);
        push!("beta", self.beta);
        push!("sigma", self.sigma);
        push!("delta", self.delta);
        push!("t1", self.t1);
        push!("t2", self.t2);
        push!("trials", self.trials);
        push!("seed", self.seed);
        push!("jobs", self.jobs);
        push!("side", self.side);
        push!("advection", self.advection);
        push!("tol", self.tol);
        push!("max_iter", self.max_iter);
        push!("eps_list", self.eps_list);
        push!("nx_list", self.nx_list);
        push!("c_shift", self.c_shift);
        push!("cells_per_eps", self.cells_per_eps);
        push!("steps_per_time", self.steps_per_time);
        push!("steps_per_cell", self.steps_per_cell);
        push!("u0_scale", self.u0_scale);
        out
    }
}

/// Flat experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub length: f64,
    pub horizon: f64,
    pub eps: f64,
    pub nx: usize,
    pub nt: usize,
    pub theta: f64,
    pub beta: f64,
    pub sigma: f64,
    pub delta: Option<f64>,
    pub t1: f64,
    pub t2: f64,
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
    pub side: ControlSide,
    pub advection: Advection,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_list: Vec<f64>,
    pub nx_list: Vec<usize>,
    pub c_shift: Option<f64>,
    pub cells_per_eps: f64,
    pub steps_per_time: f64,
    pub steps_per_cell: usize,
    pub u0_scale: f64,
}

impl Default for LabConfig {
    fn default() -> Self {
        let hum = HumSettings::default();
        let res = SweepResolution::default();
        LabConfig {
            length: 1.0,
            horizon: 2.0,
            eps: 0.5,
            nx: 64,
            nt: 400,
            theta: 1.0,
            beta: hum.beta,
            sigma: DEFAULT_SIGMA,
            delta: None,
            t1: 0.5,
            t2: 3.5,
            trials: 20,
            seed: 0,
            jobs: 0,
            side: ControlSide::Gamma0,
            advection: Advection::Centered,
            tol: hum.tol,
            max_iter: hum.max_iter,
            eps_list: vec![0.4, 0.2, 0.1],
            nx_list: vec![8, 16, 32, 64],
            c_shift: None,
            cells_per_eps: res.cells_per_eps,
            steps_per_time: res.steps_per_time,
            steps_per_cell: 8,
            u0_scale: 1.0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, LabError> {
    value
        .trim()
        .parse()
        .map_err(|_| LabError::precondition(format!("cannot parse {key} = {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, LabError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl LabConfig {
    /// Defaults adjusted so that each subcommand reproduces its headline experiment.
    pub fn preset(cmd: Command) -> Self {
        let mut c = LabConfig::default();
        match cmd {
            Command::Dissipation => {
                c.horizon = 4.0;
                c.eps = 0.25;
                c.nx = 128;
                c.nt = 2000;
            }
            Command::CostSweep => {
                c.horizon = 10.0;
            }
            Command::Observability => {
                c.nx = 32;
                c.nt = 200;
            }
            _ => {}
        }
        c
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LabError> {
        match key {
            "L" | "length" => self.length = parse(key, value)?,
            "T" | "horizon" => self.horizon = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "nx" => self.nx = parse(key, value)?,
            "nt" => self.nt = parse(key, value)?,
            "theta" => self.theta = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "delta" => {
                self.delta = match value.trim() {
                    "" | "default" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "t1" => self.t1 = parse(key, value)?,
            "t2" => self.t2 = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            "side" => {
                self.side = match value.trim().to_ascii_lowercase().as_str() {
                    "gamma0" | "0" => ControlSide::Gamma0,
                    "gamma1" | "1" => ControlSide::Gamma1,
                    other => return Err(LabError::precondition(format!("unknown side {other:?}"))),
                }
            }
            "advection" => {
                self.advection = match value.trim().to_ascii_lowercase().as_str() {
                    "centered" => Advection::Centered,
                    "upwind" => Advection::Upwind,
                    other => return Err(LabError::precondition(format!("unknown advection {other:?}"))),
                }
            }
            "tol" => self.tol = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "eps_list" => self.eps_list = parse_list(key, value)?,
            "nx_list" => self.nx_list = parse_list(key, value)?,
            "c_shift" => self.c_shift = Some(parse(key, value)?),
            "cells_per_eps" => self.cells_per_eps = parse(key, value)?,
            "steps_per_time" => self.steps_per_time = parse(key, value)?,
            "steps_per_cell" => self.steps_per_cell = parse(key, value)?,
            "u0_scale" => self.u0_scale = parse(key, value)?,
            other => return Err(LabError::precondition(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), LabError> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::precondition(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_flags(&mut self, flags: &Flags) -> Result<(), LabError> {
        for (k, v) in flags.pairs() {
            self.set(k, &v)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysParams, LabError> {
        PhysParams::new(self.length, self.horizon, self.eps, self.side)
    }

    pub fn theta(&self) -> Result<Theta, LabError> {
        Theta::new(self.theta)
    }

    pub fn hum(&self) -> HumSettings {
        HumSettings {
            beta: self.beta,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn setup(&self) -> Result<Setup, LabError> {
        Setup::new(self.params()?, self.nx, self.nt, self.theta()?, self.advection)
    }

    pub fn c_shift(&self) -> f64 {
        self.c_shift.unwrap_or_else(|| default_shift(self.length))
    }

    /// First CSV line naming every parameter.
    pub fn header_line(&self) -> String {
        let delta = self.delta.map_or("default".to_string(), num);
        format!(
            "# L={},T={},eps={},nx={},nt={},theta={},beta={},sigma={},delta={},seed={},build={}",
            num(self.length), num(self.horizon), num(self.eps), self.nx, self.nt, num(self.theta), num(self.beta), num(self.sigma), delta, self.seed, BUILD_ID
        )
    }
}

/// Shortest round-trip representation, switching to exponent form outside [1e-4, 1e6).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn side_name(s: ControlSide) -> &'static str {
    match s {
        ControlSide::Gamma0 => "gamma0",
        ControlSide::Gamma1 => "gamma1",
    }
}

/// Runs one subcommand and returns the CSV text.
pub fn render(cmd: Command, cfg: &LabConfig) -> Result<String, LabError> {
    let mut out = String::new();
    writeln!(out, "{}", cfg.header_line()).unwrap();
    match cmd {
        Command::Solve => {
            let s = cfg.setup()?;
            let u0 = sine_profile(&s.grid);
            let sol = solve_forward(&s.sys, &s.tg, &u0, Loads::none())?;
            writeln!(out, "n,t,x_norm,u_gamma1,u_gamma0").unwrap();
            for (n, row) in sol.history.rows().enumerate() {
                let nrm = s.sys.mass.norm(row)?;
                writeln!(out, "{},{},{},{},{}", n, num(s.tg.level(n)), num(nrm), num(row[0]), num(row[row.len() - 1])).unwrap();
            }
        }
        Command::Control => {
            let s = cfg.setup()?;
            let u0 = sine_profile(&s.grid).scaled(cfg.u0_scale);
            let r = compute_null_control(&s.sys, &s.tg, &u0, cfg.hum())?;
            let opt = verify_optimality(&r, &s.sys, &s.tg, &u0)?;
            writeln!(
                out,
                "# u0_norm={},free_terminal_norm={},terminal_norm={},control_norm={},cg_iterations={},converged={},relative_residual={},optimality_residual={}",
                num(s.sys.mass.norm(&u0.0)?),
                num(r.free_terminal_norm),
                num(r.terminal_norm),
                num(r.control_norm),
                r.cg_iterations,
                r.converged,
                num(r.relative_residual),
                num(opt.penalized)
            )
            .unwrap();
            writeln!(out, "n,t,v").unwrap();
            for (n, v) in r.v.values.iter().enumerate() {
                writeln!(out, "{},{},{}", n, num(s.tg.level(n)), num(*v)).unwrap();
            }
        }
        Command::Observability => {
            let s = cfg.setup()?;
            let rows = run_observability(&s, cfg.delta)?;
            writeln!(out, "problem,obs_node,constant,delta,delta_sensitivity").unwrap();
            for r in rows {
                let p = match r.config.problem {
                    Problem::Adjoint => "adjoint",
                    Problem::Direct => "direct",
                };
                writeln!(out, "{},{},{},{},{}", p, side_name(r.config.obs_node), num(r.constant), num(r.delta), num(r.delta_sensitivity)).unwrap();
            }
        }
        Command::Dissipation => {
            let s = cfg.setup()?;
            let rows = run_dissipation(&s, cfg.t1, cfg.t2, cfg.trials, cfg.seed)?;
            writeln!(out, "# t1={},t2={}", num(cfg.t1), num(cfg.t2)).unwrap();
            writeln!(out, "trial,norm_t1,norm_t2,bound_factor,satisfied").unwrap();
            for r in rows {
                writeln!(out, "{},{},{},{},{}", r.trial, num(r.norm_t1), num(r.norm_t2), num(r.bound_factor), r.satisfied).unwrap();
            }
        }
        Command::Carleman => {
            let s = cfg.setup()?;
            let rep = run_carleman_report(&s, cfg.sigma, cfg.c_shift(), cfg.trials, cfg.seed)?;
            let id = rep.identities;
            writeln!(
                out,
                "# s={},c_shift={},alpha_x_dev={},alpha_xx_dev={},ratio_t={},ratio_xt={},ratio_tt={}",
                num(rep.s), num(rep.c_shift), num(id.alpha_x_dev), num(id.alpha_xx_dev), num(id.ratio_t), num(id.ratio_xt), num(id.ratio_tt)
            )
            .unwrap();
            writeln!(out, "trial,lhs,rhs,ratio,status").unwrap();
            for r in rep.rows {
                let status = match r.ratio.status {
                    RatioStatus::Finite => "finite",
                    RatioStatus::ZeroOverZero => "zero_over_zero",
                    RatioStatus::RhsUnderflow => "rhs_underflow",
                };
                writeln!(out, "{},{},{},{},{}", r.trial, num(r.ratio.lhs), num(r.ratio.rhs), num(r.ratio.ratio), status).unwrap();
            }
        }
        Command::CostSweep => {
            let res = SweepResolution {
                cells_per_eps: cfg.cells_per_eps,
                steps_per_time: cfg.steps_per_time,
            };
            let sweep = run_cost_sweep(cfg.length, cfg.horizon, &cfg.eps_list, cfg.theta()?, cfg.hum(), res, cfg.u0_scale)?;
            writeln!(out, "# in_regime={},log_slope={}", sweep.in_regime, num(sweep.slope)).unwrap();
            writeln!(out, "eps,nx,nt,c_obs,delta,delta_sensitivity,control_norm_ratio,terminal_norm,cg_converged,peclet,peclet_ok").unwrap();
            for r in sweep.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    num(r.eps), r.nx, r.nt, num(r.c_obs), num(r.delta), num(r.delta_sensitivity), num(r.control_norm_ratio), num(r.terminal_norm), r.cg_converged, num(r.peclet), r.peclet_ok
                )
                .unwrap();
            }
        }
        Command::Illposed => {
            let rows = run_illposed(&cfg.params()?, cfg.theta()?, &cfg.nx_list, cfg.steps_per_cell)?;
            writeln!(out, "nx,nt,kappa_direct_gamma1,c_adjoint_gamma0,delta_direct,delta_adjoint").unwrap();
            for r in rows {
                writeln!(out, "{},{},{},{},{},{}", r.nx, r.nt, num(r.kappa_direct), num(r.c_adjoint), num(r.delta_direct), num(r.delta_adjoint)).unwrap();
            }
        }
    }
    Ok(out)
}

/// Resolves the configuration for a parsed command line.
pub fn resolve_config(cli: &Cli) -> Result<LabConfig, LabError> {
    let mut cfg = LabConfig::preset(cli.command);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::precondition(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_flags(&cli.flags)?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), LabError> {
    let cfg = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| LabError::Solver(format!("thread pool: {e}")))?;
    let csv = pool.install(|| render(cli.command, &cfg))?;
    match &cli.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| LabError::precondition(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Entry point of the `advlab` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("advlab: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut cfg = LabConfig::default();
        cfg.apply_text("# comment\neps = 0.3\nnx=32\n\neps_list = 0.5, 0.25\n").unwrap();
        assert_eq!(cfg.eps, 0.3);
        assert_eq!(cfg.nx, 32);
        assert_eq!(cfg.eps_list, vec![0.5, 0.25]);
        let flags = Flags {
            eps: Some(0.2),
            ..Flags::default()
        };
        cfg.apply_flags(&flags).unwrap();
        assert_eq!(cfg.eps, 0.2);
        assert_eq!(cfg.nx, 32);
    }

    #[test]
    fn bad_keys_are_preconditions() {
        let mut cfg = LabConfig::default();
        let e = cfg.apply_text("bogus = 1").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(cfg.apply_text("nx = many").is_err());
        assert!(cfg.apply_text("no equals sign").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 0.4, 1.5e-101, -3.25e9, 123.456, 1e-4] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.4), "0.4");
        assert_eq!(num(1.5e-101), "1.5e-101");
    }

    #[test]
    fn header_names_parameters() {
        let h = LabConfig::default().header_line();
        for key in ["L=", "T=", "eps=", "nx=", "nt=", "theta=", "beta=", "sigma=", "delta=", "seed=", "build="] {
            assert!(h.contains(key), "{key}");
        }
    }
}
