//! Experiment drivers behind the command-line subcommands. Each returns
//! plain rows; formatting lives in [`crate::cli`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adjoint::solve_adjoint;
use crate::assembly::{assemble_with, Advection, SemidiscreteSystem, Theta};
use crate::carleman::{check_weight_identities, inequality_ratio, s_threshold, CarlemanRatio, CarlemanWeights, WeightIdentityReport};
use crate::error::{LabError, Result};
use crate::gramian::{assemble_quadratic_forms, constant_from_forms, delta_sensitivity, illposedness_sweep, EigenMethod, ObsConfig, SweepRow};
use crate::hum::{compute_null_control, HumSettings};
use crate::march::Loads;
use crate::mesh::{Grid1D, PhysParams, StateField, TimeGrid, XProduct};

/// Seeded generator used by every randomized experiment.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Componentwise uniform on `[-1, 1]`, then normalized to unit X-norm.
pub fn random_unit_state<R: Rng + ?Sized>(rng: &mut R, xp: &XProduct) -> StateField {
    let v: Vec<f64> = (0..xp.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let nrm = xp.norm_unchecked(&v);
    StateField(v.into_iter().map(|x| x / nrm).collect())
}

/// `sin(π(x + L)/L)` sampled on the grid.
pub fn sine_profile(grid: &Grid1D) -> StateField {
    let l = grid.length();
    grid.sample(|x| (std::f64::consts::PI * (x + l) / l).sin())
}

/// A grid, time grid and assembled system for one parameter set.
#[derive(Debug, Clone)]
pub struct Setup {
    pub params: PhysParams,
    pub grid: Grid1D,
    pub tg: TimeGrid,
    pub sys: SemidiscreteSystem,
}

impl Setup {
    pub fn new(params: PhysParams, nx: usize, nt: usize, theta: Theta, advection: Advection) -> Result<Self> {
        params.validate()?;
        let grid = Grid1D::new(params.length, nx)?;
        let tg = TimeGrid::new(params.horizon, nt)?;
        let sys = assemble_with(&grid, params.eps, params.control_side, theta, advection)?;
        Ok(Setup { params, grid, tg, sys })
    }
}

/// `exp(−(t2 − t1 − L)² / (4ε(t2 − t1)))`
pub fn dissipation_factor(eps: f64, length: f64, t1: f64, t2: f64) -> Result<f64> {
    let gap = t2 - t1;
    if !(gap > length) {
        return Err(LabError::precondition(format!(
            "need t2 - t1 > L, got t2 - t1 = {gap} and L = {length}"
        )));
    }
    Ok((-(gap - length).powi(2) / (4.0 * eps * gap)).exp())
}

/// Relative slack allowed for discretization error in the dissipation check.
pub const DISSIPATION_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationRow {
    pub trial: usize,
    pub norm_t1: f64,
    pub norm_t2: f64,
    pub bound_factor: f64,
    pub satisfied: bool,
}

pub fn run_dissipation(setup: &Setup, t1: f64, t2: f64, trials: usize, seed: u64) -> Result<Vec<DissipationRow>> {
    let factor = dissipation_factor(setup.params.eps, setup.params.length, t1, t2)?;
    let n1 = setup
        .tg
        .level_index(t1)
        .ok_or_else(|| LabError::precondition(format!("t1 = {t1} is not a time level")))?;
    let n2 = setup
        .tg
        .level_index(t2)
        .ok_or_else(|| LabError::precondition(format!("t2 = {t2} is not a time level")))?;
    let mut rng = rng_from_seed(seed);
    let xp = &setup.sys.mass;
    let data: Vec<StateField> = (0..trials).map(|_| random_unit_state(&mut rng, xp)).collect();
    data.par_iter()
        .enumerate()
        .map(|(trial, phi_t)| {
            let sol = solve_adjoint(&setup.sys, &setup.tg, phi_t, Loads::none())?;
            let a = xp.norm_unchecked(sol.history.row(n1));
            let b = xp.norm_unchecked(sol.history.row(n2));
            Ok(DissipationRow {
                trial,
                norm_t1: a,
                norm_t2: b,
                bound_factor: factor,
                satisfied: a <= (1.0 + DISSIPATION_SLACK) * factor * b,
            })
        })
        .collect()
}

/// Resolution rule of the cost sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResolution {
    /// `Nx = ceil(cells_per_eps · L / ε)`, so `h ≤ ε / cells_per_eps`.
    pub cells_per_eps: f64,
    /// `Nt = ceil(steps_per_time · T)`.
    pub steps_per_time: f64,
}

impl Default for SweepResolution {
    fn default() -> Self {
        SweepResolution {
            cells_per_eps: 4.0,
            steps_per_time: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRow {
    pub eps: f64,
    pub nx: usize,
    pub nt: usize,
    pub c_obs: f64,
    pub delta: f64,
    /// Relative change of `c_obs` when `δ` is divided by ten.
    pub delta_sensitivity: f64,
    pub control_norm_ratio: f64,
    pub terminal_norm: f64,
    pub cg_converged: bool,
    pub peclet: f64,
    /// `h ≤ ε`
    pub peclet_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostSweep {
    pub rows: Vec<CostRow>,
    /// Whether `T > 4L`, the regime in which decay with ε is expected.
    pub in_regime: bool,
    /// Least-squares slope of `ln Ĉ_obs` against `1/ε`.
    pub slope: f64,
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Observability constant and HUM control cost for each ε, with the sine
/// profile (scaled by `u0_scale`) as initial state. Rows follow `eps_list`.
pub fn run_cost_sweep(
    length: f64,
    horizon: f64,
    eps_list: &[f64],
    theta: Theta,
    hum: HumSettings,
    resolution: SweepResolution,
    u0_scale: f64,
) -> Result<CostSweep> {
    if eps_list.len() < 2 {
        return Err(LabError::precondition("cost sweep needs at least two eps values"));
    }
    let rows: Vec<CostRow> = eps_list
        .par_iter()
        .map(|&eps| {
            let params = PhysParams::new(length, horizon, eps, crate::mesh::ControlSide::Gamma0)?;
            let nx = (resolution.cells_per_eps * length / eps).ceil().max(2.0) as usize;
            let nt = (resolution.steps_per_time * horizon).ceil().max(1.0) as usize;
            let setup = Setup::new(params, nx, nt, theta, Advection::Centered)?;
            let forms = assemble_quadratic_forms(&setup.sys, &setup.tg, &ObsConfig::adjoint_gamma0())?;
            let est = constant_from_forms(&forms, None, EigenMethod::Dense)?;
            let u0 = sine_profile(&setup.grid).scaled(u0_scale);
            let u0_norm = setup.sys.mass.norm_unchecked(&u0.0);
            let res = compute_null_control(&setup.sys, &setup.tg, &u0, hum)?;
            Ok(CostRow {
                eps,
                nx,
                nt,
                c_obs: est.constant,
                delta: est.delta,
                delta_sensitivity: delta_sensitivity(&forms, Some(est.delta))?,
                control_norm_ratio: res.control_norm / u0_norm,
                terminal_norm: res.terminal_norm,
                cg_converged: res.converged,
                peclet: setup.sys.cell_peclet(),
                peclet_ok: setup.grid.h() <= eps,
            })
        })
        .collect::<Result<_>>()?;
    let inv: Vec<f64> = rows.iter().map(|r| 1.0 / r.eps).collect();
    let ln_c: Vec<f64> = rows.iter().map(|r| r.c_obs.ln()).collect();
    Ok(CostSweep {
        in_regime: horizon > 4.0 * length,
        slope: least_squares_slope(&inv, &ln_c),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IllposedRow {
    pub nx: usize,
    pub nt: usize,
    pub kappa_direct: f64,
    pub c_adjoint: f64,
    pub delta_direct: f64,
    pub delta_adjoint: f64,
}

/// Direct/Γ1 and Adjoint/Γ0 constants over increasing resolutions.
pub fn run_illposed(params: &PhysParams, theta: Theta, nx_list: &[usize], steps_per_cell: usize) -> Result<Vec<IllposedRow>> {
    let direct: Vec<SweepRow> = illposedness_sweep(params, theta, nx_list, steps_per_cell, &ObsConfig::direct_gamma1())?;
    let adjoint = illposedness_sweep(params, theta, nx_list, steps_per_cell, &ObsConfig::adjoint_gamma0())?;
    Ok(direct
        .iter()
        .zip(&adjoint)
        .map(|(d, a)| IllposedRow {
            nx: d.nx,
            nt: d.nt,
            kappa_direct: d.kappa,
            c_adjoint: a.kappa,
            delta_direct: d.delta,
            delta_adjoint: a.delta,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanRow {
    pub trial: usize,
    pub ratio: CarlemanRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanReport {
    pub s: f64,
    pub c_shift: f64,
    pub identities: WeightIdentityReport,
    pub rows: Vec<CarlemanRow>,
}

/// Carleman ratios on adjoint solutions from random terminal data, with
/// `s = s_threshold(σ)`.
pub fn run_carleman_report(setup: &Setup, sigma: f64, c_shift: f64, trials: usize, seed: u64) -> Result<CarlemanReport> {
    let p = setup.params;
    let s = s_threshold(p.eps, p.horizon, sigma)?;
    let w = CarlemanWeights::new(p.length, p.horizon, p.eps, c_shift, s, p.control_side)?;
    let identities = check_weight_identities(&w, &setup.grid, &setup.tg, 1e-3);
    let mut rng = rng_from_seed(seed);
    let data: Vec<StateField> = (0..trials).map(|_| random_unit_state(&mut rng, &setup.sys.mass)).collect();
    let rows = data
        .par_iter()
        .enumerate()
        .map(|(trial, phi_t)| {
            let sol = solve_adjoint(&setup.sys, &setup.tg, phi_t, Loads::none())?;
            Ok(CarlemanRow {
                trial,
                ratio: inequality_ratio(&w, &sol.history, &setup.grid, &setup.tg)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CarlemanReport {
        s,
        c_shift,
        identities,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilityRow {
    pub config: ObsConfig,
    pub constant: f64,
    pub delta: f64,
    /// Relative change when `δ` is divided by ten.
    pub delta_sensitivity: f64,
}

/// Observability constants for all four problem/boundary combinations.
pub fn run_observability(setup: &Setup, delta: Option<f64>) -> Result<Vec<ObservabilityRow>> {
    use crate::gramian::Problem;
    use crate::mesh::ControlSide;
    let configs = [
        (Problem::Adjoint, ControlSide::Gamma0),
        (Problem::Adjoint, ControlSide::Gamma1),
        (Problem::Direct, ControlSide::Gamma0),
        (Problem::Direct, ControlSide::Gamma1),
    ];
    configs
        .iter()
        .map(|&(problem, obs_node)| {
            let config = ObsConfig {
                problem,
                obs_node,
                delta,
            };
            let forms = assemble_quadratic_forms(&setup.sys, &setup.tg, &config)?;
            let est = constant_from_forms(&forms, delta, EigenMethod::Dense)?;
            Ok(ObservabilityRow {
                config,
                constant: est.constant,
                delta: est.delta,
                delta_sensitivity: delta_sensitivity(&forms, Some(est.delta))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ControlSide;

    #[test]
    fn dissipation_factor_values() {
        let f = dissipation_factor(0.25, 1.0, 0.0, 2.0).unwrap();
        assert!((f - (-0.5f64).exp()).abs() < 1e-15);
        assert!((f - 0.606531).abs() < 1e-6);
        let f = dissipation_factor(0.25, 1.0, 0.5, 3.5).unwrap();
        assert!((f - 0.263597).abs() < 1e-6);
        assert!(matches!(dissipation_factor(0.25, 1.0, 1.0, 2.0), Err(LabError::Precondition(_))));
    }

    #[test]
    fn random_states_are_unit_and_reproducible() {
        let g = Grid1D::new(1.0, 16).unwrap();
        let xp = XProduct::build(&g, 0.3);
        let a = random_unit_state(&mut rng_from_seed(4), &xp);
        let b = random_unit_state(&mut rng_from_seed(4), &xp);
        assert_eq!(a, b);
        assert!((xp.norm(&a.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dissipation_needs_grid_levels() {
        let p = PhysParams::new(1.0, 4.0, 0.25, ControlSide::Gamma0).unwrap();
        let s = Setup::new(p, 16, 40, Theta::IMPLICIT_EULER, Advection::Centered).unwrap();
        assert!(run_dissipation(&s, 0.55, 3.5, 2, 0).is_err());
        let rows = run_dissipation(&s, 0.5, 3.5, 3, 0).unwrap();
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn slope_of_line() {
        let s = least_squares_slope(&[1.0, 2.0, 3.0], &[5.0, 3.0, 1.0]);
        assert!((s + 2.0).abs() < 1e-14);
    }
}
