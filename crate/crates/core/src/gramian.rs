//! Observability constants as generalized eigenvalues of two quadratic forms.
//!
//! For the adjoint problem observed on a boundary node, the constant is the
//! smallest `C` with `‖φ(0)‖_X ≤ C ‖φ|_obs‖_{L²(0,T)}` for every terminal
//! datum. In coordinates this is `√λ_max` of the pencil
//! `G_init x = λ (G_trace + δ I) x`, where `G_init = Eᵀ M E` (`E: φ_T ↦ φ(0)`)
//! and `G_trace` is the Gram matrix of the observed traces. The direct problem
//! is handled the same way with `G_init = M` and forward-state traces.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::adjoint::solve_adjoint_with;
use crate::assembly::{assemble, SemidiscreteSystem, Theta};
use crate::error::{LabError, Result};
use crate::march::{solve_forward_with, Loads, Stepper};
use crate::mesh::{ControlSide, Grid1D, PhysParams, StateField, TimeGrid, TracePairing};

/// Default cap on the number of nodes for dense assembly.
pub const DEFAULT_DENSE_CAP: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Observe the adjoint solution, bound `‖φ(0)‖_X`.
    Adjoint,
    /// Observe the forward solution of the free problem, bound `‖u0‖_X`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsConfig {
    pub problem: Problem,
    pub obs_node: ControlSide,
    /// Regularization of the trace form; `None` selects [`default_delta`].
    pub delta: Option<f64>,
}

impl ObsConfig {
    /// Adjoint system observed on Γ0.
    pub fn adjoint_gamma0() -> Self {
        ObsConfig {
            problem: Problem::Adjoint,
            obs_node: ControlSide::Gamma0,
            delta: None,
        }
    }

    /// Free direct system observed on Γ1.
    pub fn direct_gamma1() -> Self {
        ObsConfig {
            problem: Problem::Direct,
            obs_node: ControlSide::Gamma1,
            delta: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }
}

/// The two sides of the observability inequality as symmetric matrices.
#[derive(Debug, Clone)]
pub struct QuadraticForms {
    pub g_init: DMatrix<f64>,
    pub g_trace: DMatrix<f64>,
}

pub fn assemble_quadratic_forms(sys: &SemidiscreteSystem, tg: &TimeGrid, cfg: &ObsConfig) -> Result<QuadraticForms> {
    assemble_quadratic_forms_capped(sys, tg, cfg, DEFAULT_DENSE_CAP)
}

pub fn assemble_quadratic_forms_capped(
    sys: &SemidiscreteSystem,
    tg: &TimeGrid,
    cfg: &ObsConfig,
    cap: usize,
) -> Result<QuadraticForms> {
    let n = sys.n_nodes();
    if n > cap {
        return Err(LabError::CapExceeded { nodes: n, cap });
    }
    let obs = cfg.obs_node.node().index(&sys.grid);
    let theta = sys.theta.value();
    let (pairing, stepper) = match cfg.problem {
        Problem::Adjoint => (TracePairing::adjoint(theta), Stepper::adjoint(sys, tg.dt())?),
        Problem::Direct => (TracePairing::forward(theta), Stepper::forward(sys, tg.dt())?),
    };

    // one PDE solve per basis vector; keep the observed trace and the far-end state
    let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = StateField::zeros(n);
            e.0[j] = 1.0;
            let sol = match cfg.problem {
                Problem::Adjoint => solve_adjoint_with(sys, &stepper, tg, &e, Loads::none())?,
                Problem::Direct => solve_forward_with(sys, &stepper, tg, &e, Loads::none())?,
            };
            let trace = sol.history.node_series(obs);
            let end = match cfg.problem {
                Problem::Adjoint => sol.initial().0,
                Problem::Direct => Vec::new(),
            };
            Ok((trace, end))
        })
        .collect::<Result<_>>()?;

    let dt = tg.dt();
    let steps: Vec<Vec<f64>> = columns
        .iter()
        .map(|(tr, _)| pairing.step_values(tr).collect())
        .collect();
    let mut g_trace = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = dt * steps[i].iter().zip(&steps[j]).map(|(a, b)| a * b).sum::<f64>();
            g_trace[(i, j)] = v;
            g_trace[(j, i)] = v;
        }
    }

    let w = sys.mass.weights();
    let g_init = match cfg.problem {
        Problem::Adjoint => {
            let mut g = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let a = &columns[i].1;
                    let b = &columns[j].1;
                    let v: f64 = w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum();
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            g
        }
        Problem::Direct => DMatrix::from_diagonal(&DVector::from_column_slice(w)),
    };
    Ok(QuadraticForms { g_init, g_trace })
}

/// `1e-14 · trace(G_trace) / n`.
pub fn default_delta(g_trace: &DMatrix<f64>) -> f64 {
    1e-14 * g_trace.trace() / g_trace.nrows() as f64
}

fn regularized(b: &DMatrix<f64>, delta: f64) -> DMatrix<f64> {
    let mut out = b.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += delta;
    }
    out
}

/// Largest eigenvalue of `A x = λ B x` for symmetric `A` and SPD `B`, by
/// Cholesky reduction to a standard symmetric problem.
pub fn generalized_lambda_max_dense(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| LabError::Indefinite("trace form is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let y = l
        .solve_lower_triangular(a)
        .ok_or_else(|| LabError::Solver("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| LabError::Solver("triangular solve failed".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().max())
}

/// Power iteration on `B⁻¹A` with `B` factored once.
pub fn generalized_lambda_max_power(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| LabError::Indefinite("trace form is not positive definite".into()))?;
    let n = a.nrows();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i as f64) * 0.7).sin());
    x /= x.dot(&(b * &x)).sqrt();
    // the residual bottoms out at a rounding floor set by cond(B); stop once it
    // has not improved for STALL iterations
    const STALL: usize = 500;
    let (mut best, mut since_best) = (f64::INFINITY, 0usize);
    for _ in 0..max_iter {
        // x is B-normalized; y = B⁻¹Ax, λ = xᵀAx, stop on ‖y − λx‖_B ≤ tol·λ
        let ax = a * &x;
        let lambda = x.dot(&ax);
        let y = chol.solve(&ax);
        let r = &y - &x * lambda;
        let res = r.dot(&(b * &r)).max(0.0).sqrt();
        if res <= tol * lambda.abs() {
            return Ok(lambda);
        }
        if res < 0.999 * best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STALL {
                return Ok(lambda);
            }
        }
        let scale = y.dot(&(b * &y)).sqrt();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(LabError::Solver("power iteration collapsed".into()));
        }
        x = y / scale;
    }
    Err(LabError::Solver(format!("power iteration did not converge in {max_iter} iterations")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    #[default]
    Dense,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilityEstimate {
    /// `√λ_max`
    pub constant: f64,
    pub lambda_max: f64,
    /// Regularization actually used.
    pub delta: f64,
}

// Symmetric diagonal scaling D·A·D, D·B·D with unit diagonal in B; the pencil's
// eigenvalues are unchanged.
fn equilibrated(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = b.nrows();
    let mut d = vec![0.0; n];
    for i in 0..n {
        let bii = b[(i, i)];
        if !(bii > 0.0) {
            return Err(LabError::Indefinite(format!("trace form has non-positive diagonal entry {bii:e}")));
        }
        d[i] = 1.0 / bii.sqrt();
    }
    let scale = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i] * d[j]);
    Ok((scale(a), scale(b)))
}

/// Rejects a form whose smallest eigenvalue is below `-1e-12` times its largest.
pub fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let ev = m.clone().symmetric_eigenvalues();
    let (min, max) = (ev.min(), ev.max());
    if min < -1e-12 * max.abs().max(f64::MIN_POSITIVE) {
        return Err(LabError::Indefinite(format!("{what} has eigenvalue {min:e} (max {max:e})")));
    }
    Ok(())
}

pub fn constant_from_forms(forms: &QuadraticForms, delta: Option<f64>, method: EigenMethod) -> Result<ObservabilityEstimate> {
    check_psd(&forms.g_init, "initial-state form")?;
    check_psd(&forms.g_trace, "trace form")?;
    let delta = delta.unwrap_or_else(|| default_delta(&forms.g_trace));
    if !(delta >= 0.0) {
        return Err(LabError::precondition(format!("delta must be >= 0, got {delta}")));
    }
    let (a, b) = equilibrated(&forms.g_init, &regularized(&forms.g_trace, delta))?;
    let lambda_max = match method {
        EigenMethod::Dense => generalized_lambda_max_dense(&a, &b)?,
        EigenMethod::Power => generalized_lambda_max_power(&a, &b, 1e-9, 200_000)?,
    };
    Ok(ObservabilityEstimate {
        constant: lambda_max.max(0.0).sqrt(),
        lambda_max,
        delta,
    })
}

pub fn observability_constant(sys: &SemidiscreteSystem, tg: &TimeGrid, cfg: &ObsConfig) -> Result<ObservabilityEstimate> {
    let forms = assemble_quadratic_forms(sys, tg, cfg)?;
    constant_from_forms(&forms, cfg.delta, EigenMethod::Dense)
}

/// Relative change of the constant when `δ` is divided by ten.
pub fn delta_sensitivity(forms: &QuadraticForms, delta: Option<f64>) -> Result<f64> {
    let base = constant_from_forms(forms, delta, EigenMethod::Dense)?;
    let tenth = constant_from_forms(forms, Some(base.delta / 10.0), EigenMethod::Dense)?;
    Ok((tenth.constant - base.constant).abs() / base.constant)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub nx: usize,
    pub nt: usize,
    pub kappa: f64,
    pub delta: f64,
}

/// Observability constant of `cfg` over a list of increasing resolutions,
/// with `Nt = steps_per_cell · Nx`.
pub fn illposedness_sweep(
    params: &PhysParams,
    theta: Theta,
    nx_list: &[usize],
    steps_per_cell: usize,
    cfg: &ObsConfig,
) -> Result<Vec<SweepRow>> {
    params.validate()?;
    if nx_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::precondition("Nx list must be strictly increasing"));
    }
    if steps_per_cell == 0 {
        return Err(LabError::precondition("steps per cell must be >= 1"));
    }
    nx_list
        .par_iter()
        .map(|&nx| {
            let grid = Grid1D::new(params.length, nx)?;
            let sys = assemble(&grid, params.eps, params.control_side, theta)?;
            let nt = steps_per_cell * nx;
            let tg = TimeGrid::new(params.horizon, nt)?;
            let est = observability_constant(&sys, &tg, cfg)?;
            Ok(SweepRow {
                nx,
                nt,
                kappa: est.constant,
                delta: est.delta,
            })
        })
        .collect()
}
