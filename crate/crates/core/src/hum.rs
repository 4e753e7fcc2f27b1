//! Penalized HUM: minimal-norm approximate null controls by conjugate
//! gradient on the control Gramian.
//!
//! The Gramian maps adjoint terminal data `φ_T` to the terminal state reached
//! from rest with control `v = φ|_ctrl`. By the duality identity
//! `⟨Λa, b⟩_X = P(a|_ctrl, b|_ctrl)`, so `Λ` is self-adjoint and positive
//! semidefinite in the X inner product.
//!
//! With `z` the free evolution of `u0`, the control `v = φ̂|_ctrl` where
//! `(Λ + β) φ̂_T = −z(T)` minimizes
//! `½ P(φ|_ctrl, φ|_ctrl) + ⟨u0, φ(0)⟩_X + ½β‖φ_T‖²_X`, and steers `u0` to
//! `u(T) = −β φ̂_T`.

use crate::adjoint::solve_adjoint_with;
use crate::assembly::SemidiscreteSystem;
use crate::error::{check_len, Result};
use crate::march::{solve_forward_with, Loads, Stepper};
use crate::mesh::{trace_l2_sq, BoundaryTrace, StateField, TimeGrid, TracePairing, XProduct};

/// The Gramian `Λ` with factored forward and adjoint steppers.
#[derive(Debug, Clone)]
pub struct Gramian<'a> {
    sys: &'a SemidiscreteSystem,
    tg: TimeGrid,
    forward: Stepper,
    adjoint: Stepper,
}

impl<'a> Gramian<'a> {
    pub fn new(sys: &'a SemidiscreteSystem, tg: &TimeGrid) -> Result<Self> {
        Ok(Gramian {
            sys,
            tg: *tg,
            forward: Stepper::forward(sys, tg.dt())?,
            adjoint: Stepper::adjoint(sys, tg.dt())?,
        })
    }

    pub fn system(&self) -> &SemidiscreteSystem {
        self.sys
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.tg
    }

    /// Observation of the adjoint solution from `phi_t` at the control node,
    /// together with `φ(0)`.
    pub fn observe(&self, phi_t: &StateField) -> Result<(BoundaryTrace, StateField)> {
        let sol = solve_adjoint_with(self.sys, &self.adjoint, &self.tg, phi_t, Loads::none())?;
        Ok((sol.history.trace(&self.sys.grid, self.sys.control_node()), sol.initial()))
    }

    /// Terminal state of the forward problem from `u0` under control `v`.
    pub fn terminal_state(&self, u0: &StateField, v: Option<&BoundaryTrace>) -> Result<StateField> {
        let loads = Loads {
            v,
            ..Loads::none()
        };
        Ok(solve_forward_with(self.sys, &self.forward, &self.tg, u0, loads)?.terminal())
    }

    pub fn apply(&self, phi_t: &StateField) -> Result<StateField> {
        let (v, _) = self.observe(phi_t)?;
        self.terminal_state(&StateField::zeros(self.sys.n_nodes()), Some(&v))
    }

    pub fn pairing(&self) -> TracePairing {
        TracePairing::adjoint(self.sys.theta.value())
    }
}

/// `Λ·phi_t`.
pub fn gramian_apply(sys: &SemidiscreteSystem, tg: &TimeGrid, phi_t: &StateField) -> Result<StateField> {
    check_len("terminal state", sys.n_nodes(), phi_t.len())?;
    Gramian::new(sys, tg)?.apply(phi_t)
}

/// Settings of the conjugate-gradient solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumSettings {
    pub beta: f64,
    /// Relative tolerance on the X-norm residual, measured against `‖z(T)‖_X`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HumSettings {
    fn default() -> Self {
        HumSettings {
            beta: 1e-8,
            tol: 1e-12,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HumResult {
    /// Minimizer `φ̂_T`.
    pub phi_t_hat: StateField,
    /// Control, equal to the control-node trace of the adjoint solution from `φ̂_T`.
    pub v: BoundaryTrace,
    /// `u(T)` reached from `u0` under `v`.
    pub terminal_state: StateField,
    pub terminal_norm: f64,
    pub control_norm: f64,
    /// `‖z(T)‖_X`, the free-evolution terminal norm.
    pub free_terminal_norm: f64,
    pub cg_iterations: usize,
    /// Final residual `‖r‖_X / ‖z(T)‖_X` of the CG recurrence.
    pub relative_residual: f64,
    pub converged: bool,
    pub beta: f64,
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Conjugate gradient for `(Λ + β) x = rhs` in the X inner product.
/// Returns `(x, iterations, ‖r‖_X, converged)`; stops once `‖r‖_X ≤ abs_tol`.
pub(crate) fn x_cg(
    gram: &Gramian<'_>,
    xp: &XProduct,
    beta: f64,
    rhs: &[f64],
    abs_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64, bool)> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = xp.inner_unchecked(&r, &r);
    let mut iters = 0;
    while iters < max_iter {
        if rr.sqrt() <= abs_tol {
            return Ok((x, iters.max(1), rr.sqrt(), true));
        }
        iters += 1;
        let mut ap = gram.apply(&StateField(p.clone()))?.0;
        axpy(beta, &p, &mut ap);
        let pap = xp.inner_unchecked(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = xp.inner_unchecked(&r, &r);
        let ratio = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + ratio * *pi;
        }
    }
    let ok = rr.sqrt() <= abs_tol;
    Ok((x, iters.max(1), rr.sqrt(), ok))
}

/// Computes the penalized HUM control for `u0`.
///
/// Exhausting `max_iter` is not an error; the result carries `converged = false`.
pub fn compute_null_control(
    sys: &SemidiscreteSystem,
    tg: &TimeGrid,
    u0: &StateField,
    settings: HumSettings,
) -> Result<HumResult> {
    check_len("initial state", sys.n_nodes(), u0.len())?;
    if !(settings.beta > 0.0) {
        return Err(crate::error::LabError::precondition(format!(
            "beta must be > 0, got {}",
            settings.beta
        )));
    }
    if !u0.is_finite() {
        return Err(crate::error::LabError::precondition("u0 has non-finite entries"));
    }
    let gram = Gramian::new(sys, tg)?;
    let xp = &sys.mass;
    let z_t = gram.terminal_state(u0, None)?;
    let z_norm = xp.norm_unchecked(&z_t.0);
    let rhs: Vec<f64> = z_t.0.iter().map(|v| -v).collect();
    let (phi_hat, iters, res, converged) = x_cg(&gram, xp, settings.beta, &rhs, settings.tol * z_norm, settings.max_iter)?;
    let phi_t_hat = StateField(phi_hat);
    let (v, _) = gram.observe(&phi_t_hat)?;
    let terminal_state = gram.terminal_state(u0, Some(&v))?;
    let control_norm = trace_l2_sq(&v, tg, gram.pairing())?.sqrt();
    Ok(HumResult {
        terminal_norm: xp.norm_unchecked(&terminal_state.0),
        terminal_state,
        phi_t_hat,
        v,
        control_norm,
        free_terminal_norm: z_norm,
        cg_iterations: iters,
        relative_residual: if z_norm > 0.0 { res / z_norm } else { 0.0 },
        converged,
        beta: settings.beta,
    })
}

/// Euler–Lagrange residuals of a HUM result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityResidual {
    /// `max_ψ |P(v, ψ|_ctrl) + ⟨u0, ψ(0)⟩_X + β⟨φ̂_T, ψ_T⟩_X|`
    pub penalized: f64,
    /// Same maximum without the `β` term.
    pub unpenalized: f64,
}

/// Evaluates the discrete Euler–Lagrange identity on the X-normalized nodal
/// basis and on the direction of `φ̂_T`.
pub fn verify_optimality(
    result: &HumResult,
    sys: &SemidiscreteSystem,
    tg: &TimeGrid,
    u0: &StateField,
) -> Result<OptimalityResidual> {
    let gram = Gramian::new(sys, tg)?;
    let xp = &sys.mass;
    let n = sys.n_nodes();
    let mut directions: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0 / xp.weights()[j].sqrt();
            e
        })
        .collect();
    let phi_norm = xp.norm_unchecked(&result.phi_t_hat.0);
    if phi_norm > 0.0 {
        directions.push(result.phi_t_hat.0.iter().map(|v| v / phi_norm).collect());
    }
    let mut out = OptimalityResidual {
        penalized: 0.0,
        unpenalized: 0.0,
    };
    for psi in directions {
        let psi = StateField(psi);
        let (obs, psi0) = gram.observe(&psi)?;
        let boundary = gram.pairing().pair_unchecked(&result.v.values, &obs.values, tg.dt());
        let initial = xp.inner_unchecked(&u0.0, &psi0.0);
        let penalty = result.beta * xp.inner_unchecked(&result.phi_t_hat.0, &psi.0);
        out.unpenalized = out.unpenalized.max((boundary + initial).abs());
        out.penalized = out.penalized.max((boundary + initial + penalty).abs());
    }
    Ok(out)
}
