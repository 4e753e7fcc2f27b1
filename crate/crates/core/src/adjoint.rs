//! Backward solver for the adjoint system, built as the exact transpose of
//! the forward θ-scheme in the X inner product, and the duality check.
//!
//! The recursion is `(M + θ dt Kᵀ) φ^n = (M − (1−θ) dt Kᵀ) φ^{n+1} + dt b_n`.
//! Since `M` is the X Gram matrix, the homogeneous adjoint step is the
//! X-adjoint of the homogeneous forward step, and the forward step load
//! pairs with `θ φ^n + (1−θ) φ^{n+1}`. Summing over steps gives
//!
//! `⟨u(T), φ_T⟩_X − ⟨u0, φ(0)⟩_X = P(v, φ|_ctrl)`
//!
//! with `P` the [`TracePairing::adjoint`] form.

use crate::assembly::SemidiscreteSystem;
use crate::error::{check_len, Result};
use crate::march::{solve_forward, Loads, Solution, Stepper};
use crate::mesh::{BoundaryTrace, SpaceTimeField, StateField, TimeGrid, TracePairing};

/// Solves the adjoint problem backward from `phi_t`. Row `n` of the history
/// is `φ^n`. Level data enter step `n+1 → n` as `(1−θ) d^n + θ d^{n+1}`.
pub fn solve_adjoint(sys: &SemidiscreteSystem, tg: &TimeGrid, phi_t: &StateField, loads: Loads<'_>) -> Result<Solution> {
    let stepper = Stepper::adjoint(sys, tg.dt())?;
    solve_adjoint_with(sys, &stepper, tg, phi_t, loads)
}

/// As [`solve_adjoint`] with a prebuilt adjoint stepper.
pub fn solve_adjoint_with(
    sys: &SemidiscreteSystem,
    stepper: &Stepper,
    tg: &TimeGrid,
    phi_t: &StateField,
    loads: Loads<'_>,
) -> Result<Solution> {
    let n = sys.n_nodes();
    check_len("terminal state", n, phi_t.len())?;
    loads.validate(sys, tg)?;
    let left = 1.0 - sys.theta.value();
    let mut history = SpaceTimeField::zeros(tg.n_levels(), n);
    history.row_mut(tg.steps()).copy_from_slice(&phi_t.0);
    let mut load = vec![0.0; n];
    let mut cur = phi_t.0.clone();
    let mut next = vec![0.0; n];
    for step in (0..tg.steps()).rev() {
        let b = if loads.is_zero() {
            None
        } else {
            loads.step_vector(sys, step, left, &mut load);
            Some(load.as_slice())
        };
        stepper.advance(&cur, b, &mut next);
        history.row_mut(step).copy_from_slice(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Solution { history })
}

/// Observation of an adjoint solution at the control node.
pub fn observe_control_trace(sys: &SemidiscreteSystem, sol: &Solution) -> BoundaryTrace {
    sol.history.trace(&sys.grid, sys.control_node())
}

/// The three terms of the duality identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityTerms {
    /// `⟨φ(0), u0⟩_X`
    pub initial: f64,
    /// `⟨φ_T, u(T)⟩_X`
    pub terminal: f64,
    /// `P(v, φ|_ctrl)`
    pub boundary: f64,
}

impl DualityTerms {
    pub fn residual(&self) -> f64 {
        (self.initial - self.terminal + self.boundary).abs()
    }

    /// Largest magnitude among the terms, used to make the residual relative.
    pub fn scale(&self) -> f64 {
        self.initial.abs().max(self.terminal.abs()).max(self.boundary.abs())
    }

    pub fn relative_residual(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.residual() / s
        }
    }
}

pub fn duality_terms(
    sys: &SemidiscreteSystem,
    tg: &TimeGrid,
    u0: &StateField,
    v: &BoundaryTrace,
    phi_t: &StateField,
) -> Result<DualityTerms> {
    let u = solve_forward(sys, tg, u0, Loads::control(v))?;
    let phi = solve_adjoint(sys, tg, phi_t, Loads::none())?;
    let xp = &sys.mass;
    let obs = observe_control_trace(sys, &phi);
    Ok(DualityTerms {
        initial: xp.inner(&phi.initial().0, &u0.0)?,
        terminal: xp.inner(&phi_t.0, &u.terminal().0)?,
        boundary: crate::mesh::trace_pairing(&v.values, &obs.values, tg, TracePairing::adjoint(sys.theta.value()))?,
    })
}

/// `|⟨φ(0),u0⟩_X − ⟨φ_T,u(T)⟩_X + P(v, φ|_ctrl)|`, zero up to rounding.
pub fn duality_residual(
    sys: &SemidiscreteSystem,
    tg: &TimeGrid,
    u0: &StateField,
    v: &BoundaryTrace,
    phi_t: &StateField,
) -> Result<f64> {
    Ok(duality_terms(sys, tg, u0, v, phi_t)?.residual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Theta};
    use crate::mesh::{BoundaryNode, ControlSide, Grid1D};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_terminal_data() {
        let g = Grid1D::new(1.0, 8).unwrap();
        let sys = assemble(&g, 0.3, ControlSide::Gamma0, Theta::IMPLICIT_EULER).unwrap();
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let sol = solve_adjoint(&sys, &tg, &StateField::zeros(9), Loads::none()).unwrap();
        assert!(sol.history.rows().all(|r| r.iter().all(|&v| v == 0.0)));
        let r = duality_residual(&sys, &tg, &StateField::zeros(9), &BoundaryTrace::zeros(BoundaryNode::Right, &tg), &StateField::zeros(9)).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn duality_holds_for_both_thetas_and_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid1D::new(1.0, 12).unwrap();
        let tg = TimeGrid::new(0.7, 23).unwrap();
        for theta in [Theta::IMPLICIT_EULER, Theta::CRANK_NICOLSON, Theta::new(0.75).unwrap()] {
            for side in [ControlSide::Gamma0, ControlSide::Gamma1] {
                let sys = assemble(&g, 0.3, side, theta).unwrap();
                let u0 = StateField(random(&mut rng, 13));
                let phi_t = StateField(random(&mut rng, 13));
                let v = BoundaryTrace {
                    node: side.node(),
                    values: random(&mut rng, tg.n_levels()),
                };
                let d = duality_terms(&sys, &tg, &u0, &v, &phi_t).unwrap();
                assert!(d.relative_residual() < 1e-12, "{theta:?} {side:?}: {d:?}");
            }
        }
    }

    #[test]
    fn free_evolution_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Grid1D::new(1.0, 10).unwrap();
        let tg = TimeGrid::new(1.0, 20).unwrap();
        let sys = assemble(&g, 0.2, ControlSide::Gamma0, Theta::IMPLICIT_EULER).unwrap();
        let u0 = StateField(random(&mut rng, 11));
        let phi_t = StateField(random(&mut rng, 11));
        let d = duality_terms(&sys, &tg, &u0, &BoundaryTrace::zeros(BoundaryNode::Right, &tg), &phi_t).unwrap();
        assert_eq!(d.boundary, 0.0);
        assert!((d.initial - d.terminal).abs() < 1e-13 * d.scale());
    }
}
