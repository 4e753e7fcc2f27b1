//! θ-scheme time marching of the forward problem.
//!
//! One step solves `(M + θ dt K) u^{n+1} = (M − (1−θ) dt K) u^n + dt b_n`.
//! Level-valued data `d` enter step `n → n+1` as `θ d^n + (1−θ) d^{n+1}`;
//! with this placement the transposed recursion pairs each step load with the
//! adjoint state exactly (see [`crate::mesh::TracePairing`]).

use crate::assembly::SemidiscreteSystem;
use crate::error::{check_len, Result};
use crate::mesh::{BoundaryNode, BoundaryTrace, SpaceTimeField, StateField, TimeGrid};
use crate::tridiag::{TridiagLu, Tridiagonal};

/// Source and boundary data of the nonhomogeneous problem. `None` means zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loads<'a> {
    /// Interior source, one row per time level.
    pub f: Option<&'a SpaceTimeField>,
    /// Data on Γ0 (`x = 0`).
    pub g0: Option<&'a BoundaryTrace>,
    /// Data on Γ1 (`x = -L`).
    pub g1: Option<&'a BoundaryTrace>,
    /// Control, injected at the system's control node.
    pub v: Option<&'a BoundaryTrace>,
}

impl<'a> Loads<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn control(v: &'a BoundaryTrace) -> Self {
        Loads {
            v: Some(v),
            ..Self::default()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_none() && self.g0.is_none() && self.g1.is_none() && self.v.is_none()
    }

    pub(crate) fn validate(&self, sys: &SemidiscreteSystem, tg: &TimeGrid) -> Result<()> {
        let nl = tg.n_levels();
        if let Some(f) = self.f {
            check_len("source levels", nl, f.n_levels())?;
            check_len("source nodes", sys.n_nodes(), f.n_nodes())?;
        }
        for (what, tr) in [("g0 levels", self.g0), ("g1 levels", self.g1), ("control levels", self.v)] {
            if let Some(tr) = tr {
                check_len(what, nl, tr.values.len())?;
            }
        }
        Ok(())
    }

    /// Load vector of step `n → n+1`, with level data combined as
    /// `left·d^n + (1−left)·d^{n+1}`.
    pub(crate) fn step_vector(&self, sys: &SemidiscreteSystem, n: usize, left: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mix = |a: f64, b: f64| left * a + (1.0 - left) * b;
        if let Some(f) = self.f {
            let vol = sys.volume_weights();
            let (r0, r1) = (f.row(n), f.row(n + 1));
            for j in 0..out.len() {
                out[j] += vol[j] * mix(r0[j], r1[j]);
            }
        }
        let last = out.len() - 1;
        if let Some(g) = self.g1 {
            out[0] += mix(g.values[n], g.values[n + 1]);
        }
        if let Some(g) = self.g0 {
            out[last] += mix(g.values[n], g.values[n + 1]);
        }
        if let Some(v) = self.v {
            out[sys.control_index()] += mix(v.values[n], v.values[n + 1]);
        }
    }
}

/// Factored one-step map for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct Stepper {
    lhs: TridiagLu,
    rhs: Tridiagonal,
    dt: f64,
    theta: f64,
}

impl Stepper {
    fn build(sys: &SemidiscreteSystem, k: &Tridiagonal, dt: f64) -> Result<Self> {
        let theta = sys.theta.value();
        let m = Tridiagonal::identity_scaled(sys.mass.weights());
        let lhs = m.combine(1.0, k, theta * dt).factor()?;
        let rhs = m.combine(1.0, k, -(1.0 - theta) * dt);
        Ok(Stepper { lhs, rhs, dt, theta })
    }

    /// Stepper for the forward operator `K`.
    pub fn forward(sys: &SemidiscreteSystem, dt: f64) -> Result<Self> {
        Self::build(sys, &sys.stiffness, dt)
    }

    /// Stepper for the transposed operator `Kᵀ` (backward in time).
    pub fn adjoint(sys: &SemidiscreteSystem, dt: f64) -> Result<Self> {
        Self::build(sys, &sys.stiffness.transpose(), dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Advances `state` by one step; `load` is the assembled load vector or `None`.
    pub fn advance(&self, state: &[f64], load: Option<&[f64]>, out: &mut [f64]) {
        self.rhs.matvec_into(state, out);
        if let Some(b) = load {
            for (o, l) in out.iter_mut().zip(b) {
                *o += self.dt * l;
            }
        }
        self.lhs.solve_in_place(out);
    }
}

/// One θ-step from `u_n` with an assembled load vector.
pub fn step(sys: &SemidiscreteSystem, u_n: &StateField, load: Option<&[f64]>, dt: f64) -> Result<StateField> {
    check_len("state", sys.n_nodes(), u_n.len())?;
    if let Some(b) = load {
        check_len("load vector", sys.n_nodes(), b.len())?;
    }
    let stepper = Stepper::forward(sys, dt)?;
    let mut out = vec![0.0; sys.n_nodes()];
    stepper.advance(&u_n.0, load, &mut out);
    Ok(StateField(out))
}

/// History of a forward or adjoint run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub history: SpaceTimeField,
}

impl Solution {
    pub fn initial(&self) -> StateField {
        self.history.state(0)
    }

    pub fn terminal(&self) -> StateField {
        self.history.state(self.history.n_levels() - 1)
    }

    /// Trace at Γ1 (`x = -L`).
    pub fn trace_gamma1(&self) -> BoundaryTrace {
        BoundaryTrace {
            node: BoundaryNode::Left,
            values: self.history.node_series(0),
        }
    }

    /// Trace at Γ0 (`x = 0`).
    pub fn trace_gamma0(&self) -> BoundaryTrace {
        BoundaryTrace {
            node: BoundaryNode::Right,
            values: self.history.node_series(self.history.n_nodes() - 1),
        }
    }

    pub fn trace(&self, node: BoundaryNode) -> BoundaryTrace {
        match node {
            BoundaryNode::Left => self.trace_gamma1(),
            BoundaryNode::Right => self.trace_gamma0(),
        }
    }
}

/// Solves the forward problem from `u0` with the given data.
pub fn solve_forward(sys: &SemidiscreteSystem, tg: &TimeGrid, u0: &StateField, loads: Loads<'_>) -> Result<Solution> {
    let stepper = Stepper::forward(sys, tg.dt())?;
    solve_forward_with(sys, &stepper, tg, u0, loads)
}

/// As [`solve_forward`] with a prebuilt stepper (its `dt` must match `tg`).
pub fn solve_forward_with(
    sys: &SemidiscreteSystem,
    stepper: &Stepper,
    tg: &TimeGrid,
    u0: &StateField,
    loads: Loads<'_>,
) -> Result<Solution> {
    let n = sys.n_nodes();
    check_len("initial state", n, u0.len())?;
    loads.validate(sys, tg)?;
    let left = sys.theta.value();
    let mut history = SpaceTimeField::zeros(tg.n_levels(), n);
    history.row_mut(0).copy_from_slice(&u0.0);
    let mut load = vec![0.0; n];
    let mut cur = u0.0.clone();
    let mut next = vec![0.0; n];
    for step in 0..tg.steps() {
        let b = if loads.is_zero() {
            None
        } else {
            loads.step_vector(sys, step, left, &mut load);
            Some(load.as_slice())
        };
        stepper.advance(&cur, b, &mut next);
        history.row_mut(step + 1).copy_from_slice(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Solution { history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Theta};
    use crate::mesh::{ControlSide, Grid1D};

    fn system(nx: usize, eps: f64, theta: Theta) -> SemidiscreteSystem {
        let g = Grid1D::new(1.0, nx).unwrap();
        assemble(&g, eps, ControlSide::Gamma0, theta).unwrap()
    }

    #[test]
    fn zero_in_zero_out() {
        let sys = system(8, 0.5, Theta::IMPLICIT_EULER);
        let u = step(&sys, &StateField::zeros(9), None, 0.1).unwrap();
        assert!(u.0.iter().all(|&v| v == 0.0));

        let tg = TimeGrid::new(1.0, 10).unwrap();
        let sol = solve_forward(&sys, &tg, &StateField::zeros(9), Loads::none()).unwrap();
        assert!(sol.history.rows().all(|r| r.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn shape_errors() {
        let sys = system(8, 0.5, Theta::IMPLICIT_EULER);
        let tg = TimeGrid::new(1.0, 10).unwrap();
        assert!(solve_forward(&sys, &tg, &StateField::zeros(5), Loads::none()).is_err());
        let short = BoundaryTrace {
            node: BoundaryNode::Right,
            values: vec![0.0; 4],
        };
        assert!(solve_forward(&sys, &tg, &StateField::zeros(9), Loads::control(&short)).is_err());
    }

    #[test]
    fn constant_boundary_data_reaches_steady_state() {
        // With g1 = 1 the steady state solves K u = e_0, i.e. u ≡ 1.
        let sys = system(8, 0.5, Theta::IMPLICIT_EULER);
        let tg = TimeGrid::new(40.0, 400).unwrap();
        let g1 = BoundaryTrace::sample(BoundaryNode::Left, &tg, |_| 1.0);
        let loads = Loads {
            g1: Some(&g1),
            ..Loads::none()
        };
        let sol = solve_forward(&sys, &tg, &StateField::zeros(9), loads).unwrap();
        for v in sol.terminal().0 {
            assert!((v - 1.0).abs() < 1e-8, "{v}");
        }
    }
}
