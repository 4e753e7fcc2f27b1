//! Galerkin P1 assembly of the semidiscrete system `M u̇ + K u = loads`.
//!
//! Testing the equation against a hat function and substituting the dynamic
//! boundary relations `ε(u_t + ∂_ν u) = g` gives
//! `d/dt ⟨u, w⟩_X + a(u, w) = loads(w)` with
//! `a(u, w) = ε∫u_x w_x + ∫u_x w + u(-L) w(-L)`. The mass matrix is the
//! diagonal of [`XProduct`], so `M` is the X inner product itself and the
//! adjoint system is obtained by transposing `K`.

use rand::Rng;

use crate::error::{LabError, Result};
use crate::mesh::{BoundaryNode, ControlSide, Grid1D, XProduct};
use crate::tridiag::Tridiagonal;

/// Time-stepping parameter of the θ-scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta(f64);

impl Theta {
    pub const IMPLICIT_EULER: Theta = Theta(1.0);
    pub const CRANK_NICOLSON: Theta = Theta(0.5);

    pub fn new(theta: f64) -> Result<Self> {
        if (0.5..=1.0).contains(&theta) {
            Ok(Theta(theta))
        } else {
            Err(LabError::precondition(format!("theta must lie in [0.5, 1], got {theta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Discretization of the advection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Advection {
    /// Plain Galerkin (centered) advection.
    #[default]
    Centered,
    /// Full upwinding, i.e. centered advection plus artificial viscosity `h/2`.
    /// The discrete adjoint becomes the transpose of this operator.
    Upwind,
}

/// Assembled semidiscrete operators on one grid.
#[derive(Debug, Clone)]
pub struct SemidiscreteSystem {
    pub grid: Grid1D,
    pub eps: f64,
    pub control_side: ControlSide,
    pub theta: Theta,
    pub advection: Advection,
    /// Diagonal mass, equal to the X inner-product weights.
    pub mass: XProduct,
    /// P1 stiffness matrix `∫φ_j' φ_i'` (without ε).
    pub k_diff: Tridiagonal,
    /// P1 advection matrix `∫φ_j' φ_i` (plus upwind viscosity when selected).
    pub k_adv: Tridiagonal,
    /// `ε·k_diff + k_adv + e_0 e_0ᵀ`.
    pub stiffness: Tridiagonal,
}

impl SemidiscreteSystem {
    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }

    /// Node where the control (Bctrl) enters.
    pub fn control_node(&self) -> BoundaryNode {
        self.control_side.node()
    }

    pub fn control_index(&self) -> usize {
        self.control_node().index(&self.grid)
    }

    /// Control-injection vector.
    pub fn b_ctrl(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_nodes()];
        b[self.control_index()] = 1.0;
        b
    }

    /// Trace selector: the value of `state` at `node`.
    pub fn observe(&self, state: &[f64], node: BoundaryNode) -> f64 {
        state[node.index(&self.grid)]
    }

    /// Volume weights of the lumped `L²(Ω)` part (trapezoid rule).
    pub fn volume_weights(&self) -> Vec<f64> {
        let h = self.grid.h();
        let n = self.n_nodes();
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        w
    }

    /// Péclet number `h / (2ε)` of the grid.
    pub fn cell_peclet(&self) -> f64 {
        self.grid.h() / (2.0 * self.eps)
    }

    pub fn with_theta(&self, theta: Theta) -> Self {
        let mut s = self.clone();
        s.theta = theta;
        s
    }
}

pub fn p1_stiffness(grid: &Grid1D) -> Tridiagonal {
    let n = grid.n_nodes();
    let inv_h = 1.0 / grid.h();
    let mut k = Tridiagonal::zeros(n);
    for e in 0..grid.cells() {
        k.add(e, e, inv_h);
        k.add(e, e + 1, -inv_h);
        k.add(e + 1, e, -inv_h);
        k.add(e + 1, e + 1, inv_h);
    }
    k
}

pub fn p1_advection(grid: &Grid1D) -> Tridiagonal {
    let n = grid.n_nodes();
    let mut k = Tridiagonal::zeros(n);
    // element matrix: rows are test functions, columns trial derivatives
    for e in 0..grid.cells() {
        k.add(e, e, -0.5);
        k.add(e, e + 1, 0.5);
        k.add(e + 1, e, -0.5);
        k.add(e + 1, e + 1, 0.5);
    }
    k
}

pub fn assemble(
    grid: &Grid1D,
    eps: f64,
    control_side: ControlSide,
    theta: Theta,
) -> Result<SemidiscreteSystem> {
    assemble_with(grid, eps, control_side, theta, Advection::Centered)
}

pub fn assemble_with(
    grid: &Grid1D,
    eps: f64,
    control_side: ControlSide,
    theta: Theta,
    advection: Advection,
) -> Result<SemidiscreteSystem> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(LabError::precondition(format!("eps must be > 0, got {eps}")));
    }
    let mass = XProduct::build(grid, eps);
    let k_diff = p1_stiffness(grid);
    let mut k_adv = p1_advection(grid);
    if advection == Advection::Upwind {
        k_adv = k_adv.combine(1.0, &k_diff, 0.5 * grid.h());
    }
    let mut stiffness = k_diff.combine(eps, &k_adv, 1.0);
    stiffness.add(0, 0, 1.0);
    Ok(SemidiscreteSystem {
        grid: *grid,
        eps,
        control_side,
        theta,
        advection,
        mass,
        k_diff,
        k_adv,
        stiffness,
    })
}

/// Smallest sampled Rayleigh quotient `wᵀKw / |w|²` over `samples` random
/// vectors. Nonnegative for a monotone `K`.
pub fn monotonicity_check<R: Rng + ?Sized>(
    sys: &SemidiscreteSystem,
    samples: usize,
    rng: &mut R,
) -> f64 {
    let n = sys.n_nodes();
    (0..samples)
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nrm: f64 = w.iter().map(|x| x * x).sum();
            sys.stiffness.quadratic_form(&w) / nrm
        })
        .fold(f64::INFINITY, f64::min)
}

/// Right-hand side of the energy identity:
/// `ε·wᵀK_diff w + ½(w_0² + w_Nx²)` (plus the upwind viscosity if selected).
pub fn dissipation_form(sys: &SemidiscreteSystem, w: &[f64]) -> f64 {
    let n = w.len();
    let mut diff = sys.eps;
    if sys.advection == Advection::Upwind {
        diff += 0.5 * sys.grid.h();
    }
    diff * sys.k_diff.quadratic_form(w) + 0.5 * (w[0] * w[0] + w[n - 1] * w[n - 1])
}
