//! Space and time grids, the discrete X inner product and time quadrature
//! of boundary traces.
//!
//! The spatial domain is the interval `(-L, 0)`. Node `x_0 = -L` carries the
//! boundary part Γ1 and node `x_Nx = 0` carries Γ0. The X inner product is the
//! lumped-mass realization of `‖u‖²_{L²(Ω)} + ε‖u‖²_{L²(∂Ω)}`.

use crate::error::{check_len, LabError, Result};

/// Boundary part on which the control acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlSide {
    /// `x = 0`, the outflow end.
    Gamma0,
    /// `x = -L`, the inflow end.
    Gamma1,
}

impl ControlSide {
    pub fn node(self) -> BoundaryNode {
        match self {
            ControlSide::Gamma0 => BoundaryNode::Right,
            ControlSide::Gamma1 => BoundaryNode::Left,
        }
    }

    pub fn opposite(self) -> ControlSide {
        match self {
            ControlSide::Gamma0 => ControlSide::Gamma1,
            ControlSide::Gamma1 => ControlSide::Gamma0,
        }
    }
}

/// One of the two boundary nodes of a [`Grid1D`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryNode {
    /// `x_0 = -L` (Γ1).
    Left,
    /// `x_Nx = 0` (Γ0).
    Right,
}

impl BoundaryNode {
    pub fn index(self, grid: &Grid1D) -> usize {
        match self {
            BoundaryNode::Left => 0,
            BoundaryNode::Right => grid.cells(),
        }
    }
}

/// Physical parameters of the control problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub length: f64,
    pub horizon: f64,
    pub eps: f64,
    pub control_side: ControlSide,
}

impl PhysParams {
    pub fn new(length: f64, horizon: f64, eps: f64, control_side: ControlSide) -> Result<Self> {
        let p = PhysParams {
            length,
            horizon,
            eps,
            control_side,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(LabError::precondition(format!("L must be > 0, got {}", self.length)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(LabError::precondition(format!("T must be > 0, got {}", self.horizon)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(LabError::precondition(format!(
                "eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Uniform grid on `[-L, 0]` with `cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    cells: usize,
}

impl Grid1D {
    pub fn new(length: f64, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(LabError::precondition(format!("need at least 2 cells, got {cells}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(LabError::precondition(format!("L must be > 0, got {length}")));
        }
        Ok(Grid1D { length, cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn n_nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.cells {
            0.0
        } else {
            -self.length + j as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.node(j)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> StateField {
        StateField(self.nodes().into_iter().map(f).collect())
    }
}

/// Uniform time levels `t_n = n·dt` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps < 1 {
            return Err(LabError::precondition("need at least one time step"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(LabError::precondition(format!("T must be > 0, got {horizon}")));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_levels(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn level(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.dt()
        }
    }

    /// Index of the level equal to `t`, if `t` lies on the grid (to 1e-9 relative).
    pub fn level_index(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let n = x.round();
        if n < 0.0 || n > self.steps as f64 {
            return None;
        }
        if (x - n).abs() <= 1e-9 * x.abs().max(1.0) {
            Some(n as usize)
        } else {
            None
        }
    }
}

/// Nodal values at one time level. Endpoints double as boundary traces.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField(pub Vec<f64>);

impl StateField {
    pub fn zeros(n: usize) -> Self {
        StateField(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, a: f64) -> StateField {
        StateField(self.0.iter().map(|x| a * x).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vec<f64>> for StateField {
    fn from(v: Vec<f64>) -> Self {
        StateField(v)
    }
}

/// Full solution history, one row per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    n_nodes: usize,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(n_levels: usize, n_nodes: usize) -> Self {
        SpaceTimeField {
            n_nodes,
            data: vec![0.0; n_levels * n_nodes],
        }
    }

    /// Builds a field by sampling `f(t, x)` on the grids.
    pub fn sample(grid: &Grid1D, tg: &TimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nodes = grid.nodes();
        let mut out = Self::zeros(tg.n_levels(), grid.n_nodes());
        for n in 0..tg.n_levels() {
            let t = tg.level(n);
            for (v, &x) in out.row_mut(n).iter_mut().zip(&nodes) {
                *v = f(t, x);
            }
        }
        out
    }

    pub fn n_levels(&self) -> usize {
        self.data.len().checked_div(self.n_nodes).unwrap_or(0)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn row_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.data[n * self.n_nodes..(n + 1) * self.n_nodes]
    }

    pub fn state(&self, n: usize) -> StateField {
        StateField(self.row(n).to_vec())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_nodes)
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.data[n * self.n_nodes + j]
    }

    /// Time series at one node.
    pub fn node_series(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn trace(&self, grid: &Grid1D, node: BoundaryNode) -> BoundaryTrace {
        BoundaryTrace {
            node,
            values: self.node_series(node.index(grid)),
        }
    }
}

/// Scalar time series on one boundary node, one value per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub node: BoundaryNode,
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn zeros(node: BoundaryNode, tg: &TimeGrid) -> Self {
        BoundaryTrace {
            node,
            values: vec![0.0; tg.n_levels()],
        }
    }

    pub fn sample(node: BoundaryNode, tg: &TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        BoundaryTrace {
            node,
            values: (0..tg.n_levels()).map(|n| f(tg.level(n))).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        BoundaryTrace {
            node: self.node,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }
}

/// Diagonal weights realizing the discrete X inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct XProduct {
    weights: Vec<f64>,
}

impl XProduct {
    /// Lumped mass plus `eps` on both boundary nodes. `eps = 0` is accepted and
    /// gives the plain trapezoid weights.
    pub fn build(grid: &Grid1D, eps: f64) -> Self {
        let h = grid.h();
        let n = grid.n_nodes();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h + eps;
        weights[n - 1] = 0.5 * h + eps;
        XProduct { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_len("x_inner lhs", self.weights.len(), a.len())?;
        check_len("x_inner rhs", self.weights.len(), b.len())?;
        Ok(self.inner_unchecked(a, b))
    }

    pub(crate) fn inner_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a)
            .zip(b)
            .map(|((w, x), y)| w * x * y)
            .sum()
    }

    pub fn norm(&self, a: &[f64]) -> Result<f64> {
        Ok(self.inner(a, a)?.sqrt())
    }

    pub(crate) fn norm_unchecked(&self, a: &[f64]) -> f64 {
        self.inner_unchecked(a, a).sqrt()
    }
}

pub fn build_x_product(grid: &Grid1D, eps: f64) -> XProduct {
    XProduct::build(grid, eps)
}

pub fn x_inner(a: &StateField, b: &StateField, xp: &XProduct) -> Result<f64> {
    xp.inner(&a.0, &b.0)
}

/// Time quadrature of boundary traces.
///
/// Over step `n → n+1` the trace is represented by
/// `left_weight·tr[n] + (1 − left_weight)·tr[n+1]`, and the pairing is
/// `dt · Σ_n a_step[n]·b_step[n]`. This is the bilinear form under which the
/// θ-scheme and its transpose satisfy the duality identity exactly:
/// adjoint traces and controls use `left_weight = θ`, forward-state traces
/// use `left_weight = 1 − θ`. For θ = 1 the adjoint pairing reduces to the
/// diagonal weights `ω_n = dt` for `n < Nt` and `ω_Nt = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePairing {
    pub left_weight: f64,
}

impl TracePairing {
    /// Pairing for adjoint traces and controls under the θ-scheme.
    pub fn adjoint(theta: f64) -> Self {
        TracePairing { left_weight: theta }
    }

    /// Pairing for traces of forward states under the θ-scheme.
    pub fn forward(theta: f64) -> Self {
        TracePairing {
            left_weight: 1.0 - theta,
        }
    }

    /// Implicit-Euler adjoint pairing.
    pub fn implicit_euler() -> Self {
        Self::adjoint(1.0)
    }

    pub(crate) fn step_values<'a>(&self, tr: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let a = self.left_weight;
        tr.windows(2).map(move |w| a * w[0] + (1.0 - a) * w[1])
    }

    pub(crate) fn pair_unchecked(&self, a: &[f64], b: &[f64], dt: f64) -> f64 {
        dt * self
            .step_values(a)
            .zip(self.step_values(b))
            .map(|(x, y)| x * y)
            .sum::<f64>()
    }

    /// Diagonal weights `ω_n`, available only when the pairing is diagonal
    /// (`left_weight` equal to 0 or 1).
    pub fn diagonal_weights(&self, tg: &TimeGrid) -> Option<Vec<f64>> {
        let dt = tg.dt();
        let mut w = vec![dt; tg.n_levels()];
        if self.left_weight == 1.0 {
            w[tg.steps()] = 0.0;
            Some(w)
        } else if self.left_weight == 0.0 {
            w[0] = 0.0;
            Some(w)
        } else {
            None
        }
    }
}

impl Default for TracePairing {
    fn default() -> Self {
        Self::implicit_euler()
    }
}

pub fn trace_pairing(a: &[f64], b: &[f64], tg: &TimeGrid, pairing: TracePairing) -> Result<f64> {
    check_len("trace lhs", tg.n_levels(), a.len())?;
    check_len("trace rhs", tg.n_levels(), b.len())?;
    Ok(pairing.pair_unchecked(a, b, tg.dt()))
}

/// Squared `L²(0,T)` norm of a boundary trace.
pub fn trace_l2_sq(tr: &BoundaryTrace, tg: &TimeGrid, pairing: TracePairing) -> Result<f64> {
    trace_pairing(&tr.values, &tr.values, tg, pairing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn x_product_weights() {
        let g = Grid1D::new(1.0, 4).unwrap();
        let xp = build_x_product(&g, 0.1);
        let want = [0.225, 0.25, 0.25, 0.25, 0.225];
        for (w, e) in xp.weights().iter().zip(want) {
            assert!(close(*w, e, 1e-15));
        }

        let g = Grid1D::new(1.0, 2).unwrap();
        assert_eq!(build_x_product(&g, 0.0).weights(), &[0.25, 0.5, 0.25]);

        let g = Grid1D::new(2.0, 10).unwrap();
        let s: f64 = build_x_product(&g, 0.3).weights().iter().sum();
        assert!(close(s, 2.6, 1e-14));
    }

    #[test]
    fn x_inner_examples() {
        let g = Grid1D::new(1.0, 8).unwrap();
        let xp = build_x_product(&g, 0.1);
        let z = StateField::zeros(9);
        assert_eq!(x_inner(&z, &z, &xp).unwrap(), 0.0);
        let one = StateField(vec![1.0; 9]);
        let v = x_inner(&one, &one, &xp).unwrap();
        assert!(close(v, 1.2, 1e-14));
        assert!(close(v.sqrt(), 1.095445, 1e-6));
    }

    #[test]
    fn x_inner_length_mismatch() {
        let g = Grid1D::new(1.0, 4).unwrap();
        let xp = build_x_product(&g, 0.1);
        let err = x_inner(&StateField::zeros(5), &StateField::zeros(4), &xp).unwrap_err();
        assert!(matches!(err, LabError::LengthMismatch { .. }));
    }

    #[test]
    fn grid_endpoints() {
        let g = Grid1D::new(3.0, 7).unwrap();
        let x = g.nodes();
        assert_eq!(x[0], -3.0);
        assert_eq!(x[7], 0.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!(Grid1D::new(1.0, 1).is_err());

        let tg = TimeGrid::new(2.5, 7).unwrap();
        assert_eq!(tg.level(0), 0.0);
        assert_eq!(tg.level(7), 2.5);
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn trace_quadrature() {
        let tg = TimeGrid::new(2.0, 4).unwrap();
        let zero = BoundaryTrace::zeros(BoundaryNode::Right, &tg);
        assert_eq!(trace_l2_sq(&zero, &tg, TracePairing::default()).unwrap(), 0.0);
        let one = BoundaryTrace::sample(BoundaryNode::Right, &tg, |_| 1.0);
        let v = trace_l2_sq(&one, &tg, TracePairing::default()).unwrap();
        assert!(close(v, 2.0, 1e-14));

        // ∫₀¹ t² dt = 1/3; the one-sided sum is off by at most dt.
        let tg = TimeGrid::new(1.0, 1000).unwrap();
        let tr = BoundaryTrace::sample(BoundaryNode::Right, &tg, |t| t);
        for p in [TracePairing::adjoint(1.0), TracePairing::forward(1.0)] {
            let v = trace_l2_sq(&tr, &tg, p).unwrap();
            assert!(close(v, 1.0 / 3.0, 2e-3), "{v}");
        }
    }

    #[test]
    fn diagonal_weights_match_pairing() {
        let tg = TimeGrid::new(1.0, 5).unwrap();
        let a: Vec<f64> = (0..6).map(|i| (i as f64).sin()).collect();
        for p in [TracePairing::adjoint(1.0), TracePairing::forward(1.0)] {
            let w = p.diagonal_weights(&tg).unwrap();
            let direct: f64 = w.iter().zip(&a).map(|(w, x)| w * x * x).sum();
            let paired = trace_pairing(&a, &a, &tg, p).unwrap();
            assert!(close(direct, paired, 1e-15));
        }
        assert!(TracePairing::adjoint(0.5).diagonal_weights(&tg).is_none());
    }

    #[test]
    fn params_validation() {
        assert!(PhysParams::new(1.0, 1.0, 0.5, ControlSide::Gamma0).is_ok());
        assert!(PhysParams::new(1.0, 1.0, 0.0, ControlSide::Gamma0).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.5, ControlSide::Gamma0).is_err());
        assert!(PhysParams::new(-1.0, 1.0, 0.5, ControlSide::Gamma0).is_err());
        assert!(PhysParams::new(1.0, 0.0, 0.5, ControlSide::Gamma0).is_err());
    }
}
