//! Carleman weights `η, α, φ_w`, their identities, the admissible range of
//! the Carleman parameter, and quadrature of both sides of the Carleman
//! inequality on computed adjoint solutions.
//!
//! ```text
//! η(x)   = 2L + x                       (−x + L for control on Γ1)
//! α(t,x) = (C − e^{η(x)}) / (ε² t (T − t))
//! φ_w    = e^{η(x)} / (ε² t (T − t))
//! ```
//!
//! Scaled variants use `T̃ = εT` and `α̃(t̃, x) = α(t̃/ε, x)`.

use crate::error::{check_len, LabError, Result};
use crate::mesh::{ControlSide, Grid1D, SpaceTimeField, TimeGrid};

/// Exponents below this are flushed to zero during quadrature.
pub const EXP_FLOOR: f64 = -700.0;

/// Default multiplier standing in for the unspecified threshold constant.
pub const DEFAULT_SIGMA: f64 = 2.0;

/// Default shift `C = 2 e^{2L}`.
///
/// Any `C > e^{2L}` is admissible for the weights; `C > 2e^{2L} − e^{L}` is
/// additionally needed for the observation weight `e^{−4sα(·,0)+2sα(·,−L)}`
/// to vanish at `t ∈ {0, T}` and keep the right-hand side finite.
pub fn default_shift(length: f64) -> f64 {
    2.0 * (2.0 * length).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanWeights {
    pub length: f64,
    pub horizon: f64,
    pub eps: f64,
    pub c_shift: f64,
    pub s: f64,
    /// Side carrying the observation; `Gamma1` selects the mirrored weight `η(x) = −x + L`.
    pub side: ControlSide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightValues {
    pub eta: f64,
    pub alpha: f64,
    pub phi_w: f64,
}

impl CarlemanWeights {
    pub fn new(length: f64, horizon: f64, eps: f64, c_shift: f64, s: f64, side: ControlSide) -> Result<Self> {
        if !(length > 0.0 && horizon > 0.0 && eps > 0.0) {
            return Err(LabError::precondition("L, T and eps must be positive"));
        }
        if !(c_shift > (2.0 * length).exp()) {
            return Err(LabError::precondition(format!(
                "C must exceed e^(2L) = {}, got {c_shift}",
                (2.0 * length).exp()
            )));
        }
        if !(s > 0.0) {
            return Err(LabError::precondition(format!("s must be > 0, got {s}")));
        }
        Ok(CarlemanWeights {
            length,
            horizon,
            eps,
            c_shift,
            s,
            side,
        })
    }

    pub fn eta(&self, x: f64) -> f64 {
        match self.side {
            ControlSide::Gamma0 => 2.0 * self.length + x,
            ControlSide::Gamma1 => -x + self.length,
        }
    }

    /// `dη/dx`
    fn eta_slope(&self) -> f64 {
        match self.side {
            ControlSide::Gamma0 => 1.0,
            ControlSide::Gamma1 => -1.0,
        }
    }

    /// `ε² t (T − t)`
    fn denom(&self, t: f64) -> f64 {
        self.eps * self.eps * t * (self.horizon - t)
    }

    pub fn alpha_unchecked(&self, t: f64, x: f64) -> f64 {
        (self.c_shift - self.eta(x).exp()) / self.denom(t)
    }

    pub fn phi_w_unchecked(&self, t: f64, x: f64) -> f64 {
        self.eta(x).exp() / self.denom(t)
    }

    pub fn ln_phi_w(&self, t: f64, x: f64) -> f64 {
        self.eta(x) - self.denom(t).ln()
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<WeightValues> {
        if !(t > 0.0 && t < self.horizon) {
            return Err(LabError::precondition(format!(
                "t = {t} outside the open interval (0, {})",
                self.horizon
            )));
        }
        Ok(WeightValues {
            eta: self.eta(x),
            alpha: self.alpha_unchecked(t, x),
            phi_w: self.phi_w_unchecked(t, x),
        })
    }

    /// `T̃ = εT`
    pub fn scaled_horizon(&self) -> f64 {
        self.eps * self.horizon
    }

    /// `α̃(t̃, x) = α(t̃/ε, x)`
    pub fn alpha_scaled(&self, t_scaled: f64, x: f64) -> f64 {
        self.alpha_unchecked(t_scaled / self.eps, x)
    }

    /// `φ̃(t̃, x) = φ_w(t̃/ε, x)`
    pub fn phi_scaled(&self, t_scaled: f64, x: f64) -> f64 {
        self.phi_w_unchecked(t_scaled / self.eps, x)
    }

    /// Closed-form `(α̃_t, α̃_xt, α̃_tt)` at scaled time `t̃`.
    pub fn alpha_scaled_time_derivatives(&self, t_scaled: f64, x: f64) -> (f64, f64, f64) {
        let e = self.eps;
        let t = t_scaled / e;
        let tau = t * (self.horizon - t);
        let dtau = self.horizon - 2.0 * t;
        let a = self.c_shift - self.eta(x).exp();
        let a_x = -self.eta_slope() * self.eta(x).exp();
        let e2 = e * e;
        let alpha_t = -a * dtau / (e2 * tau * tau);
        let alpha_xt = -a_x * dtau / (e2 * tau * tau);
        let alpha_tt = a * (2.0 / (tau * tau) + 2.0 * dtau * dtau / (tau * tau * tau)) / e2;
        (alpha_t / e, alpha_xt / e, alpha_tt / (e * e))
    }

    /// Observed boundary abscissa and the opposite one.
    fn boundary_points(&self) -> (f64, f64) {
        match self.side {
            ControlSide::Gamma0 => (0.0, -self.length),
            ControlSide::Gamma1 => (-self.length, 0.0),
        }
    }
}

pub fn eval_weights(w: &CarlemanWeights, t: f64, x: f64) -> Result<WeightValues> {
    w.eval(t, x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightIdentityReport {
    /// `max |α_x ∓ (−φ_w)| / φ_w` with `α_x` by central differences.
    pub alpha_x_dev: f64,
    /// `max |α_xx + φ_w| / φ_w` with `α_xx` by central differences.
    pub alpha_xx_dev: f64,
    /// `max |α̃_t| / (T̃ φ̃²)`
    pub ratio_t: f64,
    /// `max |α̃_xt| / (T̃ φ̃²)`
    pub ratio_xt: f64,
    /// `max |α̃_tt| / (T̃² φ̃³)`
    pub ratio_tt: f64,
}

/// Checks `α_x = −φ_w` (`+φ_w` for the mirrored weight) and `α_xx = −φ_w`
/// by central differences of step `fd_step` at interior grid nodes and
/// interior time levels, and samples the time-derivative ratios.
pub fn check_weight_identities(w: &CarlemanWeights, grid: &Grid1D, tg: &TimeGrid, fd_step: f64) -> WeightIdentityReport {
    let mut rep = WeightIdentityReport {
        alpha_x_dev: 0.0,
        alpha_xx_dev: 0.0,
        ratio_t: 0.0,
        ratio_xt: 0.0,
        ratio_tt: 0.0,
    };
    let sign = w.eta_slope();
    let tt = w.scaled_horizon();
    for n in 1..tg.steps() {
        let t = tg.level(n);
        for j in 1..grid.cells() {
            let x = grid.node(j);
            let h = fd_step;
            let (am, a0, ap) = (
                w.alpha_unchecked(t, x - h),
                w.alpha_unchecked(t, x),
                w.alpha_unchecked(t, x + h),
            );
            let phi = w.phi_w_unchecked(t, x);
            let ax = (ap - am) / (2.0 * h);
            let axx = (ap - 2.0 * a0 + am) / (h * h);
            rep.alpha_x_dev = rep.alpha_x_dev.max((ax + sign * phi).abs() / phi);
            rep.alpha_xx_dev = rep.alpha_xx_dev.max((axx + phi).abs() / phi);

            let ts = w.eps * t;
            let ps = w.phi_scaled(ts, x);
            let (at, axt, att) = w.alpha_scaled_time_derivatives(ts, x);
            rep.ratio_t = rep.ratio_t.max(at.abs() / (tt * ps * ps));
            rep.ratio_xt = rep.ratio_xt.max(axt.abs() / (tt * ps * ps));
            rep.ratio_tt = rep.ratio_tt.max(att.abs() / (tt * tt * ps * ps * ps));
        }
    }
    rep
}

/// `σ (εT + ε²T²)`
pub fn s_threshold(eps: f64, horizon: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(LabError::precondition(format!("sigma must be > 0, got {sigma}")));
    }
    let et = eps * horizon;
    Ok(sigma * (et + et * et))
}

/// `σ (T̃ + T̃² + ε⁻¹T̃² + ε^{1/3} T̃^{2/3})` with `T̃ = εT`.
pub fn s_threshold_scaled(eps: f64, horizon: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(LabError::precondition(format!("sigma must be > 0, got {sigma}")));
    }
    let tt = eps * horizon;
    Ok(sigma * (tt + tt * tt + tt * tt / eps + eps.cbrt() * tt.powf(2.0 / 3.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioStatus {
    Finite,
    /// Both sides vanish (zero solution).
    ZeroOverZero,
    /// The right-hand side underflowed to zero while the left did not.
    RhsUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanRatio {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; NaN for 0/0 and +∞ on underflow.
    pub ratio: f64,
    pub status: RatioStatus,
}

fn weighted(log_weight: f64, value_sq: f64) -> f64 {
    if value_sq == 0.0 || log_weight < EXP_FLOOR {
        0.0
    } else {
        log_weight.exp() * value_sq
    }
}

/// Trapezoid quadrature of both sides of the Carleman inequality on an
/// adjoint history. Weights are evaluated in log space; the end levels
/// `t = 0` and `t = T`, where every weight vanishes, contribute nothing.
pub fn inequality_ratio(w: &CarlemanWeights, phi: &SpaceTimeField, grid: &Grid1D, tg: &TimeGrid) -> Result<CarlemanRatio> {
    check_len("history levels", tg.n_levels(), phi.n_levels())?;
    check_len("history nodes", grid.n_nodes(), phi.n_nodes())?;
    let s = w.s;
    let ln_s = s.ln();
    let h = grid.h();
    let dt = tg.dt();
    let nodes = grid.nodes();
    let nn = grid.n_nodes();
    let xw: Vec<f64> = (0..nn).map(|j| if j == 0 || j == nn - 1 { 0.5 * h } else { h }).collect();
    let (x_obs, x_far) = w.boundary_points();
    let (j_obs, j_far) = match w.side {
        ControlSide::Gamma0 => (nn - 1, 0),
        ControlSide::Gamma1 => (0, nn - 1),
    };

    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for n in 1..tg.steps() {
        let t = tg.level(n);
        let row = phi.row(n);
        let mut slice = 0.0;
        for j in 0..nn {
            let x = nodes[j];
            let lp = w.ln_phi_w(t, x);
            let a = w.alpha_unchecked(t, x);
            let dx = if j == 0 {
                (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h)
            } else if j == nn - 1 {
                (3.0 * row[j] - 4.0 * row[j - 1] + row[j - 2]) / (2.0 * h)
            } else {
                (row[j + 1] - row[j - 1]) / (2.0 * h)
            };
            slice += xw[j] * weighted(3.0 * ln_s + 3.0 * lp - 2.0 * s * a, row[j] * row[j]);
            slice += xw[j] * weighted(ln_s + lp - 2.0 * s * a, dx * dx);
        }
        for (jb, xb) in [(j_obs, x_obs), (j_far, x_far)] {
            let lp = w.ln_phi_w(t, xb);
            let a = w.alpha_unchecked(t, xb);
            slice += weighted(3.0 * ln_s + 3.0 * lp - 2.0 * s * a, row[jb] * row[jb]);
        }
        lhs += dt * slice;

        let lp = w.ln_phi_w(t, x_obs);
        let expo = 9.0 * ln_s + 9.0 * lp - 4.0 * s * w.alpha_unchecked(t, x_obs) + 2.0 * s * w.alpha_unchecked(t, x_far);
        rhs += dt * weighted(expo, row[j_obs] * row[j_obs]);
    }

    let (ratio, status) = if lhs == 0.0 && rhs == 0.0 {
        (f64::NAN, RatioStatus::ZeroOverZero)
    } else if rhs == 0.0 {
        (f64::INFINITY, RatioStatus::RhsUnderflow)
    } else {
        (lhs / rhs, RatioStatus::Finite)
    };
    Ok(CarlemanRatio {
        lhs,
        rhs,
        ratio,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(c: f64) -> CarlemanWeights {
        CarlemanWeights::new(1.0, 2.0, 0.5, c, 4.0, ControlSide::Gamma0).unwrap()
    }

    #[test]
    fn eta_values() {
        let w = weights(8.0);
        assert_eq!(w.eta(0.0), 2.0);
        assert_eq!(w.eta(-1.0), 1.0);
    }

    #[test]
    fn reference_point() {
        let w = weights(8.0);
        let v = eval_weights(&w, 1.0, 0.0).unwrap();
        let e2 = 2f64.exp();
        assert!((v.phi_w - 29.556224).abs() < 1e-5);
        assert!((v.alpha - 2.443776).abs() < 1e-5);
        assert!((v.phi_w - e2 / 0.25).abs() < 1e-12);
    }

    #[test]
    fn rearrangement_identity() {
        let w = weights(9.5);
        for &(t, x) in &[(0.1, -0.9), (1.0, -0.5), (1.9, 0.0), (0.7, -1.0)] {
            let v = w.eval(t, x).unwrap();
            let lhs = v.alpha * 0.25 * t * (2.0 - t) + v.eta.exp();
            assert!((lhs - 9.5).abs() < 1e-12);
            assert!(v.alpha > 0.0);
        }
    }

    #[test]
    fn rejects_times_outside_open_interval() {
        let w = weights(8.0);
        assert!(w.eval(0.0, -0.5).is_err());
        assert!(w.eval(2.0, -0.5).is_err());
        assert!(CarlemanWeights::new(1.0, 2.0, 0.5, 7.0, 1.0, ControlSide::Gamma0).is_err());
        assert!(CarlemanWeights::new(1.0, 2.0, 0.5, 8.0, 0.0, ControlSide::Gamma0).is_err());
    }

    #[test]
    fn thresholds() {
        assert!((s_threshold(0.5, 2.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(s_threshold(1e-9, 2.0, 1.0).unwrap() < 1e-8);
        assert!(s_threshold(0.5, 2.0, 0.0).is_err());
        for &eps in &[0.05, 0.2, 0.5, 1.0] {
            for &t in &[0.5, 2.0, 10.0] {
                assert!(s_threshold_scaled(eps, t, 1.0).unwrap() >= s_threshold(eps, t, 1.0).unwrap());
            }
        }
    }

    #[test]
    fn weight_decays_at_both_ends() {
        let w = weights(default_shift(1.0));
        for x in [-1.0, -0.5, 0.0] {
            let mut prev_lo = f64::INFINITY;
            let mut prev_hi = f64::INFINITY;
            for k in 2..=6 {
                let dt = 10f64.powi(-k) * 2.0;
                let lo = (-2.0 * w.s * w.alpha_unchecked(dt, x)).exp();
                let hi = (-2.0 * w.s * w.alpha_unchecked(2.0 - dt, x)).exp();
                assert!(lo <= prev_lo && hi <= prev_hi);
                prev_lo = lo;
                prev_hi = hi;
            }
            assert_eq!(prev_lo, 0.0);
            assert_eq!(prev_hi, 0.0);
        }
    }

    #[test]
    fn mirrored_identities() {
        let grid = Grid1D::new(1.0, 16).unwrap();
        let tg = TimeGrid::new(2.0, 20).unwrap();
        for side in [ControlSide::Gamma0, ControlSide::Gamma1] {
            let w = CarlemanWeights::new(1.0, 2.0, 0.5, default_shift(1.0), 4.0, side).unwrap();
            let rep = check_weight_identities(&w, &grid, &tg, 1e-3);
            assert!(rep.alpha_x_dev < 1e-6, "{side:?} {rep:?}");
            assert!(rep.alpha_xx_dev < 1e-6, "{side:?} {rep:?}");
            assert!(rep.ratio_t.is_finite() && rep.ratio_xt.is_finite() && rep.ratio_tt.is_finite());
        }
    }

    #[test]
    fn zero_history() {
        let grid = Grid1D::new(1.0, 8).unwrap();
        let tg = TimeGrid::new(2.0, 10).unwrap();
        let w = weights(default_shift(1.0));
        let r = inequality_ratio(&w, &SpaceTimeField::zeros(11, 9), &grid, &tg).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert_eq!(r.status, RatioStatus::ZeroOverZero);
        assert!(r.ratio.is_nan());
    }
}
