//! Observability constants for the four problem/boundary pairs, with the
//! dense and power-iteration eigen routes side by side.

use advdiff_lab::assembly::{assemble, Theta};
use advdiff_lab::gramian::{assemble_quadratic_forms, constant_from_forms, delta_sensitivity, EigenMethod, ObsConfig, Problem};
use advdiff_lab::mesh::{ControlSide, Grid1D, TimeGrid};

fn main() -> advdiff_lab::Result<()> {
    let grid = Grid1D::new(1.0, 16)?;
    let tg = TimeGrid::new(2.0, 100)?;
    for problem in [Problem::Adjoint, Problem::Direct] {
        for obs_node in [ControlSide::Gamma0, ControlSide::Gamma1] {
            let sys = assemble(&grid, 0.5, obs_node, Theta::IMPLICIT_EULER)?;
            let cfg = ObsConfig { problem, obs_node, delta: None };
            let forms = assemble_quadratic_forms(&sys, &tg, &cfg)?;
            let dense = constant_from_forms(&forms, None, EigenMethod::Dense)?;
            let power = constant_from_forms(&forms, None, EigenMethod::Power)?;
            println!(
                "{problem:?}/{obs_node:?}: C = {:.6e} (power {:.6e}), delta = {:.2e}, delta/10 change = {:.2}%",
                dense.constant,
                power.constant,
                dense.delta,
                100.0 * delta_sensitivity(&forms, None)?
            );
        }
    }
    Ok(())
}
