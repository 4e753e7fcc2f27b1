//! Forward/adjoint duality on random data for several θ.

use advdiff_lab::adjoint::duality_terms;
use advdiff_lab::assembly::{assemble, Theta};
use advdiff_lab::experiments::rng_from_seed;
use advdiff_lab::mesh::{BoundaryTrace, ControlSide, Grid1D, StateField, TimeGrid};
use rand::Rng;

fn main() -> advdiff_lab::Result<()> {
    let grid = Grid1D::new(1.0, 32)?;
    let tg = TimeGrid::new(1.0, 100)?;
    let mut rng = rng_from_seed(7);
    let n = grid.n_nodes();

    for side in [ControlSide::Gamma0, ControlSide::Gamma1] {
        for theta in [1.0, 0.75, 0.5] {
            let sys = assemble(&grid, 0.3, side, Theta::new(theta)?)?;
            let u0 = StateField((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let phi_t = StateField((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let v = BoundaryTrace {
                node: sys.control_node(),
                values: (0..tg.n_levels()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let d = duality_terms(&sys, &tg, &u0, &v, &phi_t)?;
            println!(
                "{side:?} theta={theta:<5} <u0,phi(0)>={:+.12e} <u(T),phiT>={:+.12e} P={:+.12e} rel={:.2e}",
                d.initial,
                d.terminal,
                d.boundary,
                d.relative_residual()
            );
        }
    }
    Ok(())
}
