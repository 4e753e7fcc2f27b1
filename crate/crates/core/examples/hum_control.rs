//! Penalized HUM null control of the sine profile for decreasing β.

use advdiff_lab::assembly::{assemble, Theta};
use advdiff_lab::experiments::sine_profile;
use advdiff_lab::hum::{compute_null_control, verify_optimality, HumSettings};
use advdiff_lab::mesh::{ControlSide, Grid1D, TimeGrid};

fn main() -> advdiff_lab::Result<()> {
    let grid = Grid1D::new(1.0, 64)?;
    let tg = TimeGrid::new(2.0, 400)?;
    let sys = assemble(&grid, 0.5, ControlSide::Gamma0, Theta::IMPLICIT_EULER)?;
    let u0 = sine_profile(&grid);
    println!("|u0|_X = {:.6e}", sys.mass.norm(&u0.0)?);

    for beta in [1e-4, 1e-6, 1e-8] {
        let settings = HumSettings { beta, ..HumSettings::default() };
        let r = compute_null_control(&sys, &tg, &u0, settings)?;
        let opt = verify_optimality(&r, &sys, &tg, &u0)?;
        println!(
            "beta={beta:.0e}  |u(T)|={:.3e} (free {:.3e})  |v|={:.4e}  cg={} conv={} EL={:.1e}",
            r.terminal_norm, r.free_terminal_norm, r.control_norm, r.cg_iterations, r.converged, opt.penalized
        );
    }
    Ok(())
}
