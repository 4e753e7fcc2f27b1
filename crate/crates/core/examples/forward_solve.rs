//! Free evolution of a sine profile, printing the X-norm every 50 steps.

use advdiff_lab::assembly::{assemble, Theta};
use advdiff_lab::experiments::sine_profile;
use advdiff_lab::march::{solve_forward, Loads};
use advdiff_lab::mesh::{ControlSide, Grid1D, TimeGrid};

fn main() -> advdiff_lab::Result<()> {
    let grid = Grid1D::new(1.0, 64)?;
    let tg = TimeGrid::new(2.0, 400)?;
    let sys = assemble(&grid, 0.5, ControlSide::Gamma0, Theta::CRANK_NICOLSON)?;
    let u0 = sine_profile(&grid);
    let sol = solve_forward(&sys, &tg, &u0, Loads::none())?;

    println!("{:>8} {:>14} {:>14} {:>14}", "t", "|u|_X", "u(-L)", "u(0)");
    for n in (0..tg.n_levels()).step_by(50) {
        let row = sol.history.row(n);
        println!(
            "{:>8.3} {:>14.6e} {:>14.6e} {:>14.6e}",
            tg.level(n),
            sys.mass.norm(row)?,
            row[0],
            row[row.len() - 1]
        );
    }
    Ok(())
}
