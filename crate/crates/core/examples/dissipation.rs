//! Backward decay of random adjoint data against exp(-(t2-t1-L)^2 / (4 eps (t2-t1))).

use advdiff_lab::assembly::{Advection, Theta};
use advdiff_lab::experiments::{run_dissipation, Setup};
use advdiff_lab::mesh::{ControlSide, PhysParams};

fn main() -> advdiff_lab::Result<()> {
    let params = PhysParams::new(1.0, 4.0, 0.25, ControlSide::Gamma0)?;
    let setup = Setup::new(params, 128, 2000, Theta::IMPLICIT_EULER, Advection::Centered)?;
    let rows = run_dissipation(&setup, 0.5, 3.5, 20, 1)?;
    println!("bound factor {:.6}", rows[0].bound_factor);
    for r in &rows {
        println!(
            "trial {:>2}: |phi(t1)|/|phi(t2)| = {:.4e}  {}",
            r.trial,
            r.norm_t1 / r.norm_t2,
            if r.satisfied { "ok" } else { "VIOLATED" }
        );
    }
    Ok(())
}
