//! Direct problem observed on Γ1 against the adjoint problem observed on Γ0 under refinement.

use advdiff_lab::assembly::Theta;
use advdiff_lab::experiments::run_illposed;
use advdiff_lab::mesh::{ControlSide, PhysParams};

fn main() -> advdiff_lab::Result<()> {
    let params = PhysParams::new(1.0, 2.0, 0.5, ControlSide::Gamma0)?;
    let rows = run_illposed(&params, Theta::IMPLICIT_EULER, &[8, 16, 32, 64], 8)?;
    println!("{:>4} {:>5} {:>14} {:>12}", "Nx", "Nt", "kappa(D/G1)", "C(A/G0)");
    for r in rows {
        println!("{:>4} {:>5} {:>14.6e} {:>12.6}", r.nx, r.nt, r.kappa_direct, r.c_adjoint);
    }
    Ok(())
}
