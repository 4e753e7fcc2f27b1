//! Carleman weights: identity checks and inequality ratios on random adjoint solutions.

use advdiff_lab::assembly::{Advection, Theta};
use advdiff_lab::carleman::{default_shift, DEFAULT_SIGMA};
use advdiff_lab::experiments::{run_carleman_report, Setup};
use advdiff_lab::mesh::{ControlSide, PhysParams};

fn main() -> advdiff_lab::Result<()> {
    let params = PhysParams::new(1.0, 2.0, 0.5, ControlSide::Gamma0)?;
    for nt in [400, 800] {
        let setup = Setup::new(params, 64, nt, Theta::IMPLICIT_EULER, Advection::Centered)?;
        let rep = run_carleman_report(&setup, DEFAULT_SIGMA, default_shift(1.0), 5, 3)?;
        println!(
            "Nt={nt}: s={} C={:.4}  |alpha_x+phi|={:.1e} |alpha_xx+phi|={:.1e}",
            rep.s, rep.c_shift, rep.identities.alpha_x_dev, rep.identities.alpha_xx_dev
        );
        for row in &rep.rows {
            println!("  trial {}: lhs={:.4e} rhs={:.4e} ratio={:.4e} {:?}", row.trial, row.ratio.lhs, row.ratio.rhs, row.ratio.ratio, row.ratio.status);
        }
    }
    Ok(())
}
