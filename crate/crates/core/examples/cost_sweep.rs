//! Observability constant and control cost as the viscosity shrinks.

use advdiff_lab::assembly::Theta;
use advdiff_lab::experiments::{run_cost_sweep, SweepResolution};
use advdiff_lab::hum::HumSettings;

fn main() -> advdiff_lab::Result<()> {
    for horizon in [10.0, 1.5] {
        let sweep = run_cost_sweep(
            1.0,
            horizon,
            &[0.4, 0.2, 0.1],
            Theta::IMPLICIT_EULER,
            HumSettings::default(),
            SweepResolution::default(),
            1.0,
        )?;
        println!("T = {horizon}: in regime = {}, slope of log C vs 1/eps = {:.3}", sweep.in_regime, sweep.slope);
        for r in &sweep.rows {
            println!(
                "  eps={:<4} Nx={:<3} C_obs={:.4e}  |v|/|u0|={:.4e}  |u(T)|={:.2e}  Pe={}",
                r.eps, r.nx, r.c_obs, r.control_norm_ratio, r.terminal_norm, r.peclet
            );
        }
    }
    Ok(())
}
