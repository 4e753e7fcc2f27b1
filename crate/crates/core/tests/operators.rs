use advdiff_lab::assembly::{assemble, Theta};
use advdiff_lab::experiments::{random_unit_state, rng_from_seed, sine_profile};
use advdiff_lab::gramian::{
    assemble_quadratic_forms, delta_sensitivity, observability_constant, ObsConfig,
};
use advdiff_lab::hum::{compute_null_control, gramian_apply, HumSettings};
use advdiff_lab::march::{solve_forward, Loads};
use advdiff_lab::mesh::{ControlSide, Grid1D, StateField, TimeGrid};
use nalgebra::{DMatrix, DVector};

#[test]
fn hum_and_gramian_agree_on_lambda() {
    for (theta, side) in [
        (Theta::IMPLICIT_EULER, ControlSide::Gamma0),
        (Theta::CRANK_NICOLSON, ControlSide::Gamma0),
        (Theta::IMPLICIT_EULER, ControlSide::Gamma1),
    ] {
        let grid = Grid1D::new(1.0, 4).unwrap();
        let tg = TimeGrid::new(2.0, 16).unwrap();
        let sys = assemble(&grid, 0.5, side, theta).unwrap();
        let cfg = ObsConfig { obs_node: side, ..ObsConfig::adjoint_gamma0() };
        let forms = assemble_quadratic_forms(&sys, &tg, &cfg).unwrap();
        let w = sys.mass.weights();
        let scale = forms.g_trace.abs().max();
        for j in 0..5 {
            let mut e = StateField::zeros(5);
            e.0[j] = 1.0;
            let col = gramian_apply(&sys, &tg, &e).unwrap();
            for (i, (wi, ci)) in w.iter().zip(&col.0).enumerate() {
                let d = (wi * ci - forms.g_trace[(i, j)]).abs();
                assert!(d <= 1e-12 * scale, "{side:?} ({i},{j}): {d:e}");
            }
        }
    }
}

#[test]
fn cg_matches_dense_solve() {
    let grid = Grid1D::new(1.0, 64).unwrap();
    let tg = TimeGrid::new(2.0, 400).unwrap();
    let sys = assemble(&grid, 0.5, ControlSide::Gamma0, Theta::IMPLICIT_EULER).unwrap();
    let u0 = sine_profile(&grid);
    let settings = HumSettings::default();
    let r = compute_null_control(&sys, &tg, &u0, settings).unwrap();
    assert!(r.converged);

    let n = grid.n_nodes();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = StateField::zeros(n);
        e.0[j] = 1.0;
        a.set_column(j, &DVector::from_column_slice(&gramian_apply(&sys, &tg, &e).unwrap().0));
        a[(j, j)] += settings.beta;
    }
    let z = solve_forward(&sys, &tg, &u0, Loads::none()).unwrap().terminal();
    let rhs = DVector::from_iterator(n, z.0.iter().map(|v| -v));
    let direct = a.lu().solve(&rhs).unwrap();
    let diff: Vec<f64> = r.phi_t_hat.0.iter().zip(direct.iter()).map(|(x, y)| x - y).collect();
    let rel = sys.mass.norm(&diff).unwrap() / sys.mass.norm(direct.as_slice()).unwrap();
    assert!(rel <= 1e-6, "relative difference {rel:e}");
}

#[test]
fn observability_constant_decreases_with_horizon() {
    let grid = Grid1D::new(1.0, 8).unwrap();
    let sys = assemble(&grid, 0.5, ControlSide::Gamma0, Theta::IMPLICIT_EULER).unwrap();
    let consts: Vec<f64> = [1.0, 2.0, 4.0]
        .into_iter()
        .map(|t| {
            let tg = TimeGrid::new(t, (50.0 * t) as usize).unwrap();
            observability_constant(&sys, &tg, &ObsConfig::adjoint_gamma0()).unwrap().constant
        })
        .collect();
    assert!(consts.windows(2).all(|w| w[1] < w[0]), "{consts:?}");
}

#[test]
fn adjoint_constant_is_delta_stable() {
    for nx in [16, 32, 64] {
        let grid = Grid1D::new(1.0, nx).unwrap();
        let tg = TimeGrid::new(2.0, 8 * nx).unwrap();
        let sys = assemble(&grid, 0.5, ControlSide::Gamma0, Theta::IMPLICIT_EULER).unwrap();
        let forms = assemble_quadratic_forms(&sys, &tg, &ObsConfig::adjoint_gamma0()).unwrap();
        let s = delta_sensitivity(&forms, None).unwrap();
        assert!(s < 0.05, "Nx={nx}: {s}");
    }
}

#[test]
fn control_cost_is_bounded_by_observability() {
    let grid = Grid1D::new(1.0, 64).unwrap();
    let tg = TimeGrid::new(2.0, 400).unwrap();
    let sys = assemble(&grid, 0.5, ControlSide::Gamma0, Theta::IMPLICIT_EULER).unwrap();
    let c = observability_constant(&sys, &tg, &ObsConfig::adjoint_gamma0()).unwrap().constant;
    let mut rng = rng_from_seed(5);
    for _ in 0..3 {
        let u0 = random_unit_state(&mut rng, &sys.mass);
        let r = compute_null_control(&sys, &tg, &u0, HumSettings::default()).unwrap();
        assert!(r.control_norm <= 1.05 * c, "{} > {}", r.control_norm, c);
    }
}

#[test]
fn cost_sweep_is_homogeneous_and_gated() {
    use advdiff_lab::experiments::{run_cost_sweep, SweepResolution};
    let res = SweepResolution { cells_per_eps: 4.0, steps_per_time: 40.0 };
    let run = |t: f64, scale: f64| {
        run_cost_sweep(1.0, t, &[0.4, 0.2], Theta::IMPLICIT_EULER, HumSettings::default(), res, scale).unwrap()
    };
    let (a, b) = (run(10.0, 1.0), run(10.0, 10.0));
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let d = (ra.control_norm_ratio - rb.control_norm_ratio).abs() / ra.control_norm_ratio;
        assert!(d <= 1e-10, "eps {}: {d:e}", ra.eps);
    }
    let short = run(1.5, 1.0);
    assert!(a.in_regime && !short.in_regime);
    assert_eq!(short.rows.len(), 2);
}
