#![allow(dead_code)]

use advdiff_lab::assembly::SemidiscreteSystem;
use advdiff_lab::mesh::StateField;
use nalgebra::{DMatrix, DVector};

/// exp(A) by Taylor series on A / 2^k followed by k squarings.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let k = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = a / 2f64.powi(k);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for j in 1..30 {
        term = &term * &scaled / j as f64;
        sum += &term;
        if term.abs().max() < 1e-20 * sum.abs().max() {
            break;
        }
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// -M⁻¹K (or -M⁻¹Kᵀ) as a dense matrix.
pub fn generator(sys: &SemidiscreteSystem, transpose: bool) -> DMatrix<f64> {
    let k = sys.stiffness.to_dense();
    let w = sys.mass.weights();
    let n = w.len();
    DMatrix::from_fn(n, n, |i, j| {
        let kij = if transpose { k[j][i] } else { k[i][j] };
        -kij / w[i]
    })
}

/// Exact semidiscrete free evolution over time `t`.
pub fn exact_evolution(sys: &SemidiscreteSystem, t: f64, u0: &StateField, transpose: bool) -> StateField {
    let e = expm(&(generator(sys, transpose) * t));
    let v = e * DVector::from_column_slice(&u0.0);
    StateField(v.iter().copied().collect())
}

/// Least-squares slope of log(err) against log(dt).
pub fn observed_order(dts: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn x_distance(sys: &SemidiscreteSystem, a: &StateField, b: &StateField) -> f64 {
    let d: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect();
    sys.mass.norm(&d).unwrap()
}
