//! Tridiagonal matrices and the Thomas algorithm.

use crate::error::{LabError, Result};

/// Square tridiagonal matrix stored by diagonals.
///
/// `lower[i]` is entry `(i+1, i)`, `upper[i]` is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity_scaled(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        m.diag.copy_from_slice(d);
        m
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`; `|i - j| ≤ 1` is required.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag[i] += v;
        } else if i == j + 1 {
            self.lower[j] += v;
        } else if j == i + 1 {
            self.upper[i] += v;
        } else {
            panic!("entry ({i}, {j}) is outside the tridiagonal band");
        }
    }

    pub fn transpose(&self) -> Self {
        Tridiagonal {
            lower: self.upper.clone(),
            diag: self.diag.clone(),
            upper: self.lower.clone(),
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Tridiagonal, b: f64) -> Self {
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Tridiagonal {
            lower: lin(&self.lower, &other.lower),
            diag: lin(&self.diag, &other.diag),
            upper: lin(&self.upper, &other.upper),
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// LU factorization without pivoting.
    ///
    /// Succeeds whenever every leading principal minor is nonzero, which holds
    /// for matrices whose symmetric part is positive definite.
    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.n();
        let mut pivots = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        pivots[0] = self.diag[0];
        for i in 1..n {
            let p = pivots[i - 1];
            if p == 0.0 || !p.is_finite() {
                return Err(LabError::Solver(format!("zero or non-finite pivot at row {}", i - 1)));
            }
            mult[i - 1] = self.lower[i - 1] / p;
            pivots[i] = self.diag[i] - mult[i - 1] * self.upper[i - 1];
        }
        let last = pivots[n - 1];
        if last == 0.0 || !last.is_finite() {
            return Err(LabError::Solver(format!("zero or non-finite pivot at row {}", n - 1)));
        }
        Ok(TridiagLu {
            mult,
            pivots,
            upper: self.upper.clone(),
        })
    }
}

/// Factored tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    mult: Vec<f64>,
    pivots: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagLu {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.pivots.len();
        debug_assert_eq!(rhs.len(), n);
        for i in 1..n {
            rhs[i] -= self.mult[i - 1] * rhs[i - 1];
        }
        rhs[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.upper[i] * rhs[i + 1]) / self.pivots[i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Tridiagonal {
        let mut a = Tridiagonal::zeros(n);
        for i in 0..n {
            a.diag[i] = 4.0 + (i as f64).sin();
            if i + 1 < n {
                a.upper[i] = -1.0 + 0.3 * (i as f64).cos();
                a.lower[i] = -1.2 + 0.1 * i as f64 / n as f64;
            }
        }
        a
    }

    #[test]
    fn solve_matches_matvec() {
        for n in [1, 2, 3, 9, 40] {
            let a = sample(n);
            let x: Vec<f64> = (0..n).map(|i| (0.7 * i as f64).cos()).collect();
            let b = a.matvec(&x);
            let got = a.factor().unwrap().solve(&b);
            for (g, e) in got.iter().zip(&x) {
                assert!((g - e).abs() < 1e-13, "n={n}");
            }
        }
    }

    #[test]
    fn transpose_entries() {
        let a = sample(5);
        let t = a.transpose();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(a.get(i, j), t.get(j, i));
            }
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = Tridiagonal::zeros(3);
        assert!(matches!(a.factor(), Err(LabError::Solver(_))));
    }
}
