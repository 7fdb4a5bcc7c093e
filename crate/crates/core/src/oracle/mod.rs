//! Brute-force verifiers: exhaustive grid search for ASP best responses and
//! reward-game equilibria, finite-difference Hessians and a golden-section
//! line search.
//!
//! Nothing here calls into `asp_solver` or `mu_game`; only `model` is shared.

mod best_response;
mod ne_search;

pub use best_response::{grid_best_response, GridBounds, GridSpec};
pub use ne_search::{grid_ne_search, grid_ne_search_with, NeGridSpec, NeInner};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Central-difference Hessian of `f` at `point`.
///
/// The step along coordinate i is `h * |x_i|`, or `h` where x_i is zero.
pub fn numeric_hessian<F>(f: F, point: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::domain(format!("finite-difference step must be positive, got {h}")));
    }
    let k = point.len();
    let steps: Vec<f64> = point
        .iter()
        .map(|x| if *x != 0.0 { h * x.abs() } else { h })
        .collect();
    let mut x = point.to_vec();
    let eval = |x: &mut Vec<f64>, shifts: &[(usize, f64)]| -> Result<f64> {
        for &(i, d) in shifts {
            x[i] += d;
        }
        let v = f(x);
        x.copy_from_slice(point);
        v
    };
    let f0 = eval(&mut x, &[])?;
    let mut hess = vec![vec![0.0; k]; k];
    for i in 0..k {
        let hi = steps[i];
        let fp = eval(&mut x, &[(i, hi)])?;
        let fm = eval(&mut x, &[(i, -hi)])?;
        hess[i][i] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let fpp = eval(&mut x, &[(i, hi), (j, hj)])?;
            let fpm = eval(&mut x, &[(i, hi), (j, -hj)])?;
            let fmp = eval(&mut x, &[(i, -hi), (j, hj)])?;
            let fmm = eval(&mut x, &[(i, -hi), (j, -hj)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(matrix: &[Vec<f64>]) -> f64 {
    let k = matrix.len();
    let m = DMatrix::from_fn(k, k, |i, j| 0.5 * (matrix[i][j] + matrix[j][i]));
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Maximizer of a unimodal function on [lo, hi] by golden-section search.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}
