//! Gauss-Hermite quadrature for Gaussian expectations.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::Result;

/// Nodes and weights such that `E[f(Z)] ~ sum_i w_i f(x_i)` for a standard
/// normal `Z`, via Golub-Welsch on the Hermite recurrence.
pub fn standard_normal_rule(n: usize) -> Result<Vec<(f64, f64)>> {
    let mut j = Array2::<f64>::zeros((n, n));
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[[k - 1, k]] = b;
        j[[k, k - 1]] = b;
    }
    let (nodes, vecs) = j.eigh(UPLO::Lower)?;
    let mut rule: Vec<(f64, f64)> = nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = vecs[[0, i]] * vecs[[0, i]];
            // physicists' nodes scale by sqrt(2) for the standard normal
            (x * std::f64::consts::SQRT_2, w)
        })
        .collect();
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(rule)
}

/// `E[f(S Z)]` for standard normal `Z` in `d` dimensions on a tensor grid,
/// where `S` is any matrix with `S S^T = D`.
pub fn gaussian_expectation<F: Fn(&[f64]) -> f64>(
    sqrt_cov: &Array2<f64>,
    points_per_axis: usize,
    f: F,
) -> Result<f64> {
    let d = sqrt_cov.nrows();
    let rule = standard_normal_rule(points_per_axis)?;
    let mut idx = vec![0usize; d];
    let mut acc = 0.0;
    let mut z = vec![0.0; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            z[k] = rule[i].0;
            w *= rule[i].1;
        }
        for r in 0..d {
            x[r] = (0..d).map(|c| sqrt_cov[[r, c]] * z[c]).sum();
        }
        acc += w * f(&x);
        // odometer over the tensor grid
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < points_per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == d {
                return Ok(acc);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_rule_integrates_moments() {
        let rule = standard_normal_rule(32).unwrap();
        let total: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let m2: f64 = rule.iter().map(|&(x, w)| w * x * x).sum();
        assert!((m2 - 1.0).abs() < 1e-12);
        let m4: f64 = rule.iter().map(|&(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 3.0).abs() < 1e-11);
    }

    #[test]
    fn gaussian_expectation_2d_quadratic() {
        // E[x^T x] under covariance D = S S^T
        let s = ndarray::arr2(&[[1.2, 0.0], [0.3, 0.8]]);
        let d = s.dot(&s.t());
        let tr = d[[0, 0]] + d[[1, 1]];
        let got = gaussian_expectation(&s, 24, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        assert!((got - tr).abs() < 1e-10, "{got} vs {tr}");
    }
}
