//! Finite-difference Hessians and their inversion.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A finite-difference Hessian. `one_sided[j]` records that coordinate `j`
/// was differenced forward because stepping below it was infeasible.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub matrix: DMatrix<f64>,
    pub one_sided: Vec<bool>,
}

impl Hessian {
    pub fn any_one_sided(&self) -> bool {
        self.one_sided.iter().any(|&b| b)
    }

    /// Inverse by Cholesky factorization. Fails when the matrix is not
    /// numerically positive definite.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        if self.matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::CovarianceUnavailable(
                "information matrix has non-finite entries".into(),
            ));
        }
        let chol = self.matrix.clone().cholesky().ok_or_else(|| {
            Error::CovarianceUnavailable("information matrix is not positive definite".into())
        })?;
        let inv = chol.inverse();
        // Symmetrize away rounding asymmetry.
        Ok((&inv + inv.transpose()) * 0.5)
    }
}

/// Step for coordinate value `t`: `max(1e-5, 1e-5·|t|)`, adjusted so that
/// `t + h` is exactly representable relative to `t`.
pub fn fd_step(t: f64) -> f64 {
    let h = 1e-5f64.max(1e-5 * t.abs());
    (t + h) - t
}

/// Evaluation points and their weights for one Hessian entry.
type Stencil = Vec<(Vec<f64>, f64)>;

/// Hessian of `f` at `theta` by central differences. A coordinate whose
/// backward step gives a non-finite value is differenced forward instead.
/// Function evaluations run in parallel.
pub fn numerical_hessian<F>(f: F, theta: &[f64]) -> Hessian
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = theta.len();
    let h: Vec<f64> = theta.iter().map(|&t| fd_step(t)).collect();
    let one_sided: Vec<bool> = (0..d)
        .map(|j| {
            let mut p = theta.to_vec();
            p[j] -= h[j];
            !f(&p).is_finite()
        })
        .collect();

    // Offsets (in units of h) and first-derivative weights per coordinate.
    let stencil = |j: usize| -> [(f64, f64); 2] {
        if one_sided[j] {
            [(0.0, -1.0 / h[j]), (1.0, 1.0 / h[j])]
        } else {
            [(-1.0, -0.5 / h[j]), (1.0, 0.5 / h[j])]
        }
    };

    // Each task is one matrix entry: a list of (offset vector, weight).
    let mut tasks: Vec<(usize, usize, Stencil)> = Vec::new();
    for i in 0..d {
        let diag = if one_sided[i] {
            vec![(0.0, 1.0), (1.0, -2.0), (2.0, 1.0)]
        } else {
            vec![(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)]
        };
        let terms = diag
            .into_iter()
            .map(|(a, w)| {
                let mut p = theta.to_vec();
                p[i] += a * h[i];
                (p, w / (h[i] * h[i]))
            })
            .collect();
        tasks.push((i, i, terms));
        for j in 0..i {
            let mut terms = Vec::with_capacity(4);
            for (a, wa) in stencil(i) {
                for (b, wb) in stencil(j) {
                    let mut p = theta.to_vec();
                    p[i] += a * h[i];
                    p[j] += b * h[j];
                    terms.push((p, wa * wb));
                }
            }
            tasks.push((i, j, terms));
        }
    }

    let entries: Vec<(usize, usize, f64)> = tasks
        .par_iter()
        .map(|(i, j, terms)| {
            let v = terms.iter().map(|(p, w)| w * f(p)).sum::<f64>();
            (*i, *j, v)
        })
        .collect();
    let mut matrix = DMatrix::zeros(d, d);
    for (i, j, v) in entries {
        matrix[(i, j)] = v;
        matrix[(j, i)] = v;
    }
    Hessian { matrix, one_sided }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: [[f64; 3]; 3] = [[4.0, 1.0, 0.5], [1.0, 3.0, -0.25], [0.5, -0.25, 2.0]];
    const CENTER: [f64; 3] = [0.7, -1.3, 2.1];

    // 0.5 (x - c)ᵀA(x - c): a log-likelihood expanded about its optimum.
    fn quadratic(x: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(CENTER).map(|(a, b)| a - b).collect();
        let mut q = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                q += 0.5 * d[i] * A[i][j] * d[j];
            }
        }
        q
    }

    #[test]
    fn exact_on_quadratics() {
        let hs = numerical_hessian(quadratic, &CENTER);
        for (i, row) in A.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                assert!((hs.matrix[(i, j)] - a).abs() < 1e-8, "{i}{j}");
            }
        }
        assert!(!hs.any_one_sided());
    }

    #[test]
    fn one_sided_on_a_wall() {
        let f = |x: &[f64]| {
            if x[0] < CENTER[0] {
                f64::INFINITY
            } else {
                quadratic(x)
            }
        };
        let hs = numerical_hessian(f, &CENTER);
        assert_eq!(hs.one_sided, vec![true, false, false]);
        for (i, row) in A.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                assert!((hs.matrix[(i, j)] - a).abs() < 1e-8, "{i}{j}");
            }
        }
    }

    #[test]
    fn inverse_of_indefinite_fails() {
        let hs = Hessian {
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            one_sided: vec![false; 2],
        };
        assert!(matches!(hs.inverse(), Err(Error::CovarianceUnavailable(_))));
    }

    #[test]
    fn step_is_representable() {
        for &t in &[0.0, 1e-9, 0.3, 7.1, 1e8] {
            let h = fd_step(t);
            assert_eq!((t + h) - t, h);
            assert!(h >= 0.99e-5 * t.abs().max(1.0));
        }
    }
}
