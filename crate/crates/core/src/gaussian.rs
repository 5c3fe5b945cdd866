//! Dense small-dimension Gaussian algebra.
//!
//! Marginalization and conditioning operate on partitioned mean vectors and
//! covariance matrices. Covariance inversions go through a Cholesky
//! factorization after an explicit condition-number check; ill-conditioned
//! blocks are rejected, never regularized.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Largest condition number accepted when a covariance block is inverted.
pub const MAX_CONDITION: f64 = 1e12;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Multivariate normal density described by its mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianDensity {
    /// Validates shape, symmetry and positive semi-definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::Argument("Gaussian density needs dim >= 1".into()));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Argument(format!("covariance is {}x{}, mean has length {n}", cov.nrows(), cov.ncols())));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite entry in mean or covariance".into()));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Numerical(format!(
                        "covariance not symmetric at ({i},{j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        let g = GaussianDensity { mean, cov };
        g.check_psd()?;
        Ok(g)
    }

    /// Builds a density from a covariance that may carry rounding asymmetry,
    /// averaging it with its transpose first.
    pub fn from_symmetrized(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let sym = symmetrize(&cov);
        Self::new(mean, sym)
    }

    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let n = mean.len();
        if cov_row_major.len() != n * n {
            return Err(Error::Argument(format!("expected {} covariance entries, got {}", n * n, cov_row_major.len())));
        }
        Self::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(n, n, cov_row_major))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Standard deviation of coordinate `i`.
    pub fn std_dev(&self, i: usize) -> f64 {
        self.cov[(i, i)].max(0.0).sqrt()
    }

    fn check_psd(&self) -> Result<()> {
        let trace = self.cov.trace();
        let eig = self.cov.clone().symmetric_eigenvalues();
        let min = eig.min();
        if min < -PSD_TOL * trace.abs().max(0.0) {
            return Err(Error::Numerical(format!(
                "covariance not positive semi-definite: min eigenvalue {min:e}, trace {trace:e}"
            )));
        }
        Ok(())
    }

    /// Marginal density over the coordinates in `keep`, in the given order.
    pub fn marginalize(&self, keep: &[usize]) -> Result<Self> {
        check_indices(keep, self.dim())?;
        let mean = DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.mean[i]));
        let cov = DMatrix::from_fn(keep.len(), keep.len(), |r, c| self.cov[(keep[r], keep[c])]);
        Ok(GaussianDensity { mean, cov })
    }

    /// Conditional density of the remaining coordinates given that the
    /// coordinates `given` take `values`. Remaining coordinates keep their
    /// original relative order.
    pub fn condition(&self, given: &[usize], values: &[f64]) -> Result<Self> {
        check_indices(given, self.dim())?;
        if given.len() != values.len() {
            return Err(Error::Argument(format!("{} conditioning indices but {} values", given.len(), values.len())));
        }
        let rest: Vec<usize> = (0..self.dim()).filter(|i| !given.contains(i)).collect();
        if rest.is_empty() {
            return Err(Error::Argument("conditioning on every coordinate".into()));
        }

        let s_rr = DMatrix::from_fn(rest.len(), rest.len(), |r, c| self.cov[(rest[r], rest[c])]);
        let s_rm = DMatrix::from_fn(rest.len(), given.len(), |r, c| self.cov[(rest[r], given[c])]);
        let s_mm = DMatrix::from_fn(given.len(), given.len(), |r, c| self.cov[(given[r], given[c])]);
        let innovation = DVector::from_iterator(given.len(), given.iter().zip(values).map(|(&i, &v)| v - self.mean[i]));

        // gain = S_rm S_mm^{-1}, computed as the transpose of S_mm^{-1} S_rm^T
        let gain_t = solve_spd(&s_mm, &s_rm.transpose())?;
        let gain = gain_t.transpose();

        let mu_r = DVector::from_iterator(rest.len(), rest.iter().map(|&i| self.mean[i]));
        let mean = mu_r + &gain * innovation;
        let cov = symmetrize(&(s_rr - &gain * s_rm.transpose()));
        let g = GaussianDensity { mean, cov };
        g.check_psd()?;
        Ok(g)
    }

    /// Affine image `A x + b` of the density.
    pub fn affine(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if a.ncols() != self.dim() || a.nrows() != b.len() {
            return Err(Error::Argument(format!(
                "affine map {}x{} (+{}) incompatible with dim {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                self.dim()
            )));
        }
        let mean = a * &self.mean + b;
        let cov = symmetrize(&(a * &self.cov * a.transpose()));
        Ok(GaussianDensity { mean, cov })
    }

    /// Probability density at `x`. Requires a non-singular covariance.
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Argument(format!("point has dim {}, density {}", x.len(), self.dim())));
        }
        let chol =
            self.cov.clone().cholesky().ok_or_else(|| Error::Numerical("covariance not positive definite".into()))?;
        let d = DVector::from_column_slice(x) - &self.mean;
        let z = chol.l().solve_lower_triangular(&d).expect("triangular factor is non-singular");
        let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        let n = self.dim() as f64;
        Ok((-0.5 * (z.norm_squared() + log_det + n * (2.0 * PI).ln())).exp())
    }
}

fn check_indices(idx: &[usize], dim: usize) -> Result<()> {
    for (k, &i) in idx.iter().enumerate() {
        if i >= dim {
            return Err(Error::Argument(format!("index {i} out of range for dim {dim}")));
        }
        if idx[..k].contains(&i) {
            return Err(Error::Argument(format!("duplicate index {i}")));
        }
    }
    Ok(())
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solves `S X = B` for symmetric positive definite `S` after checking its
/// condition number against [`MAX_CONDITION`].
pub fn solve_spd(s: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = s.clone().symmetric_eigenvalues();
    let (min, max) = (eig.min(), eig.max());
    if min <= 0.0 || max / min > MAX_CONDITION {
        return Err(Error::Numerical(format!("singular or ill-conditioned block: eigenvalues in [{min:e}, {max:e}]")));
    }
    let chol = s.clone().cholesky().ok_or_else(|| Error::Numerical("Cholesky factorization failed".into()))?;
    Ok(chol.solve(b))
}

/// Standard normal cumulative distribution function, `½ erfc(−z/√2)`.
pub fn normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Univariate normal density `N(x; mean, sd)`.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}
