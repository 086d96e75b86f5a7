use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{domain, Error, Result};

/// Row-per-sample feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Features {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(domain(format!("{} values for {rows}×{dim} features", data.len())));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(domain("ragged feature rows"));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let x = DMatrix::from_row_slice(self.rows, self.dim, &self.data);
        let mean = x.row_mean().transpose();
        let mut centered = x;
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.transpose() * &centered / (self.rows as f64 - 1.0);
        (mean, cov)
    }
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `Tr((Σa Σb)^½)` through the symmetric form `Σa^½ Σb Σa^½`.
fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let s = sym_sqrt(a);
    let m = &s * b * &s;
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum()
}

/// Fréchet distance between Gaussian fits of two feature sets.
pub fn fid(a: &Features, b: &Features) -> Result<f64> {
    if a.dim != b.dim || a.dim == 0 {
        return Err(domain(format!("feature dims {} vs {}", a.dim, b.dim)));
    }
    let need = a.dim + 1;
    if a.rows < need || b.rows < need {
        return Err(domain(format!("need at least {need} samples per set, got {} and {}", a.rows, b.rows)));
    }
    let (mu_a, cov_a) = a.moments();
    let (mu_b, cov_b) = b.moments();
    let diff = (&mu_a - &mu_b).norm_squared();
    let base = cov_a.trace() + cov_b.trace();
    for jitter in [0.0, 1e-10, 1e-6] {
        let eye = DMatrix::<f64>::identity(a.dim, a.dim) * (jitter * (base / a.dim as f64).max(1e-12));
        let t = trace_sqrt_product(&(&cov_a + &eye), &(&cov_b + &eye));
        if t.is_finite() {
            return Ok((diff + base - 2.0 * t).max(0.0));
        }
        log::warn!("FID matrix square root not finite; retrying with jitter {jitter}");
    }
    Err(Error::Numerical("covariance square root failed after jitter".into()))
}
