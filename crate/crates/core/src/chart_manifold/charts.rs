use nalgebra::DMatrix;
use ndarray::{Array3, Array4};

use super::{MetricField, MetricJet};
use crate::error::Result;

/// Stereographic chart of the round sphere of radius `r`:
/// `g_ij = phi(x) delta_ij` with `phi = 4 r^4 / (r^2 + |x|^2)^2`.
#[derive(Debug, Clone)]
pub struct StereographicSphere {
    dim: usize,
    radius: f64,
}

impl StereographicSphere {
    pub fn new(dim: usize, radius: f64) -> Self {
        assert!(dim >= 1 && radius > 0.0);
        Self { dim, radius }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Conformal factor and its first and second derivatives.
    pub fn conformal_factor(&self, x: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
        let n = self.dim;
        let r2 = self.radius * self.radius;
        let c = 4.0 * r2 * r2;
        let q: f64 = x.iter().map(|v| v * v).sum();
        let d = r2 + q;
        let phi = c / (d * d);
        let grad = x.iter().map(|&xk| -4.0 * c * xk / (d * d * d)).collect();
        let hess = DMatrix::from_fn(n, n, |k, l| {
            let delta = if k == l { 1.0 } else { 0.0 };
            -4.0 * c * delta / (d * d * d) + 24.0 * c * (x[k] * x[l]) / (d * d * d * d)
        });
        (phi, grad, hess)
    }
}

impl MetricField for StereographicSphere {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        let n = self.dim;
        let (phi, grad, hess) = self.conformal_factor(x);
        let g = DMatrix::from_diagonal_element(n, n, phi);
        let mut dg = Array3::zeros((n, n, n));
        let mut d2g = Array4::zeros((n, n, n, n));
        for i in 0..n {
            for k in 0..n {
                dg[[i, i, k]] = grad[k];
                for l in 0..n {
                    d2g[[i, i, k, l]] = hess[(k, l)];
                }
            }
        }
        Ok(MetricJet { g, dg, d2g })
    }
}

/// Metric with constant components (Euclidean space, flat tori).
#[derive(Debug, Clone)]
pub struct ConstantMetric {
    g: DMatrix<f64>,
}

impl ConstantMetric {
    pub fn new(g: DMatrix<f64>) -> Self {
        assert!(g.is_square());
        Self { g }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }
}

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn jet(&self, _x: &[f64]) -> Result<MetricJet> {
        Ok(MetricJet::constant(self.g.clone()))
    }
}

/// Circle of radius `r` in the angle coordinate: `g = r^2`.
#[derive(Debug, Clone)]
pub struct Circle {
    radius: f64,
}

impl Circle {
    pub fn new(radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { radius }
    }
}

impl MetricField for Circle {
    fn dim(&self) -> usize {
        1
    }

    fn jet(&self, _x: &[f64]) -> Result<MetricJet> {
        Ok(MetricJet::constant(DMatrix::from_element(
            1,
            1,
            self.radius * self.radius,
        )))
    }
}
