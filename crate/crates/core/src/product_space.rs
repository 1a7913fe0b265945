//! The product `(M x N, g_M + g_N)`, the split metric `s = g_M - g_N`, and the
//! block structure of its connection and curvature.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use crate::chart_manifold::{curvature, ChartManifold, ChartPoint};
use crate::error::{GeomError, Result};

/// A tangent vector of `M x N` stored by factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitVector {
    pub m_part: DVector<f64>,
    pub n_part: DVector<f64>,
}

impl SplitVector {
    pub fn new(m_part: DVector<f64>, n_part: DVector<f64>) -> Self {
        Self { m_part, n_part }
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Self::new(DVector::zeros(m), DVector::zeros(n))
    }

    pub fn from_m(m_part: DVector<f64>, n: usize) -> Self {
        Self::new(m_part, DVector::zeros(n))
    }

    pub fn from_n(m: usize, n_part: DVector<f64>) -> Self {
        Self::new(DVector::zeros(m), n_part)
    }

    /// `(dim M, dim N)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.m_part.len(), self.n_part.len())
    }

    pub fn max_abs_diff(&self, other: &SplitVector) -> f64 {
        (&self.m_part - &other.m_part)
            .amax()
            .max((&self.n_part - &other.n_part).amax())
    }

    /// Concatenated coordinates `(m_part, n_part)`.
    pub fn concat(&self) -> DVector<f64> {
        let (m, n) = self.dims();
        DVector::from_fn(m + n, |i, _| {
            if i < m {
                self.m_part[i]
            } else {
                self.n_part[i - m]
            }
        })
    }
}

impl Add for &SplitVector {
    type Output = SplitVector;
    fn add(self, rhs: &SplitVector) -> SplitVector {
        SplitVector::new(&self.m_part + &rhs.m_part, &self.n_part + &rhs.n_part)
    }
}

impl Sub for &SplitVector {
    type Output = SplitVector;
    fn sub(self, rhs: &SplitVector) -> SplitVector {
        SplitVector::new(&self.m_part - &rhs.m_part, &self.n_part - &rhs.n_part)
    }
}

impl Neg for &SplitVector {
    type Output = SplitVector;
    fn neg(self) -> SplitVector {
        SplitVector::new(-&self.m_part, -&self.n_part)
    }
}

impl Mul<&SplitVector> for f64 {
    type Output = SplitVector;
    fn mul(self, rhs: &SplitVector) -> SplitVector {
        SplitVector::new(self * &rhs.m_part, self * &rhs.n_part)
    }
}

/// A point `(x, y)` of `M x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub base: ChartPoint,
    pub fiber: ChartPoint,
}

/// The two factors of the product.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    pub m: ChartManifold,
    pub n: ChartManifold,
}

impl ProductSpace {
    pub fn new(m: ChartManifold, n: ChartManifold) -> Self {
        Self { m, n }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m.dim(), self.n.dim())
    }

    pub fn point(&self, base: &[f64], fiber: &[f64]) -> Result<ProductPoint> {
        Ok(ProductPoint {
            base: self.m.point(base)?,
            fiber: self.n.point(fiber)?,
        })
    }

    /// Metric, connection and curvature of both factors at `q`.
    pub fn tensors_at(&self, q: &ProductPoint) -> Result<ProductTensors> {
        let jm = self.m.metric_jet(&q.base)?;
        let jn = self.n.metric_jet(&q.fiber)?;
        Ok(ProductTensors {
            gamma_m: curvature::christoffel(&jm)?,
            gamma_n: curvature::christoffel(&jn)?,
            riem_m: curvature::riemann(&jm)?,
            riem_n: curvature::riemann(&jn)?,
            g_m: jm.g,
            g_n: jn.g,
        })
    }

    pub fn product_metric_at(&self, q: &ProductPoint, u: &SplitVector, v: &SplitVector) -> Result<f64> {
        self.tensors_at(q)?.metric(u, v)
    }

    pub fn s_ambient_at(&self, q: &ProductPoint, u: &SplitVector, v: &SplitVector) -> Result<f64> {
        self.tensors_at(q)?.s(u, v)
    }

    pub fn product_riemann_at(
        &self,
        q: &ProductPoint,
        a: &SplitVector,
        b: &SplitVector,
        c: &SplitVector,
        d: &SplitVector,
    ) -> Result<f64> {
        self.tensors_at(q)?.riemann(a, b, c, d)
    }
}

/// Factor tensors at one point of `M x N`.
#[derive(Debug, Clone)]
pub struct ProductTensors {
    pub g_m: DMatrix<f64>,
    pub g_n: DMatrix<f64>,
    pub gamma_m: Array3<f64>,
    pub gamma_n: Array3<f64>,
    pub riem_m: Array4<f64>,
    pub riem_n: Array4<f64>,
}

impl ProductTensors {
    pub fn dims(&self) -> (usize, usize) {
        (self.g_m.nrows(), self.g_n.nrows())
    }

    fn check(&self, v: &SplitVector) -> Result<()> {
        let (m, n) = self.dims();
        if v.m_part.len() != m {
            return Err(GeomError::DimensionMismatch {
                expected: m,
                got: v.m_part.len(),
                context: "split vector M part",
            });
        }
        if v.n_part.len() != n {
            return Err(GeomError::DimensionMismatch {
                expected: n,
                got: v.n_part.len(),
                context: "split vector N part",
            });
        }
        Ok(())
    }

    pub fn g_m_product(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g_m * v))
    }

    pub fn g_n_product(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.g_n * v))
    }

    /// `g_M(u_M, v_M) + g_N(u_N, v_N)`.
    pub fn metric(&self, u: &SplitVector, v: &SplitVector) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.g_m_product(&u.m_part, &v.m_part) + self.g_n_product(&u.n_part, &v.n_part))
    }

    /// `g_M(u_M, v_M) - g_N(u_N, v_N)`.
    pub fn s(&self, u: &SplitVector, v: &SplitVector) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.g_m_product(&u.m_part, &v.m_part) - self.g_n_product(&u.n_part, &v.n_part))
    }

    /// `R_M(a_M, b_M, c_M, d_M) + R_N(a_N, b_N, c_N, d_N)`.
    pub fn riemann(&self, a: &SplitVector, b: &SplitVector, c: &SplitVector, d: &SplitVector) -> Result<f64> {
        for v in [a, b, c, d] {
            self.check(v)?;
        }
        Ok(curvature::contract4(&self.riem_m, &a.m_part, &b.m_part, &c.m_part, &d.m_part)
            + curvature::contract4(&self.riem_n, &a.n_part, &b.n_part, &c.n_part, &d.n_part))
    }

    /// `diag(g_M, g_N)` in concatenated coordinates.
    pub fn metric_matrix(&self) -> DMatrix<f64> {
        self.block_diag(1.0)
    }

    /// `diag(g_M, -g_N)` in concatenated coordinates.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        self.block_diag(-1.0)
    }

    fn block_diag(&self, sign: f64) -> DMatrix<f64> {
        let (m, n) = self.dims();
        let mut out = DMatrix::zeros(m + n, m + n);
        out.view_mut((0, 0), (m, m)).copy_from(&self.g_m);
        out.view_mut((m, m), (n, n)).copy_from(&(sign * &self.g_n));
        out
    }

    /// Christoffel symbols of the product in concatenated coordinates;
    /// every component mixing the two factors is zero.
    pub fn christoffel(&self) -> Array3<f64> {
        let (m, n) = self.dims();
        let mut out = Array3::zeros((m + n, m + n, m + n));
        for ((k, i, j), v) in self.gamma_m.indexed_iter() {
            out[[k, i, j]] = *v;
        }
        for ((k, i, j), v) in self.gamma_n.indexed_iter() {
            out[[m + k, m + i, m + j]] = *v;
        }
        out
    }

    /// Covariant Riemann tensor of the product in concatenated coordinates.
    pub fn riemann_tensor(&self) -> Array4<f64> {
        let (m, n) = self.dims();
        let mut out = Array4::zeros((m + n, m + n, m + n, m + n));
        for ((i, j, k, l), v) in self.riem_m.indexed_iter() {
            out[[i, j, k, l]] = *v;
        }
        for ((i, j, k, l), v) in self.riem_n.indexed_iter() {
            out[[m + i, m + j, m + k, m + l]] = *v;
        }
        out
    }
}
