//! Map families with closed-form jets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array3, Array4};

use super::{MapJet, MapJets};

/// `f(x) = y0`.
#[derive(Debug, Clone)]
pub struct ConstantMap {
    domain_dim: usize,
    value: DVector<f64>,
}

impl ConstantMap {
    pub fn new(domain_dim: usize, value: Vec<f64>) -> Self {
        Self {
            domain_dim,
            value: DVector::from_vec(value),
        }
    }
}

impl MapJets for ConstantMap {
    fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    fn target_dim(&self) -> usize {
        self.value.len()
    }

    fn jet(&self, _x: &[f64]) -> MapJet {
        let (m, n) = (self.domain_dim, self.value.len());
        MapJet {
            value: self.value.clone(),
            d1: DMatrix::zeros(n, m),
            d2: Array3::zeros((n, m, m)),
            d3: Some(Array4::zeros((n, m, m, m))),
        }
    }
}

/// `f(x) = L x + b`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    linear: DMatrix<f64>,
    offset: DVector<f64>,
}

impl AffineMap {
    pub fn new(linear: DMatrix<f64>, offset: DVector<f64>) -> Self {
        assert_eq!(linear.nrows(), offset.len());
        Self { linear, offset }
    }

    pub fn linear(linear: DMatrix<f64>) -> Self {
        let n = linear.nrows();
        Self::new(linear, DVector::zeros(n))
    }

    pub fn identity(dim: usize) -> Self {
        Self::linear(DMatrix::identity(dim, dim))
    }

    pub fn scaling(dim: usize, factor: f64) -> Self {
        Self::linear(DMatrix::identity(dim, dim) * factor)
    }
}

impl MapJets for AffineMap {
    fn domain_dim(&self) -> usize {
        self.linear.ncols()
    }

    fn target_dim(&self) -> usize {
        self.linear.nrows()
    }

    fn jet(&self, x: &[f64]) -> MapJet {
        let (n, m) = self.linear.shape();
        let xv = DVector::from_column_slice(x);
        MapJet {
            value: &self.linear * xv + &self.offset,
            d1: self.linear.clone(),
            d2: Array3::zeros((n, m, m)),
            d3: Some(Array4::zeros((n, m, m, m))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn scale(self, s: f64) -> Complex {
        Complex::new(self.re * s, self.im * s)
    }

    fn powi(self, k: u32) -> Complex {
        (0..k).fold(Complex::new(1.0, 0.0), |acc, _| acc.mul(self))
    }

    /// `i^q`.
    fn i_pow(q: usize) -> Complex {
        match q % 4 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        }
    }
}

/// `w -> coeff * w^k` on `C = R^2`, `w = x + i y`.
///
/// A derivative with `d` slots of which `q` are `y` equals
/// `coeff * i^q * k!/(k-d)! * w^(k-d)` (zero for `d > k`).
#[derive(Debug, Clone)]
pub struct HolomorphicPower {
    k: u32,
    coeff: Complex,
}

impl HolomorphicPower {
    pub fn new(k: u32) -> Self {
        Self::with_coeff(k, 1.0, 0.0)
    }

    pub fn with_coeff(k: u32, re: f64, im: f64) -> Self {
        Self {
            k,
            coeff: Complex::new(re, im),
        }
    }

    fn derivative(&self, w: Complex, slots: &[usize]) -> Complex {
        let d = slots.len() as u32;
        if d > self.k {
            return Complex::new(0.0, 0.0);
        }
        let q = slots.iter().filter(|&&s| s == 1).count();
        let falling: f64 = (0..d).map(|t| f64::from(self.k - t)).product();
        self.coeff
            .mul(Complex::i_pow(q))
            .mul(w.powi(self.k - d))
            .scale(falling)
    }
}

impl MapJets for HolomorphicPower {
    fn domain_dim(&self) -> usize {
        2
    }

    fn target_dim(&self) -> usize {
        2
    }

    fn jet(&self, x: &[f64]) -> MapJet {
        let w = Complex::new(x[0], x[1]);
        let split = |z: Complex, a: usize| if a == 0 { z.re } else { z.im };
        let v = self.derivative(w, &[]);
        MapJet {
            value: DVector::from_vec(vec![v.re, v.im]),
            d1: DMatrix::from_fn(2, 2, |a, i| split(self.derivative(w, &[i]), a)),
            d2: Array3::from_shape_fn((2, 2, 2), |(a, i, j)| split(self.derivative(w, &[i, j]), a)),
            d3: Some(Array4::from_shape_fn((2, 2, 2, 2), |(a, i, j, k)| {
                split(self.derivative(w, &[i, j, k]), a)
            })),
        }
    }
}

/// `x -> inner(Q x)` for a square matrix `Q`.
#[derive(Debug, Clone)]
pub struct PrecomposeLinear {
    inner: Arc<dyn MapJets>,
    q: DMatrix<f64>,
}

impl PrecomposeLinear {
    pub fn new(inner: Arc<dyn MapJets>, q: DMatrix<f64>) -> Self {
        assert!(q.is_square() && q.nrows() == inner.domain_dim());
        Self { inner, q }
    }
}

impl MapJets for PrecomposeLinear {
    fn domain_dim(&self) -> usize {
        self.q.ncols()
    }

    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }

    fn order(&self) -> usize {
        self.inner.order()
    }

    fn jet(&self, x: &[f64]) -> MapJet {
        let m = self.q.ncols();
        let n = self.inner.target_dim();
        let y = &self.q * DVector::from_column_slice(x);
        let inner = self.inner.jet(y.as_slice());
        let q = &self.q;
        let d2 = Array3::from_shape_fn((n, m, m), |(a, i, j)| {
            let mut acc = 0.0;
            for p in 0..m {
                for r in 0..m {
                    acc += inner.d2[[a, p, r]] * q[(p, i)] * q[(r, j)];
                }
            }
            acc
        });
        let d3 = inner.d3.as_ref().map(|t| {
            Array4::from_shape_fn((n, m, m, m), |(a, i, j, k)| {
                let mut acc = 0.0;
                for p in 0..m {
                    for r in 0..m {
                        for s in 0..m {
                            acc += t[[a, p, r, s]] * q[(p, i)] * q[(r, j)] * q[(s, k)];
                        }
                    }
                }
                acc
            })
        });
        MapJet {
            value: inner.value,
            d1: inner.d1 * q,
            d2,
            d3,
        }
    }
}

/// Wraps a map and withholds derivatives above `order`.
#[derive(Debug, Clone)]
pub struct TruncatedJets {
    inner: Arc<dyn MapJets>,
    order: usize,
}

impl TruncatedJets {
    pub fn new(inner: Arc<dyn MapJets>, order: usize) -> Self {
        assert!(order >= 2, "jets of order below 2 are not representable");
        Self { inner, order }
    }
}

impl MapJets for TruncatedJets {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }

    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }

    fn order(&self) -> usize {
        self.order.min(self.inner.order())
    }

    fn jet(&self, x: &[f64]) -> MapJet {
        let mut j = self.inner.jet(x);
        if self.order < 3 {
            j.d3 = None;
        }
        j
    }
}
