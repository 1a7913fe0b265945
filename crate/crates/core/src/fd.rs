//! Central finite differences and Richardson extrapolation.
//!
//! Used only as cross-check oracles and for the finite-difference Laplacian
//! schemes; exact jets are the primary derivative source everywhere else.

use crate::error::Result;

/// `out[k][c] ~ d_k F_c(x)` by second-order central differences.
pub fn central_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut out = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        xp[k] = x[k] + h;
        let fp = f(&xp)?;
        xp[k] = x[k] - h;
        let fm = f(&xp)?;
        xp[k] = x[k];
        out.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    Ok(out)
}

/// Value, gradient and Hessian of a vector field sampled on the central stencil.
#[derive(Debug, Clone)]
pub struct StencilJet {
    pub value: Vec<f64>,
    /// `grad[k][c] ~ d_k F_c`.
    pub grad: Vec<Vec<f64>>,
    /// `hess[k][l][c] ~ d_k d_l F_c`.
    pub hess: Vec<Vec<Vec<f64>>>,
}

/// Second-order central differences for first and second derivatives.
///
/// Diagonal second derivatives use the three-point rule, mixed ones the
/// four-point cross rule; all carry an `O(h^2)` error.
pub fn central_jet<F>(f: F, x: &[f64], h: f64) -> Result<StencilJet>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let value = f(x)?;
    let nc = value.len();
    let mut xp = x.to_vec();
    let mut eval = |d: &[(usize, f64)]| -> Result<Vec<f64>> {
        xp.copy_from_slice(x);
        for &(k, s) in d {
            xp[k] += s;
        }
        f(&xp)
    };

    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for k in 0..n {
        plus.push(eval(&[(k, h)])?);
        minus.push(eval(&[(k, -h)])?);
    }
    let grad = (0..n)
        .map(|k| (0..nc).map(|c| (plus[k][c] - minus[k][c]) / (2.0 * h)).collect())
        .collect();

    let mut hess = vec![vec![vec![0.0; nc]; n]; n];
    for k in 0..n {
        for c in 0..nc {
            hess[k][k][c] = (plus[k][c] - 2.0 * value[c] + minus[k][c]) / (h * h);
        }
        for l in (k + 1)..n {
            let pp = eval(&[(k, h), (l, h)])?;
            let pm = eval(&[(k, h), (l, -h)])?;
            let mp = eval(&[(k, -h), (l, h)])?;
            let mm = eval(&[(k, -h), (l, -h)])?;
            for c in 0..nc {
                let d = (pp[c] - pm[c] - mp[c] + mm[c]) / (4.0 * h * h);
                hess[k][l][c] = d;
                hess[l][k][c] = d;
            }
        }
    }
    Ok(StencilJet { value, grad, hess })
}

/// Richardson combination of results at steps `h` (`coarse`) and `h/2` (`fine`)
/// for a method of order `order`.
pub fn richardson(coarse: f64, fine: f64, order: i32) -> f64 {
    let w = 2f64.powi(order);
    (w * fine - coarse) / (w - 1.0)
}

/// Outcome of an `h` versus `h/2` convergence comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convergence {
    /// Discrepancy already at the rounding floor; the difference formula is exact.
    Exact { err_h: f64 },
    /// `err(h) / err(h/2)`.
    Rate { err_h: f64, err_h2: f64, factor: f64 },
}

impl Convergence {
    pub fn classify(err_h: f64, err_h2: f64, floor: f64) -> Self {
        if err_h <= floor && err_h2 <= floor {
            Convergence::Exact { err_h }
        } else {
            Convergence::Rate {
                err_h,
                err_h2,
                factor: err_h / err_h2,
            }
        }
    }

    /// Second-order behaviour: exact, or a halving factor inside `[lo, hi]`.
    pub fn is_second_order(&self, lo: f64, hi: f64) -> bool {
        match *self {
            Convergence::Exact { .. } => true,
            Convergence::Rate { factor, .. } => factor >= lo && factor <= hi,
        }
    }

    pub fn err_h(&self) -> f64 {
        match *self {
            Convergence::Exact { err_h } | Convergence::Rate { err_h, .. } => err_h,
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
