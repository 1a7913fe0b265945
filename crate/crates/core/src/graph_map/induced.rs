//! Jets of the pullback metric `f^* g_N` and of the induced metric `g = g_M + f^* g_N`.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};

use super::{MapJet, SmoothMap};
use crate::chart_manifold::{MetricField, MetricJet};
use crate::error::{GeomError, Result};

/// `P = f^* g_N` with `dp[[i, j, k]] = d_k P_ij` and `d2p[[i, j, k, l]] = d_k d_l P_ij`.
#[derive(Debug, Clone)]
pub struct PullbackJet {
    pub p: DMatrix<f64>,
    pub dp: Array3<f64>,
    /// Present when the map jet carries third derivatives.
    pub d2p: Option<Array4<f64>>,
}

/// Chain and product rule for `P_ij = d_i f^a d_j f^b G_ab(f)`, in matrix form.
///
/// With `D1 = df`, `D2_k = d_k df`, `D3_kl = d_k d_l df`, `G_k = d_k (G o f)` and
/// `G_kl = d_k d_l (G o f)`:
/// `d_k P = D2_k^T G D1 + D1^T G D2_k + D1^T G_k D1` and the second derivative
/// is the corresponding nine-term expansion.
pub fn pullback_jet(map: &MapJet, target: &MetricJet) -> PullbackJet {
    let (n, m) = map.d1.shape();
    let g = &target.g;
    let d1 = &map.d1;
    let d2k = |k: usize| DMatrix::from_fn(n, m, |a, i| map.d2[[a, i, k]]);
    let dg_c = |c: usize| DMatrix::from_fn(n, n, |a, b| target.dg[[a, b, c]]);
    let dgs: Vec<DMatrix<f64>> = (0..n).map(dg_c).collect();
    let d2s: Vec<DMatrix<f64>> = (0..m).map(d2k).collect();
    // G_k = sum_c d_c G d_k f^c
    let gk: Vec<DMatrix<f64>> = (0..m)
        .map(|k| {
            let mut acc = DMatrix::zeros(n, n);
            for c in 0..n {
                acc += &dgs[c] * d1[(c, k)];
            }
            acc
        })
        .collect();

    let p = d1.transpose() * g * d1;
    let mut dp = Array3::zeros((m, m, m));
    for k in 0..m {
        let t = d2s[k].transpose() * g * d1;
        let dk = &t + t.transpose() + d1.transpose() * &gk[k] * d1;
        for i in 0..m {
            for j in 0..m {
                dp[[i, j, k]] = dk[(i, j)];
            }
        }
    }

    let d2p = map.d3.as_ref().map(|d3| {
        let mut out = Array4::zeros((m, m, m, m));
        for k in 0..m {
            for l in k..m {
                let d3kl = DMatrix::from_fn(n, m, |a, i| d3[[a, i, k, l]]);
                let d2kl = DMatrix::from_fn(n, m, |a, _| map.d2[[a, k, l]]);
                let mut gkl = DMatrix::zeros(n, n);
                for c in 0..n {
                    gkl += &dgs[c] * d2kl[(c, 0)];
                    for d in 0..n {
                        let d2g = DMatrix::from_fn(n, n, |a, b| target.d2g[[a, b, c, d]]);
                        gkl += d2g * (d1[(c, k)] * d1[(d, l)]);
                    }
                }
                let (a2, b2) = (&d2s[k], &d2s[l]);
                let half = d3kl.transpose() * g * d1
                    + a2.transpose() * g * b2
                    + a2.transpose() * &gk[l] * d1
                    + b2.transpose() * &gk[k] * d1;
                let full = &half + half.transpose() + d1.transpose() * gkl * d1;
                for i in 0..m {
                    for j in 0..m {
                        out[[i, j, k, l]] = full[(i, j)];
                        out[[i, j, l, k]] = full[(i, j)];
                    }
                }
            }
        }
        out
    });

    PullbackJet {
        p: 0.5 * (&p + p.transpose()),
        dp,
        d2p,
    }
}

/// The induced metric of a graph as a metric field on the domain chart.
#[derive(Debug, Clone)]
pub struct InducedMetric {
    map: SmoothMap,
}

impl InducedMetric {
    pub fn new(map: SmoothMap) -> Self {
        Self { map }
    }
}

impl MetricField for InducedMetric {
    fn dim(&self) -> usize {
        self.map.domain().dim()
    }

    fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        let mj = self.map.jets().jet(x);
        let image = self.map.target().point(mj.value.as_slice())?;
        let target = self.map.target().metric_jet(&image)?;
        let base = self.map.domain().field().jet(x)?;
        let pb = pullback_jet(&mj, &target);
        let d2p = pb.d2p.ok_or_else(|| GeomError::Capability {
            map: self.map.name().to_string(),
            available: self.map.order(),
            required: 3,
        })?;
        Ok(MetricJet {
            g: base.g + pb.p,
            dg: base.dg + pb.dp,
            d2g: base.d2g + d2p,
        })
    }
}
