//! Algebraic identities at a point: the normal estimate, the curvature
//! decompositions and the reaction term `Psi_c`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart_manifold::ChartPoint;
use crate::error::{GeomError, Result};
use crate::geometry::PointGeometry;
use crate::graph_map::{phi_shift, SmoothMap};
use crate::product_space::SplitVector;

/// Worst slack of `s(eta, eta) <= (c - 1)/(1 + c) g(eta, eta)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalEstimate {
    /// `min (bound - s(eta, eta))` over all tested normals; negative means violated.
    pub worst_slack: f64,
    pub normals_tested: usize,
}

/// Tests the normal estimate on every frame normal, `mixtures` random unit
/// normals and every `A(e_i, e_j)`.
pub fn normal_estimate(geo: &PointGeometry, c: f64, mixtures: usize, seed: u64) -> Result<NormalEstimate> {
    let lm2 = geo.lambda_max_sq();
    if c < lm2 - 1e-12 * (1.0 + lm2) {
        return Err(GeomError::Precondition(format!(
            "normal estimate needs c >= lambda_m^2 = {lm2}, got c = {c}"
        )));
    }
    let bound = (c - 1.0) / (1.0 + c);
    let slack = |eta: &SplitVector| bound * geo.gmn(eta, eta) - geo.smn(eta, eta);
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let xi = &geo.frames.xi;
    for eta in xi {
        worst = worst.min(slack(eta));
        count += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = geo.dims();
    for _ in 0..mixtures {
        let mut eta = SplitVector::zero(m, n);
        for x in xi {
            eta = &eta + &(rng.random_range(-1.0..1.0) * x);
        }
        let norm = geo.gmn(&eta, &eta).sqrt();
        if norm > 1e-8 {
            worst = worst.min(slack(&((1.0 / norm) * &eta)));
            count += 1;
        }
    }
    for row in &geo.extrinsic.a {
        for a in row {
            worst = worst.min(slack(a));
            count += 1;
        }
    }
    Ok(NormalEstimate {
        worst_slack: worst,
        normals_tested: count,
    })
}

pub fn lemma_aest_check(f: &SmoothMap, p: &ChartPoint, c: f64, seed: u64) -> Result<NormalEstimate> {
    normal_estimate(&PointGeometry::compute(f, p)?, c, 20, seed)
}

/// Both sides of the curvature decomposition along `e_l` of the adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureDecomposition {
    /// `2 sum_k (f^*R_N - c R_M)(e_k, e_l, e_k, e_l)`.
    pub lhs: f64,
    /// Five-term form with `s(e_l, e_l)` and `Phi_c(e_l, e_l)` mixed in.
    pub lemma_terms: [f64; 5],
    /// Six-term rearrangement closing with `(m - 2) Phi_c(e_l, e_l) - (1 - c)/(1 + c)`.
    pub corollary_terms: [f64; 6],
}

impl CurvatureDecomposition {
    pub fn lemma_rhs(&self) -> f64 {
        self.lemma_terms.iter().sum()
    }

    pub fn corollary_rhs(&self) -> f64 {
        self.corollary_terms.iter().sum()
    }

    pub fn lemma_residual(&self) -> f64 {
        (self.lhs - self.lemma_rhs()).abs()
    }

    pub fn corollary_residual(&self) -> f64 {
        (self.lhs - self.corollary_rhs()).abs()
    }

    pub fn rhs_agreement(&self) -> f64 {
        (self.lemma_rhs() - self.corollary_rhs()).abs()
    }
}

/// `sec_N(df u ^ df v) |df u|^2 |df v|^2`, falling back to `f^*R_N(u, v, u, v)`
/// when the image plane is degenerate (both are then zero up to rounding).
fn weighted_sec_n(geo: &PointGeometry, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    let pu = PointGeometry::form(&geo.pullback, u, u);
    let pv = PointGeometry::form(&geo.pullback, v, v);
    match geo.sec_n_on_image(u, v) {
        Ok(sec) => Ok(sec * pu * pv),
        Err(GeomError::DegeneratePlane { .. }) => Ok(geo.pulled_riem_n(u, v, u, v)),
        Err(e) => Err(e),
    }
}

/// Evaluates the curvature decomposition in the adapted frame for any `c >= 0`, `sigma`.
pub fn curvature_decomposition(geo: &PointGeometry, c: f64, sigma: f64, l: usize) -> Result<CurvatureDecomposition> {
    let (m, _) = geo.dims();
    if l >= m {
        return Err(GeomError::DimensionMismatch {
            expected: m,
            got: l,
            context: "frame index",
        });
    }
    let phi = geo.phi_c(c)?;
    let s = geo.s();
    let e: Vec<DVector<f64>> = (0..m).map(|k| geo.e(k)).collect();
    let el = &e[l];
    let pb = |k: usize| PointGeometry::form(&geo.pullback, &e[k], &e[k]);
    let phi_kk = |k: usize| PointGeometry::form(&phi, &e[k], &e[k]);
    let gm_ll = PointGeometry::form(geo.g_m(), el, el);
    let tr_s: f64 = (0..m).map(|k| PointGeometry::form(&s, &e[k], &e[k])).sum();
    let tr_phi: f64 = (0..m).map(phi_kk).sum();
    let s_ll = PointGeometry::form(&s, el, el);
    let phi_ll = phi_kk(l);
    let ric_m_ll = PointGeometry::form(&geo.ric_m.bilinear, el, el);

    let lhs = 2.0
        * e.iter()
            .map(|ek| geo.pulled_riem_n(ek, el, ek, el) - c * geo.riem_m(ek, el, ek, el))
            .sum::<f64>();

    let mut n_pinch = 0.0;
    let mut n_phi = 0.0;
    let mut m_pinch = 0.0;
    for k in (0..m).filter(|&k| k != l) {
        // (sigma - sec_N) |df e_k|^2 |df e_l|^2 without dividing by a possibly zero weight
        n_pinch += sigma * pb(k) * pb(l) - weighted_sec_n(geo, &e[k], el)?;
        n_phi += pb(k) * sigma * phi_ll;
        m_pinch += phi_kk(k) * (geo.sec_m(&e[k], el)? - sigma);
    }
    let ric_term = -2.0 * c / (1.0 + c) * (ric_m_ll - (m as f64 - 1.0) * sigma * gm_ll);
    let t2 = -c * gm_ll * m_pinch;
    let lemma_terms = [
        -2.0 * (n_pinch + n_phi),
        t2,
        ric_term,
        -2.0 * sigma * c / (1.0 + c) * (tr_s - s_ll),
        -sigma * (1.0 + c) / 2.0 * phi_ll * (tr_phi - phi_ll),
    ];
    let a = phi_shift(c)?;
    let corollary_terms = [
        -2.0 * n_pinch,
        t2,
        ric_term,
        -2.0 * c * sigma / (1.0 + c) * tr_s,
        sigma * (1.0 - c) / 2.0 * phi_ll * (tr_phi - phi_ll),
        -2.0 * c * sigma / (1.0 + c) * ((m as f64 - 2.0) * phi_ll - a),
    ];
    Ok(CurvatureDecomposition {
        lhs,
        lemma_terms,
        corollary_terms,
    })
}

pub fn curvature_decomposition_residual(
    f: &SmoothMap,
    p: &ChartPoint,
    c: f64,
    sigma: f64,
    l: usize,
) -> Result<f64> {
    Ok(curvature_decomposition(&PointGeometry::compute(f, p)?, c, sigma, l)?.lemma_residual())
}

/// `(|LHS - corollary RHS|, |lemma RHS - corollary RHS|)`.
pub fn psi_decomposition_residual(
    f: &SmoothMap,
    p: &ChartPoint,
    c: f64,
    sigma: f64,
    l: usize,
) -> Result<(f64, f64)> {
    let d = curvature_decomposition(&PointGeometry::compute(f, p)?, c, sigma, l)?;
    Ok((d.corollary_residual(), d.rhs_agreement()))
}

fn unit(m: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(m);
    v[i] = 1.0;
    v
}

/// Chart components `Psi_c(theta)(d_p, d_q)` for a chart-component symmetric `theta`.
pub fn psi_c_matrix(geo: &PointGeometry, c: f64, theta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (m, _) = geo.dims();
    let a = phi_shift(c)?;
    let ric = geo.ric_g()?;
    // theta(Ric d_p, d_q) = (Ric_op^T theta)_pq
    let rt = ric.operator.transpose() * theta;
    let e: Vec<DVector<f64>> = (0..m).map(|k| geo.e(k)).collect();
    let basis: Vec<DVector<f64>> = (0..m).map(|i| unit(m, i)).collect();
    let a_kp: Vec<Vec<SplitVector>> = e
        .iter()
        .map(|ek| basis.iter().map(|dp| geo.a(ek, dp)).collect())
        .collect();
    let mut out = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let mut second = 0.0;
            let mut curv = 0.0;
            for (k, ek) in e.iter().enumerate() {
                let (x, y) = (&a_kp[k][p], &a_kp[k][q]);
                second += geo.smn(x, y) - a * geo.gmn(x, y);
                curv += geo.pulled_riem_n(ek, &basis[p], ek, &basis[q]) - c * geo.riem_m(ek, &basis[p], ek, &basis[q]);
            }
            let v = -rt[(p, q)] - rt[(q, p)] - 2.0 * second - 4.0 / (1.0 + c) * curv;
            out[(p, q)] = v;
            out[(q, p)] = v;
        }
    }
    Ok(out)
}

/// `Psi_c(theta)(v, w)` for chart vectors `v`, `w`.
pub fn psi_c_apply(geo: &PointGeometry, c: f64, theta: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    Ok(PointGeometry::form(&psi_c_matrix(geo, c, theta)?, v, w))
}

/// The six signed contributions to `(Delta Phi_c)(e_m, e_m)` at a maximum of
/// `lambda_m^2`, with `c` the maximal value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalProofTerms {
    pub terms: [f64; 6],
}

impl FinalProofTerms {
    pub const LABELS: [&'static str; 6] = [
        "second fundamental form against trace",
        "target curvature below sigma",
        "domain curvature above sigma",
        "domain Ricci above (m-1) sigma",
        "Phi trace",
        "closing term",
    ];

    pub fn max_term(&self) -> f64 {
        self.terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates the six terms along the top adapted direction `e_m`.
///
/// The first term is the upper bound obtained from the normal estimate; the
/// rest are `2/(1 + c)` times the corresponding closing terms of the
/// corollary decomposition.
pub fn final_proof_terms(geo: &PointGeometry, c: f64, sigma: f64) -> Result<FinalProofTerms> {
    let (m, _) = geo.dims();
    let l = m - 1;
    let d = curvature_decomposition(geo, c, sigma, l)?;
    let k = 2.0 / (1.0 + c);
    let first = 4.0 / (1.0 + c) * ((c - 1.0) * geo.extrinsic.a_norm_sq - c / (1.0 + c) * sigma * geo.trace_s());
    Ok(FinalProofTerms {
        terms: [
            first,
            k * d.corollary_terms[0],
            k * d.corollary_terms[1],
            k * d.corollary_terms[2],
            k * d.corollary_terms[4],
            k * d.corollary_terms[5],
        ],
    })
}
