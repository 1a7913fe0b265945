use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    Classification, GateConfig, GateTolerances, HypothesisReport, Margin, PointRecord, Verdict, BOX_LOCAL,
};
use crate::error::{GeomError, Result};
use crate::geometry::PointGeometry;
use crate::graph_map::SmoothMap;
use crate::sampling::{derive_seed, Grid};

fn random_in_span<R: Rng>(basis: &[DVector<f64>], rng: &mut R) -> DVector<f64> {
    let mut v = DVector::zeros(basis[0].len());
    for b in basis {
        v += rng.random_range(-1.0..1.0) * b;
    }
    v
}

fn record(f: &SmoothMap, x: &[f64], planes: usize, seed: u64) -> Result<PointRecord> {
    let geo = PointGeometry::compute(f, &f.domain().point(x)?)?;
    let (m, _) = geo.dims();
    let e: Vec<DVector<f64>> = (0..m).map(|k| geo.e(k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sec_m = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            sec_m.push(geo.sec_m(&e[i], &e[j])?);
        }
    }
    if m > 2 {
        for _ in 0..planes {
            let (u, v) = (random_in_span(&e, &mut rng), random_in_span(&e, &mut rng));
            if let Ok(s) = geo.sec_m(&u, &v) {
                sec_m.push(s);
            }
        }
    }

    // planes inside df(TM): pushed-forward pairs of the non-kernel frame vectors
    let r = geo.frames.rank;
    let image: Vec<DVector<f64>> = e[m - r..].to_vec();
    let mut sec_n = Vec::new();
    if r >= 2 {
        for i in 0..r {
            for j in (i + 1)..r {
                if let Ok(s) = geo.sec_n_on_image(&image[i], &image[j]) {
                    sec_n.push(s);
                }
            }
        }
        if r > 2 {
            for _ in 0..planes {
                let (u, v) = (random_in_span(&image, &mut rng), random_in_span(&image, &mut rng));
                if let Ok(s) = geo.sec_n_on_image(&u, &v) {
                    sec_n.push(s);
                }
            }
        }
    }
    let min = |v: &[f64]| v.iter().copied().reduce(f64::min);
    let max = |v: &[f64]| v.iter().copied().reduce(f64::max);
    let g_m = geo.g_m();
    let isometry_defect = (geo.g() - 2.0 * g_m).amax() / g_m.amax();
    Ok(PointRecord {
        x: x.to_vec(),
        lambda: geo.frames.lambdas.iter().copied().collect(),
        rank: r,
        trace_s: geo.trace_s(),
        a_norm_sq: geo.extrinsic.a_norm_sq,
        h_norm: geo.extrinsic.h_norm,
        sec_m_min: min(&sec_m).unwrap_or(f64::NAN),
        sec_m_max: max(&sec_m).unwrap_or(f64::NAN),
        sec_n_min: min(&sec_n),
        sec_n_max: max(&sec_n),
        isometry_defect,
    })
}

/// Per-point geometry over `points`, evaluated in parallel and returned in input order.
pub fn gate_sweep(f: &SmoothMap, points: &[Vec<f64>], planes: usize, seed: u64) -> Result<Vec<PointRecord>> {
    if points.is_empty() {
        return Err(GeomError::EmptyGrid);
    }
    points
        .par_iter()
        .enumerate()
        .map(|(i, x)| record(f, x, planes, derive_seed(seed, i as u64)))
        .collect()
}

/// Margins of `sec_N <= sigma <= sec_M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pinching {
    /// Smallest `sec_M - sigma`.
    pub m: Margin,
    /// Smallest `sigma - sec_N` over planes in `df(TM)`; vacuous where `rank df < 2`.
    pub n: Margin,
}

pub fn curvature_pinching_check(records: &[PointRecord], sigma: f64, tol: f64) -> Pinching {
    Pinching {
        m: Margin::from_values(records.iter().map(|r| (Some(r.sec_m_min - sigma), r.x.clone())), -tol),
        n: Margin::from_values(
            records.iter().map(|r| (r.sec_n_max.map(|s| sigma - s), r.x.clone())),
            -tol,
        ),
    }
}

pub fn trace_condition_check(records: &[PointRecord], tol: f64) -> Margin {
    Margin::from_values(records.iter().map(|r| (Some(r.trace_s), r.x.clone())), -tol)
}

/// `kappa^2 = (1 + margin) max(1, lambda_0^2)` and the smallest `kappa^2 - lambda_m^2`.
pub fn kappa_estimate(records: &[PointRecord], margin: f64, strict: f64) -> (f64, Margin) {
    let lambda0_sq = records.iter().map(|r| r.lambda_max_sq()).fold(0.0, f64::max);
    let kappa_sq = (1.0 + margin) * lambda0_sq.max(1.0);
    let mut m = Margin::from_values(
        records.iter().map(|r| (Some(kappa_sq - r.lambda_max_sq()), r.x.clone())),
        strict,
    );
    m.ok = m.ok && kappa_sq - 1.0 >= strict;
    (kappa_sq, m)
}

/// Smallest `kappa^2 sigma / (kappa^4 - 1) tr s - |A|^2`.
pub fn condition4_check(records: &[PointRecord], sigma: f64, kappa_sq: f64, tol: f64) -> Result<Margin> {
    if !(kappa_sq > 1.0) {
        return Err(GeomError::InvalidParameter {
            name: "kappa_sq",
            value: kappa_sq,
            reason: "must exceed 1",
        });
    }
    let coeff = kappa_sq * sigma / (kappa_sq * kappa_sq - 1.0);
    Ok(Margin::from_values(
        records.iter().map(|r| (Some(coeff * r.trace_s - r.a_norm_sq), r.x.clone())),
        -tol,
    ))
}

/// Pointwise chain `tr s > m - n - r >= m - 2n`, and `>= 0` when `n <= m/2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryB {
    pub m: usize,
    pub n: usize,
    /// Smallest `tr s - (m - n - r)`; must be at least the strict gap.
    pub chain: Margin,
    pub chain_ok: bool,
    pub target_at_most_half: bool,
    /// Smallest `tr s - (m - 2n)`.
    pub above_m_minus_2n: Margin,
    /// When `n <= m/2`: smallest `tr s`, which must be strictly positive.
    pub positive: Option<Margin>,
}

pub fn corollary_b_bound(records: &[PointRecord], m: usize, n: usize, strict: f64) -> CorollaryB {
    let (mi, ni) = (m as f64, n as f64);
    let chain = Margin::from_values(
        records
            .iter()
            .map(|r| (Some(r.trace_s - (mi - ni - r.rank as f64)), r.x.clone())),
        strict,
    );
    let above = Margin::from_values(
        records.iter().map(|r| (Some(r.trace_s - (mi - 2.0 * ni)), r.x.clone())),
        strict,
    );
    let half = 2 * n <= m;
    let positive = half.then(|| Margin::from_values(records.iter().map(|r| (Some(r.trace_s), r.x.clone())), strict));
    CorollaryB {
        m,
        n,
        chain_ok: chain.ok,
        chain,
        target_at_most_half: half,
        above_m_minus_2n: above,
        positive,
    }
}

/// Assembles the hypothesis report from a sweep over `grid`.
pub fn hypotheses(f: &SmoothMap, grid: &Grid, records: &[PointRecord], cfg: &GateConfig) -> Result<HypothesisReport> {
    let tol = &cfg.tolerances;
    let sigma = cfg.sigma;
    if !(sigma > 0.0) {
        return Err(GeomError::InvalidParameter {
            name: "sigma",
            value: sigma,
            reason: "curvature pinching needs sigma > 0",
        });
    }
    let pinching = curvature_pinching_check(records, sigma, tol.inequality);
    let trace = trace_condition_check(records, tol.inequality);
    let (kappa_sq, kappa) = kappa_estimate(records, cfg.kappa_margin, tol.strict);
    let condition4 = condition4_check(records, sigma, kappa_sq, tol.inequality)?;
    let minimal = Margin::from_values(
        records.iter().map(|r| (Some(tol.minimal - r.h_norm), r.x.clone())),
        0.0,
    );
    let minimal_ok = minimal.ok && minimal.worst.is_some_and(|w| w > 0.0);

    let (lambda0_sq, lambda0_idx) = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.lambda_max_sq(), i))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    let near = 1e-10 * (1.0 + lambda0_sq);
    let interior_max_ok = records
        .iter()
        .enumerate()
        .any(|(i, r)| r.lambda_max_sq() >= lambda0_sq - near && !grid.is_boundary(i));
    let (m, n) = (f.domain().dim(), f.target().dim());
    Ok(HypothesisReport {
        sample_box: grid.sample_box.clone(),
        scope: BOX_LOCAL,
        points_checked: records.len(),
        sigma,
        kappa_sq,
        lambda0_sq,
        lambda0_at: records[lambda0_idx].x.clone(),
        pinching_ok: pinching.m.ok && pinching.n.ok,
        pinching,
        trace_ok: trace.ok,
        trace,
        kappa_ok: kappa.ok,
        kappa,
        condition4_ok: condition4.ok,
        condition4,
        minimal_ok,
        minimal,
        interior_max_ok,
        corollary_b: corollary_b_bound(records, m, n, tol.strict),
    })
}

/// Sorts the map into the theorem's dichotomy, checking hypotheses first.
pub fn classify(records: &[PointRecord], report: &HypothesisReport, tol: &GateTolerances) -> Classification {
    let sigma = report.sigma;
    let max_lambda = records.iter().map(|r| r.lambda_max()).fold(0.0, f64::max);
    let max_a = records.iter().map(|r| r.a_norm_sq.max(0.0).sqrt()).fold(0.0, f64::max);
    let iso = records
        .iter()
        .flat_map(|r| r.lambda.iter().map(|l| (l - 1.0).abs()))
        .fold(0.0, f64::max);
    let g_defect = records.iter().map(|r| r.isometry_defect).fold(0.0, f64::max);
    let sec_m_witness = records
        .iter()
        .map(|r| (r.sec_m_min - sigma).abs().max((r.sec_m_max - sigma).abs()))
        .fold(0.0, f64::max);
    let sec_n_witness = records
        .iter()
        .filter_map(|r| Some((r.sec_n_min? - sigma).abs().max((r.sec_n_max? - sigma).abs())))
        .fold(0.0, f64::max);
    let mut evidence = BTreeMap::new();
    evidence.insert("max_lambda".to_string(), max_lambda);
    evidence.insert("max_a_norm".to_string(), max_a);
    evidence.insert("max_abs_lambda_minus_1".to_string(), iso);
    evidence.insert("max_rel_g_minus_2g_m".to_string(), g_defect);
    evidence.insert("max_abs_sec_m_minus_sigma".to_string(), sec_m_witness);
    evidence.insert("max_abs_sec_n_minus_sigma".to_string(), sec_n_witness);
    evidence.insert("lambda0_sq".to_string(), report.lambda0_sq);
    evidence.insert("kappa_sq".to_string(), report.kappa_sq);
    if let Some(w) = report.trace.worst {
        evidence.insert("min_trace_s".to_string(), w);
    }
    if let Some(w) = report.condition4.worst {
        evidence.insert("min_condition4_margin".to_string(), w);
    }

    let failures = report.failures();
    if !failures.is_empty() {
        return Classification {
            verdict: Verdict::HypothesisViolated,
            scope: BOX_LOCAL,
            evidence,
            reasons: failures
                .into_iter()
                .map(|(name, w)| match w {
                    Some(w) => format!("{name}: worst margin {w:.6e}"),
                    None => name,
                })
                .collect(),
        };
    }
    if max_lambda < tol.constant {
        return Classification {
            verdict: Verdict::Constant,
            scope: BOX_LOCAL,
            evidence,
            reasons: Vec::new(),
        };
    }
    let checks = [
        ("singular values equal to 1", iso < tol.isometry),
        ("second fundamental form vanishes", max_a < tol.totally_geodesic),
        ("g = 2 g_M", g_defect < tol.isometry),
        ("sec_M = sigma", sec_m_witness < tol.isometry),
        ("sec_N = sigma on df(TM)", sec_n_witness < tol.isometry),
    ];
    let unmet: Vec<String> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name.to_string())
        .collect();
    Classification {
        verdict: if unmet.is_empty() {
            Verdict::TotallyGeodesicIsometricImmersion
        } else {
            Verdict::Indeterminate
        },
        scope: BOX_LOCAL,
        evidence,
        reasons: unmet,
    }
}

/// Sweep, hypotheses and classification in one go.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateEvaluation {
    pub records: Vec<PointRecord>,
    pub hypotheses: HypothesisReport,
    pub classification: Classification,
}

pub fn evaluate(f: &SmoothMap, grid: &Grid, cfg: &GateConfig) -> Result<GateEvaluation> {
    let records = gate_sweep(f, &grid.points, cfg.planes, cfg.seed)?;
    let hypotheses = hypotheses(f, grid, &records, cfg)?;
    let classification = classify(&records, &hypotheses, &cfg.tolerances);
    Ok(GateEvaluation {
        records,
        hypotheses,
        classification,
    })
}
