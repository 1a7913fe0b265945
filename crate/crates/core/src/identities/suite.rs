//! Runs every identity applicable to a scenario and collects one report per check.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::decomposition::{curvature_decomposition, final_proof_terms, normal_estimate};
use super::laplacian::{elliptic_residual, log_jacobian, minimality_relations, LaplacianScheme};
use super::probes::{null_eigenvector_probe, sdc_probe, ProbeBranch, SdcOutcome};
use super::{IdentityParameters, IdentityReport};
use crate::error::Result;
use crate::extrinsic::MINIMAL_TOL;
use crate::geometry::PointGeometry;
use crate::sampling::{derive_seed, Grid};
use crate::scenarios::Scenario;
use crate::theorem_gate::{evaluate, GateConfig};

/// Residuals of second differences below this are rounding noise and carry no
/// convergence information.
fn convergence_floor(h: f64) -> f64 {
    100.0 * f64::EPSILON / (h * h)
}

/// Default tolerance of every check, by report name.
pub const DEFAULT_TOLERANCES: [(&str, f64); 11] = [
    ("frame-formulas", 1e-8),
    ("normal-estimate", 1e-10),
    ("curvature-decomposition", 1e-6),
    ("psi-decomposition", 1e-6),
    ("decomposition-agreement", 1e-8),
    ("elliptic-equation", 1e-4),
    ("log-jacobian", 1e-4),
    ("minimality-relations", 1e-6),
    ("null-eigenvector", 1e-8),
    ("second-derivative-criterion", 1e-4),
    ("final-proof-signs", 1e-8),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Finite-difference step.
    pub h: f64,
    /// Random points per check.
    pub points: usize,
    /// Random `(theta, v)` draws per point in the null-eigenvector probe.
    pub draws: usize,
    /// Fixed `c` for the elliptic equation and decompositions; random or `2` when absent.
    pub c: Option<f64>,
    /// Fixed `sigma` for the decompositions and the gate; random or the scenario's when absent.
    pub sigma: Option<f64>,
    /// Overrides of [`DEFAULT_TOLERANCES`].
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            h: 1e-3,
            points: 20,
            draws: 20,
            c: None,
            sigma: None,
            tolerances: BTreeMap::new(),
        }
    }
}

impl SuiteConfig {
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances.get(name).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| *t)
                .expect("every check has a default tolerance")
        })
    }
}

fn ratio(coarse: f64, fine: f64, h: f64) -> Option<f64> {
    (coarse > convergence_floor(h)).then(|| coarse / fine)
}

/// Runs the identity suite on `s` over its default grid; checks whose
/// preconditions fail are reported as skipped.
pub fn verify_scenario(s: &Scenario, cfg: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let gate = GateConfig::new(cfg.sigma.unwrap_or(s.sigma));
    verify_scenario_on(s, &s.default_grid(), &gate, cfg)
}

/// As [`verify_scenario`], sampling random points in the box of `grid` and
/// using `grid` with `gate` for the probes that need hypothesis status.
pub fn verify_scenario_on(s: &Scenario, grid: &Grid, gate: &GateConfig, cfg: &SuiteConfig) -> Result<Vec<IdentityReport>> {
    let f = &s.map;
    let (m, n) = s.dims();
    let points = grid.sample_box.random_points(cfg.points, cfg.seed);
    let geos: Vec<PointGeometry> = points
        .par_iter()
        .map(|x| PointGeometry::compute(f, &f.domain().point(x)?))
        .collect::<Result<_>>()?;
    let count = geos.len();
    let params = |c: Option<f64>, sigma: Option<f64>, h: Option<f64>| IdentityParameters {
        c,
        sigma,
        seed: Some(cfg.seed),
        h,
    };
    let mut out = Vec::new();

    let frame = geos
        .iter()
        .map(|g| g.frames.residuals(&g.product.g_m, &g.product.g_n, &g.jet.d1).max())
        .fold(0.0, f64::max);
    out.push(IdentityReport::checked("frame-formulas", count, frame, cfg.tolerance("frame-formulas")));

    let mut worst = 0.0f64;
    let mut tested = 0usize;
    for (i, g) in geos.iter().enumerate() {
        let lm2 = g.lambda_max_sq();
        for (j, c) in [lm2, lm2 + 1.0].into_iter().enumerate() {
            let est = normal_estimate(g, c, 20, derive_seed(cfg.seed, (2 * i + j) as u64))?;
            worst = worst.max(-est.worst_slack);
            tested += est.normals_tested;
        }
    }
    out.push(
        IdentityReport::checked("normal-estimate", count, worst.max(0.0), cfg.tolerance("normal-estimate"))
            .with_parameters(params(None, None, None))
            .with_extra("normals_tested", tested as f64),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1 << 32));
    let (mut lemma, mut cor, mut agree) = (0.0f64, 0.0f64, 0.0f64);
    for g in &geos {
        let c = cfg.c.unwrap_or_else(|| 10.0 - rng.random_range(0.0..10.0));
        let sigma = cfg.sigma.unwrap_or_else(|| rng.random_range(-2.0..=2.0));
        let l = rng.random_range(0..m);
        let d = curvature_decomposition(g, c, sigma, l)?;
        lemma = lemma.max(d.lemma_residual());
        cor = cor.max(d.corollary_residual());
        agree = agree.max(d.rhs_agreement());
    }
    let p = params(cfg.c, cfg.sigma, None);
    for (name, r) in [
        ("curvature-decomposition", lemma),
        ("psi-decomposition", cor),
        ("decomposition-agreement", agree),
    ] {
        out.push(IdentityReport::checked(name, count, r, cfg.tolerance(name)).with_parameters(p.clone()));
    }

    let minimal = geos.iter().all(|g| g.extrinsic.h_norm < MINIMAL_TOL);
    let c = cfg.c.unwrap_or(2.0);
    let h = cfg.h;
    if minimal {
        let rows = geos
            .par_iter()
            .map(|g| {
                Ok([
                    elliptic_residual(f, g, c, LaplacianScheme::Central { h })?,
                    elliptic_residual(f, g, c, LaplacianScheme::Central { h: h / 2.0 })?,
                    elliptic_residual(f, g, c, LaplacianScheme::ExactJet)?,
                ])
            })
            .collect::<Result<Vec<[f64; 3]>>>()?;
        let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
        let mut report = IdentityReport::checked("elliptic-equation", count, col(0), cfg.tolerance("elliptic-equation"))
            .with_parameters(params(Some(c), None, Some(h)))
            .with_extra("residual_half_step", col(1))
            .with_extra("residual_exact_jet", col(2));
        if let Some(q) = ratio(col(0), col(1), h) {
            report = report.with_extra("convergence_factor", q);
        }
        out.push(report);
    } else {
        out.push(IdentityReport::skipped("elliptic-equation", cfg.tolerance("elliptic-equation"), "non-minimal"));
    }

    if m == 2 && n == 2 {
        if minimal {
            let rows = geos
                .par_iter()
                .map(|g| {
                    let a = log_jacobian(f, g, LaplacianScheme::Central { h })?;
                    let b = log_jacobian(f, g, LaplacianScheme::Central { h: h / 2.0 })?;
                    let e = log_jacobian(f, g, LaplacianScheme::ExactJet)?;
                    let (r1, r2) = minimality_relations(&a);
                    Ok([
                        a.residual(),
                        b.residual(),
                        e.residual(),
                        r1.max(r2),
                        (a.v_singular - a.v_det).abs(),
                    ])
                })
                .collect::<Result<Vec<[f64; 5]>>>()?;
            let col = |k: usize| rows.iter().map(|r| r[k]).fold(0.0, f64::max);
            let mut report = IdentityReport::checked("log-jacobian", count, col(0), cfg.tolerance("log-jacobian"))
                .with_parameters(params(None, None, Some(h)))
                .with_extra("residual_half_step", col(1))
                .with_extra("residual_exact_jet", col(2))
                .with_extra("jacobian_closed_form_gap", col(4));
            if let Some(q) = ratio(col(0), col(1), h) {
                report = report.with_extra("convergence_factor", q);
            }
            out.push(report);
            out.push(IdentityReport::checked(
                "minimality-relations",
                count,
                col(3),
                cfg.tolerance("minimality-relations"),
            ));
        } else {
            for name in ["log-jacobian", "minimality-relations"] {
                out.push(IdentityReport::skipped(name, cfg.tolerance(name), "non-minimal"));
            }
        }
    } else {
        for name in ["log-jacobian", "minimality-relations"] {
            out.push(IdentityReport::skipped(name, cfg.tolerance(name), "needs dim M = dim N = 2"));
        }
    }

    let sigma = gate.sigma;
    let gate = evaluate(f, grid, gate)?;
    let hyp = &gate.hypotheses;
    let lambda0_sq = hyp.lambda0_sq;
    let branch = ProbeBranch::for_lambda0_sq(lambda0_sq);
    let probe_ok = match branch {
        ProbeBranch::StrictlyLengthDecreasing => hyp.pinching_ok,
        ProbeBranch::Expanding => hyp.pointwise_ok(),
    };
    let tol = cfg.tolerance("null-eigenvector");
    if probe_ok {
        let probes = geos
            .par_iter()
            .enumerate()
            .map(|(i, g)| null_eigenvector_probe(g, lambda0_sq, cfg.draws, derive_seed(cfg.seed, 7 + i as u64), tol))
            .collect::<Result<Vec<_>>>()?;
        let worst = probes.iter().map(|p| -p.min_value).fold(0.0, f64::max);
        let failures: usize = probes.iter().map(|p| p.failures).sum();
        let gap = probes.iter().map(|p| p.reduction_gap).fold(0.0, f64::max);
        let null_defect = probes.iter().map(|p| p.null_defect).fold(0.0, f64::max);
        out.push(
            IdentityReport::checked("null-eigenvector", count, worst, tol)
                .with_parameters(params(Some(lambda0_sq), Some(sigma), None))
                .with_extra("draws", (count * cfg.draws) as f64)
                .with_extra("failures", failures as f64)
                .with_extra("reduction_gap", gap)
                .with_extra("null_defect", null_defect)
                .with_extra(
                    "expanding_branch",
                    if branch == ProbeBranch::Expanding { 1.0 } else { 0.0 },
                ),
        );
    } else {
        out.push(IdentityReport::skipped("null-eigenvector", tol, "gate hypotheses fail"));
    }

    let tol = cfg.tolerance("second-derivative-criterion");
    if minimal {
        let rep = sdc_probe(f, lambda0_sq, grid, LaplacianScheme::Central { h }, tol)?;
        out.push(match rep.outcome {
            SdcOutcome::Checked {
                gradient,
                gradient_tol,
                laplacian,
                ..
            } => {
                // pass iff the gradient is within its grid-scale tolerance and the laplacian is <= tol
                let residual = if gradient < gradient_tol { laplacian.max(0.0) } else { f64::INFINITY };
                IdentityReport::checked("second-derivative-criterion", 1, residual, tol)
                    .with_parameters(params(Some(lambda0_sq), None, Some(h)))
                    .with_extra("gradient", gradient)
                    .with_extra("gradient_tol", gradient_tol)
                    .with_extra("laplacian", laplacian)
            }
            SdcOutcome::Inconclusive { reason } => {
                IdentityReport::inconclusive("second-derivative-criterion", tol, &reason)
            }
        });
    } else {
        out.push(IdentityReport::skipped("second-derivative-criterion", tol, "non-minimal"));
    }

    let tol = cfg.tolerance("final-proof-signs");
    if !hyp.all_ok() {
        out.push(IdentityReport::skipped("final-proof-signs", tol, "gate hypotheses fail"));
    } else if branch == ProbeBranch::StrictlyLengthDecreasing {
        out.push(IdentityReport::skipped("final-proof-signs", tol, "lambda_0^2 < 1"));
    } else {
        let g = PointGeometry::compute(f, &f.domain().point(&hyp.lambda0_at)?)?;
        let terms = final_proof_terms(&g, lambda0_sq, sigma)?;
        let mut report = IdentityReport::checked("final-proof-signs", 1, terms.max_term().max(0.0), tol)
            .with_parameters(params(Some(lambda0_sq), Some(sigma), None));
        for (k, t) in terms.terms.iter().enumerate() {
            report = report.with_extra(&format!("term_{}", k + 1), *t);
        }
        out.push(report);
    }
    Ok(out)
}
