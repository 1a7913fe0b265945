//! Hypothesis checks for the rigidity theorem and classification of a map.
//!
//! Every maximum and minimum here is taken over a grid in one chart box, so
//! verdicts are box-local: they say nothing about the map outside the box.

mod checks;


use std::collections::BTreeMap;

use serde::Serialize;

pub use checks::{
    classify, condition4_check, corollary_b_bound, curvature_pinching_check, evaluate, gate_sweep, hypotheses,
    kappa_estimate, trace_condition_check, CorollaryB, GateEvaluation, Pinching,
};

use crate::sampling::SampleBox;

/// Outcome of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Constant,
    TotallyGeodesicIsometricImmersion,
    HypothesisViolated,
    Indeterminate,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Constant => "constant",
            Verdict::TotallyGeodesicIsometricImmersion => "totally-geodesic-isometric-immersion",
            Verdict::HypothesisViolated => "hypothesis-violated",
            Verdict::Indeterminate => "indeterminate",
        }
    }

    /// Process exit code of `check-theorem` for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Constant | Verdict::TotallyGeodesicIsometricImmersion => 0,
            Verdict::HypothesisViolated => 1,
            Verdict::Indeterminate => 4,
        }
    }
}

/// Thresholds used by the gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateTolerances {
    /// Non-strict inequalities (`sec_N <= sigma <= sec_M`, `tr s >= 0`, the `|A|^2` bound) accept this deficit.
    pub inequality: f64,
    /// Gap required by strict inequalities.
    pub strict: f64,
    pub minimal: f64,
    pub totally_geodesic: f64,
    /// `max lambda_m` below this is a constant map.
    pub constant: f64,
    /// `|lambda_i - 1|`, `|g - 2 g_M|` and curvature witnesses for the isometric case.
    pub isometry: f64,
}

impl Default for GateTolerances {
    fn default() -> Self {
        Self {
            inequality: 1e-8,
            strict: 1e-9,
            minimal: crate::extrinsic::MINIMAL_TOL,
            totally_geodesic: crate::extrinsic::TOTALLY_GEODESIC_TOL,
            constant: 1e-8,
            isometry: 1e-6,
        }
    }
}

/// Gate inputs besides the map and the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateConfig {
    pub sigma: f64,
    /// Relative head room in `kappa^2 = (1 + margin) max(1, lambda_0^2)`.
    pub kappa_margin: f64,
    /// Random planes per point for the sectional curvature ranges.
    pub planes: usize,
    pub seed: u64,
    pub tolerances: GateTolerances,
}

impl GateConfig {
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            kappa_margin: 0.01,
            planes: 3,
            seed: 0,
            tolerances: GateTolerances::default(),
        }
    }
}

/// Geometry summary at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    /// Ascending singular values of `df`.
    pub lambda: Vec<f64>,
    pub rank: usize,
    pub trace_s: f64,
    pub a_norm_sq: f64,
    pub h_norm: f64,
    pub sec_m_min: f64,
    pub sec_m_max: f64,
    /// Range of `sec_N` on planes in `df(TM)`; `None` when no such plane exists.
    pub sec_n_min: Option<f64>,
    pub sec_n_max: Option<f64>,
    /// `max |g - 2 g_M| / max |g_M|`.
    pub isometry_defect: f64,
}

impl PointRecord {
    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    pub fn lambda_max_sq(&self) -> f64 {
        self.lambda_max().powi(2)
    }
}

/// Worst value of one check over the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Margin {
    pub ok: bool,
    /// Smallest margin (larger is better); `None` when the check is vacuous everywhere.
    pub worst: Option<f64>,
    /// Where the worst margin occurs.
    pub at: Option<Vec<f64>>,
    pub threshold: f64,
}

impl Margin {
    /// `ok` iff the smallest of `values` is at least `threshold`; `None` entries are vacuous.
    pub fn from_values(values: impl Iterator<Item = (Option<f64>, Vec<f64>)>, threshold: f64) -> Self {
        let mut worst: Option<(f64, Vec<f64>)> = None;
        for (v, x) in values {
            if let Some(v) = v {
                if worst.as_ref().is_none_or(|(w, _)| v < *w) {
                    worst = Some((v, x));
                }
            }
        }
        match worst {
            None => Margin {
                ok: true,
                worst: None,
                at: None,
                threshold,
            },
            Some((w, x)) => Margin {
                ok: w >= threshold,
                worst: Some(w),
                at: Some(x),
                threshold,
            },
        }
    }

    pub fn vacuous(&self) -> bool {
        self.worst.is_none()
    }
}

/// Status of every hypothesis over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// Where the grid lives; every verdict is local to it.
    pub sample_box: SampleBox,
    pub scope: &'static str,
    pub points_checked: usize,
    pub sigma: f64,
    pub kappa_sq: f64,
    /// Grid maximum of `lambda_m^2`.
    pub lambda0_sq: f64,
    pub lambda0_at: Vec<f64>,
    pub pinching: Pinching,
    pub pinching_ok: bool,
    /// Smallest `tr s`.
    pub trace: Margin,
    pub trace_ok: bool,
    /// Smallest `kappa^2 - lambda_m^2`.
    pub kappa: Margin,
    pub kappa_ok: bool,
    /// Smallest `kappa^2 sigma / (kappa^4 - 1) tr s - |A|^2`.
    pub condition4: Margin,
    pub condition4_ok: bool,
    /// Smallest `minimal_tol - |H|`.
    pub minimal: Margin,
    pub minimal_ok: bool,
    /// The grid maximum of `lambda_m^2` is attained at an interior point, so it
    /// can stand in for the maximum over a compact domain.
    pub interior_max_ok: bool,
    pub corollary_b: CorollaryB,
}

impl HypothesisReport {
    /// Hypotheses that hold at each point separately.
    pub fn pointwise_ok(&self) -> bool {
        self.pinching_ok && self.trace_ok && self.kappa_ok && self.condition4_ok
    }

    pub fn all_ok(&self) -> bool {
        self.pointwise_ok() && self.minimal_ok && self.interior_max_ok
    }

    /// Names of failing hypotheses with their worst margins.
    pub fn failures(&self) -> Vec<(String, Option<f64>)> {
        let mut out = Vec::new();
        if !self.pinching.m.ok {
            out.push(("pinching sec_M >= sigma".to_string(), self.pinching.m.worst));
        }
        if !self.pinching.n.ok {
            out.push(("pinching sec_N <= sigma".to_string(), self.pinching.n.worst));
        }
        if !self.trace_ok {
            out.push(("trace tr(s) >= 0".to_string(), self.trace.worst));
        }
        if !self.kappa_ok {
            out.push(("kappa f^*g_N < kappa^2 g_M".to_string(), self.kappa.worst));
        }
        if !self.condition4_ok {
            out.push(("second fundamental form bound".to_string(), self.condition4.worst));
        }
        if !self.minimal_ok {
            out.push(("minimal".to_string(), self.minimal.worst));
        }
        if !self.interior_max_ok {
            out.push(("interior maximum of lambda_m^2".to_string(), Some(self.lambda0_sq)));
        }
        out
    }
}

/// Verdict with the numbers that justify it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub scope: &'static str,
    pub evidence: BTreeMap<String, f64>,
    /// Failed hypotheses or unmet verdict conditions.
    pub reasons: Vec<String>,
}

pub const BOX_LOCAL: &str = "box-local";
