//! Pointwise evaluation of both sides of the curvature identities, the elliptic
//! equation for `Phi_c`, and the estimates built on them.

mod decomposition;
mod laplacian;
mod probes;
mod suite;

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use serde::Serialize;

pub use decomposition::{
    curvature_decomposition, curvature_decomposition_residual, final_proof_terms, lemma_aest_check, normal_estimate,
    psi_c_apply, psi_c_matrix, psi_decomposition_residual, CurvatureDecomposition, FinalProofTerms, NormalEstimate,
};
pub use laplacian::{
    delta_phi_residual, elliptic_residual, log_jacobian, phi_c_jet, log_jacobian_residual_2d, minimality_relations,
    rough_laplacian, rough_laplacian_of, LaplacianScheme, LogJacobian, TensorJet,
};
pub use probes::{null_eigenvector_probe, psd_with_null_vector, sdc_probe, NullProbe, ProbeBranch, SdcOutcome, SdcReport};
pub use suite::{verify_scenario, verify_scenario_on, SuiteConfig, DEFAULT_TOLERANCES};

/// Extra numbers attached to a report (convergence factors, witnesses).
pub type Extras = BTreeMap<String, f64>;

/// Parameters an identity check was run with.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IdentityParameters {
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub h: Option<f64>,
}

/// Outcome of one identity or estimate over a set of points.
///
/// `pass` is exactly `max_residual <= tolerance`; skipped and inconclusive
/// checks carry a zero residual and say why in `status`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub points_checked: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: String,
    pub parameters: IdentityParameters,
    pub extras: Extras,
}

impl IdentityReport {
    pub fn checked(name: impl Into<String>, points: usize, max_residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            points_checked: points,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            status: "checked".into(),
            parameters: IdentityParameters::default(),
            extras: Extras::new(),
        }
    }

    pub fn skipped(name: impl Into<String>, tolerance: f64, reason: &str) -> Self {
        Self {
            status: format!("skipped ({reason})"),
            ..Self::checked(name, 0, 0.0, tolerance)
        }
    }

    pub fn inconclusive(name: impl Into<String>, tolerance: f64, reason: &str) -> Self {
        Self {
            status: format!("inconclusive ({reason})"),
            ..Self::checked(name, 0, 0.0, tolerance)
        }
    }

    pub fn with_parameters(mut self, parameters: IdentityParameters) -> Self {
        self.parameters = parameters;
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn is_skipped(&self) -> bool {
        self.status.starts_with("skipped")
    }
}
