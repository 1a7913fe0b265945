//! Run configuration and machine-readable run reports (JSON and CSV).
//!
//! Floating point numbers are written with 17 significant digits so every
//! double survives a round trip; integers stay integers.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::error::{GeomError, Result};
use crate::identities::{IdentityReport, DEFAULT_TOLERANCES};
use crate::sampling::SampleBox;
use crate::theorem_gate::{Classification, GateTolerances, HypothesisReport, PointRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

/// Sample box and per-axis resolution; absent parts fall back to the scenario defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "box")]
    pub sample_box: Option<SampleBox>,
    pub resolution: Option<Vec<usize>>,
}

/// Everything a run depends on. A JSON config file uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub grid: GridConfig,
    pub seed: u64,
    pub h: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub c: Option<f64>,
    pub sigma: Option<f64>,
    pub kappa_margin: Option<f64>,
    pub output: Option<String>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            grid: GridConfig::default(),
            seed: 0,
            h: 1e-3,
            tolerances: BTreeMap::new(),
            c: None,
            sigma: None,
            kappa_margin: None,
            output: None,
            format: Format::Json,
        }
    }
}

/// Tolerance names understood by the theorem gate.
pub const GATE_TOLERANCES: [&str; 6] = ["inequality", "strict", "minimal", "totally-geodesic", "constant", "isometry"];

fn invalid(name: &'static str, value: f64, reason: &'static str) -> GeomError {
    GeomError::InvalidParameter { name, value, reason }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GeomError::Precondition(format!("invalid config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", self.h, "must be positive"));
        }
        if let Some(res) = &self.grid.resolution {
            if res.is_empty() || res.iter().any(|&r| r < 2) {
                return Err(invalid("resolution", res.iter().copied().min().unwrap_or(0) as f64, "need at least 2 points per axis"));
            }
        }
        if let Some(b) = &self.grid.sample_box {
            if b.lo.len() != b.hi.len() || b.lo.iter().zip(&b.hi).any(|(a, z)| !(a < z)) {
                return Err(GeomError::Precondition("grid box needs lo < hi on every axis".into()));
            }
        }
        for (name, &v) in &self.tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("tolerance", v, "tolerances must be positive"));
            }
            let known = GATE_TOLERANCES.contains(&name.as_str()) || DEFAULT_TOLERANCES.iter().any(|(n, _)| n == name);
            if !known {
                return Err(GeomError::Precondition(format!("unknown tolerance `{name}`")));
            }
        }
        if let Some(c) = self.c {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid("c", c, "must be non-negative"));
            }
        }
        if let Some(k) = self.kappa_margin {
            if !(k > 0.0 && k.is_finite()) {
                return Err(invalid("kappa_margin", k, "must be positive"));
            }
        }
        Ok(())
    }

    /// Gate tolerances with overrides applied.
    pub fn gate_tolerances(&self) -> GateTolerances {
        let mut t = GateTolerances::default();
        for (name, &v) in &self.tolerances {
            match name.as_str() {
                "inequality" => t.inequality = v,
                "strict" => t.strict = v,
                "minimal" => t.minimal = v,
                "totally-geodesic" => t.totally_geodesic = v,
                "constant" => t.constant = v,
                "isometry" => t.isometry = v,
                _ => {}
            }
        }
        t
    }

    /// Identity-suite tolerance overrides.
    pub fn identity_tolerances(&self) -> BTreeMap<String, f64> {
        self.tolerances
            .iter()
            .filter(|(n, _)| DEFAULT_TOLERANCES.iter().any(|(d, _)| d == n))
            .map(|(n, v)| (n.clone(), *v))
            .collect()
    }
}

/// One run: configuration echo, per-point geometry and whatever checks the command ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    pub points: Vec<PointRecord>,
    pub identities: Vec<IdentityReport>,
    pub hypotheses: Option<HypothesisReport>,
    pub classification: Option<Classification>,
    /// Wall-clock seconds; only filled in on request so reports stay reproducible.
    pub runtime_seconds: Option<f64>,
}

/// Rewrites every non-integer number with 17 significant digits.
fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                let x = n.as_f64().expect("finite JSON number");
                Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted double is valid JSON"))
            } else {
                Value::Number(n)
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(report: &T) -> Value {
    normalize(serde_json::to_value(report).expect("reports serialize"))
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(report)).expect("reports serialize");
    s.push('\n');
    s
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&path, x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
    }
}

/// `(path, value)` rows, one per leaf of the JSON document, in document order.
pub fn to_csv<T: Serialize>(report: &T) -> String {
    let mut rows = Vec::new();
    flatten("", &to_value(report), &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path", "value"]).expect("in-memory write");
    for (p, v) in rows {
        w.write_record([p, v]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn render<T: Serialize>(report: &T, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
    }
}
