//! JSON experiment configuration.
//!
//! Every section except `kind` is optional. Missing values fall back to the
//! defaults of the experiment kind, see [`ExperimentConfig::resolve`].

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rkur_core::models::random::{ParameterRanges, Range};
use rkur_core::models::{Observable, Parameter, TwoLevelParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const DEFAULT_SAMPLE_DRAWS: usize = 5000;
pub const DEFAULT_CROSSCHECK_DRAWS: usize = 100;
pub const CROSSCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Sweep,
    Sample,
    Single,
    Trajectories,
    Crosscheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Sample => "sample",
            ExperimentKind::Single => "single",
            ExperimentKind::Trajectories => "trajectories",
            ExperimentKind::Crosscheck => "crosscheck",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Perturbed parameter, serialized by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParameterName(pub Parameter);

impl TryFrom<String> for ParameterName {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        Parameter::from_str(&s).map(ParameterName).map_err(|e| e.to_string())
    }
}

impl From<ParameterName> for String {
    fn from(p: ParameterName) -> String {
        p.0.name().to_string()
    }
}

/// Either a named observable or explicit weights `[emission, absorption]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Named(ObservableName),
    Weights(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableName {
    Counting,
    Current,
}

impl ObservableSpec {
    pub fn weights(&self) -> Result<[f64; 2]> {
        match self {
            ObservableSpec::Named(ObservableName::Counting) => Ok(Observable::Counting.weights()),
            ObservableSpec::Named(ObservableName::Current) => Ok(Observable::Current.weights()),
            ObservableSpec::Weights(w) => match w.as_slice() {
                [a, b] if a.is_finite() && b.is_finite() => Ok([*a, *b]),
                _ => Err(CliError::config("observable", "expected two finite weights [emission, absorption]")),
            },
        }
    }
}

/// Fixed model parameters. An absent `beta` means a zero-temperature bath.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: ModelParams,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { name: TWO_LEVEL.into(), params: ModelParams::default() }
    }
}

pub const TWO_LEVEL: &str = "two_level";

/// Sampling box; each entry is `[lo, hi]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { ratio_min: 0.1, ratio_max: 10.0, points: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub count: usize,
    pub horizon: f64,
    /// Step size; `None` picks `0.01 / max rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Repeat the ensemble at `dt / 2`.
    #[serde(default = "yes")]
    pub halve_dt: bool,
    /// Writes the events of trajectory 0 as `time,channel` CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events_out: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self { count: 10_000, horizon: 200.0, dt: None, halve_dt: true, events_out: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<ParameterName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<RangesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub base: TwoLevelParams,
    pub perturbed: Parameter,
    pub weights: [f64; 2],
    pub ranges: ParameterRanges,
    pub draws: usize,
    pub seed: u64,
    pub sweep: SweepSpec,
    pub trajectories: TrajectorySpec,
}

/// Ranges used by the cross-check when none are configured.
pub fn crosscheck_ranges() -> ParameterRanges {
    ParameterRanges {
        gamma: Range::new(0.2, 4.0),
        rabi: Range::new(0.2, 4.0),
        omega: Range::new(0.5, 24.0),
        omega_d: Range::new(0.0, 24.0),
        beta: Range::new(0.1, 10.0),
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            model: ModelSpec::default(),
            perturbed: None,
            observable: None,
            ranges: None,
            draws: None,
            seed: 0,
            sweep: None,
            trajectories: None,
            output: None,
        }
    }

    /// Parses JSON, reporting the offending field path and line on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Parse(format!(
                "{inner} (field `{path}`, line {}, column {})",
                inner.line(),
                inner.column()
            ))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON with the output path removed, so the
    /// digest identifies the experiment rather than where it was written.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        if let Some(t) = c.trajectories.as_mut() {
            t.events_out = None;
        }
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.model.name != TWO_LEVEL {
            return Err(CliError::config(
                "model.name",
                format!("unknown model `{}`, expected `{TWO_LEVEL}`", self.model.name),
            ));
        }
        let base = resolve_params(&self.model.params)?;
        let perturbed = self.perturbed.map(|p| p.0).unwrap_or(match self.kind {
            ExperimentKind::Sweep | ExperimentKind::Crosscheck => Parameter::Rabi,
            _ => Parameter::Omega,
        });
        let observable = self.observable.clone().unwrap_or(ObservableSpec::Named(ObservableName::Counting));
        let weights = observable.weights()?;
        if self.kind == ExperimentKind::Sweep && weights != Observable::Counting.weights() {
            return Err(CliError::config("observable", "the sweep compares against counting closed forms"));
        }

        let mut ranges = match self.kind {
            ExperimentKind::Crosscheck => crosscheck_ranges(),
            _ => ParameterRanges::default(),
        };
        if let Some(spec) = &self.ranges {
            let entries = [
                (Parameter::Gamma, spec.gamma, 0.0),
                (Parameter::Rabi, spec.rabi, 0.0),
                (Parameter::Omega, spec.omega, f64::MIN_POSITIVE),
                (Parameter::DriveFrequency, spec.omega_d, 0.0),
                (Parameter::Beta, spec.beta, 0.0),
            ];
            for (p, r, min) in entries {
                if let Some([lo, hi]) = r {
                    let range = Range::new(lo, hi);
                    let field = format!("ranges.{}", p.name());
                    if !range.is_valid() {
                        return Err(CliError::config(field, format!("[{lo}, {hi}] is not a finite nonempty interval")));
                    }
                    if lo < min {
                        return Err(CliError::config(field, format!("lower bound {lo} is below {min}")));
                    }
                    ranges.set(p, range);
                }
            }
        }

        let draws = self.draws.unwrap_or(match self.kind {
            ExperimentKind::Crosscheck => DEFAULT_CROSSCHECK_DRAWS,
            _ => DEFAULT_SAMPLE_DRAWS,
        });
        if draws == 0 {
            return Err(CliError::config("draws", "must be at least 1"));
        }

        let sweep = self.sweep.clone().unwrap_or_default();
        if !(sweep.ratio_min > 0.0 && sweep.ratio_max >= sweep.ratio_min && sweep.ratio_max.is_finite()) {
            return Err(CliError::config("sweep", "need 0 < ratio_min <= ratio_max < inf"));
        }
        if sweep.points == 0 {
            return Err(CliError::config("sweep.points", "must be at least 1"));
        }

        let trajectories = self.trajectories.clone().unwrap_or_default();
        if trajectories.count < 2 {
            return Err(CliError::config("trajectories.count", "need at least two trajectories"));
        }
        if !(trajectories.horizon > 0.0 && trajectories.horizon.is_finite()) {
            return Err(CliError::config("trajectories.horizon", "must be positive and finite"));
        }
        if let Some(dt) = trajectories.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::config("trajectories.dt", "must be positive and finite"));
            }
        }

        Ok(Resolved { kind: self.kind, base, perturbed, weights, ranges, draws, seed: self.seed, sweep, trajectories })
    }
}

fn resolve_params(p: &ModelParams) -> Result<TwoLevelParams> {
    let base = TwoLevelParams::limiting(1.0, 1.0);
    let out = TwoLevelParams {
        gamma: p.gamma.unwrap_or(base.gamma),
        rabi: p.rabi.unwrap_or(base.rabi),
        omega: p.omega.unwrap_or(base.omega),
        omega_d: p.omega_d.unwrap_or(base.omega_d),
        beta: p.beta.unwrap_or(base.beta),
    };
    let checks = [
        ("gamma", out.gamma >= 0.0 && out.gamma.is_finite()),
        ("rabi", out.rabi >= 0.0 && out.rabi.is_finite()),
        ("omega", out.omega > 0.0 && out.omega.is_finite()),
        ("omega_d", out.omega_d.is_finite()),
        ("beta", out.beta >= 0.0),
    ];
    for (name, ok) in checks {
        if !ok {
            return Err(CliError::config(format!("model.params.{name}"), "value is out of range"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let text = r#"{
            "kind": "sample",
            "model": {"name": "two_level", "params": {"gamma": 0.5, "beta": 2.0}},
            "perturbed": "omega_d",
            "observable": [-1.0, 1.0],
            "ranges": {"omega": [0.001, 24.0]},
            "draws": 12,
            "seed": 9,
            "trajectories": {"count": 4, "horizon": 3.0},
            "output": "x.csv"
        }"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        let again = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, again);
        let r = c.resolve().unwrap();
        assert_eq!(r.perturbed, Parameter::DriveFrequency);
        assert_eq!(r.weights, [-1.0, 1.0]);
        assert_eq!(r.base.gamma, 0.5);
        assert!(r.trajectories.halve_dt);
    }

    #[test]
    fn named_observable_round_trips() {
        let c = ExperimentConfig::from_json(r#"{"kind": "single", "observable": "current"}"#).unwrap();
        assert_eq!(c.observable, Some(ObservableSpec::Named(ObservableName::Current)));
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn unknown_parameter_names_the_field() {
        let err = ExperimentConfig::from_json("{\"kind\": \"sample\",\n \"model\": {\"name\": \"two_level\", \"params\": {\"delta\": 1}}}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("model.params") && err.contains("line 2"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"kind": "sample", "perturbed": "kappa"}"#).unwrap_err().to_string();
        assert!(err.contains("perturbed"), "{err}");
    }

    #[test]
    fn semantic_validation() {
        let mut c = ExperimentConfig::new(ExperimentKind::Sample);
        c.draws = Some(0);
        assert!(c.resolve().is_err());
        c.draws = Some(1);
        c.ranges = Some(RangesSpec { gamma: Some([3.0, 1.0]), ..Default::default() });
        assert!(matches!(c.resolve(), Err(CliError::Config { field, .. }) if field == "ranges.gamma"));
        let mut c = ExperimentConfig::new(ExperimentKind::Sweep);
        c.observable = Some(ObservableSpec::Named(ObservableName::Current));
        assert!(c.resolve().is_err());
    }

    #[test]
    fn digest_ignores_output_path() {
        let mut a = ExperimentConfig::new(ExperimentKind::Sample);
        let d = a.digest();
        a.output = Some("elsewhere.csv".into());
        assert_eq!(a.digest(), d);
        a.seed = 1;
        assert_ne!(a.digest(), d);
    }
}
