//! Versioned JSON experiment configuration.

use std::collections::BTreeSet;
use std::f64::consts::E;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use sclab_core::growth::critical_exponent;
use sclab_core::manifolds::{periodic_geodesic, weyl_estimate, ManifoldDescriptor, ManifoldKind, ManifoldModel};
use sclab_core::quasimodes::EtaProfile;
use sclab_core::{FitMode, KnappParams};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest spectrum the `spectrum` experiment will materialize.
const MAX_SPECTRUM: f64 = 5e7;

/// Lebesgue exponent in `(1, ∞]`; JSON spells infinity as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent(pub f64);

impl Exponent {
    /// Column suffix: `6`, `3.5`, `inf`.
    pub fn tag(&self) -> String {
        if self.0.is_infinite() {
            "inf".into()
        } else if self.0.fract() == 0.0 {
            format!("{}", self.0 as i64)
        } else {
            format!("{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Self(x)),
            Raw::Str(s) if s == "inf" || s == "infinity" => Ok(Self(f64::INFINITY)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    Unit,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldDescriptor>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Spectrum {
        lambda_max: f64,
    },
    Opnorm {
        lambdas: Vec<f64>,
        #[serde(default = "default_policy")]
        policy: PolicySpec,
        q: Vec<Exponent>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_resolution: Option<usize>,
        #[serde(default)]
        record_runtime: bool,
    },
    KnappScan {
        direction: Vec<f64>,
        k: Vec<u64>,
        q: Vec<Exponent>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_bar: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_multiplier: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<EtaProfile>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_resolution: Option<usize>,
        #[serde(default = "default_deck_samples")]
        deck_samples: usize,
        #[serde(default)]
        export_coefficients: bool,
    },
    BeamScan {
        l: Vec<u32>,
        q: Vec<Exponent>,
        #[serde(default = "default_families")]
        families: Vec<Family>,
        /// Equatorial tube radius `λ^{-1/2 + tube_exponent}`.
        #[serde(default = "default_tube_exponent")]
        tube_exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid_resolution: Option<usize>,
    },
    KernelDecay {
        log_lambda: Vec<f64>,
        #[serde(default = "default_z_perp")]
        z_perp: Vec<f64>,
        #[serde(default = "default_z_parallel")]
        z_parallel: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c0: Option<f64>,
    },
    Fit {
        input: DataSource,
        mode: FitMode,
    },
    Classify {
        input: DataSource,
        q: Exponent,
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Beam,
    Zonal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Beam => "beam",
            Family::Zonal => "zonal",
        })
    }
}

/// `(λ, N)` samples, either inline or read from a scan CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default = "default_lambda_column")]
    pub lambda_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<RowFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub equals: String,
}

fn default_policy() -> PolicySpec {
    PolicySpec::Unit
}
fn default_deck_samples() -> usize {
    100
}
fn default_families() -> Vec<Family> {
    vec![Family::Beam, Family::Zonal]
}
fn default_tube_exponent() -> f64 {
    0.1
}
fn default_z_perp() -> Vec<f64> {
    vec![1.0]
}
fn default_z_parallel() -> Vec<f64> {
    vec![0.0]
}
fn default_lambda_column() -> String {
    "lambda".into()
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(HarnessError::Validation(msg.into()))
}

impl Experiment {
    /// CLI spelling of the experiment kind.
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::Opnorm { .. } => "opnorm",
            Experiment::KnappScan { .. } => "knapp-scan",
            Experiment::BeamScan { .. } => "beam-scan",
            Experiment::KernelDecay { .. } => "kernel-decay",
            Experiment::Fit { .. } => "fit",
            Experiment::Classify { .. } => "classify",
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    /// Reads and validates a config; relative CSV inputs resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io("reading config", path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Experiment::Fit { input, .. } | Experiment::Classify { input, .. } = &mut self.experiment {
            if let Some(p) = &input.csv {
                if p.is_relative() {
                    input.csv = Some(base.join(p));
                }
            }
        }
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }

    pub fn model(&self) -> Result<ManifoldModel> {
        let Some(desc) = &self.manifold else {
            return invalid(format!("experiment `{}` needs a manifold", self.experiment.name()));
        };
        ManifoldModel::from_descriptor(desc).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    /// Checks every numeric range against the preconditions of the stages it feeds.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return invalid(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema));
        }
        match &self.experiment {
            Experiment::Spectrum { lambda_max } => {
                let model = self.model()?;
                if !(lambda_max.is_finite() && *lambda_max >= 0.0) {
                    return invalid(format!("lambda_max must be finite and ≥ 0, got {lambda_max}"));
                }
                if weyl_estimate(&model, *lambda_max) > MAX_SPECTRUM {
                    return invalid(format!("spectrum up to {lambda_max} exceeds {MAX_SPECTRUM:e} eigenfunctions"));
                }
            }
            Experiment::Opnorm {
                lambdas,
                policy,
                q,
                grid_resolution,
                ..
            } => {
                self.model()?;
                nonempty("lambdas", lambdas)?;
                for &l in lambdas {
                    let floor = if *policy == PolicySpec::Log { E } else { 0.0 };
                    if !(l.is_finite() && l > floor) {
                        return invalid(format!("window centre {l} must be finite and > {floor}"));
                    }
                }
                distinct_f64("lambdas", lambdas)?;
                exponents(q, false)?;
                min_grid(*grid_resolution)?;
            }
            Experiment::KnappScan {
                direction,
                k,
                q,
                grid_resolution,
                deck_samples,
                ..
            } => {
                let model = self.model()?;
                if !model.is_flat() {
                    return Err(HarnessError::stage(
                        "validate",
                        "knapp-scan",
                        sclab_core::Error::Capability(format!("Knapp scans need a flat model, not {model}")),
                    ));
                }
                if direction.len() != model.dim() {
                    return invalid(format!("direction has {} entries, model dimension is {}", direction.len(), model.dim()));
                }
                let geo = periodic_geodesic(&model, direction).map_err(|e| HarnessError::Validation(e.to_string()))?;
                nonempty("k", k)?;
                let unique: BTreeSet<_> = k.iter().collect();
                if unique.len() != k.len() {
                    return invalid("k values must be distinct");
                }
                for &kk in k {
                    let params = self.knapp_params(kk)?;
                    params.scales(geo.length).map_err(|e| HarnessError::Validation(e.to_string()))?;
                }
                exponents(q, false)?;
                min_grid(*grid_resolution)?;
                if *deck_samples == 0 {
                    return invalid("deck_samples must be positive");
                }
            }
            Experiment::BeamScan {
                l,
                q,
                families,
                tube_exponent,
                grid_resolution,
            } => {
                let model = self.model()?;
                if model.kind() != ManifoldKind::Sphere {
                    return invalid(format!("beam-scan runs on a sphere, not {model}"));
                }
                if model.dim() != 2 {
                    return Err(HarnessError::stage(
                        "validate",
                        "beam-scan",
                        sclab_core::Error::Capability(format!("sphere grids exist for S² only, not S^{}", model.dim())),
                    ));
                }
                nonempty("l", l)?;
                if l.iter().any(|&d| d < 1) {
                    return invalid("degrees l must be ≥ 1");
                }
                let unique: BTreeSet<_> = l.iter().collect();
                if unique.len() != l.len() {
                    return invalid("l values must be distinct");
                }
                nonempty("families", families)?;
                exponents(q, false)?;
                if !(*tube_exponent > 0.0 && *tube_exponent < 0.5) {
                    return invalid(format!("tube_exponent must lie in (0, 1/2), got {tube_exponent}"));
                }
                min_grid(*grid_resolution)?;
            }
            Experiment::KernelDecay {
                log_lambda,
                z_perp,
                z_parallel,
                c0,
            } => {
                nonempty("log_lambda", log_lambda)?;
                for &t in log_lambda {
                    if !(t.is_finite() && t > 2.0 && t < 12.0) {
                        return invalid(format!("log_lambda must lie in (2, 12), got {t}"));
                    }
                }
                nonempty("z_perp", z_perp)?;
                nonempty("z_parallel", z_parallel)?;
                if z_perp.iter().chain(z_parallel).any(|z| !z.is_finite()) {
                    return invalid("kernel offsets must be finite");
                }
                let mut p = KnappParams::new(2);
                if let Some(c) = c0 {
                    p.c0 = *c;
                }
                p.validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
            }
            Experiment::Fit { input, mode } => {
                input.validate()?;
                if let FitMode::AFixed { a } = mode {
                    if !a.is_finite() {
                        return invalid("fixed exponent a must be finite");
                    }
                }
            }
            Experiment::Classify { input, q, n } => {
                input.validate()?;
                let qc = critical_exponent(*n).map_err(|e| HarnessError::Validation(e.to_string()))?;
                if !(q.0 > 2.0 && q.0 <= qc) {
                    return invalid(format!("classification needs 2 < q ≤ q_c = {qc}, got {}", q.0));
                }
            }
        }
        Ok(())
    }

    /// Knapp parameters for mode `k` with the config's overrides.
    pub fn knapp_params(&self, k: u64) -> Result<KnappParams> {
        let mut p = KnappParams::new(k);
        if let Experiment::KnappScan {
            c0,
            c_bar,
            truncation_multiplier,
            eta,
            ..
        } = &self.experiment
        {
            if let Some(v) = c0 {
                p.c0 = *v;
            }
            if let Some(v) = c_bar {
                p.c_bar = *v;
            }
            if let Some(v) = truncation_multiplier {
                p.truncation_multiplier = *v;
            }
            if let Some(v) = eta {
                p.eta = *v;
            }
        }
        p.validate().map_err(|e| HarnessError::Validation(e.to_string()))?;
        Ok(p)
    }
}

impl DataSource {
    fn validate(&self) -> Result<()> {
        match (&self.csv, &self.points) {
            (Some(_), None) => {
                if self.value_column.is_none() {
                    return invalid("a CSV input needs value_column");
                }
                Ok(())
            }
            (None, Some(points)) => {
                if self.filter.is_some() || self.value_column.is_some() {
                    return invalid("inline points take no column or filter settings");
                }
                if points.iter().flatten().any(|x| !x.is_finite()) {
                    return invalid("inline points must be finite");
                }
                Ok(())
            }
            _ => invalid("input needs exactly one of `csv` or `points`"),
        }
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return invalid(format!("`{name}` must not be empty"));
    }
    Ok(())
}

fn distinct_f64(name: &str, v: &[f64]) -> Result<()> {
    let unique: BTreeSet<u64> = v.iter().map(|x| x.to_bits()).collect();
    if unique.len() != v.len() {
        return invalid(format!("`{name}` values must be distinct"));
    }
    Ok(())
}

fn exponents(q: &[Exponent], allow_empty: bool) -> Result<()> {
    if !allow_empty {
        nonempty("q", q)?;
    }
    for e in q {
        if !(e.0 > 1.0) {
            return invalid(format!("Lebesgue exponents must lie in (1, ∞], got {}", e.0));
        }
    }
    let unique: BTreeSet<String> = q.iter().map(Exponent::tag).collect();
    if unique.len() != q.len() {
        return invalid("q values must be distinct");
    }
    Ok(())
}

fn min_grid(res: Option<usize>) -> Result<()> {
    match res {
        Some(r) if r < sclab_core::manifolds::quadrature::MIN_RESOLUTION => invalid(format!(
            "grid_resolution {r} is below the minimum {}",
            sclab_core::manifolds::quadrature::MIN_RESOLUTION
        )),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KNAPP: &str = r#"{
        "schema": 1,
        "manifold": {"kind": "torus", "basis": [[1, 0], [0, 1]]},
        "experiment": {"kind": "knapp-scan", "direction": [1, 0], "k": [64, 128], "q": [6, "inf"]}
    }"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::from_json(KNAPP).unwrap();
        cfg.validate().unwrap();
        let Experiment::KnappScan { q, deck_samples, .. } = &cfg.experiment else { panic!() };
        assert_eq!(q[1].0, f64::INFINITY);
        assert_eq!(q[1].tag(), "inf");
        assert_eq!(*deck_samples, 100);
        assert_eq!(cfg.experiment.name(), "knapp-scan");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let top = KNAPP.replace("\"schema\": 1,", "\"schema\": 1, \"verbose\": true,");
        assert!(matches!(ExperimentConfig::from_json(&top), Err(HarnessError::Validation(_))));
        let inner = KNAPP.replace("\"q\": [6, \"inf\"]", "\"q\": [6], \"qs\": [4]");
        assert!(matches!(ExperimentConfig::from_json(&inner), Err(HarnessError::Validation(_))));
    }

    #[test]
    fn empty_k_range_is_rejected() {
        let cfg = ExperimentConfig::from_json(&KNAPP.replace("[64, 128]", "[]")).unwrap();
        assert!(matches!(cfg.validate(), Err(HarnessError::Validation(_))));
    }

    #[test]
    fn wrong_schema_and_ranges() {
        let cfg = ExperimentConfig::from_json(&KNAPP.replace("\"schema\": 1", "\"schema\": 2")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_json(&KNAPP.replace("[64, 128]", "[1]")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_json(&KNAPP.replace("[6, \"inf\"]", "[0.5]")).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_json(&KNAPP.replace("[1, 0], \"k\"", "[1, 1.4142135623730951], \"k\"")).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn knapp_scan_on_a_sphere_is_a_capability_error() {
        let text = KNAPP.replace(
            r#"{"kind": "torus", "basis": [[1, 0], [0, 1]]}"#,
            r#"{"kind": "sphere", "dim": 2}"#,
        );
        let err = ExperimentConfig::from_json(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn classify_range() {
        let text = r#"{"schema": 1, "experiment": {"kind": "classify", "q": 8, "n": 2,
            "input": {"points": [[100, 1], [1000, 2]]}}}"#;
        assert!(ExperimentConfig::from_json(text).unwrap().validate().is_err());
        let ok = text.replace("\"q\": 8", "\"q\": 6");
        ExperimentConfig::from_json(&ok).unwrap().validate().unwrap();
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_json(KNAPP).unwrap();
        let b = ExperimentConfig::from_json(&KNAPP.replace("\n", " ")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_json(&KNAPP.replace("[64, 128]", "[64, 256]")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
