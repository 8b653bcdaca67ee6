//! Run configuration: a single JSON document shared by every subcommand.

use std::path::{Path, PathBuf};

use parahyp_core::verify::{Tolerances, VerifyOptions};
use parahyp_core::{Forcing, RectDomain, TruncationPolicy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: RectDomain,
    #[serde(default)]
    pub forcing: Forcing,
    #[serde(default = "default_policy")]
    pub truncation: TruncationPolicy,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    /// Fallback when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub scan: ScanConfig,
}

fn default_policy() -> TruncationPolicy {
    TruncationPolicy::fixed(16)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nt: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 65, nt: 65 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub quadrature: f64,
    pub residual: f64,
    pub jump: f64,
    pub boundary: f64,
    pub roundtrip: f64,
    pub ode: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        ToleranceConfig {
            quadrature: 1e-12,
            residual: t.residual,
            jump: t.jump,
            boundary: t.boundary,
            roundtrip: t.roundtrip,
            ode: t.ode,
        }
    }
}

impl ToleranceConfig {
    pub fn verify(&self) -> Tolerances {
        Tolerances {
            residual: self.residual,
            jump: self.jump,
            boundary: self.boundary,
            roundtrip: self.roundtrip,
            ode: self.ode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub n_x_samples: usize,
    pub probe_offset: f64,
    pub lemma_trials: usize,
    pub lemma_modes: usize,
    /// Perturbs one stored coefficient before verifying, to exercise the detectors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inject: Option<Corruption>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let d = VerifyOptions::default();
        VerifyConfig {
            n_x_samples: d.n_x_samples,
            probe_offset: d.probe_offset,
            lemma_trials: d.lemma_trials,
            lemma_modes: d.lemma_modes,
            inject: None,
        }
    }
}

/// Adds `delta` to the coefficient `b` of mode `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    pub mode: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    pub n_list: Vec<usize>,
    pub reference_n: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig { n_list: vec![4, 8, 16, 32], reference_n: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub n_max: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { n_max: 10 }
    }
}

impl RunConfig {
    /// A config with defaults everywhere except the domain and forcing.
    pub fn new(domain: RectDomain, forcing: Forcing) -> Self {
        RunConfig {
            domain,
            forcing,
            truncation: default_policy(),
            grid: GridConfig::default(),
            tolerances: ToleranceConfig::default(),
            output_dir: None,
            seed: 0,
            verify: VerifyConfig::default(),
            converge: ConvergeConfig::default(),
            scan: ScanConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!("line {}, column {}, field `{}`: {}", inner.line(), inner.column(), path, inner))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: &str| Err(CliError::Config(format!("field `{field}`: {msg}")));
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.quadrature", t.quadrature),
            ("tolerances.residual", t.residual),
            ("tolerances.jump", t.jump),
            ("tolerances.boundary", t.boundary),
            ("tolerances.roundtrip", t.roundtrip),
            ("tolerances.ode", t.ode),
            ("verify.probe_offset", self.verify.probe_offset),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, "must be a positive number");
            }
        }
        if self.grid.nx < 3 {
            return bad("grid.nx", "must be >= 3");
        }
        if self.grid.nt < 3 {
            return bad("grid.nt", "must be >= 3");
        }
        if self.verify.n_x_samples < 1 {
            return bad("verify.n_x_samples", "must be >= 1");
        }
        if self.verify.lemma_trials < 1 {
            return bad("verify.lemma_trials", "must be >= 1");
        }
        if let Some(c) = self.verify.inject {
            if c.mode == 0 {
                return bad("verify.inject.mode", "must be >= 1");
            }
        }
        self.truncation.validate().map_err(|e| CliError::Config(format!("field `truncation`: {e}")))?;
        if self.scan.n_max < 1 {
            return bad("scan.n_max", "must be >= 1");
        }
        Ok(())
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            nx: self.grid.nx,
            nt: self.grid.nt,
            n_x_samples: self.verify.n_x_samples,
            probe_offset: self.verify.probe_offset,
            lemma_trials: self.verify.lemma_trials,
            lemma_modes: self.verify.lemma_modes,
            tolerances: self.tolerances.verify(),
        }
    }

    /// SHA-256 of the canonical serialization, in lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
