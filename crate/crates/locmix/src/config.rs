//! JSON configuration and model/mixing specifications.

use locmix_core::mixing::{Deviance, DispersionMixing, DiscreteMixing};
use locmix_core::{Family, LocalMixtureModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Family selector: `{"kind":"binomial","n":10}`, `{"kind":"poisson"}` or
/// `{"kind":"normal"}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    Binomial { n: u32 },
    Poisson,
    Normal,
}

impl FamilySpec {
    pub fn to_family(self) -> Family {
        match self {
            FamilySpec::Binomial { n } => Family::Binomial { n },
            FamilySpec::Poisson => Family::Poisson,
            FamilySpec::Normal => Family::Normal,
        }
    }

    /// Accepts either the JSON object form or the shorthands
    /// `binomial:N`, `poisson`, `normal`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let trimmed = text.trim();
        if trimmed.starts_with('{') {
            return serde_json::from_str(trimmed)
                .map_err(|e| CliError::usage(format!("bad family spec: {e}")));
        }
        match trimmed {
            "poisson" => Ok(FamilySpec::Poisson),
            "normal" => Ok(FamilySpec::Normal),
            other => {
                if let Some(n) = other.strip_prefix("binomial:") {
                    let n: u32 = n
                        .parse()
                        .map_err(|_| CliError::usage(format!("bad binomial size {n:?}")))?;
                    Ok(FamilySpec::Binomial { n })
                } else {
                    Err(CliError::usage(format!("unknown family {other:?}")))
                }
            }
        }
    }
}

/// A full model: `{"family":{...},"order":4,"mu":5.0,"lambda":[l2,l3,l4]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilySpec,
    pub order: usize,
    pub mu: f64,
    pub lambda: Vec<f64>,
}

impl ModelSpec {
    pub fn to_model(&self) -> Result<LocalMixtureModel, CliError> {
        LocalMixtureModel::new(self.family.to_family(), self.order, self.mu, self.lambda.clone())
            .map_err(CliError::from_core)
    }

    pub fn from_model(model: &LocalMixtureModel) -> Self {
        let family = match model.family() {
            Family::Binomial { n } => FamilySpec::Binomial { n },
            Family::Poisson => FamilySpec::Poisson,
            Family::Normal => FamilySpec::Normal,
        };
        ModelSpec {
            family,
            order: model.order(),
            mu: model.mu(),
            lambda: model.lambda().to_vec(),
        }
    }
}

/// Discrete mixing: `{"atoms":[[theta,rho],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSpec {
    pub atoms: Vec<(f64, f64)>,
}

impl MixingSpec {
    pub fn to_mixing(&self) -> Result<DiscreteMixing, CliError> {
        DiscreteMixing::new(&self.atoms).map_err(CliError::from_core)
    }
}

/// Dispersion mixing: `{"deviance":"squared","epsilon":0.1,"vartheta":5.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    pub deviance: String,
    pub epsilon: f64,
    pub vartheta: f64,
}

impl DispersionSpec {
    pub fn to_mixing(&self) -> Result<DispersionMixing, CliError> {
        if self.deviance != "squared" {
            return Err(CliError::usage(format!(
                "unsupported deviance {:?} (only \"squared\" is available from config)",
                self.deviance
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(CliError::usage("epsilon must be positive".into()));
        }
        Ok(DispersionMixing {
            deviance: Deviance::Squared,
            epsilon: self.epsilon,
            vartheta: self.vartheta,
        })
    }
}

/// Flat run configuration; any field may come from the `--config` JSON file
/// or be overridden by a command-line flag. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub family: Option<FamilySpec>,
    pub order: Option<usize>,
    pub data: Option<String>,
    pub out: Option<String>,
    pub annotations: Option<String>,
    pub mu: Option<f64>,
    pub mu0: Option<f64>,
    pub m_lo: Option<f64>,
    pub m_hi: Option<f64>,
    pub grid: Option<usize>,
    pub epsilon: Option<f64>,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub mu_points: Option<usize>,
    pub lambda: Option<Vec<f64>>,
    pub fixed_lambda: Option<Vec<f64>>,
    pub mixing: Option<MixingSpec>,
    pub count: Option<usize>,
    pub coarse_points: Option<usize>,
    pub tol: Option<f64>,
    pub l2_min: Option<f64>,
    pub l2_max: Option<f64>,
    pub l2_steps: Option<usize>,
    pub l3_min: Option<f64>,
    pub l3_max: Option<f64>,
    pub l3_steps: Option<usize>,
    pub eps_schedule: Option<Vec<f64>>,
    pub kind: Option<String>,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {path}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("bad config {path}: {e}")))
    }

    pub fn require_family(&self) -> Result<Family, CliError> {
        self.family
            .map(FamilySpec::to_family)
            .ok_or_else(|| CliError::usage("missing family".into()))
    }

    pub fn require_data(&self) -> Result<&str, CliError> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::usage("missing data path".into()))
    }
}
