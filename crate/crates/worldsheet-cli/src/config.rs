//! Run configuration read from a JSON document.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use worldsheet::background::{catalog_background, Background};
use worldsheet::deformation::DeformationRecipe;
use worldsheet::embedding::{catalog_embedding, Embedding, FourierComponent};
use worldsheet::gaugeform::GaugeField;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Named {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Per-coordinate series for the `fourier` embedding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<FourierComponent>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Structured,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub path: Option<String>,
    #[serde(default = "structured")]
    pub format: Format,
}

fn structured() -> Format {
    Format::Structured
}

fn one() -> usize {
    1
}

fn three() -> usize {
    3
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub background: Named,
    pub embedding: EmbeddingSpec,
    /// Coarsest (N₀, N₁); each further level doubles both.
    pub resolution: [usize; 2],
    #[serde(default = "one")]
    pub refinement_levels: usize,
    /// Explicit recipes, paired in order (0, 1), (2, 3), ...
    #[serde(default)]
    pub deformations: Vec<DeformationRecipe>,
    /// Seeded random pairs added after the explicit ones.
    #[serde(default = "three")]
    pub random_pairs: usize,
    #[serde(default)]
    pub slices: Vec<f64>,
    #[serde(default)]
    pub gauge_fields: Vec<GaugeField>,
    /// Per-identity tolerance overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "unit")]
    pub sigma1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Output>,
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), message: message.into() }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let c: RunConfig = serde_json::from_str(text)
            .map_err(|e| invalid(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for (i, n) in self.resolution.iter().enumerate() {
            if *n < worldsheet::grid::MIN_NODES {
                return Err(invalid(
                    &format!("resolution[{i}]"),
                    format!("needs at least {} nodes, got {n}", worldsheet::grid::MIN_NODES),
                ));
            }
        }
        if self.refinement_levels == 0 {
            return Err(invalid("refinement_levels", "must be at least 1"));
        }
        if self.deformations.len() % 2 == 1 {
            return Err(invalid("deformations", "explicit recipes come in pairs"));
        }
        for (id, t) in &self.tolerances {
            if !(*t > 0.0 && t.is_finite()) {
                return Err(invalid(&format!("tolerances.{id}"), format!("must be positive, got {t}")));
            }
        }
        for (i, g) in self.gauge_fields.iter().enumerate() {
            g.validate().map_err(|e| invalid(&format!("gauge_fields[{i}]"), e.to_string()))?;
        }
        if !self.sigma1.is_finite() {
            return Err(invalid("sigma1", "must be finite"));
        }
        self.embedding()?;
        Ok(())
    }

    pub fn background(&self) -> Result<Arc<dyn Background>, CliError> {
        let p = &self.background.params;
        catalog_background(&self.background.name, &|k| p.get(k).copied())
            .map_err(|e| invalid("background", e.to_string()))
    }

    pub fn embedding(&self) -> Result<Embedding, CliError> {
        let e = &self.embedding;
        catalog_embedding(&e.name, &e.params, self.background()?, e.components.clone())
            .map_err(|err| invalid("embedding", err.to_string()))
    }

    /// (N₀, N₁) at each refinement level.
    pub fn levels(&self) -> Vec<[usize; 2]> {
        (0..self.refinement_levels).map(|l| [self.resolution[0] << l, self.resolution[1] << l]).collect()
    }

    pub fn format(&self) -> Format {
        self.output.as_ref().map_or(Format::Structured, |o| o.format)
    }

    pub fn out_path(&self) -> Option<&str> {
        self.output.as_ref().and_then(|o| o.path.as_deref())
    }
}

/// Parse "N0xN1".
pub fn parse_resolution(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected N0xN1, got '{s}'"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad resolution '{s}': {e}"));
    Ok([p(a)?, p(b)?])
}
