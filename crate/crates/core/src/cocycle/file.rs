//! TOML cocycle files.
//!
//! ```toml
//! group = "Z^d:d=2"
//! mu = "srw"            # optional, any measure spec
//! dim = 2
//! harmonic = true       # optional: replace b by its harmonic part
//!
//! [[generator]]
//! name = "x1"
//! matrix = [[1.0, 0.0], [0.0, 1.0]]   # optional, identity by default
//! value = [1.0, 0.0]
//! ```
//!
//! Generators not listed get `pi = I`, `b = 0` unless their inverse is listed.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::FiniteDimCocycle;
use crate::error::{Error, Result};
use crate::group::Group;
use crate::measure::MuSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleFile {
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    pub dim: usize,
    #[serde(default)]
    pub harmonic: bool,
    #[serde(rename = "generator", default)]
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    pub value: Vec<f64>,
}

impl CocycleFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("cocycle files serialize")
    }

    /// Builds and validates the cocycle.
    pub fn build(&self) -> Result<FiniteDimCocycle> {
        let group = Arc::new(Group::from_id(&self.group)?);
        let spec: MuSpec = self.mu.as_deref().unwrap_or("srw").parse()?;
        let mu = spec.build::<f64>(&group)?;
        let mut entries = Vec::new();
        for g in &self.generators {
            let matrix = match &g.matrix {
                None => None,
                Some(rows) => {
                    if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                        return Err(Error::InvalidCocycle(format!("matrix of {} is not {0}x{0}", self.dim)));
                    }
                    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                    Some(DMatrix::from_row_slice(self.dim, self.dim, &flat))
                }
            };
            entries.push((g.name.as_str(), matrix, DVector::from_column_slice(&g.value)));
        }
        let b = FiniteDimCocycle::from_generators(group, self.dim, &entries, mu)?.validated(0)?;
        if self.harmonic {
            Ok(b.harmonic_part()?.harmonic)
        } else {
            Ok(b)
        }
    }

    /// File listing every generator of `b`.
    pub fn from_cocycle(b: &FiniteDimCocycle, mu: Option<String>) -> Self {
        let gens = b.group().generators();
        let d = b.dim();
        let generators = gens
            .names()
            .iter()
            .enumerate()
            .map(|(i, name)| GeneratorEntry {
                name: name.clone(),
                matrix: Some((0..d).map(|r| (0..d).map(|c| b.rep(i)[(r, c)]).collect()).collect()),
                value: b.value(i).iter().copied().collect(),
            })
            .collect();
        CocycleFile {
            group: b.group().id().to_string(),
            mu,
            dim: d,
            harmonic: false,
            generators,
        }
    }
}
