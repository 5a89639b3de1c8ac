//! JSON document for [`ModelParams`].
//!
//! ```json
//! {
//!   "units": {"kappa": "1/hour", ...},
//!   "kappa": 0.5, "mu": 71.96, "mu_c": 65.68,
//!   "maturities": [9.0, 10.0, ...], "cutoff_lead": 1.0,
//!   "jump_law": {"sizes": [1.21, 1.31, 1.41], "probs": [0.195, 0.61, 0.195]}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::params::{JumpLaw, MaturityGrid, ModelParams, TICK_SIZE};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpLawDoc {
    /// Absolute jump sizes, EUR/MWh.
    pub sizes: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParamsDoc {
    #[serde(default)]
    pub units: BTreeMap<String, String>,
    pub kappa: f64,
    pub mu: f64,
    pub mu_c: f64,
    pub maturities: Vec<f64>,
    pub cutoff_lead: f64,
    pub jump_law: JumpLawDoc,
}

pub fn default_units() -> BTreeMap<String, String> {
    [
        ("kappa", "1/hour"),
        ("mu", "1/hour"),
        ("mu_c", "1/hour"),
        ("maturities", "hours since session open (15:00 on D-1)"),
        ("cutoff_lead", "hours"),
        ("jump_law.sizes", "EUR/MWh"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl From<&JumpLaw> for JumpLawDoc {
    fn from(law: &JumpLaw) -> Self {
        Self {
            sizes: law.ticks().iter().map(|&k| (k as f64 * TICK_SIZE * 100.0).round() / 100.0).collect(),
            probs: law.probs().to_vec(),
        }
    }
}

impl From<&ModelParams> for ModelParamsDoc {
    fn from(p: &ModelParams) -> Self {
        Self {
            units: default_units(),
            kappa: p.kappa,
            mu: p.mu,
            mu_c: p.mu_c,
            maturities: p.grid.maturities().to_vec(),
            cutoff_lead: p.grid.cutoff_lead(),
            jump_law: (&p.jump_law).into(),
        }
    }
}

impl TryFrom<ModelParamsDoc> for ModelParams {
    type Error = crate::error::Error;

    fn try_from(doc: ModelParamsDoc) -> Result<Self> {
        let grid = MaturityGrid::new(doc.maturities, doc.cutoff_lead)?;
        let law = JumpLaw::from_sizes(&doc.jump_law.sizes, doc.jump_law.probs)?;
        ModelParams::new(doc.kappa, doc.mu, doc.mu_c, grid, law)
    }
}

impl ModelParams {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelParamsDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelParamsDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
