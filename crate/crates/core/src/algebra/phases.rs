use std::path::Path;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use super::HookeTensor3;
use crate::error::{Error, Result};

/// One entry of the phase-library file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum PhaseModel {
    Isotropic {
        lambda: f64,
        mu: f64,
    },
    Mandel6 {
        c: Vec<f64>,
    },
    /// Void stand-in with `1/2 C = eps I`; `eps` defaults to 1e-6 times the
    /// largest beta of the other phases.
    Soft {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub id: u32,
    #[serde(flatten)]
    pub model: PhaseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PhaseFile {
    phases: Vec<PhaseEntry>,
}

#[derive(Debug, Clone)]
pub struct Phase {
    pub id: u32,
    pub tensor: HookeTensor3,
    pub soft: bool,
}

/// Elastic phases keyed by id. Ids must be `0..n`.
#[derive(Debug, Clone)]
pub struct PhaseLibrary {
    phases: Vec<Phase>,
    entries: Vec<PhaseEntry>,
}

impl PhaseLibrary {
    pub fn from_entries(mut entries: Vec<PhaseEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        for (k, e) in entries.iter().enumerate() {
            if e.id as usize != k {
                return Err(Error::Parse(format!(
                    "phase ids must be 0..{} without gaps, found id {}",
                    entries.len(),
                    e.id
                )));
            }
        }
        let mut hard_beta: f64 = 0.0;
        let mut slots: Vec<Option<Phase>> = vec![None; entries.len()];
        for e in &entries {
            let tensor = match &e.model {
                PhaseModel::Isotropic { lambda, mu } => HookeTensor3::isotropic(*lambda, *mu)?,
                PhaseModel::Mandel6 { c } => {
                    if c.len() != 36 {
                        return Err(Error::Parse(format!("phase {}: mandel6 needs 36 entries", e.id)));
                    }
                    HookeTensor3::from_mandel(Matrix6::from_row_slice(c))
                }
                PhaseModel::Soft { .. } => continue,
            };
            hard_beta = hard_beta.max(tensor.bounds().beta);
            slots[e.id as usize] = Some(Phase { id: e.id, tensor, soft: false });
        }
        for e in &entries {
            if let PhaseModel::Soft { eps } = e.model {
                let eps = eps.unwrap_or(1e-6 * if hard_beta > 0.0 { hard_beta } else { 1.0 });
                slots[e.id as usize] = Some(Phase { id: e.id, tensor: HookeTensor3::soft(eps)?, soft: true });
            }
        }
        let phases = slots.into_iter().map(|p| p.expect("every slot filled")).collect();
        Ok(Self { phases, entries })
    }

    /// Isotropic phases `(lambda, mu)` with ids in order.
    pub fn isotropic(params: &[(f64, f64)]) -> Result<Self> {
        Self::from_entries(
            params
                .iter()
                .enumerate()
                .map(|(id, &(lambda, mu))| PhaseEntry { id: id as u32, model: PhaseModel::Isotropic { lambda, mu } })
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PhaseFile = serde_json::from_str(text)?;
        Self::from_entries(file.phases)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PhaseFile { phases: self.entries.clone() }).expect("serializable")
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn get(&self, id: u32) -> Result<&Phase> {
        self.phases.get(id as usize).ok_or(Error::UnknownPhase(id))
    }

    pub fn tensor(&self, id: u32) -> Result<&HookeTensor3> {
        Ok(&self.get(id)?.tensor)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Phase> {
        self.phases.iter()
    }

    /// `(min alpha, max beta)` over the non-soft phases with the given ids.
    pub fn hard_bounds(&self, ids: impl IntoIterator<Item = u32>) -> Result<(f64, f64)> {
        let mut alpha = f64::INFINITY;
        let mut beta = f64::NEG_INFINITY;
        for id in ids {
            let p = self.get(id)?;
            if p.soft {
                continue;
            }
            let b = p.tensor.bounds();
            alpha = alpha.min(b.alpha);
            beta = beta.max(b.beta);
        }
        Ok((alpha, beta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_models() {
        let mut c = vec![0.0; 36];
        for i in 0..6 {
            c[i * 6 + i] = 2.0;
        }
        let text = serde_json::json!({
            "phases": [
                {"id": 1, "model": "mandel6", "c": c},
                {"id": 0, "model": "isotropic", "lambda": 1.0, "mu": 1.0},
            ]
        })
        .to_string();
        let lib = PhaseLibrary::from_json(&text).unwrap();
        assert_eq!(lib.len(), 2);
        assert_eq!(lib.tensor(1).unwrap().bounds().alpha, 1.0);
        assert!((lib.tensor(0).unwrap().bounds().beta - 2.5).abs() < 1e-13);
        let again = PhaseLibrary::from_json(&lib.to_json()).unwrap();
        assert_eq!(again.tensor(0).unwrap(), lib.tensor(0).unwrap());
    }

    #[test]
    fn soft_phase_defaults_relative_to_hard_phases() {
        let text = r#"{"phases":[{"id":0,"model":"isotropic","lambda":1,"mu":1},{"id":1,"model":"soft"}]}"#;
        let lib = PhaseLibrary::from_json(text).unwrap();
        let soft = lib.get(1).unwrap();
        assert!(soft.soft);
        assert!((soft.tensor.bounds().alpha - 2.5e-6).abs() < 1e-18);
        assert_eq!(lib.hard_bounds([0, 1]).unwrap().1, lib.tensor(0).unwrap().bounds().beta);
    }

    #[test]
    fn rejects_gaps_and_bad_parameters() {
        assert!(PhaseLibrary::from_json(r#"{"phases":[{"id":1,"model":"isotropic","lambda":1,"mu":1}]}"#).is_err());
        assert!(PhaseLibrary::from_json(r#"{"phases":[{"id":0,"model":"isotropic","lambda":1,"mu":0}]}"#).is_err());
        assert!(PhaseLibrary::from_json(r#"{"phases":[{"id":0,"model":"mandel6","c":[1,2]}]}"#).is_err());
    }
}
