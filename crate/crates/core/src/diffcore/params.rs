use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::{Error, Result};

/// Checkpoint format version for [`ParamSet`] serialization.
pub const PARAMSET_FORMAT_VERSION: u32 = 1;

/// A trainable tensor with its gradient buffer and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// Frozen parameters accumulate no gradient and are never updated.
    pub frozen: bool,
    /// First and second moment estimates (adaptive optimizer only).
    pub(crate) moments: Option<(Vec<f64>, Vec<f64>)>,
}

/// Named collection of parameters sharing one optimizer clock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<Param>,
    index: HashMap<String, usize>,
    /// Number of optimizer updates applied so far.
    pub(crate) step: u64,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter; names must be unique. Returns its index.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter name {name}")));
        }
        let grad = Tensor::zeros(value.shape());
        let idx = self.params.len();
        self.index.insert(name.clone(), idx);
        self.params.push(Param {
            name,
            value,
            grad,
            frozen: false,
            moments: None,
        });
        Ok(idx)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.index_of(name).map(|i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.index_of(name).map(move |i| &mut self.params[i])
    }

    pub fn param(&self, idx: usize) -> &Param {
        &self.params[idx]
    }

    pub fn param_mut(&mut self, idx: usize) -> &mut Param {
        &mut self.params[idx]
    }

    /// Mutable access to several distinct parameters at once.
    ///
    /// Panics if an index repeats or is out of range.
    pub fn disjoint_mut<const N: usize>(&mut self, indices: [usize; N]) -> [&mut Param; N] {
        self.params
            .get_disjoint_mut(indices)
            .expect("distinct in-range parameter indices")
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar values across all parameters.
    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn optimizer_step(&self) -> u64 {
        self.step
    }

    pub fn set_frozen(&mut self, name: &str, frozen: bool) -> Result<()> {
        let p = self
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("unknown parameter {name}")))?;
        p.frozen = frozen;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in self.params.iter_mut().filter(|p| !p.frozen) {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Euclidean norm over all parameter values.
    pub fn value_norm(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.value.data().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_state(&self) -> ParamSetState {
        ParamSetState {
            version: PARAMSET_FORMAT_VERSION,
            optimizer_step: self.step,
            params: self
                .params
                .iter()
                .map(|p| ParamRecord {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    frozen: p.frozen,
                    values: p.value.data().to_vec(),
                    first_moment: p.moments.as_ref().map(|m| m.0.clone()),
                    second_moment: p.moments.as_ref().map(|m| m.1.clone()),
                })
                .collect(),
        }
    }

    pub fn from_state(state: ParamSetState) -> Result<Self> {
        if state.version != PARAMSET_FORMAT_VERSION {
            return Err(Error::Serde(format!(
                "unsupported parameter format version {}",
                state.version
            )));
        }
        let mut set = ParamSet::new();
        set.step = state.optimizer_step;
        for rec in state.params {
            let n = rec.values.len();
            let idx = set.insert(rec.name, Tensor::new(&rec.shape, rec.values)?)?;
            let p = &mut set.params[idx];
            p.frozen = rec.frozen;
            p.moments = match (rec.first_moment, rec.second_moment) {
                (Some(m), Some(v)) if m.len() == n && v.len() == n => Some((m, v)),
                (None, None) => None,
                _ => {
                    return Err(Error::Serde(format!(
                        "inconsistent optimizer moments for {}",
                        p.name
                    )))
                }
            };
        }
        Ok(set)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(&self.to_state())?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_state(serde_json::from_str(&text)?)
    }
}

/// Serialized form of a [`ParamSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSetState {
    pub version: u32,
    pub optimizer_step: u64,
    pub params: Vec<ParamRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub frozen: bool,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_moment: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_moment: Option<Vec<f64>>,
}
