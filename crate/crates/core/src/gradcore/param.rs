use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Tape, Tensor};
use crate::error::{Error, Result};

/// A named trainable tensor with its Adam moment buffers.
#[derive(Clone, Debug)]
pub struct Parameter {
    pub name: String,
    pub tensor: Tensor,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub step_count: u64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, tensor: Tensor) -> Self {
        let n = tensor.numel();
        Self {
            name: name.into(),
            tensor: tensor.with_grad(),
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            step_count: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Ordered registry of parameters. Registration order is the checkpoint order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
    by_name: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateParameter(name.to_string()));
        }
        self.by_name.insert(name.to_string(), self.params.len());
        self.params.push(Parameter::new(name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Parameter> {
        self.by_name.get(name).map(|&i| &self.params[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.by_name.get(name).map(|&i| &mut self.params[i])
    }

    pub fn tensor(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .map(|p| &p.tensor)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    /// Replaces the value of `name`, keeping its shape.
    pub fn set(&mut self, name: &str, value: Tensor) -> Result<()> {
        let p = self
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        if p.tensor.shape() != value.shape() {
            return Err(Error::shape(p.tensor.shape(), value.shape()));
        }
        p.tensor.data_mut().copy_from_slice(value.data());
        Ok(())
    }

    /// Adds every bound parameter's gradient from `tape` onto `tensor.grad`.
    pub fn collect_grads(&mut self, tape: &Tape) {
        for (name, var) in tape.bindings() {
            let (Some(p), Some(g)) = (self.get_mut(name), tape.grad(var)) else {
                continue;
            };
            match &mut p.tensor.grad {
                Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
                slot @ None => *slot = Some(g.to_vec()),
            }
        }
    }

    pub fn zero_grads(&mut self) {
        self.params.iter_mut().for_each(|p| p.tensor.zero_grad());
    }

    /// One bias-corrected Adam update of the parameters named in `active`;
    /// gradients of all parameters are cleared afterwards.
    pub fn adam_step(&mut self, active: &[&str], cfg: &AdamConfig) -> Result<()> {
        let mut missing = Vec::new();
        let mut idx = Vec::with_capacity(active.len());
        for &name in active {
            match self.by_name.get(name) {
                None => return Err(Error::UnknownParameter(name.to_string())),
                Some(&i) if self.params[i].tensor.grad.is_none() => missing.push(name.to_string()),
                Some(&i) => idx.push(i),
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingGrad(missing));
        }
        for i in idx {
            let p = &mut self.params[i];
            p.step_count += 1;
            let t = p.step_count as i32;
            let c1 = 1.0 - cfg.beta1.powi(t);
            let c2 = 1.0 - cfg.beta2.powi(t);
            let grad = p.tensor.grad.take().unwrap_or_default();
            let data = p.tensor.data_mut();
            for j in 0..data.len() {
                let g = grad[j] as f64;
                p.adam_m[j] = cfg.beta1 * p.adam_m[j] + (1.0 - cfg.beta1) * g;
                p.adam_v[j] = cfg.beta2 * p.adam_v[j] + (1.0 - cfg.beta2) * g * g;
                let m_hat = p.adam_m[j] / c1;
                let v_hat = p.adam_v[j] / c2;
                data[j] = (data[j] as f64 - cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps)) as f32;
            }
        }
        self.zero_grads();
        Ok(())
    }

    /// Copies parameter values (not optimizer state) from `other` by name.
    pub fn load_values_from(&mut self, other: &ParamStore) -> Result<()> {
        for p in other.iter() {
            self.set(&p.name, p.tensor.clone())?;
        }
        Ok(())
    }
}
