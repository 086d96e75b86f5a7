use autograd::Array;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::nn::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.0, beta2: 0.99, eps: 1e-8 }
    }
}

/// Adam with per-parameter step counts, so parameters that only receive
/// updates from some objectives keep their own bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub m: ParamSet,
    pub v: ParamSet,
    pub steps: IndexMap<String, u64>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, m: ParamSet::new(), v: ParamSet::new(), steps: IndexMap::new() }
    }

    /// Updates every parameter named in `grads`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet, lr: f64) -> Result<()> {
        let AdamConfig { beta1, beta2, eps } = self.config;
        for (name, g) in grads.iter() {
            let p = params
                .get_mut(name)
                .ok_or_else(|| domain(format!("gradient for unknown parameter {name}")))?;
            if p.shape() != g.shape() {
                return Err(domain(format!("{name}: gradient {:?} vs parameter {:?}", g.shape(), p.shape())));
            }
            if self.m.get(name).is_none() {
                self.m.insert(name.clone(), Array::zeros(g.shape()));
                self.v.insert(name.clone(), Array::zeros(g.shape()));
            }
            let t = self.steps.entry(name.clone()).or_insert(0);
            *t += 1;
            let c1 = 1.0 - beta1.powi(*t as i32);
            let c2 = 1.0 - beta2.powi(*t as i32);
            let m = self.m.get_mut(name).expect("inserted above").data_mut();
            let v = self.v.get_mut(name).expect("inserted above").data_mut();
            for (((p, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                let g = f64::from(g);
                let mm = beta1 * f64::from(*m) + (1.0 - beta1) * g;
                let vv = beta2 * f64::from(*v) + (1.0 - beta2) * g * g;
                *m = mm as f32;
                *v = vv as f32;
                *p -= (lr * (mm / c1) / ((vv / c2).sqrt() + eps)) as f32;
            }
        }
        Ok(())
    }

    /// Moments as named arrays under `prefix`.
    pub fn export(&self, prefix: &str, into: &mut ParamSet) {
        for (k, a) in self.m.iter() {
            into.insert(format!("{prefix}.m.{k}"), a.clone());
        }
        for (k, a) in self.v.iter() {
            into.insert(format!("{prefix}.v.{k}"), a.clone());
        }
    }

    /// Inverse of [`Adam::export`].
    pub fn import(config: AdamConfig, prefix: &str, arrays: &ParamSet, steps: IndexMap<String, u64>) -> Result<Self> {
        let mut adam = Self::new(config);
        let (pm, pv) = (format!("{prefix}.m."), format!("{prefix}.v."));
        for (k, a) in arrays.iter() {
            if let Some(name) = k.strip_prefix(&pm) {
                adam.m.insert(name, a.clone());
            } else if let Some(name) = k.strip_prefix(&pv) {
                adam.v.insert(name, a.clone());
            }
        }
        if adam.m.len() != adam.v.len() || adam.m.names().any(|k| !steps.contains_key(k)) {
            return Err(Error::Format(format!("{prefix}: incomplete optimizer state")));
        }
        adam.steps = steps;
        Ok(adam)
    }
}
