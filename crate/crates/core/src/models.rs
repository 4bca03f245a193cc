//! Forecasting backbones and the residual aggregation network.
//!
//! A backbone maps a normalized `[B, L, d_x + 1]` window (exogenous channels
//! first, target last) to a `[B, H, d_x + 1]` forecast whose first `d_x`
//! channels are the surrogate-feature forecast and whose last channel is the
//! target forecast.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcore::{ParamStore, Tape, Tensor, Var};

pub const DEFAULT_BACKBONE_HIDDEN: usize = 128;
pub const DEFAULT_AGG_HIDDEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackboneKind {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub kind: BackboneKind,
    pub lookback: usize,
    pub horizon: usize,
    pub d_x: usize,
    pub hidden: usize,
    pub seed: u64,
}

impl BackboneConfig {
    pub fn channels(&self) -> usize {
        self.d_x + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 || self.hidden == 0 || self.d_x == 0 {
            return Err(Error::InvalidConfig(format!(
                "backbone needs lookback, horizon, hidden, d_x ≥ 1: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn Backbone>> {
        self.validate()?;
        Ok(match self.kind {
            BackboneKind::Linear => Box::new(LinearBackbone { cfg: *self }),
            BackboneKind::Mlp => Box::new(MlpBackbone { cfg: *self }),
        })
    }
}

/// Attachment point for forecasting models.
pub trait Backbone: Send + Sync {
    fn config(&self) -> &BackboneConfig;

    /// Registers this backbone's parameters under `backbone.*`.
    fn init_params(&self, store: &mut ParamStore, seed: u64) -> Result<()>;

    fn param_names(&self) -> Vec<&'static str>;

    /// `[B, L, d_x + 1]` → `[B, H, d_x + 1]`.
    fn forward_raw(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var>;

    /// Forecast split into (`X̂_SUR`: `[B, H, d_x]`, `Ŷ`: `[B, H, 1]`).
    fn forward(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<(Var, Var)> {
        let cfg = *self.config();
        let shape = tape.shape(input).to_vec();
        if shape.len() != 3 || shape[1] != cfg.lookback || shape[2] != cfg.channels() {
            return Err(Error::shape(
                &shape,
                &[
                    shape.first().copied().unwrap_or(0),
                    cfg.lookback,
                    cfg.channels(),
                ],
            ));
        }
        let out = self.forward_raw(tape, store, input)?;
        let x_hat = tape.narrow(out, 2, 0, cfg.d_x)?;
        let y_hat = tape.narrow(out, 2, cfg.d_x, 1)?;
        Ok((x_hat, y_hat))
    }
}

/// One `[L × H]` temporal map plus bias shared by every channel.
pub struct LinearBackbone {
    cfg: BackboneConfig,
}

impl Backbone for LinearBackbone {
    fn config(&self) -> &BackboneConfig {
        &self.cfg
    }

    fn init_params(&self, store: &mut ParamStore, seed: u64) -> Result<()> {
        let mut rng = rng_for(seed, 0);
        let (l, h) = (self.cfg.lookback, self.cfg.horizon);
        store.register("backbone.w", uniform_weight(&mut rng, l, h))?;
        store.register("backbone.b", Tensor::zeros(&[h]))
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["backbone.w", "backbone.b"]
    }

    fn forward_raw(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let b = tape.shape(input)[0];
        let (l, h, c) = (self.cfg.lookback, self.cfg.horizon, self.cfg.channels());
        let w = tape.param(store, "backbone.w")?;
        let bias = tape.param(store, "backbone.b")?;
        let x = tape.permute(input, &[0, 2, 1])?;
        let x = tape.reshape(x, &[b * c, l])?;
        let y = tape.matmul(x, w)?;
        let y = tape.add(y, bias)?;
        let y = tape.reshape(y, &[b, c, h])?;
        tape.permute(y, &[0, 2, 1])
    }
}

/// Flatten → hidden (ReLU) → `H · (d_x + 1)`.
pub struct MlpBackbone {
    cfg: BackboneConfig,
}

impl Backbone for MlpBackbone {
    fn config(&self) -> &BackboneConfig {
        &self.cfg
    }

    fn init_params(&self, store: &mut ParamStore, seed: u64) -> Result<()> {
        let mut rng = rng_for(seed, 0);
        let c = self.cfg.channels();
        let (l, h, hid) = (self.cfg.lookback, self.cfg.horizon, self.cfg.hidden);
        store.register("backbone.w1", uniform_weight(&mut rng, l * c, hid))?;
        store.register("backbone.b1", Tensor::zeros(&[hid]))?;
        store.register("backbone.w2", uniform_weight(&mut rng, hid, h * c))?;
        store.register("backbone.b2", Tensor::zeros(&[h * c]))
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["backbone.w1", "backbone.b1", "backbone.w2", "backbone.b2"]
    }

    fn forward_raw(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let b = tape.shape(input)[0];
        let c = self.cfg.channels();
        let (l, h) = (self.cfg.lookback, self.cfg.horizon);
        let x = tape.reshape(input, &[b, l * c])?;
        let out = two_layer(
            tape,
            store,
            x,
            ["backbone.w1", "backbone.b1", "backbone.w2", "backbone.b2"],
        )?;
        tape.reshape(out, &[b, h, c])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggConfig {
    pub horizon: usize,
    pub d_x: usize,
    pub hidden: usize,
}

pub const AGG_PARAMS: [&str; 4] = ["agg.w1", "agg.b1", "agg.w2", "agg.b2"];

impl AggConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.d_x == 0 || self.hidden == 0 {
            return Err(Error::InvalidConfig(format!(
                "aggregation needs horizon, d_x, hidden ≥ 1: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn init_params(&self, store: &mut ParamStore, seed: u64) -> Result<()> {
        self.validate()?;
        let mut rng = rng_for(seed, 1);
        let (h, d, hid) = (self.horizon, self.d_x, self.hidden);
        store.register("agg.w1", uniform_weight(&mut rng, h * d, hid))?;
        store.register("agg.b1", Tensor::zeros(&[hid]))?;
        store.register("agg.w2", uniform_weight(&mut rng, hid, h))?;
        store.register("agg.b2", Tensor::zeros(&[h]))
    }

    /// `[B, H, d_x]` → `[B, H, 1]` correction added to the normalized target forecast.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x_sur_hat: Var) -> Result<Var> {
        let shape = tape.shape(x_sur_hat).to_vec();
        if shape.len() != 3 || shape[1] != self.horizon || shape[2] != self.d_x {
            return Err(Error::shape(&shape, &[0, self.horizon, self.d_x]));
        }
        let b = shape[0];
        let x = tape.reshape(x_sur_hat, &[b, self.horizon * self.d_x])?;
        let out = two_layer(tape, store, x, AGG_PARAMS)?;
        tape.reshape(out, &[b, self.horizon, 1])
    }
}

fn two_layer(tape: &mut Tape, store: &ParamStore, x: Var, names: [&str; 4]) -> Result<Var> {
    let w1 = tape.param(store, names[0])?;
    let b1 = tape.param(store, names[1])?;
    let w2 = tape.param(store, names[2])?;
    let b2 = tape.param(store, names[3])?;
    let h = tape.matmul(x, w1)?;
    let h = tape.add(h, b1)?;
    let h = tape.relu(h)?;
    let out = tape.matmul(h, w2)?;
    tape.add(out, b2)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `[fan_in × fan_out]` drawn uniformly from `±1/√fan_in`.
fn uniform_weight(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let bound = 1.0 / (fan_in as f32).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Tensor::new(&[fan_in, fan_out], data).expect("weight shape")
}
