//! Joint training of backbone, attention mask, aggregation network and the
//! normalization affine, plus the horizon-free inference path.
//!
//! One step on a batch:
//!
//! 1. normalize the stacked lookback `[X^L, Y^L]` per window and channel
//! 2. forecast `[X̂_SUR, Ŷ]` in the normalized space
//! 3. add the aggregation network's correction `Agg(X̂_SUR)` to `Ŷ`
//! 4. denormalize both heads with the lookback statistics
//! 5. build the surrogate target `X_SUR` from `[X^L, X^H]` and the mask
//! 6. minimize `L_SUR + L_TS` with Adam
//!
//! The ablation modes switch steps 1/4 (normalization) and 3/5 (surrogate
//! machinery) on and off.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataio::{SeriesDataset, Split, WindowBatch, WindowOptions};
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, MetricReport};
use crate::gradcore::{checkpoint, AdamConfig, ParamStore, Tape, Tensor, Var};
use crate::models::{
    AggConfig, Backbone, BackboneConfig, BackboneKind, AGG_PARAMS, DEFAULT_BACKBONE_HIDDEN,
};
use crate::revin::{self, Affine};
use crate::sam;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Backbone alone, no normalization, no surrogate.
    Base,
    /// Plain per-window normalization plus the surrogate machinery.
    CdOnly,
    /// Learnable-affine normalization, no surrogate.
    TsOnly,
    /// Both.
    Shifts,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Base, Mode::CdOnly, Mode::TsOnly, Mode::Shifts];

    pub fn normalizes(self) -> bool {
        self != Mode::Base
    }

    pub fn learnable_affine(self) -> bool {
        matches!(self, Mode::TsOnly | Mode::Shifts)
    }

    pub fn uses_surrogate(self) -> bool {
        matches!(self, Mode::CdOnly | Mode::Shifts)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::CdOnly => "cd_only",
            Mode::TsOnly => "ts_only",
            Mode::Shifts => "shifts",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub patience: usize,
    pub seed: u64,
    pub detach_target: bool,
    /// Weight of the surrogate loss.
    pub lambda_sur: f32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Shifts,
            epochs: 30,
            batch_size: 32,
            adam: AdamConfig::default(),
            patience: 5,
            seed: 0,
            detach_target: false,
            lambda_sur: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs, patience and batch size must be ≥ 1".into(),
            ));
        }
        if !self.adam.lr.is_finite() || self.adam.lr <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.adam.lr
            )));
        }
        if self.lambda_sur.is_nan() || self.lambda_sur < 0.0 {
            return Err(Error::InvalidConfig("lambda_sur must be ≥ 0".into()));
        }
        Ok(())
    }
}

/// Shapes of the networks and the normalization epsilon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backbone: BackboneConfig,
    pub agg: AggConfig,
    pub revin_eps: f32,
}

impl ModelConfig {
    pub fn new(backbone: BackboneConfig, agg_hidden: usize) -> Self {
        Self {
            backbone,
            agg: AggConfig {
                horizon: backbone.horizon,
                d_x: backbone.d_x,
                hidden: agg_hidden,
            },
            revin_eps: revin::DEFAULT_EPS,
        }
    }

    pub fn lookback(&self) -> usize {
        self.backbone.lookback
    }

    pub fn horizon(&self) -> usize {
        self.backbone.horizon
    }

    pub fn d_x(&self) -> usize {
        self.backbone.d_x
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepLosses {
    pub total: f32,
    pub sur: f32,
    pub ts: f32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Zero-based index into `val_mse_curve` of its minimum.
    pub best_epoch: usize,
    pub train_loss_curve: Vec<f64>,
    pub val_mse_curve: Vec<f64>,
    pub wall_time_s: f64,
}

impl FitReport {
    pub fn best_val_mse(&self) -> f64 {
        self.val_mse_curve[self.best_epoch]
    }
}

/// Forward-pass outputs in the data scale.
pub struct Forecast {
    pub x_sur_hat: Var,
    pub y_hat: Var,
}

pub struct ShiftsModel {
    cfg: ModelConfig,
    mode: Mode,
    backbone: Box<dyn Backbone>,
    store: ParamStore,
}

impl Clone for ShiftsModel {
    fn clone(&self) -> Self {
        Self {
            cfg: self.cfg,
            mode: self.mode,
            backbone: self
                .cfg
                .backbone
                .build()
                .expect("validated at construction"),
            store: self.store.clone(),
        }
    }
}

impl ShiftsModel {
    /// Registers every parameter regardless of mode so checkpoints have one layout:
    /// `backbone.*`, `agg.*`, `sam.M`, `revin.gamma`, `revin.beta`.
    pub fn new(cfg: ModelConfig, mode: Mode, seed: u64) -> Result<Self> {
        let bcfg = BackboneConfig {
            seed,
            ..cfg.backbone
        };
        let cfg = ModelConfig {
            backbone: bcfg,
            ..cfg
        };
        if cfg.agg.horizon != bcfg.horizon || cfg.agg.d_x != bcfg.d_x {
            return Err(Error::InvalidConfig(
                "aggregation and backbone disagree on horizon or d_x".into(),
            ));
        }
        let backbone = bcfg.build()?;
        let mut store = ParamStore::new();
        backbone.init_params(&mut store, seed)?;
        cfg.agg.init_params(&mut store, seed)?;
        sam::register_params(&mut store, bcfg.lookback, bcfg.d_x)?;
        revin::register_params(&mut store, bcfg.d_x + 1)?;
        Ok(Self {
            cfg,
            mode,
            backbone,
            store,
        })
    }

    /// Rebuilds a model from checkpoint records, inferring the architecture
    /// from the stored shapes.
    pub fn from_records(records: Vec<(String, Tensor)>, mode: Mode) -> Result<Self> {
        let shape = |name: &str| -> Result<Vec<usize>> {
            records
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.shape().to_vec())
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter `{name}`")))
        };
        let bad = |name: &str, s: &[usize]| {
            Error::Checkpoint(format!("unexpected shape {s:?} for `{name}`"))
        };
        let mask = shape(sam::MASK_NAME)?;
        let &[slices, d_x] = mask.as_slice() else {
            return Err(bad(sam::MASK_NAME, &mask));
        };
        let lookback = slices
            .checked_sub(1)
            .ok_or_else(|| bad(sam::MASK_NAME, &mask))?;
        let agg_w2 = shape("agg.w2")?;
        let &[agg_hidden, horizon] = agg_w2.as_slice() else {
            return Err(bad("agg.w2", &agg_w2));
        };
        let (kind, hidden) = if records.iter().any(|(n, _)| n == "backbone.w") {
            (BackboneKind::Linear, DEFAULT_BACKBONE_HIDDEN)
        } else {
            let w1 = shape("backbone.w1")?;
            let &[_, hidden] = w1.as_slice() else {
                return Err(bad("backbone.w1", &w1));
            };
            (BackboneKind::Mlp, hidden)
        };
        let backbone = BackboneConfig {
            kind,
            lookback,
            horizon,
            d_x,
            hidden,
            seed: 0,
        };
        let mut model = Self::new(ModelConfig::new(backbone, agg_hidden), mode, 0)?;
        checkpoint::restore(&mut model.store, records)?;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Parameters that receive updates in this mode.
    pub fn active_params(&self, cfg: &TrainConfig) -> Vec<&'static str> {
        let mut names = self.backbone.param_names();
        if self.mode.uses_surrogate() {
            names.extend(AGG_PARAMS);
            if !cfg.detach_target {
                names.push(sam::MASK_NAME);
            }
        }
        if self.mode.learnable_affine() {
            names.extend([revin::GAMMA_NAME, revin::BETA_NAME]);
        }
        names
    }

    pub fn attention_mask(&self) -> Result<sam::AttentionMask> {
        sam::AttentionMask::from_store(&self.store)
    }

    /// Normalize → forecast → aggregate → denormalize, reading only the lookback.
    pub fn forward(&self, tape: &mut Tape, x_l: Var, y_l: Var) -> Result<Forecast> {
        let d = self.cfg.d_x();
        let input = tape.concat(&[x_l, y_l], 2)?;
        let affine = if self.mode.learnable_affine() {
            Some(Affine::bind(tape, &self.store)?)
        } else {
            None
        };
        let (input, state) = if self.mode.normalizes() {
            let (n, s) = revin::normalize(tape, input, affine, self.cfg.revin_eps)?;
            (n, Some(s))
        } else {
            (input, None)
        };
        let (x_hat, mut y_hat) = self.backbone.forward(tape, &self.store, input)?;
        if self.mode.uses_surrogate() {
            let correction = self.cfg.agg.forward(tape, &self.store, x_hat)?;
            y_hat = tape.add(y_hat, correction)?;
        }
        let mut out = tape.concat(&[x_hat, y_hat], 2)?;
        if let Some(state) = &state {
            out = revin::denormalize(tape, out, state, affine)?;
        }
        Ok(Forecast {
            x_sur_hat: tape.narrow(out, 2, 0, d)?,
            y_hat: tape.narrow(out, 2, d, 1)?,
        })
    }

    /// Builds the training loss on `tape`; returns `(total, L_SUR, L_TS)` nodes.
    pub fn loss(
        &self,
        tape: &mut Tape,
        batch: &WindowBatch,
        cfg: &TrainConfig,
    ) -> Result<(Var, Option<Var>, Var)> {
        let x_l = tape.constant(batch.x_l.clone());
        let y_l = tape.constant(batch.y_l.clone());
        let y_h = tape.constant(batch.y_h.clone());
        let fc = self.forward(tape, x_l, y_l)?;
        let l_ts = tape.mse(fc.y_hat, y_h)?;
        if !self.mode.uses_surrogate() {
            return Ok((l_ts, None, l_ts));
        }
        let x_h = tape.constant(batch.x_h.clone());
        let x_full = tape.concat(&[x_l, x_h], 1)?;
        let m_raw = tape.param(&self.store, sam::MASK_NAME)?;
        let m_eff = sam::attention_transform(tape, m_raw)?;
        let x_sur = sam::surrogate(tape, x_full, m_eff)?;
        let l_sur = sam::surrogate_loss(tape, x_sur, fc.x_sur_hat, cfg.detach_target)?;
        let weighted = if cfg.lambda_sur == 1.0 {
            l_sur
        } else {
            tape.scale(l_sur, cfg.lambda_sur)?
        };
        let total = tape.add(weighted, l_ts)?;
        Ok((total, Some(l_sur), l_ts))
    }

    /// One optimization step on a training batch.
    pub fn train_step(&mut self, batch: &WindowBatch, cfg: &TrainConfig) -> Result<StepLosses> {
        let mut tape = Tape::new();
        let (total, sur, ts) = self.loss(&mut tape, batch, cfg)?;
        let losses = StepLosses {
            total: tape.value(total).item(),
            sur: sur.map_or(0.0, |v| tape.value(v).item()),
            ts: tape.value(ts).item(),
        };
        tape.backward(total)?;
        self.store.collect_grads(&tape);
        let active = self.active_params(cfg);
        self.store.adam_step(&active, &cfg.adam)?;
        Ok(losses)
    }

    /// Target forecast `[B, H, 1]` from lookback-only inputs.
    pub fn predict(&self, x_l: &Tensor, y_l: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let x = tape.constant(x_l.clone());
        let y = tape.constant(y_l.clone());
        let fc = self.forward(&mut tape, x, y)?;
        Ok(tape.value(fc.y_hat).clone())
    }

    /// Forecasts for every window of a split, in time order, with the matching truths.
    pub fn forecast_split(
        &self,
        ds: &SeriesDataset,
        split: Split,
        batch_size: usize,
    ) -> Result<(Tensor, Tensor)> {
        let (l, h) = (self.cfg.lookback(), self.cfg.horizon());
        let mut preds = Vec::new();
        let mut truth = Vec::new();
        let mut n = 0;
        for batch in ds.make_windows(WindowOptions::ordered(split, l, h, batch_size))? {
            n += batch.len();
            preds.extend_from_slice(self.predict(&batch.x_l, &batch.y_l)?.data());
            truth.extend_from_slice(batch.y_h.data());
        }
        Ok((
            Tensor::new(&[n, h, 1], preds)?,
            Tensor::new(&[n, h, 1], truth)?,
        ))
    }

    pub fn evaluate(
        &self,
        ds: &SeriesDataset,
        split: Split,
        batch_size: usize,
    ) -> Result<MetricReport> {
        let (p, t) = self.forecast_split(ds, split, batch_size)?;
        compute_metrics(&p, &t)
    }
}

/// Shuffle seed of a training epoch.
fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(epoch as u64)
}

/// Trains up to `cfg.epochs` epochs, keeping the parameters of the epoch with
/// the lowest validation MSE and stopping after `cfg.patience` epochs
/// without improvement.
pub fn fit(
    ds: &SeriesDataset,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(ShiftsModel, FitReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let (l, h) = (model_cfg.lookback(), model_cfg.horizon());
    if ds.d_x() != model_cfg.d_x() {
        return Err(Error::InvalidConfig(format!(
            "model expects {} exogenous channels, dataset has {}",
            model_cfg.d_x(),
            ds.d_x()
        )));
    }
    for split in [Split::Train, Split::Val, Split::Test] {
        ds.anchors(split, l, h)?;
    }
    let mut model = ShiftsModel::new(*model_cfg, cfg.mode, cfg.seed)?;
    let mut best: Option<(f64, usize, ParamStore)> = None;
    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();
    let mut stale = 0;
    for epoch in 0..cfg.epochs {
        let stream = ds.make_windows(WindowOptions {
            split: Split::Train,
            lookback: l,
            horizon: h,
            batch_size: cfg.batch_size,
            shuffle: true,
            seed: epoch_seed(cfg.seed, epoch),
        })?;
        let mut sum = 0f64;
        let mut steps = 0usize;
        for batch in stream {
            sum += model.train_step(&batch, cfg)?.total as f64;
            steps += 1;
        }
        train_curve.push(sum / steps.max(1) as f64);
        let val = model.evaluate(ds, Split::Val, cfg.batch_size)?.mse;
        val_curve.push(val);
        match &best {
            Some((b, _, _)) if val.is_nan() || val >= *b => {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((val, epoch, model.store.clone()));
                stale = 0;
            }
        }
    }
    let (_, best_epoch, snapshot) =
        best.ok_or_else(|| Error::InsufficientData("no epoch completed".into()))?;
    model.store = snapshot;
    model.store.zero_grads();
    Ok((
        model,
        FitReport {
            best_epoch,
            train_loss_curve: train_curve,
            val_mse_curve: val_curve,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    ))
}
