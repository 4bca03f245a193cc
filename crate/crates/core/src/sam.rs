//! Soft attention masking over horizon-length slices.
//!
//! The concatenated exogenous series `[X^L, X^H]` of length `L + H` is cut
//! into the `L + 1` contiguous slices of length `H`. A learnable matrix
//! `M_raw` of shape `[L + 1, d_x]` scores the slices of each channel; its
//! columns are pushed through softmax, a mean-threshold sparsity step and L1
//! renormalization. The surrogate feature is the resulting per-channel convex
//! combination of slices.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gradcore::{ParamStore, Tape, Tensor, Var};

pub const MASK_NAME: &str = "sam.M";

/// Registers `sam.M` as `[l + 1, d_x]` zeros (uniform effective mask).
pub fn register_params(store: &mut ParamStore, lookback: usize, d_x: usize) -> Result<()> {
    store.register(MASK_NAME, Tensor::zeros(&[lookback + 1, d_x]))
}

/// `[B, L + H, d]` → `[B, H, L + 1, d]` with `out[b, j, k, c] = series[b, k + j, c]`.
pub fn slice_windows(tape: &mut Tape, series: Var, horizon: usize) -> Result<Var> {
    let shape = tape.shape(series).to_vec();
    let &[b, total, d] = shape.as_slice() else {
        return Err(Error::shape(&shape, &[0, horizon, 0]));
    };
    if horizon == 0 || total < horizon {
        return Err(Error::shape(&shape, &[b, horizon, d]));
    }
    let k = total - horizon + 1;
    let mut index = Vec::with_capacity(b * horizon * k * d);
    for bi in 0..b {
        for j in 0..horizon {
            for ki in 0..k {
                let row = (bi * total + ki + j) * d;
                index.extend(row..row + d);
            }
        }
    }
    tape.gather(series, &[b, horizon, k, d], index)
}

/// Keep-mask of the sparsity step: 1 where a softmax entry is at or above
/// its column mean, else 0.
pub fn sparsity_mask(soft: &Tensor) -> Tensor {
    let &[k, d] = soft.shape() else {
        panic!("sparsity_mask expects a matrix, got {:?}", soft.shape());
    };
    let s = soft.data();
    let mut keep = vec![0f32; k * d];
    for j in 0..d {
        let mean = (0..k).map(|i| s[i * d + j] as f64).sum::<f64>() / k as f64;
        for i in 0..k {
            if s[i * d + j] as f64 - mean >= 0.0 {
                keep[i * d + j] = 1.0;
            }
        }
    }
    Tensor::new(&[k, d], keep).expect("mask shape")
}

/// Column-wise softmax → mean-threshold sparsity → L1 normalization.
///
/// The keep-mask is a constant on the tape, so gradient reaches `m_raw`
/// through the softmax and the normalization only.
pub fn attention_transform(tape: &mut Tape, m_raw: Var) -> Result<Var> {
    if tape.shape(m_raw).len() != 2 {
        return Err(Error::shape(tape.shape(m_raw), &[0, 0]));
    }
    let soft = tape.softmax(m_raw, 0)?;
    let keep = sparsity_mask(tape.value(soft));
    let sparse = tape.mask_mul(soft, &keep)?;
    let norm = tape.sum(sparse, Some(0))?;
    tape.div(sparse, norm)
}

/// `X_SUR[b, h, c] = Σ_k M_eff[k, c] · slices[b, h, k, c]` for
/// `x_full: [B, L + H, d]` and `m_eff: [L + 1, d]`.
pub fn surrogate(tape: &mut Tape, x_full: Var, m_eff: Var) -> Result<Var> {
    let xs = tape.shape(x_full).to_vec();
    let ms = tape.shape(m_eff).to_vec();
    if xs.len() != 3 || ms.len() != 2 || ms[1] != xs[2] || ms[0] == 0 || ms[0] > xs[1] {
        return Err(Error::shape(&xs, &ms));
    }
    let horizon = xs[1] + 1 - ms[0];
    let slices = slice_windows(tape, x_full, horizon)?;
    let weighted = tape.mul(slices, m_eff)?;
    tape.sum(weighted, Some(2))
}

/// `mse(X_SUR, X̂_SUR)`. With `detach_target` the surrogate side is a
/// constant, so this loss sends nothing to the attention mask.
pub fn surrogate_loss(
    tape: &mut Tape,
    x_sur: Var,
    x_sur_hat: Var,
    detach_target: bool,
) -> Result<Var> {
    let target = if detach_target {
        tape.detach(x_sur)
    } else {
        x_sur
    };
    tape.mse(x_sur_hat, target)
}

/// Raw logits together with their effective (transformed) mask.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMask {
    pub raw: Tensor,
    pub effective: Tensor,
}

impl AttentionMask {
    pub fn from_raw(raw: Tensor) -> Result<Self> {
        let mut tape = Tape::new();
        let r = tape.constant(raw.clone());
        let e = attention_transform(&mut tape, r)?;
        let effective = tape.value(e).clone();
        Ok(Self { raw, effective })
    }

    pub fn from_store(store: &ParamStore) -> Result<Self> {
        Self::from_raw(store.tensor(MASK_NAME)?.clone())
    }

    pub fn slices(&self) -> usize {
        self.effective.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.effective.shape()[1]
    }

    pub fn column(&self, c: usize) -> Vec<f32> {
        (0..self.slices())
            .map(|k| self.effective.get(&[k, c]))
            .collect()
    }

    /// `[(L+1) × d_x]` CSV with a `slice` index column and one column per channel.
    pub fn to_csv(&self, channel_names: &[String]) -> String {
        let mut out = String::from("slice");
        for c in 0..self.channels() {
            let name = channel_names
                .get(c)
                .cloned()
                .unwrap_or_else(|| format!("x{c}"));
            out.push(',');
            out.push_str(&name);
        }
        out.push('\n');
        for k in 0..self.slices() {
            let _ = write!(out, "{k}");
            for c in 0..self.channels() {
                let _ = write!(out, ",{}", self.effective.get(&[k, c]));
            }
            out.push('\n');
        }
        out
    }
}
