//! Reversible instance normalization.
//!
//! Each window is standardized per channel with statistics of its own
//! lookback, optionally followed by a learnable per-channel affine map. The
//! forecast is mapped back with the same lookback statistics, so horizon
//! values never influence `mu`/`sigma`.

use crate::error::{Error, Result};
use crate::gradcore::{ParamStore, Tape, Tensor, Var};

pub const DEFAULT_EPS: f32 = 1e-5;
pub const GAMMA_NAME: &str = "revin.gamma";
pub const BETA_NAME: &str = "revin.beta";

/// Lookback statistics of a batch, both `[B, 1, C]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RevinState {
    pub mu: Tensor,
    pub sigma: Tensor,
}

/// Learnable affine nodes bound on a tape, each `[C]`.
#[derive(Clone, Copy, Debug)]
pub struct Affine {
    pub gamma: Var,
    pub beta: Var,
}

impl Affine {
    pub fn bind(tape: &mut Tape, store: &ParamStore) -> Result<Self> {
        Ok(Self {
            gamma: tape.param(store, GAMMA_NAME)?,
            beta: tape.param(store, BETA_NAME)?,
        })
    }
}

/// Registers `revin.gamma = 1` and `revin.beta = 0` for `channels` channels.
pub fn register_params(store: &mut ParamStore, channels: usize) -> Result<()> {
    store.register(GAMMA_NAME, Tensor::ones(&[channels]))?;
    store.register(BETA_NAME, Tensor::zeros(&[channels]))
}

/// Per-window per-channel mean and `sqrt(var + eps)` over the time axis of a
/// `[B, L, C]` tensor (population variance).
pub fn lookback_stats(window: &Tensor, eps: f32) -> Result<RevinState> {
    let &[b, l, c] = window.shape() else {
        return Err(Error::shape(window.shape(), &[0, 0, 0]));
    };
    if l < 2 {
        return Err(Error::WindowTooShort(l));
    }
    let data = window.data();
    let mut mu = Vec::with_capacity(b * c);
    let mut sigma = Vec::with_capacity(b * c);
    for bi in 0..b {
        for ci in 0..c {
            let col = (0..l).map(|t| data[(bi * l + t) * c + ci] as f64);
            let mean = col.clone().sum::<f64>() / l as f64;
            let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / l as f64;
            mu.push(mean as f32);
            sigma.push((var + eps as f64).sqrt() as f32);
        }
    }
    Ok(RevinState {
        mu: Tensor::new(&[b, 1, c], mu)?,
        sigma: Tensor::new(&[b, 1, c], sigma)?,
    })
}

/// `gamma ⊙ (x − mu) / sigma + beta` on a `[B, L, C]` window, with the
/// statistics returned for [`denormalize`]. Without `affine` the output is
/// the plain standardized window.
pub fn normalize(
    tape: &mut Tape,
    window: Var,
    affine: Option<Affine>,
    eps: f32,
) -> Result<(Var, RevinState)> {
    let state = lookback_stats(tape.value(window), eps)?;
    let mu = tape.constant(state.mu.clone());
    let sigma = tape.constant(state.sigma.clone());
    let centered = tape.sub(window, mu)?;
    let mut out = tape.div(centered, sigma)?;
    if let Some(Affine { gamma, beta }) = affine {
        check_channels(tape, gamma, state.mu.shape()[2])?;
        out = tape.mul(out, gamma)?;
        out = tape.add(out, beta)?;
    }
    Ok((out, state))
}

/// `((y − beta) / gamma) · sigma + mu` on a `[B, H, C]` forecast.
pub fn denormalize(
    tape: &mut Tape,
    y: Var,
    state: &RevinState,
    affine: Option<Affine>,
) -> Result<Var> {
    let shape = tape.shape(y).to_vec();
    let sshape = state.mu.shape();
    if shape.len() != 3
        || shape[0] != sshape[0]
        || shape[2] != sshape[2]
        || state.sigma.shape() != sshape
    {
        return Err(Error::shape(&shape, sshape));
    }
    let mut out = y;
    if let Some(Affine { gamma, beta }) = affine {
        check_channels(tape, gamma, shape[2])?;
        if let Some(c) = tape.value(gamma).data().iter().position(|g| g.abs() < 1e-8) {
            return Err(Error::GammaZero(c));
        }
        out = tape.sub(out, beta)?;
        out = tape.div(out, gamma)?;
    }
    let sigma = tape.constant(state.sigma.clone());
    let mu = tape.constant(state.mu.clone());
    out = tape.mul(out, sigma)?;
    tape.add(out, mu)
}

fn check_channels(tape: &Tape, gamma: Var, c: usize) -> Result<()> {
    if tape.shape(gamma) != [c] {
        return Err(Error::shape(tape.shape(gamma), &[c]));
    }
    Ok(())
}
