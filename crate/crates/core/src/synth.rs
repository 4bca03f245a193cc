//! Synthetic benchmark with planted slice-offset relationships.
//!
//! Exogenous channels are sums of random-phase sinusoids plus AR(1) noise.
//! For a causal channel `c` with offset `k` the target obeys
//! `y[s] = Σ w_c · x_c[s - (L - k)] + ε`, so in every window the target
//! horizon equals the weighted `k`-th horizon-length slice of the
//! concatenated lookback and horizon exogenous series, up to noise.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataio::{write_csv, SeriesDataset};
use crate::error::{Error, Result};

const SINUSOIDS: usize = 3;
const AR_COEF: f64 = 0.9;
const AR_STD: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "slope")]
pub enum Drift {
    None,
    /// Adds `slope · t` to every exogenous channel.
    MeanRamp(f64),
    /// Scales every exogenous channel by `1 + slope · t`.
    VarianceRamp(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub length: usize,
    pub d_x: usize,
    pub lookback: usize,
    pub horizon: usize,
    /// Slice offset in `[0, L]` per channel; `None` marks a decoy.
    pub offsets: Vec<Option<usize>>,
    pub mix_weights: Vec<f64>,
    pub noise_std: f64,
    pub drift: Drift,
    /// Relative increase of every sinusoid frequency from the first to the
    /// last step. Changes the dynamics of the exogenous series (and hence of
    /// the target given its lookback) while the planted relation stays exact.
    #[serde(default)]
    pub concept_drift: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// One causal channel at `offset` (mix 1) followed by one decoy.
    pub fn planted(
        length: usize,
        lookback: usize,
        horizon: usize,
        offset: usize,
        noise_std: f64,
        seed: u64,
    ) -> Self {
        Self {
            length,
            d_x: 2,
            lookback,
            horizon,
            offsets: vec![Some(offset), None],
            mix_weights: vec![1.0, 0.0],
            noise_std,
            drift: Drift::None,
            concept_drift: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleSpec(m));
        let (l, h) = (self.lookback, self.horizon);
        if l == 0 || h == 0 {
            return bad("lookback and horizon must be positive".into());
        }
        if self.length < 4 * (l + h) {
            return bad(format!(
                "length {} < 4·(L+H) = {}",
                self.length,
                4 * (l + h)
            ));
        }
        if self.d_x == 0 {
            return bad("d_x must be positive".into());
        }
        if self.offsets.len() != self.d_x || self.mix_weights.len() != self.d_x {
            return bad(format!(
                "offsets ({}) and mix_weights ({}) must both have d_x = {} entries",
                self.offsets.len(),
                self.mix_weights.len(),
                self.d_x
            ));
        }
        for (c, (o, &w)) in self.offsets.iter().zip(&self.mix_weights).enumerate() {
            match o {
                Some(k) if *k > l => {
                    return bad(format!("channel {c}: offset {k} outside [0, {l}]"))
                }
                None if w != 0.0 => return bad(format!("channel {c}: decoy has mix weight {w}")),
                _ => {}
            }
            if !w.is_finite() {
                return bad(format!("channel {c}: non-finite mix weight"));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!(
                "noise_std must be finite and >= 0, got {}",
                self.noise_std
            ));
        }
        if !self.concept_drift.is_finite() || self.concept_drift <= -1.0 {
            return bad(format!(
                "concept_drift must be > -1, got {}",
                self.concept_drift
            ));
        }
        match self.drift {
            Drift::MeanRamp(s) | Drift::VarianceRamp(s) if !s.is_finite() => {
                bad("drift slope must be finite".into())
            }
            Drift::VarianceRamp(s) if 1.0 + s * (self.length - 1) as f64 <= 0.0 => {
                bad("variance ramp drives the scale to zero".into())
            }
            _ => Ok(()),
        }
    }

    /// The analytic MSE floor of a forecaster that knows the planted relation.
    pub fn noise_floor(&self) -> f64 {
        self.noise_std * self.noise_std
    }
}

/// Generates the dataset for `spec`; equal specs give identical data.
pub fn generate(spec: &SynthSpec) -> Result<SeriesDataset> {
    spec.validate()?;
    let (n, l, d) = (spec.length, spec.lookback, spec.d_x);
    let total = n + l;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ar_noise = Normal::new(0.0, AR_STD).expect("valid std");

    let mut raw = vec![0f64; total * d];
    for c in 0..d {
        let waves: Vec<(f64, f64, f64)> = (0..SINUSOIDS)
            .map(|_| {
                let period = rng.random_range(8.0..48.0);
                let amp = rng.random_range(0.5..1.5);
                let phase = rng.random_range(0.0..TAU);
                (1.0 / period, amp, phase)
            })
            .collect();
        let mut ar = 0f64;
        for s in 0..total {
            // Phase of a linear chirp whose frequency grows by `concept_drift`
            // over the emitted range.
            let u = s as f64;
            let warped = u + spec.concept_drift * u * u / (2.0 * total as f64);
            let wave: f64 = waves
                .iter()
                .map(|&(f, a, p)| a * (TAU * f * warped + p).sin())
                .sum();
            ar = AR_COEF * ar + ar_noise.sample(&mut rng);
            raw[s * d + c] = wave + ar;
        }
    }
    for s in 0..total {
        let t = s as f64 - l as f64;
        for c in 0..d {
            let v = &mut raw[s * d + c];
            match spec.drift {
                Drift::None => {}
                Drift::MeanRamp(slope) => *v += slope * t.max(0.0),
                Drift::VarianceRamp(slope) => *v *= 1.0 + slope * t.max(0.0),
            }
        }
    }

    let noise = Normal::new(0.0, spec.noise_std.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let s = t + l;
        let mut v = 0f64;
        for (c, (o, &w)) in spec.offsets.iter().zip(&spec.mix_weights).enumerate() {
            if let Some(k) = o {
                v += w * raw[(s - (l - k)) * d + c];
            }
        }
        if spec.noise_std > 0.0 {
            v += noise.sample(&mut rng);
        }
        y.push(v as f32);
    }
    let x = raw[l * d..].iter().map(|&v| v as f32).collect();
    let names = (0..d).map(|c| format!("x{c}")).collect();
    SeriesDataset::new(x, y, names, "y")
}

/// Sidecar path for a generated CSV: `data.csv` → `data.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV plus a JSON sidecar holding the generating spec.
pub fn write(spec: &SynthSpec, ds: &SeriesDataset, csv_path: &Path) -> Result<()> {
    write_csv(ds, csv_path)?;
    let json = serde_json::to_string_pretty(spec)?;
    std::fs::write(sidecar_path(csv_path), json + "\n")?;
    Ok(())
}
