//! Plug-in mutual information between horizon exogenous features and the
//! horizon target, averaged over training windows.

use serde::{Deserialize, Serialize};

use crate::dataio::{SeriesDataset, Split};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MIReport {
    pub channel_names: Vec<String>,
    /// Nats, averaged over training windows.
    pub per_feature_mi: Vec<f64>,
    pub max_feature: usize,
    pub max_mi: f64,
    pub bins: usize,
    pub n_windows: usize,
}

/// Equal-mass bin of each sample: `⌊rank · bins / n⌋` where `rank` counts the
/// strictly smaller samples, so ties share a bin and any strictly monotone
/// transform leaves the assignment unchanged.
pub fn quantile_bins(values: &[f32], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0usize; n];
    let mut rank = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && values[i] != values[order[pos - 1]] {
            rank = pos;
        }
        out[i] = (rank * bins / n).min(bins - 1);
    }
    out
}

/// Plug-in MI (nats) of two equally long samples on a `bins × bins`
/// quantile histogram; empty cells contribute nothing. Clipped at 0.
pub fn plugin_mi(x: &[f32], y: &[f32], bins: usize) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let bx = quantile_bins(x, bins);
    let by = quantile_bins(y, bins);
    let mut joint = vec![0usize; bins * bins];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; bins];
    for (&i, &j) in bx.iter().zip(&by) {
        joint[i * bins + j] += 1;
        px[i] += 1;
        py[j] += 1;
    }
    let nf = n as f64;
    let mut mi = 0f64;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / nf;
            mi += pxy * (pxy * nf * nf / (px[i] as f64 * py[j] as f64)).ln();
        }
    }
    mi.max(0.0)
}

/// For every training window and exogenous channel, MI between the `H`
/// paired horizon samples of that channel and of the target; averaged over
/// windows per channel.
pub fn mutual_information(
    ds: &SeriesDataset,
    lookback: usize,
    horizon: usize,
    bins: usize,
) -> Result<MIReport> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let anchors = ds
        .anchors(Split::Train, lookback, horizon)
        .map_err(|e| Error::InsufficientData(e.to_string()))?;
    let d = ds.d_x();
    let mut sums = vec![0f64; d];
    let mut xs = vec![0f32; horizon];
    for &t in &anchors {
        let ys = &ds.y()[t + 1..t + 1 + horizon];
        for (c, sum) in sums.iter_mut().enumerate() {
            for (j, x) in xs.iter_mut().enumerate() {
                *x = ds.x_at(t + 1 + j, c);
            }
            *sum += plugin_mi(&xs, ys, bins);
        }
    }
    let n = anchors.len() as f64;
    let per_feature_mi: Vec<f64> = sums.into_iter().map(|s| s / n).collect();
    let (max_feature, max_mi) =
        per_feature_mi
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    Ok(MIReport {
        channel_names: ds.channel_names.clone(),
        per_feature_mi,
        max_feature,
        max_mi,
        bins,
        n_windows: anchors.len(),
    })
}
