use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcore::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub mae: f64,
    pub n_windows: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_horizon_mse: Option<Vec<f64>>,
}

/// MSE and MAE over all `N · H` entries of `[N, H, 1]` forecasts.
pub fn compute_metrics(pred: &Tensor, truth: &Tensor) -> Result<MetricReport> {
    if pred.shape() != truth.shape() {
        return Err(Error::shape(pred.shape(), truth.shape()));
    }
    let &[n, h, ..] = pred.shape() else {
        return Err(Error::shape(pred.shape(), &[0, 0, 1]));
    };
    if n == 0 || h == 0 {
        return Err(Error::InsufficientData(
            "metrics need at least one window".into(),
        ));
    }
    let inner = pred.numel() / (n * h);
    let mut se = 0f64;
    let mut ae = 0f64;
    let mut per_h = vec![0f64; h];
    for (i, (&p, &t)) in pred.data().iter().zip(truth.data()).enumerate() {
        let d = p as f64 - t as f64;
        se += d * d;
        ae += d.abs();
        per_h[(i / inner) % h] += d * d;
    }
    let total = pred.numel() as f64;
    let per_step = (n * inner) as f64;
    Ok(MetricReport {
        mse: se / total,
        mae: ae / total,
        n_windows: n,
        per_horizon_mse: Some(per_h.into_iter().map(|s| s / per_step).collect()),
    })
}
