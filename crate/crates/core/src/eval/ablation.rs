//! Four-way ablation: base, cd_only, ts_only, shifts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{SeriesDataset, Split};
use crate::error::{Error, Result};
use crate::trainer::{fit, Mode, ModelConfig, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: Mode,
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub runs: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub summary: Vec<ModeSummary>,
}

impl AblationTable {
    pub fn summary_for(&self, mode: Mode) -> Option<&ModeSummary> {
        self.summary.iter().find(|s| s.mode == mode)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,seed,mse,mae\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.mode, r.seed, r.mse, r.mae));
        }
        out
    }
}

/// Trains every mode for every seed on identical data and initialization
/// seeds and reports test-split MSE/MAE. `threads` caps parallel runs
/// (`None` uses rayon's default); results do not depend on it.
pub fn run_ablation(
    ds: &SeriesDataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seeds: &[u64],
    threads: Option<usize>,
) -> Result<AblationTable> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "ablation needs at least one seed".into(),
        ));
    }
    let jobs: Vec<(Mode, u64)> = Mode::ALL
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let run = |&(mode, seed): &(Mode, u64)| -> Result<AblationRow> {
        let cfg = TrainConfig {
            mode,
            seed,
            ..*train_cfg
        };
        let (model, _) = fit(ds, model_cfg, &cfg)?;
        let m = model.evaluate(ds, Split::Test, cfg.batch_size)?;
        Ok(AblationRow {
            mode,
            seed,
            mse: m.mse,
            mae: m.mae,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let rows: Vec<AblationRow> =
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?;
    let summary = Mode::ALL
        .iter()
        .map(|&mode| {
            let mse: Vec<f64> = rows
                .iter()
                .filter(|r| r.mode == mode)
                .map(|r| r.mse)
                .collect();
            let mae: Vec<f64> = rows
                .iter()
                .filter(|r| r.mode == mode)
                .map(|r| r.mae)
                .collect();
            let (mse_mean, mse_std) = mean_std(&mse);
            let (mae_mean, mae_std) = mean_std(&mae);
            ModeSummary {
                mode,
                runs: mse.len(),
                mse_mean,
                mse_std,
                mae_mean,
                mae_std,
            }
        })
        .collect();
    Ok(AblationTable { rows, summary })
}

/// Mean and sample standard deviation (0 for a single value).
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
