//! Generates a drifting synthetic series, trains the full model with the mlp
//! backbone and prints test metrics plus one forecast against the truth.
//!
//!     cargo run --example forecast

use shifts::dataio::{Split, SplitRatios};
use shifts::models::{BackboneConfig, BackboneKind};
use shifts::synth::{generate, Drift, SynthSpec};
use shifts::trainer::{fit, Mode, ModelConfig, TrainConfig};

fn main() -> shifts::Result<()> {
    let (l, h) = (32, 8);
    let spec = SynthSpec {
        drift: Drift::MeanRamp(0.001),
        ..SynthSpec::planted(3000, l, h, l - h, 0.1, 1)
    };
    let ds = generate(&spec)?
        .chrono_split(SplitRatios::default(), l + h)?
        .standardize()?;
    let backbone = BackboneConfig {
        kind: BackboneKind::Mlp,
        lookback: l,
        horizon: h,
        d_x: ds.d_x(),
        hidden: 64,
        seed: 0,
    };
    let cfg = TrainConfig {
        mode: Mode::Shifts,
        epochs: 20,
        ..TrainConfig::default()
    };
    let (model, report) = fit(&ds, &ModelConfig::new(backbone, 32), &cfg)?;
    println!(
        "trained {} epochs, best {} (val mse {:.4}) in {:.1}s",
        report.val_mse_curve.len(),
        report.best_epoch,
        report.best_val_mse(),
        report.wall_time_s
    );
    let test = model.evaluate(&ds, Split::Test, 64)?;
    println!(
        "test mse {:.4}  mae {:.4} over {} windows",
        test.mse, test.mae, test.n_windows
    );

    let t = ds.anchors(Split::Test, l, h)?[0];
    let batch = ds.batch(&[t], l, h);
    let pred = model.predict(&batch.x_l, &batch.y_l)?;
    println!("first test window (standardized scale):");
    for (j, (p, y)) in pred.data().iter().zip(batch.y_h.data()).enumerate() {
        println!("  t+{:<2} forecast {p:>7.3}  truth {y:>7.3}", j + 1);
    }
    Ok(())
}
