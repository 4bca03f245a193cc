//! Trains briefly, writes a checkpoint, prints its manifest and rebuilds the
//! model from it with the architecture read back from the stored shapes.
//!
//!     cargo run --example checkpoint

use shifts::dataio::{Split, SplitRatios};
use shifts::gradcore::checkpoint;
use shifts::models::{BackboneConfig, BackboneKind};
use shifts::synth::{generate, SynthSpec};
use shifts::trainer::{fit, Mode, ModelConfig, ShiftsModel, TrainConfig};

fn main() -> shifts::Result<()> {
    let (l, h) = (16, 8);
    let ds = generate(&SynthSpec::planted(1500, l, h, 8, 0.1, 0))?
        .chrono_split(SplitRatios::default(), l + h)?
        .standardize()?;
    let backbone = BackboneConfig {
        kind: BackboneKind::Mlp,
        lookback: l,
        horizon: h,
        d_x: 2,
        hidden: 32,
        seed: 0,
    };
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let (model, _) = fit(&ds, &ModelConfig::new(backbone, 16), &cfg)?;

    let dir = std::env::temp_dir().join("shifts-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ckpt");
    checkpoint::save(model.params(), &path)?;

    let bytes = std::fs::read(&path)?;
    let end = bytes
        .windows(2)
        .position(|w| w == b"\n\n")
        .map_or(0, |p| p + 2);
    println!("{} bytes; manifest:", bytes.len());
    print!("{}", String::from_utf8_lossy(&bytes[..end]));

    let restored = ShiftsModel::from_records(checkpoint::load(&path)?, Mode::Shifts)?;
    let a = model.evaluate(&ds, Split::Test, 64)?.mse;
    let b = restored.evaluate(&ds, Split::Test, 64)?.mse;
    println!("test mse before {a:.6}, after reload {b:.6}");
    Ok(())
}
