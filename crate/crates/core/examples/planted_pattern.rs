//! Plants a lagged copy of one exogenous channel in the target next to a
//! decoy channel, trains in shifts mode and prints the learned mask column
//! of the causal channel.
//!
//!     cargo run --example planted_pattern -- [offset] [seeds]

use shifts::dataio::SplitRatios;
use shifts::models::{BackboneConfig, BackboneKind};
use shifts::synth::{generate, SynthSpec};
use shifts::trainer::{fit, Mode, ModelConfig, TrainConfig};

fn main() -> shifts::Result<()> {
    let mut args = std::env::args().skip(1);
    let offset: usize = args
        .next()
        .map_or(16, |a| a.parse().expect("offset must be an integer"));
    let seeds: u64 = args
        .next()
        .map_or(3, |a| a.parse().expect("seed count must be an integer"));
    let (l, h) = (16, 8);
    for seed in 0..seeds {
        let spec = SynthSpec::planted(4000, l, h, offset, 0.1, seed);
        let ds = generate(&spec)?
            .chrono_split(SplitRatios::default(), l + h)?
            .standardize()?;
        let backbone = BackboneConfig {
            kind: BackboneKind::Linear,
            lookback: l,
            horizon: h,
            d_x: 2,
            hidden: 128,
            seed,
        };
        let cfg = TrainConfig {
            mode: Mode::Shifts,
            seed,
            ..TrainConfig::default()
        };
        let (model, report) = fit(&ds, &ModelConfig::new(backbone, 64), &cfg)?;
        let col = model.attention_mask()?.column(0);
        let (top, w) = col
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0f32), |b, (k, w)| if w > b.1 { (k, w) } else { b });
        println!(
            "seed {seed}: weight at planted slice {offset} = {:.3}; heaviest slice {top} ({w:.3}); best val mse {:.4} (epoch {})",
            col[offset],
            report.best_val_mse(),
            report.best_epoch
        );
        let cells: Vec<String> = col.iter().map(|w| format!("{w:.2}")).collect();
        println!("  causal column: [{}]", cells.join(" "));
    }
    Ok(())
}
