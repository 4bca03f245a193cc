//! Round-trips a dataset through CSV, splits it chronologically, standardizes
//! with training statistics and iterates shuffled training batches.
//!
//!     cargo run --example windows

use shifts::dataio::{load_csv, write_csv, Split, SplitRatios, TargetColumn, WindowOptions};
use shifts::synth::{generate, SynthSpec};

fn main() -> shifts::Result<()> {
    let (l, h) = (24, 12);
    let ds = generate(&SynthSpec::planted(1000, l, h, 4, 0.1, 2))?;
    let dir = std::env::temp_dir().join("shifts-windows-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("series.csv");
    write_csv(&ds, &path)?;

    let ds = load_csv(&path, &TargetColumn::Name("y".into()))?
        .chrono_split(SplitRatios::default(), l + h)?
        .standardize()?;
    for split in [Split::Train, Split::Val, Split::Test] {
        let (start, end) = ds.segment(split)?;
        println!(
            "{split:?}: rows {start}..{end}, {} windows",
            ds.window_count(split, l, h)?
        );
    }
    let opts = WindowOptions {
        shuffle: true,
        seed: 7,
        ..WindowOptions::ordered(Split::Train, l, h, 32)
    };
    for (i, batch) in ds.make_windows(opts)?.take(3).enumerate() {
        println!(
            "batch {i}: x_l {:?}, y_h {:?}, first anchors {:?}",
            batch.x_l.shape(),
            batch.y_h.shape(),
            &batch.anchor_indices[..4]
        );
    }
    Ok(())
}
