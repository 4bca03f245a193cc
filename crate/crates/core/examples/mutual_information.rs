//! Mutual-information diagnostic on a synthetic series with one causal and
//! one decoy exogenous channel.
//!
//!     cargo run --example mutual_information -- [horizon] [bins]

use shifts::dataio::SplitRatios;
use shifts::eval::mutual_information;
use shifts::synth::{generate, SynthSpec};

fn main() -> shifts::Result<()> {
    let mut args = std::env::args().skip(1);
    let h: usize = args
        .next()
        .map_or(336, |a| a.parse().expect("horizon must be an integer"));
    let bins: usize = args
        .next()
        .map_or(8, |a| a.parse().expect("bins must be an integer"));
    let l = 96;
    let spec = SynthSpec::planted(12 * (l + h), l, h, l, 0.1, 0);
    let ds = generate(&spec)?
        .chrono_split(SplitRatios::default(), l + h)?
        .standardize()?;
    let report = mutual_information(&ds, l, h, bins)?;
    for (name, mi) in report.channel_names.iter().zip(&report.per_feature_mi) {
        println!("{name:<4} {mi:.4} nats");
    }
    println!("upper bound log(bins) = {:.4}", (bins as f64).ln());
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
