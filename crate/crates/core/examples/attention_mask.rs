//! The mask transform on hand-written logits: softmax per column, drop the
//! entries below the column mean, renormalize. Then the surrogate feature it
//! selects from a toy series.
//!
//!     cargo run --example attention_mask

use shifts::gradcore::{Tape, Tensor};
use shifts::sam::{self, AttentionMask};

fn main() -> shifts::Result<()> {
    // L = 4, so 5 slices; two channels.
    let raw = Tensor::new(
        &[5, 2],
        vec![0.0, 2.0, 0.0, 0.1, 3.0, 0.0, 0.0, 0.0, 0.0, 1.9],
    )?;
    let mask = AttentionMask::from_raw(raw)?;
    print!("{}", mask.to_csv(&["sharp".into(), "split".into()]));

    // One window of length L + H = 6 (H = 2); channel 0 counts up, channel 1 counts down.
    let series: Vec<f32> = (0..6).flat_map(|t| [t as f32, -(t as f32)]).collect();
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::new(&[1, 6, 2], series)?);
    let m = tape.constant(mask.effective.clone());
    let sur = sam::surrogate(&mut tape, x, m)?;
    println!("surrogate [h, channel]: {:?}", tape.value(sur).data());
    Ok(())
}
