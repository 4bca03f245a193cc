//! Normalizes a window with lookback statistics and a learnable affine map,
//! then inverts it.
//!
//!     cargo run --example revin_roundtrip

use shifts::gradcore::{ParamStore, Tape, Tensor};
use shifts::revin::{self, Affine};

fn main() -> shifts::Result<()> {
    let (l, c) = (6, 2);
    let data: Vec<f32> = (0..l)
        .flat_map(|t| [100.0 + 5.0 * t as f32, -3.0 + 0.1 * (t as f32).sin()])
        .collect();
    let window = Tensor::new(&[1, l, c], data)?;

    let mut store = ParamStore::new();
    revin::register_params(&mut store, c)?;
    store.set(revin::GAMMA_NAME, Tensor::from_slice(&[2.0, 0.5]))?;
    store.set(revin::BETA_NAME, Tensor::from_slice(&[0.1, -1.0]))?;

    let mut tape = Tape::new();
    let w = tape.constant(window.clone());
    let affine = Affine::bind(&mut tape, &store)?;
    let (z, state) = revin::normalize(&mut tape, w, Some(affine), revin::DEFAULT_EPS)?;
    let back = revin::denormalize(&mut tape, z, &state, Some(affine))?;

    println!("mu {:?}  sigma {:?}", state.mu.data(), state.sigma.data());
    println!("normalized {:?}", tape.value(z).data());
    let err = tape
        .value(back)
        .data()
        .iter()
        .zip(window.data())
        .fold(0f32, |m, (a, b)| m.max((a - b).abs()));
    println!("max round-trip error {err:e}");
    Ok(())
}
