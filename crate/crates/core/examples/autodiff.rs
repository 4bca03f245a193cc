//! Reverse-mode differentiation on the tape, checked against a central
//! difference, followed by a few Adam steps on a least-squares fit.
//!
//!     cargo run --example autodiff

use shifts::gradcore::{AdamConfig, ParamStore, Tape, Tensor};

fn loss_at(x: f32) -> f32 {
    let mut tape = Tape::new();
    let v = tape.constant(Tensor::from_slice(&[x, 2.0 * x]));
    let s = tape.softmax(v, 0).unwrap();
    let e = tape.exp(s).unwrap();
    let l = tape.sum(e, None).unwrap();
    tape.value(l).item()
}

fn main() -> shifts::Result<()> {
    let x0 = 0.3f32;
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_slice(&[x0]).with_grad());
    let two = tape.constant(Tensor::from_slice(&[1.0, 2.0]));
    let v = tape.mul(two, x)?;
    let s = tape.softmax(v, 0)?;
    let e = tape.exp(s)?;
    let l = tape.sum(e, None)?;
    tape.backward(l)?;
    let h = 1e-2;
    println!(
        "d/dx sum(exp(softmax([x, 2x]))) at {x0}: tape {:.6}, finite difference {:.6}",
        tape.grad(x).unwrap()[0],
        (loss_at(x0 + h) - loss_at(x0 - h)) / (2.0 * h)
    );

    // Fit w in y = 3x by Adam.
    let mut store = ParamStore::new();
    store.register("w", Tensor::from_slice(&[0.0]))?;
    let xs = Tensor::new(&[4, 1], vec![1.0, 2.0, 3.0, 4.0])?;
    let ys = Tensor::new(&[4, 1], vec![3.0, 6.0, 9.0, 12.0])?;
    let adam = AdamConfig {
        lr: 0.1,
        ..AdamConfig::default()
    };
    for step in 0..200 {
        let mut tape = Tape::new();
        let w = tape.param(&store, "w")?;
        let xv = tape.constant(xs.clone());
        let yv = tape.constant(ys.clone());
        let w = tape.reshape(w, &[1, 1])?;
        let pred = tape.matmul(xv, w)?;
        let loss = tape.mse(pred, yv)?;
        if step % 50 == 0 {
            println!("step {step:>3}: loss {:.4}", tape.value(loss).item());
        }
        tape.backward(loss)?;
        store.collect_grads(&tape);
        store.adam_step(&["w"], &adam)?;
    }
    println!("w = {:.4}", store.tensor("w")?.data()[0]);
    Ok(())
}
