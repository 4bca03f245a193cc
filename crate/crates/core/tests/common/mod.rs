//! Shared test support: random tensors, a central finite-difference checker
//! and plain-loop reference implementations.

#![allow(dead_code)]

pub mod gradcases;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shifts::gradcore::{ParamStore, Tape, Tensor, Var};

/// Large enough that `f32` rounding of the loss stays well below the
/// tolerance, small enough that the `O(h²)` truncation error does too.
pub const FD_STEP: f64 = 1e-2;
pub const GRAD_TOL: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f32, hi: f32) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Entries with magnitude in `[lo, hi)` and random sign.
pub fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize], lo: f32, hi: f32) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let v = rng.random_range(lo..hi);
            if rng.random_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    Tensor::new(shape, data).unwrap()
}

/// Scalar probe `Σ r ⊙ f(...)` with a fixed random `r`, so every output
/// entry contributes to the checked gradient.
fn probe(tape: &mut Tape, out: Var, weights: &Tensor) -> Var {
    let r = tape.constant(weights.clone());
    let prod = tape.mul(out, r).unwrap();
    tape.sum(prod, None).unwrap()
}

/// Relative error `‖a − n‖₂ / max(‖a‖₂, ‖n‖₂)` between the analytic and the
/// central-difference gradient of a random projection of `f`, taken jointly
/// over every input tensor and every parameter in `store`. Returns 0 when
/// both gradients vanish.
pub fn grad_check_with<F>(store: &ParamStore, inputs: &[Tensor], seed: u64, f: F) -> f64
where
    F: Fn(&mut Tape, &ParamStore, &[Var]) -> Var,
{
    type Eval = (f64, Tensor, Tape, Vec<Var>, Var);
    let eval = |store: &ParamStore, inputs: &[Tensor], weights: Option<&Tensor>| -> Eval {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs
            .iter()
            .map(|t| tape.leaf(t.clone().with_grad()))
            .collect();
        let out = f(&mut tape, store, &vars);
        let shape = tape.shape(out).to_vec();
        let w = weights
            .cloned()
            .unwrap_or_else(|| uniform(&mut rng(seed ^ 0x5eed), &shape, -1.0, 1.0));
        let loss = probe(&mut tape, out, &w);
        (tape.value(loss).item() as f64, w, tape, vars, loss)
    };

    let (_, weights, mut tape, vars, loss) = eval(store, inputs, None);
    tape.backward(loss).unwrap();
    let mut analytic: Vec<f64> = Vec::new();
    for v in &vars {
        match tape.grad(*v) {
            Some(g) => analytic.extend(g.iter().map(|&g| g as f64)),
            None => analytic.extend(std::iter::repeat_n(0.0, tape.value(*v).numel())),
        }
    }
    let mut grad_store = store.clone();
    grad_store.zero_grads();
    grad_store.collect_grads(&tape);
    for p in grad_store.iter() {
        match &p.tensor.grad {
            Some(g) => analytic.extend(g.iter().map(|&g| g as f64)),
            None => analytic.extend(std::iter::repeat_n(0.0, p.tensor.numel())),
        }
    }

    let mut numeric: Vec<f64> = Vec::with_capacity(analytic.len());
    let central = |plus: f64, minus: f64| (plus - minus) / (2.0 * FD_STEP);
    for i in 0..inputs.len() {
        for j in 0..inputs[i].numel() {
            let mut shifted = inputs.to_vec();
            let x = shifted[i].data()[j];
            shifted[i].data_mut()[j] = (x as f64 + FD_STEP) as f32;
            let plus = eval(store, &shifted, Some(&weights)).0;
            shifted[i].data_mut()[j] = (x as f64 - FD_STEP) as f32;
            let minus = eval(store, &shifted, Some(&weights)).0;
            numeric.push(central(plus, minus));
        }
    }
    let names: Vec<String> = store.names().map(str::to_string).collect();
    for name in &names {
        let n = store.tensor(name).unwrap().numel();
        for j in 0..n {
            let mut s = store.clone();
            let mut t = s.tensor(name).unwrap().clone();
            let x = t.data()[j];
            t.data_mut()[j] = (x as f64 + FD_STEP) as f32;
            s.set(name, t.clone()).unwrap();
            let plus = eval(&s, inputs, Some(&weights)).0;
            t.data_mut()[j] = (x as f64 - FD_STEP) as f32;
            s.set(name, t).unwrap();
            let minus = eval(&s, inputs, Some(&weights)).0;
            numeric.push(central(plus, minus));
        }
    }
    relative_error(&analytic, &numeric)
}

pub fn grad_check<F>(inputs: &[Tensor], seed: u64, f: F) -> f64
where
    F: Fn(&mut Tape, &[Var]) -> Var,
{
    grad_check_with(&ParamStore::new(), inputs, seed, |t, _, v| f(t, v))
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Softmax → keep entries at or above the column mean → divide by the kept
/// sum, evaluated directly in `f64` for one column.
pub fn mask_column_oracle(raw: &[f64]) -> Vec<f64> {
    let mut max = f64::NEG_INFINITY;
    for &v in raw {
        if v > max {
            max = v;
        }
    }
    let mut soft = vec![0.0; raw.len()];
    let mut z = 0.0;
    for i in 0..raw.len() {
        soft[i] = (raw[i] - max).exp();
        z += soft[i];
    }
    for s in soft.iter_mut() {
        *s /= z;
    }
    let mut mean = 0.0;
    for &s in &soft {
        mean += s;
    }
    mean /= raw.len() as f64;
    let mut kept_sum = 0.0;
    for s in soft.iter_mut() {
        if *s < mean {
            *s = 0.0;
        }
        kept_sum += *s;
    }
    soft.iter().map(|s| s / kept_sum).collect()
}

/// `out[b, h, c] = Σ_k mask[k, c] · x[b, k + h, c]` by explicit loops.
pub fn surrogate_oracle(
    x: &[f32],
    b: usize,
    l: usize,
    h: usize,
    d: usize,
    mask: &[f32],
) -> Vec<f64> {
    let total = l + h;
    let mut out = vec![0.0; b * h * d];
    for bi in 0..b {
        for hi in 0..h {
            for c in 0..d {
                let mut acc = 0.0;
                for k in 0..=l {
                    acc += mask[k * d + c] as f64 * x[(bi * total + k + hi) * d + c] as f64;
                }
                out[(bi * h + hi) * d + c] = acc;
            }
        }
    }
    out
}
