//! Random gradient-check cases, one generator per operation or network.
//! Each generator draws a fresh instance from `r` and returns the relative
//! error of its analytic gradient.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use shifts::gradcore::{ParamStore, Tape, Tensor, Var};
use shifts::models::{AggConfig, BackboneConfig, BackboneKind};
use shifts::{revin, sam};

use super::{away_from_zero, grad_check, grad_check_with, rng, uniform};

pub type Case = fn(&mut ChaCha8Rng, u64) -> f64;

pub const CASES_PER_CHECK: u64 = 100;

/// Worst relative error and the case that produced it over
/// `CASES_PER_CHECK` seeded instances.
pub fn worst_case(name: &str, case: Case) -> (f64, u64) {
    let mut worst = (0.0f64, 0u64);
    for seed in 0..CASES_PER_CHECK {
        let mut r = rng(seed.wrapping_mul(0x9e37_79b9) ^ name.len() as u64);
        let err = case(&mut r, seed);
        assert!(err.is_finite(), "{name}: non-finite error at case {seed}");
        if err > worst.0 {
            worst = (err, seed);
        }
    }
    worst
}

fn dims(r: &mut ChaCha8Rng, rank: usize) -> Vec<usize> {
    (0..rank).map(|_| r.random_range(1..=4)).collect()
}

/// A shape `b` broadcastable onto `a`: a suffix of `a` with some axes set to 1.
fn broadcast_shape(r: &mut ChaCha8Rng, a: &[usize]) -> Vec<usize> {
    let drop = r.random_range(0..=a.len());
    a[drop..]
        .iter()
        .map(|&n| if r.random_bool(0.3) { 1 } else { n })
        .collect()
}

fn binary_case(
    r: &mut ChaCha8Rng,
    seed: u64,
    op: fn(&mut Tape, Var, Var) -> Var,
    positive_rhs: bool,
) -> f64 {
    let rank = r.random_range(1..=3);
    let sa = dims(r, rank);
    let sb = broadcast_shape(r, &sa);
    let (sa, sb) = if r.random_bool(0.5) || positive_rhs {
        (sa, sb)
    } else {
        (sa.clone(), sa)
    };
    let a = uniform(r, &sa, -1.0, 1.0);
    let b = if positive_rhs {
        away_from_zero(r, &sb, 0.5, 2.0)
    } else {
        uniform(r, &sb, -1.0, 1.0)
    };
    grad_check(&[a, b], seed, |t, v| op(t, v[0], v[1]))
}

pub fn add(r: &mut ChaCha8Rng, s: u64) -> f64 {
    binary_case(r, s, |t, a, b| t.add(a, b).unwrap(), false)
}

pub fn sub(r: &mut ChaCha8Rng, s: u64) -> f64 {
    binary_case(r, s, |t, a, b| t.sub(a, b).unwrap(), false)
}

pub fn mul(r: &mut ChaCha8Rng, s: u64) -> f64 {
    binary_case(r, s, |t, a, b| t.mul(a, b).unwrap(), false)
}

pub fn div(r: &mut ChaCha8Rng, s: u64) -> f64 {
    binary_case(r, s, |t, a, b| t.div(a, b).unwrap(), true)
}

pub fn relu(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 2);
    // Kept well away from the kink, where the derivative is undefined.
    let x = away_from_zero(r, &shape, 0.05, 1.5);
    grad_check(&[x], s, |t, v| t.relu(v[0]).unwrap())
}

pub fn exp(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 2);
    grad_check(&[uniform(r, &shape, -2.0, 2.0)], s, |t, v| {
        t.exp(v[0]).unwrap()
    })
}

pub fn log(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 2);
    grad_check(&[uniform(r, &shape, 0.5, 3.0)], s, |t, v| {
        t.log(v[0]).unwrap()
    })
}

pub fn scale(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 3);
    let c: f32 = r.random_range(-3.0..3.0);
    grad_check(&[uniform(r, &shape, -1.0, 1.0)], s, |t, v| {
        t.scale(v[0], c).unwrap()
    })
}

pub fn mask_mul(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 3);
    let n: usize = shape.iter().product();
    let mask = Tensor::new(
        &shape,
        (0..n)
            .map(|_| if r.random_bool(0.5) { 1.0 } else { 0.0 })
            .collect(),
    )
    .unwrap();
    grad_check(&[uniform(r, &shape, -1.0, 1.0)], s, |t, v| {
        t.mask_mul(v[0], &mask).unwrap()
    })
}

pub fn matmul(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (m, k, n) = (
        r.random_range(1..=5),
        r.random_range(1..=5),
        r.random_range(1..=5),
    );
    let a = uniform(r, &[m, k], -1.0, 1.0);
    let b = uniform(r, &[k, n], -1.0, 1.0);
    grad_check(&[a, b], s, |t, v| t.matmul(v[0], v[1]).unwrap())
}

pub fn softmax(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let rank = r.random_range(1..=3);
    let shape = dims(r, rank);
    let axis = r.random_range(0..rank);
    grad_check(&[uniform(r, &shape, -2.0, 2.0)], s, |t, v| {
        t.softmax(v[0], axis).unwrap()
    })
}

fn reduce(r: &mut ChaCha8Rng, s: u64, mean: bool) -> f64 {
    let rank = r.random_range(1..=3);
    let shape = dims(r, rank);
    let axis = if r.random_bool(0.3) {
        None
    } else {
        Some(r.random_range(0..rank))
    };
    grad_check(&[uniform(r, &shape, -1.0, 1.0)], s, |t, v| {
        if mean {
            t.mean(v[0], axis).unwrap()
        } else {
            t.sum(v[0], axis).unwrap()
        }
    })
}

pub fn sum(r: &mut ChaCha8Rng, s: u64) -> f64 {
    reduce(r, s, false)
}

pub fn mean(r: &mut ChaCha8Rng, s: u64) -> f64 {
    reduce(r, s, true)
}

pub fn mse(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 3);
    let p = uniform(r, &shape, -1.0, 1.0);
    let q = uniform(r, &shape, -1.0, 1.0);
    grad_check(&[p, q], s, |t, v| t.mse(v[0], v[1]).unwrap())
}

pub fn gather(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 2);
    let n: usize = shape.iter().product();
    let out = dims(r, 2);
    let m: usize = out.iter().product();
    let index: Vec<usize> = (0..m).map(|_| r.random_range(0..n)).collect();
    grad_check(&[uniform(r, &shape, -1.0, 1.0)], s, |t, v| {
        t.gather(v[0], &out, index.clone()).unwrap()
    })
}

pub fn permute(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 3);
    let mut perm = vec![0, 1, 2];
    perm.shuffle(r);
    grad_check(&[uniform(r, &shape, -1.0, 1.0)], s, |t, v| {
        t.permute(v[0], &perm).unwrap()
    })
}

pub fn narrow(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 3);
    let axis = r.random_range(0..3);
    let start = r.random_range(0..shape[axis]);
    let len = r.random_range(1..=shape[axis] - start);
    grad_check(&[uniform(r, &shape, -1.0, 1.0)], s, |t, v| {
        t.narrow(v[0], axis, start, len).unwrap()
    })
}

pub fn concat(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let shape = dims(r, 3);
    let axis = r.random_range(0..3);
    let parts: Vec<Tensor> = (0..r.random_range(1..=3))
        .map(|_| {
            let mut sh = shape.clone();
            sh[axis] = r.random_range(1..=3);
            uniform(r, &sh, -1.0, 1.0)
        })
        .collect();
    grad_check(&parts, s, |t, v| t.concat(v, axis).unwrap())
}

pub fn reshape(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (a, b, c) = (
        r.random_range(1..=4),
        r.random_range(1..=4),
        r.random_range(1..=4),
    );
    grad_check(&[uniform(r, &[a, b, c], -1.0, 1.0)], s, |t, v| {
        let x = t.reshape(v[0], &[a * b, c]).unwrap();
        // A second op so the reshape gradient meets a non-trivial consumer.
        t.exp(x).unwrap()
    })
}

pub fn slice_windows(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (b, l, h, d) = (
        r.random_range(1..=2),
        r.random_range(1..=5),
        r.random_range(1..=3),
        r.random_range(1..=3),
    );
    grad_check(&[uniform(r, &[b, l + h, d], -1.0, 1.0)], s, |t, v| {
        sam::slice_windows(t, v[0], h).unwrap()
    })
}

/// Raw mask logits whose softmax entries sit clear of the column mean, so
/// the finite-difference step cannot flip the keep decision.
fn mask_logits(r: &mut ChaCha8Rng, k: usize, d: usize) -> Tensor {
    loop {
        let raw = uniform(r, &[k, d], -2.0, 2.0);
        let mut tape = Tape::new();
        let v = tape.constant(raw.clone());
        let soft = tape.softmax(v, 0).unwrap();
        let p = tape.value(soft).data().to_vec();
        let clear = (0..d).all(|c| {
            let col: Vec<f32> = (0..k).map(|i| p[i * d + c]).collect();
            let mean = col.iter().sum::<f32>() / k as f32;
            let top = col.iter().cloned().fold(0.0, f32::max);
            col.iter().all(|&x| (x - mean).abs() > 0.05 * top)
        });
        if clear {
            return raw;
        }
    }
}

pub fn attention_transform(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (k, d) = (r.random_range(2..=8), r.random_range(1..=3));
    grad_check(&[mask_logits(r, k, d)], s, |t, v| {
        sam::attention_transform(t, v[0]).unwrap()
    })
}

pub fn surrogate(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (b, l, h, d) = (
        r.random_range(1..=2),
        r.random_range(1..=5),
        r.random_range(1..=3),
        r.random_range(1..=3),
    );
    let x = uniform(r, &[b, l + h, d], -1.0, 1.0);
    let m = mask_logits(r, l + 1, d);
    grad_check(&[x, m], s, |t, v| {
        let eff = sam::attention_transform(t, v[1]).unwrap();
        sam::surrogate(t, v[0], eff).unwrap()
    })
}

fn sur_loss(r: &mut ChaCha8Rng, s: u64, detach: bool) -> f64 {
    let (b, h, d) = (
        r.random_range(1..=3),
        r.random_range(1..=4),
        r.random_range(1..=3),
    );
    let x = uniform(r, &[b, h, d], -1.0, 1.0);
    let x_hat = uniform(r, &[b, h, d], -1.0, 1.0);
    if detach {
        // The detached target is a constant; only the prediction is differentiated.
        grad_check(&[x_hat], s, |t, v| {
            let target = t.leaf(x.clone().with_grad());
            sam::surrogate_loss(t, target, v[0], true).unwrap()
        })
    } else {
        grad_check(&[x, x_hat], s, |t, v| {
            sam::surrogate_loss(t, v[0], v[1], false).unwrap()
        })
    }
}

pub fn surrogate_loss(r: &mut ChaCha8Rng, s: u64) -> f64 {
    sur_loss(r, s, false)
}

pub fn surrogate_loss_detached(r: &mut ChaCha8Rng, s: u64) -> f64 {
    sur_loss(r, s, true)
}

fn revin_store(r: &mut ChaCha8Rng, c: usize) -> ParamStore {
    let mut store = ParamStore::new();
    revin::register_params(&mut store, c).unwrap();
    store
        .set(revin::GAMMA_NAME, away_from_zero(r, &[c], 0.5, 2.0))
        .unwrap();
    store
        .set(revin::BETA_NAME, uniform(r, &[c], -1.0, 1.0))
        .unwrap();
    store
}

/// Lookback statistics are constants of the window, so the checks
/// differentiate the affine parameters and the forecast, not the window.
pub fn revin_normalize(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (b, l, c) = (
        r.random_range(1..=3),
        r.random_range(2..=6),
        r.random_range(1..=3),
    );
    let window = uniform(r, &[b, l, c], -2.0, 2.0);
    let store = revin_store(r, c);
    grad_check_with(&store, &[], s, |t, st, _| {
        let w = t.constant(window.clone());
        let affine = revin::Affine::bind(t, st).unwrap();
        revin::normalize(t, w, Some(affine), revin::DEFAULT_EPS)
            .unwrap()
            .0
    })
}

pub fn revin_denormalize(r: &mut ChaCha8Rng, s: u64) -> f64 {
    let (b, l, h, c) = (
        r.random_range(1..=3),
        r.random_range(2..=6),
        r.random_range(1..=4),
        r.random_range(1..=3),
    );
    let state =
        revin::lookback_stats(&uniform(r, &[b, l, c], -2.0, 2.0), revin::DEFAULT_EPS).unwrap();
    let y = uniform(r, &[b, h, c], -1.0, 1.0);
    let store = revin_store(r, c);
    grad_check_with(&store, &[y], s, |t, st, v| {
        let affine = revin::Affine::bind(t, st).unwrap();
        revin::denormalize(t, v[0], &state, Some(affine)).unwrap()
    })
}

/// Forward pass value of `x @ w + b` for every row, used to reject cases
/// whose ReLU inputs land near zero.
fn clear_of_kink(x: &[f32], rows: usize, w: &Tensor, b: &Tensor) -> bool {
    let (k, n) = (w.shape()[0], w.shape()[1]);
    (0..rows).all(|i| {
        (0..n).all(|j| {
            let z: f32 = (0..k)
                .map(|p| x[i * k + p] * w.data()[p * n + j])
                .sum::<f32>()
                + b.data()[j];
            z.abs() > 0.05
        })
    })
}

fn randomize(r: &mut ChaCha8Rng, store: &mut ParamStore) {
    let names: Vec<String> = store.names().map(str::to_string).collect();
    for name in names {
        let shape = store.tensor(&name).unwrap().shape().to_vec();
        store.set(&name, uniform(r, &shape, -0.6, 0.6)).unwrap();
    }
}

fn backbone_case(r: &mut ChaCha8Rng, s: u64, kind: BackboneKind) -> f64 {
    loop {
        let cfg = BackboneConfig {
            kind,
            lookback: r.random_range(2..=5),
            horizon: r.random_range(1..=3),
            d_x: r.random_range(1..=2),
            hidden: r.random_range(1..=4),
            seed: s,
        };
        let bb = cfg.build().unwrap();
        let mut store = ParamStore::new();
        bb.init_params(&mut store, s).unwrap();
        randomize(r, &mut store);
        let b = r.random_range(1..=2);
        let x = uniform(r, &[b, cfg.lookback, cfg.channels()], -1.0, 1.0);
        if kind == BackboneKind::Mlp
            && !clear_of_kink(
                x.data(),
                b,
                store.tensor("backbone.w1").unwrap(),
                store.tensor("backbone.b1").unwrap(),
            )
        {
            continue;
        }
        return grad_check_with(&store, &[x], s, |t, st, v| {
            let (x_hat, y_hat) = bb.forward(t, st, v[0]).unwrap();
            t.concat(&[x_hat, y_hat], 2).unwrap()
        });
    }
}

pub fn linear_backbone(r: &mut ChaCha8Rng, s: u64) -> f64 {
    backbone_case(r, s, BackboneKind::Linear)
}

pub fn mlp_backbone(r: &mut ChaCha8Rng, s: u64) -> f64 {
    backbone_case(r, s, BackboneKind::Mlp)
}

pub fn aggregation(r: &mut ChaCha8Rng, s: u64) -> f64 {
    loop {
        let cfg = AggConfig {
            horizon: r.random_range(1..=4),
            d_x: r.random_range(1..=3),
            hidden: r.random_range(1..=4),
        };
        let mut store = ParamStore::new();
        cfg.init_params(&mut store, s).unwrap();
        randomize(r, &mut store);
        let b = r.random_range(1..=2);
        let x = uniform(r, &[b, cfg.horizon, cfg.d_x], -1.0, 1.0);
        if !clear_of_kink(
            x.data(),
            b,
            store.tensor("agg.w1").unwrap(),
            store.tensor("agg.b1").unwrap(),
        ) {
            continue;
        }
        return grad_check_with(&store, &[x], s, |t, st, v| {
            cfg.forward(t, st, v[0]).unwrap()
        });
    }
}

pub const ALL: &[(&str, Case)] = &[
    ("add", add),
    ("sub", sub),
    ("mul", mul),
    ("div", div),
    ("relu", relu),
    ("exp", exp),
    ("log", log),
    ("scale", scale),
    ("mask_mul", mask_mul),
    ("matmul", matmul),
    ("softmax", softmax),
    ("sum", sum),
    ("mean", mean),
    ("mse", mse),
    ("gather", gather),
    ("permute", permute),
    ("narrow", narrow),
    ("concat", concat),
    ("reshape", reshape),
    ("slice_windows", slice_windows),
    ("attention_transform", attention_transform),
    ("surrogate", surrogate),
    ("surrogate_loss", surrogate_loss),
    ("surrogate_loss_detached", surrogate_loss_detached),
    ("revin_normalize", revin_normalize),
    ("revin_denormalize", revin_denormalize),
    ("linear_backbone", linear_backbone),
    ("mlp_backbone", mlp_backbone),
    ("aggregation", aggregation),
];
