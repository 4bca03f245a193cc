//! Wengert-list tape for reverse-mode differentiation.
//!
//! Every forward operation appends a node holding its value and the inputs it
//! was computed from. `backward` walks the list in reverse once, so the tape
//! is meant to be built per forward pass and dropped afterwards.

use std::collections::HashMap;

use super::tensor::{broadcast_map, strides, Tensor};
use super::ParamStore;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum UnaryKind {
    Relu,
    Exp,
    Log,
    Scale(f32),
}

enum Op {
    Leaf,
    Binary {
        kind: BinaryKind,
        a: Var,
        b: Var,
        // flat index into b for each output position, None when shapes match
        b_map: Option<Vec<usize>>,
    },
    Unary {
        kind: UnaryKind,
        a: Var,
    },
    MaskMul {
        a: Var,
        mask: Vec<f32>,
    },
    MatMul {
        a: Var,
        b: Var,
    },
    Softmax {
        a: Var,
        axis: usize,
    },
    Reduce {
        a: Var,
        axis: Option<usize>,
        mean: bool,
    },
    Mse {
        pred: Var,
        target: Var,
    },
    Gather {
        a: Var,
        index: Vec<usize>,
    },
    Concat {
        parts: Vec<Var>,
        axis: usize,
    },
    Reshape {
        a: Var,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f32>>>,
    bindings: HashMap<String, Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Inserts a tensor; it participates in differentiation iff `requires_grad` is set.
    pub fn leaf(&mut self, mut tensor: Tensor) -> Var {
        let rg = tensor.requires_grad;
        tensor.grad = None;
        self.push(tensor, Op::Leaf, rg)
    }

    /// Inserts a tensor that never receives gradient.
    pub fn constant(&mut self, mut tensor: Tensor) -> Var {
        tensor.requires_grad = false;
        self.leaf(tensor)
    }

    /// Binds the named parameter of `store` as a differentiable leaf. Binding
    /// the same name twice returns the same node.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var> {
        if let Some(&v) = self.bindings.get(name) {
            return Ok(v);
        }
        let p = store
            .get(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        let mut t = p.tensor.clone();
        t.requires_grad = true;
        let v = self.leaf(t);
        self.bindings.insert(name.to_string(), v);
        Ok(v)
    }

    pub(crate) fn bindings(&self) -> impl Iterator<Item = (&str, Var)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Constant copy of `v`'s current value: gradient stops here.
    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.nodes[v.0].value.clone();
        self.constant(t)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    /// Accumulated gradient of the last `backward` calls, if any reached `v`.
    pub fn grad(&self, v: Var) -> Option<&[f32]> {
        self.grads[v.0].as_deref()
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
    }

    // ---- elementwise --------------------------------------------------

    fn binary(&mut self, kind: BinaryKind, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let b_map = broadcast_map(&sa, &sb)?;
        let av = self.value(a).data();
        let bv = self.value(b).data();
        if kind == BinaryKind::Div {
            if let Some(pos) = bv.iter().position(|&x| x == 0.0) {
                return Err(Error::domain(
                    "div",
                    format!("divisor is zero at flat index {pos}"),
                ));
            }
        }
        let bi = |i: usize| b_map.as_ref().map_or(i, |m| m[i]);
        let data: Vec<f32> = (0..av.len())
            .map(|i| {
                let (x, y) = (av[i], bv[bi(i)]);
                match kind {
                    BinaryKind::Add => x + y,
                    BinaryKind::Sub => x - y,
                    BinaryKind::Mul => x * y,
                    BinaryKind::Div => x / y,
                }
            })
            .collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(
            Tensor::new(&sa, data)?,
            Op::Binary { kind, a, b, b_map },
            rg,
        ))
    }

    /// `a + b`; `b` may be a scalar or broadcast against `a` (right-aligned, size-1 dims stretch).
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Mul, a, b)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(BinaryKind::Div, a, b)
    }

    fn unary(&mut self, kind: UnaryKind, a: Var) -> Result<Var> {
        let src = self.value(a);
        if kind == UnaryKind::Log {
            if let Some(pos) = src.data().iter().position(|&x| x.is_nan() || x <= 0.0) {
                return Err(Error::domain(
                    "log",
                    format!("non-positive input at flat index {pos}"),
                ));
            }
        }
        let data = src
            .data()
            .iter()
            .map(|&x| match kind {
                UnaryKind::Relu => x.max(0.0),
                UnaryKind::Exp => x.exp(),
                UnaryKind::Log => x.ln(),
                UnaryKind::Scale(c) => x * c,
            })
            .collect();
        let shape = src.shape().to_vec();
        let rg = self.rg(a);
        Ok(self.push(Tensor::new(&shape, data)?, Op::Unary { kind, a }, rg))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryKind::Relu, a)
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryKind::Exp, a)
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        self.unary(UnaryKind::Log, a)
    }

    pub fn scale(&mut self, a: Var, c: f32) -> Result<Var> {
        self.unary(UnaryKind::Scale(c), a)
    }

    /// `a ⊙ mask` where the mask is a constant: backward passes `g ⊙ mask`
    /// to `a` and nothing to the mask.
    pub fn mask_mul(&mut self, a: Var, mask: &Tensor) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let map = broadcast_map(&shape, mask.shape())?;
        let mask: Vec<f32> = match map {
            None => mask.data().to_vec(),
            Some(m) => m.iter().map(|&i| mask.data()[i]).collect(),
        };
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        let rg = self.rg(a);
        Ok(self.push(Tensor::new(&shape, data)?, Op::MaskMul { a, mask }, rg))
    }

    // ---- linear algebra -----------------------------------------------

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::shape(sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let data = matmul_nn(self.value(a).data(), self.value(b).data(), m, k, n);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(&[m, n], data)?, Op::MatMul { a, b }, rg))
    }

    // ---- softmax / reductions -------------------------------------------

    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(Error::AxisOutOfRange {
                axis,
                rank: shape.len(),
            });
        }
        let (outer, n, inner) = split_axis(&shape, axis);
        let src = self.value(a).data();
        let mut out = vec![0f32; src.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| o * n * inner + j * inner + i;
                let max = (0..n).map(|j| src[at(j)]).fold(f32::NEG_INFINITY, f32::max);
                let denom: f64 = (0..n).map(|j| ((src[at(j)] - max) as f64).exp()).sum();
                for j in 0..n {
                    out[at(j)] = (((src[at(j)] - max) as f64).exp() / denom) as f32;
                }
            }
        }
        let rg = self.rg(a);
        Ok(self.push(Tensor::new(&shape, out)?, Op::Softmax { a, axis }, rg))
    }

    fn reduce(&mut self, a: Var, axis: Option<usize>, mean: bool) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let src = self.value(a).data();
        let (out_shape, data) = match axis {
            None => {
                let s: f64 = src.iter().map(|&x| x as f64).sum();
                let v = if mean { s / src.len().max(1) as f64 } else { s };
                (vec![], vec![v as f32])
            }
            Some(ax) => {
                if ax >= shape.len() {
                    return Err(Error::AxisOutOfRange {
                        axis: ax,
                        rank: shape.len(),
                    });
                }
                let (outer, n, inner) = split_axis(&shape, ax);
                let mut acc = vec![0f64; outer * inner];
                for o in 0..outer {
                    for j in 0..n {
                        let row = &src[o * n * inner + j * inner..][..inner];
                        for (i, &x) in row.iter().enumerate() {
                            acc[o * inner + i] += x as f64;
                        }
                    }
                }
                let div = if mean { n.max(1) as f64 } else { 1.0 };
                let mut out_shape = shape.clone();
                out_shape.remove(ax);
                (
                    out_shape,
                    acc.into_iter().map(|s| (s / div) as f32).collect(),
                )
            }
        };
        let rg = self.rg(a);
        Ok(self.push(
            Tensor::new(&out_shape, data)?,
            Op::Reduce { a, axis, mean },
            rg,
        ))
    }

    /// Sum over `axis` (removing it), or over everything when `axis` is `None`.
    pub fn sum(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.reduce(a, axis, false)
    }

    pub fn mean(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.reduce(a, axis, true)
    }

    /// Mean squared error. Gradient reaches `target` only if it requires grad.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (p, t) = (self.value(pred), self.value(target));
        if p.shape() != t.shape() {
            return Err(Error::shape(p.shape(), t.shape()));
        }
        let n = p.numel().max(1) as f64;
        let s: f64 = p
            .data()
            .iter()
            .zip(t.data())
            .map(|(&a, &b)| {
                let d = a as f64 - b as f64;
                d * d
            })
            .sum();
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(Tensor::scalar((s / n) as f32), Op::Mse { pred, target }, rg))
    }

    // ---- data movement ------------------------------------------------

    /// `out[i] = a[index[i]]` viewed with `out_shape`. Backward scatter-adds,
    /// so repeated indices accumulate.
    pub fn gather(&mut self, a: Var, out_shape: &[usize], index: Vec<usize>) -> Result<Var> {
        let numel: usize = out_shape.iter().product();
        if numel != index.len() {
            return Err(Error::shape(out_shape, &[index.len()]));
        }
        let src = self.value(a).data();
        if let Some(&bad) = index.iter().find(|&&i| i >= src.len()) {
            return Err(Error::shape(self.shape(a), &[bad]));
        }
        let data = index.iter().map(|&i| src[i]).collect();
        let rg = self.rg(a);
        Ok(self.push(Tensor::new(out_shape, data)?, Op::Gather { a, index }, rg))
    }

    /// Axis permutation: output axis `d` is input axis `perm[d]`.
    pub fn permute(&mut self, a: Var, perm: &[usize]) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        let rank = shape.len();
        let mut seen = vec![false; rank];
        if perm.len() != rank
            || perm
                .iter()
                .any(|&p| p >= rank || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::shape(&shape, perm));
        }
        let in_strides = strides(&shape);
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let numel: usize = shape.iter().product();
        let mut index = Vec::with_capacity(numel);
        let mut counter = vec![0usize; rank];
        for _ in 0..numel {
            index.push(
                counter
                    .iter()
                    .zip(perm)
                    .map(|(&c, &p)| c * in_strides[p])
                    .sum(),
            );
            for d in (0..rank).rev() {
                counter[d] += 1;
                if counter[d] < out_shape[d] {
                    break;
                }
                counter[d] = 0;
            }
        }
        self.gather(a, &out_shape, index)
    }

    /// Contiguous slice `[start, start+len)` along `axis`.
    pub fn narrow(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(Error::AxisOutOfRange {
                axis,
                rank: shape.len(),
            });
        }
        if start + len > shape[axis] {
            return Err(Error::shape(&shape, &[start, len]));
        }
        let (outer, n, inner) = split_axis(&shape, axis);
        let mut index = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            for j in start..start + len {
                index.extend((0..inner).map(|i| o * n * inner + j * inner + i));
            }
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        self.gather(a, &out_shape, index)
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = self.shape(parts[0]).to_vec();
        if axis >= first.len() {
            return Err(Error::AxisOutOfRange {
                axis,
                rank: first.len(),
            });
        }
        let mut total = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == first.len()
                && s.iter()
                    .zip(&first)
                    .enumerate()
                    .all(|(d, (x, y))| d == axis || x == y);
            if !compatible {
                return Err(Error::shape(&first, s));
            }
            total += s[axis];
        }
        let (outer, _, inner) = split_axis(&first, axis);
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for &p in parts {
                let n = self.shape(p)[axis];
                data.extend_from_slice(&self.value(p).data()[o * n * inner..][..n * inner]);
            }
        }
        let mut out_shape = first;
        out_shape[axis] = total;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(
            Tensor::new(&out_shape, data)?,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            rg,
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a).clone().reshape(shape)?;
        let rg = self.rg(a);
        Ok(self.push(t, Op::Reshape { a }, rg))
    }

    // ---- backward -----------------------------------------------------

    /// Propagates d(loss)/d(node) to every differentiable node and adds the
    /// result onto gradients left by earlier calls.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.shape(loss);
        if shape.iter().product::<usize>() != 1 {
            return Err(Error::NonScalarLoss(shape.to_vec()));
        }
        let mut local: Vec<Option<Vec<f32>>> = vec![None; loss.0 + 1];
        local[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = local[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            self.propagate(idx, &g, &mut local);
            match &mut self.grads[idx] {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                slot @ None => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[f32], local: &mut [Option<Vec<f32>>]) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::Binary { kind, a, b, b_map } => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                let bi = |i: usize| b_map.as_ref().map_or(i, |m| m[i]);
                if self.rg(*a) {
                    let ga: Vec<f32> = (0..g.len())
                        .map(|i| match kind {
                            BinaryKind::Add | BinaryKind::Sub => g[i],
                            BinaryKind::Mul => g[i] * bv[bi(i)],
                            BinaryKind::Div => g[i] / bv[bi(i)],
                        })
                        .collect();
                    accumulate(local, *a, ga);
                }
                if self.rg(*b) {
                    let mut gb = vec![0f64; bv.len()];
                    for i in 0..g.len() {
                        let y = bv[bi(i)] as f64;
                        let gi = g[i] as f64;
                        gb[bi(i)] += match kind {
                            BinaryKind::Add => gi,
                            BinaryKind::Sub => -gi,
                            BinaryKind::Mul => gi * av[i] as f64,
                            BinaryKind::Div => -gi * av[i] as f64 / (y * y),
                        };
                    }
                    accumulate(local, *b, gb.into_iter().map(|x| x as f32).collect());
                }
            }
            Op::Unary { kind, a } => {
                let x = self.value(*a).data();
                let y = node.value.data();
                let ga = (0..g.len())
                    .map(|i| match kind {
                        UnaryKind::Relu => {
                            if x[i] > 0.0 {
                                g[i]
                            } else {
                                0.0
                            }
                        }
                        UnaryKind::Exp => g[i] * y[i],
                        UnaryKind::Log => g[i] / x[i],
                        UnaryKind::Scale(c) => g[i] * c,
                    })
                    .collect();
                accumulate(local, *a, ga);
            }
            Op::MaskMul { a, mask } => {
                let ga = g.iter().zip(mask).map(|(g, m)| g * m).collect();
                accumulate(local, *a, ga);
            }
            Op::MatMul { a, b } => {
                let (sa, sb) = (self.shape(*a), self.shape(*b));
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                if self.rg(*a) {
                    accumulate(local, *a, matmul_nt(g, self.value(*b).data(), m, n, k));
                }
                if self.rg(*b) {
                    accumulate(local, *b, matmul_tn(self.value(*a).data(), g, m, k, n));
                }
            }
            Op::Softmax { a, axis } => {
                let s = node.value.data();
                let (outer, n, inner) = split_axis(node.value.shape(), *axis);
                let mut ga = vec![0f32; s.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |j: usize| o * n * inner + j * inner + i;
                        let dot: f64 = (0..n).map(|j| g[at(j)] as f64 * s[at(j)] as f64).sum();
                        for j in 0..n {
                            ga[at(j)] = (s[at(j)] as f64 * (g[at(j)] as f64 - dot)) as f32;
                        }
                    }
                }
                accumulate(local, *a, ga);
            }
            Op::Reduce { a, axis, mean } => {
                let in_shape = self.shape(*a);
                let numel: usize = in_shape.iter().product();
                let ga = match axis {
                    None => {
                        let v = if *mean {
                            g[0] / numel.max(1) as f32
                        } else {
                            g[0]
                        };
                        vec![v; numel]
                    }
                    Some(ax) => {
                        let (outer, n, inner) = split_axis(in_shape, *ax);
                        let div = if *mean { n.max(1) as f32 } else { 1.0 };
                        let mut ga = Vec::with_capacity(numel);
                        for o in 0..outer {
                            for _ in 0..n {
                                ga.extend(g[o * inner..][..inner].iter().map(|x| x / div));
                            }
                        }
                        ga
                    }
                };
                accumulate(local, *a, ga);
            }
            Op::Mse { pred, target } => {
                let p = self.value(*pred).data();
                let t = self.value(*target).data();
                let scale = 2.0 * g[0] as f64 / p.len().max(1) as f64;
                let diff: Vec<f64> = p
                    .iter()
                    .zip(t)
                    .map(|(&a, &b)| (a as f64 - b as f64) * scale)
                    .collect();
                if self.rg(*pred) {
                    accumulate(local, *pred, diff.iter().map(|&d| d as f32).collect());
                }
                if self.rg(*target) {
                    accumulate(local, *target, diff.iter().map(|&d| -d as f32).collect());
                }
            }
            Op::Gather { a, index } => {
                let mut ga = vec![0f64; self.value(*a).numel()];
                for (gi, &src) in g.iter().zip(index) {
                    ga[src] += *gi as f64;
                }
                accumulate(local, *a, ga.into_iter().map(|x| x as f32).collect());
            }
            Op::Concat { parts, axis } => {
                let (outer, total, inner) = split_axis(node.value.shape(), *axis);
                let mut offset = 0;
                for &p in parts {
                    let n = self.shape(p)[*axis];
                    if self.rg(p) {
                        let mut gp = Vec::with_capacity(outer * n * inner);
                        for o in 0..outer {
                            gp.extend_from_slice(
                                &g[o * total * inner + offset * inner..][..n * inner],
                            );
                        }
                        accumulate(local, p, gp);
                    }
                    offset += n;
                }
            }
            Op::Reshape { a } => accumulate(local, *a, g.to_vec()),
        }
    }
}

fn accumulate(local: &mut [Option<Vec<f32>>], v: Var, g: Vec<f32>) {
    match &mut local[v.0] {
        Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
        slot @ None => *slot = Some(g),
    }
}

/// (outer, axis length, inner) decomposition of `shape` around `axis`.
pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// `a[m×k] · b[k×n]`.
pub(crate) fn matmul_nn(a: &[f32], b: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(m * n);
    let mut row = vec![0f64; n];
    for i in 0..m {
        row.iter_mut().for_each(|x| *x = 0.0);
        for p in 0..k {
            let aip = a[i * k + p] as f64;
            if aip == 0.0 {
                continue;
            }
            for (r, &bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *r += aip * bv as f64;
            }
        }
        out.extend(row.iter().map(|&x| x as f32));
    }
    out
}

/// `g[m×n] · b[k×n]ᵀ` → `[m×k]`.
fn matmul_nt(g: &[f32], b: &[f32], m: usize, n: usize, k: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(m * k);
    for i in 0..m {
        let gi = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let bp = &b[p * n..(p + 1) * n];
            let dot: f64 = gi.iter().zip(bp).map(|(&x, &y)| x as f64 * y as f64).sum();
            out.push(dot as f32);
        }
    }
    out
}

/// `a[m×k]ᵀ · g[m×n]` → `[k×n]`.
fn matmul_tn(a: &[f32], g: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut acc = vec![0f64; k * n];
    for i in 0..m {
        let gi = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p] as f64;
            if aip == 0.0 {
                continue;
            }
            for (r, &gv) in acc[p * n..(p + 1) * n].iter_mut().zip(gi) {
                *r += aip * gv as f64;
            }
        }
    }
    acc.into_iter().map(|x| x as f32).collect()
}
