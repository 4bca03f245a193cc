use std::fmt;

use crate::error::{Error, Result};

/// Dense row-major `f32` array.
///
/// `grad` is only populated once a tape has pushed gradients back into the
/// tensor (see [`ParamStore::collect_grads`](super::ParamStore::collect_grads)).
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    pub requires_grad: bool,
    pub grad: Option<Vec<f32>>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::shape(shape, &[data.len()]));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn full(shape: &[usize], value: f32) -> Self {
        let numel = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; numel],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(value: f32) -> Self {
        Self::full(&[], value)
    }

    /// 1-D tensor holding `data`.
    pub fn from_slice(data: &[f32]) -> Self {
        Self {
            shape: vec![data.len()],
            data: data.to_vec(),
            requires_grad: false,
            grad: None,
        }
    }

    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f32 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return Err(Error::shape(&self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn get(&self, index: &[usize]) -> f32 {
        self.data[flat_index(&self.shape, index)]
    }

    pub fn zero_grad(&mut self) {
        self.grad = None;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preview = &self.data[..self.data.len().min(8)];
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &preview)
            .field("requires_grad", &self.requires_grad)
            .finish()
    }
}

pub(crate) fn flat_index(shape: &[usize], index: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), index.len());
    index.iter().zip(shape).fold(0, |acc, (&i, &n)| {
        debug_assert!(i < n);
        acc * n + i
    })
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}

/// For each flat position of `out_shape`, the flat position in `src_shape`
/// it reads from under right-aligned broadcasting. Returns `None` when the
/// shapes are equal (identity map).
pub(crate) fn broadcast_map(
    out_shape: &[usize],
    src_shape: &[usize],
) -> Result<Option<Vec<usize>>> {
    if out_shape == src_shape {
        return Ok(None);
    }
    if src_shape.len() > out_shape.len() {
        return Err(Error::shape(out_shape, src_shape));
    }
    let offset = out_shape.len() - src_shape.len();
    let mut src_strides_aligned = vec![0usize; out_shape.len()];
    let src_strides = strides(src_shape);
    for (d, &n) in src_shape.iter().enumerate() {
        let out_n = out_shape[offset + d];
        if n == out_n {
            src_strides_aligned[offset + d] = src_strides[d];
        } else if n == 1 {
            src_strides_aligned[offset + d] = 0;
        } else {
            return Err(Error::shape(out_shape, src_shape));
        }
    }
    let numel: usize = out_shape.iter().product();
    let mut map = Vec::with_capacity(numel);
    let mut counter = vec![0usize; out_shape.len()];
    let mut src = 0usize;
    for _ in 0..numel {
        map.push(src);
        // odometer increment
        for d in (0..out_shape.len()).rev() {
            counter[d] += 1;
            src += src_strides_aligned[d];
            if counter[d] < out_shape[d] {
                break;
            }
            src -= src_strides_aligned[d] * counter[d];
            counter[d] = 0;
        }
    }
    Ok(Some(map))
}
