//! Dense tensors, a reverse-mode tape and Adam.
//!
//! Values are `f32`; reductions, matmul accumulation and Adam moments run in
//! `f64`. A [`Tape`] is built for one forward pass, differentiated once with
//! [`Tape::backward`], and its parameter gradients are moved into a
//! [`ParamStore`] with [`ParamStore::collect_grads`].

pub mod checkpoint;
mod param;
mod tape;
mod tensor;

pub use param::{AdamConfig, ParamStore, Parameter};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
