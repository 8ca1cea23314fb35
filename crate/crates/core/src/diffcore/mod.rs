//! Minimal differentiable core: tensors, primitives with explicit backward
//! rules, parameter sets, optimizers and a finite-difference checker.

mod gradcheck;
pub mod ops;
mod optim;
mod params;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, TensorGradError};
pub use optim::{sgd_step, Optimizer};
pub use params::{Param, ParamRecord, ParamSet, ParamSetState, PARAMSET_FORMAT_VERSION};
pub use tensor::{axpy, dot, gemv_acc, gemv_t_acc, outer_acc, Tensor};
