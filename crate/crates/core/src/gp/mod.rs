//! Gaussian-process regression over parameters and output indices.

mod kernel;
mod model;
mod surrogate;

pub use kernel::{kernel_eval, KernelFamily, KernelSpec};
pub use model::{posterior, Dataset, GpModel, Observation, Posterior, JITTER};
pub use surrogate::{surrogate_kernel_eval, SurrogateKernelSpec};
