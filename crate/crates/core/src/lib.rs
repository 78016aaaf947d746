//! Anisotropic diffusion with the δ-stencil family of 3×3 discretisations,
//! explicit time stepping with Euclidean-norm step-size bounds, and a
//! residual-block backend that performs the same computation.

pub mod bench;
pub mod cli;
pub mod diffusivity;
pub mod error;
pub mod grid;
pub mod pgm;
pub mod report;
pub mod schemes;
pub mod stability;
pub mod stencil;
pub mod tensor;

pub use diffusivity::{Diffusivity, DiffusivityKind};
pub use error::{Error, Result};
pub use grid::{Image, StaggeredField};
pub use schemes::{run_diffusion, Backend, RunTrace, SchemeConfig, TensorModel, TimeStep};
pub use stability::{BoundMode, StabilityReport};
pub use stencil::{Stencil, StencilParams};
pub use tensor::{DiffusionTensor, TensorField};
