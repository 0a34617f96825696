//! Numerical laboratory for the kinetic transport equation with degenerate
//! velocity diffusion on the flat torus,
//!
//! ```text
//! ∂ₜf + v·∇ₓf = σ(x) ∂²_θ f,   x ∈ 𝕋², v = (cos θ, sin θ).
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorption;
pub mod app;
pub mod bogovskii;
pub mod characteristics;
pub mod criterion;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod initial;
pub mod registry;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
