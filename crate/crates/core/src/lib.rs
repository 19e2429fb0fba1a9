//! Desk-scale numerics for linear-attention video generation.
//!
//! The crate is organized around the mechanisms that make a
//! motion-residual animation model work, each testable in isolation:
//!
//! - [`tensor`]: a minimal dense f64 tensor, a reproducible counter-based
//!   RNG, and a bit-exact binary tensor file format.
//! - [`attention`]: the attention family — softmax reference, ReLU linear
//!   attention, RoPE, and cosine linear attention in naive O(n²) and
//!   shared-term O(n) forms.
//! - [`spectral`]: orthonormal DCT-II/III in 1–3 dimensions, low-pass
//!   masks, DCT-based inference-noise refinement, and a DCT-vs-FFT
//!   energy-concentration profile.
//! - [`dynamics`]: SSIM / MS-SSIM / mean-absolute-difference motion
//!   estimators and the 20-bucket dynamics-degree projection.
//! - [`flowmatch`]: linear-interpolation flow matching, velocity targets,
//!   timestep schedules, Euler sampling with classifier-free guidance,
//!   and deterministic inversion.
//! - [`motion`]: motion-residual encode/decode (anchored and consecutive)
//!   and training-batch assembly.
//! - [`denoiser`]: a toy trainable velocity model with spatial ReLU linear
//!   attention, temporal cosine linear attention with frame RoPE, AdaIN
//!   conditioning on (t, bucket), and a tape-based reverse-mode autodiff
//!   verified against finite differences.

pub mod attention;
pub mod denoiser;
pub mod dynamics;
pub mod error;
pub mod flowmatch;
pub mod motion;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{load_tensor, save_tensor, Rng, Tensor};
