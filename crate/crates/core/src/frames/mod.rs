//! Sampling operators, frame operators and their bounds, reconstruction,
//! the quasi-interpolation operator, and the theorem-level experiments.

pub mod experiments;
pub mod quasi;
pub mod system;

pub use quasi::{quasi_interpolate, theorem35_verdict, Theorem35Verdict};
pub use system::{generalized_bounds, generalized_bounds_from, FrameBounds, FrameSystem, Method, ReconstructionResult};
